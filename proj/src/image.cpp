#include "tetgan/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>

#include <torch/torch.h>

namespace tetgan {

namespace {

namespace F = torch::nn::functional;

png_image begin_read(const std::filesystem::path& path) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  if (!std::filesystem::exists(path)) {
    throw ValidationError("no such image: " + path.string());
  }
  if (!png_image_begin_read_from_file(&img, path.c_str())) {
    throw ValidationError("cannot read PNG " + path.string() + ": " + img.message);
  }
  return img;
}

void finish_read(png_image& img, void* buffer, const std::filesystem::path& path) {
  if (!png_image_finish_read(&img, nullptr, buffer, 0, nullptr)) {
    std::string msg = img.message;
    png_image_free(&img);
    throw ValidationError("cannot decode PNG " + path.string() + ": " + msg);
  }
}

void write_impl(const std::filesystem::path& path, int w, int h, png_uint_32 format, const void* data) {
  png_image img;
  std::memset(&img, 0, sizeof(img));
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(w);
  img.height = static_cast<png_uint_32>(h);
  img.format = format;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!png_image_write_to_file(&img, path.c_str(), 0, data, 0, nullptr)) {
    throw Error("cannot write PNG " + path.string() + ": " + img.message);
  }
}

torch::Tensor mask_tensor(const GlyphMask& mask) {
  auto t = torch::empty({1, 1, mask.height, mask.width}, torch::kFloat);
  auto* p = t.data_ptr<float>();
  for (size_t i = 0; i < mask.size(); ++i) p[i] = mask.values[i] ? 1.0f : 0.0f;
  return t;
}

}  // namespace

GlyphMask GlyphImage::mask() const {
  GlyphMask m(rgb.width, rgb.height);
  for (int y = 0; y < rgb.height; ++y)
    for (int x = 0; x < rgb.width; ++x) m(x, y) = rgb.at(x, y, 0) >= 128 ? 1 : 0;
  return m;
}

RgbImage read_png(const std::filesystem::path& path) {
  png_image img = begin_read(path);
  img.format = PNG_FORMAT_RGB;
  RgbImage out(static_cast<int>(img.width), static_cast<int>(img.height));
  finish_read(img, out.data.data(), path);
  return out;
}

Grid<std::uint8_t> read_png_gray(const std::filesystem::path& path) {
  png_image img = begin_read(path);
  img.format = PNG_FORMAT_GRAY;
  Grid<std::uint8_t> out(static_cast<int>(img.width), static_cast<int>(img.height));
  finish_read(img, out.values.data(), path);
  return out;
}

void write_png(const std::filesystem::path& path, const RgbImage& image) {
  write_impl(path, image.width, image.height, PNG_FORMAT_RGB, image.data.data());
}

void write_png_gray(const std::filesystem::path& path, const Grid<std::uint8_t>& image) {
  write_impl(path, image.width, image.height, PNG_FORMAT_GRAY, image.values.data());
}

RgbImage crop(const RgbImage& image, int x0, int y0, int size) {
  if (x0 < 0 || y0 < 0 || x0 + size > image.width || y0 + size > image.height) {
    throw ValidationError("crop window outside image");
  }
  RgbImage out(size, size);
  for (int y = 0; y < size; ++y) {
    const auto* src = &image.data[(static_cast<size_t>(y0 + y) * image.width + x0) * 3];
    std::copy(src, src + size * 3, &out.data[static_cast<size_t>(y) * size * 3]);
  }
  return out;
}

GlyphMask crop(const GlyphMask& mask, int x0, int y0, int size) {
  if (x0 < 0 || y0 < 0 || x0 + size > mask.width || y0 + size > mask.height) {
    throw ValidationError("crop window outside mask");
  }
  GlyphMask out(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) out(x, y) = mask(x0 + x, y0 + y);
  return out;
}

torch::Tensor to_tensor(const RgbImage& image) {
  auto hwc = torch::from_blob(const_cast<std::uint8_t*>(image.data.data()), {image.height, image.width, 3},
                              torch::kUInt8);
  return hwc.permute({2, 0, 1}).to(torch::kFloat).div(127.5).sub(1.0).contiguous();
}

RgbImage from_tensor(const torch::Tensor& chw_in) {
  auto chw = chw_in.detach().to(torch::kCPU, torch::kFloat);
  if (chw.dim() == 4) chw = chw.squeeze(0);
  if (chw.dim() != 3 || chw.size(0) != 3) throw ValidationError("from_tensor expects a [3,H,W] tensor");
  auto hwc = chw.add(1.0).mul(127.5).round().clamp(0, 255).to(torch::kUInt8).permute({1, 2, 0}).contiguous();
  RgbImage out(static_cast<int>(chw.size(2)), static_cast<int>(chw.size(1)));
  std::memcpy(out.data.data(), hwc.data_ptr<std::uint8_t>(), out.data.size());
  return out;
}

torch::Tensor stack_images(const std::vector<const RgbImage*>& images) {
  std::vector<torch::Tensor> ts;
  ts.reserve(images.size());
  for (const auto* im : images) ts.push_back(to_tensor(*im));
  return torch::stack(ts);
}

RgbImage resize_area(const RgbImage& image, int side) {
  if (image.width == side && image.height == side) return image;
  auto t = to_tensor(image).unsqueeze(0);
  auto r = F::adaptive_avg_pool2d(t, F::AdaptiveAvgPool2dFuncOptions({side, side}));
  return from_tensor(r[0]);
}

RgbImage resize_bicubic(const RgbImage& image, int side) {
  if (image.width == side && image.height == side) return image;
  auto t = to_tensor(image).unsqueeze(0);
  auto r = F::interpolate(t, F::InterpolateFuncOptions()
                                 .size(std::vector<int64_t>{side, side})
                                 .mode(torch::kBicubic)
                                 .align_corners(false));
  return from_tensor(r[0].clamp(-1, 1));
}

GlyphMask resize_mask(const GlyphMask& mask, int side) {
  if (mask.width == side && mask.height == side) return mask;
  torch::Tensor r;
  if (side < mask.width) {
    r = F::adaptive_avg_pool2d(mask_tensor(mask), F::AdaptiveAvgPool2dFuncOptions({side, side}));
  } else {
    r = F::interpolate(mask_tensor(mask), F::InterpolateFuncOptions()
                                              .size(std::vector<int64_t>{side, side})
                                              .mode(torch::kBilinear)
                                              .align_corners(false));
  }
  r = r.contiguous();
  GlyphMask out(side, side);
  const auto* p = r.data_ptr<float>();
  for (size_t i = 0; i < out.size(); ++i) out.values[i] = p[i] >= 0.5f ? 1 : 0;
  return out;
}

}  // namespace tetgan
