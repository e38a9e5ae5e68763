#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>

#include "tetgan/log.hpp"

#include "tetgan/dataset.hpp"

namespace tetgan {

namespace {

using Bitmap = std::array<const char*, 7>;

// clang-format off
const std::map<char, Bitmap> kFont = {
  {'A', {" ### ", "#   #", "#   #", "#####", "#   #", "#   #", "#   #"}},
  {'B', {"#### ", "#   #", "#   #", "#### ", "#   #", "#   #", "#### "}},
  {'C', {" ### ", "#   #", "#    ", "#    ", "#    ", "#   #", " ### "}},
  {'D', {"#### ", "#   #", "#   #", "#   #", "#   #", "#   #", "#### "}},
  {'E', {"#####", "#    ", "#    ", "#### ", "#    ", "#    ", "#####"}},
  {'F', {"#####", "#    ", "#    ", "#### ", "#    ", "#    ", "#    "}},
  {'G', {" ### ", "#   #", "#    ", "# ###", "#   #", "#   #", " ####"}},
  {'H', {"#   #", "#   #", "#   #", "#####", "#   #", "#   #", "#   #"}},
  {'I', {" ### ", "  #  ", "  #  ", "  #  ", "  #  ", "  #  ", " ### "}},
  {'J', {"  ###", "   # ", "   # ", "   # ", "   # ", "#  # ", " ##  "}},
  {'K', {"#   #", "#  # ", "# #  ", "##   ", "# #  ", "#  # ", "#   #"}},
  {'L', {"#    ", "#    ", "#    ", "#    ", "#    ", "#    ", "#####"}},
  {'M', {"#   #", "## ##", "# # #", "# # #", "#   #", "#   #", "#   #"}},
  {'N', {"#   #", "#   #", "##  #", "# # #", "#  ##", "#   #", "#   #"}},
  {'O', {" ### ", "#   #", "#   #", "#   #", "#   #", "#   #", " ### "}},
  {'P', {"#### ", "#   #", "#   #", "#### ", "#    ", "#    ", "#    "}},
  {'Q', {" ### ", "#   #", "#   #", "#   #", "# # #", "#  # ", " ## #"}},
  {'R', {"#### ", "#   #", "#   #", "#### ", "# #  ", "#  # ", "#   #"}},
  {'S', {" ####", "#    ", "#    ", " ### ", "    #", "    #", "#### "}},
  {'T', {"#####", "  #  ", "  #  ", "  #  ", "  #  ", "  #  ", "  #  "}},
  {'U', {"#   #", "#   #", "#   #", "#   #", "#   #", "#   #", " ### "}},
  {'V', {"#   #", "#   #", "#   #", "#   #", "#   #", " # # ", "  #  "}},
  {'W', {"#   #", "#   #", "#   #", "# # #", "# # #", "# # #", " # # "}},
  {'X', {"#   #", "#   #", " # # ", "  #  ", " # # ", "#   #", "#   #"}},
  {'Y', {"#   #", "#   #", " # # ", "  #  ", "  #  ", "  #  ", "  #  "}},
  {'Z', {"#####", "    #", "   # ", "  #  ", " #   ", "#    ", "#####"}},
  {'0', {" ### ", "#   #", "#  ##", "# # #", "##  #", "#   #", " ### "}},
  {'1', {"  #  ", " ##  ", "  #  ", "  #  ", "  #  ", "  #  ", " ### "}},
  {'2', {" ### ", "#   #", "    #", "   # ", "  #  ", " #   ", "#####"}},
  {'3', {"#####", "   # ", "  #  ", "   # ", "    #", "#   #", " ### "}},
  {'4', {"   # ", "  ## ", " # # ", "#  # ", "#####", "   # ", "   # "}},
  {'5', {"#####", "#    ", "#### ", "    #", "    #", "#   #", " ### "}},
  {'6', {"  ## ", " #   ", "#    ", "#### ", "#   #", "#   #", " ### "}},
  {'7', {"#####", "    #", "   # ", "  #  ", " #   ", " #   ", " #   "}},
  {'8', {" ### ", "#   #", "#   #", " ### ", "#   #", "#   #", " ### "}},
  {'9', {" ### ", "#   #", "#   #", " ####", "    #", "   # ", " ##  "}},
};
// clang-format on

const char* const kPrimitives[] = {"filled_disk", "ring", "square", "cross", "triangle", "diamond", "empty"};

// Glyph cells cover ~55% of the canvas height.
GlyphMask rasterize_bitmap(const Bitmap& bitmap, int size) {
  const int cell = static_cast<int>(std::floor(0.55 * size / 7.0));
  const int x0 = (size - 5 * cell) / 2;
  const int y0 = (size - 7 * cell) / 2;
  GlyphMask mask(size, size);
  for (int row = 0; row < 7; ++row) {
    for (int col = 0; col < 5; ++col) {
      if (bitmap[row][col] != '#') continue;
      for (int dy = 0; dy < cell; ++dy)
        for (int dx = 0; dx < cell; ++dx) mask(x0 + col * cell + dx, y0 + row * cell + dy) = 1;
    }
  }
  return mask;
}

template <typename Inside>
GlyphMask rasterize_shape(int size, Inside inside) {
  GlyphMask mask(size, size);
  const double c = (size - 1) / 2.0;
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) mask(x, y) = inside(x - c, y - c, static_cast<double>(size)) ? 1 : 0;
  return mask;
}

GlyphMask rasterize_primitive(const std::string& id, int size) {
  if (id == "filled_disk") {
    return rasterize_shape(size, [](double dx, double dy, double s) { return dx * dx + dy * dy <= 0.09 * s * s; });
  }
  if (id == "ring") {
    return rasterize_shape(size, [](double dx, double dy, double s) {
      const double r2 = dx * dx + dy * dy;
      return r2 <= 0.32 * 0.32 * s * s && r2 >= 0.16 * 0.16 * s * s;
    });
  }
  if (id == "square") {
    return rasterize_shape(size, [](double dx, double dy, double s) {
      return std::abs(dx) <= 0.25 * s && std::abs(dy) <= 0.25 * s;
    });
  }
  if (id == "cross") {
    return rasterize_shape(size, [](double dx, double dy, double s) {
      const double arm = 0.3 * s, half = 0.09 * s;
      return (std::abs(dx) <= half && std::abs(dy) <= arm) || (std::abs(dy) <= half && std::abs(dx) <= arm);
    });
  }
  if (id == "triangle") {
    return rasterize_shape(size, [](double dx, double dy, double s) {
      const double top = -0.28 * s, bottom = 0.28 * s;
      if (dy < top || dy > bottom) return false;
      return std::abs(dx) <= 0.3 * s * (dy - top) / (bottom - top);
    });
  }
  if (id == "diamond") {
    return rasterize_shape(size, [](double dx, double dy, double s) { return std::abs(dx) + std::abs(dy) <= 0.32 * s; });
  }
  if (id == "empty") return GlyphMask(size, size);
  throw ValidationError("unknown shape id: " + id);
}

GlyphMask load_user_glyph(const std::filesystem::path& path, int size) {
  auto gray = read_png_gray(path);
  if (!gray.square()) throw ValidationError("glyph image must be square: " + path.string());
  bool binary = true;
  GlyphMask mask(gray.width, gray.height);
  for (size_t i = 0; i < gray.size(); ++i) {
    const auto v = gray.values[i];
    if (v != 0 && v != 255) binary = false;
    mask.values[i] = v >= 128 ? 1 : 0;
  }
  if (!binary) log::warn("glyph image ", path.string(), " is not binary; thresholded at 128");
  return resize_mask(mask, size);
}

}  // namespace

const std::array<const char*, 7>* glyph_bitmap(char c) {
  auto it = kFont.find(c);
  return it == kFont.end() ? nullptr : &it->second;
}

std::vector<std::string> builtin_glyph_ids() {
  std::vector<std::string> ids;
  for (const auto& [c, _] : kFont) ids.emplace_back(1, c);
  for (const char* p : kPrimitives) ids.emplace_back(p);
  return ids;
}

GlyphMask rasterize_glyph(const std::string& descriptor, int size) {
  if (std::find(kGlyphSizes.begin(), kGlyphSizes.end(), size) == kGlyphSizes.end()) {
    throw ValidationError("unsupported glyph size " + std::to_string(size));
  }
  GlyphMask mask;
  if (descriptor.size() == 1 && glyph_bitmap(descriptor[0]) != nullptr) {
    mask = rasterize_bitmap(*glyph_bitmap(descriptor[0]), size);
  } else if (std::find(std::begin(kPrimitives), std::end(kPrimitives), descriptor) != std::end(kPrimitives)) {
    mask = rasterize_primitive(descriptor, size);
  } else if (descriptor.ends_with(".png") && std::filesystem::exists(descriptor)) {
    mask = load_user_glyph(descriptor, size);
  } else {
    throw ValidationError("unknown shape id: " + descriptor);
  }
  if (std::find(mask.values.begin(), mask.values.end(), 1) == mask.values.end()) {
    throw DegenerateGlyph("degenerate glyph '" + descriptor + "': zero foreground");
  }
  return mask;
}

}  // namespace tetgan
