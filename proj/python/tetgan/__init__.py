"""Two-way text effects transfer: stylization, destylization and one-shot style learning.

Images are uint8 numpy arrays: glyph masks are (H, W) with values {0, 1},
color images are (H, W, 3).
"""

import torch  # noqa: F401  loads the libtorch shared libraries the extension links against

from ._tetgan import (  # noqa: F401
    CHECKPOINT_HEADER,
    DegenerateGlyph,
    Error,
    Model,
    ValidationError,
    builtin_glyph_ids,
    distance_transform,
    encode_glyph,
    finetune,
    generate_dataset,
    rasterize_glyph,
    set_log_level,
    synthesize_effects,
    train,
)
