"""Deterministic dataset-poisoning toolkit and detection-evaluation harness."""

__version__ = "0.1.0"

from .annotations import (  # noqa: F401
    Annotation,
    ClassMap,
    DEFAULT_CLASSES,
    LabelFile,
    PixelBox,
    parse_label_file,
    rewrite_class,
    to_pixel_box,
    write_label_file,
)
from .errors import TriggerForgeError  # noqa: F401
from .masks import (  # noqa: F401
    MaskCandidateSet,
    MaskStats,
    SegmentationMask,
    load_candidates,
    mask_stats,
    select_mask,
)
from .trigger import (  # noqa: F401
    Color,
    TriggerSpec,
    dominant_color,
    render_trigger,
    resolve_trigger,
)
