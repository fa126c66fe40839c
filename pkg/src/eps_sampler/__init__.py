"""Content-adaptive training patch selection for video super-resolution.

Patches of each frame's luma plane are scored for spatial complexity (SF)
and temporal change (TF) from their DCT coefficients; each frame's scores
are binned into an equal-width histogram and the patches in the top bin of
both metrics are kept.
"""

from .dct_core import dct2d, dct2d_naive, masked
from .features import (
    PatchScore,
    ScoreField,
    score_frame,
    spatial_feature,
    temporal_feature,
    weight,
    weight_table,
)
from .frame_io import (
    FrameSequence,
    LumaPlane,
    PatchGrid,
    extract_patch,
    load_sequence,
    slice_grid,
)
from .manifest import (
    ManifestError,
    parse_manifest,
    read_manifest,
    summarize,
    write_heatmap,
    write_manifest,
)
from .sampler import (
    Clustering,
    FrameSelection,
    SamplerConfig,
    SelectionManifest,
    cluster_histogram,
    sample_random,
    sample_top_fraction,
    sample_video,
    score_video,
    select_frame,
)

__version__ = "0.1.0"
