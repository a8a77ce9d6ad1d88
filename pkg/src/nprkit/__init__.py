"""Content-aware non-photorealistic rendering toolkit.

Finds the visually salient object in a photograph and re-renders it (or
its background) with one of three stylizations, compositing the result
seamlessly back into the frame.
"""

from .compositing import (
    CompositeDiagnostics,
    CompositeMode,
    CompositeRequest,
    composite,
    feather_alpha,
)
from .errors import (
    DegenerateInputError,
    DegenerateResultError,
    InvalidInputError,
    NprError,
    NumericalError,
    UnsupportedFormatError,
)
from .filters import (
    AbstractionParams,
    GuidedFilterParams,
    abstract_image,
    bilateral_filter,
    detail_exaggerate,
    dog_edges,
    gaussian_blur,
    guided_filter,
    quantize_luminance,
)
from .imgcore import (
    BBox,
    box_filter,
    lab_to_rgb,
    load_pgm,
    load_png,
    resize_area,
    resize_bilinear,
    rgb_to_lab,
    save_pgm,
    save_png,
)
from .maxflow import FlowNetwork, max_flow
from .pipeline import (
    CompositingConfig,
    DefocusParams,
    GrabCutConfig,
    PipelineConfig,
    RenderOutputs,
    TargetRegion,
    render_abstracted,
    render_exaggerated,
    render_exaggerated_defocus,
    run_all,
    segment_salient,
)
from .saliency import (
    SaliencyParams,
    bounding_box,
    otsu_threshold,
    saliency_map,
)
from .segmentation import Gmm, GrabCutState, Region, grabcut

__version__ = "0.1.0"

__all__ = [
    "AbstractionParams",
    "BBox",
    "CompositeDiagnostics",
    "CompositeMode",
    "CompositeRequest",
    "CompositingConfig",
    "DefocusParams",
    "DegenerateInputError",
    "DegenerateResultError",
    "FlowNetwork",
    "Gmm",
    "GrabCutConfig",
    "GrabCutState",
    "GuidedFilterParams",
    "InvalidInputError",
    "NprError",
    "NumericalError",
    "PipelineConfig",
    "Region",
    "RenderOutputs",
    "SaliencyParams",
    "TargetRegion",
    "UnsupportedFormatError",
    "abstract_image",
    "bilateral_filter",
    "bounding_box",
    "box_filter",
    "composite",
    "detail_exaggerate",
    "dog_edges",
    "feather_alpha",
    "gaussian_blur",
    "grabcut",
    "guided_filter",
    "lab_to_rgb",
    "load_pgm",
    "load_png",
    "max_flow",
    "otsu_threshold",
    "quantize_luminance",
    "render_abstracted",
    "render_exaggerated",
    "render_exaggerated_defocus",
    "resize_area",
    "resize_bilinear",
    "rgb_to_lab",
    "run_all",
    "saliency_map",
    "save_pgm",
    "save_png",
    "segment_salient",
    "__version__",
]
