"""handwatch: real-time hand gesture detection and participation monitoring.

Pipeline stages: codebook background subtraction -> cascade/blob hand
localization + CamShift skin tracking -> mask fusion and cleanup -> CPDH
gesture classification -> debounced raise events and a windowed
participation indicator streamed as newline-delimited JSON.
"""

from . import kernels
from .background import (
    CodebookModel,
    CodebookParams,
    Codeword,
    codeword_match,
    extract_foreground,
    load_codebook,
    save_codebook,
    train_codebook,
)
from .cpdh import (
    FIST,
    PALM,
    ContourPointSet,
    CpdhDescriptor,
    CpdhParams,
    GestureDb,
    PolarPointSet,
    build_cpdh,
    build_gesture_db,
    classify_gesture,
    cpdh_distance,
    describe_mask,
    load_gesture_db,
    sample_contour,
    save_gesture_db,
    to_polar,
    trace_contour,
)
from .imgcore import (
    BinaryMask,
    Blob,
    Frame,
    IntegralImage,
    canny_edges,
    color_convert,
    connected_components,
    gaussian_blur,
    integral_rect_sum,
    morph,
    threshold,
)
from .pipeline import (
    GestureEvent,
    IndicatorSample,
    ParticipationSeries,
    PipelineConfig,
    RaiseEvent,
    Session,
    detect_raise_events,
    fuse_masks,
    parse_record,
    postprocess_mask,
    run_session,
    serialize_event,
    update_indicator,
)
from .skintrack import (
    CascadeModel,
    CascadeStage,
    Roi,
    SkinModel,
    SkinParams,
    TrackParams,
    TrackState,
    WeakClassifier,
    backproject,
    blob_detect,
    build_skin_model,
    camshift_track,
    load_cascade,
    save_cascade,
    skin_model_from_hue,
    tracker_step,
    viola_jones_detect,
)

__version__ = "0.1.0"

kernel_backend = kernels.backend_name
