"""Linear binary SVM with the slide loss.

The loss is zero for confident correct classifications, ramps linearly inside
the margin, and saturates at 1, which gives a closed-form proximal operator
and a working-set ADMM solver that touches only the samples near the margin.
"""

__version__ = "0.1.0"

from .loss import (
    ProxResult,
    SlideParams,
    SubdiffKind,
    SubdiffSet,
    prox_oracle,
    prox_slide,
    prox_slide_vector,
    slide_loss,
    slide_loss_sum,
    slide_subdifferential,
)
from .data import (
    Dataset,
    FoldPlan,
    ParseError,
    ScalingMap,
    apply_scaling,
    fit_scaling,
    flip_labels,
    gaussian_clusters,
    kfold_plan,
    parse_libsvm,
    write_libsvm,
)
from .admm import (
    AdmmState,
    Residuals,
    TrainConfig,
    TrainDiagnostics,
    check_proximal_stationarity,
    train,
)
from .model import (
    Model,
    SupportSet,
    accuracy,
    extract_support_vectors,
    load_model,
    margin_identity_check,
    predict,
    save_model,
)
from .tuning import (
    CvResult,
    Grid,
    cross_validate,
    default_grid,
    flip_experiment,
    grid_search,
)

__all__ = [
    "__version__",
    "ProxResult",
    "SlideParams",
    "SubdiffKind",
    "SubdiffSet",
    "prox_oracle",
    "prox_slide",
    "prox_slide_vector",
    "slide_loss",
    "slide_loss_sum",
    "slide_subdifferential",
    "Dataset",
    "FoldPlan",
    "ParseError",
    "ScalingMap",
    "apply_scaling",
    "fit_scaling",
    "flip_labels",
    "gaussian_clusters",
    "kfold_plan",
    "parse_libsvm",
    "write_libsvm",
    "AdmmState",
    "Residuals",
    "TrainConfig",
    "TrainDiagnostics",
    "check_proximal_stationarity",
    "train",
    "Model",
    "SupportSet",
    "accuracy",
    "extract_support_vectors",
    "load_model",
    "margin_identity_check",
    "predict",
    "save_model",
    "Grid",
    "CvResult",
    "cross_validate",
    "default_grid",
    "flip_experiment",
    "grid_search",
]
