"""samlab: sharpness-aware optimization with a learnable perturbation radius.

Core layers: exact-arithmetic parameter kernels (compiled or pure, see
`samlab.kernels.BACKEND`), differentiable desk-scale models, SAM/ASAM
steps, the bilevel radius learner, a finite-difference oracle for its
hypergradient, and a config-driven experiment harness with a CLI
(`samlab train|sweep|landscape|gradcheck|convergence`).
"""

from .errors import (ConfigError, DimensionError, FormatError, InvalidModelError,
                     NoDescentDirection, NonFiniteError, SamlabError)
from .kernels import BACKEND
from .layouts import ParameterLayout, Segment, dense_layout
from .models import (fd_gradient, fd_hvp, make_anchored_quadratic, make_conv1d,
                     make_logreg, make_mlp, make_quadratic)
from .datasets import (BatchSampler, LabeledDataset, corrupt_labels, make_blobs,
                       make_two_moons, split)
from .optimizers import (NormalizationOperator, SgdConfig, SgdState, asam_perturbation,
                         asam_step, build_normalization, sam_perturbation, sam_step,
                         sgd_step)
from .lets import (LetsConfig, RadiusState, StepDiagnostics, generalization_metric,
                   hessian_diag_approx, lets_step, rho_hypergradient, update_radius)
from .oracle import (HypergradReport, hessian_diag_error, oracle_dJ_drho_fd,
                     verify_hypergradient)
from .checkpoints import load_checkpoint, save_checkpoint
from .harness import (ExperimentConfig, GOLDEN_HEADER, RunResult, config_from_file,
                      convergence_summary, landscape_grid, run_experiment,
                      save_landscape, sweep)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "BatchSampler", "ConfigError", "DimensionError", "ExperimentConfig",
    "FormatError", "GOLDEN_HEADER", "HypergradReport", "InvalidModelError",
    "LabeledDataset", "LetsConfig", "NoDescentDirection", "NonFiniteError",
    "NormalizationOperator", "ParameterLayout", "RadiusState", "RunResult",
    "SamlabError", "Segment", "SgdConfig", "SgdState", "StepDiagnostics",
    "asam_perturbation", "asam_step", "build_normalization", "config_from_file",
    "convergence_summary", "corrupt_labels", "dense_layout", "fd_gradient", "fd_hvp",
    "generalization_metric", "hessian_diag_approx", "hessian_diag_error",
    "landscape_grid", "lets_step", "load_checkpoint", "make_anchored_quadratic",
    "make_blobs", "make_conv1d", "make_logreg", "make_mlp", "make_quadratic",
    "make_two_moons", "oracle_dJ_drho_fd", "rho_hypergradient", "run_experiment",
    "sam_perturbation", "sam_step", "save_checkpoint", "save_landscape", "sgd_step",
    "split", "sweep", "update_radius", "verify_hypergradient", "__version__",
]
