"""Dense-tensor engine: forward/backward layer kernels, autograd tape,
parameter store, SGD, gradient checking, checkpoints.

Tensors are plain float64 numpy arrays (row-major). The elementwise kernels
run on a compiled backend when available; see :mod:`.backend`.
"""

from .autograd import NonFiniteError, ShapeMismatch, Var
from .backend import BACKEND
from .checkpoint import load_tensors, save_tensors
from .gradcheck import GradCheckReport, finite_diff_check
from .ops import (
    EmptySet,
    ZeroVector,
    conv1d_bwd,
    conv1d_fwd,
    cosine_sim,
    elu_bwd,
    elu_fwd,
    l2norm_bwd,
    l2norm_fwd,
    layernorm_bwd,
    layernorm_fwd,
    linear_bwd,
    linear_fwd,
    masked_mean_bwd,
    masked_mean_fwd,
)
from .params import NonFiniteGradient, ParamStore, SgdConfig, init_uniform, sgd_step

__all__ = [
    "BACKEND",
    "EmptySet",
    "GradCheckReport",
    "NonFiniteError",
    "NonFiniteGradient",
    "ParamStore",
    "SgdConfig",
    "ShapeMismatch",
    "Var",
    "ZeroVector",
    "conv1d_bwd",
    "conv1d_fwd",
    "cosine_sim",
    "elu_bwd",
    "elu_fwd",
    "finite_diff_check",
    "init_uniform",
    "l2norm_bwd",
    "l2norm_fwd",
    "layernorm_bwd",
    "layernorm_fwd",
    "linear_bwd",
    "linear_fwd",
    "load_tensors",
    "masked_mean_bwd",
    "masked_mean_fwd",
    "save_tensors",
    "sgd_step",
]
