"""Forward/backward pairs for each layer, as plain array functions.

These are the building blocks the tape ops wrap; they exist separately so the
math can be tested against finite differences in isolation.
"""

import numpy as np

from . import backend as K
from .autograd import ShapeMismatch


class ZeroVector(ValueError):
    pass


class EmptySet(ValueError):
    pass


def linear_fwd(x, w, b):
    if x.shape[1] != w.shape[0] or w.shape[1] != b.shape[0]:
        raise ShapeMismatch(f"linear: x{x.shape} w{w.shape} b{b.shape}")
    return x @ w + b


def linear_bwd(x, w, b, dy):
    return dy @ w.T, x.T @ dy, dy.sum(axis=0)


def elu_fwd(x):
    return K.elu_fwd(np.asarray(x, dtype=np.float64))


def elu_bwd(x, dy):
    return K.elu_bwd(np.asarray(x, dtype=np.float64), dy)


def layernorm_fwd(x, gain, bias):
    return K.layernorm_fwd(x, gain, bias)


def layernorm_bwd(x, gain, bias, dy):
    return K.layernorm_bwd(x, gain, bias, dy)


def masked_mean_fwd(x, valid):
    """Mean of the first ``valid`` rows of a single [R, E] matrix."""
    if valid < 1:
        raise EmptySet("masked mean needs at least one valid row")
    if valid > x.shape[0]:
        raise ShapeMismatch(f"{valid} valid rows in a {x.shape[0]}-row matrix")
    return K.masked_mean_fwd(x[None], np.array([valid], dtype=np.int64))[0]


def masked_mean_bwd(x, valid, dy):
    if valid < 1:
        raise EmptySet("masked mean needs at least one valid row")
    return K.masked_mean_bwd(np.array([valid], dtype=np.int64), x.shape[0], dy[None])[0]


def l2norm_fwd(x):
    return K.l2norm_fwd(x)


def l2norm_bwd(x, dy):
    return K.l2norm_bwd(x, dy)


def cosine_sim(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ZeroVector("cosine similarity of a zero vector is undefined")
    return float(u @ v / (nu * nv))


def conv1d_fwd(x, w, b):
    """Width-3 stride-1 zero-padded convolution along axis 0 of [R, Din]."""
    R, din = x.shape
    if w.shape[0] != 3 * din:
        raise ShapeMismatch(f"conv1d: kernel {w.shape} for depth {din}")
    xp = np.zeros((R + 2, din))
    xp[1:-1] = x
    windows = np.concatenate([xp[:-2], xp[1:-1], xp[2:]], axis=1)
    return windows @ w + b


def conv1d_bwd(x, w, b, dy):
    R, din = x.shape
    xp = np.zeros((R + 2, din))
    xp[1:-1] = x
    windows = np.concatenate([xp[:-2], xp[1:-1], xp[2:]], axis=1)
    dw = windows.T @ dy
    db = dy.sum(axis=0)
    gw = dy @ w.T
    dxp = np.zeros_like(xp)
    dxp[:-2] += gw[:, :din]
    dxp[1:-1] += gw[:, din : 2 * din]
    dxp[2:] += gw[:, 2 * din :]
    return dxp[1:-1], dw, db
