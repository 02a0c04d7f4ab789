"""Reverse-mode tape over numpy arrays, restricted to the ops this model needs.

Every op's backward rule is hand-derived; the heavy elementwise kernels are
delegated to the selected backend. Values are float64 throughout and every op
checks its output for NaN/Inf — a non-finite value is a bug, not data.
"""

import numpy as np

from . import backend as K

FINITE_CHECKS = True


class NonFiniteError(FloatingPointError):
    pass


class ShapeMismatch(ValueError):
    pass


class Var:
    """A node in the computation graph: a value, parents, and a vjp closure."""

    __slots__ = ("value", "grad", "parents", "_vjp")

    def __init__(self, value, parents=(), vjp=None):
        self.value = np.asarray(value, dtype=np.float64)
        if FINITE_CHECKS and self.value.size:
            # min/max scans catch NaN (propagates) and +-inf without
            # materializing an isfinite mask on the hot path
            if not np.isfinite(self.value.min()) or not np.isfinite(self.value.max()):
                raise NonFiniteError("non-finite value entered the graph")
        self.grad = None
        self.parents = parents
        self._vjp = vjp

    @property
    def shape(self):
        return self.value.shape

    def backward(self):
        if self.value.shape != ():
            raise ShapeMismatch("backward() starts from a scalar loss")
        order = []
        seen = set()
        stack = [(self, False)]
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in seen:
                continue
            seen.add(id(node))
            stack.append((node, True))
            for p in node.parents:
                stack.append((p, False))
        self.grad = np.ones((), dtype=np.float64)
        for node in reversed(order):
            if node._vjp is not None and node.grad is not None:
                node._vjp(node.grad)

    def item(self) -> float:
        return float(self.value)


def _acc(parent: Var, g):
    if parent.grad is None:
        parent.grad = np.array(g, dtype=np.float64)  # copy: g may be shared
    else:
        parent.grad += g


def _unbroadcast(g, shape):
    """Reduce a broadcast gradient back to the original operand shape."""
    extra = g.ndim - len(shape)
    if extra:
        g = g.sum(axis=tuple(range(extra)))
    axes = tuple(i for i, d in enumerate(shape) if d == 1 and g.shape[i] != 1)
    if axes:
        g = g.sum(axis=axes, keepdims=True)
    return g


def const(value) -> Var:
    return Var(value)


def linear(x: Var, w: Var, b: Var) -> Var:
    if x.value.shape[1] != w.value.shape[0]:
        raise ShapeMismatch(f"linear: {x.value.shape} @ {w.value.shape}")
    out = Var(x.value @ w.value + b.value, parents=(x, w, b))

    def vjp(g):
        _acc(x, g @ w.value.T)
        _acc(w, x.value.T @ g)
        _acc(b, g.sum(axis=0))

    out._vjp = vjp
    return out


def elu(x: Var) -> Var:
    out = Var(K.elu_fwd(x.value), parents=(x,))
    out._vjp = lambda g: _acc(x, K.elu_bwd(x.value, g))
    return out


def layernorm(x: Var, gain: Var, bias: Var) -> Var:
    out = Var(K.layernorm_fwd(x.value, gain.value, bias.value), parents=(x, gain, bias))

    def vjp(g):
        dx, dg, db = K.layernorm_bwd(x.value, gain.value, bias.value, g)
        _acc(x, dx)
        _acc(gain, dg)
        _acc(bias, db)

    out._vjp = vjp
    return out


def l2norm_rows(x: Var) -> Var:
    out = Var(K.l2norm_fwd(x.value), parents=(x,))
    out._vjp = lambda g: _acc(x, K.l2norm_bwd(x.value, g))
    return out


def masked_mean_rows(x: Var, counts: np.ndarray) -> Var:
    """Mean of the first counts[b] rows per batch entry; counts must be >= 1."""
    rows = x.value.shape[1]
    out = Var(K.masked_mean_fwd(x.value, counts), parents=(x,))
    out._vjp = lambda g: _acc(x, K.masked_mean_bwd(counts, rows, g))
    return out


def segment_mean_rows(x: Var, counts: np.ndarray) -> Var:
    """Mean over consecutive row segments (packed ragged batch); counts >= 1."""
    out = Var(K.segment_mean_fwd(x.value, counts), parents=(x,))
    out._vjp = lambda g: _acc(x, K.segment_mean_bwd(counts, g))
    return out


def mean_rows(x: Var) -> Var:
    """Plain mean over axis 1 of [B, R, E]."""
    rows = x.value.shape[1]
    out = Var(x.value.mean(axis=1), parents=(x,))
    out._vjp = lambda g: _acc(x, np.repeat(g[:, None, :] / rows, rows, axis=1))
    return out


def conv1d_rows(x: Var, w: Var, b: Var) -> Var:
    """Width-3, stride-1, zero-padded convolution along axis 1 of [B, R, Din].

    w is [3 * Din, Dout]; position t sees rows t-1, t, t+1 (zeros off the ends).
    """
    B, R, Din = x.value.shape
    if w.value.shape[0] != 3 * Din:
        raise ShapeMismatch(f"conv1d: kernel {w.value.shape} for input depth {Din}")
    xp = np.zeros((B, R + 2, Din), dtype=np.float64)
    xp[:, 1:-1] = x.value
    windows = np.concatenate([xp[:, :-2], xp[:, 1:-1], xp[:, 2:]], axis=2)  # [B,R,3*Din]
    out = Var(windows @ w.value + b.value, parents=(x, w, b))

    def vjp(g):
        _acc(w, windows.reshape(-1, 3 * Din).T @ g.reshape(-1, w.value.shape[1]))
        _acc(b, g.sum(axis=(0, 1)))
        gw = g @ w.value.T  # [B,R,3*Din]
        dxp = np.zeros_like(xp)
        dxp[:, :-2] += gw[:, :, :Din]
        dxp[:, 1:-1] += gw[:, :, Din : 2 * Din]
        dxp[:, 2:] += gw[:, :, 2 * Din :]
        _acc(x, dxp[:, 1:-1])

    out._vjp = vjp
    return out


def reshape(x: Var, shape) -> Var:
    out = Var(x.value.reshape(shape), parents=(x,))
    out._vjp = lambda g: _acc(x, g.reshape(x.value.shape))
    return out


def gather_rows(x: Var, idx: np.ndarray) -> Var:
    out = Var(x.value[idx], parents=(x,))

    def vjp(g):
        if x.grad is None:
            x.grad = np.zeros_like(x.value)
        np.add.at(x.grad, idx, g)

    out._vjp = vjp
    return out


def assemble_rows(total: int, parts: list[tuple[np.ndarray, "Var"]]) -> Var:
    """Scatter row blocks into a [total, E] matrix; index lists must partition."""
    width = parts[0][1].value.shape[1]
    val = np.empty((total, width), dtype=np.float64)
    for idx, part in parts:
        val[idx] = part.value
    out = Var(val, parents=tuple(p for _, p in parts))

    def vjp(g):
        for idx, part in parts:
            _acc(part, g[idx])

    out._vjp = vjp
    return out


def tile_rows(x: Var, n: int) -> Var:
    """Repeat a [E] vector into n rows."""
    out = Var(np.tile(x.value, (n, 1)), parents=(x,))
    out._vjp = lambda g: _acc(x, g.sum(axis=0))
    return out


def matmul_nt(a: Var, b: Var) -> Var:
    """a @ b.T — the similarity matrix between two row batches."""
    out = Var(a.value @ b.value.T, parents=(a, b))

    def vjp(g):
        _acc(a, g @ b.value)
        _acc(b, g.T @ a.value)

    out._vjp = vjp
    return out


def transpose(x: Var) -> Var:
    out = Var(x.value.T, parents=(x,))
    out._vjp = lambda g: _acc(x, g.T)
    return out


def masked_ce_mean(sims: Var, mask: np.ndarray, tau: float) -> Var:
    """Mean over rows of masked row-softmax cross-entropy (see backend kernel)."""
    inv_tau = 1.0 / tau
    row_loss, probs = K.masked_ce_fwd(sims.value, mask, inv_tau)
    n = sims.value.shape[0]
    out = Var(row_loss.mean(), parents=(sims,))
    out._vjp = lambda g: _acc(sims, K.masked_ce_bwd(probs, mask, inv_tau, np.full(n, float(g) / n)))
    return out


def add(a: Var, b: Var) -> Var:
    out = Var(a.value + b.value, parents=(a, b))

    def vjp(g):
        _acc(a, _unbroadcast(g, a.value.shape))
        _acc(b, _unbroadcast(g, b.value.shape))

    out._vjp = vjp
    return out


def sub(a: Var, b: Var) -> Var:
    out = Var(a.value - b.value, parents=(a, b))

    def vjp(g):
        _acc(a, _unbroadcast(g, a.value.shape))
        _acc(b, _unbroadcast(-g, b.value.shape))

    out._vjp = vjp
    return out


def mul(a: Var, b: Var) -> Var:
    out = Var(a.value * b.value, parents=(a, b))

    def vjp(g):
        _acc(a, _unbroadcast(g * b.value, a.value.shape))
        _acc(b, _unbroadcast(g * a.value, b.value.shape))

    out._vjp = vjp
    return out


def scale(x: Var, c: float) -> Var:
    out = Var(x.value * c, parents=(x,))
    out._vjp = lambda g: _acc(x, g * c)
    return out


def softplus(x: Var) -> Var:
    """log(1 + exp(x)), computed stably for large |x|."""
    v = x.value
    out_val = np.maximum(v, 0.0) + np.log1p(np.exp(-np.abs(v)))
    out = Var(out_val, parents=(x,))

    def vjp(g):
        _acc(x, g / (1.0 + np.exp(-v)))

    out._vjp = vjp
    return out


def relu(x: Var) -> Var:
    """Hinge with subgradient 0 at the kink."""
    out = Var(np.maximum(x.value, 0.0), parents=(x,))
    out._vjp = lambda g: _acc(x, g * (x.value > 0.0))
    return out


def rowdist(a: Var, b: Var) -> Var:
    """Euclidean distance per row pair; gradient guarded at zero distance."""
    diff = a.value - b.value
    d = np.sqrt((diff * diff).sum(axis=1))
    out = Var(d, parents=(a, b))

    def vjp(g):
        scale_ = (g / np.maximum(d, 1e-12))[:, None]
        _acc(a, scale_ * diff)
        _acc(b, -scale_ * diff)

    out._vjp = vjp
    return out


def vsum(x: Var) -> Var:
    out = Var(x.value.sum(), parents=(x,))
    out._vjp = lambda g: _acc(x, np.full_like(x.value, float(g)))
    return out


def vmean(x: Var) -> Var:
    n = x.value.size
    out = Var(x.value.mean(), parents=(x,))
    out._vjp = lambda g: _acc(x, np.full_like(x.value, float(g) / n))
    return out
