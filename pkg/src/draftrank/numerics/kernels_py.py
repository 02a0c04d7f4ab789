"""Pure-numpy reference kernels.

These are the hot inner-loop primitives. A compiled twin lives in
``_ckernels.pyx`` with identical signatures; :mod:`draftrank.numerics.backend`
picks one at import time. Keep the two implementations semantically in
lockstep — the parity test compares them element-wise.

Shapes: 2-D inputs are row batches; ``eps`` guards divisions only.
"""

import numpy as np

LN_EPS = 1e-5
NORM_FLOOR = 1e-30


def elu_fwd(x):
    """ELU with alpha = 1: x for x >= 0, exp(x) - 1 below."""
    return np.where(x >= 0.0, x, np.expm1(x))


def elu_bwd(x, dy):
    return np.where(x >= 0.0, dy, dy * np.exp(x))


def layernorm_fwd(x, gain, bias, eps=LN_EPS):
    """Per-row normalization: (x - mean) / sqrt(var + eps) * gain + bias.

    Variance uses the 1/D convention.
    """
    mu = x.mean(axis=1, keepdims=True)
    xc = x - mu
    var = np.mean(xc * xc, axis=1, keepdims=True)
    rstd = 1.0 / np.sqrt(var + eps)
    return xc * rstd * gain + bias


def layernorm_bwd(x, gain, bias, dy, eps=LN_EPS):
    mu = x.mean(axis=1, keepdims=True)
    xc = x - mu
    var = np.mean(xc * xc, axis=1, keepdims=True)
    rstd = 1.0 / np.sqrt(var + eps)
    xhat = xc * rstd
    dxhat = dy * gain
    # d/dx of (x - mean)/std with both mean and std functions of x
    dx = rstd * (
        dxhat
        - dxhat.mean(axis=1, keepdims=True)
        - xhat * np.mean(dxhat * xhat, axis=1, keepdims=True)
    )
    dgain = (dy * xhat).sum(axis=0)
    dbias = dy.sum(axis=0)
    return dx, dgain, dbias


def l2norm_fwd(x):
    """Row-wise L2 normalization; all-zero rows pass through as zeros."""
    norms = np.sqrt((x * x).sum(axis=1, keepdims=True))
    return x / np.maximum(norms, NORM_FLOOR)


def l2norm_bwd(x, dy):
    norms = np.sqrt((x * x).sum(axis=1, keepdims=True))
    safe = np.maximum(norms, NORM_FLOOR)
    y = x / safe
    return (dy - y * (dy * y).sum(axis=1, keepdims=True)) / safe


def masked_mean_fwd(x, counts):
    """Mean of the first counts[b] rows of x[b]; x is [B, R, E], counts >= 1."""
    B, R, E = x.shape
    out = np.empty((B, E), dtype=np.float64)
    for b in range(B):
        out[b] = x[b, : counts[b]].sum(axis=0) / counts[b]
    return out


def masked_mean_bwd(counts, rows, dy):
    B, E = dy.shape
    dx = np.zeros((B, rows, E), dtype=np.float64)
    for b in range(B):
        dx[b, : counts[b]] = dy[b] / counts[b]
    return dx


def segment_mean_fwd(x, counts):
    """Mean over consecutive row segments of x; segment b has counts[b] > 0
    rows. The packed twin of masked_mean for ragged batches."""
    offsets = np.zeros(len(counts) + 1, dtype=np.int64)
    np.cumsum(counts, out=offsets[1:])
    sums = np.add.reduceat(x, offsets[:-1], axis=0)
    return sums / counts[:, None]


def segment_mean_bwd(counts, dy):
    return np.repeat(dy / counts[:, None], counts, axis=0)


def masked_ce_fwd(sims, mask, inv_tau):
    """Row-wise softmax cross-entropy restricted to non-masked entries.

    mask is int8 per entry: 1 = the chosen card, 0 = offered but unchosen,
    -1 = not offered (excluded from the softmax entirely). Returns per-row
    loss and the valid-entry softmax probabilities (0 at excluded entries).
    """
    valid = mask >= 0
    z = np.where(valid, sims * inv_tau, -np.inf)
    zmax = z.max(axis=1, keepdims=True)
    ez = np.exp(z - zmax)
    ez[~valid] = 0.0
    denom = ez.sum(axis=1, keepdims=True)
    probs = ez / denom
    pos = mask == 1
    pos_z = (np.where(pos, z, 0.0)).sum(axis=1)
    row_loss = np.log(denom[:, 0]) + zmax[:, 0] - pos_z
    return row_loss, probs


def masked_ce_bwd(probs, mask, inv_tau, drow):
    dsims = (probs - (mask == 1)) * (inv_tau * drow[:, None])
    dsims[mask < 0] = 0.0
    return dsims
