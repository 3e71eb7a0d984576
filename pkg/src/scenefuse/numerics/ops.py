"""Dense float64 operations with analytic backward rules.

Every function accepts plain arrays or :class:`~scenefuse.numerics.tape.Var`
nodes. With no ``Var`` among the inputs the result is a plain array and
nothing is recorded.
"""
from __future__ import annotations

import math

import numpy as np

from ..errors import ConfigError, NonFiniteError, ShapeError, UsageError
from .linear import LinearMap
from .tape import Var, value_of


def as_matrix(x, name="matrix") -> np.ndarray:
    """Validate and convert to a 2-D float64 array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ShapeError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.isfinite(arr).all():
        raise NonFiniteError(f"{name} has non-finite entries")
    return arr


def _tape_of(*xs):
    for x in xs:
        if isinstance(x, Var):
            return x.tape
    return None


def _emit(value, inputs, backward_fn):
    if not np.isfinite(value).all():
        raise NonFiniteError("operation produced non-finite values")
    tape = _tape_of(*inputs)
    if tape is None:
        return value
    return tape.record(value, inputs, backward_fn)


def _unbroadcast(g, shape):
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for axis, n in enumerate(shape):
        if n == 1 and g.shape[axis] != 1:
            g = g.sum(axis=axis, keepdims=True)
    return g


def _shape(x):
    return np.shape(value_of(x))


# --- elementwise -----------------------------------------------------------

def add(a, b):
    av, bv = value_of(a), value_of(b)
    try:
        out = av + bv
    except ValueError as exc:
        raise ShapeError(f"cannot add shapes {np.shape(av)} and {np.shape(bv)}") from exc
    sa, sb = np.shape(av), np.shape(bv)
    return _emit(out, (a, b), lambda g: (_unbroadcast(g, sa), _unbroadcast(g, sb)))


def sub(a, b):
    av, bv = value_of(a), value_of(b)
    try:
        out = av - bv
    except ValueError as exc:
        raise ShapeError(f"cannot subtract shapes {np.shape(av)} and {np.shape(bv)}") from exc
    sa, sb = np.shape(av), np.shape(bv)
    return _emit(out, (a, b), lambda g: (_unbroadcast(g, sa), -_unbroadcast(g, sb)))


def mul(a, b):
    av, bv = value_of(a), value_of(b)
    try:
        out = av * bv
    except ValueError as exc:
        raise ShapeError(f"cannot multiply shapes {np.shape(av)} and {np.shape(bv)}") from exc
    sa, sb = np.shape(av), np.shape(bv)
    return _emit(out, (a, b), lambda g: (_unbroadcast(g * bv, sa), _unbroadcast(g * av, sb)))


def scale(x, c: float):
    return _emit(value_of(x) * c, (x,), lambda g: (g * c,))


def transpose(x):
    return _emit(value_of(x).T.copy(), (x,), lambda g: (g.T,))


# --- linear algebra --------------------------------------------------------

def matmul(a, b):
    av, bv = value_of(a), value_of(b)
    if av.ndim != 2 or bv.ndim != 2 or av.shape[1] != bv.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {av.shape} x {bv.shape}")
    return _emit(av @ bv, (a, b), lambda g: (g @ bv.T, av.T @ g))


def linear(x, lin: LinearMap):
    """``x W^T + b`` applied to every row of ``x``."""
    w = lin.weight
    if _shape(x)[-1] != _shape(w)[1]:
        raise ShapeError(f"linear map expects {_shape(w)[1]} input columns, got shape {_shape(x)}")
    out = matmul(x, transpose(w))
    if lin.bias is not None:
        out = add(out, lin.bias)
    return out


def concat_cols(parts):
    vals = [value_of(p) for p in parts]
    rows = {v.shape[0] for v in vals}
    if len(rows) != 1:
        raise ShapeError(f"concat_cols row mismatch: {[v.shape for v in vals]}")
    edges = np.cumsum([0] + [v.shape[1] for v in vals])

    def backward(g):
        return tuple(g[:, edges[i]:edges[i + 1]] for i in range(len(vals)))

    return _emit(np.concatenate(vals, axis=1), tuple(parts), backward)


def concat_rows(parts):
    vals = [value_of(p) for p in parts]
    cols = {v.shape[1] for v in vals}
    if len(cols) != 1:
        raise ShapeError(f"concat_rows column mismatch: {[v.shape for v in vals]}")
    edges = np.cumsum([0] + [v.shape[0] for v in vals])

    def backward(g):
        return tuple(g[edges[i]:edges[i + 1]] for i in range(len(vals)))

    return _emit(np.concatenate(vals, axis=0), tuple(parts), backward)


# --- reductions ------------------------------------------------------------

def total(x):
    """Sum of all entries, as a 0-d value."""
    xv = value_of(x)
    return _emit(np.asarray(xv.sum()), (x,), lambda g: (np.full_like(xv, g),))


def mean_rows(x):
    """Column-wise mean over rows: (S, D) -> (1, D)."""
    xv = value_of(x)
    if xv.ndim != 2 or xv.shape[0] == 0:
        raise ShapeError(f"mean_rows needs at least one row, got shape {xv.shape}")
    n = xv.shape[0]
    return _emit(xv.mean(axis=0, keepdims=True), (x,), lambda g: (np.repeat(g / n, n, axis=0),))


def weighted_sum(weights, mats):
    """``sum_j weights[j] * mats[j]``; ``None`` entries contribute nothing."""
    wv = value_of(weights).reshape(-1)
    if len(mats) != wv.size:
        raise ShapeError(f"{wv.size} weights for {len(mats)} matrices")
    present = [value_of(m) for m in mats if m is not None]
    if not present:
        raise UsageError("weighted_sum needs at least one matrix")
    shape = present[0].shape
    out = np.zeros(shape)
    for w, m in zip(wv, mats):
        if m is None:
            continue
        mv = value_of(m)
        if mv.shape != shape:
            raise ShapeError(f"weighted_sum shape mismatch: {mv.shape} vs {shape}")
        out = out + w * mv
    wshape = np.shape(value_of(weights))

    def backward(g):
        gw = np.array([0.0 if m is None else float((g * value_of(m)).sum()) for m in mats])
        return (gw.reshape(wshape),) + tuple(None if m is None else w * g for w, m in zip(wv, mats))

    return _emit(out, (weights, *mats), backward)


# --- normalisation ---------------------------------------------------------

def softmax_rows(m, mask=None):
    """Row-wise softmax over the last axis.

    ``mask`` (bool, broadcastable to ``m``) marks admissible entries; the rest
    get probability exactly 0. A row with nothing admissible is all zeros.
    """
    mv = value_of(m)
    if mask is None:
        shifted = mv - mv.max(axis=-1, keepdims=True)
        e = np.exp(shifted)
        y = e / e.sum(axis=-1, keepdims=True)
    else:
        mask = np.broadcast_to(np.asarray(mask, dtype=bool), mv.shape)
        masked = np.where(mask, mv, -np.inf)
        row_max = masked.max(axis=-1, keepdims=True)
        row_max = np.where(np.isfinite(row_max), row_max, 0.0)
        e = np.where(mask, np.exp(np.where(mask, mv - row_max, 0.0)), 0.0)
        denom = e.sum(axis=-1, keepdims=True)
        y = np.divide(e, denom, out=np.zeros_like(e), where=denom > 0)

    def backward(g):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

    return _emit(y, (m,), backward)


def layer_norm(m, eps: float = 1e-5, gamma=None, beta=None):
    """Per-row standardisation over the last axis, optional affine."""
    mv = value_of(m)
    if mv.shape[-1] < 1:
        raise ShapeError("layer_norm needs at least one column")
    mu = mv.mean(axis=-1, keepdims=True)
    centered = mv - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / np.sqrt(var + eps)
    xhat = centered * inv
    gv = None if gamma is None else value_of(gamma)
    bv = None if beta is None else value_of(beta)
    y = xhat if gv is None else xhat * gv
    if bv is not None:
        y = y + bv

    def backward(g):
        gx = g if gv is None else g * gv
        gm = inv * (gx - gx.mean(axis=-1, keepdims=True)
                    - xhat * (gx * xhat).mean(axis=-1, keepdims=True))
        out = [gm]
        if gamma is not None:
            out.append(_unbroadcast(g * xhat, np.shape(gv)))
        if beta is not None:
            out.append(_unbroadcast(g, np.shape(bv)))
        return tuple(out)

    inputs = (m,) + tuple(p for p in (gamma, beta) if p is not None)
    return _emit(y, inputs, backward)


def cross_entropy(logits, target: int):
    """``-log softmax(logits)[target]`` for a single row of logits."""
    lv = value_of(logits)
    flat = lv.reshape(-1)
    if not 0 <= int(target) < flat.size:
        raise UsageError(f"target {target} out of range for {flat.size} classes")
    top = flat.max()
    lse = top + math.log(np.exp(flat - top).sum())
    loss = np.asarray(lse - flat[target])

    def backward(g):
        p = np.exp(flat - lse)
        p[target] -= 1.0
        return ((g * p).reshape(lv.shape),)

    return _emit(loss, (logits,), backward)


# --- attention -------------------------------------------------------------

def attention(q, k, v, d_k: int):
    """``softmax_rows(q k^T / sqrt(d_k)) v``."""
    qs, ks, vs = _shape(q), _shape(k), _shape(v)
    if len(qs) != 2 or len(ks) != 2 or len(vs) != 2:
        raise ShapeError("attention inputs must be 2-D")
    if qs[1] != d_k or ks[1] != d_k:
        raise ShapeError(f"attention expects query/key width {d_k}, got {qs} and {ks}")
    if ks[0] != vs[0]:
        raise ShapeError(f"keys {ks} and values {vs} differ in row count")
    scores = scale(matmul(q, transpose(k)), 1.0 / math.sqrt(d_k))
    return matmul(softmax_rows(scores), v)


def cross_attention(q, kv, d_k: int):
    """Single-head attention with one shared key/value context."""
    qs, kvs = _shape(q), _shape(kv)
    if len(qs) != 2 or len(kvs) != 2 or qs[1] != kvs[1] or qs[1] != d_k:
        raise ShapeError(f"cross_attention shape mismatch: q {qs}, kv {kvs}, d_k={d_k}")
    if kvs[0] == 0:
        raise ShapeError("cross_attention needs at least one key row")
    return attention(q, kv, kv, d_k)


def multi_head_cross_attention(q, kv, params):
    """Split-project-attend-concat-project attention of ``q`` over ``kv``.

    ``params`` is a :class:`MultiHeadParams`; the number of heads is the number
    of per-head query maps.
    """
    heads = params.heads
    model_dim = _shape(q)[1]
    if heads < 1 or model_dim % heads:
        raise ConfigError(f"model dim {model_dim} is not divisible by {heads} heads")
    head_dim = model_dim // heads
    outs = []
    for h in range(heads):
        qh = linear(q, params.q_proj[h])
        kh = linear(kv, params.k_proj[h])
        vh = linear(kv, params.v_proj[h])
        if _shape(qh)[1] != head_dim or _shape(kh)[1] != head_dim:
            raise ConfigError(f"head {h} projects to width {_shape(qh)[1]}, expected {head_dim}")
        outs.append(attention(qh, kh, vh, head_dim))
    merged = outs[0] if heads == 1 else concat_cols(outs)
    return linear(merged, params.out_proj)
