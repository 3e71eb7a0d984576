"""Finite-difference verification of every differentiable operation in the package."""
from __future__ import annotations

import numpy as np

from ..cma import AbstractTokens, CmaParams, cma_forward
from ..numerics import (
    LinearMap,
    MultiHeadParams,
    check_gradients,
    cross_attention,
    cross_entropy,
    layer_norm,
    linear,
    mul,
    multi_head_cross_attention,
    softmax_rows,
    total,
)
from ..tmm import TmmParams, tmm_forward

FD_STEP = 1e-5
TOLERANCE = 1e-6


def _u(rng, *shape):
    return rng.uniform(-1.0, 1.0, shape)


def _projected(out, r):
    return total(mul(out, r))


def cases(seed: int):
    """``(name, fn, params)`` triples with inputs drawn uniformly from [-1, 1]."""
    rng = np.random.default_rng(seed)
    d = 4

    r_lin = _u(rng, 3, 5)
    lin = {"x": _u(rng, 3, 4), "map": LinearMap(_u(rng, 5, 4), _u(rng, 5))}
    yield "linear", lambda p: _projected(linear(p["x"], p["map"]), r_lin), lin

    r_sm = _u(rng, 3, 5)
    yield "softmax", lambda p: _projected(softmax_rows(p["x"]), r_sm), {"x": _u(rng, 3, 5)}

    r_ln = _u(rng, 3, 6)
    ln = {"x": _u(rng, 3, 6), "gamma": _u(rng, 6), "beta": _u(rng, 6)}
    yield "layer_norm", lambda p: _projected(layer_norm(p["x"], 1e-5, p["gamma"], p["beta"]), r_ln), ln

    r_xa = _u(rng, 3, d)
    xa = {"q": _u(rng, 3, d), "kv": _u(rng, 5, d)}
    yield "cross_attention", lambda p: _projected(cross_attention(p["q"], p["kv"], d), r_xa), xa

    mh = MultiHeadParams(
        tuple(LinearMap(_u(rng, 2, d), _u(rng, 2)) for _ in range(2)),
        tuple(LinearMap(_u(rng, 2, 5), _u(rng, 2)) for _ in range(2)),
        tuple(LinearMap(_u(rng, 2, 5), _u(rng, 2)) for _ in range(2)),
        LinearMap(_u(rng, d, d), _u(rng, d)),
    )
    r_mh = _u(rng, 3, d)
    mha = {"q": _u(rng, 3, d), "kv": _u(rng, 4, 5), "params": mh}
    yield ("multi_head_attention",
           lambda p: _projected(multi_head_cross_attention(p["q"], p["kv"], p["params"]), r_mh), mha)

    tmm_params = TmmParams(
        LinearMap(_u(rng, d, 5), _u(rng, d)),
        LinearMap(_u(rng, d, 3), _u(rng, d)),
        LinearMap(_u(rng, d, 6), _u(rng, d)),
        LinearMap(_u(rng, 3, 4)),
    )
    r_tmm = _u(rng, 2, d)
    tmm = {"params": tmm_params, "f_i": _u(rng, 2, d), "q": _u(rng, 3, 4),
           "raw": [_u(rng, 3, 5), _u(rng, 2, 3), _u(rng, 4, 6)]}
    yield ("tmm", lambda p: _projected(tmm_forward(p["f_i"], *p["raw"], p["q"], p["params"]).fused, r_tmm),
           tmm)

    cma_params = CmaParams(MultiHeadParams(
        tuple(LinearMap(_u(rng, 2, d)) for _ in range(2)),
        tuple(LinearMap(_u(rng, 2, 5)) for _ in range(2)),
        tuple(LinearMap(_u(rng, 2, 5)) for _ in range(2)),
        LinearMap(_u(rng, d, d)),
    ))
    r_cma = _u(rng, 3, d)
    cma = {"tokens": AbstractTokens(_u(rng, 3, d)), "params": cma_params,
           "q": _u(rng, 2, 5), "fused": _u(rng, 4, d)}
    yield ("cma", lambda p: _projected(cma_forward(p["tokens"], p["q"], p["fused"], p["params"]), r_cma),
           cma)

    target = int(rng.integers(6))
    yield "cross_entropy", lambda p: cross_entropy(p["logits"], target), {"logits": _u(rng, 1, 6)}


def run_suite(seed: int, h: float = FD_STEP):
    return [check_gradients(fn, params, h=h, name=name) for name, fn, params in cases(seed)]
