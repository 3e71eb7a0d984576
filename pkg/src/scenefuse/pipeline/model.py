"""Toy answer model: gated fusion, abstract tokens and a linear classifier."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..cma import AbstractTokens, CmaParams, cma_forward
from ..errors import ConfigError
from ..numerics import LinearMap, cross_entropy, leaves, linear, map_leaves, mean_rows
from ..tmm import TmmParams, tmm_forward
from .config import RunConfig


@dataclass(frozen=True)
class ToyParams:
    tmm: TmmParams
    tokens: AbstractTokens
    cma: CmaParams
    decoder: LinearMap


@dataclass
class Forward:
    logits: object
    omega: object
    fused: object
    abstract: object | None


def init_params(config: RunConfig) -> ToyParams:
    rng = np.random.default_rng([config.seed, 0])
    d = config.dims
    tmm = TmmParams.init(rng, d.model, d.lidar, d.occ, d.desc, d.question,
                         predictor_bias=config.gate_bias, affine=config.ln_affine, ln_eps=config.ln_eps)
    tokens = AbstractTokens.init(rng, config.cma.num_tokens, d.model)
    cma = CmaParams.init(rng, d.model, d.question, heads=config.cma.heads,
                         affine=config.ln_affine, ln_eps=config.ln_eps)
    decoder = LinearMap.random(rng, d.model, d.classes, bias=True)
    return ToyParams(tmm, tokens, cma, decoder)


def forward(params: ToyParams, sample, config: RunConfig, active=None) -> Forward:
    """Logits for one sample. ``active`` overrides the configured modality toggles."""
    active = config.modalities.as_tuple() if active is None else tuple(active)
    res = tmm_forward(sample.f_image, *sample.raw, sample.f_question, params.tmm,
                      active=active, gated=config.modules.tmm)
    if config.modules.cma:
        f_a = cma_forward(params.tokens, sample.f_question, res.fused, params.cma)
        pooled = mean_rows(f_a)
    else:
        f_a = None
        pooled = mean_rows(res.fused)
    return Forward(linear(pooled, params.decoder), res.omega, res.fused, f_a)


def loss(params: ToyParams, sample, config: RunConfig, active=None):
    return cross_entropy(forward(params, sample, config, active).logits, sample.label)


def save_params(path, params: ToyParams) -> None:
    # fixed file handle so savez does not append ".npz" behind our back
    with open(path, "wb") as fh:
        np.savez(fh, **leaves(params))


def load_params(path, config: RunConfig) -> ToyParams:
    """Parameters saved by :func:`save_params`, checked against the shapes ``config`` implies."""
    template = init_params(config)
    with np.load(path) as data:
        stored = {k: data[k] for k in data.files}
    expected = leaves(template)
    if set(stored) != set(expected):
        missing = sorted(set(expected) - set(stored))
        extra = sorted(set(stored) - set(expected))
        raise ConfigError(f"{path}: parameter names differ from config (missing {missing}, extra {extra})")

    def pick(p, leaf):
        if stored[p].shape != leaf.shape:
            raise ConfigError(f"{path}: {p} has shape {stored[p].shape}, config implies {leaf.shape}")
        return stored[p].astype(np.float64)

    return map_leaves(pick, template)
