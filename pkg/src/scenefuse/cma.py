"""Learnable abstract tokens that read the question, then summarise the fused scene."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, ValidationError
from .numerics import (
    LN_EPS,
    MultiHeadParams,
    add,
    cross_attention,
    layer_norm,
    multi_head_cross_attention,
    value_of,
)

TOKEN_INIT_STD = 0.02


@dataclass(frozen=True)
class AbstractTokens:
    a: np.ndarray

    def __post_init__(self):
        shape = np.shape(value_of(self.a))
        if len(shape) != 2 or shape[0] < 1:
            raise ValidationError(f"abstract tokens need shape (K>=1, D), got {shape}")

    @property
    def count(self) -> int:
        return int(np.shape(value_of(self.a))[0])

    @classmethod
    def init(cls, rng, count: int, dim: int, std: float = TOKEN_INIT_STD):
        return cls(rng.normal(0.0, std, size=(count, dim)))


@dataclass(frozen=True)
class CmaParams:
    stage1: MultiHeadParams
    ln_gamma: np.ndarray | None = None
    ln_beta: np.ndarray | None = None
    ln_eps: float = LN_EPS

    @classmethod
    def init(cls, rng, dim: int, question_dim: int, heads: int = 2, affine=False, ln_eps=LN_EPS):
        return cls(
            MultiHeadParams.random(rng, dim, question_dim, heads),
            np.ones(dim) if affine else None,
            np.zeros(dim) if affine else None,
            ln_eps,
        )


def absorb_question(tokens: AbstractTokens, f_question, params: CmaParams):
    """Tokens attend to the question (multi-head), then residual and layer norm."""
    a = tokens.a
    attended = multi_head_cross_attention(a, f_question, params.stage1)
    return layer_norm(add(a, attended), params.ln_eps, params.ln_gamma, params.ln_beta)


def abstract_scene(q_a, fused, params: CmaParams | None = None):
    """Question-aware tokens query the fused features; always returns K rows."""
    qs, fs = np.shape(value_of(q_a)), np.shape(value_of(fused))
    if qs[1] != fs[1]:
        raise ShapeError(f"abstract tokens width {qs[1]} does not match fused width {fs[1]}")
    return cross_attention(q_a, fused, qs[1])


def cma_forward(tokens: AbstractTokens, f_question, fused, params: CmaParams):
    return abstract_scene(absorb_question(tokens, f_question, params), fused, params)
