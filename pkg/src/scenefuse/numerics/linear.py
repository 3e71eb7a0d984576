"""Parameter containers for affine maps and multi-head attention."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LinearMap:
    """Affine map ``x -> x W^T + b`` with ``W`` of shape (out, in)."""

    weight: np.ndarray
    bias: np.ndarray | None = None

    @property
    def in_dim(self) -> int:
        return int(np.shape(self.weight)[1])

    @property
    def out_dim(self) -> int:
        return int(np.shape(self.weight)[0])

    @classmethod
    def identity(cls, dim: int) -> "LinearMap":
        return cls(np.eye(dim))

    @classmethod
    def zeros(cls, in_dim: int, out_dim: int, bias: bool = False) -> "LinearMap":
        return cls(np.zeros((out_dim, in_dim)), np.zeros(out_dim) if bias else None)

    @classmethod
    def random(cls, rng: np.random.Generator, in_dim: int, out_dim: int,
               bias: bool = False, std: float | None = None) -> "LinearMap":
        std = 1.0 / np.sqrt(in_dim) if std is None else std
        w = rng.normal(0.0, std, size=(out_dim, in_dim))
        return cls(w, np.zeros(out_dim) if bias else None)


@dataclass(frozen=True)
class MultiHeadParams:
    """Per-head query/key/value maps plus the output map after concatenation."""

    q_proj: tuple[LinearMap, ...]
    k_proj: tuple[LinearMap, ...]
    v_proj: tuple[LinearMap, ...]
    out_proj: LinearMap

    @property
    def heads(self) -> int:
        return len(self.q_proj)

    @classmethod
    def identity(cls, dim: int) -> "MultiHeadParams":
        eye = LinearMap.identity(dim)
        return cls((eye,), (eye,), (eye,), eye)

    @classmethod
    def random(cls, rng: np.random.Generator, model_dim: int, kv_dim: int, heads: int,
               bias: bool = False) -> "MultiHeadParams":
        from ..errors import ConfigError
        if heads < 1 or model_dim % heads:
            raise ConfigError(f"model dim {model_dim} is not divisible by {heads} heads")
        hd = model_dim // heads
        q = tuple(LinearMap.random(rng, model_dim, hd, bias) for _ in range(heads))
        k = tuple(LinearMap.random(rng, kv_dim, hd, bias) for _ in range(heads))
        v = tuple(LinearMap.random(rng, kv_dim, hd, bias) for _ in range(heads))
        return cls(q, k, v, LinearMap.random(rng, model_dim, model_dim, bias))
