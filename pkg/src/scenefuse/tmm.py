"""Question-gated fusion of LiDAR, occupancy and description features into image tokens.

The question is mean-pooled, mapped to three gate logits and soft-maxed into
fusion weights. Each auxiliary modality is read by the image tokens through
single-head cross-attention; the three results are mixed with the gate
weights, layer-normalised and added back onto the image features.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ShapeError, UsageError, ValidationError
from .numerics import (
    LN_EPS,
    LinearMap,
    add,
    cross_attention,
    layer_norm,
    linear,
    mean_rows,
    softmax_rows,
    value_of,
    weighted_sum,
)

MODALITIES = ("lidar", "occ", "desc")


@dataclass(frozen=True)
class ModalityBundle:
    """Features for one sample; lidar/occ/desc already projected to the image width."""

    f_image: np.ndarray
    f_lidar: np.ndarray
    f_occ: np.ndarray
    f_desc: np.ndarray
    f_question: np.ndarray

    def validate(self):
        d = np.shape(value_of(self.f_image))[1]
        for name in MODALITIES:
            shape = np.shape(value_of(getattr(self, f"f_{name}")))
            if len(shape) != 2 or shape[1] != d:
                raise ShapeError(f"{name} features have shape {shape}; expected width {d}")
        if np.shape(value_of(self.f_question))[0] < 1:
            raise UsageError("question has no tokens")
        return self


@dataclass(frozen=True)
class FusionWeights:
    omega: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.omega, dtype=np.float64).reshape(-1)
        if w.shape != (3,):
            raise ValidationError(f"fusion weights need 3 entries, got {w.shape}")
        if (w < 0).any() or abs(w.sum() - 1.0) > 1e-12:
            raise ValidationError(f"fusion weights {w} are not on the simplex")
        object.__setattr__(self, "omega", w)

    def as_dict(self):
        return dict(zip(MODALITIES, map(float, self.omega)))

    @property
    def lidar(self):
        return float(self.omega[0])

    @property
    def occ(self):
        return float(self.omega[1])

    @property
    def desc(self):
        return float(self.omega[2])


@dataclass(frozen=True)
class TmmParams:
    proj_lidar: LinearMap
    proj_occ: LinearMap
    proj_desc: LinearMap
    weight_predictor: LinearMap
    question_proj: LinearMap | None = None
    ln_gamma: np.ndarray | None = None
    ln_beta: np.ndarray | None = None
    ln_eps: float = LN_EPS

    def __post_init__(self):
        if self.weight_predictor.out_dim != 3:
            raise ConfigError(f"weight predictor must emit 3 logits, emits {self.weight_predictor.out_dim}")

    @classmethod
    def init(cls, rng, dim, lidar_dim, occ_dim, desc_dim, question_dim,
             gate_dim=None, predictor_bias=False, affine=False, ln_eps=LN_EPS):
        """Random projections; the gate starts at zero so initial weights are uniform."""
        question_proj = None
        if gate_dim is not None and gate_dim != question_dim:
            question_proj = LinearMap.random(rng, question_dim, gate_dim)
        gate_in = question_dim if question_proj is None else gate_dim
        return cls(
            proj_lidar=LinearMap.random(rng, lidar_dim, dim),
            proj_occ=LinearMap.random(rng, occ_dim, dim),
            proj_desc=LinearMap.random(rng, desc_dim, dim),
            weight_predictor=LinearMap.zeros(gate_in, 3, bias=predictor_bias),
            question_proj=question_proj,
            ln_gamma=np.ones(dim) if affine else None,
            ln_beta=np.zeros(dim) if affine else None,
            ln_eps=ln_eps,
        )


@dataclass
class FusionResult:
    fused: object
    omega: object
    mixed: object
    e_lidar: object = None
    e_occ: object = None
    e_desc: object = None

    @property
    def weights(self) -> FusionWeights:
        return FusionWeights(value_of(self.omega))

    @property
    def per_modality(self):
        return (self.e_lidar, self.e_occ, self.e_desc)


def project_modalities(raw_lidar, raw_occ, raw_desc, params: TmmParams, active=(True, True, True)):
    """Map each raw modality to the shared width; inactive ones come back as ``None``."""
    out = []
    for name, raw, lin, on in zip(MODALITIES, (raw_lidar, raw_occ, raw_desc),
                                  (params.proj_lidar, params.proj_occ, params.proj_desc), active):
        if not on:
            out.append(None)
            continue
        shape = np.shape(value_of(raw))
        if len(shape) != 2 or shape[1] != lin.in_dim:
            raise ConfigError(f"{name} features have shape {shape}; its projection expects {lin.in_dim} columns")
        out.append(linear(raw, lin))
    return tuple(out)


def pool_question(f_question):
    """Average the question tokens into a single (1, D_Q) row."""
    shape = np.shape(value_of(f_question))
    if len(shape) != 2 or shape[0] < 1:
        raise UsageError(f"question features need at least one token, got shape {shape}")
    return mean_rows(f_question)


def gate(pooled, params: TmmParams, active=(True, True, True)):
    """Fusion weights as a (1, 3) row; inactive modalities are masked out before the softmax."""
    if params.question_proj is not None:
        pooled = linear(pooled, params.question_proj)
    width = np.shape(value_of(pooled))[-1]
    if width != params.weight_predictor.in_dim:
        raise ConfigError(f"pooled question has width {width}; weight predictor expects "
                          f"{params.weight_predictor.in_dim}")
    logits = linear(pooled, params.weight_predictor)
    return softmax_rows(logits, mask=np.asarray(active, dtype=bool)[None, :])


def predict_weights(pooled, params: TmmParams) -> FusionWeights:
    pooled = np.asarray(value_of(pooled), dtype=np.float64).reshape(1, -1)
    return FusionWeights(gate(pooled, params)[0])


def modulated_fusion(bundle: ModalityBundle, params: TmmParams, active=(True, True, True),
                     gated: bool = True, omega_override=None) -> FusionResult:
    """Gated residual fusion of projected modality features into the image tokens.

    ``active`` switches modalities off (their features are never read).
    ``gated=False`` replaces the learned gate by a plain mean over the active
    modalities. ``omega_override`` pins the weights directly.
    """
    bundle.validate()
    f_i = bundle.f_image
    d = np.shape(value_of(f_i))[1]
    active = tuple(bool(a) for a in active)

    if omega_override is not None:
        omega = np.asarray(omega_override, dtype=np.float64).reshape(1, 3)
    elif gated:
        omega = gate(pool_question(bundle.f_question), params, active)
    else:
        n_on = sum(active)
        omega = np.array([[a / n_on if n_on else 0.0 for a in active]])

    feats = (bundle.f_lidar, bundle.f_occ, bundle.f_desc)
    per_mod = [cross_attention(f_i, m, d) if on else None for m, on in zip(feats, active)]
    if any(active):
        mixed = weighted_sum(omega, per_mod)
    else:
        mixed = np.zeros(np.shape(value_of(f_i)))
    normed = layer_norm(mixed, params.ln_eps, params.ln_gamma, params.ln_beta)
    return FusionResult(add(f_i, normed), omega, mixed, *per_mod)


def tmm_forward(f_image, raw_lidar, raw_occ, raw_desc, f_question, params: TmmParams,
                active=(True, True, True), gated: bool = True, omega_override=None) -> FusionResult:
    """Project raw modality features, then run :func:`modulated_fusion`."""
    proj = project_modalities(raw_lidar, raw_occ, raw_desc, params, active)
    width = np.shape(value_of(f_image))[1]
    placeholder = np.zeros((1, width))
    bundle = ModalityBundle(f_image, *(placeholder if p is None else p for p in proj), f_question)
    return modulated_fusion(bundle, params, active, gated, omega_override)
