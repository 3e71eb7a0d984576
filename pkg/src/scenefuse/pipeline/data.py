"""Synthetic routing task.

Every sample carries a class label in each of the three auxiliary modalities,
but only one of them (the *relevant* modality) carries the true answer; the
other two carry independent distractor labels. The question announces which
modality is relevant through a one-hot channel. Answering correctly therefore
requires routing on the question.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import RunConfig

QUERY_TYPES = ("lidar", "occ", "desc")


@dataclass(frozen=True)
class Sample:
    f_image: np.ndarray
    raw: tuple  # (lidar, occ, desc) before projection
    f_question: np.ndarray
    query_type: int
    label: int


def prototypes(config: RunConfig) -> list[np.ndarray]:
    """Per-modality class prototypes, fixed by the config seed."""
    rng = np.random.default_rng([config.seed, 1])
    d = config.dims
    scale = config.data.prototype_scale
    return [rng.normal(0.0, scale, (d.classes, width)) for width in (d.lidar, d.occ, d.desc)]


def make_dataset(config: RunConfig, n: int, split: str) -> list[Sample]:
    salt = {"train": 2, "test": 3}.get(split, 4)
    rng = np.random.default_rng([config.seed, salt])
    protos = prototypes(config)
    d, dc = config.dims, config.data
    out = []
    for _ in range(n):
        qtype = int(rng.integers(3))
        label = int(rng.integers(d.classes))
        raw = []
        for m, proto in enumerate(protos):
            shown = label if m == qtype else int(rng.integers(d.classes))
            noise = rng.normal(0.0, dc.feature_noise, (d.modality_tokens, proto.shape[1]))
            raw.append(proto[shown] + noise)
        question = rng.normal(0.0, dc.question_noise, (d.question_tokens, d.question))
        question[:, qtype] += 1.0
        image = rng.normal(0.0, dc.image_noise, (d.image_tokens, d.model))
        out.append(Sample(image, tuple(raw), question, qtype, label))
    return out
