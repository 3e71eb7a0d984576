"""Decoder input layout with segment boundary markers.

Rows: ``[Q] question [/Q] [ABS] abstraction [/ABS] [IMG] fused image [/IMG]``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ShapeError
from ..numerics import value_of

MARKERS = ("[Q]", "[/Q]", "[ABS]", "[/ABS]", "[IMG]", "[/IMG]")
SEGMENTS = ("question", "abstract", "image")


@dataclass(frozen=True)
class MarkerEmbeddings:
    table: dict

    @classmethod
    def init(cls, rng, dim: int, std: float = 0.02):
        return cls({name: rng.normal(0.0, std, dim) for name in MARKERS})

    def __getitem__(self, name):
        return self.table[name]


@dataclass(frozen=True)
class AssembledSequence:
    rows: np.ndarray
    is_marker: np.ndarray
    segments: dict  # segment name -> (start, stop) of its content rows
    labels: tuple  # marker name or segment name per row

    def __len__(self):
        return len(self.rows)


def assemble_sequence(f_question, f_abstract, e_fused, markers: MarkerEmbeddings) -> AssembledSequence:
    parts = [np.asarray(value_of(x), dtype=np.float64) for x in (f_question, f_abstract, e_fused)]
    widths = {p.shape[1] for p in parts} | {len(markers[m]) for m in MARKERS}
    if len(widths) != 1:
        raise ShapeError(f"sequence parts disagree on width: {[p.shape for p in parts]}")
    rows, flags, labels, segments = [], [], [], {}
    for i, (name, content) in enumerate(zip(SEGMENTS, parts)):
        open_m, close_m = MARKERS[2 * i], MARKERS[2 * i + 1]
        rows.append(markers[open_m][None, :])
        flags.append(True)
        labels.append(open_m)
        start = sum(len(r) for r in rows)
        rows.append(content)
        flags.extend([False] * len(content))
        labels.extend([name] * len(content))
        segments[name] = (start, start + len(content))
        rows.append(markers[close_m][None, :])
        flags.append(True)
        labels.append(close_m)
    return AssembledSequence(np.vstack(rows), np.array(flags), segments, tuple(labels))
