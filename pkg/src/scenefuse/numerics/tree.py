"""Walk nested parameter containers (dataclasses, tuples, lists, dicts)."""
from __future__ import annotations

import dataclasses

import numpy as np

from .tape import Var


def _is_leaf(x):
    return isinstance(x, (np.ndarray, Var))


def map_leaves(fn, obj, path=""):
    """Rebuild ``obj`` with every array leaf replaced by ``fn(path, leaf)``."""
    if _is_leaf(obj):
        return fn(path, obj)
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        changes = {
            f.name: map_leaves(fn, getattr(obj, f.name), f"{path}.{f.name}" if path else f.name)
            for f in dataclasses.fields(obj)
        }
        return dataclasses.replace(obj, **changes)
    if isinstance(obj, (list, tuple)):
        return type(obj)(map_leaves(fn, v, f"{path}[{i}]") for i, v in enumerate(obj))
    if isinstance(obj, dict):
        return {k: map_leaves(fn, v, f"{path}.{k}" if path else str(k)) for k, v in obj.items()}
    return obj


def leaves(obj) -> dict[str, np.ndarray]:
    """Flat ``{path: leaf}`` view, in a deterministic traversal order."""
    out = {}

    def collect(path, leaf):
        out[path] = leaf
        return leaf

    map_leaves(collect, obj)
    return out


def replace_leaf(obj, target: str, value):
    return map_leaves(lambda p, leaf: value if p == target else leaf, obj)


def track(tape, obj):
    """Register every array leaf of ``obj`` on ``tape``."""
    return map_leaves(lambda p, leaf: tape.var(leaf, name=p), obj)


def untrack(obj):
    return map_leaves(lambda p, leaf: leaf.value if isinstance(leaf, Var) else leaf, obj)
