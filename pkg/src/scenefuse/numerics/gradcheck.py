"""Central finite differences and analytic-vs-numeric gradient comparison."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .tape import Tape, Var
from .tree import leaves, replace_leaf, track

# Denominator floor for the relative error. Central differences at h=1e-5 carry
# ~1e-11 absolute round-off, so gradient entries below this scale are compared
# in absolute terms instead of blowing up the ratio.
REL_ERROR_FLOOR = 1e-4


def finite_diff(f, at, h: float = 1e-5) -> np.ndarray:
    """Central-difference gradient of scalar ``f`` at ``at``, entry by entry."""
    x = np.array(at, dtype=np.float64, copy=True)
    grad = np.zeros_like(x)
    flat_x = x.reshape(-1)
    flat_g = grad.reshape(-1)
    for i in range(flat_x.size):
        orig = flat_x[i]
        flat_x[i] = orig + h
        fp = float(f(x))
        flat_x[i] = orig - h
        fm = float(f(x))
        flat_x[i] = orig
        flat_g[i] = (fp - fm) / (2.0 * h)
    return grad


def relative_error(analytic, numeric, floor: float = REL_ERROR_FLOOR) -> np.ndarray:
    a = np.asarray(analytic, dtype=np.float64)
    n = np.asarray(numeric, dtype=np.float64)
    return np.abs(a - n) / np.maximum(np.maximum(np.abs(a), np.abs(n)), floor)


@dataclass
class GradcheckResult:
    name: str
    max_rel_error: float
    per_leaf: dict[str, float] = field(default_factory=dict)

    def passed(self, tol: float = 1e-6) -> bool:
        return self.max_rel_error < tol


def check_gradients(fn, params, h: float = 1e-5, name: str = "") -> GradcheckResult:
    """Compare tape gradients of ``fn(params)`` against :func:`finite_diff`.

    ``fn`` maps a parameter tree to a scalar and must work both on tracked
    and on plain-array trees.
    """
    tape = Tape()
    tracked = track(tape, params)
    out = fn(tracked)
    if not isinstance(out, Var):
        # output does not depend on any parameter
        grads = {path: np.zeros_like(v) for path, v in leaves(params).items()}
    else:
        tape.backward(out)
        grads = {path: tape.grad(v) for path, v in leaves(tracked).items()}

    per_leaf = {}
    for path, value in leaves(params).items():
        numeric = finite_diff(lambda x: fn(replace_leaf(params, path, x)), value, h)
        err = relative_error(grads[path], numeric)
        per_leaf[path] = float(err.max()) if err.size else 0.0
    worst = max(per_leaf.values(), default=0.0)
    return GradcheckResult(name, worst, per_leaf)
