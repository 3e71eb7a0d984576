"""Reverse-mode gradient tape.

A :class:`Tape` records every operation applied to its :class:`Var` nodes
together with a closure mapping the output cotangent to input cotangents.
Operations on plain ``numpy`` arrays are never recorded, so the same op
functions serve as the forward-only path used by finite differences.
"""
from __future__ import annotations

import numpy as np

from ..errors import UsageError


class Var:
    """A value tracked by a tape."""

    __slots__ = ("value", "tape", "parents", "backward_fn", "name")
    __array_priority__ = 1000

    def __init__(self, value, tape, parents=(), backward_fn=None, name=None):
        self.value = value
        self.tape = tape
        self.parents = parents
        self.backward_fn = backward_fn
        self.name = name

    @property
    def shape(self):
        return self.value.shape

    @property
    def ndim(self):
        return self.value.ndim

    def __len__(self):
        return len(self.value)

    def __repr__(self):
        label = f" {self.name!r}" if self.name else ""
        return f"Var{label}(shape={self.value.shape})"

    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __neg__(self):
        from . import ops
        return ops.scale(self, -1.0)

    def __mul__(self, other):
        from . import ops
        if np.isscalar(other):
            return ops.scale(self, float(other))
        return ops.mul(self, other)

    __rmul__ = __mul__

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)

    def __rmatmul__(self, other):
        from . import ops
        return ops.matmul(other, self)

    @property
    def T(self):
        from . import ops
        return ops.transpose(self)


class Tape:
    """Single-owner record of operations; not safe to share across threads."""

    def __init__(self):
        self.nodes: list[Var] = []
        self._grads: dict[int, np.ndarray] = {}

    def __len__(self):
        return len(self.nodes)

    def var(self, value, name=None) -> Var:
        """Register a leaf (an input or parameter we want gradients for)."""
        if isinstance(value, Var):
            raise UsageError("value is already tracked")
        node = Var(np.asarray(value, dtype=np.float64), self, name=name)
        self.nodes.append(node)
        return node

    def record(self, value, parents, backward_fn) -> Var:
        node = Var(value, self, tuple(parents), backward_fn)
        self.nodes.append(node)
        return node

    def backward(self, output: Var) -> "Gradients":
        """Accumulate d(output)/d(node) for every node recorded before ``output``."""
        if not isinstance(output, Var) or output.tape is not self:
            raise UsageError("backward() needs a Var recorded on this tape")
        if output.value.size != 1:
            raise UsageError(f"backward() needs a scalar output, got shape {output.value.shape}")
        grads = {id(output): np.ones_like(output.value)}
        for node in reversed(self.nodes):
            g = grads.get(id(node))
            if g is None or node.backward_fn is None:
                continue
            for parent, pg in zip(node.parents, node.backward_fn(g)):
                if pg is None or not isinstance(parent, Var):
                    continue
                key = id(parent)
                if key in grads:
                    grads[key] = grads[key] + pg
                else:
                    grads[key] = pg
        self._grads = grads
        return Gradients(self)

    def grad(self, node: Var) -> np.ndarray:
        """Gradient from the last backward pass; zeros when ``node`` was not reached."""
        g = self._grads.get(id(node))
        if g is None:
            return np.zeros_like(node.value)
        return g


class Gradients:
    """Read-only view over the gradients of the most recent backward pass."""

    def __init__(self, tape):
        self._tape = tape

    def __getitem__(self, node):
        return self._tape.grad(node)


def value_of(x):
    return x.value if isinstance(x, Var) else x
