"""Symmetric 3x3 eigen-solvers: closed form with a Jacobi-rotation fallback."""
from __future__ import annotations

import math

import numpy as np

from ..errors import ValidationError

GAP_TOL = 1e-12
SYMMETRY_TOL = 1e-9


def canonical_sign(v: np.ndarray) -> np.ndarray:
    """Flip ``v`` so its largest-magnitude component (first on ties) is positive."""
    idx = int(np.argmax(np.abs(v)))
    # adding 0.0 turns -0.0 into +0.0 so written files do not show signed zeros
    return (-v if v[idx] < 0 else v) + 0.0


def _check_symmetric(c) -> np.ndarray:
    c = np.asarray(c, dtype=np.float64)
    if c.shape != (3, 3):
        raise ValidationError(f"expected a 3x3 matrix, got shape {c.shape}")
    if not np.isfinite(c).all():
        raise ValidationError("matrix has non-finite entries")
    if np.abs(c - c.T).max() > SYMMETRY_TOL:
        raise ValidationError("matrix is not symmetric")
    return 0.5 * (c + c.T)


def jacobi_eigh(c, max_sweeps: int = 50):
    """Cyclic Jacobi rotations. Returns ascending eigenvalues and column eigenvectors."""
    a = np.array(c, dtype=np.float64)
    v = np.eye(3)
    for _ in range(max_sweeps):
        off = a[0, 1] ** 2 + a[0, 2] ** 2 + a[1, 2] ** 2
        if off == 0.0 or off < 1e-40 * max(1.0, float((a * a).sum())):
            break
        for p, q in ((0, 1), (0, 2), (1, 2)):
            if a[p, q] == 0.0:
                continue
            theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
            t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
            cs = 1.0 / math.sqrt(t * t + 1.0)
            sn = t * cs
            rot = np.eye(3)
            rot[p, p] = rot[q, q] = cs
            rot[p, q] = sn
            rot[q, p] = -sn
            a = rot.T @ a @ rot
            a[p, q] = a[q, p] = 0.0
            v = v @ rot
    evals = np.diag(a).copy()
    order = np.argsort(evals, kind="stable")
    return evals[order], v[:, order]


def closed_form_eigenvalues(c: np.ndarray) -> np.ndarray:
    """Ascending eigenvalues via the trigonometric solution of the characteristic cubic."""
    p1 = c[0, 1] ** 2 + c[0, 2] ** 2 + c[1, 2] ** 2
    if p1 == 0.0:
        return np.sort(np.diag(c))
    q = np.trace(c) / 3.0
    p2 = (c[0, 0] - q) ** 2 + (c[1, 1] - q) ** 2 + (c[2, 2] - q) ** 2 + 2.0 * p1
    p = math.sqrt(p2 / 6.0)
    b = (c - q * np.eye(3)) / p
    r = min(1.0, max(-1.0, float(np.linalg.det(b)) / 2.0))
    phi = math.acos(r) / 3.0
    hi = q + 2.0 * p * math.cos(phi)
    lo = q + 2.0 * p * math.cos(phi + 2.0 * math.pi / 3.0)
    return np.array([lo, 3.0 * q - hi - lo, hi])


def _null_vector(m: np.ndarray):
    """Unit vector spanning the null space of a rank-2 symmetric matrix, if well defined."""
    r0, r1, r2 = m
    cands = (np.cross(r0, r1), np.cross(r0, r2), np.cross(r1, r2))
    best = max(cands, key=lambda x: float(x @ x))
    norm = math.sqrt(float(best @ best))
    if norm == 0.0:
        return None
    return best / norm


def eigen3(c):
    """Ascending eigenvalues and the unit eigenvector of the smallest one.

    Uses the closed form unless the two lowest eigenvalues nearly coincide or
    the result fails its residual check, in which case Jacobi rotations take over.
    """
    c = _check_symmetric(c)
    scale = max(1.0, float(np.abs(c).max()))
    tol = 1e-9 * max(1.0, float(np.linalg.norm(c, 2)))
    p1 = c[0, 1] ** 2 + c[0, 2] ** 2 + c[1, 2] ** 2
    if p1 == 0.0:
        d = np.diag(c)
        idx = int(np.argmin(d))  # first index on ties
        v = np.zeros(3)
        v[idx] = 1.0
        return np.sort(d), v
    evals = closed_form_eigenvalues(c)
    if evals[1] - evals[0] >= GAP_TOL * scale:
        v = _null_vector(c - evals[0] * np.eye(3))
        if v is not None:
            lam = float(v @ c @ v)
            if np.linalg.norm(c @ v - lam * v) < 0.1 * tol:
                evals = evals.copy()
                evals[0] = lam
                return evals, canonical_sign(v)
    evals, vecs = jacobi_eigh(c)
    return evals, canonical_sign(vecs[:, 0])


def smallest_eigenvector(c):
    """``(lambda_min, v)`` for a symmetric 3x3 matrix; ``v`` is unit and sign-canonical."""
    evals, v = eigen3(c)
    return float(evals[0]), v
