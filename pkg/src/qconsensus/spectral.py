"""Eigenvalues and matrix norms of symmetric consensus matrices.

Eigenvalues come from a cyclic Jacobi solver so the package does not depend on
LAPACK for the quantities that drive the quantizer design; ``numpy.linalg`` is
only used in the tests as a reference.
"""
from dataclasses import dataclass

import numpy as np

from qconsensus.errors import NotSymmetric

SYMMETRY_TOL = 1e-12
EIGEN_TOL = 1e-9
ORACLE_TOL = 1e-6


def _check_symmetric(a, tol=SYMMETRY_TOL):
    a = np.asarray(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise NotSymmetric(f"expected a square matrix, got shape {a.shape}")
    asym = np.max(np.abs(a - a.T)) if a.size else 0.0
    if asym > tol:
        raise NotSymmetric(f"matrix asymmetry {asym:.3e} exceeds {tol:.1e}")
    return a


def symmetric_eigenvalues(a, tol=1e-15, max_sweeps=100):
    """All eigenvalues of a symmetric matrix, ascending.

    Cyclic Jacobi: each sweep annihilates every off-diagonal entry once with a
    plane rotation; sweeps stop once the off-diagonal Frobenius mass is below
    ``tol`` relative to the whole matrix.
    """
    a = _check_symmetric(a)
    a = 0.5 * (a + a.T)
    m = a.shape[0]
    if m == 0:
        return np.empty(0)
    total = np.linalg.norm(a)
    if total == 0.0:
        return np.zeros(m)
    for _ in range(max_sweeps):
        off = np.sqrt(max(np.sum(a * a) - np.sum(np.diag(a) ** 2), 0.0))
        if off <= tol * total:
            break
        for p in range(m - 1):
            for q in range(p + 1, m):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if theta == 0.0:
                    t = 1.0
                elif abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                ap = a[:, p].copy()
                aq = a[:, q].copy()
                a[:, p] = c * ap - s * aq
                a[:, q] = s * ap + c * aq
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                a[p, q] = a[q, p] = 0.0
    return np.sort(np.diag(a).copy())


@dataclass(frozen=True)
class SpectralSummary:
    eigenvalues: np.ndarray
    lambda2: float
    lambda_min: float


def spectral_summary(w):
    """lambda2 = rho(W - 11^T/m) and the smallest eigenvalue of ``w``."""
    w = np.asarray(getattr(w, "w", w), dtype=float)
    m = w.shape[0]
    eig = symmetric_eigenvalues(w)
    deflated = symmetric_eigenvalues(w - np.full((m, m), 1.0 / m))
    lambda2 = float(np.max(np.abs(deflated)))
    eig.setflags(write=False)
    return SpectralSummary(eigenvalues=eig, lambda2=lambda2, lambda_min=float(eig[0]))


def _eigenvalues_of(w):
    summary = getattr(w, "summary", None)
    lam = summary.eigenvalues if summary is not None else symmetric_eigenvalues(w)
    # the consensus eigenvalue is exactly 1; rounding would leave |lam - 1| ~ 1e-16
    # and a spurious floor under ||W^s (W - I)||
    return np.where(np.abs(lam - 1.0) < EIGEN_TOL, 1.0, lam)


def norm_ws_wi(w, s):
    """Spectral norm of W^s (W - I) for symmetric W."""
    if s < 0:
        raise ValueError("s must be nonnegative")
    lam = _eigenvalues_of(w)
    return float(np.max(np.abs(lam ** s * (lam - 1.0))))


def norms_ws_wi(w, count):
    """``[norm_ws_wi(w, s) for s in range(count)]`` from one eigendecomposition."""
    lam = _eigenvalues_of(w)
    out = np.empty(count)
    power = np.ones_like(lam)
    for s in range(count):
        out[s] = np.max(np.abs(power * (lam - 1.0)))
        power = power * lam
    return out


def power_iteration_norm(a, iters=2000, seed=0, tol=0.0):
    """Estimate ||a||_2 by power iteration on a^T a from a random unit vector."""
    a = np.asarray(a, dtype=float)
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(a.shape[1])
    nv = np.linalg.norm(v)
    if nv == 0.0:
        return 0.0
    v /= nv
    ata = a.T @ a
    est = 0.0
    for _ in range(max(1, iters)):
        u = ata @ v
        nu = np.linalg.norm(u)
        if nu == 0.0:
            return 0.0
        v = u / nu
        prev, est = est, nu
        if tol and abs(est - prev) <= tol * est:
            break
    return float(np.linalg.norm(a @ v))
