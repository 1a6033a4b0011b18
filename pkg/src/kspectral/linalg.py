"""Dense complex linear algebra used by every other module.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``; the
helpers here validate shape/finiteness and provide the few factorizations the
package needs (Hermitian eigendecomposition, LU solve, HPD square root).
"""

from __future__ import annotations

import warnings
from typing import NamedTuple, Sequence

import numpy as np
import scipy.linalg

from .errors import InputError, NoConvergence, NotHermitian, NotPositiveDefinite, Singular

MAX_DIM = 256
JACOBI_SWEEPS = 100
JACOBI_TOL = 1e-14
HERMITIAN_TOL = 1e-12
PIVOT_TOL = 1e-14


class HermitianEigen(NamedTuple):
    values: np.ndarray  # ascending, real
    vectors: np.ndarray  # unitary, eigenvectors in columns


def as_matrix(a, name: str = "matrix", real_ok: bool = False, cap: int = MAX_DIM) -> np.ndarray:
    """Validate ``a`` as a finite square matrix and return a complex copy.

    With ``real_ok`` a real input stays real.
    """
    m = np.array(a)
    m = m.astype(float if real_ok and not np.iscomplexobj(m) else complex)
    if m.ndim == 0:
        m = m.reshape(1, 1)
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] < 1:
        raise InputError(f"{name} must be a non-empty square matrix, got shape {m.shape}")
    if m.shape[0] > cap:
        raise InputError(f"{name} dimension {m.shape[0]} exceeds cap {cap}")
    if not np.all(np.isfinite(m)):
        raise InputError(f"{name} has non-finite entries")
    return m


def fro(a: np.ndarray) -> float:
    return float(np.linalg.norm(a))


def hermitian_eigen(m, method: str = "lapack") -> HermitianEigen:
    """Full spectral decomposition of a Hermitian matrix.

    ``method="jacobi"`` runs cyclic complex Jacobi rotations; ``"lapack"``
    calls ``numpy.linalg.eigh``. Both return ascending eigenvalues.
    """
    m = as_matrix(m)
    scale = fro(m)
    if fro(m - m.conj().T) > HERMITIAN_TOL * max(scale, 1e-300):
        raise NotHermitian("matrix is not Hermitian within tolerance")
    h = 0.5 * (m + m.conj().T)
    if method == "lapack":
        values, vectors = np.linalg.eigh(h)
        return HermitianEigen(values, vectors)
    if method == "jacobi":
        return _jacobi(h, scale)
    raise InputError(f"unknown eigen method {method!r}")


def _jacobi(a: np.ndarray, scale: float) -> HermitianEigen:
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n, dtype=complex)
    threshold = JACOBI_TOL * scale
    for _ in range(JACOBI_SWEEPS):
        off = fro(a - np.diag(np.diag(a)))
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag <= 1e-300:
                    continue
                phase = apq / mag
                theta = (a[q, q].real - a[p, p].real) / (2.0 * mag)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c
                # D = diag(1, conj(phase)) makes the (p, q) entry real, then a real rotation
                u2 = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ u2
                a[idx, :] = u2.conj().T @ a[idx, :]
                a[p, q] = a[q, p] = 0.0
                v[:, idx] = v[:, idx] @ u2
    else:
        off = fro(a - np.diag(np.diag(a)))
        if off > threshold:
            raise NoConvergence(f"Jacobi did not converge in {JACOBI_SWEEPS} sweeps")
    values = np.diag(a).real.copy()
    order = np.argsort(values, kind="stable")
    return HermitianEigen(values[order], v[:, order])


def solve(a, b) -> np.ndarray:
    """Solve ``a @ x = b`` by partial-pivoted LU.

    Raises Singular when a pivot falls below ``1e-14 * ||a||``. Real inputs
    give a real result. Boundary-integral systems exceed the operator size
    cap, so only a looser cap applies here.
    """
    a = as_matrix(a, "A", real_ok=True, cap=8192)
    b = np.asarray(b)
    if np.iscomplexobj(b) or np.iscomplexobj(a):
        a, b = a.astype(complex), b.astype(complex)
    else:
        b = b.astype(float)
    if b.shape[0] != a.shape[0]:
        raise InputError("right-hand side is not conformable")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)  # reported below as Singular
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    pivots = np.abs(np.diag(lu))
    if pivots.min() < PIVOT_TOL * fro(a):
        raise Singular(f"pivot {pivots.min():.3e} below threshold")
    return scipy.linalg.lu_solve((lu, piv), b, check_finite=False)


def inv(a) -> np.ndarray:
    a = as_matrix(a)
    return solve(a, np.eye(a.shape[0], dtype=complex))


def spectral_norm(a) -> float:
    """Largest singular value, via the top eigenvalue of ``a* a``."""
    a = np.asarray(a, dtype=complex)
    g = a.conj().T @ a
    top = np.linalg.eigvalsh(0.5 * (g + g.conj().T))[-1]
    return float(np.sqrt(max(top, 0.0)))


def matrix_sqrt_hpd(h) -> np.ndarray:
    """Hermitian positive definite square root of ``h``."""
    h = as_matrix(h)
    values, vectors = hermitian_eigen(h)
    if values[0] <= 1e-12 * max(abs(values[-1]), 1e-300):
        raise NotPositiveDefinite(f"minimum eigenvalue {values[0]:.3e}")
    r = (vectors * np.sqrt(values)) @ vectors.conj().T
    return 0.5 * (r + r.conj().T)


def resolvent(t, zeta: complex) -> np.ndarray:
    """``(zeta I - t)^{-1}``."""
    t = as_matrix(t, "T")
    n = t.shape[0]
    return solve(zeta * np.eye(n) - t, np.eye(n, dtype=complex))


def poly_eval_matrix(coeffs: Sequence[complex], t) -> np.ndarray:
    """Horner evaluation of a polynomial (ascending coefficients) at ``t``."""
    t = as_matrix(t, "T")
    n = t.shape[0]
    eye = np.eye(n, dtype=complex)
    coeffs = list(coeffs)
    if not coeffs:
        return np.zeros((n, n), dtype=complex)
    out = coeffs[-1] * eye
    for c in reversed(coeffs[:-1]):
        out = out @ t + c * eye
    return out


def direct_sum(*blocks) -> np.ndarray:
    """Block-diagonal matrix built from square blocks."""
    mats = [as_matrix(b) for b in blocks]
    return scipy.linalg.block_diag(*mats).astype(complex)
