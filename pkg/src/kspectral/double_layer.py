"""Nyström Neumann-Poincaré operator and the boundary representation of u(T).

On a convex curve with outward normal n and arclength s the double layer
potential is D[φ](z) = (1/2π) ∮ φ(ζ) Re(n(ζ)/(ζ - z)) ds(ζ), so D[1] = 1 inside.
Its boundary trace is (φ + Kφ)/2, hence the density of the Dirichlet problem
with data g is S g = 2 (I + K)^{-1} g.

The operator-valued kernel used for u(T) is the Hermitian symmetrization of the
resolvent,

    dF(ζ) = (ds / 4π) [ n (ζ - T)^{-1} + conj(n) (conj(ζ) - T*)^{-1} ],

whose scalar version is the double layer kernel itself, so that
u(T) = ∫ (S u) dF for rational u with poles off X.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .curves import BoundaryGrid
from .errors import InputError, RegionViolation, TooCloseToBoundary
from .linalg import as_matrix, solve
from .rational import RationalFunction, check_poles_off_spectrum, rat_eval

MARGIN_SPACINGS = 5


@dataclass(frozen=True, eq=False)
class NPOperator:
    grid: BoundaryGrid
    matrix: np.ndarray

    @cached_property
    def density_map(self) -> np.ndarray:
        """S = 2 (I + K)^{-1}, a real matrix."""
        eye = np.eye(self.grid.M)
        return 2.0 * solve(eye + self.matrix, eye)

    def apply(self, phi) -> np.ndarray:
        return self.matrix @ np.asarray(phi)


@dataclass(frozen=True, eq=False)
class SemispectralDensity:
    grid: BoundaryGrid
    blocks: np.ndarray  # shape (M, n, n), quadrature weights included

    def total(self) -> np.ndarray:
        out = np.zeros(self.blocks.shape[1:], dtype=complex)
        for f in self.blocks:  # fixed node order
            out += f
        return out

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.blocks).min())

    def hermitian_defect(self) -> float:
        return float(np.abs(self.blocks - np.conj(np.transpose(self.blocks, (0, 2, 1)))).max())


@dataclass(frozen=True, eq=False)
class MeasureVector:
    grid: BoundaryGrid
    values: np.ndarray

    def total_variation(self) -> float:
        return float(np.abs(self.values).sum())

    def integrate(self, u) -> complex:
        """Σ_k u(ζ_k) μ_k for a callable or RationalFunction ``u``."""
        vals = rat_eval(u, self.grid.nodes) if isinstance(u, RationalFunction) else u(self.grid.nodes)
        return complex(np.sum(vals * self.values))

    def to_csv_rows(self) -> list:
        rows = [("node", "re_mu", "im_mu")]
        rows += [(j, v.real, v.imag) for j, v in enumerate(self.values)]
        return rows


def np_matrix(grid: BoundaryGrid) -> NPOperator:
    """Nyström matrix K_ij = (1/π) Re(n_j / (ζ_j - ζ_i)) w_j, diagonal κ_i w_i / 2π."""
    if grid.component.max() > 0:
        raise InputError("the Neumann-Poincaré operator needs a single closed curve")
    z, n, w = grid.nodes, grid.normals, grid.weights
    diff = z[None, :] - z[:, None]
    np.fill_diagonal(diff, 1.0)
    k = (n[None, :] / diff).real * w[None, :] / np.pi
    np.fill_diagonal(k, grid.curvatures * w / (2 * np.pi))
    return NPOperator(grid, k)


def dirichlet_density(op: NPOperator, g) -> np.ndarray:
    """φ = 2 (I + K)^{-1} g."""
    g = np.asarray(g)
    if g.shape != (op.grid.M,):
        raise InputError("boundary data must have one value per node")
    return 2.0 * solve(np.eye(op.grid.M) + op.matrix, g)


def _interior_distance(grid: BoundaryGrid, z: complex) -> float:
    """Signed distance from z to the nearest node tangent line (positive inside)."""
    return float(np.min((np.conj(grid.normals) * (grid.nodes - z)).real))


def double_layer_eval(grid: BoundaryGrid, phi, z: complex) -> complex:
    """D[φ](z) at an interior point z."""
    need = MARGIN_SPACINGS * grid.spacing
    if _interior_distance(grid, z) < 0:
        raise InputError(f"{z} is not inside the curve")
    if np.min(np.abs(grid.nodes - z)) < need:
        raise TooCloseToBoundary(f"{z} is closer than {need:.3g} to the boundary")
    kern = (grid.normals / (grid.nodes - z)).real * grid.weights / (2 * np.pi)
    return complex(np.sum(np.asarray(phi) * kern))


def range_margin(grid: BoundaryGrid, t) -> float:
    """min_j [h_X(arg n_j) - h_W(T)(arg n_j)]: gap between W(T) and each node tangent line."""
    t = as_matrix(t, "T")
    rot = np.conj(grid.normals)[:, None, None]
    herm = 0.5 * (rot * t[None] + np.conj(rot) * t.conj().T[None])
    h_w = np.linalg.eigvalsh(herm)[:, -1]
    h_x = (np.conj(grid.normals) * grid.nodes).real
    return float(np.min(h_x - h_w))


def semispectral_density(grid: BoundaryGrid, t, margin: float | None = None) -> SemispectralDensity:
    """Blocks F_j = (w_j / 4π)[n_j R_j + conj(n_j) R_j*], R_j = (ζ_j - T)^{-1}.

    ``margin`` defaults to five grid spacings between W(T) and the boundary.
    """
    t = as_matrix(t, "T")
    need = MARGIN_SPACINGS * grid.spacing if margin is None else margin
    gap = range_margin(grid, t)
    if gap < need:
        raise RegionViolation(f"W(T) is {gap:.3g} from the boundary, need {need:.3g}")
    n = t.shape[0]
    eye = np.eye(n)
    shifted = grid.nodes[:, None, None] * eye[None] - t[None]
    res = np.linalg.solve(shifted, np.broadcast_to(eye, shifted.shape))
    half = (grid.weights * grid.normals / (4 * np.pi))[:, None, None] * res
    blocks = half + np.conj(np.transpose(half, (0, 2, 1)))
    return SemispectralDensity(grid, blocks)


def reconstruct(u: RationalFunction, t, grid: BoundaryGrid, op: NPOperator, density: SemispectralDensity | None = None, margin: float | None = None) -> np.ndarray:
    """Σ_j (S u)_j F_j, with S applied separately to Re u and Im u on the nodes."""
    t = as_matrix(t, "T")
    if op.grid is not grid:
        grid.require_same(op.grid)
    check_poles_off_spectrum(u, t)
    dens = density or semispectral_density(grid, t, margin)
    g = rat_eval(u, grid.nodes)
    phi = op.density_map @ g.real + 1j * (op.density_map @ g.imag)
    out = np.zeros((t.shape[0], t.shape[0]), dtype=complex)
    for j in range(grid.M):
        out += phi[j] * dens.blocks[j]
    return out


def elementary_measure(t, grid: BoundaryGrid, op: NPOperator, f, g, density: SemispectralDensity | None = None, margin: float | None = None) -> MeasureVector:
    """μ_{f,g} with Σ_k u(ζ_k) μ_k = ⟨u(T) f, g⟩ (up to quadrature error).

    ν_j = ⟨F_j f, g⟩ and μ = Sᵀ ν.
    """
    dens = density or semispectral_density(grid, t, margin)
    f = np.asarray(f, dtype=complex)
    g = np.asarray(g, dtype=complex)
    nu = np.einsum("i,jik,k->j", np.conj(g), dens.blocks, f)
    return MeasureVector(grid, op.density_map.T @ nu)


def realness_check(t, grid: BoundaryGrid, op: NPOperator, f, density: SemispectralDensity | None = None, margin: float | None = None) -> float:
    """max_k |Im μ_{f,f}(k)|."""
    mu = elementary_measure(t, grid, op, f, f, density, margin)
    return float(np.abs(mu.values.imag).max())
