"""Riesz idempotents, the orthogonalizing similarity and block decomposition.

Spectral idempotents Q_α come from contour integrals of the resolvent. With
H = Σ Q_α* Q_α + Q_0* Q_0 one has H Q_α = Q_α* H, so S = H^{1/2} turns every
Q_α into the orthogonal projection P_α = S Q_α S^{-1}. Conjugating T by S
gives an orthogonal direct sum of the spectral pieces.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .convex import hausdorff, hull_of_union, numrange_boundary
from .curves import BoundaryGrid
from .errors import (
    ContourThroughSpectrum, GridMismatch, InputError, OverlapError, PoleOnSpectrum, RegionViolation, Singular,
)
from .linalg import as_matrix, direct_sum, inv, matrix_sqrt_hpd, spectral_norm
from .rational import RationalFunction, RegionSampler, rat_eval_matrix, sup_norm
from .double_layer import MeasureVector

RESOLVENT_CAP = 1e6


@dataclass(frozen=True)
class Contour:
    center: complex
    radius: float
    M: int = 256

    def __post_init__(self):
        if self.radius <= 0:
            raise InputError("contour radius must be positive")
        if self.M < 64:
            raise InputError("contour needs at least 64 nodes")

    def nodes(self) -> tuple[np.ndarray, np.ndarray]:
        t = 2 * np.pi * np.arange(self.M) / self.M
        e = np.exp(1j * t)
        return self.center + self.radius * e, 1j * self.radius * e

    def to_json(self) -> dict:
        return {"center": [self.center.real, self.center.imag], "radius": self.radius, "M": self.M}

    @classmethod
    def from_json(cls, data: dict) -> "Contour":
        if not isinstance(data, dict) or set(data) - {"center", "radius", "M"}:
            raise InputError('contour JSON takes the keys "center", "radius" and "M"')
        try:
            c = data["center"]
            center = complex(*c) if isinstance(c, (list, tuple)) else complex(c)
            return cls(center, float(data["radius"]), int(data.get("M", 256)))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad contour JSON: {exc}") from exc


def riesz_projection(t, c: Contour) -> np.ndarray:
    """(2πi)^{-1} ∮ (ζ - T)^{-1} dζ by the trapezoid rule on a circle."""
    t = as_matrix(t, "T")
    n = t.shape[0]
    zeta, dz = c.nodes()
    eye = np.eye(n)
    shifted = zeta[:, None, None] * eye[None] - t[None]
    try:
        res = np.linalg.solve(shifted, np.broadcast_to(eye, shifted.shape).astype(complex))
    except np.linalg.LinAlgError as exc:
        raise ContourThroughSpectrum("contour passes through an eigenvalue") from exc
    worst = np.linalg.norm(res, 2, axis=(1, 2)).max()
    if not np.isfinite(worst) or worst > RESOLVENT_CAP:
        raise ContourThroughSpectrum(f"resolvent norm {worst:.3e} on the contour exceeds {RESOLVENT_CAP:.0e}")
    weights = dz * (2 * np.pi / c.M) / (2j * np.pi)
    q = np.zeros((n, n), dtype=complex)
    for j in range(c.M):
        q += weights[j] * res[j]
    return q


def eigen_count(t, c: Contour) -> int:
    """Number of eigenvalues inside the contour (trace of the Riesz projection)."""
    return int(round(np.trace(riesz_projection(t, c)).real))


@dataclass(frozen=True, eq=False)
class IdempotentSystem:
    t: np.ndarray
    parts: tuple
    remainder: np.ndarray
    contours: tuple = ()

    def residuals(self) -> dict:
        scale = max(spectral_norm(self.t), 1e-300)
        idem = max((spectral_norm(q @ q - q) for q in self.parts), default=0.0)
        cross = 0.0
        for a, qa in enumerate(self.parts):
            for b, qb in enumerate(self.parts):
                if a != b:
                    cross = max(cross, spectral_norm(qa @ qb))
        comm = max((spectral_norm(q @ self.t - self.t @ q) / scale for q in self.parts), default=0.0)
        return {"idempotent": idem, "cross": cross, "commutation": comm}


def _disjoint(contours: Sequence[Contour]) -> None:
    for i, a in enumerate(contours):
        for b in contours[i + 1:]:
            if abs(a.center - b.center) <= a.radius + b.radius:
                raise OverlapError(f"contours around {a.center} and {b.center} intersect")


def idempotent_system(t, contours: Sequence[Contour]) -> IdempotentSystem:
    t = as_matrix(t, "T")
    contours = tuple(contours)
    _disjoint(contours)
    parts = tuple(riesz_projection(t, c) for c in contours)
    rem = np.eye(t.shape[0]) - sum(parts, np.zeros_like(t))
    return IdempotentSystem(t, parts, rem, contours)


def auto_contours(t, clusters: Sequence[Sequence[int]] | None = None, gap_fraction: float = 0.1, M: int = 256) -> list:
    """Contours around eigenvalue clusters by the midpoint-gap rule.

    Eigenvalues are grouped by single linkage at ``gap_fraction * ||T||``
    unless ``clusters`` (index lists into the sorted eigenvalues) is given.
    The radius is the cluster's own extent plus 0.45 of the clearance between
    its enclosing disc and the nearest other cluster disc, so circles are disjoint.
    """
    t = as_matrix(t, "T")
    lam = np.sort_complex(np.linalg.eigvals(t))
    need = gap_fraction * spectral_norm(t)
    if clusters is None:
        clusters = _single_linkage(lam, need)
    groups = [list(idx) for idx in clusters]
    used = {i for g in groups for i in g}
    obstacles = groups + [[i] for i in range(lam.size) if i not in used]
    discs = []
    for g in obstacles:
        centre = complex(lam[g].mean())
        discs.append((centre, float(np.abs(lam[g] - centre).max())))
    out = []
    for k, idx in enumerate(groups):
        centre, extent = discs[k]
        others = [d for j, d in enumerate(discs) if j != k]
        if not others:
            out.append(Contour(centre, extent + max(1.0, need), M))
            continue
        rest = np.delete(lam, idx)
        gap = float(np.abs(lam[idx][:, None] - rest[None, :]).min())
        if gap < need:
            raise ContourThroughSpectrum(f"spectral gap {gap:.3g} below {need:.3g}")
        clearance = min(abs(centre - c) - extent - e for c, e in others)
        if clearance <= 0:
            raise ContourThroughSpectrum("no circle separates this cluster")
        out.append(Contour(centre, extent + 0.45 * clearance, M))
    return out


def _single_linkage(lam: np.ndarray, threshold: float) -> list:
    n = lam.size
    label = list(range(n))
    for i in range(n):
        for j in range(i + 1, n):
            if abs(lam[i] - lam[j]) < threshold:
                old, new = label[j], label[i]
                label = [new if x == old else x for x in label]
    groups: dict[int, list] = {}
    for i, lbl in enumerate(label):
        groups.setdefault(lbl, []).append(i)
    return [groups[k] for k in sorted(groups)]


@dataclass(frozen=True, eq=False)
class OrthogonalizedSystem:
    S: np.ndarray
    S_inv: np.ndarray
    projections: tuple  # P_α
    remainder: np.ndarray  # P_0
    H: np.ndarray
    system: IdempotentSystem

    def residuals(self) -> dict:
        ps = list(self.projections) + [self.remainder]
        sa = max(spectral_norm(p - p.conj().T) for p in ps)
        idem = max(spectral_norm(p @ p - p) for p in ps)
        cross = 0.0
        for a, pa in enumerate(ps):
            for b, pb in enumerate(ps):
                if a != b:
                    cross = max(cross, spectral_norm(pa @ pb))
        total = spectral_norm(sum(ps) - np.eye(self.S.shape[0]))
        hq = max(
            (spectral_norm(self.H @ q - q.conj().T @ self.H) for q in self.system.parts),
            default=0.0,
        ) / spectral_norm(self.H)
        return {"self_adjoint": sa, "idempotent": idem, "cross": cross, "sum": total, "HQ": hq}

    def condition_number(self) -> float:
        return spectral_norm(self.S) * spectral_norm(self.S_inv)


def orthogonalize(sys: IdempotentSystem) -> OrthogonalizedSystem:
    """S = H^{1/2}, H = Σ Q_α* Q_α + Q_0* Q_0; P_α = S Q_α S^{-1}."""
    qs = list(sys.parts) + [sys.remainder]
    h = sum((q.conj().T @ q for q in qs), np.zeros_like(sys.t))
    h = 0.5 * (h + h.conj().T)
    s = matrix_sqrt_hpd(h)
    s_inv = inv(s)
    ps = tuple(s @ q @ s_inv for q in sys.parts)
    p0 = s @ sys.remainder @ s_inv
    return OrthogonalizedSystem(s, s_inv, ps, p0, h, sys)


def range_basis(p: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Orthonormal basis of range(p) by column-pivoted Gram-Schmidt.

    Pivot: largest remaining column norm, ties to the lowest index. The rank
    is the rounded trace (p is a projection).
    """
    rank = int(round(np.trace(p).real))
    cols = p.astype(complex).copy()
    basis = []
    used = np.zeros(cols.shape[1], dtype=bool)
    for _ in range(rank):
        norms = np.linalg.norm(cols, axis=0)
        norms[used] = -1.0
        k = int(np.argmax(norms))
        if norms[k] <= tol:
            raise Singular("projection rank deficient against its trace")
        q = cols[:, k] / norms[k]
        used[k] = True
        basis.append(q)
        cols = cols - np.outer(q, q.conj() @ cols)
    if not basis:
        return np.zeros((p.shape[0], 0), dtype=complex)
    return np.stack(basis, axis=1)


@dataclass(frozen=True, eq=False)
class Decomposition:
    t_similar: np.ndarray  # S T S^{-1}
    bases: tuple  # orthonormal bases of range(P_α), P_0 last when nonzero
    blocks: tuple
    residual: float


def decompose_operator(t, osys: OrthogonalizedSystem) -> Decomposition:
    t = as_matrix(t, "T")
    ts = osys.S @ t @ osys.S_inv
    bases, blocks = [], []
    for p in list(osys.projections) + [osys.remainder]:
        b = range_basis(p)
        if b.shape[1] == 0:
            continue
        bases.append(b)
        blocks.append(b.conj().T @ ts @ b)
    embedded = sum((b @ blk @ b.conj().T for b, blk in zip(bases, blocks)), np.zeros_like(ts))
    return Decomposition(ts, tuple(bases), tuple(blocks), spectral_norm(ts - embedded))


def calculus_compatibility(u: RationalFunction, t, osys: OrthogonalizedSystem, dec: Decomposition) -> float:
    """|| S u(T) S^{-1} - ⊕ u(T_α) || in the block bases."""
    lhs = osys.S @ rat_eval_matrix(u, t) @ osys.S_inv
    rhs = sum(
        (b @ rat_eval_matrix(u, blk) @ b.conj().T for b, blk in zip(dec.bases, dec.blocks)),
        np.zeros_like(lhs),
    )
    return spectral_norm(lhs - rhs)


def projection_commutation(u: RationalFunction, t, osys: OrthogonalizedSystem) -> float:
    v = osys.S @ rat_eval_matrix(u, t) @ osys.S_inv
    return max(spectral_norm(p @ v - v @ p) for p in osys.projections)


def verify_block_ranges(blocks: Sequence[np.ndarray], m: int = 720) -> float:
    """Hausdorff distance between W(⊕ blocks) and the hull of the block ranges."""
    blocks = list(blocks)
    if not blocks:
        raise InputError("need at least one block")
    hull = numrange_boundary(blocks[0], m)
    for b in blocks[1:]:
        hull = hull_of_union(hull, numrange_boundary(b, m))
    return hausdorff(numrange_boundary(direct_sum(*blocks), m), hull)


def system_report(osys: OrthogonalizedSystem, dec: Decomposition) -> dict:
    sys_res = osys.system.residuals()
    return {
        "idempotent_residuals": {"idempotent": sys_res["idempotent"], "cross": sys_res["cross"]},
        "commutation_residuals": sys_res["commutation"],
        "orthogonal_residuals": osys.residuals(),
        "similarity_condition_number": osys.condition_number(),
        "off_block_residual": dec.residual,
        "block_spectra": [
            [[complex(z).real, complex(z).imag] for z in np.linalg.eigvals(b)] for b in dec.blocks
        ],
    }


# contractive similarity search ------------------------------------------------


def default_trial_battery(sampler: RegionSampler, count: int = 24, seed: int = 0) -> list:
    """Monomials, shifted simple poles and seeded random polynomials."""
    rng = np.random.default_rng(seed)
    c, rho = sampler.center(), max(sampler.circumradius(), 1e-12)
    battery = [RationalFunction.monomial(k) for k in range(1, 5)]
    for k in range(4):
        p = c + 1.5 * rho * np.exp(2j * np.pi * (k + 0.25) / 4)
        battery.append(RationalFunction.simple_pole(p))
    while len(battery) < count:
        deg = int(rng.integers(1, 7))
        battery.append(RationalFunction(tuple(rng.standard_normal(deg + 1) + 1j * rng.standard_normal(deg + 1))))
    return battery


@dataclass
class SimilarityConfig:
    restarts: int = 100
    steps: int = 200
    seed: int = 0
    battery_size: int = 24


def _upper(params: np.ndarray, n: int) -> np.ndarray:
    s = np.zeros((n, n), dtype=complex)
    s[np.diag_indices(n)] = np.exp(params[:n].real)
    iu = np.triu_indices(n, 1)
    k = len(iu[0])
    s[iu] = params[n:n + k] + 1j * params[n + k:n + 2 * k]
    return s


def contractive_similarity_search(t, sampler: RegionSampler, cfg: SimilarityConfig | None = None, battery: Sequence[RationalFunction] | None = None):
    """Upper-triangular S minimizing max_u ||u(S^{-1} T S)|| / sup_X |u| over a trial battery.

    Returns (S, achieved max ratio). Best effort: no guarantee of reaching 1.
    """
    cfg = cfg or SimilarityConfig()
    t = as_matrix(t, "T")
    n = t.shape[0]
    if sampler.region is not None:
        w = numrange_boundary(t, sampler.region.m)
        tol = 1e-9 * sampler.region.scale
        proj = (np.exp(-1j * sampler.region.angles)[:, None] * w.witness[None, :]).real
        if np.any(proj > sampler.region.support[:, None] + tol):
            raise RegionViolation("W(T) is not contained in X")
    battery = list(battery) if battery is not None else default_trial_battery(sampler, cfg.battery_size, cfg.seed)
    sups = [sup_norm(u, sampler) for u in battery]

    def objective(params: np.ndarray) -> float:
        s = _upper(params, n)
        try:
            ts = inv(s) @ t @ s
            worst = 1.0
            for u, sup in zip(battery, sups):
                worst = max(worst, spectral_norm(rat_eval_matrix(u, ts)) / sup)
            return worst
        except (Singular, PoleOnSpectrum, np.linalg.LinAlgError):
            return np.inf

    size = n + n * (n - 1)
    rng = np.random.default_rng(cfg.seed)
    best_p = np.zeros(size)
    best_v = objective(best_p)
    starts = [np.zeros(size)] + [rng.standard_normal(size) for _ in range(cfg.restarts - 1)]
    for p0 in starts:
        v0 = objective(p0)
        if v0 < best_v:
            best_v, best_p = v0, p0
    p, v = best_p.copy(), best_v
    step = 0.5
    for i in range(cfg.steps * size):
        j = i % size
        moved = False
        for d in (step, -step):
            trial = p.copy()
            trial[j] += d
            val = objective(trial)
            if val < v:
                p, v, moved = trial, val, True
                break
        if not moved and j == size - 1:
            step *= 0.5
        if step < 1e-10 or v <= 1.0 + 1e-12:
            break
    return _upper(p, n), v


# measure projections -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class MeasureProjection:
    """Restriction of grid measures to a union of boundary components."""

    grid: BoundaryGrid
    mask: np.ndarray  # sorted node indices

    @classmethod
    def for_components(cls, grid: BoundaryGrid, components) -> "MeasureProjection":
        return cls(grid, grid.mask(components))

    def __post_init__(self):
        mask = np.unique(np.asarray(self.mask, dtype=int))
        if mask.size and (mask[0] < 0 or mask[-1] >= self.grid.M):
            raise InputError("mask indices out of range")
        comps = np.unique(self.grid.component[mask])
        if mask.size != self.grid.mask(comps).size:
            raise InputError("a mask must be a union of whole components")
        object.__setattr__(self, "mask", mask)

    def indicator(self) -> np.ndarray:
        out = np.zeros(self.grid.M, dtype=bool)
        out[self.mask] = True
        return out

    def complement(self) -> "MeasureProjection":
        return MeasureProjection(self.grid, np.flatnonzero(~self.indicator()))

    def __and__(self, other: "MeasureProjection") -> "MeasureProjection":
        self.grid.require_same(other.grid)
        return MeasureProjection(self.grid, np.intersect1d(self.mask, other.mask))

    def __or__(self, other: "MeasureProjection") -> "MeasureProjection":
        self.grid.require_same(other.grid)
        return MeasureProjection(self.grid, np.union1d(self.mask, other.mask))

    def __eq__(self, other) -> bool:
        return isinstance(other, MeasureProjection) and np.array_equal(self.mask, other.mask)

    __hash__ = None  # type: ignore[assignment]


def measure_projection_apply(q: MeasureProjection, mu: MeasureVector) -> MeasureVector:
    if not q.grid.same_as(mu.grid):
        raise GridMismatch("projection and measure live on different grids")
    return MeasureVector(mu.grid, np.where(q.indicator(), mu.values, 0))


def multiply(u_values: np.ndarray, mu: MeasureVector) -> MeasureVector:
    """The measure u·μ given nodal values of u."""
    return MeasureVector(mu.grid, np.asarray(u_values) * mu.values)
