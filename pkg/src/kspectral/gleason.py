"""Model domains for R(X): characters, representing measures, Gleason distances.

Only catalog domains are supported, since their part and antisymmetry
structure is known and can serve as ground truth for the estimators.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from typing import Sequence

import numpy as np

from .curves import BoundaryCurve, BoundaryGrid, concat_grids, discretize
from .double_layer import MeasureVector
from .errors import GridMismatch, InputError, NearPole, TooCloseToBoundary
from .rational import RationalBasis, RationalFunction, RegionSampler, multi_curve_sampler, rat_eval, sup_norm


@dataclass(frozen=True, eq=False)
class ModelDomain:
    """A finite union of closed discs/ellipses (optionally with one hole each)."""

    id: str
    components: tuple  # ({"outer": BoundaryCurve, "inner": BoundaryCurve | None}, ...)
    admissible_poles: tuple
    parts: tuple
    antisymmetry: tuple
    shilov_M: int = 512
    choquet_note: str = ""

    @property
    def curves(self) -> list:
        out = []
        for comp in self.components:
            out.append(comp["outer"])
            if comp["inner"] is not None:
                out.append(comp["inner"])
        return out

    @property
    def curve_component(self) -> list:
        """Domain component owning each curve of ``curves``."""
        out = []
        for i, comp in enumerate(self.components):
            out += [i] if comp["inner"] is None else [i, i]
        return out

    def shilov_sampler(self, n_per: int | None = None) -> RegionSampler:
        return multi_curve_sampler(self.curves, n_per or self.shilov_M)

    def grid(self, M: int | None = None) -> BoundaryGrid:
        return concat_grids(*(discretize(c, M or self.shilov_M) for c in self.curves))

    def grid_components(self, component: int) -> list:
        """Grid component labels (curve indices) belonging to a domain component."""
        return [j for j, c in enumerate(self.curve_component) if c == component]

    def center(self) -> complex:
        return complex(np.mean(self.shilov_sampler(256).samples))

    def component_of(self, x: complex, tol: float = 1e-12) -> int | None:
        for i, comp in enumerate(self.components):
            if _inside(comp["outer"], x, tol) and (comp["inner"] is None or not _inside(comp["inner"], x, -tol)):
                return i
        return None

    def contains(self, x: complex, tol: float = 1e-12) -> bool:
        return self.component_of(x, tol) is not None

    def on_boundary(self, x: complex, tol: float = 1e-12) -> bool:
        return self.contains(x, tol) and not self.contains_interior(x, tol)

    def contains_interior(self, x: complex, tol: float = 1e-12) -> bool:
        for comp in self.components:
            if _inside(comp["outer"], x, -tol) and (comp["inner"] is None or not _inside(comp["inner"], x, tol)):
                return True
        return False

    def same_part(self, x1: complex, x2: complex) -> bool:
        """Catalog ground truth: interiors of components are parts, boundary points are singletons."""
        if x1 == x2:
            return True
        if not (self.contains_interior(x1) and self.contains_interior(x2)):
            return False
        return self.component_of(x1) == self.component_of(x2)

    def interior_samples(self, component: int, n_radial: int = 12, n_angle: int = 48) -> np.ndarray:
        """Polar grid strictly inside one component."""
        comp = self.components[component]
        outer = comp["outer"]
        c = outer.params["center"]
        lo = 0.0
        if comp["inner"] is not None:
            lo = comp["inner"].params["radius"] / outer.params["radius"]
        fr = lo + (1 - lo) * (np.arange(1, n_radial + 1) / (n_radial + 1))
        t = 2 * np.pi * np.arange(n_angle) / n_angle
        edge = outer(t) - c
        pts = c + fr[:, None] * edge[None, :]
        if lo == 0.0:
            pts = np.concatenate([[c], pts.ravel()])
        return np.asarray(pts).ravel()

    def component_samples(self, component: int, n_boundary: int = 256) -> np.ndarray:
        """Boundary plus interior samples of one component (an antisymmetry set)."""
        t = 2 * np.pi * np.arange(n_boundary) / n_boundary
        curves = [self.curves[j] for j in self.grid_components(component)]
        bd = np.concatenate([c(t) for c in curves])
        return np.concatenate([bd, self.interior_samples(component)])

    def admissible(self, u: RationalFunction, margin: float = 1e-6) -> bool:
        return all(not self.contains(p, margin) for p, _ in u.poles)


def _inside(curve: BoundaryCurve, x: complex, tol: float) -> bool:
    p = curve.params
    if curve.kind == "disc":
        return abs(x - p["center"]) <= p["radius"] + tol
    if curve.kind == "ellipse":
        d = x - p["center"]
        return (d.real / p["a"]) ** 2 + (d.imag / p["b"]) ** 2 <= 1 + 2 * tol / min(p["a"], p["b"])
    raise InputError("catalog domains use discs and ellipses only")


def _domain_from_json(d: dict) -> ModelDomain:
    comps = tuple(
        {
            "outer": BoundaryCurve.from_json(c["outer"]),
            "inner": BoundaryCurve.from_json(c["inner"]) if c.get("inner") else None,
        }
        for c in d["components"]
    )
    for comp in comps:
        inner = comp["inner"]
        if inner is not None and (inner.kind != "disc" or comp["outer"].kind != "disc"):
            raise InputError("holes are only supported in concentric discs")
    return ModelDomain(
        id=d["id"],
        components=comps,
        admissible_poles=tuple(complex(a, b) for a, b in d.get("admissible_poles", [])),
        parts=tuple(d["parts"]),
        antisymmetry=tuple(d["antisymmetry"]),
        shilov_M=int(d.get("shilov", {}).get("M", 512)),
        choquet_note=d.get("choquet_note", ""),
    )


def load_catalog() -> dict:
    text = resources.files("kspectral").joinpath("data/catalog.json").read_text()
    return {d["id"]: _domain_from_json(d) for d in json.loads(text)}


def get_domain(name: str) -> ModelDomain:
    cat = load_catalog()
    if name not in cat:
        raise InputError(f"unknown domain {name!r}; catalog has {sorted(cat)}")
    return cat[name]


# characters and representing measures -------------------------------------------


@dataclass(frozen=True)
class Character:
    point: complex

    def __call__(self, u: RationalFunction) -> complex:
        return character_eval(self, u)


def character_eval(x: Character, u: RationalFunction) -> complex:
    return complex(rat_eval(u, x.point))


@dataclass(frozen=True, eq=False)
class RepresentingMeasure:
    grid: BoundaryGrid
    density: np.ndarray
    point: complex

    def mass(self) -> float:
        return float(np.sum(self.density))

    def integrate(self, u: RationalFunction) -> complex:
        return complex(np.sum(rat_eval(u, self.grid.nodes) * self.density))


def poisson_representing_measure(x: complex, disc: BoundaryCurve, M: int = 512) -> RepresentingMeasure:
    """Discretized Poisson kernel (R² - |x-c|²)/|ζ - x|² · w/(2πR)."""
    if disc.kind != "disc":
        raise InputError("Poisson measures are implemented for discs only")
    c, r = disc.params["center"], disc.params["radius"]
    if abs(x - c) >= r * (1 - 1e-3):
        raise TooCloseToBoundary("point too close to the circle")
    grid = discretize(disc, M)
    dens = (r * r - abs(x - c) ** 2) / np.abs(grid.nodes - x) ** 2 * grid.weights / (2 * np.pi * r)
    return RepresentingMeasure(grid, dens, complex(x))


def mutual_continuity_check(nu1: RepresentingMeasure, nu2: RepresentingMeasure, c: float) -> bool:
    """c·ν2 <= ν1 and c·ν1 <= ν2 nodewise (slack 1e-12)."""
    if not nu1.grid.same_as(nu2.grid):
        raise GridMismatch("measures live on different grids")
    a, b = nu1.density, nu2.density
    return bool(np.all(c * b <= a + 1e-12) and np.all(c * a <= b + 1e-12))


def extend_measure(nu: RepresentingMeasure, grid: BoundaryGrid, component: int) -> RepresentingMeasure:
    """Place a single-curve measure on one component of a multi-curve grid."""
    mask = grid.component == component
    if mask.sum() != nu.grid.M or not np.allclose(grid.nodes[mask], nu.grid.nodes):
        raise GridMismatch("component nodes do not match the measure's grid")
    dens = np.zeros(grid.M)
    dens[mask] = nu.density
    return RepresentingMeasure(grid, dens, nu.point)


# Gleason distance lower bounds --------------------------------------------------


@dataclass
class GleasonConfig:
    degree: int = 16
    pole_order: int = 4
    phases: int = 32
    iterations: int = 400
    restarts: int = 20
    seed: int = 0
    step: float = 0.05
    beta: float = 5.0
    samples_per_curve: int | None = None
    poles: tuple | None = None  # defaults to the domain's admissible poles

    def to_json(self) -> dict:
        d = dict(self.__dict__)
        d["poles"] = None if self.poles is None else [[p.real, p.imag] for p in self.poles]
        return d


@dataclass
class DistanceEstimate:
    x1: complex
    x2: complex
    d_hat: float
    certificate: RationalFunction
    degree: int
    verification_sup: float

    def to_json(self) -> dict:
        return {
            "x1": [self.x1.real, self.x1.imag],
            "x2": [self.x2.real, self.x2.imag],
            "d_hat": self.d_hat,
            "degree": self.degree,
            "certificate": self.certificate.to_json(),
            "verification_sup": self.verification_sup,
        }


def _verify(u: RationalFunction, x1: complex, x2: complex, dense: RegionSampler):
    sup = sup_norm(u, dense)
    # rescaling an already normalized certificate would only add rounding, and
    # a warm start must reproduce its value exactly
    if sup > 1.0 + 1e-12:
        u = u * (1.0 / sup)
    return abs(rat_eval(u, x1) - rat_eval(u, x2)), u, sup


def gleason_distance_lb(x1: complex, x2: complex, domain: ModelDomain, cfg: GleasonConfig | None = None,
                        warm_start: RationalFunction | None = None) -> DistanceEstimate:
    """Certified lower bound for ||χ_x1 - χ_x2|| in the dual of R(X).

    Maximizes |u(x1) - u(x2)| over rationals with sampled sup norm <= 1 by a
    projected subgradient ascent on basis coefficients, one trajectory per
    (phase, restart); projection divides by the sampled sup norm. The
    returned certificate is rescaled to sup <= 1 on a 4x denser boundary
    sampler, so d_hat is a genuine lower bound up to sampler resolution.
    """
    cfg = cfg or GleasonConfig()
    x1, x2 = complex(x1), complex(x2)
    for x in (x1, x2):
        if not domain.contains(x, 1e-9):
            raise InputError(f"{x} is not in the domain {domain.id}")
    dense = domain.shilov_sampler(4 * (cfg.samples_per_curve or domain.shilov_M))
    if x1 == x2:
        return DistanceEstimate(x1, x2, 0.0, RationalFunction.constant(1.0), 0, 1.0)

    s = domain.shilov_sampler(cfg.samples_per_curve)
    poles = domain.admissible_poles if cfg.poles is None else tuple(cfg.poles)
    center = domain.center()
    rho = float(np.abs(s.samples - center).max())
    scales = [float(np.abs(s.samples - p).min()) for p in poles]
    basis = RationalBasis(cfg.degree, poles, center, rho, cfg.pole_order, scales)
    b = basis.at_points(s.samples)
    q, r = np.linalg.qr(b)
    rootn = np.sqrt(s.samples.size)
    q = q * rootn
    diff = basis.at_points(np.array([x1]))[0] - basis.at_points(np.array([x2]))[0]
    a = np.linalg.solve(r.T, diff) * rootn

    n = basis.size
    half = (cfg.phases + 1) // 2
    rng = np.random.default_rng(cfg.seed)
    noise = rng.standard_normal((half, cfg.restarts, n)) + 1j * rng.standard_normal((half, cfg.restarts, n))
    phases = np.exp(2j * np.pi * np.arange(cfg.phases) / cfg.phases)
    if cfg.phases % 2 == 0:
        phases[half:] = -phases[:half]
    # trajectory (p, r) uses noise[p mod half, r]: swapping x1, x2 maps phase p to p + phases/2
    e = np.repeat(phases, cfg.restarts)
    noise = noise[np.arange(cfg.phases) % half].reshape(-1, n).T * (0.3 / np.sqrt(n))
    g = np.conj(e[None, :] * a[:, None])
    c = g / np.linalg.norm(g, axis=0) + noise
    c /= np.abs(q @ c).max(axis=0)
    best_val = np.full(c.shape[1], -np.inf)
    best_c = c.copy()
    for it in range(cfg.iterations):
        v = q @ c
        mags = np.abs(v)
        sup = mags.max(axis=0)
        weights = np.exp(cfg.beta * (1 + it) * (mags - sup))
        weights /= weights.sum(axis=0)
        lin = (e * (a @ c)).real
        dsup = np.conj(q).T @ (weights * v / np.maximum(mags, 1e-300))
        grad = g / sup - lin / sup**2 * dsup
        grad /= np.linalg.norm(grad, axis=0)
        c = c + cfg.step / np.sqrt(it + 1) * grad * np.linalg.norm(c, axis=0)
        c /= np.abs(q @ c).max(axis=0)
        val = (e * (a @ c)).real
        better = val > best_val
        best_val = np.where(better, val, best_val)
        best_c[:, better] = c[:, better]

    order = np.argsort(-best_val, kind="stable")
    best = None
    for col in order[:4]:
        coef = np.linalg.solve(r, best_c[:, col] * rootn)
        try:
            d, u, vsup = _verify(basis.to_rational(coef), x1, x2, dense)
        except NearPole:
            continue
        if best is None or d > best[0]:
            best = (d, u, vsup)
    if warm_start is not None:
        d, u, vsup = _verify(warm_start, x1, x2, dense)
        if best is None or d > best[0]:
            best = (d, u, vsup)
    d, u, vsup = best
    return DistanceEstimate(x1, x2, float(d), u, cfg.degree, float(sup_norm(u, dense)))


def mobius_gleason_distance(x1: complex, x2: complex) -> float:
    """Closed form for the unit disc: 2ρ/(1 + sqrt(1 - ρ²)), ρ pseudohyperbolic."""
    rho = abs(x1 - x2) / abs(1 - np.conj(x1) * x2)
    return float(2 * rho / (1 + np.sqrt(1 - rho * rho)))


@dataclass(frozen=True)
class PartVerdict:
    by_bound: str  # "different" | "undecided"
    by_metadata: str | None  # "same" | "different" | None


def same_part_predicate(d_hat: float, strict_threshold: float, domain: ModelDomain | None = None,
                        x1: complex | None = None, x2: complex | None = None) -> PartVerdict:
    """A lower bound near 2 certifies different parts; it can never certify sameness."""
    by_bound = "different" if d_hat > 2 - strict_threshold else "undecided"
    meta = None
    if domain is not None and x1 is not None and x2 is not None:
        meta = "same" if domain.same_part(x1, x2) else "different"
    return PartVerdict(by_bound, meta)


# measures over parts ------------------------------------------------------------


@dataclass
class PartDecomposition:
    parts: list  # MeasureVector per domain component
    mu0: MeasureVector
    original: MeasureVector

    def tv_defect(self) -> float:
        """|Σ TV(parts) + TV(μ0) - TV(μ)| with every total summed exactly (fsum of all terms)."""
        terms = [abs(v) for p in self.parts for v in p.values] + [abs(v) for v in self.mu0.values]
        return abs(math.fsum(terms) - math.fsum(abs(v) for v in self.original.values))

    def supports_disjoint(self) -> bool:
        supp = [np.flatnonzero(p.values) for p in self.parts]
        for i, a in enumerate(supp):
            for b in supp[i + 1:]:
                if np.intersect1d(a, b).size:
                    return False
        return True


def measure_part_decomposition(mu: MeasureVector, domain: ModelDomain) -> PartDecomposition:
    """Restrict μ to each component's boundary nodes; μ0 = 0 for catalog domains."""
    grid = mu.grid
    ncurves = len(domain.curves)
    if grid.component.max() + 1 != ncurves:
        raise GridMismatch("measure grid does not match the domain's curves")
    parts = []
    for i in range(len(domain.components)):
        mask = np.isin(grid.component, domain.grid_components(i))
        parts.append(MeasureVector(grid, np.where(mask, mu.values, 0)))
    return PartDecomposition(parts, MeasureVector(grid, np.zeros_like(mu.values)), mu)


def cauchy_annihilator(grid: BoundaryGrid, component: int, center: complex, weight: complex = 1.0) -> MeasureVector:
    """Nodes of one circle carrying γ'(t)·(2π/M)·(ζ - c): ∮ u(z)(z - c) dz = 0 for u analytic inside."""
    mask = grid.component == component
    m = int(mask.sum())
    vals = np.where(mask, grid.speeds * (2 * np.pi / m) * (grid.nodes - center) * weight, 0)
    return MeasureVector(grid, vals)


# antisymmetry and peak checks ---------------------------------------------------


def antisymmetry_falsifier(u: RationalFunction, samples: Sequence[complex], tol: float) -> str:
    """'violation' if u is real on the set but not constant there, else 'consistent'."""
    samples = np.asarray(samples, dtype=complex)
    if samples.size < 256:
        raise InputError("antisymmetry checks need at least 256 samples")
    vals = rat_eval(u, samples)
    if np.abs(vals.imag).max() > tol:
        return "consistent"
    if np.abs(vals - vals.mean()).max() <= 10 * tol:
        return "consistent"
    return "violation"


def peak_check(u: RationalFunction, x: complex, samples: Sequence[complex], tol: float,
               exclusion: float | None = None) -> bool:
    """u(x) ≈ 1 and |u| <= 1 - tol/2 away from x.

    ``exclusion`` is the radius around x left unchecked; it defaults to
    10·sqrt(tol) because a peak function with quadratic contact only drops
    below 1 - tol/2 at distance of order sqrt(tol).
    """
    radius = 10 * math.sqrt(tol) if exclusion is None else exclusion
    samples = np.asarray(samples, dtype=complex)
    if abs(rat_eval(u, x) - 1) > tol:
        return False
    far = samples[np.abs(samples - x) > radius]
    return bool(np.all(np.abs(rat_eval(u, far)) <= 1 - tol / 2))
