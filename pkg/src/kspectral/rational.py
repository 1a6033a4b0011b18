"""Rational functional calculus, sup norms on boundaries and K-spectral ratios."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
import scipy.optimize

from .convex import ConvexRegion, contains, numrange_boundary
from .errors import InputError, NearPole, NotContraction, PoleOnSpectrum, RegionViolation, ZeroFunction
from .linalg import as_matrix, poly_eval_matrix, solve, spectral_norm

log = logging.getLogger(__name__)

MAX_DEGREE = 32
NEAR_POLE = 1e-9
POLE_MARGIN = 1e-6
CROUZEIX_FLAG = 1.0 + np.sqrt(2.0)


class KRatioWarning(UserWarning):
    """An observed spectral ratio exceeded 1 + sqrt(2) on a convex set."""


@dataclass(frozen=True)
class RationalFunction:
    """u(z) = p(z) / prod_j (z - pole_j)^mult_j with ascending numerator coefficients."""

    numerator: tuple
    poles: tuple = ()

    def __post_init__(self):
        num = tuple(complex(c) for c in self.numerator) or (0j,)
        poles = tuple((complex(p), int(m)) for p, m in self.poles)
        if len(num) - 1 > MAX_DEGREE:
            raise InputError(f"numerator degree exceeds {MAX_DEGREE}")
        if any(m < 1 for _, m in poles):
            raise InputError("pole multiplicities must be positive")
        if sum(m for _, m in poles) > MAX_DEGREE:
            raise InputError(f"total pole multiplicity exceeds {MAX_DEGREE}")
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "poles", poles)

    @classmethod
    def constant(cls, c: complex = 1.0) -> "RationalFunction":
        return cls((c,))

    @classmethod
    def coordinate(cls) -> "RationalFunction":
        return cls((0, 1))

    @classmethod
    def monomial(cls, k: int) -> "RationalFunction":
        return cls((0,) * k + (1,))

    @classmethod
    def simple_pole(cls, p: complex) -> "RationalFunction":
        """1 / (z - p)."""
        return cls((1,), ((p, 1),))

    @property
    def degree(self) -> int:
        return len(self.numerator) - 1

    def __mul__(self, other):
        if isinstance(other, RationalFunction):
            num = np.polynomial.polynomial.polymul(self.numerator, other.numerator)
            merged: dict[complex, int] = {}
            for p, m in self.poles + other.poles:
                merged[p] = merged.get(p, 0) + m
            return RationalFunction(tuple(num), tuple(merged.items()))
        return RationalFunction(tuple(np.asarray(self.numerator) * complex(other)), self.poles)

    __rmul__ = __mul__

    def __call__(self, z):
        return rat_eval(self, z)

    def pole_points(self) -> np.ndarray:
        return np.array([p for p, _ in self.poles], dtype=complex)

    def to_json(self) -> dict:
        return {
            "num": [[c.real, c.imag] for c in self.numerator],
            "poles": [[p.real, p.imag, m] for p, m in self.poles],
        }

    @classmethod
    def from_json(cls, data: dict) -> "RationalFunction":
        if not isinstance(data, dict) or set(data) - {"num", "poles"}:
            raise InputError('rational JSON takes the keys "num" and "poles"')
        try:
            num = tuple(complex(a, b) for a, b in data["num"])
            poles = tuple((complex(a, b), int(m)) for a, b, m in data.get("poles", []))
        except (KeyError, TypeError, ValueError) as exc:
            raise InputError(f"bad rational JSON: {exc}") from exc
        return cls(num, poles)


def rat_eval(u: RationalFunction, z):
    """Pointwise value(s) of ``u``; raises NearPole within 1e-9 of a pole."""
    z = np.asarray(z, dtype=complex)
    val = np.polynomial.polynomial.polyval(z, np.asarray(u.numerator))
    for p, m in u.poles:
        d = z - p
        if np.any(np.abs(d) < NEAR_POLE):
            raise NearPole(f"evaluation point within {NEAR_POLE} of pole {p}")
        val = val / d**m
    return val if val.ndim else complex(val)


def check_poles_off_spectrum(u: RationalFunction, t: np.ndarray, margin: float = POLE_MARGIN) -> None:
    """Every pole must satisfy sigma_min(pI - T) >= margin * max(1, ||T||).

    sigma_min(pI - T) is a lower bound for the distance from p to sp(T), so the
    test never accepts a pole closer than the margin.
    """
    n = t.shape[0]
    scale = max(1.0, spectral_norm(t))
    for p, _ in u.poles:
        smin = np.linalg.svd(p * np.eye(n) - t, compute_uv=False)[-1]
        if smin < margin * scale:
            raise PoleOnSpectrum(f"pole {p} is within {margin * scale:.1e} of sp(T)")


def rat_eval_matrix(u: RationalFunction, t, margin: float = POLE_MARGIN) -> np.ndarray:
    """u(T) = p(T) * prod_j (T - pole_j I)^{-mult_j}."""
    t = as_matrix(t, "T")
    check_poles_off_spectrum(u, t, margin)
    n = t.shape[0]
    out = poly_eval_matrix(u.numerator, t)
    for p, m in u.poles:
        r = solve(t - p * np.eye(n), np.eye(n, dtype=complex))
        for _ in range(m):
            out = out @ r
    return out


@dataclass(frozen=True)
class RegionSampler:
    """Points on the Shilov boundary of X used to evaluate sup norms.

    When ``curves`` is given, sample k lies at ``curves[components[k]](params[k])``
    and sup norms are refined by a local 1-d maximization along the curve.
    """

    samples: np.ndarray
    region: ConvexRegion | None = None
    components: np.ndarray | None = None
    params: np.ndarray | None = None
    curves: tuple = ()
    spacing: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.ndim != 1 or s.size == 0:
            raise InputError("sampler needs a non-empty 1-d sample array")
        object.__setattr__(self, "samples", s)

    def validate(self, tol: float = 1e-9) -> None:
        if self.samples.size < 128:
            raise InputError("a region sampler needs at least 128 samples")
        if self.region is not None:
            t = tol * self.region.scale
            for z in self.samples:
                if not contains(self.region, z, -t):
                    raise InputError(f"sample {z} lies outside the region")

    def center(self) -> complex:
        if self.region is not None:
            return self.region.center()
        return complex(np.mean(self.samples))

    def circumradius(self) -> float:
        return float(np.max(np.abs(self.samples - self.center())))

    def densified(self, factor: int = 4) -> "RegionSampler":
        """Same boundary, ``factor`` times as many samples (needs curves)."""
        if not self.curves:
            raise InputError("densification needs parametrized curves")
        return multi_curve_sampler(
            self.curves, int(self.samples.size * factor / len(self.curves)), region=self.region
        )


def disc_sampler(center: complex = 0j, radius: float = 1.0, n: int = 1024, m: int = 720) -> RegionSampler:
    """Circle samples with a parametrization for sup-norm refinement."""
    curve = _circle(center, radius)
    return multi_curve_sampler((curve,), n, region=ConvexRegion.disc(center, radius, m))


def _circle(center: complex, radius: float) -> Callable:
    def curve(t):
        return center + radius * np.exp(1j * np.asarray(t))

    curve.center = center  # type: ignore[attr-defined]
    curve.radius = radius  # type: ignore[attr-defined]
    return curve


def multi_curve_sampler(curves: Sequence[Callable], n_per: int, region: ConvexRegion | None = None) -> RegionSampler:
    t = 2 * np.pi * np.arange(n_per) / n_per
    samples = np.concatenate([c(t) for c in curves])
    comps = np.repeat(np.arange(len(curves)), n_per)
    params = np.tile(t, len(curves))
    return RegionSampler(samples, region, comps, params, tuple(curves), 2 * np.pi / n_per)


def region_sampler(region: ConvexRegion) -> RegionSampler:
    """Sampler on the boundary of a support-sampled convex region (its witness points)."""
    return RegionSampler(region.witness, region)


def _sup_abs(values_fn: Callable, s: RegionSampler, vals: np.ndarray, refine: bool, top: int = 4) -> float:
    mags = np.abs(vals)
    best = float(mags.max())
    if not refine or not s.curves:
        return best
    for k in np.argsort(-mags, kind="stable")[:top]:
        curve = s.curves[int(s.components[k])]
        t0 = float(s.params[k])
        res = scipy.optimize.minimize_scalar(
            lambda t: -abs(values_fn(curve(t))),
            bounds=(t0 - s.spacing, t0 + s.spacing),
            method="bounded",
            options={"xatol": 1e-12},
        )
        best = max(best, float(-res.fun))
    return best


def sup_norm(u: RationalFunction, s: RegionSampler, refine: bool = True) -> float:
    """max |u| over the boundary samples (refined along curves when available)."""
    vals = rat_eval(u, s.samples)
    return _sup_abs(lambda z: rat_eval(u, z), s, np.atleast_1d(vals), refine)


def spectral_ratio(u: RationalFunction, t, s: RegionSampler, margin: float = POLE_MARGIN) -> float:
    sup = sup_norm(u, s)
    if sup < 1e-12:
        raise ZeroFunction("u vanishes on the sampled boundary")
    return spectral_norm(rat_eval_matrix(u, t, margin)) / sup


@dataclass
class SearchConfig:
    degrees: tuple = (2, 4, 8, 12)
    restarts: int = 200
    steps: int = 500
    seed: int = 0
    extra_poles: tuple = ()
    ring_poles: int = 6

    @classmethod
    def from_json(cls, data: dict) -> "SearchConfig":
        unknown = set(data) - {"degrees", "restarts", "steps", "seed", "extra_poles", "ring_poles"}
        if unknown:
            raise InputError(f"unknown search config keys: {sorted(unknown)}")
        cfg = cls(**{k: v for k, v in data.items() if k != "extra_poles"})
        cfg.degrees = tuple(int(d) for d in cfg.degrees)
        cfg.extra_poles = tuple(complex(a, b) for a, b in data.get("extra_poles", []))
        return cfg

    def to_json(self) -> dict:
        return {
            "degrees": list(self.degrees),
            "restarts": self.restarts,
            "steps": self.steps,
            "seed": self.seed,
            "extra_poles": [[p.real, p.imag] for p in self.extra_poles],
            "ring_poles": self.ring_poles,
        }


@dataclass
class KEstimate:
    K: float
    certificate: RationalFunction
    ratios: list = field(default_factory=list)
    flagged: list = field(default_factory=list)


class RationalBasis:
    """Scaled monomials ((z-c)/rho)^k plus pole terms (s_p/(z-p))^m, m <= order.

    Evaluates the same coefficient vector both at a matrix and on boundary
    points, which keeps search loops cheap; ``to_rational`` expands a
    coefficient vector into a RationalFunction. ``pole_scales`` default to rho.
    """

    def __init__(self, degree: int, poles: Sequence[complex], center: complex, rho: float,
                 order: int = 1, pole_scales: Sequence[float] | None = None):
        self.degree = int(degree)
        self.poles = tuple(complex(p) for p in poles)
        self.center = complex(center)
        self.rho = float(rho)
        self.order = int(order) if self.poles else 0
        self.pole_scales = tuple(pole_scales) if pole_scales is not None else (self.rho,) * len(self.poles)

    @property
    def size(self) -> int:
        return self.degree + 1 + len(self.poles) * self.order

    def at_points(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        w = (z - self.center) / self.rho
        cols = [w**k for k in range(self.degree + 1)]
        for p, sc in zip(self.poles, self.pole_scales):
            q = sc / (z - p)
            cols += [q**m for m in range(1, self.order + 1)]
        return np.stack(cols, axis=-1)

    def at_matrix(self, t: np.ndarray) -> np.ndarray:
        n = t.shape[0]
        eye = np.eye(n, dtype=complex)
        w = (t - self.center * eye) / self.rho
        mats = [eye]
        for _ in range(self.degree):
            mats.append(mats[-1] @ w)
        for p, sc in zip(self.poles, self.pole_scales):
            q = sc * solve(t - p * eye, eye)
            power = eye
            for _ in range(self.order):
                power = power @ q
                mats.append(power)
        return np.stack(mats)

    def to_rational(self, coef: np.ndarray) -> RationalFunction:
        P = np.polynomial.polynomial
        coef = np.asarray(coef, dtype=complex)
        poly = np.zeros(1, dtype=complex)
        shift = np.array([-self.center / self.rho, 1 / self.rho])
        power = np.ones(1, dtype=complex)
        for k in range(self.degree + 1):
            poly = P.polyadd(poly, coef[k] * power)
            power = P.polymul(power, shift)
        used = [j for j in range(len(self.poles))
                if np.any(coef[self._slot(j, 1): self._slot(j, 1) + self.order] != 0)]
        denom = np.ones(1, dtype=complex)
        for j in used:
            denom = P.polymul(denom, P.polypow([-self.poles[j], 1], self.order))
        num = P.polymul(poly, denom)
        for j in used:
            others = np.ones(1, dtype=complex)
            for i in used:
                if i != j:
                    others = P.polymul(others, P.polypow([-self.poles[i], 1], self.order))
            for m in range(1, self.order + 1):
                a = coef[self._slot(j, m)]
                if a == 0:
                    continue
                term = P.polymul(others, P.polypow([-self.poles[j], 1], self.order - m))
                num = P.polyadd(num, a * self.pole_scales[j] ** m * term)
        num = np.trim_zeros(num, "b") if np.any(num) else np.zeros(1)
        return RationalFunction(tuple(num), tuple((self.poles[j], self.order) for j in used))

    def _slot(self, j: int, m: int) -> int:
        return self.degree + 1 + j * self.order + (m - 1)


def _ring(center: complex, radius: float, count: int) -> list:
    return [center + radius * np.exp(2j * np.pi * (k + 0.5) / count) for k in range(count)]


def estimate_K(t, s: RegionSampler, cfg: SearchConfig | None = None) -> KEstimate:
    """Seeded lower bound for the best constant K with ||u(T)|| <= K sup_X |u|.

    Random restarts over a scaled rational basis, then coordinate refinement of
    the best candidate. Ratios above 1 + sqrt(2) raise KRatioWarning.
    """
    cfg = cfg or SearchConfig()
    t = as_matrix(t, "T")
    region = s.region
    if region is not None:
        w = numrange_boundary(t, region.m)
        tol = 1e-9 * region.scale
        if not all(contains(region, z, -tol) for z in w.witness):
            raise RegionViolation("W(T) is not contained in X")
    c = s.center()
    rho = max(s.circumradius(), 1e-12)
    poles = _ring(c, 1.5 * rho, cfg.ring_poles) + list(cfg.extra_poles)
    dmax = max(cfg.degrees)
    basis = RationalBasis(dmax, poles, c, rho)
    bt = basis.at_matrix(t)
    bs = basis.at_points(s.samples)
    rng = np.random.default_rng(cfg.seed)

    def ratio(coef: np.ndarray) -> float:
        sup = np.abs(bs @ coef).max()
        if sup < 1e-14:
            return 0.0
        return float(np.linalg.norm(np.tensordot(coef, bt, axes=1), 2) / sup)

    ratios = []
    best_val, best_coef = -1.0, None
    for r in range(cfg.restarts):
        coef = np.zeros(basis.size, dtype=complex)
        if r == 0:
            coef[0] = 1.0
        elif r == 1:
            coef[1] = 1.0
        else:
            deg = cfg.degrees[r % len(cfg.degrees)]
            coef[: deg + 1] = rng.standard_normal(deg + 1) + 1j * rng.standard_normal(deg + 1)
            npoles = len(poles)
            if npoles and r % 2:
                coef[dmax + 1:] = rng.standard_normal(npoles) + 1j * rng.standard_normal(npoles)
        val = ratio(coef)
        ratios.append(val)
        if val > best_val:
            best_val, best_coef = val, coef
    coef = best_coef.copy()
    step = 0.5 * np.abs(coef).max()
    directions = (1.0, -1.0, 1j, -1j)
    for i in range(cfg.steps):
        j = i % basis.size
        improved = False
        for d in directions:
            trial = coef.copy()
            trial[j] += step * d
            val = ratio(trial)
            if val > best_val:
                best_val, coef, improved = val, trial, True
                break
        if not improved:
            step *= 0.5
            if step < 1e-14 * np.abs(coef).max():
                step = 0.5 * np.abs(coef).max()
    ratios.append(best_val)
    cert = basis.to_rational(coef)
    try:
        K = spectral_ratio(cert, t, s)
    except (ZeroFunction, PoleOnSpectrum, NearPole):
        K = 0.0
    if K < 1.0:
        cert, K = RationalFunction.constant(1.0), 1.0
    flagged = [v for v in ratios + [K] if v > CROUZEIX_FLAG]
    if flagged:
        warnings.warn(f"spectral ratio {max(flagged):.6f} exceeds 1+sqrt(2)", KRatioWarning, stacklevel=2)
        log.warning("flagged %d spectral ratios above 1+sqrt(2)", len(flagged))
    return KEstimate(K, cert, ratios, flagged)


def random_polynomial(rng: np.random.Generator, max_degree: int = 12) -> RationalFunction:
    deg = int(rng.integers(0, max_degree + 1))
    return RationalFunction(tuple(rng.standard_normal(deg + 1) + 1j * rng.standard_normal(deg + 1)))


def von_neumann_check(t, trials: int = 200, seed: int = 0, sampler: RegionSampler | None = None) -> float:
    """Largest ||p(T)|| / sup_{|z|=1} |p| over random polynomials of degree <= 12."""
    t = as_matrix(t, "T")
    if spectral_norm(t) > 1 + 1e-12:
        raise NotContraction("T is not a contraction")
    s = sampler or disc_sampler()
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        worst = max(worst, spectral_ratio(random_polynomial(rng), t, s))
    return worst
