"""Seeded experiment orchestration: operators, scenarios, reports, convergence studies."""

from __future__ import annotations

import dataclasses
import datetime
import json
import math
import re
from concurrent.futures import ThreadPoolExecutor
from importlib import resources
from typing import Callable

import numpy as np
import scipy.optimize

from . import io as kio
from .convex import numrange_boundary, numrange_support, verify_hull_identity
from .curves import BoundaryCurve, concat_grids, discretize
from .decomposition import (
    MeasureProjection, auto_contours, calculus_compatibility, decompose_operator, idempotent_system,
    measure_projection_apply, multiply, orthogonalize, verify_block_ranges,
)
from .double_layer import (
    MARGIN_SPACINGS, MeasureVector, elementary_measure, np_matrix, reconstruct, semispectral_density,
)
from .errors import InputError, KSpectralError
from .gleason import (
    GleasonConfig, cauchy_annihilator, get_domain, gleason_distance_lb, measure_part_decomposition,
    mobius_gleason_distance,
)
from .linalg import direct_sum, spectral_norm
from .rational import (
    RationalFunction, SearchConfig, estimate_K, rat_eval, rat_eval_matrix, region_sampler, sup_norm,
    von_neumann_check,
)

SCENARIO_SCHEMA = "kspectral.scenario/1"
REPORT_SCHEMA = "kspectral.report/1"
MAX_OPERATOR_DIM = 64
PROFILES = ("generic", "contraction", "nilpotent_mix", "normal", "split_spectrum")


# random operators ----------------------------------------------------------------


def trial_rng(seed: int, i: int) -> np.random.Generator:
    """Counter-based stream for trial i: independent of execution order."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(i,)))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(np.random.SeedSequence(int(seed)))


def _cgauss(rng: np.random.Generator, *shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)


def _unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    q, r = np.linalg.qr(_cgauss(rng, n, n))
    d = np.diag(r)
    return q * (d / np.abs(d))


def _cluster(rng: np.random.Generator, k: int, centre: complex, radius: float, coupling: float) -> np.ndarray:
    lam = centre + radius * np.sqrt(rng.uniform(size=k)) * np.exp(2j * np.pi * rng.uniform(size=k))
    return np.diag(lam) + coupling * np.triu(_cgauss(rng, k, k), 1)


def random_operator(seed, dim: int, profile: str = "generic", gap: float | None = None,
                    normal: bool = False) -> np.ndarray:
    """Seeded random matrix of a given profile.

    ``profile`` is one of generic, contraction, nilpotent_mix, normal or
    split_spectrum; the last also accepts the form "split_spectrum(g)".
    split_spectrum puts two eigenvalue clusters in discs of radius 1/2
    about 0 and g + 1 (so clusters are >= g apart), then conjugates by a
    similarity with condition number <= 5/3, or by a unitary if ``normal``.
    """
    m = re.fullmatch(r"split_spectrum\(([^)]*)\)", profile)
    if m:
        profile, gap = "split_spectrum", float(m.group(1))
    if profile not in PROFILES:
        raise InputError(f"unknown profile {profile!r}")
    if not 1 <= dim <= MAX_OPERATOR_DIM:
        raise InputError(f"dim must be in [1, {MAX_OPERATOR_DIM}]")
    rng = _rng(seed)
    if profile in ("generic", "contraction"):
        t = _cgauss(rng, dim, dim) / math.sqrt(dim)
        if profile == "contraction":
            t = t / spectral_norm(t)
        return t
    if profile == "nilpotent_mix":
        u = _unitary(rng, dim)
        return u @ np.triu(_cgauss(rng, dim, dim), 1) @ u.conj().T
    if profile == "normal":
        u = _unitary(rng, dim)
        return (u * _cgauss(rng, dim)) @ u.conj().T
    gap = 1.0 if gap is None else float(gap)
    if dim < 2 or gap <= 0:
        raise InputError("split_spectrum needs dim >= 2 and gap > 0")
    k = dim // 2
    coupling = 0.0 if normal else 0.3
    d = np.zeros((dim, dim), dtype=complex)
    d[:k, :k] = _cluster(rng, k, 0.0, 0.5, coupling)
    d[k:, k:] = _cluster(rng, dim - k, gap + 1.0, 0.5, coupling)
    if normal:
        u = _unitary(rng, dim)
        return u @ d @ u.conj().T
    g = _cgauss(rng, dim, dim)
    v = np.eye(dim) + 0.25 * g / spectral_norm(g)
    return v @ d @ np.linalg.inv(v)


def _scale_to_radius(t: np.ndarray, radius: float, m: int = 720) -> np.ndarray:
    """Rescale so the numerical radius equals ``radius``."""
    w = float(numrange_boundary(t, m).support.max())
    return t * (radius / w) if w > 0 else t


def _random_rational(rng: np.random.Generator, poles_pool, avoid: Callable[[complex], bool],
                     max_degree: int = 4, centre: complex = 0.0) -> RationalFunction:
    deg = int(rng.integers(0, max_degree + 1))
    num = _cgauss(rng, deg + 1)
    poles = []
    for p in poles_pool:
        if rng.uniform() < 0.5:
            poles.append((complex(p), int(rng.integers(1, 3))))
    while len(poles) < 2:
        p = complex(centre + 4 * _cgauss(rng, 1)[0])
        if not avoid(p):
            poles.append((p, 1))
    return RationalFunction(tuple(num), tuple(poles))


# scenario and report types --------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class Check:
    criterion: str
    metric: str
    value: float
    op: str
    threshold: float

    @property
    def passed(self) -> bool:
        v = self.value
        if v is None or (isinstance(v, float) and math.isnan(v)):
            return False
        return {"<=": v <= self.threshold, ">=": v >= self.threshold, "==": v == self.threshold}[self.op]

    def to_json(self) -> dict:
        return {**dataclasses.asdict(self), "pass": self.passed}


@dataclasses.dataclass(frozen=True)
class Scenario:
    kind: str
    seed: int
    trials: int
    params: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputError(f"unknown scenario kind {self.kind!r}")
        if not isinstance(self.seed, int) or not 0 <= self.seed < 2**64:
            raise InputError("seed must be a 64-bit unsigned integer")
        if not isinstance(self.trials, int) or self.trials < 1:
            raise InputError("trials must be a positive integer")
        unknown = set(self.params) - set(KINDS[self.kind].defaults) - {"warm_start"}
        if unknown:
            raise InputError(f"unknown params for {self.kind}: {sorted(unknown)}")

    def resolved(self) -> dict:
        return {**KINDS[self.kind].defaults, **self.params}

    def with_params(self, **kw) -> "Scenario":
        return dataclasses.replace(self, params={**self.params, **kw})

    def to_json(self) -> dict:
        return {"schema": SCENARIO_SCHEMA, "kind": self.kind, "seed": self.seed,
                "trials": self.trials, "params": self.params}

    @classmethod
    def from_json(cls, data, seed_override: int | None = None) -> "Scenario":
        if not isinstance(data, dict):
            raise InputError("scenario must be a JSON object")
        unknown = set(data) - {"schema", "kind", "seed", "trials", "params"}
        if unknown:
            raise InputError(f"unknown scenario keys: {sorted(unknown)}")
        if data.get("schema") != SCENARIO_SCHEMA:
            raise InputError(f"scenario schema must be {SCENARIO_SCHEMA!r}")
        if "seed" not in data:
            raise InputError("scenario seed is mandatory")
        seed = data["seed"] if seed_override is None else seed_override
        return cls(data.get("kind"), seed, data.get("trials", 1), dict(data.get("params", {})))


@dataclasses.dataclass
class Report:
    scenario: Scenario
    records: list
    errors: list
    aggregates: dict
    checks: list
    timestamp: str = ""

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_json(self) -> dict:
        return {
            "schema": REPORT_SCHEMA,
            "scenario": self.scenario.to_json(),
            "records": self.records,
            "errors": self.errors,
            "aggregates": self.aggregates,
            "checks": [c.to_json() for c in self.checks],
            "pass": self.passed,
            "timestamp": self.timestamp,
        }

    def csv_rows(self) -> list:
        keys = sorted({k for r in self.records for k, v in r.items() if _scalar(v)})
        rows = [["trial", "error"] + keys]
        by_trial = {r["trial"]: r for r in self.records}
        errs = {e["trial"]: e["error"] for e in self.errors}
        for i in range(self.scenario.trials):
            r = by_trial.get(i, {})
            rows.append([i, errs.get(i, "")] + [r.get(k, "") for k in keys])
        return rows

    def write(self, out_dir, force: bool = False) -> list:
        from pathlib import Path

        out = Path(out_dir)
        targets = [out / "report.json", out / "report.csv"]
        for p in targets:
            if p.exists() and not force:
                raise FileExistsError(f"{p} exists (use --force to overwrite)")
        kio.atomic_write(targets[0], kio.dumps(self.to_json()), force)
        kio.atomic_write(targets[1], kio.csv_text(self.csv_rows()), force)
        return targets


def _scalar(v) -> bool:
    return isinstance(v, (int, float, str, bool)) or v is None


# kinds ----------------------------------------------------------------------------


@dataclasses.dataclass(frozen=True)
class Kind:
    defaults: dict
    trial: Callable  # (rng, params, i) -> dict
    checks: Callable  # (records, errors, params) -> (aggregates, [Check])


def _max(records, key):
    vals = [r[key] for r in records if r.get(key) is not None]
    return float(max(vals)) if vals else float("nan")


def _error_check(criterion: str, errors) -> Check:
    return Check(criterion, "trial_errors", len(errors), "==", 0)


def _hull_trial(rng, p, i):
    da, db = (int(x) for x in rng.integers(1, p["max_dim"] + 1, size=2))
    a = random_operator(rng, da, p["profile"])
    b = random_operator(rng, db, p["profile"])
    return {
        "dim_a": da,
        "dim_b": db,
        "hausdorff": verify_hull_identity(a, b, p["m"]),
        "sampling_gap": _sampling_gap(direct_sum(a, b), p["m"]),
    }


def _sampling_gap(t: np.ndarray, m: int) -> float:
    """Support of W(T) minus support of the witness polygon at the m mid-angles."""
    region = numrange_boundary(t, m)
    mid = region.angles + np.pi / m
    exact = np.array([numrange_support(t, th)[0] for th in mid])
    poly = (np.exp(-1j * mid)[:, None] * region.witness[None, :]).real.max(axis=1)
    return float(np.max(exact - poly))


def _hull_checks(records, errors, p):
    agg = {"max_hausdorff": _max(records, "hausdorff"), "max_sampling_gap": _max(records, "sampling_gap")}
    return agg, [Check("AC1", "max_hausdorff", agg["max_hausdorff"], "<=", 1e-8), _error_check("AC1", errors)]


def _vn_trial(rng, p, i):
    d = int(rng.integers(1, p["max_dim"] + 1))
    t = random_operator(rng, d, "contraction")
    seed = int(rng.integers(2**32))
    return {"dim": d, "norm": spectral_norm(t), "max_ratio": von_neumann_check(t, p["polynomials"], seed)}


def _vn_checks(records, errors, p):
    agg = {"max_ratio": _max(records, "max_ratio")}
    return agg, [Check("AC2", "max_ratio", agg["max_ratio"], "<=", 1 + 1e-8), _error_check("AC2", errors)]


def _k_trial(rng, p, i):
    d = int(rng.integers(2, p["max_dim"] + 1))
    t = random_operator(rng, d, p["profile"])
    region = numrange_boundary(t, p["m"]).inflate(p["inflate"])
    cfg = SearchConfig.from_json({**p["search"], "seed": int(rng.integers(2**32))})
    est = estimate_K(t, region_sampler(region), cfg)
    return {
        "dim": d,
        "K": est.K,
        "max_ratio": float(max(est.ratios)),
        "ratios_logged": len(est.ratios),
        "flagged": len(est.flagged),
        "certificate": est.certificate.to_json(),
    }


def _k_checks(records, errors, p):
    finite = all(math.isfinite(r["K"]) for r in records) and bool(records)
    agg = {"max_K": _max(records, "K"), "flagged_events": sum(r["flagged"] for r in records)}
    return agg, [
        Check("AC3", "all_K_finite", int(finite), "==", 1),
        Check("AC3", "flagged_events", agg["flagged_events"], "==", 0),
        _error_check("AC3", errors),
    ]


def _np_operator(rng, p, i):
    if i == 0 and p["include_jordan"]:
        return np.array([[0, 0.9], [0, 0]], dtype=complex)
    t = random_operator(rng, p["dim"], p["profile"])
    return _scale_to_radius(t, p["numerical_radius"])


def _np_trial(rng, p, i):
    t = _np_operator(rng, p, i)
    curve = BoundaryCurve.from_json(p["curve"])
    fns = [RationalFunction.from_json(u) for u in p["functions"]]
    ladder = sorted(p["M"])
    finest = discretize(curve, ladder[-1])
    margin = p["margin"]
    if margin == "finest":
        margin = MARGIN_SPACINGS * finest.spacing
    elif margin == "per_rung":
        margin = None
    rec = {"dim": t.shape[0]}
    exact = [rat_eval_matrix(u, t) for u in fns]
    for M in ladder:
        grid = finest if M == ladder[-1] else discretize(curve, M)
        op = np_matrix(grid)
        dens = semispectral_density(grid, t, margin)
        rec[f"residual_M{M}"] = max(
            spectral_norm(reconstruct(u, t, grid, op, dens) - e) for u, e in zip(fns, exact)
        )
        if M == ladder[-1]:
            rec["hermitian_defect"] = dens.hermitian_defect()
            rec["min_eigenvalue"] = dens.min_eigenvalue()
            rec["sum_residual"] = spectral_norm(dens.total() - np.eye(t.shape[0]))
    return rec


def _decay_ok(values, floor: float) -> bool:
    return all(b <= a or max(a, b) <= floor for a, b in zip(values, values[1:]))


def _np_checks(records, errors, p):
    ladder = sorted(p["M"])
    agg = {f"max_residual_M{M}": _max(records, f"residual_M{M}") for M in ladder}
    slopes = []
    for a, b in zip(ladder, ladder[1:]):
        ra, rb = agg[f"max_residual_M{a}"], agg[f"max_residual_M{b}"]
        slopes.append(math.log2(ra / rb) if ra > 0 and rb > 0 else float("nan"))
    agg["decay_log2_ratios"] = slopes
    monotone = bool(records) and all(
        _decay_ok([r[f"residual_M{M}"] for M in ladder], p["floor"]) for r in records
    )
    agg["max_hermitian_defect"] = _max(records, "hermitian_defect")
    agg["min_eigenvalue"] = min((r["min_eigenvalue"] for r in records), default=float("nan"))
    agg["max_sum_residual"] = _max(records, "sum_residual")
    finest = f"max_residual_M{ladder[-1]}"
    return agg, [
        Check("AC4", finest, agg[finest], "<=", 1e-6),
        Check("AC4", "monotone_decay", int(monotone), "==", 1),
        Check("AC5", "max_hermitian_defect", agg["max_hermitian_defect"], "<=", 1e-14),
        Check("AC5", "min_eigenvalue", agg["min_eigenvalue"], ">=", -1e-10),
        Check("AC5", "max_sum_residual", agg["max_sum_residual"], "<=", 1e-8),
        _error_check("AC4", errors),
    ]


def _real_trial(rng, p, i):
    shift = complex(*p["second_center"])
    grids = [discretize(BoundaryCurve.disc(0, 1), p["M"]), discretize(BoundaryCurve.disc(shift, 1), p["M"])]
    values, rec = [], {}
    for k, (grid, c) in enumerate(zip(grids, (0, shift))):
        d = int(rng.integers(2, p["max_dim"] + 1))
        t = _scale_to_radius(random_operator(rng, d, p["profile"]), p["numerical_radius"]) + c * np.eye(d)
        f = _cgauss(rng, d)
        f /= np.linalg.norm(f)
        mu = elementary_measure(t, grid, np_matrix(grid), f, f)
        values.append(mu.values)
        rec[f"max_imag_component{k}"] = float(np.abs(mu.values.imag).max())
    joint = MeasureVector(concat_grids(*grids), np.concatenate(values))
    restricted = [measure_projection_apply(MeasureProjection.for_components(joint.grid, [k]), joint) for k in (0, 1)]
    rec["max_imag"] = float(np.abs(joint.values.imag).max())
    rec["max_imag_restricted"] = max(float(np.abs(q.values.imag).max()) for q in restricted)
    return rec


def _real_checks(records, errors, p):
    agg = {"max_imag": _max(records, "max_imag"), "max_imag_restricted": _max(records, "max_imag_restricted")}
    return agg, [
        Check("AC6", "max_imag", agg["max_imag"], "<=", 1e-10),
        Check("AC6", "max_imag_restricted", agg["max_imag_restricted"], "<=", 1e-10),
        _error_check("AC6", errors),
    ]


def _riesz_trial(rng, p, i):
    d = int(rng.integers(p["min_dim"], p["max_dim"] + 1))
    normal = p["normal_every"] > 0 and i % p["normal_every"] == 0
    t = random_operator(rng, d, "split_spectrum", gap=p["gap"], normal=normal)
    lam = np.sort_complex(np.linalg.eigvals(t))
    k = int(np.sum(lam.real < (p["gap"] + 1) / 2))
    contours = auto_contours(t, [list(range(k)), list(range(k, d))], M=p["M"])
    sys = idempotent_system(t, contours)
    osys = orthogonalize(sys)
    dec = decompose_operator(t, osys)
    zeta0 = 1j * (spectral_norm(t) + 2.0)
    u = RationalFunction.simple_pole(zeta0)
    sres, ores = sys.residuals(), osys.residuals()
    return {
        "dim": d,
        "normal": normal,
        "eigen_gap": float(np.abs(lam[:k, None] - lam[None, k:]).min()),
        "idempotent": max(sres["idempotent"], sres["cross"]),
        "commutation": sres["commutation"],
        "P_self_adjoint": ores["self_adjoint"],
        "P_idempotent": max(ores["idempotent"], ores["cross"], ores["sum"]),
        "off_block": dec.residual,
        "compatibility": calculus_compatibility(u, t, osys, dec),
        "block_hull": verify_block_ranges(dec.blocks),
        "S_minus_I": spectral_norm(osys.S - np.eye(d)) if normal else None,
        "condition_number": osys.condition_number(),
    }


def _riesz_checks(records, errors, p):
    keys = ["idempotent", "commutation", "P_self_adjoint", "P_idempotent", "off_block", "compatibility",
            "block_hull", "S_minus_I", "eigen_gap", "condition_number"]
    agg = {f"max_{k}": _max(records, k) for k in keys}
    agg["min_eigen_gap"] = min((r["eigen_gap"] for r in records), default=float("nan"))
    return agg, [
        Check("AC7", "max_idempotent", agg["max_idempotent"], "<=", 1e-8),
        Check("AC7", "max_commutation", agg["max_commutation"], "<=", 1e-8),
        Check("AC7", "max_P_self_adjoint", agg["max_P_self_adjoint"], "<=", 1e-9),
        Check("AC7", "max_P_idempotent", agg["max_P_idempotent"], "<=", 1e-9),
        Check("AC7", "max_off_block", agg["max_off_block"], "<=", 1e-8),
        Check("AC7", "max_compatibility", agg["max_compatibility"], "<=", 1e-8),
        Check("AC7", "max_block_hull", agg["max_block_hull"], "<=", 1e-8),
        Check("AC7", "max_S_minus_I", agg["max_S_minus_I"], "<=", 1e-9),
        Check("AC7", "min_eigen_gap", agg["min_eigen_gap"], ">=", p["gap"]),
        _error_check("AC7", errors),
    ]


def mobius_bruteforce(x1: complex, x2: complex, n: int = 200) -> float:
    """max over a in the disc of |b_a(x1) - b_a(x2)|, b_a(z) = (z - a)/(1 - conj(a) z).

    Grid search over a polar grid, then Nelder-Mead from the best node.
    Used as an independent check of the closed-form two-point value.
    """
    def f(a: complex) -> float:
        if abs(a) >= 1:
            return 0.0
        b = lambda z: (z - a) / (1 - np.conj(a) * z)  # noqa: E731
        return float(abs(b(x1) - b(x2)))

    r = np.sqrt((np.arange(n) + 0.5) / n)
    th = 2 * np.pi * np.arange(n) / n
    pts = (r[:, None] * np.exp(1j * th[None, :])).ravel()
    vals = np.array([f(a) for a in pts])
    a0 = pts[int(np.argmax(vals))]
    res = scipy.optimize.minimize(lambda v: -f(complex(v[0], v[1])), [a0.real, a0.imag],
                                  method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 4000})
    return max(float(vals.max()), float(-res.fun))


def _gleason_trial(rng, p, i):
    case = p["cases"][i % len(p["cases"])]
    domain = get_domain(case["domain"])
    x1, x2 = complex(*case["x1"]), complex(*case["x2"])
    overrides = {**p["config"], **case.get("config", {})}
    cfg = GleasonConfig(**{**overrides, "seed": int(rng.integers(2**32))})
    warm = None
    if p.get("warm_start"):
        warm = RationalFunction.from_json(p["warm_start"][i])
    est = gleason_distance_lb(x1, x2, domain, cfg, warm_start=warm)
    rec = {
        "domain": domain.id,
        "degree": cfg.degree,
        "d_hat": est.d_hat,
        "lo": case.get("lo"),
        "hi": case.get("hi"),
        "verification_sup": est.verification_sup,
        "certificate": est.certificate.to_json(),
    }
    lo = -math.inf if case.get("lo") is None else case["lo"]
    hi = math.inf if case.get("hi") is None else case["hi"]
    rec["in_bounds"] = bool(lo <= est.d_hat <= hi)
    if domain.id == "disc" and p["oracle_check"]:
        closed = mobius_gleason_distance(x1, x2)
        rec["oracle_closed_form"] = closed
        rec["oracle_bruteforce"] = mobius_bruteforce(x1, x2)
        rec["oracle_gap"] = abs(closed - rec["oracle_bruteforce"])
    return rec


def _gleason_checks(records, errors, p):
    agg = {
        "min_d_hat": min((r["d_hat"] for r in records), default=float("nan")),
        "max_verification_sup": _max(records, "verification_sup"),
        "all_in_bounds": int(bool(records) and all(r["in_bounds"] for r in records)),
        "max_oracle_gap": _max(records, "oracle_gap"),
    }
    checks = [
        Check("AC8", "all_in_bounds", agg["all_in_bounds"], "==", 1),
        Check("AC8", "max_verification_sup", agg["max_verification_sup"], "<=", 1 + 1e-9),
        _error_check("AC8", errors),
    ]
    if any("oracle_gap" in r for r in records):
        checks.append(Check("AC8", "max_oracle_gap", agg["max_oracle_gap"], "<=", 1e-6))
    return agg, checks


def _measure_trial(rng, p, i):
    domain = get_domain(p["domain"])
    grid = domain.grid(p["M"])
    centres = [complex(c["outer"].params["center"]) for c in domain.components]
    mu_vals = np.zeros(grid.M, dtype=complex)
    for k, c in enumerate(centres):
        for j in domain.grid_components(k):
            mu_vals += cauchy_annihilator(grid, j, c, complex(_cgauss(rng, 1)[0])).values
    mu = MeasureVector(grid, mu_vals)
    q = MeasureProjection.for_components(grid, domain.grid_components(0))
    qmu = measure_projection_apply(q, mu)
    worst_ann = worst_rel = 0.0
    worst_mult = 0
    for _ in range(p["functions"]):
        u = _random_rational(rng, domain.admissible_poles, lambda z: domain.contains(z, 0.2),
                             centre=domain.center())
        uv = rat_eval(u, grid.nodes)
        scale = sup_norm(u, domain.shilov_sampler(p["M"]), refine=False) * mu.total_variation()
        for meas in (mu, qmu):
            worst_ann = max(worst_ann, abs(meas.integrate(u)))
            worst_rel = max(worst_rel, abs(meas.integrate(u)) / scale)
        lhs = multiply(uv, qmu).values
        rhs = measure_projection_apply(q, multiply(uv, mu)).values
        worst_mult += int(not np.array_equal(lhs, rhs))
    generic = MeasureVector(grid, _cgauss(rng, grid.M))
    parts = measure_part_decomposition(generic, domain)
    return {
        "annihilation": worst_ann,
        "annihilation_relative": worst_rel,
        "multiplicativity_failures": worst_mult,
        "tv_defect": parts.tv_defect(),
        "supports_disjoint": int(parts.supports_disjoint()),
    }


def _measure_checks(records, errors, p):
    agg = {
        "max_annihilation": _max(records, "annihilation"),
        "max_annihilation_relative": _max(records, "annihilation_relative"),
        "multiplicativity_failures": sum(r["multiplicativity_failures"] for r in records),
        "max_tv_defect": _max(records, "tv_defect"),
        "all_disjoint": int(bool(records) and all(r["supports_disjoint"] for r in records)),
    }
    return agg, [
        Check("AC9", "max_annihilation", agg["max_annihilation"], "<=", 1e-8),
        Check("AC9", "multiplicativity_failures", agg["multiplicativity_failures"], "==", 0),
        Check("AC9", "max_tv_defect", agg["max_tv_defect"], "==", 0.0),
        Check("AC9", "all_disjoint", agg["all_disjoint"], "==", 1),
        _error_check("AC9", errors),
    ]


_DEFAULT_FUNCTIONS = [
    RationalFunction.constant(1.0).to_json(),
    RationalFunction.monomial(1).to_json(),
    RationalFunction.monomial(2).to_json(),
    RationalFunction.monomial(3).to_json(),
    RationalFunction.simple_pole(3.0).to_json(),
]

KINDS: dict[str, Kind] = {
    "hull_identity": Kind({"max_dim": 6, "m": 720, "profile": "generic"}, _hull_trial, _hull_checks),
    "von_neumann": Kind({"max_dim": 6, "polynomials": 200}, _vn_trial, _vn_checks),
    "k_search": Kind(
        {"max_dim": 4, "m": 720, "inflate": 0.05, "profile": "generic", "search": {}}, _k_trial, _k_checks
    ),
    "np_reconstruct": Kind(
        {
            "curve": BoundaryCurve.ellipse(0, 2, 1).to_json(),
            "M": [64, 128, 256, 512],
            "dim": 4,
            "profile": "generic",
            "include_jordan": True,
            "numerical_radius": 0.5,
            "margin": "finest",
            "functions": _DEFAULT_FUNCTIONS,
            "floor": 1e-11,
        },
        _np_trial,
        _np_checks,
    ),
    "realness": Kind(
        {"max_dim": 5, "M": 256, "profile": "generic", "numerical_radius": 0.5, "second_center": [5, 0]},
        _real_trial,
        _real_checks,
    ),
    "riesz_decomposition": Kind(
        {"min_dim": 2, "max_dim": 8, "gap": 1.0, "M": 256, "normal_every": 5}, _riesz_trial, _riesz_checks
    ),
    "gleason_distance": Kind(
        {
            "cases": [
                {"domain": "disc", "x1": [0, 0], "x2": [0.5, 0], "lo": 0.53, "hi": 0.536, "config": {"degree": 16}},
                {"domain": "two_discs", "x1": [0, 0], "x2": [5, 0], "lo": 1.8, "config": {"degree": 12}},
            ],
            "config": {},
            "oracle_check": True,
        },
        _gleason_trial,
        _gleason_checks,
    ),
    "measure_decomposition": Kind({"domain": "two_discs", "M": 256, "functions": 50}, _measure_trial, _measure_checks),
}


# running ----------------------------------------------------------------------------


_TRIAL_ERRORS = (KSpectralError, np.linalg.LinAlgError, ArithmeticError, ValueError)


def _run_trial(kind: Kind, s: Scenario, params: dict, i: int):
    try:
        rec = kind.trial(trial_rng(s.seed, i), params, i)
        return {"trial": i, **rec}, None
    except _TRIAL_ERRORS as exc:
        return None, {"trial": i, "error": type(exc).__name__, "message": str(exc)}


def run(s: Scenario, workers: int = 1) -> Report:
    """Execute every trial, aggregate, and apply the acceptance thresholds.

    Trial errors are recorded, never raised. With ``workers > 1`` trials run
    on a thread pool; results are still assembled in trial order.
    """
    kind = KINDS[s.kind]
    params = s.resolved()
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(lambda i: _run_trial(kind, s, params, i), range(s.trials)))
    else:
        results = [_run_trial(kind, s, params, i) for i in range(s.trials)]
    records = [r for r, _ in results if r is not None]
    errors = [e for _, e in results if e is not None]
    agg, checks = kind.checks(records, errors, params)
    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat(timespec="seconds")
    return Report(s, records, errors, agg, checks, stamp)


def _nested(params: dict, dotted: str, value) -> dict:
    """{head: ...} override setting params[a][b]... = value for dotted="a.b..."."""
    head, *rest = dotted.split(".")
    if not rest:
        return {head: value}
    inner = params.get(head)
    if not isinstance(inner, dict):
        raise InputError(f"parameter {head!r} is not a mapping")
    return {head: {**inner, **_nested(inner, ".".join(rest), value)}}


def convergence_study(s: Scenario, parameter: str, ladder, metric: str, expect: str = "decrease",
                      floor: float = 0.0, min_ratio: float | None = None) -> dict:
    """Run ``s`` once per rung of ``parameter`` and tabulate ``aggregates[metric]``.

    ``parameter`` may be dotted ("config.degree") to reach into a mapping.

    For expect="decrease" each ratio previous/current must be >= ``min_ratio``
    (default 1) unless both values are at or below ``floor``. For
    expect="increase" values must be non-decreasing; gleason_distance degree
    ladders are warm-started from the previous rung's certificates.
    """
    ladder = list(ladder)
    if ladder != sorted(ladder):
        raise InputError("ladder must be sorted ascending")
    if expect not in ("decrease", "increase"):
        raise InputError("expect must be 'decrease' or 'increase'")
    rows, reports, warm = [], [], None
    for rung in ladder:
        sc = s.with_params(**_nested(s.resolved(), parameter, rung))
        if warm is not None:
            sc = sc.with_params(warm_start=warm)
        rep = run(sc)
        reports.append(rep)
        rows.append({"rung": rung, "value": rep.aggregates[metric], "trial_errors": len(rep.errors)})
        if s.kind == "gleason_distance" and not rep.errors:
            warm = [r["certificate"] for r in rep.records]
    values = [r["value"] for r in rows]
    ratios = [a / b if b else math.inf for a, b in zip(values, values[1:])]
    if expect == "decrease":
        need = 1.0 if min_ratio is None else min_ratio
        ok = all(r >= need or max(a, b) <= floor for r, a, b in zip(ratios, values, values[1:]))
    else:
        ok = all(b >= a for a, b in zip(values, values[1:]))
    ok = ok and all(r["trial_errors"] == 0 for r in rows)
    return {
        "schema": REPORT_SCHEMA,
        "scenario": s.to_json(),
        "parameter": parameter,
        "metric": metric,
        "table": rows,
        "ratios": ratios,
        "expect": expect,
        "pass": bool(ok),
    }


def bundled_scenarios() -> list:
    base = resources.files("kspectral").joinpath("data/scenarios")
    return sorted(p.name for p in base.iterdir() if p.name.endswith(".json"))


def load_bundled(name: str, seed_override: int | None = None) -> Scenario:
    if not name.endswith(".json"):
        name += ".json"
    if name not in bundled_scenarios():
        raise InputError(f"no bundled scenario {name!r}")
    text = resources.files("kspectral").joinpath(f"data/scenarios/{name}").read_text()
    return Scenario.from_json(json.loads(text), seed_override)
