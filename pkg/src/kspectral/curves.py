"""Convex boundary curves and their trapezoid quadrature grids."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.special

from .errors import BadCurve, GridMismatch, InputError


@dataclass(frozen=True)
class BoundaryCurve:
    """Counterclockwise convex curve γ(t), t in [0, 2π).

    kind is one of ``disc`` (center, radius), ``ellipse`` (center, a, b) or
    ``smoothed_polygon`` (vertices, rounding). Smoothed polygons are
    parametrized proportionally to arclength.
    """

    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        p = dict(self.params)
        if self.kind == "disc":
            p["center"] = complex(p.get("center", 0))
            p["radius"] = float(p.get("radius", 1))
            if p["radius"] <= 0:
                raise BadCurve("radius must be positive")
        elif self.kind == "ellipse":
            p["center"] = complex(p.get("center", 0))
            p["a"], p["b"] = float(p["a"]), float(p["b"])
            if min(p["a"], p["b"]) <= 0:
                raise BadCurve("semi-axes must be positive")
        elif self.kind == "smoothed_polygon":
            p["vertices"] = tuple(complex(v) for v in p["vertices"])
            p["rounding"] = float(p["rounding"])
            p.update(_rounded_polygon(p["vertices"], p["rounding"]))
        else:
            raise BadCurve(f"unknown curve kind {self.kind!r}")
        object.__setattr__(self, "params", p)

    @classmethod
    def disc(cls, center: complex = 0, radius: float = 1.0) -> "BoundaryCurve":
        return cls("disc", {"center": center, "radius": radius})

    @classmethod
    def ellipse(cls, center: complex = 0, a: float = 2.0, b: float = 1.0) -> "BoundaryCurve":
        return cls("ellipse", {"center": center, "a": a, "b": b})

    @classmethod
    def smoothed_polygon(cls, vertices, rounding: float) -> "BoundaryCurve":
        return cls("smoothed_polygon", {"vertices": vertices, "rounding": rounding})

    def to_json(self) -> dict:
        p = self.params
        if self.kind == "smoothed_polygon":
            params = {"vertices": [[v.real, v.imag] for v in p["vertices"]], "rounding": p["rounding"]}
        else:
            params = {k: ([v.real, v.imag] if isinstance(v, complex) else v) for k, v in p.items()}
        return {"kind": self.kind, "params": params}

    @classmethod
    def from_json(cls, data: dict) -> "BoundaryCurve":
        unknown = set(data) - {"kind", "params"}
        if unknown:
            raise InputError(f"unknown curve keys {sorted(unknown)}")
        params = dict(data.get("params", {}))
        if "center" in params and isinstance(params["center"], (list, tuple)):
            params["center"] = complex(*params["center"])
        if "vertices" in params:
            params["vertices"] = [complex(*v) for v in params["vertices"]]
        return cls(data["kind"], params)

    def geometry(self, t):
        """Return (γ, γ', κ) at parameters ``t``."""
        t = np.asarray(t, dtype=float)
        p = self.params
        if self.kind == "disc":
            e = np.exp(1j * t)
            r = p["radius"]
            return p["center"] + r * e, 1j * r * e, np.full(t.shape, 1 / r)
        if self.kind == "ellipse":
            a, b = p["a"], p["b"]
            c, s = np.cos(t), np.sin(t)
            speed2 = (a * s) ** 2 + (b * c) ** 2
            return p["center"] + a * c + 1j * b * s, -a * s + 1j * b * c, a * b / speed2**1.5
        return _polygon_geometry(p, t)

    def __call__(self, t):
        return self.geometry(t)[0]

    def perimeter(self) -> float:
        p = self.params
        if self.kind == "disc":
            return 2 * np.pi * p["radius"]
        if self.kind == "smoothed_polygon":
            return p["length"]
        from scipy.integrate import quad

        return quad(lambda t: abs(self.geometry(t)[1]), 0, 2 * np.pi, epsabs=1e-13, epsrel=1e-13, limit=200)[0]

    def circumradius(self) -> float:
        z = self(np.linspace(0, 2 * np.pi, 721))
        c = np.mean(z[:-1])
        return float(np.max(np.abs(z - c)))


def _rounded_polygon(vertices, r: float) -> dict:
    v = np.asarray(vertices, dtype=complex)
    n = v.size
    if n < 3:
        raise BadCurve("a polygon needs at least 3 vertices")
    edges = np.roll(v, -1) - v
    area2 = np.sum((v.conj() * np.roll(v, -1)).imag)
    if area2 <= 0:
        raise BadCurve("vertices must be listed counterclockwise")
    cross = (edges.conj() * np.roll(edges, -1)).imag
    if np.any(cross <= 0):
        raise BadCurve("polygon is not strictly convex")
    circ = np.max(np.abs(v - v.mean()))
    if r < 0.05 * circ:
        raise BadCurve("rounding radius must be at least 0.05 x circumradius")
    tang = edges / np.abs(edges)
    normal = -1j * tang
    # inset line k: Re(conj(n_k) z) = Re(conj(n_k) v_k) - r; corner k sits between edges k-1 and k
    offs = (np.conj(normal) * v).real - r
    inner = np.empty(n, dtype=complex)
    for k in range(n):
        n1, n2 = normal[k - 1], normal[k]
        a = np.array([[n1.real, n1.imag], [n2.real, n2.imag]])
        x = np.linalg.solve(a, [offs[k - 1], offs[k]])
        inner[k] = x[0] + 1j * x[1]
    seg_len = np.abs(np.roll(inner, -1) - inner)
    if np.any(((np.roll(inner, -1) - inner) * np.conj(tang)).real <= 0):
        raise BadCurve("rounding radius too large for this polygon")
    turn = np.angle(normal / np.roll(normal, 1))  # exterior angle at corner k
    pieces = []  # (kind, length, data)
    for k in range(n):
        pieces.append(("arc", r * turn[k], (inner[k], np.angle(normal[k - 1]), turn[k])))
        pieces.append(("seg", seg_len[k], (inner[k] + r * normal[k], tang[k])))
    lengths = np.array([pc[1] for pc in pieces])
    return {"pieces": pieces, "starts": np.concatenate([[0.0], np.cumsum(lengths)[:-1]]), "length": float(lengths.sum())}


def _polygon_at_s(p: dict, s: np.ndarray):
    """Point, unit tangent and curvature at arclength ``s``."""
    s = np.mod(s, p["length"])
    idx = np.clip(np.searchsorted(p["starts"], s, side="right") - 1, 0, len(p["pieces"]) - 1)
    z = np.empty(s.shape, dtype=complex)
    tau = np.empty(s.shape, dtype=complex)
    kappa = np.empty(s.shape)
    r = p["rounding"]
    for i, (kind, _, data) in enumerate(p["pieces"]):
        sel = idx == i
        if not np.any(sel):
            continue
        ds = s[sel] - p["starts"][i]
        if kind == "arc":
            centre, phi0, _ = data
            phi = phi0 + ds / r
            z[sel] = centre + r * np.exp(1j * phi)
            tau[sel] = 1j * np.exp(1j * phi)
            kappa[sel] = 1 / r
        else:
            start, direction = data
            z[sel] = start + ds * direction
            tau[sel] = direction
            kappa[sel] = 0.0
    return z, tau, kappa


def _polygon_geometry(p: dict, t: np.ndarray):
    speed = p["length"] / (2 * np.pi)
    z, tau, kappa = _polygon_at_s(p, np.mod(t, 2 * np.pi) * speed)
    return z, speed * tau, kappa


GRADING_ORDER = 6


def _graded_polygon_nodes(p: dict, M: int):
    """Arclength nodes and weights for a rounded polygon.

    Each arc and segment gets a midpoint rule in a variable u with
    s = start + length * I_u(q+1, q+1) (regularized incomplete beta), so ds/du
    vanishes to order q at the junctions where the curvature jumps. The
    integrand then stays smooth across pieces and the rule keeps high order.
    Midpoints never land on a junction.
    """
    lengths = np.array([pc[1] for pc in p["pieces"]])
    counts = np.maximum(4, np.floor(M * lengths / lengths.sum()).astype(int))
    while counts.sum() > M:
        counts[np.argmax(counts)] -= 1
    while counts.sum() < M:
        counts[np.argmax(lengths / counts)] += 1
    q = GRADING_ORDER
    s_nodes, weights = [], []
    for start, length, m in zip(p["starts"], lengths, counts):
        u = (np.arange(m) + 0.5) / m
        s_nodes.append(start + length * scipy.special.betainc(q + 1, q + 1, u))
        dens = u**q * (1 - u) ** q / scipy.special.beta(q + 1, q + 1)
        weights.append(length * dens / m)
    return np.concatenate(s_nodes), np.concatenate(weights)


@dataclass(frozen=True)
class BoundaryGrid:
    """Quadrature nodes on one or more boundary curves.

    weights are arclength weights |γ'(t_j)|·2π/M, normals are outward unit
    normals (-i times the unit tangent), ``component`` labels the curve each
    node belongs to.
    """

    nodes: np.ndarray
    normals: np.ndarray
    weights: np.ndarray
    curvatures: np.ndarray
    params: np.ndarray
    component: np.ndarray
    speeds: np.ndarray

    @property
    def M(self) -> int:
        return self.nodes.size

    @property
    def spacing(self) -> float:
        """Largest node cell length."""
        return float(self.weights.max())

    def mask(self, components) -> np.ndarray:
        return np.flatnonzero(np.isin(self.component, list(components)))

    def same_as(self, other: "BoundaryGrid") -> bool:
        return self is other or (self.M == other.M and np.array_equal(self.nodes, other.nodes))

    def require_same(self, other: "BoundaryGrid") -> None:
        if not self.same_as(other):
            raise GridMismatch("measures live on different grids")

    def to_csv_rows(self) -> list:
        rows = [("t", "re_zeta", "im_zeta", "re_n", "im_n", "w", "kappa")]
        for j in range(self.M):
            z, n = self.nodes[j], self.normals[j]
            rows.append((self.params[j], z.real, z.imag, n.real, n.imag, self.weights[j], self.curvatures[j]))
        return rows


def discretize(curve: BoundaryCurve, M: int) -> BoundaryGrid:
    """Trapezoid grid with M nodes.

    Discs and ellipses use equal parameter steps. Rounded polygons use the
    graded per-piece rule of ``_graded_polygon_nodes``; there ``params`` holds
    the quadrature variable 2π(j + 1/2)/M and ``speeds`` is dζ/d(params).
    """
    if M < 32 or M % 2:
        raise InputError("M must be even and at least 32")
    if curve.kind == "smoothed_polygon":
        if M < 4 * len(curve.params["pieces"]):
            raise InputError("M too small for this polygon")
        s, w = _graded_polygon_nodes(curve.params, M)
        z, tau, kappa = _polygon_at_s(curve.params, s)
        t = 2 * np.pi * (np.arange(M) + 0.5) / M
        dz = tau * w * M / (2 * np.pi)
    else:
        # graded polygon speeds are tiny near junctions by design, so the
        # speed check applies only to the smooth parametrizations
        t = 2 * np.pi * np.arange(M) / M
        z, dz, kappa = curve.geometry(t)
        speed = np.abs(dz)
        if np.any(speed < 1e-9):
            raise BadCurve("degenerate parametrization")
        tau, w = dz / speed, speed * 2 * np.pi / M
    if np.any(kappa < 0):
        raise BadCurve("negative curvature: curve is not convex")
    return BoundaryGrid(
        nodes=z,
        normals=-1j * tau,
        weights=w,
        curvatures=kappa,
        params=t,
        component=np.zeros(M, dtype=int),
        speeds=dz,
    )


def concat_grids(*grids: BoundaryGrid) -> BoundaryGrid:
    """Multi-component grid; component labels follow argument order."""
    return BoundaryGrid(
        nodes=np.concatenate([g.nodes for g in grids]),
        normals=np.concatenate([g.normals for g in grids]),
        weights=np.concatenate([g.weights for g in grids]),
        curvatures=np.concatenate([g.curvatures for g in grids]),
        params=np.concatenate([g.params for g in grids]),
        component=np.concatenate([np.full(g.M, i) for i, g in enumerate(grids)]),
        speeds=np.concatenate([g.speeds for g in grids]),
    )
