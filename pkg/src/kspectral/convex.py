"""Numerical ranges as support-function samples on a uniform angle grid."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatch, InputError
from .linalg import as_matrix, direct_sum

DEFAULT_M = 720
TIE_TOL = 1e-12

__all__ = [
    "ConvexRegion",
    "angle_grid",
    "numrange_support",
    "numrange_boundary",
    "hull_of_union",
    "hausdorff",
    "contains",
    "direct_sum",
    "verify_hull_identity",
]


def angle_grid(m: int) -> np.ndarray:
    return 2 * np.pi * np.arange(m) / m


@dataclass(frozen=True)
class ConvexRegion:
    """Convex set sampled by its support function h(θ_k), θ_k = 2πk/m.

    ``witness[k]`` is a boundary point where the supporting line with outward
    normal e^{iθ_k} touches the set.
    """

    support: np.ndarray
    witness: np.ndarray

    def __post_init__(self):
        support = np.asarray(self.support, dtype=float)
        witness = np.asarray(self.witness, dtype=complex)
        if support.ndim != 1 or support.shape != witness.shape:
            raise InputError("support and witness must be 1-d arrays of equal length")
        if support.size < 8:
            raise InputError("a region needs at least 8 angles")
        support.flags.writeable = False
        witness.flags.writeable = False
        object.__setattr__(self, "support", support)
        object.__setattr__(self, "witness", witness)

    @property
    def m(self) -> int:
        return self.support.size

    @property
    def angles(self) -> np.ndarray:
        return angle_grid(self.m)

    @property
    def scale(self) -> float:
        return 1.0 + float(np.max(np.abs(self.support)))

    def center(self) -> complex:
        return complex(np.mean(self.witness))

    def circumradius(self, center: complex | None = None) -> float:
        c = self.center() if center is None else center
        return float(np.max(np.abs(self.witness - c)))

    def inflate(self, delta: float) -> "ConvexRegion":
        """Minkowski sum with the closed disc of radius ``delta``."""
        e = np.exp(1j * self.angles)
        return ConvexRegion(self.support + delta, self.witness + delta * e)

    def check(self, tol: float = 1e-9) -> float:
        """Largest violation of the witness/support consistency invariants."""
        e = np.exp(-1j * self.angles)
        own = np.abs((e * self.witness).real - self.support)
        cross = (np.outer(e, self.witness)).real - self.support[:, None]
        return float(max(own.max(), cross.max(), 0.0))

    def to_json(self) -> dict:
        return {
            "m": self.m,
            "support": self.support.tolist(),
            "witness": [[z.real, z.imag] for z in self.witness],
        }

    @classmethod
    def from_json(cls, data: dict) -> "ConvexRegion":
        w = np.array([complex(a, b) for a, b in data["witness"]])
        region = cls(np.array(data["support"], dtype=float), w)
        if region.m != int(data["m"]):
            raise InputError("m does not match array lengths")
        return region

    # catalog shapes used throughout tests and scenarios

    @classmethod
    def disc(cls, center: complex, radius: float, m: int = DEFAULT_M) -> "ConvexRegion":
        th = angle_grid(m)
        e = np.exp(1j * th)
        return cls(radius + (np.exp(-1j * th) * center).real, center + radius * e)

    @classmethod
    def point(cls, z: complex, m: int = DEFAULT_M) -> "ConvexRegion":
        return cls.disc(z, 0.0, m)

    @classmethod
    def ellipse(cls, center: complex, a: float, b: float, m: int = DEFAULT_M) -> "ConvexRegion":
        th = angle_grid(m)
        c, s = np.cos(th), np.sin(th)
        h = np.sqrt((a * c) ** 2 + (b * s) ** 2)
        w = center + (a * a * c + 1j * b * b * s) / np.where(h > 0, h, 1.0)
        return cls(h + (np.exp(-1j * th) * center).real, w)


def _hermitian_parts(t: np.ndarray, theta: np.ndarray) -> np.ndarray:
    rot = np.exp(-1j * theta)[:, None, None]
    return 0.5 * (rot * t[None] + np.conj(rot) * t.conj().T[None])


def _top(values: np.ndarray, vectors: np.ndarray, t: np.ndarray):
    top = values[-1]
    tol = TIE_TOL * (1.0 + abs(top))
    col = int(np.flatnonzero(values >= top - tol)[0])
    v = vectors[:, col]
    return float(top), complex(np.vdot(v, t @ v))


def numrange_support(t, theta: float) -> tuple[float, complex]:
    """Support value of W(T) in direction θ and a boundary witness ⟨Tv, v⟩."""
    t = as_matrix(t, "T")
    h = _hermitian_parts(t, np.array([theta]))[0]
    values, vectors = np.linalg.eigh(h)
    return _top(values, vectors, t)


def numrange_boundary(t, m: int = DEFAULT_M) -> ConvexRegion:
    """Support sweep of W(T) over ``m`` uniform angles."""
    if m < 8:
        raise InputError("m must be at least 8")
    t = as_matrix(t, "T")
    theta = angle_grid(m)
    values, vectors = np.linalg.eigh(_hermitian_parts(t, theta))
    support = np.empty(m)
    witness = np.empty(m, dtype=complex)
    for k in range(m):
        support[k], witness[k] = _top(values[k], vectors[k], t)
    return ConvexRegion(support, witness)


def _same_grid(r1: ConvexRegion, r2: ConvexRegion) -> None:
    if r1.m != r2.m:
        raise GridMismatch(f"angle grids differ: {r1.m} vs {r2.m}")


def hull_of_union(r1: ConvexRegion, r2: ConvexRegion) -> ConvexRegion:
    _same_grid(r1, r2)
    pick = r2.support > r1.support
    return ConvexRegion(
        np.where(pick, r2.support, r1.support), np.where(pick, r2.witness, r1.witness)
    )


def hausdorff(r1: ConvexRegion, r2: ConvexRegion) -> float:
    """Hausdorff distance between two support-sampled convex bodies."""
    _same_grid(r1, r2)
    return float(np.max(np.abs(r1.support - r2.support)))


def contains(region: ConvexRegion, z: complex, margin: float = 0.0) -> bool:
    proj = (np.exp(-1j * region.angles) * z).real
    return bool(np.all(proj <= region.support - margin))


def verify_hull_identity(a, b, m: int = DEFAULT_M) -> float:
    """Distance between W(A⊕B) and conv(W(A) ∪ W(B)) on an m-angle grid."""
    if m < 64:
        raise InputError("hull identity check needs m >= 64")
    lhs = numrange_boundary(direct_sum(a, b), m)
    rhs = hull_of_union(numrange_boundary(a, m), numrange_boundary(b, m))
    return hausdorff(lhs, rhs)
