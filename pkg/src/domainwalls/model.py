"""Parameters, profiles, the two-roll potential and its derivatives."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

__all__ = [
    "Params",
    "Profile",
    "EnergyReport",
    "Equilibrium",
    "M_MINUS",
    "M_PLUS",
    "potential",
    "grad_potential",
    "hessian_potential",
    "coercivity_ratio",
    "coercivity_check",
    "rescale_to_original",
    "rescale_from_original",
    "apply_clamps",
]


@dataclass(frozen=True)
class Params:
    """Model parameters (eps, g) and the truncated grid on [-L, L] with n intervals."""

    eps: float
    g: float
    L: float = 30.0
    n: int = 3000

    def __post_init__(self) -> None:
        if not (self.eps > 0 and math.isfinite(self.eps)):
            raise ValueError(f"eps must satisfy eps > 0, got {self.eps!r}")
        if not (self.g > 1 and math.isfinite(self.g)):
            raise ValueError(f"g must satisfy g > 1, got {self.g!r}")
        if not (self.L > 0 and math.isfinite(self.L)):
            raise ValueError(f"L must satisfy L > 0, got {self.L!r}")
        if int(self.n) != self.n or self.n < 16 or self.n % 2:
            raise ValueError(f"n must be an even integer >= 16, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return 2.0 * self.L / self.n

    def grid(self) -> np.ndarray:
        return np.linspace(-self.L, self.L, self.n + 1)

    def replace(self, **changes) -> Params:
        kw = {"eps": self.eps, "g": self.g, "L": self.L, "n": self.n}
        kw.update(changes)
        return Params(**kw)


@dataclass(frozen=True)
class Profile:
    """Real pair (A, B) sampled on a uniform grid.

    The grid is normally [-L, L]; a pinned (translated) profile keeps the
    same spacing and length with shifted abscissae.
    """

    x: np.ndarray
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self) -> None:
        for name in ("x", "A", "B"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if not (self.x.ndim == self.A.ndim == self.B.ndim == 1):
            raise ValueError("profile arrays must be one-dimensional")
        if not (self.x.size == self.A.size == self.B.size):
            raise ValueError(
                f"profile arrays differ in length: x={self.x.size}, "
                f"A={self.A.size}, B={self.B.size}"
            )
        if self.x.size < 3:
            raise ValueError("profile needs at least three nodes")
        dx = np.diff(self.x)
        if np.any(dx <= 0):
            raise ValueError("profile grid must be strictly increasing")

    @property
    def n(self) -> int:
        return self.x.size - 1

    @property
    def h(self) -> float:
        return float(self.x[-1] - self.x[0]) / self.n

    def is_clamped(self) -> bool:
        return (
            self.A[0] == 1.0 and self.B[0] == 0.0 and self.A[-1] == 0.0 and self.B[-1] == 1.0
        )

    def translated(self, shift: float) -> Profile:
        return Profile(self.x - shift, self.A, self.B)


def apply_clamps(A: np.ndarray, B: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Overwrite the clamped nodes in place.

    Endpoints take the equilibrium values; A is additionally held at its
    equilibrium value on the node next to each end (zero end slope), which
    leaves n - 3 free A values and n - 1 free B values.
    """
    A[0] = A[1] = 1.0
    A[-1] = A[-2] = 0.0
    B[0] = 0.0
    B[-1] = 1.0
    return A, B


@dataclass(frozen=True)
class EnergyReport:
    total: float
    bending: float
    dirichlet: float
    potential: float

    def as_dict(self) -> dict[str, float]:
        return {
            "total": self.total,
            "bending": self.bending,
            "dirichlet": self.dirichlet,
            "potential": self.potential,
        }


class Equilibrium(Enum):
    M_minus = "M_minus"
    M_plus = "M_plus"

    @property
    def point(self) -> tuple[float, float]:
        return (1.0, 0.0) if self is Equilibrium.M_minus else (0.0, 1.0)


M_MINUS = Equilibrium.M_minus
M_PLUS = Equilibrium.M_plus


def potential(a, b, g):
    """1/4 (a^2 + b^2 - 1)^2 + 1/2 (g - 1) a^2 b^2; broadcasts over arrays."""
    a2 = np.multiply(a, a)
    b2 = np.multiply(b, b)
    r = a2 + b2 - 1.0
    return 0.25 * r * r + 0.5 * (g - 1.0) * a2 * b2


def grad_potential(a, b, g):
    a2 = np.multiply(a, a)
    b2 = np.multiply(b, b)
    return a * (a2 + g * b2 - 1.0), b * (g * a2 + b2 - 1.0)


def hessian_potential(a: float, b: float, g: float) -> np.ndarray:
    off = 2.0 * g * a * b
    return np.array(
        [
            [3.0 * a * a + g * b * b - 1.0, off],
            [off, g * a * a + 3.0 * b * b - 1.0],
        ]
    )


_ZEROS = np.array([(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0)])


def coercivity_ratio(a, b, g):
    """P(a, b) divided by the squared distance to the nearest zero of P."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    dist2 = np.min(
        [(a - za) ** 2 + (b - zb) ** 2 for za, zb in _ZEROS],
        axis=0,
    )
    with np.errstate(divide="ignore", invalid="ignore"):
        return potential(a, b, g) / dist2


def _coercivity_samples(sample_count: int) -> tuple[np.ndarray, np.ndarray]:
    # square grid clipped to the disk of radius 3, plus a ring at radius 10
    n_ring = max(sample_count // 10, 64)
    side = int(math.ceil(math.sqrt((sample_count - n_ring) * 4.0 / math.pi))) | 1
    s = np.linspace(-3.0, 3.0, side)
    aa, bb = np.meshgrid(s, s, indexing="ij")
    inside = aa**2 + bb**2 <= 9.0
    theta = np.linspace(0.0, 2.0 * math.pi, n_ring, endpoint=False)
    a = np.concatenate([aa[inside], 10.0 * np.cos(theta)])
    b = np.concatenate([bb[inside], 10.0 * np.sin(theta)])
    return a, b


def coercivity_check(g: float, sample_count: int = 40_000) -> float:
    """Empirical lower bound K for P >= K * (distance to nearest zero)^2.

    Deterministic: the sample set is a fixed grid plus ring, never random.
    """
    if not g > 1:
        raise ValueError(f"g must satisfy g > 1, got {g!r}")
    if sample_count < 10_000:
        raise ValueError("sample_count must be at least 10^4")
    a, b = _coercivity_samples(sample_count)
    at_zero = np.zeros(a.shape, dtype=bool)
    for za, zb in _ZEROS:
        at_zero |= (a - za) ** 2 + (b - zb) ** 2 < 1e-24
    k = float(np.min(coercivity_ratio(a[~at_zero], b[~at_zero], g)))
    if not k > 0:
        raise ArithmeticError(f"coercivity estimate is not positive: {k!r}")
    return k


def rescale_to_original(p: Profile, params: Params) -> Profile:
    """Map a profile in the eps-scaled variable to the original coordinate x / eps^(1/4)."""
    return Profile(p.x / params.eps**0.25, p.A, p.B)


def rescale_from_original(p: Profile, params: Params) -> Profile:
    return Profile(p.x * params.eps**0.25, p.A, p.B)
