"""Closed-form heteroclinic of the eps = 0 limit.

With eps = 0 the A-equation is algebraic, A^2 = (1 - g B^2)_+, and B solves a
piecewise cubic second-order ODE. Its two first integrals give:

* inner branch (B <= 1/sqrt(g)):
  B' = sqrt(g - 1) B sqrt(1 - (g + 1) B^2 / 2),
  B(x) = sqrt(2/(g+1)) sech(sqrt(g-1) (c - x)),  x <= x_junction
* outer branch (B >= 1/sqrt(g)):
  B' = (1 - B^2)/sqrt(2),  B(x) = tanh((x - x0)/sqrt(2)),  x >= x_junction

The branches meet with equal slope (g - 1)/(sqrt(2) g).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .model import Params, Profile, apply_clamps

__all__ = [
    "ReducedOrbit",
    "reduced_orbit",
    "reduced_energy",
    "reduced_energy_density",
    "sample_reduced",
    "invariant_inner",
    "invariant_outer",
    "eqB_rhs",
]


def _sech(u):
    e = np.exp(-np.abs(u))
    return 2.0 * e / (1.0 + e * e)


@dataclass(frozen=True)
class ReducedOrbit:
    g: float
    x_junction: float
    b_cap: float
    a: float
    c: float
    x0: float
    pin_value: float

    @property
    def b_junction(self) -> float:
        return 1.0 / math.sqrt(self.g)

    @property
    def junction_slope(self) -> float:
        return (self.g - 1.0) / (math.sqrt(2.0) * self.g)

    def inner_B(self, x):
        u = self.a * (self.c - np.asarray(x, dtype=float))
        return self.b_cap * _sech(u)

    def inner_dB(self, x):
        u = self.a * (self.c - np.asarray(x, dtype=float))
        return self.a * self.b_cap * np.tanh(u) * _sech(u)

    def outer_B(self, x):
        return np.tanh((np.asarray(x, dtype=float) - self.x0) / math.sqrt(2.0))

    def outer_dB(self, x):
        sech = _sech((np.asarray(x, dtype=float) - self.x0) / math.sqrt(2.0))
        return sech * sech / math.sqrt(2.0)

    def B(self, x):
        x = np.asarray(x, dtype=float)
        inner = x <= self.x_junction
        return np.where(inner, self.inner_B(np.where(inner, x, self.x_junction)),
                        self.outer_B(np.where(inner, self.x_junction, x)))

    def dB(self, x):
        x = np.asarray(x, dtype=float)
        inner = x <= self.x_junction
        return np.where(inner, self.inner_dB(np.where(inner, x, self.x_junction)),
                        self.outer_dB(np.where(inner, self.x_junction, x)))

    def A(self, x):
        x = np.asarray(x, dtype=float)
        b = self.B(x)
        a = np.sqrt(np.maximum(0.0, 1.0 - self.g * b * b))
        return np.where(x >= self.x_junction, 0.0, a)


def reduced_orbit(g: float) -> ReducedOrbit:
    """Build the eps = 0 orbit, translated so that B(0) = 1/2.

    For g >= 4 the value 1/2 is no longer on the inner branch and the orbit is
    pinned at B(0) = 1/sqrt(2 g) instead.
    """
    if not g > 1:
        raise ValueError(f"g must satisfy g > 1, got {g!r}")
    a = math.sqrt(g - 1.0)
    b_cap = math.sqrt(2.0 / (g + 1.0))
    pin = 0.5 if g < 4.0 else 1.0 / math.sqrt(2.0 * g)
    # inner branch: b_cap sech(a (c - x)); B(0) = pin on the increasing side c > 0
    c = math.acosh(b_cap / pin) / a
    bj = 1.0 / math.sqrt(g)
    x_junction = c - math.acosh(b_cap / bj) / a
    x0 = x_junction - math.sqrt(2.0) * math.atanh(bj)
    return ReducedOrbit(g=g, x_junction=x_junction, b_cap=b_cap, a=a, c=c, x0=x0, pin_value=pin)


def invariant_outer(B, dB):
    """|B'|^2 + B^2 - B^4/2; equals 1/2 on the outer branch."""
    return dB * dB + B * B - 0.5 * B**4


def invariant_inner(B, dB, g):
    """|B'|^2 + (1 - g) B^2 - (1 - g^2) B^4/2; equals 0 on the inner branch."""
    return dB * dB + (1.0 - g) * B * B - 0.5 * (1.0 - g * g) * B**4


def eqB_rhs(B, g):
    """Right-hand side of the eps = 0 equation for B''."""
    B = np.asarray(B, dtype=float)
    outer = -B + B**3
    inner = (g - 1.0) * B + (1.0 - g * g) * B**3
    return np.where(B * B >= 1.0 / g, outer, inner)


def reduced_energy_density(B, dB, g):
    q = np.maximum(0.0, 1.0 - g * B * B)
    return 0.5 * dB * dB + 0.25 * (q + B * B - 1.0) ** 2 + 0.5 * (g - 1.0) * q * B * B


def reduced_energy(orbit: ReducedOrbit, quad_tol: float = 1e-10) -> float:
    """Reduced functional of the closed-form orbit by adaptive quadrature.

    The integrand has a kink at the junction, so the line is split there.
    """
    if not quad_tol > 0:
        raise ValueError("quad_tol must be positive")
    g, xj = orbit.g, orbit.x_junction

    def inner(x):
        return reduced_energy_density(orbit.inner_B(x), orbit.inner_dB(x), g)

    def outer(x):
        return reduced_energy_density(orbit.outer_B(x), orbit.outer_dB(x), g)

    total = 0.0
    for f, lo, hi in ((inner, -np.inf, xj), (outer, xj, np.inf)):
        val, err = integrate.quad(f, lo, hi, epsabs=0.5 * quad_tol, epsrel=0.0, limit=500)
        if not err <= 0.5 * quad_tol:
            raise ArithmeticError(
                f"quadrature did not reach tolerance {quad_tol:g} (error estimate {err:g})"
            )
        total += val
    return float(total)


def sample_reduced(orbit: ReducedOrbit, params: Params) -> Profile:
    x = params.grid()
    A = np.array(orbit.A(x))
    B = np.array(orbit.B(x))
    apply_clamps(A, B)
    return Profile(x, A, B)
