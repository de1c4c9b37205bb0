"""Discrete energy, its exact gradient, and the Euler-Lagrange residual.

Discretization: A'' by the 3-point central stencil and B' by the centred
first difference, both evaluated at every node with ghost values taken from
the equilibria outside [-L, L] (A = 1, B = 0 on the left; A = 0, B = 1 on the
right). Integrals use the composite trapezoid rule on nodal values.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import EnergyReport, Params, Profile, grad_potential, potential

__all__ = [
    "DiscreteGradient",
    "ResidualReport",
    "energy",
    "energy_gradient",
    "el_residual",
    "energy_and_gradient",
    "a_dofs",
    "b_dofs",
]

# Free nodes: A on 2..n-2, B on 1..n-1.
def a_dofs(n: int) -> slice:
    return slice(2, n - 1)


def b_dofs(n: int) -> slice:
    return slice(1, n)


@dataclass(frozen=True)
class DiscreteGradient:
    dA: np.ndarray
    dB: np.ndarray

    @property
    def sup_norm(self) -> float:
        return float(max(np.max(np.abs(self.dA)), np.max(np.abs(self.dB))))


@dataclass(frozen=True)
class ResidualReport:
    resA: np.ndarray
    resB: np.ndarray
    sup_norm: float


def _check(p: Profile, params: Params) -> None:
    if p.n != params.n:
        raise ValueError(f"profile has n={p.n} intervals, params expect n={params.n}")
    if abs(p.h - params.h) > 1e-9 * params.h:
        raise ValueError(f"profile step {p.h!r} does not match params step {params.h!r}")
    if not p.is_clamped():
        raise ValueError("profile violates the endpoint clamps (1, 0) at -L and (0, 1) at +L")


def _weights(n: int, h: float) -> np.ndarray:
    w = np.full(n + 1, h)
    w[0] = w[-1] = 0.5 * h
    return w


def _stencils(A: np.ndarray, B: np.ndarray, h: float) -> tuple[np.ndarray, np.ndarray]:
    Ae = np.concatenate(([1.0], A, [0.0]))
    Be = np.concatenate(([0.0], B, [1.0]))
    d2a = (Ae[:-2] - 2.0 * Ae[1:-1] + Ae[2:]) / (h * h)
    d1b = (Be[2:] - Be[:-2]) / (2.0 * h)
    return d2a, d1b


def _parts(A, B, eps, g, h):
    w = _weights(A.size - 1, h)
    d2a, d1b = _stencils(A, B, h)
    bending = 0.5 * eps * np.dot(w, d2a * d2a)
    dirichlet = 0.5 * np.dot(w, d1b * d1b)
    pot = np.dot(w, potential(A, B, g))
    return bending, dirichlet, pot, w, d2a, d1b


def energy_and_gradient(
    A: np.ndarray, B: np.ndarray, eps: float, g: float, h: float
) -> tuple[float, np.ndarray, np.ndarray]:
    """Total discrete energy and its gradient with respect to every nodal value.

    Returns full-length gradients; callers restrict to the free nodes.
    """
    bending, dirichlet, pot, w, d2a, d1b = _parts(A, B, eps, g, h)
    pa, pb = grad_potential(A, B, g)

    r = np.concatenate(([0.0], eps * w * d2a, [0.0]))
    gA = (r[:-2] - 2.0 * r[1:-1] + r[2:]) / (h * h) + w * pa

    s = np.concatenate(([0.0], w * d1b, [0.0]))
    gB = (s[:-2] - s[2:]) / (2.0 * h) + w * pb
    return bending + dirichlet + pot, gA, gB


def energy(p: Profile, params: Params) -> EnergyReport:
    _check(p, params)
    bending, dirichlet, pot, *_ = _parts(p.A, p.B, params.eps, params.g, params.h)
    return EnergyReport(
        total=float(bending + dirichlet + pot),
        bending=float(bending),
        dirichlet=float(dirichlet),
        potential=float(pot),
    )


def energy_gradient(p: Profile, params: Params) -> DiscreteGradient:
    _check(p, params)
    _, gA, gB = energy_and_gradient(p.A, p.B, params.eps, params.g, params.h)
    n = params.n
    return DiscreteGradient(dA=gA[a_dofs(n)].copy(), dB=gB[b_dofs(n)].copy())


def el_residual(p: Profile, params: Params) -> ResidualReport:
    """Pointwise residual of eps A'''' = A(1 - A^2 - g B^2), B'' = B(-1 + g A^2 + B^2).

    A'''' uses the 5-point stencil on nodes 2..n-2, B'' the 3-point stencil
    on nodes 1..n-1.
    """
    if p.n != params.n:
        raise ValueError(f"profile has n={p.n} intervals, params expect n={params.n}")
    A, B = p.A, p.B
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
        raise ValueError("profile contains non-finite values")
    h = p.h
    eps, g = params.eps, params.g

    d4a = (A[:-4] - 4.0 * A[1:-3] + 6.0 * A[2:-2] - 4.0 * A[3:-1] + A[4:]) / h**4
    a_mid, b_mid = A[2:-2], B[2:-2]
    resA = eps * d4a - a_mid * (1.0 - a_mid**2 - g * b_mid**2)

    d2b = (B[:-2] - 2.0 * B[1:-1] + B[2:]) / (h * h)
    a_in, b_in = A[1:-1], B[1:-1]
    resB = d2b - b_in * (-1.0 + g * a_in**2 + b_in**2)

    sup = float(max(np.max(np.abs(resA)), np.max(np.abs(resB))))
    return ResidualReport(resA=resA, resB=resB, sup_norm=sup)
