"""Equilibrium spectra, tail fits, the test-function bound and the g -> 1+ sweep."""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .model import Equilibrium, Params, Profile
from .minimize import (
    SolveOptions,
    SolveResult,
    SolverError,
    minimize,
    recommended_grid,
)

__all__ = [
    "SpectrumReport",
    "TailFit",
    "SweepRecord",
    "SweepError",
    "equilibrium_spectrum",
    "slowest_rate",
    "tail_fit",
    "testfn_integrals",
    "testfn_energy",
    "testfn_energy_direct",
    "circle_sup",
    "g_sweep",
]


@dataclass(frozen=True)
class SpectrumReport:
    equilibrium: Equilibrium
    a_roots: np.ndarray  # complex, length 4
    b_roots: np.ndarray  # real, length 2
    a_coefficient: float  # c in eps * lam^4 + c = 0
    hyperbolic: bool

    @property
    def slowest_rate(self) -> float:
        return float(min(np.min(np.abs(self.a_roots.real)), np.min(np.abs(self.b_roots))))


def equilibrium_spectrum(params: Params, which: Equilibrium) -> SpectrumReport:
    """Roots of the linearization of the A- and B-equations at an equilibrium.

    The A-perturbation solves eps a'''' = -c a with c = g - 1 at M_plus and
    c = 2 at M_minus; the B-perturbation solves b'' = k b with k = 2 at
    M_plus and k = g - 1 at M_minus.
    """
    eps, g = params.eps, params.g
    if which is Equilibrium.M_plus:
        c, k = g - 1.0, 2.0
    else:
        c, k = 2.0, g - 1.0
    mod = (c / eps) ** 0.25
    phases = np.exp(1j * math.pi * np.array([1, 3, 5, 7]) / 4.0)
    a_roots = mod * phases
    b_roots = np.array([-math.sqrt(k), math.sqrt(k)])
    hyperbolic = bool(np.all(np.abs(a_roots.real) > 0) and np.all(np.abs(b_roots) > 0))
    return SpectrumReport(which, a_roots, b_roots, c, hyperbolic)


def slowest_rate(eps: float, g: float) -> float:
    """Smallest |Re lambda| over both equilibria."""
    p = Params(eps=eps, g=g, L=1.0, n=16)
    return min(equilibrium_spectrum(p, e).slowest_rate for e in Equilibrium)


# -- tails ---------------------------------------------------------------------


@dataclass(frozen=True)
class TailFit:
    right_A_rate: float
    right_B_rate: float
    left_A_rate: float
    left_B_rate: float
    sign_changes: int


def _extrema(v: np.ndarray) -> np.ndarray:
    av = np.abs(v)
    return np.flatnonzero((av[1:-1] >= av[:-2]) & (av[1:-1] > av[2:])) + 1


def tail_fit(
    p: Profile,
    params: Params,
    windows: dict[str, tuple[float, float]] | None = None,
    floor: float = 1e-8,
) -> TailFit:
    """Fit exponential decay rates of the four tails and count A sign changes.

    Abscissae are measured from the domain midpoint. Default windows run from
    L/4 to L - 5 on each side (the last units before the clamp are bent by
    it) and are cut where the fitted quantity drops below ``floor``, which
    should sit above the solver noise (about 1e-10 in B - 1 for a gradient
    tolerance of 1e-8). Oscillatory tails (A on both sides) are fitted
    through |A - clamp| at its local extrema.

    An explicitly supplied window must not contain values below 1e-14.
    """
    x = p.x - 0.5 * (p.x[0] + p.x[-1])
    L = params.L
    windows = dict(windows or {})
    default = {"right": (L / 4.0, L - 5.0), "left": (-(L - 5.0), -L / 4.0)}

    def rate(side: str, key: str, v: np.ndarray, oscillatory: bool) -> float:
        explicit = key in windows
        lo, hi = windows.get(key, default[side])
        mask = (x >= lo) & (x <= hi)
        xs, vs = x[mask], np.abs(v[mask])
        if oscillatory:
            pk = _extrema(vs)
            xs, vs = xs[pk], vs[pk]
        if explicit and xs.size and np.min(vs) < 1e-14:
            raise ValueError(f"{key}: values underflow in window [{lo:g}, {hi:g}]; shrink it")
        keep = vs >= floor
        xs, vs = xs[keep], vs[keep]
        if xs.size < (2 if oscillatory else 8):
            raise ValueError(f"{key}: too few usable points in [{lo:g}, {hi:g}]")
        return float(abs(np.polyfit(xs, np.log(vs), 1)[0]))

    right_A = rate("right", "right_A", p.A, oscillatory=True)
    right_B = rate("right", "right_B", p.B - 1.0, oscillatory=False)
    left_A = rate("left", "left_A", p.A - 1.0, oscillatory=True)
    left_B = rate("left", "left_B", p.B, oscillatory=False)

    lo, hi = windows.get("sign_changes", (L / 2.0, L - 5.0))
    s = np.sign(p.A[(x >= lo) & (x <= hi)])
    s = s[s != 0]
    changes = int(np.count_nonzero(s[1:] != s[:-1]))
    return TailFit(right_A, right_B, left_A, left_B, changes)


# -- test function -------------------------------------------------------------


def _testfn_shapes(x):
    theta = 0.25 * math.pi + 0.5 * np.arctan(x)
    c, s = np.cos(theta), np.sin(theta)
    q = 1.0 + x * x
    dB = c / (2.0 * q)
    d2A = -c / (4.0 * q * q) + s * x / (q * q)
    return c, s, dB, d2A


@lru_cache(maxsize=None)
def testfn_integrals() -> tuple[float, float, float]:
    """Base integrals (I0, I1, I2) = (int A1^2 B1^2, int B1'^2, int A1''^2) over R."""

    def quad(f):
        val, err = integrate.quad(f, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-13, limit=400)
        if not err < 1e-10:
            raise ArithmeticError(f"test-function quadrature error estimate {err:g}")
        return val

    I0 = quad(lambda t: (_testfn_shapes(t)[0] * _testfn_shapes(t)[1]) ** 2)
    I1 = quad(lambda t: _testfn_shapes(t)[2] ** 2)
    I2 = quad(lambda t: _testfn_shapes(t)[3] ** 2)
    return I0, I1, I2


def testfn_energy(params: Params, gamma: float) -> float:
    """Energy of the dilated test function (A1, B1)(gamma x) on the whole line."""
    if not gamma > 0:
        raise ValueError("gamma must be positive")
    I0, I1, I2 = testfn_integrals()
    eps, g = params.eps, params.g
    return 0.5 * gamma**3 * eps * I2 + 0.5 * gamma * I1 + 0.5 * (g - 1.0) * I0 / gamma


def testfn_energy_direct(params: Params, gamma: float) -> float:
    """Same quantity by quadrature of the full energy density of the dilated profile."""
    eps, g = params.eps, params.g

    def density(x):
        A, B, dB1, d2A1 = _testfn_shapes(gamma * x)
        d2A = gamma**2 * d2A1
        dB = gamma * dB1
        P = 0.25 * (A * A + B * B - 1.0) ** 2 + 0.5 * (g - 1.0) * A * A * B * B
        return 0.5 * eps * d2A * d2A + 0.5 * dB * dB + P

    val, _ = integrate.quad(density, -np.inf, np.inf, epsabs=1e-13, epsrel=1e-13, limit=400)
    return float(val)


# -- sweep ---------------------------------------------------------------------


@dataclass(frozen=True)
class SweepRecord:
    g: float
    min_energy: float
    circle_sup: float
    testfn_bound: float
    converged: bool
    result: SolveResult | None = None


class SweepError(SolverError):
    def __init__(self, g: float, cause: Exception | str, records: list[SweepRecord]):
        super().__init__(f"sweep failed at g={g:g}: {cause}")
        self.g = g
        self.records = records


def circle_sup(p: Profile) -> float:
    return float(np.max(np.abs(p.A**2 + p.B**2 - 1.0)))


def g_sweep(
    eps: float,
    g_list,
    opts: SolveOptions | None = None,
    h_max: float = 0.02,
    L_min: float = 0.0,
    on_record=None,
) -> list[SweepRecord]:
    """Warm-started chain of solves along a decreasing list of g values.

    Each g gets its own (L, n) from the decay and resolution rules (L at least
    ``L_min``). ``on_record`` is called with each record as soon as it exists.
    """
    g_list = [float(v) for v in g_list]
    if not g_list or any(v <= 1 for v in g_list):
        raise ValueError("g_list must be non-empty with every g > 1")
    if any(b >= a for a, b in zip(g_list, g_list[1:])):
        raise ValueError("g_list must be strictly decreasing")
    opts = opts or SolveOptions()
    records: list[SweepRecord] = []
    current = opts
    for g in g_list:
        L, n = recommended_grid(eps, g, h_max)
        if L < L_min:
            n = int(math.ceil(n * L_min / L))
            n += n % 2
            L = L_min
        params = Params(eps=eps, g=g, L=L, n=n)
        try:
            res = minimize(params, current)
        except SolverError as exc:
            raise SweepError(g, exc, records) from exc
        rec = SweepRecord(
            g=g,
            min_energy=res.energy.total,
            circle_sup=circle_sup(res.profile),
            testfn_bound=testfn_energy(params, math.sqrt(g - 1.0)),
            converged=res.converged,
            result=res,
        )
        records.append(rec)
        if on_record is not None:
            on_record(rec)
        if not res.converged:
            raise SweepError(g, res.message, records)
        current = SolveOptions(
            grad_tol=opts.grad_tol, max_iters=opts.max_iters, memory=opts.memory,
            init=res.profile,
        )
    return records
