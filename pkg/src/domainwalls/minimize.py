"""Minimization of the discrete energy over clamped profiles.

The optimizer is L-BFGS with Armijo backtracking. The initial inverse
Hessian of the two-loop recursion is the inverse of a fixed sparse SPD
matrix built from the quadratic (bending and Dirichlet) part of the energy
plus a mass shift; without it the h^-4 stiffness of the bending term makes
plain L-BFGS crawl.
"""

from __future__ import annotations

import logging
import math
from collections import deque
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import factorized

from .energy import a_dofs, b_dofs, energy, energy_and_gradient
from .model import EnergyReport, Params, Profile, apply_clamps
from .reduced import reduced_orbit, sample_reduced

__all__ = [
    "SolveOptions",
    "SolveResult",
    "SolverError",
    "LineSearchStall",
    "ContinuationError",
    "initial_guess_testfn",
    "minimize",
    "continuation",
    "pin_translation",
    "resample",
    "recommended_grid",
]

log = logging.getLogger(__name__)


class SolverError(RuntimeError):
    pass


class LineSearchStall(SolverError):
    """No step length gives sufficient decrease at machine precision."""

    def __init__(self, message: str, result: SolveResult | None = None):
        super().__init__(message)
        self.result = result


class ContinuationError(SolverError):
    def __init__(self, step: int, cause: Exception | str, results: list[SolveResult]):
        super().__init__(f"continuation failed at step {step}: {cause}")
        self.step = step
        self.results = results


@dataclass(frozen=True)
class SolveOptions:
    grad_tol: float = 1e-8
    max_iters: int = 50_000
    memory: int = 10
    init: str | Profile = "testfn"  # "testfn", "reduced" or a Profile

    def __post_init__(self) -> None:
        if not self.grad_tol > 0:
            raise ValueError(f"grad_tol must be positive, got {self.grad_tol!r}")
        if int(self.max_iters) != self.max_iters or self.max_iters < 1:
            raise ValueError(f"max_iters must be a positive integer, got {self.max_iters!r}")
        if int(self.memory) != self.memory or self.memory < 1:
            raise ValueError(f"memory must be a positive integer, got {self.memory!r}")
        if not isinstance(self.init, Profile) and self.init not in ("testfn", "reduced"):
            raise ValueError(f"init must be 'testfn', 'reduced' or a Profile, got {self.init!r}")


@dataclass
class SolveResult:
    profile: Profile
    energy: EnergyReport
    grad_norm: float
    iterations: int
    converged: bool
    params: Params
    shift: float = 0.0
    message: str = ""
    history: list[float] = field(default_factory=list, repr=False)

    def computational_profile(self) -> Profile:
        """The profile on the original grid [-L, L] (undo the pinning shift)."""
        return self.profile.translated(-self.shift)


def initial_guess_testfn(params: Params) -> Profile:
    """Circle-valued arctan profile dilated by sqrt(g - 1), clamped at the ends."""
    x = params.grid()
    gamma = math.sqrt(params.g - 1.0)
    theta = 0.25 * math.pi + 0.5 * np.arctan(gamma * x)
    A, B = apply_clamps(np.cos(theta), np.sin(theta))
    return Profile(x, A, B)


def resample(p: Profile, params: Params) -> Profile:
    """Interpolate a profile onto the grid of ``params``, keeping its centring.

    The source abscissae are re-centred on the source domain midpoint, so a
    pinned profile lands with its wall near x = 0.
    """
    x = params.grid()
    xs = p.x - 0.5 * (p.x[0] + p.x[-1])
    if p.n == params.n and abs(p.h - params.h) <= 1e-12 * params.h:
        A, B = np.array(p.A), np.array(p.B)
    else:
        A = np.interp(x, xs, p.A, left=1.0, right=0.0)
        B = np.interp(x, xs, p.B, left=0.0, right=1.0)
    apply_clamps(A, B)
    return Profile(x, A, B)


def recommended_grid(eps: float, g: float, h_max: float = 0.02) -> tuple[float, int]:
    """Domain half-length and node count from the decay and resolution rules."""
    from .analysis import slowest_rate

    L = 20.0 / min(math.sqrt(g - 1.0), slowest_rate(eps, g))
    h = min(h_max, 2.0 * math.pi / 16.0 * (eps / (g - 1.0)) ** 0.25)
    n = int(math.ceil(2.0 * L / h))
    n += n % 2
    return L, max(n, 16)


def pin_translation(p: Profile, level: float = 0.5) -> float:
    """Abscissa where B first reaches ``level``, by linear interpolation."""
    B = p.B
    idx = np.flatnonzero((B[:-1] < level) & (B[1:] >= level))
    if idx.size == 0:
        raise ValueError(f"B never crosses {level}")
    i = idx[0]
    t = (level - B[i]) / (B[i + 1] - B[i])
    return float(p.x[i] + t * (p.x[i + 1] - p.x[i]))


# -- preconditioned L-BFGS ---------------------------------------------------


class _Problem:
    """Energy restricted to free nodes, with a cached preconditioner."""

    # mass shift in the preconditioner, comparable to the potential curvature
    SHIFT = 1.0

    def __init__(self, params: Params, A_full: np.ndarray, B_full: np.ndarray):
        self.params = params
        n = params.n
        self.sa, self.sb = a_dofs(n), b_dofs(n)
        self.na = self.sa.stop - self.sa.start
        self.nb = self.sb.stop - self.sb.start
        self.A = A_full.copy()
        self.B = B_full.copy()
        self._solve_a = factorized(self._precond_a().tocsc())
        self._solve_b = factorized(self._precond_b().tocsc())

    def _precond_a(self):
        p = self.params
        h, n = p.h, p.n
        w = np.full(n + 1, h)
        w[0] = w[-1] = 0.5 * h
        # D2 maps full A to nodal second differences (ghost contributions are constant)
        D2 = sparse.diags([1.0, -2.0, 1.0], [-1, 0, 1], shape=(n + 1, n + 1)) / (h * h)
        D2 = D2.tocsc()[:, self.sa]
        K = p.eps * (D2.T @ sparse.diags(w) @ D2)
        return K + self.SHIFT * h * sparse.identity(self.na)

    def _precond_b(self):
        p = self.params
        h, n = p.h, p.n
        w = np.full(n + 1, h)
        w[0] = w[-1] = 0.5 * h
        D1 = sparse.diags([-1.0, 1.0], [-1, 1], shape=(n + 1, n + 1)) / (2.0 * h)
        D1 = D1.tocsc()[:, self.sb]
        K = D1.T @ sparse.diags(w) @ D1
        return K + self.SHIFT * h * sparse.identity(self.nb)

    def unpack(self, z: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        A = self.A.copy()
        B = self.B.copy()
        A[self.sa] = z[: self.na]
        B[self.sb] = z[self.na :]
        return A, B

    def pack(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        return np.concatenate([A[self.sa], B[self.sb]])

    def fg(self, z: np.ndarray) -> tuple[float, np.ndarray]:
        A, B = self.unpack(z)
        p = self.params
        f, gA, gB = energy_and_gradient(A, B, p.eps, p.g, p.h)
        return f, np.concatenate([gA[self.sa], gB[self.sb]])

    def precondition(self, v: np.ndarray) -> np.ndarray:
        return np.concatenate([self._solve_a(v[: self.na]), self._solve_b(v[self.na :])])


def _lbfgs(
    prob: _Problem,
    z: np.ndarray,
    grad_tol: float,
    max_iters: int,
    memory: int,
    history: list[float],
    callback: Callable[[int, float, float], None] | None = None,
) -> tuple[np.ndarray, float, np.ndarray, int, str]:
    c1 = 1e-4
    f, g = prob.fg(z)
    history.append(f)
    S: deque[np.ndarray] = deque(maxlen=memory)
    Y: deque[np.ndarray] = deque(maxlen=memory)
    RHO: deque[float] = deque(maxlen=memory)
    bb_scale = 1.0
    it = 0
    while True:
        gnorm = float(np.max(np.abs(g))) if g.size else 0.0
        if gnorm <= grad_tol:
            return z, f, g, it, "converged"
        if it >= max_iters:
            return z, f, g, it, "iteration budget exhausted"

        # two-loop recursion with the sparse preconditioner as H0
        q = g.copy()
        alphas = []
        for s, y, rho in zip(reversed(S), reversed(Y), reversed(RHO)):
            a = rho * np.dot(s, q)
            alphas.append(a)
            q -= a * y
        r = prob.precondition(q)
        if S:
            y = Y[-1]
            r *= np.dot(S[-1], y) / np.dot(y, prob.precondition(y))
        else:
            r *= bb_scale
        for (s, y, rho), a in zip(zip(S, Y, RHO), reversed(alphas)):
            b = rho * np.dot(y, r)
            r += (a - b) * s
        d = -r
        slope = float(np.dot(g, d))
        if not slope < 0:
            S.clear(), Y.clear(), RHO.clear()
            d = -prob.precondition(g)
            slope = float(np.dot(g, d))

        step, f_new, g_new = _backtrack(prob, z, f, slope, d, c1)
        if step is None and S:
            # drop curvature memory and retry along the preconditioned gradient
            S.clear(), Y.clear(), RHO.clear()
            d = -prob.precondition(g)
            slope = float(np.dot(g, d))
            step, f_new, g_new = _backtrack(prob, z, f, slope, d, c1)
        if step is None:
            return z, f, g, it, "line search stall"

        s = step * d
        y = g_new - g
        sy = float(np.dot(s, y))
        z = z + s
        if sy > 1e-12 * float(np.dot(y, prob.precondition(y))) and sy > 0:
            S.append(s)
            Y.append(y)
            RHO.append(1.0 / sy)
        else:
            # curvature pair rejected: Barzilai-Borwein steepest descent next
            S.clear(), Y.clear(), RHO.clear()
            ss = float(np.dot(s, s))
            bb_scale = abs(ss / sy) if sy != 0 else 1.0
            bb_scale = min(max(bb_scale, 1e-6), 1e6)
        f, g = f_new, g_new
        history.append(f)
        it += 1
        if callback is not None:
            callback(it, f, float(np.max(np.abs(g))))


def _backtrack(prob, z, f0, slope, d, c1, max_halvings=60):
    # f is only resolved to a few ulps; within that band fall back to the
    # approximate Wolfe test on the directional derivative
    noise = 8.0 * np.finfo(float).eps * max(abs(f0), 1.0)
    t = 1.0
    for _ in range(max_halvings):
        f1, g1 = prob.fg(z + t * d)
        if np.isfinite(f1):
            if f1 <= f0 + c1 * t * slope:
                return t, f1, g1
            if f1 <= f0 + noise and float(np.dot(g1, d)) <= (1.0 - 2.0 * c1) * abs(slope):
                return t, f1, g1
        t *= 0.5
    return None, f0, None


def _initial_profile(params: Params, opts: SolveOptions) -> Profile:
    if isinstance(opts.init, Profile):
        return resample(opts.init, params)
    if opts.init == "reduced":
        return sample_reduced(reduced_orbit(params.g), params)
    return initial_guess_testfn(params)


def minimize(
    params: Params,
    opts: SolveOptions | None = None,
    callback: Callable[[int, float, float], None] | None = None,
) -> SolveResult:
    """Minimize the discrete energy over clamped profiles.

    After convergence B is replaced by |B| and a polish phase is run. The
    returned profile is translated so that B(0) = 1/2 by linear
    interpolation; ``shift`` records the translation.

    Budget exhaustion returns the last iterate with ``converged=False``; a
    line-search stall raises LineSearchStall carrying that iterate.
    """
    opts = opts or SolveOptions()
    start = _initial_profile(params, opts)
    A0, B0 = np.array(start.A), np.array(start.B)
    apply_clamps(A0, B0)
    prob = _Problem(params, A0, B0)
    history: list[float] = []

    z, f, g, its, status = _lbfgs(
        prob, prob.pack(A0, B0), opts.grad_tol, opts.max_iters, opts.memory, history, callback
    )
    A, B = prob.unpack(z)
    if np.any(B < 0):
        B = np.abs(B)
        prob.B = B
        budget = opts.max_iters - its
        z, f, g, more, status = _lbfgs(
            prob, prob.pack(A, B), opts.grad_tol, budget, opts.memory, history, callback
        )
        its += more
        A, B = prob.unpack(z)
    grad_norm = float(np.max(np.abs(g)))
    converged = grad_norm <= opts.grad_tol

    x = params.grid()
    comp = Profile(x, A, B)
    report = energy(comp, params)
    shift = pin_translation(comp)
    result = SolveResult(
        profile=comp.translated(shift),
        energy=report,
        grad_norm=grad_norm,
        iterations=its,
        converged=converged,
        params=params,
        shift=shift,
        message=status,
        history=history,
    )
    log.info(
        "minimize eps=%g g=%g L=%g n=%d: %s after %d iterations, J=%.12g, |grad|=%.3e",
        params.eps, params.g, params.L, params.n, status, its, report.total, grad_norm,
    )
    if status == "line search stall" and not converged:
        raise LineSearchStall(
            f"line search stalled at |grad|={grad_norm:.3e} after {its} iterations", result
        )
    return result


def continuation(
    params_from: Params,
    params_to: Params,
    steps: int,
    opts: SolveOptions | None = None,
) -> list[SolveResult]:
    """Solve at ``params_from`` then walk to ``params_to`` in ``steps`` warm-started solves.

    eps and g - 1 are interpolated geometrically, L linearly, and the grid step
    geometrically; n is raised where needed to keep the oscillatory A-tail
    resolved. Returns ``steps + 1`` results, the first at ``params_from``.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    opts = opts or SolveOptions()
    results: list[SolveResult] = []
    plist = [params_from]
    for k in range(1, steps + 1):
        t = k / steps
        if k == steps:
            plist.append(params_to)
            continue
        eps = params_from.eps ** (1 - t) * params_to.eps**t
        gm1 = (params_from.g - 1.0) ** (1 - t) * (params_to.g - 1.0) ** t
        L = (1 - t) * params_from.L + t * params_to.L
        h = params_from.h ** (1 - t) * params_to.h**t
        h = min(h, 2.0 * math.pi / 16.0 * (eps / gm1) ** 0.25)
        n = int(math.ceil(2.0 * L / h))
        n += n % 2
        plist.append(Params(eps=eps, g=1.0 + gm1, L=L, n=max(n, 16)))

    current = opts
    for k, p in enumerate(plist):
        try:
            res = minimize(p, current)
        except SolverError as exc:
            raise ContinuationError(k, exc, results) from exc
        results.append(res)
        if not res.converged:
            raise ContinuationError(k, res.message, results)
        current = SolveOptions(
            grad_tol=opts.grad_tol, max_iters=opts.max_iters, memory=opts.memory,
            init=res.profile,
        )
    return results
