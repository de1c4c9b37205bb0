import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from domainwalls.analysis import circle_sup, equilibrium_spectrum
from domainwalls.energy import el_residual, energy
from domainwalls.minimize import (
    ContinuationError,
    LineSearchStall,
    SolveOptions,
    continuation,
    initial_guess_testfn,
    minimize,
    pin_translation,
    recommended_grid,
    resample,
)
from domainwalls.model import M_PLUS, Params, Profile, apply_clamps


class TestOptions:
    @pytest.mark.parametrize(
        "kw", [{"grad_tol": 0.0}, {"max_iters": 0}, {"memory": 0}, {"init": "bogus"}]
    )
    def test_validation(self, kw):
        with pytest.raises(ValueError):
            SolveOptions(**kw)


class TestInitialGuess:
    def test_centre_value(self):
        p = initial_guess_testfn(Params(1.0, 2.0, 30.0, 3000))
        mid = 1500
        assert p.x[mid] == 0.0
        assert (p.A[mid], p.B[mid]) == (pytest.approx(math.sqrt(2) / 2), pytest.approx(math.sqrt(2) / 2))

    def test_on_circle_and_clamped(self):
        p = initial_guess_testfn(Params(1.0, 1.3, 20.0, 400))
        assert p.is_clamped()
        # nodes 1 and n-1 carry the A slope clamp instead of the test-function value
        free = np.r_[0, 2:p.n - 1, p.n]
        assert np.allclose(p.A[free] ** 2 + p.B[free] ** 2, 1.0, atol=1e-15)

    def test_dilation(self):
        params = Params(1.0, 1.25, 20.0, 400)
        p = initial_guess_testfn(params)
        theta = math.pi / 4 + math.atan(0.5 * p.x[250]) / 2
        assert p.B[250] == pytest.approx(math.sin(theta), abs=1e-15)

    def test_right_limit(self):
        p = initial_guess_testfn(Params(1.0, 2.0, 30.0, 3000))
        assert p.A[-3] == pytest.approx(0.0, abs=0.02)
        assert p.B[-3] == pytest.approx(1.0, abs=1e-3)


class TestMinimize:
    def test_baseline(self, base_params, base_solution):
        res = base_solution
        assert res.converged and res.grad_norm <= 1e-8
        assert res.profile.is_clamped()
        assert np.min(res.profile.B) >= -1e-12
        assert el_residual(res.profile, base_params).sup_norm <= 1e-3
        i = round(5 / base_params.h)
        A, B = res.profile.A, res.profile.B
        assert abs(A[i] - 1) + abs(B[i]) <= 1e-3
        assert abs(A[-1 - i]) + abs(B[-1 - i] - 1) <= 1e-3

    def test_monotone_descent(self, base_solution):
        h = np.array(base_solution.history)
        assert np.all(np.diff(h) <= 8 * np.finfo(float).eps * np.abs(h[:-1]))
        assert h[-1] < h[0]

    def test_pinning_is_a_relabeling(self, base_params, base_solution):
        res = base_solution
        comp = res.computational_profile()
        assert np.allclose(comp.x, base_params.grid(), atol=1e-12)
        assert energy(comp, base_params).total == res.energy.total
        assert pin_translation(res.profile) == pytest.approx(0.0, abs=1e-12)
        j = np.searchsorted(res.profile.x, 0.0)
        B0 = np.interp(0.0, res.profile.x[j - 1:j + 1], res.profile.B[j - 1:j + 1])
        assert B0 == pytest.approx(0.5, abs=1e-12)

    def test_given_minimizer_is_fixed_point(self, base_params, base_solution):
        again = minimize(base_params, SolveOptions(init=base_solution.profile))
        assert again.converged and again.iterations <= 5
        assert again.energy.total == pytest.approx(base_solution.energy.total, abs=1e-12)

    def test_reduced_init_reaches_same_minimum(self, base_params, base_solution):
        res = minimize(base_params, SolveOptions(init="reduced"))
        assert res.converged
        assert res.energy.total == pytest.approx(base_solution.energy.total, abs=1e-10)

    def test_tail_zero_spacing_matches_linearization(self, base_solution, base_params):
        p = base_solution.profile
        A = p.A
        k = np.flatnonzero(np.sign(A[1:]) != np.sign(A[:-1]))
        zeros = p.x[k] - A[k] * (p.x[k + 1] - p.x[k]) / (A[k + 1] - A[k])
        zeros = zeros[(zeros > 5) & (zeros < base_params.L - 5)]
        omega = equilibrium_spectrum(base_params, M_PLUS).a_roots[0].imag
        assert zeros.size >= 4
        assert np.allclose(np.diff(zeros), math.pi / omega, rtol=1e-2)

    def test_budget_exhaustion_returns_iterate(self):
        res = minimize(Params(1.0, 2.0, 30.0, 600), SolveOptions(max_iters=2))
        assert not res.converged
        assert res.iterations == 2
        assert res.grad_norm > 1e-8
        assert "budget" in res.message
        assert res.profile.is_clamped()

    def test_line_search_stall(self):
        params = Params(1.0, 2.0, 10.0, 100)
        x = params.grid()
        bad = Profile(x, np.full_like(x, np.nan), np.zeros_like(x))
        with pytest.raises(LineSearchStall):
            minimize(params, SolveOptions(init=bad))

    def test_warm_start_towards_g_one_shrinks_circle_distance(self):
        opts = SolveOptions()
        L, n = recommended_grid(1.0, 1.05)
        first = minimize(Params(1.0, 1.5, L, n), opts)
        second = minimize(Params(1.0, 1.05, L, n), SolveOptions(init=first.profile))
        assert first.converged and second.converged
        assert circle_sup(second.profile) < circle_sup(first.profile)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=25, deadline=None)
def test_sign_normalization_never_increases_energy(seed):
    rng = np.random.default_rng(seed)
    params = Params(1.0, 1.8, 8.0, 64)
    x = params.grid()
    A, B = apply_clamps(rng.normal(0.5, 0.6, x.size), rng.normal(0.3, 0.6, x.size))
    p = Profile(x, A, B)
    q = Profile(x, A, np.abs(B))
    assert energy(q, params).total <= energy(p, params).total + 1e-12


def test_endpoints_never_move():
    params = Params(0.5, 1.4, 20.0, 400)
    res = minimize(params)
    A, B = res.profile.A, res.profile.B
    assert (A[0], A[1], A[-2], A[-1]) == (1.0, 1.0, 0.0, 0.0)
    assert (B[0], B[-1]) == (0.0, 1.0)


def test_resample_changes_grid_and_keeps_clamps():
    src = initial_guess_testfn(Params(1.0, 2.0, 30.0, 600))
    dst = resample(src, Params(1.0, 2.0, 40.0, 1000))
    assert dst.n == 1000 and dst.is_clamped()
    assert dst.B[500] == pytest.approx(src.B[300], abs=1e-12)


class TestContinuation:
    def test_single_step_is_warm_started_solve(self):
        a = Params(1.0, 2.0, 30.0, 1200)
        b = Params(1.0, 1.6, 30.0, 1200)
        results = continuation(a, b, 1)
        assert len(results) == 2
        direct = minimize(b, SolveOptions(init=results[0].profile))
        assert results[1].params == b
        assert results[1].energy.total == direct.energy.total

    def test_g_to_one(self):
        a = Params(1.0, 2.0, 200.0, 10000)
        b = Params(1.0, 1.01, 200.0, 10000)
        results = continuation(a, b, 8)
        energies = [r.energy.total for r in results]
        assert all(r.converged for r in results)
        assert all(e1 < e0 for e0, e1 in zip(energies, energies[1:]))

    def test_eps_to_small_keeps_tail_resolved(self):
        L, n = recommended_grid(1e-4, 2.0)
        results = continuation(Params(1.0, 2.0, 30.0, 3000), Params(1e-4, 2.0, 30.0, 3000), 10)
        assert all(r.converged for r in results)
        for r in results:
            p = r.params
            wavelength_step = 2 * math.pi / 16 * (p.eps / (p.g - 1)) ** 0.25
            assert p.h <= wavelength_step + 1e-12

    def test_failure_is_annotated_with_step(self):
        with pytest.raises(ContinuationError) as info:
            continuation(
                Params(1.0, 2.0, 30.0, 600), Params(1.0, 1.5, 30.0, 600), 2,
                SolveOptions(max_iters=1),
            )
        assert info.value.step == 0
        assert len(info.value.results) == 1
