import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from domainwalls.model import (
    M_MINUS,
    M_PLUS,
    Params,
    Profile,
    coercivity_check,
    coercivity_ratio,
    grad_potential,
    hessian_potential,
    potential,
    rescale_from_original,
    rescale_to_original,
)

reals = st.floats(-5, 5, allow_nan=False)
couplings = st.floats(1.0001, 10.0)


def fd_grad(a, b, g, step):
    da = (potential(a + step, b, g) - potential(a - step, b, g)) / (2 * step)
    db = (potential(a, b + step, g) - potential(a, b - step, g)) / (2 * step)
    return np.array([da, db])


class TestParams:
    def test_defaults_and_step(self):
        p = Params(eps=1.0, g=2.0)
        assert (p.L, p.n) == (30.0, 3000)
        assert p.h == pytest.approx(0.02)
        x = p.grid()
        assert x.size == 3001 and x[1500] == 0.0

    @pytest.mark.parametrize(
        "kw, word",
        [
            ({"eps": 0.0, "g": 2.0}, "eps > 0"),
            ({"eps": -1.0, "g": 2.0}, "eps > 0"),
            ({"eps": 1.0, "g": 1.0}, "g > 1"),
            ({"eps": 1.0, "g": 0.5}, "g > 1"),
            ({"eps": 1.0, "g": 2.0, "L": 0.0}, "L > 0"),
            ({"eps": 1.0, "g": 2.0, "n": 15}, "n must be"),
            ({"eps": 1.0, "g": 2.0, "n": 101}, "n must be"),
        ],
    )
    def test_rejects_excluded_regimes(self, kw, word):
        with pytest.raises(ValueError, match=word):
            Params(**kw)


class TestProfile:
    def test_arrays_are_read_only(self):
        p = Profile(np.linspace(0, 1, 5), np.zeros(5), np.ones(5))
        with pytest.raises(ValueError):
            p.A[0] = 3.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="differ in length"):
            Profile(np.linspace(0, 1, 5), np.zeros(4), np.ones(5))

    def test_grid_must_increase(self):
        with pytest.raises(ValueError, match="increasing"):
            Profile(np.array([0.0, 2.0, 1.0]), np.zeros(3), np.zeros(3))


class TestPotential:
    @pytest.mark.parametrize("a, b, expected", [(1, 0, 0.0), (0, 0, 0.25), (1, 1, 0.75)])
    def test_examples(self, a, b, expected):
        assert potential(a, b, 2.0) == pytest.approx(expected, abs=1e-15)

    def test_zeros_only_at_the_four_rolls(self):
        s = np.linspace(-2, 2, 801)
        a, b = np.meshgrid(s, s, indexing="ij")
        P = potential(a, b, 1.3)
        assert np.all(P >= 0)
        za, zb = a[P < 1e-14], b[P < 1e-14]
        near = np.zeros(za.shape, dtype=bool)
        for ea, eb in [(1, 0), (-1, 0), (0, 1), (0, -1)]:
            near |= np.hypot(za - ea, zb - eb) < 1e-8
        assert za.size == 4 and near.all()

    @given(reals, reals, couplings)
    def test_nonnegative_and_symmetric(self, a, b, g):
        P = potential(a, b, g)
        assert P >= 0
        assert potential(-a, b, g) == P
        assert potential(a, -b, g) == P
        assert potential(b, a, g) == pytest.approx(P, rel=1e-14, abs=1e-300)

    @pytest.mark.parametrize("eq", [M_MINUS, M_PLUS])
    def test_equilibria_are_exact_critical_zeros(self, eq):
        a, b = eq.point
        assert potential(a, b, 2.7) == 0.0
        assert tuple(grad_potential(a, b, 2.7)) == (0.0, 0.0)


class TestGradient:
    def test_examples(self):
        assert grad_potential(1.0, 0.0, 2.0) == (0.0, 0.0)
        ga, gb = grad_potential(0.5, 0.5, 2.0)
        assert (ga, gb) == (pytest.approx(-0.125), pytest.approx(-0.125))

    def test_matches_central_differences(self):
        rng = np.random.default_rng(11)
        for a, b in rng.uniform(-2, 2, size=(100, 2)):
            g = 2.0
            fd = fd_grad(a, b, g, 1e-5)
            assert np.allclose(grad_potential(a, b, g), fd, atol=1e-7, rtol=0)

    def test_second_order_convergence(self):
        rng = np.random.default_rng(12)
        ratios = []
        for a, b in rng.uniform(-2, 2, size=(100, 2)):
            exact = np.array(grad_potential(a, b, 1.7))
            e1 = np.max(np.abs(fd_grad(a, b, 1.7, 1e-2) - exact))
            e2 = np.max(np.abs(fd_grad(a, b, 1.7, 5e-3) - exact))
            if e2 > 1e-11:
                ratios.append(e1 / e2)
        assert len(ratios) > 80
        assert 3.5 < np.median(ratios) < 4.5


class TestHessian:
    def test_at_equilibria_g2(self):
        assert np.array_equal(hessian_potential(0, 1, 2.0), [[1, 0], [0, 2]])
        assert np.array_equal(hessian_potential(1, 0, 2.0), [[2, 0], [0, 1]])

    @given(couplings)
    def test_positive_definite_at_all_four_zeros(self, g):
        for a, b in [(1, 0), (-1, 0), (0, 1), (0, -1)]:
            ev = np.sort(np.linalg.eigvalsh(hessian_potential(a, b, g)))
            assert ev == pytest.approx(sorted([g - 1, 2.0]), abs=1e-12)
            assert ev[0] > 0

    def test_matches_second_differences(self):
        rng = np.random.default_rng(13)
        step = 1e-4
        for a, b in rng.uniform(-2, 2, size=(50, 2)):
            H = hessian_potential(a, b, 2.0)
            ga_p = np.array(grad_potential(a + step, b, 2.0))
            ga_m = np.array(grad_potential(a - step, b, 2.0))
            gb_p = np.array(grad_potential(a, b + step, 2.0))
            gb_m = np.array(grad_potential(a, b - step, 2.0))
            fd = np.column_stack([(ga_p - ga_m) / (2 * step), (gb_p - gb_m) / (2 * step)])
            assert np.allclose(H, fd, atol=1e-5)
            # pure second difference of P for the diagonal
            d2 = (potential(a + step, b, 2.0) - 2 * potential(a, b, 2.0) + potential(a - step, b, 2.0)) / step**2
            assert d2 == pytest.approx(H[0, 0], abs=1e-5)


class TestCoercivity:
    @pytest.mark.parametrize("g", [1.01, 1.5, 2.0, 5.0])
    def test_positive(self, g):
        assert coercivity_check(g, 10_000) > 0

    def test_origin_ratio(self):
        assert coercivity_ratio(0.0, 0.0, 2.0) == pytest.approx(0.25)
        assert coercivity_check(2.0) <= 0.25

    @pytest.mark.parametrize("g", [1.3, 2.0, 4.0])
    def test_punctured_neighbourhoods_match_hessian(self, g):
        # P ~ v.H.v / 2 near a zero, so the ratio tends to the smallest eigenvalue / 2
        theta = np.linspace(0, 2 * math.pi, 2001)
        r = 1e-4
        lam = min(g - 1.0, 2.0)
        for a0, b0 in [(1, 0), (-1, 0), (0, 1), (0, -1)]:
            ratio = coercivity_ratio(a0 + r * np.cos(theta), b0 + r * np.sin(theta), g)
            assert np.min(ratio) == pytest.approx(lam / 2, rel=1e-3)
        assert coercivity_check(g) <= lam / 2 + 1e-3

    def test_is_deterministic(self):
        assert coercivity_check(1.7) == coercivity_check(1.7)

    def test_rejects_small_samples(self):
        with pytest.raises(ValueError):
            coercivity_check(2.0, 100)


class TestRescale:
    def _profile(self, L=10.0, n=20):
        x = np.linspace(-L, L, n + 1)
        return Profile(x, np.cos(x) ** 2, np.sin(x) ** 2)

    def test_identity_at_eps_one(self):
        p = self._profile()
        q = rescale_to_original(p, Params(1.0, 2.0, 10.0, 20))
        assert np.array_equal(q.x, p.x)
        assert np.array_equal(q.A, p.A) and np.array_equal(q.B, p.B)

    def test_eps_16_halves_grid(self):
        p = self._profile()
        q = rescale_to_original(p, Params(16.0, 2.0, 10.0, 20))
        assert q.x[0] == -5.0 and q.x[-1] == 5.0

    @given(st.floats(1e-8, 1e8))
    def test_round_trip(self, eps):
        p = self._profile()
        params = Params(eps, 2.0, 10.0, 20)
        back = rescale_from_original(rescale_to_original(p, params), params)
        assert np.allclose(back.x, p.x, rtol=1e-14, atol=1e-14)
