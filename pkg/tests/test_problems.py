import numpy as np
import pytest

from ipcopt.core import ConvexityClass, finite_difference_grad
from ipcopt.problems import (
    make_arctan_quadratic,
    make_fractional,
    make_quadratic,
    rng_for,
    spectral_norm,
)


class TestFractional:
    def test_structure(self):
        n = 12
        oracle = make_fractional(n, 4)
        d = oracle.data
        Q = d["Q"]
        assert np.linalg.norm(Q - Q.T) <= 1e-12 * np.linalg.norm(Q)
        assert np.linalg.eigvalsh(Q).min() >= 1 - 1e-10
        assert np.all((d["c"] > 0) & (d["c"] < 2))
        assert np.all((d["r"] > 0) & (d["r"] < 2))
        assert 1 < d["q_const"] < 2
        assert d["t_const"] == 1 + 4 * n
        assert oracle.convexity_class is ConvexityClass.PSEUDO_CONVEX
        assert oracle.lipschitz is None
        assert np.all((oracle.x0 > 1) & (oracle.x0 < 10))

    def test_scalar_gradient_matches_fd(self):
        oracle = make_fractional(1, 7)
        g = oracle.eval_grad(oracle.x0)
        fd = finite_difference_grad(oracle, oracle.x0, 1e-4)
        assert np.linalg.norm(fd - g) <= 1e-5 * max(1.0, np.linalg.norm(g))

    def test_denominator_positive_on_box(self):
        oracle = make_fractional(10, 2)
        rng = np.random.default_rng(0)
        for x in rng.uniform(0, 10, (200, 10)):
            assert oracle.in_domain(x)

    def test_pseudo_monotone_sampling(self):
        oracle = make_fractional(10, 2)
        rng = np.random.default_rng(1)
        checked = 0
        while checked < 100:
            x, y = rng.uniform(1, 10, (2, 10))
            if oracle.eval_grad(x) @ (y - x) >= 0:
                assert oracle.eval_grad(y) @ (y - x) >= -1e-8
                checked += 1


class TestArctanQuadratic:
    def test_gradient_at_zero_is_q(self):
        oracle = make_arctan_quadratic(6, 0)
        np.testing.assert_array_equal(oracle.eval_grad(np.zeros(6)), oracle.data["q"])

    def test_structure(self):
        oracle = make_arctan_quadratic(15, 3)
        B = oracle.data["B"]
        assert np.abs(B + B.T).max() <= 1e-12
        assert np.abs(oracle.data["A"]).max() < 5
        assert np.abs(oracle.data["q"]).max() < 500
        assert np.all((oracle.x0 > 0) & (oracle.x0 < 1))
        assert oracle.convexity_class is ConvexityClass.CONVEX

    def test_lipschitz_is_spectral_norm_plus_one(self):
        oracle = make_arctan_quadratic(15, 3)
        exact = np.linalg.norm(oracle.data["M"], 2)
        assert oracle.lipschitz == pytest.approx(exact + 1, rel=1e-8)

    def test_monotone_and_lipschitz_sampling(self):
        oracle = make_arctan_quadratic(15, 3)
        rng = np.random.default_rng(2)
        for _ in range(100):
            x, y = rng.uniform(-3, 3, (2, 15))
            dg = oracle.eval_grad(x) - oracle.eval_grad(y)
            assert dg @ (x - y) >= -1e-8 * np.linalg.norm(dg) * np.linalg.norm(x - y)
            assert np.linalg.norm(dg) <= oracle.lipschitz * (1 + 1e-8) * np.linalg.norm(x - y)

    def test_printed_operator_differs_from_gradient_of_f(self):
        oracle = make_arctan_quadratic(6, 1)
        x = np.linspace(-1, 1, 6)
        fd = finite_difference_grad(oracle, x, 1e-4)
        assert np.linalg.norm(fd - oracle.grad_of_f(x)) < 1e-5 * np.linalg.norm(fd)
        assert np.linalg.norm(fd - oracle.eval_grad(x)) > 1e-3


class TestQuadratic:
    def test_gradient_zero_at_solution(self):
        oracle = make_quadratic(9, 30.0, 1)
        assert not np.any(oracle.eval_grad(oracle.known_solution))
        assert oracle.lipschitz == 30.0
        H = oracle.data["hessian_diag"]
        assert H.min() == pytest.approx(1.0) and H.max() == 30.0

    def test_gradient_descent_contracts(self):
        oracle = make_quadratic(9, 30.0, 1)
        x = oracle.x0
        dist = np.linalg.norm(x - oracle.known_solution)
        for _ in range(50):
            x = x - oracle.eval_grad(x) / 30.0
            new = np.linalg.norm(x - oracle.known_solution)
            assert new < dist
            dist = new


@pytest.mark.parametrize(
    "make", [lambda s: make_fractional(8, s), lambda s: make_arctan_quadratic(8, s), lambda s: make_quadratic(8, 5.0, s)]
)
def test_generators_deterministic(make):
    a, b = make(42), make(42)
    for key, value in a.data.items():
        if isinstance(value, np.ndarray):
            np.testing.assert_array_equal(value, b.data[key])
    np.testing.assert_array_equal(a.x0, b.x0)
    c = make(43)
    assert not np.array_equal(a.x0, c.x0)


def test_streams_are_independent_per_quantity():
    a = rng_for(5, "fractional.c").uniform(size=4)
    b = rng_for(5, "fractional.r").uniform(size=4)
    assert not np.array_equal(a, b)
    np.testing.assert_array_equal(a, rng_for(5, "fractional.c").uniform(size=4))


def test_spectral_norm_power_iteration():
    rng = np.random.default_rng(9)
    M = rng.standard_normal((30, 30))
    assert spectral_norm(M) == pytest.approx(np.linalg.norm(M, 2), rel=1e-8)
