import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import cov
from ellparab.ode_core import (ConditioningError, ExponentialSolution, basic_solutions, combine,
                               coupling_set, fundamental_matrix, fundamental_solution, ode_residual,
                               residue_Y, solve_ode_transmission, transmission_boundary_rows,
                               wronskian_det)
from ellparab.symbols import RootError, compute_roots, hyperbolic, laplace_heat, random_spec

X = np.array([0.0, 0.1, 0.5, 1.3, 4.0])


def omega_at(spec, c):
    Y = basic_solutions(spec, c)
    return fundamental_solution(Y, coupling_set(Y, c))


def test_exponential_solution_calculus():
    e = ExponentialSolution([2j], [[1.0, 3.0]])  # (1 + 3x) e^{-2x}
    x = np.linspace(0, 2, 7)
    np.testing.assert_allclose(e(x), (1 + 3 * x) * np.exp(-2 * x), rtol=1e-14)
    np.testing.assert_allclose(e.dx()(x), (3 - 2 * (1 + 3 * x)) * np.exp(-2 * x), rtol=1e-13)
    np.testing.assert_allclose(e.dn(2)(x), -e.dx(2)(x), rtol=1e-14)
    assert e.decay_rate() == 2.0


def test_combine_merges_roots():
    a = ExponentialSolution([1j], [1.0])
    b = ExponentialSolution([2j], [1.0])
    s = combine([a, b, a], [1.0, 2.0, 3.0])
    np.testing.assert_allclose(s(X), 4 * np.exp(-X) + 2 * np.exp(-2 * X), rtol=1e-14)


def test_transmission_rows_m1():
    rows = transmission_boundary_rows(1)
    assert rows.rows() == [(0, 1, -1), (1, 1, 1)]
    e = ExponentialSolution([1j], [1.0])
    out = rows.apply(e, e)
    assert out[0] == 0
    assert out[1] == pytest.approx(2 * e.at_zero(1))


def test_transmission_rows_need_positive_m():
    with pytest.raises(ValueError):
        transmission_boundary_rows(0)


def test_Y1_laplacian():
    Y = basic_solutions(laplace_heat(), cov(2.0))
    np.testing.assert_allclose(Y.Y1[0](X), np.exp(-2 * X), atol=1e-13)


@pytest.mark.parametrize("xi,q,beta", [(3.0, 4.0, 5.0), (1.0, 0.0, 1.0)])
def test_Y2_heat(xi, q, beta):
    Y = basic_solutions(laplace_heat(), cov(xi, q))
    np.testing.assert_allclose(Y.Y2[0](X), (-1j / beta) * np.exp(-beta * X), atol=1e-13)


def test_Y1_biharmonic(bih):
    Y = basic_solutions(bih, cov(1.0))
    np.testing.assert_allclose(Y.Y1[0](X), (1 + X) * np.exp(-X), atol=1e-7)
    np.testing.assert_allclose(Y.Y1[1](X), 1j * X * np.exp(-X), atol=1e-7)
    assert Y.Y1[1].at_zero(0) == pytest.approx(0, abs=1e-8)
    assert Y.Y1[1].at_zero(1) == pytest.approx(1, abs=1e-8)


def test_residue_laplacian_spot():
    split = compute_roots(laplace_heat(), "A1", cov(2.0))
    assert residue_Y(split, 1, [1.0])[0, 0] == pytest.approx(np.exp(-2), abs=1e-10)


@pytest.mark.parametrize("seed", range(10))
def test_residue_matches_vandermonde(seed):
    rng = np.random.default_rng(seed)
    m = 1 + seed % 2
    spec = random_spec(rng, m)
    c = cov(rng.uniform(0.3, 3.0), rng.uniform(0.0, 3.0) * np.exp(0.3j / m))
    Y = basic_solutions(spec, c)
    for kind, cols, split in (("Y1", Y.Y1, Y.split1), ("Y2", Y.Y2, Y.split2)):
        ref = np.array([col(X) for col in cols])
        got = residue_Y(split, m, X, kind)
        assert np.max(np.abs(got - ref)) <= 1e-8 * np.max(np.abs(ref))


def test_coupling_unit_point():
    cs = coupling_set(basic_solutions(laplace_heat(), cov(1.0, 0.0)))
    assert cs.c12_raw[0, 0] == pytest.approx(1j)
    assert cs.c21_raw[0, 0] == pytest.approx(1j)
    np.testing.assert_allclose(cs.psi, 0.5 * np.array([[1, -1j], [-1j, 1]]), atol=1e-12)


def test_coupling_3_4():
    cs = coupling_set(basic_solutions(laplace_heat(), cov(3.0, 4.0)))
    assert cs.c12_raw[0, 0] == pytest.approx(0.2j)
    assert cs.c21_raw[0, 0] == pytest.approx(3j)
    ref = 5 / 8 * np.array([[1, -0.2j], [-3j, 1]])
    np.testing.assert_allclose(cs.psi, ref, atol=1e-12)
    np.testing.assert_allclose(cs.psi_schur, ref, atol=1e-12)


def test_omega11_closed_form():
    s, q = 1.5, 2.0 * np.exp(0.4j)
    beta = np.sqrt(s * s + q * q)
    om = omega_at(laplace_heat(), cov(s, q))
    np.testing.assert_allclose(om[0][0](X), beta / (beta + s) * np.exp(-s * X), atol=1e-12)


def test_omega_normalization_unit_point():
    om = omega_at(laplace_heat(), cov(1.0, 0.0))
    rows = transmission_boundary_rows(1)
    B = np.array([rows.apply(om[0][j], om[1][j]) for j in range(2)]).T
    np.testing.assert_allclose(B, np.eye(2), atol=1e-12)


@pytest.mark.parametrize("spec_name", ["laplace", "biharmonic"])
def test_omega_decays(spec_name, lap, bih):
    spec = lap if spec_name == "laplace" else bih
    c = cov(0.7, 1.1)
    om = omega_at(spec, c)
    delta = min(w.decay_rate() for row in om for w in row)
    vals = fundamental_matrix(om, [40 / delta])
    assert np.max(np.abs(vals)) <= 1e-8


def test_wronskian_unit_point():
    assert wronskian_det(laplace_heat(), cov(1.0, 0.0)) == pytest.approx(-2j, abs=1e-13)


@pytest.mark.parametrize("seed", range(50))
def test_wronskian_nonzero(seed):
    rng = np.random.default_rng(100 + seed)
    m = 1 + seed % 2
    spec = random_spec(rng, m, double_root=seed % 5 == 0)
    c = cov(rng.uniform(0.2, 4.0), rng.uniform(0, 4.0) * np.exp(1j * rng.uniform(-0.7, 0.7) / m))
    assert abs(wronskian_det(spec, c)) > 0


def test_wronskian_hyperbolic_reported():
    with pytest.raises((RootError, ConditioningError)):
        wronskian_det(hyperbolic(), cov(1.0, 1.0))


def _jumps(sol, m):
    return np.array([sol.u1.at_zero(k) - (-1) ** k * sol.u2.at_zero(k) for k in range(2 * m)])


def test_transmission_zero_data(lap):
    sol = solve_ode_transmission(lap, cov(1.0, 1.0), [0, 0])
    assert np.all(sol.u1.coef == 0) and np.all(sol.u2.coef == 0)


def test_transmission_unit_jump(lap):
    sol = solve_ode_transmission(lap, cov(1.0, 1.0), [1, 0])
    np.testing.assert_allclose(_jumps(sol, 1), [1, 0], atol=1e-13)
    assert sol.u1(0.0) - sol.u2_tilde(-0.0) == pytest.approx(1.0)


def test_transmission_linearity(bih):
    rng = np.random.default_rng(3)
    c = cov(0.8, 1.4)
    h1 = rng.normal(size=4) + 1j * rng.normal(size=4)
    h2 = rng.normal(size=4) + 1j * rng.normal(size=4)
    a = solve_ode_transmission(bih, c, h1)
    b = solve_ode_transmission(bih, c, h2)
    ab = solve_ode_transmission(bih, c, h1 + h2)
    np.testing.assert_allclose(ab.u1(X), a.u1(X) + b.u1(X), atol=1e-10)
    np.testing.assert_allclose(ab.u2(X), a.u2(X) + b.u2(X), atol=1e-10)
    np.testing.assert_allclose(_jumps(ab, 2), h1 + h2, atol=1e-10)


# ---------------------------------------------------------------------------
# properties

@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6), m=st.sampled_from([1, 2]), double=st.booleans(),
       xi=st.floats(0.1, 5.0), mod=st.floats(0.0, 5.0), arg=st.floats(-0.7, 0.7))
def test_normalization_and_residual(seed, m, double, xi, mod, arg):
    spec = random_spec(np.random.default_rng(seed), m, double_root=double)
    c = cov(xi, mod * np.exp(1j * arg / m))
    Y = basic_solutions(spec, c)
    rows = transmission_boundary_rows(m)
    np.testing.assert_allclose(rows.block("11", Y.Y1), np.eye(m), atol=1e-10)
    np.testing.assert_allclose(rows.block("22", Y.Y2), np.eye(m), atol=1e-10)
    assert ode_residual(spec, Y) <= 1e-9
    cs = coupling_set(Y, c)
    block = np.block([[np.eye(m), cs.c12_raw], [cs.c21_raw, np.eye(m)]])
    np.testing.assert_allclose(cs.psi @ block, np.eye(2 * m), atol=1e-11)
    assert cs.route_error <= 1e-11
    om = fundamental_solution(Y, cs)
    B = np.array([rows.apply(om[0][j], om[1][j]) for j in range(2 * m)]).T
    np.testing.assert_allclose(B, np.eye(2 * m), atol=1e-10)
