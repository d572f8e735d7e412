import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from rrgipr.errors import ResourceLimitError
from rrgipr.sphere import (
    Q_SUM_NAMES,
    ExactSphereValue,
    ExponentVector,
    expansion_moment_exact,
    folland_integral,
    gamma_half_integer,
    gamma_half_ratio,
    gamma_half_ratio_closed_form,
    ipr2_sphere_average_exact,
    mc_ipr_moments,
    mu1_exact,
    mu2_exact,
    q_closed_form_sums,
    q_component,
    q_direct_sums,
    q_matrix,
    q_matrix_rotation,
    q_power_coeffs,
    sample_subsphere,
    sphere_average,
)


def test_gamma_half_integers():
    assert gamma_half_integer(2) == ExactSphereValue(Fraction(1), 0)
    assert gamma_half_integer(1) == ExactSphereValue(Fraction(1), 1)
    assert gamma_half_integer(5) == ExactSphereValue(Fraction(3, 4), 1)
    assert float(gamma_half_integer(7)) == pytest.approx(math.gamma(3.5), rel=1e-15)


def test_folland_examples():
    assert folland_integral((1, 0, 0)) == ExactSphereValue(Fraction(0), 0)
    assert folland_integral((0, 0, 0)) == ExactSphereValue(Fraction(4), 2)
    assert folland_integral((4, 0)) == ExactSphereValue(Fraction(3, 4), 2)
    assert float(folland_integral(ExponentVector((0, 0)))) == pytest.approx(2 * math.pi)


@pytest.mark.parametrize("a", [(1,), (3, 2), (2, 2, 1), (0, 5, 0, 0), (1, 1, 1, 1)])
def test_odd_exponent_is_exactly_zero(a):
    assert sphere_average(a) == 0
    assert isinstance(sphere_average(a), Fraction)


def test_folland_matches_quadrature_on_circle():
    from scipy import integrate

    for a, b in [(2, 2), (6, 0), (4, 2)]:
        val, _ = integrate.quad(lambda t: math.cos(t) ** a * math.sin(t) ** b, 0, 2 * math.pi)
        assert float(folland_integral((a, b))) == pytest.approx(val, rel=1e-12)


def test_negative_exponent_rejected():
    with pytest.raises(ValueError):
        ExponentVector((2, -1))
    with pytest.raises(ValueError):
        folland_integral(())


@pytest.mark.parametrize("m", [1, 2, 3, 7, 40])
def test_normalisation(m):
    assert sphere_average((0,) * m) == 1
    assert m * sphere_average((2,) + (0,) * (m - 1)) == 1


@pytest.mark.parametrize("n", [5, 6, 10, 33])
def test_degree_four_and_eight_averages(n):
    m = n - 1
    assert sphere_average((4,) + (0,) * (m - 1)) == Fraction(3, (n - 1) * (n + 1))
    assert sphere_average((2, 2, 2, 2) + (0,) * (m - 4)) == Fraction(
        1, (n - 1) * (n + 1) * (n + 3) * (n + 5)
    )


def test_average_is_permutation_invariant():
    assert sphere_average((0, 4, 2, 0)) == sphere_average((2, 0, 0, 4))


@pytest.mark.parametrize("n", [2, 3, 4, 9, 50])
def test_gamma_ratio_closed_forms(n):
    assert gamma_half_ratio(n, 2) == gamma_half_ratio_closed_form(n, 2) == Fraction(4, (n + 1) * (n - 1))
    assert gamma_half_ratio(n, 4) == Fraction(16, (n + 5) * (n + 3) * (n + 1) * (n - 1))


def test_gamma_ratio_n3_and_errors():
    assert gamma_half_ratio(3, 2) == Fraction(1, 2)
    with pytest.raises(ValueError):
        gamma_half_ratio(5, 3)
    with pytest.raises(ValueError):
        gamma_half_ratio_closed_form(5, 6)


def test_moment_examples():
    assert mu1_exact(2) == 1
    assert mu1_exact(3) == Fraction(3, 2)
    assert mu1_exact(100) == Fraction(297, 101)
    assert float(mu1_exact(10**9)) == pytest.approx(3.0, abs=1e-8)
    assert ipr2_sphere_average_exact(3) == Fraction(9, 4)
    assert ipr2_sphere_average_exact(5) == Fraction(17, 4)
    assert mu2_exact(2) == 0 and mu2_exact(3) == 0
    assert float(mu2_exact(1000)) == pytest.approx(0.02364, abs=5e-6)
    for f in (mu1_exact, mu2_exact, ipr2_sphere_average_exact):
        with pytest.raises(ValueError):
            f(1)


def test_variance_identity_exact_for_n_up_to_100():
    for n in range(2, 101):
        assert ipr2_sphere_average_exact(n) - mu1_exact(n) ** 2 == mu2_exact(n)


def test_ipr_is_constant_on_the_n3_circle():
    p = np.ones(3) / math.sqrt(3)
    u = np.array([1.0, -1.0, 0.0]) / math.sqrt(2)
    v = np.cross(p, u)
    for t in np.linspace(0, 2 * math.pi, 17):
        x = math.cos(t) * u + math.sin(t) * v
        assert 3 * np.sum(x**4) == pytest.approx(1.5, rel=1e-14)


@pytest.mark.parametrize("n", [2, 3, 10, 57, 200])
def test_q_orthogonal_with_row_sums(n):
    q = q_matrix(n)
    assert np.abs(q @ q.T - np.eye(n)).max() < 1e-12
    target = np.zeros(n)
    target[-1] = math.sqrt(n)
    assert np.abs(q.sum(axis=1) - target).max() < 1e-12
    e_n = np.zeros(n)
    e_n[-1] = 1.0
    assert np.abs(q @ np.full(n, 1 / math.sqrt(n)) - e_n).max() < 1e-12


@pytest.mark.parametrize("n", [2, 5, 16, 100])
def test_two_constructions_of_q_agree(n):
    assert np.abs(q_matrix(n) - q_matrix_rotation(n)).max() < 1e-12


def test_q_component_matches_matrix_and_checks_indices():
    q = q_matrix(7)
    for i, j in itertools.product(range(1, 8), repeat=2):
        assert q_component(i, j, 7) == pytest.approx(q[i - 1, j - 1], abs=1e-15)
    with pytest.raises(ValueError):
        q_component(0, 1, 7)
    with pytest.raises(ValueError):
        q_component(1, 8, 7)


def test_table_coefficients_low_powers():
    n = 9
    c1, c2 = q_power_coeffs(1, n), q_power_coeffs(2, n)
    assert (c1.alpha_s, c1.beta_s) == pytest.approx((-3.0, 12.0))
    assert (c2.alpha_s, c2.beta_s) == pytest.approx((15.0, 8 * 15.0))
    with pytest.raises(ValueError):
        q_power_coeffs(5, n)


@pytest.mark.parametrize("s", [1, 2, 3, 4, 6, 8])
@pytest.mark.parametrize("n", [3, 7, 25])
def test_table_against_direct_exponentiation(s, n, rng):
    c = q_power_coeffs(s, n)
    for _ in range(40):
        i = int(rng.integers(1, n))
        j = int(rng.choice([i, n, int(rng.integers(1, n + 1))]))
        direct = q_component(i, j, n) ** s
        assert c.power(i, j) == pytest.approx(direct, rel=1e-10, abs=1e-300)


def literal_sums(n):
    """The five sums by nested loops over q_component (rows k < n)."""
    Q = lambda k, i: q_component(k, i, n)  # noqa: E731
    rows, cols = range(1, n), range(1, n + 1)
    quartic = sum(Q(k, i) ** 4 for i in cols for k in rows)
    two_two = sum(Q(k, i) ** 2 * Q(l, i) ** 2 for i in cols for k in rows for l in rows if k != l)
    eighth = sum(Q(k, i) ** 8 for i in cols for k in rows)
    sixth = sum(Q(k, i) ** 6 * Q(l, i) ** 2 for i in cols for k in rows for l in rows if k != l)
    mixed = 0.0
    for k, l, m in itertools.permutations(rows, 3):
        for i in cols:
            for j in cols:
                if i != j:
                    mixed += Q(k, i) ** 3 * Q(l, i) * Q(k, j) * Q(l, j) * Q(m, j) ** 2
    return dict(zip(Q_SUM_NAMES, (quartic, two_two, eighth, sixth, mixed)))


def test_vectorised_sums_match_literal_loops():
    lit, vec = literal_sums(5), q_direct_sums(5)
    for name in Q_SUM_NAMES:
        assert vec[name] == pytest.approx(lit[name], rel=1e-12, abs=1e-14)


@pytest.mark.parametrize("n", [5, 10, 20])
def test_closed_form_sums_match_direct(n):
    closed, direct = q_closed_form_sums(n), q_direct_sums(n)
    for name in Q_SUM_NAMES:
        assert closed[name] == pytest.approx(direct[name], rel=1e-10)


def test_closed_form_vanishing_factors():
    assert q_closed_form_sums(2)["two_two"] == 0.0
    assert q_closed_form_sums(3)["mixed"] == 0.0


@pytest.mark.parametrize("n,power,expected", [
    (3, 1, Fraction(3, 2)),
    (4, 1, Fraction(9, 5)),
    (3, 2, Fraction(9, 4)),
    (5, 2, Fraction(17, 4)),
    (2, 2, Fraction(1)),
])
def test_expansion_oracle_examples(n, power, expected):
    assert expansion_moment_exact(n, power) == expected


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_expansion_oracle_matches_closed_forms(n):
    assert expansion_moment_exact(n, 1) == mu1_exact(n)
    assert expansion_moment_exact(n, 2) == ipr2_sphere_average_exact(n)


def test_expansion_oracle_budget():
    with pytest.raises(ResourceLimitError):
        expansion_moment_exact(9, 1)
    with pytest.raises(ValueError):
        expansion_moment_exact(5, 3)


def test_subsphere_points(rng):
    for n in (2, 3, 10, 100):
        x = sample_subsphere(n, rng).coords
        assert abs(x.sum()) < 1e-12 and abs(np.linalg.norm(x) - 1) < 1e-12


def test_subsphere_sampling_is_deterministic():
    a = sample_subsphere(10, np.random.default_rng(3)).coords
    b = sample_subsphere(10, np.random.default_rng(3)).coords
    assert np.array_equal(a, b)


def test_subsphere_coordinate_second_moment():
    rng = np.random.default_rng(77)
    n, m = 10, 10**6
    raw = rng.standard_normal((m, n))
    x = raw - raw.mean(axis=1, keepdims=True)
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    v = x[:, 0] ** 2
    assert abs(v.mean() - 1 / n) < 3 * v.std() / math.sqrt(m)


def test_mc_moments_small_n():
    mc = mc_ipr_moments(3, 20000, np.random.default_rng(1))
    assert mc.mean == pytest.approx(1.5, abs=1e-12)
    assert mc.variance < 1e-12
    mc = mc_ipr_moments(2, 1000, np.random.default_rng(1))
    assert mc.mean == pytest.approx(1.0, abs=1e-12) and mc.variance < 1e-12
    with pytest.raises(ValueError):
        mc_ipr_moments(10, 50, np.random.default_rng(1))


@pytest.mark.parametrize("n", [4, 6, 8])
def test_mc_agrees_with_exact(n):
    mc = mc_ipr_moments(n, 400_000, np.random.default_rng(n))
    assert abs(mc.mean - float(mu1_exact(n))) < 3 * mc.mean_se
    assert abs(mc.variance - float(mu2_exact(n))) < 3 * mc.variance_se
