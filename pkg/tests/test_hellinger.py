import math
from fractions import Fraction

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import telescoped_pair
from shiftlab.errors import InsufficientHorizon, NoDensity, NotSummable, SupportContainsZero
from shiftlab.hellinger import (discrete_marginal_test, gaussian_deficit, gaussian_equivalence_test,
                                gaussian_log_affinity, hellinger, hellinger_quadrature, kakutani_decide,
                                kakutani_witness, mutually_continuous, per_coordinate_affinities, translate_test)
from shiftlab.measures import DiscreteGroup, Gaussian, GridDensity, InvariantProductMeasure, Mixture, UniformInterval
from shiftlab.verdict import Status
from shiftlab.weights import Constant, EpsilonSequence, PrefixThenConstant, RatioTelescope, ScaledCopy


def _mp_gauss_affinity(s1, s2, d=1):
    """Hellinger affinity of two centred Gaussians by mpmath quadrature."""
    p = lambda t, s: mpmath.exp(-t ** 2 / (2 * s ** 2)) / (s * mpmath.sqrt(2 * mpmath.pi))
    with mpmath.workdps(30):
        one = mpmath.quad(lambda t: mpmath.sqrt(p(t, s1) * p(t, s2)), [-mpmath.inf, 0, mpmath.inf])
    return float(one ** d)


def _ratio_pair(exponent):
    """``lambda_n = 1 + n^-exponent`` exactly: telescoped u against constant v."""
    return RatioTelescope(2, EpsilonSequence("power", coef=1, exponent=exponent)), Constant(2)


# ----------------------------------------------------------------- affinity

def test_identical_gaussians():
    assert hellinger(Gaussian(1.7), Gaussian(1.7)) == 1.0


def test_gaussian_sqrt_three():
    want = math.sqrt(math.sqrt(3) / 2)
    assert hellinger(Gaussian(1), Gaussian(math.sqrt(3))) == pytest.approx(want, abs=1e-14)
    assert _mp_gauss_affinity(1, math.sqrt(3)) == pytest.approx(want, abs=1e-12)
    assert hellinger_quadrature(Gaussian(1), Gaussian(math.sqrt(3))) == pytest.approx(want, abs=1e-8)


def test_uniform_overlap():
    assert hellinger(UniformInterval(0, 1), UniformInterval(0, 2)) == pytest.approx(1 / math.sqrt(2), abs=1e-12)


def test_disjoint_uniforms():
    assert hellinger(UniformInterval(0, 1), UniformInterval(2, 3)) == 0.0
    assert not mutually_continuous(UniformInterval(0, 1), UniformInterval(0, 2))


def test_atoms_pair_with_atoms():
    a = DiscreteGroup((1, 2), (0.5, 0.5))
    b = DiscreteGroup((1, 3), (0.25, 0.75))
    assert hellinger(a, b) == pytest.approx(math.sqrt(0.5 * 0.25), abs=1e-15)


def test_mixture_affinity():
    a = Mixture(((0.5, DiscreteGroup((2,), (1,))), (0.5, UniformInterval(0, 1))))
    b = Mixture(((0.5, DiscreteGroup((2,), (1,))), (0.5, UniformInterval(0, 2))))
    # atom part 0.5, density part sqrt(0.5 * 0.25) over [0, 1]
    assert hellinger(a, b) == pytest.approx(0.5 + math.sqrt(0.5 * 0.25), abs=1e-10)


def test_grid_density_against_mpmath():
    a = GridDensity.normalized((0, 1, 2), (0, 1, 0))
    b = UniformInterval(0, 2)
    want = float(mpmath.quad(lambda t: mpmath.sqrt(float(a.density(float(t))) * 0.5), [0, 1, 2]))
    assert hellinger(a, b) == pytest.approx(want, abs=1e-10)


@pytest.mark.parametrize("d", [1, 2])
@pytest.mark.parametrize("lam", [0.2, 0.9, 1.0, 1.3, 7.0])
def test_gaussian_log_affinity_against_mpmath(d, lam):
    want = _mp_gauss_affinity(1, lam, d)
    assert math.exp(float(gaussian_log_affinity(math.log(lam), d))) == pytest.approx(want, abs=1e-13)


def test_tiny_deficit_keeps_relative_accuracy():
    # 1 - H ~ (d/4) x^2 for lambda = 1 + x
    x = 1e-9
    assert float(gaussian_deficit(math.log1p(x))) == pytest.approx(x ** 2 / 4, rel=1e-6)


@given(st.floats(min_value=0.05, max_value=20), st.floats(min_value=0.05, max_value=20))
def test_gaussian_affinity_symmetric_and_bounded(s1, s2):
    h = hellinger(Gaussian(s1), Gaussian(s2))
    assert 0 < h <= 1
    assert h == pytest.approx(hellinger(Gaussian(s2), Gaussian(s1)), rel=1e-14)


# ----------------------------------------------------------------- Kakutani

def test_kakutani_fast_convergence_is_equivalent():
    u, v = _ratio_pair(2)
    r = kakutani_decide(InvariantProductMeasure(Gaussian(1), u), InvariantProductMeasure(Gaussian(1), v), 10 ** 5)
    assert r.verdict == "Equivalent"
    # deficits ~ n^-4 / 4
    assert r.deficit_sum <= 0.25 * math.pi ** 4 / 90 + 0.05


def test_kakutani_slow_convergence_is_orthogonal():
    u, v = _ratio_pair(Fraction(1, 2))
    r = kakutani_decide(InvariantProductMeasure(Gaussian(1), u), InvariantProductMeasure(Gaussian(1), v), 10 ** 5)
    assert r.verdict == "Orthogonal"


def test_kakutani_identical():
    m = InvariantProductMeasure(Gaussian(1), Constant(2))
    r = kakutani_decide(m, m, 1000)
    assert r.verdict == "Equivalent" and np.all(r.per_n == 1)


def test_kakutani_two_three():
    r = kakutani_decide(InvariantProductMeasure(Gaussian(1), Constant(2)),
                        InvariantProductMeasure(Gaussian(1), Constant(3)), 1000)
    assert r.verdict == "Orthogonal"


def test_kakutani_disjoint_supports():
    r = kakutani_decide(InvariantProductMeasure(UniformInterval(1, 2), Constant(2)),
                        InvariantProductMeasure(UniformInterval(-2, -1), Constant(2)), 100)
    assert r.verdict == "Orthogonal" and r.rule == "vanishing_affinity"


def test_affinities_match_marginal_pairs():
    mu, mv = InvariantProductMeasure(UniformInterval(0, 1), Constant(2)), \
        InvariantProductMeasure(UniformInterval(0, 1), PrefixThenConstant((4,), 2))
    H, _, ac = per_coordinate_affinities(mu, mv, 5)
    # lambda_n = 1/2 for n >= 1: U(0, 1) against U(0, 2)
    assert H[0] == 1.0
    assert np.allclose(H[1:], 1 / math.sqrt(2), atol=1e-12)
    assert not ac


def test_kakutani_csv(tmp_path):
    r = kakutani_decide(InvariantProductMeasure(Gaussian(1), Constant(2)),
                        InvariantProductMeasure(Gaussian(1), Constant(3)), 10)
    r.to_csv(tmp_path / "h.csv")
    lines = (tmp_path / "h.csv").read_text().splitlines()
    assert lines[0] == "n,H_n,deficit_partial_sum" and len(lines) == 12


# ----------------------------------------------------- Gaussian equivalence

def test_gaussian_equivalence_telescoped():
    u, v = telescoped_pair()
    g = gaussian_equivalence_test(u, v, 2, 10 ** 5)
    assert g["exists_kappa"].established
    assert g["kappa_hat"] == pytest.approx(1.0, abs=1e-3)
    # terms (1 - 1/(1 + 1/n))^2 < n^-2
    assert g["deficit"] <= math.pi ** 2 / 6 + 1e-6


def test_gaussian_equivalence_two_three():
    g = gaussian_equivalence_test(Constant(2), Constant(3), 2, 1000)
    assert g["exists_kappa"].refuted


def test_gaussian_equivalence_identical():
    g = gaussian_equivalence_test(Constant(2), Constant(2), 2, 1000)
    assert g["exists_kappa"].established
    assert g["kappa_hat"] == 1.0 and g["deficit"] == 0.0


def test_gaussian_equivalence_prefix_pair_witness_is_equivalent():
    u, v = Constant(2), PrefixThenConstant((3,), 2)
    g = gaussian_equivalence_test(u, v, 2, 1000)
    assert g["kappa_hat"] == pytest.approx(1.5, rel=1e-14)
    m_u, m_v = g["witness"]
    assert kakutani_decide(m_u, m_v, 1000).verdict == "Equivalent"


def test_gaussian_equivalence_needs_summability():
    with pytest.raises(NotSummable):
        gaussian_equivalence_test(Constant(1), Constant(2))


# -------------------------------------------------------- discrete marginals

def test_discrete_eventually_constant():
    mu = DiscreteGroup((1, 2), (0.5, 0.5))
    v = discrete_marginal_test(Constant(2), PrefixThenConstant((1, 4), 2), mu, horizon=1000)
    assert v.established
    assert v.evidence["ratio"] == pytest.approx(1.0, abs=1e-15)


def test_discrete_two_three():
    mu = DiscreteGroup((1,), (1,))
    assert discrete_marginal_test(Constant(2), Constant(3), mu, horizon=1000).refuted


def test_discrete_identical():
    mu = DiscreteGroup((1,), (1,))
    u = PrefixThenConstant((5, 3), 2)
    assert discrete_marginal_test(u, u, mu, horizon=1000).established


def test_discrete_support_with_zero():
    with pytest.raises(SupportContainsZero):
        discrete_marginal_test(Constant(2), Constant(2), DiscreteGroup((0, 1), (0.5, 0.5)))


def test_discrete_numeric_path_sees_changes():
    u, v = telescoped_pair()
    assert discrete_marginal_test(u, v, DiscreteGroup((1,), (1,)), horizon=3000).refuted


# ---------------------------------------------------------------- translates

def test_translate_harmonic_square():
    assert translate_test(lambda n: 1 / max(n, 1), False, 10_000).status is Status.UNDECIDED


def test_translate_slow_decay():
    assert translate_test(lambda n: 1 / math.sqrt(max(n, 1)), False, 10_000).established


def test_translate_zero():
    assert translate_test(np.zeros(1001), False, 1000).status is Status.UNDECIDED


def test_translate_second_moment_case():
    assert translate_test(lambda n: 3 + 1 / math.sqrt(max(n, 1)), True, 10_000).established
    assert translate_test(lambda n: 3 + 1 / max(n, 1), True, 10_000).status is Status.UNDECIDED


# ------------------------------------------------------------------- witness

def test_witness_two_three():
    m_u = InvariantProductMeasure(Gaussian(1), ScaledCopy(2, Constant(1)))
    m_v = InvariantProductMeasure(Gaussian(1), ScaledCopy(3, Constant(1)))
    out = kakutani_witness(m_u, m_v, epsilon=0.1, mc_samples=10_000, seed=1)
    assert out["est_mu_v_of_E"] < 0.1 and out["est_mu_u_of_complement"] < 0.1
    assert out["product_affinity"] < 0.1


def test_witness_identical_measures():
    m = InvariantProductMeasure(Gaussian(1), Constant(2))
    with pytest.raises(InsufficientHorizon):
        kakutani_witness(m, m, epsilon=0.5, max_horizon=200)


def test_witness_fast_convergence():
    u, v = _ratio_pair(2)
    with pytest.raises(InsufficientHorizon):
        kakutani_witness(InvariantProductMeasure(Gaussian(1), u), InvariantProductMeasure(Gaussian(1), v),
                         epsilon=0.1, max_horizon=2000)


def test_witness_needs_density():
    m = InvariantProductMeasure(DiscreteGroup((1,), (1,)), Constant(2))
    with pytest.raises(NoDensity):
        kakutani_witness(m, m)
