import csv
import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import telescoped_pair
from shiftlab.autocorr import (PIECEWISE_C1, UNKNOWN, W12, DensityProfile, Profile, acf, acf_curve,
                               density_residual, equivalence_regime, limit_scale_detect, log_substitution,
                               one_sided_slopes, psi, regime_of, theta, theta_curve, write_curve_csv)
from shiftlab.errors import HypothesisViolation, NoDiscontinuityList
from shiftlab.hellinger import hellinger
from shiftlab.measures import Gaussian, GridDensity, UniformInterval
from shiftlab.verdict import Status
from shiftlab.weights import Constant, EpsilonSequence, PrefixThenConstant, RatioTelescope

U = DensityProfile.uniform(0, 1)
G = DensityProfile.gaussian(1.0)
TENT = DensityProfile.from_measure(GridDensity.normalized((-1, 0, 1), (0, 1, 0)))
STEP = DensityProfile.from_measure(GridDensity.normalized((0.5, 1, 1, 2), (1, 1, 0.25, 0.25)))


def _ratio_pair(exponent):
    """``lambda_n = 1 + n^-exponent`` exactly, with positive weights."""
    return RatioTelescope(2, EpsilonSequence("power", coef=1, exponent=exponent)), Constant(2)


# ----------------------------------------------------------------- profiles

@pytest.mark.parametrize("f", [U, G, TENT, STEP], ids=["uniform", "gaussian", "tent", "step"])
def test_profiles_are_normalized(f):
    assert f.check_normalized() == pytest.approx(1.0, abs=1e-8)


def test_unnormalized_profile_rejected():
    bad = DensityProfile(lambda t: np.full(np.shape(t), 2.0), 0.0, 1.0, (), (), 0.0, 2.0, "bad", PIECEWISE_C1)
    with pytest.raises(ValueError):
        bad.check_normalized()


def test_default_smooth_classes():
    assert G.smooth_class == W12
    assert U.smooth_class == PIECEWISE_C1
    assert STEP.smooth_class == PIECEWISE_C1
    # sqrt of a tent has t f' outside L2 at the support ends
    assert TENT.smooth_class == UNKNOWN


def test_profile_from_json_override():
    f = DensityProfile.from_json({"kind": "uniform", "a": 0, "b": 2, "smooth_class": "Unknown"})
    assert f.smooth_class == UNKNOWN and f(1.0) == pytest.approx(1 / math.sqrt(2))


# ---------------------------------------------------------------------- acf

@pytest.mark.parametrize("alpha", [0.0, 0.1, 0.5, 0.99, 1.0, 1.5, -0.3])
def test_acf_uniform(alpha):
    assert acf(U, alpha) == pytest.approx(max(0.0, 1 - abs(alpha)), abs=1e-12)


@pytest.mark.parametrize("alpha", [0.0, 0.3, 1.0, 2.5, -4.0])
def test_acf_gaussian(alpha):
    # frozen analytic reduction of the Gaussian overlap integral
    assert acf(G, alpha) == pytest.approx(math.exp(-alpha ** 2 / 8), abs=1e-8)


def test_acf_gaussian_against_mpmath():
    c = (2 * mpmath.pi) ** -0.25
    h = lambda t: c * mpmath.exp(-t ** 2 / 4)
    want = float(mpmath.quad(lambda t: h(t + 0.7) * h(t), [-mpmath.inf, mpmath.inf]))
    assert acf(G, 0.7) == pytest.approx(want, abs=1e-10)


@given(st.floats(min_value=-3, max_value=3))
def test_acf_even_and_maximal_at_zero(alpha):
    for h in (U, TENT, STEP):
        a = acf(h, alpha)
        assert a == pytest.approx(acf(h, -alpha), abs=1e-10)
        assert a <= acf(h, 0.0) + 1e-12


def test_acf_at_zero_is_norm():
    assert acf(STEP, 0.0) == pytest.approx(STEP.norm2(), abs=1e-12)


def test_acf_curve_and_csv(tmp_path):
    xs = [0.0, 0.5, 1.0]
    vals = acf_curve(U, xs)
    write_curve_csv(tmp_path / "a.csv", xs, vals)
    rows = list(csv.reader(open(tmp_path / "a.csv")))
    assert rows[0] == ["alpha", "value"]
    assert [float(r[1]) for r in rows[1:]] == pytest.approx([1.0, 0.5, 0.0], abs=1e-12)


# -------------------------------------------------------------- theta / psi

@pytest.mark.parametrize("lam", [1.0, 1.5, 2.0, 4.0])
def test_theta_uniform(lam):
    assert theta(U, lam) == pytest.approx(lam ** -0.5, abs=1e-6)


@pytest.mark.parametrize("lam", [0.5, 1.0, 1.7, 3.0])
def test_theta_gaussian_matches_hellinger(lam):
    want = math.sqrt(2 * lam / (1 + lam ** 2))
    assert theta(G, lam) == pytest.approx(want, abs=1e-8)
    assert hellinger(Gaussian(1), Gaussian(lam)) == pytest.approx(want, abs=1e-14)


@given(st.floats(min_value=0.2, max_value=5))
def test_theta_symmetric(lam):
    for f in (U, STEP):
        assert theta(f, lam) == pytest.approx(theta(f, 1 / lam), abs=1e-8)


@given(st.floats(min_value=0.3, max_value=3))
def test_theta_is_log_acf_sum(lam):
    hp, hm = log_substitution(STEP)
    x = math.log(lam)
    assert theta(STEP, lam) == pytest.approx(acf(hp, x) + acf(hm, x), abs=1e-8)


def test_psi_identity_and_uniform_pair():
    assert psi(U, U, 1.0) == pytest.approx(1.0, abs=1e-12)
    U2 = DensityProfile.uniform(0, 2)
    assert psi(U, U2, 1.0) == pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert psi(U, U2, 1.0) == pytest.approx(hellinger(UniformInterval(0, 1), UniformInterval(0, 2)), abs=1e-12)


@pytest.mark.parametrize("lam", [0.6, 1.0, 2.2])
def test_psi_gaussian_reproduces_marginal_affinity(lam):
    # sqrt(lambda) f(lambda t) is the N(0, 1/lambda) profile, so Psi is a Gaussian affinity
    s = 1.3
    f, g = DensityProfile.gaussian(1.0), DensityProfile.gaussian(s)
    want = hellinger(Gaussian(1 / lam), Gaussian(s))
    assert psi(f, g, lam) == pytest.approx(want, abs=1e-8)


def test_theta_curve():
    assert theta_curve(U, [1, 4]) == pytest.approx([1.0, 0.5], abs=1e-8)


# --------------------------------------------------------- log substitution

def test_log_substitution_uniform():
    hp, hm = log_substitution(U)
    assert hm.is_zero
    x = np.array([-3.0, -1.0, -0.1])
    assert hp(x) == pytest.approx(np.exp(x / 2), abs=1e-15)
    assert float(hp(0.5)) == 0.0
    assert hp.norm2() == pytest.approx(1.0, abs=1e-10)


def test_log_substitution_gaussian_halves():
    hp, hm = log_substitution(G)
    assert hp.norm2() == pytest.approx(0.5, abs=1e-9)
    assert hm.norm2() == pytest.approx(0.5, abs=1e-9)
    x = 0.3
    want = (2 * math.pi) ** -0.25 * math.exp(-math.exp(2 * x) / 4) * math.exp(x / 2)
    assert float(hp(x)) == pytest.approx(want, rel=1e-12)


def test_log_substitution_even_profile():
    hp, hm = log_substitution(TENT)
    assert hp.norm2() == pytest.approx(hm.norm2(), abs=1e-10)
    assert hp.norm2() == pytest.approx(0.5, abs=1e-8)


# ------------------------------------------------------------------ slopes

def test_slopes_uniform_log_profile():
    hp, _ = log_substitution(U)
    s = one_sided_slopes(hp)
    assert s.jump_formula_value == -0.5
    assert s.right_slope == pytest.approx(-0.5, abs=1e-3)
    assert s.left_slope == pytest.approx(0.5, abs=1e-3)


def test_slopes_two_unit_jumps():
    s = one_sided_slopes(U)
    assert s.jump_formula_value == -1.0
    assert s.right_slope == pytest.approx(-1.0, abs=1e-6)


def test_slopes_gaussian_vanish_and_curvature_is_negative():
    hp, _ = log_substitution(G)
    s = one_sided_slopes(hp)
    assert s.jump_formula_value == 0
    assert abs(s.right_slope) < 1e-4 and abs(s.left_slope) < 1e-4
    # P h(0) - P h(alpha) ~ alpha^2 / 8 for the full Gaussian profile
    for a in (1e-2, 5e-3):
        assert (acf(G, 0) - acf(G, a)) / a ** 2 == pytest.approx(1 / 8, rel=1e-3)


@pytest.mark.parametrize("a", [1e-2, 5e-3, 2.5e-3])
def test_uniform_linear_defect(a):
    assert (acf(U, 0) - acf(U, a)) / a == pytest.approx(1.0, abs=1e-9)


def test_slopes_need_jump_list():
    h = Profile(lambda x: np.ones_like(x), 0.0, 1.0, jumps=None)
    with pytest.raises(NoDiscontinuityList):
        one_sided_slopes(h)


# ------------------------------------------------------------------ regimes

def test_regime_of():
    assert regime_of(G) == "quadratic"
    assert regime_of(U) == "linear"
    assert regime_of(TENT) == "unknown"
    bad = DensityProfile.from_measure(UniformInterval(0, 1), W12)
    with pytest.raises(HypothesisViolation):
        regime_of(bad)


def test_uniform_square_summable_deviation_is_not_orthogonal():
    u, v = _ratio_pair(2)
    assert equivalence_regime(U, u, v, 1.0, 20_000).established


def test_uniform_harmonic_deviation_is_orthogonal():
    u, v = _ratio_pair(1)
    r = equivalence_regime(U, u, v, 1.0, 20_000)
    assert r.refuted
    # the local model 1 - Theta ~ |x| / 2
    assert 0.3 < r.evidence["local_model_ratio"]["min"] <= r.evidence["local_model_ratio"]["max"] < 0.7


def test_gaussian_harmonic_deviation_is_not_orthogonal():
    u, v = _ratio_pair(1)
    r = equivalence_regime(G, u, v, 1.0, 20_000)
    assert r.established
    # 1 - Theta ~ x^2 / 4 for the Gaussian profile
    assert r.evidence["local_model_ratio"]["max"] == pytest.approx(0.25, rel=0.05)


def test_unknown_class_is_undecided():
    u, v = _ratio_pair(2)
    assert equivalence_regime(TENT, u, v, 1.0, 1000).status is Status.UNDECIDED


def test_negative_weights_rejected():
    with pytest.raises(HypothesisViolation):
        equivalence_regime(U, Constant(-2), Constant(2), 1.0, 100)


# -------------------------------------------------------- scale detection

def test_scale_detect_telescoped():
    u, v = telescoped_pair()
    d = limit_scale_detect(u, v, G, G, 20_000)
    assert d.a_hat.established
    assert d.a_hat.evidence["a_hat"] == pytest.approx(1.0, abs=1e-3)
    assert d.density_match < 1e-3


def test_scale_detect_two_three():
    assert limit_scale_detect(Constant(2), Constant(3), G, G, 1000).a_hat.refuted


def test_scale_detect_grid_pair():
    p = GridDensity.normalized((0, 1, 2, 3), (0.5, 1, 0.2, 0.7))
    q = p.scaled(0.5)  # q(t) = 2 p(2 t)
    f, g = DensityProfile.from_measure(p), DensityProfile.from_measure(q)
    d = limit_scale_detect(PrefixThenConstant((4,), 2), Constant(2), f, g, 1000)
    assert d.a_hat.evidence["a_hat"] == pytest.approx(2.0, rel=1e-14)
    assert d.density_match < 1e-10
    assert d.compatible
    assert density_residual(f, g, 1.5) > 0.1
