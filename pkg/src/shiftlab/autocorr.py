"""Autocorrelations of square-root densities and the scale-equivalence regimes.

For a probability density ``p`` with square root ``f`` the functions

* ``Theta(lam) = sqrt(lam) int f(t) f(lam t) dt``,
* ``Psi(lam) = sqrt(lam) int f(lam t) g(t) dt`` (with ``g = sqrt(q)``),
* ``Ph(alpha) = int h(x) h(x + alpha) dx``

are linked by the logarithmic change of variables
``h_pm(x) = f(pm e^x) e^{x/2}``, under which
``Theta(lam) = Ph_+(log lam) + Ph_-(log lam)``. The behaviour of ``Ph`` at 0
(quadratic for Sobolev profiles, a corner when ``h`` jumps) decides whether
the squared or the absolute deviations of ``lambda_n / a`` must be summable.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate, special

from .errors import HypothesisViolation, NoDiscontinuityList, QuadratureFailure
from .measures import Gaussian, GridDensity, MarginalMeasure, UniformInterval, marginal_from_json
from .orthocheck import ratio_series, similarity_test
from .series import CONVERGES, DIVERGES, certify_limit, certify_log_terms
from .verdict import DEFAULT, Status, Tolerances, Verdict
from .weights import WeightSpec, _real_phases

W12 = "W12"
PIECEWISE_C1 = "PiecewiseC1"
UNKNOWN = "Unknown"
SMOOTH_CLASSES = (W12, PIECEWISE_C1, UNKNOWN)

_FLOOR = 1e-16  # profile values below this are treated as zero when truncating
_STEPS = (1e-2, 5e-3, 2.5e-3)


@dataclass(frozen=True)
class Profile:
    """A square-integrable function represented on a finite interval.

    Attributes
    ----------
    func : callable
        Vectorised evaluation; only called inside ``[lo, hi]``.
    lo, hi : float
        Represented domain. ``lo == hi`` encodes the zero function.
    breaks : tuple of float
        Points where the function or its derivative may be discontinuous.
    jumps : tuple of (u, left, right) or None
        Jump points with one-sided limits, including jumps to zero at the
        ends of a compact support. None when the jump set is unknown.
    truncation : float
        Bound on the squared L2 norm discarded outside ``[lo, hi]``.
    sup : float
        Upper bound of ``|func|``.
    """

    func: Callable
    lo: float
    hi: float
    breaks: tuple = ()
    jumps: tuple | None = ()
    truncation: float = 0.0
    sup: float = 1.0
    label: str = "profile"

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        inside = (x >= self.lo) & (x <= self.hi)
        return np.where(inside, self.func(np.clip(x, self.lo, self.hi)), 0.0)

    @property
    def is_zero(self) -> bool:
        return not self.hi > self.lo

    def norm2(self, config: Tolerances = DEFAULT) -> float:
        """``||h||_2^2`` on the represented domain."""
        if self.is_zero:
            return 0.0
        return _integrate(lambda x: self(x) ** 2, self.lo, self.hi, self.breaks, config)


@dataclass(frozen=True)
class DensityProfile(Profile):
    """Square root ``f = sqrt(p)`` of a probability density on the real line.

    ``smooth_class`` is declared by the caller: ``W12`` when ``f`` is
    continuous off 0 and piecewise C1 with ``t f'(t)`` square integrable,
    ``PiecewiseC1`` for the same regularity with jumps allowed, ``Unknown``
    otherwise.
    """

    smooth_class: str = UNKNOWN
    measure: MarginalMeasure | None = None

    def __post_init__(self):
        if self.smooth_class not in SMOOTH_CLASSES:
            raise ValueError(f"smooth_class must be one of {SMOOTH_CLASSES}")

    def check_normalized(self, tol: float = 1e-8, config: Tolerances = DEFAULT) -> float:
        """Return ``int f^2``; raise ValueError if it is not 1 within ``tol``."""
        n = self.norm2(config)
        if abs(n - 1) > tol + self.truncation:
            raise ValueError(f"profile has squared norm {n!r}, expected 1")
        return n

    def off_zero_jumps(self) -> list:
        """Jumps of ``f`` away from the origin (those survive the log substitution)."""
        if self.jumps is None:
            raise NoDiscontinuityList(f"{self.label}: jump set unknown")
        return [j for j in self.jumps if j[0] != 0 and j[1] != j[2]]

    @classmethod
    def gaussian(cls, sigma: float = 1.0) -> "DensityProfile":
        return cls.from_measure(Gaussian(sigma))

    @classmethod
    def uniform(cls, a: float = 0.0, b: float = 1.0) -> "DensityProfile":
        return cls.from_measure(UniformInterval(a, b))

    @classmethod
    def from_measure(cls, m: MarginalMeasure, smooth_class: str | None = None) -> "DensityProfile":
        """Profile of a Gaussian, uniform or grid density (real field only)."""
        if isinstance(m, Gaussian):
            if m.field_dim != 1:
                raise ValueError("profiles are defined for real densities only")
            s = m.sigma
            c = (2 * math.pi * s * s) ** -0.25
            T = 2 * s * math.sqrt(math.log(c / _FLOOR))
            return cls(lambda t: c * np.exp(-t * t / (4 * s * s)), -T, T, (0.0,), (),
                       float(special.erfc(T / (s * math.sqrt(2)))), c, f"gaussian({s:g})",
                       smooth_class or W12, m)
        if isinstance(m, UniformInterval):
            a, b = float(m.a), float(m.b)
            c = 1 / math.sqrt(b - a)
            return cls(lambda t: np.full(np.shape(t), c), a, b, (), ((a, 0.0, c), (b, c, 0.0)), 0.0, c,
                       f"uniform({a:g},{b:g})", smooth_class or PIECEWISE_C1, m)
        if isinstance(m, GridDensity):
            g, v = np.asarray(m.grid), np.asarray(m.values)
            jumps = tuple((u, math.sqrt(l), math.sqrt(r)) for u, l, r in m.discontinuities())
            # sqrt of a segment that touches zero at one end only has a non-square-integrable t f'
            pos = v > 0
            regular = bool(np.all((pos[1:] == pos[:-1]) | (g[1:] == g[:-1])))
            default = PIECEWISE_C1 if regular else UNKNOWN
            return cls(lambda t: np.sqrt(np.maximum(m.density(t), 0.0)), float(g[0]), float(g[-1]),
                       tuple(sorted(set(g.tolist()))), jumps, 0.0, float(math.sqrt(v.max())),
                       "grid", smooth_class or default, m)
        raise ValueError(f"no profile for {type(m).__name__}")

    @classmethod
    def from_json(cls, obj: dict) -> "DensityProfile":
        """Accepts the measure JSON forms ``gaussian``, ``uniform`` and ``grid``.

        An optional ``smooth_class`` key overrides the default class.
        """
        body = {k: val for k, val in obj.items() if k != "smooth_class"}
        return cls.from_measure(marginal_from_json(body), obj.get("smooth_class"))

    def squared(self, t) -> np.ndarray:
        """The density ``f(t)^2``."""
        return self(t) ** 2


def _integrate(fn, lo: float, hi: float, points, config: Tolerances = DEFAULT) -> float:
    """Adaptive quadrature of ``fn`` over ``[lo, hi]`` split at ``points``."""
    if not hi > lo:
        return 0.0
    pts = sorted({lo, hi, *[p for p in points if lo < p < hi]})
    total, err = 0.0, 0.0
    eps = config.quad_abs_tol / (10 * len(pts))
    for a, b in zip(pts, pts[1:]):
        val, e = integrate.quad(lambda x: float(fn(x)), a, b, epsabs=eps, epsrel=1e-13, limit=400)
        total += val
        err += e
    if err > config.quad_abs_tol:
        raise QuadratureFailure(f"quadrature error estimate {err:.2e} on [{lo}, {hi}]")
    return total


# ------------------------------------------------------------------ transforms


def acf(h: Profile, alpha: float, config: Tolerances = DEFAULT) -> float:
    """Autocorrelation ``int h(x) h(x + alpha) dx`` by adaptive quadrature.

    Raises
    ------
    QuadratureFailure
        When the quadrature error estimate exceeds ``config.quad_abs_tol``.
    """
    alpha = float(alpha)
    if h.is_zero:
        return 0.0
    lo, hi = max(h.lo, h.lo - alpha), min(h.hi, h.hi - alpha)
    pts = [b for b in h.breaks] + [b - alpha for b in h.breaks] + [h.lo - alpha, h.hi - alpha]
    return _integrate(lambda x: h(x) * h(x + alpha), lo, hi, pts, config)


def theta(f: DensityProfile, lam: float, config: Tolerances = DEFAULT) -> float:
    """``sqrt(lam) int f(t) f(lam t) dt`` for ``lam > 0``."""
    return psi(f, f, lam, config)


def psi(f: DensityProfile, g: DensityProfile, lam: float, config: Tolerances = DEFAULT) -> float:
    """``sqrt(lam) int f(lam t) g(t) dt`` for ``lam > 0``.

    Equals the Hellinger affinity of ``p`` rescaled by ``1/lam`` and ``q``.
    """
    lam = float(lam)
    if not lam > 0:
        raise ValueError("lambda must be positive")
    lo, hi = max(f.lo / lam, g.lo), min(f.hi / lam, g.hi)
    pts = [b / lam for b in f.breaks] + list(g.breaks) + [0.0, f.lo / lam, f.hi / lam]
    val = _integrate(lambda t: f(lam * t) * g(t), lo, hi, pts, config)
    return math.sqrt(lam) * val


def log_substitution(f: DensityProfile) -> tuple[Profile, Profile]:
    """``(h_plus, h_minus)`` with ``h_pm(x) = f(pm e^x) e^{x/2}``.

    A jump of ``f`` at ``u != 0`` becomes a jump of ``h_+`` (``u > 0``) or
    ``h_-`` (``u < 0``) at ``log |u|``, scaled by ``sqrt|u|``. Where the
    support of ``f`` reaches 0 the profiles decay like ``e^{x/2}`` and are
    cut where ``sup f * e^{x/2}`` drops below 1e-16.
    """
    x_floor = 2 * math.log(_FLOOR / max(f.sup, _FLOOR))

    def half(sign: int) -> Profile:
        if sign > 0:
            a, b = max(f.lo, 0.0), f.hi
        else:
            a, b = max(-f.hi, 0.0), -f.lo
        if not b > a:
            return Profile(lambda x: np.zeros(np.shape(x)), 0.0, 0.0, (), (), 0.0, 0.0, f"h{'+-'[sign < 0]}")
        x_hi = math.log(b)
        x_lo = math.log(a) if a > 0 else min(x_floor, x_hi - 1.0)
        trunc = f.sup ** 2 * math.exp(x_lo) if a == 0 else 0.0
        breaks = tuple(sorted(math.log(sign * u) for u in f.breaks if sign * u > 0))
        jumps = None
        if f.jumps is not None:
            js = []
            for u, left, right in f.jumps:
                if sign * u <= 0:
                    continue
                s = math.sqrt(abs(u))
                # x increases with |t|: on the negative side the one-sided limits swap
                js.append((math.log(abs(u)), s * left, s * right) if sign > 0
                          else (math.log(abs(u)), s * right, s * left))
            jumps = tuple(sorted(js))

        def func(x, sign=sign):
            ex = np.exp(x)
            return f(sign * ex) * np.sqrt(ex)

        return Profile(func, x_lo, x_hi, breaks, jumps, f.truncation + trunc,
                       f.sup * math.exp(x_hi / 2), f"h{'+-'[sign < 0]}[{f.label}]")

    return half(1), half(-1)


# ------------------------------------------------------------ slopes at 0


@dataclass(frozen=True)
class SlopeRecord:
    right_slope: float
    left_slope: float
    jump_formula_value: float
    steps: tuple = _STEPS

    def to_dict(self) -> dict:
        return {"right_slope": self.right_slope, "left_slope": self.left_slope,
                "jump_formula_value": self.jump_formula_value, "steps": list(self.steps)}


def _richardson(values: list[float]) -> float:
    """Extrapolate first-order estimates taken at steps halving each time."""
    table = list(values)
    order = 1
    while len(table) > 1:
        k = 2 ** order
        table = [(k * table[i + 1] - table[i]) / (k - 1) for i in range(len(table) - 1)]
        order += 1
    return table[0]


def one_sided_slopes(h: Profile, config: Tolerances = DEFAULT) -> SlopeRecord:
    """One-sided derivatives of ``Ph`` at 0 and the jump formula.

    The slopes are one-sided difference quotients at steps 1e-2, 5e-3 and
    2.5e-3, Richardson-extrapolated. The jump formula is
    ``-1/2 sum_k (h(u_k+) - h(u_k-))^2``.

    Raises
    ------
    NoDiscontinuityList
        If ``h.jumps`` is None.
    """
    if h.jumps is None:
        raise NoDiscontinuityList(f"{h.label}: jump set unknown")
    p0 = acf(h, 0.0, config)
    right = _richardson([(acf(h, s, config) - p0) / s for s in _STEPS])
    left = _richardson([(p0 - acf(h, -s, config)) / s for s in _STEPS])
    jump = -0.5 * sum((r - l) ** 2 for _, l, r in h.jumps)
    return SlopeRecord(right, left, jump)


# ---------------------------------------------------- regime decisions


def _require_positive(spec: WeightSpec, N: int) -> None:
    if spec.complex_field or np.any(_real_phases(spec, min(N, 10_000)) != 0):
        raise HypothesisViolation(f"{spec.key()} does not have positive weights")


def regime_of(f: DensityProfile) -> str:
    """``"quadratic"``, ``"linear"`` or ``"unknown"`` for a declared profile.

    Raises
    ------
    HypothesisViolation
        If ``W12`` is declared while ``f`` jumps away from 0.
    """
    if f.smooth_class == UNKNOWN:
        return "unknown"
    jumps = f.off_zero_jumps()
    if f.smooth_class == W12:
        if jumps:
            raise HypothesisViolation(f"{f.label}: declared W12 but jumps at {[j[0] for j in jumps]}")
        return "quadratic"
    return "linear" if jumps else "quadratic"


def equivalence_regime(f: DensityProfile, u: WeightSpec, v: WeightSpec, a: float = 1.0,
                       horizon: int | None = None, config: Tolerances = DEFAULT,
                       samples: int = 12) -> Verdict:
    """Non-orthogonality of the product measures built on ``p`` and ``q(t) = a p(at)``.

    Sobolev-type profiles need ``sum (1 - lambda_n / a)^2 < inf``; profiles
    with a jump away from 0 need ``sum |1 - lambda_n / a| < inf``. As a
    cross-check ``1 - Theta(lambda_n / a)`` is evaluated by quadrature for
    ``samples`` indices near the horizon and divided by the local model
    ``|x|`` or ``x^2`` (``x = lambda_n / a - 1``); these ratios should stay
    within a bounded band.

    Raises
    ------
    HypothesisViolation
        If the declared smoothness contradicts the jump list, or a weight is
        not positive.
    """
    N = config.horizon if horizon is None else int(horizon)
    regime = regime_of(f)
    claim = "not_orthogonal"
    rule = "scale_equivalence_regime"
    ev = {"regime": regime, "smooth_class": f.smooth_class, "a": a, "horizon": N}
    if regime == "unknown":
        return Verdict(Status.UNDECIDED, rule, claim, {**ev, "reason": "smoothness not declared"})
    for spec in (u, v):
        _require_positive(spec, N)
    R = ratio_series(u, v, N).lambdas_log[1:]
    x = np.expm1(R - math.log(a))
    power = 2 if regime == "quadratic" else 1
    with np.errstate(divide="ignore"):
        log_terms = power * np.log(np.abs(x))
    cert = certify_log_terms(log_terms, tol=config)
    ev["series"] = cert.to_dict()

    idx = np.unique(np.geomspace(max(1, N // 100), N, samples).astype(int))
    ratios = []
    for n in idx:
        dev = float(x[n - 1])
        if dev == 0 or abs(dev) > 0.5:
            continue
        ratios.append((1 - theta(f, 1 + dev, config)) / abs(dev) ** power)
    if ratios:
        ev["local_model_ratio"] = {"min": min(ratios), "max": max(ratios), "samples": len(ratios)}
    status = {CONVERGES: Status.ESTABLISHED, DIVERGES: Status.REFUTED}.get(cert.status, Status.UNDECIDED)
    return Verdict(status, rule, claim, ev)


@dataclass
class ScaleDetection:
    a_hat: Verdict
    density_match: float | None
    limit: dict = field(default_factory=dict)

    @property
    def compatible(self) -> bool:
        """Both the limit and the density relation hold."""
        return self.a_hat.established and self.density_match is not None and self.density_match <= 1e-8

    def to_dict(self) -> dict:
        return {"a_hat": self.a_hat.to_dict(), "density_match": self.density_match,
                "limit": self.limit, "compatible": self.compatible}


def density_residual(f: DensityProfile, g: DensityProfile, a: float, points: int = 4001) -> float:
    """Sup over a grid of ``|q(t) - a p(a t)|``, away from the jumps of either side."""
    lo = min(f.lo / a, g.lo)
    hi = max(f.hi / a, g.hi)
    t = np.linspace(lo, hi, points)
    edges = [j[0] / a for j in (f.jumps or ())] + [j[0] for j in (g.jumps or ())]
    if edges:
        near = np.min(np.abs(t[:, None] - np.asarray(edges)[None, :]), axis=1)
        t = t[near > 1e-9 * max(1.0, hi - lo)]
    return float(np.max(np.abs(g.squared(t) - a * f.squared(a * t))))


def limit_scale_detect(u: WeightSpec, v: WeightSpec, f: DensityProfile, g: DensityProfile,
                       horizon: int | None = None, config: Tolerances = DEFAULT) -> ScaleDetection:
    """Certified limit ``a`` of ``lambda_n`` and the residual of ``q(t) = a p(a t)``.

    Non-orthogonality requires both a limit in ``(0, inf)`` and the density
    relation; ``ScaleDetection.compatible`` reports whether both hold.
    """
    N = config.horizon if horizon is None else int(horizon)
    R = ratio_series(u, v, N).lambdas_log[1:]
    claim = "limit_in_open_half_line"
    rule = "ratio_limit"
    thr = config.ratio_log_threshold
    ev = {"horizon": N, "min_log_ratio": float(R.min()), "max_log_ratio": float(R.max())}
    if R.min() < -thr or R.max() > thr:
        return ScaleDetection(Verdict(Status.REFUTED, rule, claim, {**ev, "reason": "log_ratio_threshold"}), None)
    sim = similarity_test(u, v, N, config)
    if sim.refuted:
        return ScaleDetection(Verdict(Status.REFUTED, rule, claim,
                                      {**ev, "reason": "not_similar", "similarity_rule": sim.rule}), None)
    cert = certify_limit(np.exp(R), config)
    if cert.status != CONVERGES or not cert.limit or cert.limit <= 0:
        return ScaleDetection(Verdict(Status.UNDECIDED, rule, claim, ev), None, cert.to_dict())
    a = cert.limit
    return ScaleDetection(Verdict(Status.ESTABLISHED, rule, claim, {**ev, "a_hat": a}),
                          density_residual(f, g, a), cert.to_dict())


# ------------------------------------------------------------------ curves


def acf_curve(h: Profile, alphas, config: Tolerances = DEFAULT) -> np.ndarray:
    return np.array([acf(h, a, config) for a in np.asarray(alphas, dtype=float)])


def theta_curve(f: DensityProfile, lams, config: Tolerances = DEFAULT) -> np.ndarray:
    return np.array([theta(f, x, config) for x in np.asarray(lams, dtype=float)])


def write_curve_csv(path, xs, values, x_name: str = "alpha") -> None:
    """Write ``(x, value)`` rows with a header line."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([x_name, "value"])
        for x, val in zip(np.asarray(xs, dtype=float), np.asarray(values, dtype=float)):
            w.writerow([repr(float(x)), repr(float(val))])
