"""Hellinger affinities of marginals and the Kakutani dichotomy for shifts.

Two product measures ``(x)_n mu_n`` and ``(x)_n nu_n`` with mutually absolutely
continuous marginals are either equivalent or orthogonal, and they are
equivalent exactly when ``prod_n H(mu_n, nu_n) > 0``, i.e. when the deficits
``1 - H(mu_n, nu_n)`` are summable.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .errors import (InsufficientHorizon, NoDensity, NotSummable, QuadratureFailure,
                     SupportContainsZero, UnsupportedKind)
from .measures import (DiscreteGroup, Gaussian, GridDensity, InvariantProductMeasure, MarginalMeasure,
                       Mixture, RotationInvariant, UniformInterval, marginal_at, sample)
from .series import CONVERGES, DIVERGES, certify_limit, certify_log_terms, record_drift
from .orthocheck import similarity_test
from .verdict import DEFAULT, Status, Tolerances, Verdict
from .weights import WeightSpec, _real_phases, log_products, summability

_GAUSS_SPAN = 40.0  # standard deviations kept when a Gaussian is integrated numerically


# ------------------------------------------------------------ affinities


def gaussian_log_affinity(log_ratio, d: int = 1) -> np.ndarray:
    """``log H`` of two centred Gaussians whose scales have ratio ``exp(log_ratio)``.

    ``H = (2 lam / (1 + lam^2))^(d/2)``. Near ``lam = 1`` the form
    ``log1p(-(lam - 1)^2 / (1 + lam^2))`` keeps full relative accuracy.
    """
    ell = np.asarray(log_ratio, dtype=float)
    a = np.abs(ell)
    near = a < 1.0
    e = np.where(near, ell, 0.0)
    small = np.log1p(-np.expm1(e) ** 2 / (1 + np.exp(2 * e)))
    far = math.log(2.0) + a - np.logaddexp(0.0, 2 * a)
    return 0.5 * d * np.where(near, small, far)


def gaussian_deficit(log_ratio, d: int = 1) -> np.ndarray:
    """``1 - H`` for two centred Gaussians, accurate for tiny deficits."""
    return -np.expm1(gaussian_log_affinity(log_ratio, d))


def _effective_support(m: MarginalMeasure) -> tuple[float, float]:
    if isinstance(m, Gaussian):
        return (-_GAUSS_SPAN * m.sigma, _GAUSS_SPAN * m.sigma)
    if isinstance(m, Mixture):
        sups = [_effective_support(x) for _, x in m.parts if x.has_density]
        return (min(s[0] for s in sups), max(s[1] for s in sups))
    return m.support()


def _density_breaks(m: MarginalMeasure) -> list[float]:
    if isinstance(m, Mixture):
        return sorted({b for _, x in m.parts for b in _density_breaks(x)})
    if isinstance(m, Gaussian):
        return [0.0]
    return m.breakpoints()


def _atom_overlap(alpha: MarginalMeasure, beta: MarginalMeasure) -> float:
    pa, wa = alpha.atoms()
    pb, wb = beta.atoms()
    total = 0.0
    for s, w in zip(pa, wa):
        close = np.abs(pb - s) <= 1e-12 * max(1.0, abs(s))
        if close.any():
            total += math.sqrt(w * float(wb[close].sum()))
    return total


def _density_overlap(alpha: MarginalMeasure, beta: MarginalMeasure, config: Tolerances) -> float:
    lo_a, hi_a = _effective_support(alpha)
    lo_b, hi_b = _effective_support(beta)
    lo, hi = max(lo_a, lo_b), min(hi_a, hi_b)
    if not lo < hi:
        return 0.0
    pts = sorted({lo, hi, *[b for b in _density_breaks(alpha) + _density_breaks(beta) if lo < b < hi]})
    total, err = 0.0, 0.0
    limit = min(config.quad_limit, 10_000)
    for a, b in zip(pts, pts[1:]):
        val, e = integrate.quad(lambda t: math.sqrt(float(alpha.density(t)) * float(beta.density(t))),
                                a, b, epsabs=config.quad_abs_tol / len(pts), epsrel=1e-12, limit=limit)
        total += val
        err += e
    if err > config.quad_abs_tol:
        raise QuadratureFailure(f"Hellinger quadrature error estimate {err:.2e}")
    return total


def hellinger(alpha: MarginalMeasure, beta: MarginalMeasure, config: Tolerances = DEFAULT) -> float:
    """Hellinger affinity ``int sqrt(d alpha d beta)`` in ``[0, 1]``.

    Gaussian pairs use the closed form. Otherwise the atoms and the
    absolutely continuous parts contribute separately: atoms pair with
    atoms at the same point and densities are integrated adaptively.

    Raises
    ------
    QuadratureFailure
        When the quadrature error estimate exceeds ``config.quad_abs_tol``.
    """
    if isinstance(alpha, Gaussian) and isinstance(beta, Gaussian):
        if alpha.field_dim != beta.field_dim:
            raise UnsupportedKind("Gaussians on different fields")
        return float(np.exp(gaussian_log_affinity(math.log(beta.sigma / alpha.sigma), alpha.field_dim)))
    if isinstance(alpha, RotationInvariant) or isinstance(beta, RotationInvariant) \
            or max(alpha.field_dim, beta.field_dim) > 1:
        if (alpha.atoms()[0].size and beta.atoms()[0].size
                and not (alpha.has_density or beta.has_density)):
            return min(1.0, _atom_overlap(alpha, beta))
        raise UnsupportedKind("complex non-Gaussian densities are not supported")
    total = _atom_overlap(alpha, beta)
    if alpha.has_density and beta.has_density:
        total += _density_overlap(alpha, beta, config)
    return float(min(1.0, max(0.0, total)))


def hellinger_quadrature(alpha: MarginalMeasure, beta: MarginalMeasure, config: Tolerances = DEFAULT) -> float:
    """Hellinger affinity by direct quadrature, Gaussians included.

    Complex Gaussians are integrated radially, ``2 pi int r sqrt(p(r) q(r)) dr``.
    This route does not use any closed form and serves as a cross-check.
    """
    if isinstance(alpha, Gaussian) and isinstance(beta, Gaussian) and alpha.field_dim == 2:
        top = _GAUSS_SPAN * max(alpha.sigma, beta.sigma)
        val, err = integrate.quad(lambda r: 2 * math.pi * r * math.sqrt(float(alpha.density(r)) * float(beta.density(r))),
                                  0.0, top, epsabs=config.quad_abs_tol, epsrel=1e-13,
                                  limit=min(config.quad_limit, 10_000),
                                  points=[alpha.sigma, beta.sigma])
        if err > config.quad_abs_tol:
            raise QuadratureFailure(f"radial quadrature error estimate {err:.2e}")
        return val
    total = _atom_overlap(alpha, beta)
    if alpha.has_density and beta.has_density:
        total += _density_overlap(alpha, beta, config)
    return total


def mutually_continuous(alpha: MarginalMeasure, beta: MarginalMeasure) -> bool:
    """Kind-level check that ``alpha`` and ``beta`` have the same null sets."""
    if isinstance(alpha, Gaussian) and isinstance(beta, Gaussian):
        return alpha.field_dim == beta.field_dim
    pa, _ = alpha.atoms()
    pb, _ = beta.atoms()
    if sorted(np.round(pa, 12).tolist()) != sorted(np.round(pb, 12).tolist()):
        return False
    if alpha.has_density != beta.has_density:
        return False
    if not alpha.has_density:
        return True
    sa, sb = _effective_support(alpha), _effective_support(beta)
    if isinstance(alpha, Gaussian) != isinstance(beta, Gaussian):
        return False
    if not isinstance(alpha, Gaussian) and not np.allclose(sa, sb, rtol=1e-12, atol=0):
        return False
    pts = sorted(set(_density_breaks(alpha) + _density_breaks(beta) + [sa[0], sa[1]]))
    pts = [x for x in pts if sa[0] <= x <= sa[1]]
    mids = np.array([(a + b) / 2 for a, b in zip(pts, pts[1:])])
    return bool(np.all((alpha.density(mids) > 0) == (beta.density(mids) > 0)))


# ------------------------------------------------------------- Kakutani


@dataclass
class HellingerReport:
    """Per-coordinate affinities ``H_n`` (n = 0..horizon) and the Kakutani verdict."""

    per_n: np.ndarray
    deficits: np.ndarray
    deficit_sum: float
    verdict: str
    rule: str
    horizon: int
    kappa_hat: float | None = None
    certificate: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"verdict": self.verdict, "rule": self.rule, "horizon": self.horizon,
                "deficit_sum": self.deficit_sum, "kappa_hat": self.kappa_hat,
                "log_product": float(np.sum(np.log(np.clip(self.per_n, 1e-300, None)))),
                "min_H": float(self.per_n.min()), "certificate": self.certificate}

    def to_csv(self, path) -> None:
        partial = np.cumsum(self.deficits)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "H_n", "deficit_partial_sum"])
            for n, (h, s) in enumerate(zip(self.per_n, partial)):
                w.writerow([n, repr(float(h)), repr(float(s))])


def _signed_ratios(m_u: InvariantProductMeasure, m_v: InvariantProductMeasure, N: int):
    """``log|lambda_n|`` and the unimodular factor of ``lambda_n = P^u_n / P^v_n``."""
    lu, lv = log_products(m_u.spec, N), log_products(m_v.spec, N)
    R = lu.minus(lv)
    if m_u.spec.complex_field or m_v.spec.complex_field:
        pu = lu.phases if lu.phases is not None else _real_phases(m_u.spec, N)
        pv = lv.phases if lv.phases is not None else _real_phases(m_v.spec, N)
        rot = np.exp(1j * (pu - pv))
    else:
        rot = np.cos(_real_phases(m_u.spec, N) - _real_phases(m_v.spec, N))
    return R, rot


def per_coordinate_affinities(m_u: InvariantProductMeasure, m_v: InvariantProductMeasure, horizon: int,
                              config: Tolerances = DEFAULT):
    """``(H_n, 1 - H_n, all marginal pairs mutually continuous)`` for n = 0..horizon.

    Gaussian pairs use the closed form in ``log lambda_n``. Other pairs use
    ``H(mu_{u,n}, mu_{v,n}) = H(mu_{u,0}, mu_{v,0} scaled by lambda_n)`` and
    memoise on ``lambda_n``.
    """
    R, rot = _signed_ratios(m_u, m_v, horizon)
    a, b = m_u.mu0, m_v.mu0
    if isinstance(a, Gaussian) and isinstance(b, Gaussian) and a.field_dim == b.field_dim:
        ell = R + math.log(b.sigma / a.sigma)
        # log ratios within rounding of R are indistinguishable from 0
        ell = np.where(np.abs(ell) <= 16 * np.finfo(float).eps * (1 + np.abs(R)), 0.0, ell)
        logH = gaussian_log_affinity(ell, a.field_dim)
        return np.exp(logH), -np.expm1(logH), True
    H = np.empty(horizon + 1)
    memo: dict = {}
    ac = True
    lam = np.exp(R) * rot
    for n in range(horizon + 1):
        c = complex(lam[n]) if np.iscomplexobj(lam) else float(lam[n])
        if isinstance(c, complex) and abs(c.imag) <= 1e-15 * abs(c):
            c = c.real
        if c not in memo:
            scaled = b if c == 1 else b.scaled(c)
            if scaled == a:
                memo[c] = (1.0, True)
            else:
                memo[c] = (hellinger(a, scaled, config), mutually_continuous(a, scaled))
        H[n], pair_ac = memo[c]
        ac = ac and pair_ac
    return H, 1.0 - H, ac


def kakutani_decide(m_u: InvariantProductMeasure, m_v: InvariantProductMeasure, horizon: int | None = None,
                    config: Tolerances = DEFAULT) -> HellingerReport:
    """Decide whether ``prod_n H(mu_{u,n}, mu_{v,n})`` is positive.

    A certified divergent deficit series (or a vanishing factor) gives
    Orthogonal; a certified convergent one gives Equivalent when every
    marginal pair is mutually continuous and NonOrthogonal otherwise.
    """
    N = config.horizon if horizon is None else int(horizon)
    H, D, ac = per_coordinate_affinities(m_u, m_v, N, config)
    total = float(D.sum())
    if np.any(H <= 0):
        n0 = int(np.flatnonzero(H <= 0)[0])
        return HellingerReport(H, D, total, "Orthogonal", "vanishing_affinity", N,
                               certificate={"first_zero": n0})
    with np.errstate(divide="ignore"):
        cert = certify_log_terms(np.log(D[1:]), tol=config)
    if cert.status == CONVERGES:
        verdict = "Equivalent" if ac else "NonOrthogonal"
    elif cert.status == DIVERGES:
        verdict = "Orthogonal"
    else:
        verdict = "Undecided"
    return HellingerReport(H, D, total, verdict, "deficit_series_" + cert.tail_rule, N,
                           certificate=cert.to_dict())


# ------------------------------------------------------ Gaussian criterion


def gaussian_equivalence_test(u: WeightSpec, v: WeightSpec, p: float = 2.0, horizon: int | None = None,
                              config: Tolerances = DEFAULT) -> dict:
    """Is there ``kappa > 0`` with ``sum (1 - kappa |lambda_n|)^2 < infinity``?

    ``kappa_hat`` is the reciprocal of the certified limit of ``|lambda_n|``.
    When Established, the Gaussian product measures with ``sigma = 1`` and
    ``sigma' = kappa_hat`` are equivalent and returned as ``witness``.

    Raises
    ------
    NotSummable
        If either shift lacks an invariant Gaussian product measure.
    """
    N = config.horizon if horizon is None else int(horizon)
    for name, spec in (("u", u), ("v", v)):
        s = summability(spec, p, N, config)
        if s.status != CONVERGES:
            raise NotSummable(f"S_p of {name} not certified convergent ({s.tail_rule})")
    claim = "equivalent_gaussian_measures"
    R = log_products(u, N).minus(log_products(v, N))[1:]
    thr = config.ratio_log_threshold
    ev = {"horizon": N, "min_log_ratio": float(R.min()), "max_log_ratio": float(R.max())}
    out = {"kappa_hat": None, "deficit": None, "witness": None}

    tu, tv = u.eventual_tail(), v.eventual_tail()
    if tu is not None and tv is not None and math.isclose(abs(tu[1]), abs(tv[1]), rel_tol=1e-15):
        n0 = max(tu[0], tv[0])
        kappa = math.exp(-float(R[min(n0, N) - 1]))
        ev.update(rule_detail="eventual_constant_ratio", tail_start=n0)
        terms = (1 - kappa * np.exp(R)) ** 2
        out.update(kappa_hat=kappa, deficit=float(terms.sum()))
        out["witness"] = (InvariantProductMeasure(Gaussian(1.0, u.field_dim), u, p),
                          InvariantProductMeasure(Gaussian(kappa, v.field_dim), v, p))
        out["exists_kappa"] = Verdict(Status.ESTABLISHED, "gaussian_equivalence", claim, {**ev, "kappa_hat": kappa})
        return out

    if R.min() < -thr or R.max() > thr:
        out["exists_kappa"] = Verdict(Status.REFUTED, "gaussian_equivalence", claim,
                                      {**ev, "reason": "log_ratio_threshold"})
        return out
    # lambda_n leaving every compact subset of (0, inf) rules out a limit
    sim = similarity_test(u, v, N, config)
    if sim.refuted:
        out["exists_kappa"] = Verdict(Status.REFUTED, "gaussian_equivalence", claim,
                                      {**ev, "reason": "not_similar", "similarity_rule": sim.rule})
        return out
    lam = np.exp(R)
    cert = certify_limit(lam, config)
    ev["limit"] = cert.to_dict()
    if cert.status != CONVERGES or cert.limit is None or cert.limit <= 0:
        out["exists_kappa"] = Verdict(Status.UNDECIDED, "gaussian_equivalence", claim, ev)
        return out
    kappa = 1.0 / cert.limit
    terms = (1 - kappa * lam) ** 2
    out.update(kappa_hat=kappa, deficit=float(terms.sum()))
    ev.update(kappa_hat=kappa, deficit_partial_sum=out["deficit"])
    status = {CONVERGES: Status.ESTABLISHED, DIVERGES: Status.REFUTED}.get(cert.square_summable, Status.UNDECIDED)
    if status is Status.ESTABLISHED:
        out["witness"] = (InvariantProductMeasure(Gaussian(1.0, u.field_dim), u, p),
                          InvariantProductMeasure(Gaussian(kappa, v.field_dim), v, p))
    out["exists_kappa"] = Verdict(status, "gaussian_equivalence", claim, ev)
    return out


# ---------------------------------------------------- discrete marginals


def discrete_marginal_test(u: WeightSpec, v: WeightSpec, mu0_u: DiscreteGroup, mu0_v: DiscreteGroup | None = None,
                           horizon: int | None = None, config: Tolerances = DEFAULT) -> Verdict:
    """Non-orthogonality for marginals with discrete parts.

    Established (not orthogonal) iff ``|lambda_n|`` is eventually constant,
    with value ``lam``. Then ``q(s) = p(lam s)`` makes the marginals of index
    past the tail start coincide; the resulting law is returned in the
    evidence as ``mu0_v_constructed``.
    """
    for mu in (mu0_u, mu0_v):
        if mu is not None and mu.charges_zero:
            raise SupportContainsZero("discrete marginal charges 0")
    N = config.horizon if horizon is None else int(horizon)
    claim = "not_orthogonal"
    R = log_products(u, N).minus(log_products(v, N))
    tu, tv = u.eventual_tail(), v.eventual_tail()
    ev = {"horizon": N}
    if tu is not None and tv is not None:
        if math.isclose(abs(tu[1]), abs(tv[1]), rel_tol=1e-15):
            n0 = max(tu[0], tv[0])
            start = min(n0, N)
            lam = math.exp(float(R[start]))
            ev.update(tail_start=n0, ratio=lam, rule_detail="eventual_constant_tails",
                      mu0_v_constructed=mu0_u.scaled(1.0 / lam).to_json())
            return Verdict(Status.ESTABLISHED, "eventually_constant_ratio", claim, ev)
        return Verdict(Status.REFUTED, "eventually_constant_ratio", claim,
                       {**ev, "rule_detail": "eventual_constant_tails", "log_ratio_slope":
                        math.log(abs(tu[1])) - math.log(abs(tv[1]))})
    changes = np.flatnonzero(np.abs(np.diff(R[1:])) > config.exact_tol) + 2
    ev["last_change"] = int(changes[-1]) if changes.size else 0
    thirds = [round(i * N / 3) for i in range(4)]
    per_epoch = [bool(np.any((changes >= thirds[i]) & (changes < thirds[i + 1]))) for i in range(3)]
    ev["changes_per_epoch"] = per_epoch
    if all(per_epoch):
        return Verdict(Status.REFUTED, "eventually_constant_ratio", claim, ev)
    return Verdict(Status.UNDECIDED, "eventually_constant_ratio", claim, ev)


# --------------------------------------------------------- translates


def _sequence(alphas, N: int) -> np.ndarray:
    if hasattr(alphas, "array"):
        return np.asarray(alphas.array(N), dtype=float)
    if callable(alphas):
        return np.array([float(alphas(n)) for n in range(N + 1)])
    return np.asarray(alphas, dtype=float)[: N + 1]


def translate_test(alphas, has_second_moment: bool, horizon: int | None = None,
                   config: Tolerances = DEFAULT) -> Verdict:
    """Necessary condition for non-orthogonality of a product measure and a translate.

    With equal marginals (``has_second_moment=False``) non-orthogonality
    forces ``sum alpha_n^2 < infinity``; with second moments it forces
    ``sum (alpha_n - alpha)^2 < infinity`` for some ``alpha``. A certified
    divergent series therefore establishes orthogonality. Convergence
    decides nothing and gives Undecided.
    """
    N = config.horizon if horizon is None else int(horizon)
    a = _sequence(alphas, N)
    claim = "orthogonal"
    if not has_second_moment:
        with np.errstate(divide="ignore"):
            cert = certify_log_terms(2 * np.log(np.abs(a)), np.arange(1, a.size + 1, dtype=float), config)
        ev = {"horizon": N, "case": "equal_marginals", "series": cert.to_dict()}
        status = Status.ESTABLISHED if cert.status == DIVERGES else Status.UNDECIDED
        return Verdict(status, "translate_square_sum", claim, ev)
    cert = certify_limit(a[1:], config)
    ev = {"horizon": N, "case": "second_moment", "limit": cert.to_dict(), "alpha_hat": cert.limit}
    if cert.status != CONVERGES:
        # a sequence without a limit cannot be square-close to a constant when it drifts
        up = record_drift(a, "up", config)
        down = record_drift(a, "down", config)
        if "unbounded" in (up.status, down.status):
            return Verdict(Status.ESTABLISHED, "translate_square_sum", claim, {**ev, "drift": "unbounded"})
        return Verdict(Status.UNDECIDED, "translate_square_sum", claim, ev)
    status = Status.ESTABLISHED if cert.square_summable == DIVERGES else Status.UNDECIDED
    return Verdict(status, "translate_square_sum", claim, ev)


# -------------------------------------------------- executable witness


def _logpdf(m: MarginalMeasure):
    if isinstance(m, (Gaussian, UniformInterval, GridDensity)) and not m.atoms()[0].size:
        return m.logpdf
    raise NoDensity(f"{type(m).__name__} has no usable density")


def kakutani_witness(m_u: InvariantProductMeasure, m_v: InvariantProductMeasure, N: int | None = None,
                     epsilon: float = 0.1, mc_samples: int = 10_000, seed=0, max_horizon: int = 10_000,
                     config: Tolerances = DEFAULT) -> dict:
    """Build ``E = {F_N >= 1}`` with ``F_N = prod_{n<=N} sqrt(d mu_{u,n} / d mu_{v,n})``.

    ``m_v(E) <= prod H_n`` and ``m_u(E^c) <= prod H_n``; both are estimated by
    Monte Carlo. ``N`` defaults to the first index where the product of
    affinities drops below ``epsilon``.

    Raises
    ------
    NoDensity
        If a marginal lacks a density.
    InsufficientHorizon
        If the product of affinities is not below ``epsilon`` at ``N``.
    """
    _logpdf(m_u.mu0)
    _logpdf(m_v.mu0)
    top = max_horizon if N is None else int(N)
    H, _, _ = per_coordinate_affinities(m_u, m_v, top, config)
    logprod = np.cumsum(np.log(np.clip(H, 1e-300, None)))
    if N is None:
        below = np.flatnonzero(logprod < math.log(epsilon))
        if not below.size:
            raise InsufficientHorizon(f"prod H_n >= {epsilon} up to n = {top}")
        N = int(below[0])
    elif logprod[N] >= math.log(epsilon):
        raise InsufficientHorizon(f"prod_{{n<={N}}} H_n = {math.exp(logprod[N]):.3g} >= {epsilon}")
    logpdf_u = [_logpdf(marginal_at(m_u, n)) for n in range(N + 1)]
    logpdf_v = [_logpdf(marginal_at(m_v, n)) for n in range(N + 1)]

    def log_F(X):
        cols = [0.5 * (logpdf_u[n](X[:, n]) - logpdf_v[n](X[:, n])) for n in range(N + 1)]
        with np.errstate(invalid="ignore"):
            return np.nansum(np.vstack(cols), axis=0)

    ss = np.random.SeedSequence(seed).spawn(2)
    Xv = sample(m_v, N, seed=ss[0], size=mc_samples, check=False)
    Xu = sample(m_u, N, seed=ss[1], size=mc_samples, check=False)
    in_E_v = log_F(np.atleast_2d(Xv)) >= 0
    in_E_u = log_F(np.atleast_2d(Xu)) >= 0
    pv = float(in_E_v.mean())
    pu = float(1 - in_E_u.mean())
    se_v = math.sqrt(max(pv * (1 - pv), 1e-300) / mc_samples)
    se_u = math.sqrt(max(pu * (1 - pu), 1e-300) / mc_samples)
    return {"E_descriptor": {"N": N, "set": "log F_N >= 0",
                             "log_F": "0.5 * sum_{n<=N} (log p_{u,n}(x_n) - log p_{v,n}(x_n))"},
            "product_affinity": float(math.exp(logprod[N])),
            "est_mu_v_of_E": pv, "est_mu_u_of_complement": pu,
            "std_errors": [se_v, se_u], "epsilon": epsilon, "mc_samples": mc_samples,
            "certified": bool(pv < epsilon + 3 * se_v and pu < epsilon + 3 * se_u)}
