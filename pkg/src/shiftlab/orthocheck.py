"""Orthogonality and non-orthogonality of two weighted shifts.

Everything here is driven by the log-ratio
``log lambda_n = log|u_1...u_n| - log|v_1...v_n|``:

* similarity holds iff ``lambda_n`` stays in a compact subset of ``(0, inf)``;
* orthogonality follows when ``lambda_n`` is tiny (or huge) on arbitrarily
  long runs of consecutive indices;
* a common non-zero periodic point exists iff, along some arithmetic
  progression ``dm + j``, the two products agree up to a constant.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .errors import InternalInconsistency, NotSummable, ZeroScalar
from .series import CONVERGES, record_drift
from .verdict import DEFAULT, Status, Tolerances, Verdict, jsonable
from .weights import FormulaPositions, ScaledCopy, SparseException, WeightSpec, _real_phases, log_products, parse_scalar, summability


@dataclass(frozen=True)
class RatioSeries:
    """``log lambda_n`` for n = 0..N (entry 0 is 0)."""

    lambdas_log: np.ndarray
    horizon: int

    def __neg__(self) -> "RatioSeries":
        return RatioSeries(-self.lambdas_log, self.horizon)


def ratio_series(u: WeightSpec, v: WeightSpec, horizon: int) -> RatioSeries:
    lu, lv = log_products(u, horizon), log_products(v, horizon)
    return RatioSeries(lu.minus(lv), horizon)


def _horizon(horizon, config: Tolerances) -> int:
    return config.horizon if horizon is None else int(horizon)


def _scaled_pair(u: WeightSpec, v: WeightSpec):
    """``(a, b)`` when ``u = a w`` and ``v = b w`` for a common ``w``, else None."""
    if isinstance(u, ScaledCopy) and isinstance(v, ScaledCopy) and u.base == v.base:
        return u.scalar, v.scalar
    if isinstance(u, ScaledCopy) and u.base == v:
        return u.scalar, 1
    if isinstance(v, ScaledCopy) and v.base == u:
        return 1, v.scalar
    return None


def _symbolic_log_slope(u: WeightSpec, v: WeightSpec):
    """Eventual slope of ``log lambda_n`` when it is linear by construction."""
    pair = _scaled_pair(u, v)
    if pair is not None:
        a, b = pair
        return math.log(abs(a)) - math.log(abs(b)), "scaled_copies"
    tu, tv = u.eventual_tail(), v.eventual_tail()
    if tu is not None and tv is not None:
        return math.log(abs(tu[1])) - math.log(abs(tv[1])), "eventual_constant_tails"
    return None


def _sparse_block_profile(u: WeightSpec, v: WeightSpec):
    """Exact log-ratio profile of two formula-sparse specs with ``1/k`` exceptions.

    When both specs share base, scale, ratio and ``k_start`` and have the
    same number of offsets, every block nets to zero and inside block ``k``
    ``log lambda_{scale r^k + o} = (c_u(o) - c_v(o)) * (-log(k |base|))``,
    where ``c(o)`` counts exceptional offsets ``<= o``. Returns the list of
    ``(o, c_u(o) - c_v(o))`` or None when the pattern does not apply.
    """
    if not (isinstance(u, SparseException) and isinstance(v, SparseException)):
        return None
    fu, fv = u.exceptions, v.exceptions
    if not (isinstance(fu, FormulaPositions) and isinstance(fv, FormulaPositions)):
        return None
    same = (fu.scale, fu.ratio, fu.k_start) == (fv.scale, fv.ratio, fv.k_start)
    if not same or fu.value != "reciprocal" or fv.value != "reciprocal" or u.base != v.base:
        return None
    if len(fu.offsets) != len(fv.offsets):
        return None
    offsets = sorted(set(fu.offsets) | set(fv.offsets))
    return [(o, sum(x <= o for x in fu.offsets) - sum(x <= o for x in fv.offsets)) for o in offsets]


def _same_modulus(a, b, rel: float = 1e-12) -> bool:
    if isinstance(a, Fraction) or isinstance(b, Fraction) or (isinstance(a, int) and isinstance(b, int)):
        if not isinstance(a, complex) and not isinstance(b, complex):
            return abs(Fraction(a)) == abs(Fraction(b))
    return abs(abs(a) - abs(b)) <= rel * max(abs(a), abs(b))


def similarity_test(u: WeightSpec, v: WeightSpec, horizon: int | None = None,
                    config: Tolerances = DEFAULT) -> Verdict:
    """Is ``lambda_n`` bounded away from 0 and from infinity?"""
    N = _horizon(horizon, config)
    claim = "similar"
    sym = _symbolic_log_slope(u, v)
    if sym is not None:
        slope, rule = sym
        pair = _scaled_pair(u, v)
        flat = _same_modulus(*pair) if pair is not None else _same_modulus(u.eventual_tail()[1], v.eventual_tail()[1])
        ev = {"log_ratio_slope": 0.0 if flat else slope}
        return Verdict(Status.ESTABLISHED if flat else Status.REFUTED, rule, claim, ev)
    R = ratio_series(u, v, N).lambdas_log
    thr = config.ratio_log_threshold
    ev = {"horizon": N, "max_log_ratio": float(R.max()), "min_log_ratio": float(R.min()), "threshold": thr}
    profile = _sparse_block_profile(u, v)
    if profile is not None:
        f = u.exceptions
        log_base = math.log(abs(float(u.base)))
        # observed values must match the block formula wherever it is in range
        checks = [(f.scale * f.ratio ** k + o, -c * (math.log(k) + log_base))
                  for k in range(f.k_start, f.k_start + 64) for o, c in profile
                  if f.scale * f.ratio ** k + o <= N]
        err = max((abs(R[n] - val) for n, val in checks), default=0.0)
        ev.update(block_profile=profile, formula_checks=len(checks), formula_max_error=err)
        if err <= 1e-9:
            status = Status.REFUTED if any(c != 0 for _, c in profile) else Status.ESTABLISHED
            return Verdict(status, "sparse_block_log_ratio", claim, ev)
    if R.max() > thr or R.min() < -thr:
        return Verdict(Status.REFUTED, "log_ratio_threshold", claim, ev)
    up = record_drift(R[1:], "up", config)
    down = record_drift(R[1:], "down", config)
    ev.update(upward=up.to_dict(), downward=down.to_dict())
    if up.status == "unbounded" or down.status == "unbounded":
        return Verdict(Status.REFUTED, "log_ratio_record_drift", claim, ev)
    if up.status == "bounded" and down.status == "bounded":
        return Verdict(Status.ESTABLISHED, "log_ratio_record_drift", claim, ev)
    return Verdict(Status.UNDECIDED, "log_ratio_record_drift", claim, ev)


def _runs(mask: np.ndarray) -> list[tuple[int, int]]:
    """``(start, length)`` of the maximal runs of True."""
    m = np.concatenate([[False], mask, [False]]).astype(np.int8)
    d = np.diff(m)
    starts = np.flatnonzero(d == 1)
    ends = np.flatnonzero(d == -1)
    return list(zip(starts.tolist(), (ends - starts).tolist()))


def _epoch_run_lengths(mask: np.ndarray, epochs: int) -> list[int]:
    """Longest run starting in each of ``epochs`` equal slices of the index range."""
    n = mask.size
    bounds = [round(i * n / epochs) for i in range(epochs + 1)]
    best = [0] * epochs
    for s, length in _runs(mask):
        for e in range(epochs):
            if bounds[e] <= s < bounds[e + 1]:
                # a run may be cut at the horizon; only count what was observed
                best[e] = max(best[e], length)
    return best


def window_orthogonality_test(u: WeightSpec, v: WeightSpec, N_window: int = 8, horizon: int | None = None,
                              config: Tolerances = DEFAULT) -> Verdict:
    """Orthogonality when ``lambda_n`` is small (or large) on long windows.

    For each window length ``N + 1`` with ``N <= N_window`` the set of ``n``
    whose whole window ``n..n+N`` has ``log lambda < -threshold`` (or
    ``> +threshold``) must occur in every one of ``config.epochs`` disjoint
    epochs of the horizon. Scaled copies and eventually constant weights
    with different moduli are decided symbolically.
    """
    if N_window < 0:
        raise ValueError("N_window must be >= 0")
    N = _horizon(horizon, config)
    claim = "orthogonal"
    sym = _symbolic_log_slope(u, v)
    if sym is not None and sym[0] != 0 and not _symbolic_flat(u, v):
        slope, rule = sym
        return Verdict(Status.ESTABLISHED, "window_criterion", claim,
                       {"symbolic": rule, "log_ratio_slope": slope, "windows": list(range(N_window + 1))})
    R = ratio_series(u, v, N).lambdas_log[1:]
    thr = config.ratio_log_threshold
    low = _epoch_run_lengths(R < -thr, config.epochs)
    high = _epoch_run_lengths(R > thr, config.epochs)
    per_window = {}
    for W in range(N_window + 1):
        per_window[W] = {"small_ratio": all(r >= W + 1 for r in low), "large_ratio": all(r >= W + 1 for r in high)}
    ev = {"horizon": N, "threshold": thr, "epochs": config.epochs, "longest_small_runs": low,
          "longest_large_runs": high, "windows": per_window}
    if all(w["small_ratio"] or w["large_ratio"] for w in per_window.values()):
        return Verdict(Status.ESTABLISHED, "window_criterion", claim, ev)
    return Verdict(Status.UNDECIDED, "window_criterion", claim, ev)


def _symbolic_flat(u: WeightSpec, v: WeightSpec) -> bool:
    pair = _scaled_pair(u, v)
    if pair is not None:
        return _same_modulus(*pair)
    return _same_modulus(u.eventual_tail()[1], v.eventual_tail()[1])


def scalar_pair_test(T_tag, a, b) -> Verdict:
    """``aT`` versus ``bT``: orthogonal iff ``|a| != |b|``.

    With ``|a| = |b|`` the phase-symmetrised invariant measure of ``T`` is
    invariant for both operators, so they are not orthogonal.
    """
    a, b = parse_scalar(a), parse_scalar(b)
    if a == 0 or b == 0:
        raise ZeroScalar("scalars must be non-zero")
    ev = {"operator": str(T_tag), "abs_a": float(abs(a)), "abs_b": float(abs(b))}
    if _same_modulus(a, b):
        return Verdict(Status.REFUTED, "scalar_pair_modulus", "orthogonal", ev)
    return Verdict(Status.ESTABLISHED, "scalar_pair_modulus", "orthogonal", ev)


@dataclass(frozen=True)
class PeriodicWitness:
    """Common period ``d``, offset ``j`` and constant ``C`` with
    ``u_1...u_{dm+j} = C v_1...v_{dm+j}`` for ``m = 0..checked_m``.

    ``vector`` is the truncation of ``sum_m e_{md+j} / (u_1...u_{md+j})``,
    a tuple of fractions when ``exact`` and a float array otherwise.
    """

    d: int
    j: int
    C: object
    checked_m: int
    vector: object
    exact: bool

    def to_dict(self) -> dict:
        return {"d": self.d, "j": self.j, "C": jsonable(self.C), "checked_m": self.checked_m,
                "exact": self.exact, "label": "exact" if self.exact else "numeric",
                "vector_length": len(self.vector)}


def _phase_of_products(spec: WeightSpec, N: int) -> np.ndarray:
    return log_products(spec, N).phases if spec.complex_field else _real_phases(spec, N)


def _exact_ratio_check(u, v, d, j, m_max) -> Fraction | None:
    """Exact ``C`` if every block ``u_{k}/v_{k}``, k in ``(dm+j, d(m+1)+j]``, multiplies to 1."""
    C = Fraction(1)
    for k in range(1, j + 1):
        C *= Fraction(u.exact_weight(k)) / Fraction(v.exact_weight(k))
    for m in range(m_max):
        block = Fraction(1)
        for k in range(d * m + j + 1, d * (m + 1) + j + 1):
            block *= Fraction(u.exact_weight(k)) / Fraction(v.exact_weight(k))
        if block != 1:
            return None
    return C


def shared_periodic_point(u: WeightSpec, v: WeightSpec, p: float = 2.0, d_max: int | None = None,
                          m_check: int | None = None, horizon: int | None = None,
                          config: Tolerances = DEFAULT, vector_length: int | None = None,
                          return_all: bool = False):
    """Search for a common non-zero periodic point of ``B_u`` and ``B_v``.

    Candidates ``(d, j)`` are screened in floating point on the log-ratio and
    the phase, then confirmed exactly in rational arithmetic when both specs
    are rational. Returns the first witness in order of ``(d, j)``, or None
    when nothing is found with ``d <= d_max``. With ``return_all`` every
    confirmed ``(d, j)`` is returned as a list instead.

    Raises
    ------
    NotSummable
        If either ``S_p`` series is not certified convergent.
    """
    d_max = config.d_max if d_max is None else int(d_max)
    m_check = config.m_check if m_check is None else int(m_check)
    N = _horizon(horizon, config)
    for name, spec in (("u", u), ("v", v)):
        s = summability(spec, p, N, config)
        if s.status != CONVERGES:
            raise NotSummable(f"S_p of {name} not certified convergent ({s.tail_rule})")
    need = d_max * m_check + d_max
    N = max(N, need)
    R = ratio_series(u, v, N).lambdas_log
    dphi = _phase_of_products(u, N) - _phase_of_products(v, N)
    exact = u.is_rational and v.is_rational
    tol = config.exact_tol
    found = []
    for d in range(1, d_max + 1):
        for j in range(d):
            idx = np.arange(j, j + d * m_check + 1, d)
            if np.max(np.abs(R[idx] - R[j])) > tol:
                continue
            rot = np.angle(np.exp(1j * (dphi[idx] - dphi[j])))
            if np.max(np.abs(rot)) > tol:
                continue
            if exact:
                C = _exact_ratio_check(u, v, d, j, m_check)
                if C is None:
                    continue
            else:
                C = math.exp(R[j]) * (cmath.exp(1j * dphi[j]) if u.complex_field or v.complex_field
                                      else math.cos(dphi[j]))
            vec = _witness_vector(u, d, j, vector_length or (20 * d + j + 1), exact)
            found.append(PeriodicWitness(d, j, C, m_check, vec, exact))
            if not return_all:
                return found[0]
    return found if return_all else None


def _witness_vector(u: WeightSpec, d: int, j: int, length: int, exact: bool):
    if exact:
        out = [Fraction(0)] * length
        prod = Fraction(1)
        for k in range(1, length):
            prod *= Fraction(u.exact_weight(k))
            if k >= j and (k - j) % d == 0:
                out[k] = 1 / prod
        if j == 0:
            out[0] = Fraction(1)
        return tuple(out)
    lp = log_products(u, length - 1)
    ph = _phase_of_products(u, length - 1)
    vals = np.exp(-(lp.logs + lp.lo)) * np.exp(-1j * ph)
    mask = np.zeros(length, dtype=bool)
    mask[j::d] = True
    vals = np.where(mask, vals, 0)
    return vals if u.complex_field else vals.real


@dataclass
class OrthogonalityReport:
    verdicts: list = field(default_factory=list)
    summary: str = "Undecided"
    witness: PeriodicWitness | None = None

    def to_dict(self) -> dict:
        out = {"summary": self.summary, "verdicts": [v.to_dict() for v in self.verdicts]}
        if self.witness is not None:
            out["periodic_witness"] = self.witness.to_dict()
        return out


_ORTHOGONAL_RULES = {"window_criterion", "bounded_below_not_similar", "scalar_pair_modulus"}
_NON_ORTHOGONAL_RULES = {"shared_periodic_point", "gaussian_equivalence"}


def orthogonality_report(u: WeightSpec, v: WeightSpec, p: float = 2.0, config: Tolerances = DEFAULT,
                         horizon: int | None = None, N_window: int = 8,
                         gaussian_horizon: int | None = None) -> OrthogonalityReport:
    """Run every criterion on ``(u, v)`` and combine them.

    The summary is Orthogonal when an orthogonality rule is Established,
    NotOrthogonal when a common periodic point or equivalent Gaussian
    measures are found, and Undecided otherwise. Similarity alone never
    settles non-orthogonality.

    Raises
    ------
    InternalInconsistency
        If rules on both sides are Established.
    """
    from .hellinger import gaussian_equivalence_test

    N = _horizon(horizon, config)
    verdicts = []
    sim = similarity_test(u, v, N, config)
    verdicts.append(sim)
    verdicts.append(window_orthogonality_test(u, v, N_window, N, config))

    pair = _scaled_pair(u, v)
    if pair is not None:
        base = u.base if isinstance(u, ScaledCopy) else v.base
        verdicts.append(scalar_pair_test(base.key(), *pair))

    lo_u, lo_v = u.lower_bound(), v.lower_bound()
    bb_ev = {"horizon": N, "inf_abs_u": lo_u, "inf_abs_v": lo_v, "similarity": sim.status.value}
    bounded_below = bool(lo_u and lo_v and lo_u > 0 and lo_v > 0)
    if bounded_below and sim.refuted:
        verdicts.append(Verdict(Status.ESTABLISHED, "bounded_below_not_similar", "orthogonal", bb_ev))
    else:
        verdicts.append(Verdict(Status.UNDECIDED, "bounded_below_not_similar", "orthogonal", bb_ev))

    witness = None
    try:
        witness = shared_periodic_point(u, v, p, horizon=N, config=config)
        if witness is None:
            verdicts.append(Verdict(Status.UNDECIDED, "shared_periodic_point", "not_orthogonal",
                                    {"horizon": N, "d_max": config.d_max, "m_check": config.m_check}))
        else:
            verdicts.append(Verdict(Status.ESTABLISHED, "shared_periodic_point", "not_orthogonal",
                                    witness.to_dict()))
    except NotSummable as exc:
        verdicts.append(Verdict(Status.UNDECIDED, "shared_periodic_point", "not_orthogonal",
                                {"horizon": N, "reason": str(exc)}))
    try:
        ge = gaussian_equivalence_test(u, v, p, gaussian_horizon or N, config)
        g = ge["exists_kappa"]
        verdicts.append(Verdict(g.status, "gaussian_equivalence", "not_orthogonal", g.evidence))
    except NotSummable as exc:
        verdicts.append(Verdict(Status.UNDECIDED, "gaussian_equivalence", "not_orthogonal",
                                {"horizon": N, "reason": str(exc)}))

    orth = [v_ for v_ in verdicts if v_.rule in _ORTHOGONAL_RULES and v_.established]
    non_orth = [v_ for v_ in verdicts if v_.rule in _NON_ORTHOGONAL_RULES and v_.established]
    # a refuted scalar-pair test is itself a non-orthogonality certificate
    non_orth += [v_ for v_ in verdicts if v_.rule == "scalar_pair_modulus" and v_.refuted]
    if orth and non_orth:
        raise InternalInconsistency(
            f"orthogonal by {[x.rule for x in orth]} but not orthogonal by {[x.rule for x in non_orth]}")
    summary = "Orthogonal" if orth else "NotOrthogonal" if non_orth else "Undecided"
    return OrthogonalityReport(verdicts, summary, witness)
