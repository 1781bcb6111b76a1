"""Finite-horizon certificates for positive series, limits and unbounded drift.

Every asymptotic statement in shiftlab is reduced to one of three questions
about a finite array of numbers:

* does a positive series converge (:func:`certify_log_terms`),
* does a sequence converge, and are its deviations from the limit square
  summable (:func:`certify_limit`),
* do the running extremes of a sequence drift without bound
  (:func:`record_drift`).

The rules are deliberately conservative. A status other than Undecided needs
either a geometric domination bound over the trailing window, a clean
power-law fit of the tail, or an explicit threshold crossing.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .verdict import DEFAULT, Tolerances

CONVERGES = "Converges"
_MIN_RECORD_FIT = 8  # record increments needed before a tail fit is trusted
DIVERGES = "Diverges"
UNDECIDED = "Undecided"


@dataclass(frozen=True)
class SeriesCertificate:
    status: str
    partial_sum: float
    log_partial_sum: float
    horizon: int
    tail_rule: str
    tail_bound: float | None = None
    tail_estimate: float | None = None
    exponent: float | None = None

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "partial_sum": self.partial_sum,
            "log_partial_sum": self.log_partial_sum,
            "horizon": self.horizon,
            "tail_rule": self.tail_rule,
            "tail_bound": self.tail_bound,
            "exponent": self.exponent,
        }


def _logsumexp(a: np.ndarray) -> float:
    a = a[np.isfinite(a)]
    if a.size == 0:
        return -math.inf
    m = float(a.max())
    return m + math.log(float(np.exp(a - m).sum()))


def window_start(n_terms: int, tol: Tolerances = DEFAULT) -> int:
    """Index of the first entry in the trailing certificate window."""
    width = max(3, int(math.ceil(tol.window_fraction * n_terms)))
    return max(0, n_terms - width)


def _power_fit(x: np.ndarray, y: np.ndarray):
    """Least squares fit ``y = c - s x``; returns (s, c, max abs residual)."""
    A = np.vstack([np.ones_like(x), -x]).T
    (c, s), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.max(np.abs(y - (c - s * x))))
    return float(s), float(c), resid


def certify_log_terms(log_terms, index=None, tol: Tolerances = DEFAULT, geometric: bool = True) -> SeriesCertificate:
    """Certify convergence of ``sum exp(log_terms)``.

    Parameters
    ----------
    log_terms : array_like
        Natural logarithms of the non-negative terms; ``-inf`` encodes a zero.
    index : array_like, optional
        Positive term indices used by the power-law rule. Defaults to 1..N.
    tol : Tolerances
        Thresholds.
    geometric : bool
        Whether the geometric domination rule may be used. Short sequences
        of slowly decaying terms can look geometric, so callers working
        with a handful of terms disable it.

    Returns
    -------
    SeriesCertificate
    """
    lt = np.asarray(log_terms, dtype=float)
    N = lt.size
    idx = np.arange(1, N + 1, dtype=float) if index is None else np.asarray(index, dtype=float)
    lps = _logsumexp(lt)
    ps = math.exp(lps) if lps < 709 else math.inf
    if N == 0:
        return SeriesCertificate(UNDECIDED, 0.0, -math.inf, 0, "none")

    def cert(status, rule, bound=None, estimate=None, exponent=None):
        return SeriesCertificate(status, ps, lps, N, rule, bound, estimate, exponent)

    w0 = window_start(N, tol)
    win = lt[w0:]
    widx = idx[w0:]
    finite = np.isfinite(win)
    if not finite.any():
        return cert(CONVERGES, "eventually_zero", 0.0, 0.0)

    # geometric domination relative to the first non-zero term of the window
    k0 = int(np.argmax(finite))
    rest = np.arange(k0 + 1, win.size)
    rest = rest[finite[rest]]
    if geometric and rest.size:
        slopes = (win[rest] - win[k0]) / (widx[rest] - widx[k0])
        log_q = float(slopes.max())
        if log_q <= math.log(tol.ratio_bound):
            q = math.exp(log_q)
            steps = idx[-1] + 1 - widx[k0]
            log_bound = win[k0] + steps * log_q - math.log1p(-q)
            bound = math.exp(log_bound) if log_bound < 709 else math.inf
            return cert(CONVERGES, "geometric", bound, bound, q)

    s = c = resid = None
    if finite.sum() >= 3 and finite.all():
        x = np.log(widx)
        s, c, resid = _power_fit(x, win)
        if resid <= tol.fit_residual:
            if s >= tol.pseries_converge:
                n_end = idx[-1]
                c_env = float(np.max(win + s * x))
                log_bound = c_env + (1 - s) * math.log(n_end) - math.log(s - 1)
                log_est = c + (1 - s) * math.log(n_end + 0.5) - math.log(s - 1)
                return cert(CONVERGES, "power_law", math.exp(log_bound), math.exp(log_est), s)
            if s <= tol.pseries_diverge:
                return cert(DIVERGES, "power_law", exponent=s)

    third = max(1, win.size // 3)
    if np.nanmin(np.where(finite, win, np.inf)) >= np.min(np.where(finite[:third], win[:third], np.inf)):
        return cert(DIVERGES, "non_vanishing")

    if ps > tol.divergence_sum and s is not None and s <= tol.pseries_diverge:
        return cert(DIVERGES, "partial_sum_threshold", exponent=s)
    return cert(UNDECIDED, "none", exponent=s)


def certify_terms(terms, index=None, tol: Tolerances = DEFAULT) -> SeriesCertificate:
    """Same as :func:`certify_log_terms` for terms given directly."""
    t = np.asarray(terms, dtype=float)
    if np.any(t < 0):
        raise ValueError("series terms must be non-negative")
    with np.errstate(divide="ignore"):
        return certify_log_terms(np.log(t), index, tol)


@dataclass(frozen=True)
class LimitCertificate:
    """Convergence of a real sequence and square summability of its deviations.

    ``square_summable`` refers to ``sum (x_n - limit)^2``.
    """

    status: str
    limit: float | None
    square_summable: str
    rule: str
    exponent: float | None = None
    monotone_tail: bool = False

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "limit": self.limit,
            "square_summable": self.square_summable,
            "rule": self.rule,
            "exponent": self.exponent,
        }


def certify_limit(values, tol: Tolerances = DEFAULT) -> LimitCertificate:
    """Certify that ``values`` (indexed 1..N) converge and estimate the limit.

    The increments ``D_n`` are tested for absolute summability. A power-law
    tail ``|D_n| ~ n^{-e}`` makes the deviation ``|x_n - limit|`` of order
    ``n^{1-e}``; its squares are summable iff ``2(e - 1) > 1``, decided with
    the same margins as for series. Geometric tails always give summable
    squares. Divergence of the squares is only reported for monotone tails,
    where the increment tail sum equals the deviation exactly.
    """
    x = np.asarray(values, dtype=float)
    N = x.size
    if N < 4:
        return LimitCertificate(UNDECIDED, None, UNDECIDED, "too_short")
    w0 = window_start(N, tol)
    tail = x[w0:]
    if np.all(tail == tail[0]):
        return LimitCertificate(CONVERGES, float(tail[0]), CONVERGES, "constant_tail", monotone_tail=True)
    D = np.diff(x)
    with np.errstate(divide="ignore"):
        cert = certify_log_terms(np.log(np.abs(D)), np.arange(1, N, dtype=float), tol)
    if cert.status != CONVERGES:
        return LimitCertificate(UNDECIDED, None, UNDECIDED, "increments_" + cert.tail_rule, cert.exponent)
    Dw = D[w0:]
    nz = Dw[Dw != 0]
    monotone = bool(nz.size and (np.all(nz > 0) or np.all(nz < 0)))
    sign = float(np.sign(nz[-1])) if nz.size else 0.0
    est = cert.tail_estimate or 0.0
    limit = float(x[-1] + (sign * est if monotone else 0.0))
    if cert.tail_rule in ("geometric", "eventually_zero"):
        return LimitCertificate(CONVERGES, limit, CONVERGES, "increments_" + cert.tail_rule, cert.exponent, monotone)
    e = cert.exponent
    sq = 2.0 * (e - 1.0)
    if sq >= tol.pseries_converge:
        status = CONVERGES
    elif sq <= tol.pseries_diverge and monotone:
        status = DIVERGES
    else:
        status = UNDECIDED
    return LimitCertificate(CONVERGES, limit, status, "increments_power_law", e, monotone)


@dataclass(frozen=True)
class DriftCertificate:
    """Running-record analysis of one direction (upward or downward)."""

    direction: str
    records: int
    extreme: float
    status: str  # "unbounded", "bounded" or "unknown"
    rule: str

    def to_dict(self) -> dict:
        return {
            "direction": self.direction,
            "records": self.records,
            "extreme": self.extreme,
            "status": self.status,
            "rule": self.rule,
        }


def record_drift(values, direction: str = "up", tol: Tolerances = DEFAULT, eps: float = 1e-12) -> DriftCertificate:
    """Decide whether the running maximum (or minimum) of ``values`` is bounded.

    New records are values exceeding every earlier value by more than ``eps``.
    The increments between consecutive records form a positive series: if it
    is certified divergent over at least ``tol.record_epochs`` records the
    extreme drifts without bound; if it converges, or no record is set in the
    trailing three quarters of the horizon, the extreme is bounded. The
    fit uses the later half of the increments and needs at least eight of them.
    """
    x = np.asarray(values, dtype=float)
    if direction == "down":
        x = -x
    elif direction != "up":
        raise ValueError("direction must be 'up' or 'down'")
    if x.size == 0:
        return DriftCertificate(direction, 0, math.nan, "unknown", "empty")
    run = np.maximum.accumulate(x)
    prev = np.concatenate([[-np.inf], run[:-1]])
    pos = np.flatnonzero(x > prev + eps)
    rec = x[pos]
    extreme = float(rec[-1]) if direction == "up" else float(-rec[-1])
    if pos[-1] < window_start(x.size, tol.with_(window_fraction=0.75)):
        return DriftCertificate(direction, int(pos.size), extreme, "bounded", "no_late_records")
    inc = np.diff(rec)
    if inc.size < tol.record_epochs:
        return DriftCertificate(direction, int(pos.size), extreme, "unknown", "few_records")
    half = inc[inc.size // 2:]
    if half.size < _MIN_RECORD_FIT:
        return DriftCertificate(direction, int(pos.size), extreme, "unknown", "few_records")
    order = np.arange(inc.size // 2 + 1, inc.size + 1, dtype=float)
    cert = certify_log_terms(np.log(half), order, tol.with_(window_fraction=1.0), geometric=False)
    if cert.status == DIVERGES:
        return DriftCertificate(direction, int(pos.size), extreme, "unbounded", "record_increments_" + cert.tail_rule)
    if cert.status == CONVERGES:
        return DriftCertificate(direction, int(pos.size), extreme, "bounded", "record_increments_" + cert.tail_rule)
    return DriftCertificate(direction, int(pos.size), extreme, "unknown", "record_increments_undecided")
