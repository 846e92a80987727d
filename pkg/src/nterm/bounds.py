"""Worst-case n-term error bounds for weighted lp unit balls.

For 0 < p < oo the squared worst-case error over the unit ball is squeezed
between ``max_m (m-n) / W_m**2`` and ``max_m (m-n+1) / W_m**2``, where
``W_m = (w_1**p + ... + w_m**p)**(1/p)``.  ``class_bounds`` scans both
envelopes over m in [n, m_max] and classifies how the supremum behaves:

* ``attained``            the maximum sits at a finite index and the scan
                          confirms the envelope keeps falling past it;
* ``limit-at-infinity``   the envelope increases towards a finite limit,
                          which is estimated by extrapolation along a
                          geometric index ladder;
* ``divergent``           the envelope grows without bound (the class error
                          is infinite for every n);
* ``truncated-unknown``   the scan ended before any of the above could be
                          confirmed.

For p = oo the squared error equals the tail sum of w_j**-2, which
``class_error_infty`` evaluates with an integral-comparison remainder bound.

Squared errors are the internal currency throughout; square roots are taken
only at presentation boundaries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .weights import (
    ConstantWeights,
    LogPowerWeights,
    PowLogWeights,
    WeightModel,
)

__all__ = [
    "CumulativeWeightTable",
    "BoundResult",
    "InftyTailResult",
    "TableTruncationError",
    "build_table",
    "default_m_max",
    "class_bounds",
    "class_error_infty",
    "sandwich_width",
    "STATUS_ATTAINED",
    "STATUS_LIMIT",
    "STATUS_DIVERGENT",
    "STATUS_TRUNCATED",
    "STATUS_CONVERGED",
]

STATUS_ATTAINED = "attained"
STATUS_LIMIT = "limit-at-infinity"
STATUS_DIVERGENT = "divergent"
STATUS_TRUNCATED = "truncated-unknown"
STATUS_CONVERGED = "converged"

# switch the prefix sums to log-domain accumulation before w_j**p overflows
LOG_DOMAIN_THRESHOLD = 700.0
# trailing log-log slope above which a scanned envelope counts as divergent
SLOPE_EPS = 0.01
_EXPONENT_EPS = 1e-12


class TableTruncationError(ValueError):
    """A tabulated model is shorter than the requested table length."""

    def __init__(self, requested: int, available: int):
        super().__init__(
            f"tabulated weights end at index {available}, "
            f"requested prefix sums up to {requested}")
        self.requested = requested
        self.available = available


@dataclass(frozen=True, eq=False)
class CumulativeWeightTable:
    """Prefix sums of w_j**p, kept in extended precision or log-domain.

    ``sums_p[k]`` is w_1**p + ... + w_{k+1}**p (empty in log-domain mode,
    where ``log_sums_p`` holds the logarithms instead).
    """

    p: float
    sums_p: np.ndarray
    log_sums_p: np.ndarray | None
    log_domain: bool
    length: int

    def W(self, m: int) -> float:
        """Cumulative weight W_m."""
        self._check_index(m)
        if self.log_domain:
            return float(np.exp(self.log_sums_p[m - 1] / self.p))
        return float(self.sums_p[m - 1] ** np.longdouble(1.0 / self.p))

    def log_W(self, m: int) -> float:
        self._check_index(m)
        if self.log_domain:
            return float(self.log_sums_p[m - 1] / self.p)
        return float(np.log(self.sums_p[m - 1]) / self.p)

    def inv_sq(self, m: int) -> float:
        """W_m**-2."""
        return float(self.inv_sq_slice(m, m)[0])

    def inv_sq_slice(self, m_lo: int, m_hi: int) -> np.ndarray:
        """W_m**-2 for m in [m_lo, m_hi] as a float64 array."""
        self._check_index(m_lo)
        self._check_index(m_hi)
        if self.log_domain:
            seg = self.log_sums_p[m_lo - 1:m_hi]
            return np.exp((-2.0 / self.p) * seg)
        seg = self.sums_p[m_lo - 1:m_hi]
        return (seg ** np.longdouble(-2.0 / self.p)).astype(np.float64)

    def _check_index(self, m: int) -> None:
        if not 1 <= m <= self.length:
            raise ValueError(
                f"table covers m in [1, {self.length}], got {m}")


def build_table(w: WeightModel, p: float, M: int) -> CumulativeWeightTable:
    """Tabulate prefix p-th power sums of the weights up to index M."""
    if not 0 < p < math.inf:
        raise ValueError(f"p must be finite and positive, got {p}")
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    M = int(M)
    known = w.known_length
    if known is not None and known < M:
        raise TableTruncationError(requested=M, available=known)
    vals = w.values(M)
    logs = np.log(vals)
    if p * float(logs.max()) > LOG_DOMAIN_THRESHOLD:
        log_sums = np.logaddexp.accumulate(p * logs)
        return CumulativeWeightTable(
            p=float(p), sums_p=np.empty(0), log_sums_p=log_sums,
            log_domain=True, length=M)
    sums = np.cumsum(vals.astype(np.longdouble) ** np.longdouble(p))
    return CumulativeWeightTable(
        p=float(p), sums_p=sums, log_sums_p=None, log_domain=False, length=M)


@dataclass(frozen=True)
class BoundResult:
    """Lower/upper squared worst-case error with attainment classification.

    ``lower_sq``/``upper_sq`` are the class values (infinite when divergent,
    both equal to the extrapolated limit when the supremum is approached at
    infinity).  ``scan_lower_sq``/``scan_upper_sq`` always hold the finite
    suprema found over the scanned index range; they are what a finite
    witness or oracle can be compared against.  ``argmax_m`` is the index
    where the upper envelope peaks, when it does.
    """

    n: int
    lower_sq: float
    upper_sq: float
    argmax_m: int | None
    status: str
    limit_estimate: float | None
    m_scanned: int
    scan_lower_sq: float
    scan_upper_sq: float


def default_m_max(n: int) -> int:
    return max(1024, 64 * int(n))


def _extrapolate_limit(t: np.ndarray, m_lo: int, m_eff: int) -> float | None:
    """Aitken step on t at m_eff/4, m_eff/2, m_eff (geometric ladder)."""
    m0, m1, m2 = m_eff // 4, m_eff // 2, m_eff
    if m0 < m_lo:
        return None
    t0, t1, t2 = (float(t[m - m_lo]) for m in (m0, m1, m2))
    d1, d2 = t1 - t0, t2 - t1
    denom = d2 - d1
    if abs(denom) < 1e-300:
        return t2
    limit = t2 - d2 * d2 / denom
    if not math.isfinite(limit) or limit < 0:
        return t2
    return limit


def _trailing_slope(t: np.ndarray, m_lo: int, m_eff: int) -> float | None:
    """Least-squares slope of log t vs log m over the last scanned decade."""
    start = max(m_lo, m_eff // 10)
    seg = t[start - m_lo:]
    if seg.size < 8 or np.any(seg <= 0):
        return None
    x = np.log(np.arange(start, m_eff + 1, dtype=np.float64))
    y = np.log(seg)
    x = x - x.mean()
    denom = float(np.dot(x, x))
    if denom == 0:
        return None
    return float(np.dot(x, y) / denom)


def class_bounds(
    w: WeightModel,
    p: float,
    n: int,
    m_max: int | None = None,
    *,
    table: CumulativeWeightTable | None = None,
    slope_eps: float = SLOPE_EPS,
) -> BoundResult:
    """Scan the two worst-case envelopes over m in [n, m_max] and classify.

    The scan starts at max(n, 1) since W_m is defined for m >= 1; the m = n
    term of the lower envelope is zero anyway.  A reusable ``table`` may be
    passed when several n share one weight model; it must cover m_max.
    """
    if not 0 < p < math.inf:
        raise ValueError(f"p must be finite and positive, got {p}")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    n = int(n)
    if m_max is None:
        m_max = default_m_max(n)
    m_max = int(m_max)
    if m_max < n + 1:
        raise ValueError(f"m_max must be >= n + 1, got {m_max} < {n + 1}")

    known = w.known_length
    m_eff = m_max if known is None else min(m_max, known)
    if m_eff < max(n, 1):
        return BoundResult(
            n=n, lower_sq=0.0, upper_sq=0.0, argmax_m=None,
            status=STATUS_TRUNCATED, limit_estimate=None, m_scanned=0,
            scan_lower_sq=0.0, scan_upper_sq=0.0)
    table_truncated = m_eff < m_max

    if table is None or table.length < m_eff or table.p != p:
        table = build_table(w, p, m_eff)

    m_lo = max(n, 1)
    marr = np.arange(m_lo, m_eff + 1, dtype=np.float64)
    winv_sq = table.inv_sq_slice(m_lo, m_eff)
    t_up = (marr - n + 1.0) * winv_sq
    t_low = (marr - n) * winv_sq

    i_up = int(np.argmax(t_up))
    m_star = m_lo + i_up
    scan_upper = float(t_up[i_up])
    scan_lower = float(t_low.max())

    window = max(64, m_star // 4)
    trailing_confirmed = (
        t_up.size > window and bool(np.all(t_up[-window:] < scan_upper)))
    tail = t_up[-min(64, t_up.size):]
    trailing_nondecreasing = bool(
        np.all(np.diff(tail) >= -1e-15 * scan_upper))

    def result(status, lower, upper, argmax=None, limit=None):
        return BoundResult(
            n=n, lower_sq=lower, upper_sq=upper, argmax_m=argmax,
            status=status, limit_estimate=limit, m_scanned=int(m_eff),
            scan_lower_sq=scan_lower, scan_upper_sq=scan_upper)

    prof = w.asymptotic_exponents
    if prof is not None:
        alpha, beta = prof
        growth = 1.0 - 2.0 * (alpha + 1.0 / p)   # power of m in t_m
        log_growth = -2.0 * beta                 # power of log m in t_m
        if growth > _EXPONENT_EPS or (
                abs(growth) <= _EXPONENT_EPS and log_growth > _EXPONENT_EPS):
            return result(STATUS_DIVERGENT, math.inf, math.inf)
        if abs(growth) <= _EXPONENT_EPS and abs(log_growth) <= _EXPONENT_EPS:
            # bounded envelope with a positive limit
            limit = _extrapolate_limit(t_up, m_lo, m_eff)
            if limit is not None and limit > scan_upper * (1 + 1e-12):
                return result(STATUS_LIMIT, limit, limit, limit=limit)
            if trailing_confirmed:
                return result(
                    STATUS_ATTAINED, scan_lower, scan_upper, argmax=m_star)
            if limit is not None and trailing_nondecreasing:
                limit = max(limit, scan_upper)
                return result(STATUS_LIMIT, limit, limit, limit=limit)
            return result(STATUS_TRUNCATED, scan_lower, scan_upper)
        # envelope decays eventually, so the supremum is attained
        if trailing_confirmed:
            return result(
                STATUS_ATTAINED, scan_lower, scan_upper, argmax=m_star)
        return result(STATUS_TRUNCATED, scan_lower, scan_upper)

    # tabulated model: scan heuristics only
    if trailing_confirmed:
        return result(STATUS_ATTAINED, scan_lower, scan_upper, argmax=m_star)
    slope = _trailing_slope(t_up, m_lo, m_eff)
    if not table_truncated and slope is not None and slope >= slope_eps:
        return result(STATUS_DIVERGENT, math.inf, math.inf)
    if (not table_truncated and slope is not None and slope < slope_eps
            and trailing_nondecreasing):
        limit = _extrapolate_limit(t_up, m_lo, m_eff)
        if limit is not None:
            limit = max(limit, scan_upper)
            return result(STATUS_LIMIT, limit, limit, limit=limit)
    return result(STATUS_TRUNCATED, scan_lower, scan_upper)


def sandwich_width(r: BoundResult) -> float:
    """upper_sq - lower_sq; guaranteed at most W_n**-2 when both are finite."""
    if not (math.isfinite(r.lower_sq) and math.isfinite(r.upper_sq)):
        raise ValueError(
            f"width undefined for non-finite bounds (status {r.status})")
    return r.upper_sq - r.lower_sq


@dataclass(frozen=True)
class InftyTailResult:
    """Tail sum of w_j**-2 past index n (the exact p = oo squared error)."""

    value_sq: float
    truncation_bound: float
    status: str
    terms_summed: int


def _tail_integrand(alpha: float, beta: float):
    def g(x: float) -> float:
        return x ** (-2.0 * alpha) * math.log2(x + 1.0) ** (-2.0 * beta)
    return g


def _tail_integrand_derivative(alpha: float, beta: float, x: float) -> float:
    g = _tail_integrand(alpha, beta)(x)
    return g * (-2.0 * alpha / x - 2.0 * beta / ((x + 1.0) * math.log(x + 1.0)))


def _tail_integral(alpha: float, beta: float, X: float,
                   epsabs: float) -> tuple[float, float]:
    """Integral of x**(-2a) log2(x+1)**(-2b) over [X, oo).

    Substituting u = ln x makes the integrand decay exponentially for
    2a > 1 and like a clean power for the boundary 2a = 1, which the
    quadrature handles far better than the raw slowly-decaying tail.
    """
    log2e = 1.0 / math.log(2.0)

    def h(u: float) -> float:
        # log2(e**u + 1) without overflowing e**u
        l2 = (u + math.log1p(math.exp(-u))) * log2e
        return math.exp(u * (1.0 - 2.0 * alpha)) * l2 ** (-2.0 * beta)

    return quad(h, math.log(X), math.inf, limit=200,
                epsabs=epsabs, epsrel=1e-12)


def class_error_infty(
    w: WeightModel,
    n: int,
    *,
    tail_tol: float = 1e-12,
    max_terms: int = 10_000_000,
) -> InftyTailResult:
    """Sum w_j**-2 for j > n to a requested absolute truncation bound.

    Closed-form families sum an explicit head and close the tail with a
    midpoint integral whose Euler-Maclaurin error, plus the quadrature
    error, forms the reported bound.  Tabulated families sum to the end of
    the table and report the remainder as unknown; a trailing-slope check
    flags tables whose terms visibly decay too slowly to converge.
    """
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    n = int(n)

    known = w.known_length
    if known is not None:
        if n >= known:
            return InftyTailResult(0.0, math.inf, STATUS_TRUNCATED, 0)
        terms = w.values(known)[n:] ** -2.0
        j = np.arange(n + 1, known + 1, dtype=np.float64)
        start = max(0, terms.size - max(8, terms.size // 2))
        seg_t, seg_j = terms[start:], j[start:]
        if seg_t.size >= 8 and np.all(seg_t > 0):
            x = np.log(seg_j)
            y = np.log(seg_t)
            x = x - x.mean()
            slope = float(np.dot(x, y) / np.dot(x, x))
            if slope >= -1.0 + 0.05:
                return InftyTailResult(
                    math.inf, math.inf, STATUS_DIVERGENT, int(terms.size))
        value = math.fsum(terms.tolist())
        return InftyTailResult(
            value, math.inf, STATUS_TRUNCATED, int(terms.size))

    prof = w.asymptotic_exponents
    if prof is None:
        raise ValueError(f"unsupported weight model {type(w).__name__}")
    alpha, beta = prof
    convergent = 2 * alpha > 1 + _EXPONENT_EPS or (
        abs(2 * alpha - 1) <= _EXPONENT_EPS and 2 * beta > 1 + _EXPONENT_EPS)
    if not convergent:
        return InftyTailResult(math.inf, math.inf, STATUS_DIVERGENT, 0)

    # only PowLog reaches this point (const/logpow tails always diverge)
    assert isinstance(w, PowLogWeights)
    J = max(64, 2 * (n + 1))
    if w.beta < 0:
        # past this point the raw formula is increasing, so the running max
        # coincides with it and the integral comparison applies
        J = max(J, int(math.exp(abs(w.beta) / w.alpha)) + 2)

    def em_bound(J_: int) -> float:
        return abs(_tail_integrand_derivative(alpha, beta, J_ + 0.5)) / 12.0

    def past_plateau(J_: int) -> bool:
        raw = float(w.raw_value(np.float64(J_)))
        return raw == w.value(J_) and float(w.raw_value(np.float64(J_ + 1))) > raw

    while (em_bound(J) > 0.5 * tail_tol or not past_plateau(J)):
        if 2 * J > max_terms:
            break
        J *= 2

    head_terms = w.values(J)[n:] ** -2.0
    head = math.fsum(head_terms.tolist())
    integral, quad_err = _tail_integral(
        alpha, beta, J + 0.5, epsabs=0.25 * tail_tol)
    return InftyTailResult(
        value_sq=head + integral,
        truncation_bound=em_bound(J) + quad_err,
        status=STATUS_CONVERGED,
        terms_summed=J - n,
    )
