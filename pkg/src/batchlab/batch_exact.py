"""Deterministic learning-time computations for a fixed overlap vector.

For overlaps p = (p_1, ..., p_n), all < 1, the batch learner survives step k
with probability q_k = 1 - prod_i (1 - p_i**k).  Two independent exact
formulas for the expected time are implemented:

* the step-sum T = sum_{k>=1} q_k  (series with geometric tail bound), and
* the inclusion-exclusion subset sum over nonempty S of
  (-1)**(|S|-1) * p_S/(1 - p_S), p_S the product over S.

They agree to full precision and serve as each other's oracle.  Note the
off-by-one between the two natural "time" conventions: the expected number
of teacher words consumed is E[k0] = 1 + T for n >= 1 (the k = 0 term of
the tail-sum identity), so both are returned.  Simulator comparisons use
``steps_expectation``.

For ensembles of large vectors (scales up to ~n**2 steps for negative tail
exponents) the exact k-by-k sum is replaced by an Euler-Maclaurin corrected
integral on a geometric grid plus closed-form geometric tails; accuracy is
~1e-5 relative, checked against the exact series where both run.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .errors import DivergenceError, PrecisionLossError

SUBSET_LIMIT = 25
_TAIL_S_THRESHOLD = 1e-4   # retire a vector to closed-form tail once S(k) <= this
_TAIL_ORDERS = 5           # log1p expansion orders kept in closed-form tails
_EXACT_HEAD = 256          # exact k-summation range before the integral part
_K_CAP = 1 << 25


class TimeEstimate(NamedTuple):
    """Expected learning time in both conventions (T and E[word count] = T+1)."""

    t: float
    steps_expectation: float


class SurvivalCurve(NamedTuple):
    """q_1..q_K with a bound on the discarded remainder sum."""

    q: np.ndarray
    truncation_k: int
    tail_bound: float

    def at(self, k: int) -> float:
        if not 1 <= k <= self.truncation_k:
            raise IndexError(f"curve truncated at k = {self.truncation_k}")
        return float(self.q[k - 1])


def _as_p(p, forbid_one: bool = True) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(p, dtype=np.float64))
    if arr.ndim != 1:
        raise ValueError("overlap vector must be one-dimensional")
    if arr.size and (arr.min() < 0.0 or arr.max() > 1.0):
        raise ValueError("overlap probabilities must lie in [0, 1]")
    if forbid_one and arr.size and arr.max() >= 1.0:
        raise DivergenceError("an overlap probability of exactly 1 makes the "
                              "expected learning time infinite")
    return arr


# ----------------------------------------------------------------------
# survival probabilities and coarse bounds
# ----------------------------------------------------------------------


def survival(p, k: int) -> float:
    """q_k = 1 - prod_i (1 - p_i**k), in log space to dodge underflow."""
    if k < 1:
        raise ValueError("k must be >= 1")
    arr = _as_p(p, forbid_one=False)
    return float(_survival_bulk(arr, np.asarray([float(k)]))[0])


def survival_bulk(p, ks) -> np.ndarray:
    """Vectorized survival over an array of step counts."""
    arr = _as_p(p, forbid_one=False)
    return _survival_bulk(arr, np.asarray(ks, dtype=np.float64))


def _survival_bulk(arr: np.ndarray, ks: np.ndarray) -> np.ndarray:
    if arr.size == 0:
        return np.zeros_like(ks)
    with np.errstate(divide="ignore"):
        logp = np.log(arr)
    with np.errstate(under="ignore", invalid="ignore"):
        pk = np.exp(np.multiply.outer(ks, logp))        # (len(ks), n)
        pk = np.where(np.isnan(pk), 0.0, pk)            # 0 * inf from p = 0
        loglk = np.log1p(-pk).sum(axis=1)
    return -np.expm1(loglk)


def sandwich(p, k: int) -> tuple[float, float]:
    """(max_i p_i**k, min(1, sum_i p_i**k)): certified bracket around q_k."""
    if k < 1:
        raise ValueError("k must be >= 1")
    arr = _as_p(p, forbid_one=False)
    if arr.size == 0:
        return 0.0, 0.0
    with np.errstate(divide="ignore", under="ignore", invalid="ignore"):
        pk = np.exp(k * np.log(arr))
        pk = np.where(np.isnan(pk), 0.0, pk)
    return float(pk.max()), float(min(1.0, pk.sum()))


def coarse_bounds(p) -> tuple[float, float]:
    """(sum_i 1/(1-p_i), max_i 1/(1-p_i)).

    The sandwich holds for the word count T + 1:
    max 1/(1-p_i) <= T + 1 <= sum 1/(1-p_i) (the lower bound can exceed T
    itself, e.g. p = (0.5) where T = 1 but max 1/(1-p) = 2).
    """
    arr = _as_p(p)
    if arr.size == 0:
        return 0.0, 0.0
    inv = 1.0 / (1.0 - arr)
    return float(inv.sum()), float(inv.max())


# ----------------------------------------------------------------------
# exact expected time, two ways
# ----------------------------------------------------------------------


def expected_time_series(p, eps: float = 1e-12, k_cap: int = _K_CAP) -> TimeEstimate:
    """T = sum_{k>=1} q_k, truncated when n * p_max**(K+1) / (1-p_max) < eps.

    Returns (T, T + 1) for n >= 1 and (0, 0) for the empty vector.  Raises
    PrecisionLossError if the geometric bound cannot reach eps within k_cap
    steps (use :func:`expected_time_fast` for such scales).
    """
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    arr = _as_p(p)
    n = arr.size
    if n == 0:
        return TimeEstimate(0.0, 0.0)
    arr = -np.sort(-arr)                       # dead columns drop off the end
    p_max = float(arr[0])
    if p_max == 0.0:
        return TimeEstimate(0.0, 1.0)
    with np.errstate(divide="ignore"):
        logp = np.log(arr)
    block = max(64, min(4096, int(4e6) // n))
    total = 0.0
    k = 0
    while True:
        # columns with p**k < ~1e-18 at the block start stay negligible
        cut = int(np.searchsorted(-arr, -math.exp(-40.0 / (k + 1)))) or 1
        ks = np.arange(k + 1, k + block + 1, dtype=np.float64)
        with np.errstate(under="ignore", invalid="ignore"):
            pk = np.exp(np.multiply.outer(ks, logp[:cut]))
            pk = np.where(np.isnan(pk), 0.0, pk)
            q = -np.expm1(np.log1p(-pk).sum(axis=1))
        total += float(q.sum())
        k += block
        tail = n * p_max ** (k + 1) / (1.0 - p_max)
        if tail < eps:
            return TimeEstimate(total, total + 1.0)
        if k >= k_cap:
            raise PrecisionLossError(
                f"series tail bound {tail:g} still above eps = {eps:g} after "
                f"{k} steps (p_max = {p_max}); use expected_time_fast")


def expected_time_subsets(p) -> float:
    """Inclusion-exclusion value of T, exact up to rounding; n <= 25.

    Subsets are enumerated in Gray-code order so the running product changes
    by one incremental update per subset; the product is carried as a log
    sum, immune to underflow from subnormal entries.  Zero entries are
    pruned first (their subsets contribute nothing).  Terms are accumulated
    with exact (fsum) rounding.
    """
    arr = _as_p(p)
    arr = arr[arr > 0.0]
    m = arr.size
    if m == 0:
        return 0.0
    if m > SUBSET_LIMIT:
        raise ValueError(f"subset enumeration limited to n <= {SUBSET_LIMIT} "
                         f"nonzero entries, got {m}")
    return math.fsum(_subset_terms(np.log(arr).tolist(), m))


def _subset_terms(logp: list, m: int):
    logprod = 0.0
    size = 0
    for i in range(1, 1 << m):
        # Gray code g = i ^ (i >> 1); between i-1 and i, bit ctz(i) of g flips
        j = (i & -i).bit_length() - 1
        if ((i ^ (i >> 1)) >> j) & 1:
            logprod += logp[j]
            size += 1
        else:
            logprod -= logp[j]
            size -= 1
        # true subset products are < 1; clamp away rounding drift across 0
        ps = min(math.exp(logprod), 1.0 - 2.0**-53)
        term = ps / (1.0 - ps)
        yield term if (size & 1) else -term


def expected_time_subsets_bulk(P: np.ndarray) -> np.ndarray:
    """Vectorized subset formula over rows of P (small n only).

    Builds all 2**n subset products by doubling; memory is rows * 2**n.
    """
    P = np.asarray(P, dtype=np.float64)
    rows, n = P.shape
    if n > 20:
        raise ValueError("bulk subset evaluation limited to n <= 20")
    prods = np.ones((rows, 1))
    signs = np.array([-1.0])                    # sign(S) = (-1)**(|S| - 1)
    for i in range(n):
        prods = np.concatenate([prods, prods * P[:, i:i + 1]], axis=1)
        signs = np.concatenate([signs, -signs])
    # drop the empty subset (column 0), which contributes nothing
    terms = prods[:, 1:] / (1.0 - prods[:, 1:])
    return (signs[1:] * terms).sum(axis=1)


def survival_curve(p, eps: float = 1e-9, k_cap: int = _K_CAP) -> SurvivalCurve:
    """Tabulate q_1..q_K until the geometric remainder bound drops below eps."""
    arr = _as_p(p)
    n = arr.size
    if n == 0:
        return SurvivalCurve(np.zeros(1), 1, 0.0)
    p_max = float(arr.max())
    if p_max == 0.0:
        return SurvivalCurve(np.zeros(1), 1, 0.0)
    k = 1
    while n * p_max ** (k + 1) / (1.0 - p_max) >= eps:
        k *= 2
        if k > k_cap:
            raise PrecisionLossError("survival curve truncation did not converge")
    ks = np.arange(1, k + 1, dtype=np.float64)
    q = _survival_bulk(arr, ks)
    return SurvivalCurve(q, k, n * p_max ** (k + 1) / (1.0 - p_max))


def n_delta(p, delta: float) -> int:
    """Smallest k >= 1 with survival(p, k) <= delta."""
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    arr = _as_p(p)
    if arr.size == 0 or arr.max() == 0.0:
        return 1
    if survival(arr, 1) <= delta:
        return 1
    lo = 1
    hi = 2
    while survival(arr, hi) > delta:
        lo = hi
        hi *= 2
    # invariant: survival(lo) > delta >= survival(hi)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if survival(arr, mid) > delta:
            lo = mid
        else:
            hi = mid
    return hi


# ----------------------------------------------------------------------
# large-scale evaluation (ensemble Monte Carlo)
# ----------------------------------------------------------------------


def _closed_form_tail(arr: np.ndarray, logp: np.ndarray, k: int) -> float:
    """sum_{j>k} q_j when S(k+1) = sum p_i**(k+1) is already small.

    Uses q_j <= -sum log1p(-p_i**j) expanded in powers (orders r) with exact
    geometric sums, minus half the certified second-order correction.
    """
    with np.errstate(under="ignore", invalid="ignore"):
        first = 0.0
        for r in range(1, _TAIL_ORDERS + 1):
            pr = np.exp(r * (k + 1) * logp)
            pr = np.where(np.isnan(pr), 0.0, pr)
            prk = np.exp(r * logp)
            prk = np.where(np.isnan(prk), 0.0, prk)
            first += float((pr / (1.0 - prk)).sum()) / r
        s_next = float(np.where(np.isnan(np.exp((k + 1) * logp)), 0.0,
                                np.exp((k + 1) * logp)).sum())
    return first * (1.0 - 0.25 * s_next)


def expected_time_fast(p) -> TimeEstimate:
    """Expected time for a single (possibly huge-scale) vector.

    Exact summation for k <= 256, then an Euler-Maclaurin corrected integral
    of q(x) on a geometric grid down to where sum p_i**x is negligible, then
    a closed-form geometric tail.  Relative accuracy ~1e-5; intended for the
    ensemble Monte Carlo where scales reach ~n**2 steps.
    """
    arr = _as_p(p)
    arr = np.sort(arr[arr > 0.0])[::-1]
    n = arr.size
    if n == 0:
        return TimeEstimate(0.0, float(np.asarray(p).size > 0))
    with np.errstate(divide="ignore"):
        logp = np.log(arr)

    # exact head
    total = 0.0
    head = _EXACT_HEAD
    for lo in range(1, head + 1, max(1, int(4e6) // n)):
        hi = min(lo + max(1, int(4e6) // n) - 1, head)
        ks = np.arange(lo, hi + 1, dtype=np.float64)
        total += float(_survival_bulk(arr, ks).sum())

    s_head = _s_of(arr, logp, float(head + 1))
    if s_head <= _TAIL_S_THRESHOLD:
        return _finish(total + _closed_form_tail(arr, logp, head))

    # geometric-grid integral from a = head+1 out to where S <= threshold
    a = float(head + 1)
    # S(x) is dominated by exp(x * logp[0]); solve for the cut generously
    x_cut = max(2.0 * a, math.log(max(n, 2) / (0.5 * _TAIL_S_THRESHOLD))
                / max(-logp[0], 1e-300))
    b = a
    while _s_of(arr, logp, b) > _TAIL_S_THRESHOLD:
        b = min(2.0 * b, x_cut)
        if b >= x_cut:
            break
    b = math.ceil(b)

    nodes, weights = np.polynomial.legendre.leggauss(12)
    integral = 0.0
    panels = max(1, int(math.ceil(math.log2(b / a) * 1.5)))
    edges = a * (b / a) ** (np.arange(panels + 1) / panels)
    for left, right in zip(edges[:-1], edges[1:]):
        lu, ru = math.log(left), math.log(right)
        u = 0.5 * (ru - lu) * nodes + 0.5 * (ru + lu)
        x = np.exp(u)
        # columns beyond the underflow cut at the panel's left edge are dead
        cut = int(np.searchsorted(-arr, -math.exp(-40.0 / left))) or 1
        qx = _survival_bulk(arr[:cut], x)
        integral += 0.5 * (ru - lu) * float((weights * qx * x).sum())

    # Euler-Maclaurin: sum_{k=a}^{b} f(k) ~ int_a^b f + (f(a)+f(b))/2
    #                  + (f'(b)-f'(a))/12
    fa, fb = float(_survival_bulk(arr, np.asarray([a]))[0]), \
        float(_survival_bulk(arr, np.asarray([float(b)]))[0])
    dfa, dfb = _q_prime(arr, logp, a), _q_prime(arr, logp, float(b))
    middle = integral + 0.5 * (fa + fb) + (dfb - dfa) / 12.0

    return _finish(total + middle + _closed_form_tail(arr, logp, int(b)))


def _finish(t: float) -> TimeEstimate:
    return TimeEstimate(t, t + 1.0)


def _s_of(arr, logp, x: float) -> float:
    with np.errstate(under="ignore"):
        return float(np.exp(x * logp).sum())


def _q_prime(arr, logp, x: float) -> float:
    """d/dx of q(x) = 1 - prod(1 - p_i**x)."""
    with np.errstate(under="ignore"):
        px = np.exp(x * logp)
        l = math.exp(float(np.log1p(-px).sum()))
        return l * float((px * logp / (1.0 - px)).sum())


def expected_time_bulk(P: np.ndarray, k_switch: int = 4096) -> np.ndarray:
    """Expected times T for each row of P.

    Exact k-stepping with per-row retirement to the closed-form geometric
    tail once S(k) = sum p_i**k is negligible; rows whose scale exceeds
    ``k_switch`` steps (tiny minimum gap) are handed to
    :func:`expected_time_fast` instead.  Accuracy ~1e-5 relative.
    """
    P = np.asarray(P, dtype=np.float64)
    if P.ndim != 2:
        raise ValueError("P must be (rows, n)")
    if P.size and P.max() >= 1.0:
        raise DivergenceError("overlap probability of exactly 1 in bulk input")
    rows, n = P.shape
    if rows == 0 or n == 0:
        return np.zeros(rows)

    Ps = -np.sort(-P, axis=1)
    with np.errstate(divide="ignore"):
        logps = np.log(Ps)
    colmax = Ps.max(axis=0)

    T = np.zeros(rows)
    # rows whose decay scale already exceeds the stepping budget go straight
    # to the integral evaluator instead of burning k_switch exact steps
    with np.errstate(divide="ignore"):
        k_estimate = (math.log(n / _TAIL_S_THRESHOLD)
                      / np.maximum(-logps[:, 0], 1e-300))
    active = np.flatnonzero(k_estimate <= k_switch)
    stragglers = np.flatnonzero(k_estimate > k_switch)
    for k in range(1, k_switch + 1):
        if not active.size:
            break
        cut = int(np.searchsorted(-colmax, -math.exp(-40.0 / k))) or 1
        with np.errstate(under="ignore", invalid="ignore"):
            pk = np.exp(k * logps[active, :cut])
            pk = np.where(np.isnan(pk), 0.0, pk)
            s_row = pk.sum(axis=1)
            q = -np.expm1(np.log1p(-pk).sum(axis=1))
        T[active] += q
        done = s_row <= _TAIL_S_THRESHOLD
        if done.any():
            for r in active[done]:
                T[r] += _closed_form_tail(Ps[r], logps[r], k)
            active = active[~done]
    for r in np.concatenate([active, stragglers]):
        T[r] = expected_time_fast(Ps[r]).t
    return T
