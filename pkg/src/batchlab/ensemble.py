"""Expected learning-time behavior under the overlap law.

For tail exponent alpha = beta + 1 > 1 the ensemble expectation
E[T] exists and three routes compute it:

* ``expected_time_zeta_sum``      -- alternating binomial sum of zeta values
  (exact but loses ~n bits to cancellation; small-n oracle only),
* ``expected_time_moment_series`` -- sum over j of 1 - (1-m_j)**n with
  certified two-sided tail brackets (the production path),
* ``expected_time_integral``      -- the n**(1/alpha) limit integral
  (asymptotic regime only).

At alpha = 1 the expectation does not exist: T splits into a stable-law part
T1 = sum(1/(1-p_i) - 1) and a finite deterministic part T2 whose n*log(n)
growth cancels the center of T1.  ``alpha1_decomposition`` computes T2 and
extracts the c*n*log(n) component, c = lim j*m_j.

Extreme-value and concentration diagnostics round out the picture: the
smallest gap min(1 - p_i) scaled by n**(1/(1+beta)) has the limit CDF
G(x) = 1 - exp(-x**(1+beta)), and sum(1/(1-p_i)) obeys a regime-dependent
normalization (law of large numbers / log scaling / stable tightness).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence

import numpy as np
from scipy.integrate import quad
from scipy.special import gammaln

from . import calibration
from .batch_exact import expected_time_bulk, expected_time_fast
from .distributions import OverlapDistribution
from .errors import DivergenceError, PrecisionLossError
from .moment_zeta import zeta
from .rng import (STREAM_ENSEMBLE, STREAM_EXTREMES, derive_rng, map_chunks,
                  rows_chunk)

_J_START = 1024
_J_CAP = 1 << 26
_CONDITION_LIMIT = 1e6      # ulp-loss refusal threshold for the zeta sum

METHODS = ("zeta_sum", "moment_series", "integral_asymptotic", "monte_carlo")


@dataclass(frozen=True)
class EnsembleEstimate:
    """One expected-time estimate: value, method, and error bound if any."""

    n: int
    method: str
    value: float
    error_bound: Optional[float]


class ZetaSumTime(NamedTuple):
    value: float
    cancellation_ulps: float


class MomentSeriesTime(NamedTuple):
    value: float
    j_used: int
    error_bound: float


class Alpha1Decomposition(NamedTuple):
    t2: float
    c_log_term: float
    c: float
    error_bound: float


# ----------------------------------------------------------------------
# route 1: alternating binomial sum over zeta values
# ----------------------------------------------------------------------


def expected_time_zeta_sum(dist: OverlapDistribution, n: int,
                           zeta_eps: float = 1e-11) -> ZetaSumTime:
    """T = sum_{k=1}^n C(n,k) (-1)**(k-1) zeta_F(k), exactly-rounded fsum.

    Requires alpha > 1 so that zeta_F(1) exists, and n <= 30: the sum loses
    about n bits to cancellation.  Refuses (PrecisionLossError) when the
    estimated ulp loss sum|t_k| / |T| exceeds 1e6.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if n > 30:
        raise ValueError("zeta-sum route is limited to n <= 30; "
                         "use expected_time_moment_series")
    terms = []
    for k in range(1, n + 1):
        zk = zeta(dist, float(k), eps=zeta_eps).value
        terms.append(math.comb(n, k) * (zk if k % 2 == 1 else -zk))
    value = math.fsum(terms)
    gross = math.fsum(abs(t) for t in terms)
    condition = gross / abs(value) if value != 0.0 else math.inf
    if condition > _CONDITION_LIMIT:
        raise PrecisionLossError(
            f"alternating zeta sum at n = {n} loses ~{condition:.3g} ulps "
            f"(> {_CONDITION_LIMIT:g}); use expected_time_moment_series")
    return ZetaSumTime(value, condition)


# ----------------------------------------------------------------------
# route 2: moment series with certified truncation
# ----------------------------------------------------------------------


def expected_time_moment_series(dist: OverlapDistribution, n: int,
                                eps: float = 1e-6) -> MomentSeriesTime:
    """T = sum_{j>=1} [1 - (1-m_j)**n], absolute error at most eps.

    Terms use expm1/log1p forms.  The discarded tail is bracketed by
    n * sum m_j above and n * sum m_j - (n**2/2) * sum m_j**2 below, each
    sum bounded by certified integral comparison; the midpoint is added.
    Diverges (DivergenceError) for alpha <= 1, where sum n*m_j is infinite:
    use :func:`alpha1_decomposition` there.
    """
    if n < 1:
        raise ValueError("n must be >= 1")
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if dist.has_power_tail:
        alpha, c = dist.tail_parameters()
        if alpha <= 1.0:
            raise DivergenceError(
                f"E[T] does not exist for alpha = {alpha:g} <= 1; "
                "the series tail sum n*m_j diverges (see alpha1_decomposition)")
    else:
        alpha, c = None, None

    partial = 0.0
    j_done = 0
    target = _J_START
    m_last = None
    while True:
        js = np.arange(j_done + 1, target + 1, dtype=np.float64)
        m = dist.moments(js)
        with np.errstate(under="ignore"):
            partial += float((-np.expm1(n * np.log1p(-m))).sum())
        m_last = float(m[-1])
        j_done = target

        lo_t, hi_t = _series_tail_bracket(dist, alpha, c, n, j_done, m_last)
        err = 0.5 * (hi_t - lo_t)
        if err <= 0.5 * eps:
            return MomentSeriesTime(partial + 0.5 * (hi_t + lo_t), j_done, err)
        if j_done >= _J_CAP:
            raise PrecisionLossError(
                f"moment series truncation stalled at J = {j_done} "
                f"(tail bracket width {2 * err:g} > eps = {eps:g})")
        target = min(2 * j_done, _J_CAP)


def _series_tail_bracket(dist, alpha, c, n, j, m_j):
    """Certified [lower, upper] for sum_{i>j} [1 - (1-m_i)**n]."""
    if alpha is None:
        a = dist.a
        upper = n * a ** (j + 1) / (1.0 - a)
        return 0.0, float(upper)
    # sum_{i>j} m_i in [s_lo, s_hi]; sum m_i**2 <= q_hi
    s_hi = c * j ** (1.0 - alpha) / (alpha - 1.0)
    s_lo = (m_j * j ** alpha) * (j + 1.0) ** (1.0 - alpha) / (alpha - 1.0)
    q_hi = c ** 2 * j ** (1.0 - 2.0 * alpha) / (2.0 * alpha - 1.0)
    upper = n * s_hi
    lower = max(0.0, n * s_lo - 0.5 * n * n * q_hi)
    return float(min(lower, upper)), float(upper)


# ----------------------------------------------------------------------
# alpha = 1: the T2 part and the c n log n term
# ----------------------------------------------------------------------


def alpha1_decomposition(dist: OverlapDistribution, n: int,
                         eps: Optional[float] = None) -> Alpha1Decomposition:
    """T2 = -sum_j [(1-m_j)**n - 1 + n m_j], finite at alpha = 1, plus the
    extracted c*n*log(n) component with c = lim j*m_j (Richardson).

    T2 grows like -(n log n - const*n); the positive series terms are summed
    with a certified bracket on the discarded tail.  ``eps`` is the absolute
    truncation error (default: 1e-9 relative to the running sum; note the
    tail shrinks like n**2/J, so tight absolute targets at large n are
    expensive; the default is 1e-8 relative).  Requires n >= 2 and a tail
    exponent of exactly 1.
    """
    if n < 2:
        raise ValueError("n must be >= 2 for the alpha = 1 split")
    if not dist.has_power_tail:
        raise ValueError("alpha = 1 split needs a power-tail family")
    alpha, c_tail = dist.tail_parameters()
    if abs(alpha - 1.0) > 1e-12:
        raise ValueError(f"alpha = 1 split is only valid at alpha = 1, got {alpha:g}")

    partial = 0.0
    j_done = 0
    target = _J_START
    m_last = None
    while True:
        js = np.arange(j_done + 1, target + 1, dtype=np.float64)
        m = dist.moments(js)
        with np.errstate(under="ignore"):
            partial += float((np.expm1(n * np.log1p(-m)) + n * m).sum())
        m_last = float(m[-1])
        j_done = target

        if n * m_last <= 0.5:
            lo_t, hi_t = _alpha1_tail_bracket(c_tail, n, j_done, m_last)
            err = 0.5 * (hi_t - lo_t)
            goal = eps if eps is not None else 1e-8 * max(1.0, abs(partial))
            if err <= 0.5 * goal:
                partial += 0.5 * (hi_t + lo_t)
                break
        if j_done >= _J_CAP:
            raise PrecisionLossError(
                f"alpha=1 series truncation stalled at J = {j_done}")
        target = min(2 * j_done, _J_CAP)

    c = _tail_constant_richardson(dist)
    return Alpha1Decomposition(t2=-partial,
                               c_log_term=c * n * math.log(n),
                               c=c,
                               error_bound=err)


def _alpha1_tail_bracket(c, n, j, m_j):
    """[lower, upper] for sum_{i>j} [(1-m_i)**n - 1 + n m_i], n*m_j <= 1/2.

    Each term lies between C(n,2) m**2 - C(n,3) m**3 and C(n,2) m**2.
    """
    pairs = 0.5 * n * (n - 1)
    triples = n * (n - 1) * (n - 2) / 6.0
    q_hi = c ** 2 / j                            # sum_{i>j} m_i**2 upper
    q_lo = (m_j * j) ** 2 / (j + 1.0)            # ... lower
    r_hi = c ** 3 / (2.0 * j ** 2)               # sum m_i**3 upper
    upper = pairs * q_hi
    lower = max(0.0, pairs * q_lo - triples * r_hi)
    return float(min(lower, upper)), float(upper)


def _tail_constant_richardson(dist) -> float:
    """c = lim j*m_j via two-level Richardson at j = 1000, 2000, 4000."""
    js = np.asarray([1000.0, 2000.0, 4000.0])
    f = js * dist.moments(js)
    r1 = 2.0 * f[1] - f[0]
    r2 = 2.0 * f[2] - f[1]
    return float((4.0 * r2 - r1) / 3.0)


# ----------------------------------------------------------------------
# route 3: the limit integral
# ----------------------------------------------------------------------


def expected_time_integral(dist: OverlapDistribution, n: int) -> float:
    """T ~ n**(1/alpha) * integral_0^inf (1 - exp(-c u**alpha)) / u**2 du.

    The integral is evaluated by quadrature in the integrated-by-parts form
    c*alpha * u**(alpha-2) * exp(-c u**alpha), whose endpoint singularity at
    0 (for alpha < 2) is handled by a weighted rule.  Asymptotic: agrees
    with the moment series to ~5% only once n is large (>= ~1e4).
    """
    if not dist.has_power_tail:
        raise DivergenceError("limit integral requires a power-tail family")
    alpha, c = dist.tail_parameters()
    if alpha <= 1.0:
        raise DivergenceError(f"limit integral diverges for alpha = {alpha:g} <= 1")
    if n < 1:
        raise ValueError("n must be >= 1")

    def by_parts(u):
        return c * alpha * math.exp(-c * u ** alpha)

    if alpha < 2.0:
        head, _ = quad(by_parts, 0.0, 1.0, weight="alg",
                       wvar=(alpha - 2.0, 0.0), epsabs=1e-13, epsrel=1e-11)
    else:
        head, _ = quad(lambda u: by_parts(u) * u ** (alpha - 2.0), 0.0, 1.0,
                       epsabs=1e-13, epsrel=1e-11)
    tail, _ = quad(lambda u: by_parts(u) * u ** (alpha - 2.0), 1.0, np.inf,
                   epsabs=1e-13, epsrel=1e-11)
    return n ** (1.0 / alpha) * (head + tail)


def limit_integral_closed_form(dist: OverlapDistribution) -> float:
    """Independent closed form of the limit integral: c**(1/alpha)*Gamma(1-1/alpha)."""
    alpha, c = dist.tail_parameters()
    if alpha <= 1.0:
        raise DivergenceError("closed form requires alpha > 1")
    return c ** (1.0 / alpha) * math.exp(gammaln(1.0 - 1.0 / alpha))


# ----------------------------------------------------------------------
# concentration of S = sum 1/(1-p_i)
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ConcentrationSummary:
    """Empirical law of the regime-normalized statistic of S = sum 1/(1-p_i)."""

    n: int
    trials: int
    regime: str                 # "lln" (beta>0) | "log" (beta=0) | "stable" (beta<0)
    normalizer: str
    median: float
    iqr: float
    q05: float
    q95: float
    target: Optional[float]


def sum_inverse_gap_concentration(dist: OverlapDistribution, n: int,
                                  trials: int, seed: int,
                                  threads: int = 1) -> ConcentrationSummary:
    """Sample S = sum_i 1/(1-p_i) and normalize per the stable-law regime.

    beta > 0: S/n -> mean of 1/(1-p) (law of large numbers);
    beta = 0: S/(n log n) -> 1;
    beta < 0: S/n**(1/(1+beta)) is tight with no point limit.
    """
    if n < 1 or trials < 1:
        raise ValueError("n and trials must be >= 1")
    alpha, _ = dist.tail_parameters()
    beta = alpha - 1.0

    def chunk(i, lo, hi):
        rng = derive_rng(seed, STREAM_ENSEMBLE, 1, i)
        P = dist.sample((hi - lo) * n, rng).reshape(hi - lo, n)
        return (1.0 / (1.0 - P)).sum(axis=1)

    s = np.concatenate(map_chunks(chunk, trials, threads=threads,
                                  chunk_size=rows_chunk(n)))
    if beta > 0.0:
        stat, normalizer = s / n, "n"
        target = _mean_inverse_gap(dist)
        regime = "lln"
    elif beta == 0.0:
        stat, normalizer = s / (n * math.log(n)), "n*log(n)"
        target, regime = 1.0, "log"
    else:
        rate = n ** (1.0 / (beta + 1.0))
        stat, normalizer = s / rate, f"n**{1.0 / (beta + 1.0):g}"
        target, regime = None, "stable"
    q05, q25, med, q75, q95 = np.quantile(stat, [0.05, 0.25, 0.5, 0.75, 0.95])
    return ConcentrationSummary(n=n, trials=trials, regime=regime,
                                normalizer=normalizer, median=float(med),
                                iqr=float(q75 - q25), q05=float(q05),
                                q95=float(q95), target=target)


def _mean_inverse_gap(dist) -> float:
    """E[1/(1-p)]; finite exactly when beta > 0 (or the support stops short of 1)."""
    if dist.family == "powertail":
        return (1.0 + dist.beta) / dist.beta
    val, _ = quad(lambda x: dist.density(x) / (1.0 - x), 0.0,
                  dist.support_upper, limit=200)
    return val


# ----------------------------------------------------------------------
# extreme values of the minimum gap
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class ExtremeValueReport:
    """Mean minimum gap across an n sweep, its scaling fit, and KS distance.

    ``fitted_slope`` estimates -1/(1+beta) from log E[min q] on log n;
    ``fitted_C`` is exp(intercept).  ``ks_distance`` compares the empirical
    law of n**(1/(1+beta)) * min q at the largest n against the limit CDF
    G(x) = 1 - exp(-x**(1+beta)).
    """

    n_values: tuple
    mean_min_q: tuple
    stderr: tuple
    fitted_C: float
    fitted_slope: float
    ks_distance: float
    ks_n: int
    trials: int


def extreme_value(dist: OverlapDistribution, n_values: Sequence[int],
                  trials: int, seed: int, threads: int = 1) -> ExtremeValueReport:
    """Monte Carlo extremes of q_min = min_i (1 - p_i) across an n sweep."""
    if not n_values:
        raise ValueError("need at least one n value")
    if trials < 2:
        raise ValueError("trials must be >= 2")
    alpha, c_tail = dist.tail_parameters()
    beta = alpha - 1.0
    # density constant of f(1-x) ~ c0 * x**beta; for these families
    # c0/(beta+1) = 1, kept general for clarity
    c0 = c_tail / math.exp(gammaln(beta + 1.0))
    scale_const = (c0 / (beta + 1.0)) ** (1.0 / (beta + 1.0))

    n_values = [int(v) for v in n_values]
    means, errs = [], []
    ks_n = max(n_values)
    ks_sample = None
    for j, n in enumerate(n_values):
        def chunk(i, lo, hi, n=n, j=j):
            rng = derive_rng(seed, STREAM_EXTREMES, j, i)
            P = dist.sample((hi - lo) * n, rng).reshape(hi - lo, n)
            return (1.0 - P).min(axis=1)
        qmin = np.concatenate(map_chunks(chunk, trials, threads=threads,
                                         chunk_size=rows_chunk(n)))
        means.append(float(qmin.mean()))
        errs.append(float(qmin.std(ddof=1) / math.sqrt(qmin.size)))
        if n == ks_n:
            ks_sample = qmin

    scaled = np.sort(ks_sample * ks_n ** (1.0 / (beta + 1.0)) * scale_const)
    g = -np.expm1(-scaled ** (beta + 1.0))
    grid = np.arange(1, scaled.size + 1) / scaled.size
    ks = float(max((grid - g).max(), (g - (grid - 1.0 / scaled.size)).max()))

    if len(n_values) >= 2:
        slope, intercept = np.polyfit(np.log(n_values), np.log(means), 1)
        fitted_c = float(math.exp(intercept))
    else:
        slope, fitted_c = math.nan, math.nan
    return ExtremeValueReport(n_values=tuple(n_values), mean_min_q=tuple(means),
                              stderr=tuple(errs), fitted_C=fitted_c,
                              fitted_slope=float(slope), ks_distance=ks,
                              ks_n=ks_n, trials=trials)


# ----------------------------------------------------------------------
# order-of-magnitude sandwich of the regime windows
# ----------------------------------------------------------------------


@dataclass(frozen=True)
class RegimeWindowReport:
    """Per-sample expected times against the frozen regime window.

    The window is [C1 * n**(1/(1+beta)), C2 * n] for beta > 0,
    [C1 * n, C2 * n log n] for beta = 0, and
    [rate / C, C * rate] with rate = n**(1/(1+beta)) for beta < 0,
    checked on the word count T + 1.  This is the only quantitative handle
    for beta <= -1/2, where the series analysis stops.
    """

    n: int
    trials: int
    beta: float
    regime: str
    fraction_within: float
    window_low: float
    window_high: float
    c1_empirical: float
    c2_empirical: float
    q005: float
    q995: float
    median_t: float


def regime_window_check(dist: OverlapDistribution, n: int, trials: int,
                        seed: int, threads: int = 1) -> RegimeWindowReport:
    """Sample p-vectors, compute per-sample expected word counts, and report
    how they sit inside the frozen order-of-magnitude window."""
    if n < 2 or trials < 1:
        raise ValueError("n must be >= 2 and trials >= 1")
    alpha, _ = dist.tail_parameters()
    beta = alpha - 1.0

    def chunk(i, lo, hi):
        rng = derive_rng(seed, STREAM_ENSEMBLE, 2, i)
        P = dist.sample((hi - lo) * n, rng).reshape(hi - lo, n)
        if beta < 0.0:
            return np.asarray([expected_time_fast(row).steps_expectation
                               for row in P])
        return expected_time_bulk(P) + 1.0

    t = np.concatenate(map_chunks(chunk, trials, threads=threads,
                                  chunk_size=rows_chunk(n)))
    rate = n ** (1.0 / (1.0 + beta))
    if beta > 0.0:
        c1, c2 = calibration.POSITIVE_BETA_WINDOW
        low, high = c1 * rate, c2 * n
        c1_emp, c2_emp = float((t / rate).min()), float((t / n).max())
        regime = "sublinear"
    elif beta == 0.0:
        c1, c2 = calibration.ZERO_BETA_WINDOW
        low, high = c1 * n, c2 * n * math.log(n)
        c1_emp = float((t / n).min())
        c2_emp = float((t / (n * math.log(n))).max())
        regime = "linear-log"
    else:
        c = calibration.NEGATIVE_BETA_WINDOW
        low, high = rate / c, c * rate
        ratio = t / rate
        c1_emp, c2_emp = float(ratio.min()), float(ratio.max())
        regime = "tight" if beta > -0.5 else "tight-outside-analyzed-regime"
    within = float(((t >= low) & (t <= high)).mean())
    q005, med, q995 = np.quantile(t, [0.005, 0.5, 0.995])
    return RegimeWindowReport(n=n, trials=trials, beta=beta, regime=regime,
                        fraction_within=within, window_low=float(low),
                        window_high=float(high), c1_empirical=c1_emp,
                        c2_empirical=c2_emp, q005=float(q005),
                        q995=float(q995), median_t=float(med))


# ----------------------------------------------------------------------
# method dispatcher (CLI surface)
# ----------------------------------------------------------------------


def ensemble_estimate(dist: OverlapDistribution, n: int, method: str,
                      trials: int = 2000, seed: int = 0,
                      threads: int = 1, eps: float = 1e-6) -> EnsembleEstimate:
    """Evaluate one expected-time estimate by the named method.

    ``monte_carlo`` reports the median simulated learning time (the robust
    statistic that remains meaningful when alpha <= 1 and E[T] does not
    exist); the other methods require alpha > 1.
    """
    if method == "zeta_sum":
        r = expected_time_zeta_sum(dist, n)
        return EnsembleEstimate(n, method, r.value, None)
    if method == "moment_series":
        r = expected_time_moment_series(dist, n, eps=eps)
        return EnsembleEstimate(n, method, r.value, r.error_bound)
    if method == "integral_asymptotic":
        return EnsembleEstimate(n, method, expected_time_integral(dist, n), None)
    if method == "monte_carlo":
        from .simulators import run_trials
        times = run_trials("batch", dist, n, trials, seed, threads=threads).times
        value = float(np.median(times))
        lo = max(trials // 2 - int(1.96 * math.sqrt(trials) / 2) - 1, 0)
        hi = min(trials // 2 + int(1.96 * math.sqrt(trials) / 2), trials - 1)
        srt = np.sort(times)
        return EnsembleEstimate(n, method, value,
                                float(0.5 * (srt[hi] - srt[lo])))
    raise ValueError(f"unknown method {method!r}; pick one of {METHODS}")
