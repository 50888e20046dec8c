"""Diversity-multiplexing analysis and outage evaluation.

Conventions shared by every function here:

* multiplexing gain r lies in [0, 1]; diversity values are nonnegative
  floats with math.inf as the absorbing "decays faster than any power"
  marker (absorbing in sums, maximal in minima).
* rate arithmetic is base-2 with R in bits per channel use; diversity
  exponents themselves are base-free.
* the relay switch-slot distribution uses the earliest-decodable rule: the
  complement of the slot-m outage set has probability exp(-(2^(MR/m)-1)/rho')
  under unit-mean exponential |h|^2.

The finite-slot tradeoff is a minimum over the switch slot of (slot
probability exponent) + (conditional outage exponent).  Degenerate edges
follow the closed forms as written: the slot-M probability exponent at r = 0
is 1 for every M including M = 1, and the slot-1 exponent is 0 up to
r = 1/M, infinite beyond.
"""

import math
from dataclasses import dataclass

import numpy as np

from .channel import ChannelRealization, SystemParams

INF = math.inf


def _check_r(r: float) -> None:
    if not 0.0 <= r <= 1.0:
        raise ValueError("multiplexing gain must lie in [0, 1]")


def dmt_infinite(r: float) -> float:
    """Tradeoff of the protocol with unbounded slot granularity."""
    _check_r(r)
    if r <= 0.5:
        return 2.0 * (1.0 - r)
    return (1.0 - r) / r


def tx_div_bound(r: float) -> float:
    """Two-antenna transmit diversity upper bound 2(1-r)."""
    _check_r(r)
    return 2.0 * (1.0 - r)


def d_bar(m: int, r: float, M: int) -> float:
    """SNR exponent of P(switch slot = m) at multiplexing gain r."""
    _check_r(r)
    if not 1 <= m <= M:
        raise ValueError("m must be in 1..M")
    if m == M:
        edge = (M - 1) / M
        if r > edge:
            return 0.0
        if r == 0.0:
            return 1.0
        return 1.0 - M * r / (M - 1)
    if m == 1:
        return 0.0 if r <= 1.0 / M else INF
    lo = (m - 1) / M
    hi = m / M
    if r <= lo:
        return 1.0 - M * r / (m - 1)
    if r <= hi:
        return 0.0
    return INF


def d_m_exponent(m: int, r: float, M: int) -> float:
    """Outage exponent of the switch-slot-m parallel channel."""
    _check_r(r)
    if not 1 <= m <= M:
        raise ValueError("m must be in 1..M")
    if m < M / 2:
        return 2.0 - 2.0 * r
    if r >= 0.5:
        return M * (1.0 - r) / m
    if m < M * (1.0 - r):
        return 2.0 - r * M / (M - m)
    return M * (1.0 - r) / m


def dmt_finite(r: float, M: int) -> float:
    """Finite-slot tradeoff: min over the switch slot of both exponents."""
    if M < 1:
        raise ValueError("M must be >= 1")
    _check_r(r)
    return min(d_bar(m, r, M) + d_m_exponent(m, r, M) for m in range(1, M + 1))


def pareto_fractions(N: int) -> list[float]:
    """Pareto-optimal listening fractions for N allowed switch instants.

    f_1 = 1/2; for j >= 2 the forward recursion
        f_j = (1 - f_{j-1}) / (2 - (1 + 1/f_N) f_{j-1})
    depends on the last fraction, so f_N is found by bisection on the
    self-consistency residual (tolerance 1e-12).
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    if N == 1:
        return [0.5]

    def forward(f_last: float) -> list[float]:
        fs = [0.5]
        c = 1.0 + 1.0 / f_last
        for _ in range(N - 1):
            den = 2.0 - c * fs[-1]
            if den <= 0.0:
                return []
            fs.append((1.0 - fs[-1]) / den)
        return fs

    def residual(f_last: float) -> float:
        # a nonpositive denominator means the recursion ran off to +inf
        # before step N, so the residual is positive there: the candidate
        # f_last is still too small
        fs = forward(f_last)
        if not fs:
            return math.inf
        return fs[-1] - f_last

    lo, hi = 0.5 + 1e-12, 1.0 - 1e-12
    r_lo, r_hi = residual(lo), residual(hi)
    if not (r_lo > 0.0 > r_hi):
        raise RuntimeError("failed to bracket the fraction recursion root")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if residual(mid) > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12:
            break
    return forward(0.5 * (lo + hi))


def pareto_dmt(r: float, N: int) -> float:
    """Tradeoff achieved by the Pareto-optimal fraction set."""
    _check_r(r)
    f_last = pareto_fractions(N)[-1]
    return 1.0 - r + max(0.0, 1.0 - r / f_last)


def msc_mutual_info(ch: ChannelRealization, m: int, params: SystemParams) -> float:
    """Bits per block of the switch-slot-m parallel channel."""
    if not 1 <= m <= params.M:
        raise ValueError("m must be in 1..M")
    rho = params.rho
    c1 = math.log2(1.0 + abs(ch.g1) ** 2 * rho)
    c2 = math.log2(1.0 + (abs(ch.g1) ** 2 + abs(ch.g2) ** 2) * rho)
    return m * params.T * c1 + (params.M - m) * params.T * c2


def decision_time_pmf_closed(m: int, params: SystemParams) -> float:
    """Closed-form pmf of the earliest-decodable switch slot."""
    M = params.M
    if not 1 <= m <= M:
        raise ValueError("m must be in 1..M")

    def thr(j: int) -> float:
        return (2.0 ** (M * params.R / j) - 1.0) / params.rho_prime

    if m < M:
        second = math.exp(-thr(m - 1)) if m > 1 else 0.0
        return math.exp(-thr(m)) - second
    return 1.0 - sum(decision_time_pmf_closed(j, params) for j in range(1, M))


@dataclass(frozen=True)
class OutageResult:
    """Monte Carlo outage decomposition over the switch slot."""

    p_out: float
    trials: int
    pmf: np.ndarray  # empirical switch-slot pmf, length M
    p_out_given_m: np.ndarray  # conditional outage per slot (0 where unvisited)
    counts: np.ndarray  # per-slot trial counts
    outage_counts: np.ndarray  # per-slot outage counts


def outage_mc(
    params: SystemParams,
    trials: int,
    rng: np.random.Generator,
    rate: float | None = None,
) -> OutageResult:
    """Outage probability of the adaptive-switch protocol by Monte Carlo.

    Per draw: switch slot from the earliest-decodable rule on |h|^2, outage
    when the slot-m mutual information misses the block's bits.  rate
    overrides params.R (a zero rate gives zero outage).
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    R = params.R if rate is None else rate
    M, T = params.M, params.T
    rho, rho_p = params.rho, params.rho_prime

    h2 = rng.exponential(1.0, trials)
    g1 = rng.standard_normal(trials) ** 2 + rng.standard_normal(trials) ** 2
    g2 = rng.standard_normal(trials) ** 2 + rng.standard_normal(trials) ** 2
    g1 *= 0.5  # |CN(0,1)|^2 is exponential with unit mean
    g2 *= 0.5

    cap = np.log2(1.0 + h2 * rho_p)
    with np.errstate(divide="ignore", over="ignore"):
        need = np.where(cap > 0.0, M * R / np.maximum(cap, 1e-300), np.inf)
    m = np.minimum(np.maximum(np.ceil(need), 1.0), M).astype(np.int64)
    m[cap <= 0.0] = M

    c1 = np.log2(1.0 + g1 * rho)
    c2 = np.log2(1.0 + (g1 + g2) * rho)
    mi = m * T * c1 + (M - m) * T * c2
    out = mi < M * T * R

    counts = np.bincount(m - 1, minlength=M).astype(np.int64)
    outage_counts = np.bincount((m - 1)[out], minlength=M).astype(np.int64)
    with np.errstate(invalid="ignore"):
        cond = np.where(counts > 0, outage_counts / np.maximum(counts, 1), 0.0)
    return OutageResult(
        p_out=float(outage_counts.sum() / trials),
        trials=trials,
        pmf=counts / trials,
        p_out_given_m=cond,
        counts=counts,
        outage_counts=outage_counts,
    )


def dmt_curve_rows(
    m_list=(2, 5, 10, 20),
    n_list=(1, 2, 3),
    npoints: int = 101,
) -> list[tuple[float, float, int, str]]:
    """(r, d, parameter, variant) rows for CSV export of every curve family."""
    rows: list[tuple[float, float, int, str]] = []
    grid = np.linspace(0.0, 1.0, npoints)
    for r in grid:
        rows.append((float(r), dmt_infinite(float(r)), 0, "infinite"))
        rows.append((float(r), tx_div_bound(float(r)), 0, "tx-bound"))
    for M in m_list:
        for r in grid:
            rows.append((float(r), dmt_finite(float(r), M), M, "finite"))
    for N in n_list:
        for r in grid:
            rows.append((float(r), pareto_dmt(float(r), N), N, "pareto"))
    return rows
