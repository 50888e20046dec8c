"""Relay-side decision logic: when to stop listening and what to forward.

Decision slot rules (all return a slot in 1..M, M meaning "stay silent"):

* earliest_decodable: first slot m where the accumulated mutual information
  of the source->relay link covers the block's bits, ceil(M R / log2(1 +
  |h|^2 rho')), clamped to M.
* one-slot-later and at-least-half variants layered on top of it.
* residual-likelihood loop: starting at the earliest decodable slot, decode
  the prefix and accept only when the winner's likelihood dominates the sum
  of all rivals by a threshold tau; otherwise wait one more slot.  Rejection
  at slot M means silence (transmitting in the final slot cannot help).
* bounded-distance loop: accept at the first slot where the link is not in
  relay outage and exactly one codeword lies within squared radius
  m T (1 + delta) sigma_v^2 of the prefix.

The relay outage set at slot m is {|h|^2 <= (2^(MR/m) - 1) / rho'}, a closed
set; its complement is exactly {earliest decodable slot <= m} except on the
measure-zero boundary.

Likelihood ratios are computed in log domain with a stable log-sum-exp over
the rival terms; per complex symbol the relay noise has variance sigma_v^2.
The truncated variant for coset codebooks sums candidate likelihoods by
coset: candidates whose coset equals the winner's feed the numerator, all
others the denominator, and an empty denominator after truncation counts as
acceptance with a recorded truncation event.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .channel import SystemParams
from .lattice import SPHERE_CAP_DEFAULT, CosetCodebook
from .lattice_decoder import decode_coset

# half-decade steps, 1e-3 .. 1e9; ascending so calibration picks the smallest
TAU_GRID_DEFAULT = tuple(10.0 ** (0.5 * k) for k in range(-6, 19))


@dataclass(frozen=True)
class ForneyConfig:
    """Acceptance threshold and list truncation for the residual test."""

    tau: float
    list_size: int = 64

    def __post_init__(self):
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        if self.list_size < 1:
            raise ValueError("list_size must be >= 1")

    @property
    def log_tau(self) -> float:
        return math.log(self.tau) if self.tau > 0 else -math.inf


@dataclass(frozen=True)
class RelayDecision:
    """Outcome of the listening phase.

    message is None when the relay stays silent through slot M; a present
    message always comes with m < M (no transmission can start at M).
    """

    m: int
    message: int | None
    failures: int = 0
    truncations: int = 0

    @property
    def silent(self) -> bool:
        return self.message is None


def phi1(h: complex, params: SystemParams) -> int:
    """Earliest slot whose accumulated link capacity covers the block."""
    cap = math.log2(1.0 + abs(h) ** 2 * params.rho_prime)
    if cap <= 0.0:
        return params.M
    need = params.M * params.R / cap
    return min(params.M, max(1, math.ceil(need)))


def phi2(h: complex, params: SystemParams) -> int:
    """One slot later than phi1, clamped at M."""
    return min(params.M, phi1(h, params) + 1)


def phi3(h: complex, params: SystemParams) -> int:
    """phi1 pushed to at least half the block (ceil for odd M)."""
    return min(params.M, max(math.ceil(params.M / 2), phi1(h, params)))


def relay_outage(h: complex, m: int, params: SystemParams) -> bool:
    """Closed outage set of the source->relay link at slot m."""
    if not 1 <= m <= params.M:
        raise ValueError("m must be in 1..M")
    return abs(h) ** 2 * params.rho_prime <= 2.0 ** (params.M * params.R / m) - 1.0


def noise_tail_bound(n_symbols: int, delta: float) -> float:
    """Chernoff bound on P(|v|^2 > n (1+delta) sigma_v^2) for CN noise."""
    return ((1.0 + delta) * math.exp(-delta)) ** n_symbols


def bounded_distance_delta(params: SystemParams, mu: float | None = None) -> float:
    """Radius slack delta = mu ln(1 + rho); default mu = 3/T keeps mu T > 2."""
    if mu is None:
        mu = 3.0 / params.T
    return mu * math.log1p(params.rho)


@dataclass(frozen=True)
class SlotDecision:
    """One decode-and-test attempt on a listening prefix."""

    message: int
    log_ratio: float
    failed: bool = False
    truncated: bool = False


def codeword_distances(y: np.ndarray, h: complex, points: np.ndarray) -> np.ndarray:
    """|y - h x(w)|^2 for every codeword, on the observed prefix."""
    k = y.shape[0]
    gains = np.full(k, h, np.complex128)
    X = points[:, :k]
    return kernels.codebook_dists(
        np.ascontiguousarray(y.real),
        np.ascontiguousarray(y.imag),
        np.ascontiguousarray(gains.real),
        np.ascontiguousarray(gains.imag),
        np.ascontiguousarray(X.real),
        np.ascontiguousarray(X.imag),
    )


def forney_log_ratio(dists: np.ndarray, best: int, sigma_v2: float) -> float:
    """log p(y|best) - log sum of rival likelihoods, Gaussian per-symbol
    variance sigma_v2.  +inf when there is no rival."""
    return float(kernels.forney_log_ratio(dists, best, 1.0 / sigma_v2))


def forney_accept(
    y_prefix: np.ndarray,
    h: complex,
    points: np.ndarray,
    w_hat: int,
    cfg: ForneyConfig,
    sigma_v2: float,
) -> bool:
    """Residual-likelihood test for an exhaustive codebook."""
    d = codeword_distances(y_prefix, h, points)
    return forney_log_ratio(d, w_hat, sigma_v2) >= cfg.log_tau


def modified_forney_log_ratio(
    cand_messages: np.ndarray,
    cand_dists: np.ndarray,
    w_hat: int,
    sigma_v2: float,
) -> tuple[float, bool]:
    """Coset-sum likelihood ratio truncated to the candidate list.

    Real-domain distances with i.i.d. real noise components of variance
    sigma_v2/2 give per-candidate log-likelihood -d/sigma_v2.  Returns
    (log ratio, truncated) where truncated marks an empty denominator.
    """
    logs = -np.asarray(cand_dists, float) / sigma_v2
    own = cand_messages == w_hat
    num = logs[own]
    den = logs[~own]
    if den.size == 0:
        return math.inf, True
    # stable log-sum-exp for both coset sums
    def lse(v):
        mx = np.max(v)
        return mx + math.log(np.sum(np.exp(v - mx)))

    return float(lse(num) - lse(den)), False


class ExhaustiveRelayDecoder:
    """ML over an enumerated codebook plus the exact residual test."""

    def __init__(self, points: np.ndarray, sigma_v2: float):
        self.points = points
        self.sigma_v2 = sigma_v2

    def decide(self, y_prefix: np.ndarray, h: complex, m: int) -> SlotDecision:
        d = codeword_distances(y_prefix, h, self.points)
        best = int(np.argmin(d))
        ratio = forney_log_ratio(d, best, self.sigma_v2)
        return SlotDecision(message=best, log_ratio=ratio)


class LatticeRelayDecoder:
    """Ridge-preprocessed sphere decoding with the truncated coset test.

    The search-domain candidate distances feed the likelihood ratio, per the
    white-residual approximation of the preprocessed model.
    """

    def __init__(
        self,
        codebook: CosetCodebook,
        dither: np.ndarray,
        sigma_v2: float,
        snr: float,
        list_size: int = 64,
        cap: int = SPHERE_CAP_DEFAULT,
    ):
        self.codebook = codebook
        self.dither = dither
        self.sigma_v2 = sigma_v2
        self.snr = snr
        self.list_size = list_size
        self.cap = cap

    def decide(self, y_prefix: np.ndarray, h: complex, m: int) -> SlotDecision:
        gains = np.full(y_prefix.shape[0], h, np.complex128)
        res = decode_coset(
            y_prefix,
            gains,
            self.codebook,
            self.snr,
            self.dither,
            nwant=self.list_size,
            cap=self.cap,
        )
        ratio, truncated = modified_forney_log_ratio(
            res.cand_messages, res.cand_dists, res.message, self.sigma_v2
        )
        return SlotDecision(
            message=res.message,
            log_ratio=ratio,
            failed=not res.complete,
            truncated=truncated,
        )


def phiF_run(
    h: complex,
    y_r: np.ndarray,
    params: SystemParams,
    cfg: ForneyConfig,
    decoder,
) -> RelayDecision:
    """Decode-and-test loop from the earliest decodable slot.

    y_r is the relay observation over at least M-1 slots; only prefixes up
    to slot M-1 are consumed.  Decoder failures count as rejection.
    """
    M, T = params.M, params.T
    start = phi1(h, params)
    failures = 0
    truncations = 0
    for m in range(start, M):
        slot = decoder.decide(y_r[: m * T], h, m)
        failures += int(slot.failed)
        truncations += int(slot.truncated)
        if not slot.failed and slot.log_ratio >= cfg.log_tau:
            return RelayDecision(m=m, message=slot.message, failures=failures, truncations=truncations)
    return RelayDecision(m=M, message=None, failures=failures, truncations=truncations)


def fixed_rule_run(
    slot: int,
    h: complex,
    y_r: np.ndarray,
    params: SystemParams,
    decoder,
) -> RelayDecision:
    """Decode once at a precomputed slot; slot M means stay silent."""
    M, T = params.M, params.T
    if not 1 <= slot <= M:
        raise ValueError("slot must be in 1..M")
    if slot == M:
        return RelayDecision(m=M, message=None)
    d = decoder.decide(y_r[: slot * T], h, slot)
    if d.failed:
        return RelayDecision(m=M, message=None, failures=1, truncations=int(d.truncated))
    return RelayDecision(m=slot, message=d.message, truncations=int(d.truncated))


def bounded_distance_decide(
    y_prefix: np.ndarray,
    h: complex,
    points: np.ndarray,
    m: int,
    delta: float,
    sigma_v2: float,
    params: SystemParams,
) -> int | None:
    """Accept iff the link is out of relay outage and exactly one codeword
    sits inside squared radius m T (1+delta) sigma_v^2 of the prefix."""
    if delta <= 0:
        raise ValueError("delta must be > 0")
    if relay_outage(h, m, params):
        return None
    radius = y_prefix.shape[0] * (1.0 + delta) * sigma_v2
    d = codeword_distances(y_prefix, h, points)
    inside = np.flatnonzero(d <= radius)
    if inside.shape[0] == 1:
        return int(inside[0])
    return None


def bounded_distance_run(
    h: complex,
    y_r: np.ndarray,
    params: SystemParams,
    points: np.ndarray,
    delta: float,
    sigma_v2: float,
) -> RelayDecision:
    """First slot (before M) where the bounded-distance test accepts."""
    M, T = params.M, params.T
    for m in range(phi1(h, params), M):
        w = bounded_distance_decide(y_r[: m * T], h, points, m, delta, sigma_v2, params)
        if w is not None:
            return RelayDecision(m=m, message=w)
    return RelayDecision(m=M, message=None)
