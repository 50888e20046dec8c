"""Quasi-static half-duplex relay channel at finite block length.

A codeword spans M slots of T complex symbols.  The relay listens for the
first m slots and may transmit from slot m+1 on; the three fading gains
(source->relay h, source->destination g1, relay->destination g2) are i.i.d.
CN(0,1) and fixed for the whole block.  Noise is CN(0, sigma_v^2) at the
relay and CN(0, sigma_w^2) at the destination.

Normalization: sigma_w^2 = 1 and the per-symbol energy E equals the linear
destination SNR rho.  The relay link SNR rho' = E / sigma_v^2 sits a fixed
dB offset above rho, so sigma_v^2 = 10^(-offset/10) independent of rho.

The relay's transmit signal is the orthogonal pair mapping

    x_r[p]   =  conj(x_s[p+1])
    x_r[p+1] = -conj(x_s[p])

over consecutive phase-2 pairs p = mT, mT+2, ... (0-based).  When the
phase-2 length is odd the final symbol is source-only and the relay stays
silent on it.  Pairwise combining at the destination turns phase 2 into a
single-input channel with real gain sqrt(|g1|^2 + |g2|^2) and per-symbol
noise variance still sigma_w^2.
"""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SystemParams:
    """Block geometry, target rate (bits per channel use) and link SNRs."""

    M: int
    T: int
    R: float
    rho_db: float
    rho_prime_offset_db: float = 3.0
    seed: int = 0

    def __post_init__(self):
        if self.M < 1:
            raise ValueError("M must be >= 1")
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.R <= 0:
            raise ValueError("R must be > 0")

    @property
    def rho(self) -> float:
        return 10.0 ** (self.rho_db / 10.0)

    @property
    def rho_prime(self) -> float:
        return 10.0 ** ((self.rho_db + self.rho_prime_offset_db) / 10.0)

    @property
    def energy(self) -> float:
        # per-symbol energy; sigma_w^2 = 1 makes E = rho
        return self.rho

    @property
    def sigma_w2(self) -> float:
        return 1.0

    @property
    def sigma_v2(self) -> float:
        return 10.0 ** (-self.rho_prime_offset_db / 10.0)

    @property
    def block_len(self) -> int:
        return self.M * self.T

    @property
    def bits_per_block(self) -> float:
        return self.M * self.T * self.R


@dataclass(frozen=True)
class ChannelRealization:
    h: complex
    g1: complex
    g2: complex
    sigma_v2: float
    sigma_w2: float


def draw_channel(params: SystemParams, rng: np.random.Generator) -> ChannelRealization:
    """One block's fading state: three i.i.d. CN(0,1) gains."""
    re = rng.standard_normal(3)
    im = rng.standard_normal(3)
    g = (re + 1j * im) * np.sqrt(0.5)
    return ChannelRealization(
        h=complex(g[0]),
        g1=complex(g[1]),
        g2=complex(g[2]),
        sigma_v2=params.sigma_v2,
        sigma_w2=params.sigma_w2,
    )


def _cn_noise(n: int, var: float, rng: np.random.Generator) -> np.ndarray:
    re = rng.standard_normal(n)
    im = rng.standard_normal(n)
    return (re + 1j * im) * np.sqrt(var / 2.0)


def relay_receive(
    x_s: np.ndarray, m: int, T: int, ch: ChannelRealization, rng: np.random.Generator
) -> np.ndarray:
    """Relay observation over the first m slots: y = h x + v."""
    if m < 1:
        raise ValueError("m must be >= 1")
    k = m * T
    if k > x_s.shape[0]:
        raise ValueError("m*T exceeds the block length")
    v = _cn_noise(k, ch.sigma_v2, rng)
    return ch.h * x_s[:k] + v


def alamouti_relay_signal(x_s_hat: np.ndarray, m: int, T: int) -> np.ndarray:
    """Relay transmit block built from its message estimate's codeword.

    Zero during the listening phase (first m*T symbols) and on a trailing
    unpaired symbol when the phase-2 length is odd.
    """
    n = x_s_hat.shape[0]
    start = m * T
    if start > n:
        raise ValueError("m*T exceeds the block length")
    x_r = np.zeros(n, dtype=np.complex128)
    p = start
    while p + 1 < n:
        x_r[p] = np.conj(x_s_hat[p + 1])
        x_r[p + 1] = -np.conj(x_s_hat[p])
        p += 2
    return x_r


def destination_receive(
    x_s: np.ndarray,
    x_r: np.ndarray,
    m: int,
    T: int,
    ch: ChannelRealization,
    rng: np.random.Generator,
) -> np.ndarray:
    """Full-block destination observation y = g1 x_s + g2 x_r + w."""
    n = x_s.shape[0]
    if x_r.shape[0] != n:
        raise ValueError("x_s and x_r must have equal length")
    if np.any(x_r[: m * T] != 0):
        raise ValueError("relay signal must be zero during its listening phase")
    w = _cn_noise(n, ch.sigma_w2, rng)
    return ch.g1 * x_s + ch.g2 * x_r + w


def alamouti_combine(
    y: np.ndarray, m: int, T: int, ch: ChannelRealization
) -> np.ndarray:
    """Pairwise combining of the phase-2 observation.

    Phase-1 symbols and an unpaired trailing symbol pass through unchanged
    (model g1 x + w); each combined pair obeys
    y~ = sqrt(|g1|^2+|g2|^2) x + w~ with the same per-symbol noise variance.
    """
    n = y.shape[0]
    start = m * T
    if start > n:
        raise ValueError("m*T exceeds the block length")
    out = y.astype(np.complex128, copy=True)
    g1 = ch.g1
    g2 = ch.g2
    gamma = np.sqrt(abs(g1) ** 2 + abs(g2) ** 2)
    if gamma == 0.0:
        return out
    p = start
    while p + 1 < n:
        a = y[p]
        b = y[p + 1]
        out[p] = (np.conj(g1) * a - g2 * np.conj(b)) / gamma
        out[p + 1] = (g2 * np.conj(a) + np.conj(g1) * b) / gamma
        p += 2
    return out


def combined_gain_vector(
    m: int, ch: ChannelRealization, params: SystemParams
) -> np.ndarray:
    """Per-symbol complex gains of the combined single-input model.

    g1 during phase 1 and on an unpaired trailing symbol, the real gain
    sqrt(|g1|^2+|g2|^2) on combined pairs.
    """
    n = params.block_len
    start = m * params.T
    gains = np.full(n, ch.g1, dtype=np.complex128)
    gamma = np.sqrt(abs(ch.g1) ** 2 + abs(ch.g2) ** 2)
    p = start
    while p + 1 < n:
        gains[p] = gamma
        gains[p + 1] = gamma
        p += 2
    return gains
