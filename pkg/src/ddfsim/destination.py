"""Destination-side decoders.

Four strategies over the full-block observation y:

* genie-informed ML: the true relay switch slot is known, the pairwise
  combining turns the block into a scalar-gain channel, exhaustive ML picks
  the message.
* joint decoding of (message, switch slot): argmax of the Gaussian
  likelihood over the full hypothesis grid, ties to the smaller slot then
  the smaller message index.  The slot-M hypothesis has a silent relay.
* per-hypothesis lattice decoding: for each slot hypothesis, combine and run
  the preprocessed sphere search, then rank the per-slot winners by exact
  raw-domain likelihood.  Coincides with the joint rule whenever each
  per-slot decode is the exact constrained ML for that slot.
* activity detection then ML: estimate the switch slot from per-segment
  energy statistics alone (codebook-blind), then decode as if the estimate
  were exact.  Finite block length leaves this detector an SNR-independent
  error floor; the closed-form pairwise error here quantifies it via the
  regularized lower incomplete gamma.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .channel import (
    ChannelRealization,
    SystemParams,
    alamouti_combine,
    alamouti_relay_signal,
    combined_gain_vector,
)
from .lattice import SPHERE_CAP_DEFAULT, CosetCodebook, QamCodebook
from .lattice_decoder import decode_coset, decode_qam
from .special import gammainc_lower


@dataclass(frozen=True)
class DecodeResult:
    message: int
    m_hat: int
    log_likelihood: float
    failures: int = 0


def build_glrt_tables(points: np.ndarray, M: int, T: int):
    """Codeword and relay-signal tables for the joint scan.

    Returns (Xr, Xi, Ar, Ai): real/imag codeword tables of shape (nc, n) and
    relay tables of shape (M, nc, n) where slice m-1 holds the relay signal
    under switch-slot hypothesis m (the m = M slice is zero: silent relay).
    """
    nc, n = points.shape
    A = np.zeros((M, nc, n), np.complex128)
    for m in range(1, M):
        p = m * T
        while p + 1 < n:
            A[m - 1, :, p] = np.conj(points[:, p + 1])
            A[m - 1, :, p + 1] = -np.conj(points[:, p])
            p += 2
    return (
        np.ascontiguousarray(points.real),
        np.ascontiguousarray(points.imag),
        np.ascontiguousarray(A.real),
        np.ascontiguousarray(A.imag),
    )


def likelihood(
    y: np.ndarray,
    w: int,
    m: int,
    ch: ChannelRealization,
    params: SystemParams,
    points: np.ndarray,
) -> float:
    """Gaussian log-likelihood of hypothesis (message w, switch slot m), up
    to an additive constant shared by every hypothesis."""
    x = points[w]
    x_r = alamouti_relay_signal(x, m, params.T)
    r = y - (ch.g1 * x + ch.g2 * x_r)
    return -float(np.sum(r.real**2 + r.imag**2)) / ch.sigma_w2


def glrt_decode(
    y: np.ndarray,
    ch: ChannelRealization,
    params: SystemParams,
    tables,
) -> DecodeResult:
    """Joint (message, slot) argmax over prebuilt tables from
    build_glrt_tables; ties go to the smaller slot then smaller message."""
    Xr, Xi, Ar, Ai = tables
    m_hat, w_hat, d = kernels.glrt_scan(
        np.ascontiguousarray(y.real),
        np.ascontiguousarray(y.imag),
        Xr,
        Xi,
        Ar,
        Ai,
        ch.g1.real,
        ch.g1.imag,
        ch.g2.real,
        ch.g2.imag,
    )
    return DecodeResult(
        message=int(w_hat), m_hat=int(m_hat), log_likelihood=-float(d) / ch.sigma_w2
    )


def glrt_decode_points(
    y: np.ndarray,
    ch: ChannelRealization,
    params: SystemParams,
    points: np.ndarray,
) -> DecodeResult:
    """glrt_decode with tables built on the fly (tests, one-off calls)."""
    return glrt_decode(y, ch, params, build_glrt_tables(points, params.M, params.T))


def ml_decode_combined(
    y_combined: np.ndarray, gains: np.ndarray, Xr: np.ndarray, Xi: np.ndarray
) -> int:
    """Exhaustive ML on a scalar-gain model; first minimizer wins ties."""
    d = kernels.codebook_dists(
        np.ascontiguousarray(y_combined.real),
        np.ascontiguousarray(y_combined.imag),
        np.ascontiguousarray(gains.real),
        np.ascontiguousarray(gains.imag),
        Xr,
        Xi,
    )
    return int(np.argmin(d))


def ml_decode_genie(
    y_combined: np.ndarray,
    m_true: int,
    ch: ChannelRealization,
    params: SystemParams,
    points: np.ndarray,
) -> int:
    """ML with the true switch slot known, on the combined scalar model."""
    gains = combined_gain_vector(m_true, ch, params)
    return ml_decode_combined(
        y_combined,
        gains,
        np.ascontiguousarray(points.real),
        np.ascontiguousarray(points.imag),
    )


def glrt_decode_lattice(
    y: np.ndarray,
    ch: ChannelRealization,
    params: SystemParams,
    codebook,
    snr: float,
    dither: np.ndarray | None = None,
    cap: int = SPHERE_CAP_DEFAULT,
) -> DecodeResult:
    """Per-slot lattice decode, then exact-likelihood ranking of the M
    winners.  codebook is a CosetCodebook (dither required) or QamCodebook."""
    best: DecodeResult | None = None
    failures = 0
    for m in range(1, params.M + 1):
        y_c = alamouti_combine(y, m, params.T, ch)
        gains = combined_gain_vector(m, ch, params)
        if isinstance(codebook, CosetCodebook):
            if dither is None:
                raise ValueError("coset decoding needs the shared dither")
            res = decode_coset(y_c, gains, codebook, snr, dither, cap=cap)
            w_m = res.message
            x = codebook.encode(w_m, dither)
            failures += int(not res.complete)
        else:
            res = decode_qam(y_c, gains, codebook, snr, cap=cap)
            w_m = res.message
            x = codebook.encode(w_m)
            failures += int(not res.complete)
        x_r = alamouti_relay_signal(x, m, params.T)
        r = y - (ch.g1 * x + ch.g2 * x_r)
        ll = -float(np.sum(r.real**2 + r.imag**2)) / ch.sigma_w2
        if best is None or ll > best.log_likelihood:
            best = DecodeResult(message=w_m, m_hat=m, log_likelihood=ll)
    assert best is not None
    return DecodeResult(
        message=best.message,
        m_hat=best.m_hat,
        log_likelihood=best.log_likelihood,
        failures=failures,
    )


def rad_detect(y: np.ndarray, ch: ChannelRealization, params: SystemParams) -> int:
    """Codebook-blind switch-slot detection from segment energies.

    Under slot hypothesis m the first mT symbols are CN(0, |g1|^2 rho + 1)
    and the rest CN(0, (|g1|^2+|g2|^2) rho + 1); the Gaussian log-likelihood
    depends on y only through the two segment energies.  Ties go to the
    smaller slot.
    """
    rho = params.rho
    M, T = params.M, params.T
    s1 = abs(ch.g1) ** 2 * rho + 1.0
    s2 = (abs(ch.g1) ** 2 + abs(ch.g2) ** 2) * rho + 1.0
    # Difference form: ll(m) = const - k c - e1(m) q with c = log(s1/s2),
    # q = 1/s1 - 1/s2.  Exact ties stay exact (s1 == s2 zeroes the whole
    # statistic) so the smallest slot wins them.
    c = math.log(s1) - math.log(s2)
    q = 1.0 / s1 - 1.0 / s2
    e = y.real**2 + y.imag**2
    pre = np.cumsum(e)
    best_m = 1
    best_stat = math.inf
    for m in range(1, M + 1):
        k = m * T
        stat = k * c + float(pre[k - 1]) * q
        if stat < best_stat:
            best_stat = stat
            best_m = m
    return best_m


def rad_pairwise_closed_form(
    m: int, m_prime: int, ch: ChannelRealization, params: SystemParams
) -> float:
    """P(slot hypothesis m' beats the true slot m), m' > m, in closed form.

    The two hypotheses differ only on the T(m'-m) symbols between the
    hypothesized switches; under the true slot those are phase-2 symbols, so
    the decision statistic is a normalized chi-square with 2T(m'-m) degrees
    of freedom and the probability is a regularized lower incomplete gamma.
    The g2 -> 0 limit of the threshold is the mean T(m'-m).
    """
    if m_prime <= m:
        raise ValueError("m_prime must exceed m")
    k = params.T * (m_prime - m)
    rho = params.rho
    x2 = abs(ch.g2) ** 2 * rho / (abs(ch.g1) ** 2 * rho + 1.0)
    u = float(k) if x2 == 0.0 else k * math.log1p(x2) / x2
    return gammainc_lower(k, u)
