"""MMSE decision-feedback preprocessing and sphere-search wrappers.

All decoders here operate on real models y = H x + noise with x = gen @ z
(plus an optional offset) over integer z.  Preprocessing computes the upper
triangular B with B^T B = H^T H + I / snr (Cholesky of the ridge Gram) and
the forward filter F = B^{-T} H^T.  The search then runs on the square
system min_z || F y + B u - B gen z ||^2, which handles an underdetermined H
(relay listening window shorter than the codeword) without special cases
because the ridge keeps B full rank.  snr is the per-component signal to
noise of the model: rho at the destination, rho-prime at the relay.  The
ridge vanishes as snr grows, so the preprocessed search approaches plain ML.

Distances returned by the wrappers live in the search domain; the residual
likelihood tests consume them directly.  For a tall plain-ML search (no
preprocessing) the component of y orthogonal to the column span is added
back so distances stay comparable across hypotheses.
"""

from dataclasses import dataclass

import numpy as np

from . import kernels
from .lattice import (
    SPHERE_CAP_DEFAULT,
    CosetCodebook,
    QamCodebook,
    complex_to_real_matrix,
    complex_to_real_vector,
    index_of,
)


@dataclass(frozen=True)
class GdfeFilters:
    B: np.ndarray  # upper triangular, positive diagonal
    F: np.ndarray


def mmse_gdfe_filters(H: np.ndarray, snr: float) -> GdfeFilters:
    if snr <= 0:
        raise ValueError("snr must be positive")
    n = H.shape[1]
    gram = H.T @ H + np.eye(n) / snr
    low = np.linalg.cholesky(gram)
    B = low.T
    F = np.linalg.solve(low, H.T)  # B^{-T} H^T
    return GdfeFilters(B=np.ascontiguousarray(B), F=np.ascontiguousarray(F))


def scalar_gain_matrix(gains: np.ndarray, n_symbols: int | None = None) -> np.ndarray:
    """Real expansion of per-symbol complex gains; pads unseen symbols with
    zero columns when the observation window is shorter than the codeword."""
    p = len(gains)
    n = p if n_symbols is None else n_symbols
    if n < p:
        raise ValueError("n_symbols must cover the observation window")
    C = np.zeros((p, n), np.complex128)
    C[np.arange(p), np.arange(p)] = gains
    return complex_to_real_matrix(C)


@dataclass(frozen=True)
class SphereResult:
    z: np.ndarray
    dist: float
    nodes: int
    complete: bool


@dataclass(frozen=True)
class CandidateResult:
    Z: np.ndarray  # (count, N) integer points, sorted by (dist, lex)
    dists: np.ndarray
    nodes: int
    complete: bool


def _qr_reduce(A: np.ndarray, y: np.ndarray):
    q, r = np.linalg.qr(A)
    sign = np.sign(np.diag(r)).copy()
    sign[sign == 0] = 1.0
    r = sign[:, None] * r
    q = q * sign[None, :]
    zq = q.T @ y
    perp = max(0.0, float(y @ y - zq @ zq))
    return np.ascontiguousarray(r), np.ascontiguousarray(zq), perp


_NO_BOX = np.zeros(0, np.int64)


def _box_array(v, n: int) -> np.ndarray:
    a = np.asarray(v, np.int64)
    if a.ndim == 0:
        return np.full(n, a, np.int64)
    return a


def sphere_closest(
    A: np.ndarray,
    y: np.ndarray,
    lo: np.ndarray | None = None,
    hi: np.ndarray | None = None,
    cap: int = SPHERE_CAP_DEFAULT,
) -> SphereResult:
    """min over integer z (boxed if lo/hi given) of ||y - A z||^2."""
    r, zq, perp = _qr_reduce(A, y)
    use_box = lo is not None
    n = A.shape[1]
    lo_a = _box_array(lo, n) if use_box else np.zeros(n, np.int64)
    hi_a = _box_array(hi, n) if use_box else np.zeros(n, np.int64)
    if use_box and np.any(lo_a > hi_a):
        raise ValueError("empty search box")
    z, d, nodes, status = kernels.se_closest(r, zq, lo_a, hi_a, use_box, cap)
    return SphereResult(z=z, dist=float(d) + perp, nodes=int(nodes), complete=bool(status))


def sphere_candidates(
    A: np.ndarray,
    y: np.ndarray,
    nwant: int,
    lo: np.ndarray | None = None,
    hi: np.ndarray | None = None,
    cap: int = SPHERE_CAP_DEFAULT,
) -> CandidateResult:
    """The nwant closest integer points by (distance, lex) order."""
    if nwant < 1:
        raise ValueError("nwant must be >= 1")
    r, zq, perp = _qr_reduce(A, y)
    use_box = lo is not None
    n = A.shape[1]
    lo_a = _box_array(lo, n) if use_box else np.zeros(n, np.int64)
    hi_a = _box_array(hi, n) if use_box else np.zeros(n, np.int64)
    if use_box and np.any(lo_a > hi_a):
        raise ValueError("empty search box")
    cand, cd, cnt, nodes, status = kernels.se_list(r, zq, nwant, lo_a, hi_a, use_box, cap)
    cnt = int(cnt)
    return CandidateResult(
        Z=cand[:cnt].copy(),
        dists=cd[:cnt] + perp,
        nodes=int(nodes),
        complete=bool(status),
    )


@dataclass(frozen=True)
class CosetDecodeResult:
    message: int
    dist: float
    cand_messages: np.ndarray  # per candidate, aligned with cand_dists
    cand_dists: np.ndarray
    complete: bool


def decode_coset(
    y: np.ndarray,
    gains: np.ndarray,
    codebook: CosetCodebook,
    snr: float,
    dither: np.ndarray,
    nwant: int = 1,
    cap: int = SPHERE_CAP_DEFAULT,
) -> CosetDecodeResult:
    """Shifted-lattice decoding of the dithered nested-lattice scheme.

    y: complex observations (length of the listening window).  gains:
    per-symbol complex gains aligned with y.  dither: the real 2n dither
    vector shared with the encoder.  The search runs over the infinite
    integer lattice; the message is the winner's residue mod Q.
    """
    n = codebook.n
    H = scalar_gain_matrix(gains, n)
    filt = mmse_gdfe_filters(H, snr)
    yr = complex_to_real_vector(np.asarray(y, np.complex128))
    target = filt.F @ yr + filt.B @ dither
    A = filt.B @ codebook.real_generator
    res = sphere_candidates(A, target, nwant, cap=cap)
    msgs = np.empty(len(res.dists), np.int64)
    for i in range(len(res.dists)):
        msgs[i] = codebook.message_of_digits(res.Z[i])
    if len(msgs) == 0:
        raise RuntimeError("sphere search returned no candidates")
    return CosetDecodeResult(
        message=int(msgs[0]),
        dist=float(res.dists[0]),
        cand_messages=msgs,
        cand_dists=res.dists,
        complete=res.complete,
    )


@dataclass(frozen=True)
class QamDecodeResult:
    message: int
    dist: float
    complete: bool


def _qam_search_system(gains: np.ndarray, codebook: QamCodebook, snr: float):
    Q = codebook.Q
    n = codebook.n
    H = scalar_gain_matrix(gains, n)
    filt = mmse_gdfe_filters(H, snr)
    gen_r = codebook.scale * complex_to_real_matrix(codebook.generator)
    A = filt.B @ (2.0 * gen_r)
    shift = (Q - 1.0) * (filt.B @ (gen_r @ np.ones(2 * n)))
    return filt, A, shift


def decode_qam(
    y: np.ndarray,
    gains: np.ndarray,
    codebook: QamCodebook,
    snr: float,
    cap: int = SPHERE_CAP_DEFAULT,
) -> QamDecodeResult:
    """Boxed sphere decoding of the rotated QAM codebook after MMSE
    preprocessing.  Digits t in [0, Q-1] carry PAM levels b = 2 t - (Q - 1);
    the constant shift moves to the search target so z stays in the box."""
    Q = codebook.Q
    n = codebook.n
    filt, A, shift = _qam_search_system(gains, codebook, snr)
    yr = complex_to_real_vector(np.asarray(y, np.complex128))
    target = filt.F @ yr + shift
    lo = np.zeros(2 * n, np.int64)
    hi = np.full(2 * n, Q - 1, np.int64)
    res = sphere_closest(A, target, lo, hi, cap)
    return QamDecodeResult(
        message=index_of(res.z, Q), dist=res.dist, complete=res.complete
    )


@dataclass(frozen=True)
class QamCandidateResult:
    messages: np.ndarray
    dists: np.ndarray
    complete: bool


def decode_qam_candidates(
    y: np.ndarray,
    gains: np.ndarray,
    codebook: QamCodebook,
    snr: float,
    nwant: int,
    cap: int = SPHERE_CAP_DEFAULT,
) -> QamCandidateResult:
    Q = codebook.Q
    n = codebook.n
    filt, A, shift = _qam_search_system(gains, codebook, snr)
    yr = complex_to_real_vector(np.asarray(y, np.complex128))
    target = filt.F @ yr + shift
    lo = np.zeros(2 * n, np.int64)
    hi = np.full(2 * n, Q - 1, np.int64)
    res = sphere_candidates(A, target, nwant, lo, hi, cap)
    msgs = np.array([index_of(z, Q) for z in res.Z], np.int64)
    return QamCandidateResult(messages=msgs, dists=res.dists, complete=res.complete)
