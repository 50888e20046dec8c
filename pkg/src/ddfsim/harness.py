"""End-to-end Monte Carlo pipeline with stratified error accounting.

A trial's random draws always happen in the same order regardless of the
configured decoders: message, channel, relay noise (full block), destination
noise (full block), then the shaping dither when the coset scheme is in use.
Configs that differ only in decoder choice therefore see identical channel
and noise realizations, which pairs their error curves draw-for-draw.

Reproducibility contract: every trial runs on its own counter-based
substream keyed by the master seed with counter words (0, namespace,
trial_index, snr_index) -- namespace 0 for sweep trials, 1 for calibration
trials, and the outage reference uses a disjoint high-word namespace.  The
resulting CSV is byte-identical for a fixed (config, seed) no matter how
many worker processes share the load, because trials are aggregated in
whole batches of fixed size, in batch order, and the stop rule is evaluated
only at batch boundaries.

Error accounting per trial: E is a destination decoding error against the
true message; E_r is the relay having transmitted a wrong message (a silent
relay never sets E_r).  Counters keep E, E_r, E-and-E_r, and E-and-not-E_r,
so count(E) = count(E and E_r) + count(E and not E_r) holds exactly.
"""

import math
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from functools import lru_cache

import numpy as np

from .channel import (
    SystemParams,
    _cn_noise,
    alamouti_combine,
    alamouti_relay_signal,
    combined_gain_vector,
    draw_channel,
)
from .destination import (
    build_glrt_tables,
    glrt_decode,
    ml_decode_combined,
    rad_detect,
)
from .dmt import outage_mc
from .lattice import SPHERE_CAP_DEFAULT, CosetCodebook, QamCodebook
from .lattice_decoder import decode_coset
from .relay import (
    TAU_GRID_DEFAULT,
    ExhaustiveRelayDecoder,
    ForneyConfig,
    LatticeRelayDecoder,
    RelayDecision,
    bounded_distance_delta,
    bounded_distance_run,
    fixed_rule_run,
    phi1,
    phi2,
    phi3,
    phiF_run,
)
from .udm import UdmCodebook

CODE_FAMILIES = ("rotated-qam", "udm-permutation")
RELAY_RULES = ("phi1", "phi2", "phi3", "phiF", "bounded-distance")
RELAY_DECODERS = ("exhaustive-ml", "mmse-gdfe-lattice")
DEST_DECODERS = ("genie-ml", "glrt", "mmse-gdfe-lattice", "rad-then-ml")

CSV_COLUMNS = (
    "snr_db",
    "trials",
    "err_total",
    "err_relay",
    "err_dest_given_relay_ok",
    "relay_silent_count",
    "decoder_failures",
    "p_out_mc",
    "tau",
)


@dataclass(frozen=True)
class SimConfig:
    """Full sweep description; validated on construction."""

    params: SystemParams
    snr_db: tuple[float, ...]
    code_family: str = "rotated-qam"
    Q: int = 2
    udm_L: int = 0
    udm_n: int = 0
    udm_q: int = 0
    relay_rule: str = "phi1"
    relay_decoder: str = "exhaustive-ml"
    dest_decoder: str = "genie-ml"
    tau: float = 1.0
    tau_schedule: tuple[tuple[float, float], ...] = ()
    list_size: int = 64
    mu: float = 0.0  # 0 means the default 3/T radius-slack coefficient
    min_errors: int = 100
    max_trials: int = 100_000
    batch_size: int = 512
    seed: int = 0
    sphere_cap: int = SPHERE_CAP_DEFAULT
    outage_trials: int = 200_000

    def __post_init__(self):
        if self.code_family not in CODE_FAMILIES:
            raise ValueError(f"unknown code_family {self.code_family!r}")
        if self.relay_rule not in RELAY_RULES:
            raise ValueError(f"unknown relay_rule {self.relay_rule!r}")
        if self.relay_decoder not in RELAY_DECODERS:
            raise ValueError(f"unknown relay_decoder {self.relay_decoder!r}")
        if self.dest_decoder not in DEST_DECODERS:
            raise ValueError(f"unknown dest_decoder {self.dest_decoder!r}")
        if not self.snr_db:
            raise ValueError("snr_db grid is empty")
        if self.min_errors < 1 or self.max_trials < 1 or self.batch_size < 1:
            raise ValueError("stop rule and batch size must be positive")
        if self.tau < 0:
            raise ValueError("tau must be >= 0")
        if self.list_size < 1:
            raise ValueError("list_size must be >= 1")
        p = self.params
        if self.code_family == "rotated-qam":
            if self.Q < 2:
                raise ValueError("Q must be >= 2")
            rate = 2.0 * math.log2(self.Q)
            if abs(rate - p.R) > 1e-9:
                raise ValueError(
                    f"code rate {rate} bpcu inconsistent with params.R = {p.R}"
                )
        else:
            if self.udm_L != p.M * p.T:
                raise ValueError("udm_L must equal the block length M*T")
            if self.udm_n < 1 or self.udm_q < 2:
                raise ValueError("udm_n and udm_q must be set")
            rate = 2.0 * self.udm_n * math.log2(self.udm_q) / self.udm_L
            if abs(rate - p.R) > 1e-9:
                raise ValueError(
                    f"code rate {rate} bpcu inconsistent with params.R = {p.R}"
                )
            if self._needs_lattice():
                raise ValueError("lattice decoders require the rotated-qam family")

    def _needs_lattice(self) -> bool:
        return (
            self.relay_decoder == "mmse-gdfe-lattice"
            or self.dest_decoder == "mmse-gdfe-lattice"
        )

    def tau_for(self, snr_db: float) -> float:
        for s, t in self.tau_schedule:
            if abs(s - snr_db) < 1e-9:
                return t
        return self.tau


@dataclass(frozen=True)
class TrialOutcome:
    m: int
    relay_error: bool
    dest_error: bool
    relay_silent: bool
    failures: int = 0
    truncations: int = 0


@dataclass
class ErrorStats:
    """Per-SNR-point counters; merge() is associative and order-independent."""

    snr_db: float
    tau: float
    M: int
    trials: int = 0
    err_total: int = 0
    err_relay: int = 0
    err_and_relay: int = 0
    err_dest_given_relay_ok: int = 0
    relay_silent_count: int = 0
    decoder_failures: int = 0
    truncations: int = 0
    m_histogram: np.ndarray = field(default=None)  # type: ignore[assignment]
    p_out_mc: float = math.nan

    def __post_init__(self):
        if self.m_histogram is None:
            self.m_histogram = np.zeros(self.M, np.int64)

    def add(self, o: TrialOutcome) -> None:
        self.trials += 1
        self.err_total += o.dest_error
        self.err_relay += o.relay_error
        self.err_and_relay += o.dest_error and o.relay_error
        self.err_dest_given_relay_ok += o.dest_error and not o.relay_error
        self.relay_silent_count += o.relay_silent
        self.decoder_failures += o.failures
        self.truncations += o.truncations
        self.m_histogram[o.m - 1] += 1

    def merge(self, other: "ErrorStats") -> None:
        self.trials += other.trials
        self.err_total += other.err_total
        self.err_relay += other.err_relay
        self.err_and_relay += other.err_and_relay
        self.err_dest_given_relay_ok += other.err_dest_given_relay_ok
        self.relay_silent_count += other.relay_silent_count
        self.decoder_failures += other.decoder_failures
        self.truncations += other.truncations
        self.m_histogram += other.m_histogram

    @property
    def p_err(self) -> float:
        return self.err_total / self.trials if self.trials else math.nan

    @property
    def p_relay_err(self) -> float:
        return self.err_relay / self.trials if self.trials else math.nan


def _trial_rng(seed: int, snr_index: int, trial_index: int, namespace: int = 0):
    bitgen = np.random.Philox(
        key=np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
        counter=np.array([0, namespace, trial_index, snr_index], np.uint64),
    )
    return np.random.Generator(bitgen)


def _outage_rng(seed: int, snr_index: int):
    bitgen = np.random.Philox(
        key=np.uint64(seed & 0xFFFFFFFFFFFFFFFF),
        counter=np.array([0, 2, 0, snr_index], np.uint64),
    )
    return np.random.Generator(bitgen)


def _coset_points(cb: CosetCodebook, dither: np.ndarray) -> np.ndarray:
    """Per-trial codeword table of the dithered coset scheme (nc, n)."""
    nc = cb.num_messages
    pts = np.empty((nc, cb.n), np.complex128)
    for w in range(nc):
        pts[w] = cb.encode(w, dither)
    return pts


class _Engine:
    """Per-(config, SNR point) immutable context: codebooks and tables."""

    def __init__(self, cfg: SimConfig, snr_index: int):
        self.cfg = cfg
        self.params = replace(cfg.params, rho_db=cfg.snr_db[snr_index])
        p = self.params
        energy = p.energy
        n = p.block_len
        self.needs_lattice = cfg._needs_lattice()
        self.coset: CosetCodebook | None = None
        self.points: np.ndarray | None = None
        if cfg.code_family == "rotated-qam":
            if self.needs_lattice:
                self.coset = CosetCodebook(cfg.Q, n, energy)
                self.num_messages = self.coset.num_messages
            else:
                qam = QamCodebook(cfg.Q, n, energy)
                self.points = qam.points
                self.num_messages = qam.num_messages
        else:
            udm_cb = UdmCodebook(cfg.udm_L, cfg.udm_n, cfg.udm_q, energy)
            self.points = udm_cb.points
            self.num_messages = udm_cb.num_messages
        self.needs_points = (
            cfg.relay_decoder == "exhaustive-ml"
            or cfg.relay_rule == "bounded-distance"
            or cfg.dest_decoder in ("genie-ml", "glrt", "rad-then-ml")
        )
        if self.points is not None:
            self.Xr = np.ascontiguousarray(self.points.real)
            self.Xi = np.ascontiguousarray(self.points.imag)
            if cfg.dest_decoder == "glrt":
                self.tables = build_glrt_tables(self.points, p.M, p.T)
        self.tau = cfg.tau_for(p.rho_db)
        self.delta = bounded_distance_delta(p, cfg.mu if cfg.mu > 0 else None)

    # -- per-trial pieces -------------------------------------------------

    def _encode(self, w: int, dither: np.ndarray | None) -> np.ndarray:
        if self.coset is not None:
            assert dither is not None
            return self.coset.encode(w, dither)
        return self.points[w]

    def _draw(self, rng):
        p = self.params
        w0 = int(rng.integers(self.num_messages))
        ch = draw_channel(p, rng)
        v = _cn_noise(p.block_len, p.sigma_v2, rng)
        wn = _cn_noise(p.block_len, p.sigma_w2, rng)
        dither = self.coset.draw_dither(rng) if self.coset is not None else None
        return w0, ch, v, wn, dither

    def _trial_points(self, dither):
        """Codeword table for exhaustive components, if any needs it."""
        if self.points is not None:
            return self.points, self.Xr, self.Xi
        pts = _coset_points(self.coset, dither)
        return pts, np.ascontiguousarray(pts.real), np.ascontiguousarray(pts.imag)

    def _relay_decision(self, ch, y_r, dither, points) -> RelayDecision:
        cfg = self.cfg
        p = self.params
        if cfg.relay_rule == "bounded-distance":
            return bounded_distance_run(
                ch.h, y_r, p, points, self.delta, p.sigma_v2
            )
        if cfg.relay_decoder == "exhaustive-ml":
            decoder = ExhaustiveRelayDecoder(points, p.sigma_v2)
        else:
            decoder = LatticeRelayDecoder(
                self.coset,
                dither,
                p.sigma_v2,
                p.rho_prime,
                cfg.list_size,
                cfg.sphere_cap,
            )
        if cfg.relay_rule == "phiF":
            fc = ForneyConfig(tau=self.tau, list_size=cfg.list_size)
            return phiF_run(ch.h, y_r, p, fc, decoder)
        rule = {"phi1": phi1, "phi2": phi2, "phi3": phi3}[cfg.relay_rule]
        return fixed_rule_run(rule(ch.h, p), ch.h, y_r, p, decoder)

    def _dest_decode(self, y, ch, decision, dither, trial_tables) -> tuple[int, int]:
        """Returns (decoded message, failure count)."""
        cfg = self.cfg
        p = self.params
        m = decision.m
        if cfg.dest_decoder == "glrt":
            points, Xr, Xi = trial_tables
            tables = (
                self.tables
                if self.points is not None
                else build_glrt_tables(points, p.M, p.T)
            )
            res = glrt_decode(y, ch, p, tables)
            return res.message, 0
        if cfg.dest_decoder == "mmse-gdfe-lattice":
            y_c = alamouti_combine(y, m, p.T, ch)
            gains = combined_gain_vector(m, ch, p)
            res = decode_coset(
                y_c, gains, self.coset, p.rho, dither, cap=cfg.sphere_cap
            )
            return res.message, int(not res.complete)
        if cfg.dest_decoder == "rad-then-ml":
            m_hat = rad_detect(y, ch, p)
        else:  # genie-ml
            m_hat = m
        points, Xr, Xi = trial_tables
        y_c = alamouti_combine(y, m_hat, p.T, ch)
        gains = combined_gain_vector(m_hat, ch, p)
        return ml_decode_combined(y_c, gains, Xr, Xi), 0

    def trial(self, rng) -> TrialOutcome:
        p = self.params
        w0, ch, v, wn, dither = self._draw(rng)
        x_s = self._encode(w0, dither)
        y_r = ch.h * x_s + v
        trial_tables = self._trial_points(dither) if self.needs_points else None
        points = trial_tables[0] if trial_tables is not None else None
        decision = self._relay_decision(ch, y_r, dither, points)
        if decision.message is None:
            x_r = np.zeros(p.block_len, np.complex128)
        else:
            x_r = alamouti_relay_signal(
                self._encode(decision.message, dither), decision.m, p.T
            )
        y = ch.g1 * x_s + ch.g2 * x_r + wn
        w_hat, dest_failures = self._dest_decode(y, ch, decision, dither, trial_tables)
        relay_silent = decision.message is None
        return TrialOutcome(
            m=decision.m,
            relay_error=(not relay_silent) and decision.message != w0,
            dest_error=w_hat != w0,
            relay_silent=relay_silent,
            failures=decision.failures + dest_failures,
            truncations=decision.truncations,
        )


@lru_cache(maxsize=8)
def _engine(cfg: SimConfig, snr_index: int) -> _Engine:
    return _Engine(cfg, snr_index)


def run_trial(
    cfg: SimConfig, snr_index: int, trial_index: int, master_seed: int | None = None
) -> TrialOutcome:
    """One fully deterministic trial; identical inputs give identical
    outcomes regardless of worker layout."""
    seed = cfg.seed if master_seed is None else master_seed
    rng = _trial_rng(seed, snr_index, trial_index)
    return _engine(cfg, snr_index).trial(rng)


def _run_batch(cfg: SimConfig, snr_index: int, start: int, stop: int) -> ErrorStats:
    eng = _engine(cfg, snr_index)
    stats = ErrorStats(
        snr_db=cfg.snr_db[snr_index], tau=eng.tau, M=cfg.params.M
    )
    for t in range(start, stop):
        stats.add(eng.trial(_trial_rng(cfg.seed, snr_index, t)))
    return stats


def _batch_ranges(cfg: SimConfig):
    out = []
    start = 0
    while start < cfg.max_trials:
        stop = min(start + cfg.batch_size, cfg.max_trials)
        out.append((start, stop))
        start = stop
    return out


def run_point(
    cfg: SimConfig, snr_index: int, threads: int = 1, with_outage: bool = True
) -> ErrorStats:
    """Trials until min_errors destination errors or max_trials, counted in
    whole batches so the result is independent of the worker count."""
    eng = _engine(cfg, snr_index)
    total = ErrorStats(snr_db=cfg.snr_db[snr_index], tau=eng.tau, M=cfg.params.M)
    ranges = _batch_ranges(cfg)
    if threads <= 1:
        for start, stop in ranges:
            total.merge(_run_batch(cfg, snr_index, start, stop))
            if total.err_total >= cfg.min_errors:
                break
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            window = threads * 2
            pending = {}
            next_submit = 0
            next_take = 0
            while next_take < len(ranges):
                while next_submit < len(ranges) and len(pending) < window:
                    s, e = ranges[next_submit]
                    pending[next_submit] = pool.submit(
                        _run_batch, cfg, snr_index, s, e
                    )
                    next_submit += 1
                total.merge(pending.pop(next_take).result())
                next_take += 1
                if total.err_total >= cfg.min_errors:
                    for f in pending.values():
                        f.cancel()
                    break
    if with_outage:
        res = outage_mc(eng.params, cfg.outage_trials, _outage_rng(cfg.seed, snr_index))
        total.p_out_mc = res.p_out
    return total


def run_sweep(cfg: SimConfig, threads: int = 1) -> list[ErrorStats]:
    return [run_point(cfg, i, threads=threads) for i in range(len(cfg.snr_db))]


def sweep_to_csv(stats: list[ErrorStats]) -> str:
    lines = [",".join(CSV_COLUMNS)]
    for s in stats:
        lines.append(
            ",".join(
                (
                    f"{s.snr_db:.10g}",
                    str(s.trials),
                    str(s.err_total),
                    str(s.err_relay),
                    str(s.err_dest_given_relay_ok),
                    str(s.relay_silent_count),
                    str(s.decoder_failures),
                    f"{s.p_out_mc:.10g}",
                    f"{s.tau:.10g}",
                )
            )
        )
    return "\n".join(lines) + "\n"


# -- threshold calibration -----------------------------------------------


@dataclass(frozen=True)
class CalibrationResult:
    tau: float
    snr_db: float
    trials: int
    grid: tuple[float, ...]
    relay_err_counts: tuple[int, ...]
    dest_err_counts: tuple[int, ...]
    met: bool


def _calib_batch(cfg: SimConfig, start: int, stop: int, grid: tuple[float, ...]):
    """Replay counting: per trial, record the accept slot for every grid tau
    from one relay pass, then evaluate the destination once per candidate
    decision.  Returns per-tau (relay error, destination error) counts."""
    eng = _engine(cfg, 0)
    p = eng.params
    M, T = p.M, p.T
    log_grid = np.array([math.log(t) if t > 0 else -math.inf for t in grid])
    n_er = np.zeros(len(grid), np.int64)
    n_e = np.zeros(len(grid), np.int64)
    for t in range(start, stop):
        rng = _trial_rng(cfg.seed, 0, t, namespace=1)
        w0, ch, v, wn, dither = eng._draw(rng)
        x_s = eng._encode(w0, dither)
        y_r = ch.h * x_s + v
        trial_tables = eng._trial_points(dither) if eng.needs_points else None
        points = trial_tables[0] if trial_tables is not None else None
        if cfg.relay_decoder == "exhaustive-ml":
            decoder = ExhaustiveRelayDecoder(points, p.sigma_v2)
        else:
            decoder = LatticeRelayDecoder(
                eng.coset, dither, p.sigma_v2, p.rho_prime,
                cfg.list_size, cfg.sphere_cap,
            )
        start_m = phi1(ch.h, p)
        slots = []
        for m in range(start_m, M):
            slots.append((m, decoder.decide(y_r[: m * T], ch.h, m)))
        # destination outcome for each candidate decision (and silence)
        dest_err = {}
        relay_err = {}
        for m, slot in slots:
            d = RelayDecision(m=m, message=slot.message)
            x_r = alamouti_relay_signal(eng._encode(slot.message, dither), m, T)
            y = ch.g1 * x_s + ch.g2 * x_r + wn
            w_hat, _ = eng._dest_decode(y, ch, d, dither, trial_tables)
            dest_err[m] = w_hat != w0
            relay_err[m] = slot.message != w0
        y_silent = ch.g1 * x_s + wn
        d_silent = RelayDecision(m=M, message=None)
        w_hat, _ = eng._dest_decode(y_silent, ch, d_silent, dither, trial_tables)
        dest_err[M] = w_hat != w0
        relay_err[M] = False
        ratios = np.array(
            [s.log_ratio if not s.failed else -math.inf for _, s in slots]
        )
        for gi in range(len(grid)):
            m_acc = M
            for si, (m, _) in enumerate(slots):
                if ratios[si] >= log_grid[gi]:
                    m_acc = m
                    break
            n_er[gi] += relay_err[m_acc]
            n_e[gi] += dest_err[m_acc]
    return n_er, n_e, stop - start


def calibrate_tau(
    cfg: SimConfig,
    snr_db: float,
    target_fraction: float = 0.1,
    trials: int = 20_000,
    threads: int = 1,
    grid: tuple[float, ...] = TAU_GRID_DEFAULT,
) -> CalibrationResult:
    """Smallest grid threshold whose replayed relay-undetected-error count
    stays within target_fraction of the destination error count.

    One fixed trial set serves every grid point, so the returned threshold
    is nonincreasing in target_fraction.  An exhausted grid returns the
    largest threshold with a warning.
    """
    if not 0.0 < target_fraction <= 1.0:
        raise ValueError("target_fraction must be in (0, 1]")
    point = replace(cfg, snr_db=(snr_db,), relay_rule="phiF")
    bs = max(1, min(point.batch_size, trials))
    ranges = []
    start = 0
    while start < trials:
        ranges.append((start, min(start + bs, trials)))
        start += bs
    n_er = np.zeros(len(grid), np.int64)
    n_e = np.zeros(len(grid), np.int64)
    done = 0
    if threads <= 1:
        parts = [_calib_batch(point, s, e, grid) for s, e in ranges]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futs = [pool.submit(_calib_batch, point, s, e, grid) for s, e in ranges]
            parts = [f.result() for f in futs]
    for er, e, n in parts:
        n_er += er
        n_e += e
        done += n
    for gi, tau in enumerate(grid):
        if n_er[gi] <= target_fraction * n_e[gi]:
            return CalibrationResult(
                tau=tau,
                snr_db=snr_db,
                trials=done,
                grid=tuple(grid),
                relay_err_counts=tuple(int(x) for x in n_er),
                dest_err_counts=tuple(int(x) for x in n_e),
                met=True,
            )
    warnings.warn("calibration grid exhausted; returning the largest threshold")
    return CalibrationResult(
        tau=grid[-1],
        snr_db=snr_db,
        trials=done,
        grid=tuple(grid),
        relay_err_counts=tuple(int(x) for x in n_er),
        dest_err_counts=tuple(int(x) for x in n_e),
        met=False,
    )
