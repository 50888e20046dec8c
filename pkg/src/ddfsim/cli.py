"""Command line front end.

Subcommands:
    dmt            closed-form tradeoff curves to CSV
    outage         Monte Carlo outage probability over an SNR grid
    simulate       full link-level error-rate sweep from a config file
    calibrate-tau  per-SNR acceptance-threshold calibration
    udm-check      build a universally decodable matrix set and verify it
    rad            decision-time detection error floor experiment

Config files are plain ``key = value`` lines; ``#`` starts a comment.
Unknown keys are an error so typos cannot silently change a run.
"""

import argparse
import math
import sys

import numpy as np

from .channel import SystemParams, _cn_noise, draw_channel
from .destination import rad_detect, rad_pairwise_closed_form
from .dmt import decision_time_pmf_closed, dmt_curve_rows, outage_mc
from .harness import SimConfig, calibrate_tau, run_sweep, sweep_to_csv
from .udm import build_udm, udm_text, udm_verify


def _float_list(text: str) -> tuple[float, ...]:
    return tuple(float(x) for x in text.split(",") if x.strip())


def _int_list(text: str) -> tuple[int, ...]:
    return tuple(int(x) for x in text.split(",") if x.strip())


def _tau_schedule(text: str) -> tuple[tuple[float, float], ...]:
    out = []
    for part in text.split(","):
        part = part.strip()
        if not part:
            continue
        s, t = part.split(":")
        out.append((float(s), float(t)))
    return tuple(out)


_CONFIG_KEYS = {
    "M": int,
    "T": int,
    "R": float,
    "rho_prime_offset_db": float,
    "seed": int,
    "snr_db": _float_list,
    "code_family": str,
    "Q": int,
    "udm_L": int,
    "udm_n": int,
    "udm_q": int,
    "relay_rule": str,
    "relay_decoder": str,
    "dest_decoder": str,
    "tau": float,
    "tau_schedule": _tau_schedule,
    "list_size": int,
    "mu": float,
    "min_errors": int,
    "max_trials": int,
    "batch_size": int,
    "sphere_cap": int,
    "outage_trials": int,
}


def parse_config_file(path: str) -> dict:
    values = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key = value")
            key, _, val = line.partition("=")
            key = key.strip()
            val = val.strip()
            if key not in _CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            try:
                values[key] = _CONFIG_KEYS[key](val)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: bad value for {key}: {exc}")
    return values


def build_sim_config(values: dict, seed_override: int | None = None) -> SimConfig:
    for req in ("M", "T", "R", "snr_db"):
        if req not in values:
            raise ValueError(f"config is missing required key {req!r}")
    values = dict(values)
    if seed_override is not None:
        values["seed"] = seed_override
    params = SystemParams(
        M=values.pop("M"),
        T=values.pop("T"),
        R=values.pop("R"),
        rho_db=values["snr_db"][0],
        rho_prime_offset_db=values.pop("rho_prime_offset_db", 3.0),
        seed=values.get("seed", 0),
    )
    return SimConfig(params=params, **values)


def _write_or_print(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


# -- subcommand bodies -----------------------------------------------------


def _cmd_dmt(args) -> int:
    rows = dmt_curve_rows(
        m_list=args.slots, n_list=args.relays, npoints=args.points
    )
    lines = ["r,d,param,variant"]
    for r, d, param, variant in rows:
        dtxt = "inf" if math.isinf(d) else f"{d:.10g}"
        lines.append(f"{r:.10g},{dtxt},{param},{variant}")
    _write_or_print("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_outage(args) -> int:
    values = parse_config_file(args.config)
    cfg = build_sim_config(values, args.seed)
    lines = ["snr_db,trials,p_out,p_silent_closed"]
    from .harness import _outage_rng
    from dataclasses import replace

    for i, snr in enumerate(cfg.snr_db):
        p = replace(cfg.params, rho_db=snr)
        res = outage_mc(p, cfg.outage_trials, _outage_rng(cfg.seed, i))
        p_silent = decision_time_pmf_closed(p.M, p)
        lines.append(
            f"{snr:.10g},{res.trials},{res.p_out:.10g},{p_silent:.10g}"
        )
    _write_or_print("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_simulate(args) -> int:
    values = parse_config_file(args.config)
    cfg = build_sim_config(values, args.seed)
    stats = run_sweep(cfg, threads=args.threads)
    _write_or_print(sweep_to_csv(stats), args.out)
    return 0


def _cmd_calibrate_tau(args) -> int:
    values = parse_config_file(args.config)
    cfg = build_sim_config(values, args.seed)
    lines = ["snr_db,tau,trials,met"]
    for snr in cfg.snr_db:
        res = calibrate_tau(
            cfg,
            snr,
            target_fraction=args.target_fraction,
            trials=args.trials,
            threads=args.threads,
        )
        lines.append(f"{snr:.10g},{res.tau:.10g},{res.trials},{int(res.met)}")
    _write_or_print("\n".join(lines) + "\n", args.out)
    return 0


def _cmd_udm_check(args) -> int:
    udm = build_udm(args.L, args.n, args.q)
    sys.stdout.write(udm_text(udm) + "\n")
    ok = udm_verify(udm)
    sys.stdout.write("verify: " + ("OK" if ok else "FAIL") + "\n")
    return 0 if ok else 1


def _cmd_rad(args) -> int:
    """Error floor probe for the two-slot decision-time detector.

    Per (T, SNR): channel-averaged closed-form switch-miss probability next
    to a Monte Carlo detection error count, both under the per-symbol
    Gaussian received-energy model the detector assumes (true switch at the
    first slot, so phase-2 symbols carry relay energy)."""
    lines = ["T,snr_db,p12_closed_avg,detect_err_mc,trials"]
    for T in args.T:
        for snr in args.snr_db:
            p = SystemParams(M=2, T=T, R=1.0, rho_db=snr)
            rng = np.random.default_rng(args.seed)
            closed = 0.0
            errs = 0
            for _ in range(args.trials):
                ch = draw_channel(p, rng)
                closed += rad_pairwise_closed_form(1, 2, ch, p)
                s1 = abs(ch.g1) ** 2 * p.rho + 1.0
                s2 = (abs(ch.g1) ** 2 + abs(ch.g2) ** 2) * p.rho + 1.0
                y = np.concatenate(
                    (_cn_noise(T, s1, rng), _cn_noise(T, s2, rng))
                )
                errs += rad_detect(y, ch, p) != 1
            lines.append(
                f"{T},{snr:.10g},{closed / args.trials:.10g},"
                f"{errs / args.trials:.10g},{args.trials}"
            )
    _write_or_print("\n".join(lines) + "\n", args.out)
    return 0


# -- parser ----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="ddfsim", description="dynamic decode-and-forward relay simulator"
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("dmt", help="closed-form tradeoff curves")
    p.add_argument("--slots", type=_int_list, default=(2, 5, 10, 20))
    p.add_argument("--relays", type=_int_list, default=(1, 2, 3))
    p.add_argument("--points", type=int, default=101)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_dmt)

    p = sub.add_parser("outage", help="Monte Carlo outage over the SNR grid")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_outage)

    p = sub.add_parser("simulate", help="link-level error-rate sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("calibrate-tau", help="acceptance threshold calibration")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--target-fraction", type=float, default=0.1)
    p.add_argument("--trials", type=int, default=20_000)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_calibrate_tau)

    p = sub.add_parser("udm-check", help="build and verify a matrix set")
    p.add_argument("--L", type=int, required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--q", type=int, required=True)
    p.set_defaults(func=_cmd_udm_check)

    p = sub.add_parser("rad", help="decision-time detection error floor")
    p.add_argument("--T", type=_int_list, default=(1, 64))
    p.add_argument("--snr-db", type=_float_list, default=(20.0, 40.0))
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_rad)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
