"""Command-line experiment runner.

Subcommands: verify, pe, period, amplitude, bounds. Exit codes: 0 success or
PASS, 1 verification FAIL, 2 usage/configuration error.

Every flag may also come from ``--config FILE`` (a JSON object keyed by the
flag's long name, dashes or underscores); explicit flags win.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .applications import (
    PeriodicStateSpec,
    amplitude_estimation,
    near_multiple,
    period_finding_runs,
)
from .bounds import bounds_table, tail_probability_exact
from .channels import (
    Channel,
    PerGateNoise,
    channel_from_dict,
    exact_per_basis_infidelity,
    perfect_inverse_qft,
)
from .phase_estimation import (
    good_mask,
    bad_outcome_bound,
    circular_median,
    pe_batch,
    closed_form_bad_outcome_bound,
)
from .seeding import block_rng, run_blocks
from .verifier import (
    InfidelityEstimate,
    Verdict,
    count_failures,
    estimate_average_infidelity_sequential,
    hoeffding_shots,
    verdict,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2


class UsageError(Exception):
    pass


# --------------------------------------------------------------------------
# argument parsing
# --------------------------------------------------------------------------


def _int_list(text: str) -> list[int]:
    return [int(t) for t in str(text).split(",") if t.strip()]


def _float_list(text: str) -> list[float]:
    return [float(t) for t in str(text).split(",") if t.strip()]


def _common(p: argparse.ArgumentParser, default_format: str = "json") -> None:
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--config", help="JSON file with flag values")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--format", choices=["json", "csv"], help=f"output format (default {default_format})")
    p.add_argument("--threads", type=int, help="worker threads for shot blocks (default 1)")


def _channel_flag(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--channel",
        help="channel document: a JSON file path, inline JSON, or 'perfect'",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qftverify",
        description="Average-case inverse-QFT verification and randomized phase estimation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("verify", help="estimate average infidelity over Fourier basis states")
    _common(p)
    _channel_flag(p)
    p.add_argument("--n", type=int)
    p.add_argument("--epsilon", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--threshold", type=float)
    p.add_argument("--sequential", action="store_true", default=None,
                   help="stop early with an empirical-Bernstein rule")

    p = sub.add_parser("pe", help="randomized phase estimation")
    _common(p)
    _channel_flag(p)
    p.add_argument("--n", type=int)
    p.add_argument("--theta", type=float)
    p.add_argument("--K", type=int)
    p.add_argument("--shots", type=int)
    p.add_argument("--eta", type=float, help="known average infidelity (default: computed)")
    p.add_argument("--eta-shots", type=int, help="shots per basis state when eta must be sampled")
    p.add_argument("--pin-lambda", type=int, help="fix the offset (disables randomization)")

    p = sub.add_parser("period", help="period finding through the channel")
    _common(p)
    _channel_flag(p)
    p.add_argument("--N", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--s", type=int)
    p.add_argument("--R", type=int, help="upper bound on the period")
    p.add_argument("--runs", type=int)
    p.add_argument("--verbose", action="store_true", default=None)

    p = sub.add_parser("amplitude", help="amplitude estimation through the channel")
    _common(p)
    _channel_flag(p)
    p.add_argument("--n", type=int)
    p.add_argument("--mu", type=float)
    p.add_argument("--K", type=int)
    p.add_argument("--shots", type=int)
    p.add_argument("--verbose", action="store_true", default=None)

    p = sub.add_parser("bounds", help="tail probabilities and bounds table")
    _common(p, default_format="csv")
    p.add_argument("--N", type=int)
    p.add_argument("--K", type=_int_list, help="comma-separated K values")
    p.add_argument("--x", type=_float_list, help="comma-separated fractional parts x")
    return parser


DEFAULTS = {
    "common": {"seed": 0, "threads": 1, "format": "json", "out": None},
    "verify": {"sequential": False},
    "pe": {"K": 2, "shots": 1000, "eta_shots": 16},
    "period": {"s": 0, "runs": 1000, "verbose": False},
    "amplitude": {"K": 2, "shots": 101, "verbose": False},
    "bounds": {"N": 1024, "K": [2, 3, 4], "x": [0.5], "format": "csv"},
}

REQUIRED = {
    "verify": ["channel", "n", "epsilon", "delta", "threshold"],
    "pe": ["channel", "n", "theta"],
    "period": ["channel", "N", "r"],
    "amplitude": ["channel", "n", "mu"],
    "bounds": [],
}


def resolve_config(args: argparse.Namespace) -> dict:
    """Merge defaults < config file < explicit flags."""
    cfg = dict(DEFAULTS["common"])
    cfg.update(DEFAULTS[args.command])
    if args.config:
        try:
            loaded = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        for key, value in loaded.items():
            cfg[key.replace("-", "_")] = value
    for key, value in vars(args).items():
        if key in ("command", "config") or value is None:
            continue
        cfg[key] = value
    cfg["command"] = args.command
    missing = [k for k in REQUIRED[args.command] if cfg.get(k) is None]
    if missing:
        raise UsageError("missing required setting(s): " + ", ".join("--" + m for m in missing))
    if isinstance(cfg.get("K"), (int, float)) and args.command == "bounds":
        cfg["K"] = [int(cfg["K"])]
    if isinstance(cfg.get("x"), (int, float)):
        cfg["x"] = [float(cfg["x"])]
    return cfg


def load_channel(spec, n: int | None = None) -> Channel:
    if isinstance(spec, dict):
        return channel_from_dict(spec)
    text = str(spec)
    if text == "perfect":
        if n is None:
            raise UsageError("'perfect' channel needs --n")
        return perfect_inverse_qft(n)
    if text.lstrip().startswith("{"):
        return channel_from_dict(json.loads(text))
    if not os.path.exists(text):
        raise UsageError(f"channel file {text} not found")
    return channel_from_dict(json.loads(Path(text).read_text()))


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def _channel_for(cfg: dict, n: int) -> Channel:
    try:
        channel = load_channel(cfg["channel"], n)
    except (ValueError, KeyError, TypeError, json.JSONDecodeError) as exc:
        raise UsageError(f"bad channel document: {exc}") from None
    if channel.num_qubits != n:
        raise UsageError(f"channel acts on {channel.num_qubits} qubits but n={n}")
    return channel


def _average_infidelity(channel: Channel, cfg: dict) -> tuple[float, str]:
    if cfg.get("eta") is not None:
        return float(cfg["eta"]), "given"
    if isinstance(channel, PerGateNoise):
        rng = block_rng(cfg["seed"], 1 << 30)
        info = exact_per_basis_infidelity(channel, int(cfg["eta_shots"]), rng)
        return info.eta_avg, f"sampled ({cfg['eta_shots']} shots per basis state)"
    return exact_per_basis_infidelity(channel).eta_avg, "exact"


def cmd_verify(cfg: dict) -> tuple[dict, int]:
    n, eps, delta, threshold = int(cfg["n"]), float(cfg["epsilon"]), float(cfg["delta"]), float(cfg["threshold"])
    if not 0 < threshold < 1:
        raise UsageError("--threshold must lie in (0, 1)")
    try:
        shots = hoeffding_shots(eps, delta)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    channel = _channel_for(cfg, n)
    if cfg["sequential"]:
        est = estimate_average_infidelity_sequential(channel, n, eps, delta, block_rng(cfg["seed"], 0))
    else:
        counts = run_blocks(
            lambda size, rng: count_failures(channel, n, size, rng), shots, cfg["seed"], cfg["threads"]
        )
        failures = sum(counts)
        est = InfidelityEstimate(failures / shots, shots, eps, delta, failures)
    v = verdict(est, threshold)
    result = est.to_dict()
    result.update({"seed": cfg["seed"], "threshold": threshold, "verdict": v.value})
    return result, EXIT_OK if v is Verdict.PASS else EXIT_FAIL


def cmd_pe(cfg: dict) -> tuple[dict, int]:
    n, theta, K, shots = int(cfg["n"]), float(cfg["theta"]), int(cfg["K"]), int(cfg["shots"])
    if not 0 <= theta < 1:
        raise UsageError("--theta must lie in [0, 1)")
    if shots < 1 or K < 1 or 2 * K > (1 << n):
        raise UsageError("need shots >= 1 and 1 <= K <= 2**(n-1)")
    channel = _channel_for(cfg, n)
    pin = cfg.get("pin_lambda")

    def block(size, rng):
        return pe_batch(channel, np.full(size, theta), n, rng, pin)

    parts = run_blocks(block, shots, cfg["seed"], cfg["threads"])
    lam = np.concatenate([p[0] for p in parts])
    raw = np.concatenate([p[1] for p in parts])
    corrected = np.concatenate([p[2] for p in parts])
    good = good_mask(corrected, theta, K, n)
    bad = float(1.0 - good.mean())
    eta, eta_source = _average_infidelity(channel, cfg)
    tail = tail_probability_exact(1 << n, theta, K)
    sigma = math.sqrt(max(bad * (1 - bad), 1.0 / shots) / shots)
    result = {
        "theta": theta,
        "n": n,
        "K": K,
        "shots": shots,
        "seed": cfg["seed"],
        "bad_fraction": bad,
        "sampling_sigma": sigma,
        "eta": eta,
        "eta_source": eta_source,
        "exact_tail": tail,
        "bound": bad_outcome_bound(K, eta, tail),
        "closed_form_bound": closed_form_bad_outcome_bound(K, eta) if K >= 2 and K * eta <= 0.5 else None,
        "median_estimate": circular_median(corrected / (1 << n)),
        "pinned_lambda": pin,
    }
    rows = [
        {"lambda_int": int(a), "raw_outcome": int(b), "corrected": int(c), "good": bool(g)}
        for a, b, c, g in zip(lam, raw, corrected, good)
    ]
    return {"summary": result, "rows": rows}, EXIT_OK


def cmd_period(cfg: dict) -> tuple[dict, int]:
    try:
        spec = PeriodicStateSpec(int(cfg["N"]), int(cfg["r"]), int(cfg["s"]))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    R = int(cfg.get("R") or spec.r)
    runs = int(cfg["runs"])
    if R < spec.r or runs < 1:
        raise UsageError("need R >= r and runs >= 1")
    channel = _channel_for(cfg, spec.n)
    parts = run_blocks(
        lambda size, rng: period_finding_runs(channel, spec, R, size, rng), runs, cfg["seed"], cfg["threads"]
    )
    results = [r for part in parts for r in part]
    js = np.array([r.outcome_j for r in results])
    result = {
        "N": spec.N,
        "r": spec.r,
        "s": spec.s,
        "R": R,
        "runs": runs,
        "seed": cfg["seed"],
        "success_rate": float(np.mean([r.success for r in results])),
        "near_multiple_rate": float(np.mean(near_multiple(js, spec.N, spec.r))),
        "lower_bound_perfect": 8 / math.pi**2,
    }
    if cfg["verbose"]:
        result["runs_detail"] = [
            {
                "outcome_j": r.outcome_j,
                "candidate_period": r.candidate_period,
                "convergents": [list(c) for c in r.convergents],
                "success": r.success,
            }
            for r in results
        ]
    return result, EXIT_OK


def cmd_amplitude(cfg: dict) -> tuple[dict, int]:
    n, mu, K, shots = int(cfg["n"]), float(cfg["mu"]), int(cfg["K"]), int(cfg["shots"])
    if not 0 <= mu <= math.pi / 2:
        raise UsageError("--mu must lie in [0, pi/2]")
    if shots < 1:
        raise UsageError("--shots must be >= 1")
    channel = _channel_for(cfg, n)
    parts = run_blocks(
        lambda size, rng: amplitude_estimation(channel, mu, n, size, rng).samples,
        shots,
        cfg["seed"],
        cfg["threads"],
    )
    samples = [s for part in parts for s in part]
    mu_hat = math.pi * circular_median(samples)
    result = {
        "mu": mu,
        "n": n,
        "K": K,
        "shots": shots,
        "seed": cfg["seed"],
        "mu_hat": mu_hat,
        "abs_error": abs(mu_hat - mu),
        "tolerance": math.pi * K / (1 << n),
        "within_tolerance": abs(mu_hat - mu) <= math.pi * K / (1 << n) + 1e-12,
    }
    if cfg["verbose"]:
        result["samples"] = samples
    return result, EXIT_OK


def cmd_bounds(cfg: dict) -> tuple[list[dict], int]:
    N, Ks, xs = int(cfg["N"]), [int(k) for k in cfg["K"]], [float(x) for x in cfg["x"]]
    if any(k < 2 for k in Ks):
        raise UsageError("every K must be >= 2 (the rigorous bound needs K >= 2)")
    if any(not 0 <= x < 1 for x in xs):
        raise UsageError("every x must lie in [0, 1)")
    if N < 4 or N & (N - 1) or any(2 * k > N for k in Ks):
        raise UsageError("N must be a power of two with 2K <= N")
    return [row.to_dict() for row in bounds_table(N, Ks, xs)], EXIT_OK


COMMANDS = {
    "verify": cmd_verify,
    "pe": cmd_pe,
    "period": cmd_period,
    "amplitude": cmd_amplitude,
    "bounds": cmd_bounds,
}

BOUNDS_COLUMNS = [
    ("N", "N"),
    ("K", "K"),
    ("x", "x"),
    ("exact_tail", "exact_tail"),
    ("rigorous", "rigorous_bound"),
    ("conjectured", "conjectured_bound"),
]


def _fmt(v) -> str:
    return f"{v:.12g}" if isinstance(v, float) else str(v)


def render(command: str, payload, fmt: str, meta: dict) -> str:
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if command == "bounds":
            w.writerow([h for h, _ in BOUNDS_COLUMNS])
            for row in payload:
                w.writerow([_fmt(row[k]) for _, k in BOUNDS_COLUMNS])
        elif command == "pe":
            cols = ["lambda_int", "raw_outcome", "corrected", "good"]
            w.writerow(cols)
            for row in payload["rows"]:
                w.writerow([int(row[c]) for c in cols])
        else:
            raise UsageError(f"--format csv is not available for {command}")
        return buf.getvalue()
    if command == "pe":
        payload = payload["summary"]
    report = {"meta": meta, "result": payload}
    return json.dumps(report, indent=2, sort_keys=True) + "\n"


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    start = time.perf_counter()
    try:
        cfg = resolve_config(args)
        payload, code = COMMANDS[args.command](cfg)
        echo = {k: v for k, v in sorted(cfg.items()) if k not in ("out", "threads")}
        meta = {
            "command": args.command,
            "version": __version__,
            "seed": cfg["seed"],
            "config": echo,
            "duration_s": round(time.perf_counter() - start, 6),
        }
        text = render(args.command, payload, cfg["format"], meta)
    except UsageError as exc:
        print(f"qftverify {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if cfg["format"] == "csv":
        # CSV carries only the table; run metadata goes to stderr
        print(json.dumps(meta, sort_keys=True), file=sys.stderr)
    if cfg.get("out"):
        Path(cfg["out"]).write_text(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
