"""Command-line front end: seeded, reproducible runs emitting CSV/JSON.

Exit codes: 0 ok, 2 invalid input, 3 certificate violation, 4 flagged
statistical result.  Every output artifact embeds the tool version, a
hash of the configuration, and the master seed; identical (config, seed)
produce byte-identical files regardless of RMTLDP_THREADS.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from .loggas import GasState, Potential, run_chain
from .matcore import HermMatrix, eigvals
from .randsrc import TailProfile, profile_from_json, tail_calibration_report
from .rates import (
    RateSpec,
    catalan,
    deformed_trace_limit,
    hollow_witness,
    rate_value,
    semicircle_moment,
    speed_exponent,
    trace_linearization_discrepancy,
)
from .rng import stream
from .varopt import CertificateError, inner_phi_inf, solve_rate_constant, entrywise_eigenvalue_gap
from .wigner import assemble_wigner, low_rank_trace_check
from .devlab import rate_slope_scan

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_CERTIFICATE = 3
EXIT_FLAGGED = 4

SCHEMA_VERSION = 1


def _config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def _meta(config: dict, seed: int) -> dict:
    return {
        "tool_version": __version__,
        "schema_version": SCHEMA_VERSION,
        "config_hash": _config_hash(config),
        "seed": int(seed),
    }


def _write(out: str | None, text: str) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        with open(out, "w") as fh:
            fh.write(text)


def _emit_csv(out, meta: dict, columns, rows) -> None:
    buf = io.StringIO()
    for k, v in meta.items():
        buf.write(f"# {k}={v}\n")
    buf.write(",".join(columns) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    _write(out, buf.getvalue())


def _fmt(v) -> str:
    if isinstance(v, (np.floating, np.integer, np.bool_)):
        v = v.item()
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _emit_json(out, meta: dict, payload: dict) -> None:
    doc = {"meta": meta, **payload}
    _write(out, json.dumps(doc, sort_keys=True, indent=2, default=_json_default) + "\n")


def _json_default(v):
    if isinstance(v, float) and math.isinf(v):
        return "inf"
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, np.floating):
        return float(v) if math.isfinite(v) else "inf"
    raise TypeError(f"not serializable: {type(v)}")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def cmd_rate(config: dict, seed: int, out, fmt: str) -> int:
    spec = RateSpec.from_json(config["spec"])
    grid = config.get("grid", {})
    lo = float(grid.get("lo", spec.center))
    hi = float(grid.get("hi", spec.center + 2.0))
    num = int(grid.get("num", 41))
    xs = np.linspace(lo, hi, num)
    meta = _meta(config, seed)
    meta["speed"] = speed_exponent(spec)
    rows = [(float(x), rate_value(spec, float(x))) for x in xs]
    if fmt == "json":
        _emit_json(out, meta, {"rows": [{"x": x, "rate": r} for x, r in rows]})
    else:
        _emit_csv(out, meta, ("x", "rate"), [(x, "inf" if math.isinf(r) else r) for x, r in rows])
    return EXIT_OK


def cmd_varopt(config: dict, seed: int, out, fmt: str) -> int:
    try:
        res = solve_rate_constant(
            alpha=float(config["alpha"]),
            a=float(config["a"]),
            b=float(config["b"]),
            p=int(config["p"]),
            n_max=int(config.get("n_max", 6)),
            budget=int(config.get("budget", 64)),
            seed=seed,
        )
    except CertificateError as exc:
        sys.stderr.write(f"certificate violation: {exc}\n")
        return EXIT_CERTIFICATE
    _emit_json(out, _meta(config, seed), res.to_json())
    return EXIT_OK


def cmd_deviations(config: dict, seed: int, out, fmt: str, threads: int) -> int:
    model = profile_from_json(config["model"])
    scan = rate_slope_scan(
        model,
        p=int(config["p"]),
        x=float(config["x"]),
        n_grid=config["n_grid"],
        trials_per_n=int(config.get("trials", 2000)),
        seed=seed,
        method=config.get("method", "auto"),
        threads=threads,
        min_points=1,
    )
    meta = _meta(config, seed)
    meta["rate_reference"] = scan.rate_reference
    columns = ("model", "n", "p", "x", "method", "p_hat", "stderr", "slope", "ess", "seed")
    kind = config["model"].get("kind", "gaussian")
    rows = [
        (
            kind, r.n, scan.p, scan.x, r.method, r.p_hat, r.stderr,
            "" if r.slope is None else r.slope,
            "" if r.ess is None else r.ess, seed,
        )
        for r in scan.rows
    ]
    if fmt == "json":
        _emit_json(out, meta, {"rows": [list(row) for row in rows], "summary": scan.summary()})
    else:
        _emit_csv(out, meta, columns, rows)
    return EXIT_FLAGGED if any(r.flagged for r in scan.rows) else EXIT_OK


def cmd_sample(config: dict, seed: int, out, fmt: str) -> int:
    what = config.get("what", "loggas")
    if what == "loggas":
        potential = Potential.from_json(config["potential"])
        N = int(config["N"])
        sweeps = int(config.get("sweeps", 0))
        state = GasState.initial(potential, N, seed)
        run_chain(state, potential, sweeps, tune=bool(config.get("tune", False)))
        _emit_json(out, _meta(config, seed), {"checkpoint": state.checkpoint(potential)})
        return EXIT_OK
    if what == "wigner":
        model = profile_from_json(config["model"])
        n = int(config["n"])
        _, xn = assemble_wigner(n, model, stream(seed, 1, 0))
        lam = eigvals(xn)
        _emit_csv(out, _meta(config, seed), ("index", "eigenvalue"), list(enumerate(map(float, lam))))
        return EXIT_OK
    raise ValueError(f"unknown sample target {what!r}")


def cmd_calibrate(config: dict, seed: int, out, fmt: str) -> int:
    profile = TailProfile(
        alpha=float(config["alpha"]),
        a=float(config["a"]),
        b=float(config.get("b", config["a"])),
        t0=float(config.get("t0", 2.0)),
        normalize_variance=bool(config.get("normalize_variance", False)),
    )
    rows = tail_calibration_report(
        profile,
        n_samples=int(config.get("n_samples", 200_000)),
        t_grid=config["t_grid"],
        rng=stream(seed, 5),
        role=config.get("role", "offdiagonal"),
    )
    table = [
        (r.t, "inf" if math.isinf(r.ratio) else r.ratio,
         "inf" if math.isinf(r.ci_low) else r.ci_low,
         "inf" if math.isinf(r.ci_high) else r.ci_high,
         r.n_exceed, int(r.below_onset))
        for r in rows
    ]
    _emit_csv(out, _meta(config, seed), ("t", "ratio", "ci_low", "ci_high", "n_exceed", "below_onset"), table)
    return EXIT_OK


def _verify_checks(seed: int, tamper: bool):
    """Deterministic self-checks; each returns (ok, detail)."""

    def check_low_rank_trace():
        rng = stream(seed, 31)
        for _ in range(200):
            n = int(rng.integers(2, 17))
            p = int(rng.integers(3, 7))
            g = rng.standard_normal((n, n))
            H = HermMatrix(1, (g + g.T) / 2.0)
            r = int(rng.integers(1, 3))
            c = np.zeros((n, n))
            for _ in range(r):
                i, j = rng.integers(0, n, size=2)
                c[min(i, j), max(i, j)] = rng.standard_normal() * 3.0
            C = HermMatrix(1, c)
            res = low_rank_trace_check(H, C, p)
            if not res.ok:
                return False, f"violation at n={n}, p={p}"
        return True, "200 random pairs"

    def check_entrywise_gap():
        rng = stream(seed, 32)
        worst = 0.0
        for _ in range(400):
            n = int(rng.integers(2, 13))
            alpha = float(rng.uniform(0.1, 1.9))
            g = rng.standard_normal((n, n))
            gap = entrywise_eigenvalue_gap(HermMatrix(1, (g + g.T) / 2.0), alpha)
            worst = min(worst, gap)
            if gap < -1e-9:
                return False, f"gap {gap} at alpha={alpha}"
        return True, f"min gap {worst:.3e}"

    def check_witness():
        rng = stream(seed, 33)
        for _ in range(50):
            n = int(rng.integers(2, 40))
            p = int(rng.choice([4, 6, 8]))
            s = semicircle_moment(p) + float(rng.uniform(0.0, 5.0))
            H = hollow_witness(n, s, p)
            if abs(deformed_trace_limit(H, p) - s) > 1e-10 * (1 + abs(s)):
                return False, f"witness off at n={n}, p={p}"
        return True, "50 witnesses exact"

    def check_inner_min():
        for p in (4, 6, 8):
            v = inner_phi_inf(p, 4)
            if abs(v - 1.0) > 1e-9:
                return False, f"inner minimum {v} at p={p}"
        return True, "p in {4,6,8}"

    def check_linearization_trend():
        rng = stream(seed, 34)
        from .randsrc import GaussianProfile

        meds = []
        for n in (48, 96):
            reps = [
                trace_linearization_discrepancy(n, 4, 1.0, 4, GaussianProfile(1.0, 1), rng)
                for _ in range(7)
            ]
            meds.append(float(np.median(reps)))
        ok = meds[1] < meds[0]
        return ok, f"median gap {meds[0]:.4f} -> {meds[1]:.4f}"

    def check_rate_spots():
        expected = 0.5 if not tamper else 0.75
        spec = RateSpec.for_gaussian(4, 1.0, 2)
        got = rate_value(spec, 3.0)
        if abs(got - expected) > 1e-12:
            return False, f"rate spot {got} != {expected}"
        if not math.isinf(rate_value(spec, 1.0)):
            return False, "finite below center"
        if speed_exponent(spec) != 1.5:
            return False, "speed exponent"
        return True, "gaussian p=4 spot values"

    def check_catalan():
        if [catalan(k) for k in range(6)] != [1, 1, 2, 5, 14, 42]:
            return False, "catalan sequence"
        from scipy import integrate

        val, _ = integrate.quad(lambda x: x ** 4 * np.sqrt(4 - x * x) / (2 * np.pi), -2, 2)
        if abs(val - semicircle_moment(4)) > 1e-8:
            return False, "semicircle quadrature"
        return True, "catalan + quadrature"

    return [
        ("low_rank_trace_inequality", check_low_rank_trace),
        ("entrywise_eigenvalue_inequality", check_entrywise_gap),
        ("hollow_witness_exactness", check_witness),
        ("inner_multiplier_minimum", check_inner_min),
        ("trace_linearization_trend", check_linearization_trend),
        ("rate_formula_spot_values", check_rate_spots),
        ("catalan_semicircle", check_catalan),
    ]


def cmd_verify(config: dict, seed: int, out, fmt: str) -> int:
    tamper = bool(config.get("tamper", False))
    results = []
    all_ok = True
    for name, fn in _verify_checks(seed, tamper):
        t0 = time.perf_counter()
        ok, detail = fn()
        dt = time.perf_counter() - t0
        results.append({"check": name, "pass": bool(ok), "detail": detail, "seconds": round(dt, 4)})
        all_ok = all_ok and ok
    _emit_json(out, _meta(config, seed), {"checks": results, "all_pass": all_ok})
    return EXIT_OK if all_ok else 1


# ---------------------------------------------------------------------------


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rmtldp",
        description="simulation lab for large deviations of random-matrix trace moments",
    )
    parser.add_argument("--command", required=True,
                        choices=["sample", "rate", "varopt", "deviations", "verify", "calibrate"])
    parser.add_argument("--config", help="path to a JSON configuration file")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", default=None, help="output path (default stdout)")
    parser.add_argument("--format", default="csv", choices=["csv", "json"])
    args = parser.parse_args(argv)

    config = {}
    if args.config:
        try:
            with open(args.config) as fh:
                config = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            sys.stderr.write(f"cannot read config: {exc}\n")
            return EXIT_INVALID

    threads = max(1, int(os.environ.get("RMTLDP_THREADS", "1")))
    try:
        if args.command == "rate":
            return cmd_rate(config, args.seed, args.out, args.format)
        if args.command == "varopt":
            return cmd_varopt(config, args.seed, args.out, args.format)
        if args.command == "deviations":
            return cmd_deviations(config, args.seed, args.out, args.format, threads)
        if args.command == "sample":
            return cmd_sample(config, args.seed, args.out, args.format)
        if args.command == "calibrate":
            return cmd_calibrate(config, args.seed, args.out, args.format)
        if args.command == "verify":
            return cmd_verify(config, args.seed, args.out, args.format)
    except (KeyError, ValueError, TypeError) as exc:
        sys.stderr.write(f"invalid input: {exc}\n")
        return EXIT_INVALID
    return EXIT_INVALID


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
