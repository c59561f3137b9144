"""Command-line front end: simulate, check-gains, compare.

Exit codes: 0 success, 1 configuration or gain error, 2 controller failure
during the run.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import sys
from dataclasses import dataclass
from typing import TextIO

import numpy as np

from . import __version__
from .config import BUILTINS, RunConfig, load_config
from .control_laws import AttitudeController, PDController, PositionController
from .errors import GainError, SurfquadError
from .metrics import Telemetry, delta_f_rms_series, f_rms_series
from .reference import Mode
from .simulation import simulate
from .stability_analysis import StabilityReport, check_attitude_gains, stability_report

log = logging.getLogger("surfquad")

CSV_VERSION = 1
EXIT_OK, EXIT_CONFIG, EXIT_FAILURE = 0, 1, 2


def _vec_cols(name: str, n: int = 3) -> list[str]:
    return [f"{name}_{i + 1}" for i in range(n)]


# (column group, telemetry field, description)
_GROUPS = [
    (["t"], "t", "time [s]"),
    (["mode"], "mode", "active mode: 0 attitude, 1 position"),
    (["phase"], "phase", "scenario phase index"),
    (_vec_cols("x"), "x", "position, inertial [m]"),
    (_vec_cols("v"), "v", "velocity, inertial [m/s]"),
    ([f"R_{i}{j}" for i in range(1, 4) for j in range(1, 4)], "R", "attitude matrix, row-major"),
    (_vec_cols("w"), "w", "angular velocity, body [rad/s]"),
    (["psi"], "psi", "attitude error function [-]"),
    (_vec_cols("e_R"), "e_R", "attitude error vector [-]"),
    (_vec_cols("e_omega"), "e_omega", "angular velocity error, body [rad/s]"),
    (_vec_cols("e_x"), "e_x", "position error [m] (nan in attitude mode)"),
    (_vec_cols("e_v"), "e_v", "velocity error [m/s] (nan in attitude mode)"),
    (_vec_cols("s_R"), "s_R", "attitude surface k_R e_R + k_omega e_omega"),
    (_vec_cols("s_x"), "s_x", "position surface k_x e_x + k_v e_v"),
    (["f"], "f", "applied total thrust [N]"),
    (_vec_cols("u"), "u", "applied body moment [N m]"),
    (["f_cmd"], "f_cmd", "commanded total thrust [N]"),
    (_vec_cols("u_cmd"), "u_cmd", "commanded body moment [N m]"),
    (_vec_cols("F", 4), "F", "motor thrusts after clamping [N]"),
    (_vec_cols("sat", 4), "saturated", "motor clamp flags (1 = clamped)"),
    (["f_rms"], "f_rms", "running RMS of motor thrusts [N] (nan at the first row)"),
]
CSV_COLUMNS = [c for cols, _, _ in _GROUPS for c in cols]


def _fmt(x) -> str:
    return repr(float(x))


def telemetry_columns(tel: Telemetry) -> np.ndarray:
    """Telemetry as a 2-D float array in :data:`CSV_COLUMNS` order."""
    n = len(tel)
    parts = []
    for cols, name, _ in _GROUPS:
        val = f_rms_series(tel) if name == "f_rms" else getattr(tel, name)
        parts.append(np.asarray(val, float).reshape(n, len(cols)))
    return np.hstack(parts) if n else np.empty((0, len(CSV_COLUMNS)))


def write_telemetry_csv(tel: Telemetry, stream: TextIO) -> None:
    """Header comment block, one header row, then one row per sample."""
    stream.write(f"# surfquad telemetry v{CSV_VERSION}\n")
    stream.write(f"# scenario: {tel.meta.get('scenario', '')}\n")
    for cols, _, desc in _GROUPS:
        label = cols[0] if len(cols) == 1 else f"{cols[0]}..{cols[-1]}"
        stream.write(f"# {label}: {desc}\n")
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    ints = {"mode", "phase", "sat_1", "sat_2", "sat_3", "sat_4"}
    int_idx = [i for i, c in enumerate(CSV_COLUMNS) if c in ints]
    for row in telemetry_columns(tel):
        out = [_fmt(v) for v in row]
        for i in int_idx:
            out[i] = str(int(row[i]))
        w.writerow(out)


# -- runs --------------------------------------------------------------------


def build_controllers(cfg: RunConfig):
    p = cfg.params
    if cfg.controller == "pd":
        pd = PDController(p, kind=cfg.kind)
        return {Mode.ATTITUDE: pd.attitude, Mode.POSITION: pd}
    return {
        Mode.ATTITUDE: AttitudeController(cfg.att_gains, p, cfg.kind, thrust=cfg.attitude_thrust),
        Mode.POSITION: PositionController(cfg.pos_gains, p, cfg.kind),
    }


def run(cfg: RunConfig) -> Telemetry:
    return simulate(cfg.scenario, build_controllers(cfg), cfg.params, cfg.initial, dt=cfg.dt,
                    horizon=cfg.horizon, wind=cfg.wind, limit=cfg.limit)


def _last_finite(a: np.ndarray) -> float:
    ok = np.flatnonzero(np.isfinite(a))
    return float(a[ok[-1]]) if ok.size else float("nan")


def summarize(tel: Telemetry, cfg: RunConfig) -> dict:
    ex, ev = tel.norm("e_x"), tel.norm("e_v")
    fr = f_rms_series(tel)
    return {
        "scenario": tel.meta.get("scenario", ""),
        "kind": cfg.kind.value,
        "controller": cfg.controller,
        "samples": len(tel),
        "t_end": float(tel.t[-1]) if len(tel) else float("nan"),
        "status": "ok" if tel.failure is None else "failed",
        "failure": tel.failure or "",
        "failure_time": "" if tel.failure_time is None else float(tel.failure_time),
        "final_e_x": _last_finite(ex),
        "final_e_v": _last_finite(ev),
        "final_psi": _last_finite(tel.psi),
        "max_psi": float(np.nanmax(tel.psi)) if np.isfinite(tel.psi).any() else float("nan"),
        "max_e_x": float(np.nanmax(ex)) if np.isfinite(ex).any() else float("nan"),
        "f_rms": float(fr[-1]) if len(fr) > 1 else float("nan"),
        "saturation_steps": int(tel.saturated.any(axis=1).sum()),
    }


def _kv(d: dict) -> str:
    return "".join(f"{k}={_fmt(v) if isinstance(v, float) else v}\n" for k, v in d.items())


@dataclass
class SimulateResult:
    code: int
    telemetry: Telemetry | None
    summary: dict


def cmd_simulate(cfg: RunConfig, csv_stream: TextIO | None = None) -> SimulateResult:
    """Run the configured scenario, optionally writing telemetry CSV to ``csv_stream``."""
    try:
        tel = run(cfg)
    except GainError as exc:
        return SimulateResult(EXIT_CONFIG, None, {"status": "config_error", "error": str(exc)})
    if csv_stream is not None:
        write_telemetry_csv(tel, csv_stream)
    summary = summarize(tel, cfg)
    return SimulateResult(EXIT_OK if tel.failure is None else EXIT_FAILURE, tel, summary)


def cmd_check_gains(cfg: RunConfig) -> tuple[int, StabilityReport]:
    """Stability report for the configured gains; exit code 1 when the attitude inequality fails."""
    B = cfg.B
    rep = stability_report(cfg.pos_gains, cfg.kind, m=cfg.params.m, B=B if B is not None else 1.01 * cfg.params.hover_thrust,
                           theta=cfg.theta, psi0=cfg.psi0, e_omega0=cfg.e_omega0, variant=cfg.variant,
                           e_bound=cfg.e_bound)
    if B is None:
        rep.notes.append("B defaulted to 1.01 m g (no reference acceleration bound supplied)")
    return (EXIT_OK if check_attitude_gains(cfg.att_gains) else EXIT_CONFIG), rep


def gain_violation_message(cfg: RunConfig) -> str:
    g = cfg.att_gains
    return (f"attitude gain condition violated: eta > k_R/k_omega^2 requires "
            f"{g.eta!r} > {g.k_R / g.k_omega**2!r}")


COMPARE_COLUMNS = ["t", "f_rms_a", "f_rms_b", "delta_f_rms", "psi_a", "psi_b", "e_x_a", "e_x_b"]


def _iae(tel: Telemetry) -> tuple[float, float]:
    """Integrated absolute attitude and position errors (trapezoid; NaN samples contribute zero)."""
    dt = tel.dt

    def trap(y):
        y = np.nan_to_num(y, nan=0.0)
        return float(dt * (y.sum() - 0.5 * (y[0] + y[-1]))) if len(y) > 1 else 0.0

    return trap(tel.psi), trap(tel.norm("e_x"))


def verdict(d_final: float, err_a: tuple, err_b: tuple, all_zero: bool) -> str:
    """Dominance verdict: lower error with no more effort beats the other run."""
    if all_zero and err_a == err_b:
        return "tie"
    a_ok = all(x <= y for x, y in zip(err_a, err_b))
    b_ok = all(y <= x for x, y in zip(err_a, err_b))
    if a_ok and d_final <= 0 and (d_final < 0 or err_a != err_b):
        return "a_dominates"
    if b_ok and d_final >= 0 and (d_final > 0 or err_a != err_b):
        return "b_dominates"
    return "inconclusive"


def cmd_compare(cfg_a: RunConfig, cfg_b: RunConfig, csv_stream: TextIO | None = None) -> tuple[int, dict]:
    """Run two configurations on the same grid and compare control effort and errors."""
    ra, rb = cmd_simulate(cfg_a), cmd_simulate(cfg_b)
    for tag, r in (("a", ra), ("b", rb)):
        if r.code == EXIT_CONFIG:
            return EXIT_CONFIG, {"status": "config_error", "run": tag, "error": r.summary.get("error", "")}
        if r.code == EXIT_FAILURE:
            return EXIT_FAILURE, {"status": "failed", "run": tag, "failure": r.summary["failure"],
                                  "failure_time": r.summary["failure_time"]}
    ta, tb = ra.telemetry, rb.telemetry
    delta = delta_f_rms_series(ta, tb)
    ia, ib = _iae(ta), _iae(tb)
    d_final = float(delta[-1])
    result = {
        "status": "ok",
        "delta_f_rms_final": d_final,
        "f_rms_a": ra.summary["f_rms"],
        "f_rms_b": rb.summary["f_rms"],
        "iae_psi_a": ia[0], "iae_psi_b": ib[0],
        "iae_e_x_a": ia[1], "iae_e_x_b": ib[1],
        "final_psi_a": ra.summary["final_psi"], "final_psi_b": rb.summary["final_psi"],
        "final_e_x_a": ra.summary["final_e_x"], "final_e_x_b": rb.summary["final_e_x"],
        "verdict": verdict(d_final, ia, ib, bool(np.all(np.nan_to_num(delta) == 0))),
    }
    if csv_stream is not None:
        csv_stream.write("# surfquad comparison v1: run a minus run b\n")
        csv_stream.write("# f_rms_*: running RMS motor thrust [N]; delta_f_rms = f_rms_a - f_rms_b\n")
        csv_stream.write("# psi_*: attitude error function; e_x_*: position error norm [m] (nan in attitude mode)\n")
        w = csv.writer(csv_stream, lineterminator="\n")
        w.writerow(COMPARE_COLUMNS)
        cols = np.column_stack([ta.t, f_rms_series(ta), f_rms_series(tb), delta, ta.psi, tb.psi,
                                ta.norm("e_x"), tb.norm("e_x")])
        for row in cols:
            w.writerow([_fmt(v) for v in row])
    return EXIT_OK, result


# -- argument handling ---------------------------------------------------------


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", "-c", help="INI configuration file")
    p.add_argument("--scenario", "-s", help=f"builtin ({', '.join(BUILTINS)}) or file with [phase.N] sections")
    p.add_argument("--kind", choices=["one", "two"], help="attitude error set")
    p.add_argument("--dt", type=float, help="integration step [s]")
    p.add_argument("--horizon", type=float, help="end time [s]")
    p.add_argument("--k-R", dest="k_R", type=float)
    p.add_argument("--k-omega", dest="k_omega", type=float)
    p.add_argument("--eta", type=float)
    p.add_argument("--k-x", dest="k_x", type=float)
    p.add_argument("--k-v", dest="k_v", type=float)
    p.add_argument("--a", dest="a", type=float)
    p.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                   help="override any configuration key")


def _overrides(args) -> dict:
    ov = {
        "run.kind": args.kind, "run.dt": args.dt, "run.horizon": args.horizon,
        "attitude_gains.k_R": args.k_R, "attitude_gains.k_omega": args.k_omega, "attitude_gains.eta": args.eta,
        "position_gains.k_x": args.k_x, "position_gains.k_v": args.k_v, "position_gains.a": args.a,
    }
    for item in args.set:
        key, sep, val = item.partition("=")
        if not sep or "." not in key:
            raise SystemExit(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        ov[key.strip()] = val.strip()
    for key in ("B", "theta", "psi0"):
        if getattr(args, key, None) is not None:
            ov[f"stability.{key}"] = getattr(args, key)
    if getattr(args, "saturation", None) is not None:
        ov["run.saturation"] = "true" if args.saturation else "false"
    if getattr(args, "controller", None) is not None:
        ov["run.controller"] = args.controller
    if getattr(args, "seed", None) is not None:
        ov["run.seed"] = args.seed
    return ov


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="surfquad", description="Surface-based SE(3) quadrotor controller and simulator")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("simulate", help="run a scenario and write telemetry CSV")
    _common(sp)
    sp.add_argument("--output", "-o", help="telemetry CSV path ('-' for stdout; default from config or stdout)")
    sp.add_argument("--summary", help="write the summary to this file instead of the console")
    sp.add_argument("--saturation", action=argparse.BooleanOptionalAction, default=None)
    sp.add_argument("--controller", choices=["surface", "pd"])
    sp.add_argument("--seed", type=int)

    cp = sub.add_parser("check-gains", help="evaluate gain conditions and region-of-attraction bounds")
    _common(cp)
    cp.add_argument("--B", type=float, help="bound on |m g E3 + m acc_d| [N]")
    cp.add_argument("--theta", type=float, help="attitude-error norm bound for the coupling condition")
    cp.add_argument("--psi0", type=float, help="initial attitude error for the attitude-mode bounds")

    mp = sub.add_parser("compare", help="compare two configurations (a minus b)")
    mp.add_argument("config_a")
    mp.add_argument("config_b")
    mp.add_argument("--scenario", "-s", help="scenario applied to both runs")
    mp.add_argument("--output", "-o", help="comparison CSV path ('-' for stdout)")
    return ap


def _open_out(path: str | None):
    if path is None or path == "-":
        return sys.stdout, False
    return open(path, "w", newline=""), True


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "compare":
            cfg_a = load_config(args.config_a, args.scenario)
            cfg_b = load_config(args.config_b, args.scenario)
        else:
            cfg = load_config(args.config, args.scenario, _overrides(args))
    except SurfquadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    if args.command == "check-gains":
        code, rep = cmd_check_gains(cfg)
        sys.stdout.write(rep.to_text())
        if code != EXIT_OK:
            print(f"error: {gain_violation_message(cfg)}", file=sys.stderr)
        return code

    if args.command == "simulate":
        if not check_attitude_gains(cfg.att_gains) and cfg.controller == "surface":
            print(f"error: {gain_violation_message(cfg)}", file=sys.stderr)
            return EXIT_CONFIG
        out_path = args.output if args.output is not None else cfg.output
        stream, close = _open_out(out_path)
        buf = io.StringIO()
        try:
            res = cmd_simulate(cfg, buf)
            stream.write(buf.getvalue())
        finally:
            if close:
                stream.close()
        text = _kv(res.summary)
        if args.summary:
            with open(args.summary, "w") as fh:
                fh.write(text)
        else:
            (sys.stderr if stream is sys.stdout else sys.stdout).write(text)
        if res.code == EXIT_FAILURE:
            print(f"error: controller failed at t={res.summary['failure_time']!r}: {res.summary['failure']}",
                  file=sys.stderr)
        return res.code

    stream, close = _open_out(args.output)
    buf = io.StringIO()
    try:
        code, result = cmd_compare(cfg_a, cfg_b, buf)
        stream.write(buf.getvalue())
    except SurfquadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    finally:
        if close:
            stream.close()
    (sys.stderr if stream is sys.stdout else sys.stdout).write(_kv(result))
    return code


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
