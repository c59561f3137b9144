"""Run configuration: builtin scenarios plus INI-style overrides."""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .attitude_errors import ErrorSetKind
from .control_laws import (
    SOFT_ATTITUDE,
    SOFT_POSITION,
    TUNED_ATTITUDE,
    TUNED_POSITION,
    AttitudeGains,
    PositionGains,
)
from .errors import ConfigError
from .plant import GustProfile, QuadParams, RigidBodyState, WindModel, WindTable
from .reference import (
    E1,
    FlightScenario,
    Mode,
    Phase,
    attitude_step,
    pitch_sp8,
    position_hold,
    position_sp8,
    aggressive_scenario,
)
from .so3 import exp_so3, is_rotation, rot_axis

BUILTINS = ("hover", "step90", "cmstep", "aggressive")


@dataclass
class RunConfig:
    params: QuadParams = field(default_factory=QuadParams)
    att_gains: AttitudeGains = TUNED_ATTITUDE
    pos_gains: PositionGains = TUNED_POSITION
    kind: ErrorSetKind = ErrorSetKind.SET_ONE
    scenario: FlightScenario | None = None
    initial: RigidBodyState = field(default_factory=RigidBodyState.at_rest)
    wind: WindModel | None = None
    dt: float = 1e-3
    horizon: float | None = None
    output: str | None = None
    seed: int = 0
    limit: bool = False
    attitude_thrust: float | None = None
    controller: str = "surface"
    # stability query
    B: float | None = None
    theta: float | None = None
    psi0: float = 1.0
    e_omega0: tuple[float, float, float] = (0.0, 0.0, 0.0)
    variant: str = "no_xv"
    e_bound: float = 0.0

    def __post_init__(self):
        if not self.dt > 0:
            raise ConfigError("dt must be positive")
        if self.horizon is not None and not self.horizon > 0:
            raise ConfigError("horizon must be positive")

    @property
    def run_horizon(self) -> float:
        return self.scenario.horizon if self.horizon is None else self.horizon


def builtin(name: str) -> RunConfig:
    """Configuration of a named builtin scenario."""
    if name == "hover":
        sc = FlightScenario((Phase(1.0, Mode.POSITION, position_hold([0.0, 0.0, 0.0]), "hold"),), name=name)
        return RunConfig(scenario=sc)
    if name == "step90":
        sc = FlightScenario((Phase(2.0, Mode.ATTITUDE, attitude_step(rot_axis(1, np.pi / 2)), "step"),), name=name)
        return RunConfig(scenario=sc)
    if name == "cmstep":
        sc = FlightScenario((Phase(10.0, Mode.POSITION, position_hold([0.01, 0.01, 0.01]), "hold"),), name=name)
        return RunConfig(scenario=sc)
    if name == "aggressive":
        return RunConfig(att_gains=SOFT_ATTITUDE, pos_gains=SOFT_POSITION, kind=ErrorSetKind.SET_TWO,
                         scenario=aggressive_scenario(), initial=RigidBodyState.at_rest([0.0, 0.0, 5.0]), limit=True)
    raise ConfigError(f"unknown builtin scenario {name!r}; choose from {', '.join(BUILTINS)}")


# -- value parsing ------------------------------------------------------------


def _vec(text: str, n: int | None = 3, key: str = "") -> np.ndarray:
    try:
        vals = np.array([float(tok) for tok in re.split(r"[,\s;]+", text.strip().strip("[]")) if tok], float)
    except ValueError as exc:
        raise ConfigError(f"{key}: cannot parse numbers from {text!r}") from exc
    if n is not None and vals.size != n:
        raise ConfigError(f"{key}: expected {n} numbers, got {vals.size}")
    return vals


def _float(sec: configparser.SectionProxy, key: str, default=None):
    if key not in sec:
        return default
    try:
        return float(sec[key])
    except ValueError as exc:
        raise ConfigError(f"[{sec.name}] {key}: not a number: {sec[key]!r}") from exc


def _matrix(text: str, key: str) -> np.ndarray:
    vals = _vec(text, None, key)
    if vals.size == 3:
        return np.diag(vals)
    if vals.size == 9:
        return vals.reshape(3, 3)
    raise ConfigError(f"{key}: expected 3 (diagonal) or 9 numbers")


def _rotation(text: str, key: str) -> np.ndarray:
    """Rotation given as 9 row-major entries or as a 3-vector rotation (axis times angle, rad)."""
    vals = _vec(text, None, key)
    if vals.size == 3:
        return exp_so3(vals)
    if vals.size == 9:
        R = vals.reshape(3, 3)
        if not is_rotation(R):
            raise ConfigError(f"{key}: matrix is not a rotation")
        return R
    raise ConfigError(f"{key}: expected 3 or 9 numbers")


def _bool(sec, key, default):
    if key not in sec:
        return default
    try:
        return sec.getboolean(key)
    except ValueError as exc:
        raise ConfigError(f"[{sec.name}] {key}: not a boolean") from exc


# -- phases -------------------------------------------------------------------


def _phase(sec: configparser.SectionProxy) -> Phase:
    t_end = _float(sec, "t_end")
    if t_end is None:
        raise ConfigError(f"[{sec.name}] needs t_end")
    kind = sec.get("type", "hold").strip().lower()
    heading = _vec(sec["heading"], 3, "heading") if "heading" in sec else E1
    label = sec.get("label", kind)
    if kind in ("sp8", "hold"):
        target = _vec(sec.get("target", "0 0 0"), 3, "target")
        if kind == "hold":
            return Phase(t_end, Mode.POSITION, position_hold(target, heading), label)
        velocity = _vec(sec.get("velocity", "0 0 0"), 3, "velocity")
        return Phase(t_end, Mode.POSITION, position_sp8(target, velocity, heading), label)
    if kind == "pitch":
        return Phase(t_end, Mode.ATTITUDE, pitch_sp8(float(_float(sec, "angle", np.pi))), label)
    if kind == "step":
        return Phase(t_end, Mode.ATTITUDE, attitude_step(_rotation(sec.get("R", "0 0 0"), "R")), label)
    raise ConfigError(f"[{sec.name}] unknown phase type {kind!r} (sp8, hold, pitch, step)")


def _phases(cp: configparser.ConfigParser) -> list[Phase]:
    secs = [s for s in cp.sections() if s.startswith("phase")]

    def order(name):
        m = re.search(r"(\d+)$", name)
        if not m:
            raise ConfigError(f"phase section {name!r} needs a numeric suffix, e.g. [phase.1]")
        return int(m.group(1))

    phases = [_phase(cp[s]) for s in sorted(secs, key=order)]
    for a, b in zip(phases, phases[1:]):
        if not b.t_end > a.t_end:
            raise ConfigError("phase end times must increase")
    return phases


# -- loading ------------------------------------------------------------------


def _parser() -> configparser.ConfigParser:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"), interpolation=None)
    cp.optionxform = str
    return cp


def _read(path: str | Path) -> configparser.ConfigParser:
    p = Path(path)
    if not p.is_file():
        raise ConfigError(f"config file not found: {p}")
    cp = _parser()
    try:
        cp.read(p)
    except configparser.Error as exc:
        raise ConfigError(f"{p}: {exc}") from exc
    return cp


def load_config(path: str | Path | None = None, scenario: str | None = None,
                overrides: dict | None = None) -> RunConfig:
    """Build a run configuration.

    The scenario (builtin name, or a file holding ``[phase.N]`` sections) is
    taken from ``scenario``, else from ``[run] scenario``, else from phase
    sections in the config file itself.  Builtin defaults are then overridden
    by the config file and finally by ``overrides`` (flat ``section.key``
    names, e.g. ``run.dt``).
    """
    cp = _read(path) if path is not None else _parser()
    for key, val in (overrides or {}).items():
        if val is None:
            continue
        sec, _, opt = key.partition(".")
        if not cp.has_section(sec):
            cp.add_section(sec)
        cp[sec][opt] = str(val)
    run = cp["run"] if cp.has_section("run") else cp[cp.default_section]
    name = scenario or run.get("scenario")
    base_dir = Path(path).parent if path is not None else Path(".")

    if name in BUILTINS:
        cfg = builtin(name)
    elif name:
        spath = Path(name) if Path(name).is_absolute() else base_dir / name
        if not spath.is_file():
            raise ConfigError(f"scenario {name!r} is neither a builtin ({', '.join(BUILTINS)}) nor a file")
        phases = _phases(_read(spath))
        if not phases:
            raise ConfigError(f"{spath}: no [phase.N] sections")
        cfg = RunConfig(scenario=FlightScenario(tuple(phases), name=spath.stem))
    else:
        phases = _phases(cp)
        if not phases:
            raise ConfigError("no scenario given: set [run] scenario or add [phase.N] sections")
        cfg = RunConfig(scenario=FlightScenario(tuple(phases), name="custom"))
    return _apply(cfg, cp, base_dir)


def _apply(cfg: RunConfig, cp: configparser.ConfigParser, base_dir: Path) -> RunConfig:
    upd = {}
    if cp.has_section("run"):
        s = cp["run"]
        for key in ("dt", "horizon"):
            if key in s:
                upd[key] = _float(s, key)
        if "kind" in s:
            try:
                upd["kind"] = ErrorSetKind.parse(s["kind"])
            except ValueError as exc:
                raise ConfigError(str(exc)) from exc
        if "output" in s:
            upd["output"] = s["output"]
        if "seed" in s:
            upd["seed"] = int(s["seed"])
        upd["limit"] = _bool(s, "saturation", cfg.limit)
        if "attitude_thrust" in s:
            upd["attitude_thrust"] = _float(s, "attitude_thrust")
        if "controller" in s:
            ctl = s["controller"].strip().lower()
            if ctl not in ("surface", "pd"):
                raise ConfigError(f"controller must be 'surface' or 'pd', got {ctl!r}")
            upd["controller"] = ctl
    if cp.has_section("quad"):
        s = cp["quad"]
        kw = {k: _float(s, k) for k in ("m", "d", "b_T", "g", "f_min", "f_max") if k in s}
        if "J" in s:
            kw["J"] = _matrix(s["J"], "J")
        try:
            upd["params"] = replace(cfg.params, **kw)
        except ValueError as exc:
            raise ConfigError(f"[quad] {exc}") from exc
    att = cfg.att_gains
    if cp.has_section("attitude_gains"):
        s = cp["attitude_gains"]
        try:
            att = AttitudeGains(_float(s, "k_R", att.k_R), _float(s, "k_omega", att.k_omega), _float(s, "eta", att.eta))
        except ValueError as exc:
            raise ConfigError(f"[attitude_gains] {exc}") from exc
    upd["att_gains"] = att
    pg = cfg.pos_gains
    s = cp["position_gains"] if cp.has_section("position_gains") else {}
    try:
        upd["pos_gains"] = PositionGains(
            _float(s, "k_x", pg.k_x) if s else pg.k_x, _float(s, "k_v", pg.k_v) if s else pg.k_v,
            _float(s, "a", pg.a) if s else pg.a, att)
    except ValueError as exc:
        raise ConfigError(f"[position_gains] {exc}") from exc
    if cp.has_section("initial"):
        s = cp["initial"]
        st = cfg.initial
        upd["initial"] = RigidBodyState(
            x=_vec(s["x"], 3, "x") if "x" in s else st.x, v=_vec(s["v"], 3, "v") if "v" in s else st.v,
            R=_rotation(s["R"], "R") if "R" in s else st.R, w=_vec(s["w"], 3, "w") if "w" in s else st.w)
    if cp.has_section("wind"):
        upd["wind"] = _wind(cp["wind"], base_dir, upd.get("seed", cfg.seed))
    if cp.has_section("stability"):
        s = cp["stability"]
        for key in ("B", "theta", "psi0", "e_bound"):
            if key in s:
                upd[key] = _float(s, key)
        if "e_omega0" in s:
            upd["e_omega0"] = tuple(_vec(s["e_omega0"], 3, "e_omega0"))
        if "variant" in s:
            upd["variant"] = s["variant"]
    return replace(cfg, **upd)


def _wind(s: configparser.SectionProxy, base_dir: Path, seed: int) -> WindModel | None:
    prof = s.get("profile", "none").strip()
    if prof.lower() == "none":
        return None
    if prof.lower() == "gust":
        profile = GustProfile(
            steady=tuple(_vec(s.get("steady", "0 0 0"), 3, "steady")), amplitude=_float(s, "amplitude", 0.0),
            direction=tuple(_vec(s.get("direction", "1 0 0"), 3, "direction")), t_start=_float(s, "t_start", 0.0),
            duration=_float(s, "duration", 1.0), turbulence=_float(s, "turbulence", 0.0),
            seed=int(s.get("seed", seed)))
    else:
        path = Path(prof) if Path(prof).is_absolute() else base_dir / prof
        if not path.is_file():
            raise ConfigError(f"wind profile not found: {path}")
        try:
            profile = WindTable.from_csv(path)
        except ValueError as exc:
            raise ConfigError(f"wind profile {path}: {exc}") from exc
    kw = {}
    for key in ("C_D", "A_D"):
        if key in s:
            kw[key] = tuple(float(c) for c in _vec(s[key], 3, key))
    for key in ("rho", "torque_arm"):
        if key in s:
            kw[key] = _float(s, key)
    try:
        return WindModel(profile, **kw)
    except ValueError as exc:
        raise ConfigError(f"[wind] {exc}") from exc
