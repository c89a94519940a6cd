"""Run configuration: TOML parsing, validation, and canonical echo.

A config file has top-level ``seed``, ``output_dir`` and the sections
[physics], [space], [time], [initdata], [iterate], [heat], [oracle].
Unknown keys are rejected so that typos fail loudly before any output
is written.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError
from .fields import PhysicsParams
from .grid import SpaceGrid, TimeGrid
from .heat import HeatSolveConfig
from .initdata import InitialDataConfig, PerturbationMode
from .iterate import IterateConfig
from .oracle import OracleConfig

__all__ = ["OracleSettings", "RunConfig", "load_config", "parse_config", "config_echo"]


@dataclass(frozen=True)
class OracleSettings:
    enabled: bool = False
    dt_oracle: float | None = None
    renormalize: bool = True

    def to_oracle_config(self) -> OracleConfig:
        return OracleConfig(dt_oracle=self.dt_oracle, renormalize=self.renormalize)


@dataclass(frozen=True)
class RunConfig:
    physics: PhysicsParams = PhysicsParams()
    space: SpaceGrid = SpaceGrid(2, 64)
    time: TimeGrid = TimeGrid(0.5, 64)
    initdata: InitialDataConfig = InitialDataConfig()
    iterate: IterateConfig = IterateConfig()
    heat: HeatSolveConfig = HeatSolveConfig(scheme="stencil-collocation")
    oracle: OracleSettings = OracleSettings()
    output_dir: str = "runs/out"
    seed: int = 0
    save_iterates: bool = False
    x0_index: tuple[int, ...] | None = None


def _take(section: dict, key: str, default):
    return section.pop(key, default)


def _no_leftovers(section: dict, where: str):
    if section:
        raise ConfigError(f"unknown keys in [{where}]: {sorted(section)}")


def parse_config(doc: dict) -> RunConfig:
    doc = dict(doc)
    try:
        seed = int(_take(doc, "seed", 0))
        output_dir = str(_take(doc, "output_dir", "runs/out"))
        save_iterates = bool(_take(doc, "save_iterates", False))
        x0 = _take(doc, "x0_index", None)
        x0_index = tuple(int(i) for i in x0) if x0 is not None else None

        sec = dict(_take(doc, "physics", {}))
        physics = PhysicsParams(
            alpha=float(_take(sec, "alpha", 1.0)), c_e=float(_take(sec, "c_e", 1.0))
        )
        _no_leftovers(sec, "physics")

        sec = dict(_take(doc, "space", {}))
        space = SpaceGrid(
            dimension=int(_take(sec, "dimension", 2)),
            n_per_axis=int(_take(sec, "n_per_axis", 64)),
        )
        _no_leftovers(sec, "space")

        sec = dict(_take(doc, "time", {}))
        time_grid = TimeGrid(
            t_final=float(_take(sec, "t_final", 0.5)), m_steps=int(_take(sec, "m_steps", 64))
        )
        _no_leftovers(sec, "time")

        sec = dict(_take(doc, "initdata", {}))
        raw_modes = _take(sec, "modes", None)
        if raw_modes is None:
            modes: tuple[PerturbationMode, ...] = (
                PerturbationMode(k=(1,) + (0,) * (space.dimension - 1), component=0),
            )
        else:
            parsed = []
            for entry in raw_modes:
                entry = dict(entry)
                parsed.append(
                    PerturbationMode(
                        k=tuple(int(i) for i in _take(entry, "k", ())),
                        component=int(_take(entry, "component", 0)),
                        amplitude=float(_take(entry, "amplitude", 1.0)),
                    )
                )
                _no_leftovers(entry, "initdata.modes")
            modes = tuple(parsed)
        initdata = InitialDataConfig(
            base_direction=tuple(float(x) for x in _take(sec, "base_direction", (0.0, 0.0, 1.0))),
            epsilon=float(_take(sec, "epsilon", 0.02)),
            modes=modes,
            random_modes=int(_take(sec, "random_modes", 0)),
            seed=int(_take(sec, "seed", seed)),
        )
        _no_leftovers(sec, "initdata")

        sec = dict(_take(doc, "iterate", {}))
        iterate = IterateConfig(
            tol=float(_take(sec, "tol", 1e-8)),
            max_iter=int(_take(sec, "max_iter", 50)),
            diverge_window=int(_take(sec, "diverge_window", 3)),
            k=int(_take(sec, "k", 3)),
        )
        _no_leftovers(sec, "iterate")

        sec = dict(_take(doc, "heat", {}))
        # collocation is the iteration's natural solver (see llgiter.heat);
        # implicit-euler / crank-nicolson remain selectable for comparison
        heat = HeatSolveConfig(scheme=str(_take(sec, "scheme", "stencil-collocation")))
        _no_leftovers(sec, "heat")

        sec = dict(_take(doc, "oracle", {}))
        raw_dt = _take(sec, "dt_oracle", 0.0)
        oracle = OracleSettings(
            enabled=bool(_take(sec, "enabled", False)),
            dt_oracle=None if float(raw_dt) == 0.0 else float(raw_dt),
            renormalize=bool(_take(sec, "renormalize", True)),
        )
        _no_leftovers(sec, "oracle")

        _no_leftovers(doc, "top level")
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc

    return RunConfig(
        physics=physics,
        space=space,
        time=time_grid,
        initdata=initdata,
        iterate=iterate,
        heat=heat,
        oracle=oracle,
        output_dir=output_dir,
        seed=seed,
        save_iterates=save_iterates,
        x0_index=x0_index,
    )


def load_config(path) -> RunConfig:
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(doc)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, (tuple, list)):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    raise TypeError(f"cannot format {value!r}")


def config_echo(cfg: RunConfig) -> str:
    """Canonical TOML text reproducing the parsed configuration."""
    lines = [
        f"seed = {_fmt(cfg.seed)}",
        f"output_dir = {_fmt(cfg.output_dir)}",
        f"save_iterates = {_fmt(cfg.save_iterates)}",
    ]
    if cfg.x0_index is not None:
        lines.append(f"x0_index = {_fmt(cfg.x0_index)}")
    lines += [
        "",
        "[physics]",
        f"alpha = {_fmt(cfg.physics.alpha)}",
        f"c_e = {_fmt(cfg.physics.c_e)}",
        "",
        "[space]",
        f"dimension = {_fmt(cfg.space.dimension)}",
        f"n_per_axis = {_fmt(cfg.space.n_per_axis)}",
        "",
        "[time]",
        f"t_final = {_fmt(cfg.time.t_final)}",
        f"m_steps = {_fmt(cfg.time.m_steps)}",
        "",
        "[initdata]",
        f"base_direction = {_fmt(cfg.initdata.base_direction)}",
        f"epsilon = {_fmt(cfg.initdata.epsilon)}",
        f"random_modes = {_fmt(cfg.initdata.random_modes)}",
        f"seed = {_fmt(cfg.initdata.seed)}",
    ]
    for mode in cfg.initdata.modes:
        lines += [
            "",
            "[[initdata.modes]]",
            f"k = {_fmt(mode.k)}",
            f"component = {_fmt(mode.component)}",
            f"amplitude = {_fmt(mode.amplitude)}",
        ]
    lines += [
        "",
        "[iterate]",
        f"tol = {_fmt(cfg.iterate.tol)}",
        f"max_iter = {_fmt(cfg.iterate.max_iter)}",
        f"diverge_window = {_fmt(cfg.iterate.diverge_window)}",
        f"k = {_fmt(cfg.iterate.k)}",
        "",
        "[heat]",
        f"scheme = {_fmt(cfg.heat.scheme)}",
        "",
        "[oracle]",
        f"enabled = {_fmt(cfg.oracle.enabled)}",
        f"dt_oracle = {_fmt(cfg.oracle.dt_oracle if cfg.oracle.dt_oracle is not None else 0.0)}",
        f"renormalize = {_fmt(cfg.oracle.renormalize)}",
    ]
    return "\n".join(lines) + "\n"
