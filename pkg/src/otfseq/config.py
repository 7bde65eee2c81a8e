"""Experiment configuration.

Config files are flat ``key = value`` text: one assignment per line, ``#``
starts a comment, blank lines are ignored. Unknown keys are rejected so a
typo cannot silently fall back to a default. A few keys derive their
default from others (``j_max``, ``zeta``, and ``eps_d`` follow the path
count) and are resolved at parse time, so ``config_hash`` always covers
the fully resolved settings.
"""

from __future__ import annotations

import dataclasses
import hashlib
from dataclasses import dataclass

from .channel import ChannelStatistics
from .coding import CodeConfig
from .equalizer import MODES, EqualizerConfig
from .errors import ConfigError
from .grid import OtfsGrid


@dataclass(frozen=True)
class SimConfig:
    """Fully resolved settings for one experiment run."""

    mode: str = "turbo"
    m: int = 64
    n: int = 32
    cp_len: int = 16
    paths: int = 8
    l_max: int = 10
    k_max: int = 6
    fractional: bool = False
    trunc: int = 10
    generators: tuple[int, ...] = (0o5, 0o7)
    terminated: bool = True
    n_outer: int = 5
    j_max: int = 8
    max_cycles: int = 8
    eps_g: float = 1e-3
    eps_f: float = 1e-3
    eps_a: float = 1e-3
    eps_d: float = 2.0
    zeta: int = 8
    llr_clip: float = 30.0
    sigma_floor: float = 1e-12
    var_floor: float = 1e-8
    ebn0_db: tuple[float, ...] = (0.0, 2.0, 4.0, 6.0, 8.0, 10.0, 12.0)
    min_errors: int = 200
    max_frames: int = 5000
    master_seed: int = 1
    realizations: int = 100
    paths_sweep: tuple[int, ...] = (4, 8, 16)
    full_gmres: bool = True

    def grid(self) -> OtfsGrid:
        return OtfsGrid(self.m, self.n, cp_len=self.cp_len)

    def stats(self, paths: int | None = None) -> ChannelStatistics:
        return ChannelStatistics(
            self.paths if paths is None else paths,
            l_max=self.l_max,
            k_max=self.k_max,
            fractional=self.fractional,
        )

    def code(self) -> CodeConfig:
        return CodeConfig(generators=self.generators, terminated=self.terminated)

    def equalizer(self) -> EqualizerConfig:
        return EqualizerConfig(
            n_outer=self.n_outer,
            j_max=self.j_max,
            max_cycles=self.max_cycles,
            eps_g=self.eps_g,
            eps_f=self.eps_f,
            eps_a=self.eps_a,
            eps_d=self.eps_d,
            zeta=self.zeta,
            llr_clip=self.llr_clip,
            sigma_floor=self.sigma_floor,
            var_floor=self.var_floor,
        )

    @property
    def code_rate(self) -> float:
        return 1.0 if self.mode == "uncoded" else self.code().rate


def _parse_bool(raw: str) -> bool:
    low = raw.lower()
    if low in ("true", "yes", "on", "1"):
        return True
    if low in ("false", "no", "off", "0"):
        return False
    raise ValueError(f"not a boolean: {raw!r}")


def _parse_octal_tuple(raw: str) -> tuple[int, ...]:
    return tuple(int(tok.strip(), 8) for tok in raw.split(","))


def _parse_float_tuple(raw: str) -> tuple[float, ...]:
    return tuple(float(tok) for tok in raw.split(","))


def _parse_int_tuple(raw: str) -> tuple[int, ...]:
    return tuple(int(tok) for tok in raw.split(","))


_PARSERS = {
    "mode": str,
    "m": int,
    "n": int,
    "cp_len": int,
    "paths": int,
    "l_max": int,
    "k_max": int,
    "fractional": _parse_bool,
    "trunc": int,
    "generators": _parse_octal_tuple,
    "terminated": _parse_bool,
    "n_outer": int,
    "j_max": int,
    "max_cycles": int,
    "eps_g": float,
    "eps_f": float,
    "eps_a": float,
    "eps_d": float,
    "zeta": int,
    "llr_clip": float,
    "sigma_floor": float,
    "var_floor": float,
    "ebn0_db": _parse_float_tuple,
    "min_errors": int,
    "max_frames": int,
    "master_seed": int,
    "realizations": int,
    "paths_sweep": _parse_int_tuple,
    "full_gmres": _parse_bool,
}

# keys whose default follows the path count unless set explicitly
_DERIVED = ("j_max", "zeta", "eps_d")


def parse_config(text: str, overrides: dict | None = None) -> SimConfig:
    """Parse flat key-value config text into a validated SimConfig."""
    values: dict = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, raw = body.partition("=")
        key = key.strip()
        raw = raw.strip()
        if not sep or not key or not raw:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = _PARSERS[key](raw)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {exc}") from exc
    if overrides:
        values.update(overrides)
    return _resolve(values)


def load_config(path, overrides: dict | None = None) -> SimConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text, overrides)


def _resolve(values: dict) -> SimConfig:
    paths = values.get("paths", SimConfig.paths)
    mode = values.get("mode", SimConfig.mode)
    fractional = values.get("fractional", SimConfig.fractional)
    if "j_max" not in values:
        values["j_max"] = paths
    if "eps_d" not in values:
        values["eps_d"] = paths / 4
    if "zeta" not in values:
        values["zeta"] = 3 * paths if (mode == "uncoded" and fractional) else paths
    try:
        cfg = SimConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    _validate(cfg)
    return cfg


def _validate(cfg: SimConfig):
    if cfg.mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {cfg.mode!r}")
    if not cfg.ebn0_db:
        raise ConfigError("ebn0_db sweep must be nonempty")
    if cfg.min_errors < 1:
        raise ConfigError("min_errors must be at least 1")
    if cfg.max_frames < 1:
        raise ConfigError("max_frames must be at least 1")
    if cfg.realizations < 1:
        raise ConfigError("realizations must be at least 1")
    if not cfg.paths_sweep or any(p < 1 for p in cfg.paths_sweep):
        raise ConfigError("paths_sweep entries must be positive")
    if cfg.master_seed < 0:
        raise ConfigError("master_seed must be nonnegative")
    if cfg.cp_len < cfg.l_max:
        raise ConfigError("cp_len must cover the maximum delay l_max")
    if cfg.l_max >= cfg.m:
        raise ConfigError("l_max must be smaller than the delay dimension m")
    if cfg.k_max > cfg.n // 2:
        raise ConfigError("k_max must not exceed n/2")
    if cfg.trunc < 0:
        raise ConfigError("trunc must be nonnegative")
    # constructor validation for the component configs
    try:
        cfg.grid()
        cfg.stats()
        cfg.code()
        cfg.equalizer()
        for p in cfg.paths_sweep:
            cfg.stats(p)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def config_lines(cfg: SimConfig) -> list[str]:
    """Canonical one-key-per-line rendering of a resolved config."""
    out = []
    for f in dataclasses.fields(cfg):
        val = getattr(cfg, f.name)
        if isinstance(val, bool):
            txt = "true" if val else "false"
        elif isinstance(val, tuple):
            if f.name == "generators":
                txt = ",".join(format(v, "o") for v in val)
            else:
                txt = ",".join(repr(v) if isinstance(v, float) else str(v) for v in val)
        elif isinstance(val, float):
            txt = repr(val)
        else:
            txt = str(val)
        out.append(f"{f.name} = {txt}")
    return out


def config_hash(cfg: SimConfig) -> str:
    blob = "\n".join(config_lines(cfg)).encode()
    return hashlib.sha256(blob).hexdigest()[:12]
