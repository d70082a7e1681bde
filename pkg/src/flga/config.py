"""Flat ``key = value`` run configuration with CLI overrides.

Lines are ``key = value``; ``#`` starts a comment.  Lists are comma
separated.  Every key must be known; values are checked before any compute.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path
from typing import Any

LAMBDA_O = (15 / 128, 1 / 4, 1 / 4, 1 / 4, 1 / 4, 1 / 4, 1 / 4, 1 / 8, 1 / 8)
CASES = ("eq1d", "eq2d", "shockwave", "taylor_green", "lid_cavity", "qflga")
COMPARE = ("lbm", "analytic", "qflga", "none")
OUTPUT_ENV = "FLGA_OUTPUT_ROOT"


class ConfigError(ValueError):
    """Invalid configuration; ``problems`` maps each offending key to a message."""

    def __init__(self, problems: dict[str, str]):
        self.problems = dict(problems)
        lines = "; ".join(f"{k}: {v}" for k, v in self.problems.items())
        super().__init__(f"invalid configuration ({lines})")


def _floats(s: str) -> tuple[float, ...]:
    return tuple(float(x) for x in s.split(",") if x.strip())


def _ints(s: str) -> tuple[int, ...]:
    return tuple(int(x) for x in s.split(",") if x.strip())


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _lambdas(s: str) -> tuple[float, ...]:
    if s.strip().lower() in ("lambda_o", "o"):
        return LAMBDA_O
    return _floats(s)


def _strs(s: str) -> tuple[str, ...]:
    return tuple(x.strip() for x in s.split(",") if x.strip())


@dataclass
class RunConfig:
    case: str = "shockwave"
    model: str = "D1Q3"
    nx: int = 100
    ny: int = 1
    k: tuple[int, ...] = (2,)
    C: tuple[float, ...] = (1.0,)
    lambdas: tuple[float, ...] = (1.0,)
    steps: int = 1000
    warmup: int = 0
    snapshot_every: int = -1  # -1: 10 steps in 1D, 100 in 2D; 0 disables
    seed: int = 0
    output: str = ""
    compare: str = "none"
    lbm_tau: float = 0.0
    negative: str = "clamp"
    incompressible: bool = False
    u: float = 0.1
    U_list: tuple[float, ...] = ()
    u_cut: float = 0.3
    rho1: float = 4.0
    rho2: float = 2.0
    smooth: int = 10
    C_list: tuple[float, ...] = ()
    Ns: tuple[int, ...] = ()
    solvers: tuple[str, ...] = ("lbm", "flga2", "flga3")
    repeats: int = 5
    shots: int = 0
    fit_floor: float = 0.02
    tau_range: tuple[float, ...] = (0.505, 20.0)
    source: str = field(default="", repr=False)

    @property
    def ndim(self) -> int:
        return 1 if self.model == "D1Q3" else 2

    @property
    def cadence(self) -> int:
        if self.snapshot_every >= 0:
            return self.snapshot_every
        return 10 if self.ndim == 1 else 100

    def lambda_value(self):
        return self.lambdas[0] if len(self.lambdas) == 1 else self.lambdas

    def output_dir(self) -> Path:
        root = Path(os.environ.get(OUTPUT_ENV, "output"))
        return root / (self.output or self.case)

    def as_text(self) -> str:
        out = []
        for f in fields(self):
            if f.name == "source":
                continue
            v = getattr(self, f.name)
            if isinstance(v, tuple):
                v = ",".join(repr(x) if isinstance(x, float) else str(x) for x in v)
            out.append(f"{f.name} = {v}")
        return "\n".join(out) + "\n"


PARSERS = {
    "case": str, "model": str, "nx": int, "ny": int, "k": _ints, "C": _floats,
    "lambdas": _lambdas, "steps": int, "warmup": int, "snapshot_every": int, "seed": int,
    "output": str, "compare": str, "lbm_tau": float, "negative": str,
    "incompressible": _bool, "u": float, "U_list": _floats, "u_cut": float,
    "rho1": float, "rho2": float, "smooth": int, "C_list": _floats, "Ns": _ints,
    "solvers": _strs, "repeats": int, "shots": int, "fit_floor": float, "tau_range": _floats,
}


def parse_pairs(text: str) -> dict[str, str]:
    pairs: dict[str, str] = {}
    problems: dict[str, str] = {}
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            problems[f"line {no}"] = f"expected 'key = value', got {raw.strip()!r}"
            continue
        key, val = (s.strip() for s in line.split("=", 1))
        pairs[key] = val
    if problems:
        raise ConfigError(problems)
    return pairs


def build_config(pairs: dict[str, str], base: RunConfig | None = None) -> RunConfig:
    cfg = base or RunConfig()
    values: dict[str, Any] = {}
    problems: dict[str, str] = {}
    for key, raw in pairs.items():
        if key not in PARSERS:
            problems[key] = "unknown key"
            continue
        try:
            values[key] = PARSERS[key](raw)
        except ValueError as exc:
            problems[key] = f"bad value {raw!r} ({exc})"
    if problems:
        raise ConfigError(problems)
    for key, v in values.items():
        setattr(cfg, key, v)
    validate(cfg)
    return cfg


def validate(cfg: RunConfig) -> RunConfig:
    p: dict[str, str] = {}
    if cfg.case not in CASES:
        p["case"] = f"must be one of {CASES}"
    if cfg.model not in ("D1Q3", "D2Q9"):
        p["model"] = "must be D1Q3 or D2Q9"
    if cfg.nx < 1 or cfg.ny < 1:
        p["nx"] = "grid sizes must be positive"
    if not cfg.k or any(k not in (2, 3, 4) for k in cfg.k) or len(set(cfg.k)) != len(cfg.k):
        p["k"] = "distinct collision orders from {2, 3, 4}"
    if len(cfg.C) != len(cfg.k):
        p["C"] = "need one C per collision order in k"
    elif any(c < 0 for c in cfg.C):
        p["C"] = "must be non-negative"
    if any(x < 0 for x in cfg.lambdas) or not cfg.lambdas:
        p["lambdas"] = "non-negative scalar or list"
    if cfg.steps < 0:
        p["steps"] = "must be non-negative"
    if not 0 <= cfg.warmup <= cfg.steps:
        p["warmup"] = "must lie in 0..steps"
    if cfg.compare not in COMPARE:
        p["compare"] = f"must be one of {COMPARE}"
    if cfg.compare == "lbm" and not cfg.lbm_tau > 0.5:
        p["lbm_tau"] = "comparison with LBM needs lbm_tau > 0.5"
    if cfg.negative not in ("clamp", "strict", "ignore"):
        p["negative"] = "must be clamp, strict or ignore"
    if any(abs(U) > 1 for U in cfg.U_list):
        p["U_list"] = "|U| must be <= 1"
    if cfg.C_list and (any(c <= 0 for c in cfg.C_list)
                       or any(b <= a for a, b in zip(cfg.C_list, cfg.C_list[1:]))):
        p["C_list"] = "must be positive and strictly increasing"
    if cfg.Ns and any(b <= a for a, b in zip(cfg.Ns, cfg.Ns[1:])):
        p["Ns"] = "must be strictly increasing"
    if any(s not in ("lbm", "flga2", "flga3") for s in cfg.solvers):
        p["solvers"] = "choose from lbm, flga2, flga3"
    if cfg.repeats < 5:
        p["repeats"] = "timings need at least 5 repeats"
    if cfg.smooth < 1:
        p["smooth"] = "window must be >= 1"
    if len(cfg.tau_range) != 2 or not 0.5 < cfg.tau_range[0] < cfg.tau_range[1]:
        p["tau_range"] = "two values with 0.5 < lo < hi"
    if abs(cfg.u) >= 1:
        p["u"] = "velocity must be below one lattice unit per step"
    if cfg.case in ("eq1d", "shockwave", "qflga") and cfg.model != "D1Q3":
        p["model"] = f"case {cfg.case} runs on D1Q3"
    if cfg.case in ("eq2d", "taylor_green", "lid_cavity") and cfg.model != "D2Q9":
        p["model"] = f"case {cfg.case} runs on D2Q9"
    if cfg.case == "shockwave" and cfg.nx % 2:
        p["nx"] = "shockwave needs an even length"
    if cfg.case == "qflga" and (cfg.nx & (cfg.nx - 1)):
        p["nx"] = "quantum emulation needs a power-of-two length"
    if len(cfg.lambdas) > 1 and len(cfg.k) > 1:
        p["lambdas"] = "per-class rates need a single collision order"
    if p:
        raise ConfigError(p)
    return cfg


def preset_names() -> list[str]:
    return sorted(r.name[:-4] for r in resources.files("flga.presets").iterdir()
                  if r.name.endswith(".cfg"))


def preset_text(name: str) -> str:
    res = resources.files("flga.presets") / f"{name}.cfg"
    if not res.is_file():
        raise ConfigError({"preset": f"unknown preset {name!r}; have {preset_names()}"})
    return res.read_text()


def load_config(path_or_preset: str | None = None, overrides: dict[str, str] | None = None) -> RunConfig:
    """Config from a file path or a bundled preset name, then ``overrides`` on top."""
    pairs: dict[str, str] = {}
    source = ""
    if path_or_preset:
        p = Path(path_or_preset)
        if p.is_file():
            text = p.read_text()
        else:
            text = preset_text(path_or_preset)
        pairs = parse_pairs(text)
        source = path_or_preset
    pairs.update(overrides or {})
    cfg = build_config(pairs)
    cfg.source = source
    return cfg
