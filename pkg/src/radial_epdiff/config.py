"""Flat ``key = value`` run configuration with dotted keys.

Example::

    n = 5
    k = 2
    grid.points = 1024
    time.dt = auto          # cfl / |u_r(0)|
    momentum.profile = gaussian_odd
    output.dir = out/n5k2

Blank lines and ``#`` comments are ignored. Values are parsed as int, float,
bool (``true``/``false``) or left as strings.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

__all__ = ["ConfigError", "RunConfig", "SweepConfig", "parse_text", "load_run_config", "load_sweep_config"]


class ConfigError(ValueError):
    """Invalid configuration; ``key`` names the offending entry."""

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


def _coerce(text: str):
    low = text.lower()
    if low in ("true", "yes", "on"):
        return True
    if low in ("false", "no", "off"):
        return False
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    if len(text) >= 2 and text[0] == text[-1] and text[0] in "\"'":
        return text[1:-1]
    return text


def parse_text(text: str) -> dict:
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}", f"expected 'key = value', got {raw.strip()!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}", "empty key")
        if key in out:
            raise ConfigError(key, f"duplicate key on line {lineno}")
        out[key] = _coerce(value)
    return out


PROFILES = ("gaussian_odd", "custom_table")
PATHS = ("naive", "fast", "both")

# config key -> RunConfig attribute
_KEYS = {
    "n": "n",
    "k": "k",
    "grid.points": "points",
    "grid.r_max": "r_max",
    "time.dt": "dt",
    "time.t_max": "t_max",
    "time.dt_min": "dt_min",
    "time.cfl": "cfl",
    "blowup.rho_threshold": "rho_threshold",
    "momentum.profile": "profile",
    "momentum.amplitude": "amplitude",
    "momentum.table": "table",
    "output.dir": "output_dir",
    "output.plots": "plots",
    "output.snapshot_every": "snapshot_every",
    "solver.path": "path",
    "criteria.samples": "samples",
    "comparison.tol": "comparison_tol",
}


@dataclass(frozen=True)
class RunConfig:
    n: int
    k: int
    points: int = 1024
    r_max: float = 8.0
    dt: float | str = "auto"
    t_max: float | str = "auto"
    dt_min: float = 1e-10
    cfl: float = 0.01
    rho_threshold: float = 1e-2
    profile: str = "gaussian_odd"
    amplitude: float = 1.0
    table: str | None = None
    output_dir: str = "output"
    plots: bool = True
    snapshot_every: int = 1
    path: str = "fast"
    samples: int = 1000
    comparison_tol: float = 1e-2

    def validate(self) -> "RunConfig":
        def need(cond, key, msg):
            if not cond:
                raise ConfigError(key, msg)

        for key in ("n", "k", "grid.points", "output.snapshot_every", "criteria.samples"):
            val = getattr(self, _KEYS[key])
            need(isinstance(val, int) and not isinstance(val, bool), key, f"must be an integer, got {val!r}")
        need(self.n >= 1, "n", "must be positive")
        need(self.k >= 1, "k", "must be positive")
        need(2 * self.k < self.n + 2, "k", f"k={self.k} must satisfy k < n/2 + 1 = {self.n / 2 + 1:g}")
        need(self.points >= 64, "grid.points", f"must be at least 64, got {self.points}")
        for key in ("grid.r_max", "time.dt_min", "time.cfl", "blowup.rho_threshold", "momentum.amplitude",
                    "comparison.tol"):
            val = getattr(self, _KEYS[key])
            need(isinstance(val, (int, float)) and not isinstance(val, bool), key, f"must be a number, got {val!r}")
        for key in ("time.dt", "time.t_max"):
            val = getattr(self, _KEYS[key])
            need(val == "auto" or (isinstance(val, (int, float)) and not isinstance(val, bool) and val > 0),
                 key, f"must be a positive number or 'auto', got {val!r}")
        need(self.r_max > 0, "grid.r_max", "must be positive")
        need(self.dt_min > 0, "time.dt_min", "must be positive")
        if self.dt != "auto":
            need(self.dt > self.dt_min, "time.dt", f"must exceed time.dt_min={self.dt_min:g}")
        need(0 < self.rho_threshold < 1, "blowup.rho_threshold", "must lie in (0, 1)")
        need(self.amplitude >= 0, "momentum.amplitude", "must be non-negative (omega0 <= 0)")
        need(self.profile in PROFILES, "momentum.profile", f"must be one of {', '.join(PROFILES)}")
        if self.profile == "custom_table":
            need(isinstance(self.table, str) and self.table, "momentum.table", "custom_table needs a CSV path")
        need(self.path in PATHS, "solver.path", f"must be one of {', '.join(PATHS)}")
        need(self.snapshot_every >= 1, "output.snapshot_every", "must be at least 1")
        need(self.samples >= 100, "criteria.samples", "must be at least 100")
        return self

    @classmethod
    def from_mapping(cls, values: dict, base_dir: Path | None = None, *, env: bool = True) -> "RunConfig":
        kwargs = {}
        for key, value in values.items():
            if key not in _KEYS:
                raise ConfigError(key, "unknown key")
            kwargs[_KEYS[key]] = value
        for key in ("n", "k"):
            if key not in kwargs:
                raise ConfigError(key, "required key missing")
        if env and os.environ.get("OUTPUT_DIR"):
            kwargs["output_dir"] = os.environ["OUTPUT_DIR"]
        if base_dir is not None and isinstance(kwargs.get("table"), str):
            kwargs["table"] = str((base_dir / kwargs["table"]).resolve()) if not Path(kwargs["table"]).is_absolute() \
                else kwargs["table"]
        for name in ("output_dir", "table"):
            if name in kwargs and kwargs[name] is not None:
                kwargs[name] = str(kwargs[name])
        return cls(**kwargs).validate()

    def with_pair(self, n: int, k: int, output_dir: str) -> "RunConfig":
        return replace(self, n=n, k=k, output_dir=output_dir).validate()

    def as_mapping(self) -> dict:
        inverse = {v: k for k, v in _KEYS.items()}
        return {inverse[f.name]: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class SweepConfig:
    pairs: tuple[tuple[int, int], ...]
    template: RunConfig
    workers: int = 1
    duplicates: tuple[tuple[int, int], ...] = field(default=())


def _parse_pairs(text) -> list[tuple[int, int]]:
    """``"3,1; 5,2"`` -> ``[(3, 1), (5, 2)]`` as ``(n, k)``."""
    if text is None or (isinstance(text, str) and not text.strip()):
        return []
    pairs = []
    for chunk in str(text).split(";"):
        chunk = chunk.strip().strip("()")
        if not chunk:
            continue
        parts = [p.strip() for p in chunk.split(",")]
        if len(parts) != 2:
            raise ConfigError("sweep.pairs", f"expected 'n,k' entries separated by ';', got {chunk!r}")
        try:
            pairs.append((int(parts[0]), int(parts[1])))
        except ValueError:
            raise ConfigError("sweep.pairs", f"non-integer pair {chunk!r}") from None
    return pairs


def load_run_config(path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from None
    return RunConfig.from_mapping(parse_text(text), path.parent)


def load_sweep_config(path) -> SweepConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError("config", f"cannot read {path}: {exc}") from None
    values = parse_text(text)
    pairs_text = values.pop("sweep.pairs", "")
    workers = values.pop("sweep.workers", 1)
    if not isinstance(workers, int) or isinstance(workers, bool) or workers < 1:
        raise ConfigError("sweep.workers", f"must be a positive integer, got {workers!r}")
    pairs = _parse_pairs(pairs_text)
    for n, k in pairs:
        if n < 1 or k < 1 or 2 * k >= n + 2:
            raise ConfigError("sweep.pairs", f"pair (n={n}, k={k}) violates 1 <= k < n/2 + 1")
    unique, dups = [], []
    for pair in pairs:
        (dups if pair in unique else unique).append(pair)
    # the template needs some valid pair; it is replaced per run
    values.setdefault("n", unique[0][0] if unique else 3)
    values.setdefault("k", unique[0][1] if unique else 1)
    template = RunConfig.from_mapping(values, path.parent)
    return SweepConfig(tuple(unique), template, workers, tuple(dups))
