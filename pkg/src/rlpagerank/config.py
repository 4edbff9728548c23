"""Experiment configuration: a flat ``section.key = value`` text file."""
from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from .analysis import RankCriterion
from .estimator import StepSchedule
from .graph import GraphSpec


class ConfigError(ValueError):
    pass


def _bool(s: str) -> bool:
    v = s.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {s!r}")


def _floats(s: str) -> tuple:
    return tuple(float(v) for v in s.replace(",", " ").split())


def _opt_float(s: str):
    return None if s.strip().lower() in ("", "none") else float(s)


def _opt_int(s: str):
    return None if s.strip().lower() in ("", "none") else int(s)


# key -> (parser, default, help)
SCHEMA = {
    "graph.generator": (str, "uniform-out-degree",
                        "uniform-out-degree | power-law-out-degree | explicit-edge-list"),
    "graph.n_nodes": (int, 50, "number of nodes N"),
    "graph.min_degree": (int, 2, "smallest out-degree (uniform generator)"),
    "graph.max_degree": (_opt_int, 8, "largest out-degree (power law: defaults to N-1)"),
    "graph.exponent": (float, 2.1, "power-law out-degree exponent (> 1)"),
    "graph.target_skew": (float, 0.0, "popularity exponent for link targets (0 = uniform)"),
    "graph.seed": (int, 0, "graph generator seed"),
    "graph.path": (str, "", "edge-list file (relative to the config file)"),
    "estimator.c": (float, 0.85, "damping constant c in (0, 1)"),
    "estimator.batch": (int, 1, "pairs drawn per iteration m"),
    "schedule.kind": (str, "polynomial", "polynomial | piecewise-constant"),
    "schedule.a0": (float, 0.5, "initial step size"),
    "schedule.offset": (float, 100.0, "polynomial offset K in a0/(1+n/K)^rho"),
    "schedule.exponent": (float, 0.6, "polynomial exponent rho in (0.5, 1]"),
    "schedule.plateau": (int, 1000, "piecewise-constant first block length"),
    "schedule.ratio": (float, 0.5, "piecewise-constant decay ratio per block"),
    "run.n_iters": (int, 200_000, "iterations per replica"),
    "run.checkpoint_every": (int, 1000, "iterations between trace rows"),
    "run.replicas": (int, 1, "independent replicas; replica r uses seed base_seed + r"),
    "run.base_seed": (int, 0, "base seed (overridden by --seed)"),
    "run.workers": (int, 1, "concurrent replicas (overridden by --workers)"),
    "run.wall_clock": (_bool, False, "record elapsed time in traces (breaks byte-reproducibility)"),
    "criterion.m": (int, 5, "top-m true indices"),
    "criterion.M": (int, 10, "must appear in the top-M estimated indices"),
    "output.dir": (str, "out", "output directory (overridden by --out)"),
    "output.svg": (_bool, False, "also write an SVG chart per replica (needs matplotlib)"),
    "complexity.T_grid": (_floats, (25.0, 50.0, 100.0, 200.0), "flow times to scan"),
    "complexity.kappa": (_opt_float, None, "use this kappa instead of estimating it"),
    "complexity.n_samples": (int, 2000, "Monte-Carlo samples for the kappa estimate"),
    "complexity.seed": (int, 0, "seed for the kappa estimate"),
}


def describe_defaults() -> str:
    width = max(len(k) for k in SCHEMA)
    lines = []
    for key, (_, default, text) in SCHEMA.items():
        if isinstance(default, tuple):
            default = ", ".join(format(v, "g") for v in default)
        lines.append(f"  {key:<{width}} = {default!s:<20} {text}")
    return "\n".join(lines)


@dataclass(frozen=True)
class ExperimentConfig:
    graph: GraphSpec
    c: float
    schedule: StepSchedule
    batch: int
    n_iters: int
    checkpoint_every: int
    replicas: int
    base_seed: int
    workers: int
    wall_clock: bool
    criterion: tuple
    out_dir: Path
    svg: bool
    T_grid: tuple
    kappa: Optional[float]
    kappa_samples: int
    kappa_seed: int
    source: Optional[Path] = None

    def validate(self) -> None:
        try:
            self.graph.validate()
            RankCriterion(*self.criterion)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if not 0.0 < self.c < 1.0:
            raise ConfigError("estimator.c must lie in (0, 1)")
        for name in ("batch", "n_iters", "checkpoint_every", "replicas", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1")
        if not (0 <= self.base_seed and self.base_seed + self.replicas <= 2**64):
            raise ConfigError("seeds must be unsigned 64-bit integers")
        if not self.T_grid or any(t <= 0 for t in self.T_grid):
            raise ConfigError("complexity.T_grid needs positive entries")
        if self.kappa_samples < 1000:
            raise ConfigError("complexity.n_samples must be at least 1000")

    def with_overrides(self, seed=None, out=None, workers=None) -> "ExperimentConfig":
        cfg = self
        if seed is not None:
            cfg = replace(cfg, base_seed=seed)
        if out is not None:
            cfg = replace(cfg, out_dir=Path(out))
        if workers is not None:
            cfg = replace(cfg, workers=workers)
        cfg.validate()
        return cfg


def parse_text(text: str, origin: str = "<config>") -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"{origin}:{lineno}: expected 'key = value'")
        key, _, value = (part.strip() for part in line.partition("="))
        if key not in SCHEMA:
            raise ConfigError(f"{origin}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ConfigError(f"{origin}:{lineno}: duplicate key {key!r}")
        parser = SCHEMA[key][0]
        try:
            values[key] = parser(value)
        except ValueError as exc:
            raise ConfigError(f"{origin}:{lineno}: bad value for {key}: {exc}") from None
    return values


def from_values(values: dict, base_dir: Path = Path("."), source=None) -> ExperimentConfig:
    v = {k: spec[1] for k, spec in SCHEMA.items()}
    v.update(values)
    path = v["graph.path"]
    if path and not Path(path).is_absolute():
        path = str(base_dir / path)
    max_degree = v["graph.max_degree"]
    if v["graph.generator"] == "power-law-out-degree" and "graph.max_degree" not in values:
        max_degree = None
    try:
        graph = GraphSpec(
            n_nodes=v["graph.n_nodes"], generator=v["graph.generator"],
            min_degree=v["graph.min_degree"], max_degree=max_degree,
            exponent=v["graph.exponent"], target_skew=v["graph.target_skew"],
            seed=v["graph.seed"], path=path or None)
        schedule = StepSchedule(
            kind=v["schedule.kind"], a0=v["schedule.a0"], offset=v["schedule.offset"],
            exponent=v["schedule.exponent"], plateau=v["schedule.plateau"],
            ratio=v["schedule.ratio"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    cfg = ExperimentConfig(
        graph=graph, c=v["estimator.c"], schedule=schedule, batch=v["estimator.batch"],
        n_iters=v["run.n_iters"], checkpoint_every=v["run.checkpoint_every"],
        replicas=v["run.replicas"], base_seed=v["run.base_seed"], workers=v["run.workers"],
        wall_clock=v["run.wall_clock"], criterion=(v["criterion.m"], v["criterion.M"]),
        out_dir=Path(v["output.dir"]), svg=v["output.svg"], T_grid=tuple(v["complexity.T_grid"]),
        kappa=v["complexity.kappa"], kappa_samples=v["complexity.n_samples"],
        kappa_seed=v["complexity.seed"], source=source)
    cfg.validate()
    return cfg


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return from_values(parse_text(text, str(path)), base_dir=path.parent, source=path)
