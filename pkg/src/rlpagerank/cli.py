"""``rlpagerank`` command-line harness.

Exit status: 0 on success, 1 on validation errors, 2 on runtime errors.
"""
from __future__ import annotations

import argparse
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence

import numpy as np

from . import analysis, estimator, oracle
from .config import ConfigError, ExperimentConfig, describe_defaults, load_config
from .graph import GoogleMatrix, TransitionModel, generate
from .sampling import Sampler

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2
PROPORTIONALITY_TOL = 1e-8


class RunFailure(RuntimeError):
    pass


def _fmt(v) -> str:
    if v is None:
        return "never"
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _log(quiet: bool, msg: str) -> None:
    if not quiet:
        print(msg)


def _prepare_out(path: Path) -> Path:
    path.mkdir(parents=True, exist_ok=True)
    return path


def _criterion(cfg: ExperimentConfig, z_star) -> analysis.RankCriterion:
    try:
        return analysis.RankCriterion.for_oracle(z_star, *cfg.criterion)
    except analysis.AnalysisError as exc:
        raise ConfigError(f"criterion (m, M) = {cfg.criterion}: {exc}") from None


def run_replica(model: TransitionModel, cfg: ExperimentConfig, replica: int, z_star,
                crit: Optional[analysis.RankCriterion]) -> analysis.ConvergenceTrace:
    """One seeded replica; its seed is ``base_seed + replica``."""
    sampler = Sampler(model, cfg.base_seed + replica)
    state = estimator.init_state(model.n_nodes, cfg.c, cfg.schedule, cfg.batch)
    return estimator.run(model, sampler, state, cfg.n_iters, cfg.checkpoint_every,
                         oracle_z=z_star, criterion=crit, wall_clock=cfg.wall_clock)


def _run_replicas(model, cfg, z_star, crit) -> List[analysis.ConvergenceTrace]:
    if cfg.workers == 1 or cfg.replicas == 1:
        return [run_replica(model, cfg, r, z_star, crit) for r in range(cfg.replicas)]
    with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
        futures = [pool.submit(run_replica, model, cfg, r, z_star, crit)
                   for r in range(cfg.replicas)]
        return [f.result() for f in futures]


def write_svg(trace: analysis.ConvergenceTrace, path: Path, title: str) -> None:
    """Distance to z* and ranking miss against iterations, as a standalone SVG."""
    try:
        import matplotlib
    except ImportError:
        raise RunFailure("output.svg needs matplotlib") from None
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    with matplotlib.rc_context({"svg.hashsalt": "rlpagerank", "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(7, 4))
        n = trace.column("n")
        ax.plot(n, trace.column("l1_distance"), ":", color="k", label="L1 distance to z*")
        ax.set_xlabel("iteration n")
        ax.set_ylabel("L1 distance")
        ax2 = ax.twinx()
        ax2.plot(n, trace.column("rank_miss_pct"), "-", color="tab:red", label="ranking miss %")
        ax2.set_ylabel("% of top-m missing from top-M")
        ax2.set_ylim(-5, 105)
        ax.set_title(title)
        fig.legend(loc="upper right")
        fig.tight_layout()
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)


def experiment(cfg: ExperimentConfig, out: Path, quiet: bool = True) -> dict:
    """Run all replicas of ``cfg``, write traces and a summary into ``out``."""
    model = generate(cfg.graph)
    z_star = oracle.solve_fixed_point(model, cfg.c).z_star
    variance = float(np.var(z_star))
    try:
        crit = _criterion(cfg, z_star)
    except ConfigError:
        if not np.allclose(z_star, z_star[0]):
            raise
        crit = None  # constant z*: no ranking to recover
    _prepare_out(out)
    traces = _run_replicas(model, cfg, z_star, crit)
    finals, hits = [], []
    for r, trace in enumerate(traces):
        trace.to_csv(out / f"replica_{r:03d}.csv")
        if cfg.svg:
            write_svg(trace, out / f"replica_{r:03d}.svg",
                      f"N={model.n_nodes}, c={cfg.c}, seed={cfg.base_seed + r}")
        finals.append(trace.rows[-1].l1_distance)
        hits.append(trace.iterations_to_criterion() if crit else None)
    reached = [h for h in hits if h is not None]
    median_hits = float(np.median([math.inf if h is None else h for h in hits])) if crit else math.nan
    summary = {
        "n_nodes": model.n_nodes,
        "c": float(cfg.c),
        "replicas": cfg.replicas,
        "base_seed": cfg.base_seed,
        "n_iters": cfg.n_iters,
        "zstar_variance": variance,
        "zstar_l1": float(z_star.sum()),
        "median_final_l1": float(np.median(finals)),
        "median_final_rel_l1": float(np.median(finals) / z_star.sum()),
        "criterion": f"top {cfg.criterion[0]} within top {cfg.criterion[1]}",
        "iterations_to_zero_miss": " ".join(_fmt(h) for h in hits),
        "replicas_reaching_zero_miss": len(reached),
        "median_iterations_to_zero_miss": median_hits,
    }
    with open(out / "summary.txt", "w", encoding="utf-8", newline="") as fh:
        for k, v in summary.items():
            fh.write(f"{k} = {_fmt(v)}\n")
    _log(quiet, f"wrote {cfg.replicas} trace(s) and summary.txt to {out}")
    return summary


def cmd_run(cfg: ExperimentConfig, quiet: bool) -> int:
    experiment(cfg, cfg.out_dir, quiet)
    return EXIT_OK


def _write_vector(path: Path, v) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        for x in v:
            fh.write(f"{_fmt(float(x))}\n")


def cmd_oracle(cfg: ExperimentConfig, quiet: bool) -> int:
    model = generate(cfg.graph)
    fp = oracle.solve_fixed_point(model, cfg.c)
    pi = oracle.stationary_power_method(GoogleMatrix(model, cfg.c))
    gap = float(np.max(np.abs(pi - (1.0 - cfg.c) / model.n_nodes * fp.z_star)))
    if not gap <= PROPORTIONALITY_TOL:
        raise RunFailure(f"pi is not proportional to z*: max deviation {gap:.3e}")
    out = _prepare_out(cfg.out_dir)
    _write_vector(out / "zstar.txt", fp.z_star)
    _write_vector(out / "pi.txt", pi)
    _log(quiet, f"z* and pi for N={model.n_nodes} written to {out} "
                f"(residual {fp.residual:.2e}, proportionality gap {gap:.2e})")
    return EXIT_OK


def cmd_complexity(cfg: ExperimentConfig, quiet: bool) -> int:
    if cfg.graph.generator != "explicit-edge-list" and cfg.graph.n_nodes > oracle.DENSE_GUARD:
        raise ConfigError(f"N={cfg.graph.n_nodes} exceeds the dense guard of "
                          f"{oracle.DENSE_GUARD} nodes for the complexity report")
    model = generate(cfg.graph)
    if model.n_nodes > oracle.DENSE_GUARD:
        raise ConfigError(f"N={model.n_nodes} exceeds the dense guard of {oracle.DENSE_GUARD} nodes")
    crit = None
    if cfg.kappa is None:
        z_star = oracle.solve_fixed_point(model, cfg.c).z_star
        crit = _criterion(cfg, z_star)
    report = analysis.complexity_report(model, cfg.c, crit, cfg.schedule, cfg.T_grid,
                                        seed=cfg.kappa_seed, kappa=cfg.kappa,
                                        n_samples=cfg.kappa_samples)
    out = _prepare_out(cfg.out_dir)
    (out / "complexity.txt").write_text(report.to_text(), encoding="utf-8")
    _log(quiet, report.to_text().rstrip())
    return EXIT_OK


def cmd_variance_sweep(cfgs: Sequence[ExperimentConfig], out: Path, quiet: bool) -> int:
    if len(cfgs) < 2:
        raise ConfigError("variance-sweep needs at least two configs")
    sizes = sorted({generate(c.graph).n_nodes for c in cfgs})
    if len(sizes) != 1:
        raise ConfigError(f"variance-sweep configs must share N, got {sizes}")
    rows = []
    for k, cfg in enumerate(cfgs):
        s = experiment(cfg, out / f"config_{k:02d}", quiet=True)
        name = str(cfg.source) if cfg.source else f"config_{k:02d}"
        rows.append((s["zstar_variance"], s["median_iterations_to_zero_miss"],
                     s["replicas_reaching_zero_miss"], cfg.replicas, name))
    rows.sort(key=lambda r: r[0])
    lines = ["zstar_variance,median_iterations_to_zero_miss,replicas_reaching,replicas,config"]
    lines += [f"{_fmt(v)},{_fmt(it)},{hit},{rep},{name}" for v, it, hit, rep, name in rows]
    (out / "variance_sweep.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    _log(quiet, "\n".join(lines))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    epilog = "config keys and defaults (one 'key = value' per line, '#' comments):\n" + describe_defaults()
    parser = argparse.ArgumentParser(
        prog="rlpagerank", description="Stochastic-approximation PageRank experiments.",
        epilog=epilog, formatter_class=argparse.RawDescriptionHelpFormatter)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, many=False):
        if many:
            p.add_argument("--config", action="append", required=True, type=Path,
                           help="config file; repeat once per graph")
        else:
            p.add_argument("--config", required=True, type=Path, help="config file")
        p.add_argument("--seed", type=int, help="base seed (replica r uses seed + r)")
        p.add_argument("--out", type=Path, help="output directory")
        p.add_argument("--workers", type=int, help="concurrent replicas")
        p.add_argument("--quiet", action="store_true", help="suppress progress output")

    fmt = argparse.RawDescriptionHelpFormatter
    common(sub.add_parser("run", help="run seeded replicas and write traces",
                          epilog=epilog, formatter_class=fmt))
    common(sub.add_parser("oracle", help="write z* and pi", epilog=epilog, formatter_class=fmt))
    common(sub.add_parser("complexity", help="write the sample-complexity report",
                          epilog=epilog, formatter_class=fmt))
    common(sub.add_parser("variance-sweep", help="iterations-to-criterion versus z* variance",
                          epilog=epilog, formatter_class=fmt), many=True)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "variance-sweep":
            cfgs = [load_config(p).with_overrides(args.seed, None, args.workers) for p in args.config]
            out = args.out if args.out is not None else cfgs[0].out_dir
            return cmd_variance_sweep(cfgs, out, args.quiet)
        cfg = load_config(args.config).with_overrides(args.seed, args.out, args.workers)
        handler = {"run": cmd_run, "oracle": cmd_oracle, "complexity": cmd_complexity}[args.command]
        return handler(cfg, args.quiet)
    except ValueError as exc:  # ConfigError, GraphError, AnalysisError, EstimatorError
        print(f"rlpagerank: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, RuntimeError) as exc:
        print(f"rlpagerank: error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
