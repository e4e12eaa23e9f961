"""Command-line entry point exposing every experiment as a subcommand.

Subcommands: names, assign-sim, dim-sim, bayes-sim, popest-sim, theory.
Every run writes its outputs plus a manifest recording the resolved
configuration and seed; re-running with the same configuration and seed
reproduces the output files byte for byte, regardless of --jobs.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from importlib.resources import as_file, files
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from . import __version__
from .bayes_mixture import BayesSimConfig, run_bayes_sim
from .combinatorics import expected_matches_bounds, expected_matches_exact
from .gaussian_assignment import (
    AssignmentSimConfig,
    DimensionSimConfig,
    EquallySpacedMixture1D,
    concentration_and_zero_correct,
    correct_prob_bounds_p,
    run_assignment_sim,
    run_dimension_sim,
)
from .manifest import RunManifest
from .name_data import (
    DataError,
    TableFormat,
    group_size_table,
    independence_join,
    load_frequency_table,
    names_report,
)
from .popest import (
    NonConvergenceError,
    PopestSimConfig,
    run_popest_replicate,
    solve_beta_b_for_unobserved,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # type: ignore[override]
        raise UsageError(message)


def parse_grid(text: str) -> list[float]:
    """Grid syntax: comma list ("0.1,0.5,2") or start:stop:step ("0.1:2:0.1")."""
    text = text.strip()
    if not text:
        raise UsageError("empty grid")
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise UsageError(f"bad grid {text!r}: expected start:stop:step")
        try:
            start, stop, step = (float(p) for p in parts)
        except ValueError:
            raise UsageError(f"bad grid {text!r}: non-numeric bound") from None
        if step <= 0 or stop < start:
            raise UsageError(f"bad grid {text!r}: need step > 0 and stop >= start")
        values = []
        i = 0
        while True:
            value = round(start + i * step, 10)
            if value > stop + step * 1e-9:
                break
            values.append(value)
            i += 1
        return values
    try:
        return [float(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise UsageError(f"bad grid {text!r}") from None


def _load_toml(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        import tomllib  # Python >= 3.11
    except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
        import tomli as tomllib
    p = Path(path)
    if not p.exists():
        raise DataError(f"no such config file: {p}")
    with p.open("rb") as fh:
        return tomllib.load(fh)


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, payload: object) -> None:
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def _parallel_map(fn: Callable, tasks: list, jobs: int) -> list:
    """Order-preserving map; results are identical for any worker count."""
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, tasks))


def _fixture_path(name: str) -> Path:
    resource = files("microclust").joinpath(f"data/{name}")
    with as_file(resource) as p:
        return Path(p)


def _finish(manifest: RunManifest, out_dir: Path, subcommand: str) -> None:
    manifest.finish()
    manifest.write(out_dir / f"{subcommand.replace('-', '_')}_manifest.json")


def cmd_names(args: argparse.Namespace, toml: dict, out_dir: Path, seed: int, jobs: int) -> int:
    section = toml.get("names", {})
    t_grid = parse_grid(
        args.t_grid or section.get("t_grid", "0.005,0.01,0.02,0.05")
    )
    population = args.population or section.get("population")
    if args.fixture:
        first_path = _fixture_path("fixture_first.csv")
        last_path = _fixture_path("fixture_last.csv")
        first_fmt = TableFormat("name", "proportion", value_kind="proportion")
        last_fmt = TableFormat("name", "count", value_kind="count")
        population = population or 20_000
    else:
        if not args.first or not args.last:
            raise UsageError("provide --first and --last, or --fixture")
        if population is None:
            raise UsageError("provide --population for user-supplied tables")
        first_path = Path(args.first)
        last_path = Path(args.last)
        first_fmt = TableFormat(
            args.name_col, args.first_value_col, value_kind=args.first_kind,
            delimiter=args.delimiter,
        )
        last_fmt = TableFormat(
            args.name_col, args.last_value_col, value_kind=args.last_kind,
            delimiter=args.delimiter,
        )

    first = load_frequency_table(first_path, first_fmt)
    last = load_frequency_table(last_path, last_fmt)
    hist = independence_join(first, last, int(population), args.pool_threshold)
    report = names_report(hist, t_grid)

    manifest = RunManifest(
        subcommand="names",
        config={
            "first": str(first_path),
            "last": str(last_path),
            "population": int(population),
            "pool_threshold": args.pool_threshold,
            "t_grid": t_grid,
        },
        seed=seed,
    )
    report_path = out_dir / "names_report.json"
    pmf_path = out_dir / "names_pmf.csv"
    _write_json(report_path, report)
    rows = group_size_table(hist)
    _write_csv(
        pmf_path,
        [
            "group_size",
            "n_groups",
            "prob_none_correct",
            "prob_all_correct",
            "expected_correct_exact",
            "expected_lower",
            "expected_upper",
        ],
        [[row[k] for k in (
            "group_size", "n_groups", "prob_none_correct", "prob_all_correct",
            "expected_correct_exact", "expected_lower", "expected_upper",
        )] for row in rows],
    )
    manifest.add_output(report_path)
    manifest.add_output(pmf_path)
    _finish(manifest, out_dir, "names")
    return EXIT_OK


def cmd_assign_sim(args: argparse.Namespace, toml: dict, out_dir: Path, seed: int, jobs: int) -> int:
    section = toml.get("assign_sim", {})
    n = args.n or section.get("n", 5000)
    replicates = args.replicates or section.get("replicates", 50)
    grid = parse_grid(args.c_grid or section.get("c_grid", "0.1:2:0.1"))
    scale = args.scale or section.get("scale", "sigma")
    configs = [
        AssignmentSimConfig(
            n_components=int(n), c=c, replicates=int(replicates),
            seed=seed, scale_convention=scale,
        )
        for c in grid
    ]
    try:
        results = _parallel_map(run_assignment_sim, configs, jobs)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc

    out_path = out_dir / "assign_sim.csv"
    _write_csv(
        out_path,
        ["c", "N", "replicates", "prop_correct", "prop_se", "zero_correct_freq", "theory"],
        [
            [r.c, r.n_components, r.replicates, r.proportion_correct_mean,
             r.proportion_correct_se, r.zero_correct_frequency, r.theory_proportion]
            for r in results
        ],
    )
    manifest = RunManifest(
        subcommand="assign-sim",
        config={"n": int(n), "replicates": int(replicates), "c_grid": grid, "scale": scale},
        seed=seed,
    )
    manifest.add_output(out_path)
    _finish(manifest, out_dir, "assign-sim")
    return EXIT_OK


def cmd_dim_sim(args: argparse.Namespace, toml: dict, out_dir: Path, seed: int, jobs: int) -> int:
    section = toml.get("dim_sim", {})
    n = args.n or section.get("n", 64)
    dim = args.p or section.get("p", 3)
    sigmas = parse_grid(args.sigma_grid or section.get("sigma_grid", "0.01,0.3"))
    replicates = args.replicates or section.get("replicates", 20)
    configs = [
        DimensionSimConfig(
            n_components=int(n), dim=int(dim), sigma=s, replicates=int(replicates), seed=seed
        )
        for s in sigmas
    ]
    results = _parallel_map(run_dimension_sim, configs, jobs)
    out_path = out_dir / "dim_sim.csv"
    _write_csv(
        out_path,
        ["N", "p", "sigma", "replicates", "separation", "prop_correct", "prop_se",
         "lower", "upper", "within_bounds"],
        [
            [r.n_components, r.dim, r.sigma, r.replicates, r.separation,
             r.proportion_correct_mean, r.proportion_correct_se,
             r.lower, r.upper, int(r.within_bounds)]
            for r in results
        ],
    )
    manifest = RunManifest(
        subcommand="dim-sim",
        config={"n": int(n), "p": int(dim), "sigma_grid": sigmas, "replicates": int(replicates)},
        seed=seed,
    )
    manifest.add_output(out_path)
    _finish(manifest, out_dir, "dim-sim")
    return EXIT_OK


def cmd_bayes_sim(args: argparse.Namespace, toml: dict, out_dir: Path, seed: int, jobs: int) -> int:
    section = toml.get("bayes_sim", {})
    n = args.n or section.get("n", 100)
    sweeps = args.sweeps if args.sweeps is not None else section.get("sweeps", 2000)
    burn_in = args.burn_in if args.burn_in is not None else section.get("burn_in", 500)
    tau2 = args.tau2 or section.get("tau2", 9.0)
    scale = args.scale or section.get("scale", "sigma")
    grid = parse_grid(args.c_grid or section.get("c_grid", "0.1,0.25,0.5,1,2"))
    if int(sweeps) < 1:
        raise UsageError("--sweeps must be >= 1")
    if int(burn_in) < 0:
        raise UsageError("--burn-in must be >= 0")
    configs = [
        BayesSimConfig(
            c=c, seed=seed, n_records=int(n), sweeps=int(sweeps),
            burn_in=int(burn_in), tau2=float(tau2), scale_convention=scale,
        )
        for c in grid
    ]
    results = _parallel_map(run_bayes_sim, configs, jobs)
    out_path = out_dir / "bayes_sim.csv"
    rows = []
    for result in results:
        for sweep_idx, l0 in enumerate(result.l0_samples, start=1):
            rows.append([result.config.c, sweep_idx, int(l0)])
    _write_csv(out_path, ["c", "sweep", "l0"], rows)
    manifest = RunManifest(
        subcommand="bayes-sim",
        config={
            "n": int(n), "sweeps": int(sweeps), "burn_in": int(burn_in),
            "tau2": float(tau2), "c_grid": grid, "scale": scale,
        },
        seed=seed,
    )
    manifest.add_output(out_path)
    _finish(manifest, out_dir, "bayes-sim")
    return EXIT_OK


def _popest_task(config_and_rep: tuple[PopestSimConfig, int]):
    config, replicate = config_and_rep
    return run_popest_replicate(config, replicate)


def cmd_popest_sim(args: argparse.Namespace, toml: dict, out_dir: Path, seed: int, jobs: int) -> int:
    section = toml.get("popest_sim", {})
    k = args.k or section.get("k", 5000)
    t = args.t or section.get("t", 3)
    a = args.a or section.get("a", 1.0)
    replicates = args.replicates or section.get("replicates", 200)
    scale = args.scale or section.get("scale", "sigma")
    grid = parse_grid(args.c_grid or section.get("c_grid", "0.1,0.5,1,2"))
    target = args.target_n0_frac or section.get("target_n0_frac")
    if target is not None:
        b = solve_beta_b_for_unobserved(float(target), int(t), float(a))
    else:
        b = args.b or section.get("b", 1.7)

    tasks: list[tuple[PopestSimConfig, int]] = []
    for c in grid:
        config = PopestSimConfig(
            c=c, seed=seed, n_entities=int(k), n_lists=int(t),
            beta_a=float(a), beta_b=float(b), replicates=int(replicates),
            scale_convention=scale,
        )
        tasks.extend((config, r) for r in range(int(replicates)))
    results = _parallel_map(_popest_task, tasks, jobs)

    out_path = out_dir / "popest_sim.csv"
    rows = []
    summary: dict[str, dict] = {}
    idx = 0
    for c in grid:
        reps = results[idx : idx + int(replicates)]
        idx += int(replicates)
        ok = [r for r in reps if not r.failed]
        summary[repr(float(c))] = {
            "c": float(c),
            "replicates": len(reps),
            "failed": len(reps) - len(ok),
            "coverage": float(np.mean([r.covered for r in ok])) if ok else float("nan"),
            "mean_prop_correct": float(np.mean([r.prop_correct for r in ok])) if ok else float("nan"),
            "mse_n0": float(np.mean([r.sq_error_n0 for r in ok])) if ok else float("nan"),
            "mse_nx": float(np.mean([r.mse_nx for r in ok])) if ok else float("nan"),
        }
        for r in reps:
            rows.append([
                float(c), r.replicate, r.prop_correct, int(r.covered), r.n0_true,
                r.n0_hat, r.ci_lower, r.ci_upper, r.mse_nx, int(r.failed),
            ])
    _write_csv(
        out_path,
        ["c", "replicate", "prop_correct", "covered", "n0_true", "n0_hat",
         "ci_lo", "ci_hi", "mse_nx", "failed"],
        rows,
    )
    summary_path = out_dir / "popest_summary.json"
    _write_json(summary_path, summary)
    manifest = RunManifest(
        subcommand="popest-sim",
        config={
            "k": int(k), "t": int(t), "a": float(a), "b": float(b),
            "target_n0_frac": float(target) if target is not None else None,
            "replicates": int(replicates), "c_grid": grid, "scale": scale,
        },
        seed=seed,
    )
    manifest.add_output(out_path)
    manifest.add_output(summary_path)
    _finish(manifest, out_dir, "popest-sim")
    return EXIT_OK


def cmd_theory(args: argparse.Namespace, toml: dict, out_dir: Path, seed: int, jobs: int) -> int:
    payload: dict[str, object] = {}
    if args.derange:
        nm = args.nm or 11
        records = []
        for n in range(1, int(nm) + 1):
            lower, upper = expected_matches_bounds(n)
            exact = expected_matches_exact(n)
            records.append(
                {
                    "n": n,
                    "lower": lower,
                    "upper": upper,
                    "exact": float(exact),
                    "exact_is_one": exact == 1,
                }
            )
        lower, upper = expected_matches_bounds(int(nm))
        payload["derangement"] = {"records": records, "gap_at_max": upper - lower}
    if args.remark2:
        for name in ("ell", "sigma", "n", "t"):
            if getattr(args, name) is None:
                raise UsageError(f"--remark2 requires --{name}")
        mix = EquallySpacedMixture1D(
            n_components=int(args.n), sigma=float(args.sigma),
            range_width=float(args.ell),
        )
        bounds = concentration_and_zero_correct(mix, float(args.t))
        payload["remark2"] = {
            "concentration_bound": bounds.concentration_bound,
            "zero_correct_limit": bounds.zero_correct_limit,
            "zero_correct_finite": bounds.zero_correct_finite,
        }
    if args.chisq:
        for name in ("p", "delta", "sigma"):
            if getattr(args, name) is None:
                raise UsageError(f"--chisq requires --{name}")
        sandwich = correct_prob_bounds_p(float(args.delta), float(args.sigma), int(args.p))
        payload["chisq"] = {
            "lower": sandwich.lower,
            "upper": sandwich.upper,
            "normal_lower": sandwich.normal_lower,
            "normal_upper": sandwich.normal_upper,
        }
    if not payload:
        raise UsageError("choose at least one of --derange, --remark2, --chisq")

    out_path = out_dir / "theory.json"
    _write_json(out_path, payload)
    manifest = RunManifest(
        subcommand="theory",
        config={
            "derange": bool(args.derange), "remark2": bool(args.remark2),
            "chisq": bool(args.chisq), "nm": args.nm, "ell": args.ell,
            "sigma": args.sigma, "n": args.n, "t": args.t, "p": args.p,
            "delta": args.delta,
        },
        seed=seed,
    )
    manifest.add_output(out_path)
    _finish(manifest, out_dir, "theory")
    return EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="microclust", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--seed", type=int, default=None, help="root RNG seed")
    parser.add_argument("--jobs", type=int, default=None, help="worker processes")
    parser.add_argument("--out-dir", default=None, help="output directory")
    parser.add_argument("--config", default=None, help="TOML config file")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    names = sub.add_parser("names", help="random-allocation analysis of name tables")
    names.add_argument("--fixture", action="store_true", help="use the bundled tables")
    names.add_argument("--first", help="first-name table path")
    names.add_argument("--last", help="last-name table path")
    names.add_argument("--population", type=int, default=None)
    names.add_argument("--name-col", default="name")
    names.add_argument("--first-value-col", default="proportion")
    names.add_argument("--first-kind", choices=("count", "proportion"), default="proportion")
    names.add_argument("--last-value-col", default="count")
    names.add_argument("--last-kind", choices=("count", "proportion"), default="count")
    names.add_argument("--delimiter", default=",")
    names.add_argument("--pool-threshold", type=float, default=0.5)
    names.add_argument("--t-grid", default=None)

    assign = sub.add_parser("assign-sim", help="known-parameter ML assignment sweep")
    assign.add_argument("--n", type=int, default=None)
    assign.add_argument("--c-grid", default=None)
    assign.add_argument("--replicates", type=int, default=None)
    assign.add_argument("--scale", choices=("sigma", "sigma-squared"), default=None)

    dim = sub.add_parser("dim-sim", help="lattice mixture vs chi-square bounds")
    dim.add_argument("--n", type=int, default=None)
    dim.add_argument("--p", type=int, default=None)
    dim.add_argument("--sigma-grid", default=None)
    dim.add_argument("--replicates", type=int, default=None)

    bayes = sub.add_parser("bayes-sim", help="collapsed Gibbs co-clustering loss sweep")
    bayes.add_argument("--n", type=int, default=None)
    bayes.add_argument("--c-grid", default=None)
    bayes.add_argument("--sweeps", type=int, default=None)
    bayes.add_argument("--burn-in", type=int, default=None)
    bayes.add_argument("--tau2", type=float, default=None)
    bayes.add_argument("--scale", choices=("sigma", "sigma-squared"), default=None)

    popest = sub.add_parser("popest-sim", help="population estimation under noisy resolution")
    popest.add_argument("--k", type=int, default=None)
    popest.add_argument("--t", type=int, default=None)
    popest.add_argument("--a", type=float, default=None)
    popest.add_argument("--b", type=float, default=None)
    popest.add_argument("--target-n0-frac", type=float, default=None)
    popest.add_argument("--c-grid", default=None)
    popest.add_argument("--replicates", type=int, default=None)
    popest.add_argument("--scale", choices=("sigma", "sigma-squared"), default=None)

    theory = sub.add_parser("theory", help="closed-form bounds without simulation")
    theory.add_argument("--derange", action="store_true")
    theory.add_argument("--nm", type=int, default=None)
    theory.add_argument("--remark2", action="store_true")
    theory.add_argument("--ell", type=float, default=None)
    theory.add_argument("--sigma", type=float, default=None)
    theory.add_argument("--n", type=int, default=None)
    theory.add_argument("--t", type=float, default=None)
    theory.add_argument("--chisq", action="store_true")
    theory.add_argument("--p", type=int, default=None)
    theory.add_argument("--delta", type=float, default=None)
    return parser


_COMMANDS = {
    "names": cmd_names,
    "assign-sim": cmd_assign_sim,
    "dim-sim": cmd_dim_sim,
    "bayes-sim": cmd_bayes_sim,
    "popest-sim": cmd_popest_sim,
    "theory": cmd_theory,
}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        toml = _load_toml(args.config)
        seed = args.seed if args.seed is not None else int(toml.get("seed", 0))
        jobs = args.jobs if args.jobs is not None else int(toml.get("jobs", 1))
        out_dir = Path(args.out_dir or toml.get("out_dir", "."))
        out_dir.mkdir(parents=True, exist_ok=True)
        return _COMMANDS[args.subcommand](args, toml, out_dir, seed, jobs)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NonConvergenceError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
