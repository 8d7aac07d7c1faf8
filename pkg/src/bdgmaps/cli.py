"""Command line entry point: ``bdgmaps {solve,sample,verify,scaling}``.

Exit codes: 0 success, 2 weights not admissible (or not regular critical),
3 usage/parse error or missing file, 4 retry budget exhausted, 5 an exact
check failed.
"""

from __future__ import annotations

import contextlib
import functools
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from typing import Callable, List, Optional, Sequence

import click
import numpy as np

from . import oracle
from ._accel import backend_name
from .bijection import bdg_forward, distances, face_degree_census, faces
from .errors import (
    BDGError,
    InvalidWeights,
    MismatchReport,
    NotAdmissible,
    NotCritical,
    RetryBudgetExhausted,
)
from .snake import snake_ensemble
from .stats import (
    OBSERVABLES,
    estimate_scaling,
    profile_functional_compare,
    profile_functionals,
)
from .trees import Condition, sample_conditioned
from .weights import REGULAR_CRITICAL, WeightSequence, build_offspring, q4_fixture, solve_fixed_point

EXIT_OK = 0
EXIT_NOT_ADMISSIBLE = 2
EXIT_USAGE = 3
EXIT_BUDGET = 4
EXIT_MISMATCH = 5

WORKER_CAP_ENV = "BDGMAPS_MAX_WORKERS"
SAMPLE_CHUNK = 8     # trees per random stream in ``sample``
SCALING_CHUNK = 32   # trees per random stream in ``scaling``


class Mismatch(Exception):
    """An exact verification failed; carries the verdicts for the report."""

    def __init__(self, verdicts):
        super().__init__("verification failed")
        self.verdicts = verdicts


# ---------------------------------------------------------------------------
# streams and workers
# ---------------------------------------------------------------------------

def stream_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for stream ``index``; identical to SeedSequence(seed).spawn(...)[index]."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(index,))))


def resolve_workers(requested: Optional[int]) -> int:
    n = requested if requested else (os.cpu_count() or 1)
    cap = os.environ.get(WORKER_CAP_ENV)
    if cap:
        try:
            n = min(n, max(1, int(cap)))
        except ValueError:
            raise click.UsageError(f"{WORKER_CAP_ENV} must be an integer, got {cap!r}")
    return max(1, n)


def run_streams(fn: Callable, jobs: Sequence[tuple], workers: int) -> list:
    """``fn(*job)`` for every job, results in job order whatever the pool size."""
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=min(workers, len(jobs))) as pool:
        return list(pool.map(fn, *zip(*jobs)))


def _announce(seed: int, streams: int, workers: int) -> None:
    click.echo(f"seed={seed} streams={streams} workers={workers} backend={backend_name()}", err=True)


def _chunks(total: int, size: int) -> List[int]:
    return [min(size, total - lo) for lo in range(0, total, size)]


# ---------------------------------------------------------------------------
# weights loading
# ---------------------------------------------------------------------------

def load_weights(path: Optional[str]) -> WeightSequence:
    if path is None:
        return q4_fixture()
    try:
        return WeightSequence.load(path)
    except FileNotFoundError:
        raise click.UsageError(f"weights file not found: {path}")
    except (json.JSONDecodeError, InvalidWeights, KeyError, TypeError, ValueError) as exc:
        raise click.UsageError(f"cannot parse weights file {path}: {exc}")


@functools.lru_cache(maxsize=8)
def _laws_for(config_key: str):
    return _laws(WeightSequence.from_config(json.loads(config_key)))


def _laws(weights: WeightSequence):
    report = solve_fixed_point(weights)
    if report.classification != REGULAR_CRITICAL:
        raise NotCritical(f"weights are {report.classification}, sampling needs regular critical weights")
    return build_offspring(report, weights)


def _parse_sizes(text: str) -> List[int]:
    try:
        sizes = [int(s) for s in text.replace(" ", "").split(",") if s]
    except ValueError:
        raise click.UsageError(f"--sizes must be a comma separated list of integers, got {text!r}")
    if len(sizes) < 2:
        raise click.UsageError("--sizes needs at least two sizes")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise click.UsageError("--sizes must be strictly increasing")
    if sizes[0] < 1:
        raise click.UsageError("sizes must be positive")
    return sizes


def _open_out(path: Optional[str]):
    if path is None or path == "-":
        return contextlib.nullcontext(sys.stdout)
    return open(path, "w", newline="")


# ---------------------------------------------------------------------------
# stream workers (module level so they pickle)
# ---------------------------------------------------------------------------

def _sample_stream(config: dict, n: int, count: int, seed: int, index: int, positive: bool,
                   x: int, direction: str, with_maps: bool, budget: int):
    laws = _laws_for(json.dumps(config, sort_keys=True))
    rng = stream_rng(seed, index)
    cond = Condition(size=n, positive=positive)
    trees, maps = [], []
    for _ in range(count):
        t = sample_conditioned(laws, 1, x, cond, direction, rng, retry_budget=budget, method="sequential")
        trees.append(t.to_json())
        if with_maps:
            maps.append(bdg_forward(t, check="skip").to_json())
    return trees, maps


def _scaling_stream(config: dict, observable: str, n: int, count: int, seed: int, index: int,
                    budget: int):
    laws = _laws_for(json.dumps(config, sort_keys=True))
    rng = stream_rng(seed, index)
    fn, direction, positive = OBSERVABLES[observable]
    cond = Condition(size=n, positive=positive)
    rows = []
    for _ in range(count):
        t = sample_conditioned(laws, 1, 1 if positive else 0, cond, direction, rng,
                               retry_budget=budget, method="sequential")
        f = profile_functionals(t, n) if positive else {"mean": np.nan, "second": np.nan, "sup": np.nan}
        rows.append((fn(t), f["mean"], f["second"], f["sup"]))
    return rows


def collect_scaling(weights: WeightSequence, observable: str, sizes: Sequence[int], samples: int,
                    seed: int, workers: int = 1, budget: int = 10**6) -> dict:
    """size -> array of rows (observable, profile mean, profile second moment, rescaled sup)."""
    config = weights.to_config()
    jobs, owner = [], []
    index = 0
    for n in sizes:
        for count in _chunks(samples, SCALING_CHUNK):
            jobs.append((config, observable, int(n), count, seed, index, budget))
            owner.append(int(n))
            index += 1
    _announce(seed, len(jobs), workers)
    results = run_streams(_scaling_stream, jobs, workers)
    out = {int(n): [] for n in sizes}
    for n, rows in zip(owner, results):
        out[n].extend(rows)
    return {n: np.array(rows, dtype=float) for n, rows in out.items()}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

@click.group()
def main():
    """Boltzmann planar maps through labeled four-type trees."""


@main.command()
@click.option("--weights", "weights_path", type=str, required=True, help="weight sequence JSON")
@click.option("--out", type=str, default=None, help="report path (stdout if omitted)")
@click.option("--tol", type=float, default=1e-12, show_default=True, help="fixed point residual tolerance")
def solve(weights_path, out, tol):
    """Solve the admissibility system and classify the weights."""
    weights = load_weights(weights_path)
    report = solve_fixed_point(weights, tol=tol)
    with _open_out(out) as fh:
        fh.write(json.dumps(report.as_dict(), sort_keys=True) + "\n")
    if report.classification != REGULAR_CRITICAL:
        click.echo(f"classification: {report.classification}", err=True)
        sys.exit(EXIT_NOT_ADMISSIBLE)


@main.command()
@click.option("--weights", "weights_path", type=str, default=None, help="weight sequence JSON (q4 fixture if omitted)")
@click.option("--n", "n", type=click.IntRange(min=1), required=True, help="number of type-1 vertices")
@click.option("--samples", type=click.IntRange(min=1), default=1, show_default=True)
@click.option("--seed", type=click.IntRange(min=0, max=2**64 - 1), required=True)
@click.option("--condition", type=click.Choice(["none", "positive"]), default="positive", show_default=True)
@click.option("--x", "x", type=int, default=None, help="root label (1 when positive, else 0)")
@click.option("--direction", type=click.Choice(["forward", "reversed", "shuffled"]), default="forward",
              show_default=True)
@click.option("--out", type=str, default=None, help="tree dump (NDJSON); stdout if omitted")
@click.option("--maps", "maps_out", type=str, default=None, help="map dump (NDJSON)")
@click.option("--workers", type=click.IntRange(min=1), default=None)
@click.option("--budget", type=click.IntRange(min=1), default=10**6, show_default=True,
              help="rejection attempts per tree")
def sample(weights_path, n, samples, seed, condition, x, direction, out, maps_out, workers, budget):
    """Sample size-conditioned trees and, when positive, their maps."""
    weights = load_weights(weights_path)
    positive = condition == "positive"
    if x is None:
        x = 1 if positive else 0
    if maps_out and not (positive and x == 1 and direction == "forward"):
        raise click.UsageError("--maps needs --condition positive with root label 1 and forward displacements")
    _laws(weights)  # fail early on bad weights
    workers = resolve_workers(workers)
    config = weights.to_config()
    jobs = [(config, n, count, seed, i, positive, x, direction, bool(maps_out), budget)
            for i, count in enumerate(_chunks(samples, SAMPLE_CHUNK))]
    _announce(seed, len(jobs), workers)
    results = run_streams(_sample_stream, jobs, workers)
    with _open_out(out) as fh:
        for trees, _ in results:
            for line in trees:
                fh.write(line + "\n")
    if maps_out:
        with open(maps_out, "w", newline="") as fh:
            for _, maps in results:
                for line in maps:
                    fh.write(line + "\n")


def _bijection_verdict(weights: WeightSequence, bound: int) -> oracle.Verdict:
    """Face census, distance census, Euler and injectivity on every positive tree within bound."""
    laws = oracle.exact_laws(weights)
    table = oracle.enumerate_trees(laws, bound, 1, 1, "forward", Condition(positive=True))
    bad = []
    seen = {}
    for tree, _ in table.items:
        m = bdg_forward(tree, check="skip")
        if not m.is_vertex_map and m.euler_characteristic() != 2:
            bad.append(("euler", tree.to_json()))
        if not m.is_vertex_map and sorted(d for _, d in faces(m)) != face_degree_census(tree):
            bad.append(("faces", tree.to_json()))
        lab = tree.labels[tree.types == 1]
        want = np.bincount(np.concatenate([[0], lab]) if tree.count(1) > 1 else [0])
        if not np.array_equal(np.bincount(distances(m)), want):
            bad.append(("distances", tree.to_json()))
        code = m.canonical_form()
        if code in seen and seen[code] != tree.key():
            bad.append(("injective", tree.to_json()))
        seen[code] = tree.key()
    return oracle.Verdict("bijection", bound, len(table), Fraction(len(bad)), bad)


def run_suite(suite: str, weights: WeightSequence, bound: Optional[int], n_max: int,
              map_weights: Optional[WeightSequence], swap_types: bool, form: str) -> List[oracle.Verdict]:
    if suite == "counts":
        return [oracle.count_identity_check(6)]
    if suite == "bijection":
        return [_bijection_verdict(weights, bound or 12)]
    if suite == "pushforward":
        out = []
        for n in range(1, n_max + 1):
            try:
                out.append(oracle.pushforward_check(weights, n, bound or 12, map_weights))
            except MismatchReport as exc:
                out.append(oracle.Verdict("pushforward", bound or 12, len(exc.offending), Fraction(1),
                                          list(exc.offending), {"n": n}))
        return out
    if suite == "reroot":
        laws = oracle.exact_laws(weights)
        return [
            oracle.reroot_identity_check(laws, (1, 1), bound or 12, swap_types=swap_types),
            oracle.reroot_identity_check(laws, (1, 1, 1, 1), bound or 12, swap_types=swap_types),
            oracle.minlabel_unique_check(laws, min(bound or 10, 10)),
            oracle.minlabel_sum_check(laws, min(bound or 10, 10)),
        ]
    if suite == "displacement":
        return [oracle.displacement_image_check(3, form)]
    raise click.UsageError(f"unknown suite {suite!r}")


@main.command()
@click.option("--suite", type=click.Choice(["counts", "bijection", "pushforward", "reroot", "displacement"]),
              required=True)
@click.option("--weights", "weights_path", type=str, default=None, help="rational weights (q4 fixture if omitted)")
@click.option("--map-weights", "map_weights_path", type=str, default=None,
              help="weights for the map side of the pushforward check")
@click.option("--bound", type=click.IntRange(min=1), default=None, help="node bound for enumerations")
@click.option("--n", "n_max", type=click.IntRange(min=1, max=3), default=3, show_default=True,
              help="largest size for the pushforward check")
@click.option("--no-swaps", is_flag=True, help="disable type swaps when re-rooting")
@click.option("--form", type=click.Choice(["mirrored", "stated"]), default="mirrored", show_default=True,
              help="target law for the displacement suite")
@click.option("--out", type=str, default=None, help="verdict NDJSON (stdout if omitted)")
@click.option("--mismatch-out", type=str, default=None, help="where to write offending items on failure")
def verify(suite, weights_path, map_weights_path, bound, n_max, no_swaps, form, out, mismatch_out):
    """Run an exact verification suite."""
    weights = load_weights(weights_path)
    map_weights = load_weights(map_weights_path) if map_weights_path else None
    verdicts = run_suite(suite, weights, bound, n_max, map_weights, not no_swaps, form)
    with _open_out(out) as fh:
        for v in verdicts:
            fh.write(v.to_json() + "\n")
    if not all(v.equal for v in verdicts):
        raise Mismatch(verdicts) if mismatch_out is None else _write_mismatch(verdicts, mismatch_out)


def _write_mismatch(verdicts, path):
    with open(path, "w") as fh:
        for v in verdicts:
            if not v.equal:
                fh.write(json.dumps({"check": v.check, "offending": [o if isinstance(o, str) else repr(o) for o in v.offending]}) + "\n")
    click.echo(f"mismatch report: {path}", err=True)
    return Mismatch(verdicts)


@main.command()
@click.option("--weights", "weights_path", type=str, default=None, help="weight sequence JSON (q4 fixture if omitted)")
@click.option("--sizes", type=str, required=True, help="comma separated, strictly increasing")
@click.option("--samples", type=click.IntRange(min=2), required=True, help="samples per size")
@click.option("--seed", type=click.IntRange(min=0, max=2**64 - 1), required=True)
@click.option("--observable", type=click.Choice(sorted(OBSERVABLES)), default="radius", show_default=True)
@click.option("--condition", type=click.Choice(["none", "positive"]), default=None,
              help="must agree with the observable when given")
@click.option("--out", type=str, default=None, help="per-size CSV n,median,mean,q10,q90 (stdout if omitted)")
@click.option("--report", "report_path", type=str, default=None, help="exponent report JSON")
@click.option("--snake-paths", type=click.IntRange(min=0), default=0, show_default=True,
              help="compare the largest size's profile with this many snake paths")
@click.option("--grid", type=click.IntRange(min=2), default=2048, show_default=True, help="snake grid size")
@click.option("--tol", type=float, default=None, help="fail (exit 5) when the KS distance exceeds this")
@click.option("--workers", type=click.IntRange(min=1), default=None)
@click.option("--budget", type=click.IntRange(min=1), default=10**6, show_default=True)
def scaling(weights_path, sizes, samples, seed, observable, condition, out, report_path, snake_paths, grid,
            tol, workers, budget):
    """Fit the growth exponent of an observable and compare profiles with the snake."""
    size_list = _parse_sizes(sizes)
    weights = load_weights(weights_path)
    positive = OBSERVABLES[observable][2]
    if condition is not None and (condition == "positive") != positive:
        raise click.UsageError(f"observable {observable} uses condition {'positive' if positive else 'none'}")
    _laws(weights)
    workers = resolve_workers(workers)
    data = collect_scaling(weights, observable, size_list, samples, seed, workers, budget)
    boot_rng = stream_rng(seed, 1 << 32)
    est = estimate_scaling(None, observable, size_list, samples, boot_rng,
                           sampler=lambda n, k: data[n][:k, 0])
    with _open_out(out) as fh:
        est.write_csv(fh)
    report = est.report()
    failed = False
    if snake_paths:
        if not positive:
            raise click.UsageError("profile comparison needs a positive observable")
        top = size_list[-1]
        rows = data[top]
        snake = snake_ensemble(snake_paths, grid, stream_rng(seed, (1 << 32) + 1))
        cmp = profile_functional_compare({"mean": rows[:, 1], "second": rows[:, 2], "sup": rows[:, 3]}, snake)
        report["profile"] = {"n": top, "grid": grid, "paths": snake_paths, **cmp}
        if tol is not None and cmp["ks"]["mean"] > tol:
            failed = True
    if report_path:
        with _open_out(report_path) as fh:
            fh.write(json.dumps(report, sort_keys=True) + "\n")
    else:
        click.echo(json.dumps(report, sort_keys=True), err=True)
    if failed:
        sys.exit(EXIT_MISMATCH)


def run(argv: Optional[Sequence[str]] = None) -> int:
    """Invoke the CLI and translate errors into the exit-code contract."""
    try:
        main.main(args=list(argv) if argv is not None else None, standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except SystemExit as exc:
        return int(exc.code or 0)
    except click.Abort:
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_USAGE
    except (NotAdmissible, NotCritical, InvalidWeights) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_NOT_ADMISSIBLE
    except RetryBudgetExhausted as exc:
        click.echo(f"error: {exc} (acceptance rate {exc.acceptance_rate:.3g})", err=True)
        return EXIT_BUDGET
    except Mismatch as exc:
        for v in exc.verdicts:
            if not v.equal:
                click.echo(f"mismatch in {v.check}: {len(v.offending)} offending items", err=True)
        return EXIT_MISMATCH
    except MismatchReport as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_MISMATCH
    except BDGError as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_USAGE
    return EXIT_OK


def entry() -> None:
    sys.exit(run())


if __name__ == "__main__":
    entry()
