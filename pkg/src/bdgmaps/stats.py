"""Map observables, tree occupation processes and scaling fits."""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Union

import numpy as np
from scipy import stats as _sps

from .bijection import RootedPlanarMap, distances
from .errors import InsufficientSamples
from .trees import Condition, MultitypeSpatialTree, contour, sample_conditioned
from .weights import OffspringLaws
from . import _kernels as K
from .trees import DIRECTIONS, NO_FLOOR, _law_arrays, sequential_tables


# ---------------------------------------------------------------------------
# map observables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProfileHistogram:
    """Number of vertices at each graph distance from the root vertex."""

    counts: np.ndarray  # counts[d] = #{v : d(o, v) = d}

    @property
    def n_vertices(self) -> int:
        return int(self.counts.sum())

    @property
    def radius(self) -> int:
        return len(self.counts) - 1

    def as_dict(self) -> Dict[int, int]:
        return {d: int(c) for d, c in enumerate(self.counts) if c}

    def rescaled_support(self, n: int) -> np.ndarray:
        return np.arange(len(self.counts)) / n ** 0.25

    def moment(self, n: int, power: int = 1) -> float:
        """Moment of the rescaled profile, normalised to a probability measure."""
        x = self.rescaled_support(n)
        return float(np.dot(self.counts, x ** power) / self.n_vertices)

    def write_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["distance", "count"])
        for d, c in enumerate(self.counts):
            writer.writerow([d, int(c)])


def radius(m: RootedPlanarMap) -> int:
    return int(distances(m).max())


def profile(m: RootedPlanarMap) -> ProfileHistogram:
    return ProfileHistogram(np.bincount(distances(m)))


def label_profile(tree: MultitypeSpatialTree) -> ProfileHistogram:
    """Profile of the map of a positive tree, read off the type-1 labels.

    The extra vertex sits at distance 0 and every type-1 vertex at its label.
    """
    labels = tree.labels[tree.types == 1]
    return ProfileHistogram(np.bincount(np.concatenate([[0], labels]).astype(np.int64)))


def uniform_vertex_distance(m: RootedPlanarMap, rng) -> int:
    d = distances(m)
    return int(d[int(rng.integers(len(d)))])


# ---------------------------------------------------------------------------
# occupation processes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OccupationPaths:
    """Type-1 counts along the lexicographic order and along the contour.

    ``lam[k]`` counts type-1 vertices among v(0..k), ``visits[k]`` is one
    plus the number of up-steps to a type-1 vertex among the first k
    contour steps, and ``before[k]`` is the number of vertices strictly
    before the k-th type-1 vertex (with ``before[#t1] = #t``).
    """

    lam: np.ndarray
    visits: np.ndarray
    before: np.ndarray

    @property
    def n_type1(self) -> int:
        return int(self.lam[-1])

    @property
    def steps(self) -> int:
        return len(self.lam) - 1

    def lam_bar(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return self.lam[np.floor(self.steps * s).astype(np.int64)] / self.n_type1

    def visits_bar(self, s) -> np.ndarray:
        s = np.asarray(s, dtype=float)
        return self.visits[np.floor(2 * self.steps * s).astype(np.int64)] / self.n_type1

    @staticmethod
    def _sup_gap(values: np.ndarray, n_type1: int) -> float:
        # step function equal to values[k]/N on [k/L, (k+1)/L), L = len - 1
        steps = len(values) - 1
        if steps == 0:
            return 0.0
        level = values[:-1] / n_type1
        left = np.arange(steps) / steps
        right = np.arange(1, steps + 1) / steps
        gap = np.maximum(np.abs(level - left), np.abs(level - right))
        return float(max(gap.max(), abs(values[-1] / n_type1 - 1.0)))

    def lam_sup_deviation(self) -> float:
        """sup over [0, 1] of |lam_bar(s) - s|."""
        return self._sup_gap(self.lam, self.n_type1)

    def visits_sup_deviation(self) -> float:
        return self._sup_gap(self.visits, self.n_type1)


def occupation_paths(tree: MultitypeSpatialTree) -> OccupationPaths:
    ones = (tree.types == 1).astype(np.int64)
    lam = np.cumsum(ones)
    cp = contour(tree)
    up = np.diff(cp.C) == 1
    nodes = cp.depth_sequence[1:]
    visits = 1 + np.concatenate([[0], np.cumsum(up & (tree.types[nodes] == 1))])
    where = np.flatnonzero(ones)
    before = np.concatenate([where, [len(tree)]]).astype(np.int64)
    return OccupationPaths(lam, visits, before)


# ---------------------------------------------------------------------------
# tree-side observables
# ---------------------------------------------------------------------------

def _sup_label(tree: MultitypeSpatialTree) -> float:
    return float(tree.labels[tree.types == 1].max())


def _label_range(tree: MultitypeSpatialTree) -> float:
    lab = tree.labels[tree.types == 1]
    return float(lab.max() - lab.min())


def _vertices(tree: MultitypeSpatialTree) -> float:
    n = tree.count(1)
    return float(1 if n == 1 else n + 1)


def _constant(tree: MultitypeSpatialTree) -> float:
    return 1.0


# name -> (observable, displacement direction, positive conditioning)
OBSERVABLES: Dict[str, tuple] = {
    "radius": (_sup_label, "forward", True),
    "sup-label": (_sup_label, "shuffled", True),
    "label-range": (_label_range, "forward", False),
    "vertices": (_vertices, "forward", True),
    "constant": (_constant, "forward", True),
}


def sample_observable(laws: OffspringLaws, observable: str, n: int, samples: int, rng,
                      retry_budget: int = 10**6) -> np.ndarray:
    """``samples`` values of the observable on trees with n type-1 vertices.

    Positive observables use root label 1, others root label 0. The radius
    of the map is the largest type-1 label of the positive tree.
    """
    fn, direction, positive = OBSERVABLES[observable]
    cond = Condition(size=n, positive=positive)
    x = 1 if positive else 0
    out = np.empty(samples)
    for i in range(samples):
        t = sample_conditioned(laws, 1, x, cond, direction, rng, retry_budget=retry_budget, method="sequential")
        out[i] = fn(t)
    return out


@dataclass
class ScalingEstimate:
    observable: str
    sizes: List[int]
    medians: List[float]
    means: List[float]
    q10: List[float]
    q90: List[float]
    exponent: float
    ci: tuple
    log_constant: float
    fit_residual: float
    samples: Dict[int, np.ndarray] = field(default_factory=dict, repr=False)

    def write_csv(self, fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["n", "median", "mean", "q10", "q90"])
        for row in zip(self.sizes, self.medians, self.means, self.q10, self.q90):
            writer.writerow([row[0]] + [repr(float(v)) for v in row[1:]])

    def report(self) -> dict:
        return {
            "observable": self.observable,
            "sizes": list(self.sizes),
            "exponent": self.exponent,
            "ci_low": self.ci[0],
            "ci_high": self.ci[1],
            "log_constant": self.log_constant,
            "fit_residual": self.fit_residual,
        }

    def to_json(self) -> str:
        return json.dumps(self.report(), sort_keys=True)


def _fit(sizes: np.ndarray, values: np.ndarray):
    x = np.log(sizes)
    y = np.log(values)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return float(slope), float(intercept), resid


def fit_exponent(sizes: Sequence[int], samples: Dict[int, np.ndarray], statistic: str = "median",
                 bootstrap: int = 200, rng=None) -> tuple:
    """Log-log least squares of the per-size statistic against n.

    Returns (exponent, log constant, rms residual, (2.5%, 97.5%) bootstrap band).
    """
    stat = np.median if statistic == "median" else np.mean
    sizes = np.asarray(sizes, dtype=float)
    values = np.array([stat(samples[int(n)]) for n in sizes])
    if np.any(values <= 0):
        raise InsufficientSamples("statistic must be positive at every size for a log-log fit")
    slope, intercept, resid = _fit(sizes, values)
    rng = np.random.default_rng(0) if rng is None else rng
    boots = []
    for _ in range(bootstrap):
        vals = []
        for n in sizes:
            s = samples[int(n)]
            vals.append(stat(s[rng.integers(0, len(s), len(s))]))
        vals = np.array(vals)
        if np.all(vals > 0):
            boots.append(_fit(sizes, vals)[0])
    band = (float(np.percentile(boots, 2.5)), float(np.percentile(boots, 97.5))) if boots else (slope, slope)
    return slope, intercept, resid, band


def estimate_scaling(laws: OffspringLaws, observable: Union[str, Callable], sizes: Sequence[int],
                     samples_per_size: int, rng=None, sampler: Optional[Callable] = None,
                     bootstrap: int = 200) -> ScalingEstimate:
    """Exponent of n in the median of the observable.

    ``sampler(n, samples)`` may supply the per-size samples directly (the
    CLI uses it to spread work over independent streams).
    """
    sizes = [int(n) for n in sizes]
    if len(sizes) < 2:
        raise InsufficientSamples("need at least two sizes")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError("sizes must be strictly increasing")
    if samples_per_size < 2:
        raise InsufficientSamples("need at least two samples per size")
    rng = np.random.Generator(np.random.Philox(rng)) if rng is None or isinstance(rng, int) else rng
    name = observable if isinstance(observable, str) else getattr(observable, "__name__", "custom")
    data = {}
    for n in sizes:
        if sampler is not None:
            data[n] = np.asarray(sampler(n, samples_per_size), dtype=float)
        elif callable(observable):
            vals = np.empty(samples_per_size)
            for i in range(samples_per_size):
                t = sample_conditioned(laws, 1, 1, Condition(size=n, positive=True), "forward", rng,
                                       method="sequential")
                vals[i] = observable(t)
            data[n] = vals
        else:
            data[n] = sample_observable(laws, observable, n, samples_per_size, rng)
    slope, intercept, resid, band = fit_exponent(sizes, data, bootstrap=bootstrap, rng=rng)
    return ScalingEstimate(
        observable=name,
        sizes=sizes,
        medians=[float(np.median(data[n])) for n in sizes],
        means=[float(np.mean(data[n])) for n in sizes],
        q10=[float(np.quantile(data[n], 0.1)) for n in sizes],
        q90=[float(np.quantile(data[n], 0.9)) for n in sizes],
        exponent=slope,
        ci=band,
        log_constant=intercept,
        fit_residual=resid,
        samples=data,
    )


# ---------------------------------------------------------------------------
# profile functionals against the snake
# ---------------------------------------------------------------------------

def profile_functionals(tree: MultitypeSpatialTree, n: int) -> Dict[str, float]:
    """Mean, second moment and sup of the rescaled profile of a positive tree."""
    h = label_profile(tree)
    return {
        "mean": h.moment(n, 1),
        "second": h.moment(n, 2),
        "sup": h.radius / n ** 0.25,
    }


# map functional -> (snake functional, power of the fitted constant)
SNAKE_COUNTERPART = {"mean": ("cond_integral", 1), "second": ("cond_second", 2), "sup": ("range", 1)}


def ks_distance(a: np.ndarray, b: np.ndarray) -> tuple:
    """Two-sample Kolmogorov-Smirnov statistic and p-value."""
    res = _sps.ks_2samp(a, b)
    return float(res.statistic), float(res.pvalue)


def profile_functional_compare(map_values: Dict[str, np.ndarray], snake: Dict[str, np.ndarray],
                               fit_on: str = "mean") -> dict:
    """KS distances after fitting the single scale constant on one functional.

    The constant c makes the mean of c * (snake counterpart of ``fit_on``)
    match the mean of the map functional; every other functional is then
    compared with the same c (squared for the second moment).
    """
    snake_name, power = SNAKE_COUNTERPART[fit_on]
    c = float((np.mean(map_values[fit_on]) / np.mean(snake[snake_name])) ** (1.0 / power))
    report = {"constant": c, "fit_on": fit_on, "ks": {}, "p": {}}
    for name, values in map_values.items():
        sname, pw = SNAKE_COUNTERPART[name]
        d, p = ks_distance(np.asarray(values), c ** pw * np.asarray(snake[sname]))
        report["ks"][name] = d
        report["p"][name] = p
    return report


# ---------------------------------------------------------------------------
# batch kernels exposed for the tail and positivity estimates
# ---------------------------------------------------------------------------

def type1_size_counts(laws: OffspringLaws, trials: int, cap: int, rng, root_degree_one: bool = False) -> np.ndarray:
    """Histogram of #t1 over ``trials`` unconditioned trees.

    Entry k (1 <= k <= cap) counts trees with exactly k type-1 vertices and
    entry cap + 1 collects the larger ones.
    """
    sizes = K.type1_counts(rng, int(trials), *_law_arrays(laws), int(cap), bool(root_degree_one))
    return np.bincount(sizes, minlength=cap + 2)


def positivity_frequency(laws: OffspringLaws, n: int, trials: int, rng, direction: str = "forward",
                         x: int = 1) -> float:
    """Fraction of size-n trees (root label x) with every non-root type-1 label >= 1."""
    tables = sequential_tables(laws, n)
    hits = K.sequential_batch(rng, int(trials), int(n), K.ROOT_PLAIN, int(x), DIRECTIONS[direction], 1,
                              *tables.arrays(laws), 10**7)
    return hits / trials


def leaf_count_deviation(tree: MultitypeSpatialTree, mu1_zero: float) -> float:
    """|#type-1 leaves - mu1(0) * #t1| / #t1**(3/4)."""
    n = tree.count(1)
    return abs(len(tree.leaves(kind=1)) - mu1_zero * n) / n ** 0.75


__all__ = [
    "ProfileHistogram", "radius", "profile", "label_profile", "uniform_vertex_distance",
    "OccupationPaths", "occupation_paths", "OBSERVABLES", "sample_observable", "ScalingEstimate",
    "fit_exponent", "estimate_scaling", "profile_functionals", "ks_distance",
    "profile_functional_compare", "type1_size_counts", "positivity_frequency", "leaf_count_deviation",
    "NO_FLOOR",
]
