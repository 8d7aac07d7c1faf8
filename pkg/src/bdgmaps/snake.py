"""Discrete Brownian snake and its re-rooting at the label minimum.

A path on a grid of ``m`` steps is a uniform Dyck path (simple random walk
excursion) scaled by ``m**-1/2``, carrying Gaussian labels that branch
along the tree coded by the excursion: each up-step adds an independent
centred increment of variance ``m**-1/2``, so that
``Cov(r(s), r(s')) = min b on [s, s']`` holds exactly on the grid.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from ._accel import kernel
from .errors import NonUniqueMinimum, RetryBudgetExhausted

FUNCTIONALS = ("sup", "inf", "range", "integral", "cond_integral", "cond_second")


@kernel
def _dyck(rng, m, arr, depth):
    """Uniform Dyck path of length m via the cycle lemma; fills depth[0..m]."""
    half = m // 2
    for i in range(m + 1):
        arr[i] = 1 if i < half else -1
    for i in range(m, 0, -1):
        j = int(rng.random() * (i + 1))
        if j > i:
            j = i
        t = arr[i]
        arr[i] = arr[j]
        arr[j] = t
    s = 0
    low = 1
    at = 0
    for k in range(m + 1):
        s += arr[k]
        if s < low:
            low = s
            at = k + 1
    start = at % (m + 1)
    depth[0] = 0
    for i in range(m):
        depth[i + 1] = depth[i] + arr[(start + i) % (m + 1)]


@kernel
def _labels(rng, m, x, sd, depth, stack, r):
    stack[0] = x
    r[0] = x
    for i in range(m):
        d = depth[i + 1]
        if d > depth[i]:
            stack[d] = stack[d - 1] + sd * rng.standard_normal()
        r[i + 1] = stack[d]


@kernel
def _path(rng, m, x, b, r):
    arr = np.empty(m + 1, np.int64)
    depth = np.empty(m + 1, np.int64)
    stack = np.empty(m // 2 + 2, np.float64)
    _dyck(rng, m, arr, depth)
    _labels(rng, m, x, m ** -0.25, depth, stack, r)
    scale = m ** -0.5
    for i in range(m + 1):
        b[i] = depth[i] * scale


@kernel
def _ensemble(rng, count, m, x, out):
    """Per path: sup r, inf r, range, mean of r, mean and 2nd moment of r - inf r.

    Means run over the m grid points 0..m-1 (the circle), so they equal the
    integrals of the re-rooted path as well.
    """
    arr = np.empty(m + 1, np.int64)
    depth = np.empty(m + 1, np.int64)
    stack = np.empty(m // 2 + 2, np.float64)
    r = np.empty(m + 1, np.float64)
    sd = m ** -0.25
    for c in range(count):
        _dyck(rng, m, arr, depth)
        _labels(rng, m, x, sd, depth, stack, r)
        hi = r[0]
        lo = r[0]
        total = 0.0
        for i in range(m):
            v = r[i]
            total += v
            if v > hi:
                hi = v
            if v < lo:
                lo = v
        second = 0.0
        for i in range(m):
            second += (r[i] - lo) ** 2
        out[c, 0] = hi
        out[c, 1] = lo
        out[c, 2] = hi - lo
        out[c, 3] = total / m
        out[c, 4] = total / m - lo
        out[c, 5] = second / m


@dataclass(frozen=True)
class SnakePath:
    """Excursion ``b`` and labels ``r`` on the grid i/m, i = 0..m."""

    m: int
    b: np.ndarray
    r: np.ndarray
    s_star: int
    x: float = 0.0
    conditioned: bool = False

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.m + 1) / self.m

    def functionals(self) -> dict:
        r = self.r[: self.m]
        return {
            "sup": float(r.max()),
            "inf": float(r.min()),
            "range": float(r.max() - r.min()),
            "integral": float(r.mean()),
        }


def _rng(rng):
    if rng is None or isinstance(rng, (int, np.integer)):
        return np.random.Generator(np.random.Philox(rng))
    return rng


def _grid_ok(m: int) -> None:
    if m < 2 or m % 2:
        raise ValueError(f"grid size must be an even integer >= 2, got {m}")


def _argmin_first(r: np.ndarray, strict: bool = False) -> int:
    i = int(np.argmin(r))
    if strict and np.count_nonzero(r == r[i]) > 1:
        raise NonUniqueMinimum(f"label minimum {r[i]} attained more than once")
    return i


def sample_snake(m: int, x: float = 0.0, rng=None) -> SnakePath:
    _grid_ok(m)
    rng = _rng(rng)
    b = np.empty(m + 1)
    r = np.empty(m + 1)
    _path(rng, m, float(x), b, r)
    return SnakePath(m, b, r, _argmin_first(r[:m]), float(x))


def condition_snake(path: SnakePath, strict_minimum: bool = False) -> SnakePath:
    """Re-root the path at the first grid minimiser of its labels.

    b'(s) = b(s*) + b({s*+s}) - 2 min of b between the two times, and
    r'(s) = r({s*+s}) - r(s*), with indices taken modulo m. Ties are broken
    at the first index unless ``strict_minimum`` is set.
    """
    m = path.m
    s = _argmin_first(path.r[:m], strict_minimum)
    idx = (s + np.arange(m + 1)) % m
    b = path.b
    # running minimum of b between s and each index, on both sides of s
    fwd = np.minimum.accumulate(b[s:m + 1])
    back = np.minimum.accumulate(b[s::-1])[::-1]
    between = np.where(idx >= s, fwd[np.maximum(idx - s, 0)], back[np.minimum(idx, s)])
    b_new = b[s] + b[idx] - 2 * between
    b_new[m] = 0.0
    r_new = path.r[idx] - path.r[s]
    return SnakePath(m, b_new, r_new, 0, 0.0, True)


def sample_positive_snake(m: int, x: float, rng=None, budget: int = 10**5) -> SnakePath:
    """Snake started at x > 0 conditioned on inf r >= 0, by rejection."""
    if x <= 0:
        raise ValueError("rejection conditioning needs x > 0")
    rng = _rng(rng)
    for attempt in range(1, budget + 1):
        p = sample_snake(m, x, rng)
        if p.r.min() >= 0:
            return SnakePath(p.m, p.b, p.r, p.s_star, p.x, True)
    raise RetryBudgetExhausted(f"no nonnegative path in {budget} attempts", attempts=budget, accepted=0)


def snake_ensemble(count: int, m: int, rng=None, x: float = 0.0, chunk: int = 4096) -> dict:
    """Functionals of ``count`` independent paths, as arrays keyed by FUNCTIONALS.

    "cond_integral" and "cond_second" are the mean and second moment of
    the re-rooted labels, which are r - inf r read cyclically.
    """
    _grid_ok(m)
    rng = _rng(rng)
    out = np.empty((count, len(FUNCTIONALS)))
    for lo in range(0, count, chunk):
        hi = min(count, lo + chunk)
        block = np.empty((hi - lo, len(FUNCTIONALS)))
        _ensemble(rng, hi - lo, m, float(x), block)
        out[lo:hi] = block
    return {name: out[:, i] for i, name in enumerate(FUNCTIONALS)}


def write_ensemble_csv(ensemble: dict, fh) -> None:
    writer = csv.writer(fh, lineterminator="\n")
    names = ["sup", "inf", "range", "integral"]
    writer.writerow(names)
    for row in zip(*(ensemble[k] for k in names)):
        writer.writerow([repr(float(v)) for v in row])
