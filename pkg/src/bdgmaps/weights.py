"""Face-degree weights, the admissibility fixed point and the offspring laws.

A weight sequence ``q`` drives two bivariate series

    f_bullet(x, y)  = sum_{k,k'} x^k y^k' N_bullet(k,k') C(k+k',k) q_{2+2k+k'}
    f_diamond(x, y) = sum_{k,k'} x^k y^k' N_diamond(k,k') C(k+k',k) q_{1+2k+k'}

and the weights are admissible when ``(z+ - 1)/z+ = f_bullet(z+, zd)`` and
``zd = f_diamond(z+, zd)`` has a solution whose 3x3 mean matrix has spectral
radius at most one.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from numbers import Real
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Tuple

import mpmath
import numpy as np

from .errors import (
    DivergentSeries,
    InvalidWeights,
    NonConvergence,
    NotAdmissible,
    NotCritical,
)

BULLET = "bullet"
DIAMOND = "diamond"

NOT_ADMISSIBLE = "not-admissible"
SUBCRITICAL = "admissible-subcritical"
CRITICAL = "critical"
REGULAR_CRITICAL = "regular-critical"


# ---------------------------------------------------------------------------
# counting coefficients
# ---------------------------------------------------------------------------

def n_bullet(k: int, kp: int) -> int:
    """Number of nonnegative integer vectors of length k+kp+1 summing to k+1."""
    _check_pair(k, kp)
    return math.comb(2 * k + kp + 1, k + 1)


def n_diamond(k: int, kp: int) -> int:
    """Number of nonnegative integer vectors of length k+kp+1 summing to k."""
    _check_pair(k, kp)
    return math.comb(2 * k + kp, k)


def _check_pair(k, kp):
    if k < 0 or kp < 0 or int(k) != k or int(kp) != kp:
        raise ValueError(f"expected nonnegative integers, got ({k}, {kp})")


def _pairs_of_degree(which: str, degree: int) -> Iterable[Tuple[int, int]]:
    """Pairs (k, k') whose monomial in f_which carries q_degree."""
    offset = 2 if which == BULLET else 1
    rest = degree - offset
    for k in range(rest // 2 + 1):
        yield k, rest - 2 * k


def monomial_coefficient(which: str, k: int, kp: int) -> int:
    """Integer factor N(k,k') C(k+k',k) in front of x^k y^k' q_d."""
    count = n_bullet(k, kp) if which == BULLET else n_diamond(k, kp)
    return count * math.comb(k + kp, k)


def monomial_degree(which: str, k: int, kp: int) -> int:
    return (2 if which == BULLET else 1) + 2 * k + kp


# ---------------------------------------------------------------------------
# weight sequences
# ---------------------------------------------------------------------------

def _parse_weight(value):
    if isinstance(value, str):
        return Fraction(value.strip())
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, Real):
        return float(value)
    raise InvalidWeights(f"cannot interpret weight {value!r}")


@dataclass(frozen=True)
class WeightSequence:
    """Sparse face-degree weights with an optional geometric tail.

    Degrees listed in ``entries`` take their explicit value. When
    ``tail_rate`` is set, every degree above ``max(entries)`` gets
    ``tail_scale * tail_rate**degree``.
    """

    entries: Tuple[Tuple[int, object], ...]
    tail_rate: Optional[float] = None
    tail_scale: float = 0.0

    def __post_init__(self):
        seen = set()
        for degree, weight in self.entries:
            if int(degree) != degree or degree < 1:
                raise InvalidWeights(f"face degree must be a positive integer, got {degree!r}")
            if degree in seen:
                raise InvalidWeights(f"degree {degree} listed twice")
            seen.add(degree)
            if weight < 0:
                raise InvalidWeights(f"negative weight q_{degree} = {weight}")
        if self.tail_rate is not None:
            if not (0 < self.tail_rate < 1) or self.tail_scale < 0:
                raise InvalidWeights("geometric tail needs 0 < rate < 1 and scale >= 0")
        if not self.entries and not self.tail_scale:
            raise InvalidWeights("all weights vanish")

    # construction -----------------------------------------------------
    @classmethod
    def from_mapping(cls, q: Mapping, tail_rate=None, tail_scale=0.0) -> "WeightSequence":
        items = []
        for degree, weight in q.items():
            w = _parse_weight(weight)
            if w != 0:
                items.append((int(degree), w))
        items.sort()
        return cls(tuple(items), tail_rate, float(tail_scale))

    @classmethod
    def from_config(cls, config: Mapping) -> "WeightSequence":
        if "q" not in config:
            raise InvalidWeights("config needs a 'q' mapping")
        support = config.get("support", "finite")
        if support == "finite":
            return cls.from_mapping(config["q"])
        if isinstance(support, Mapping) and support.get("kind") == "geometric-tail":
            return cls.from_mapping(config["q"], float(support["rate"]), float(support.get("scale", 1.0)))
        raise InvalidWeights(f"unknown support kind {support!r}")

    @classmethod
    def load(cls, path) -> "WeightSequence":
        with open(Path(path)) as fh:
            return cls.from_config(json.load(fh))

    def to_config(self) -> dict:
        q = {str(d): (str(w) if isinstance(w, Fraction) else w) for d, w in self.entries}
        if self.tail_rate is None:
            return {"q": q, "support": "finite"}
        return {"q": q, "support": {"kind": "geometric-tail", "rate": self.tail_rate, "scale": self.tail_scale}}

    # queries ----------------------------------------------------------
    @property
    def is_finite(self) -> bool:
        return self.tail_rate is None or self.tail_scale == 0

    @property
    def max_explicit_degree(self) -> int:
        return max((d for d, _ in self.entries), default=0)

    def q(self, degree: int):
        for d, w in self.entries:
            if d == degree:
                return w
        if not self.is_finite and degree > self.max_explicit_degree:
            return self.tail_scale * self.tail_rate ** degree
        return 0

    @property
    def is_rational(self) -> bool:
        return self.is_finite and all(isinstance(w, (int, Fraction)) for _, w in self.entries)

    @property
    def has_odd_face(self) -> bool:
        """True if some q_{2j+1} > 0 with j >= 1."""
        if not self.is_finite:
            return True
        return any(d % 2 == 1 and d >= 3 for d, _ in self.entries)

    def fractions(self) -> Dict[int, Fraction]:
        if not self.is_rational:
            raise InvalidWeights("exact arithmetic needs finitely supported rational weights")
        return {d: Fraction(w) for d, w in self.entries}

    def perturbed(self, degree: int, factor) -> "WeightSequence":
        """Copy with q_degree multiplied by ``factor`` (negative controls)."""
        items = {d: w for d, w in self.entries}
        items[degree] = items.get(degree, 0) * factor
        return WeightSequence.from_mapping(items, self.tail_rate, self.tail_scale)

    # series -----------------------------------------------------------
    def monomials(self, which: str, max_degree: Optional[int] = None) -> List[Tuple[int, int, float]]:
        """(k, k', coefficient) for every monomial of f_which up to ``max_degree``."""
        top = self.max_explicit_degree if max_degree is None else max_degree
        out = []
        for degree in range(1, top + 1):
            qd = self.q(degree)
            if not qd:
                continue
            for k, kp in _pairs_of_degree(which, degree):
                out.append((k, kp, monomial_coefficient(which, k, kp) * qd))
        return out


def q4_fixture() -> WeightSequence:
    """Quadrangulations: q_4 = 1/12, critical with (z+, zd) = (2, 0)."""
    return WeightSequence.from_mapping({4: Fraction(1, 12)})


def mixed_fixture() -> WeightSequence:
    """Degrees 2, 3, 4 with a rational critical point (z+, zd) = (9/4, 3/4)."""
    return WeightSequence.from_mapping({2: Fraction(29, 96), 3: Fraction(7, 108), 4: Fraction(1, 54)})


# ---------------------------------------------------------------------------
# evaluation
# ---------------------------------------------------------------------------

_TAIL_EPS = 1e-18


def _tail_terms(weights: WeightSequence, x: float, y: float, order: int):
    """Degree cutoff and certified tail bound for a geometric tail.

    Uses N(k,k') <= 2^(d-1) and sum_k C(m-k,k) a^k b^(m-2k) <= (b + sqrt a)^m,
    and Cauchy estimates for derivatives (``order`` = total derivative order).
    """
    h = 1e-3 * (1.0 + x + y) if order else 0.0
    rho = (y + h) + math.sqrt(x + h)
    ratio = 2.0 * weights.tail_rate * rho
    if ratio >= 1.0:
        raise DivergentSeries(f"geometric tail bound fails at ({x}, {y}): ratio {ratio:.3g} >= 1")
    factor = math.factorial(order) / h ** order if order else 1.0
    start = weights.max_explicit_degree
    degree = start
    while True:
        bound = factor * weights.tail_scale * weights.tail_rate * ratio ** degree / (1.0 - ratio)
        if bound < _TAIL_EPS or degree > 20000:
            return degree, bound
        degree += 1


def _falling(n: int, m: int) -> int:
    out = 1
    for i in range(m):
        out *= n - i
    return out


def _series(monos, x, y, dx=0, dy=0, y_shift=0):
    """sum coef * (k)_dx (k')_dy x^(k-dx) y^(k'-dy-y_shift) over the monomials."""
    total = 0.0
    for k, kp, coef in monos:
        a = _falling(k, dx)
        b = _falling(kp, dy)
        if a == 0 or b == 0:
            continue
        ey = kp - dy - y_shift
        if ey < 0:
            if y == 0:
                return math.inf
            term = y ** ey
        else:
            term = y ** ey if ey else 1.0
        total += float(coef) * a * b * (x ** (k - dx) if k - dx else 1.0) * term
    return total


def _monos_for(weights: WeightSequence, which: str, x: float, y: float, order: int = 0):
    if weights.is_finite:
        return weights.monomials(which), 0.0
    degree, bound = _tail_terms(weights, x, y, order)
    return weights.monomials(which, degree), bound


def eval_f(weights: WeightSequence, which: str, x: float, y: float, dx: int = 0, dy: int = 0) -> float:
    """Evaluate f_which or one of its partial derivatives at (x, y) >= 0."""
    if which not in (BULLET, DIAMOND):
        raise ValueError(f"which must be {BULLET!r} or {DIAMOND!r}")
    if x < 0 or y < 0:
        raise ValueError("f is only evaluated on the nonnegative quadrant")
    monos, _ = _monos_for(weights, which, float(x), float(y), dx + dy)
    value = _series(monos, float(x), float(y), dx, dy)
    if not math.isfinite(value):
        raise DivergentSeries(f"f_{which} has no finite value at ({x}, {y})")
    return value


def eval_f_exact(weights: WeightSequence, which: str, x: Fraction, y: Fraction) -> Fraction:
    total = Fraction(0)
    for k, kp, coef in weights.monomials(which):
        total += Fraction(coef) * Fraction(x) ** k * Fraction(y) ** kp
    return total


# ---------------------------------------------------------------------------
# spectral radius
# ---------------------------------------------------------------------------

def spectral_radius(m, tol: float = 1e-13, max_iter: int = 20000, fallback: bool = True) -> float:
    """Perron root of a nonnegative square matrix.

    Power iteration runs on ``m + I`` (aperiodic, same Perron vector) with
    Collatz-Wielandt bounds as the stopping rule. Reducible or defective
    inputs stall; they then fall back to a 50-digit dense eigensolve, unless
    ``fallback`` is False, in which case NonConvergence is raised.
    """
    a = np.asarray(m, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError("expected a square matrix")
    if np.any(a < 0):
        raise ValueError("expected a nonnegative matrix")
    shifted = a + np.eye(a.shape[0])
    v = np.ones(a.shape[0])
    for _ in range(max_iter):
        w = shifted @ v
        lower = np.min(w / v)
        upper = np.max(w / v)
        if upper - lower <= tol:
            return float(0.5 * (upper + lower) - 1.0)
        v = w / np.max(w)
        if np.any(v <= 0):
            break
    if not fallback:
        raise NonConvergence("power iteration did not reach the requested tolerance")
    return _dense_radius(a)


def _dense_radius(a: np.ndarray) -> float:
    with mpmath.workdps(50):
        values = mpmath.eig(mpmath.matrix(a.tolist()), left=False, right=False)
        return float(max(abs(v) for v in values))


# ---------------------------------------------------------------------------
# fixed point
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CriticalityReport:
    z_plus: float
    z_diamond: float
    z_total: float
    matrix: Tuple[Tuple[float, ...], ...]
    spectral_radius: float
    classification: str
    residual: float
    iterations: int = 0
    # the rooted partition function is finite but never evaluated
    z_rooted: Optional[float] = field(default=None)

    def as_dict(self) -> dict:
        return {
            "z_plus": self.z_plus,
            "z_diamond": self.z_diamond,
            "z_total": self.z_total,
            "rho": self.spectral_radius,
            "classification": self.classification,
            "residual": self.residual,
            "matrix": [list(r) for r in self.matrix],
        }

    @property
    def is_critical(self) -> bool:
        return self.classification in (CRITICAL, REGULAR_CRITICAL)


def mean_matrix(weights: WeightSequence, zp: float, zd: float) -> np.ndarray:
    """The 3x3 matrix on types (1, 2, 3/4-merged) evaluated at (zp, zd)."""
    fb_monos, _ = _monos_for(weights, BULLET, zp, zd, 1)
    fd_monos, _ = _monos_for(weights, DIAMOND, zp, zd, 1)
    m = np.zeros((3, 3))
    m[0, 2] = zp - 1.0
    m[1, 0] = zp * _series(fd_monos, zp, zd, dx=1, y_shift=1)
    m[1, 1] = _series(fd_monos, zp, zd, dy=1)
    m[2, 0] = zp * zp / (zp - 1.0) * _series(fb_monos, zp, zd, dx=1)
    m[2, 1] = zp * zd / (zp - 1.0) * _series(fb_monos, zp, zd, dy=1)
    if not np.all(np.isfinite(m)):
        raise DivergentSeries("mean matrix has an infinite entry")
    return m


def _residual(weights, zp, zd):
    fb = eval_f(weights, BULLET, zp, zd)
    fd = eval_f(weights, DIAMOND, zp, zd)
    return max(abs((zp - 1.0) / zp - fb), abs(zd - fd))


def _picard(weights, delta, damping, step_tol, max_iter):
    zp, zd = 1.0 + delta, delta
    for it in range(1, max_iter + 1):
        try:
            fb = eval_f(weights, BULLET, zp, zd)
            fd = eval_f(weights, DIAMOND, zp, zd)
        except DivergentSeries as exc:
            raise NotAdmissible(f"series diverge along the iteration: {exc}") from exc
        if fb >= 1.0:
            raise NotAdmissible("f_bullet reached 1: no admissible fixed point")
        new_p = (1 - damping) * zp + damping / (1.0 - fb)
        new_d = (1 - damping) * zd + damping * fd
        step = abs(new_p - zp) + abs(new_d - zd)
        zp, zd = new_p, new_d
        if zp > 1e8 or zd > 1e8:
            raise NotAdmissible("iteration escapes to infinity")
        if step < step_tol:
            return zp, zd, it
    return zp, zd, max_iter


def _newton_polish(weights, zp, zd, max_iter=400):
    """Newton's method in 60-digit arithmetic.

    At a critical point the Jacobian is singular and Newton only halves the
    error per step, so extended precision is what delivers double accuracy.
    """
    def to_mp(c):
        if isinstance(c, Fraction):
            return mpmath.mpf(c.numerator) / c.denominator
        return mpmath.mpf(c)

    def ev(monos, x, y, dx, dy):
        s = mpmath.mpf(0)
        for k, kp, c in monos:
            a, b = _falling(k, dx), _falling(kp, dy)
            if a and b:
                s += c * a * b * x ** (k - dx) * y ** (kp - dy)
        return s

    with mpmath.workdps(60):
        fb = [(k, kp, to_mp(c)) for k, kp, c in _monos_for(weights, BULLET, zp, zd)[0]]
        fd = [(k, kp, to_mp(c)) for k, kp, c in _monos_for(weights, DIAMOND, zp, zd)[0]]
        x, y = mpmath.mpf(zp), mpmath.mpf(zd)
        for _ in range(max_iter):
            f1 = (x - 1) / x - ev(fb, x, y, 0, 0)
            f2 = y - ev(fd, x, y, 0, 0)
            j11 = 1 / x ** 2 - ev(fb, x, y, 1, 0)
            j12 = -ev(fb, x, y, 0, 1)
            j21 = -ev(fd, x, y, 1, 0)
            j22 = 1 - ev(fd, x, y, 0, 1)
            det = j11 * j22 - j12 * j21
            if det == 0:
                break
            sx = (f1 * j22 - f2 * j12) / det
            sy = (j11 * f2 - j21 * f1) / det
            x, y = x - sx, y - sy
            if y < 0:
                y = mpmath.mpf(0)
            if abs(sx) + abs(sy) < mpmath.mpf(10) ** -40:
                break
        return float(x), float(y)


def solve_fixed_point(
    weights: WeightSequence,
    tol: float = 1e-12,
    *,
    delta: float = 0.0,
    damping: float = 1.0,
    max_iter: int = 1_000_000,
    critical_tol: float = 1e-6,
    regular_eps: float = 1e-3,
) -> CriticalityReport:
    """Solve the admissibility system and classify the weights.

    Damped Picard iteration from (1+delta, delta) approaches the minimal
    solution from below; a high-precision Newton polish finishes it.
    """
    zp0, zd0, iters = _picard(weights, delta, damping, 1e-7, max_iter)
    zp, zd = _newton_polish(weights, zp0, zd0)
    if not (zp > 1.0 and zd >= 0.0) or zp < zp0 - 1e-6:
        zp, zd = zp0, zd0
    residual = _residual(weights, zp, zd)
    if residual > tol:
        raise NotAdmissible(f"fixed point residual {residual:.3g} exceeds tolerance {tol:.3g}")
    m = mean_matrix(weights, zp, zd)
    rho = spectral_radius(m)
    if rho > 1.0 + critical_tol:
        raise NotAdmissible(f"spectral radius {rho:.12g} exceeds 1")
    if abs(rho - 1.0) <= critical_tol:
        try:
            eval_f(weights, BULLET, zp + regular_eps, zd + regular_eps)
            label = REGULAR_CRITICAL
        except DivergentSeries:
            label = CRITICAL
    else:
        label = SUBCRITICAL
    return CriticalityReport(
        z_plus=zp,
        z_diamond=zd,
        z_total=zd * zd + 2.0 * zp - 1.0,
        matrix=tuple(tuple(float(v) for v in row) for row in m),
        spectral_radius=rho,
        classification=label,
        residual=residual,
        iterations=iters,
    )


def rational_fixed_point(weights: WeightSequence, report: CriticalityReport, max_den: int = 10**6):
    """Exact (z+, zd) as Fractions, verified against the fixed-point system.

    Raises InvalidWeights when the float solution has no rational
    counterpart satisfying both equations exactly.
    """
    zp = Fraction(report.z_plus).limit_denominator(max_den)
    zd = Fraction(report.z_diamond).limit_denominator(max_den)
    ok = (
        eval_f_exact(weights, BULLET, zp, zd) == (zp - 1) / zp
        and eval_f_exact(weights, DIAMOND, zp, zd) == zd
    )
    if not ok:
        raise InvalidWeights("fixed point is not rational; exact arithmetic unavailable")
    return zp, zd


# ---------------------------------------------------------------------------
# offspring laws
# ---------------------------------------------------------------------------

def alias_table(probs: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Walker/Vose alias table (threshold, alias) for a finite law."""
    n = len(probs)
    scaled = np.asarray(probs, dtype=float) * n / np.sum(probs)
    threshold = np.ones(n)
    alias = np.arange(n, dtype=np.int64)
    small = [i for i in range(n) if scaled[i] < 1.0]
    large = [i for i in range(n) if scaled[i] >= 1.0]
    while small and large:
        s = small.pop()
        l = large.pop()
        threshold[s] = scaled[s]
        alias[s] = l
        scaled[l] = scaled[l] + scaled[s] - 1.0
        (small if scaled[l] < 1.0 else large).append(l)
    for i in small + large:
        threshold[i] = 1.0
    return threshold, alias


@dataclass(frozen=True)
class PairLaw:
    """A law on pairs (k, k') with parallel arrays and an alias table."""

    k: np.ndarray
    kp: np.ndarray
    prob: np.ndarray
    threshold: np.ndarray
    alias: np.ndarray
    tail_mass: float = 0.0

    @classmethod
    def build(cls, pairs, probs, tail_mass=0.0):
        probs = np.asarray(probs, dtype=float)
        probs = probs / probs.sum()
        thr, ali = alias_table(probs) if len(probs) else (np.ones(0), np.zeros(0, np.int64))
        return cls(
            np.array([p[0] for p in pairs], dtype=np.int64),
            np.array([p[1] for p in pairs], dtype=np.int64),
            probs,
            thr,
            ali,
            float(tail_mass),
        )

    @classmethod
    def empty(cls):
        z = np.zeros(0, dtype=np.int64)
        return cls(z, z.copy(), np.zeros(0), np.ones(0), z.copy(), 0.0)

    def as_dict(self) -> Dict[Tuple[int, int], float]:
        return {(int(a), int(b)): float(p) for a, b, p in zip(self.k, self.kp, self.prob)}

    @property
    def defined(self) -> bool:
        return len(self.prob) > 0

    @property
    def max_size(self) -> int:
        return int(np.max(self.k + self.kp)) if self.defined else 0


@dataclass(frozen=True)
class OffspringLaws:
    z_plus: float
    z_diamond: float
    geometric_p: float
    mu1: np.ndarray
    mu3: PairLaw
    mu4: PairLaw
    mean_matrix: np.ndarray
    eigvec_a: np.ndarray
    type_frequencies: np.ndarray
    truncation_bound: int
    tail_mass: float

    def mu2(self) -> Dict[Tuple[int, int, int, int], float]:
        return {(0, 0, 0, 1): 1.0}


def _law_from_monomials(monos, x, y, total, trunc_mass):
    pairs, probs = [], []
    for k, kp, coef in monos:
        p = float(coef) * (x ** k if k else 1.0) * (y ** kp if kp else 1.0) / total
        if p > 0:
            pairs.append((k, kp))
            probs.append(p)
    order = sorted(range(len(pairs)), key=lambda i: (pairs[i][0] + pairs[i][1], pairs[i][0]))
    pairs = [pairs[i] for i in order]
    probs = [probs[i] for i in order]
    # drop the largest families while their cumulative mass stays below trunc_mass
    tail = 0.0
    while probs and tail + probs[-1] < trunc_mass and len(probs) > 1:
        tail += probs.pop()
        pairs.pop()
    return PairLaw.build(pairs, probs, tail)


def _null_vector(a: np.ndarray) -> np.ndarray:
    _, _, vt = np.linalg.svd(a)
    v = vt[-1]
    if v.sum() < 0:
        v = -v
    v = np.where(np.abs(v) < 1e-14, 0.0, v)
    return v / v.sum()


def build_offspring(report: CriticalityReport, weights: WeightSequence, trunc_mass: float = 1e-12) -> OffspringLaws:
    """Offspring laws of the four-type tree attached to critical weights."""
    if not report.is_critical:
        raise NotCritical(f"weights are {report.classification}; offspring laws need criticality")
    zp, zd = report.z_plus, report.z_diamond
    p = 1.0 / zp
    kmax = 0
    mu1 = []
    mass = 0.0
    while 1.0 - mass >= trunc_mass and kmax < 100000:
        mu1.append(p * (1 - p) ** kmax)
        mass += mu1[-1]
        kmax += 1
    fb_monos, _ = _monos_for(weights, BULLET, zp, zd)
    fd_monos, _ = _monos_for(weights, DIAMOND, zp, zd)
    total_b = (zp - 1.0) / zp
    mu3 = _law_from_monomials(fb_monos, zp, zd, total_b, trunc_mass)
    mu4 = _law_from_monomials(fd_monos, zp, zd, zd, trunc_mass) if zd > 0 else PairLaw.empty()

    m3 = np.asarray(report.matrix)
    mm = np.zeros((4, 4))
    mm[0, 2] = zp - 1.0
    mm[1, 3] = 1.0
    mm[2, 0] = m3[2, 0]
    mm[2, 1] = m3[2, 1]
    mm[3, 0] = m3[1, 0]
    mm[3, 1] = m3[1, 1]
    a = _null_vector(mm - np.eye(4))
    freq = _null_vector(mm.T - np.eye(4))
    return OffspringLaws(
        z_plus=zp,
        z_diamond=zd,
        geometric_p=p,
        mu1=np.array(mu1),
        mu3=mu3,
        mu4=mu4,
        mean_matrix=mm,
        eigvec_a=a,
        type_frequencies=freq,
        truncation_bound=max(mu3.max_size, mu4.max_size),
        tail_mass=max(mu3.tail_mass, mu4.tail_mass, 1.0 - mass),
    )


def sample_ordering(laws: OffspringLaws, parent_type: int, kk: Tuple[int, int], rng) -> Tuple[int, ...]:
    """Uniform interleaving of k ones and k' twos (laws only checks support)."""
    if parent_type not in (3, 4):
        raise ValueError("orderings are drawn for type-3 and type-4 parents only")
    k, kp = kk
    law = laws.mu3 if parent_type == 3 else laws.mu4
    if law.defined and not np.any((law.k == k) & (law.kp == kp)):
        raise ValueError(f"pair {kk} outside the support of the type-{parent_type} law")
    n = k + kp
    word = [2] * n
    need = k
    for i in range(n):
        if need and rng.random() * (n - i) < need:
            word[i] = 1
            need -= 1
    return tuple(word)


@lru_cache(maxsize=None)
def _cached_fixture(name: str):
    weights = {"q4": q4_fixture, "mixed": mixed_fixture}[name]()
    report = solve_fixed_point(weights)
    return weights, report, build_offspring(report, weights)


def fixture(name: str):
    """(weights, report, laws) for a named fixture, solved once per process."""
    return _cached_fixture(name)
