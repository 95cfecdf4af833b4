"""Random compositions: word sampling, synchronization, repellers and stationary measures.

All sampling is counter based (see :mod:`rotsync.rng`): sample ``s`` of a
run with seed ``seed`` only ever reads the stream ``stream_key(seed, s)``.
"""
from __future__ import annotations

import csv
import enum
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from . import rng
from .circle import GeneratorSystem, Word, compose, wrap


class NestingViolation(RuntimeError):
    """The selected dyadic arcs failed to nest."""


class Direction(enum.Enum):
    FORWARD = "forward"
    INVERSE = "inverse"


def sample_word(nu: Sequence[float], n: int, seed: int, index: int = 0) -> Word:
    """Bernoulli word of length ``n`` from stream ``index`` of ``seed``."""
    if n < 0:
        raise ValueError("n must be nonnegative")
    cumnu = rng.cumulative(nu)
    key = rng.stream_key(seed, index)
    return Word.from_codes(rng.letters_from_uniforms(rng.uniform_block(key, 0, n), cumnu))


def sample_word_rows(nu: Sequence[float], n: int, M: int, seed: int) -> np.ndarray:
    """``(M, n)`` array of 0-based codes; row ``s`` equals ``sample_word(nu, n, seed, s)``."""
    cumnu = rng.cumulative(nu)
    keys = rng.stream_keys(seed, np.arange(M))
    out = np.empty((M, n), dtype=np.int32)
    for t in range(n):
        out[:, t] = rng.letters_from_uniforms(rng.uniforms(keys, t), cumnu)
    return out


# ---------------------------------------------------------------------------
# measures
# ---------------------------------------------------------------------------


class EmpiricalMeasure:
    """Uniformly weighted sample of circle points, kept sorted."""

    def __init__(self, samples):
        s = np.sort(wrap(np.asarray(samples, dtype=np.float64).ravel()))
        if s.size < 1:
            raise ValueError("an empirical measure needs at least one sample")
        s.setflags(write=False)
        self.samples = s

    @property
    def count(self) -> int:
        return int(self.samples.size)

    def _upto(self, x, side="right"):
        return np.searchsorted(self.samples, x, side=side)

    def cdf(self, a, x):
        """Fraction of samples on the closed positive arc from ``a`` to ``x``."""
        a = wrap(np.asarray(a, dtype=np.float64))
        x = wrap(np.asarray(x, dtype=np.float64))
        lo = self._upto(a, "left")
        hi = self._upto(x, "right")
        n = self.count
        cnt = np.where(a <= x, hi - lo, (n - lo) + hi)
        out = cnt / n
        return float(out) if np.ndim(out) == 0 else out

    def arc_mass(self, x, y):
        return self.cdf(x, y)

    def distribution(self, x):
        """Ordinary CDF ``mu([0, x])`` for x in [0, 1]."""
        return self._upto(np.asarray(x, dtype=np.float64), "right") / self.count

    def mass_near(self, points, radius: float) -> np.ndarray:
        """Mass within circle distance ``radius`` of each point."""
        pts = np.atleast_1d(np.asarray(points, dtype=np.float64))
        return np.array([self.cdf(p - radius, p + radius) for p in pts])

    def ks_uniform(self) -> float:
        s = self.samples
        n = self.count
        i = np.arange(1, n + 1)
        return float(max(np.max(i / n - s), np.max(s - (i - 1) / n)))

    def ks(self, other: "EmpiricalMeasure") -> float:
        return ks_weighted(self.samples, None, other.samples, None)

    def histogram(self, B: int = 1024) -> "Histogram":
        counts = np.bincount(np.minimum((self.samples * B).astype(np.int64), B - 1), minlength=B)
        return Histogram(counts / self.count)

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x"])
            for v in self.samples:
                w.writerow([f"{v:.17g}"])

    def __repr__(self):
        return f"EmpiricalMeasure(count={self.count})"


def ks_weighted(a, wa, b, wb) -> float:
    """Kolmogorov distance between two weighted point sets on [0, 1)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    wa = np.full(a.size, 1.0 / a.size) if wa is None else np.asarray(wa, dtype=np.float64)
    wb = np.full(b.size, 1.0 / b.size) if wb is None else np.asarray(wb, dtype=np.float64)
    pts = np.concatenate([a, b])
    w = np.concatenate([wa, -wb])
    order = np.argsort(pts, kind="stable")
    pts, w = pts[order], w[order]
    csum = np.cumsum(w)
    last = np.r_[pts[1:] != pts[:-1], True]
    return float(np.max(np.abs(csum[last]))) if csum.size else 0.0


class Histogram:
    """Masses of B equal bins ``[b/B, (b+1)/B)``."""

    def __init__(self, mass):
        m = np.asarray(mass, dtype=np.float64).copy()
        if m.ndim != 1 or m.size < 1:
            raise ValueError("histogram needs a nonempty 1-D mass vector")
        if np.any(m < 0):
            raise ValueError("masses must be nonnegative")
        if abs(m.sum() - 1.0) > 1e-12:
            raise ValueError("masses must sum to 1")
        m.setflags(write=False)
        self.mass = m

    @classmethod
    def uniform(cls, B: int = 1024) -> "Histogram":
        return cls(np.full(B, 1.0 / B))

    @property
    def B(self) -> int:
        return int(self.mass.size)

    @property
    def bin_starts(self) -> np.ndarray:
        return np.arange(self.B) / self.B

    def l1(self, other: "Histogram") -> float:
        return float(np.abs(self.mass - other.mass).sum())

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["bin_start", "mass"])
            for s, m in zip(self.bin_starts, self.mass):
                w.writerow([f"{s:.17g}", f"{m:.17g}"])


# ---------------------------------------------------------------------------
# synchronization and repellers
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SyncReport:
    n: int
    cluster_center: float
    spread: float


def smallest_cover_arc(points, keep: int) -> tuple[float, float]:
    """Start and length of the shortest arc containing ``keep`` of the points."""
    p = np.sort(wrap(np.asarray(points, dtype=np.float64)))
    m = p.size
    if keep <= 1:
        return float(p[0]), 0.0
    ends = np.roll(p, -(keep - 1))
    # arcs starting late in the sorted order wrap past 1; decided by index so ties cannot confuse it
    lengths = ends - p + (np.arange(m) + keep - 1 >= m)
    i = int(np.argmin(lengths))
    return float(p[i]), float(lengths[i])


def sync_statistic(system: GeneratorSystem, w: Word, m: int) -> SyncReport:
    """Spread of ``m`` equispaced points after applying the word (one straggler allowed)."""
    if m < 3:
        raise ValueError("m must be at least 3")
    grid = np.arange(m) / m
    img = compose(system, w).eval_lift(grid)
    start, length = smallest_cover_arc(img, m - 1)
    return SyncReport(len(w), wrap(start + 0.5 * length), length)


_TIE = 1e-12


def estimate_repeller(system: GeneratorSystem, w: Word, depth: int = 20) -> float:
    """Centre of the nested dyadic arc whose image under the word is longest.

    At each level only children of arcs whose image is at least half the
    previous level's maximum are examined. Near-ties favour the child of the
    previous selection; a selection outside it raises :class:`NestingViolation`.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    F = compose(system, w)
    live = np.array([0], dtype=np.int64)
    chosen = -1
    for level in range(1, depth + 1):
        kids = np.concatenate([2 * live, 2 * live + 1])
        kids.sort()
        scale = float(1 << level)
        left = kids / scale
        right = (kids + 1) / scale
        img = F.eval_lift(right) - F.eval_lift(left)
        best = float(img.max())
        near = img >= best - _TIE
        if chosen >= 0:
            nested = near & ((kids >> 1) == chosen)
            if nested.any():
                pick = int(kids[np.argmax(np.where(nested, img, -np.inf))])
            else:
                raise NestingViolation(f"dyadic selection left its parent at level {level}")
        else:
            pick = int(kids[np.argmax(img)])
        chosen = pick
        live = kids[img >= 0.5 * best]
    return (chosen + 0.5) / float(1 << depth)


def complement_image_length(system: GeneratorSystem, w: Word, center: float, radius: float) -> float:
    """Length of the image of the circle minus the arc of given radius around ``center``."""
    F = compose(system, w)
    a = center + radius
    b = center - radius + 1.0
    return float(F.eval_lift(b) - F.eval_lift(a))


# ---------------------------------------------------------------------------
# stationary measures
# ---------------------------------------------------------------------------


def estimate_stationary(system: GeneratorSystem, direction: Direction | str, n_burn: int, M: int,
                        seed: int, x0: float = 0.0) -> EmpiricalMeasure:
    """Endpoints of ``M`` independent random compositions of length ``n_burn`` started at ``x0``."""
    direction = Direction(direction)
    if M < 1 or n_burn < 1:
        raise ValueError("M and n_burn must be positive")
    prog = system.program if direction is Direction.FORWARD else system.inverse_program
    keys = rng.stream_keys(rng.derive(seed, "stationary"), np.arange(M))
    return EmpiricalMeasure(prog.stationary_endpoints(system.cumnu, keys, int(n_burn), float(x0)))


def birkhoff_samples(system: GeneratorSystem, n: int, seed: int, x0: float = 0.0,
                     burn: int = 0) -> EmpiricalMeasure:
    """Orbit points of a single random sequence, after ``burn`` discarded steps."""
    pts = system.program.orbit(system.cumnu, rng.stream_key(rng.derive(seed, "orbit"), 0), int(n + burn), float(x0))
    return EmpiricalMeasure(pts[burn:])


def transfer_apply(system: GeneratorSystem, h: Histogram) -> Histogram:
    """One step of the averaged push-forward, bin mass spread along image arcs."""
    B = h.B
    edges = np.arange(B + 1) / B
    cum = np.concatenate([[0.0], np.cumsum(h.mass)])
    cum[-1] = 1.0
    out = np.zeros(B)
    for g, weight in zip(system.generators, system.nu):
        T = g.eval_lift(edges[:-1])
        T = np.append(T, T[0] + 1.0)
        n = np.floor(edges - T[0])
        G = n + np.interp(edges - n, T, cum)
        out += weight * np.diff(G)
    out = np.maximum(out, 0.0)
    return Histogram(out / out.sum())


def stationarity_ks(system: GeneratorSystem, mu: EmpiricalMeasure, direction: Direction | str = "forward") -> float:
    """Kolmogorov distance between ``mu`` and its one-step average push-forward."""
    direction = Direction(direction)
    pts, wts = [], []
    for g, weight in zip(system.generators, system.nu):
        img = g(mu.samples) if direction is Direction.FORWARD else wrap(g.eval_inverse_lift(mu.samples))
        pts.append(img)
        wts.append(np.full(mu.count, weight / mu.count))
    return ks_weighted(mu.samples, None, np.concatenate(pts), np.concatenate(wts))


def martingale_residual(system: GeneratorSystem, mu_minus: EmpiricalMeasure, x: float, y: float) -> float:
    """One-step defect ``|sum_i nu_i mu([f_i x, f_i y]) - mu([x, y])|``."""
    total = 0.0
    for g, weight in zip(system.generators, system.nu):
        total += weight * mu_minus.cdf(g(x), g(y))
    return abs(total - mu_minus.cdf(x, y))
