"""Rebuild the conjugacy between two actions from translation-number data.

The pipeline for a pair of synchronizing actions:

1. :func:`find_ms_family` follows one random word stream on both actions and
   cuts it at lengths where both image clusters sit still; the prefixes form
   a family of maps contracting the circle minus a repeller ``r`` onto an
   attractor ``a``.
2. :func:`arc_mass_via_delta` turns averaged cocycle verdicts, which only use
   translation numbers, into signed masses of the inverse stationary measure.
3. :func:`build_conjugacy` transports the anchored distribution function of
   one action onto the other (route A) and cross-checks it against the
   translation-number positions of good words (route B).
"""
from __future__ import annotations

import csv
import itertools
import json
import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Sequence

import numpy as np

from . import rng
from .circle import GeneratorSystem, Word, circle_distance, compose, forward_gap, wrap
from .classifier import cdf_knots, factor_quotient, interp_periodic, linearizer
from .dynamics import (Direction, EmpiricalMeasure, estimate_repeller, estimate_stationary,
                       sample_word, sample_word_rows, smallest_cover_arc)
from .rotnum import TranslationResult, delta_words

EPS_A = 1e-3
GRID = 512
M_GOOD = 64
GOOD_LENGTH = 30
DELTA_M = 2000
DELTA_N = 100
SEPARATION = 10
DEGENERATE_LIMIT = 0.2
WBAR_MAX = 6


class NoConvergentSubsequence(RuntimeError):
    """No three schedule lengths with both image clusters at rest."""


class NoSeparatingWord(RuntimeError):
    """No short word moves both attractors away from the repellers."""


class TranslationMismatch(ValueError):
    """Corresponding words have different translation numbers."""


class InsufficientGoodWords(RuntimeError):
    """Too few good words found within the sampling budget."""


class DegenerateSamples(RuntimeError):
    """Too many random words sent the repeller next to a marked point."""


# ---------------------------------------------------------------------------
# pairs and families
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ActionPair:
    first: GeneratorSystem
    second: GeneratorSystem

    def __post_init__(self):
        if self.first.k != self.second.k:
            raise ValueError("both actions need the same number of generators")
        if not np.array_equal(self.first.nu, self.second.nu):
            raise ValueError("both actions need the same weights")

    @property
    def systems(self) -> tuple[GeneratorSystem, GeneratorSystem]:
        return self.first, self.second

    @property
    def k(self) -> int:
        return self.first.k


@dataclass(frozen=True)
class MSFamily:
    """Prefix words of one stream, with attractor and repeller per action."""

    words: tuple[Word, ...]
    a: tuple[float, float]
    r: tuple[float, float]
    contraction_log: tuple[dict, ...]
    wbar: Word = field(default_factory=Word.empty)
    seed: int = 0

    @property
    def checkpoints(self) -> list[int]:
        return [len(w) for w in self.words]

    def to_dict(self) -> dict:
        return {"checkpoints": self.checkpoints, "a": list(self.a), "r": list(self.r),
                "wbar": list(self.wbar.letters), "contraction_log": list(self.contraction_log),
                "seed": self.seed}


def default_schedule(cap: int = 2000) -> list[int]:
    return list(range(50, cap + 1))


def _spreads(traj: np.ndarray, keep: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Cluster centre and spread of the kept grid images at every length."""
    centers = np.empty(traj.shape[0])
    spreads = np.empty(traj.shape[0])
    pts = traj[:, keep]
    for n in range(traj.shape[0]):
        start, length = smallest_cover_arc(pts[n], pts.shape[1])
        centers[n] = wrap(start + 0.5 * length)
        spreads[n] = length
    return centers, spreads


def _pick_triple(P: np.ndarray, ok: np.ndarray, schedule: Sequence[int], step: float) -> tuple[int, int, int] | None:
    """Earliest schedule triple whose consecutive moves stay within ``step`` on every action."""
    idx = [i for i, n in enumerate(schedule) if ok[n]]
    pos = P[:, [schedule[i] for i in idx]]
    m = len(idx)
    if m < 3:
        return None
    close = np.ones((m, m), dtype=bool)
    for row in pos:
        close &= circle_distance(row[:, None], row[None, :]) <= step
    np.fill_diagonal(close, False)
    # chain i < j < l with i~j and j~l; earliest by the last element
    best = None
    for l in range(2, m):
        js = np.nonzero(close[:l, l])[0]
        for j in js:
            iis = np.nonzero(close[:j, j])[0]
            if iis.size:
                best = (idx[int(iis[-1])], idx[int(j)], idx[l])
                break
        if best:
            break
    if best is None:
        return None
    return tuple(schedule[i] for i in best)


def find_ms_family(pair: ActionPair, length_schedule: Sequence[int] | None = None, seed: int = 0,
                   eps_a: float = EPS_A, depth: int = 20, grid: int = 64, attempts: int = 4,
                   probe: int = 200) -> MSFamily:
    """Checkpointed prefixes of one Bernoulli stream forming an MS family on both actions.

    Families are built from ``attempts`` streams derived from ``seed``; the
    one under which the most of ``probe`` random words are good is returned.
    """
    schedule = sorted(set(int(n) for n in (length_schedule or default_schedule())))
    if len(schedule) < 3 or schedule[0] < 1:
        raise ValueError("schedule needs at least three positive lengths")
    words = [sample_word(pair.first.nu, GOOD_LENGTH, rng.derive(seed, "probe"), i) for i in range(probe)]
    best, best_score = None, -1
    for attempt in range(attempts):
        try:
            ms = _ms_attempt(pair, schedule, seed, attempt, eps_a, depth, grid)
        except NoConvergentSubsequence:
            continue
        score = sum(is_good(pair, ms, u, eps_a) for u in words)
        if score > best_score:
            best, best_score = ms, score
    if best is None:
        raise NoConvergentSubsequence(f"no resting triple in lengths {schedule[0]}..{schedule[-1]}")
    return best


def _ms_attempt(pair: ActionPair, schedule: list[int], seed: int, attempt: int, eps_a: float,
                depth: int, grid: int) -> MSFamily:
    cap = schedule[-1]
    omega = sample_word(pair.first.nu, cap, rng.derive(seed, "omega"), attempt)
    xs = np.arange(grid) / grid
    rs, P, ok_all, centers, spreads = [], [], np.ones(cap + 1, dtype=bool), [], []
    for sys in pair.systems:
        r = estimate_repeller(sys, omega, depth)
        rs.append(r)
        keep = circle_distance(xs, r) > 2 * eps_a
        traj = sys.program.trajectory(omega.codes, np.append(xs, r + 0.5))
        c, s = _spreads(traj[:, :-1], keep)
        P.append(wrap(traj[:, -1]))
        centers.append(c)
        spreads.append(s)
        ok_all &= s <= eps_a
        # a centre nearly fixed by a generator makes that generator's powers inadmissible
        for g in sys.generators:
            ok_all &= circle_distance(g.eval_lift(c), c) > SEPARATION * eps_a
    P = np.array(P)
    triple = _pick_triple(P, ok_all, schedule, 0.5 * eps_a)
    if triple is None:
        raise NoConvergentSubsequence(f"no resting triple in lengths {schedule[0]}..{cap}")
    a = [float(centers[j][triple[-1]]) for j in range(2)]
    log = [{"n": n, "spread": [float(spreads[j][n]) for j in range(2)],
            "center": [float(centers[j][n]) for j in range(2)], "stream": attempt} for n in triple]
    words = [omega[:n] for n in triple]
    wbar = Word.empty()
    if any(circle_distance(a[j], rs[j]) <= SEPARATION * eps_a for j in range(2)):
        wbar = _separating_word(pair, a, rs, eps_a)
        a = [float(wrap(compose(sys, wbar).eval_lift(a[j]))) for j, sys in enumerate(pair.systems)]
        words = [w + wbar for w in words]
    return MSFamily(tuple(words), (a[0], a[1]), (float(rs[0]), float(rs[1])), tuple(log), wbar, int(seed))


def _separating_word(pair: ActionPair, a, r, eps_a: float) -> Word:
    for n in range(1, WBAR_MAX + 1):
        for letters in itertools.product(range(1, pair.k + 1), repeat=n):
            w = Word(letters)
            if all(circle_distance(compose(sys, w).eval_lift(a[j]), r[j]) > SEPARATION * eps_a
                   for j, sys in enumerate(pair.systems)):
                return w
    raise NoSeparatingWord(f"no word of length <= {WBAR_MAX} separates the attractors")


def _separated(point: float, a: float, r: float, margin: float) -> bool:
    return circle_distance(point, a) > margin and circle_distance(point, r) > margin


def is_good(pair: ActionPair, ms: MSFamily, u: Word, eps_a: float = EPS_A) -> bool:
    """``u`` and every one-letter extension move both attractors clear of ``a`` and ``r``."""
    margin = SEPARATION * eps_a
    words = [u] + [u + Word([i]) for i in range(1, pair.k + 1)]
    for j, sys in enumerate(pair.systems):
        for w in words:
            if not _separated(compose(sys, w).eval_lift(ms.a[j]), ms.a[j], ms.r[j], margin):
                return False
    return True


# ---------------------------------------------------------------------------
# arc masses from cocycle verdicts
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ArcMassEstimate:
    value: float
    samples: int
    degenerate: int
    plus: int
    minus: int

    def __float__(self):
        return self.value


def expected_arc_mass(mu_minus: EmpiricalMeasure, a: float, r: float, ga: float) -> float:
    """Signed mass the averaged verdict should approach, read off a measure directly."""
    if forward_gap(a, r) < forward_gap(a, ga):
        return float(mu_minus.cdf(ga, a))
    return -float(mu_minus.cdf(a, ga))


def arc_mass_via_delta(system: GeneratorSystem, ms_words: Sequence[Word], a: float, r: float, g_word: Word,
                       n: int = DELTA_N, M: int = DELTA_M, seed: int = 0, eps: float = EPS_A) -> ArcMassEstimate:
    """Mean cocycle verdict over ``M`` random words ``h`` of length ``n``.

    The absolute value estimates the inverse stationary mass between ``g(a)``
    and ``a``; the sign records on which side of ``a`` the point ``g(a)`` lies
    relative to ``r``. Samples whose ``h^-1(r)`` lands within ``eps`` of one of
    ``a``, ``r``, ``g(a)`` count as degenerate and contribute 0.
    """
    if len(ms_words) < 3:
        raise ValueError("need at least three family words")
    ga = compose(system, g_word).eval_lift(a)
    if not _separated(ga, a, r, eps):
        raise ValueError("g(a) must be separated from a and r")
    rows = sample_word_rows(system.nu, n, M, rng.derive(seed, "delta"))
    pre = system.inverse_program.eval_rows(rows[:, ::-1].copy(), np.full(M, float(r)))
    degenerate = ((circle_distance(pre, a) <= eps) | (circle_distance(pre, r) <= eps)
                  | (circle_distance(pre, ga) <= eps))
    nd = int(degenerate.sum())
    if nd > DEGENERATE_LIMIT * M:
        raise DegenerateSamples(f"{nd} of {M} samples are degenerate")
    verdict, _ = delta_words(system, ms_words, g_word, rows[~degenerate])
    plus = int(np.sum(verdict == 1))
    minus = int(np.sum(verdict == -1))
    return ArcMassEstimate((plus - minus) / M, M, nd, plus, minus)


def position_from_mass(s: float) -> float:
    """Anchored position ``mu([a, g(a)])`` recovered from a signed arc mass."""
    return float(wrap(-s))


# ---------------------------------------------------------------------------
# conjugacy tables
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConjugacyTable:
    """Monotone degree-one table ``x_s -> psi(x_s)`` with ``psi(anchor[0]) = anchor[1]``."""

    xs: np.ndarray
    ys: np.ndarray
    anchor: tuple[float, float]

    def __post_init__(self):
        if np.any(np.diff(self.xs) <= 0) or self.xs[-1] - self.xs[0] >= 1.0:
            raise ValueError("inputs must increase within one turn")
        if np.any(np.diff(self.ys) <= 0) or self.ys[-1] - self.ys[0] >= 1.0:
            raise ValueError("images must increase within one turn")

    def lift(self, x):
        xs = np.append(self.xs, self.xs[0] + 1.0)
        ys = np.append(self.ys, self.ys[0] + 1.0)
        x = np.asarray(x, dtype=np.float64)
        n = np.floor(x - xs[0])
        return np.interp(x - n, xs, ys) + n

    def __call__(self, x):
        return wrap(self.lift(x))

    @property
    def size(self) -> int:
        return int(self.xs.size)

    def to_csv(self, path) -> None:
        with open(Path(path), "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["x", "psi"])
            for x, y in zip(self.xs, self.ys):
                w.writerow([f"{wrap(x):.17g}", f"{wrap(y):.17g}"])

    @classmethod
    def identity(cls, G: int = GRID) -> "ConjugacyTable":
        xs = np.arange(G) / G
        return cls(xs, xs.copy(), (0.0, 0.0))

    @classmethod
    def rotation(cls, beta: float, G: int = GRID) -> "ConjugacyTable":
        xs = np.arange(G) / G
        return cls(xs, xs + beta, (0.0, float(beta)))


def anchored_cdf(mu: EmpiricalMeasure, a: float, x):
    """``mu([a, x])`` as a lift: increasing in ``x`` with value 0 at ``a``."""
    kx, ky = cdf_knots(mu)
    return interp_periodic(x, kx, ky) - interp_periodic(a, kx, ky)


def transport_table(mu1: EmpiricalMeasure, a1: float, mu2: EmpiricalMeasure, a2: float,
                    G: int = GRID) -> ConjugacyTable:
    """``C2^-1 o C1`` on the grid ``a1 + s/G``, both distribution functions anchored at the attractors."""
    k2x, k2y = cdf_knots(mu2)
    xs = a1 + np.arange(G) / G
    c = anchored_cdf(mu1, a1, xs) + interp_periodic(a2, k2x, k2y)
    ys = interp_periodic(c, k2y, k2x)
    ys = ys - (ys[0] - a2)
    return ConjugacyTable(xs, ys, (float(wrap(a1)), float(wrap(a2))))


def conjugacy_residual(psi: ConjugacyTable, pair: ActionPair, grid_size: int = GRID) -> float:
    """Max circle distance between ``psi o f_i`` and ``g_i o psi`` over a grid."""
    xs = np.arange(grid_size) / grid_size
    px = psi.lift(xs)
    worst = 0.0
    for f, g in zip(pair.first.generators, pair.second.generators):
        d = circle_distance(psi.lift(f.eval_lift(xs)), g.eval_lift(px))
        worst = max(worst, float(np.max(d)))
    return worst


# ---------------------------------------------------------------------------
# the full reconstruction
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ReconstructParams:
    seed: int = 0
    eps_a: float = EPS_A
    grid: int = GRID
    m_good: int = M_GOOD
    good_length: int = GOOD_LENGTH
    good_budget: int = 20 * M_GOOD
    delta_M: int = DELTA_M
    delta_n: int = DELTA_N
    stationary_M: int = 100_000
    stationary_burn: int = 1000
    spot_words: int = 200
    spot_max_length: int = 12
    route_b: bool = True
    schedule: tuple[int, ...] | None = None


@dataclass
class Reconstruction:
    table: ConjugacyTable
    family: MSFamily
    params: ReconstructParams
    residual: float
    route_b: dict = field(default_factory=dict)

    def report(self) -> dict:
        return {"params": asdict(self.params), "family": self.family.to_dict(),
                "anchor": list(self.table.anchor), "residual": self.residual, "route_b": self.route_b}

    def to_json(self) -> str:
        return json.dumps(self.report(), indent=2, sort_keys=True, default=_jsonable)


def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(type(x).__name__)


def _tn(system: GeneratorSystem, w: Word) -> TranslationResult:
    return TranslationResult.from_tuple(system.program.translation_number(w.codes, 1e-3, 512, 12, 1e-10))


def _same_translation(t1: TranslationResult, t2: TranslationResult) -> bool:
    if t1.exact and t2.exact:
        return Fraction(t1.p, t1.q) == Fraction(t2.p, t2.q)
    return abs(t1.value - t2.value) <= t1.error_bound + t2.error_bound + 1e-12


def check_translation_numbers(pair: ActionPair, W: int = 200, max_length: int = 12, seed: int = 0) -> int:
    """Compare translation numbers of generators and ``W`` random words on both actions.

    Raises :class:`TranslationMismatch` on the first disagreement; returns the
    number of words compared.
    """
    words = [Word([i]) for i in range(1, pair.k + 1)]
    lens = rng.uniform_block(rng.stream_key(rng.derive(seed, "spot-lengths"), 0), 0, W)
    for s in range(W):
        n = 1 + int(lens[s] * max_length)
        words.append(sample_word(pair.first.nu, n, rng.derive(seed, "spot"), s))
    for w in words:
        t1, t2 = _tn(pair.first, w), _tn(pair.second, w)
        if not _same_translation(t1, t2):
            raise TranslationMismatch(f"word {list(w.letters)}: {t1.value:.6g} vs {t2.value:.6g}")
    return len(words)


def find_good_words(pair: ActionPair, ms: MSFamily, m_good: int, length: int, budget: int,
                    seed: int) -> tuple[list[Word], int]:
    found = []
    for s in range(budget):
        u = sample_word(pair.first.nu, length, rng.derive(seed, "good"), s)
        if is_good(pair, ms, u):
            found.append(u)
            if len(found) == m_good:
                return found, s + 1
    raise InsufficientGoodWords(f"{len(found)} good words in {budget} draws, need {m_good}")


def route_b(pair: ActionPair, ms: MSFamily, mus: Sequence[EmpiricalMeasure], params: ReconstructParams) -> dict:
    """Translation-number positions of good-word images on both actions, compared with route A."""
    words, tried = find_good_words(pair, ms, params.m_good, params.good_length, params.good_budget, params.seed)
    tol = 2 * 3 / math.sqrt(params.delta_M)
    s = np.zeros((2, len(words)))
    direct = np.zeros(len(words))
    degenerate = 0
    for i, u in enumerate(words):
        for j, sys in enumerate(pair.systems):
            est = arc_mass_via_delta(sys, ms.words, ms.a[j], ms.r[j], u, params.delta_n, params.delta_M,
                                     rng.derive(params.seed, "route-b", i), params.eps_a)
            s[j, i] = est.value
            degenerate += est.degenerate
        ga = compose(pair.first, u).eval_lift(ms.a[0])
        direct[i] = float(anchored_cdf(mus[0], ms.a[0], ms.a[0] + forward_gap(ms.a[0], ga)))
    pos = np.array([[position_from_mass(v) for v in row] for row in s])
    pair_ok = np.abs(s[0] - s[1]) <= tol
    order_ok = circle_distance(pos[0], direct) <= tol
    agree = pair_ok & order_ok
    # pairwise order of the route B table against route A positions
    ob = np.argsort(pos[0], kind="stable")
    oa = np.argsort(direct, kind="stable")
    rb = np.empty_like(ob)
    rb[ob] = np.arange(ob.size)
    ra = np.empty_like(oa)
    ra[oa] = np.arange(oa.size)
    concordant = np.sign(rb[:, None] - rb[None, :]) == np.sign(ra[:, None] - ra[None, :])
    n = ob.size
    return {
        "words": [list(u.letters) for u in words],
        "draws": tried,
        "tolerance": tol,
        "s_first": s[0].tolist(),
        "s_second": s[1].tolist(),
        "route_a_position": direct.tolist(),
        "agree_between_actions": float(pair_ok.mean()),
        "agree_with_route_a": float(agree.mean()),
        "pairwise_concordance": float((concordant.sum() - n) / max(n * (n - 1), 1)),
        "degenerate": degenerate,
    }


def build_conjugacy(pair: ActionPair, params: ReconstructParams | None = None) -> Reconstruction:
    """Conjugacy between two synchronizing actions with equal translation numbers."""
    params = params or ReconstructParams()
    check_translation_numbers(pair, params.spot_words, params.spot_max_length, params.seed)
    ms = find_ms_family(pair, params.schedule, params.seed, params.eps_a)
    # both actions read the same letter streams, as the family search does
    mus = [estimate_stationary(sys, Direction.INVERSE, params.stationary_burn, params.stationary_M,
                               rng.derive(params.seed, "mu"))
           for sys in pair.systems]
    table = transport_table(mus[0], ms.a[0], mus[1], ms.a[1], params.grid)
    residual = conjugacy_residual(table, pair, params.grid)
    stats = route_b(pair, ms, mus, params) if params.route_b else {}
    return Reconstruction(table, ms, params, residual, stats)


# ---------------------------------------------------------------------------
# delegation for invariant-measure and factorizable pairs
# ---------------------------------------------------------------------------


def conjugacy_from_invariant_measures(pair: ActionPair, mus: Sequence[EmpiricalMeasure],
                                      G: int = GRID) -> ConjugacyTable:
    """``L2^-1 o L1`` for linearizers of two actions with invariant measures."""
    L1 = linearizer(pair.first, mus[0], G)
    L2 = linearizer(pair.second, mus[1], G)
    xs = L1.xs
    ys = interp_periodic(L1.ys, np.asarray(L2.ys), np.asarray(L2.xs))
    return ConjugacyTable(xs, ys, (0.0, float(ys[0])))


def lift_table(psi: ConjugacyTable, l: int) -> ConjugacyTable:
    """Lift a quotient conjugacy to the l-fold cover: ``x -> psi(l x) / l`` on one fundamental domain."""
    G = psi.size
    xs = psi.anchor[0] / l + np.arange(l * G) / (l * G)
    ys = psi.lift(l * xs) / l
    ys = ys - (ys[0] - psi.anchor[1] / l)
    return ConjugacyTable(xs, ys, (float(wrap(xs[0])), float(wrap(ys[0]))))


def build_conjugacy_factorizable(pair: ActionPair, l: int, params: ReconstructParams | None = None) -> Reconstruction:
    """Reduce both actions by the rotation ``x + 1/l``, conjugate the quotients, lift back."""
    quotient = ActionPair(factor_quotient(pair.first, l), factor_quotient(pair.second, l))
    rec = build_conjugacy(quotient, params)
    table = lift_table(rec.table, l)
    params = rec.params
    return Reconstruction(table, rec.family, params, conjugacy_residual(table, pair, params.grid),
                          dict(rec.route_b, quotient_residual=rec.residual, l=l))

