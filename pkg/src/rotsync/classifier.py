"""Trichotomy detection from rotation-number statistics, and the two structural reductions.

``classify`` looks only at rotation numbers of random-length random
compositions. ``linearizer`` straightens an action with an invariant
measure; ``lift_cover`` and ``factor_quotient`` move between an action
commuting with ``x + 1/l`` and its l-fold quotient.
"""
from __future__ import annotations

import enum
import json
from dataclasses import asdict, dataclass, field

import numpy as np

from . import rng
from .circle import GeneratorSystem, Homeo, PiecewiseLinear
from .dynamics import EmpiricalMeasure

ATOM_THRESHOLD = 0.85
KS_THRESHOLD = 0.05
L_MAX = 12
SPECTRUM_GRID = 64
SPECTRUM_QMAX = 12
LINEARIZER_GRID = 1024
EQUIVARIANCE_TOL = 1e-9


class Verdict(enum.Enum):
    INVARIANT_MEASURE = "InvariantMeasure"
    SYNCHRONIZING = "Synchronizing"
    FACTORIZABLE = "Factorizable"


@dataclass
class ClassificationReport:
    verdict: Verdict | None
    zero_fraction: float
    ks_to_uniform: float
    atom_masses: dict = field(default_factory=dict)
    l: int | None = None
    N_used: int = 0
    M_used: int = 0
    seed: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["verdict"] = self.verdict.value if self.verdict else None
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


class Inconclusive(RuntimeError):
    def __init__(self, report: ClassificationReport):
        super().__init__("rotation-number spectrum matches none of the three cases")
        self.report = report


class AtomDetected(ValueError):
    """The measure has an atom, so its distribution function is not injective."""


class NotEquivariant(ValueError):
    """A generator does not commute with the rotation by 1/l."""


def rotation_spectrum(system: GeneratorSystem, N: int, M: int, seed: int) -> EmpiricalMeasure:
    """Rotation numbers of ``M`` random compositions with length uniform on 1..N."""
    if N < 1 or M < 1:
        raise ValueError("N and M must be positive")
    keys = rng.stream_keys(rng.derive(seed, "spectrum"), np.arange(M))
    vals = system.program.spectrum(system.cumnu, keys, int(N), 1.0 / (4 * N),
                                   SPECTRUM_GRID, SPECTRUM_QMAX, 1e-10)
    return EmpiricalMeasure(vals)


def _atom_masses(spec: EmpiricalMeasure, l: int, radius: float) -> np.ndarray:
    return spec.mass_near(np.arange(l) / l, radius)


def decide(spec: EmpiricalMeasure, N: int) -> ClassificationReport:
    """Apply the frozen decision rule to a spectrum."""
    radius = 1.0 / (2 * N)
    zero = float(spec.mass_near([0.0], radius)[0])
    ks = spec.ks_uniform()
    report = ClassificationReport(None, zero, ks, N_used=N, M_used=spec.count)
    for l in range(2, L_MAX + 1):
        masses = _atom_masses(spec, l, radius)
        if masses.sum() >= ATOM_THRESHOLD and np.all(masses >= 0.5 / l):
            report.verdict = Verdict.FACTORIZABLE
            report.l = l
            report.atom_masses = {f"{j}/{l}": float(m) for j, m in enumerate(masses)}
            return report
    if zero >= ATOM_THRESHOLD:
        report.verdict = Verdict.SYNCHRONIZING
    elif ks <= KS_THRESHOLD:
        report.verdict = Verdict.INVARIANT_MEASURE
    return report


def classify(system: GeneratorSystem, N: int = 200, M: int = 10_000, seed: int = 0) -> ClassificationReport:
    """Which of the three cases the action falls in, judged from its rotation spectrum.

    Raises :class:`Inconclusive` (carrying the report) when no rule fires.
    """
    report = decide(rotation_spectrum(system, N, M, seed), N)
    report.seed = int(seed)
    if report.verdict is None:
        raise Inconclusive(report)
    return report


# ---------------------------------------------------------------------------
# linearization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class MapTable:
    """A monotone degree-one circle map tabulated on ``xs``."""

    xs: np.ndarray
    ys: np.ndarray

    def as_homeo(self) -> PiecewiseLinear:
        return PiecewiseLinear(zip(self.xs.tolist(), self.ys.tolist()))

    def __call__(self, x):
        xs = np.append(self.xs, self.xs[0] + 1.0)
        ys = np.append(self.ys, self.ys[0] + 1.0)
        x = np.asarray(x, dtype=np.float64)
        n = np.floor(x - xs[0])
        return np.interp(x - n, xs, ys) + n


def cdf_knots(mu: EmpiricalMeasure) -> tuple[np.ndarray, np.ndarray]:
    """Knots of the piecewise-linear distribution function through the samples."""
    vals, counts = np.unique(mu.samples, return_counts=True)
    cum = np.cumsum(counts) / mu.count
    mid = cum - 0.5 * counts / mu.count
    return vals, mid


def interp_periodic(x, kx, ky):
    """Evaluate the degree-one extension of the knots ``(kx, ky)`` at ``x``."""
    kx = np.concatenate([kx[-1:] - 1.0, kx, kx[:1] + 1.0])
    ky = np.concatenate([ky[-1:] - 1.0, ky, ky[:1] + 1.0])
    x = np.asarray(x, dtype=np.float64)
    n = np.floor(x)
    return np.interp(x - n, kx, ky) + n


def linearizer(system: GeneratorSystem | None, mu_inv: EmpiricalMeasure, grid: int = LINEARIZER_GRID) -> MapTable:
    """Distribution-function map ``x -> mu([0, x])`` on a regular grid.

    ``system`` is accepted for symmetry with the other reductions; only the
    measure is used.
    """
    _, counts = np.unique(mu_inv.samples, return_counts=True)
    if counts.max() >= 3:
        raise AtomDetected(f"a point carries {int(counts.max())} samples")
    kx, ky = cdf_knots(mu_inv)
    xs = np.arange(grid) / grid
    ys = interp_periodic(xs, kx, ky)
    ys = ys - interp_periodic(0.0, kx, ky)
    return MapTable(xs, ys)


def displacement_oscillation(h: Homeo, grid: int = 1024) -> float:
    """``max - min`` of ``F(x) - x`` over a grid."""
    xs = np.arange(grid) / grid
    d = h.eval_lift(xs) - xs
    return float(d.max() - d.min())


# ---------------------------------------------------------------------------
# covers and quotients
# ---------------------------------------------------------------------------


def lift_cover(system: GeneratorSystem, l: int) -> GeneratorSystem:
    """Generators with lifts ``F(l x) / l``; they commute with ``x + 1/l``."""
    if l < 2:
        raise ValueError("l must be at least 2")
    return GeneratorSystem([g.cover(l) for g in system.generators], system.nu)


def equivariance_defect(h: Homeo, l: int, grid: int = 1024) -> float:
    xs = np.arange(grid) / grid
    return float(np.max(np.abs(h.eval_lift(xs + 1.0 / l) - h.eval_lift(xs) - 1.0 / l)))


def factor_quotient(system: GeneratorSystem, l: int, tol: float = EQUIVARIANCE_TOL) -> GeneratorSystem:
    """Quotient by ``x + 1/l``: lifts ``l F(x / l)``, translation numbers scale by ``l``."""
    if l < 2:
        raise ValueError("l must be at least 2")
    for i, g in enumerate(system.generators):
        defect = equivariance_defect(g, l)
        if defect > tol:
            raise NotEquivariant(f"generator {i + 1} misses commutation by {defect:.3g}")
    return GeneratorSystem([g.quotient(l) for g in system.generators], system.nu)
