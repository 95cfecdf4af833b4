"""Bundled generator systems, their JSON form, and random Morse-Smale pairs."""
from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .circle import (GeneratorSystem, Homeo, Moebius, PiecewiseLinear, Rotation, chain, conjugate,
                     identity)
from .classifier import lift_cover

ALPHA = math.sqrt(2) - 1
BETA = math.sqrt(3) - 1
HYPERBOLIC = [[2.0, 0.0], [0.0, 0.5]]
PARABOLIC = ([[1.0, 2.0], [0.0, 1.0]], [[1.0, 0.0], [2.0, 1.0]])

# six-breakpoint homeomorphism used to build conjugate pairs
H6_BREAKPOINTS = [(0.0, 0.03), (0.15, 0.11), (0.33, 0.4), (0.5, 0.52), (0.7, 0.66), (0.85, 0.9)]

ARAR_CASES = {"AfRfAgRg": 1, "RfAfRgAg": -1, "adjacent": 0}


def rotations() -> GeneratorSystem:
    return GeneratorSystem([Rotation(ALPHA), Rotation(BETA)])


def parabolic() -> GeneratorSystem:
    return GeneratorSystem([Moebius(m) for m in PARABOLIC])


def generic() -> GeneratorSystem:
    return GeneratorSystem([Rotation(ALPHA), Moebius(HYPERBOLIC)])


def generic_shifted() -> GeneratorSystem:
    """Same shape as :func:`generic` with a different first rotation; not conjugate to it."""
    return GeneratorSystem([Rotation(BETA), Moebius(HYPERBOLIC)])


def cover(l: int) -> GeneratorSystem:
    return lift_cover(generic(), l)


def h6() -> PiecewiseLinear:
    return PiecewiseLinear(H6_BREAKPOINTS)


def conjugated_rotations() -> GeneratorSystem:
    return rotations().conjugated(h6())


def morse_smale(attractor: tuple[float, float], repeller: tuple[float, float], delta: float | None = None) -> PiecewiseLinear:
    """Two-breakpoint map sending the circle minus the repeller arc into the attractor arc.

    Arcs are ``(start, end)`` in positive direction. The complement of the
    repeller arc lands on the middle part of the attractor arc, trimmed by
    ``delta`` at each end (a quarter of its length by default).
    """
    a1, a2 = attractor
    r1, r2 = repeller
    la = (a2 - a1) % 1.0
    d = 0.25 * la if delta is None else delta
    return PiecewiseLinear([(r1 % 1.0, (a2 - d) % 1.0), (r2 % 1.0, (a1 + d) % 1.0)])


def _arcs(order: str, cuts: np.ndarray, width: float) -> dict:
    names = {"AfRfAgRg": ["Af", "Rf", "Ag", "Rg"], "RfAfRgAg": ["Rf", "Af", "Rg", "Ag"],
             "adjacent": ["Af", "Ag", "Rf", "Rg"]}[order]
    return {n: (float(c), float(c + width)) for n, c in zip(names, cuts)}


def arar_pair(order: str, rng: np.random.Generator | None = None) -> tuple[Homeo, Homeo, int]:
    """Random Morse-Smale pair with disjoint arcs in the named cyclic order, and the expected cocycle."""
    if order not in ARAR_CASES:
        raise ValueError(f"order must be one of {sorted(ARAR_CASES)}")
    rng = rng or np.random.default_rng(0)
    width = float(rng.uniform(0.01, 0.05))
    gaps = rng.dirichlet(np.ones(4)) * (1.0 - 4 * width) + width
    cuts = (float(rng.uniform()) + np.concatenate([[0.0], np.cumsum(gaps[:-1])])) % 1.0
    arcs = _arcs(order, cuts, width)
    if order == "adjacent" and rng.uniform() < 0.5:
        arcs["Rf"], arcs["Rg"] = arcs["Rg"], arcs["Rf"]
    f = morse_smale(arcs["Af"], arcs["Rf"])
    g = morse_smale(arcs["Ag"], arcs["Rg"])
    return f, g, ARAR_CASES[order]


def arar_quadruple() -> tuple[Homeo, Homeo, Homeo, Homeo]:
    """``f`` with three partners realizing the +1, -1 and 0 orders against it."""
    f = morse_smale((0.05, 0.1), (0.3, 0.35))
    g_plus = morse_smale((0.55, 0.6), (0.8, 0.85))     # Af Rf Ag Rg
    g_minus = morse_smale((0.22, 0.27), (0.15, 0.18))  # Rf Af Rg Ag
    g_zero = morse_smale((0.15, 0.2), (0.6, 0.65))     # attractors adjacent
    return f, g_plus, g_minus, g_zero


def arar_system() -> GeneratorSystem:
    return GeneratorSystem(list(arar_quadruple()))


BUNDLED = {
    "rotations": rotations,
    "parabolic": parabolic,
    "generic": generic,
    "generic_shifted": generic_shifted,
    "cover2": lambda: cover(2),
    "cover3": lambda: cover(3),
    "arar": arar_system,
    "conjugated_rotations": conjugated_rotations,
    "generic_conjugated": lambda: generic().conjugated(h6()),
}


def bundled(name: str) -> GeneratorSystem:
    try:
        return BUNDLED[name]()
    except KeyError:
        raise KeyError(f"unknown fixture {name!r}; known: {sorted(BUNDLED)}") from None


# ---------------------------------------------------------------------------
# JSON form
# ---------------------------------------------------------------------------


def homeo_from_dict(d: dict) -> Homeo:
    """Inverse of ``Homeo.to_dict``."""
    kind = d.get("kind")
    if kind == "rotation":
        return Rotation(float(d["alpha"]))
    if kind == "pl":
        return PiecewiseLinear([tuple(p) for p in d["breakpoints"]], int(d.get("offset", 0)))
    if kind == "moebius":
        return Moebius(d["matrix"], int(d.get("offset", 0)))
    if kind == "inverse":
        return homeo_from_dict(d["map"]).inverse()
    if kind == "shift":
        return homeo_from_dict(d["map"]).shifted(int(d["m"]))
    if kind == "cover":
        return homeo_from_dict(d["map"]).cover(int(d["l"]))
    if kind == "quotient":
        return homeo_from_dict(d["map"]).quotient(int(d["l"]))
    if kind == "chain":
        maps = [homeo_from_dict(m) for m in d["maps"]]
        return chain(*maps) if maps else identity()
    if kind == "conjugate":
        return conjugate(homeo_from_dict(d["map"]), homeo_from_dict(d["by"]))
    raise ValueError(f"unknown map kind {kind!r}")


def system_from_dict(d: dict) -> GeneratorSystem:
    gens = [homeo_from_dict(g) for g in d["generators"]]
    return GeneratorSystem(gens, d.get("nu"))


def resolve_system(ref) -> GeneratorSystem:
    """A bundled fixture name or an inline ``{"generators": [...], "nu": [...]}`` definition."""
    if isinstance(ref, str):
        return bundled(ref)
    if isinstance(ref, dict):
        return system_from_dict(ref)
    raise TypeError("a system is a fixture name or an inline definition")


def emit_fixtures(output_dir) -> list[Path]:
    """Write every bundled fixture as JSON; returns the written paths."""
    out = Path(output_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in sorted(BUNDLED):
        p = out / f"{name}.json"
        p.write_text(json.dumps({"name": name, "system": bundled(name).to_dict()}, indent=2, sort_keys=True) + "\n")
        paths.append(p)
    p = out / "h6.json"
    p.write_text(json.dumps({"name": "h6", "map": h6().to_dict()}, indent=2, sort_keys=True) + "\n")
    paths.append(p)
    return paths
