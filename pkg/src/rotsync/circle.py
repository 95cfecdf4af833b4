"""Circle points, arcs, cyclic order and the algebra of circle homeomorphisms.

A homeomorphism is always handled through a distinguished lift ``F`` to the
real line with ``F(x + 1) = F(x) + 1``. Every map is a sequence of
elementary atoms (rotations, piecewise-linear tables, Moebius maps in the
chart ``t = tan(pi x)``), evaluated by a compiled kernel program.
"""
from __future__ import annotations

import enum
import math
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .kernels import MOB, PL, ROT, Atom, build_program
from .rng import cumulative


def wrap(x):
    """Reduce to [0, 1); works on scalars and arrays."""
    if np.ndim(x) == 0:
        r = float(x) % 1.0
        return 0.0 if r >= 1.0 else r
    r = np.mod(np.asarray(x, dtype=np.float64), 1.0)
    r[r >= 1.0] = 0.0
    return r


def circle_distance(x, y):
    """Length of the shorter arc between two points."""
    d = np.mod(np.asarray(x, dtype=np.float64) - np.asarray(y, dtype=np.float64), 1.0)
    d = np.minimum(d, 1.0 - d)
    return float(d) if np.ndim(d) == 0 else d


def forward_gap(x, y):
    """Length of the positively oriented arc from ``x`` to ``y``."""
    return wrap(np.asarray(y, dtype=np.float64) - np.asarray(x, dtype=np.float64))


class CirclePoint(float):
    """A point of R/Z, stored as its representative in [0, 1)."""

    def __new__(cls, x):
        return super().__new__(cls, wrap(float(x)))

    def __repr__(self):
        return f"CirclePoint({float(self)!r})"


class Arc:
    """Closed positively oriented arc from ``start`` to ``end``."""

    __slots__ = ("start", "end")

    def __init__(self, start, end):
        self.start = CirclePoint(start)
        self.end = CirclePoint(end)

    @property
    def length(self) -> float:
        return forward_gap(self.start, self.end)

    def contains(self, p) -> bool:
        return forward_gap(self.start, p) <= self.length

    @property
    def midpoint(self) -> CirclePoint:
        return CirclePoint(self.start + 0.5 * self.length)

    def __repr__(self):
        return f"Arc({float(self.start)!r}, {float(self.end)!r})"


class Orientation(enum.Enum):
    POSITIVE = 1
    NEGATIVE = -1
    DEGENERATE = 0


def cyclic_order(a, b, c, eps: float = 1e-9) -> Orientation:
    """Cyclic order of three circle points.

    POSITIVE when ``b`` lies on the open positive arc from ``a`` to ``c``,
    NEGATIVE when it lies on the arc from ``c`` to ``a``; DEGENERATE when any
    two points are within ``eps``.
    """
    if eps < 0:
        raise ValueError("eps must be nonnegative")
    if min(circle_distance(a, b), circle_distance(b, c), circle_distance(a, c)) <= eps:
        return Orientation.DEGENERATE
    return Orientation.POSITIVE if forward_gap(a, b) < forward_gap(a, c) else Orientation.NEGATIVE


# ---------------------------------------------------------------------------
# homeomorphisms
# ---------------------------------------------------------------------------


class Homeo:
    """An orientation-preserving circle homeomorphism with a fixed lift."""

    @property
    def atoms(self) -> tuple[Atom, ...]:
        raise NotImplementedError

    @cached_property
    def program(self):
        return build_program([list(self.atoms)])

    @cached_property
    def inverse_program(self):
        return build_program([[a.inverted() for a in reversed(self.atoms)]])

    @property
    def rigid(self) -> bool:
        return all(a.rigid for a in self.atoms)

    def eval_lift(self, x):
        """Lift value; exact periodicity by reducing ``x`` to its fractional part."""
        out = self.program.eval_word(_ZERO, np.asarray(x, dtype=np.float64))
        return float(out) if np.ndim(x) == 0 else out

    def eval_inverse_lift(self, y):
        out = self.inverse_program.eval_word(_ZERO, np.asarray(y, dtype=np.float64))
        return float(out) if np.ndim(y) == 0 else out

    def __call__(self, x):
        """The circle map itself."""
        return wrap(self.eval_lift(x))

    def inverse(self) -> "Homeo":
        return Chain([a.inverted() for a in reversed(self.atoms)], desc={"kind": "inverse", "map": self.to_dict()})

    def shifted(self, m: int) -> "Homeo":
        """Same circle map, lift moved by the integer ``m``."""
        return Chain(list(self.atoms) + [Atom(ROT, (float(int(m)),))],
                     desc={"kind": "shift", "map": self.to_dict(), "m": int(m)})

    def cover(self, l: int) -> "Homeo":
        """The l-fold cover with lift ``x -> F(l x) / l``."""
        return Chain([a.scaled(int(l), 1) for a in self.atoms], desc={"kind": "cover", "map": self.to_dict(), "l": int(l)})

    def quotient(self, l: int) -> "Homeo":
        """Lift ``x -> l F(x / l)``; meaningful when F commutes with ``x + 1/l``."""
        return Chain([a.scaled(1, int(l)) for a in self.atoms], desc={"kind": "quotient", "map": self.to_dict(), "l": int(l)})

    def to_dict(self) -> dict:
        raise NotImplementedError


_ZERO = np.zeros(1, dtype=np.int32)


class Rotation(Homeo):
    """Rigid rotation by ``alpha``; the lift is ``x + (alpha mod 1)``."""

    def __init__(self, alpha: float):
        self.alpha = wrap(float(alpha))

    @property
    def atoms(self):
        return (Atom(ROT, (self.alpha,)),)

    def eval_lift(self, x):
        if np.ndim(x) == 0:
            fl = math.floor(x)
            return (x - fl) + self.alpha + fl
        return super().eval_lift(x)

    def to_dict(self):
        return {"kind": "rotation", "alpha": self.alpha}

    def __repr__(self):
        return f"Rotation({self.alpha!r})"


class PiecewiseLinear(Homeo):
    """Piecewise-linear homeomorphism given by breakpoints ``point -> image``.

    Points and images are read modulo 1; the images must appear in the same
    cyclic order as the points. ``offset`` moves the canonical lift by an
    integer.
    """

    def __init__(self, breakpoints: Iterable[tuple[float, float]], offset: int = 0):
        pairs = [(wrap(float(p)), wrap(float(q))) for p, q in breakpoints]
        if not pairs:
            raise ValueError("piecewise-linear map needs at least one breakpoint")
        pairs.sort()
        xs = [p for p, _ in pairs]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise ValueError("breakpoints must be distinct modulo 1")
        ys = [pairs[0][1]]
        for _, q in pairs[1:]:
            step = wrap(q - ys[-1])
            if step <= 0.0:
                raise ValueError("breakpoint images must be distinct")
            ys.append(ys[-1] + step)
        if ys[-1] >= ys[0] + 1.0:
            raise ValueError("breakpoint images are not in increasing cyclic order")
        xs, raw = np.array(xs), np.array(ys)
        if xs[0] > 0.0:
            # knot at 0 so that F(0) is stored, not interpolated
            y0 = _pl_eval(xs, raw, 0.0)
            if raw[-1] - 1.0 < y0 < raw[0]:
                xs, raw = np.insert(xs, 0, 0.0), np.insert(raw, 0, y0)
        m = -math.floor(raw[0]) if xs[0] == 0.0 else -math.floor(_pl_eval(xs, raw, 0.0))
        ys = raw + m
        if xs[0] == 0.0:
            ys[0] = min(max(ys[0], 0.0), math.nextafter(1.0, 0.0))
        self._xs = xs
        self.offset = int(offset)
        self._ys = ys + self.offset
        self.breakpoints = tuple(pairs)

    @property
    def table(self):
        return self._xs.copy(), self._ys.copy()

    @property
    def atoms(self):
        n = len(self._xs)
        return (Atom(PL, (float(n),) + tuple(self._xs) + tuple(self._ys)),)

    def to_dict(self):
        return {"kind": "pl", "breakpoints": [list(p) for p in self.breakpoints], "offset": self.offset}

    def __repr__(self):
        return f"PiecewiseLinear({list(self.breakpoints)!r})"


def _canonical_shift(guess: int, atom_for) -> int | None:
    """Integer shift putting the evaluated lift at 0 into [0, 1), or None.

    ``guess`` comes from a closed form; when the value at 0 sits within an ulp
    of an integer the kernel may round it across, so the neighbours are tried.
    """
    for m in (guess, guess - 1, guess + 1):
        v = build_program([[atom_for(m)]]).eval_word(_ZERO, np.zeros(1))[0]
        if 0.0 <= v < 1.0:
            return m
    return None


def _pl_eval(xs, ys, u):
    k = math.floor(u - xs[0])
    t = u - k
    i = max(0, min(len(xs) - 1, int(np.searchsorted(xs, t, side="right")) - 1))
    xb = xs[i + 1] if i + 1 < len(xs) else xs[0] + 1.0
    yb = ys[i + 1] if i + 1 < len(ys) else ys[0] + 1.0
    return ys[i] + (t - xs[i]) * (yb - ys[i]) / (xb - xs[i]) + k


class Moebius(Homeo):
    """Projective action of a 2x2 matrix of positive determinant.

    The circle coordinate ``x`` corresponds to ``t = tan(pi x)``; the matrix
    acts by ``t -> (a t + b) / (c t + d)``. The matrix is scaled to
    determinant one and, when it has real eigenvalues, to positive trace.
    """

    def __init__(self, matrix: Sequence[Sequence[float]], offset: int = 0):
        m = np.asarray(matrix, dtype=np.float64).reshape(2, 2)
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if not det > 0:
            raise ValueError("Moebius matrix must have positive determinant")
        m = m / math.sqrt(det)
        tr = m[0, 0] + m[1, 1]
        if tr < 0 and abs(tr) >= 2.0:
            m = -m
        a, b, c, d = m.ravel()
        shift = _canonical_shift(-math.floor(math.atan2(b, d) / math.pi),
                                 lambda s: Atom(MOB, (a, b, c, d, d, -b, -c, a, float(s))))
        if shift is None:
            # F(0) is within an ulp below an integer only when b is below resolution
            m[0, 1] = b = 0.0
            shift = -math.floor(math.atan2(b, d) / math.pi)
        self.matrix = m
        self._inv = (d, -b, -c, a)
        self.offset = int(offset)
        self._shift = float(shift + self.offset)

    @property
    def atoms(self):
        a, b, c, d = self.matrix.ravel()
        return (Atom(MOB, (a, b, c, d) + tuple(self._inv) + (self._shift,)),)

    @property
    def trace(self) -> float:
        return float(self.matrix[0, 0] + self.matrix[1, 1])

    def to_dict(self):
        return {"kind": "moebius", "matrix": self.matrix.tolist(), "offset": self.offset}

    def __repr__(self):
        return f"Moebius({self.matrix.tolist()!r})"


class Chain(Homeo):
    """Composition of atoms in application order (first atom applied first)."""

    def __init__(self, atoms: Sequence[Atom], desc: dict | None = None):
        self._atoms = tuple(atoms)
        self._desc = desc

    @property
    def atoms(self):
        return self._atoms

    def to_dict(self):
        if self._desc is None:
            raise ValueError("this composite map has no serializable description")
        return self._desc

    def __repr__(self):
        return f"Chain({len(self._atoms)} atoms)"


def chain(*maps: Homeo) -> Homeo:
    """Compose maps in application order: ``chain(f, g)`` is ``g after f``.

    Lifts are composed as given, never renormalized.
    """
    if maps and all(isinstance(m, WordComposition) for m in maps):
        sys0 = maps[0].system
        if all(m.system is sys0 for m in maps):
            w = Word.empty()
            for m in maps:
                w = w + m.word
            return WordComposition(sys0, w)
    atoms: list[Atom] = []
    for m in maps:
        atoms.extend(m.atoms)
    try:
        desc = {"kind": "chain", "maps": [m.to_dict() for m in maps]}
    except (ValueError, NotImplementedError):
        desc = None
    return Chain(atoms, desc)


def conjugate(f: Homeo, h: Homeo) -> Homeo:
    """The map ``h o f o h^-1`` (apply ``h^-1``, then ``f``, then ``h``)."""
    try:
        desc = {"kind": "conjugate", "map": f.to_dict(), "by": h.to_dict()}
    except (ValueError, NotImplementedError):
        desc = None
    atoms = [a.inverted() for a in reversed(h.atoms)] + list(f.atoms) + list(h.atoms)
    return Chain(atoms, desc)


def identity() -> Homeo:
    return Chain([], desc={"kind": "rotation", "alpha": 0.0})


# ---------------------------------------------------------------------------
# words and generator systems
# ---------------------------------------------------------------------------


class Word:
    """Finite word over {1..k} in application order (first letter applied first)."""

    __slots__ = ("codes",)

    def __init__(self, letters: Iterable[int] = ()):
        arr = np.asarray(list(letters), dtype=np.int64)
        if arr.size and arr.min() < 1:
            raise ValueError("letters are 1-based indices")
        codes = (arr - 1).astype(np.int32)
        codes.setflags(write=False)
        self.codes = codes

    @classmethod
    def from_codes(cls, codes) -> "Word":
        w = cls.__new__(cls)
        c = np.array(codes, dtype=np.int32)
        if c.size and c.min() < 0:
            raise ValueError("codes are 0-based indices")
        c.setflags(write=False)
        w.codes = c
        return w

    @classmethod
    def empty(cls) -> "Word":
        return cls.from_codes(np.zeros(0, dtype=np.int32))

    @property
    def letters(self) -> tuple[int, ...]:
        return tuple(int(c) + 1 for c in self.codes)

    def __len__(self):
        return len(self.codes)

    def __iter__(self):
        return iter(self.letters)

    def __getitem__(self, item):
        if isinstance(item, slice):
            return Word.from_codes(self.codes[item])
        return int(self.codes[item]) + 1

    def __add__(self, other: "Word") -> "Word":
        """Concatenation: apply ``self`` first, then ``other``."""
        return Word.from_codes(np.concatenate([self.codes, other.codes]))

    def __mul__(self, reps: int) -> "Word":
        return Word.from_codes(np.tile(self.codes, int(reps)))

    def __eq__(self, other):
        return isinstance(other, Word) and np.array_equal(self.codes, other.codes)

    def __hash__(self):
        return hash(self.codes.tobytes())

    def __repr__(self):
        return f"Word({list(self.letters)!r})"


class GeneratorSystem:
    """k generator maps and a probability vector on their indices."""

    def __init__(self, generators: Sequence[Homeo], nu: Sequence[float] | None = None):
        gens = tuple(generators)
        if len(gens) < 1:
            raise ValueError("a generator system needs at least one generator")
        k = len(gens)
        if nu is None:
            nu = [1.0 / k] * k
        nu_arr = np.asarray(nu, dtype=np.float64)
        if nu_arr.shape != (k,):
            raise ValueError("nu must have one weight per generator")
        if np.any(nu_arr <= 0):
            raise ValueError("nu entries must be positive")
        if abs(float(nu_arr.sum()) - 1.0) > 1e-12:
            raise ValueError("nu must sum to 1")
        nu_arr.setflags(write=False)
        self.generators = gens
        self.nu = nu_arr
        self.k = k

    @cached_property
    def cumnu(self) -> np.ndarray:
        return cumulative(self.nu)

    @cached_property
    def program(self):
        return build_program([list(g.atoms) for g in self.generators])

    @cached_property
    def inverse_program(self):
        return build_program([[a.inverted() for a in reversed(g.atoms)] for g in self.generators])

    def check_word(self, w: Word) -> Word:
        if len(w) and int(w.codes.max()) >= self.k:
            raise ValueError(f"word letter out of range 1..{self.k}")
        return w

    def inverted(self) -> "GeneratorSystem":
        """System of inverse generators with the same weights."""
        return GeneratorSystem([g.inverse() for g in self.generators], self.nu)

    def conjugated(self, h: Homeo) -> "GeneratorSystem":
        """System of ``h o f_i o h^-1``."""
        return GeneratorSystem([conjugate(g, h) for g in self.generators], self.nu)

    def to_dict(self) -> dict:
        return {"generators": [g.to_dict() for g in self.generators], "nu": self.nu.tolist()}

    def __repr__(self):
        return f"GeneratorSystem(k={self.k}, nu={self.nu.tolist()})"


class WordComposition(Homeo):
    """Lazy composition ``f_{w_n} o ... o f_{w_1}`` backed by its system."""

    def __init__(self, system: GeneratorSystem, word: Word):
        self.system = system
        self.word = system.check_word(word)

    @cached_property
    def atoms(self):
        out: list[Atom] = []
        for c in self.word.codes:
            out.extend(self.system.generators[int(c)].atoms)
        return tuple(out)

    @property
    def rigid(self) -> bool:
        return all(self.system.generators[int(c)].rigid for c in set(self.word.codes.tolist()))

    def eval_lift(self, x):
        out = self.system.program.eval_word(self.word.codes, np.asarray(x, dtype=np.float64))
        return float(out) if np.ndim(x) == 0 else out

    def eval_inverse_lift(self, y):
        out = self.system.inverse_program.eval_word(self.word.codes[::-1].copy(), np.asarray(y, dtype=np.float64))
        return float(out) if np.ndim(y) == 0 else out

    def to_dict(self):
        return {"kind": "word", "system": self.system.to_dict(), "letters": list(self.word.letters)}

    def __repr__(self):
        return f"WordComposition({self.word!r})"


def compose(system: GeneratorSystem, w: Word | Sequence[int]) -> WordComposition:
    """Lazy composition of the word's generators in application order."""
    if not isinstance(w, Word):
        w = Word(w)
    return WordComposition(system, w)


def eval_lift(h: Homeo, x):
    return h.eval_lift(x)


def eval_inverse_lift(h: Homeo, y):
    return h.eval_inverse_lift(y)
