"""Backend selection and packing of atom lists into kernel programs.

The compiled extension is used when it imports; setting the environment
variable ``ROTSYNC_PURE_PYTHON=1`` forces the numpy fallback.
"""
from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np

from . import _pykernels
from ._pykernels import KIND_APPROX, KIND_INT, KIND_RAT, MOB, PL, ROT  # noqa: F401

_ckernels = None
if not os.environ.get("ROTSYNC_PURE_PYTHON"):
    try:
        from . import _ckernels  # type: ignore[attr-defined,no-redef]
    except ImportError:  # pragma: no cover
        _ckernels = None

BACKEND = "cython" if _ckernels is not None else "python"


def program_class(backend: str | None = None):
    """Return the Program class for ``backend`` ('cython', 'python' or None for default)."""
    backend = backend or BACKEND
    if backend == "cython":
        if _ckernels is None:
            raise RuntimeError("compiled kernels are not available")
        return _ckernels.Program
    if backend == "python":
        return _pykernels.Program
    raise ValueError(f"unknown backend {backend!r}")


@dataclass(frozen=True)
class Atom:
    """One elementary lift: rotation, piecewise-linear table or Moebius chart map.

    ``num/den`` is a conjugating scale: the atom evaluates
    ``base(u * num / den) * den / num``.
    """

    kind: int
    params: tuple
    inv: bool = False
    num: int = 1
    den: int = 1

    def inverted(self) -> "Atom":
        return Atom(self.kind, self.params, not self.inv, self.num, self.den)

    def scaled(self, num: int, den: int) -> "Atom":
        from math import gcd

        n, d = self.num * num, self.den * den
        g = gcd(n, d)
        return Atom(self.kind, self.params, self.inv, n // g, d // g)

    @property
    def rigid(self) -> bool:
        return self.kind == ROT


def build_program(generators: list[list[Atom]], backend: str | None = None):
    """Pack per-generator atom lists into a kernel Program."""
    kind, inv, poff, num, den, params = [], [], [], [], [], []
    gstart = [0]
    grigid = []
    for atoms in generators:
        for a in atoms:
            kind.append(a.kind)
            inv.append(1 if a.inv else 0)
            poff.append(len(params))
            num.append(float(a.num))
            den.append(float(a.den))
            params.extend(float(v) for v in a.params)
        gstart.append(len(kind))
        grigid.append(1 if all(a.rigid for a in atoms) else 0)
    cls = program_class(backend)
    return cls(
        np.array(kind, dtype=np.int32),
        np.array(inv, dtype=np.int32),
        np.array(poff, dtype=np.int64),
        np.array(num, dtype=np.float64),
        np.array(den, dtype=np.float64),
        np.array(params, dtype=np.float64),
        np.array(gstart, dtype=np.int64),
        np.array(grigid, dtype=np.int32),
    )
