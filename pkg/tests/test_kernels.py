import os
import subprocess
import sys

import numpy as np
import pytest

from rotsync import rng
from rotsync.classifier import lift_cover
from rotsync.fixtures import generic, h6
from rotsync.kernels import BACKEND, build_program, program_class

try:
    program_class("cython")
    HAVE_C = True
except RuntimeError:
    HAVE_C = False

needs_c = pytest.mark.skipif(not HAVE_C, reason="compiled kernels not built")

SYSTEMS = {"generic": generic(), "cover": lift_cover(generic(), 2), "conj": generic().conjugated(h6())}


def _pair(system):
    atoms = [list(g.atoms) for g in system.generators]
    return build_program(atoms, "cython"), build_program(atoms, "python")


def _words(system, n, length, seed):
    return [rng.letters_from_uniforms(rng.uniform_block(rng.stream_key(seed, i), 0, length),
                                      system.cumnu).astype(np.int32) for i in range(n)]


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        program_class("fortran")


def test_environment_forces_fallback():
    env = dict(os.environ, ROTSYNC_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import rotsync.kernels as k; print(k.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


def test_default_backend_is_compiled_when_available():
    if not os.environ.get("ROTSYNC_PURE_PYTHON"):
        assert BACKEND == ("cython" if HAVE_C else "python")


@needs_c
@pytest.mark.parametrize("name", sorted(SYSTEMS))
def test_eval_and_trajectory_parity(name):
    S = SYSTEMS[name]
    c, p = _pair(S)
    xs = np.linspace(-1.0, 2.0, 301)
    for w in _words(S, 5, 60, 1):
        assert np.allclose(c.eval_word(w, xs), p.eval_word(w, xs), atol=1e-12, rtol=0)
        assert np.allclose(c.trajectory(w, xs[:20]), p.trajectory(w, xs[:20]), atol=1e-12, rtol=0)
    rows = np.array(_words(S, 8, 30, 2))
    assert np.allclose(c.eval_rows(rows, xs[:8]), p.eval_rows(rows, xs[:8]), atol=1e-12, rtol=0)


@needs_c
@pytest.mark.parametrize("name", sorted(SYSTEMS))
def test_translation_number_parity(name):
    S = SYSTEMS[name]
    c, p = _pair(S)
    for w in _words(S, 20, 40, 3):
        tc = c.translation_number(w, 1e-3, 512, 12, 1e-10)
        tp = p.translation_number(w, 1e-3, 512, 12, 1e-10)
        assert tc[0] == tp[0] and tc[3:] == tp[3:]
        assert tc[1] == pytest.approx(tp[1], abs=1e-9)


@needs_c
def test_random_dynamics_parity():
    S = generic()
    c, p = _pair(S)
    keys = rng.stream_keys(11, np.arange(200))
    assert np.allclose(c.stationary_endpoints(S.cumnu, keys, 100, 0.3),
                       p.stationary_endpoints(S.cumnu, keys, 100, 0.3), atol=1e-9)
    assert np.allclose(c.spectrum(S.cumnu, keys[:50], 100, 1 / 400, 64, 12, 1e-10),
                       p.spectrum(S.cumnu, keys[:50], 100, 1 / 400, 64, 12, 1e-10), atol=1e-9)
    assert np.allclose(c.orbit(S.cumnu, int(keys[0]), 500, 0.1), p.orbit(S.cumnu, int(keys[0]), 500, 0.1),
                       atol=1e-6)
