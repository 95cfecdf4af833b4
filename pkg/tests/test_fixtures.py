import json

import numpy as np
import pytest

from rotsync.circle import Rotation, Word, compose
from rotsync.fixtures import (BUNDLED, bundled, cover, emit_fixtures, h6, homeo_from_dict, parabolic,
                              resolve_system, system_from_dict)
from rotsync.rotnum import TranslationKind, translation_number

XS = np.linspace(-0.5, 1.5, 41)


@pytest.mark.parametrize("name", sorted(BUNDLED))
def test_json_round_trip(name):
    S = bundled(name)
    T = system_from_dict(json.loads(json.dumps(S.to_dict())))
    assert T.k == S.k and np.array_equal(T.nu, S.nu)
    for f, g in zip(S.generators, T.generators):
        assert np.allclose(f.eval_lift(XS), g.eval_lift(XS), atol=1e-12)


def test_homeo_round_trip_of_conjugator():
    h = h6()
    assert np.allclose(homeo_from_dict(h.to_dict()).eval_lift(XS), h.eval_lift(XS), atol=1e-15)


def test_emit_fixtures(tmp_path):
    paths = emit_fixtures(tmp_path)
    assert {p.stem for p in paths} == set(BUNDLED) | {"h6"}
    for p in paths:
        d = json.loads(p.read_text())
        if "system" in d:
            resolve_system(d["system"])


def test_parabolic_translation_numbers_vanish():
    for g in parabolic().generators:
        assert translation_number(g).kind is TranslationKind.INTEGER_EXACT


@pytest.mark.parametrize("l", [2, 3])
def test_cover_commutes_with_deck_rotation(l):
    S = cover(l)
    for w in (Word([1]), Word([2]), Word([1, 2, 2])):
        f = compose(S, w)
        assert np.allclose(f.eval_lift(XS + 1 / l), f.eval_lift(XS) + 1 / l, atol=1e-12)


def test_resolution_errors():
    with pytest.raises(KeyError):
        bundled("nope")
    with pytest.raises(TypeError):
        resolve_system(3)
    with pytest.raises(ValueError):
        homeo_from_dict({"kind": "spline"})


def test_inline_definition():
    S = resolve_system({"generators": [{"kind": "rotation", "alpha": 0.25}], "nu": [1.0]})
    assert S.generators[0].eval_lift(0.5) == Rotation(0.25).eval_lift(0.5)
