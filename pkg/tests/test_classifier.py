import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rotsync.circle import GeneratorSystem, Moebius, PiecewiseLinear, Rotation, Word, compose, conjugate
from rotsync.classifier import (AtomDetected, Inconclusive, NotEquivariant, Verdict, classify, decide,
                                displacement_oscillation, equivariance_defect, factor_quotient, lift_cover,
                                linearizer, rotation_spectrum)
from rotsync.dynamics import EmpiricalMeasure, birkhoff_samples
from rotsync.fixtures import ALPHA, cover, generic, rotations
from rotsync.rotnum import translation_number, word_translation_number


def test_rotation_spectrum_is_equidistributed():
    spec = rotation_spectrum(rotations(), 200, 10_000, 0)
    assert spec.ks_uniform() <= 0.05


def test_generic_spectrum_concentrates_at_zero():
    spec = rotation_spectrum(generic(), 200, 2000, 0)
    assert spec.mass_near([0.0], 1 / 400)[0] >= 0.9


def test_double_cover_spectrum_has_two_atoms():
    spec = rotation_spectrum(cover(2), 200, 2000, 0)
    m0, m1 = spec.mass_near([0.0, 0.5], 1 / 400)
    assert 0.45 <= m0 <= 0.55 and 0.45 <= m1 <= 0.55


def test_spectrum_is_deterministic():
    a = rotation_spectrum(generic(), 50, 300, 9)
    b = rotation_spectrum(generic(), 50, 300, 9)
    assert np.array_equal(a.samples, b.samples)
    c = rotation_spectrum(generic(), 50, 300, 10)
    assert not np.array_equal(a.samples, c.samples)


def test_spectrum_arguments_validated():
    with pytest.raises(ValueError):
        rotation_spectrum(rotations(), 0, 10, 0)


@pytest.mark.parametrize("system,verdict,l", [
    (rotations(), Verdict.INVARIANT_MEASURE, None),
    (generic(), Verdict.SYNCHRONIZING, None),
    (cover(2), Verdict.FACTORIZABLE, 2),
])
def test_classify_fixtures(system, verdict, l):
    rep = classify(system, 200, 3000, 1)
    assert rep.verdict is verdict
    assert rep.l == l
    assert bool(rep.atom_masses) == (verdict is Verdict.FACTORIZABLE)
    assert 0.0 <= rep.zero_fraction <= 1.0


def test_inconclusive_carries_report():
    with pytest.raises(Inconclusive) as exc:
        classify(GeneratorSystem([Rotation(1 / 13)]), 200, 2000, 0)
    assert exc.value.report.verdict is None
    assert exc.value.report.M_used == 2000


def test_decide_on_synthetic_spectra():
    half = EmpiricalMeasure([0.0] * 50 + [0.5] * 50)
    rep = decide(half, 200)
    assert rep.verdict is Verdict.FACTORIZABLE and rep.l == 2
    assert rep.atom_masses == {"0/2": 0.5, "1/2": 0.5}
    zero = EmpiricalMeasure([0.0] * 90 + list(np.linspace(0.1, 0.9, 10)))
    assert decide(zero, 200).verdict is Verdict.SYNCHRONIZING
    thirds = EmpiricalMeasure([0.0] * 40 + [1 / 3] * 30 + [2 / 3] * 30)
    rep = decide(thirds, 200)
    assert rep.verdict is Verdict.FACTORIZABLE and rep.l == 3


def test_factorizable_takes_the_minimal_l():
    # atoms at multiples of 1/4 also sum to 1 for l = 8 and l = 12
    spec = EmpiricalMeasure(np.repeat(np.arange(4) / 4, 25))
    assert decide(spec, 200).l == 4


def test_report_json_round_trip():
    rep = classify(rotations(), 100, 1000, 3)
    d = json.loads(rep.to_json())
    assert d["verdict"] == "InvariantMeasure" and d["seed"] == 3 and d["N_used"] == 100


# -- linearizer -------------------------------------------------------------


def test_linearizer_of_lebesgue_is_identity():
    n = 20_000
    mu = EmpiricalMeasure((np.arange(n) + 0.5) / n)
    L = linearizer(rotations(), mu)
    assert np.max(np.abs(L.ys - L.xs)) <= 2 / n


def test_linearizer_of_single_rotation_orbit():
    S = GeneratorSystem([Rotation(ALPHA)])
    L = linearizer(S, birkhoff_samples(S, 100_000, 0))
    assert np.max(np.abs(L.ys - L.xs)) <= 0.01


def test_linearizer_flattens_conjugated_rotations():
    h = PiecewiseLinear([(0.0, 0.03), (0.15, 0.11), (0.33, 0.4), (0.5, 0.52), (0.7, 0.66), (0.85, 0.9)])
    S = rotations().conjugated(h)
    L = linearizer(S, birkhoff_samples(S, 100_000, 4, burn=100)).as_homeo()
    for g in S.generators:
        assert displacement_oscillation(conjugate(g, L)) <= 0.02


def test_linearizer_table_is_monotone_degree_one():
    S = generic().conjugated(Rotation(0.1))
    mu = birkhoff_samples(rotations(), 5000, 2)
    L = linearizer(S, mu)
    ext = np.append(L.ys, L.ys[0] + 1.0)
    assert np.all(np.diff(ext) > 0)
    assert L.ys[0] == 0.0


def test_linearizer_rejects_atoms():
    with pytest.raises(AtomDetected):
        linearizer(None, EmpiricalMeasure([0.2, 0.2, 0.2, 0.7]))


# -- covers and quotients ---------------------------------------------------


@given(st.floats(0.0, 1.0, exclude_max=True), st.integers(2, 6), st.floats(-2.0, 2.0))
def test_cover_of_rotation_is_half_rotation(alpha, l, x):
    c = lift_cover(GeneratorSystem([Rotation(alpha)]), l).generators[0]
    assert c.eval_lift(x) == pytest.approx(x + alpha / l, abs=1e-12)


@given(st.integers(2, 5), st.integers(0, 2**20))
def test_cover_commutes_with_deck_rotation(l, n):
    x = n / 2**20
    for g in cover(l).generators if l in (2, 3) else lift_cover(generic(), l).generators:
        assert g.eval_lift(x + 1 / l) == pytest.approx(g.eval_lift(x) + 1 / l, abs=1e-12)
        assert equivariance_defect(g, l) <= 1e-12


def test_cover_needs_l_at_least_two():
    with pytest.raises(ValueError):
        lift_cover(generic(), 1)
    with pytest.raises(ValueError):
        factor_quotient(generic(), 1)


@given(st.integers(2, 6), st.lists(st.floats(-1.0, 2.0), min_size=1, max_size=20))
def test_cover_quotient_round_trip(l, xs):
    base = generic()
    down = factor_quotient(lift_cover(base, l), l)
    x = np.array(xs)
    for g0, g1 in zip(base.generators, down.generators):
        assert np.max(np.abs(g0.eval_lift(x) - g1.eval_lift(x))) <= 1e-9


@pytest.mark.parametrize("l", [2, 3, 4])
def test_quotient_scales_translation_numbers_by_l(l):
    base = GeneratorSystem([Rotation(1 / 3), Rotation(2 / 7), Moebius([[2.0, 0.0], [0.0, 0.5]])])
    up = lift_cover(base, l)
    down = factor_quotient(up, l)
    for w in (Word([1]), Word([2]), Word([3]), Word([1, 2]), Word([2, 2, 1]), Word([3, 3])):
        t_up = word_translation_number(up, w)
        t_down = word_translation_number(down, w)
        assert t_down.exact
        if t_up.exact:
            assert t_down.fraction == l * t_up.fraction
        else:  # denominator beyond the exact-detection cap
            assert abs(float(t_down.fraction) - l * t_up.value) <= l * t_up.error_bound


def test_quotient_of_non_equivariant_system():
    with pytest.raises(NotEquivariant):
        factor_quotient(generic(), 2)


def test_quotient_of_irrational_cover_scales_value():
    up = lift_cover(rotations(), 3)
    down = factor_quotient(up, 3)
    t_up, t_down = translation_number(up.generators[0]), translation_number(down.generators[0])
    assert abs(t_down.value - 3 * t_up.value) <= t_down.error_bound + 3 * t_up.error_bound
    assert t_down.value == pytest.approx(ALPHA, abs=1e-4)
    assert math.isclose(compose(up, [1]).eval_lift(0.0), ALPHA / 3)
