import math

import numpy as np
import pytest

from aitsahalia import (
    ConvergenceReport,
    DegenerateFit,
    RefNotFiner,
    SchemeKind,
    StepTooLarge,
    fit_rate,
    get_params,
    moment_study,
    strong_error_study,
)

import oracles

EG1 = get_params("eg1")
EG2 = get_params("eg2")
EG3 = get_params("eg3")


# -------------------------------------------------------------- fit_rate


def test_fit_exact_power_law():
    h = [2.0**-k for k in range(4, 10)]
    e = [3.0 * x**0.5 for x in h]
    fit = fit_rate(list(zip(h, e)))
    assert fit.q == pytest.approx(0.5, abs=1e-12)
    assert fit.resid == pytest.approx(0.0, abs=1e-10)


def test_fit_matches_polyfit_oracle():
    rng = np.random.default_rng(3)
    h = np.array([2.0**-k for k in range(4, 11)])
    e = 1.7 * h**0.48 * np.exp(rng.normal(0.0, 0.05, h.size))
    fit = fit_rate(list(zip(h, e)))
    q_ref, resid_ref = oracles.polyfit_rate(h, e)
    assert fit.q == pytest.approx(q_ref, rel=1e-10)
    assert fit.resid == pytest.approx(resid_ref, rel=1e-8)


def test_fit_degenerate_cases():
    with pytest.raises(DegenerateFit):
        fit_rate([(0.5, 0.1)])
    with pytest.raises(DegenerateFit):
        fit_rate([(0.5, 0.1), (0.5, 0.2)])
    with pytest.raises(ValueError):
        fit_rate([(0.5, 0.1), (0.25, -0.1)])
    with pytest.raises(ValueError):
        fit_rate([(0.5, 0.1), (0.25, math.nan)])


# ---------------------------------------------------- strong_error_study

DESK = dict(n_paths=48, ref_level=8, test_levels=[4, 5, 6], seed=42, batch_size=16)


def test_study_report_shape():
    rep = strong_error_study(EG1, [SchemeKind.TEM, SchemeKind.BEM], **DESK, preset_id="eg1")
    assert isinstance(rep, ConvergenceReport)
    assert rep.levels == (4, 5, 6)
    assert rep.step_sizes == (2.0**-4, 2.0**-5, 2.0**-6)
    for kind in (SchemeKind.TEM, SchemeKind.BEM):
        assert len(rep.errors[kind]) == 3
        assert all(e > 0.0 for e in rep.errors[kind])
        assert rep.violations[kind] == (0, 0, 0)
        assert rep.scheme_seconds(kind) >= 0.0
    assert rep.reference_seconds > 0.0
    assert rep.fits[SchemeKind.TEM] is not None


def test_study_errors_decrease_with_level():
    rep = strong_error_study(EG1, [SchemeKind.TEM], **DESK)
    e = rep.errors[SchemeKind.TEM]
    assert e[0] > e[1] > e[2]


def test_self_coupling_error_is_zero():
    # a scheme measured against itself at the reference level
    rep = strong_error_study(
        EG1, [SchemeKind.BEM], n_paths=8, ref_level=6, test_levels=[6], seed=1
    )
    assert rep.errors[SchemeKind.BEM] == (0.0,)
    assert rep.fits[SchemeKind.BEM] is None  # one point, no fit


def test_worker_count_invariance():
    kw = dict(n_paths=40, ref_level=7, test_levels=[4, 5], seed=9, batch_size=8)
    one = strong_error_study(EG2, [SchemeKind.TEM], workers=1, **kw)
    three = strong_error_study(EG2, [SchemeKind.TEM], workers=3, **kw)
    assert one.errors == three.errors
    assert one.violations == three.violations


def test_batch_size_is_part_of_the_contract():
    # identical batch splits give identical floats even via imap ordering
    kw = dict(n_paths=32, ref_level=7, test_levels=[5], seed=9)
    a = strong_error_study(EG1, [SchemeKind.TEM], batch_size=8, **kw)
    b = strong_error_study(EG1, [SchemeKind.TEM], batch_size=8, **kw)
    assert a.errors == b.errors


def test_ref_must_be_finer():
    with pytest.raises(RefNotFiner):
        strong_error_study(EG1, [SchemeKind.TEM], n_paths=4, ref_level=5, test_levels=[6], seed=1)


def test_bem_step_bound_fails_fast():
    # eg3 c1=4: reference level too coarse for BEM must raise before work
    with pytest.raises(StepTooLarge):
        strong_error_study(EG3, [SchemeKind.BEM], n_paths=4, ref_level=2, test_levels=[2], seed=1)
    # and a too-coarse test level raises even when the reference is fine
    with pytest.raises(StepTooLarge):
        strong_error_study(EG3, [SchemeKind.BEM], n_paths=4, ref_level=8, test_levels=[1], seed=1)


def test_tem_reference_supported():
    rep = strong_error_study(
        EG1,
        [SchemeKind.TEM],
        n_paths=8,
        ref_level=7,
        test_levels=[4, 5],
        seed=2,
        ref_scheme=SchemeKind.TEM,
    )
    assert rep.ref_scheme is SchemeKind.TEM
    assert all(e > 0.0 for e in rep.errors[SchemeKind.TEM])


def test_em_violations_counted():
    rep = strong_error_study(
        EG1, [SchemeKind.EM, SchemeKind.TEM], n_paths=200, ref_level=8,
        test_levels=[4], seed=2024, batch_size=64,
    )
    assert sum(rep.violations[SchemeKind.EM]) > 0
    assert sum(rep.violations[SchemeKind.TEM]) == 0


def test_study_input_validation():
    with pytest.raises(ValueError):
        strong_error_study(EG1, [], n_paths=4, ref_level=6, test_levels=[4], seed=1)
    with pytest.raises(ValueError):
        strong_error_study(EG1, [SchemeKind.TEM], n_paths=0, ref_level=6, test_levels=[4], seed=1)
    with pytest.raises(ValueError):
        strong_error_study(EG1, [SchemeKind.TEM], n_paths=4, ref_level=6, test_levels=[], seed=1)
    with pytest.raises(ValueError):
        strong_error_study(
            EG1, [SchemeKind.TEM], n_paths=4, ref_level=6, test_levels=[-1], seed=1
        )


# ------------------------------------------------------------ moment_study


def test_moments_basic_report():
    rep = moment_study(EG1, SchemeKind.TEM, [2.0], [4, 6], 64, 7, preset_id="eg1")
    assert rep.p_values == (2.0,)
    assert rep.levels == (4, 6)
    assert rep.h_values == (2.0**-4, 2.0**-6)
    for level in (4, 6):
        sup = rep.sup_moments[(2.0, level)]
        series = rep.per_step[(2.0, level)]
        assert series.shape == (2**level + 1,)
        assert sup == pytest.approx(float(series.max()))
        assert series[0] == pytest.approx(EG1.x0**2)
    assert not rep.insufficient_samples
    assert rep.censored == {4: 0, 6: 0}


def test_moments_stability_flag():
    rep = moment_study(EG1, SchemeKind.TEM, [2.0], [4, 6, 8], 256, 11)
    assert rep.stable[2.0]


def test_moments_inverse_tracks_reciprocal():
    rep = moment_study(EG1, SchemeKind.TEM, [1.0], [4], 32, 5, inverse=True)
    series = rep.per_step[(1.0, 4)]
    assert series[0] == pytest.approx(1.0 / EG1.x0)
    assert np.all(series > 0.0)


def test_moments_em_censoring_counted():
    rep = moment_study(EG1, SchemeKind.EM, [2.0], [4], 200, 2024)
    assert rep.censored[4] > 0


def test_moments_single_path_flagged():
    rep = moment_study(EG1, SchemeKind.TEM, [2.0], [4], 1, 1)
    assert rep.insufficient_samples


def test_moments_critical_cap_warning():
    # eg3 ratio 3.5 caps guaranteed orders at 2*3.5 + 1 = 8
    with pytest.warns(UserWarning, match="cap"):
        moment_study(EG3, SchemeKind.TEM, [10.0], [4], 8, 1)


def test_moments_input_validation():
    with pytest.raises(ValueError):
        moment_study(EG1, SchemeKind.TEM, [], [4], 8, 1)
    with pytest.raises(ValueError):
        moment_study(EG1, SchemeKind.TEM, [-2.0], [4], 8, 1)
    with pytest.raises(ValueError):
        moment_study(EG1, SchemeKind.TEM, [2.0], [], 8, 1)
    with pytest.raises(ValueError):
        moment_study(EG1, SchemeKind.TEM, [2.0], [4], 0, 1)
