import csv

import numpy as np
import pytest

from aitsahalia import (
    GridSpec,
    Payoff,
    SchemeConfig,
    SchemeKind,
    TamingConfig,
    check_assumptions,
    f17,
    generate_block,
    get_params,
    integrate_paths,
    mlmc_fixed_levels,
    moment_study,
    strong_error_study,
    write_assumptions_csv,
    write_convergence_csv,
    write_mlmc_csv,
    write_moments_csv,
    write_paths_csv,
)
from aitsahalia.csvio import (
    ASSUMPTIONS_HEADER,
    CONVERGENCE_HEADER,
    MLMC_HEADER,
    MOMENTS_HEADER,
    PATHS_HEADER,
)

EG1 = get_params("eg1")


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def test_f17_round_trips_doubles():
    for v in (0.1, 2.0**-52, 1.0 / 3.0, 1e300, -1.2345678901234567e-8):
        assert float(f17(v)) == v


def test_convergence_csv(tmp_path):
    rep = strong_error_study(
        EG1, [SchemeKind.TEM, SchemeKind.BEM], n_paths=16, ref_level=7,
        test_levels=[4, 5, 6], seed=3,
    )
    f = str(tmp_path / "convergence.csv")
    write_convergence_csv(rep, f)
    rows = read_rows(f)
    assert tuple(rows[0]) == CONVERGENCE_HEADER
    assert len(rows) == 1 + 2 * 3
    body = rows[1:]
    assert {r[0] for r in body} == {"tem", "bem"}
    for r in body:
        assert float(r[1]) in (2.0**-4, 2.0**-5, 2.0**-6)
        assert float(r[2]) > 0.0
        assert int(r[4]) == 0
    # errors round-trip as exact doubles
    tem_rows = [r for r in body if r[0] == "tem"]
    assert [float(r[2]) for r in tem_rows] == list(rep.errors[SchemeKind.TEM])


def test_convergence_csv_has_lf_endings(tmp_path):
    rep = strong_error_study(EG1, [SchemeKind.TEM], n_paths=4, ref_level=6, test_levels=[4], seed=1)
    f = str(tmp_path / "c.csv")
    write_convergence_csv(rep, f)
    raw = open(f, "rb").read()
    assert b"\r" not in raw
    assert raw.endswith(b"\n")


def test_paths_csv_clean_batch(tmp_path):
    cfg = SchemeConfig.for_level(SchemeKind.TEM, 1.0, 3)
    batch = integrate_paths(EG1, cfg, generate_block(5, 0, 2, 1.0, 3))
    f = str(tmp_path / "paths.csv")
    write_paths_csv(batch, cfg, f)
    rows = read_rows(f)
    assert tuple(rows[0]) == PATHS_HEADER
    assert len(rows) == 1 + 2 * 9  # two paths, 8 steps + initial point each
    assert rows[1][:2] == ["0", "0"]
    assert float(rows[1][2]) == EG1.x0
    assert all(r[3] == "tem" and r[4] == "ok" for r in rows[1:])


def test_paths_csv_truncates_failed_path(tmp_path):
    incs = np.zeros((1, 4))
    incs[0, 2] = -100.0
    cfg = SchemeConfig(kind=SchemeKind.EM, h=0.25, n_steps=4, horizon=1.0)
    batch = integrate_paths(EG1, cfg, incs)
    f = str(tmp_path / "paths.csv")
    write_paths_csv(batch, cfg, f)
    rows = read_rows(f)
    assert len(rows) == 1 + 3  # x0 and two valid steps, then stop
    assert rows[-1][4] == "positivity_lost"
    assert all(r[4] == "ok" for r in rows[1:-1])


def test_assumptions_csv(tmp_path):
    rep = check_assumptions(EG1, TamingConfig(), 2.0**-6, 9.5, GridSpec(n_points=5000))
    f = str(tmp_path / "assumptions.csv")
    write_assumptions_csv(rep, "eg1", f)
    rows = read_rows(f)
    assert tuple(rows[0]) == ASSUMPTIONS_HEADER
    assert len(rows) == 2
    r = rows[1]
    assert r[0] == "eg1"
    assert float(r[1]) == 0.5
    assert float(r[2]) == 2.0**-6
    assert r[11] == "true"


def test_moments_csv(tmp_path):
    rep = moment_study(EG1, SchemeKind.TEM, [2.0, 4.0], [4, 5], 16, 2, preset_id="eg1")
    f = str(tmp_path / "moments.csv")
    write_moments_csv(rep, f)
    rows = read_rows(f)
    assert tuple(rows[0]) == MOMENTS_HEADER
    assert len(rows) == 1 + 2 * 2
    assert [r[1] for r in rows[1:]] == ["2", "2", "4", "4"]
    assert all(r[5] == "false" for r in rows[1:])
    assert float(rows[1][3]) == rep.sup_moments[(2.0, 4)]


def test_mlmc_csv(tmp_path):
    res = mlmc_fixed_levels(EG1, Payoff("call", strike=0.9), (3, 4, 5), 32, seed=4)
    f = str(tmp_path / "mlmc.csv")
    write_mlmc_csv(res, f)
    rows = read_rows(f)
    assert tuple(rows[0]) == MLMC_HEADER
    assert len(rows) == 4
    assert [r[2] for r in rows[1:]] == ["3", "4", "5"]
    assert all(r[0] == "call:0.9" and r[1] == "tem" for r in rows[1:])
    assert [int(r[4]) for r in rows[1:]] == [32, 32, 32]
    # means round-trip: telescoped sum equals the stored estimate
    total = sum(float(r[5]) for r in rows[1:])
    assert total == pytest.approx(res.estimate, rel=1e-15)
