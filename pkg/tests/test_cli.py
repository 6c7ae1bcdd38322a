import csv
import subprocess
import sys

import pytest

from aitsahalia.cli import DEFAULT_SEED, build_parser, main

GOOD_SECTION = """\
[custom]
c_m1 = 1.5
c0 = 2.0
c1 = 1.0
c2 = 2.0
c3 = 1.0
kappa = 5.0
rho = 1.5
x0 = 0.5
"""


def read_rows(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.reader(fh))


def strip_seconds(path):
    rows = read_rows(path)
    drop = rows[0].index("seconds")
    return [[c for i, c in enumerate(r) if i != drop] for r in rows]


def test_parser_defaults():
    args = build_parser().parse_args(["convergence"])
    assert args.preset == "eg1"
    assert args.seed == DEFAULT_SEED
    assert args.alpha == 0.5
    assert args.ref_scheme == "bem"
    assert not args.desk


def test_simulate_row_count(tmp_path, capsys):
    rc = main(
        ["simulate", "--scheme", "tem", "--paths", "3", "--levels", "3", "--out", str(tmp_path)]
    )
    assert rc == 0
    rows = read_rows(tmp_path / "paths.csv")
    assert len(rows) == 1 + 3 * 9
    assert "wrote" in capsys.readouterr().out


def test_simulate_zero_paths_header_only(tmp_path):
    rc = main(["simulate", "--paths", "0", "--out", str(tmp_path)])
    assert rc == 0
    rows = read_rows(tmp_path / "paths.csv")
    assert rows == [["path", "t", "y", "scheme", "status"]]


def test_simulate_em_reports_stopped(tmp_path, capsys):
    rc = main(
        ["simulate", "--scheme", "em", "--paths", "40", "--levels", "4",
         "--seed", "2024", "--out", str(tmp_path)]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "stopped early" in out


def test_convergence_writes_csv_and_summary(tmp_path, capsys):
    rc = main(
        ["convergence", "--paths", "24", "--ref-level", "7", "--levels", "4,5,6",
         "--workers", "1", "--out", str(tmp_path)]
    )
    assert rc == 0
    out = capsys.readouterr().out
    assert "scheme=tem q=" in out
    assert "scheme=bem q=" in out
    rows = read_rows(tmp_path / "convergence.csv")
    assert rows[0] == ["scheme", "h", "e_h", "seconds", "violations"]
    assert len(rows) == 1 + 2 * 3


def test_convergence_worker_invariance_bytes(tmp_path):
    base = ["convergence", "--paths", "32", "--ref-level", "7", "--levels", "4,5",
            "--scheme", "tem", "--seed", "99"]
    rc1 = main(base + ["--workers", "1", "--out", str(tmp_path / "w1")])
    rc2 = main(base + ["--workers", "3", "--out", str(tmp_path / "w3")])
    assert rc1 == rc2 == 0
    assert strip_seconds(tmp_path / "w1" / "convergence.csv") == strip_seconds(
        tmp_path / "w3" / "convergence.csv"
    )


def test_convergence_tem_reference(tmp_path, capsys):
    rc = main(
        ["convergence", "--paths", "8", "--ref-level", "6", "--levels", "4,5",
         "--ref-scheme", "tem", "--scheme", "tem", "--out", str(tmp_path)]
    )
    assert rc == 0


def test_check_assumptions_pass(tmp_path, capsys):
    rc = main(["check-assumptions", "--preset", "eg2", "--gamma", "16",
               "--grid-points", "20000", "--out", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "eg2: pass" in out
    rows = read_rows(tmp_path / "assumptions.csv")
    assert len(rows) == 2
    assert rows[1][-1] == "true"


def test_check_assumptions_auto_gamma(tmp_path, capsys):
    for preset in ("eg1", "eg2", "eg3"):
        rc = main(["check-assumptions", "--preset", preset, "--grid-points", "20000",
                   "--out", str(tmp_path)])
        assert rc == 0


def test_check_assumptions_small_alpha_rejected(tmp_path, capsys):
    rc = main(["check-assumptions", "--alpha", "0.25", "--out", str(tmp_path)])
    assert rc == 2
    assert "alpha" in capsys.readouterr().err


def test_moments_runs(tmp_path, capsys):
    rc = main(["moments", "--paths", "64", "--levels", "4,6", "--p", "2",
               "--out", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "p=2" in out
    rows = read_rows(tmp_path / "moments.csv")
    assert len(rows) == 3


def test_moments_inverse_flag(tmp_path):
    rc = main(["moments", "--paths", "16", "--levels", "4", "--p", "1",
               "--inverse", "--out", str(tmp_path)])
    assert rc == 0
    rows = read_rows(tmp_path / "moments.csv")
    assert rows[1][5] == "true"


def test_mlmc_runs(tmp_path, capsys):
    rc = main(["mlmc", "--target-rmse", "0.1", "--out", str(tmp_path)])
    assert rc == 0
    out = capsys.readouterr().out
    assert "estimate=" in out
    rows = read_rows(tmp_path / "mlmc.csv")
    assert rows[0] == ["payoff", "scheme", "level", "h", "n_samples", "mean_diff", "var_diff"]
    assert len(rows) >= 4  # at least the three seed levels


def test_mlmc_bad_target_is_config_error(tmp_path, capsys):
    rc = main(["mlmc", "--target-rmse", "-1", "--out", str(tmp_path)])
    assert rc == 2


def test_unknown_preset_lists_available(tmp_path, capsys):
    rc = main(["simulate", "--preset", "nope", "--out", str(tmp_path)])
    assert rc == 2
    err = capsys.readouterr().err
    assert "eg1" in err and "eg2" in err and "eg3" in err


def test_config_file_preset(tmp_path):
    ini = tmp_path / "models.ini"
    ini.write_text(GOOD_SECTION)
    rc = main(["simulate", "--preset", "custom", "--config", str(ini),
               "--paths", "1", "--levels", "2", "--out", str(tmp_path)])
    assert rc == 0
    rows = read_rows(tmp_path / "paths.csv")
    assert float(rows[1][2]) == 0.5  # x0 from the file


def test_config_file_bad_keys(tmp_path, capsys):
    ini = tmp_path / "models.ini"
    ini.write_text(GOOD_SECTION + "sigma = 1.0\n")
    rc = main(["simulate", "--preset", "custom", "--config", str(ini),
               "--out", str(tmp_path)])
    assert rc == 2
    assert "sigma" in capsys.readouterr().err


def test_bem_step_bound_is_config_error(tmp_path, capsys):
    # eg3 has c1 = 4; level 1 gives h = 0.5 >= 1/4
    rc = main(["convergence", "--preset", "eg3", "--paths", "4", "--ref-level", "6",
               "--levels", "1,2", "--scheme", "bem", "--out", str(tmp_path)])
    assert rc == 2
    assert "1/c1" in capsys.readouterr().err


def test_invalid_levels_rejected(tmp_path, capsys):
    rc = main(["simulate", "--levels", "a,b", "--out", str(tmp_path)])
    assert rc == 2
    rc = main(["convergence", "--levels", "4,-2", "--paths", "4",
               "--ref-level", "6", "--out", str(tmp_path)])
    assert rc == 2


def test_invalid_scheme_rejected(tmp_path, capsys):
    rc = main(["simulate", "--scheme", "milstein", "--out", str(tmp_path)])
    assert rc == 2
    assert "milstein" in capsys.readouterr().err


def test_workers_validated(tmp_path):
    rc = main(["convergence", "--paths", "4", "--ref-level", "6", "--levels", "4",
               "--workers", "0", "--out", str(tmp_path)])
    assert rc == 2


def test_console_script_entry_point(tmp_path):
    proc = subprocess.run(
        [sys.executable, "-m", "aitsahalia.cli"],
        capture_output=True, text=True,
    )
    # module is importable but only the console script calls run()
    assert proc.returncode == 0 or proc.returncode == 2
    proc = subprocess.run(
        ["aitsahalia", "simulate", "--paths", "1", "--levels", "2",
         "--out", str(tmp_path)],
        capture_output=True, text=True,
    )
    assert proc.returncode == 0
    assert (tmp_path / "paths.csv").exists()
