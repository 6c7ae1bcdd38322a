import subprocess

import pytest

GOOD_CONVERGENCE = """\
scheme,h,e_h,seconds,violations
tem,0.0625,0.08,0.1,0
tem,0.03125,0.055,0.2,0
tem,0.015625,0.04,0.3,0
bem,0.0625,0.1,0.4,0
bem,0.03125,0.07,0.5,0
bem,0.015625,0.05,0.6,0
"""

GOOD_PATHS = """\
path,t,y,scheme,status
0,0,1,tem,ok
0,0.5,1.2,tem,ok
0,1,0.9,tem,ok
1,0,1,tem,ok
1,0.5,0.8,tem,ok
1,1,1.1,tem,ok
"""


@pytest.fixture
def convergence_csv(tmp_path):
    p = tmp_path / "convergence.csv"
    p.write_text(GOOD_CONVERGENCE)
    return p


@pytest.fixture
def paths_csv(tmp_path):
    p = tmp_path / "paths.csv"
    p.write_text(GOOD_PATHS)
    return p


@pytest.fixture(scope="session")
def desk_eg1_csv(tmp_path_factory):
    """Real desk-protocol artifact produced by the simulation CLI."""
    out = tmp_path_factory.mktemp("desk_eg1")
    subprocess.run(
        ["aitsahalia", "convergence", "--preset", "eg1", "--desk",
         "--workers", "1", "--out", str(out)],
        check=True, capture_output=True, text=True,
    )
    return out / "convergence.csv"
