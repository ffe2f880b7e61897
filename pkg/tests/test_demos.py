import runpy
from pathlib import Path

import pytest

DEMOS = sorted((Path(__file__).parent.parent / "demos").glob("0[1-4]_*.py"))


@pytest.mark.parametrize("path", DEMOS, ids=lambda p: p.stem)
def test_fast_demo_runs(path, capsys):
    runpy.run_path(str(path), run_name="__main__")
    assert capsys.readouterr().out


@pytest.mark.slow
@pytest.mark.parametrize("name", ["05_closed_loop.py", "06_mismatch_sweep.py"])
def test_slow_demo_runs(name, capsys):
    runpy.run_path(str(Path(__file__).parent.parent / "demos" / name), run_name="__main__")
    assert capsys.readouterr().out
