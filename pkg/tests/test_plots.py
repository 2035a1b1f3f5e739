import shutil

import pytest

from ibe_eval.errors import MissingUpstream
from ibe_eval.plots import render_figures


def test_renders_all_figures_from_report_series(tmp_path, golden_dir):
    run_dir = tmp_path / "run"
    shutil.copytree(golden_dir / "report", run_dir / "report")
    written = render_figures(run_dir)
    names = {p.name for p in written}
    assert names == {"ablation.png", "regression.png", "hedges.png", "directions.png"}
    for path in written:
        assert path.exists()
        assert path.stat().st_size > 1000  # a real PNG, not an empty stub


def test_requires_report_stage(tmp_path):
    with pytest.raises(MissingUpstream):
        render_figures(tmp_path)
