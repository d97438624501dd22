import csv
import json

import torch

from qpdnls.checks import LemmaCheck
from qpdnls.lattice import TruncationBox
from qpdnls.persistence import ArtifactWriter, load_trajectory
from qpdnls.solver.state import Trajectory

def sample_trajectory() -> Trajectory:
    box = TruncationBox(3, 2)
    points = ((-1, 0), (0, 0), (1, 2))
    amplitudes = torch.tensor([[0.1 + 0.2j, 1 / 3, -2e-17j], [0.3, 0.1 - 1e-300j, 0.7j]], dtype=torch.complex128)
    monitors = torch.tensor([[1.0, 2.0, 3.0], [1.0, 2.5, 3.5]], dtype=torch.float64)
    return Trajectory(torch.tensor([0.0, 0.1], dtype=torch.float64), box, points, amplitudes, monitors=monitors)

def test_trajectory_csv_is_lossless(tmp_path):
    writer = ArtifactWriter(str(tmp_path / "run"), verbose=False)
    trajectory = sample_trajectory()
    path = writer.save_trajectory(trajectory)
    with open(path) as f:
        assert f.readline().strip() == "t,n_1,n_2,re,im"
    loaded = load_trajectory(path, trajectory.box)
    assert loaded.points == trajectory.points
    assert torch.equal(loaded.times, trajectory.times)
    assert torch.equal(loaded.amplitudes, trajectory.amplitudes)

def test_monitors_and_checks(tmp_path):
    writer = ArtifactWriter(str(tmp_path), verbose=False)
    writer.save_monitors(sample_trajectory())
    with open(tmp_path / "monitors.csv") as f:
        rows = list(csv.DictReader(f))
    assert rows[1] == {"t": "0.1", "M": "1.0", "H": "2.5", "E": "3.5"}

    checks = [LemmaCheck("sigma_ell", "k=1 gamma=0", "0+1/2", "1/2", True),
              LemmaCheck("p_recursion", "k=2 gamma=(1,1,1)", "324", "323", False)]
    writer.save_checks(checks)
    with open(tmp_path / "checks.csv") as f:
        lines = f.read().splitlines()
    assert lines[0] == "lemma,instance,expected,actual,pass"
    assert lines[2] == "p_recursion,\"k=2 gamma=(1,1,1)\",324,323,false"
    assert writer.written == [str(tmp_path / "monitors.csv"), str(tmp_path / "checks.csv")]

def test_json_artifacts(tmp_path):
    writer = ArtifactWriter(str(tmp_path), fmt="json", verbose=False)
    writer.save_json("summary.json", {"b": float("nan"), "a": (1, 2), "c": torch.tensor([0.5])})
    text = (tmp_path / "summary.json").read_text()
    assert json.loads(text) == {"a": [1, 2], "b": None, "c": [0.5]}
    assert text.index('"a"') < text.index('"b"') < text.index('"c"')
    writer.save_table("cauchy", [{"k": 1, "ratio": None}])
    assert json.loads((tmp_path / "cauchy.json").read_text()) == [{"k": 1, "ratio": None}]
