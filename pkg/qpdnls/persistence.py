import csv
import json
import os
from dataclasses import asdict, is_dataclass
from typing import Iterable, List, Optional

import torch

from qpdnls.checks import CHECK_FIELDS, LemmaCheck
from qpdnls.errors import UsageError
from qpdnls.lattice import TruncationBox
from qpdnls.solver.state import CDTYPE, Trajectory
from qpdnls.utils import format_float, print

def _cell(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    if value is None:
        return ""
    if isinstance(value, (tuple, list)):
        return "[" + ",".join(_cell(v) for v in value) + "]"
    return str(value)

def _jsonable(value):
    if is_dataclass(value):
        value = asdict(value)
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, torch.Tensor):
        return _jsonable(value.tolist())
    if isinstance(value, float) and value != value:
        return None
    return value

class ArtifactWriter:
    """
    Writes the artifacts of one run under `out_dir` (created if absent).
    CSV floats use the shortest round-trip repr and JSON keys are sorted, so identical runs give identical bytes.
    """
    def __init__(self, out_dir: str, fmt: str = "csv", verbose: bool = True) -> None:
        self.out_dir = out_dir
        self.fmt = fmt
        self.verbose = verbose
        self.written: List[str] = []
        os.makedirs(out_dir, exist_ok=True)

    def path(self, name: str) -> str:
        return os.path.join(self.out_dir, name)

    def _done(self, path: str) -> str:
        self.written.append(path)
        print(f"Saved {path}", is_print_rank=self.verbose)
        return path

    def save_json(self, name: str, payload) -> str:
        path = self.path(name)
        with open(path, "w") as f:
            json.dump(_jsonable(payload), f, indent=2, sort_keys=True, allow_nan=True)
            f.write("\n")
        return self._done(path)

    def save_table(self, name: str, rows: Iterable, fields: Optional[List[str]] = None) -> str:
        """Rows are dataclasses or dicts; written as `<name>.csv` or `<name>.json` depending on the format."""
        rows = [asdict(r) if is_dataclass(r) else dict(r) for r in rows]
        if self.fmt == "json":
            return self.save_json(f"{name}.json", rows)
        fields = fields or (list(rows[0]) if rows else [])
        path = self.path(f"{name}.csv")
        with open(path, "w", newline="") as f:
            writer = csv.DictWriter(f, fieldnames=fields, lineterminator="\n")
            writer.writeheader()
            for row in rows:
                writer.writerow({k: _cell(row.get(k)) for k in fields})
        return self._done(path)

    def save_checks(self, checks: Iterable[LemmaCheck], name: str = "checks") -> str:
        return self.save_table(name, [c.as_row() for c in checks], CHECK_FIELDS)

    def save_trajectory(self, trajectory: Trajectory, name: str = "trajectory") -> str:
        nu = trajectory.box.nu
        fields = ["t"] + [f"n_{i + 1}" for i in range(nu)] + ["re", "im"]
        rows = []
        for i, t in enumerate(trajectory.times.tolist()):
            for n, a in zip(trajectory.points, trajectory.amplitudes[i].tolist()):
                row = {"t": t, "re": a.real, "im": a.imag}
                row.update({f"n_{j + 1}": x for j, x in enumerate(n)})
                rows.append(row)
        return self.save_table(name, rows, fields)

    def save_monitors(self, trajectory: Trajectory, name: str = "monitors") -> Optional[str]:
        if trajectory.monitors is None:
            return None
        rows = [{"t": t, "M": m[0], "H": m[1], "E": m[2]}
                for t, m in zip(trajectory.times.tolist(), trajectory.monitors.tolist())]
        return self.save_table(name, rows, ["t", "M", "H", "E"])

def load_trajectory(path: str, box: TruncationBox) -> Trajectory:
    """Read a trajectory CSV written by ArtifactWriter.save_trajectory."""
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        coord_fields = [name for name in reader.fieldnames if name.startswith("n_")]
        if len(coord_fields) != box.nu:
            raise UsageError(f"{path} has {len(coord_fields)} coordinate columns, expected {box.nu}")
        snapshots = {}
        for row in reader:
            t = float(row["t"])
            n = tuple(int(row[name]) for name in coord_fields)
            snapshots.setdefault(t, {})[n] = complex(float(row["re"]), float(row["im"]))
    times = sorted(snapshots)
    points = tuple(sorted({n for snapshot in snapshots.values() for n in snapshot}))
    amplitudes = torch.tensor([[snapshots[t].get(n, 0j) for n in points] for t in times], dtype=CDTYPE)
    return Trajectory(torch.tensor(times, dtype=torch.float64), box, points, amplitudes.reshape(len(times), len(points)))
