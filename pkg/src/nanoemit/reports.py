"""Result tables, report validation and file output.

Trajectory CSVs carry the fixed column set
t_fs, total, individual, interference, Ax, Ay, Az, J_bar, M_bar, pop_0..pop_{N-1}
with times printed to 6 significant digits and values to 10; identical runs
therefore produce byte-identical files.
"""

import importlib.resources
import json
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

TIME_FORMAT = "%.6g"
VALUE_FORMAT = "%.10g"

SCHEMA_VERSION = 1


@dataclass
class Table:
    columns: list
    data: np.ndarray  # (n_rows, n_cols) float

    @staticmethod
    def from_payload(payload):
        return Table(columns=list(payload["columns"]),
                     data=np.asarray(payload["rows"], dtype=float))


@dataclass
class RunOutcome:
    """In-memory result of a runner command: a report plus named tables."""

    report: dict
    tables: dict = field(default_factory=dict)


def trajectory_table(traj, radiation, spin):
    cols = ["t_fs", "total", "individual", "interference", "Ax", "Ay", "Az",
            "J_bar", "M_bar"] + [f"pop_{s}" for s in range(traj.n_sites)]
    data = np.column_stack(
        [
            traj.times,
            radiation.total,
            radiation.individual,
            radiation.interference,
            spin.spin_vector[:, 0],
            spin.spin_vector[:, 1],
            spin.spin_vector[:, 2],
            spin.j_bar,
            spin.m_bar,
            traj.populations(),
        ]
    )
    return Table(columns=cols, data=data)


def sweep_summary_table(n_values, metrics):
    cols = ["N", "i_max", "t_center_fs", "width_fs", "valid"]
    rows = []
    for n, m in zip(n_values, metrics):
        width = m.width if m.valid else float("nan")
        rows.append([float(n), m.i_max, m.t_center, width, 1.0 if m.valid else 0.0])
    return Table(columns=cols, data=np.asarray(rows))


def write_table_csv(path, table):
    lines = [",".join(table.columns)]
    for row in table.data:
        cells = [TIME_FORMAT % row[0]]
        cells += [VALUE_FORMAT % v for v in row[1:]]
        lines.append(",".join(cells))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def report_schema():
    ref = importlib.resources.files("nanoemit") / "schemas" / "run_report.schema.json"
    return json.loads(ref.read_text(encoding="utf-8"))


def validate_report(report):
    jsonschema.validate(instance=report, schema=report_schema())


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj)}")


def sanitize_json(obj):
    """Round-trip through the JSON encoder to plain python types."""
    return json.loads(json.dumps(obj, default=_json_default))


def write_outputs(outcome, out_dir):
    """Write every table listed in the report plus the report itself.

    Returns the list of written paths.  The report's outputs entries name
    the files; their existence is the caller's contract.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    report = outcome.report
    for entry in report["outputs"]:
        path = out / entry["filename"]
        if entry["kind"] == "report":
            path.write_text(
                json.dumps(report, indent=2, sort_keys=True, default=_json_default) + "\n",
                encoding="utf-8",
            )
        else:
            write_table_csv(path, outcome.tables[entry["name"]])
        written.append(path)
    return written
