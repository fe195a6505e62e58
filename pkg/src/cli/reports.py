"""CSV and text artifacts written by the commands."""
from pathlib import Path
from typing import Iterable, List, Sequence, Tuple

import numpy as np
import pandas as pd

from geometry.calculus import ResidualReport
from utils.logger import get_logger

log = get_logger("Reports")

FLOAT_FORMAT = "%.12e"
BUNDLE_ORDER = ("verify", "orbit", "linearize", "darboux")
BUNDLE_NAME = "report.txt"


def point_columns(dim: int) -> List[str]:
    return [f"z{i + 1}" for i in range(dim)]


def check_frame(reports: Iterable[ResidualReport], dim: int) -> pd.DataFrame:
    """verify schema: check, z1..z2n, value, threshold, pass."""
    rows = [row for report in reports for row in report.rows()]
    return pd.DataFrame(rows, columns=["check", *point_columns(dim), "value", "threshold", "pass"])


def lattice_frame(rows: List[dict], n: int) -> pd.DataFrame:
    """orbit schema: generator_index, t_1..t_n, return_residual."""
    columns = ["generator_index", *[f"t_{k + 1}" for k in range(n)], "return_residual"]
    return pd.DataFrame(rows, columns=columns)


def residual_frame(blocks: Sequence[Tuple[str, np.ndarray, np.ndarray]], dim: int) -> pd.DataFrame:
    """
    linearize/darboux schema: z1..z2n, residual_kind, value.

    Each block is (kind, original points, values) with one value per point.
    """
    frames = []
    for kind, points, values in blocks:
        frame = pd.DataFrame(np.atleast_2d(points), columns=point_columns(dim))
        frame["residual_kind"] = kind
        frame["value"] = np.asarray(values, dtype=float)
        frames.append(frame)
    if not frames:
        return pd.DataFrame(columns=[*point_columns(dim), "residual_kind", "value"])
    return pd.concat(frames, ignore_index=True)


def write_csv(frame: pd.DataFrame, path: Path) -> Path:
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    log.info(f"✅ Wrote {len(frame)} row(s) to {path}")
    return path


def write_text(lines: Sequence[str], path: Path) -> Path:
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


def report_lines(command: str, system: str, reports: Sequence[ResidualReport],
                 notes: Sequence[str] = ()) -> List[str]:
    passed = all(r.passed for r in reports)
    lines = [f"command: {command}", f"system: {system}", f"status: {'PASS' if passed else 'FAIL'}", ""]
    lines.extend(r.summary() for r in reports)
    if notes:
        lines.append("")
        lines.extend(notes)
    return lines


def bundle_reports(out_dir: Path) -> Path:
    """Concatenate every `<command>_report.txt` and `<command>.csv` in `out_dir` into report.txt."""
    parts: List[str] = []
    for command in BUNDLE_ORDER:
        text, csv = out_dir / f"{command}_report.txt", out_dir / f"{command}.csv"
        if not text.exists() and not csv.exists():
            continue
        parts.append(f"==== {command} ====")
        if text.exists():
            parts.append(text.read_text(encoding="utf-8").rstrip("\n"))
        if csv.exists():
            parts.append(f"---- {csv.name} ----")
            parts.append(csv.read_text(encoding="utf-8").rstrip("\n"))
        parts.append("")
    if not parts:
        parts = ["no command outputs found", ""]
    target = out_dir / BUNDLE_NAME
    target.write_text("\n".join(parts), encoding="utf-8")
    log.info(f"✅ Bundled reports into {target}")
    return target
