"""Machine-readable and tabular renderings of evaluation reports."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

from .io import SCHEMA_VERSION, dumps, read_json
from .pipeline import EvalReport

ROLE_COLUMNS = ("Acc", "F1", "C", "+C", "-C")
SUMMARY_COLUMNS = ("Avg Acc", "Avg Acc (weighted)", "Avg F1", "Satisfaction", "Set Correctness")


def _fmt(value, digits: int = 2) -> str:
    if value is None:
        return "-"
    if isinstance(value, int):
        return str(value)
    return f"{value:.{digits}f}"


def report_doc(reports: Sequence[EvalReport]) -> dict:
    return {"schema_version": SCHEMA_VERSION, "runs": [r.to_dict() for r in reports]}


def load_report(path: str | Path) -> list[EvalReport]:
    doc = read_json(path, "report")
    return [EvalReport.from_dict(d) for d in doc["runs"]]


def table_rows(reports: Sequence[EvalReport]) -> tuple[list[str], list[list[str]]]:
    roles = sorted({role for r in reports for role in r.roles})
    header = ["Method"]
    for role in roles:
        header += [f"{role} {col}" for col in ROLE_COLUMNS]
    header += list(SUMMARY_COLUMNS)
    rows = []
    for r in reports:
        row = [r.method]
        for role in roles:
            rr = r.roles.get(role)
            if rr is None:
                row += ["-"] * len(ROLE_COLUMNS)
                continue
            baseline = r.method == "baseline"
            row += [
                _fmt(rr.accuracy),
                _fmt(rr.macro_f1),
                "-" if baseline else _fmt(rr.changes),
                "-" if baseline else _fmt(rr.plus_pct),
                "-" if baseline else _fmt(rr.minus_pct),
            ]
        row += [
            _fmt(r.average_accuracy),
            _fmt(r.weighted_accuracy),
            _fmt(r.average_f1),
            _fmt(r.satisfaction),
            _fmt(r.set_correctness),
        ]
        rows.append(row)
    return header, rows


def render_table(reports: Sequence[EvalReport]) -> str:
    header, rows = table_rows(reports)
    widths = [max(len(c), *(len(r[i]) for r in rows)) if rows else len(c) for i, c in enumerate(header)]
    line = "+".join("-" * (w + 2) for w in widths)
    out = [" | ".join(c.ljust(w) for c, w in zip(header, widths)), line]
    for r in rows:
        out.append(" | ".join(c.rjust(w) if i else c.ljust(w) for i, (c, w) in enumerate(zip(r, widths))))
    failed = [(r.method, r.failed) for r in reports if r.failed]
    for method, ids in failed:
        out.append(f"{method}: {len(ids)} instance(s) fell back to baseline: {', '.join(ids)}")
    return "\n".join(out) + "\n"


def render_tsv(reports: Sequence[EvalReport]) -> str:
    header, rows = table_rows(reports)
    return "\n".join("\t".join(r) for r in [header, *rows]) + "\n"


def emit_report(reports: EvalReport | Sequence[EvalReport], out_dir: str | Path) -> dict[str, Path]:
    """Write ``report.json``, ``table.txt`` and ``table.tsv`` into ``out_dir``."""
    if isinstance(reports, EvalReport):
        reports = [reports]
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        paths = {
            "json": out / "report.json",
            "table": out / "table.txt",
            "tsv": out / "table.tsv",
        }
        paths["json"].write_text(dumps(report_doc(reports)), encoding="utf-8")
        paths["table"].write_text(render_table(reports), encoding="utf-8")
        paths["tsv"].write_text(render_tsv(reports), encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write report to {out}: {exc}") from exc
    return paths
