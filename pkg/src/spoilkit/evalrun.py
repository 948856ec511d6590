"""Join model predictions with references, score them, and render reports.

A prediction file is JSONL of {id, prediction} (the template emitted by
the dataset exporter, filled in by an external model runner).  Every
reference id must be predicted; empty predictions are legal and score zero
rather than aborting the run — extractive baselines sometimes answer with
nothing.  Per-example ROUGE-1/2/L and semantic scores are macro-averaged
into one row per model, mirroring the usual P/R/F evaluation table.

Reports are stored with raw [0, 1] scores and rendered with scores x100 at
two decimals.  The semantic column needs an embedding provider; without
one it renders "n/a" and the ROUGE columns still come out.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

from .jsonio import dumps_line, read_jsonl, write_jsonl
from .metrics import (
    EmbeddingProvider,
    MetricTriple,
    aggregate,
    rouge_l,
    rouge_n,
    semantic_score,
    tokenize,
)

__all__ = [
    "PredictionSet",
    "EvalRow",
    "EvalReport",
    "load_predictions",
    "evaluate",
    "render_report",
    "write_report",
    "read_report",
]

REPORT_FORMATS = ("text_table", "csv", "jsonl")
METRIC_COLUMNS = ("rouge1", "rouge2", "rougeL", "semantic")


@dataclass(frozen=True)
class PredictionSet:
    model_name: str
    predictions: dict[str, str]


@dataclass(frozen=True)
class EvalRow:
    model_name: str
    rouge1: MetricTriple
    rouge2: MetricTriple
    rougeL: MetricTriple
    semantic: MetricTriple | None


@dataclass(frozen=True)
class EvalReport:
    rows: tuple[EvalRow, ...]
    split_id: str
    example_count: int


def load_predictions(path: str | Path, model_name: str | None = None) -> PredictionSet:
    """Load a predictions JSONL file; duplicate ids are an error."""
    path = Path(path)
    predictions: dict[str, str] = {}
    for line_no, record in read_jsonl(path):
        pid = str(record["id"])
        if pid in predictions:
            raise ValueError(f"{path}: duplicate prediction id {pid!r} on line {line_no}")
        predictions[pid] = str(record.get("prediction", ""))
    return PredictionSet(
        model_name=model_name or path.stem, predictions=predictions
    )


def evaluate(
    predictions: PredictionSet,
    references: Mapping[str, str],
    provider: EmbeddingProvider | None = None,
) -> EvalRow:
    """Score one model against reference answers; macro-average per metric.

    references maps example id -> reference answer (the labeled test
    part).  Every reference id must appear in the predictions.  An empty
    (or token-free) prediction scores (0, 0, 0) on every metric for that
    example.
    """
    if not references:
        raise ValueError("evaluate requires at least one reference")
    missing = [i for i in references if i not in predictions.predictions]
    if missing:
        raise ValueError(
            f"predictions for model {predictions.model_name!r} missing ids: {missing[:5]}"
        )

    per_metric: dict[str, list[MetricTriple]] = {m: [] for m in METRIC_COLUMNS}
    for example_id, reference_text in references.items():
        candidate = tokenize(predictions.predictions[example_id])
        reference = tokenize(reference_text)
        if len(candidate) == 0 or len(reference) == 0:
            for m in METRIC_COLUMNS:
                per_metric[m].append(MetricTriple.zero())
            continue
        per_metric["rouge1"].append(rouge_n(candidate, reference, 1))
        per_metric["rouge2"].append(rouge_n(candidate, reference, 2))
        per_metric["rougeL"].append(rouge_l(candidate, reference))
        if provider is not None:
            per_metric["semantic"].append(semantic_score(candidate, reference, provider))
        else:
            per_metric["semantic"].append(MetricTriple.zero())

    return EvalRow(
        model_name=predictions.model_name,
        rouge1=aggregate(per_metric["rouge1"]),
        rouge2=aggregate(per_metric["rouge2"]),
        rougeL=aggregate(per_metric["rougeL"]),
        semantic=aggregate(per_metric["semantic"]) if provider is not None else None,
    )


def _fmt(value: float) -> str:
    return f"{value * 100:.2f}"


def _row_cells(row: EvalRow) -> list[str]:
    cells = []
    for triple in (row.rouge1, row.rouge2, row.rougeL):
        cells.extend([_fmt(triple.precision), _fmt(triple.recall), _fmt(triple.f1)])
    if row.semantic is None:
        cells.extend(["n/a", "n/a", "n/a"])
    else:
        cells.extend(
            [_fmt(row.semantic.precision), _fmt(row.semantic.recall), _fmt(row.semantic.f1)]
        )
    return cells


_HEADER = [
    "model",
    "rouge1_p", "rouge1_r", "rouge1_f",
    "rouge2_p", "rouge2_r", "rouge2_f",
    "rougeL_p", "rougeL_r", "rougeL_f",
    "semantic_p", "semantic_r", "semantic_f",
]


def render_report(report: EvalReport, format: str = "text_table") -> str:
    """Render the report with scores x100 at two decimals.

    Column order mirrors the usual evaluation table: ROUGE-1, ROUGE-2,
    ROUGE-L, semantic, each as P, R, F — twelve score columns per row.
    """
    if format not in REPORT_FORMATS:
        raise ValueError(f"unknown report format {format!r}, expected {REPORT_FORMATS}")
    table = [[row.model_name] + _row_cells(row) for row in report.rows]

    if format == "csv":
        lines = [",".join(_HEADER)]
        lines.extend(",".join(cells) for cells in table)
        return "\n".join(lines) + "\n"

    if format == "jsonl":
        lines = []
        for cells in table:
            record = {"model": cells[0]}
            for name, cell in zip(_HEADER[1:], cells[1:]):
                record[name] = cell if cell == "n/a" else float(cell)
            lines.append(dumps_line(record))
        return "\n".join(lines) + "\n"

    widths = [
        max(len(_HEADER[col]), max((len(cells[col]) for cells in table), default=0))
        for col in range(len(_HEADER))
    ]
    lines = [
        f"split={report.split_id}  examples={report.example_count}",
        "  ".join(h.ljust(w) for h, w in zip(_HEADER, widths)),
    ]
    for cells in table:
        lines.append(
            "  ".join(
                cells[0].ljust(widths[0]) if col == 0 else cells[col].rjust(widths[col])
                for col in range(len(cells))
            )
        )
    return "\n".join(lines) + "\n"


def _triple_or_none(d: dict | None) -> MetricTriple | None:
    return None if d is None else MetricTriple.from_dict(d)


def write_report(path: str | Path, report: EvalReport) -> Path:
    """Store the report losslessly: header line, then one row line per model."""
    records: list[dict] = [
        {"split_id": report.split_id, "example_count": report.example_count}
    ]
    for row in report.rows:
        records.append(
            {
                "model_name": row.model_name,
                "rouge1": row.rouge1.as_dict(),
                "rouge2": row.rouge2.as_dict(),
                "rougeL": row.rougeL.as_dict(),
                "semantic": None if row.semantic is None else row.semantic.as_dict(),
            }
        )
    return write_jsonl(path, records)


def read_report(path: str | Path) -> EvalReport:
    records = [record for _, record in read_jsonl(path)]
    if not records or "split_id" not in records[0]:
        raise ValueError(f"{path}: not a stored eval report (missing header line)")
    header, rows = records[0], records[1:]
    return EvalReport(
        rows=tuple(
            EvalRow(
                model_name=str(r["model_name"]),
                rouge1=MetricTriple.from_dict(r["rouge1"]),
                rouge2=MetricTriple.from_dict(r["rouge2"]),
                rougeL=MetricTriple.from_dict(r["rougeL"]),
                semantic=_triple_or_none(r.get("semantic")),
            )
            for r in rows
        ),
        split_id=str(header["split_id"]),
        example_count=int(header["example_count"]),
    )
