"""Aggregation of generation records and score rows into report tables,
plus deterministic CSV / JSON / Markdown rendering.

Tables mirror the analysis views: per-model/mode output-class percentages
with metric means (summary), question-word distributions (qwords), length
and readability statistics (length), and the manual-rating aggregation
(qual). Distribution rows sum to 100 within rounding; every render is
byte-deterministic with '.' as the decimal separator.
"""

from __future__ import annotations

import dataclasses
import json
from collections import Counter, defaultdict
from dataclasses import dataclass
from statistics import fmean
from typing import Iterable, Sequence

from . import textproc
from .errors import DanglingScoreError, EmptyTableError, EmptyTextError
from .metrics import ScoreRow

AVG_MODE_LABEL = "Avg."


@dataclass(frozen=True)
class SummaryRow:
    model: str
    mode: str  # "1" | "2" | "3" | "Avg."
    pct_question: float
    pct_statement: float
    pct_empty: float
    rouge: float | None
    semantic: float | None
    icd: float | None


@dataclass(frozen=True)
class QuestionWordRow:
    model: str
    where: float
    who: float
    when: float
    what: float
    why: float
    whose: float
    whom: float
    which: float
    how: float
    none: float


@dataclass(frozen=True)
class LengthFleschRow:
    model: str
    min_tokens: int
    avg_tokens: float
    max_tokens: int
    flesch: float | None


def _mean_or_none(values: Sequence[float]) -> float | None:
    return fmean(values) if values else None


def summarize_run(records, scores: Iterable[ScoreRow]) -> list[SummaryRow]:
    """Per (model, mode) class percentages and metric means, plus one
    "Avg." row per model averaging its mode rows.

    Class percentages are over all records; metric means are over the
    scorable records only (the icd mean additionally skips nulls). Score
    rows that do not correspond to any record raise DanglingScoreError.
    """
    records = list(records)
    scores = list(scores)
    record_keys = {(r.video_id, r.model, r.mode, r.iteration) for r in records}
    for s in scores:
        if (s.video_id, s.model, s.mode, s.iteration) not in record_keys:
            raise DanglingScoreError(
                f"score row without record: {s.video_id}/{s.model}/m{s.mode}/i{s.iteration}"
            )

    class_counts: dict[tuple[str, int], Counter] = defaultdict(Counter)
    for r in records:
        class_counts[(r.model, r.mode)][r.output_class] += 1
    score_groups: dict[tuple[str, int], list[ScoreRow]] = defaultdict(list)
    for s in scores:
        score_groups[(s.model, s.mode)].append(s)

    rows: list[SummaryRow] = []
    models = sorted({model for model, _ in class_counts})
    for model in models:
        modes = sorted(mode for m, mode in class_counts if m == model)
        mode_rows: list[SummaryRow] = []
        for mode in modes:
            counts = class_counts[(model, mode)]
            total = sum(counts.values())
            group = score_groups.get((model, mode), [])
            icd_values = [s.icd for s in group if s.icd is not None]
            mode_rows.append(
                SummaryRow(
                    model=model,
                    mode=str(mode),
                    pct_question=100.0 * counts["question"] / total,
                    pct_statement=100.0 * counts["statement"] / total,
                    pct_empty=100.0 * counts["empty"] / total,
                    rouge=_mean_or_none([s.rouge_l for s in group]),
                    semantic=_mean_or_none([s.semantic_f1 for s in group]),
                    icd=_mean_or_none(icd_values),
                )
            )
        rows.extend(mode_rows)
        rows.append(
            SummaryRow(
                model=model,
                mode=AVG_MODE_LABEL,
                pct_question=fmean(r.pct_question for r in mode_rows),
                pct_statement=fmean(r.pct_statement for r in mode_rows),
                pct_empty=fmean(r.pct_empty for r in mode_rows),
                rouge=_mean_or_none([r.rouge for r in mode_rows if r.rouge is not None]),
                semantic=_mean_or_none(
                    [r.semantic for r in mode_rows if r.semantic is not None]
                ),
                icd=_mean_or_none([r.icd for r in mode_rows if r.icd is not None]),
            )
        )
    return rows


def question_word_table(records) -> list[QuestionWordRow]:
    """First-question-word distribution per model, over question-class
    records only (all modes pooled)."""
    by_model: dict[str, Counter] = defaultdict(Counter)
    for r in records:
        if r.output_class != textproc.OutputClass.QUESTION.value:
            continue
        by_model[r.model][textproc.question_word(r.raw_output)] += 1
    rows = []
    for model in sorted(by_model):
        counts = by_model[model]
        total = sum(counts.values())
        pct = {
            qw: 100.0 * counts[qw] / total for qw in textproc.QuestionWord
        }
        rows.append(
            QuestionWordRow(
                model=model,
                where=pct[textproc.QuestionWord.WHERE],
                who=pct[textproc.QuestionWord.WHO],
                when=pct[textproc.QuestionWord.WHEN],
                what=pct[textproc.QuestionWord.WHAT],
                why=pct[textproc.QuestionWord.WHY],
                whose=pct[textproc.QuestionWord.WHOSE],
                whom=pct[textproc.QuestionWord.WHOM],
                which=pct[textproc.QuestionWord.WHICH],
                how=pct[textproc.QuestionWord.HOW],
                none=pct[textproc.QuestionWord.NONE],
            )
        )
    return rows


def length_flesch_table(records) -> list[LengthFleschRow]:
    """Output length (whitespace tokens of the raw output) and mean Flesch
    per model, over question-class records; outputs with no word tokens are
    excluded from the Flesch mean but still counted for length."""
    by_model: dict[str, list] = defaultdict(list)
    for r in records:
        if r.output_class == textproc.OutputClass.QUESTION.value:
            by_model[r.model].append(r.raw_output)
    rows = []
    for model in sorted(by_model):
        outputs = by_model[model]
        lengths = [len(out.split()) for out in outputs]
        flesch_values = []
        for out in outputs:
            try:
                flesch_values.append(textproc.flesch(out).flesch)
            except EmptyTextError:
                continue
        rows.append(
            LengthFleschRow(
                model=model,
                min_tokens=min(lengths),
                avg_tokens=fmean(lengths),
                max_tokens=max(lengths),
                flesch=_mean_or_none(flesch_values),
            )
        )
    return rows


# ---------------------------------------------------------------------------
# Rendering
# ---------------------------------------------------------------------------

FORMATS = ("csv", "json", "md")


def _format_cell(value, fmt: str):
    if value is None:
        return None if fmt == "json" else ""
    if isinstance(value, bool):
        return value if fmt == "json" else str(value).lower()
    if isinstance(value, float):
        return round(value, 2) if fmt == "json" else f"{value:.2f}"
    if isinstance(value, int):
        return value if fmt == "json" else str(value)
    return str(value) if fmt != "json" else value


def render(rows: Sequence, fmt: str, row_type: type | None = None) -> str:
    """Render a table of dataclass rows; columns follow field declaration
    order, floats print with two decimals.

    ``row_type`` allows header-only CSV/Markdown for empty tables; without
    it an empty table cannot be rendered to those formats (EmptyTableError).
    JSON of an empty table is always "[]".
    """
    rows = list(rows)
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}")
    if row_type is None:
        if not rows:
            if fmt == "json":
                return "[]\n"
            raise EmptyTableError("cannot infer columns from an empty table")
        row_type = type(rows[0])
    columns = [f.name for f in dataclasses.fields(row_type)]

    if fmt == "json":
        docs = [
            {col: _format_cell(getattr(row, col), "json") for col in columns}
            for row in rows
        ]
        return json.dumps(docs, indent=2) + "\n"

    grid = [
        [_format_cell(getattr(row, col), fmt) for col in columns] for row in rows
    ]
    if fmt == "csv":
        lines = [",".join(columns)]
        lines.extend(",".join(cells) for cells in grid)
        return "\n".join(lines) + "\n"

    widths = [
        max(len(col), *(len(cells[i]) for cells in grid)) if grid else len(col)
        for i, col in enumerate(columns)
    ]
    header = "| " + " | ".join(col.ljust(w) for col, w in zip(columns, widths)) + " |"
    sep = "|" + "|".join("-" * (w + 2) for w in widths) + "|"
    lines = [header, sep]
    for cells in grid:
        lines.append(
            "| " + " | ".join(c.ljust(w) for c, w in zip(cells, widths)) + " |"
        )
    return "\n".join(lines) + "\n"
