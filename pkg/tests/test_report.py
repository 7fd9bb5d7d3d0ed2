from __future__ import annotations

import json

import pytest

from conftest import make_record
from vidqg.errors import DanglingScoreError, EmptyTableError
from vidqg.metrics import ScoreRow
from vidqg.report import (
    LengthFleschRow,
    QuestionWordRow,
    SummaryRow,
    length_flesch_table,
    question_word_table,
    render,
    summarize_run,
)


def _score(record, rouge=0.5, semantic=0.4, icd=0.1):
    return ScoreRow(
        video_id=record.video_id,
        model=record.model,
        mode=record.mode,
        iteration=record.iteration,
        output_class=record.output_class,
        rouge_l=rouge,
        semantic_f1=semantic,
        icd=icd,
    )


# ---------------------------------------------------------------------------
# summarize_run
# ---------------------------------------------------------------------------


def test_summary_class_percentages():
    records = [
        make_record(iteration=1, raw_output="Q1?"),
        make_record(iteration=2, raw_output="Q2?"),
        make_record(iteration=3, raw_output="Q3?"),
        make_record(iteration=4, raw_output=""),
    ]
    rows = summarize_run(records, [])
    mode_row = rows[0]
    assert (mode_row.pct_question, mode_row.pct_statement, mode_row.pct_empty) == (
        75.0,
        0.0,
        25.0,
    )
    assert mode_row.rouge is None


def test_summary_avg_row_is_mean_of_modes():
    records = []
    scores = []
    for mode, rouge in ((1, 0.1), (2, 0.2), (3, 0.3)):
        rec = make_record(mode=mode, raw_output=f"Q{mode}?")
        records.append(rec)
        scores.append(_score(rec, rouge=rouge, semantic=rouge, icd=rouge))
    rows = summarize_run(records, scores)
    avg = [r for r in rows if r.mode == "Avg."][0]
    assert avg.rouge == pytest.approx(0.2, abs=1e-9)
    assert avg.semantic == pytest.approx(0.2, abs=1e-9)
    assert avg.icd == pytest.approx(0.2, abs=1e-9)
    assert avg.pct_question == pytest.approx(100.0, abs=1e-9)


def test_summary_icd_mean_skips_nulls():
    r1 = make_record(iteration=1, raw_output="Q1?")
    r2 = make_record(iteration=2, raw_output="Q2?")
    rows = summarize_run([r1, r2], [_score(r1, icd=0.4), _score(r2, icd=None)])
    assert rows[0].icd == pytest.approx(0.4)


def test_summary_dangling_score():
    record = make_record(raw_output="Q?")
    stray = _score(make_record(video_id="ghost", raw_output="Q?"))
    with pytest.raises(DanglingScoreError):
        summarize_run([record], [stray])


def test_summary_percentages_sum_to_100():
    records = [
        make_record(iteration=i, raw_output=out)
        for i, out in enumerate(["Q?", "Statement.", "", "Q2?", "Also a statement."], 1)
    ]
    rows = summarize_run(records, [])
    for row in rows:
        assert row.pct_question + row.pct_statement + row.pct_empty == pytest.approx(
            100.0, abs=0.01
        )


def test_summary_partial_aggregation_is_consistent():
    # concatenating two disjoint record sets must equal the size-weighted
    # combination of their partial summaries
    import random

    rng = random.Random(77)
    outputs = ["Q?", "S.", "", "Why not?"]
    all_records = [
        make_record(video_id=f"v{i}", mode=rng.choice([1, 2]), iteration=i, raw_output=rng.choice(outputs))
        for i in range(60)
    ]
    half_a, half_b = all_records[:25], all_records[25:]
    combined = {(r.model, r.mode): r for r in summarize_run(all_records, []) if r.mode != "Avg."}
    part_a = {(r.model, r.mode): r for r in summarize_run(half_a, []) if r.mode != "Avg."}
    part_b = {(r.model, r.mode): r for r in summarize_run(half_b, []) if r.mode != "Avg."}

    def count(records, mode):
        return sum(1 for r in records if r.mode == int(mode))

    for key, row in combined.items():
        _, mode = key
        na, nb = count(half_a, mode), count(half_b, mode)
        for field in ("pct_question", "pct_statement", "pct_empty"):
            va = getattr(part_a[key], field) if key in part_a else 0.0
            vb = getattr(part_b[key], field) if key in part_b else 0.0
            weighted = (na * va + nb * vb) / (na + nb)
            assert getattr(row, field) == pytest.approx(weighted, abs=1e-9)


# ---------------------------------------------------------------------------
# question_word_table / length_flesch_table
# ---------------------------------------------------------------------------


def test_question_words_all_what():
    records = [make_record(iteration=i, raw_output="What is this?") for i in (1, 2)]
    rows = question_word_table(records)
    assert rows[0].what == 100.0
    assert rows[0].none == 0.0


def test_question_words_empty_records():
    assert question_word_table([]) == []


def test_question_words_row_sums_100():
    outputs = [
        "What is it?", "How does it work?", "Why now?", "Is it true?",
        "Which one?", "Where is it?", "When did it start?", "Who did it?",
        "Whose idea?", "Explain it?",
    ]
    records = [make_record(iteration=i, raw_output=o) for i, o in enumerate(outputs, 1)]
    row = question_word_table(records)[0]
    total = sum(
        getattr(row, f)
        for f in ("where", "who", "when", "what", "why", "whose", "whom", "which", "how", "none")
    )
    assert total == pytest.approx(100.0, abs=0.01)


def test_question_words_exclude_statements():
    records = [
        make_record(iteration=1, raw_output="What is it?"),
        make_record(iteration=2, raw_output="What a statement this is."),
    ]
    rows = question_word_table(records)
    assert rows[0].what == 100.0


def test_length_single_output():
    records = [make_record(raw_output="one two three four five?")]
    row = length_flesch_table(records)[0]
    assert (row.min_tokens, row.avg_tokens, row.max_tokens) == (5, 5.0, 5)


def test_length_two_outputs():
    records = [
        make_record(iteration=1, raw_output="two words?"),
        make_record(iteration=2, raw_output="a much longer question with eight ws here?"),
    ]
    row = length_flesch_table(records)[0]
    assert (row.min_tokens, row.avg_tokens, row.max_tokens) == (2, 5.0, 8)


def test_length_excludes_empty_and_statements():
    records = [
        make_record(iteration=1, raw_output="three tokens here?"),
        make_record(iteration=2, raw_output=""),
        make_record(iteration=3, raw_output="this statement is not counted at all"),
    ]
    row = length_flesch_table(records)[0]
    assert (row.min_tokens, row.max_tokens) == (3, 3)


def test_length_flesch_skips_tokenless_outputs():
    records = [
        make_record(iteration=1, raw_output="???"),
        make_record(iteration=2, raw_output="What is water?"),
    ]
    row = length_flesch_table(records)[0]
    assert row.min_tokens == 1
    assert row.flesch is not None


# ---------------------------------------------------------------------------
# render
# ---------------------------------------------------------------------------


def _one_row():
    return SummaryRow(
        model="mock", mode="1", pct_question=100.0, pct_statement=0.0,
        pct_empty=0.0, rouge=0.5, semantic=None, icd=-0.25,
    )


def test_render_markdown_single_row():
    text = render([_one_row()], "md")
    lines = text.splitlines()
    assert lines[0].startswith("| model")
    assert lines[1].startswith("|-")
    assert "100.00" in lines[2] and "-0.25" in lines[2]
    assert len(lines) == 3


def test_render_deterministic():
    rows = [_one_row()]
    assert render(rows, "csv") == render(rows, "csv")
    assert render(rows, "json") == render(rows, "json")
    assert render(rows, "md") == render(rows, "md")


def test_render_csv_columns():
    row = QuestionWordRow(
        model="m", where=0, who=0, when=0, what=100.0, why=0,
        whose=0, whom=0, which=0, how=0, none=0,
    )
    text = render([row], "csv")
    header = text.splitlines()[0].split(",")
    assert len(header) == 11
    assert header[0] == "model" and header[-1] == "none"


def test_render_csv_none_is_blank():
    text = render([_one_row()], "csv")
    body = text.splitlines()[1]
    assert ",," in body  # the None semantic column renders empty


def test_render_json_values():
    docs = json.loads(render([_one_row()], "json"))
    assert docs[0]["semantic"] is None
    assert docs[0]["pct_question"] == 100.0
    assert docs[0]["icd"] == -0.25


def test_render_empty_table():
    with pytest.raises(EmptyTableError):
        render([], "csv")
    assert render([], "json") == "[]\n"
    header_only = render([], "csv", row_type=LengthFleschRow)
    assert header_only == "model,min_tokens,avg_tokens,max_tokens,flesch\n"


def test_render_unknown_format():
    with pytest.raises(ValueError):
        render([_one_row()], "yaml")
