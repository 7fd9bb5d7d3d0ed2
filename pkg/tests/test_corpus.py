from __future__ import annotations

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_question, make_video
from vidqg.corpus import (
    Corpus,
    FilterPolicy,
    SplitAssignment,
    corpus_from_dict,
    corpus_stats,
    filter_questions,
    format_duration,
    load_corpus,
    split_corpus,
)
from vidqg.errors import BadRatiosError, DuplicateIdError, MalformedInputError


def test_load_fixture(fixture_corpus):
    assert len(fixture_corpus.videos) == 2
    assert sum(len(v.questions) for v in fixture_corpus.videos) == 3
    assert fixture_corpus.videos[0].source == "teded"
    mc = fixture_corpus.videos[0].questions[1]
    assert mc.qtype == "multiple_choice"
    assert mc.options == ("The moon", "The sun", "Jupiter")


def _video_doc(video_id="v1", **overrides):
    doc = {
        "id": video_id,
        "source": "khan",
        "domain": None,
        "duration_seconds": 10,
        "transcript": "Something.",
        "media_ref": None,
        "questions": [],
    }
    doc.update(overrides)
    return doc


def test_duplicate_id():
    doc = {"videos": [_video_doc("v1"), _video_doc("v1")], "provenance": {}}
    with pytest.raises(DuplicateIdError):
        corpus_from_dict(doc)


@pytest.mark.parametrize(
    "mutate, pointer",
    [
        (lambda v: v.pop("id"), "/videos/0/id"),
        (lambda v: v.update(source="youtube"), "/videos/0/source"),
        (lambda v: v.update(duration_seconds=-1), "/videos/0/duration_seconds"),
        (lambda v: v.update(duration_seconds="long"), "/videos/0/duration_seconds"),
        (lambda v: v.update(transcript=7), "/videos/0/transcript"),
        (
            lambda v: v.update(questions=[{"text": "x?", "qtype": "cloze", "useful": True}]),
            "/videos/0/questions/0/qtype",
        ),
        (
            lambda v: v.update(
                questions=[{"text": "x?", "qtype": "multiple_choice", "useful": True, "options": ["one"]}]
            ),
            "/videos/0/questions/0/options",
        ),
        (
            lambda v: v.update(
                questions=[{"text": "x?", "qtype": "open", "useful": True, "options": ["a", "b"]}]
            ),
            "/videos/0/questions/0/options",
        ),
        (
            lambda v: v.update(questions=[{"text": "x?", "qtype": "open", "useful": "yes"}]),
            "/videos/0/questions/0/useful",
        ),
    ],
)
def test_malformed_inputs_carry_pointer(mutate, pointer):
    video = _video_doc()
    mutate(video)
    with pytest.raises(MalformedInputError) as exc:
        corpus_from_dict({"videos": [video], "provenance": {}})
    assert exc.value.pointer == pointer


def test_load_rejects_non_json(tmp_path):
    path = tmp_path / "corpus.json"
    path.write_text("{not json", encoding="utf-8")
    with pytest.raises(MalformedInputError):
        load_corpus(path)


def test_degenerate_transcripts_flagged():
    doc = {"videos": [_video_doc("v1", transcript="  ")], "provenance": {}}
    corpus = corpus_from_dict(doc)
    assert corpus.provenance["degenerate_transcripts"] == ["v1"]


# ---------------------------------------------------------------------------
# Filtering
# ---------------------------------------------------------------------------


def test_filter_drops_cloze():
    corpus = Corpus(videos=(make_video(questions=[make_question("Gravity is ___.")]),))
    out = filter_questions(corpus, FilterPolicy())
    assert out.videos[0].questions == ()


def test_filter_drops_indirect_questions():
    corpus = Corpus(videos=(make_video(questions=[make_question("Explain gravity")]),))
    out = filter_questions(corpus, FilterPolicy())
    assert out.videos[0].questions == ()


def test_filter_ten_question_fixture():
    # 4 not useful, then 6 useful of which 1 cloze and 1 indirect: 4 remain
    questions = [make_question(f"Useless {i}?", useful=False) for i in range(4)]
    questions += [
        make_question("The answer is ___?"),
        make_question("Explain the water cycle"),
        make_question("What is rain?"),
        make_question("Why do clouds form?"),
        make_question("Where does fog appear?"),
        make_question("How does snow fall?"),
    ]
    corpus = Corpus(videos=(make_video(questions=questions),))
    out = filter_questions(corpus, FilterPolicy())
    kept = out.videos[0].questions
    assert len(kept) == 4
    assert [q.text for q in kept] == [
        "What is rain?",
        "Why do clouds form?",
        "Where does fog appear?",
        "How does snow fall?",
    ]


def test_filter_is_idempotent():
    questions = [
        make_question("What is rain?"),
        make_question("no mark", useful=True),
        make_question("Cloze ___?", useful=True),
        make_question("Skip me?", useful=False),
    ]
    corpus = Corpus(videos=(make_video(questions=questions),))
    policy = FilterPolicy()
    once = filter_questions(corpus, policy)
    twice = filter_questions(once, policy)
    assert once == twice


def test_filter_keeps_empty_videos_and_flags_them():
    corpus = Corpus(
        videos=(
            make_video("v1", questions=[make_question("Keep me?")]),
            make_video("v2", questions=[make_question("gone", useful=False)]),
        )
    )
    out = filter_questions(corpus, FilterPolicy())
    assert [v.id for v in out.videos] == ["v1", "v2"]
    assert out.provenance["videos_without_questions"] == ["v2"]


def test_filter_policy_requires_markers():
    with pytest.raises(ValueError):
        FilterPolicy(cloze_markers=())


# ---------------------------------------------------------------------------
# Splitting
# ---------------------------------------------------------------------------


def _corpus_of(n: int) -> Corpus:
    return Corpus(videos=tuple(make_video(f"v{i:03d}") for i in range(n)))


def test_split_exact_proportions():
    split = split_corpus(_corpus_of(10), (0.8, 0.1, 0.1), seed=7)
    assert (len(split.train), len(split.val), len(split.test)) == (8, 1, 1)


def test_split_floor_remainder():
    # floor(5.6) = 5, floor(0.7) = 0, remainder 2
    split = split_corpus(_corpus_of(7), (0.8, 0.1, 0.1), seed=7)
    assert (len(split.train), len(split.val), len(split.test)) == (5, 0, 2)


def test_split_deterministic():
    corpus = _corpus_of(23)
    a = split_corpus(corpus, (0.8, 0.1, 0.1), seed=1234)
    b = split_corpus(corpus, (0.8, 0.1, 0.1), seed=1234)
    assert a == b
    assert a.to_json() == b.to_json()


def test_split_bad_ratios():
    with pytest.raises(BadRatiosError):
        split_corpus(_corpus_of(4), (0.5, 0.4, 0.2), seed=1)
    with pytest.raises(BadRatiosError):
        split_corpus(_corpus_of(4), (-0.1, 1.0, 0.1), seed=1)


@settings(max_examples=60, deadline=None)
@given(n=st.integers(0, 80), seed=st.integers(0, 2**64 - 1))
def test_split_partitions(n, seed):
    corpus = _corpus_of(n)
    split = split_corpus(corpus, (0.8, 0.1, 0.1), seed)
    parts = [set(split.train), set(split.val), set(split.test)]
    assert parts[0] | parts[1] | parts[2] == set(corpus.video_ids())
    assert len(split.train) + len(split.val) + len(split.test) == n
    assert not (parts[0] & parts[1] or parts[0] & parts[2] or parts[1] & parts[2])


@settings(max_examples=30, deadline=None)
@given(n=st.integers(0, 60), s1=st.integers(0, 2**32), s2=st.integers(0, 2**32))
def test_split_sizes_ignore_seed(n, s1, s2):
    corpus = _corpus_of(n)
    a = split_corpus(corpus, (0.8, 0.1, 0.1), s1)
    b = split_corpus(corpus, (0.8, 0.1, 0.1), s2)
    assert (len(a.train), len(a.val), len(a.test)) == (len(b.train), len(b.val), len(b.test))


def test_split_json_round_trip():
    split = split_corpus(_corpus_of(9), (0.8, 0.1, 0.1), seed=42)
    text = split.to_json()
    again = SplitAssignment.from_json(text)
    assert again == split
    doc = json.loads(text)
    assert list(doc) == ["seed", "ratios", "train", "val", "test"]


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------


def test_stats_empty_corpus():
    stats = corpus_stats(Corpus(videos=()))
    assert stats.total.videos == 0
    assert stats.total.questions == 0
    assert stats.total.avg_questions == 0.0
    assert stats.total.avg_duration == 0.0
    assert stats.by_source == {}


def test_stats_average_questions():
    corpus = Corpus(
        videos=(
            make_video("a", questions=[make_question(f"q{i}?") for i in range(3)]),
            make_video("b", questions=[make_question(f"q{i}?") for i in range(5)]),
        )
    )
    stats = corpus_stats(corpus)
    assert stats.total.avg_questions == 4.0
    assert stats.total.questions == 8


def test_stats_totals_match_sum(fixture_corpus):
    stats = corpus_stats(fixture_corpus)
    assert stats.total.questions == sum(len(v.questions) for v in fixture_corpus.videos)
    assert stats.total.videos == len(fixture_corpus.videos)
    assert set(stats.by_source) == {"teded", "khan"}
    assert stats.by_source["teded"].questions == 2


def test_format_duration():
    assert format_duration(23) == "0:00:23"
    assert format_duration(362) == "0:06:02"
    assert format_duration(4347) == "1:12:27"
    assert format_duration(0) == "0:00:00"
