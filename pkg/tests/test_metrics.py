import json
from pathlib import Path

import pytest
from hypothesis import given, settings, strategies as st

from speechaug.audio_io import UtteranceRecord
from speechaug.errors import (
    EmptyCorpusError,
    ManifestParseError,
    MissingHypothesisError,
)
from speechaug.metrics import (
    EditCounts,
    edit_distance,
    format_results_table,
    join_hypotheses,
    load_hypotheses,
    load_report_rate,
    report_json,
    score_corpus,
)


def naive_cost(ref, hyp):
    """Textbook exponential recursion; the independent distance oracle."""
    if not ref:
        return len(hyp)
    if not hyp:
        return len(ref)
    return min(
        naive_cost(ref[1:], hyp[1:]) + (ref[0] != hyp[0]),
        naive_cost(ref[1:], hyp) + 1,
        naive_cost(ref, hyp[1:]) + 1,
    )


def record(uid, tokens, kind="word"):
    return UtteranceRecord(uid, Path(f"{uid}.wav"), tuple(tokens), kind)


tokens_strategy = st.lists(st.sampled_from(["a", "b", "c"]), max_size=8).map(tuple)


class TestEditDistance:
    def test_identical(self):
        counts = edit_distance(["A", "B", "C"], ["A", "B", "C"])
        assert counts == EditCounts(0, 0, 0, 3, 3)
        assert counts.error_rate_percent == 0.0

    def test_single_substitution(self):
        counts = edit_distance(["A", "B", "C"], ["A", "X", "C"])
        assert (counts.substitutions, counts.deletions, counts.insertions) == (1, 0, 0)
        assert counts.error_rate_percent == pytest.approx(100 / 3)
        assert naive_cost(("A", "B", "C"), ("A", "X", "C")) == 1

    def test_empty_hypothesis_all_deletions(self):
        counts = edit_distance(["A", "B"], [])
        assert counts == EditCounts(0, 2, 0, 0, 2)
        assert counts.error_rate_percent == 100.0

    def test_empty_reference_all_insertions(self):
        counts = edit_distance([], ["A", "B", "C"])
        assert counts == EditCounts(0, 0, 3, 0, 0)

    def test_both_empty(self):
        counts = edit_distance([], [])
        assert counts == EditCounts(0, 0, 0, 0, 0)
        assert counts.error_rate_percent == 0.0

    def test_insertions_can_push_rate_past_100(self):
        counts = edit_distance(["A"], ["A", "B", "C"])
        assert counts.error_rate_percent == 200.0

    def test_tie_break_prefers_substitutions(self):
        # AB vs BA: two minimal alignments exist (sub+sub or del+ins);
        # the backtrace preference pins the sub+sub split
        counts = edit_distance(["A", "B"], ["B", "A"])
        assert counts.distance == 2
        assert (counts.substitutions, counts.deletions, counts.insertions) == (2, 0, 0)

    @settings(max_examples=300, deadline=None)
    @given(tokens_strategy, tokens_strategy)
    def test_matches_naive_recursion(self, ref, hyp):
        counts = edit_distance(ref, hyp)
        assert counts.distance == naive_cost(ref, hyp)

    @settings(max_examples=200, deadline=None)
    @given(tokens_strategy, tokens_strategy)
    def test_invariants(self, ref, hyp):
        counts = edit_distance(ref, hyp)
        assert counts.substitutions + counts.deletions + counts.hits == len(ref)
        assert counts.hits + counts.insertions + counts.substitutions == len(hyp)
        assert counts.distance >= abs(len(ref) - len(hyp))
        if counts.distance == 0:
            assert tuple(ref) == tuple(hyp)

    @settings(max_examples=200, deadline=None)
    @given(tokens_strategy, tokens_strategy)
    def test_symmetric_cost_with_swapped_roles(self, ref, hyp):
        forward = edit_distance(ref, hyp)
        backward = edit_distance(hyp, ref)
        assert forward.distance == backward.distance

    @settings(max_examples=100, deadline=None)
    @given(tokens_strategy, tokens_strategy, tokens_strategy)
    def test_triangle_inequality(self, a, b, c):
        ab = edit_distance(a, b).distance
        ac = edit_distance(a, c).distance
        cb = edit_distance(c, b).distance
        assert ab <= ac + cb


class TestScoreCorpus:
    def test_identical_pair_is_zero(self):
        report = score_corpus([(record("u1", ["A", "B"]), ("A", "B"))])
        assert report.error_rate_percent == 0.0

    def test_pooled_not_averaged(self):
        # 1 error over N=1 plus 0 errors over N=9 pools to 10%, not 50%
        pairs = [
            (record("u1", ["A"]), ("X",)),
            (record("u2", ["B"] * 9), tuple(["B"] * 9)),
        ]
        report = score_corpus(pairs)
        assert report.error_rate_percent == pytest.approx(10.0)
        assert report.corpus.ref_len == 10

    def test_corpus_counts_are_sums(self):
        pairs = [
            (record("u1", ["A", "B"]), ("A", "X")),
            (record("u2", ["C"]), ("C", "D")),
        ]
        report = score_corpus(pairs)
        total = EditCounts()
        for counts in report.per_utterance.values():
            total = total + counts
        assert report.corpus == total

    def test_empty_corpus(self):
        with pytest.raises(EmptyCorpusError):
            score_corpus([])

    def test_lowercase_flag(self):
        pairs = [(record("u1", ["HELLO"]), ("hello",))]
        assert score_corpus(pairs).error_rate_percent == 100.0
        assert score_corpus(pairs, lowercase=True).error_rate_percent == 0.0


class TestJoinHypotheses:
    def test_pairs_follow_manifest_order(self):
        records = [record("b", ["X"]), record("a", ["Y"])]
        pairs = join_hypotheses(records, {"a": ("Y",), "b": ("X",)})
        assert [r.id for r, _ in pairs] == ["b", "a"]

    def test_missing_hypothesis(self):
        with pytest.raises(MissingHypothesisError, match="u2"):
            join_hypotheses([record("u1", ["A"]), record("u2", ["B"])], {"u1": ("A",)})

    def test_unmatched_hypothesis_id(self):
        with pytest.raises(MissingHypothesisError, match="ghost"):
            join_hypotheses([record("u1", ["A"])], {"u1": ("A",), "ghost": ("B",)})


class TestHypothesisFile:
    def test_load(self, tmp_path):
        path = tmp_path / "hyp.jsonl"
        path.write_text('{"id":"u1","text":"A  B"}\n\n{"id":"u2","text":""}\n')
        hyps = load_hypotheses(path)
        assert hyps == {"u1": ("A", "B"), "u2": ()}

    def test_duplicate_id(self, tmp_path):
        path = tmp_path / "hyp.jsonl"
        path.write_text('{"id":"u1","text":"A"}\n{"id":"u1","text":"B"}\n')
        with pytest.raises(ManifestParseError):
            load_hypotheses(path)

    def test_missing_text(self, tmp_path):
        path = tmp_path / "hyp.jsonl"
        path.write_text('{"id":"u1"}\n')
        with pytest.raises(ManifestParseError):
            load_hypotheses(path)


class TestReportJson:
    def test_roundtrip_rate(self, tmp_path):
        report = score_corpus([(record("u1", ["A", "B", "C", "D"]), ("A", "X", "C", "D"))])
        path = tmp_path / "report.json"
        path.write_text(report_json(report))
        assert load_report_rate(path) == pytest.approx(25.0)

    def test_json_schema(self):
        report = score_corpus([(record("u1", ["A"]), ("A",))])
        obj = json.loads(report_json(report))
        assert set(obj) == {"corpus", "utterances"}
        assert set(obj["corpus"]) == {"S", "D", "I", "H", "N", "rate_percent"}
        assert set(obj["utterances"]) == {"u1"}

    def test_not_a_report(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"nope": 1}')
        with pytest.raises(ManifestParseError):
            load_report_rate(path)


class TestFormatResultsTable:
    def test_column_minimum_bolded(self):
        rows = {
            ("HuBERT-Baseline", "Baseline"): 6.38,
            ("HuBERT-SpecAugment", "Baseline"): 6.11,
            ("HuBERT-Gaussian-Noise", "Baseline"): 13.17,
        }
        table = format_results_table(rows)
        assert "**6.11**" in table
        assert "**6.38**" not in table
        assert "**13.17**" not in table

    def test_single_cell_bolded(self):
        table = format_results_table({("sys", "set"): 5.0})
        assert "**5.00**" in table

    def test_ties_all_bolded(self):
        rows = {
            ("a", "col"): 7.0,
            ("b", "col"): 7.0,
            ("c", "col"): 9.0,
        }
        table = format_results_table(rows)
        assert table.count("**7.00**") == 2

    def test_missing_cell_renders_dash(self):
        rows = {
            ("a", "x"): 1.0,
            ("b", "y"): 2.0,
        }
        table = format_results_table(rows)
        assert "—" in table

    def test_two_decimals_and_order(self):
        rows = {
            ("sysB", "t1"): 1.5,
            ("sysA", "t1"): 2.0,
            ("sysB", "t2"): 3.25,
        }
        table = format_results_table(rows)
        lines = table.splitlines()
        assert lines[0].startswith("| System")
        assert lines[0].index("t1") < lines[0].index("t2")  # first-seen order
        body = lines[2:]
        assert body[0].startswith("| sysB")  # first-seen row order
        assert "1.50" in table and "3.25" in table

    def test_empty_rejected(self):
        with pytest.raises(EmptyCorpusError):
            format_results_table({})
