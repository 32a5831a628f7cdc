"""Edit-distance alignment, PER/WER scoring, and comparison tables.

Error rates are pooled Kaldi-style: corpus rate = 100 * (sum S + D + I) /
(sum N), never an average of per-utterance rates.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .audio_io import UtteranceRecord
from .errors import EmptyCorpusError, ManifestParseError, MissingHypothesisError

MISSING_CELL = "—"  # em dash placeholder for absent (system, test set) cells


@dataclass(frozen=True)
class EditCounts:
    """Alignment tallies against a reference of length ``ref_len``."""

    substitutions: int = 0
    deletions: int = 0
    insertions: int = 0
    hits: int = 0
    ref_len: int = 0

    @property
    def distance(self) -> int:
        return self.substitutions + self.deletions + self.insertions

    @property
    def error_rate_percent(self) -> float:
        if self.ref_len == 0:
            return 0.0 if self.distance == 0 else float("inf")
        return 100.0 * self.distance / self.ref_len

    def __add__(self, other: "EditCounts") -> "EditCounts":
        return EditCounts(
            self.substitutions + other.substitutions,
            self.deletions + other.deletions,
            self.insertions + other.insertions,
            self.hits + other.hits,
            self.ref_len + other.ref_len,
        )

    def to_json_dict(self) -> dict:
        return {
            "S": self.substitutions,
            "D": self.deletions,
            "I": self.insertions,
            "H": self.hits,
            "N": self.ref_len,
            "rate_percent": self.error_rate_percent,
        }


@dataclass(frozen=True)
class ScoreReport:
    """Per-utterance and pooled corpus edit counts."""

    per_utterance: dict[str, EditCounts]
    corpus: EditCounts

    @property
    def error_rate_percent(self) -> float:
        return self.corpus.error_rate_percent

    def to_json_dict(self) -> dict:
        return {
            "corpus": self.corpus.to_json_dict(),
            "utterances": {
                uid: counts.to_json_dict()
                for uid, counts in self.per_utterance.items()
            },
        }


def edit_distance(ref: Sequence[str], hyp: Sequence[str]) -> EditCounts:
    """Minimum-edit alignment with unit costs.

    The backtrace breaks ties preferring hit > substitution > deletion >
    insertion, so the (S, D, I, H) split is deterministic even when several
    alignments share the minimal cost.
    """
    n, m = len(ref), len(hyp)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(1, n + 1):
        dp[i][0] = i
    for j in range(1, m + 1):
        dp[0][j] = j
    for i in range(1, n + 1):
        row, prev = dp[i], dp[i - 1]
        ref_tok = ref[i - 1]
        for j in range(1, m + 1):
            diag = prev[j - 1] + (ref_tok != hyp[j - 1])
            row[j] = min(diag, prev[j] + 1, row[j - 1] + 1)

    subs = dels = ins = hits = 0
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0 and ref[i - 1] == hyp[j - 1] and dp[i][j] == dp[i - 1][j - 1]:
            hits += 1
            i, j = i - 1, j - 1
        elif i > 0 and j > 0 and dp[i][j] == dp[i - 1][j - 1] + 1:
            subs += 1
            i, j = i - 1, j - 1
        elif i > 0 and dp[i][j] == dp[i - 1][j] + 1:
            dels += 1
            i -= 1
        else:
            ins += 1
            j -= 1
    return EditCounts(subs, dels, ins, hits, n)


def score_corpus(
    pairs: Iterable[tuple[UtteranceRecord, Sequence[str]]],
    lowercase: bool = False,
) -> ScoreReport:
    """Score (reference record, hypothesis tokens) pairs and pool the counts."""
    per_utterance: dict[str, EditCounts] = {}
    total = EditCounts()
    for record, hyp_tokens in pairs:
        ref = record.transcript
        hyp = tuple(hyp_tokens)
        if lowercase:
            ref = tuple(t.lower() for t in ref)
            hyp = tuple(t.lower() for t in hyp)
        counts = edit_distance(ref, hyp)
        per_utterance[record.id] = counts
        total = total + counts
    if not per_utterance:
        raise EmptyCorpusError("no utterance pairs to score")
    return ScoreReport(per_utterance=per_utterance, corpus=total)


def load_hypotheses(path: str | Path) -> dict[str, tuple[str, ...]]:
    """Load a hypothesis JSONL file ({id, text} per line) into a token map."""
    hyps: dict[str, tuple[str, ...]] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ManifestParseError(f"line {lineno}: invalid JSON: {exc}") from exc
            if not isinstance(obj, dict) or "id" not in obj or "text" not in obj:
                raise ManifestParseError(f"line {lineno}: need id and text fields")
            uid = str(obj["id"])
            if uid in hyps:
                raise ManifestParseError(f"line {lineno}: duplicate id {uid!r}")
            hyps[uid] = tuple(str(obj["text"]).split())
    return hyps


def join_hypotheses(
    records: Sequence[UtteranceRecord], hyps: Mapping[str, Sequence[str]]
) -> list[tuple[UtteranceRecord, Sequence[str]]]:
    """Pair each reference with its hypothesis, demanding matching id sets."""
    known = {record.id for record in records}
    for uid in hyps:
        if uid not in known:
            raise MissingHypothesisError(
                uid, f"hypothesis id {uid!r} has no reference utterance"
            )
    pairs = []
    for record in records:
        if record.id not in hyps:
            raise MissingHypothesisError(record.id)
        pairs.append((record, hyps[record.id]))
    return pairs


def format_results_table(rows: Mapping[tuple[str, str], float]) -> str:
    """Render (system, test set) -> error rate as an aligned markdown grid.

    Systems become rows and test sets columns, both in first-seen order.
    Rates print with two decimals; each column's minimum is bold-marked
    (ties all bolded) and absent cells render as an em dash.
    """
    if not rows:
        raise EmptyCorpusError("no results to tabulate")
    systems: list[str] = []
    test_sets: list[str] = []
    for system, test_set in rows:
        if system not in systems:
            systems.append(system)
        if test_set not in test_sets:
            test_sets.append(test_set)

    minima = {
        ts: min(rate for (_, t), rate in rows.items() if t == ts)
        for ts in test_sets
    }
    cells: dict[tuple[str, str], str] = {}
    for (system, test_set), rate in rows.items():
        text = f"{rate:.2f}"
        if rate == minima[test_set]:
            text = f"**{text}**"
        cells[(system, test_set)] = text

    header = ["System"] + test_sets
    body = [
        [system] + [cells.get((system, ts), MISSING_CELL) for ts in test_sets]
        for system in systems
    ]
    widths = [
        max(len(row[col]) for row in [header] + body)
        for col in range(len(header))
    ]

    def fmt(row: list[str]) -> str:
        return "| " + " | ".join(cell.ljust(w) for cell, w in zip(row, widths)) + " |"

    rule = "| " + " | ".join("-" * w for w in widths) + " |"
    return "\n".join([fmt(header), rule] + [fmt(row) for row in body])


def report_json(report: ScoreReport) -> str:
    return json.dumps(report.to_json_dict(), indent=2, sort_keys=False)


def load_report_rate(path: str | Path) -> float:
    """Corpus error rate stored in a score-report JSON file."""
    with open(path, "r", encoding="utf-8") as fh:
        obj = json.load(fh)
    try:
        return float(obj["corpus"]["rate_percent"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestParseError(f"{path}: not a score report: {exc}") from exc
