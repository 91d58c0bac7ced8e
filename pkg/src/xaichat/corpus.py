"""The question phrase bank: loading, score filtering, label merging, fold splits.

The bank is line-delimited JSON under ``data/bank/``: one record per entry
(reference questions and their accepted paraphrases), with the raw annotated
candidate pairs kept in a separate file so the score filter stays replayable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .metrics import stratified_fold_ids

CATEGORIES = (
    "How", "HowToBe", "HowToStill", "Input", "Output",
    "Performance", "WhatIf", "Why", "WhyNot", "Others",
)

# ids whose rows are highlighted in the question table: answering them takes an
# explanation method rather than a metadata lookup or plain model application
XAI_IDS = frozenset(range(2, 10)) | frozenset(range(11, 21)) | frozenset(range(47, 54)) | frozenset(range(68, 74))

KEEP_THRESHOLD = 4.0  # mean annotation score a candidate pair needs to enter the bank


class BankError(ValueError):
    pass


@dataclass(frozen=True)
class ReferenceQuestion:
    id: int
    category: str
    text: str
    requires_xai: bool

    def __post_init__(self):
        if not 1 <= self.id <= 73:
            raise BankError(f"question id {self.id} outside 1..73")
        if self.category not in CATEGORIES:
            raise BankError(f"question {self.id}: unknown category {self.category!r}")
        if not self.text.strip():
            raise BankError(f"question {self.id}: empty text")
        if self.requires_xai != (self.id in XAI_IDS):
            raise BankError(
                f"question {self.id}: requires_xai={self.requires_xai} contradicts the highlighted-row set"
            )


@dataclass(frozen=True)
class AnnotatedPair:
    question_id: int
    phrase: str
    scores: tuple[int, ...]
    is_negative: bool = False

    def mean_score(self) -> float:
        if not self.scores:
            raise BankError(f"pair ({self.question_id}, {self.phrase!r}) has no scores")
        return sum(self.scores) / len(self.scores)


@dataclass(frozen=True)
class BankEntry:
    question_id: int
    phrase: str
    label: str
    is_reference: bool = False


@dataclass(frozen=True)
class PhraseBank:
    entries: tuple[BankEntry, ...]
    label_map: Mapping[str, frozenset[int]]
    reference_of: Mapping[int, str]
    categories: Mapping[int, str]
    requires_xai: Mapping[int, bool]

    @property
    def labels(self) -> list[str]:
        """All labels, ordered by the smallest question id they cover."""
        return sorted(self.label_map, key=lambda lab: min(self.label_map[lab]))

    @property
    def n_labels(self) -> int:
        return len(self.label_map)

    def texts(self) -> list[str]:
        return [e.phrase for e in self.entries]

    def entry_labels(self) -> list[str]:
        return [e.label for e in self.entries]

    def canonical_id(self, label: str) -> int:
        return min(self.label_map[label])


@dataclass(frozen=True)
class FoldSplit:
    k: int
    assignments: Mapping[int, int]  # entry index -> fold id
    seed: int

    def fold_of(self, index: int) -> int:
        return self.assignments[index]

    def sizes(self) -> list[int]:
        counts = [0] * self.k
        for f in self.assignments.values():
            counts[f] += 1
        return counts


def _read_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield lineno, json.loads(line)
            except json.JSONDecodeError as err:
                raise BankError(f"{path}:{lineno}: malformed record: {err}") from None


def load_questions(path) -> dict[int, ReferenceQuestion]:
    questions: dict[int, ReferenceQuestion] = {}
    for lineno, rec in _read_jsonl(path):
        q = ReferenceQuestion(
            id=int(rec["id"]),
            category=rec["category"],
            text=rec["text"],
            requires_xai=bool(rec["requires_xai"]),
        )
        if q.id in questions:
            raise BankError(f"{path}:{lineno}: duplicate reference id {q.id}")
        questions[q.id] = q
    return questions


def load_annotations(path) -> list[AnnotatedPair]:
    pairs = []
    for lineno, rec in _read_jsonl(path):
        scores = tuple(int(s) for s in rec["scores"])
        if any(not 1 <= s <= 6 for s in scores):
            raise BankError(f"{path}:{lineno}: score outside the 6-point scale")
        if len(scores) < 2:
            raise BankError(f"{path}:{lineno}: every pair needs at least 2 annotations")
        pairs.append(
            AnnotatedPair(
                question_id=int(rec["question_id"]),
                phrase=rec["phrase"],
                scores=scores,
                is_negative=bool(rec.get("is_negative", False)),
            )
        )
    return pairs


def load_phrase_bank(path) -> PhraseBank:
    """Load the entry file; every question id appearing must carry its reference row."""
    entries: list[BankEntry] = []
    reference_of: dict[int, str] = {}
    categories: dict[int, str] = {}
    requires: dict[int, bool] = {}
    for lineno, rec in _read_jsonl(path):
        try:
            qid = int(rec["question_id"])
            entry = BankEntry(
                question_id=qid,
                phrase=rec["phrase"],
                label=rec["label"],
                is_reference=bool(rec.get("is_reference", False)),
            )
            category = rec["category"]
            requires_xai = bool(rec["requires_xai"])
        except KeyError as err:
            raise BankError(f"{path}:{lineno}: missing field {err}") from None
        if not entry.phrase.strip():
            raise BankError(f"{path}:{lineno}: empty phrase")
        # validates id range / category / xai flag consistency
        ReferenceQuestion(id=qid, category=category, text=entry.phrase, requires_xai=requires_xai)
        if entry.is_reference:
            if qid in reference_of:
                raise BankError(f"{path}:{lineno}: duplicate reference entry for id {qid}")
            reference_of[qid] = entry.phrase
        categories.setdefault(qid, category)
        if categories[qid] != category:
            raise BankError(f"{path}:{lineno}: id {qid} category flips to {category!r}")
        requires[qid] = requires_xai
        entries.append(entry)

    missing = sorted({e.question_id for e in entries} - set(reference_of))
    if missing:
        raise BankError(f"{path}: entries labeled by unknown ids (no reference row): {missing}")

    label_map: dict[str, set[int]] = {}
    for e in entries:
        label_map.setdefault(e.label, set()).add(e.question_id)
    bank = PhraseBank(
        entries=tuple(entries),
        label_map={k: frozenset(v) for k, v in label_map.items()},
        reference_of=reference_of,
        categories=categories,
        requires_xai=requires,
    )
    _check_reference_is_paraphrase(bank)
    return bank


def _check_reference_is_paraphrase(bank: PhraseBank) -> None:
    covered = {e.question_id for e in bank.entries if e.is_reference}
    for qid in bank.reference_of:
        if qid not in covered:
            raise BankError(f"question {qid} has no entry for its own reference text")


def filter_candidates(pairs: Sequence[AnnotatedPair], threshold: float) -> list[AnnotatedPair]:
    """Keep exactly the pairs whose mean annotation score reaches the threshold."""
    if not 1 <= threshold <= 6:
        raise ValueError(f"threshold {threshold} outside the 6-point scale")
    kept = []
    for pair in pairs:
        if pair.mean_score() >= threshold:
            kept.append(pair)
    return kept


def merge_labels(bank: PhraseBank, merge_spec: Sequence[Iterable[int]]) -> PhraseBank:
    """Give each id-set one shared label; everything else keeps its label."""
    seen: set[int] = set()
    groups: list[frozenset[int]] = []
    for ids in merge_spec:
        group = frozenset(int(i) for i in ids)
        clash = group & seen
        if clash:
            raise BankError(f"merge groups overlap on ids {sorted(clash)}")
        unknown = group - set(bank.reference_of)
        if unknown:
            raise BankError(f"merge group references unknown ids {sorted(unknown)}")
        seen |= group
        groups.append(group)

    new_label: dict[int, str] = {}
    for group in groups:
        label = "+".join(f"q{i}" for i in sorted(group))
        for qid in group:
            new_label[qid] = label

    def label_for(qid: int, old: str) -> str:
        return new_label.get(qid, old)

    entries = tuple(
        BankEntry(e.question_id, e.phrase, label_for(e.question_id, e.label), e.is_reference)
        for e in bank.entries
    )
    label_map: dict[str, set[int]] = {}
    for e in entries:
        label_map.setdefault(e.label, set()).add(e.question_id)
    return PhraseBank(
        entries=entries,
        label_map={k: frozenset(v) for k, v in label_map.items()},
        reference_of=bank.reference_of,
        categories=bank.categories,
        requires_xai=bank.requires_xai,
    )


def xai_subset(bank: PhraseBank) -> PhraseBank:
    entries = tuple(e for e in bank.entries if bank.requires_xai[e.question_id])
    kept_ids = {e.question_id for e in entries}
    label_map: dict[str, frozenset[int]] = {}
    for e in entries:
        label_map.setdefault(e.label, frozenset())
    for label in label_map:
        label_map[label] = frozenset(i for i in bank.label_map[label] if i in kept_ids)
    return PhraseBank(
        entries=entries,
        label_map=label_map,
        reference_of={i: t for i, t in bank.reference_of.items() if i in kept_ids},
        categories={i: c for i, c in bank.categories.items() if i in kept_ids},
        requires_xai={i: r for i, r in bank.requires_xai.items() if i in kept_ids},
    )


def stratified_folds(bank: PhraseBank, k: int, seed: int) -> FoldSplit:
    if not bank.entries:
        raise BankError("cannot split an empty bank")
    assignment = stratified_fold_ids(bank.entry_labels(), k, seed)
    return FoldSplit(k=k, assignments={i: int(f) for i, f in enumerate(assignment)}, seed=seed)


def build_bank_entries(
    questions: Mapping[int, ReferenceQuestion],
    pairs: Sequence[AnnotatedPair],
    threshold: float = KEEP_THRESHOLD,
) -> list[BankEntry]:
    """Assemble bank entries: every reference plus the accepted positive pairs."""
    entries = [
        BankEntry(q.id, q.text, f"q{q.id}", is_reference=True)
        for q in sorted(questions.values(), key=lambda q: q.id)
    ]
    for pair in filter_candidates(pairs, threshold):
        if pair.is_negative:
            continue
        if pair.question_id not in questions:
            raise BankError(f"annotated pair references unknown question {pair.question_id}")
        entries.append(BankEntry(pair.question_id, pair.phrase, f"q{pair.question_id}"))
    return entries
