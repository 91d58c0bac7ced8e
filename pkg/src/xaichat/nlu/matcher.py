"""Reference-question matching: backends, confidence calibration, NoMatch logging.

Two backends over the TF-IDF space: cosine nearest neighbour, and one-vs-rest
kernel SVM. SVM confidence is a Platt sigmoid over the top-two decision-value
margin, fitted on out-of-fold predictions at training time, so the no-match
threshold reads as "probability the match is right".
"""

from __future__ import annotations

import datetime as _dt
import json
import pickle
import threading
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from ..corpus import PhraseBank
from ..metrics import stratified_fold_ids
from ..tabular import Schema
from .preprocess import PreprocessedQuestion, Slots, substitute_placeholders
from .svm import OneVsRestSvm, SvmParams
from .tfidf import TfidfModel, fit_tfidf

MATCHER_FORMAT_VERSION = 1

COSINE_NEAREST = "CosineNearest"
KERNEL_SVM = "KernelSvm"


@dataclass
class MatcherConfig:
    backend: str = KERNEL_SVM
    theta: float = 0.5
    svm_params: SvmParams = field(default_factory=SvmParams)
    max_df: float = 0.8
    min_df: int = 1
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.theta < 1.0:
            raise ValueError(f"theta={self.theta} outside (0, 1)")
        if self.backend not in (COSINE_NEAREST, KERNEL_SVM):
            raise ValueError(f"unknown backend {self.backend!r}")


@dataclass(frozen=True)
class MatchResult:
    label: str
    confidence: float
    reference_text: str
    slots: Slots
    question_id: int
    preprocessed: PreprocessedQuestion


@dataclass(frozen=True)
class NoMatch:
    """Distinguished no-match value carrying diagnostics for the unmatched log."""

    confidence: float
    candidates: tuple[tuple[str, float], ...]
    preprocessed: PreprocessedQuestion


def platt_fit(margins: np.ndarray, correct: np.ndarray) -> tuple[float, float]:
    """Fit P(correct) = 1 / (1 + exp(A*margin + B)) by Newton iteration."""
    margins = np.asarray(margins, dtype=float)
    correct = np.asarray(correct, dtype=bool)
    prior1 = int(correct.sum())
    prior0 = len(correct) - prior1
    hi = (prior1 + 1.0) / (prior1 + 2.0)
    lo = 1.0 / (prior0 + 2.0)
    t = np.where(correct, hi, lo)
    A, B = 0.0, np.log((prior0 + 1.0) / (prior1 + 1.0))
    sigma = 1e-12

    def nll(a, b):
        f = a * margins + b
        return float(np.sum(np.where(f >= 0, t * f + np.log1p(np.exp(-f)),
                                     (t - 1) * f + np.log1p(np.exp(f)))))

    best = nll(A, B)
    for _ in range(100):
        f = A * margins + B
        p = np.where(f >= 0, np.exp(-f) / (1 + np.exp(-f)), 1 / (1 + np.exp(f)))
        d1 = t - p  # dNLL/df per point
        w = p * (1 - p)
        g_a = float(np.dot(margins, d1))
        g_b = float(np.sum(d1))
        h_aa = float(np.dot(margins * margins, w)) + sigma
        h_bb = float(np.sum(w)) + sigma
        h_ab = float(np.dot(margins, w))
        if abs(g_a) < 1e-5 and abs(g_b) < 1e-5:
            break
        det = h_aa * h_bb - h_ab * h_ab
        dA = -(h_bb * g_a - h_ab * g_b) / det
        dB = -(h_aa * g_b - h_ab * g_a) / det
        step = 1.0
        while step >= 1e-10:
            cand = nll(A + step * dA, B + step * dB)
            if cand < best + 1e-9:
                A, B = A + step * dA, B + step * dB
                best = cand
                break
            step /= 2
        else:
            break
    return float(A), float(B)


def platt_apply(margin: float, ab: tuple[float, float]) -> float:
    a, b = ab
    f = a * margin + b
    if f >= 0:
        return float(np.exp(-f) / (1 + np.exp(-f)))
    return float(1 / (1 + np.exp(f)))


class Matcher:
    """A trained reference-question matcher over a phrase bank."""

    def __init__(self, bank: PhraseBank, tfidf: TfidfModel, config: MatcherConfig):
        self.config = config
        self.tfidf = tfidf
        self.labels = bank.labels  # ordered by canonical question id
        self.label_index = {lab: i for i, lab in enumerate(self.labels)}
        self.entries = [(e.question_id, e.phrase, e.label) for e in bank.entries]
        self.reference_of = dict(bank.reference_of)
        self.label_map = {lab: frozenset(ids) for lab, ids in bank.label_map.items()}
        self.train_X = tfidf.transform([phrase for _, phrase, _ in self.entries])
        self.train_y = np.array([self.label_index[lab] for _, _, lab in self.entries])
        self.svm: Optional[OneVsRestSvm] = None
        # neutral prior: zero margin sits just under a 0.5 threshold
        self.platt_ab: tuple[float, float] = (-1.0, 0.5)
        self.calibration_points: list[tuple[float, bool]] = []

    # -- training --------------------------------------------------------

    def fit(self) -> "Matcher":
        if len(self.labels) < 2:
            raise ValueError("bank must contain at least two intent labels")
        if self.config.backend == KERNEL_SVM:
            self.svm = OneVsRestSvm(self.config.svm_params).fit(
                self.train_X, self.train_y, n_classes=len(self.labels)
            )
            self._calibrate()
        return self

    def _calibrate(self) -> None:
        """Platt-fit the margin->probability map on out-of-fold predictions."""
        k = 3
        counts = np.bincount(self.train_y, minlength=len(self.labels))
        if len(self.train_y) < 2 * k or (counts > 0).sum() < 2:
            return  # tiny banks keep the default sigmoid
        folds = stratified_fold_ids(self.train_y, k, self.config.seed)
        margins, correct = [], []
        for f in range(k):
            train = folds != f
            if len(np.unique(self.train_y[train])) < 2:
                continue
            model = OneVsRestSvm(self.config.svm_params).fit(
                self.train_X[train], self.train_y[train], n_classes=len(self.labels)
            )
            dv = model.decision_values(self.train_X[~train])
            top = np.argmax(dv, axis=1)
            part = np.partition(dv, -2, axis=1)
            margin = part[:, -1] - part[:, -2]
            margins.extend(margin.tolist())
            correct.extend((top == self.train_y[~train]).tolist())
        if margins and 0 < sum(correct):
            self.platt_ab = platt_fit(np.array(margins), np.array(correct))
            self.calibration_points = list(zip(margins, correct))

    # -- scoring ---------------------------------------------------------

    def score(self, canonical_text: str) -> list[tuple[str, float]]:
        """Per-label (label, confidence) sorted best-first."""
        x = self.tfidf.transform([canonical_text])
        if self.config.backend == COSINE_NEAREST:
            sims = (self.train_X @ x.T).ravel()
            per_label = np.full(len(self.labels), -1.0)
            for value, yi in zip(sims, self.train_y):
                if value > per_label[yi]:
                    per_label[yi] = value
            conf = np.clip(per_label, 0.0, 1.0)
        else:
            dv = self.svm.decision_values(x)[0]
            conf = np.empty(len(dv))
            for c in range(len(dv)):
                others = np.delete(dv, c)
                conf[c] = platt_apply(dv[c] - others.max(), self.platt_ab)
        ranked = sorted(
            ((lab, float(conf[i])) for i, lab in enumerate(self.labels)),
            key=lambda t: (-t[1], min(self.label_map[t[0]])),
        )
        return ranked

    def resolve_question_id(self, canonical_text: str, label: str) -> int:
        """Most specific reference question: nearest bank entry within the label."""
        x = self.tfidf.transform([canonical_text])[0]
        best_sim, best_qid = -np.inf, min(self.label_map[label])
        for (qid, _, lab), row in zip(self.entries, self.train_X):
            if lab != label:
                continue
            sim = float(row @ x)
            if sim > best_sim + 1e-12 or (abs(sim - best_sim) <= 1e-12 and qid < best_qid):
                best_sim, best_qid = sim, qid
        return best_qid

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            pickle.dump({"format_version": MATCHER_FORMAT_VERSION, "matcher": self}, fh)

    @staticmethod
    def load(path) -> "Matcher":
        with open(path, "rb") as fh:
            blob = pickle.load(fh)
        if blob.get("format_version") != MATCHER_FORMAT_VERSION:
            raise ValueError(f"unsupported matcher file version: {blob.get('format_version')}")
        return blob["matcher"]


def train_matcher(bank: PhraseBank, tfidf: TfidfModel, config: MatcherConfig) -> Matcher:
    return Matcher(bank, tfidf, config).fit()


def build_matcher(bank: PhraseBank, config: MatcherConfig) -> Matcher:
    tfidf = fit_tfidf(bank.texts(), max_df=config.max_df, min_df=config.min_df)
    return train_matcher(bank, tfidf, config)


def match(question: str, matcher: Matcher, schema: Schema | None,
          theta: float | None = None) -> MatchResult | NoMatch:
    theta = matcher.config.theta if theta is None else theta
    if schema is not None:
        prep = substitute_placeholders(question, schema)
    else:
        prep = PreprocessedQuestion(question, Slots(), question)
    ranked = matcher.score(prep.canonical_text)
    label, confidence = ranked[0]
    if confidence < theta:
        return NoMatch(confidence=confidence, candidates=tuple(ranked[:3]), preprocessed=prep)
    qid = matcher.resolve_question_id(prep.canonical_text, label)
    return MatchResult(
        label=label,
        confidence=confidence,
        reference_text=matcher.reference_of[qid],
        slots=prep.slots,
        question_id=qid,
        preprocessed=prep,
    )


class UnmatchedLog:
    """Durable append-only store of questions the matcher could not place."""

    def __init__(self, path):
        self.path = path
        self._lock = threading.Lock()

    def append(self, record: dict) -> None:
        line = json.dumps(record, sort_keys=True)
        with self._lock:
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()

    def records(self) -> list[dict]:
        try:
            with open(self.path, encoding="utf-8") as fh:
                return [json.loads(line) for line in fh if line.strip()]
        except FileNotFoundError:
            return []


def log_unmatched(question: str, no_match: NoMatch, store: UnmatchedLog) -> dict:
    record = {
        "timestamp": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "original_text": question,
        "preprocessed_text": no_match.preprocessed.canonical_text,
        "candidates": [
            {"label": lab, "confidence": round(conf, 6)} for lab, conf in no_match.candidates
        ],
    }
    store.append(record)
    return record
