"""Cross-validated evaluation of the question matcher (accuracy = micro-F1)."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..corpus import FoldSplit, PhraseBank, stratified_folds
from ..metrics import confusion_matrix, macro_f1_from_confusion
from .matcher import COSINE_NEAREST, MatcherConfig
from .svm import OneVsRestSvm
from .tfidf import fit_tfidf


@dataclass
class CvResult:
    accuracy_mean: float
    accuracy_sd: float
    macro_f1_mean: float
    macro_f1_sd: float
    fold_accuracies: list[float]
    fold_macro_f1: list[float]

    def row(self, name: str) -> str:
        return (
            f"{name}\t{self.accuracy_mean:.2f} +- {self.accuracy_sd:.2f}"
            f"\t{self.macro_f1_mean:.2f} +- {self.macro_f1_sd:.2f}"
        )


def cross_validate(bank: PhraseBank, config: MatcherConfig,
                   folds: FoldSplit | None = None) -> CvResult:
    """Train on k-1 folds, test on the held-out one; TF-IDF refit per fold."""
    folds = folds or stratified_folds(bank, 3, config.seed)
    labels = bank.labels
    label_index = {lab: i for i, lab in enumerate(labels)}
    texts = bank.texts()
    y = np.array([label_index[lab] for lab in bank.entry_labels()])
    assignment = np.array([folds.assignments[i] for i in range(len(texts))])

    accs, f1s = [], []
    for f in range(folds.k):
        train = assignment != f
        train_texts = [t for t, keep in zip(texts, train) if keep]
        test_texts = [t for t, keep in zip(texts, train) if not keep]
        if not test_texts:
            continue
        tfidf = fit_tfidf(train_texts, max_df=config.max_df, min_df=config.min_df)
        X_train = tfidf.transform(train_texts)
        X_test = tfidf.transform(test_texts)
        if config.backend == COSINE_NEAREST:
            sims = X_test @ X_train.T
            pred = y[train][np.argmax(sims, axis=1)]
        else:
            model = OneVsRestSvm(config.svm_params).fit(X_train, y[train], n_classes=len(labels))
            pred = model.predict(X_test)
        truth = y[~train]
        cm = confusion_matrix(truth, pred, len(labels))
        accs.append(float(np.mean(pred == truth)))
        f1s.append(macro_f1_from_confusion(cm))

    return CvResult(
        accuracy_mean=float(np.mean(accs)),
        accuracy_sd=float(np.std(accs)),
        macro_f1_mean=float(np.mean(f1s)),
        macro_f1_sd=float(np.std(f1s)),
        fold_accuracies=accs,
        fold_macro_f1=f1s,
    )
