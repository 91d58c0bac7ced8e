"""Stratified fold assignment and the classification metrics shared by evaluators."""

from __future__ import annotations

import numpy as np


def stratified_fold_ids(labels, k: int, seed: int) -> np.ndarray:
    """Fold id per row; per-label counts differ by <=1 and totals stay balanced."""
    labels = np.asarray(labels)
    n = len(labels)
    if k < 2:
        raise ValueError("k must be >= 2")
    if k > n:
        raise ValueError(f"k={k} exceeds {n} rows")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0xF01D]))
    assignment = np.full(n, -1, dtype=int)
    totals = np.zeros(k, dtype=int)
    uniq = sorted(np.unique(labels).tolist())
    for label in uniq:
        idx = np.nonzero(labels == label)[0]
        idx = idx[rng.permutation(len(idx))]
        base, extra = divmod(len(idx), k)
        pos = 0
        for f in range(k):
            assignment[idx[pos:pos + base]] = f
            totals[f] += base
            pos += base
        if extra:
            # remainder goes to the currently smallest folds, keeping totals even
            smallest = np.lexsort((rng.permutation(k), totals))[:extra]
            for f in smallest:
                assignment[idx[pos]] = f
                totals[f] += 1
                pos += 1
    return assignment


def confusion_matrix(y_true, y_pred, n_classes: int) -> np.ndarray:
    cm = np.zeros((n_classes, n_classes), dtype=int)
    for t, p in zip(y_true, y_pred):
        cm[int(t), int(p)] += 1
    return cm


def macro_f1_from_confusion(cm: np.ndarray) -> float:
    """Macro F1 over classes with test support; unsupported classes are skipped."""
    f1s = []
    for c in range(cm.shape[0]):
        support = cm[c].sum()
        if support == 0:
            continue
        tp = cm[c, c]
        predicted = cm[:, c].sum()
        precision = tp / predicted if predicted else 0.0
        recall = tp / support
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        f1s.append(f1)
    return float(np.mean(f1s)) if f1s else 0.0
