"""Random-forest classifier trained on encoded tabular data, plus its model card.

Trees split on Gini impurity over a random feature subset per node; categorical
splits are exact subset search up to 8 categories and greedy beyond. Per-tree
seeds are spawned from the master seed, so results do not depend on training
order or parallelism.
"""

from __future__ import annotations

import math
import pickle
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .metrics import confusion_matrix, macro_f1_from_confusion, stratified_fold_ids
from .tabular import DataSheet, Dataset, Instance, Schema

MODEL_FORMAT_VERSION = 1


class FingerprintError(ValueError):
    pass


@dataclass
class ForestConfig:
    n_trees: int = 100
    max_depth: Optional[int] = None
    min_leaf: int = 1
    max_features: Optional[int] = None  # None = ceil(sqrt(d))
    seed: int = 0

    def resolved_max_features(self, d: int) -> int:
        if self.max_features is not None:
            return min(self.max_features, d)
        return min(d, math.ceil(math.sqrt(d)))

    def as_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_leaf": self.min_leaf,
            "max_features": self.max_features,
            "seed": self.seed,
        }


class TreeNode:
    """Internal node with a numeric threshold or categorical code subset, or a leaf."""

    __slots__ = ("feature", "threshold", "left_codes", "left", "right", "counts")

    def __init__(self, feature=None, threshold=None, left_codes=None,
                 left=None, right=None, counts=None):
        self.feature = feature
        self.threshold = threshold
        self.left_codes = left_codes  # numpy int array of codes routed left
        self.left = left
        self.right = right
        self.counts = counts  # class-count vector at leaves

    @property
    def is_leaf(self) -> bool:
        return self.counts is not None


def _gini_from_counts(counts: np.ndarray) -> float:
    n = counts.sum()
    if n == 0:
        return 0.0
    p = counts / n
    return float(1.0 - np.dot(p, p))


def _best_numeric_split(values, one_hot, parent_gini):
    order = np.argsort(values, kind="stable")
    v = values[order]
    cum = np.cumsum(one_hot[order], axis=0)
    n = len(v)
    total = cum[-1]
    # split after position i is valid only when the value actually changes
    cut = np.nonzero(v[:-1] < v[1:])[0]
    if len(cut) == 0:
        return None
    left_counts = cum[cut]
    left_n = (cut + 1).astype(float)
    right_counts = total - left_counts
    right_n = n - left_n
    gini_l = 1.0 - np.sum((left_counts / left_n[:, None]) ** 2, axis=1)
    gini_r = 1.0 - np.sum((right_counts / right_n[:, None]) ** 2, axis=1)
    weighted = (left_n * gini_l + right_n * gini_r) / n
    best = int(np.argmin(weighted))
    gain = parent_gini - weighted[best]
    if gain <= 1e-12:
        return None
    threshold = (v[cut[best]] + v[cut[best] + 1]) / 2.0
    return gain, ("numeric", float(threshold))


def _best_categorical_split(values, one_hot, parent_gini):
    codes = values.astype(int)
    present = np.unique(codes)
    if len(present) < 2:
        return None
    n = len(codes)
    cat_counts = np.zeros((len(present), one_hot.shape[1]))
    for i, c in enumerate(present):
        cat_counts[i] = one_hot[codes == c].sum(axis=0)
    total = cat_counts.sum(axis=0)

    def weighted_gini(left_counts):
        ln = left_counts.sum()
        rn = n - ln
        if ln == 0 or rn == 0:
            return np.inf
        right = total - left_counts
        gl = 1.0 - np.sum((left_counts / ln) ** 2)
        gr = 1.0 - np.sum((right / rn) ** 2)
        return (ln * gl + rn * gr) / n

    if len(present) <= 8:
        # exhaustive over subsets; fix category 0 to the right half to skip complements
        best_w, best_mask = np.inf, 0
        for mask in range(1, 1 << (len(present) - 1)):
            sel = [(mask >> i) & 1 == 1 for i in range(len(present) - 1)]
            left_counts = cat_counts[1:][np.asarray(sel)].sum(axis=0)
            w = weighted_gini(left_counts)
            if w < best_w:
                best_w, best_mask = w, mask
        members = [present[i + 1] for i in range(len(present) - 1) if (best_mask >> i) & 1]
    else:
        # greedy one-vs-rest growth
        chosen: list[int] = []
        remaining = list(range(len(present)))
        best_w = np.inf
        improved = True
        while improved and remaining:
            improved = False
            best_add = None
            for i in remaining:
                trial = cat_counts[chosen + [i]].sum(axis=0)
                w = weighted_gini(trial)
                if w < best_w:
                    best_w, best_add = w, i
            if best_add is not None:
                chosen.append(best_add)
                remaining.remove(best_add)
                improved = True
        members = [present[i] for i in chosen]
    if not members or best_w == np.inf:
        return None
    gain = parent_gini - best_w
    if gain <= 1e-12:
        return None
    return gain, ("categorical", np.asarray(sorted(members), dtype=int))


class RandomForest:
    def __init__(self, schema: Schema, config: ForestConfig):
        self.schema = schema
        self.config = config
        self.trees: list[TreeNode] = []
        self.n_classes = len(schema.classes)
        self.schema_fingerprint = schema.fingerprint()
        self._numeric = np.array([f.is_numeric for f in schema.features])

    # -- training ----------------------------------------------------------

    def fit(self, X: np.ndarray, y: np.ndarray) -> "RandomForest":
        if len(np.unique(y)) < 2:
            raise ValueError("training data contains a single class")
        d = X.shape[1]
        max_features = self.config.resolved_max_features(d)
        seeds = np.random.SeedSequence(self.config.seed).spawn(self.config.n_trees)
        self.trees = []
        for seq in seeds:
            rng = np.random.default_rng(seq)
            idx = rng.integers(0, len(X), size=len(X))
            self.trees.append(self._grow(X[idx], y[idx], rng, max_features, depth=0))
        return self

    def _grow(self, X, y, rng, max_features, depth) -> TreeNode:
        one_hot = np.zeros((len(y), self.n_classes))
        one_hot[np.arange(len(y)), y] = 1.0
        counts = one_hot.sum(axis=0)
        parent_gini = _gini_from_counts(counts)
        stop = (
            parent_gini == 0.0
            or len(y) < 2 * self.config.min_leaf
            or (self.config.max_depth is not None and depth >= self.config.max_depth)
        )
        if not stop:
            split = self._find_split(X, one_hot, parent_gini, rng, max_features)
            if split is not None:
                feature, kind, arg, left_mask = split
                node = TreeNode(feature=feature)
                if kind == "numeric":
                    node.threshold = arg
                else:
                    node.left_codes = arg
                node.left = self._grow(X[left_mask], y[left_mask], rng, max_features, depth + 1)
                node.right = self._grow(X[~left_mask], y[~left_mask], rng, max_features, depth + 1)
                return node
        return TreeNode(counts=counts)

    def _find_split(self, X, one_hot, parent_gini, rng, max_features):
        d = X.shape[1]
        order = rng.permutation(d)
        best = None  # (gain, feature, kind, arg)
        tried = 0
        for j in order:
            values = X[:, j]
            if self._numeric[j]:
                found = _best_numeric_split(values, one_hot, parent_gini)
            else:
                found = _best_categorical_split(values, one_hot, parent_gini)
            tried += 1
            if found is not None:
                gain, (kind, arg) = found
                if best is None or gain > best[0]:
                    best = (gain, j, kind, arg)
            # keep scanning past max_features only while nothing splittable found
            if tried >= max_features and best is not None:
                break
        if best is None:
            return None
        _, j, kind, arg = best
        if kind == "numeric":
            left_mask = X[:, j] <= arg
        else:
            left_mask = np.isin(X[:, j].astype(int), arg)
        if self.config.min_leaf > 1 and (
            left_mask.sum() < self.config.min_leaf or (~left_mask).sum() < self.config.min_leaf
        ):
            return None
        return j, kind, arg, left_mask

    # -- inference ---------------------------------------------------------

    def _leaf_matrix(self, tree: TreeNode, X: np.ndarray) -> np.ndarray:
        """Per-row leaf class-count vectors for one tree, batch traversal."""
        out = np.empty((len(X), self.n_classes))
        stack = [(tree, np.arange(len(X)))]
        while stack:
            node, idx = stack.pop()
            if len(idx) == 0:
                continue
            if node.is_leaf:
                out[idx] = node.counts
                continue
            col = X[idx, node.feature]
            if node.threshold is not None:
                go_left = col <= node.threshold
            else:
                go_left = np.isin(col.astype(int), node.left_codes)
            stack.append((node.left, idx[go_left]))
            stack.append((node.right, idx[~go_left]))
        return out

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        acc = np.zeros((len(X), self.n_classes))
        for tree in self.trees:
            counts = self._leaf_matrix(tree, X)
            acc += counts / counts.sum(axis=1, keepdims=True)
        return acc / len(self.trees)

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        votes = np.zeros((len(X), self.n_classes), dtype=int)
        for tree in self.trees:
            counts = self._leaf_matrix(tree, X)
            winner = np.argmax(counts, axis=1)  # argmax takes lowest index on ties
            votes[np.arange(len(X)), winner] += 1
        return np.argmax(votes, axis=1)

    def _check(self, instance: Instance) -> None:
        if instance.schema_fingerprint != self.schema_fingerprint:
            raise FingerprintError(
                "instance was validated against a different schema than this model"
            )

    def predict_instance(self, instance: Instance) -> str:
        self._check(instance)
        return self.schema.classes[int(self.predict(instance.x[None, :])[0])]

    def predict_proba_instance(self, instance: Instance) -> np.ndarray:
        self._check(instance)
        return self.predict_proba(instance.x[None, :])[0]

    def fingerprint(self) -> str:
        import hashlib
        import json

        payload = json.dumps(
            {"schema": self.schema_fingerprint, "config": self.config.as_dict()},
            sort_keys=True,
        )
        return hashlib.sha256(payload.encode()).hexdigest()[:16]


def train_random_forest(dataset: Dataset, config: ForestConfig | None = None) -> RandomForest:
    config = config or ForestConfig()
    model = RandomForest(dataset.schema, config)
    return model.fit(dataset.X, dataset.y)


# -- evaluation --------------------------------------------------------------


@dataclass
class CvMetrics:
    accuracy_mean: float
    accuracy_sd: float
    macro_f1_mean: float
    macro_f1_sd: float
    confusion: np.ndarray  # aggregated over folds, true x predicted
    per_class_precision: list[float] = field(default_factory=list)
    per_class_recall: list[float] = field(default_factory=list)
    k: int = 3


def evaluate_cv(dataset: Dataset, config: ForestConfig | None = None, k: int = 3) -> CvMetrics:
    config = config or ForestConfig()
    folds = stratified_fold_ids(dataset.y, k, config.seed)
    accs, f1s = [], []
    n_classes = len(dataset.schema.classes)
    agg = np.zeros((n_classes, n_classes), dtype=int)
    for f in range(k):
        train_mask = folds != f
        y_train = dataset.y[train_mask]
        if len(np.unique(y_train)) < 2:
            raise ValueError(f"fold {f}: training split lost all but one class")
        model = RandomForest(dataset.schema, config).fit(dataset.X[train_mask], y_train)
        pred = model.predict(dataset.X[~train_mask])
        truth = dataset.y[~train_mask]
        cm = confusion_matrix(truth, pred, n_classes)
        agg += cm
        accs.append(float(np.mean(pred == truth)))
        f1s.append(macro_f1_from_confusion(cm))
    precision, recall = [], []
    for c in range(n_classes):
        col = agg[:, c].sum()
        row = agg[c].sum()
        precision.append(float(agg[c, c] / col) if col else 0.0)
        recall.append(float(agg[c, c] / row) if row else 0.0)
    return CvMetrics(
        accuracy_mean=float(np.mean(accs)),
        accuracy_sd=float(np.std(accs)),
        macro_f1_mean=float(np.mean(f1s)),
        macro_f1_sd=float(np.std(f1s)),
        confusion=agg,
        per_class_precision=precision,
        per_class_recall=recall,
        k=k,
    )


# -- model card --------------------------------------------------------------


@dataclass
class ModelCard:
    algorithm: str
    hyperparameters: dict
    training_data: str
    cv_metrics: CvMetrics
    limitations: str
    capability_scope: str
    intended_use: str
    output_meaning: str
    output_format: str
    error_situations: str
    mistake_pattern: str

    def field_text(self, name: str) -> str:
        mapping = {
            "algorithm": f"The underlying model is a {self.algorithm}.",
            "hyperparameters": "The model was trained with "
            + ", ".join(f"{k}={v}" for k, v in self.hyperparameters.items()) + ".",
            "training_data": self.training_data,
            "accuracy": (
                f"Mean accuracy over {self.cv_metrics.k}-fold cross-validation is "
                f"{self.cv_metrics.accuracy_mean:.2f} (std {self.cv_metrics.accuracy_sd:.2f})."
            ),
            "error_rate": (
                f"The system is wrong on roughly {100 * (1 - self.cv_metrics.accuracy_mean):.0f}% "
                f"of held-out cases ({self.cv_metrics.k}-fold cross-validation)."
            ),
            "limitations": self.limitations,
            "capability_scope": self.capability_scope,
            "intended_use": self.intended_use,
            "output_meaning": self.output_meaning,
            "output_format": self.output_format,
            "error_situations": self.error_situations,
            "mistake_pattern": self.mistake_pattern,
        }
        if name not in mapping:
            raise KeyError(f"model card has no field {name!r}")
        return mapping[name]


def build_model_card(
    model: RandomForest,
    cv: CvMetrics | None,
    dataset_desc: DataSheet,
    limitations: str = "",
) -> ModelCard:
    if cv is None:
        raise ValueError("model card requires cross-validation metrics")
    schema = model.schema
    cm = cv.confusion
    classes = schema.classes
    # worst off-diagonal confusion cell drives the mistake-pattern text
    off = cm.astype(float).copy()
    np.fill_diagonal(off, -1)
    worst_true, worst_pred = np.unravel_index(int(np.argmax(off)), off.shape)
    if off[worst_true, worst_pred] <= 0:
        mistake = "Cross-validation produced no misclassifications, so no dominant mistake pattern emerged."
        situations = "No error-prone situations were observed during cross-validation."
    else:
        share = off[worst_true, worst_pred] / max(1, cm[worst_true].sum())
        mistake = (
            f"Its most common mistake is labelling a true {classes[worst_true]} case as "
            f"{classes[worst_pred]} ({100 * share:.0f}% of {classes[worst_true]} cases in cross-validation)."
        )
        recalls = cv.per_class_recall
        weakest = int(np.argmin(recalls))
        situations = (
            f"It is least reliable on cases whose true outcome is {classes[weakest]} "
            f"(recall {recalls[weakest]:.2f}); it is most reliable on "
            f"{classes[int(np.argmax(recalls))]} cases (recall {max(recalls):.2f})."
        )
    n_features = len(schema.features)
    return ModelCard(
        algorithm="random forest",
        hyperparameters={
            "n_trees": model.config.n_trees,
            "max_depth": model.config.max_depth,
            "min_leaf": model.config.min_leaf,
            "max_features": model.config.resolved_max_features(n_features),
            "seed": model.config.seed,
        },
        training_data=(
            f"It learns from {dataset_desc.sample_size} records with {n_features} features "
            f"({', '.join(schema.feature_names)}). Source: {dataset_desc.source}"
        ),
        cv_metrics=cv,
        limitations=limitations or dataset_desc.biases_limitations,
        capability_scope=(
            f"The system classifies a single record into one of: {', '.join(classes)}. "
            "It cannot answer questions outside that prediction task."
        ),
        intended_use=(
            "Use the predicted class as decision support alongside the accompanying "
            "explanations; it is not a substitute for expert judgment."
        ),
        output_meaning=(
            f"The output is the predicted value of '{schema.target_name}': one of "
            + ", ".join(f"'{c}' meaning {schema.class_phrase(c)}" for c in classes) + "."
        ),
        output_format="Each prediction is a class label together with a class-probability estimate.",
        error_situations=situations,
        mistake_pattern=mistake,
    )


# -- persistence -------------------------------------------------------------


def save_model(path, model: RandomForest, card: ModelCard | None = None) -> None:
    with open(path, "wb") as fh:
        pickle.dump({"format_version": MODEL_FORMAT_VERSION, "model": model, "card": card}, fh)


def load_model(path) -> tuple[RandomForest, ModelCard | None]:
    with open(path, "rb") as fh:
        blob = pickle.load(fh)
    if blob.get("format_version") != MODEL_FORMAT_VERSION:
        raise ValueError(f"unsupported model file version: {blob.get('format_version')}")
    return blob["model"], blob["card"]
