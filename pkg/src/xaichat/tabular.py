"""Dataset schema, CSV ingestion, instance validation and perturbation sampling."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping

import numpy as np

NUMERIC = "numeric"
CATEGORICAL = "categorical"


class SchemaError(ValueError):
    pass


class DataLoadError(ValueError):
    """CSV did not parse against the schema; message lists every offending row."""


class InstanceError(ValueError):
    """Instance rejected; `problems` enumerates everything wrong at once."""

    def __init__(self, problems: list[str]):
        super().__init__("; ".join(problems))
        self.problems = list(problems)


@dataclass(frozen=True)
class FeatureSpec:
    name: str
    kind: str
    domain: tuple  # (lo, hi) for numeric, category tuple for categorical
    mutable: bool = True
    precision: int | None = None  # decimal places for counterfactual proposals, None = free

    def __post_init__(self):
        if self.kind not in (NUMERIC, CATEGORICAL):
            raise SchemaError(f"feature {self.name!r}: unknown kind {self.kind!r}")
        if self.kind == NUMERIC:
            lo, hi = self.domain
            if lo > hi:
                raise SchemaError(f"feature {self.name!r}: range lo {lo} > hi {hi}")
        elif not self.domain:
            raise SchemaError(f"feature {self.name!r}: empty category set")

    @property
    def is_numeric(self) -> bool:
        return self.kind == NUMERIC


@dataclass(frozen=True)
class Schema:
    features: tuple[FeatureSpec, ...]
    classes: tuple[str, ...]
    target_name: str
    vocabulary: Mapping[str, Any] = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.features:
            raise SchemaError("schema needs at least one feature")
        if len(self.classes) < 2:
            raise SchemaError("schema needs at least two classes")
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate feature names")

    @property
    def feature_names(self) -> list[str]:
        return [f.name for f in self.features]

    def feature(self, name: str) -> FeatureSpec:
        for f in self.features:
            if f.name == name:
                return f
        raise SchemaError(f"unknown feature {name!r}")

    def index_of(self, name: str) -> int:
        for i, f in enumerate(self.features):
            if f.name == name:
                return i
        raise SchemaError(f"unknown feature {name!r}")

    def class_index(self, label: str) -> int:
        try:
            return self.classes.index(label)
        except ValueError:
            raise SchemaError(f"unknown class {label!r}") from None

    def class_phrase(self, label: str) -> str:
        """Fluent dataset-specific phrasing of a class label, falling back to the label."""
        return self.vocabulary.get("class_phrases", {}).get(label, label)

    def encode_value(self, idx: int, value) -> float:
        spec = self.features[idx]
        if spec.is_numeric:
            return float(value)
        return float(spec.domain.index(value))

    def decode_value(self, idx: int, encoded: float):
        spec = self.features[idx]
        if spec.is_numeric:
            return float(encoded)
        return spec.domain[int(round(encoded))]

    def decode_row(self, x: np.ndarray) -> dict:
        return {f.name: self.decode_value(i, x[i]) for i, f in enumerate(self.features)}

    def fingerprint(self) -> str:
        payload = {
            "features": [[f.name, f.kind, list(f.domain)] for f in self.features],
            "classes": list(self.classes),
            "target": self.target_name,
        }
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class Instance:
    """Feature values aligned to schema order: raw values plus encoded vector."""

    values: tuple
    x: np.ndarray
    schema_fingerprint: str
    warnings: tuple[str, ...] = ()

    def as_dict(self, schema: Schema) -> dict:
        return dict(zip(schema.feature_names, self.values))


@dataclass(frozen=True)
class Dataset:
    schema: Schema
    X: np.ndarray  # encoded feature matrix, categoricals as integer codes
    y: np.ndarray  # class indices

    def __post_init__(self):
        if len(self.X) != len(self.y):
            raise SchemaError("row/label count mismatch")

    def __len__(self) -> int:
        return len(self.X)

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Dataset)
            and self.schema == other.schema
            and np.array_equal(self.X, other.X)
            and np.array_equal(self.y, other.y)
        )


@dataclass(frozen=True)
class DataSheet:
    source: str
    label_provenance: str
    biases_limitations: str
    sample_size: int
    excluded_data: str


def load_schema(path) -> Schema:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    features = tuple(
        FeatureSpec(
            name=f["name"],
            kind=f["kind"],
            domain=tuple(f["range"]) if f["kind"] == NUMERIC else tuple(f["categories"]),
            mutable=f.get("mutable", True),
            precision=f.get("precision"),
        )
        for f in raw["features"]
    )
    return Schema(
        features=features,
        classes=tuple(raw["classes"]),
        target_name=raw["target_name"],
        vocabulary=raw.get("vocabulary", {}),
    )


def load_datasheet(path, dataset: Dataset | None = None) -> DataSheet:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    sheet = DataSheet(
        source=raw["source"],
        label_provenance=raw["label_provenance"],
        biases_limitations=raw["biases_limitations"],
        sample_size=int(raw["sample_size"]),
        excluded_data=raw["excluded_data"],
    )
    if dataset is not None and sheet.sample_size != len(dataset):
        raise SchemaError(
            f"datasheet sample_size {sheet.sample_size} != dataset rows {len(dataset)}"
        )
    return sheet


def load_csv(path, schema: Schema) -> Dataset:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DataLoadError(f"{path}: empty file") from None
        expected = schema.feature_names + [schema.target_name]
        if header != expected:
            raise DataLoadError(f"{path}: header mismatch, expected {expected}, got {header}")

        rows: list[list[float]] = []
        labels: list[int] = []
        problems: list[str] = []
        for lineno, record in enumerate(reader, start=2):
            if len(record) != len(expected):
                problems.append(f"row {lineno}: expected {len(expected)} cells, got {len(record)}")
                continue
            encoded = []
            ok = True
            for idx, cell in enumerate(record[:-1]):
                spec = schema.features[idx]
                if spec.is_numeric:
                    try:
                        encoded.append(float(cell))
                    except ValueError:
                        problems.append(f"row {lineno}: {spec.name}={cell!r} is not numeric")
                        ok = False
                else:
                    if cell in spec.domain:
                        encoded.append(float(spec.domain.index(cell)))
                    else:
                        problems.append(f"row {lineno}: {spec.name}={cell!r} not in domain")
                        ok = False
            label = record[-1]
            if label in schema.classes:
                if ok:
                    rows.append(encoded)
                    labels.append(schema.classes.index(label))
            else:
                problems.append(f"row {lineno}: {schema.target_name}={label!r} not a known class")

        if problems:
            raise DataLoadError(f"{path}: " + "; ".join(problems))
        if not rows:
            raise DataLoadError(f"{path}: no data rows")

    return Dataset(schema=schema, X=np.asarray(rows, dtype=float), y=np.asarray(labels, dtype=int))


def save_csv(path, dataset: Dataset) -> None:
    schema = dataset.schema
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(schema.feature_names + [schema.target_name])
        for x, yi in zip(dataset.X, dataset.y):
            cells = []
            for idx, spec in enumerate(schema.features):
                if spec.is_numeric:
                    cells.append(format_number(x[idx]))
                else:
                    cells.append(spec.domain[int(x[idx])])
            cells.append(schema.classes[int(yi)])
            writer.writerow(cells)


def format_number(value: float) -> str:
    """Render a float without a spurious trailing '.0' for whole numbers."""
    if float(value) == int(value):
        return str(int(value))
    return repr(float(value))


def validate_instance(schema: Schema, named_values: Mapping[str, Any]) -> Instance:
    problems = []
    warnings = []
    known = set(schema.feature_names)
    for name in named_values:
        if name not in known:
            problems.append(f"unknown feature: {name}")
    raw: list = []
    encoded: list[float] = []
    for idx, spec in enumerate(schema.features):
        if spec.name not in named_values:
            problems.append(f"missing: {spec.name}")
            raw.append(None)
            encoded.append(np.nan)
            continue
        value = named_values[spec.name]
        if spec.is_numeric:
            try:
                num = float(value)
            except (TypeError, ValueError):
                problems.append(f"{spec.name}: expected a number, got {value!r}")
                raw.append(None)
                encoded.append(np.nan)
                continue
            lo, hi = spec.domain
            if not (lo <= num <= hi):
                warnings.append(f"{spec.name}={format_number(num)} outside training range [{format_number(lo)}, {format_number(hi)}]")
            raw.append(num)
            encoded.append(num)
        else:
            if not isinstance(value, str) or value not in spec.domain:
                problems.append(f"{spec.name}: {value!r} not in {list(spec.domain)}")
                raw.append(None)
                encoded.append(np.nan)
            else:
                raw.append(value)
                encoded.append(float(spec.domain.index(value)))
    if problems:
        raise InstanceError(problems)
    return Instance(
        values=tuple(raw),
        x=np.asarray(encoded, dtype=float),
        schema_fingerprint=schema.fingerprint(),
        warnings=tuple(warnings),
    )


def instance_from_array(schema: Schema, x: np.ndarray, warnings: Iterable[str] = ()) -> Instance:
    raw = tuple(schema.decode_value(i, x[i]) for i in range(len(schema.features)))
    return Instance(
        values=raw,
        x=np.asarray(x, dtype=float).copy(),
        schema_fingerprint=schema.fingerprint(),
        warnings=tuple(warnings),
    )


class PerturbationSampler:
    """Draws feature values independently from the dataset's empirical marginals.

    Deterministic for a fixed seed; `stream(key)` hands out independent seeded
    generators so concurrent consumers never share RNG state.
    """

    def __init__(self, dataset: Dataset, seed: int, background_size: int = 100):
        if len(dataset) == 0:
            raise ValueError("dataset is empty")
        self.schema = dataset.schema
        self.seed = int(seed)
        self.columns = [np.sort(dataset.X[:, j]) for j in range(dataset.X.shape[1])]
        rng = np.random.default_rng(np.random.SeedSequence([self.seed, 0xB46]))
        n = len(dataset)
        size = min(background_size, n)
        pick = rng.choice(n, size=size, replace=False)
        self.background = dataset.X[np.sort(pick)].copy()

    def stream(self, key: int) -> np.random.Generator:
        return np.random.default_rng(np.random.SeedSequence([self.seed, int(key)]))

    def sample_column(self, j: int, n: int, rng: np.random.Generator) -> np.ndarray:
        return rng.choice(self.columns[j], size=n, replace=True)

    def sample_matrix(self, n: int, rng: np.random.Generator) -> np.ndarray:
        out = np.empty((n, len(self.columns)))
        for j in range(len(self.columns)):
            out[:, j] = self.sample_column(j, n, rng)
        return out


def marginal_sampler(dataset: Dataset, seed: int, background_size: int = 100) -> PerturbationSampler:
    return PerturbationSampler(dataset, seed, background_size)
