"""Additive feature attribution for a single prediction.

Two independent routes to the same quantity: a weighted-least-squares solver
over coalition masks (exact enumeration below a dimension cutoff, kernel-weight
sampling above it), and a direct factorial-sum oracle used to test it. Both
impute absent features by marginal substitution from background rows.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np


class SingularSystemError(ValueError):
    pass


@dataclass
class ShapConfig:
    n_samples: int = 2048
    exact_below: int = 12  # enumerate all coalitions when M <= this
    seed: int = 0


@dataclass
class Attribution:
    base_value: float
    phi: np.ndarray
    target_class: object
    instance_x: np.ndarray
    feature_names: tuple[str, ...]

    def model_output(self) -> float:
        return float(self.base_value + self.phi.sum())

    def ranked(self) -> list[tuple[str, float]]:
        order = np.argsort(-np.abs(self.phi), kind="stable")
        return [(self.feature_names[i], float(self.phi[i])) for i in order]


def _target_fn(model, target_class) -> Callable[[np.ndarray], np.ndarray]:
    """Scalar output per row: target-class probability, or the callable itself."""
    if hasattr(model, "predict_proba"):
        if hasattr(model, "schema") and isinstance(target_class, str):
            idx = model.schema.class_index(target_class)
        else:
            idx = int(target_class)
        return lambda X: np.asarray(model.predict_proba(X))[:, idx]
    if callable(model):
        return lambda X: np.asarray(model(X), dtype=float).reshape(-1)
    raise TypeError("model must expose predict_proba or be callable")


def _default_names(m: int, names: Sequence[str] | None) -> tuple[str, ...]:
    if names is not None:
        return tuple(names)
    return tuple(f"f{i}" for i in range(m))


def _masked_values(f, x: np.ndarray, background: np.ndarray, masks: np.ndarray) -> np.ndarray:
    """v(S) per mask row: mean over background rows with S features set to x."""
    n_masks = len(masks)
    B = len(background)
    tiled = np.repeat(background[None, :, :], n_masks, axis=0)  # (n_masks, B, d)
    sel = masks[:, None, :].astype(bool)
    tiled = np.where(sel, x[None, None, :], tiled)
    flat = tiled.reshape(n_masks * B, -1)
    out = f(flat).reshape(n_masks, B)
    return out.mean(axis=1)


def _kernel_weight(m: int, s: int) -> float:
    return (m - 1) / (math.comb(m, s) * s * (m - s))


def kernel_shap(
    model,
    x: np.ndarray,
    background: np.ndarray,
    target_class=None,
    config: ShapConfig | None = None,
    feature_names: Sequence[str] | None = None,
) -> Attribution:
    config = config or ShapConfig()
    x = np.asarray(x, dtype=float).reshape(-1)
    background = np.atleast_2d(np.asarray(background, dtype=float))
    if len(background) == 0:
        raise ValueError("background set is empty")
    m = len(x)
    f = _target_fn(model, target_class)

    base = float(f(background).mean())
    full = float(f(x[None, :])[0])
    delta = full - base
    names = _default_names(m, feature_names)

    if m == 1:
        return Attribution(base, np.array([delta]), target_class, x, names)

    if m <= config.exact_below:
        masks = np.array(
            [[(code >> i) & 1 for i in range(m)] for code in range(1, 2**m - 1)],
            dtype=float,
        )
        weights = np.array([_kernel_weight(m, int(row.sum())) for row in masks])
    else:
        masks, weights = _sample_coalitions(m, config.n_samples, config.seed, x)

    values = _masked_values(f, x, background, masks)

    # enforce local accuracy by eliminating the last coefficient:
    # phi_last = delta - sum(others)
    Z = masks[:, :-1] - masks[:, -1:]
    target = (values - base) - masks[:, -1] * delta
    sw = np.sqrt(weights)
    A = Z * sw[:, None]
    b = target * sw
    solution, _, rank, _ = np.linalg.lstsq(A, b, rcond=None)
    if rank < m - 1:
        raise SingularSystemError(
            f"coalition system is rank-deficient ({rank} < {m - 1}); increase n_samples"
        )
    phi = np.empty(m)
    phi[:-1] = solution
    phi[-1] = delta - solution.sum()
    return Attribution(base, phi, target_class, x, names)


def _sample_coalitions(m: int, n_samples: int, seed: int, x: np.ndarray):
    """Paired kernel-weighted coalition draws, aggregated by duplicate mask."""
    key = int.from_bytes(hashlib.sha256(x.tobytes()).digest()[:6], "big")
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), key]))
    sizes = np.arange(1, m)
    size_w = (m - 1) / (sizes * (m - sizes))
    size_p = size_w / size_w.sum()
    counts: dict[tuple[int, ...], int] = {}
    drawn = 0
    while drawn < n_samples:
        s = int(rng.choice(sizes, p=size_p))
        members = rng.choice(m, size=s, replace=False)
        mask = np.zeros(m, dtype=int)
        mask[members] = 1
        for candidate in (tuple(mask), tuple(1 - mask)):
            if 0 < sum(candidate) < m:
                counts[candidate] = counts.get(candidate, 0) + 1
                drawn += 1
    masks = np.array(sorted(counts), dtype=float)
    weights = np.array([counts[tuple(int(v) for v in row)] for row in masks], dtype=float)
    return masks, weights


def exact_shapley(
    model,
    x: np.ndarray,
    background: np.ndarray,
    target_class=None,
    feature_names: Sequence[str] | None = None,
) -> Attribution:
    """Direct Shapley sum over all subsets; refuses beyond 12 features."""
    x = np.asarray(x, dtype=float).reshape(-1)
    background = np.atleast_2d(np.asarray(background, dtype=float))
    m = len(x)
    if m > 12:
        raise ValueError(f"exact enumeration over {m} features is intractable (limit 12)")
    f = _target_fn(model, target_class)

    # subset value table, computed row by row on purpose: this is the oracle
    values = np.empty(2**m)
    for code in range(2**m):
        rows = background.copy()
        for i in range(m):
            if (code >> i) & 1:
                rows[:, i] = x[i]
        values[code] = float(f(rows).mean())

    fact = [math.factorial(i) for i in range(m + 1)]
    phi = np.zeros(m)
    for i in range(m):
        bit = 1 << i
        for code in range(2**m):
            if code & bit:
                continue
            s = bin(code).count("1")
            weight = fact[s] * fact[m - s - 1] / fact[m]
            phi[i] += weight * (values[code | bit] - values[code])
    names = _default_names(m, feature_names)
    return Attribution(values[0], phi, target_class, x, names)
