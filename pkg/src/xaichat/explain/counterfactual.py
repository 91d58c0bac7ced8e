"""Counterfactual search: minimally changed instances that flip the prediction.

A seeded genetic search over mutable features scores candidates by a validity
hinge plus MAD-scaled proximity, minus a diversity bonus against the current
elites. Valid candidates are polished afterwards (greedy feature reverts and a
numeric shrink toward the original), so reported changes stay minimal. A
single-feature variant sweeps one feature's domain instead.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

import numpy as np

from ..tabular import PerturbationSampler, Schema


@dataclass(frozen=True)
class CfConstraints:
    allowed_features: frozenset[str] | None = None
    immutable_features: frozenset[str] = frozenset()
    k: int = 3

    def __post_init__(self):
        if self.allowed_features is not None:
            clash = self.allowed_features & self.immutable_features
            if clash:
                raise ValueError(f"features both allowed and immutable: {sorted(clash)}")


@dataclass
class CfConfig:
    pop_size: int = 50
    generations: int = 100
    lambda_prox: float = 0.5
    lambda_div: float = 0.1
    seed: int = 0
    mutation_rate: float = 0.3
    hinge_margin: float = 0.05


@dataclass
class Counterfactual:
    cf_x: np.ndarray
    target_class: object
    changed: list[tuple[str, object, object]]
    sparsity: int
    proximity: float


@dataclass
class CfNotFound:
    best_x: np.ndarray
    best_target_prob: float
    message: str


def _predict(model, X: np.ndarray) -> np.ndarray:
    fn = model.predict if hasattr(model, "predict") else model
    return np.asarray(fn(np.atleast_2d(X))).reshape(-1)


def _target_proba(model, X: np.ndarray, target: int) -> np.ndarray:
    X = np.atleast_2d(X)
    if hasattr(model, "predict_proba"):
        return np.asarray(model.predict_proba(X))[:, target]
    return (_predict(model, X) == target).astype(float)


def _other_proba(model, X: np.ndarray, target: int) -> np.ndarray:
    X = np.atleast_2d(X)
    if hasattr(model, "predict_proba"):
        P = np.asarray(model.predict_proba(X)).copy()
        P[:, target] = -np.inf
        return P.max(axis=1)
    return (_predict(model, X) != target).astype(float)


class _Space:
    """Feature-wise scales, clamp bounds and mutability for the search."""

    def __init__(self, schema: Schema, sampler: PerturbationSampler,
                 constraints: CfConstraints):
        self.schema = schema
        self.numeric = np.array([f.is_numeric for f in schema.features])
        self.scales = np.ones(len(schema.features))
        self.clamp_lo = np.zeros(len(schema.features))
        self.clamp_hi = np.zeros(len(schema.features))
        for j, spec in enumerate(schema.features):
            if spec.is_numeric:
                col = sampler.columns[j]
                mad = float(np.median(np.abs(col - np.median(col))))
                scale = mad if mad > 0 else float(np.std(col))
                self.scales[j] = scale if scale > 0 else 1.0
                lo, hi = spec.domain
                spread = (hi - lo) or 1.0
                self.clamp_lo[j] = lo - 0.2 * spread
                self.clamp_hi[j] = hi + 0.2 * spread
        self.mutable = []
        for j, spec in enumerate(schema.features):
            name = spec.name
            if not spec.mutable or name in constraints.immutable_features:
                continue
            if constraints.allowed_features is not None and name not in constraints.allowed_features:
                continue
            self.mutable.append(j)

    def proximity(self, x: np.ndarray, Z: np.ndarray) -> np.ndarray:
        Z = np.atleast_2d(Z)
        num = self.numeric
        out = np.zeros(len(Z))
        if num.any():
            out += np.sum(np.abs(Z[:, num] - x[num]) / self.scales[num], axis=1)
        if (~num).any():
            out += np.sum(Z[:, ~num].astype(int) != x[~num].astype(int), axis=1)
        return out

    def random_value(self, j: int, sampler: PerturbationSampler,
                     rng: np.random.Generator) -> float:
        spec = self.schema.features[j]
        if spec.is_numeric:
            if rng.random() < 0.5:
                v = float(rng.choice(sampler.columns[j]))
            else:
                v = float(rng.uniform(self.clamp_lo[j], self.clamp_hi[j]))
            if spec.precision is not None:
                v = round(v, spec.precision)
            return v
        return float(rng.integers(0, len(spec.domain)))


def _rng_for(x: np.ndarray, seed: int, salt: int) -> np.random.Generator:
    key = int.from_bytes(hashlib.sha256(x.tobytes()).digest()[:6], "big")
    return np.random.default_rng(np.random.SeedSequence([int(seed), key, salt]))


def _describe(schema: Schema, x: np.ndarray, cf_x: np.ndarray) -> list[tuple[str, object, object]]:
    changed = []
    for j, spec in enumerate(schema.features):
        if spec.is_numeric:
            differs = float(x[j]) != float(cf_x[j])
        else:
            differs = int(x[j]) != int(cf_x[j])
        if differs:
            changed.append((spec.name, schema.decode_value(j, x[j]), schema.decode_value(j, cf_x[j])))
    return changed


def _finish(schema: Schema, space: _Space, x: np.ndarray, cf_x: np.ndarray,
            target: int) -> Counterfactual:
    changed = _describe(schema, x, cf_x)
    return Counterfactual(
        cf_x=cf_x.copy(),
        target_class=target,
        changed=changed,
        sparsity=len(changed),
        proximity=float(space.proximity(x, cf_x)[0]),
    )


def _polish(model, space: _Space, x: np.ndarray, cand: np.ndarray, target: int) -> np.ndarray:
    """Revert unneeded changes, then shrink numeric moves toward the original."""
    cand = cand.copy()
    for j in space.mutable:
        if cand[j] == x[j]:
            continue
        trial = cand.copy()
        trial[j] = x[j]
        if _predict(model, trial)[0] == target:
            cand = trial
    for j in space.mutable:
        if not space.numeric[j] or cand[j] == x[j]:
            continue
        lo_ok, hi_bad = cand[j], x[j]  # lo_ok keeps the target class
        for _ in range(40):
            mid = (lo_ok + hi_bad) / 2.0
            trial = cand.copy()
            trial[j] = mid
            if _predict(model, trial)[0] == target:
                lo_ok = mid
            else:
                hi_bad = mid
        spec = space.schema.features[j]
        if spec.precision is not None:
            rounded = np.round(lo_ok, spec.precision)
            trial = cand.copy()
            trial[j] = rounded
            if _predict(model, trial)[0] == target:
                lo_ok = rounded
        cand[j] = lo_ok
    return cand


def counterfactuals(
    model,
    x: np.ndarray,
    target_class: int,
    constraints: CfConstraints | None = None,
    config: CfConfig | None = None,
    sampler: PerturbationSampler | None = None,
) -> list[Counterfactual] | CfNotFound:
    constraints = constraints or CfConstraints()
    config = config or CfConfig()
    if sampler is None:
        raise ValueError("counterfactual search needs a perturbation sampler")
    schema = sampler.schema
    x = np.asarray(x, dtype=float).reshape(-1)
    target = int(target_class)
    current = int(_predict(model, x)[0])
    if current == target:
        raise ValueError(
            f"instance is already predicted as class {schema.classes[target]!r}"
        )
    space = _Space(schema, sampler, constraints)
    if not space.mutable:
        return CfNotFound(x.copy(), float(_target_proba(model, x, target)[0]),
                          "no mutable features available under the given constraints")

    rng = _rng_for(x, config.seed, target)
    pop = np.repeat(x[None, :], config.pop_size, axis=0)
    for i in range(config.pop_size):
        n_touch = int(rng.integers(1, len(space.mutable) + 1))
        for j in rng.choice(space.mutable, size=n_touch, replace=False):
            pop[i, j] = space.random_value(int(j), sampler, rng)

    archive: dict[bytes, np.ndarray] = {}
    best_invalid = (np.inf, x.copy())  # (hinge, candidate)

    for _ in range(config.generations):
        p_target = _target_proba(model, pop, target)
        p_other = _other_proba(model, pop, target)
        hinge = np.maximum(0.0, config.hinge_margin + p_other - p_target)
        prox = space.proximity(x, pop)
        valid = _predict(model, pop) == target
        for row in pop[valid]:
            archive.setdefault(row.tobytes(), row.copy())
        if len(archive) > 4 * config.pop_size:
            trimmed = sorted(archive.values(), key=lambda r: space.proximity(x, r)[0])
            archive = {row.tobytes(): row for row in trimmed[: 2 * config.pop_size]}
        worst = int(np.argmin(hinge))
        if hinge[worst] < best_invalid[0]:
            best_invalid = (float(hinge[worst]), pop[worst].copy())

        elites = sorted(archive.values(), key=lambda r: space.proximity(x, r)[0])
        elites = elites[: constraints.k]
        fitness = hinge + config.lambda_prox * prox
        if elites:
            E = np.stack(elites)
            div = np.stack([space.proximity(row, E).mean() for row in pop])
            fitness = fitness - config.lambda_div * div

        order = np.argsort(fitness, kind="stable")
        keep = max(2, config.pop_size // 5)
        parents = pop[order[:keep]]
        children = np.empty_like(pop)
        children[:keep] = parents
        for i in range(keep, config.pop_size):
            a, b = rng.integers(0, keep, size=2)
            mask = rng.random(len(x)) < 0.5
            child = np.where(mask, parents[a], parents[b])
            for j in space.mutable:
                if rng.random() < config.mutation_rate:
                    child[j] = space.random_value(int(j), sampler, rng)
            children[i] = child
        pop = children

    if not archive:
        return CfNotFound(best_invalid[1], float(_target_proba(model, best_invalid[1], target)[0]),
                          "search finished without a valid counterfactual")

    shortlist = sorted(archive.values(), key=lambda r: space.proximity(x, r)[0])
    shortlist = shortlist[: max(5 * constraints.k, 10)]
    polished: dict[bytes, np.ndarray] = {}
    for row in shortlist:
        better = _polish(model, space, x, row, target)
        if _predict(model, better)[0] == target:
            polished.setdefault(better.tobytes(), better)
    results = sorted(
        (_finish(schema, space, x, row, target) for row in polished.values()),
        key=lambda c: (c.proximity, c.sparsity),
    )
    return results[: constraints.k]


def constrained_counterfactual(
    model,
    x: np.ndarray,
    target_class: int,
    feature: str,
    sampler: PerturbationSampler,
    resolution: int = 200,
) -> Counterfactual | CfNotFound:
    schema = sampler.schema
    x = np.asarray(x, dtype=float).reshape(-1)
    target = int(target_class)
    j = schema.index_of(feature)
    spec = schema.features[j]
    if not spec.mutable:
        raise ValueError(f"feature {feature!r} is marked immutable")
    current = int(_predict(model, x)[0])
    if current == target:
        raise ValueError(
            f"instance is already predicted as class {schema.classes[target]!r}"
        )
    space = _Space(schema, sampler, CfConstraints(allowed_features=frozenset({feature})))

    if spec.is_numeric:
        grid = np.linspace(space.clamp_lo[j], space.clamp_hi[j], resolution)
        trials = np.repeat(x[None, :], len(grid), axis=0)
        trials[:, j] = grid
        valid = _predict(model, trials) == target
        if not valid.any():
            best = int(np.argmax(_target_proba(model, trials, target)))
            return CfNotFound(trials[best], float(_target_proba(model, trials[best], target)[0]),
                              f"no value of {feature} flips the prediction")
        hits = grid[valid]
        best_value = hits[int(np.argmin(np.abs(hits - x[j])))]
        cand = x.copy()
        cand[j] = best_value
        cand = _polish(model, space, x, cand, target)
        return _finish(schema, space, x, cand, target)

    codes = [c for c in range(len(spec.domain)) if c != int(x[j])]
    trials = np.repeat(x[None, :], len(codes), axis=0)
    trials[:, j] = codes
    valid = _predict(model, trials) == target
    if not valid.any():
        best = int(np.argmax(_target_proba(model, trials, target)))
        return CfNotFound(trials[best], float(_target_proba(model, trials[best], target)[0]),
                          f"no value of {feature} flips the prediction")
    probs = _target_proba(model, trials, target)
    probs[~valid] = -np.inf
    pick = int(np.argmax(probs))  # argmax keeps the lowest code on ties
    return _finish(schema, space, x, trials[pick], target)
