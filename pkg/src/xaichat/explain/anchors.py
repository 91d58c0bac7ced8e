"""Anchor rules: feature conditions that pin a prediction with high precision.

Beam construction over candidate predicates taken from the instance itself:
category equality for categorical features, the enclosing quartile bin for
numeric ones. Candidate precision is estimated on marginal perturbation draws
held fixed on the rule, with a Hoeffding lower bound deciding success.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field

import numpy as np

from ..tabular import PerturbationSampler


@dataclass(frozen=True)
class Predicate:
    feature: str
    feature_idx: int
    kind: str  # "eq" or "interval"
    value: object = None  # category code for eq
    lo: float = -np.inf
    hi: float = np.inf

    def describe(self, schema) -> str:
        spec = schema.features[self.feature_idx]
        if self.kind == "eq":
            return f"{self.feature} = {spec.domain[int(self.value)]}"
        parts = []
        if np.isfinite(self.lo):
            parts.append(f"{self.feature} > {_fmt(self.lo)}")
        if np.isfinite(self.hi):
            parts.append(f"{self.feature} <= {_fmt(self.hi)}")
        return " and ".join(parts) if parts else f"{self.feature} = any"

    def holds(self, column: np.ndarray) -> np.ndarray:
        if self.kind == "eq":
            return column.astype(int) == int(self.value)
        return (column > self.lo) & (column <= self.hi)


def _fmt(v: float) -> str:
    return f"{v:.4g}"


@dataclass
class AnchorRule:
    predicates: tuple[Predicate, ...]
    est_precision: float
    est_coverage: float
    confidence: float
    success: bool
    target_class: object = None


@dataclass
class AnchorConfig:
    beam_width: int = 2
    max_predicates: int = 4
    batch: int = 512
    confirm_batch: int = 2048


def _candidate_predicates(x: np.ndarray, sampler: PerturbationSampler) -> list[Predicate]:
    schema = sampler.schema
    out = []
    for j, spec in enumerate(schema.features):
        if spec.is_numeric:
            col = sampler.columns[j]
            qs = np.unique(np.quantile(col, [0.25, 0.5, 0.75]))
            edges = np.concatenate(([-np.inf], qs, [np.inf]))
            pos = int(np.searchsorted(edges[1:-1], x[j], side="left"))
            out.append(
                Predicate(spec.name, j, "interval", lo=float(edges[pos]), hi=float(edges[pos + 1]))
            )
        else:
            out.append(Predicate(spec.name, j, "eq", value=int(x[j])))
    return out


def _draw_conditioned(rule: tuple[Predicate, ...], sampler: PerturbationSampler,
                      n: int, rng: np.random.Generator) -> np.ndarray:
    Z = sampler.sample_matrix(n, rng)
    for pred in rule:
        j = pred.feature_idx
        if pred.kind == "eq":
            Z[:, j] = float(pred.value)
        else:
            col = sampler.columns[j]
            inside = col[(col > pred.lo) & (col <= pred.hi)]
            if len(inside) == 0:
                inside = col
            Z[:, j] = rng.choice(inside, size=n, replace=True)
    return Z


def _hoeffding_lcb(p_hat: float, n: int, delta: float) -> float:
    return p_hat - math.sqrt(math.log(1.0 / delta) / (2.0 * n))


def find_anchor(
    model,
    x: np.ndarray,
    sampler: PerturbationSampler,
    tau: float = 0.95,
    delta: float = 0.05,
    config: AnchorConfig | None = None,
) -> AnchorRule:
    config = config or AnchorConfig()
    x = np.asarray(x, dtype=float).reshape(-1)
    predict = model.predict if hasattr(model, "predict") else model
    target = int(np.asarray(predict(x[None, :])).reshape(-1)[0])

    key = int.from_bytes(hashlib.sha256(x.tobytes()).digest()[:6], "big")
    rng = sampler.stream(key)

    def precision(rule: tuple[Predicate, ...], n: int) -> float:
        Z = _draw_conditioned(rule, sampler, n, rng)
        pred = np.asarray(predict(Z)).reshape(-1)
        return float(np.mean(pred == target))

    def coverage(rule: tuple[Predicate, ...], n: int) -> float:
        if not rule:
            return 1.0
        Z = sampler.sample_matrix(n, rng)
        ok = np.ones(n, dtype=bool)
        for pred in rule:
            ok &= pred.holds(Z[:, pred.feature_idx])
        return float(np.mean(ok))

    candidates = _candidate_predicates(x, sampler)

    def confirmed(rule: tuple[Predicate, ...]) -> AnchorRule | None:
        p = precision(rule, config.confirm_batch)
        if _hoeffding_lcb(p, config.confirm_batch, delta) >= tau:
            return AnchorRule(
                predicates=rule,
                est_precision=p,
                est_coverage=coverage(rule, config.confirm_batch),
                confidence=1.0 - delta,
                success=True,
                target_class=target,
            )
        return None

    done = confirmed(())
    if done is not None:
        return done

    beam: list[tuple[float, tuple[Predicate, ...]]] = [(0.0, ())]
    best_seen: tuple[float, tuple[Predicate, ...]] = (0.0, ())
    for _ in range(config.max_predicates):
        scored: list[tuple[float, tuple[Predicate, ...]]] = []
        seen: set[tuple[int, ...]] = set()
        for _, rule in beam:
            used = {p.feature_idx for p in rule}
            for cand in candidates:
                if cand.feature_idx in used:
                    continue
                extended = tuple(sorted(rule + (cand,), key=lambda p: p.feature_idx))
                sig = tuple(p.feature_idx for p in extended)
                if sig in seen:
                    continue
                seen.add(sig)
                scored.append((precision(extended, config.batch), extended))
        if not scored:
            break
        scored.sort(key=lambda t: (-t[0], len(t[1]), tuple(p.feature_idx for p in t[1])))
        if scored[0][0] > best_seen[0]:
            best_seen = scored[0]
        top_p, top_rule = scored[0]
        # screen on the point estimate; the confirmation batch owns the bound
        if top_p >= tau:
            done = confirmed(top_rule)
            if done is not None:
                return done
        beam = scored[: config.beam_width]

    # nothing reached tau: report the best rule found, flagged unsuccessful
    p_hat, rule = best_seen
    final_p = precision(rule, config.confirm_batch) if rule else p_hat
    return AnchorRule(
        predicates=rule,
        est_precision=final_p,
        est_coverage=coverage(rule, config.confirm_batch),
        confidence=1.0 - delta,
        success=False,
        target_class=target,
    )
