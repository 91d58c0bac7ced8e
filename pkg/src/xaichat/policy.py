"""Dialog policy: map a matched intent plus slots to an explanation task and run it.

The routing table ships as data (one row per reference question). Execution
dispatches to the explainer/model/metadata operation for the route and wraps
the result as an answer payload with provenance; anything the system cannot do
comes back as an honest notice instead of an error.
"""

from __future__ import annotations

import json
import traceback
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .explain import (
    AnchorConfig,
    CfConfig,
    CfConstraints,
    CfNotFound,
    ShapConfig,
    constrained_counterfactual,
    counterfactuals,
    find_anchor,
    kernel_shap,
)
from .forest import ModelCard, RandomForest
from .nlu.preprocess import Slots
from .tabular import DataSheet, Dataset, Instance, InstanceError, PerturbationSampler, Schema, validate_instance

ROUTES = (
    "FeatureImportance",
    "TwoInstanceImportance",
    "Counterfactual",
    "ConstrainedCounterfactual",
    "Anchor",
    "Prediction",
    "WhatIfPrediction",
    "ModelCardLookup",
    "DataSheetLookup",
    "ExternalKnowledge",
    "ExternalValidation",
    "SystemContext",
    "Unsupported",
)

INSTANCE_ROUTES = frozenset({
    "FeatureImportance", "TwoInstanceImportance", "Counterfactual",
    "ConstrainedCounterfactual", "Anchor", "WhatIfPrediction",
})


class RoutingError(ValueError):
    pass


@dataclass(frozen=True)
class RouteSpec:
    question_id: int
    route: str
    field: Optional[str] = None
    required_slots: tuple[str, ...] = ()
    caveat: bool = False
    notice: Optional[str] = None

    def __post_init__(self):
        if self.route not in ROUTES:
            raise RoutingError(f"question {self.question_id}: unknown route {self.route!r}")


def load_routing_table(path) -> dict[int, RouteSpec]:
    table: dict[int, RouteSpec] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            rec = json.loads(line)
            spec = RouteSpec(
                question_id=int(rec["id"]),
                route=rec["route"],
                field=rec.get("field"),
                required_slots=tuple(rec.get("required_slots", [])),
                caveat=bool(rec.get("caveat", False)),
                notice=rec.get("notice"),
            )
            if spec.question_id in table:
                raise RoutingError(f"{path}:{lineno}: duplicate routing row for id {spec.question_id}")
            table[spec.question_id] = spec
    return table


def check_total(table: Mapping[int, RouteSpec], label_map: Mapping[str, frozenset[int]]) -> None:
    """Every label's ids must exist and agree on one route."""
    for label, ids in label_map.items():
        missing = [i for i in ids if i not in table]
        if missing:
            raise RoutingError(f"label {label}: ids {missing} missing from the routing table")
        routes = {(table[i].route, table[i].field) for i in ids}
        if len(routes) > 1:
            raise RoutingError(f"label {label}: ids disagree on route: {sorted(routes)}")


@dataclass(frozen=True)
class SessionView:
    """The slice of session state the policy needs."""

    current_instance: Optional[Instance] = None
    second_instance: Optional[Instance] = None
    current_prediction: Optional[str] = None


@dataclass(frozen=True)
class ExplanationTask:
    route: RouteSpec
    slots: Slots
    question_id: int
    instance: Optional[Instance] = None
    second_instance: Optional[Instance] = None
    target_class: Optional[str] = None
    overrides: Optional[dict] = None
    question_text: str = ""  # original user wording, for glossary lookups
    clarification: Optional[str] = None  # set => ask the user instead of executing

    @property
    def needs_clarification(self) -> bool:
        return self.clarification is not None


@dataclass
class AnswerPayload:
    variant: str
    data: dict = field(default_factory=dict)
    provenance: dict = field(default_factory=dict)


def _clarify(spec: RouteSpec, slots: Slots, qid: int, text: str) -> ExplanationTask:
    return ExplanationTask(route=spec, slots=slots, question_id=qid, clarification=text)


def _resolve_target_class(schema: Schema, slots: Slots, predicted: str) -> Optional[str]:
    for label in slots.classes:
        if label != predicted:
            return label
    if len(schema.classes) == 2:
        return next(c for c in schema.classes if c != predicted)
    return None


def route(label: str, slots: Slots, state: SessionView, *,
          table: Mapping[int, RouteSpec], schema: Schema,
          question_id: Optional[int] = None,
          label_map: Mapping[str, frozenset[int]] | None = None) -> ExplanationTask:
    if question_id is None:
        if label_map is None or label not in label_map:
            raise RoutingError(f"unknown intent label {label!r}")
        question_id = min(label_map[label])
    if question_id not in table:
        raise RoutingError(f"question id {question_id} missing from the routing table")
    spec = table[question_id]

    if spec.route in INSTANCE_ROUTES and state.current_instance is None:
        return _clarify(spec, slots, question_id,
                        "I need a profile first. Please enter the feature values to analyse.")

    instance = state.current_instance
    task = ExplanationTask(route=spec, slots=slots, question_id=question_id, instance=instance,
                           second_instance=state.second_instance)

    if spec.route == "ConstrainedCounterfactual":
        if not slots.features:
            return _clarify(spec, slots, question_id,
                            "Which feature should change? Please name one, e.g. "
                            f"{schema.feature_names[0]}.")
        target = _resolve_target_class(schema, slots, state.current_prediction or "")
        if target is None:
            return _clarify(spec, slots, question_id,
                            "Which class should the change aim for?")
        return ExplanationTask(route=spec, slots=slots, question_id=question_id,
                               instance=instance, target_class=target)

    if spec.route == "Counterfactual":
        if question_id == 52:
            if state.second_instance is None:
                return _clarify(spec, slots, question_id,
                                "Comparing two profiles needs a second one; please provide it.")
            return task
        mentioned = [c for c in slots.classes if c == state.current_prediction]
        target = _resolve_target_class(schema, slots, state.current_prediction or "")
        if target is None:
            if mentioned:
                return _clarify(spec, slots, question_id,
                                f"This profile is already predicted {state.current_prediction}; "
                                "which other class are you asking about?")
            return _clarify(spec, slots, question_id, "Which class should the change aim for?")
        return ExplanationTask(route=spec, slots=slots, question_id=question_id,
                               instance=instance, target_class=target)

    if spec.route == "TwoInstanceImportance" and state.second_instance is None:
        return _clarify(spec, slots, question_id,
                        "Comparing two profiles needs a second one; please provide it.")

    if spec.route == "WhatIfPrediction":
        if not slots.features or len(slots.features) != len(slots.values):
            return _clarify(spec, slots, question_id,
                            "Please phrase the change as feature and value, e.g. "
                            f"\"what if {schema.feature_names[0]} changes to ...\".")
        overrides = dict(zip(slots.features, slots.values))
        return ExplanationTask(route=spec, slots=slots, question_id=question_id,
                               instance=instance, overrides=overrides)

    if spec.route == "Prediction" and state.second_instance is None:
        return _clarify(spec, slots, question_id,
                        "Please provide the other profile you want a prediction for.")

    return task


@dataclass
class ExecutionContext:
    schema: Schema
    dataset: Dataset
    model: RandomForest
    model_card: ModelCard
    datasheet: DataSheet
    sampler: PerturbationSampler
    glossary: Mapping[str, str] = field(default_factory=dict)
    shap_config: ShapConfig = field(default_factory=ShapConfig)
    anchor_config: AnchorConfig = field(default_factory=AnchorConfig)
    cf_config: CfConfig = field(default_factory=CfConfig)
    cf_constraints: CfConstraints = field(default_factory=CfConstraints)
    anchor_tau: float = 0.95
    anchor_delta: float = 0.05


def _provenance(task: ExplanationTask) -> dict:
    return {"question_id": task.question_id, "route": task.route.route,
            "field": task.route.field}


def _attribution_payload(ctx: ExecutionContext, task: ExplanationTask,
                         instance: Instance) -> dict:
    predicted = ctx.model.predict_instance(instance)
    att = kernel_shap(
        ctx.model, instance.x, ctx.sampler.background, predicted,
        config=ctx.shap_config, feature_names=ctx.schema.feature_names,
    )
    return {"attribution": att, "predicted_class": predicted}


def execute(task: ExplanationTask, ctx: ExecutionContext) -> AnswerPayload:
    if task.needs_clarification:
        return AnswerPayload("clarification", {"text": task.clarification}, _provenance(task))
    try:
        return _execute(task, ctx)
    except Exception as err:  # surfaced as an apologetic payload, never a stack trace
        code = type(err).__name__
        traceback.clear_frames(err.__traceback__)
        return AnswerPayload("error", {"code": code}, _provenance(task))


def _execute(task: ExplanationTask, ctx: ExecutionContext) -> AnswerPayload:
    spec = task.route
    prov = _provenance(task)

    if spec.route == "FeatureImportance":
        data = _attribution_payload(ctx, task, task.instance)
        data["caveat"] = spec.caveat
        data["focus_features"] = list(task.slots.features)
        return AnswerPayload("attribution", data, prov)

    if spec.route == "TwoInstanceImportance":
        first = _attribution_payload(ctx, task, task.instance)
        second = _attribution_payload(ctx, task, task.second_instance)
        return AnswerPayload("two_attributions", {"first": first, "second": second}, prov)

    if spec.route == "Counterfactual":
        instance = task.instance
        if task.question_id == 52:
            pred_a = ctx.model.predict_instance(task.instance)
            pred_b = ctx.model.predict_instance(task.second_instance)
            if pred_a == pred_b:
                return AnswerPayload(
                    "clarification",
                    {"text": f"Both profiles are predicted {pred_a}, so there is no "
                             "difference to explain."},
                    prov,
                )
            target = pred_b
        else:
            target = task.target_class
        result = counterfactuals(
            ctx.model, instance.x, ctx.schema.class_index(target),
            ctx.cf_constraints, ctx.cf_config, ctx.sampler,
        )
        if isinstance(result, CfNotFound):
            return AnswerPayload("cf_not_found", {"target_class": target,
                                                  "message": result.message}, prov)
        return AnswerPayload("counterfactuals", {
            "items": result, "target_class": target, "original": instance,
        }, prov)

    if spec.route == "ConstrainedCounterfactual":
        feature = task.slots.features[0]
        result = constrained_counterfactual(
            ctx.model, task.instance.x, ctx.schema.class_index(task.target_class),
            feature, ctx.sampler,
        )
        if isinstance(result, CfNotFound):
            return AnswerPayload("cf_not_found", {
                "target_class": task.target_class, "feature": feature,
                "message": result.message,
            }, prov)
        return AnswerPayload("counterfactuals", {
            "items": [result], "target_class": task.target_class,
            "original": task.instance, "constrained_to": feature,
        }, prov)

    if spec.route == "Anchor":
        rule = find_anchor(ctx.model, task.instance.x, ctx.sampler,
                           tau=ctx.anchor_tau, delta=ctx.anchor_delta,
                           config=ctx.anchor_config)
        predicted = ctx.model.predict_instance(task.instance)
        return AnswerPayload("anchor", {"rule": rule, "predicted_class": predicted}, prov)

    if spec.route == "Prediction":
        instance = task.second_instance
        predicted = ctx.model.predict_instance(instance)
        proba = ctx.model.predict_proba_instance(instance)
        return AnswerPayload("prediction", {
            "predicted_class": predicted,
            "probability": float(proba[ctx.schema.class_index(predicted)]),
            "instance": instance, "warnings": list(instance.warnings),
        }, prov)

    if spec.route == "WhatIfPrediction":
        return answer_whatif(ctx, task, task.instance, task.overrides)

    if spec.route == "ModelCardLookup":
        return AnswerPayload("metadata", {"text": ctx.model_card.field_text(spec.field)}, prov)

    if spec.route == "DataSheetLookup":
        sheet = ctx.datasheet
        texts = {
            "source": sheet.source,
            "label_provenance": sheet.label_provenance,
            "biases_limitations": sheet.biases_limitations,
            "excluded_data": sheet.excluded_data,
            "sample_size": f"The training data contains {sheet.sample_size} records.",
        }
        return AnswerPayload("metadata", {"text": texts[spec.field]}, prov)

    if spec.route == "ExternalKnowledge":
        if spec.field == "glossary":
            term, definition = glossary_term(ctx.glossary, task.question_text)
            if term is None:
                examples = ", ".join(sorted(ctx.glossary)[:5])
                return AnswerPayload("glossary_miss", {"examples": examples}, prov)
            return AnswerPayload("glossary", {"term": term, "definition": definition}, prov)
        return AnswerPayload("notice", {"text": spec.notice}, prov)

    if spec.route in ("ExternalValidation", "SystemContext"):
        return AnswerPayload("notice", {"text": spec.notice}, prov)

    if spec.route == "Unsupported":
        return AnswerPayload("unsupported", {"topic": spec.notice}, prov)

    raise RoutingError(f"route {spec.route} has no executor")


def glossary_term(glossary: Mapping[str, str], text: str):
    """Longest glossary key appearing in the text, case-insensitive."""
    lowered = text.lower()
    best = None
    for term in glossary:
        if term.lower() in lowered and (best is None or len(term) > len(best)):
            best = term
    if best is None:
        return None, None
    return best, glossary[best]


def answer_whatif(ctx: ExecutionContext, task: ExplanationTask,
                  instance: Instance, overrides: Mapping[str, object]) -> AnswerPayload:
    prov = _provenance(task)
    named = instance.as_dict(ctx.schema)
    parsed: dict[str, object] = {}
    for name, value in overrides.items():
        spec = ctx.schema.feature(name)
        if spec.is_numeric and isinstance(value, str):
            try:
                value = float(value)
            except ValueError:
                return AnswerPayload("validation_error", {
                    "problems": [f"{name}: {value!r} is not a number"],
                }, prov)
        parsed[name] = value
    named.update(parsed)
    try:
        modified = validate_instance(ctx.schema, named)
    except InstanceError as err:
        return AnswerPayload("validation_error", {"problems": err.problems}, prov)
    predicted = ctx.model.predict_instance(modified)
    proba = ctx.model.predict_proba_instance(modified)
    return AnswerPayload("whatif", {
        "predicted_class": predicted,
        "probability": float(proba[ctx.schema.class_index(predicted)]),
        "overrides": parsed,
        "instance": modified,
        "warnings": list(modified.warnings),
    }, prov)
