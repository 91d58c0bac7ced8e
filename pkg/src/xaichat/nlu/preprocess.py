"""Question preprocessing: slot detection, placeholder substitution, tokenizing.

Feature and class names from the active dataset schema are swapped for
``<feature>``/``<class>`` tokens (longest match first, case-insensitive, on
word boundaries); literal feature values become ``<value>``. The originals are
kept in occurrence order so the canonical text stays reversible.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from ..tabular import Schema
from .stem import stem

FEATURE_TOKEN = "<feature>"
CLASS_TOKEN = "<class>"
VALUE_TOKEN = "<value>"

PLACEHOLDERS = (FEATURE_TOKEN, CLASS_TOKEN, VALUE_TOKEN)


@dataclass(frozen=True)
class Slots:
    features: tuple[str, ...] = ()
    classes: tuple[str, ...] = ()
    values: tuple[str, ...] = ()

    def is_empty(self) -> bool:
        return not (self.features or self.classes or self.values)


@dataclass(frozen=True)
class PreprocessedQuestion:
    canonical_text: str
    slots: Slots
    original_text: str

    def reinsert_slots(self) -> str:
        """Fill the placeholders back in; equals original_text up to letter case."""
        text = self.canonical_text
        for kind, items in (
            (FEATURE_TOKEN, self.slots.features),
            (CLASS_TOKEN, self.slots.classes),
            (VALUE_TOKEN, self.slots.values),
        ):
            for item in items:
                text = text.replace(kind, str(item), 1)
        return text


def _term_pattern(term: str) -> str:
    """Escaped term with word boundaries only where the term edge is alphanumeric."""
    pattern = re.escape(term)
    if term and term[0].isalnum():
        pattern = r"(?<![A-Za-z0-9])" + pattern
    if term and term[-1].isalnum():
        pattern = pattern + r"(?![A-Za-z0-9])"
    return pattern


_NUMBER = r"(?<![A-Za-z0-9.<>=])[0-9]+(?:\.[0-9]+)?(?![A-Za-z0-9.])"


def substitute_placeholders(text: str, schema: Schema) -> PreprocessedQuestion:
    terms: list[tuple[str, str, str]] = []  # (pattern, kind, canonical)
    for f in schema.features:
        terms.append((_term_pattern(f.name), "feature", f.name))
        if not f.is_numeric:
            for cat in f.domain:
                terms.append((_term_pattern(cat), "value", cat))
    for label in schema.classes:
        terms.append((_term_pattern(label), "class", label))
    # longest literal first so multi-word names beat their substrings
    terms.sort(key=lambda t: len(t[2]), reverse=True)

    alternation = "|".join(f"(?P<t{i}>{p})" for i, (p, _, _) in enumerate(terms))
    alternation += f"|(?P<num>{_NUMBER})"
    features: list[str] = []
    classes: list[str] = []
    values: list[str] = []

    def _swap(m: re.Match) -> str:
        if m.lastgroup == "num":
            values.append(m.group())
            return VALUE_TOKEN
        idx = int(m.lastgroup[1:])
        _, kind, canonical = terms[idx]
        if kind == "feature":
            features.append(canonical)
            return FEATURE_TOKEN
        if kind == "class":
            classes.append(canonical)
            return CLASS_TOKEN
        values.append(canonical)
        return VALUE_TOKEN

    canonical_text = re.sub(alternation, _swap, text, flags=re.IGNORECASE)
    return PreprocessedQuestion(
        canonical_text=canonical_text,
        slots=Slots(tuple(features), tuple(classes), tuple(values)),
        original_text=text,
    )


_TOKEN_RE = re.compile("|".join(re.escape(p) for p in PLACEHOLDERS) + "|[A-Za-z0-9]+")


def tokenize_and_stem(text: str) -> list[str]:
    """Alphanumeric tokens of length >= 2, Porter-stemmed; placeholders stay atomic."""
    out = []
    for m in _TOKEN_RE.finditer(text):
        tok = m.group()
        if tok in PLACEHOLDERS:
            out.append(tok)
        elif len(tok) >= 2:
            out.append(stem(tok))
    return out
