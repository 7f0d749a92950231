"""Semantic roles for dictionary definitions, the annotated-definition record,
validity checks, and Brat standoff exchange."""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable, Sequence

__all__ = [
    "RoleLabel",
    "RoleSpan",
    "AnnotatedDefinition",
    "Violation",
    "AnnotationError",
    "DEFAULT_ALLOWED_UNCOVERED",
    "validate",
    "export_brat",
    "import_brat",
    "definition_from_json",
    "definition_to_json",
]


class RoleLabel(str, enum.Enum):
    SUPERTYPE = "Supertype"
    DIFFERENTIA_QUALITY = "DifferentiaQuality"
    DIFFERENTIA_EVENT = "DifferentiaEvent"
    EVENT_LOCATION = "EventLocation"
    EVENT_TIME = "EventTime"
    ORIGIN_LOCATION = "OriginLocation"
    QUALITY_MODIFIER = "QualityModifier"
    PURPOSE = "Purpose"
    ASSOCIATED_FACT = "AssociatedFact"
    ACCESSORY_DETERMINER = "AccessoryDeterminer"
    ACCESSORY_QUALITY = "AccessoryQuality"
    ROLE_PARTICLE = "RoleParticle"

    @classmethod
    def parse(cls, name: str) -> RoleLabel:
        try:
            return cls(name)
        except ValueError:
            raise AnnotationError(f"unknown role label {name!r}") from None

    @property
    def human_name(self) -> str:
        """Lower-case words, e.g. ``differentia quality``."""
        if self is RoleLabel.ROLE_PARTICLE:
            return "particle"
        return re.sub(r"(?<!^)(?=[A-Z])", " ", self.value).lower()

    def __str__(self) -> str:
        return self.value


class AnnotationError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True, order=True)
class RoleSpan:
    start: int
    end: int
    label: RoleLabel
    text: str = field(default="", compare=False)

    def __post_init__(self):
        object.__setattr__(self, "label", RoleLabel(self.label))


@dataclass(frozen=True)
class AnnotatedDefinition:
    id: str
    pos: str
    lemmas: tuple[str, ...]
    gloss: str
    spans: tuple[RoleSpan, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "lemmas", tuple(self.lemmas))
        object.__setattr__(self, "spans", tuple(self.spans))

    @classmethod
    def create(cls, id: str, pos: str, lemmas: Iterable[str], gloss: str,
               spans: Iterable[tuple[int, int, RoleLabel | str]] = ()) -> AnnotatedDefinition:
        """Build a definition from ``(start, end, label)`` triples; span texts
        are cut from the gloss and spans are sorted."""
        made = sorted(RoleSpan(s, e, RoleLabel(lab), gloss[s:e]) for s, e, lab in spans)
        return cls(id, pos, tuple(lemmas), gloss, tuple(made))

    def with_spans(self, spans: Iterable[RoleSpan]) -> AnnotatedDefinition:
        return AnnotatedDefinition(self.id, self.pos, self.lemmas, self.gloss, tuple(sorted(spans)))

    def spans_with(self, label: RoleLabel) -> list[RoleSpan]:
        return [s for s in self.spans if s.label is label]


DEFAULT_ALLOWED_UNCOVERED = frozenset({"and", "or", "a", "an", "the", ",", ";"})

_UNCOVERED_TOKEN_RE = re.compile(r"\w+|[^\w\s]")


@dataclass(frozen=True)
class Violation:
    kind: str
    start: int
    end: int
    detail: str = ""


def _uncovered_regions(gloss: str, spans: Sequence[RoleSpan]) -> list[tuple[int, int]]:
    covered = [False] * len(gloss)
    for s in spans:
        for i in range(max(s.start, 0), min(s.end, len(gloss))):
            covered[i] = True
    regions = []
    i = 0
    while i < len(gloss):
        if covered[i]:
            i += 1
            continue
        j = i
        while j < len(gloss) and not covered[j]:
            j += 1
        regions.append((i, j))
        i = j
    return regions


def only_function_words(text: str, allowed: Iterable[str] = DEFAULT_ALLOWED_UNCOVERED) -> bool:
    allowed = {a.lower() for a in allowed}
    return all(t.lower() in allowed for t in _UNCOVERED_TOKEN_RE.findall(text))


def validate(defn: AnnotatedDefinition,
             allowed_uncovered: Iterable[str] = DEFAULT_ALLOWED_UNCOVERED) -> list[Violation]:
    """Report every broken invariant of ``defn``. An empty list means valid."""
    allowed = frozenset(a.lower() for a in allowed_uncovered)
    gloss = defn.gloss
    report: list[Violation] = []

    if not defn.spans_with(RoleLabel.SUPERTYPE):
        report.append(Violation("MissingSupertype", 0, len(gloss)))

    in_bounds = []
    for s in defn.spans:
        if not (0 <= s.start < s.end <= len(gloss)):
            report.append(Violation("OutOfBounds", s.start, s.end))
            continue
        in_bounds.append(s)
        if s.text != gloss[s.start:s.end]:
            report.append(Violation("TextMismatch", s.start, s.end, repr(s.text)))

    for a, b in zip(defn.spans, defn.spans[1:]):
        if (b.start, b.end) < (a.start, a.end):
            report.append(Violation("UnorderedSpans", b.start, b.end))
    ordered = sorted(in_bounds)
    for a, b in zip(ordered, ordered[1:]):
        if b.start < a.end:
            report.append(Violation("OverlappingSpans", b.start, min(a.end, b.end)))

    for start, end in _uncovered_regions(gloss, in_bounds):
        chunk = gloss[start:end]
        if not only_function_words(chunk, allowed):
            report.append(Violation("UncoveredText", start, end, chunk.strip()))
    return report


def export_brat(defn: AnnotatedDefinition) -> tuple[str, str]:
    lines = []
    for i, s in enumerate(defn.spans, 1):
        text = defn.gloss[s.start:s.end]
        if "\n" in text or "\r" in text:
            raise AnnotationError(f"span T{i} text contains a line break")
        lines.append(f"T{i}\t{s.label.value} {s.start} {s.end}\t{text}\n")
    return defn.gloss, "".join(lines)


_ANN_LINE = re.compile(r"^T(\d+)\t(\S+) (\d+) (\d+)\t(.*)$")


def import_brat(txt: str, ann: str, id: str, pos: str, lemmas: Sequence[str]) -> AnnotatedDefinition:
    spans = []
    for lineno, line in enumerate(ann.split("\n"), 1):
        if not line.strip() or line.startswith("#"):
            continue
        m = _ANN_LINE.match(line)
        if m is None:
            raise AnnotationError(f"not a text-bound annotation: {line!r}", lineno)
        _, label, start, end, text = m.groups()
        start, end = int(start), int(end)
        role = RoleLabel.parse(label)
        if not (0 <= start < end <= len(txt)):
            raise AnnotationError(f"offsets {start} {end} out of range", lineno)
        if txt[start:end] != text:
            raise AnnotationError(
                f"text column {text!r} does not match {txt[start:end]!r}", lineno)
        spans.append(RoleSpan(start, end, role, text))
    return AnnotatedDefinition(id, pos, tuple(lemmas), txt, tuple(sorted(spans)))


def definition_to_json(defn: AnnotatedDefinition) -> dict:
    return {
        "id": defn.id,
        "pos": defn.pos,
        "lemmas": list(defn.lemmas),
        "gloss": defn.gloss,
        "spans": [{"start": s.start, "end": s.end, "label": s.label.value} for s in defn.spans],
    }


def definition_from_json(obj: dict) -> AnnotatedDefinition:
    try:
        gloss = obj["gloss"]
        spans = [(int(s["start"]), int(s["end"]), RoleLabel.parse(s["label"]))
                 for s in obj.get("spans", [])]
        return AnnotatedDefinition.create(
            str(obj["id"]), obj.get("pos", "noun"), obj.get("lemmas", []), gloss, spans)
    except (KeyError, TypeError) as exc:
        raise AnnotationError(f"malformed definition record: {exc}") from None
