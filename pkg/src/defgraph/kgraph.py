"""
Reified definition graphs: construction from annotated definitions, N-Triples
I/O, and the term indexes used for navigation.

Every definition becomes a synset node linked to its supertype. All other
roles are reified statements whose subject is the supertype, hung off the
synset with ``def_statement``. A differentia with components (event time or
location, quality modifier) is itself a resource: the component statement is
reified first and becomes the object of the differentia statement.
"""

from __future__ import annotations

import hashlib
import re
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Union
from urllib.parse import quote, unquote

from .annotation import AnnotatedDefinition, RoleLabel, RoleSpan
from .textnorm import normalize, singular, tokenize

__all__ = [
    "NS", "RDF", "Resource", "Literal", "Statement", "Term", "Triple",
    "GraphPolicy", "GraphError", "NTriplesError", "DefinitionGraph",
    "build_graph", "serialize_ntriples", "parse_ntriples", "neighbors",
    "lookup", "check_integrity", "display_text", "term_key", "predicate",
    "ROLE_PREDICATES",
]

NS = "urn:wng:"
RDF = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
STMT_PREFIX = NS + "stmt/"


@dataclass(frozen=True)
class Resource:
    iri: str

    def n3(self) -> str:
        return f"<{self.iri}>"


@dataclass(frozen=True)
class Literal:
    text: str

    def n3(self) -> str:
        return '"' + _escape(self.text) + '"'


@dataclass(frozen=True)
class Statement:
    iri: str

    def n3(self) -> str:
        return f"<{self.iri}>"


Term = Union[Resource, Literal, Statement]


class Triple(NamedTuple):
    subject: Term
    predicate: Resource
    object: Term


def term_key(term: Term) -> str:
    return term.n3()


def predicate(name: str) -> Resource:
    return Resource(NS + name)


ROLE_PREDICATES = {
    RoleLabel.SUPERTYPE: "has_supertype",
    RoleLabel.DIFFERENTIA_QUALITY: "has_diff_qual",
    RoleLabel.DIFFERENTIA_EVENT: "has_diff_event",
    RoleLabel.EVENT_LOCATION: "has_event_location",
    RoleLabel.EVENT_TIME: "has_event_time",
    RoleLabel.ORIGIN_LOCATION: "has_origin_location",
    RoleLabel.QUALITY_MODIFIER: "has_quality_modifier",
    RoleLabel.PURPOSE: "has_purpose",
    RoleLabel.ASSOCIATED_FACT: "has_assoc_fact",
    RoleLabel.ACCESSORY_DETERMINER: "has_acc_determiner",
    RoleLabel.ACCESSORY_QUALITY: "has_acc_quality",
    RoleLabel.ROLE_PARTICLE: "has_particle",
}
PREDICATE_ROLES = {predicate(name): role for role, name in ROLE_PREDICATES.items()}

HAS_SUPERTYPE = predicate("has_supertype")
LEMMA = predicate("lemma")
DEF_STATEMENT = predicate("def_statement")
RDF_TYPE = Resource(RDF + "type")
RDF_STATEMENT = Resource(RDF + "Statement")
RDF_SUBJECT = Resource(RDF + "subject")
RDF_PREDICATE = Resource(RDF + "predicate")
RDF_OBJECT = Resource(RDF + "object")

class GraphError(ValueError):
    pass


class NTriplesError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class GraphPolicy:
    bidirectional: bool = False
    # roles that become resources when they carry components
    resource_roles: frozenset[RoleLabel] = frozenset(
        {RoleLabel.DIFFERENTIA_QUALITY, RoleLabel.DIFFERENTIA_EVENT})


_IRI_SAFE = "-_.~!$&'()*+,;=:@"


def slug(text: str) -> str:
    s = re.sub(r"\s+", "_", text.strip().lower())
    return quote(s, safe=_IRI_SAFE)


def unslug(local: str) -> str:
    return unquote(local).replace("_", " ")


def synset_resource(def_id: str) -> Resource:
    return Resource(NS + slug(def_id))


def role_resource(text: str) -> Resource:
    return Resource(NS + slug(text))


class Edge(NamedTuple):
    predicate: Resource
    target: Term
    origin: Resource


class DefinitionGraph:
    """Immutable triple set plus the indexes derived from it."""

    def __init__(self, triples: Iterable[Triple]):
        self.triples: frozenset[Triple] = frozenset(Triple(*t) for t in triples)
        synset_lemmas: dict[Resource, set[str]] = defaultdict(set)
        stmt_parts: dict[Statement, dict[Resource, list[Term]]] = defaultdict(lambda: defaultdict(list))
        supertype_edges = []
        def_links = []
        for s, p, o in self.triples:
            if p == LEMMA and isinstance(o, Literal):
                synset_lemmas[s].add(o.text)
            elif p == HAS_SUPERTYPE:
                supertype_edges.append((s, o))
            elif p == DEF_STATEMENT and isinstance(o, Statement):
                def_links.append((s, o))
            if isinstance(s, Statement):
                stmt_parts[s][p].append(o)

        self.synset_lemmas = {k: frozenset(v) for k, v in synset_lemmas.items()}
        lemma_index: dict[str, set[Resource]] = defaultdict(set)
        for syn, lemmas in self.synset_lemmas.items():
            for w in lemmas:
                lemma_index[lemma_key(w)].add(syn)
        self.lemma_index = {k: frozenset(v) for k, v in lemma_index.items()}

        self.statements: dict[Statement, tuple[Term, Term, Term]] = {}
        for st, parts in stmt_parts.items():
            s, p, o = parts.get(RDF_SUBJECT), parts.get(RDF_PREDICATE), parts.get(RDF_OBJECT)
            if s and p and o and len(s) == len(p) == len(o) == 1:
                self.statements[st] = (s[0], p[0], o[0])

        adjacency: dict[Term, set[Edge]] = defaultdict(set)
        inverse: dict[Term, set[Edge]] = defaultdict(set)

        def add(src, pred, dst, origin):
            adjacency[src].add(Edge(pred, dst, origin))
            inverse[dst].add(Edge(pred, src, origin))

        for syn, sup in supertype_edges:
            add(syn, HAS_SUPERTYPE, sup, syn)

        def see_through(st: Statement, origin: Resource, seen: frozenset) -> Term | None:
            if st in seen or st not in self.statements:
                return None
            s, p, o = self.statements[st]
            if isinstance(o, Statement):
                o = see_through(o, origin, seen | {st})
                if o is None:
                    return None
            if isinstance(s, Statement) or not isinstance(p, Resource):
                return None
            add(s, p, o, origin)
            return s

        for syn, st in def_links:
            see_through(st, syn, frozenset())

        self.adjacency = {k: frozenset(v) for k, v in adjacency.items()}
        self.inverse = {k: frozenset(v) for k, v in inverse.items()}

        self.resource_index: dict[str, frozenset[Resource]] = {}
        by_text: dict[str, set[Resource]] = defaultdict(set)
        for node in list(self.adjacency) + list(self.inverse):
            if isinstance(node, Resource) and node.iri.startswith(NS):
                by_text[lemma_key(unslug(node.iri[len(NS):]))].add(node)
        self.resource_index = {k: frozenset(v) for k, v in by_text.items()}

    def __eq__(self, other):
        return isinstance(other, DefinitionGraph) and self.triples == other.triples

    def __hash__(self):
        return hash(self.triples)

    def __len__(self):
        return len(self.triples)

    def __repr__(self):
        return f"DefinitionGraph({len(self.triples)} triples, {len(self.synset_lemmas)} synsets)"

    @property
    def synsets(self) -> frozenset[Resource]:
        subjects = {t.subject for t in self.triples if t.predicate in (HAS_SUPERTYPE, LEMMA)}
        return frozenset(s for s in subjects if isinstance(s, Resource))


# ---------------------------------------------------------------- building


def _stmt_id(origin: Resource, s: Term, p: Resource, o: Term, span: RoleSpan) -> Statement:
    key = "\t".join((origin.n3(), s.n3(), p.n3(), o.n3(), f"{span.start}:{span.end}"))
    digest = hashlib.sha1(key.encode("utf-8")).hexdigest()[:16]
    return Statement(STMT_PREFIX + digest)


def _reify(out: set, st: Statement, s: Term, p: Resource, o: Term) -> None:
    out.add(Triple(st, RDF_TYPE, RDF_STATEMENT))
    out.add(Triple(st, RDF_SUBJECT, s))
    out.add(Triple(st, RDF_PREDICATE, p))
    out.add(Triple(st, RDF_OBJECT, o))


def attach_components(spans: Iterable[RoleSpan]) -> dict[RoleSpan, RoleSpan]:
    """Map each component span to the differentia it belongs to.

    Event times and locations attach to the closest preceding differentia
    event with no other main role in between. Quality modifiers attach to the
    differentia quality they precede, or else the one they follow.
    """
    spans = sorted(spans)
    hosts: dict[RoleSpan, RoleSpan] = {}
    current_event = None
    for sp in spans:
        if sp.label is RoleLabel.DIFFERENTIA_EVENT:
            current_event = sp
        elif sp.label in (RoleLabel.EVENT_TIME, RoleLabel.EVENT_LOCATION):
            if current_event is not None:
                hosts[sp] = current_event
        elif sp.label is not RoleLabel.ROLE_PARTICLE:
            current_event = None

    for n, sp in enumerate(spans):
        if sp.label is not RoleLabel.QUALITY_MODIFIER:
            continue
        after = next((x for x in spans[n + 1:] if x.label is not RoleLabel.QUALITY_MODIFIER), None)
        before = next((x for x in reversed(spans[:n]) if x.label is not RoleLabel.QUALITY_MODIFIER), None)
        if after is not None and after.label is RoleLabel.DIFFERENTIA_QUALITY:
            hosts[sp] = after
        elif before is not None and before.label is RoleLabel.DIFFERENTIA_QUALITY:
            hosts[sp] = before
    return hosts


def build_graph(defs: Iterable[AnnotatedDefinition], policy: GraphPolicy = GraphPolicy()) -> DefinitionGraph:
    """Convert annotated definitions into a reified definition graph."""
    defs = sorted(defs, key=lambda d: d.id)
    out: set[Triple] = set()
    seen: dict[Resource, str] = {}
    for d in defs:
        syn = synset_resource(d.id)
        if syn in seen:
            raise GraphError(f"duplicate synset id {d.id!r} (clashes with {seen[syn]!r})")
        seen[syn] = d.id
        sups = d.spans_with(RoleLabel.SUPERTYPE)
        if not sups:
            raise GraphError(f"definition {d.id!r} has no supertype")
        for sp in sups:
            out.add(Triple(syn, HAS_SUPERTYPE, role_resource(sp.text)))
        head = role_resource(sups[0].text)

        hosts = attach_components(d.spans)
        hosted: dict[RoleSpan, list[RoleSpan]] = defaultdict(list)
        for comp, host in hosts.items():
            hosted[host].append(comp)

        for sp in d.spans:
            if sp.label is RoleLabel.SUPERTYPE or sp in hosts:
                continue
            pred = predicate(ROLE_PREDICATES[sp.label])
            comps = sorted(hosted.get(sp, ()))
            if comps and sp.label in policy.resource_roles:
                main = role_resource(sp.text)
                for comp in comps:
                    cpred = predicate(ROLE_PREDICATES[comp.label])
                    inner = _stmt_id(syn, main, cpred, Literal(comp.text), comp)
                    _reify(out, inner, main, cpred, Literal(comp.text))
                    outer = _stmt_id(syn, head, pred, inner, sp)
                    _reify(out, outer, head, pred, inner)
                    out.add(Triple(syn, DEF_STATEMENT, outer))
            else:
                obj = Literal(sp.text)
                st = _stmt_id(syn, head, pred, obj, sp)
                _reify(out, st, head, pred, obj)
                out.add(Triple(syn, DEF_STATEMENT, st))
                for comp in comps:
                    # components of a literal role fall back to plain roles
                    cpred = predicate(ROLE_PREDICATES[comp.label])
                    cst = _stmt_id(syn, head, cpred, Literal(comp.text), comp)
                    _reify(out, cst, head, cpred, Literal(comp.text))
                    out.add(Triple(syn, DEF_STATEMENT, cst))

        for w in d.lemmas:
            out.add(Triple(syn, LEMMA, Literal(w)))
    return DefinitionGraph(out)


def check_integrity(g: DefinitionGraph) -> list[str]:
    """Policy and reification problems in ``g``; empty when sound."""
    problems = []
    for s, p, o in sorted(g.triples, key=lambda t: tuple(map(term_key, t))):
        if p == HAS_SUPERTYPE and not isinstance(o, Resource):
            problems.append(f"supertype of {s.n3()} is not a resource: {o.n3()}")
    parts: dict[Statement, dict[Resource, int]] = defaultdict(lambda: defaultdict(int))
    referenced: dict[Statement, int] = defaultdict(int)
    for s, p, o in g.triples:
        if isinstance(s, Statement):
            parts[s][p] += 1
        if isinstance(o, Statement) and (p == DEF_STATEMENT or p == RDF_OBJECT):
            referenced[o] += 1
    mentioned = set(parts) | set(referenced)
    for st in sorted(mentioned, key=term_key):
        got = parts.get(st, {})
        for part in (RDF_TYPE, RDF_SUBJECT, RDF_PREDICATE, RDF_OBJECT):
            if got.get(part, 0) != 1:
                problems.append(f"{st.n3()} has {got.get(part, 0)} {part.n3()} triples")
        if referenced.get(st, 0) != 1:
            problems.append(f"{st.n3()} is referenced {referenced.get(st, 0)} times")
    for st, (s, p, o) in g.statements.items():
        role = PREDICATE_ROLES.get(p)
        if role is None:
            continue
        if role in (RoleLabel.DIFFERENTIA_QUALITY, RoleLabel.DIFFERENTIA_EVENT):
            continue
        if not isinstance(o, Literal):
            problems.append(f"{st.n3()}: {role.value} object is not a literal")
    return problems


# ---------------------------------------------------------------- N-Triples

_ESCAPES = {"\\": "\\\\", '"': '\\"', "\n": "\\n", "\r": "\\r", "\t": "\\t"}


def _escape(text: str) -> str:
    out = []
    for ch in text:
        if ch in _ESCAPES:
            out.append(_ESCAPES[ch])
        elif ord(ch) < 0x20 or ord(ch) == 0x7F:
            out.append(f"\\u{ord(ch):04X}")
        else:
            out.append(ch)
    return "".join(out)


def serialize_ntriples(g: DefinitionGraph) -> str:
    rows = sorted((s.n3(), p.n3(), o.n3()) for s, p, o in g.triples)
    return "".join(f"{s} {p} {o} .\n" for s, p, o in rows)


_UNESCAPE = {"t": "\t", "b": "\b", "n": "\n", "r": "\r", "f": "\f", '"': '"', "'": "'", "\\": "\\"}
_IRI_FORBIDDEN = set('<>"{}|^`\\ ') | {chr(c) for c in range(0x21)}


class _LineReader:
    def __init__(self, text: str, lineno: int):
        self.text = text
        self.pos = 0
        self.lineno = lineno

    def error(self, msg: str, pos: int | None = None):
        return NTriplesError(msg, self.lineno, (self.pos if pos is None else pos) + 1)

    def skip_ws(self):
        while self.pos < len(self.text) and self.text[self.pos] in " \t":
            self.pos += 1

    def peek(self) -> str:
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def uchar(self, kind: str) -> str:
        width = 4 if kind == "u" else 8
        digits = self.text[self.pos:self.pos + width]
        if len(digits) != width or not re.fullmatch(r"[0-9A-Fa-f]+", digits):
            raise self.error("bad unicode escape")
        self.pos += width
        return chr(int(digits, 16))

    def iri(self) -> str:
        start = self.pos
        if self.peek() != "<":
            raise self.error("expected '<'")
        self.pos += 1
        out = []
        while True:
            ch = self.peek()
            if ch == "":
                raise self.error("unterminated IRI", start)
            self.pos += 1
            if ch == ">":
                break
            if ch == "\\":
                kind = self.peek()
                if kind not in ("u", "U"):
                    raise self.error("bad escape in IRI")
                self.pos += 1
                out.append(self.uchar(kind))
                continue
            if ch in _IRI_FORBIDDEN:
                raise self.error(f"character {ch!r} not allowed in IRI", self.pos - 1)
            out.append(ch)
        if not out:
            raise self.error("empty IRI", start)
        return "".join(out)

    def literal(self) -> str:
        start = self.pos
        self.pos += 1
        out = []
        while True:
            ch = self.peek()
            if ch == "":
                raise self.error("unterminated literal", start)
            self.pos += 1
            if ch == '"':
                break
            if ch == "\\":
                kind = self.peek()
                self.pos += 1
                if kind in _UNESCAPE:
                    out.append(_UNESCAPE[kind])
                elif kind in ("u", "U"):
                    out.append(self.uchar(kind))
                else:
                    raise self.error(f"bad escape \\{kind}", self.pos - 2)
                continue
            if ch in "\n\r":
                raise self.error("line break inside literal", self.pos - 1)
            out.append(ch)
        if self.peek() in ("@", "^"):
            raise self.error("language tags and datatypes are not supported")
        return "".join(out)

    def node(self, allow_literal: bool) -> Term:
        ch = self.peek()
        if ch == "<":
            iri = self.iri()
            return Statement(iri) if iri.startswith(STMT_PREFIX) else Resource(iri)
        if ch == '"':
            if not allow_literal:
                raise self.error("literal not allowed here")
            return Literal(self.literal())
        if ch == "_":
            raise self.error("blank nodes are not supported")
        raise self.error("expected IRI" + (" or literal" if allow_literal else ""))


def parse_ntriples(text: str) -> DefinitionGraph:
    triples = []
    for lineno, line in enumerate(text.split("\n"), 1):
        if line.endswith("\r"):
            line = line[:-1]
        r = _LineReader(line, lineno)
        r.skip_ws()
        if r.peek() in ("", "#"):
            continue
        s = r.node(allow_literal=False)
        r.skip_ws()
        p = r.node(allow_literal=False)
        if not isinstance(p, Resource):
            raise r.error("predicate must be a plain IRI")
        r.skip_ws()
        o = r.node(allow_literal=True)
        r.skip_ws()
        if r.peek() != ".":
            raise r.error("expected '.' at end of triple")
        r.pos += 1
        r.skip_ws()
        if r.peek() not in ("", "#"):
            raise r.error("trailing text after '.'")
        triples.append(Triple(s, p, o))
    return DefinitionGraph(triples)


# ---------------------------------------------------------------- queries


def neighbors(g: DefinitionGraph, node: Term, bidirectional: bool = False) -> frozenset[Edge]:
    """Edges leaving ``node``, with reified statements seen through.

    With ``bidirectional`` the incoming edges are added too, their predicate
    wrapped as ``inverse(...)``.
    """
    out = set(g.adjacency.get(node, ()))
    if bidirectional:
        for e in g.inverse.get(node, ()):
            out.add(Edge(inverse_of(e.predicate), e.target, e.origin))
    return frozenset(out)


def inverse_of(pred: Resource) -> Resource:
    return Resource(pred.iri + "^-1")


def is_inverse(pred: Resource) -> bool:
    return pred.iri.endswith("^-1")


def base_predicate(pred: Resource) -> Resource:
    return Resource(pred.iri[:-3]) if is_inverse(pred) else pred


def predicate_name(pred: Resource) -> str:
    iri = base_predicate(pred).iri
    return iri[len(NS):] if iri.startswith(NS) else iri


def lemma_key(surface: str) -> str:
    return re.sub(r"\s+", " ", surface.replace("_", " ").strip()).casefold()


def _variants(surface: str) -> list[str]:
    raw = lemma_key(surface)
    base = " ".join(tokenize(raw)) or raw
    words = base.split()
    variants = [raw, base]
    if words:
        variants.append(" ".join(words[:-1] + [singular(words[-1])]))
        variants.append(" ".join(singular(w) for w in words))
    seen = []
    for v in variants:
        if v and v not in seen:
            seen.append(v)
    return seen


def lookup(g: DefinitionGraph, surface: str) -> frozenset[Resource]:
    """Synsets with ``surface`` as a lemma, plus role resources whose text is
    ``surface``. Plural forms fall back to their singular."""
    for v in _variants(surface):
        hits = set(g.lemma_index.get(v, ()))
        hits |= g.resource_index.get(v, frozenset())
        if hits:
            return frozenset(hits)
    return frozenset()


def display_text(g: DefinitionGraph, term: Term) -> str:
    if isinstance(term, Literal):
        return term.text
    if isinstance(term, Statement):
        return term.iri
    local = unslug(term.iri[len(NS):]) if term.iri.startswith(NS) else term.iri
    lemmas = g.synset_lemmas.get(term)
    if lemmas:
        for w in sorted(lemmas):
            if normalize(w) == normalize(local):
                return w
        return sorted(lemmas)[0]
    return local
