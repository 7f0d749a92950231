"""Shared test fixtures plus an independent reference navigator used as an
oracle."""

from __future__ import annotations

import json
import random
from pathlib import Path

import numpy as np

from defgraph.annotation import AnnotatedDefinition, definition_from_json
from defgraph.distsem import EmbeddingTable
from defgraph.kgraph import (
    DEF_STATEMENT,
    HAS_SUPERTYPE,
    LEMMA,
    NS,
    RDF_OBJECT,
    RDF_PREDICATE,
    RDF_SUBJECT,
    Literal,
    Resource,
    Statement,
)

DATA = Path(__file__).parent / "data"

SCOTCH_GLOSS = "whiskey distilled in Scotland"
SCOTCH_TREE = "(ROOT (NP (NP (NN whiskey)) (VP (VBN distilled) (PP (IN in) (NP (NNP Scotland))))))"

LAKE_GLOSS = ("English poets at the beginning of the 19th century who lived in the "
              "Lake District and were inspired by it")
LAKE_TREE = (
    "(ROOT (NP (NP (JJ English) (NNS poets)) (PP (IN at) (NP (NP (DT the) (NN beginning)) "
    "(PP (IN of) (NP (DT the) (JJ 19th) (NN century))))) (SBAR (WHNP (WP who)) (S (VP (VP "
    "(VBD lived) (PP (IN in) (NP (DT the) (NNP Lake) (NNP District)))) (CC and) (VP (VBD were) "
    "(VP (VBN inspired) (PP (IN by) (NP (PRP it))))))))))"
)

SPUR_GLOSS = "a verbalization that encourages you to attempt something"
SPUR_TREE = (
    "(ROOT (NP (NP (DT a) (NN verbalization)) (SBAR (WHNP (WDT that)) (S (VP (VBZ encourages) "
    "(S (NP (PRP you)) (VP (TO to) (VP (VB attempt) (NP (NN something))))))))))"
)

BPI_T = "Many cellphones have built-in digital cameras."
BPI_H = "Many cellphones can take pictures."
BPI_JUSTIFICATION = [
    "A digital camera is a kind of camera",
    "A camera is an equipment for taking photographs",
    "Photograph is synonym of picture",
]


def scotch_definition() -> AnnotatedDefinition:
    return AnnotatedDefinition.create(
        "scotch", "noun", ["Scotch", "Scotch whiskey"], SCOTCH_GLOSS,
        [(0, 7, "Supertype"), (8, 17, "DifferentiaEvent"), (18, 29, "EventLocation")])


def camera_corpus() -> list[AnnotatedDefinition]:
    lines = (DATA / "camera_corpus.jsonl").read_text(encoding="utf-8").splitlines()
    return [definition_from_json(json.loads(l)) for l in lines if l.strip()]


# ---------------------------------------------------------------- random trees

_NOUNS = ["dog", "tool", "river", "song", "house", "stone", "light", "paper"]
_PLURALS = ["dogs", "tools", "songs", "stones"]
_PROPER = ["Paris", "Scotland", "Rome"]
_ADJS = ["small", "red", "old", "quiet", "wooden"]
_VERBS = ["carries", "makes", "holds", "covers"]
_PREPS = ["in", "of", "with", "on", "from"]
_DETS = ["a", "the"]


def random_tree(rng: random.Random, with_noun: bool | None = None) -> str:
    """A random bracketed tree. ``with_noun`` forces (True) or forbids (False)
    an NN leaf under some NP."""
    allow_nn = with_noun is not False

    def noun_leaf():
        pool = [("NNS", _PLURALS), ("NNP", _PROPER)]
        if allow_nn:
            pool += [("NN", _NOUNS)] * 3
        tag, words = rng.choice(pool)
        return f"({tag} {rng.choice(words)})"

    def np(depth):
        parts = []
        if rng.random() < 0.6:
            parts.append(f"(DT {rng.choice(_DETS)})")
        for _ in range(rng.randint(0, 2)):
            parts.append(f"(JJ {rng.choice(_ADJS)})")
        parts.append(noun_leaf())
        if rng.random() < 0.3:
            parts.append(noun_leaf())
        inner = f"(NP {' '.join(parts)})"
        if depth > 0 and rng.random() < 0.5:
            return f"(NP {inner} {pp(depth - 1)})"
        if depth > 0 and rng.random() < 0.3:
            return f"(NP {inner} {vp(depth - 1)})"
        return inner

    def pp(depth):
        return f"(PP (IN {rng.choice(_PREPS)}) {np(depth)})"

    def vp(depth):
        tail = np(depth) if rng.random() < 0.6 else pp(depth)
        return f"(VP (VBZ {rng.choice(_VERBS)}) {tail})"

    while True:
        text = f"(ROOT {np(rng.randint(0, 3))})"
        has_nn = "(NN " in text
        if with_noun is None or has_nn == with_noun:
            return text


# ---------------------------------------------------------------- random graphs


def random_graph_corpus(rng: random.Random, n_synsets: int | None = None):
    """Random definitions over synsets ``s0..`` and plain words ``w0..``.

    Returns (definitions, vocabulary). Every gloss is ``<supertype> <rest>``;
    the rest may hold a differentia quality, or an event with a location
    component, so both flat and nested statements occur.
    """
    n = n_synsets or rng.randint(2, 10)
    words = [f"w{i}" for i in range(rng.randint(2, 8))]
    ids = [f"s{i}" for i in range(n)]
    defs = []
    for sid in ids:
        sup = rng.choice(ids + words[:2])
        gloss = sup
        spans = [(0, len(sup), "Supertype")]
        kind = rng.random()
        if kind < 0.45:
            rest = " ".join(rng.sample(words, rng.randint(1, min(2, len(words)))))
            s = len(gloss) + 1
            gloss += " " + rest
            spans.append((s, len(gloss), "DifferentiaQuality"))
        elif kind < 0.75:
            ev = rng.choice(words + ids)
            loc = " ".join(rng.sample(words, 1))
            s = len(gloss) + 1
            gloss += " " + ev
            spans.append((s, len(gloss), "DifferentiaEvent"))
            s = len(gloss) + 1
            gloss += " " + loc
            spans.append((s, len(gloss), "EventLocation"))
        lemmas = [sid] + ([rng.choice(words)] if rng.random() < 0.3 else [])
        defs.append(AnnotatedDefinition.create(sid, "noun", lemmas, gloss, spans))
    return defs, ids + words


def random_embeddings(rng: random.Random, vocab, dim: int = 3) -> EmbeddingTable:
    vecs = {}
    for w in vocab:
        v = np.array([rng.choice([-2, -1, 0, 1, 2, 3]) for _ in range(dim)], dtype=float)
        if not v.any():
            v[0] = 1.0
        vecs[w] = v
    return EmbeddingTable(dim, vecs, frozenset())


# ---------------------------------------------------------------- reference navigator


class ReferenceNavigator:
    """Best-first search written directly against the raw triples.

    Restricted to the vocabulary produced by ``random_graph_corpus``: single
    lower-case tokens without plural forms, so lemma matching is plain
    string equality.
    """

    def __init__(self, triples, emb):
        self.emb = emb
        self.lemmas: dict = {}
        stmt: dict = {}
        for s, p, o in triples:
            if p == LEMMA:
                self.lemmas.setdefault(s, set()).add(o.text)
            if isinstance(s, Statement):
                stmt.setdefault(s, {})[p] = o
        self.edges: dict = {}

        def add(a, p, b, origin):
            self.edges.setdefault(a, set()).add((p, b, origin))

        def resolve(st, origin):
            parts = stmt[st]
            s, p, o = parts[RDF_SUBJECT], parts[RDF_PREDICATE], parts[RDF_OBJECT]
            if isinstance(o, Statement):
                o = resolve(o, origin)
            add(s, p, o, origin)
            return s

        for s, p, o in triples:
            if p == HAS_SUPERTYPE:
                add(s, p, o, s)
            elif p == DEF_STATEMENT:
                resolve(o, s)

    def text(self, node) -> str:
        if isinstance(node, Literal):
            return node.text
        local = node.iri[len(NS):]
        lem = self.lemmas.get(node)
        if lem and local not in lem:
            return min(lem)
        return local

    def children(self, node):
        if not isinstance(node, Resource):
            return set()
        out = set(self.edges.get(node, ()))
        if node not in self.lemmas:
            word = self.text(node)
            for syn, lem in self.lemmas.items():
                if word in lem and syn != node:
                    out |= self.edges.get(syn, set())
        return out

    def starts(self, source):
        found = {syn for syn, lem in self.lemmas.items() if source in lem}
        res = Resource(NS + source)
        if res in self.edges or any(res == b for es in self.edges.values() for _, b, _ in es):
            found.add(res)
        return sorted(found, key=lambda t: t.n3())

    def match(self, node, target):
        names = {target}
        for syn, lem in self.lemmas.items():
            if target in lem:
                names |= lem
        if isinstance(node, Literal):
            toks = node.text.split()
            hits = [(toks.index(w), w) for w in names if w in toks]
            return min(hits)[1] if hits else None
        if self.text(node) in names:
            return self.text(node)
        hits = sorted(self.lemmas.get(node, set()) & names)
        return hits[0] if hits else None

    def score(self, node, target):
        return round(self.emb.similarity(self.text(node), target), 12)

    def search(self, source, target, max_depth, beam):
        """Path as a list of (subject, predicate, object, origin), or None."""
        starts = self.starts(source)
        for limit in range(max_depth + 1):
            # frontier items: (sort key, insertion order, node, depth, path)
            frontier = []
            order = 0
            for s in starts:
                frontier.append(((-self.score(s, target), s.n3(), 0), order, s, 0, []))
                order += 1
            closed = {}
            while frontier:
                best = min(frontier, key=lambda item: (item[0], item[1]))
                frontier.remove(best)
                _, _, node, depth, path = best
                if node in closed and closed[node] <= depth:
                    continue
                closed[node] = depth
                if self.match(node, target) is not None:
                    return path
                if depth == limit:
                    continue
                visited = {node} | {step[0] for step in path} | {step[2] for step in path}
                per_target = {}
                for p, b, origin in self.children(node):
                    if b in visited or (b in closed and closed[b] <= depth + 1):
                        continue
                    cand = (b.n3(), p.iri, origin.iri)
                    if b not in per_target or cand < per_target[b][0]:
                        per_target[b] = (cand, p, origin)
                ranked = sorted(per_target.items(),
                                key=lambda kv: (-self.score(kv[0], target), kv[1][0]))
                if beam is not None:
                    ranked = ranked[:beam]
                for b, (_, p, origin) in ranked:
                    key = (-self.score(b, target), b.n3(), depth + 1)
                    frontier.append((key, order, b, depth + 1, path + [(node, p, b, origin)]))
                    order += 1
        return None


def any_path_exists(ref: ReferenceNavigator, source, target, max_depth) -> bool:
    """Exhaustive depth-first enumeration of simple paths."""

    def dfs(node, depth, seen):
        if ref.match(node, target) is not None:
            return True
        if depth == max_depth:
            return False
        for _, b, _ in ref.children(node):
            if b not in seen and dfs(b, depth + 1, seen | {b}):
                return True
        return False

    return any(dfs(s, 0, {s}) for s in ref.starts(source))
