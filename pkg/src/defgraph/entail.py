"""
Explainable entailment by distributional navigation over a definition graph.

A (source, target) term pair is chosen from T and H, then the graph is walked
from the source, always moving to the neighbour most similar to the target,
until a node naming the target (or a synonym of it) is reached. The walked
edges are rendered as justification sentences.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

from .kgraph import (
    HAS_SUPERTYPE,
    PREDICATE_ROLES,
    DefinitionGraph,
    Edge,
    Literal,
    Resource,
    Statement,
    Term,
    _variants,
    base_predicate,
    display_text,
    is_inverse,
    lookup,
    neighbors,
    predicate,
    predicate_name,
    term_key,
)
from .textnorm import contains_run, normalize, tokenize

__all__ = [
    "EntailConfig",
    "TermPair",
    "Step",
    "NavigationPath",
    "Justification",
    "Attempt",
    "Verdict",
    "UnknownTermError",
    "select_term_pairs",
    "navigate",
    "justify",
    "entail",
    "TargetMatcher",
]

HAS_DIFF_QUAL = predicate("has_diff_qual")
HAS_DIFF_EVENT = predicate("has_diff_event")

_NOMINAL_TAGS = ("NN", "JJ", "CD", "FW")
# similarity values are compared at this precision so that rescaled vectors
# cannot reorder exact ties through rounding noise
SIM_DIGITS = 12


class UnknownTermError(LookupError):
    pass


@dataclass(frozen=True)
class EntailConfig:
    max_depth: int = 5
    beam: int | None = 1
    pair_count: int = 3
    accept_threshold: float = 0.0
    bidirectional: bool = False

    def __post_init__(self):
        if self.max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        if self.beam is not None and self.beam < 1:
            raise ValueError("beam must be >= 1 (None for unlimited)")
        if self.pair_count < 1:
            raise ValueError("pair_count must be >= 1")


class TermPair(NamedTuple):
    source: str
    target: str
    similarity: float


class Step(NamedTuple):
    subject: Term
    predicate: Resource
    object: Term
    origin: Resource


@dataclass(frozen=True)
class NavigationPath:
    source: str
    target: str
    steps: tuple[Step, ...]
    terminal: Term
    matched_lemma: str
    target_lemma: str
    trace: tuple[Term, ...] = field(default=(), compare=False)

    def __len__(self):
        return len(self.steps)

    def describe(self, g: DefinitionGraph) -> list[dict]:
        return [
            {
                "from": display_text(g, s.subject),
                "predicate": predicate_name(s.predicate) + ("^-1" if is_inverse(s.predicate) else ""),
                "to": display_text(g, s.object),
                "origin": s.origin.iri,
            }
            for s in self.steps
        ]


@dataclass(frozen=True)
class Justification:
    sentences: tuple[str, ...]

    def __iter__(self):
        return iter(self.sentences)

    def __len__(self):
        return len(self.sentences)


# ---------------------------------------------------------------- pairs


def _tagged_tokens(text: str, tags: Sequence[str] | None) -> list[tuple[str, str | None]]:
    words = text.split()
    if tags is not None and len(tags) != len(words):
        raise ValueError(f"{len(tags)} tags for {len(words)} tokens in {text!r}")
    out = []
    for n, w in enumerate(words):
        for tok in tokenize(w):
            out.append((tok, tags[n] if tags is not None else None))
    return out


def _segment(run: list[str], lexicon: Callable[[str], bool]) -> list[str]:
    """Greedy longest-match of known terms inside a run of tokens."""
    found = []
    i = 0
    while i < len(run):
        for j in range(len(run), i, -1):
            phrase = " ".join(run[i:j])
            if lexicon(phrase):
                found.append(phrase)
                i = j
                break
        else:
            i += 1
    return found


def noun_chunks(text: str, stopwords: frozenset[str], tags: Sequence[str] | None = None,
                lexicon: Callable[[str], bool] | None = None) -> list[str]:
    """Maximal runs of content tokens (nominal ones, when tags are given).

    With a lexicon each run is narrowed to the known terms it contains; runs
    without any known term are kept whole.
    """
    runs: list[list[str]] = []
    current: list[str] = []
    for tok, tag in _tagged_tokens(text, tags):
        keep = tok not in stopwords and (tag is None or tag.upper().startswith(_NOMINAL_TAGS))
        if keep:
            current.append(tok)
        elif current:
            runs.append(current)
            current = []
    if current:
        runs.append(current)

    chunks = []
    for run in runs:
        pieces = _segment(run, lexicon) if lexicon is not None else []
        for piece in pieces or [" ".join(run)]:
            if piece not in chunks:
                chunks.append(piece)
    return chunks


def _novel(chunks: list[str], other_text: str) -> list[str]:
    other = normalize(other_text)
    return [c for c in chunks if contains_run(other, normalize(c)) < 0]


def _rounded(x: float) -> float:
    return round(x, SIM_DIGITS)


def select_term_pairs(t_text: str, h_text: str, emb, k: int = 3, *,
                      lexicon: Callable[[str], bool] | None = None,
                      t_tags: Sequence[str] | None = None,
                      h_tags: Sequence[str] | None = None,
                      threshold: float | None = None) -> list[TermPair]:
    """Rank (source from T, target from H) term pairs by similarity.

    Only terms that the other text lacks are candidates. An empty result means
    H adds no term to T, or T offers no term that H lacks.
    """
    if not t_text.strip() or not h_text.strip():
        raise ValueError("both texts must be non-empty")
    stop = getattr(emb, "stopwords", frozenset())
    sources = _novel(noun_chunks(t_text, stop, t_tags, lexicon), h_text)
    targets = _novel(noun_chunks(h_text, stop, h_tags, lexicon), t_text)
    pairs = []
    for s in sources:
        for t in targets:
            sim = emb.similarity(s, t)
            if threshold is None or sim >= threshold:
                pairs.append(TermPair(s, t, sim))
    pairs.sort(key=lambda p: (-_rounded(p.similarity), p.source, p.target))
    return pairs[:k]


# ---------------------------------------------------------------- navigation


class TargetMatcher:
    """Decides whether a graph node stands for the target term."""

    def __init__(self, g: DefinitionGraph, target: str):
        self.g = g
        self.target = target
        self.target_key = normalize(target)
        surfaces = {w for s in lookup(g, target) for w in g.synset_lemmas.get(s, ())}
        self.lemmas = sorted({(normalize(w), w) for w in surfaces if normalize(w)})
        if self.target_key and all(key != self.target_key for key, _ in self.lemmas):
            self.lemmas.append((self.target_key, " ".join(self.target_key)))
        exact = sorted(w for key, w in self.lemmas if key == self.target_key)
        self.target_lemma = exact[0] if exact else target.strip()
        self._keys = {key for key, _ in self.lemmas}

    def match(self, node: Term) -> str | None:
        """The node-side lemma naming the target, or None."""
        if isinstance(node, Literal):
            toks = normalize(node.text)
            best = None
            for key, surface in self.lemmas:
                at = contains_run(toks, key)
                if at >= 0:
                    cand = (at, -len(key), surface)
                    if best is None or cand < best:
                        best = cand
            return best[2] if best else None
        if isinstance(node, Statement):
            return None
        text = display_text(self.g, node)
        if normalize(text) in self._keys:
            return text
        hits = sorted(w for w in self.g.synset_lemmas.get(node, ()) if normalize(w) in self._keys)
        return hits[0] if hits else None


def _alias_synsets(g: DefinitionGraph, node: Resource) -> list[Resource]:
    if node in g.synset_lemmas:
        return []
    text = display_text(g, node)
    for v in _variants(text):
        syns = g.lemma_index.get(v)
        if syns:
            return sorted((s for s in syns if s != node), key=term_key)
    return []


def expand(g: DefinitionGraph, node: Term, bidirectional: bool = False) -> list[Edge]:
    """Outgoing edges of ``node``; a role resource also inherits the edges of
    synsets that have its text as a lemma."""
    if not isinstance(node, Resource):
        return []
    edges = set(neighbors(g, node, bidirectional))
    for syn in _alias_synsets(g, node):
        edges |= neighbors(g, syn, bidirectional)
    return sorted(edges, key=_edge_key)


def _edge_key(e: Edge) -> tuple[str, str, str]:
    return (term_key(e.target), e.predicate.iri, e.origin.iri)


class _Entry(NamedTuple):
    key: tuple
    node: Term
    depth: int
    parent: _Entry | None
    edge: Edge | None


def _chain(entry: _Entry) -> list[_Entry]:
    out = []
    while entry is not None:
        out.append(entry)
        entry = entry.parent
    return out[::-1]


def _best_first(g, starts, matcher, score, limit, beam, bidirectional):
    heap = []
    seq = 0
    for s in starts:
        heapq.heappush(heap, (((-score(s), term_key(s), 0), seq), _Entry(None, s, 0, None, None)))
        seq += 1
    closed: dict[Term, int] = {}
    trace = []
    while heap:
        _, entry = heapq.heappop(heap)
        if closed.get(entry.node, math.inf) <= entry.depth:
            continue
        closed[entry.node] = entry.depth
        trace.append(entry.node)
        lemma = matcher.match(entry.node)
        if lemma is not None:
            return entry, lemma, trace
        if entry.depth >= limit:
            continue
        on_path = {e.node for e in _chain(entry)}
        children = {}
        for edge in expand(g, entry.node, bidirectional):
            t = edge.target
            if t in on_path or t in children or closed.get(t, math.inf) <= entry.depth + 1:
                continue
            children[t] = edge
        ranked = sorted(children.values(), key=lambda e: (-score(e.target), _edge_key(e)))
        if beam is not None:
            ranked = ranked[:beam]
        for edge in ranked:
            key = (-score(edge.target), term_key(edge.target), entry.depth + 1)
            heapq.heappush(heap, ((key, seq), _Entry(key, edge.target, entry.depth + 1, entry, edge)))
            seq += 1
    return None, None, trace


def navigate(g: DefinitionGraph, source: str, target: str, emb,
             cfg: EntailConfig = EntailConfig()) -> NavigationPath | None:
    """Best-first walk from ``source`` towards ``target``; None when no path.

    Each expansion keeps the ``cfg.beam`` unvisited neighbours most similar to
    the target (beam 1 is greedy). Depth budgets 0..max_depth are tried in
    turn, so a larger budget never changes a path found under a smaller one.
    """
    starts = sorted(lookup(g, source), key=term_key)
    if not starts:
        raise UnknownTermError(f"source term {source!r} is not in the graph")
    matcher = TargetMatcher(g, target)
    cache: dict[Term, float] = {}

    def score(node: Term) -> float:
        if node not in cache:
            cache[node] = _rounded(emb.similarity(display_text(g, node), target))
        return cache[node]

    for limit in range(cfg.max_depth + 1):
        entry, lemma, trace = _best_first(g, starts, matcher, score, limit, cfg.beam, cfg.bidirectional)
        if entry is None:
            continue
        chain = _chain(entry)
        steps = tuple(
            Step(prev.node, e.edge.predicate, e.node, e.edge.origin)
            for prev, e in zip(chain, chain[1:])
        )
        if not steps:
            lemma = source.strip()
        return NavigationPath(source, target, steps, entry.node, lemma,
                              matcher.target_lemma if steps else target.strip(), tuple(trace))
    return None


# ---------------------------------------------------------------- justification


def _article(word: str) -> str:
    return "an" if word[:1].lower() in "aeiou" else "a"


def _capitalize(text: str) -> str:
    return text[:1].upper() + text[1:]


def _render(step: Step, g: DefinitionGraph) -> str:
    pred = base_predicate(step.predicate)
    subj, obj = step.subject, step.object
    if is_inverse(step.predicate):
        subj, obj = obj, subj
    a, b = display_text(g, subj), display_text(g, obj)
    if pred == HAS_SUPERTYPE:
        return f"{_capitalize(_article(a))} {a} is a kind of {b}"
    if pred == HAS_DIFF_QUAL:
        head = display_text(g, step.origin)
        return f"{_capitalize(_article(head))} {head} is {_article(a)} {a} {b}"
    if pred == HAS_DIFF_EVENT:
        return f"{_capitalize(_article(a))} {a} {b}"
    role = PREDICATE_ROLES.get(pred)
    name = role.human_name if role is not None else predicate_name(pred)
    return f"{a}: {name} \u2014 {b}"


def justify(path: NavigationPath, g: DefinitionGraph) -> Justification:
    """Sentences for each step, closed by a synonymy sentence when the target
    was reached through a synonym.

    A supertype step followed by a differentia quality from the same
    definition collapses into one sentence, since the latter restates it.
    """
    sentences = []
    steps = path.steps
    for i, step in enumerate(steps):
        nxt = steps[i + 1] if i + 1 < len(steps) else None
        if (step.predicate == HAS_SUPERTYPE and nxt is not None
                and nxt.predicate == HAS_DIFF_QUAL and nxt.origin == step.origin
                and nxt.subject == step.object):
            continue
        sentences.append(_render(step, g))
    if not steps or normalize(path.matched_lemma) != normalize(path.target_lemma):
        sentences.append(f"{_capitalize(path.matched_lemma)} is synonym of {path.target_lemma}")
    return Justification(tuple(sentences))


# ---------------------------------------------------------------- verdicts


class Attempt(NamedTuple):
    source: str
    target: str
    similarity: float
    outcome: str  # "path", "no_path" or "unknown_source"


@dataclass(frozen=True)
class Verdict:
    decision: str
    pair: TermPair | None
    path: NavigationPath | None
    justification: tuple[str, ...]
    attempts: tuple[Attempt, ...]

    @property
    def entails(self) -> bool:
        return self.decision == "entails"

    def to_json(self, g: DefinitionGraph) -> dict:
        return {
            "decision": self.decision,
            "source": self.pair.source if self.pair else None,
            "target": self.pair.target if self.pair else None,
            "path": self.path.describe(g) if self.path else [],
            "justification": list(self.justification),
            "attempts": [
                {"source": a.source, "target": a.target, "similarity": a.similarity, "outcome": a.outcome}
                for a in self.attempts
            ],
        }


def entail(g: DefinitionGraph, t_text: str, h_text: str, emb, cfg: EntailConfig = EntailConfig(), *,
           t_tags: Sequence[str] | None = None, h_tags: Sequence[str] | None = None) -> Verdict:
    """Decide whether T entails H; rejected when no candidate pair has a path."""

    def known(phrase: str) -> bool:
        return bool(lookup(g, phrase))

    pairs = select_term_pairs(t_text, h_text, emb, cfg.pair_count, lexicon=known,
                              t_tags=t_tags, h_tags=h_tags, threshold=cfg.accept_threshold)
    if not pairs:
        stop = getattr(emb, "stopwords", frozenset())
        nothing_new = not _novel(noun_chunks(h_text, stop, h_tags, known), t_text)
        return Verdict("entails" if nothing_new else "rejected", None, None, (), ())

    attempts = []
    for pair in pairs:
        try:
            path = navigate(g, pair.source, pair.target, emb, cfg)
        except UnknownTermError:
            attempts.append(Attempt(*pair, "unknown_source"))
            continue
        if path is None:
            attempts.append(Attempt(*pair, "no_path"))
            continue
        attempts.append(Attempt(*pair, "path"))
        return Verdict("entails", pair, path, justify(path, g).sentences, tuple(attempts))
    return Verdict("rejected", None, None, (), tuple(attempts))
