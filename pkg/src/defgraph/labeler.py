"""
Rule-based role pre-annotation over constituency trees, and recovery of a
missing supertype in already-labeled definitions.

The cascade works on leaf indices: each rule claims runs of leaves for a role,
and later rules only see what earlier rules left unclaimed (except the event
component rule, which carves locations and times out of an event).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from pathlib import Path
from typing import NamedTuple, Sequence

from .annotation import (
    DEFAULT_ALLOWED_UNCOVERED,
    AnnotatedDefinition,
    RoleLabel,
    RoleSpan,
    only_function_words,
)
from .treebank import ParseTree, TreeNode, contains_category, find_nodes

log = logging.getLogger(__name__)

__all__ = ["RuleConfig", "Recovery", "LabelingError", "preannotate", "recover_supertype",
           "find_supertype", "load_word_list"]

RULES = ("supertype", "event", "components", "quality", "purpose", "fallback")

LOCATION_NE = frozenset({"LOCATION", "LOC", "GPE", "CITY", "COUNTRY", "STATE_OR_PROVINCE"})
TIME_NE = frozenset({"DATE", "TIME", "DURATION", "SET"})

_DETERMINER_TAGS = frozenset({"DT", "PDT", "PRP$", "WP$", "WDT", "POS"})
_FUNCTION_TAGS = _DETERMINER_TAGS | frozenset({
    "CC", "IN", "TO", "EX", "WP", "WRB", "RP", "UH", "SYM", "LS",
    ",", ".", ":", "``", "''", "-LRB-", "-RRB-", "#", "$",
})


class LabelingError(ValueError):
    pass


@dataclass(frozen=True)
class RuleConfig:
    noun_family_matching: bool = False
    temporal_head_nouns: frozenset[str] = frozenset({
        "century", "centuries", "year", "time", "period", "era", "day", "age",
        "decade", "month", "week", "hour", "season", "morning", "evening",
        "night", "dawn", "dusk", "epoch", "millennium",
    })
    location_prepositions: frozenset[str] = frozenset({
        "in", "at", "near", "from", "on", "throughout", "across", "within", "around",
    })
    purpose_markers: frozenset[str] = frozenset({"for", "to"})
    gazetteer: frozenset[str] = frozenset()
    allowed_uncovered: frozenset[str] = DEFAULT_ALLOWED_UNCOVERED
    disabled_rules: frozenset[str] = frozenset()

    def __post_init__(self):
        for name in ("temporal_head_nouns", "location_prepositions", "purpose_markers"):
            words = frozenset(w.strip().lower() for w in getattr(self, name) if w.strip())
            if not words:
                raise ValueError(f"{name} must not be empty")
            object.__setattr__(self, name, words)
        object.__setattr__(self, "gazetteer", frozenset(w.lower() for w in self.gazetteer))
        unknown = set(self.disabled_rules) - set(RULES)
        if unknown:
            raise ValueError(f"unknown rules: {sorted(unknown)}")

    def enabled(self, rule: str) -> bool:
        return rule not in self.disabled_rules


def load_word_list(path: str | Path) -> frozenset[str]:
    """Newline-delimited words; blank lines and ``#`` comments are skipped."""
    words = set()
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            words.add(line.lower())
    return frozenset(words)


def _is_noun(label: str) -> bool:
    return label.startswith("NN")


def _is_verb(label: str) -> bool:
    return label.startswith("VB") or label == "MD"


def _head_core(node: TreeNode) -> list[TreeNode] | None:
    """Leaves of the head noun (compounds included) of an NP-like node."""
    kids = node.children
    noun_idx = [i for i, c in enumerate(kids) if c.is_leaf and _is_noun(c.label)]
    if noun_idx:
        last = noun_idx[-1]
        first = last
        while first > 0 and kids[first - 1].is_leaf and _is_noun(kids[first - 1].label):
            first -= 1
        return list(kids[first:last + 1])
    for c in kids:
        if c.label == "NP":
            core = _head_core(c)
            if core:
                return core
    return None


def _noun_leaves(node: TreeNode, family: bool) -> list[TreeNode]:
    return [lf for lf in node.leaves()
            if (lf.label.startswith("NN") if family else lf.label == "NN")]


class _Supertype(NamedTuple):
    start: int  # leaf index
    end: int
    np: TreeNode | None


def find_supertype(tree: ParseTree, pos: str, cfg: RuleConfig) -> _Supertype | None:
    """Rule (1): leaf range of the supertype candidate, or None."""
    if pos == "verb":
        return _verb_supertype(tree)
    family = cfg.noun_family_matching
    for np in find_nodes(tree, {"NP"}):
        if not contains_category(np, "NN", family):
            continue
        core = _head_core(np) or _noun_leaves(np, family)[-1:]
        i, _ = tree.leaf_range(core[0])
        _, j = tree.leaf_range(core[-1])
        return _Supertype(i, j, np)
    return None


def _verb_supertype(tree: ParseTree) -> _Supertype | None:
    vps = find_nodes(tree, {"VP"})
    if not vps:
        return None
    first_start = vps[0].start
    vp = min((v for v in vps if v.start == first_start), key=tree.depth)
    leaves = vp.leaves()
    k = next((n for n, lf in enumerate(leaves) if _is_verb(lf.label)), None)
    if k is None:
        return None
    m = k
    while m + 1 < len(leaves) and (_is_verb(leaves[m + 1].label) or leaves[m + 1].label == "RP"):
        m += 1
    i, _ = tree.leaf_range(leaves[k])
    _, j = tree.leaf_range(leaves[m])
    return _Supertype(i, j, vp)


class _Claims:
    """Leaf ownership table shared by the rules."""

    def __init__(self, tree: ParseTree):
        self.tree = tree
        self.owner: list[int | None] = [None] * len(tree.leaves)
        self.labels: list[RoleLabel] = []

    def free(self, i: int, j: int) -> bool:
        return all(o is None for o in self.owner[i:j])

    def node_free(self, node: TreeNode) -> bool:
        return self.free(*self.tree.leaf_range(node))

    def claim(self, i: int, j: int, label: RoleLabel, overwrite: bool = False) -> int:
        seg = len(self.labels)
        self.labels.append(label)
        for k in range(i, j):
            if overwrite or self.owner[k] is None:
                self.owner[k] = seg
        return seg

    def keep_first_run(self, seg: int) -> None:
        idx = [k for k, o in enumerate(self.owner) if o == seg]
        if not idx:
            return
        k = idx[0]
        while k < len(self.owner) and self.owner[k] == seg:
            k += 1
        for r in idx:
            if r >= k:
                self.owner[r] = None

    def spans(self) -> list[RoleSpan]:
        leaves = self.tree.leaves
        gloss = self.tree.source_text
        out = []
        k = 0
        while k < len(self.owner):
            seg = self.owner[k]
            if seg is None:
                k += 1
                continue
            m = k
            while m + 1 < len(self.owner) and self.owner[m + 1] == seg:
                m += 1
            start, end = leaves[k].start, leaves[m].end
            out.append(RoleSpan(start, end, self.labels[seg], gloss[start:end]))
            k = m + 1
        return out


def _first_word(node: TreeNode) -> str:
    return node.leaves()[0].token.lower()


def _np_heads(node: TreeNode) -> list[str]:
    heads = []
    for n in node.subtree():
        if n.label == "NP":
            core = _head_core(n)
            if core:
                heads.append(core[-1].token.lower())
    return heads


def _ne_tags_in(tree: ParseTree, node: TreeNode, ne_tags: Sequence[str] | None) -> set[str]:
    if ne_tags is None:
        return set()
    i, j = tree.leaf_range(node)
    return {t.upper() for t in ne_tags[i:j] if t}


def _is_time(tree, node, cfg, ne_tags) -> bool:
    if _ne_tags_in(tree, node, ne_tags) & TIME_NE:
        return True
    return any(h in cfg.temporal_head_nouns for h in _np_heads(node))


def _is_location(tree, node, cfg, ne_tags) -> bool:
    if node.label != "PP" or _first_word(node) not in cfg.location_prepositions:
        return False
    tags = _ne_tags_in(tree, node, ne_tags)
    if tags & LOCATION_NE:
        return True
    if ne_tags is not None and tags - {"O"}:
        # an NE tagger saw something, and it is not a place
        return False
    rest = node.leaves()[1:]
    return any(lf.label in ("NNP", "NNPS") or lf.token.lower() in cfg.gazetteer for lf in rest)


def _is_purpose(node: TreeNode, cfg: RuleConfig) -> bool:
    leaves = node.leaves()
    if len(leaves) < 2:
        return False
    head = leaves[0].token.lower()
    if node.label == "PP" and head == "for" and "for" in cfg.purpose_markers:
        return leaves[1].label == "VBG"
    if node.label in ("S", "VP") and leaves[0].label == "TO" and "to" in cfg.purpose_markers:
        return leaves[1].label == "VB"
    return False


def _component_candidates(tree: ParseTree, within: TreeNode, claims: _Claims):
    """PPs (and bare NPs directly under a VP) below ``within``, outermost first."""
    stack = list(reversed(within.children))
    while stack:
        node = stack.pop()
        if node.is_leaf:
            continue
        parent = tree.parent(node)
        if node.label == "PP" or (node.label == "NP" and parent is not None and parent.label == "VP"):
            yield node
        stack.extend(reversed(node.children))


def _carve_components(tree, within, claims, cfg, ne_tags, host_seg=None, outside=False, after=0):
    carved_nodes: list[TreeNode] = []
    for node in _component_candidates(tree, within, claims):
        if any(c in tree.ancestors(node) for c in carved_nodes):
            continue
        i, j = tree.leaf_range(node)
        if outside and (node.start < after or not claims.free(i, j)):
            continue
        if _is_time(tree, node, cfg, ne_tags) and (node.label == "PP" or not outside):
            label = RoleLabel.EVENT_TIME
        elif _is_location(tree, node, cfg, ne_tags):
            if outside and _first_word(node) == "from":
                label = RoleLabel.ORIGIN_LOCATION
            else:
                label = RoleLabel.EVENT_LOCATION
        else:
            continue
        claims.claim(i, j, label, overwrite=host_seg is not None)
        carved_nodes.append(node)
    if host_seg is not None and carved_nodes:
        claims.keep_first_run(host_seg)


def _pre_head_modifiers(tree, sup: _Supertype, claims: _Claims) -> None:
    core_first = tree.leaves[sup.start]
    parent = tree.parent(core_first)
    if parent is None:
        return
    kids = list(parent.children)
    k = next(n for n, c in enumerate(kids) if tree.leaf_range(c)[0] >= sup.start)
    pre = kids[:k]
    while pre and pre[0].is_leaf and pre[0].label in _DETERMINER_TAGS | {"CC", ","}:
        pre.pop(0)
    for child in pre:
        _claim_quality(tree, child, claims)
    # post-head ADJP siblings along the NP chain up to the chosen NP
    node = parent
    while node is not None:
        for child in node.children:
            if child.label == "ADJP" and child.start >= tree.leaves[sup.end - 1].end:
                _claim_quality(tree, child, claims)
        if node is sup.np:
            break
        node = tree.parent(node)


def _claim_quality(tree, node: TreeNode, claims: _Claims) -> None:
    i, j = tree.leaf_range(node)
    if not claims.free(i, j):
        return
    leaves = tree.leaves[i:j]
    if node.label in _FUNCTION_TAGS:
        return
    m = 0
    if node.label in ("ADJP", "ADVP") or node.is_leaf:
        while m < len(leaves) and (leaves[m].label.startswith("RB")):
            m += 1
        if node.is_leaf and m == 1:
            claims.claim(i, j, RoleLabel.QUALITY_MODIFIER)
            return
        if m == len(leaves):
            m = 0
    if m:
        claims.claim(i, i + m, RoleLabel.QUALITY_MODIFIER)
    claims.claim(i + m, j, RoleLabel.DIFFERENTIA_QUALITY)


def _merge_adjacent(claims: _Claims, label: RoleLabel) -> None:
    """Consecutive runs that share a label from the same rule become one segment."""
    prev = None
    for k, seg in enumerate(claims.owner):
        if seg is not None and prev is not None and seg != prev \
                and claims.labels[seg] is label and claims.labels[prev] is label:
            for r in range(len(claims.owner)):
                if claims.owner[r] == seg:
                    claims.owner[r] = prev
            seg = prev
        prev = seg


def _fallback(tree: ParseTree, node: TreeNode, claims: _Claims) -> None:
    i, j = tree.leaf_range(node)
    if claims.free(i, j) and node is not tree.root:
        content = [lf for lf in node.leaves() if lf.label not in _FUNCTION_TAGS]
        if content:
            adjectival = node.label in ("ADJP",) or node.label.startswith("JJ")
            label = RoleLabel.ACCESSORY_QUALITY if adjectival else RoleLabel.ASSOCIATED_FACT
            claims.claim(i, j, label)
        return
    for child in node.children:
        _fallback(tree, child, claims)


def preannotate(tree: ParseTree, pos: str, cfg: RuleConfig = RuleConfig(), *,
                id: str = "", lemmas: Sequence[str] = (),
                ne_tags: Sequence[str] | None = None) -> AnnotatedDefinition:
    """Assign role spans to the gloss of ``tree`` with the ordered rule cascade.

    ``ne_tags`` optionally gives one named-entity tag per leaf; when present it
    takes priority over the gazetteer for location and time decisions.
    """
    if not tree.leaves:
        raise LabelingError("tree has no leaves")
    if ne_tags is not None and len(ne_tags) != len(tree.leaves):
        raise LabelingError(f"{len(ne_tags)} NE tags for {len(tree.leaves)} leaves")
    if pos not in ("noun", "verb"):
        raise LabelingError(f"pos must be noun or verb, not {pos!r}")

    claims = _Claims(tree)
    sup = find_supertype(tree, pos, cfg) if cfg.enabled("supertype") else None
    if sup is not None:
        claims.claim(sup.start, sup.end, RoleLabel.SUPERTYPE)
        # verb particle split from its verb by an object
        if pos == "verb" and sup.np is not None:
            for lf in sup.np.leaves():
                a, b = tree.leaf_range(lf)
                if lf.label == "RP" and a > sup.end and claims.free(a, b):
                    claims.claim(a, b, RoleLabel.ROLE_PARTICLE)
    sup_end_char = tree.leaves[sup.end - 1].end if sup is not None else 0

    purpose_on = cfg.enabled("purpose")
    events: list[tuple[TreeNode, int]] = []
    if cfg.enabled("event"):
        def blocked(n):
            if n.label == "PP":
                return True
            return purpose_on and _is_purpose(n, cfg)

        candidates = [
            n for n in tree.nodes()
            if n.label in ("SBAR", "VP") and n.start >= sup_end_char
            and not blocked(n) and not any(blocked(a) for a in tree.ancestors(n))
        ]
        for n in candidates:
            if any(a in candidates for a in tree.ancestors(n)):
                continue
            i, j = tree.leaf_range(n)
            if claims.free(i, j):
                events.append((n, claims.claim(i, j, RoleLabel.DIFFERENTIA_EVENT)))

    if cfg.enabled("components"):
        for node, seg in events:
            _carve_components(tree, node, claims, cfg, ne_tags, host_seg=seg)
        if sup is not None and sup.np is not None and pos == "noun":
            # modifiers of the supertype itself ("poets at the beginning of ...")
            scope = sup.np
            while tree.parent(scope) is not None and tree.parent(scope).label == "NP":
                scope = tree.parent(scope)
            _carve_components(tree, scope, claims, cfg, ne_tags, outside=True, after=sup_end_char)

    if cfg.enabled("quality") and sup is not None and pos == "noun":
        _pre_head_modifiers(tree, sup, claims)
        _merge_adjacent(claims, RoleLabel.DIFFERENTIA_QUALITY)

    if purpose_on:
        for n in tree.nodes():
            if n.label in ("PP", "S", "VP") and _is_purpose(n, cfg) and claims.node_free(n):
                i, j = tree.leaf_range(n)
                claims.claim(i, j, RoleLabel.PURPOSE)

    if cfg.enabled("fallback"):
        _fallback(tree, tree.root, claims)

    return AnnotatedDefinition(id, pos, tuple(lemmas), tree.source_text, tuple(claims.spans()))


class Recovery(NamedTuple):
    definition: AnnotatedDefinition
    recovered: bool
    warning: str | None


def _trim(gloss: str, start: int, end: int) -> tuple[int, int]:
    while start < end and gloss[start].isspace():
        start += 1
    while end > start and gloss[end - 1].isspace():
        end -= 1
    return start, end


def recover_supertype(defn: AnnotatedDefinition, tree: ParseTree,
                      cfg: RuleConfig = RuleConfig()) -> Recovery:
    """Insert a supertype found by rule (1) into a definition that lacks one.

    Spans that overlap the recovered supertype are cut around it; every other
    span is returned untouched.
    """
    if tree.source_text != defn.gloss:
        raise LabelingError(f"tree does not match the gloss of {defn.id!r}")
    if defn.spans_with(RoleLabel.SUPERTYPE):
        return Recovery(defn, False, "definition already has a supertype")
    sup = find_supertype(tree, defn.pos, cfg)
    if sup is None:
        return Recovery(defn, False, "no supertype candidate in tree")

    gloss = defn.gloss
    cs, ce = tree.leaves[sup.start].start, tree.leaves[sup.end - 1].end
    kept: list[RoleSpan] = []
    for span in defn.spans:
        if span.end <= cs or span.start >= ce:
            kept.append(span)
            continue
        for a, b in ((span.start, cs), (ce, span.end)):
            a, b = _trim(gloss, a, b)
            if a < b and not only_function_words(gloss[a:b], cfg.allowed_uncovered):
                kept.append(replace(span, start=a, end=b, text=gloss[a:b]))
    kept.append(RoleSpan(cs, ce, RoleLabel.SUPERTYPE, gloss[cs:ce]))
    return Recovery(defn.with_spans(kept), True, None)
