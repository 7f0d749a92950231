"""
Penn-Treebank style bracketed trees, aligned to the gloss they were parsed from.

Leaves are preterminals: a node such as ``(NN whiskey)`` is one leaf whose
label is the part-of-speech tag and whose token is the word. Every leaf
carries a ``[start, end)`` character span into the gloss; internal nodes
span the hull of their children.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Iterable, Iterator

__all__ = [
    "TreeSyntaxError",
    "TreeNode",
    "ParseTree",
    "parse_tree",
    "find_nodes",
    "contains_category",
    "label_matches",
]

_TOKEN_RE = re.compile(r"\(|\)|[^\s()]+")

# PTB escapes and the surface strings they may stand for in the gloss.
_PTB_ESCAPES = {
    "-LRB-": ("(",),
    "-RRB-": (")",),
    "-LSB-": ("[",),
    "-RSB-": ("]",),
    "-LCB-": ("{",),
    "-RCB-": ("}",),
    "``": ('"', "``"),
    "''": ('"', "''"),
    "`": ("'",),
}


class TreeSyntaxError(ValueError):
    """Malformed bracketing or a tree that does not line up with its gloss."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at offset {position}")
        self.position = position


@dataclass(frozen=True, eq=False)
class TreeNode:
    label: str
    children: tuple[TreeNode, ...] = ()
    token: str | None = None
    start: int = 0
    end: int = 0

    @property
    def is_leaf(self) -> bool:
        return not self.children

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)

    def subtree(self) -> Iterator[TreeNode]:
        """Preorder walk including this node."""
        stack = [self]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(reversed(node.children))

    def leaves(self) -> list[TreeNode]:
        return [n for n in self.subtree() if n.is_leaf]

    def render(self) -> str:
        if self.is_leaf:
            return f"({self.label} {self.token})"
        return "(" + self.label + " " + " ".join(c.render() for c in self.children) + ")"

    def __repr__(self) -> str:
        if self.is_leaf:
            return f"TreeNode({self.label} {self.token!r} [{self.start},{self.end}))"
        return f"TreeNode({self.label} [{self.start},{self.end}) {len(self.children)} children)"


@dataclass(frozen=True, eq=False)
class ParseTree:
    root: TreeNode
    source_text: str
    _depth: dict = field(init=False, repr=False)
    _parent: dict = field(init=False, repr=False)
    _leaf_index: dict = field(init=False, repr=False)
    _leaves: tuple = field(init=False, repr=False)

    def __post_init__(self):
        depth: dict[int, int] = {id(self.root): 0}
        parent: dict[int, TreeNode | None] = {id(self.root): None}
        for node in self.root.subtree():
            for child in node.children:
                depth[id(child)] = depth[id(node)] + 1
                parent[id(child)] = node
        leaves = tuple(self.root.leaves())
        object.__setattr__(self, "_depth", depth)
        object.__setattr__(self, "_parent", parent)
        object.__setattr__(self, "_leaves", leaves)
        object.__setattr__(self, "_leaf_index", {id(leaf): i for i, leaf in enumerate(leaves)})

    @property
    def leaves(self) -> tuple[TreeNode, ...]:
        return self._leaves

    def depth(self, node: TreeNode) -> int:
        return self._depth[id(node)]

    def parent(self, node: TreeNode) -> TreeNode | None:
        return self._parent[id(node)]

    def ancestors(self, node: TreeNode) -> Iterator[TreeNode]:
        up = self.parent(node)
        while up is not None:
            yield up
            up = self.parent(up)

    def leaf_range(self, node: TreeNode) -> tuple[int, int]:
        """Half-open range of leaf indices covered by ``node``."""
        if node.is_leaf:
            i = self._leaf_index[id(node)]
            return i, i + 1
        first = node
        while first.children:
            first = first.children[0]
        last = node
        while last.children:
            last = last.children[-1]
        return self._leaf_index[id(first)], self._leaf_index[id(last)] + 1

    def text(self, node: TreeNode) -> str:
        return self.source_text[node.start:node.end]

    def nodes(self) -> Iterator[TreeNode]:
        """Preorder walk that skips a top-level ROOT wrapper."""
        for node in self.root.subtree():
            if node is self.root and node.label == "ROOT":
                continue
            yield node

    def render(self) -> str:
        return self.root.render()


def _bare_label(label: str) -> str:
    # -NONE-, -LRB- and friends are labels in their own right
    if label.startswith("-"):
        return label
    bare = re.split(r"[-=]", label, maxsplit=1)[0]
    return bare or label


def _tokenize(text: str) -> list[tuple[str, int]]:
    return [(m.group(), m.start()) for m in _TOKEN_RE.finditer(text)]


def _read_brackets(text: str):
    """Build a nested (label, children|token, position) structure."""
    tokens = _tokenize(text)
    if not tokens:
        raise TreeSyntaxError("empty tree", 0)
    if tokens[0][0] != "(":
        raise TreeSyntaxError("expected '('", tokens[0][1])

    # each frame: [label, items, open_position]
    stack: list[list] = []
    result = None
    i = 0
    while i < len(tokens):
        tok, pos = tokens[i]
        if tok == "(":
            if result is not None:
                raise TreeSyntaxError("trailing text after tree", pos)
            nxt = tokens[i + 1] if i + 1 < len(tokens) else None
            if nxt is None:
                raise TreeSyntaxError("unbalanced brackets", len(text))
            if nxt[0] == ")":
                raise TreeSyntaxError("empty node", pos)
            if nxt[0] == "(":
                # PTB files wrap trees in an unlabeled bracket
                stack.append(["ROOT", [], pos])
                i += 1
            else:
                stack.append([_bare_label(nxt[0]), [], pos])
                i += 2
            continue
        if tok == ")":
            if not stack:
                raise TreeSyntaxError("unbalanced brackets", pos)
            label, items, open_pos = stack.pop()
            if not items:
                raise TreeSyntaxError("empty node", open_pos)
            node = (label, items, open_pos)
            if stack:
                stack[-1][1].append(node)
            else:
                result = node
            i += 1
            continue
        if not stack:
            raise TreeSyntaxError("trailing text after tree", pos)
        stack[-1][1].append((tok, pos))
        i += 1
    if stack:
        raise TreeSyntaxError("unbalanced brackets", len(text))
    return result


def _surface_forms(token: str) -> tuple[str, ...]:
    forms = (token,) + _PTB_ESCAPES.get(token, ())
    unescaped = token.replace("\\/", "/").replace("\\*", "*")
    if unescaped != token:
        forms += (unescaped,)
    return forms


def parse_tree(text: str, gloss: str | None = None) -> ParseTree:
    """Parse one bracketed tree and align its leaves to ``gloss``.

    When ``gloss`` is omitted the leaf tokens joined by single spaces are used.
    Functional tags (``NP-SBJ``) and indices (``NP=2``) are stripped, and empty
    ``-NONE-`` elements are dropped.
    """
    raw = _read_brackets(text)

    def build(item):
        label, items, open_pos = item
        if label == "-NONE-":
            return None
        words = [x for x in items if len(x) == 2]
        subtrees = [x for x in items if len(x) == 3]
        if words and subtrees:
            raise TreeSyntaxError("node mixes bare tokens and subtrees", open_pos)
        if words:
            if len(words) > 1:
                raise TreeSyntaxError("preterminal holds more than one token", words[1][1])
            return (label, words[0][0])
        kids = [k for k in (build(s) for s in subtrees) if k is not None]
        if not kids:
            return None
        return (label, kids)

    shape = build(raw)
    if shape is None:
        raise TreeSyntaxError("tree has no leaves", 0)

    tokens: list[str] = []

    def collect(s):
        if isinstance(s[1], str):
            tokens.append(s[1])
        else:
            for k in s[1]:
                collect(k)

    collect(shape)
    if gloss is None:
        gloss = " ".join(_PTB_ESCAPES[t][0] if t in _PTB_ESCAPES else t for t in tokens)

    spans = _align(tokens, gloss)
    leaf_iter = iter(spans)

    def materialize(s) -> TreeNode:
        label, body = s
        if isinstance(body, str):
            start, end = next(leaf_iter)
            return TreeNode(label, (), body, start, end)
        kids = tuple(materialize(k) for k in body)
        return TreeNode(label, kids, None, kids[0].start, kids[-1].end)

    return ParseTree(materialize(shape), gloss)


def _align(tokens: list[str], gloss: str) -> list[tuple[int, int]]:
    spans = []
    pos = 0
    n = len(gloss)
    for tok in tokens:
        while pos < n and gloss[pos].isspace():
            pos += 1
        for form in _surface_forms(tok):
            if gloss.startswith(form, pos):
                spans.append((pos, pos + len(form)))
                pos += len(form)
                break
        else:
            raise TreeSyntaxError(f"leaf token {tok!r} does not match gloss", pos)
    if gloss[pos:].strip():
        raise TreeSyntaxError("gloss has text not covered by the tree", pos)
    return spans


def label_matches(label: str, wanted: str, family: bool = False) -> bool:
    if family:
        return label.startswith(wanted)
    return label == wanted


def find_nodes(tree: ParseTree, label_set: Iterable[str], family: bool = False) -> list[TreeNode]:
    """All nodes whose label is in ``label_set``, ordered by start ascending then
    depth descending: the innermost, leftmost match comes first."""
    wanted = tuple(label_set)
    if not wanted:
        return []
    hits = [
        n for n in tree.nodes()
        if any(label_matches(n.label, w, family) for w in wanted)
    ]
    hits.sort(key=lambda n: (n.start, -tree.depth(n)))
    return hits


def contains_category(node: TreeNode, label: str, family: bool = False) -> bool:
    return any(label_matches(n.label, label, family) for n in node.subtree())
