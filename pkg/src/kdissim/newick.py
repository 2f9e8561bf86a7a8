"""Newick reading and writing with exact branch lengths.

Grammar (whitespace allowed between tokens)::

    tree     := node ";"
    node     := "(" node ("," node)* ")" [":" length]
              | label [":" length]
    length   := integer | decimal [exponent] | integer "/" integer

Missing branch lengths default to 1. Interior labels and a branch length on
the top-level node are rejected. The top-level node having degree two marks
the tree as rooted.
"""

from __future__ import annotations

from fractions import Fraction
from pathlib import Path

from .rational import format_rational, parse_rational
from .tree import Tree, TreeError, _canonical_start, _ordered_children, canonicalize, check_label

_SPECIAL = set("(),:;")


class NewickError(TreeError):
    """Malformed Newick text; ``position`` is the 0-based character offset."""

    def __init__(self, message: str, position: int | None = None):
        if position is not None:
            message = f"{message} at position {position}"
        super().__init__(message)
        self.position = position


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.edges: list[tuple[int, int, Fraction]] = []
        self.labels: dict[int, str] = {}
        self.children: dict[int, list[int]] = {}
        self.next_id = 0

    def skip(self) -> None:
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def expect(self, ch: str) -> None:
        if self.peek() != ch:
            found = self.peek() or "end of input"
            raise NewickError(f"expected {ch!r}, found {found!r}", self.pos)
        self.pos += 1

    def token(self) -> tuple[str, int]:
        self.skip()
        start = self.pos
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch in _SPECIAL or ch.isspace():
                break
            self.pos += 1
        return self.text[start : self.pos], start

    def length(self) -> Fraction | None:
        if self.peek() != ":":
            return None
        self.pos += 1
        tok, start = self.token()
        try:
            return parse_rational(tok)
        except (ValueError, ZeroDivisionError) as exc:
            raise NewickError(str(exc), start) from None

    def node(self) -> tuple[int, Fraction | None]:
        v = self.next_id
        self.next_id += 1
        if self.peek() == "(":
            self.pos += 1
            kids = []
            while True:
                child, w = self.node()
                kids.append(child)
                self.edges.append((v, child, Fraction(1) if w is None else w))
                if self.peek() == ",":
                    self.pos += 1
                    continue
                self.expect(")")
                break
            self.children[v] = kids
            tok, start = self.token()
            if tok:
                raise NewickError(f"interior label {tok!r} not supported", start)
        else:
            tok, start = self.token()
            if not tok:
                found = self.peek() or "end of input"
                raise NewickError(f"expected a label, found {found!r}", start)
            if tok in self.labels.values():
                raise NewickError(f"duplicate leaf label {tok!r}", start)
            try:
                check_label(tok)
            except TreeError:
                raise NewickError(f"invalid label {tok!r}", start) from None
            self.labels[v] = tok
            self.children[v] = []
        return v, self.length()


def parse_newick(text: str, rooted_hint: bool | None = None) -> Tree:
    """Parse one Newick statement into a :class:`Tree`.

    The result is rooted when the top-level node has two children or
    ``rooted_hint`` is true; ``rooted_hint=False`` forces an unrooted tree,
    suppressing a degree-two top-level node.
    """
    p = _Parser(text)
    top, top_len = p.node()
    if top_len is not None:
        raise NewickError("branch length on the top-level node", p.pos)
    p.expect(";")
    if p.peek():
        raise NewickError("trailing text after ';'", p.pos)
    for v, kids in p.children.items():
        if v != top and len(kids) == 1:
            raise NewickError(f"interior node with a single child (vertex {v})")
    top_deg = len(p.children[top])
    if top_deg == 0:
        if rooted_hint is False:
            raise NewickError("a single leaf cannot form an unrooted tree")
        return Tree([], p.labels, top)
    if top_deg == 1:
        raise NewickError("top-level node has a single child")
    rooted = rooted_hint if rooted_hint is not None else top_deg == 2
    if rooted:
        return Tree(p.edges, p.labels, top)
    edges = p.edges
    if top_deg == 2:
        (_, x, wx), (_, y, wy) = [e for e in edges if e[0] == top]
        edges = [e for e in edges if e[0] != top] + [(x, y, wx + wy)]
    return Tree(edges, p.labels, None)


def write_newick(t: Tree) -> str:
    """Canonical Newick text for ``t`` (after :func:`canonicalize`), with ``;``."""
    t = canonicalize(t)
    memo: dict = {}

    def render(v: int, parent: int | None) -> str:
        if t.is_leaf(v) and parent is not None:
            return t.label(v)
        parts = [
            render(w, v) + ":" + format_rational(t.weight(v, w))
            for w in _ordered_children(t, v, parent, memo)
        ]
        return "(" + ",".join(parts) + ")"

    if t.is_rooted:
        if not t.edges:
            return t.leaves[0] + ";"
        start = t.root
    else:
        start = _canonical_start(t)
        if len(t.leaves) > 2:
            start = t.neighbors(start)[0]
        else:
            a, b = t.leaves
            return f"({a}:{format_rational(t.edges[0][2])},{b}:0);"
    return render(start, None) + ";"


def read_newick(path: str | Path, rooted_hint: bool | None = None) -> Tree:
    return parse_newick(Path(path).read_text(encoding="utf-8"), rooted_hint)


def save_newick(t: Tree, path: str | Path) -> None:
    Path(path).write_text(write_newick(t) + "\n", encoding="utf-8")
