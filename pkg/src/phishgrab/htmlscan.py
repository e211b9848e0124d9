"""Lenient HTML tree scanner built on html.parser.

Real-world phishing pages are rarely well-formed, so the builder never raises on
bad markup: stray end tags are dropped, unclosed elements are closed implicitly,
and void elements never capture children. Entities are decoded; script/style
bodies come through raw.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from html.parser import HTMLParser
from typing import Iterator, Union

VOID_TAGS = frozenset({
    "area", "base", "br", "col", "embed", "hr", "img", "input",
    "link", "meta", "param", "source", "track", "wbr",
})


@dataclass
class Node:
    tag: str
    attrs: dict
    children: list = field(default_factory=list)  # Node or str

    def get(self, name: str, default=None):
        return self.attrs.get(name, default)

    def text(self) -> str:
        """Concatenated text of this subtree, document order."""
        out: list[str] = []
        stack: list[Union[Node, str]] = [self]
        while stack:
            item = stack.pop()
            if isinstance(item, str):
                out.append(item)
            else:
                stack.extend(reversed(item.children))
        return "".join(out)

    def iter_nodes(self) -> Iterator["Node"]:
        """All element nodes in this subtree, preorder (document order)."""
        stack: list[Node] = [self]
        while stack:
            node = stack.pop()
            if node is not self:
                yield node
            stack.extend(
                child for child in reversed(node.children) if isinstance(child, Node)
            )

    def find_all(self, *tags: str) -> list["Node"]:
        wanted = set(tags)
        return [n for n in self.iter_nodes() if n.tag in wanted]


class _TreeBuilder(HTMLParser):
    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.root = Node("#document", {})
        self._stack = [self.root]

    def handle_starttag(self, tag, attrs):
        node = Node(tag, _attr_dict(attrs))
        self._stack[-1].children.append(node)
        if tag not in VOID_TAGS:
            self._stack.append(node)

    def handle_startendtag(self, tag, attrs):
        self._stack[-1].children.append(Node(tag, _attr_dict(attrs)))

    def handle_endtag(self, tag):
        # Close the innermost matching open element; unmatched end tags are noise.
        for i in range(len(self._stack) - 1, 0, -1):
            if self._stack[i].tag == tag:
                del self._stack[i:]
                return

    def handle_data(self, data):
        if data:
            self._stack[-1].children.append(data)


def _attr_dict(attrs) -> dict:
    out: dict = {}
    for name, value in attrs:
        if name not in out:  # first occurrence wins, like browsers
            out[name] = value if value is not None else ""
    return out


def scan(html: str) -> Node:
    """Parse ``html`` into a Node tree. Never raises on malformed input."""
    builder = _TreeBuilder()
    try:
        builder.feed(html)
        builder.close()
    except Exception:
        # html.parser is robust, but a truncated entity or similar should not
        # take the whole sample down; keep whatever tree was built.
        pass
    return builder.root
