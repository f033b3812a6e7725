"""Compile scenario ASTs into executable decision graphs.

Node 0 is the entry; every statement becomes one numbered node in
order.  The segment leading into an observation statement carries one
edge per observed object, each backed by a weight-table reference, so a
choice among objects runs through the same weighted-decision machinery
as feeding-path choice.  A final decision-request statement marks its
node as the graph's output; observation-only scenarios compile to a
compartmental graph with no output node.

Graphs are canonical values: nodes sorted by id, edges sorted by
(src, dst, object, table).  ``render`` emits a line-oriented text form
and ``deserialize`` reads it back; on canonical graphs the round trip
is the identity.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import ConfigurationError, StateError
from .parser import ScenarioAst


@dataclass(frozen=True, slots=True)
class GraphNode:
    id: int
    kind: str
    output: bool = False


@dataclass(frozen=True, slots=True)
class GraphEdge:
    src: int
    dst: int
    object: str | None = None
    table: str | None = None


def _edge_key(e: GraphEdge):
    return (e.src, e.dst, e.object or "", e.table or "")


@dataclass(frozen=True, slots=True)
class DecisionGraph:
    nodes: tuple[GraphNode, ...]
    edges: tuple[GraphEdge, ...]

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(sorted(self.nodes, key=lambda n: n.id)))
        object.__setattr__(self, "edges", tuple(sorted(self.edges, key=_edge_key)))
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise ConfigurationError("duplicate node ids")
        if not self.nodes or self.nodes[0].id != 0 or self.nodes[0].kind != "entry":
            raise ConfigurationError("graph needs exactly one entry node with id 0")
        if sum(1 for n in self.nodes if n.kind == "entry") != 1:
            raise ConfigurationError("graph needs exactly one entry node with id 0")
        if sum(1 for n in self.nodes if n.output) > 1:
            raise ConfigurationError("graph can have at most one output node")
        known = set(ids)
        for e in self.edges:
            if e.src not in known or e.dst not in known:
                raise ConfigurationError(f"edge {e.src}->{e.dst} references unknown node")
        if not self._connected():
            raise ConfigurationError("graph is not connected from the entry node")

    def _connected(self) -> bool:
        adjacency: dict[int, list[int]] = {n.id: [] for n in self.nodes}
        for e in self.edges:
            adjacency[e.src].append(e.dst)
        seen = {0}
        frontier = [0]
        while frontier:
            for nxt in adjacency[frontier.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    frontier.append(nxt)
        return len(seen) == len(self.nodes)

    @property
    def output_node(self) -> int | None:
        for n in self.nodes:
            if n.output:
                return n.id
        return None


def compile_ast(ast: ScenarioAst) -> DecisionGraph:
    """Deterministically compile a parsed scenario into its decision graph."""
    if not ast.statements:
        raise StateError("cannot compile a scenario with no statements")
    nodes = [GraphNode(0, "entry")]
    edges: list[GraphEdge] = []
    last = len(ast.statements)
    for i, stmt in enumerate(ast.statements, start=1):
        nodes.append(GraphNode(i, stmt.verb, output=stmt.output_request and i == last))
        if stmt.objects:
            table = f"choice.{i}"
            for obj in stmt.objects:
                edges.append(GraphEdge(i - 1, i, object=obj.id, table=table))
        else:
            edges.append(GraphEdge(i - 1, i))
    return DecisionGraph(nodes=tuple(nodes), edges=tuple(edges))


_HEADER_LINE = "decision-graph v1"
_NODE_RE = re.compile(r"^node (\d+) (\S+)( output)?$")
_EDGE_RE = re.compile(r'^edge (\d+) (\d+)(?: object="([^"]*)")?(?: table="([^"]*)")?$')


def render(graph: DecisionGraph) -> str:
    """Canonical, line-ordered text form of a graph (LF line endings)."""
    lines = [_HEADER_LINE]
    for n in graph.nodes:
        suffix = " output" if n.output else ""
        lines.append(f"node {n.id} {n.kind}{suffix}")
    for e in graph.edges:
        line = f"edge {e.src} {e.dst}"
        if e.object is not None:
            line += f' object="{e.object}"'
        if e.table is not None:
            line += f' table="{e.table}"'
        lines.append(line)
    return "\n".join(lines) + "\n"


def deserialize(text: str) -> DecisionGraph:
    """Parse the canonical text form back into a graph."""
    lines = [line for line in text.splitlines() if line.strip()]
    if not lines or lines[0] != _HEADER_LINE:
        raise ConfigurationError(f"expected header {_HEADER_LINE!r}")
    nodes: list[GraphNode] = []
    edges: list[GraphEdge] = []
    for lineno, line in enumerate(lines[1:], start=2):
        m = _NODE_RE.match(line)
        if m:
            nodes.append(GraphNode(int(m.group(1)), m.group(2), output=bool(m.group(3))))
            continue
        m = _EDGE_RE.match(line)
        if m:
            edges.append(GraphEdge(int(m.group(1)), int(m.group(2)),
                                   object=m.group(3), table=m.group(4)))
            continue
        raise ConfigurationError(f"line {lineno}: unrecognized graph line {line!r}")
    return DecisionGraph(nodes=tuple(nodes), edges=tuple(edges))
