"""Data dependency graph over workbook cells.

Every formula cell is a node with a directed edge to each cell its formula
references; referenced cells join the node set even when blank.  Constants
that nothing references stay out of the graph.  Sources (nothing refers to
them) are the output nodes, sinks (they refer to nothing) are the input
nodes.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping

from .evaluate import BAD_REF
from .formulas import parse_formula, references_of
from .grid import BLANK, CellAddress, Formula, Number, Value, Workbook, format_value, row_major


class CycleError(ValueError):
    """The graph contains a reference cycle; `cycle` lists one loop."""

    def __init__(self, cycle: tuple[CellAddress, ...]):
        path = " -> ".join(a.text(qualified=True) for a in cycle)
        super().__init__(f"dependency cycle: {path}")
        self.cycle = cycle


@dataclass(frozen=True)
class DependencyGraph:
    nodes: tuple[CellAddress, ...]
    values: Mapping[CellAddress, Value]
    out_edges: Mapping[CellAddress, tuple[CellAddress, ...]]
    in_edges: Mapping[CellAddress, tuple[CellAddress, ...]]

    def edges(self) -> Iterator[tuple[CellAddress, CellAddress]]:
        for source in self.nodes:
            for target in self.out_edges.get(source, ()):
                yield (source, target)

    @property
    def edge_count(self) -> int:
        return sum(len(self.out_edges.get(node, ())) for node in self.nodes)


def build_graph(workbook: Workbook, grid: Mapping[CellAddress, Value]) -> DependencyGraph:
    """Build the dependency graph of a workbook annotated with `grid` values.

    `grid` must be the evaluation of the workbook.  References to absent
    cells create nodes annotated Blank; references to nonexistent sheets
    create nodes annotated BAD_REF.
    """
    sheet_names = set(workbook.sheet_names())
    nodes: set[CellAddress] = set()
    out_edges: dict[CellAddress, tuple[CellAddress, ...]] = {}
    targets: dict[CellAddress, list[CellAddress]] = {}
    for cell in workbook.iter_cells():
        if not isinstance(cell.content, Formula):
            continue
        refs = references_of(parse_formula(cell.content.source, cell.address.sheet))
        nodes.add(cell.address)
        nodes.update(refs)
        out_edges[cell.address] = refs
        for ref in refs:
            targets.setdefault(ref, []).append(cell.address)
    in_edges = {node: row_major(sources) for node, sources in targets.items()}
    values = {
        node: grid.get(node, BLANK if node.sheet in sheet_names else BAD_REF) for node in nodes
    }
    return DependencyGraph(row_major(nodes), values, out_edges, in_edges)


def terminals(graph: DependencyGraph) -> tuple[tuple[CellAddress, ...], tuple[CellAddress, ...]]:
    """(outputs, inputs): nodes without incoming and without outgoing edges."""
    outputs = tuple(n for n in graph.nodes if not graph.in_edges.get(n))
    inputs = tuple(n for n in graph.nodes if not graph.out_edges.get(n))
    return outputs, inputs


def _find_cycle(graph: DependencyGraph) -> tuple[CellAddress, ...] | None:
    WHITE, GREY, BLACK = 0, 1, 2
    color = {node: WHITE for node in graph.nodes}
    parent: dict[CellAddress, CellAddress] = {}
    for start in graph.nodes:
        if color[start] != WHITE:
            continue
        stack: list[tuple[CellAddress, int]] = [(start, 0)]
        color[start] = GREY
        while stack:
            node, index = stack[-1]
            neighbors = graph.out_edges.get(node, ())
            if index == len(neighbors):
                stack.pop()
                color[node] = BLACK
                continue
            stack[-1] = (node, index + 1)
            child = neighbors[index]
            if color[child] == GREY:
                loop = [child, node]
                walker = node
                while walker != child:
                    walker = parent[walker]
                    loop.append(walker)
                return tuple(reversed(loop))
            if color[child] == WHITE:
                color[child] = GREY
                parent[child] = node
                stack.append((child, 0))
    return None


def longest_chain(graph: DependencyGraph) -> int:
    """Length in edges of the longest directed path; the graph must be acyclic."""
    cycle = _find_cycle(graph)
    if cycle is not None:
        raise CycleError(cycle)
    depth: dict[CellAddress, int] = {}

    def chain_from(node: CellAddress) -> int:
        cached = depth.get(node)
        if cached is not None:
            return cached
        neighbors = graph.out_edges.get(node, ())
        value = 1 + max((chain_from(n) for n in neighbors), default=-1)
        depth[node] = value
        return value

    return max((chain_from(node) for node in graph.nodes), default=0)


def _dot_quote(text: str) -> str:
    return '"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"'


def export_dot(graph: DependencyGraph) -> str:
    """Render the graph as a Graphviz digraph.

    Node labels show "ADDRESS: value" with numbers at two decimal places;
    output nodes are filled red, input nodes green.  Output is
    deterministic: nodes and edges appear in row-major order.
    """
    multi_sheet = len({node.sheet for node in graph.nodes}) > 1
    outputs, inputs = terminals(graph)
    output_set, input_set = set(outputs), set(inputs)
    lines = ["digraph dependencies {"]
    for node in graph.nodes:
        value = graph.values.get(node, BLANK)
        shown = f"{value.value:.2f}" if isinstance(value, Number) else format_value(value)
        name = node.text(qualified=multi_sheet)
        attrs = [f"label={_dot_quote(f'{name}: {shown}')}"]
        if node in output_set:
            attrs.append("style=filled, fillcolor=red")
        elif node in input_set:
            attrs.append("style=filled, fillcolor=green")
        lines.append(f"  {_dot_quote(name)} [{', '.join(attrs)}];")
    for source, target in graph.edges():
        lines.append(
            f"  {_dot_quote(source.text(qualified=multi_sheet))} -> "
            f"{_dot_quote(target.text(qualified=multi_sheet))};"
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
