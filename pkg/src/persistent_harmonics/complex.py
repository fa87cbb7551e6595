"""Vertex-weighted graphs, graph joins and their clique complexes."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from pathlib import Path
from typing import Iterable, Sequence

import networkx as nx

Simplex = tuple[int, ...]
Edge = tuple[int, int]

DEFAULT_MAX_SIMPLICES = 10**7
MAX_SIMPLICES_ENV = "PERSISTENT_HARMONICS_MAX_SIMPLICES"


class ComplexTooLarge(RuntimeError):
    """Raised when clique enumeration exceeds the simplex-count cap."""


def parse_rational(value) -> Fraction:
    """Parse ``"p/q"`` strings, ints and Fractions into a Fraction.

    Floats are rejected so that weights stay exact.
    """
    if isinstance(value, bool):
        raise TypeError("booleans are not rationals")
    if isinstance(value, (int, Fraction)):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


def format_rational(value) -> str:
    value = Fraction(value)
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def permutation_sign(seq: Sequence[int]) -> int:
    """Sign of the permutation that sorts ``seq`` (distinct entries)."""
    seq = list(seq)
    sign = 1
    # cycle decomposition of the sorting permutation
    order = sorted(range(len(seq)), key=seq.__getitem__)
    seen = [False] * len(seq)
    for start in range(len(seq)):
        if seen[start]:
            continue
        length = 0
        j = start
        while not seen[j]:
            seen[j] = True
            j = order[j]
            length += 1
        if length % 2 == 0:
            sign = -sign
    return sign


def orient(vertices: Sequence[int]) -> tuple[int, Simplex]:
    """Return ``(sign, sorted_simplex)`` for an oriented vertex list."""
    if len(set(vertices)) != len(vertices):
        raise ValueError(f"repeated vertex in simplex {tuple(vertices)}")
    return permutation_sign(vertices), tuple(sorted(vertices))


@dataclass(frozen=True)
class WeightedGraph:
    vertex_count: int
    weights: tuple[Fraction, ...]
    edges: frozenset[Edge]

    def __post_init__(self):
        if self.vertex_count < 0:
            raise ValueError("vertex_count must be nonnegative")
        weights = tuple(parse_rational(w) for w in self.weights)
        if len(weights) != self.vertex_count:
            raise ValueError(
                f"expected {self.vertex_count} weights, got {len(weights)}"
            )
        if any(w <= 0 for w in weights):
            raise ValueError("vertex weights must be positive")
        edges = set()
        for u, v in self.edges:
            if u == v:
                raise ValueError(f"self-loop at vertex {u}")
            if not (0 <= u < self.vertex_count and 0 <= v < self.vertex_count):
                raise ValueError(f"edge ({u}, {v}) out of range")
            edges.add((min(u, v), max(u, v)))
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "edges", frozenset(edges))

    @classmethod
    def from_edges(cls, vertex_count: int, edges: Iterable[Edge], weights=None):
        if weights is None:
            weights = [Fraction(1)] * vertex_count
        return cls(vertex_count, tuple(weights), frozenset(map(tuple, edges)))

    @cached_property
    def adjacency(self) -> tuple[frozenset[int], ...]:
        nbrs: list[set[int]] = [set() for _ in range(self.vertex_count)]
        for u, v in self.edges:
            nbrs[u].add(v)
            nbrs[v].add(u)
        return tuple(frozenset(n) for n in nbrs)

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adjacency[u]

    def is_clique(self, vertices: Iterable[int]) -> bool:
        vs = list(vertices)
        return all(self.has_edge(a, b) for a, b in combinations(vs, 2))

    def to_networkx(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(range(self.vertex_count))
        g.add_edges_from(self.edges)
        return g

    def add_vertex(self, weight, neighbours: Iterable[int]) -> WeightedGraph:
        """Return a new graph with one extra vertex joined to ``neighbours``."""
        new = self.vertex_count
        edges = set(self.edges) | {(v, new) for v in neighbours}
        return WeightedGraph(
            self.vertex_count + 1, self.weights + (parse_rational(weight),), frozenset(edges)
        )

    # -- JSON ---------------------------------------------------------------
    def to_json(self) -> dict:
        return {
            "vertices": self.vertex_count,
            "weights": [format_rational(w) for w in self.weights],
            "edges": [list(e) for e in sorted(self.edges)],
        }

    @classmethod
    def from_json(cls, data: dict) -> WeightedGraph:
        if not isinstance(data, dict):
            raise ValueError("graph: expected a JSON object")
        if "vertices" not in data:
            raise ValueError("graph.vertices: missing field")
        n = data["vertices"]
        if not isinstance(n, int) or isinstance(n, bool) or n < 0:
            raise ValueError("graph.vertices: expected a nonnegative integer")
        raw_weights = data.get("weights")
        if raw_weights is None:
            weights = [Fraction(1)] * n
        else:
            try:
                weights = [parse_rational(w) for w in raw_weights]
            except (TypeError, ValueError, ZeroDivisionError) as exc:
                raise ValueError(f"graph.weights: {exc}") from exc
        edges = []
        for k, e in enumerate(data.get("edges", [])):
            if not (isinstance(e, list) and len(e) == 2 and all(isinstance(x, int) for x in e)):
                raise ValueError(f"graph.edges[{k}]: expected [u, v] integer pair")
            edges.append(tuple(e))
        try:
            return cls(n, tuple(weights), frozenset(edges))
        except ValueError as exc:
            raise ValueError(f"graph: {exc}") from exc

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1))

    @classmethod
    def load(cls, path) -> WeightedGraph:
        return cls.from_json(json.loads(Path(path).read_text()))


def graph_join(g1: WeightedGraph, g2: WeightedGraph) -> WeightedGraph:
    """Disjoint union of ``g1`` and ``g2`` plus every edge between them.

    Vertex ids of ``g2`` are shifted by ``g1.vertex_count``.
    """
    n1 = g1.vertex_count
    shifted = {(u + n1, v + n1) for u, v in g2.edges}
    cross = {(u, v + n1) for u in range(n1) for v in range(g2.vertex_count)}
    return WeightedGraph(
        n1 + g2.vertex_count,
        g1.weights + g2.weights,
        frozenset(set(g1.edges) | shifted | cross),
    )


@dataclass(frozen=True)
class JoinDecomposition:
    factors: tuple[WeightedGraph, ...]

    @cached_property
    def offsets(self) -> tuple[int, ...]:
        out, acc = [], 0
        for f in self.factors:
            out.append(acc)
            acc += f.vertex_count
        return tuple(out)

    @cached_property
    def graph(self) -> WeightedGraph:
        if not self.factors:
            return WeightedGraph(0, (), frozenset())
        g = self.factors[0]
        for f in self.factors[1:]:
            g = graph_join(g, f)
        return g

    def factor_of(self, vertex: int) -> int:
        for i in reversed(range(len(self.factors))):
            if vertex >= self.offsets[i]:
                if vertex < self.offsets[i] + self.factors[i].vertex_count:
                    return i
                break
        raise ValueError(f"vertex {vertex} outside the joined graph")


class CliqueComplex:
    """Clique complex of a weighted graph, truncated at ``max_dim``.

    ``simplices[p]`` is the lexicographically sorted list of sorted vertex
    tuples with ``p + 1`` vertices.  The weight of a simplex is the product of
    its vertex weights.
    """

    def __init__(self, graph: WeightedGraph, max_dim: int, max_simplices: int | None = None):
        if max_dim < 0:
            raise ValueError("max_dim must be nonnegative")
        if max_simplices is None:
            max_simplices = int(os.environ.get(MAX_SIMPLICES_ENV, DEFAULT_MAX_SIMPLICES))
        self.graph = graph
        self.max_dim = max_dim
        by_dim: list[list[Simplex]] = [[] for _ in range(max_dim + 1)]
        count = 0
        # set when cliques above max_dim exist, i.e. the top up-Laplacian is unknown
        self.truncated = False
        for clique in nx.enumerate_all_cliques(graph.to_networkx()):
            if len(clique) > max_dim + 1:
                self.truncated = True
                break
            count += 1
            if count > max_simplices:
                raise ComplexTooLarge(
                    f"clique complex exceeds {max_simplices} simplices; "
                    f"raise {MAX_SIMPLICES_ENV} to override"
                )
            by_dim[len(clique) - 1].append(tuple(sorted(clique)))
        for lst in by_dim:
            lst.sort()
        self.simplices: tuple[tuple[Simplex, ...], ...] = tuple(tuple(l) for l in by_dim)
        self._index = [{s: i for i, s in enumerate(lst)} for lst in self.simplices]

    def __repr__(self):
        return f"CliqueComplex(vertices={self.graph.vertex_count}, counts={self.counts})"

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(len(l) for l in self.simplices)

    def size(self, p: int) -> int:
        if 0 <= p <= self.max_dim:
            return len(self.simplices[p])
        return 0

    def index(self, simplex: Sequence[int]) -> int:
        """Row/column index of a sorted simplex; KeyError when absent."""
        s = tuple(simplex)
        p = len(s) - 1
        if not 0 <= p <= self.max_dim:
            raise KeyError(s)
        return self._index[p][s]

    def __contains__(self, simplex) -> bool:
        s = tuple(sorted(simplex))
        p = len(s) - 1
        return 0 <= p <= self.max_dim and s in self._index[p]

    def weight(self, simplex: Sequence[int]) -> Fraction:
        w = Fraction(1)
        for v in simplex:
            w *= self.graph.weights[v]
        return w

    def weights(self, p: int) -> list[Fraction]:
        return [self.weight(s) for s in self.simplices[p]] if p <= self.max_dim else []

    def cofaces(self, simplex: Simplex) -> list[tuple[int, Simplex]]:
        """``(position, coface)`` pairs; position is where the new vertex sits."""
        if len(simplex) > self.max_dim:
            return []
        adj = self.graph.adjacency
        common = set(adj[simplex[0]]) if simplex else set(range(self.graph.vertex_count))
        for v in simplex[1:]:
            common &= adj[v]
        out = []
        for v in sorted(common):
            pos = sum(1 for u in simplex if u < v)
            out.append((pos, simplex[:pos] + (v,) + simplex[pos:]))
        return out

    def is_subcomplex_of(self, other: CliqueComplex) -> bool:
        """Simplices and shared vertex weights of ``self`` all appear in ``other``."""
        if self.graph.vertex_count > other.graph.vertex_count:
            return False
        if other.graph.weights[: self.graph.vertex_count] != self.graph.weights:
            return False
        for p, lst in enumerate(self.simplices):
            if lst and p > other.max_dim:
                return False
            if any(s not in other._index[p] for s in lst):
                return False
        return True


def build_clique_complex(g: WeightedGraph, max_dim: int, max_simplices: int | None = None) -> CliqueComplex:
    return CliqueComplex(g, max_dim, max_simplices)


# -- qubit graph -----------------------------------------------------------


@dataclass(frozen=True)
class BaseQubitGraph:
    """Factor graph whose two oriented 4-cycles encode |0> and |1>."""

    graph: WeightedGraph
    cycles: tuple[tuple[Edge, ...], tuple[Edge, ...]]

    def __post_init__(self):
        for cyc in self.cycles:
            for u, v in cyc:
                if not self.graph.has_edge(u, v):
                    raise ValueError(f"cycle edge ({u}, {v}) not in base graph")


def wedge_base_graph() -> BaseQubitGraph:
    """Two 4-cycles 0-1-2-3-0 and 3-4-5-6-3 glued at vertex 3."""
    left = ((0, 1), (1, 2), (2, 3), (3, 0))
    right = ((3, 4), (4, 5), (5, 6), (6, 3))
    g = WeightedGraph.from_edges(7, left + right)
    return BaseQubitGraph(g, (left, right))


@dataclass(frozen=True)
class QubitGraph:
    """Join of ``n`` copies of a base qubit graph (all weights 1)."""

    n: int
    base: BaseQubitGraph = field(default_factory=wedge_base_graph)

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("qubit graph needs N >= 1")

    @cached_property
    def decomposition(self) -> JoinDecomposition:
        return JoinDecomposition((self.base.graph,) * self.n)

    @property
    def graph(self) -> WeightedGraph:
        return self.decomposition.graph

    def cycle(self, copy: int, bit: int) -> tuple[Edge, ...]:
        """Oriented edges of the ``bit`` cycle in factor ``copy``, global ids."""
        off = self.decomposition.offsets[copy]
        return tuple((u + off, v + off) for u, v in self.base.cycles[bit])

    def cycle_vertices(self, copy: int, bit: int) -> list[int]:
        return sorted({v for e in self.cycle(copy, bit) for v in e})


def qubit_graph(n: int, base: BaseQubitGraph | None = None) -> QubitGraph:
    return QubitGraph(n, base or wedge_base_graph())
