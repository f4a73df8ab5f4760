"""Per-perspective lifted dependency graphs with shared orientation state.

Each perspective gets a graph over the relational variables reachable from
it. A single canonical dependency can support many edges within and across
these graphs, so direction is not stored on edges: every edge carries the
unordered dependency pair that produced it, and a registry shared by the
whole set maps each pair to its current orientation. Orienting a pair
therefore directs every supporting edge everywhere at once.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from .model import (
    RelationalDependency,
    RelationalVariable,
    canonical_pair,
    validate_dependency,
    variable_key,
)
from .paths import extend as extend_path
from .paths import enumerate_paths
from .schema import Schema

EdgeKey = frozenset  # frozenset of two RelationalVariable endpoints

Registry = dict  # canonical pair -> oriented RelationalDependency | None


@dataclass(frozen=True)
class Agg:
    """One perspective's lifted graph.

    ``edge_pairs`` maps each unordered edge to the dependency pairs that
    support it. Distinct pairs can support one edge when two cause paths
    connect the same attribute classes within the hop budget; they always
    relate the same attribute classes, so direction stays well defined.
    """

    perspective: str
    schema: Schema
    node_hops: int
    nodes: frozenset[RelationalVariable]
    adjacency: dict[RelationalVariable, frozenset[RelationalVariable]]
    edge_pairs: dict[EdgeKey, tuple[RelationalDependency, ...]]
    registry: Registry

    def neighbors(self, v: RelationalVariable) -> frozenset[RelationalVariable]:
        return self.adjacency.get(v, frozenset())

    def is_adjacent(self, u: RelationalVariable, v: RelationalVariable) -> bool:
        return v in self.adjacency.get(u, ())

    def edge_direction(
        self, u: RelationalVariable, v: RelationalVariable
    ) -> tuple[RelationalVariable, RelationalVariable] | None:
        """(source, target) for a directed edge, None while undirected.

        All pairs supporting an edge relate the same two attribute classes,
        so any oriented one fixes the direction; inconsistencies between
        them are refused at orientation time.
        """
        for pair in self.edge_pairs[frozenset((u, v))]:
            oriented = self.registry[pair]
            if oriented is None:
                continue
            if u.attribute_class == oriented.cause.attribute_class:
                return (u, v)
            return (v, u)
        return None

    def edges(
        self,
    ) -> list[tuple[RelationalVariable, RelationalVariable, bool]]:
        """(a, b, directed) triples; directed edges point a -> b."""
        out = []
        for key in self.edge_pairs:
            u, v = sorted(key, key=variable_key)
            direction = self.edge_direction(u, v)
            if direction is None:
                out.append((u, v, False))
            else:
                out.append((*direction, True))
        return sorted(out, key=lambda e: (variable_key(e[0]), variable_key(e[1])))

    def is_fully_directed(self) -> bool:
        return all(
            self.registry[pair] is not None
            for pairs in self.edge_pairs.values()
            for pair in pairs
        )


@dataclass
class AggSet:
    schema: Schema
    node_hops: int
    aggs: dict[str, Agg]
    registry: Registry
    conflicts: list[str] = field(default_factory=list)
    attribution: dict[RelationalDependency, str] = field(default_factory=dict)

    def perspectives(self) -> list[str]:
        return sorted(self.aggs)

    def sibling_pairs(self, pair: RelationalDependency):
        """Registry pairs relating the same two attribute classes."""
        classes = frozenset(
            (pair.cause.attribute_class, pair.effect.attribute_class)
        )
        return [
            other
            for other in self.registry
            if other is not pair
            and frozenset(
                (other.cause.attribute_class, other.effect.attribute_class)
            )
            == classes
        ]


def build_agg(
    dependencies,
    schema: Schema,
    perspective: str,
    node_hops: int,
    registry: Registry | None = None,
) -> Agg:
    """Lift a dependency set into the graph seen from one perspective.

    Nodes are the attribute-bearing relational variables within the hop
    bound. For a dependency with effect class C, every node whose path ends
    at C gains an edge from each composition of its path with the cause
    path that stays within the bound.
    """
    deps = sorted(set(dependencies), key=str)
    if registry is None:
        registry = {}
    for dep in deps:
        validate_dependency(dep, schema)
        registry.setdefault(canonical_pair(dep), None)
    paths = enumerate_paths(schema, perspective, node_hops)
    by_last: dict[str, list] = {}
    for p in paths:
        by_last.setdefault(p.last, []).append(p)
    nodes = frozenset(
        RelationalVariable(p, attr)
        for p in paths
        for attr in schema.attributes_of(p.last)
    )
    supports: dict[EdgeKey, set[RelationalDependency]] = {}
    adjacency: dict[RelationalVariable, set[RelationalVariable]] = {}
    for dep in deps:
        effect_cls = dep.effect.path.last
        pair = canonical_pair(dep)
        for q in by_last.get(effect_cls, ()):
            v = RelationalVariable(q, dep.effect.attribute)
            for source_path in extend_path(
                q, dep.cause.path, schema, node_hops + 1
            ):
                u = RelationalVariable(source_path, dep.cause.attribute)
                supports.setdefault(frozenset((u, v)), set()).add(pair)
                adjacency.setdefault(u, set()).add(v)
                adjacency.setdefault(v, set()).add(u)
    return Agg(
        perspective=perspective,
        schema=schema,
        node_hops=node_hops,
        nodes=nodes,
        adjacency={v: frozenset(n) for v, n in adjacency.items()},
        edge_pairs={k: tuple(sorted(p, key=str)) for k, p in supports.items()},
        registry=registry,
    )


def build_all(dependencies, schema: Schema, node_hops: int) -> AggSet:
    """One graph per item class, all sharing one orientation registry."""
    registry: Registry = {}
    aggs = {
        perspective: build_agg(dependencies, schema, perspective, node_hops, registry)
        for perspective in sorted(schema.item_classes)
    }
    return AggSet(schema=schema, node_hops=node_hops, aggs=aggs, registry=registry)


def orient(
    agg_set: AggSet, dependency: RelationalDependency, rule: str | None = None
) -> bool:
    """Register a dependency's direction, directing all supporting edges.

    Returns True when the registry changed. Re-orienting in the same
    direction is a no-op; an orientation opposing the pair's own state or
    the state of a sibling pair over the same attribute classes is recorded
    as a conflict and ignored (first orientation wins).
    """
    pair = canonical_pair(dependency)
    if pair not in agg_set.registry:
        raise ValueError(f"unknown dependency {dependency}")
    current = agg_set.registry[pair]
    if current is not None:
        if current == dependency:
            return False
        agg_set.conflicts.append(
            f"{rule or 'orientation'} wanted {dependency} but registry holds {current}"
        )
        return False
    for sibling in agg_set.sibling_pairs(pair):
        oriented = agg_set.registry[sibling]
        if (
            oriented is not None
            and oriented.cause.attribute_class != dependency.cause.attribute_class
        ):
            agg_set.conflicts.append(
                f"{rule or 'orientation'} wanted {dependency} but sibling holds "
                f"{oriented}"
            )
            return False
    agg_set.registry[pair] = dependency
    if rule is not None:
        agg_set.attribution[pair] = rule
    return True


def oriented_aggset(model, node_hops: int) -> AggSet:
    """Fully directed graphs of a model: build, then orient every dependency."""
    agg_set = build_all(model.dependencies, model.schema, node_hops)
    for dep in model.dependencies:
        orient(agg_set, dep, rule="given")
    return agg_set


def unshielded_triples(agg: Agg):
    """(x, y, z) with x-y and y-z adjacent but x, z non-adjacent.

    Emitted in canonical order: middles ascending, then endpoint pairs
    ascending with x < z under the variable ordering.
    """
    out = []
    for y in sorted(agg.adjacency, key=variable_key):
        nbrs = sorted(agg.adjacency[y], key=variable_key)
        for i, x in enumerate(nbrs):
            for z in nbrs[i + 1 :]:
                if not agg.is_adjacent(x, z):
                    out.append((x, y, z))
    return out


def d_separated(agg: Agg, x: set, y: set, z: set) -> bool:
    """Standard d-separation on a fully directed lifted graph."""
    for v in (*x, *y, *z):
        if v not in agg.nodes:
            raise ValueError(f"{v} is not a node of the {agg.perspective} graph")
    if (x & y) or (x & z) or (y & z):
        raise ValueError("query sets must be disjoint")
    if not agg.is_fully_directed():
        raise ValueError("graph has undirected edges; orient all dependencies first")
    parents: dict[RelationalVariable, list[RelationalVariable]] = {}
    children: dict[RelationalVariable, list[RelationalVariable]] = {}
    for key in agg.edge_pairs:
        u, v = tuple(key)
        src, dst = agg.edge_direction(u, v)
        children.setdefault(src, []).append(dst)
        parents.setdefault(dst, []).append(src)
    return not _reachable(parents, children, x, y, z)


def _reachable(parents, children, x: set, y: set, z: set) -> bool:
    """Whether an active trail connects x to y given z (ball-passing walk)."""
    ancestors_of_z: set = set()
    stack = list(z)
    while stack:
        node = stack.pop()
        if node in ancestors_of_z:
            continue
        ancestors_of_z.add(node)
        stack.extend(parents.get(node, ()))
    queue = deque((s, True) for s in x)  # True: arriving from a child ("up")
    visited: set = set()
    while queue:
        node, up = queue.popleft()
        if (node, up) in visited:
            continue
        visited.add((node, up))
        if node not in z and node in y:
            return True
        if up:
            if node not in z:
                queue.extend((p, True) for p in parents.get(node, ()))
                queue.extend((c, False) for c in children.get(node, ()))
        else:
            if node not in z:
                queue.extend((c, False) for c in children.get(node, ()))
            if node in ancestors_of_z:
                queue.extend((p, True) for p in parents.get(node, ()))
    return False


def agg_to_dot(agg: Agg) -> str:
    """DOT rendering: directed edges with arrows, undirected without."""
    lines = [f'digraph "{agg.perspective}" {{']
    lines.append("  node [shape=box, fontsize=10];")
    for v in sorted(agg.nodes, key=variable_key):
        lines.append(f'  "{v}";')
    for a, b, directed in agg.edges():
        pairs = "; ".join(str(p) for p in agg.edge_pairs[frozenset((a, b))])
        style = "" if directed else ", dir=none"
        lines.append(f'  "{a}" -> "{b}" [tooltip="{pairs}"{style}];')
    lines.append("}")
    return "\n".join(lines) + "\n"
