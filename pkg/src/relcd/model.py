"""Relational variables, canonical dependencies, and relational models.

A relational variable pairs a path with an attribute of the path's final
class. A canonical dependency points from a cause variable to an effect
variable whose path is a singleton; models are acyclic sets of canonical
dependencies over a schema.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import networkx as nx
import numpy as np

from .errors import Infeasible
from .paths import RelationalPath, enumerate_paths, is_valid, parse_path, reverse
from .schema import AttributeClass, Schema, schema_from_dict, schema_to_dict


@dataclass(frozen=True, order=True)
class RelationalVariable:
    path: RelationalPath
    attribute: str

    @property
    def perspective(self) -> str:
        return self.path.perspective

    @property
    def attribute_class(self) -> AttributeClass:
        return AttributeClass(self.path.last, self.attribute)

    def __str__(self):
        return f"{self.path}.{self.attribute}"


def variable_key(v: RelationalVariable) -> tuple:
    """Canonical sort key: shorter paths first, then textual order."""
    return (len(v.path.items), v.path.items, v.attribute)


@dataclass(frozen=True, order=True)
class RelationalDependency:
    cause: RelationalVariable
    effect: RelationalVariable

    def __str__(self):
        return f"{self.cause} -> {self.effect}"


def is_canonical(dep: RelationalDependency) -> bool:
    return len(dep.effect.path.items) == 1


def reverse_dependency(dep: RelationalDependency) -> RelationalDependency:
    """The same undirected dependency expressed from the cause's class."""
    if not is_canonical(dep):
        raise ValueError(f"dependency is not canonical: {dep}")
    new_cause = RelationalVariable(reverse(dep.cause.path), dep.effect.attribute)
    new_effect = RelationalVariable(
        RelationalPath((dep.cause.path.last,)), dep.cause.attribute
    )
    return RelationalDependency(new_cause, new_effect)


def canonical_pair(dep: RelationalDependency) -> RelationalDependency:
    """Representative of the unordered {dep, reverse_dependency(dep)} pair."""
    rev = reverse_dependency(dep)
    return dep if str(dep) <= str(rev) else rev


def validate_dependency(dep: RelationalDependency, schema: Schema) -> None:
    if not is_canonical(dep):
        raise ValueError(f"dependency is not canonical: {dep}")
    if not is_valid(dep.cause.path, schema):
        raise ValueError(f"invalid cause path in {dep}")
    if dep.cause.path.perspective != dep.effect.path.perspective:
        raise ValueError(f"cause and effect perspectives differ in {dep}")
    for var in (dep.cause, dep.effect):
        if var.attribute not in schema.attributes_of(var.path.last):
            raise ValueError(
                f"{var.path.last!r} has no attribute {var.attribute!r} in {dep}"
            )
    if dep.cause.attribute_class == dep.effect.attribute_class:
        raise ValueError(f"dependency relates an attribute class to itself: {dep}")


@dataclass(frozen=True)
class RelationalModel:
    schema: Schema
    dependencies: tuple[RelationalDependency, ...]

    def __post_init__(self):
        deps = tuple(sorted(set(self.dependencies), key=str))
        object.__setattr__(self, "dependencies", deps)
        for dep in deps:
            validate_dependency(dep, self.schema)
        if not is_acyclic(self):
            raise ValueError("model has a cyclic class dependency graph")


def class_dependency_graph(model: RelationalModel) -> nx.DiGraph:
    """Directed graph over attribute classes induced by the dependencies."""
    g = nx.DiGraph()
    g.add_nodes_from(model.schema.attribute_classes())
    for dep in model.dependencies:
        g.add_edge(dep.cause.attribute_class, dep.effect.attribute_class)
    return g


def is_acyclic(model: RelationalModel) -> bool:
    return nx.is_directed_acyclic_graph(class_dependency_graph(model))


def potential_dependencies(
    schema: Schema, hop_threshold: int
) -> list[RelationalDependency]:
    """All canonical dependencies with cause paths within the hop threshold.

    Same-attribute-class pairs are excluded (they would make any model
    cyclic), so the result is closed under reverse_dependency.
    """
    out: list[RelationalDependency] = []
    for item in sorted(schema.item_classes):
        for p in enumerate_paths(schema, item, hop_threshold):
            for cause_attr in schema.attributes_of(p.last):
                for effect_attr in schema.attributes_of(item):
                    if AttributeClass(p.last, cause_attr) == AttributeClass(
                        item, effect_attr
                    ):
                        continue
                    out.append(
                        RelationalDependency(
                            RelationalVariable(p, cause_attr),
                            RelationalVariable(
                                RelationalPath((item,)), effect_attr
                            ),
                        )
                    )
    return sorted(out, key=str)


def _closes_cycle(
    edges: dict[AttributeClass, set[AttributeClass]],
    cause: AttributeClass,
    effect: AttributeClass,
) -> bool:
    # adding cause -> effect closes a cycle iff cause is reachable from effect
    stack = [effect]
    seen = {effect}
    while stack:
        node = stack.pop()
        if node == cause:
            return True
        for nxt in edges.get(node, ()):
            if nxt not in seen:
                seen.add(nxt)
                stack.append(nxt)
    return False


def random_model(
    schema: Schema,
    num_deps: int,
    hop_threshold: int = 4,
    max_parents: int = 3,
    seed: int = 0,
    restarts: int = 1,
) -> RelationalModel:
    """Sample a model by drawing dependencies uniformly without replacement.

    Draws violating acyclicity or the per-effect parent bound are discarded
    permanently (they can never become legal later), so a pass either
    places ``num_deps`` dependencies or dead-ends; up to ``restarts``
    passes are tried before raising Infeasible.
    """
    if num_deps < 0:
        raise ValueError("num_deps must be >= 0")
    full_pool = potential_dependencies(schema, hop_threshold)
    rng = np.random.default_rng(seed)
    for _ in range(max(1, restarts)):
        pool = list(full_pool)
        chosen: list[RelationalDependency] = []
        edges: dict[AttributeClass, set[AttributeClass]] = {}
        parent_count: dict[AttributeClass, int] = {}
        while len(chosen) < num_deps and pool:
            dep = pool.pop(int(rng.integers(len(pool))))
            cause_ac = dep.cause.attribute_class
            effect_ac = dep.effect.attribute_class
            if parent_count.get(effect_ac, 0) >= max_parents:
                continue
            if _closes_cycle(edges, cause_ac, effect_ac):
                continue
            chosen.append(dep)
            edges.setdefault(cause_ac, set()).add(effect_ac)
            parent_count[effect_ac] = parent_count.get(effect_ac, 0) + 1
        if len(chosen) == num_deps:
            return RelationalModel(schema, tuple(chosen))
    raise Infeasible(f"could only place {len(chosen)} of {num_deps} dependencies")


def parse_variable(text: str) -> RelationalVariable:
    text = text.strip()
    if "]." not in text:
        raise ValueError(f"malformed relational variable: {text!r}")
    path_text, attr = text.rsplit("].", 1)
    return RelationalVariable(parse_path(path_text + "]"), attr.strip())


def parse_dependency(text: str) -> RelationalDependency:
    if "->" not in text:
        raise ValueError(f"malformed dependency: {text!r}")
    cause_text, effect_text = text.split("->", 1)
    return RelationalDependency(
        parse_variable(cause_text), parse_variable(effect_text)
    )


def model_to_dict(model: RelationalModel) -> dict:
    return {
        "schema": schema_to_dict(model.schema),
        "dependencies": [str(d) for d in model.dependencies],
    }


def model_from_dict(doc: dict) -> RelationalModel:
    schema = schema_from_dict(doc["schema"])
    deps = tuple(parse_dependency(t) for t in doc.get("dependencies", ()))
    return RelationalModel(schema, deps)


def model_to_json(model: RelationalModel) -> str:
    return json.dumps(model_to_dict(model), indent=2, sort_keys=True) + "\n"


def model_from_json(text: str) -> RelationalModel:
    return model_from_dict(json.loads(text))
