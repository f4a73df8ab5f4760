"""Relational path algebra.

A relational path is an alternating sequence of entity and relationship
class names tracing a connected walk through a schema. Paths anchor
relational variables: the first item is the perspective, the last item is
the class whose attributes the path can reach.
"""

from __future__ import annotations

from dataclasses import dataclass

from .schema import Cardinality, Schema


@dataclass(frozen=True, order=True)
class RelationalPath:
    items: tuple[str, ...]

    def __post_init__(self):
        if not self.items:
            raise ValueError("relational path must be non-empty")

    @property
    def perspective(self) -> str:
        return self.items[0]

    @property
    def last(self) -> str:
        return self.items[-1]

    @property
    def hops(self) -> int:
        return len(self.items) - 1

    def __str__(self):
        return "[" + ", ".join(self.items) + "]"


def path(*items: str) -> RelationalPath:
    return RelationalPath(tuple(items))


def parse_path(text: str) -> RelationalPath:
    text = text.strip()
    if not (text.startswith("[") and text.endswith("]")):
        raise ValueError(f"path must be bracketed: {text!r}")
    items = tuple(part.strip() for part in text[1:-1].split(","))
    if any(not item for item in items):
        raise ValueError(f"malformed path: {text!r}")
    return RelationalPath(items)


def is_valid(p: RelationalPath, schema: Schema) -> bool:
    """Whether ``p`` is a traversable path under the schema.

    Requires alternation between entity and relationship classes,
    participation of each consecutive pair, card(R, E) = MANY whenever a
    relationship class repeats around an entity ([R, E, R]), and distinct
    entity classes around a relationship ([E, R, E']).
    """
    items = p.items
    for name in items:
        if name not in schema.item_classes:
            raise ValueError(f"unknown item class {name!r}")
    start_is_entity = schema.is_entity(items[0])
    for i, name in enumerate(items):
        want_entity = start_is_entity == (i % 2 == 0)
        if schema.is_entity(name) != want_entity:
            return False
    for a, b in zip(items, items[1:]):
        rel = schema.item_classes[b if schema.is_relationship(b) else a]
        ent = a if schema.is_entity(a) else b
        if ent not in rel.participants:
            return False
    for a, b, c in zip(items, items[1:], items[2:]):
        if schema.is_relationship(a):
            # [R, E, R'] : revisiting the same relationship class needs MANY
            if a == c and schema.item_classes[a].card(b) is not Cardinality.MANY:
                return False
        else:
            # [E, R, E'] : a binary relationship cannot return to its source
            if a == c:
                return False
    return True


def reverse(p: RelationalPath) -> RelationalPath:
    return RelationalPath(tuple(reversed(p.items)))


def cardinality(p: RelationalPath, schema: Schema) -> Cardinality:
    """MANY iff some hop from an entity into a relationship can fan out.

    Steps from a relationship into an entity always reach exactly one
    instance, so only entity-to-relationship hops with card(R, E) = MANY
    make the whole path reach more than one instance.
    """
    if not is_valid(p, schema):
        raise ValueError(f"invalid path {p}")
    for a, b in zip(p.items, p.items[1:]):
        if schema.is_entity(a) and schema.item_classes[b].card(a) is Cardinality.MANY:
            return Cardinality.MANY
    return Cardinality.ONE


def enumerate_paths(
    schema: Schema, perspective: str, hop_threshold: int
) -> list[RelationalPath]:
    """All valid paths from ``perspective`` with at most ``hop_threshold`` hops.

    Includes the singleton path. Results are sorted by (length, items).
    """
    if perspective not in schema.item_classes:
        raise ValueError(f"unknown item class {perspective!r}")
    if hop_threshold < 0:
        raise ValueError("hop_threshold must be >= 0")
    out: list[tuple[str, ...]] = []
    stack: list[tuple[str, ...]] = [(perspective,)]
    while stack:
        items = stack.pop()
        out.append(items)
        if len(items) > hop_threshold:
            continue
        last = items[-1]
        if schema.is_entity(last):
            for rel in schema.relationships:
                if last not in rel.participants:
                    continue
                if (
                    len(items) >= 2
                    and items[-2] == rel.name
                    and rel.card(last) is not Cardinality.MANY
                ):
                    continue
                stack.append(items + (rel.name,))
        else:
            rel = schema.item_classes[last]
            if len(items) == 1:
                stack.extend(items + (p,) for p in rel.participants)
            else:
                stack.append(items + (rel.other(items[-2]),))
    return sorted(
        (RelationalPath(items) for items in out), key=lambda p: (len(p.items), p.items)
    )


def extend(
    p_orig: RelationalPath,
    p_ext: RelationalPath,
    schema: Schema,
    max_length: int,
) -> list[RelationalPath]:
    """All valid compositions of two paths sharing a join class.

    For every pivot m >= 1 where the last m items of ``p_orig`` reversed
    equal the first m items of ``p_ext``, the candidate drops those m items
    from ``p_orig`` and the first m - 1 items from ``p_ext``. Candidates
    longer than ``max_length`` items or failing validity are discarded.
    """
    if p_orig.last != p_ext.perspective:
        raise ValueError(
            f"join point mismatch: {p_orig} does not end where {p_ext} starts"
        )
    a, b = p_orig.items, p_ext.items
    results: list[RelationalPath] = []
    seen: set[tuple[str, ...]] = set()
    for m in range(1, min(len(a), len(b)) + 1):
        if tuple(reversed(a[len(a) - m :])) != b[:m]:
            continue
        candidate = a[: len(a) - m] + b[m - 1 :]
        if len(candidate) > max_length or candidate in seen:
            continue
        seen.add(candidate)
        cp = RelationalPath(candidate)
        if is_valid(cp, schema):
            results.append(cp)
    return sorted(results, key=lambda p: (len(p.items), p.items))
