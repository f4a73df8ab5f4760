import pytest

from relcd.model import (
    RelationalDependency,
    RelationalModel,
    RelationalVariable,
)
from relcd.paths import RelationalPath
from relcd.schema import Cardinality, EntityClass, RelationshipClass, Schema


def var(path_items, attribute):
    return RelationalVariable(RelationalPath(tuple(path_items)), attribute)


def dep(cause_items, cause_attr, effect_cls, effect_attr):
    return RelationalDependency(
        var(cause_items, cause_attr), var([effect_cls], effect_attr)
    )


@pytest.fixture(scope="session")
def movie_schema():
    return Schema(
        entities=(
            EntityClass("ACTOR", ("Popularity",)),
            EntityClass("MOVIE", ("Success",)),
        ),
        relationships=(
            RelationshipClass(
                "STARS-IN",
                ("ACTOR", "MOVIE"),
                (Cardinality.MANY, Cardinality.MANY),
            ),
        ),
    )


@pytest.fixture(scope="session")
def movie_truth(movie_schema):
    # actor popularity causes movie success
    return RelationalModel(
        movie_schema,
        (dep(["MOVIE", "STARS-IN", "ACTOR"], "Popularity", "MOVIE", "Success"),),
    )


@pytest.fixture(scope="session")
def employer_schema():
    # an employee works for at most one company; a company employs many
    return Schema(
        entities=(
            EntityClass("EMPLOYEE", ("Skill",)),
            EntityClass("COMPANY", ("Revenue",)),
        ),
        relationships=(
            RelationshipClass(
                "WORKS-FOR",
                ("EMPLOYEE", "COMPANY"),
                (Cardinality.ONE, Cardinality.MANY),
            ),
        ),
    )


@pytest.fixture(scope="session")
def one_one_schema():
    return Schema(
        entities=(
            EntityClass("PERSON", ("Age",)),
            EntityClass("PASSPORT", ("Stamps",)),
        ),
        relationships=(
            RelationshipClass(
                "HOLDS",
                ("PERSON", "PASSPORT"),
                (Cardinality.ONE, Cardinality.ONE),
            ),
        ),
    )


def single_entity_schema(*attrs):
    return Schema((EntityClass("E1", tuple(attrs)),))


def propositional_model(schema, edges):
    entity = schema.entities[0].name
    return RelationalModel(
        schema, tuple(dep([entity], a, entity, b) for a, b in edges)
    )
