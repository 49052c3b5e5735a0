"""Shared test utilities: seeded random generators for logical-form trees.

The tree generator only emits catalog-conformant trees (validate() == []),
so round-trip properties test serialization fidelity rather than error
paths. The pool-aware generator goes further: it produces criteria whose
phrases resolve to bundled database pool concepts, so the compiled SQL
and a generated synthetic database actually overlap.
"""

import random

from cohortq import fixture
from cohortq import lforms as lf

ENTITY_FUNCTIONS = ("cond", "obs", "proc", "drug", "lab", "allergy")

_WORDS = (
    "diabetes", "mellitus", "type", "2", "chronic", "severe", "acute",
    "asthma", "hypertension", "renal", "failure", "platelet", "count",
    "serum", "creatinine", "insulin", "metformin", "history", "of",
    "bypass", "fracture", "screening", "baseline", "stage", "iii",
)

_ODD_TEXTS = (
    'quoted "inner" text',
    "backslash \\ path",
    "mixed \\\" both",
    "naïve café",
    "温度 34 度",
    "a,b.(c)[d]",
    "  leading and trailing  ",
)


def random_span_text(rng: random.Random) -> str:
    if rng.random() < 0.15:
        return rng.choice(_ODD_TEXTS)
    return " ".join(rng.choice(_WORDS) for _ in range(rng.randint(1, 4)))


def random_eq(rng: random.Random) -> lf.LfNode:
    op = rng.choice(lf.OPERATORS)
    value = rng.choice(("65", "2.5", "100", "34", "0.9", "7"))
    return lf.LfNode("eq", (lf.LfNode("op", (lf.Symbol(op),)),
                            lf.LfNode("val", (lf.Quoted(value),))))


def random_num_filter(rng: random.Random) -> lf.LfNode:
    args = [random_eq(rng) for _ in range(rng.randint(1, 2))]
    if rng.random() < 0.4:
        args.append(lf.LfNode("unit", (lf.Quoted(rng.choice(("mg/dl", "kg", "%", "mmol/l"))),)))
    return lf.LfNode("num_filter", tuple(args))


def random_entity(rng: random.Random, depth: int) -> lf.LfNode:
    fn = rng.choice(ENTITY_FUNCTIONS)
    args = (lf.Quoted(random_span_text(rng)),) if rng.random() < 0.85 else ()
    predicates = []
    roll = rng.random()
    if roll < 0.25:
        predicates.append(random_num_filter(rng))
    elif roll < 0.35 and depth > 0:
        anchor = random_entity(rng, depth - 1)
        direction = rng.choice(("before", "after", "within"))
        if direction == "within":
            predicates.append(lf.LfNode("within", (
                anchor,
                lf.LfNode("val", (lf.Quoted(str(rng.randint(1, 400)),),)),
                lf.LfNode("unit", (lf.Quoted(rng.choice(("minutes", "hours", "days", "weeks"))),)),
            )))
        else:
            predicates.append(lf.LfNode(direction, (anchor,)))
    elif roll < 0.45 and depth > 0:
        inner = random_entity(rng, 0)
        predicates.append(lf.LfNode(rng.choice(("caused_by", "treats", "affects", "contraindication")),
                                    (inner,)))
    return lf.LfNode(fn, args, tuple(predicates))


def random_demographic(rng: random.Random) -> lf.LfNode:
    fn = rng.choice(("female", "male", "age"))
    if fn == "age":
        return lf.LfNode("age", (), (random_num_filter(rng),))
    return lf.LfNode(fn)


def random_expression(rng: random.Random, depth: int = 3) -> lf.LfNode:
    roll = rng.random()
    if depth <= 0 or roll < 0.45:
        return random_entity(rng, depth)
    if roll < 0.6:
        return random_demographic(rng)
    fn = rng.choice(("intersect", "union", "not"))
    if fn == "not":
        return lf.LfNode("not", (random_expression(rng, depth - 1),))
    children = tuple(random_expression(rng, depth - 1) for _ in range(rng.randint(2, 3)))
    return lf.LfNode(fn, children)


# ---------------------------------------------------------------------------
# pool-aware criteria: always reasonable, always compilable

_POOL_ENTITIES = (fixture.CONDITION_POOL + fixture.PROCEDURE_POOL
                  + fixture.DRUG_POOL)
_WINDOW_UNITS = ("minutes", "hours", "days", "weeks")


def _format_bound(value: float, decimals: int) -> str:
    if decimals == 0:
        return str(int(round(value)))
    return f"{value:.{decimals}f}"


def pool_entity_text(rng: random.Random) -> str:
    p = rng.choice(_POOL_ENTITIES)
    return f'{p.fn}("{p.phrase}")'


def pool_lab_text(rng: random.Random) -> str:
    analyte = rng.choice(fixture.LAB_POOL)
    text = f'lab("{analyte.phrase}")'
    if rng.random() < 0.6:
        op = rng.choice(("GT", "GTEQ", "LT", "LTEQ"))
        span = analyte.high - analyte.low
        bound = analyte.low + span * rng.uniform(0.2, 0.8)
        rendered = _format_bound(bound, analyte.decimals)
        text += f'.num_filter(eq(op({op}), val("{rendered}")))'
    return text


def pool_demographic_text(rng: random.Random) -> str:
    roll = rng.random()
    if roll < 0.3:
        return "female()"
    if roll < 0.6:
        return "male()"
    op = rng.choice(("GT", "GTEQ", "LT", "LTEQ"))
    return f'age().num_filter(eq(op({op}), val("{rng.randint(18, 85)}")))'


def pool_temporal_text(rng: random.Random) -> str:
    outer = pool_lab_text(rng) if rng.random() < 0.5 else pool_entity_text(rng)
    anchor = pool_entity_text(rng)
    direction = rng.choice(("before", "after", "within"))
    if direction == "within":
        value = rng.randint(1, 72)
        unit = rng.choice(_WINDOW_UNITS)
        return f'{outer}.within({anchor}, val("{value}"), unit("{unit}"))'
    return f"{outer}.{direction}({anchor})"


def _pool_leaf_text(rng: random.Random) -> str:
    roll = rng.random()
    if roll < 0.40:
        return pool_entity_text(rng)
    if roll < 0.70:
        return pool_lab_text(rng)
    if roll < 0.85:
        return pool_demographic_text(rng)
    return pool_temporal_text(rng)


def random_pool_criterion(rng: random.Random, depth: int = 2) -> str:
    """Text of a criterion built entirely from database pool concepts."""
    roll = rng.random()
    if depth <= 0 or roll < 0.55:
        return _pool_leaf_text(rng)
    if roll < 0.78:
        n = rng.randint(2, 3)
        parts = ", ".join(random_pool_criterion(rng, depth - 1)
                          for _ in range(n))
        return f"intersect({parts})"
    if roll < 0.92:
        parts = ", ".join(random_pool_criterion(rng, depth - 1)
                          for _ in range(2))
        return f"union({parts})"
    return f"not({_pool_leaf_text(rng)})"
