"""Seeded random formulas, sequents, and root pairs for testing.

Everything is driven by an explicit ``random.Random`` so corpora are
reproducible from a seed.  The default signature menu stays within small
bounds: at most two relations of arity at most two, at most two constants.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .syntax import (
    And,
    Const,
    Diamond,
    Forall,
    Formula,
    Rel,
    Signature,
    TOP,
    Var,
)


@dataclass
class GenConfig:
    signature: Signature
    max_mdepth: int = 2
    max_udepth: int = 1
    max_size: int = 7
    variables: tuple[str, ...] = ("x0", "x1")


SIGNATURE_MENU: tuple[Signature, ...] = (
    Signature((), {"S": 1}),
    Signature(("c",), {"S": 1}),
    Signature(("c", "d"), {"S": 1}),
    Signature(("c", "d"), {"S": 1, "P": 1}),
    Signature(("c",), {"S": 2}),
    Signature(("c", "d"), {"S": 1, "P": 2}),
)


def random_formula(
    rng: random.Random, cfg: GenConfig, *, closed: bool = False
) -> Formula:
    """A random formula within the configuration's depth and size budgets."""

    def gen(md: int, ud: int, size: int, scope: tuple[str, ...]) -> Formula:
        options = ["atom", "top"]
        if size > 1:
            options.append("and")
        if md > 0 and size > 0:
            options.append("dia")
        if ud > 0 and size > 0:
            options.append("all")
        pick = rng.choice(options)
        if pick == "top":
            return TOP
        if pick == "atom":
            return atom(scope)
        if pick == "and":
            half = (size - 1) // 2
            return And(gen(md, ud, half, scope), gen(md, ud, half, scope))
        if pick == "dia":
            return Diamond(gen(md - 1, ud, size - 1, scope))
        var = next(
            (v for v in cfg.variables if v not in scope), f"x{len(scope)}"
        )
        return Forall(var, gen(md, ud - 1, size - 1, scope + (var,)))

    def atom(scope: tuple[str, ...]) -> Formula:
        relations = sorted(cfg.signature.relations.items())
        if not relations:
            return TOP
        sym, arity = rng.choice(relations)
        pool: list = [Const(c) for c in cfg.signature.constants]
        pool.extend(Var(v) for v in scope)
        if not closed:
            pool.extend(Var(v) for v in cfg.variables)
        if not pool and arity > 0:
            return TOP
        return Rel(sym, tuple(rng.choice(pool) for _ in range(arity)))

    return gen(cfg.max_mdepth, cfg.max_udepth, cfg.max_size, ())


def random_sequent(
    rng: random.Random, cfg: GenConfig, *, closed: bool = False
) -> tuple[Formula, Formula]:
    return (
        random_formula(rng, cfg, closed=closed),
        random_formula(rng, cfg, closed=closed),
    )


def random_config(rng: random.Random) -> GenConfig:
    return GenConfig(signature=rng.choice(SIGNATURE_MENU))


def random_root_pair(
    rng: random.Random,
) -> tuple[Signature, Formula, tuple[Formula, ...]]:
    """A candidate root pair: one closed positive formula and one or two
    closed negatives over a menu signature.  Consistency is the caller's
    check (it needs the decider)."""
    cfg = random_config(rng)
    positive = random_formula(rng, cfg, closed=True)
    negatives = tuple(
        random_formula(rng, cfg, closed=True) for _ in range(rng.choice((1, 2)))
    )
    return cfg.signature, positive, negatives
