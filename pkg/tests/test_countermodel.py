import dataclasses
import itertools
import random

import pytest

from qrc1.countermodel import (
    DerivabilityOracle,
    InconsistentPairError,
    Pair,
    PairError,
    build_model,
    constant_pool,
    countermodel_for,
    hat_r,
    is_consistent,
    is_fully_witnessed,
    is_maximal,
    lindenbaum,
    pair_successor,
    truth_lemma_check,
    truth_lemma_mismatches,
)
from qrc1.semantics import satisfies
from qrc1.syntax import (
    Diamond,
    Forall,
    Rel,
    Signature,
    TOP,
    canonical,
    closure,
    parse_formula,
    pretty,
    set_mdepth,
)

SIG_S = Signature((), {"S": 1})
SIG_SC = Signature(("c",), {"S": 1})


def f(text, sig=SIG_SC):
    return parse_formula(text, sig)


def oracle_for(sig, constants):
    return DerivabilityOracle(sig.with_constants(constants))


# ---------------------------------------------------------------------------
# Saturation


def test_lindenbaum_sorts_by_consequence():
    phi_set = frozenset({f("<> T"), f("<> <> T")})
    constants = ("c",)
    p = Pair.make([f("<> T")], [f("<> <> T")])
    q = lindenbaum(p, phi_set, constants, oracle_for(SIG_SC, constants))
    assert q.positive_set == {f("T"), f("<> T")}
    assert q.negative_set == {f("<> <> T")}


def test_lindenbaum_fixed_point_on_trivial_pair():
    p = Pair.make([TOP], [])
    q = lindenbaum(p, frozenset({TOP}), ("c",), oracle_for(SIG_SC, ("c",)))
    assert q == Pair.make([TOP], [])


def test_lindenbaum_witnesses_negative_universals():
    phi = f("A x . S(x)")
    p = Pair.make([TOP], [phi])
    phi_set = frozenset({TOP, phi})
    constants = constant_pool(SIG_SC, phi_set)
    q = lindenbaum(p, phi_set, constants, oracle_for(SIG_SC, constants))
    assert canonical(phi) in q.negative_set
    witnesses = [c for c in constants if f(f"S({c})", SIG_SC.with_constants(constants)) in q.negative_set]
    assert witnesses


def test_lindenbaum_detects_inconsistent_pairs():
    p = Pair.make([f("S(c)")], [f("S(c)")])
    phi_set = frozenset(p.members())
    constants = constant_pool(SIG_SC, phi_set)
    with pytest.raises(InconsistentPairError):
        lindenbaum(p, phi_set, constants, oracle_for(SIG_SC, constants))


def test_lindenbaum_rejects_small_pool():
    phi = f("A x . S(x, c)", Signature(("c",), {"S": 2}))
    p = Pair.make([phi], [])
    with pytest.raises(PairError):
        lindenbaum(p, frozenset({phi}), ("c",), oracle_for(Signature(("c",), {"S": 2}), ("c",)))


def test_lindenbaum_requires_singleton_positive():
    p = Pair.make([TOP, f("<> T")], [])
    with pytest.raises(PairError):
        lindenbaum(p, frozenset(p.members()), ("c",), oracle_for(SIG_SC, ("c",)))


# ---------------------------------------------------------------------------
# Successor pairs


def _saturated_diamond_pair():
    phi_set = frozenset({f("<> T"), f("<> <> T")})
    constants = ("c",)
    oracle = oracle_for(SIG_SC, constants)
    p = lindenbaum(Pair.make([f("<> T")], [f("<> <> T")]), phi_set, constants, oracle)
    return p, phi_set, constants, oracle


def test_pair_successor_reduces_modal_depth():
    p, phi_set, constants, oracle = _saturated_diamond_pair()
    q = pair_successor(p, f("<> T"), phi_set, constants, oracle)
    assert f("T") in q.positive_set
    assert f("<> T") in q.negative_set
    assert set_mdepth(q.positive) == 0
    assert hat_r(p, q)


def test_pair_successor_rejects_non_member():
    p, phi_set, constants, oracle = _saturated_diamond_pair()
    with pytest.raises(PairError):
        pair_successor(p, f("<> <> T"), phi_set, constants, oracle)


def test_successor_satisfies_accessibility_clauses():
    p, phi_set, constants, oracle = _saturated_diamond_pair()
    q = pair_successor(p, f("<> T"), phi_set, constants, oracle)
    # some positive diamond of p lands negative in q
    assert any(
        isinstance(g, Diamond) and g in q.negative_set for g in p.positive
    )
    # negative diamonds persist together with their bodies
    for g in p.negative:
        if isinstance(g, Diamond):
            assert g in q.negative_set
            assert canonical(g.body) in q.negative_set


# ---------------------------------------------------------------------------
# Model builder


def test_build_model_refutes_quantifier_commutation():
    sig = SIG_S
    tm = countermodel_for(f("A x . <> S(x)", sig), f("<> A x . S(x)", sig), sig)
    assert tm is not None
    root = tm.root
    assert satisfies(tm.model, root, {}, f("A x . <> S(x)", tm.signature))
    assert not satisfies(tm.model, root, {}, f("<> A x . S(x)", tm.signature))


def test_build_model_trivial_root():
    tm = build_model(Pair.make([TOP], [f("<> T")]), SIG_SC)
    assert tm.model.worlds == (0,)
    assert not tm.model.R


def test_build_model_returns_none_like_for_derivable():
    assert countermodel_for(f("<> <> T"), f("<> T"), SIG_SC) is None


def test_build_model_shape_invariants():
    tm = countermodel_for(f("A x . <> S(x)", SIG_S), f("<> A x . S(x)", SIG_S), SIG_S)
    m = tm.model
    assert m.adequacy.ok
    assert m.constant_domain()
    assert m.irreflexive()
    for (w, v) in tm.frame.final.edges:
        assert set_mdepth(tm.pairs[v].positive) < set_mdepth(tm.pairs[w].positive)
    assert len(tm.frame.stages) >= 2
    assert set(tm.frame.stages[0].worlds) <= set(tm.frame.final.worlds)


def test_build_model_worlds_are_maximal_and_witnessed():
    tm = countermodel_for(f("A x . <> S(x)", SIG_S), f("<> A x . S(x)", SIG_S), SIG_S)
    for pair in tm.pairs.values():
        assert is_maximal(pair, tm.closure_set)
        assert is_fully_witnessed(pair, tm.constants)
        assert not (pair.positive_set & pair.negative_set)


def test_build_model_worlds_are_consistent():
    tm = build_model(Pair.make([f("<> T")], [f("<> <> T")]), SIG_SC)
    for pair in tm.pairs.values():
        assert is_consistent(pair, tm.signature)


def test_hat_r_transitive_irreflexive_on_generated_pairs():
    tm = countermodel_for(f("A x . <> S(x)", SIG_S), f("<> A x . S(x)", SIG_S), SIG_S)
    pairs = list(tm.pairs.values())
    for p in pairs:
        assert not hat_r(p, p)
    for p, q, r in itertools.product(pairs, repeat=3):
        if hat_r(p, q) and hat_r(q, r):
            assert hat_r(p, r)


# ---------------------------------------------------------------------------
# Truth lemma


def test_truth_lemma_on_trivial_model():
    tm = build_model(Pair.make([TOP], [f("<> T")]), SIG_SC)
    assert truth_lemma_check(tm)


def test_truth_lemma_on_quantifier_model():
    tm = countermodel_for(f("A x . <> S(x)", SIG_S), f("<> A x . S(x)", SIG_S), SIG_S)
    assert truth_lemma_check(tm)


def test_truth_lemma_detects_mutation():
    tm = countermodel_for(f("A x . <> S(x)", SIG_S), f("<> A x . S(x)", SIG_S), SIG_S)
    atom = next(
        g for g in tm.closure_set if isinstance(g, Rel)
    )
    target = tuple(t.name for t in atom.args)
    mutated_J = {w: dict(tm.model.J[w]) for w in tm.model.worlds}
    flip_world = tm.model.worlds[-1]
    current = set(mutated_J[flip_world].get(atom.symbol, frozenset()))
    if target in current:
        current.discard(target)
    else:
        current.add(target)
    mutated_J[flip_world][atom.symbol] = frozenset(current)
    from qrc1.semantics import constant_domain_model

    mutated = constant_domain_model(
        tm.model.worlds, tm.model.R, tm.constants, mutated_J, tm.signature
    )
    broken = dataclasses.replace(tm, model=mutated)
    assert truth_lemma_mismatches(broken)


# ---------------------------------------------------------------------------
# Sampled construction over the corpus bounds


def test_sampled_roots_build_and_validate():
    from qrc1.calculus import Sequent
    from qrc1.semantics import Derivable, decide
    from qrc1.corpus import random_root_pair
    from qrc1.syntax import big_and

    rng = random.Random(20240812)
    built = 0
    attempts = 0
    while built < 5 and attempts < 60:
        attempts += 1
        sig, positive, negatives = random_root_pair(rng)
        consistent = all(
            not isinstance(decide(Sequent(positive, d, sig)), Derivable)
            for d in negatives
        )
        if not consistent:
            continue
        tm = build_model(Pair.make([positive], negatives), sig)
        assert truth_lemma_check(tm)
        assert tm.model.adequacy.ok and tm.model.irreflexive()
        built += 1
    assert built == 5
