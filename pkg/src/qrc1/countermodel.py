"""Term-model construction: saturated pairs and the staged model builder.

Worlds are pairs of formula sets: the positive part (what holds at the
world) and the negative part (what fails).  Pairs are saturated relative
to the closure of the goal formulas under a fixed constant pool, chosen
just large enough that every negative universal formula can pick a witness
constant that is absent from the positive part.

The derivability oracle behind the saturation is the semantic decider,
whose termination rests on the finite model property; oracle calls are
memoized across a construction run on alpha-canonical sequents and issued
against slimmed signatures (constants not occurring in a query cannot
affect derivability).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .calculus import Sequent
from .semantics import (
    DEFAULT_MODEL_CAP,
    Derivable,
    KripkeModel,
    Refuted,
    constant_domain_model,
    decide,
    satisfies,
    transitive_closure,
)
from .syntax import (
    And,
    Const,
    Diamond,
    Forall,
    Formula,
    Rel,
    Signature,
    big_and,
    canonical,
    closure,
    constants_of,
    is_closed,
    mdepth,
    pretty,
    relations_of,
    set_cdepth,
    set_mdepth,
    set_udepth,
    sort_formulas,
    substitute,
)


class PairError(Exception):
    """Violated precondition on a pair or the constant pool."""


class InconsistentPairError(PairError):
    """The positive part derives a member of the negative part."""


@dataclass(frozen=True)
class Pair:
    """Two ordered sets of closed formulas: satisfied and refuted."""

    positive: tuple[Formula, ...]
    negative: tuple[Formula, ...]

    @classmethod
    def make(cls, positive: Iterable[Formula], negative: Iterable[Formula]) -> "Pair":
        pos = sort_formulas({canonical(f) for f in positive})
        neg = sort_formulas({canonical(f) for f in negative})
        for f in pos + neg:
            if not is_closed(f):
                raise PairError(f"pair members must be closed, got {f}")
        return cls(pos, neg)

    @property
    def positive_set(self) -> frozenset[Formula]:
        return frozenset(self.positive)

    @property
    def negative_set(self) -> frozenset[Formula]:
        return frozenset(self.negative)

    def members(self) -> frozenset[Formula]:
        return self.positive_set | self.negative_set

    def issubset(self, other: "Pair") -> bool:
        return (
            self.positive_set <= other.positive_set
            and self.negative_set <= other.negative_set
        )

    def __str__(self) -> str:
        pos = ", ".join(map(pretty, self.positive))
        neg = ", ".join(map(pretty, self.negative))
        return f"<{{{pos}}} ; {{{neg}}}>"


def hat_r(p: Pair, q: Pair) -> bool:
    """Pair-level accessibility: negative diamonds persist with their bodies,
    and some positive diamond of `p` is refuted at `q`."""
    for f in p.negative:
        if isinstance(f, Diamond):
            if f not in q.negative_set or canonical(f.body) not in q.negative_set:
                return False
    return any(
        isinstance(f, Diamond) and f in q.negative_set for f in p.positive
    )


# ---------------------------------------------------------------------------
# Derivability oracle


class DerivabilityOracle:
    """Memoized semantic derivability queries for one construction run."""

    def __init__(self, signature: Signature, model_cap: int = DEFAULT_MODEL_CAP):
        self.signature = signature
        self.model_cap = model_cap
        self.memo: dict = {}
        self.calls = 0

    def derivable(self, lhs: Formula, rhs: Formula) -> bool:
        key = (canonical(lhs), canonical(rhs))
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        self.calls += 1
        consts = constants_of(lhs) | constants_of(rhs)
        rels = relations_of(lhs) | relations_of(rhs)
        slim = Signature(
            tuple(c for c in self.signature.constants if c in consts),
            {s: n for s, n in self.signature.relations.items() if s in rels},
        )
        verdict = decide(
            Sequent(lhs, rhs, slim), model_cap=self.model_cap, attach_certificate=False
        )
        out = isinstance(verdict, Derivable)
        self.memo[key] = out
        return out


# ---------------------------------------------------------------------------
# Saturation


def _check_pool(constants: tuple[str, ...], phi_set: Iterable[Formula]) -> None:
    gamma = list(phi_set)
    if len(constants) <= 2 * set_cdepth(gamma) + 2 * set_udepth(gamma):
        raise PairError(
            "constant pool too small: need more than twice the constant count "
            "plus twice the quantifier depth of the goal set"
        )


def lindenbaum(
    p: Pair,
    phi_set: frozenset[Formula],
    constants: tuple[str, ...],
    oracle: DerivabilityOracle,
) -> Pair:
    """Saturate `p` to a maximal consistent fully witnessed pair over the
    closure of `phi_set` under `constants`.

    A closure formula goes to the positive part exactly when it follows
    from the (singleton) positive part of `p`.  Witness constants for
    negative universals exist because the pool outruns the constants the
    positive part and any single formula can mention; the least such
    constant is checked to land in the negative part.
    """
    _check_pool(constants, phi_set)
    if len(p.positive) != 1:
        raise PairError("saturation expects a singleton positive part")
    cl = closure(phi_set, constants)
    if not p.members() <= cl:
        raise PairError("pair must live inside the closure of the goal set")
    root = p.positive[0]

    positive = []
    negative = []
    for chi in sort_formulas(cl):
        if oracle.derivable(root, chi):
            positive.append(chi)
        else:
            negative.append(chi)
    q = Pair.make(positive, negative)

    bad = p.negative_set & q.positive_set
    if bad:
        raise InconsistentPairError(
            f"positive part derives {sorted(map(pretty, bad))}"
        )
    if set_mdepth(q.positive) != set_mdepth(p.positive):
        raise AssertionError("saturation changed the modal depth of the positive part")
    for f in q.negative:
        if isinstance(f, Forall):
            d = _witness_constant(constants, root, f)
            instance = canonical(substitute(f.body, f.var, Const(d)))
            if instance not in q.negative_set:
                raise AssertionError(
                    f"missing witness {d} for {f}: saturation is not fully witnessed"
                )
    return q


def _witness_constant(constants: tuple[str, ...], root: Formula, f: Forall) -> str:
    used = constants_of(root) | constants_of(f)
    for c in constants:
        if c not in used:
            return c
    raise PairError("no witness constant available; pool too small")


def pair_successor(
    p: Pair,
    diamond_phi: Formula,
    phi_set: frozenset[Formula],
    constants: tuple[str, ...],
    oracle: DerivabilityOracle,
) -> Pair:
    """A saturated pair q with p R q, the diamond body positive in q, and a
    strictly smaller positive modal depth."""
    diamond_phi = canonical(diamond_phi)
    if not isinstance(diamond_phi, Diamond) or diamond_phi not in p.positive_set:
        raise PairError(f"{diamond_phi} is not a positive diamond of the pair")
    carried = []
    for f in p.negative:
        if isinstance(f, Diamond):
            carried.extend([f.body, f])
    seed = Pair.make([diamond_phi.body], carried + [diamond_phi])
    q = lindenbaum(seed, phi_set, constants, oracle)
    if not hat_r(p, q):
        raise AssertionError("successor pair is not accessible from its parent")
    if canonical(diamond_phi.body) not in q.positive_set:
        raise AssertionError("successor pair lost the diamond body")
    if set_mdepth(q.positive) >= set_mdepth(p.positive):
        raise AssertionError("successor pair did not reduce the modal depth")
    return q


# ---------------------------------------------------------------------------
# MCW checks


def is_maximal(pair: Pair, closure_set: frozenset[Formula]) -> bool:
    return pair.members() == closure_set and not (
        pair.positive_set & pair.negative_set
    )


def is_fully_witnessed(pair: Pair, constants: tuple[str, ...]) -> bool:
    for f in pair.negative:
        if isinstance(f, Forall):
            if not any(
                canonical(substitute(f.body, f.var, Const(c))) in pair.negative_set
                for c in constants
            ):
                return False
    return True


def is_consistent(
    pair: Pair, signature: Signature, model_cap: int = DEFAULT_MODEL_CAP
) -> bool:
    """Each negative member must be refutable from the conjunction of the
    positive part (checked with the semantic decider)."""
    conj = big_and(pair.positive)
    sig = signature.with_constants(
        sorted(set().union(*(constants_of(f) for f in pair.members())) or set())
    )
    for delta in pair.negative:
        verdict = decide(Sequent(conj, delta, sig), model_cap=model_cap)
        if isinstance(verdict, Derivable):
            return False
    return True


# ---------------------------------------------------------------------------
# The staged model builder


@dataclass(frozen=True)
class Stage:
    worlds: tuple[int, ...]
    edges: tuple[tuple[int, int], ...]


@dataclass
class PairFrame:
    """The pre-closure staged frame: worlds labeled with pairs, one stage per
    expansion round, the last stage holding the full tree."""

    stages: list[Stage]
    pairs: dict[int, Pair]
    constants: tuple[str, ...]

    @property
    def final(self) -> Stage:
        return self.stages[-1]


@dataclass
class TermModel:
    """Constant-domain model built from a root pair, with its provenance."""

    model: KripkeModel
    pairs: dict[int, Pair]
    frame: PairFrame
    closure_set: frozenset[Formula]
    constants: tuple[str, ...]
    signature: Signature
    oracle_calls: int

    @property
    def root(self) -> int:
        return 0


def constant_pool(sig: Signature, phi_set: Iterable[Formula]) -> tuple[str, ...]:
    """All signature constants plus fresh ones up to the saturation bound."""
    gamma = list(phi_set)
    need = 2 * set_cdepth(gamma) + 2 * set_udepth(gamma) + 1
    pool = list(sig.constants)
    if len(pool) < need:
        pool.extend(sig.fresh_constants(need - len(pool)))
    return tuple(pool)


def build_model(
    p: Pair,
    sig: Signature,
    *,
    oracle: Optional[DerivabilityOracle] = None,
    model_cap: int = DEFAULT_MODEL_CAP,
    world_cap: int = 10_000,
) -> TermModel:
    """Build the constant-domain term model rooted at a saturation of `p`.

    Leaves are expanded once per positive diamond, the resulting tree is
    transitively closed, constants interpret as themselves at every world,
    and a relation holds of a tuple at a world exactly when the matching
    atom sits in the world's positive part.
    """
    if len(p.positive) != 1:
        raise PairError("the root pair needs a singleton positive part")
    phi_set = frozenset(p.members())
    constants = constant_pool(sig, phi_set)
    full_sig = sig.with_constants(constants)
    if oracle is None:
        oracle = DerivabilityOracle(full_sig, model_cap)
    cl = closure(phi_set, constants)

    root = lindenbaum(p, phi_set, constants, oracle)
    pairs: dict[int, Pair] = {0: root}
    edges: list[tuple[int, int]] = []
    stages = [Stage((0,), ())]
    frontier = [0]
    successor_memo: dict = {}

    while frontier:
        next_frontier: list[int] = []
        for w in frontier:
            for f in pairs[w].positive:
                if not isinstance(f, Diamond):
                    continue
                key = (pairs[w], f)
                q = successor_memo.get(key)
                if q is None:
                    q = pair_successor(pairs[w], f, phi_set, constants, oracle)
                    successor_memo[key] = q
                v = len(pairs)
                if v >= world_cap:
                    raise PairError(f"construction exceeded {world_cap} worlds")
                pairs[v] = q
                edges.append((w, v))
                next_frontier.append(v)
        if next_frontier:
            stages.append(Stage(tuple(range(len(pairs))), tuple(edges)))
        frontier = next_frontier

    for (w, v) in edges:
        if set_mdepth(pairs[v].positive) >= set_mdepth(pairs[w].positive):
            raise AssertionError("modal depth must strictly decrease along stage edges")

    J = {
        w: _atoms_to_interp(pair.positive)
        for w, pair in pairs.items()
    }
    model = constant_domain_model(
        tuple(range(len(pairs))),
        transitive_closure(edges),
        constants,
        J,
        full_sig,
    )
    frame = PairFrame(stages, pairs, constants)
    return TermModel(model, pairs, frame, cl, constants, full_sig, oracle.calls)


def _atoms_to_interp(formulas: Iterable[Formula]) -> dict[str, set[tuple]]:
    out: dict[str, set[tuple]] = {}
    for f in formulas:
        if isinstance(f, Rel):
            out.setdefault(f.symbol, set()).add(tuple(t.name for t in f.args))
    return out


# ---------------------------------------------------------------------------
# Truth-lemma self check


def truth_lemma_mismatches(tm: TermModel) -> list[tuple[int, Formula]]:
    """Worlds and closure formulas where model truth disagrees with pair
    membership."""
    out = []
    for w, pair in tm.pairs.items():
        for chi in sort_formulas(tm.closure_set):
            holds = satisfies(tm.model, w, {}, chi)
            if holds != (chi in pair.positive_set):
                out.append((w, chi))
    return out


def truth_lemma_check(tm: TermModel) -> bool:
    return not truth_lemma_mismatches(tm)


def countermodel_for(
    lhs: Formula,
    rhs: Formula,
    sig: Signature,
    *,
    model_cap: int = DEFAULT_MODEL_CAP,
) -> Optional[TermModel]:
    """Term model refuting lhs |- rhs at its root, or None when derivable.

    Open sequents are closed first; the closing constants join the
    signature before the pool is drawn.
    """
    from .syntax import closing_map, close_with_constants

    naming = closing_map([lhs, rhs], sig)
    sig2 = sig.with_constants(naming[x] for x in sorted(naming))
    phi_g = close_with_constants(lhs, naming)
    psi_g = close_with_constants(rhs, naming)
    try:
        tm = build_model(Pair.make([phi_g], [psi_g]), sig2, model_cap=model_cap)
    except InconsistentPairError:
        return None
    root = tm.root
    if not satisfies(tm.model, root, {}, phi_g) or satisfies(tm.model, root, {}, psi_g):
        raise AssertionError("term model failed to refute its goal at the root")
    return tm
