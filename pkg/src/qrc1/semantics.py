"""Relational models, satisfaction, and a complete decision procedure.

Models carry per-edge domain maps (the ``eta`` functions) instead of
requiring domain inclusion; adequacy asks that R be transitive, that the
eta maps compose along R-chains, and that constant interpretations are
tracked by eta (concordance).

``decide`` settles derivability of a sequent by searching for a finite
countermodel in a bounded class that is guaranteed to contain one whenever
the sequent is underivable: constant-domain, identity-eta, transitively
closed trees over a fixed constant pool, with depth bounded by the modal
depth and branching bounded by the number of diamond formulas in the
closure.  Exhausting the class without finding a countermodel is therefore
a derivability verdict.  The search is goal-directed (truth requirements
are conjunctive in this disjunction-free language, so each candidate world
has a unique minimal atom set), which keeps it feasible where literal
enumeration of all interpretations is not; every countermodel it returns
is re-verified with ``satisfies`` before being reported.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Iterable, Iterator, Mapping, Optional

from .calculus import Derivation, Sequent, prove
from .syntax import (
    And,
    Const,
    Diamond,
    Forall,
    Formula,
    Rel,
    Signature,
    Top,
    TOP,
    Var,
    canonical,
    closing_map,
    close_with_constants,
    closure,
    free_vars,
    mdepth,
    pretty,
    set_cdepth,
    set_mdepth,
    set_udepth,
    sort_formulas,
    substitute,
)

Element = Any
World = Any
Assignment = Mapping[str, Element]

DEFAULT_MODEL_CAP = 10_000_000


class InconclusiveError(Exception):
    """The configured resource cap was hit before a verdict was reached."""


class ModelError(Exception):
    """Structurally broken or non-adequate model."""


# ---------------------------------------------------------------------------
# Models


@dataclass(eq=False)
class KripkeModel:
    """Relational model: worlds, accessibility, per-world finite domains,
    per-edge eta maps, constant and relation interpretations."""

    worlds: tuple[World, ...]
    R: frozenset[tuple[World, World]]
    domains: dict[World, tuple[Element, ...]]
    eta: dict[tuple[World, World], dict[Element, Element]]
    I: dict[World, dict[str, Element]]
    J: dict[World, dict[str, frozenset[tuple[Element, ...]]]]
    signature: Signature

    def __post_init__(self):
        ws = set(self.worlds)
        if not ws:
            raise ModelError("a model needs at least one world")
        for (w, v) in self.R:
            if w not in ws or v not in ws:
                raise ModelError(f"edge {(w, v)} leaves the world set")
        if set(self.eta) != set(self.R):
            raise ModelError("eta must be defined exactly on the R-pairs")
        for w in self.worlds:
            if not self.domains.get(w):
                raise ModelError(f"empty domain at world {w!r}")
        for (w, v), f in self.eta.items():
            if set(f) != set(self.domains[w]):
                raise ModelError(f"eta at {(w, v)} is not total on the source domain")
            if not set(f.values()) <= set(self.domains[v]):
                raise ModelError(f"eta at {(w, v)} leaves the target domain")
        for w in self.worlds:
            iw = self.I.get(w, {})
            for c in self.signature.constants:
                if c not in iw or iw[c] not in self.domains[w]:
                    raise ModelError(f"constant {c!r} uninterpreted at world {w!r}")
            for s, tuples in self.J.get(w, {}).items():
                arity = self.signature.relations.get(s)
                if arity is None:
                    raise ModelError(f"undeclared relation {s!r} interpreted at {w!r}")
                for tup in tuples:
                    if len(tup) != arity or not set(tup) <= set(self.domains[w]):
                        raise ModelError(f"bad tuple {tup} for {s!r} at world {w!r}")

    @cached_property
    def successors(self) -> dict[World, tuple[World, ...]]:
        out: dict[World, list[World]] = {w: [] for w in self.worlds}
        for (w, v) in sorted(self.R, key=lambda e: (str(e[0]), str(e[1]))):
            out[w].append(v)
        return {w: tuple(vs) for w, vs in out.items()}

    @cached_property
    def adequacy(self) -> "AdequacyReport":
        return check_adequate(self)

    def constant_domain(self) -> bool:
        doms = {self.domains[w] for w in self.worlds}
        return len(doms) == 1

    def irreflexive(self) -> bool:
        return all(w != v for (w, v) in self.R)

    def transitive(self) -> bool:
        return self.adequacy.transitive


@dataclass
class AdequacyReport:
    transitive: bool
    eta_coherent: bool
    concordant: bool
    witnesses: list[tuple] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return self.transitive and self.eta_coherent and self.concordant


def check_adequate(model: KripkeModel) -> AdequacyReport:
    """Exhaustive check of transitivity, eta composition along R-chains, and
    concordance of the constant interpretations."""
    transitive = True
    eta_coherent = True
    concordant = True
    witnesses: list[tuple] = []
    R = model.R
    for (w, u) in R:
        for (u2, v) in R:
            if u2 != u:
                continue
            if (w, v) not in R:
                transitive = False
                witnesses.append(("transitivity", w, u, v))
                continue
            for d in model.domains[w]:
                if model.eta[(u, v)][model.eta[(w, u)][d]] != model.eta[(w, v)][d]:
                    eta_coherent = False
                    witnesses.append(("eta", w, u, v, d))
    for (w, u) in R:
        for c in model.signature.constants:
            if model.I[u][c] != model.eta[(w, u)][model.I[w][c]]:
                concordant = False
                witnesses.append(("concordance", w, u, c))
    return AdequacyReport(transitive, eta_coherent, concordant, witnesses)


def constant_domain_model(
    worlds: Iterable[World],
    edges: Iterable[tuple[World, World]],
    domain: Iterable[Element],
    J: Mapping[World, Mapping[str, Iterable[tuple[Element, ...]]]],
    signature: Signature,
    I: Mapping[str, Element] | None = None,
) -> KripkeModel:
    """Identity-eta constant-domain model; constants interpret as themselves
    unless an explicit interpretation is given."""
    worlds = tuple(worlds)
    dom = tuple(domain)
    R = frozenset(edges)
    ident = {d: d for d in dom}
    interp = dict(I) if I is not None else {c: c for c in signature.constants}
    return KripkeModel(
        worlds=worlds,
        R=R,
        domains={w: dom for w in worlds},
        eta={e: dict(ident) for e in R},
        I={w: dict(interp) for w in worlds},
        J={
            w: {s: frozenset(map(tuple, ts)) for s, ts in J.get(w, {}).items()}
            for w in worlds
        },
        signature=signature,
    )


def transitive_closure(edges: Iterable[tuple[World, World]]) -> frozenset:
    out = set(edges)
    changed = True
    while changed:
        changed = False
        for (a, b) in list(out):
            for (c, d) in list(out):
                if b == c and (a, d) not in out:
                    out.add((a, d))
                    changed = True
    return frozenset(out)


# ---------------------------------------------------------------------------
# Satisfaction


def satisfies(model: KripkeModel, w: World, g: Assignment, phi: Formula) -> bool:
    """Truth of `phi` at `w` under `g`.

    Diamonds re-base the assignment through eta; universals range over the
    world's domain.  Variables the assignment leaves out default to the
    first domain element of `w`.
    """
    if not model.adequacy.ok:
        raise ModelError(f"model is not adequate: {model.adequacy.witnesses[:3]}")
    default = model.domains[w][0]
    env = {x: g.get(x, default) for x in free_vars(phi)}
    for x, e in env.items():
        if e not in model.domains[w]:
            raise ModelError(f"assignment sends {x} outside the domain of {w!r}")
    return _sat(model, w, env, phi)


def _sat(model: KripkeModel, w: World, env: dict[str, Element], phi: Formula) -> bool:
    match phi:
        case Top():
            return True
        case Rel(sym, args):
            tup = tuple(
                env[a.name] if isinstance(a, Var) else model.I[w][a.name] for a in args
            )
            return tup in model.J[w].get(sym, frozenset())
        case And(left, right):
            return _sat(model, w, env, left) and _sat(model, w, env, right)
        case Diamond(body):
            for v in model.successors[w]:
                step = model.eta[(w, v)]
                moved = {x: step[e] for x, e in env.items()}
                if _sat(model, v, moved, body):
                    return True
            return False
        case Forall(x, body):
            return all(_sat(model, w, {**env, x: d}, body) for d in model.domains[w])
    raise TypeError(phi)


# ---------------------------------------------------------------------------
# Literal bounded enumeration


def _tree_shapes(depth: int, width: int) -> Iterator[tuple]:
    """Nested-tuple tree shapes with at most `depth` levels below the root
    and at most `width` children per node, in a fixed deterministic order."""
    yield ()
    if depth > 0:
        subs = list(_tree_shapes(depth - 1, width))
        for k in range(1, width + 1):
            for combo in itertools.product(subs, repeat=k):
                yield combo


def _shape_edges(shape: tuple, prefix: tuple = ()) -> Iterator[tuple[tuple, tuple]]:
    for i, child in enumerate(shape):
        yield prefix, prefix + (i,)
        yield from _shape_edges(child, prefix + (i,))


def enumerate_models(
    sig: Signature, domain: Iterable[Element], depth: int, width: int
) -> Iterator[KripkeModel]:
    """Every constant-domain identity-eta tree model within the bounds, each
    transitively closed and hence adequate by construction."""
    dom = tuple(domain)
    if not dom:
        raise ValueError("domain must be nonempty")
    if not set(sig.constants) <= set(dom):
        raise ValueError("domain must contain every signature constant")
    rel_space: list[tuple[str, list[tuple[Element, ...]]]] = [
        (s, sorted(itertools.product(dom, repeat=n)))
        for s, n in sorted(sig.relations.items())
    ]

    def world_interp() -> Iterator[dict[str, frozenset]]:
        spaces = []
        for s, tuples in rel_space:
            subsets = []
            for mask in range(2 ** len(tuples)):
                subsets.append(
                    frozenset(t for i, t in enumerate(tuples) if mask >> i & 1)
                )
            spaces.append([(s, sub) for sub in subsets])
        for combo in itertools.product(*spaces):
            yield dict(combo)

    for shape in _tree_shapes(depth, width):
        worlds = [()]

        def collect(sh: tuple, prefix: tuple) -> None:
            for i, child in enumerate(sh):
                worlds.append(prefix + (i,))
                collect(child, prefix + (i,))

        collect(shape, ())
        edges = transitive_closure(_shape_edges(shape))
        for assignment in itertools.product(*(world_interp() for _ in worlds)):
            yield constant_domain_model(
                worlds, edges, dom, dict(zip(worlds, assignment)), sig
            )


# ---------------------------------------------------------------------------
# Verdicts


@dataclass(frozen=True)
class Derivable:
    certificate: Optional[Derivation] = None


@dataclass(frozen=True)
class Refuted:
    model: KripkeModel
    world: World
    assignment: dict


Verdict = Derivable | Refuted


# ---------------------------------------------------------------------------
# The decision procedure


class _CountermodelSearch:
    """Searches the bounded class of candidate countermodels for a root that
    satisfies one closed formula and falsifies another.

    Truth of a strictly positive formula at a world is a conjunction of
    ground-atom requirements (on the world's own interpretation) and
    membership requirements on the set of formulas true somewhere strictly
    below the world; falsity branches over the dual choices.  A candidate
    world therefore needs exactly one minimal atom set, and subtrees for
    distinct diamond-requirements are independent, which is what makes the
    search tractable.
    """

    def __init__(self, constants: tuple[str, ...], cap: int):
        self.constants = constants
        self.cap = cap
        self.spent = 0
        self._req: dict = {}
        self._fals: dict = {}
        self._world: dict = {}

    def _tick(self) -> None:
        self.spent += 1
        if self.spent > self.cap:
            raise InconclusiveError(
                f"countermodel search exceeded the cap of {self.cap} candidates"
            )

    def requirements(self, phi: Formula) -> tuple[frozenset, frozenset]:
        """(ground atoms that must hold here, formulas that must hold below)."""
        phi = canonical(phi)
        hit = self._req.get(phi)
        if hit is not None:
            return hit
        match phi:
            case Top():
                out = (frozenset(), frozenset())
            case Rel():
                out = (frozenset([phi]), frozenset())
            case And(left, right):
                a1, n1 = self.requirements(left)
                a2, n2 = self.requirements(right)
                out = (a1 | a2, n1 | n2)
            case Diamond(body):
                out = (frozenset(), frozenset([canonical(body)]))
            case Forall(x, body):
                atoms: frozenset = frozenset()
                needs: frozenset = frozenset()
                for c in self.constants:
                    a, n = self.requirements(substitute(body, x, Const(c)))
                    atoms |= a
                    needs |= n
                out = (atoms, needs)
            case _:
                raise TypeError(phi)
        self._req[phi] = out
        return out

    def falsifications(self, phi: Formula) -> tuple[tuple[frozenset, frozenset], ...]:
        """Ways to make `phi` false at a world: (atoms that must be absent
        here, formulas that must be false everywhere below)."""
        phi = canonical(phi)
        hit = self._fals.get(phi)
        if hit is not None:
            return hit
        match phi:
            case Top():
                out: tuple = ()
            case Rel():
                out = ((frozenset([phi]), frozenset()),)
            case And(left, right):
                out = self.falsifications(left) + self.falsifications(right)
            case Diamond(body):
                out = ((frozenset(), frozenset([canonical(body)])),)
            case Forall(x, body):
                acc = []
                for c in self.constants:
                    acc.extend(self.falsifications(substitute(body, x, Const(c))))
                out = tuple(acc)
            case _:
                raise TypeError(phi)
        seen = set()
        uniq = []
        for strat in out:
            if strat not in seen:
                uniq.append(strat)
                seen.add(strat)
        out = tuple(uniq)
        self._fals[phi] = out
        return out

    def world_for(self, nu: Formula, banned: frozenset, depth: int):
        """A tree of height <= depth whose root makes `nu` true while every
        formula in `banned` is false at the root and everywhere below.
        Returns (atom set, child trees) or None."""
        if depth <= 0:
            return None
        key = (nu, banned, depth)
        if key in self._world:
            return self._world[key]
        self._tick()
        atoms, needs = self.requirements(nu)
        zetas = sort_formulas(banned)

        def assign(i: int, excluded: frozenset):
            if i == len(zetas):
                if needs & (banned | excluded):
                    return None
                kids = self.forest(needs, banned | excluded, depth - 1)
                if kids is None:
                    return None
                return (atoms, kids)
            for neg, below in self.falsifications(zetas[i]):
                if neg & atoms:
                    continue
                found = assign(i + 1, excluded | below)
                if found is not None:
                    return found
            return None

        result = assign(0, frozenset())
        self._world[key] = result
        return result

    def forest(self, needs: frozenset, banned: frozenset, depth: int):
        """Independent subtrees realizing each needed formula under the same
        exclusions.  Returns a tuple of trees or None."""
        if not needs:
            return ()
        if depth <= 0:
            return None
        kids = []
        for nu in sort_formulas(needs):
            tree = self.world_for(nu, banned, depth)
            if tree is None:
                return None
            kids.append(tree)
        return tuple(kids)

    def root(self, phi: Formula, psi: Formula, depth: int):
        """(root atoms, child trees) refuting phi |- psi, or None."""
        atoms, needs = self.requirements(phi)
        for neg, below in self.falsifications(psi):
            self._tick()
            if neg & atoms:
                continue
            if needs & below:
                continue
            kids = self.forest(needs, below, depth)
            if kids is not None:
                return (atoms, kids)
        return None


def _materialize(tree, constants: tuple[str, ...], sig: Signature) -> KripkeModel:
    worlds: list[int] = []
    edges: list[tuple[int, int]] = []
    J: dict[int, dict[str, set]] = {}

    def build(node, parent: int | None) -> None:
        atoms, kids = node
        w = len(worlds)
        worlds.append(w)
        J[w] = {}
        for atom in sort_formulas(atoms):
            assert isinstance(atom, Rel)
            J[w].setdefault(atom.symbol, set()).add(
                tuple(t.name for t in atom.args)
            )
        if parent is not None:
            edges.append((parent, w))
        for kid in kids:
            build(kid, w)

    build(tree, None)
    return constant_domain_model(
        worlds, transitive_closure(edges), constants, J, sig
    )


def decision_pool(sig: Signature, phi: Formula, psi: Formula) -> tuple[str, ...]:
    """Constant pool for the bounded model class: all signature constants
    plus fresh ones so the pool exceeds twice the constant count plus twice
    the quantifier depth of the two formulas."""
    gamma = [phi, psi]
    need = 2 * set_cdepth(gamma) + 2 * set_udepth(gamma) + 1
    pool = list(sig.constants)
    if len(pool) < need:
        pool.extend(sig.fresh_constants(need - len(pool)))
    return tuple(pool)


def decide(
    s: Sequent,
    *,
    model_cap: int = DEFAULT_MODEL_CAP,
    attach_certificate: bool = False,
    prove_budget: int = 12,
) -> Verdict:
    """Settle `s`: Refuted with a re-verified countermodel, else Derivable.

    Free variables are first closed with fresh constants; the refutation
    assignment sends each original free variable to its closing constant.
    Raises :class:`InconclusiveError` when the resource cap is hit.
    """
    s.validate()
    naming = closing_map([s.lhs, s.rhs], s.signature)
    sig = s.signature.with_constants(naming[x] for x in sorted(naming))
    phi_g = close_with_constants(s.lhs, naming)
    psi_g = close_with_constants(s.rhs, naming)

    constants = decision_pool(sig, phi_g, psi_g)
    full_sig = sig.with_constants(constants)
    depth = set_mdepth([phi_g, psi_g])

    search = _CountermodelSearch(constants, model_cap)
    tree = search.root(canonical(phi_g), canonical(psi_g), depth)

    if tree is None:
        if mdepth(s.lhs) < mdepth(s.rhs):
            raise AssertionError(
                "no countermodel found for a sequent the modal-depth bound refutes"
            )
        certificate = prove(s, prove_budget) if attach_certificate else None
        return Derivable(certificate)

    model = _materialize(tree, constants, full_sig)
    root = model.worlds[0]
    if not satisfies(model, root, {}, phi_g) or satisfies(model, root, {}, psi_g):
        raise AssertionError("countermodel failed re-verification")
    assignment = {x: naming[x] for x in sorted(naming)}
    if not satisfies(model, root, assignment, s.lhs) or satisfies(
        model, root, assignment, s.rhs
    ):
        raise AssertionError("countermodel failed re-verification on the open sequent")
    return Refuted(model, root, assignment)


# ---------------------------------------------------------------------------
# Serialization


def model_to_json(model: KripkeModel) -> dict:
    if not model.constant_domain():
        raise ModelError("the JSON schema covers constant-domain models only")
    dom = model.domains[model.worlds[0]]
    root = model.worlds[0]
    return {
        "worlds": list(model.worlds),
        "R": sorted([list(e) for e in model.R]),
        "domain": list(dom),
        "I": {c: model.I[root][c] for c in model.signature.constants},
        "J": {
            s: {
                str(w): sorted(list(t) for t in model.J[w].get(s, frozenset()))
                for w in model.worlds
            }
            for s in sorted(model.signature.relations)
        },
        "relations": dict(sorted(model.signature.relations.items())),
    }


def model_from_json(data: dict) -> KripkeModel:
    worlds = [tuple(w) if isinstance(w, list) else w for w in data["worlds"]]
    by_str = {str(w): w for w in worlds}
    relations = data.get("relations")
    if relations is None:
        relations = {}
        for s, per_world in data.get("J", {}).items():
            arity = None
            for tuples in per_world.values():
                for t in tuples:
                    arity = len(t)
                    break
                if arity is not None:
                    break
            if arity is None:
                raise ModelError(f"cannot infer the arity of {s!r}")
            relations[s] = arity
    sig = Signature(tuple(data.get("I", {}).keys()), relations)
    J: dict = {w: {} for w in worlds}
    for s, per_world in data.get("J", {}).items():
        for wstr, tuples in per_world.items():
            J[by_str[wstr]][s] = frozenset(tuple(t) for t in tuples)
    edges = [tuple(tuple(x) if isinstance(x, list) else x for x in e) for e in data["R"]]
    return constant_domain_model(
        worlds, edges, data["domain"], J, sig, I=data.get("I")
    )


def model_to_dot(model: KripkeModel) -> str:
    lines = ["digraph frame {", "  rankdir=TB;", "  node [shape=box];"]
    for w in model.worlds:
        atoms = []
        for s in sorted(model.J[w]):
            for tup in sorted(model.J[w][s]):
                atoms.append(f"{s}({', '.join(map(str, tup))})")
        label = f"{w}" + ("\\n" + "\\n".join(atoms) if atoms else "")
        lines.append(f'  "{w}" [label="{label}"];')
    for (w, v) in sorted(model.R, key=lambda e: (str(e[0]), str(e[1]))):
        lines.append(f'  "{w}" -> "{v}";')
    lines.append("}")
    return "\n".join(lines)
