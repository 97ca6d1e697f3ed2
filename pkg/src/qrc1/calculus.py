"""Sequent derivability: certificates, a checker, and backward proof search.

A :class:`Derivation` is a tree of rule applications.  ``check_derivation``
re-verifies every node against its rule schema, including side conditions,
so certificates are trustworthy independently of how they were produced.

``prove`` is a goal-directed, memoized, iterative-deepening search over the
primitive rules.  It is sound (everything returned passes the checker) but
makes no completeness claim; a ``None`` result only means the budget ran
out, never that the sequent is underivable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

from .syntax import (
    And,
    Const,
    Diamond,
    Forall,
    Formula,
    Rel,
    Signature,
    Term,
    Top,
    TOP,
    Var,
    canonical,
    constants_of,
    free_for,
    free_vars,
    mdepth,
    pretty,
    substitute,
    validate_formula,
)

# Rule tags.  The first block are the primitive axioms/rules; the L2.* block
# are derived rules accepted by the checker and expandable to primitives.
I_LEFT = "i-left"
I_REFL = "i-refl"
II_LEFT = "ii-left"
II_RIGHT = "ii-right"
III = "iii"
IV = "iv"
V = "v"
VI = "vi"
VII = "vii"
VIII = "viii"
IX = "ix"
X = "x"
L2_I = "L2.i"
L2_II = "L2.ii"
L2_III = "L2.iii"
L2_IV = "L2.iv"
L2_V = "L2.v"
L2_VI = "L2.vi"

PRIMITIVE_RULES = (I_LEFT, I_REFL, II_LEFT, II_RIGHT, III, IV, V, VI, VII, VIII, IX, X)
DERIVED_RULES = (L2_I, L2_II, L2_III, L2_IV, L2_V, L2_VI)
ALL_RULES = PRIMITIVE_RULES + DERIVED_RULES


@dataclass(frozen=True)
class Sequent:
    lhs: Formula
    rhs: Formula
    signature: Signature

    def __str__(self) -> str:
        return f"{self.lhs} |- {self.rhs}"

    def key(self) -> tuple[Formula, Formula]:
        """Memoization key: both sides in alpha-canonical form."""
        return canonical(self.lhs), canonical(self.rhs)

    def validate(self) -> None:
        validate_formula(self.lhs, self.signature)
        validate_formula(self.rhs, self.signature)


@dataclass(frozen=True)
class Witness:
    """Variable/term data consumed by the quantifier and constant rules."""

    var: str | None = None
    term: Term | None = None


@dataclass(frozen=True)
class Derivation:
    conclusion: Sequent
    rule: str
    premises: tuple["Derivation", ...] = ()
    witness: Witness | None = None

    def depth(self) -> int:
        return 1 + max((p.depth() for p in self.premises), default=0)

    def size(self) -> int:
        return 1 + sum(p.size() for p in self.premises)

    def walk(self):
        yield self
        for p in self.premises:
            yield from p.walk()


# ---------------------------------------------------------------------------
# Checking


def _node_error(d: Derivation) -> str | None:
    """Schema check for one node, premises assumed already verified."""
    lhs, rhs = d.conclusion.lhs, d.conclusion.rhs
    prems = d.premises
    w = d.witness

    def arity(n: int) -> str | None:
        if len(prems) != n:
            return f"rule {d.rule} expects {n} premise(s), got {len(prems)}"
        return None

    if d.rule == I_LEFT:
        return arity(0) or (None if rhs == TOP else "rhs must be T")
    if d.rule == I_REFL:
        return arity(0) or (None if lhs == rhs else "lhs and rhs must coincide")
    if d.rule == II_LEFT:
        if arity(0):
            return arity(0)
        if not (isinstance(lhs, And) and lhs.left == rhs):
            return "conclusion must be (a & b) |- a"
        return None
    if d.rule == II_RIGHT:
        if arity(0):
            return arity(0)
        if not (isinstance(lhs, And) and lhs.right == rhs):
            return "conclusion must be (a & b) |- b"
        return None
    if d.rule == III:
        if arity(2):
            return arity(2)
        p1, p2 = prems
        if p1.conclusion.lhs != lhs or p2.conclusion.lhs != lhs:
            return "premises must share the conclusion lhs"
        if rhs != And(p1.conclusion.rhs, p2.conclusion.rhs):
            return "rhs must conjoin the premise rhss"
        return None
    if d.rule == IV:
        if arity(2):
            return arity(2)
        p1, p2 = prems
        if p1.conclusion.rhs != p2.conclusion.lhs:
            return "cut formula mismatch"
        if lhs != p1.conclusion.lhs or rhs != p2.conclusion.rhs:
            return "conclusion must chain the premises"
        return None
    if d.rule == V:
        if arity(1):
            return arity(1)
        p = prems[0].conclusion
        if lhs != Diamond(p.lhs) or rhs != Diamond(p.rhs):
            return "conclusion must diamond both premise sides"
        return None
    if d.rule == VI:
        if arity(0):
            return arity(0)
        ok = (
            isinstance(lhs, Diamond)
            and isinstance(lhs.body, Diamond)
            and rhs == lhs.body
        )
        return None if ok else "conclusion must be <> <> a |- <> a"
    if d.rule == VII:
        if arity(1):
            return arity(1)
        if w is None or w.var is None:
            return "rule vii needs a variable witness"
        p = prems[0].conclusion
        if not (isinstance(rhs, Forall) and rhs.var == w.var):
            return "rhs must quantify the witness variable"
        if p.lhs != lhs or p.rhs != rhs.body:
            return "premise must be lhs |- body"
        if w.var in free_vars(lhs):
            return f"{w.var} occurs free in the lhs"
        return None
    if d.rule == VIII:
        if arity(1):
            return arity(1)
        if w is None or w.var is None or w.term is None:
            return "rule viii needs a variable and a term witness"
        if not (isinstance(lhs, Forall) and lhs.var == w.var):
            return "lhs must quantify the witness variable"
        if not free_for(lhs.body, w.var, w.term):
            return "witness term is not free for the variable"
        p = prems[0].conclusion
        if p.lhs != substitute(lhs.body, w.var, w.term) or p.rhs != rhs:
            return "premise must instantiate the lhs body"
        return None
    if d.rule == IX:
        if arity(1):
            return arity(1)
        if w is None or w.var is None or w.term is None:
            return "rule ix needs a variable and a term witness"
        p = prems[0].conclusion
        if not (free_for(p.lhs, w.var, w.term) and free_for(p.rhs, w.var, w.term)):
            return "witness term is not free for the variable"
        if lhs != substitute(p.lhs, w.var, w.term) or rhs != substitute(
            p.rhs, w.var, w.term
        ):
            return "conclusion must instantiate both premise sides"
        return None
    if d.rule == X:
        if arity(1):
            return arity(1)
        if w is None or w.var is None or not isinstance(w.term, Const):
            return "rule x needs a variable and a constant witness"
        c = w.term.name
        if c in constants_of(lhs) | constants_of(rhs):
            return f"constant {c} occurs in the conclusion"
        p = prems[0].conclusion
        if p.lhs != substitute(lhs, w.var, w.term) or p.rhs != substitute(
            rhs, w.var, w.term
        ):
            return "premise must ground both conclusion sides"
        return None

    # Derived rules.
    if d.rule == L2_I:
        if arity(0):
            return arity(0)
        ok = (
            isinstance(lhs, Diamond)
            and isinstance(lhs.body, Forall)
            and rhs == Forall(lhs.body.var, Diamond(lhs.body.body))
        )
        return None if ok else "conclusion must be <> A x. a |- A x. <> a"
    if d.rule == L2_II:
        if arity(0):
            return arity(0)
        ok = (
            isinstance(lhs, Forall)
            and isinstance(lhs.body, Forall)
            and lhs.var != lhs.body.var
            and rhs == Forall(lhs.body.var, Forall(lhs.var, lhs.body.body))
        )
        return None if ok else "conclusion must swap two distinct quantifiers"
    if d.rule == L2_III:
        if arity(0):
            return arity(0)
        if w is None or w.term is None:
            return "L2.iii needs a term witness"
        if not isinstance(lhs, Forall):
            return "lhs must be universal"
        if not free_for(lhs.body, lhs.var, w.term):
            return "witness term is not free for the variable"
        if rhs != substitute(lhs.body, lhs.var, w.term):
            return "rhs must instantiate the lhs body"
        return None
    if d.rule == L2_IV:
        if arity(0):
            return arity(0)
        if not (isinstance(lhs, Forall) and isinstance(rhs, Forall)):
            return "both sides must be universal"
        y = rhs.var
        if y in free_vars(lhs.body) or not free_for(lhs.body, lhs.var, Var(y)):
            return "renaming variable is not admissible"
        if rhs.body != substitute(lhs.body, lhs.var, Var(y)):
            return "rhs body must rename the lhs body"
        return None
    if d.rule == L2_V:
        if arity(1):
            return arity(1)
        if w is None or w.var is None or w.term is None:
            return "L2.v needs a variable and a term witness"
        p = prems[0].conclusion
        if w.var in free_vars(p.lhs):
            return f"{w.var} occurs free in the premise lhs"
        if not free_for(p.rhs, w.var, w.term):
            return "witness term is not free for the variable"
        if lhs != p.lhs or rhs != substitute(p.rhs, w.var, w.term):
            return "conclusion must instantiate the premise rhs"
        return None
    if d.rule == L2_VI:
        if arity(1):
            return arity(1)
        if w is None or w.var is None or not isinstance(w.term, Const):
            return "L2.vi needs a variable and a constant witness"
        if not isinstance(rhs, Forall) or rhs.var != w.var:
            return "rhs must quantify the witness variable"
        c = w.term.name
        if c in constants_of(lhs) | constants_of(rhs.body):
            return f"constant {c} occurs in the conclusion"
        if w.var in free_vars(lhs):
            return f"{w.var} occurs free in the lhs"
        p = prems[0].conclusion
        if p.lhs != lhs or p.rhs != substitute(rhs.body, w.var, w.term):
            return "premise must witness the rhs body with the constant"
        return None
    return f"unknown rule tag {d.rule!r}"


def derivation_errors(d: Derivation) -> list[str]:
    """All schema violations, each prefixed with a path into the tree."""
    problems: list[str] = []

    def visit(node: Derivation, path: str) -> None:
        try:
            node.conclusion.validate()
        except Exception as exc:  # noqa: BLE001 - collect as diagnostics
            problems.append(f"{path}: ill-formed sequent: {exc}")
        base = node.conclusion.signature
        for i, p in enumerate(node.premises):
            # Premises may extend the signature with fresh constants only.
            psig = p.conclusion.signature
            if dict(psig.relations) != dict(base.relations) or not set(
                base.constants
            ) <= set(psig.constants):
                problems.append(f"{path}: premise {i} signature is not an extension")
            visit(p, f"{path}.{i}")
        err = _node_error(node)
        if err:
            problems.append(f"{path}: {err}")

    visit(d, "root")
    return problems


def check_derivation(d: Derivation) -> bool:
    return not derivation_errors(d)


# ---------------------------------------------------------------------------
# Node builders


def _sig_for(sig: Signature, *formulas: Formula) -> Signature:
    extra = sorted(set().union(*(constants_of(f) for f in formulas)) - set(sig.constants))
    return sig.with_constants(extra) if extra else sig


def _node(
    sig: Signature,
    lhs: Formula,
    rhs: Formula,
    rule: str,
    premises: tuple[Derivation, ...] = (),
    witness: Witness | None = None,
) -> Derivation:
    return Derivation(Sequent(lhs, rhs, _sig_for(sig, lhs, rhs)), rule, premises, witness)


def _cut(sig: Signature, d1: Derivation, d2: Derivation) -> Derivation:
    return _node(sig, d1.conclusion.lhs, d2.conclusion.rhs, IV, (d1, d2))


def _refl(sig: Signature, phi: Formula) -> Derivation:
    return _node(sig, phi, phi, I_REFL)


def alpha_bridge(src: Formula, dst: Formula, sig: Signature) -> Derivation:
    """Certificate for src |- dst when the two are alpha-variants."""
    if src == dst:
        return _refl(sig, src)
    if canonical(src) != canonical(dst):
        raise ValueError(f"{src} and {dst} are not alpha-variants")
    match (src, dst):
        case (And(a, b), And(a2, b2)):
            left = _cut(
                sig, _node(sig, src, a, II_LEFT), alpha_bridge(a, a2, sig)
            ) if a != a2 else _node(sig, src, a, II_LEFT)
            right = _cut(
                sig, _node(sig, src, b, II_RIGHT), alpha_bridge(b, b2, sig)
            ) if b != b2 else _node(sig, src, b, II_RIGHT)
            return _node(sig, src, dst, III, (left, right))
        case (Diamond(a), Diamond(a2)):
            return _node(sig, src, dst, V, (alpha_bridge(a, a2, sig),))
        case (Forall(x, a), Forall(y, a2)):
            if x == y:
                inner = alpha_bridge(a, a2, sig)
                step = _node(sig, src, a2, VIII, (inner,), Witness(x, Var(x)))
                return _node(sig, src, dst, VII, (step,), Witness(y))
            avoid = constants_of(src) | constants_of(dst)
            c = sig.fresh_constants(1, avoid)[0]
            csig = sig.with_constants([c])
            inner = alpha_bridge(
                substitute(a, x, Const(c)), substitute(a2, y, Const(c)), csig
            )
            step = _node(
                csig, src, substitute(a2, y, Const(c)), VIII, (inner,), Witness(x, Const(c))
            )
            degrounded = _node(sig, src, a2, X, (step,), Witness(y, Const(c)))
            return _node(sig, src, dst, VII, (degrounded,), Witness(y))
    raise ValueError(f"cannot bridge {src} to {dst}")


# ---------------------------------------------------------------------------
# Derived rule expansions (compiled to primitive rules)


def expand_quantifier_shift(x: str, body: Formula, sig: Signature) -> Derivation:
    """<> A x. body |- A x. <> body."""
    strip = _node(sig, Forall(x, body), body, VIII, (_refl(sig, body),), Witness(x, Var(x)))
    dia = _node(sig, Diamond(Forall(x, body)), Diamond(body), V, (strip,))
    return _node(
        sig, Diamond(Forall(x, body)), Forall(x, Diamond(body)), VII, (dia,), Witness(x)
    )


def expand_quantifier_swap(x: str, y: str, body: Formula, sig: Signature) -> Derivation:
    """A x. A y. body |- A y. A x. body (x and y distinct)."""
    if x == y:
        raise ValueError("swap needs distinct variables")
    lhs = Forall(x, Forall(y, body))
    inner = _node(
        sig, Forall(y, body), body, VIII, (_refl(sig, body),), Witness(y, Var(y))
    )
    outer = _node(sig, lhs, body, VIII, (inner,), Witness(x, Var(x)))
    gen_x = _node(sig, lhs, Forall(x, body), VII, (outer,), Witness(x))
    return _node(sig, lhs, Forall(y, Forall(x, body)), VII, (gen_x,), Witness(y))


def expand_instantiation(x: str, body: Formula, t: Term, sig: Signature) -> Derivation:
    """A x. body |- body[x/t]."""
    inst = substitute(body, x, t)
    return _node(sig, Forall(x, body), inst, VIII, (_refl(sig, inst),), Witness(x, t))


def expand_renaming(x: str, body: Formula, y: str, sig: Signature) -> Derivation:
    """A x. body |- A y. body[x/y] (y fresh for body)."""
    renamed = substitute(body, x, Var(y))
    step = _node(sig, Forall(x, body), renamed, VIII, (_refl(sig, renamed),), Witness(x, Var(y)))
    return _node(sig, Forall(x, body), Forall(y, renamed), VII, (step,), Witness(y))


def expand_term_weakening(premise: Derivation, x: str, t: Term, sig: Signature) -> Derivation:
    """From phi |- psi conclude phi |- psi[x/t] (x not free in phi)."""
    phi, psi = premise.conclusion.lhs, premise.conclusion.rhs
    gen = _node(sig, phi, Forall(x, psi), VII, (premise,), Witness(x))
    inst = expand_instantiation(x, psi, t, sig)
    return _cut(sig, gen, inst)


def expand_fresh_generalization(
    premise: Derivation, x: str, c: str, sig: Signature
) -> Derivation:
    """From phi |- psi[x/c] conclude phi |- A x. psi (c fresh, x not in phi)."""
    phi, grounded = premise.conclusion.lhs, premise.conclusion.rhs
    # Recover psi: the premise rhs must be psi[x/c]; the caller supplies psi
    # implicitly through the derived-rule node, so reconstruct by replacing c
    # with x everywhere (c is fresh, so this inverts the grounding).
    psi = _replace_constant(grounded, c, Var(x))
    degrounded = _node(sig, phi, psi, X, (premise,), Witness(x, Const(c)))
    return _node(sig, phi, Forall(x, psi), VII, (degrounded,), Witness(x))


def _replace_constant(phi: Formula, c: str, t: Term) -> Formula:
    match phi:
        case Top():
            return phi
        case Rel(sym, args):
            return Rel(sym, tuple(t if isinstance(a, Const) and a.name == c else a for a in args))
        case And(left, right):
            return And(_replace_constant(left, c, t), _replace_constant(right, c, t))
        case Diamond(body):
            return Diamond(_replace_constant(body, c, t))
        case Forall(var, body):
            return Forall(var, _replace_constant(body, c, t))
    raise TypeError(phi)


def _match_instance(body: Formula, x: str, target: Formula) -> Term | None:
    """The unique t with body[x/t] == target, if any."""
    candidates: set[Term] = set()

    def walk(b: Formula, tg: Formula, bound: frozenset[str]) -> bool:
        match (b, tg):
            case (Top(), Top()):
                return True
            case (Rel(s1, a1), Rel(s2, a2)) if s1 == s2 and len(a1) == len(a2):
                for ta, tb in zip(a1, a2):
                    if isinstance(ta, Var) and ta.name == x and x not in bound:
                        candidates.add(tb)
                    elif ta != tb:
                        return False
                return True
            case (And(l1, r1), And(l2, r2)):
                return walk(l1, l2, bound) and walk(r1, r2, bound)
            case (Diamond(b1), Diamond(b2)):
                return walk(b1, b2, bound)
            case (Forall(v1, b1), Forall(v2, b2)) if v1 == v2:
                return walk(b1, b2, bound | {v1})
            case _:
                return False

    if not walk(body, target, frozenset()):
        return None
    if not candidates:
        return Var(x)  # x does not occur free; any term works, x itself is neutral
    if len(candidates) > 1:
        return None
    (t,) = candidates
    if not free_for(body, x, t):
        return None
    return t if substitute(body, x, t) == target else None


def derived_rule_instances(s: Sequent) -> list[Derivation]:
    """Primitive-rule expansions of the axiom-shaped derived-rule schemas
    matching `s`.  The premise-consuming schemas are available through
    ``expand_term_weakening`` and ``expand_fresh_generalization``."""
    out: list[Derivation] = []
    lhs, rhs, sig = s.lhs, s.rhs, s.signature
    if (
        isinstance(lhs, Diamond)
        and isinstance(lhs.body, Forall)
        and rhs == Forall(lhs.body.var, Diamond(lhs.body.body))
    ):
        out.append(expand_quantifier_shift(lhs.body.var, lhs.body.body, sig))
    if (
        isinstance(lhs, Forall)
        and isinstance(lhs.body, Forall)
        and lhs.var != lhs.body.var
        and rhs == Forall(lhs.body.var, Forall(lhs.var, lhs.body.body))
    ):
        out.append(expand_quantifier_swap(lhs.var, lhs.body.var, lhs.body.body, sig))
    if isinstance(lhs, Forall):
        t = _match_instance(lhs.body, lhs.var, rhs)
        if t is not None:
            out.append(expand_instantiation(lhs.var, lhs.body, t, sig))
        if (
            isinstance(rhs, Forall)
            and rhs.var not in free_vars(lhs.body)
            and free_for(lhs.body, lhs.var, Var(rhs.var))
            and rhs.body == substitute(lhs.body, lhs.var, Var(rhs.var))
        ):
            out.append(expand_renaming(lhs.var, lhs.body, rhs.var, sig))
    return out


# ---------------------------------------------------------------------------
# Backward proof search

DEFAULT_BUDGET = 12


class _Search:
    def __init__(self, sig: Signature):
        self.sig = sig
        self.success: dict = {}
        self.failed_at: dict = {}
        self.in_progress: set = set()

    def run(self, lhs: Formula, rhs: Formula, budget: int) -> Optional[Derivation]:
        for depth in range(1, budget + 1):
            found, _ = self.search(lhs, rhs, depth)
            if found is not None:
                return found
        return None

    def search(self, lhs: Formula, rhs: Formula, depth: int):
        """Returns (derivation or None, cycle_touched)."""
        if depth <= 0:
            return None, False
        if mdepth(lhs) < mdepth(rhs):
            return None, False  # necessary condition on modal depth
        key = (canonical(lhs), canonical(rhs))
        hit = self.success.get(key)
        if hit is not None:
            return self._adapt(hit, lhs, rhs), False
        if self.failed_at.get(key, 0) >= depth:
            return None, False
        if key in self.in_progress:
            return None, True

        self.in_progress.add(key)
        try:
            found, cycled = self._expand(lhs, rhs, depth)
        finally:
            self.in_progress.discard(key)
        if found is not None:
            self.success[key] = found
            return self._adapt(found, lhs, rhs), False
        if not cycled and depth > self.failed_at.get(key, 0):
            self.failed_at[key] = depth
        return None, cycled

    def _adapt(self, d: Derivation, lhs: Formula, rhs: Formula) -> Derivation:
        """Re-point a memoized certificate at an alpha-variant goal."""
        if d.conclusion.lhs == lhs and d.conclusion.rhs == rhs:
            return d
        out = d
        if d.conclusion.lhs != lhs:
            out = _cut(self.sig, alpha_bridge(lhs, d.conclusion.lhs, self.sig), out)
        if d.conclusion.rhs != rhs:
            out = _cut(self.sig, out, alpha_bridge(d.conclusion.rhs, rhs, self.sig))
        return out

    def _expand(self, lhs: Formula, rhs: Formula, depth: int):
        sig = self.sig
        # Axioms.
        if rhs == TOP:
            return _node(sig, lhs, rhs, I_LEFT), False
        if lhs == rhs:
            return _node(sig, lhs, rhs, I_REFL), False
        if isinstance(lhs, And) and lhs.left == rhs:
            return _node(sig, lhs, rhs, II_LEFT), False
        if isinstance(lhs, And) and lhs.right == rhs:
            return _node(sig, lhs, rhs, II_RIGHT), False
        if isinstance(lhs, Diamond) and isinstance(lhs.body, Diamond) and rhs == lhs.body:
            return _node(sig, lhs, rhs, VI), False

        cycled = False

        # Invertible right rules are applied eagerly.
        if isinstance(rhs, And):
            left, c1 = self.search(lhs, rhs.left, depth - 1)
            cycled |= c1
            if left is None:
                return None, cycled
            right, c2 = self.search(lhs, rhs.right, depth - 1)
            cycled |= c2
            if right is None:
                return None, cycled
            return _node(sig, lhs, rhs, III, (left, right)), cycled
        if isinstance(rhs, Forall):
            y, body = rhs.var, rhs.body
            if y not in free_vars(lhs):
                sub, c1 = self.search(lhs, body, depth - 1)
                cycled |= c1
                if sub is None:
                    return None, cycled
                return _node(sig, lhs, rhs, VII, (sub,), Witness(y)), cycled
            z = self._fresh_var(lhs, rhs)
            renamed = substitute(body, y, Var(z))
            sub, c1 = self.search(lhs, renamed, depth - 1)
            cycled |= c1
            if sub is None:
                return None, cycled
            gen = _node(sig, lhs, Forall(z, renamed), VII, (sub,), Witness(z))
            bridge = alpha_bridge(Forall(z, renamed), rhs, sig)
            return _cut(sig, gen, bridge), cycled

        # Branching left moves.
        if isinstance(lhs, And):
            for part, tag in ((lhs.left, II_LEFT), (lhs.right, II_RIGHT)):
                sub, c1 = self.search(part, rhs, depth - 1)
                cycled |= c1
                if sub is not None:
                    proj = _node(sig, lhs, part, tag)
                    return _cut(sig, proj, sub), cycled
        if isinstance(lhs, Diamond) and isinstance(rhs, Diamond):
            sub, c1 = self.search(lhs.body, rhs.body, depth - 1)
            cycled |= c1
            if sub is not None:
                return _node(sig, lhs, rhs, V, (sub,)), cycled
        if isinstance(lhs, Diamond) and isinstance(lhs.body, Diamond):
            sub, c1 = self.search(lhs.body, rhs, depth - 1)
            cycled |= c1
            if sub is not None:
                collapse = _node(sig, lhs, lhs.body, VI)
                return _cut(sig, collapse, sub), cycled
        if isinstance(lhs, Forall):
            for t in self._instantiation_terms(lhs, rhs):
                if not free_for(lhs.body, lhs.var, t):
                    continue
                inst = substitute(lhs.body, lhs.var, t)
                sub, c1 = self.search(inst, rhs, depth - 1)
                cycled |= c1
                if sub is not None:
                    return _node(sig, lhs, rhs, VIII, (sub,), Witness(lhs.var, t)), cycled
        fvs = sorted(free_vars(lhs) | free_vars(rhs))
        if fvs:
            x0 = fvs[0]
            c = self.sig.fresh_constants(1, constants_of(lhs) | constants_of(rhs))[0]
            glhs = substitute(lhs, x0, Const(c))
            grhs = substitute(rhs, x0, Const(c))
            sub, c1 = self.search(glhs, grhs, depth - 1)
            cycled |= c1
            if sub is not None:
                return _node(sig, lhs, rhs, X, (sub,), Witness(x0, Const(c))), cycled
        return None, cycled

    def _fresh_var(self, *formulas: Formula) -> str:
        used = set().union(*(free_vars(f) for f in formulas))
        k = 0
        while f"x{k}" in used:
            k += 1
        return f"x{k}"

    def _instantiation_terms(self, lhs: Forall, rhs: Formula) -> list[Term]:
        """Witness candidates: the bound variable itself, goal terms, and one
        fresh constant, in that order."""
        out: list[Term] = [Var(lhs.var)]
        for v in sorted(free_vars(lhs) | free_vars(rhs)):
            out.append(Var(v))
        consts = constants_of(lhs) | constants_of(rhs)
        order = {c: i for i, c in enumerate(self.sig.constants)}
        for c in sorted(consts, key=lambda c: (order.get(c, len(order)), c)):
            out.append(Const(c))
        out.append(Const(self.sig.fresh_constants(1, consts)[0]))
        seen = set()
        uniq = []
        for t in out:
            if t not in seen:
                uniq.append(t)
                seen.add(t)
        return uniq


def prove(s: Sequent, depth_budget: int = DEFAULT_BUDGET) -> Optional[Derivation]:
    """Backward search for a certificate of `s`.

    Goals violating the modal-depth inequality are refuted without search.
    ``None`` means the budget was exhausted; it is never a non-derivability
    verdict (only the semantic decider may assert that).
    """
    s.validate()
    found = _Search(s.signature).run(s.lhs, s.rhs, depth_budget)
    if found is None:
        return None
    if found.conclusion.lhs != s.lhs or found.conclusion.rhs != s.rhs:
        raise AssertionError("search returned a certificate for the wrong goal")
    return found


# ---------------------------------------------------------------------------
# Serialization


def _term_to_json(t: Term) -> dict:
    return {"kind": "var" if isinstance(t, Var) else "const", "name": t.name}


def _term_from_json(d: dict) -> Term:
    return Var(d["name"]) if d["kind"] == "var" else Const(d["name"])


def derivation_to_json(d: Derivation) -> dict:
    out: dict = {
        "rule": d.rule,
        "lhs": pretty(d.conclusion.lhs),
        "rhs": pretty(d.conclusion.rhs),
        "constants": list(d.conclusion.signature.constants),
        "relations": dict(d.conclusion.signature.relations),
        "premises": [derivation_to_json(p) for p in d.premises],
    }
    if d.witness is not None:
        w: dict = {}
        if d.witness.var is not None:
            w["var"] = d.witness.var
        if d.witness.term is not None:
            w["term"] = _term_to_json(d.witness.term)
        out["witness"] = w
    return out


def derivation_from_json(data: dict) -> Derivation:
    from .syntax import parse_formula

    sig = Signature(tuple(data["constants"]), data["relations"])
    witness = None
    if "witness" in data:
        wd = data["witness"]
        witness = Witness(
            wd.get("var"), _term_from_json(wd["term"]) if "term" in wd else None
        )
    return Derivation(
        Sequent(parse_formula(data["lhs"], sig), parse_formula(data["rhs"], sig), sig),
        data["rule"],
        tuple(derivation_from_json(p) for p in data["premises"]),
        witness,
    )


def format_tree(d: Derivation, indent: str = "") -> str:
    w = ""
    if d.witness is not None:
        parts = [p for p in (d.witness.var, str(d.witness.term) if d.witness.term else None) if p]
        w = f"  [{', '.join(parts)}]"
    lines = [f"{indent}{d.conclusion}   ({d.rule}){w}"]
    for p in d.premises:
        lines.append(format_tree(p, indent + "    "))
    return "\n".join(lines)
