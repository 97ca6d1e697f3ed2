"""Arithmetical readings of the modal language.

Two emitters:

* ``star_realization`` interprets formulas as parametrized axiomatizations
  of theories extending I-Sigma-1 (conjunction becomes union of axiom sets,
  hence disjunction; universal quantification becomes existential over the
  theory parameter's companion variable).  Emission only: its semantics is
  genuine provability, which is out of scope here.

* ``solovay_star`` interprets formulas as plain arithmetic formulas over a
  finite model embedded through world-indicator sentences ``Lam(i)``.  The
  indicators are opaque atoms; what the interpretation needs from them is
  realized computationally by :class:`ShadowStructure` and
  ``shadow_eval``, a finite evaluator in which quantifiers range over the
  residues ``0..m-1`` and the provability modality walks the accessibility
  relation.

Goedel quotes stay symbolic: a quote embeds the quoted syntax tree and
prints as ``godel<...>``; no numeric coding of formulas is attempted.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Mapping, Union

from . import syntax as qrc
from .semantics import KripkeModel, constant_domain_model

# ---------------------------------------------------------------------------
# Terms


@dataclass(frozen=True)
class AVar:
    name: str


@dataclass(frozen=True)
class Numeral:
    value: int


@dataclass(frozen=True)
class Mod:
    inner: "ArithTerm"
    modulus: int


@dataclass(frozen=True)
class Coded:
    """Goedel code of a domain element: a numeral below the domain size,
    remembering the element it codes for printing."""

    code: int
    label: str


ArithTerm = Union[AVar, Numeral, Mod, Coded]


# ---------------------------------------------------------------------------
# Formulas


@dataclass(frozen=True)
class Truth:
    pass


@dataclass(frozen=True)
class Falsity:
    pass


@dataclass(frozen=True)
class Eq:
    lhs: ArithTerm
    rhs: ArithTerm


@dataclass(frozen=True)
class LambdaAtom:
    world: int


@dataclass(frozen=True)
class TauAxiom:
    """The axiomatization formula of the base theory applied to the theory
    parameter: tag "isigma1" for the fixed base, "tau" for a generic one."""

    tag: str


@dataclass(frozen=True)
class Quoted:
    formula: "ArithFormula"


@dataclass(frozen=True)
class GodelEq:
    """The theory parameter equals the quote of an embedded formula."""

    var: str
    quoted: Quoted


@dataclass(frozen=True)
class SigmaAtom:
    """Uninterpreted relation realization sigma(u, y..., z...)."""

    symbol: str
    args: tuple[ArithTerm, ...]


@dataclass(frozen=True)
class Schematic:
    """Formula placeholder (used by the schematic derivability statement)."""

    name: str


@dataclass(frozen=True)
class Not:
    body: "ArithFormula"


@dataclass(frozen=True)
class And:
    args: tuple["ArithFormula", ...]


@dataclass(frozen=True)
class Or:
    args: tuple["ArithFormula", ...]


@dataclass(frozen=True)
class Implies:
    lhs: "ArithFormula"
    rhs: "ArithFormula"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "ArithFormula"


@dataclass(frozen=True)
class Exists:
    var: str
    body: "ArithFormula"


BoxIndex = Union[str, "ArithFormula"]  # "tau" or an axiomatization formula


@dataclass(frozen=True)
class Box:
    index: BoxIndex
    body: "ArithFormula"


@dataclass(frozen=True)
class Diamond:
    index: BoxIndex
    body: "ArithFormula"


ArithFormula = Union[
    Truth,
    Falsity,
    Eq,
    LambdaAtom,
    TauAxiom,
    GodelEq,
    SigmaAtom,
    Schematic,
    Not,
    And,
    Or,
    Implies,
    Forall,
    Exists,
    Box,
    Diamond,
]

TRUE = Truth()
FALSE = Falsity()


def big_or(args: Iterable[ArithFormula]) -> ArithFormula:
    items = tuple(args)
    if not items:
        return FALSE
    if len(items) == 1:
        return items[0]
    return Or(items)


def big_and(args: Iterable[ArithFormula]) -> ArithFormula:
    items = tuple(args)
    if not items:
        return TRUE
    if len(items) == 1:
        return items[0]
    return And(items)


# ---------------------------------------------------------------------------
# Variable bookkeeping: modal x-variables pair with arithmetic y-variables,
# modal constants with z-variables.


def y_var(x: str) -> str:
    return "y" + x[1:] if x.startswith("x") else "y_" + x


def z_var(c: str) -> str:
    return "z" + c[1:] if c.startswith("c") else "z_" + c


# ---------------------------------------------------------------------------
# The theory-axiomatization realization


ISIGMA1 = TauAxiom("isigma1")


def star_realization(phi: qrc.Formula) -> ArithFormula:
    """Realize `phi` as an axiomatization formula in the theory parameter u.

    Verum is the base axiomatization; a relation atom is an uninterpreted
    sigma-atom weakened by the base; conjunction unions axiom sets (a
    disjunction); a diamond pins u to the quoted consistency statement of
    the body's realization; universal quantification goes existential over
    the companion y-variable.
    """
    match phi:
        case qrc.Top():
            return ISIGMA1
        case qrc.Rel(sym, args):
            terms: list[ArithTerm] = [AVar("u")]
            for t in args:
                if isinstance(t, qrc.Var):
                    terms.append(AVar(y_var(t.name)))
                else:
                    terms.append(AVar(z_var(t.name)))
            return Or((SigmaAtom(sym, tuple(terms)), ISIGMA1))
        case qrc.And(left, right):
            return Or((star_realization(left), star_realization(right)))
        case qrc.Diamond(body):
            inner = star_realization(body)
            return Or((ISIGMA1, GodelEq("u", Quoted(Diamond(inner, TRUE)))))
        case qrc.Forall(x, body):
            return Exists(y_var(x), star_realization(body))
    raise TypeError(phi)


def qrc1_T_statement(phi: qrc.Formula, psi: qrc.Formula) -> ArithFormula:
    """The schematic derivability statement: every theorem of the theory
    axiomatized by the right realization is one of the left realization,
    universally in the schematic formula and all parameters."""
    phi_star = star_realization(phi)
    psi_star = star_realization(psi)
    theta = Schematic("theta")
    body: ArithFormula = Implies(Box(psi_star, theta), Box(phi_star, theta))
    zs = sorted(
        {z_var(c) for c in qrc.constants_of(phi) | qrc.constants_of(psi)}
    )
    ys = sorted({y_var(x) for x in qrc.free_vars(phi) | qrc.free_vars(psi)})
    for z in reversed(zs):
        body = Forall(z, body)
    for y in reversed(ys):
        body = Forall(y, body)
    return Forall("theta", body)


# ---------------------------------------------------------------------------
# Shadow structures


@dataclass
class ShadowStructure:
    """A finite countermodel re-rooted for the indicator-sentence reading:
    an extra world 0 sits below every original world and copies the root's
    interpretations; domain elements are coded as residues below m."""

    model: KripkeModel
    m: int
    coding: dict[Any, int]
    worlds: tuple[int, ...]
    relabel: dict[Any, int]

    @classmethod
    def from_countermodel(cls, model: KripkeModel, root: Any) -> "ShadowStructure":
        if not model.constant_domain():
            raise ValueError("shadow structures need a constant-domain model")
        for f in model.eta.values():
            if any(k != v for k, v in f.items()):
                raise ValueError("shadow structures need identity domain maps")
        domain = model.domains[root]
        others = sorted((w for w in model.worlds if w != root), key=str)
        relabel = {root: 1, **{w: i + 2 for i, w in enumerate(others)}}
        worlds = tuple(range(len(model.worlds) + 1))
        edges = {(relabel[w], relabel[v]) for (w, v) in model.R}
        edges |= {(0, j) for j in worlds if j >= 1}
        J = {relabel[w]: {s: set(ts) for s, ts in model.J[w].items()} for w in model.worlds}
        J[0] = {s: set(ts) for s, ts in model.J[root].items()}
        I = model.I[root]
        extended = constant_domain_model(
            worlds, edges, domain, J, model.signature, I=I
        )
        coding = {d: i for i, d in enumerate(domain)}
        return cls(extended, len(domain), coding, worlds, relabel)

    def code(self, element: Any) -> Coded:
        return Coded(self.coding[element], str(element))

    def interpretation(self, world: int, constant: str) -> Any:
        return self.model.I[world][constant]

    def tuples(self, world: int, symbol: str) -> list[tuple]:
        return sorted(self.model.J[world].get(symbol, frozenset()))


# ---------------------------------------------------------------------------
# The finite-model interpretation


def _atom_family(
    atom: qrc.Rel, shadow: ShadowStructure, world: int, constant_term
) -> ArithFormula:
    """Disjunction over the atom's tuples at `world` of coordinatewise
    coding equations; `constant_term` renders the constant coordinates."""
    disjuncts = []
    for tup in shadow.tuples(world, atom.symbol):
        conjuncts = []
        for element, t in zip(tup, atom.args):
            lhs = shadow.code(element)
            if isinstance(t, qrc.Var):
                rhs: ArithTerm = Mod(AVar(y_var(t.name)), shadow.m)
            else:
                rhs = constant_term(t.name, world)
            conjuncts.append(Eq(lhs, rhs))
        disjuncts.append(big_and(conjuncts))
    return big_or(disjuncts)


def phi_family(atom: qrc.Rel, shadow: ShadowStructure) -> tuple[ArithFormula, ...]:
    """Per-world atom readings with constants rendered as coded elements."""

    def constant_term(name: str, world: int) -> ArithTerm:
        return shadow.code(shadow.interpretation(world, name))

    return tuple(
        _atom_family(atom, shadow, i, constant_term) for i in shadow.worlds
    )


def psi_family(atom: qrc.Rel, shadow: ShadowStructure) -> tuple[ArithFormula, ...]:
    """Variant with constants rendered as residues of their z-variables, so
    substituting the coded root interpretations recovers ``phi_family``
    after numeral reduction."""

    def constant_term(name: str, world: int) -> ArithTerm:
        return Mod(AVar(z_var(name)), shadow.m)

    return tuple(
        _atom_family(atom, shadow, i, constant_term) for i in shadow.worlds
    )


def solovay_star(phi: qrc.Formula, shadow: ShadowStructure | None) -> ArithFormula:
    """Interpret `phi` over the shadow structure: atoms become indicator-
    guarded tuple readings, diamonds the provability diamond, universals
    quantify the companion y-variable.  The structure may be omitted only
    for atom-free formulas."""
    match phi:
        case qrc.Top():
            return TRUE
        case qrc.Rel():
            if shadow is None:
                raise ValueError("relation atoms need a shadow structure")
            family = phi_family(phi, shadow)
            return big_or(
                And((LambdaAtom(i), family[i])) for i in shadow.worlds
            )
        case qrc.And(left, right):
            return And((solovay_star(left, shadow), solovay_star(right, shadow)))
        case qrc.Diamond(body):
            return Diamond("tau", solovay_star(body, shadow))
        case qrc.Forall(x, body):
            return Forall(y_var(x), solovay_star(body, shadow))
    raise TypeError(phi)


# ---------------------------------------------------------------------------
# Formula utilities


def free_arith_vars(a: ArithFormula) -> frozenset[str]:
    """Free numeric variables; quoted formulas are mentioned, not used, so
    quotes contribute nothing."""
    match a:
        case Truth() | Falsity() | LambdaAtom() | TauAxiom() | Schematic():
            return frozenset()
        case Eq(lhs, rhs):
            return _term_vars(lhs) | _term_vars(rhs)
        case GodelEq(var, _):
            return frozenset([var])
        case SigmaAtom(_, args):
            out: frozenset[str] = frozenset()
            for t in args:
                out |= _term_vars(t)
            return out
        case Not(body):
            return free_arith_vars(body)
        case And(args) | Or(args):
            out = frozenset()
            for x in args:
                out |= free_arith_vars(x)
            return out
        case Implies(lhs, rhs):
            return free_arith_vars(lhs) | free_arith_vars(rhs)
        case Forall(var, body) | Exists(var, body):
            return free_arith_vars(body) - {var}
        case Box(index, body) | Diamond(index, body):
            out = free_arith_vars(body)
            if not isinstance(index, str):
                out |= free_arith_vars(index)
            return out
    raise TypeError(a)


def _term_vars(t: ArithTerm) -> frozenset[str]:
    match t:
        case AVar(name):
            return frozenset([name])
        case Numeral() | Coded():
            return frozenset()
        case Mod(inner, _):
            return _term_vars(inner)
    raise TypeError(t)


def subst_arith(a: ArithFormula, var: str, term: ArithTerm) -> ArithFormula:
    """Replace the free numeric variable `var` by `term` (which must be
    closed); quotes are opaque."""

    def sub_t(t: ArithTerm) -> ArithTerm:
        match t:
            case AVar(name):
                return term if name == var else t
            case Numeral() | Coded():
                return t
            case Mod(inner, m):
                return Mod(sub_t(inner), m)
        raise TypeError(t)

    def sub(f: ArithFormula) -> ArithFormula:
        match f:
            case Truth() | Falsity() | LambdaAtom() | TauAxiom() | Schematic() | GodelEq():
                return f
            case Eq(lhs, rhs):
                return Eq(sub_t(lhs), sub_t(rhs))
            case SigmaAtom(sym, args):
                return SigmaAtom(sym, tuple(sub_t(t) for t in args))
            case Not(body):
                return Not(sub(body))
            case And(args):
                return And(tuple(sub(x) for x in args))
            case Or(args):
                return Or(tuple(sub(x) for x in args))
            case Implies(lhs, rhs):
                return Implies(sub(lhs), sub(rhs))
            case Forall(v, body):
                return f if v == var else Forall(v, sub(body))
            case Exists(v, body):
                return f if v == var else Exists(v, sub(body))
            case Box(index, body):
                return Box(index if isinstance(index, str) else sub(index), sub(body))
            case Diamond(index, body):
                return Diamond(
                    index if isinstance(index, str) else sub(index), sub(body)
                )
        raise TypeError(f)

    return sub(a)


def reduce_numerals(a: ArithFormula) -> ArithFormula:
    """Collapse residue operations on literal values: a coded element is
    already below the modulus, a numeral reduces to its residue."""

    def red_t(t: ArithTerm) -> ArithTerm:
        match t:
            case Mod(inner, m):
                inner = red_t(inner)
                if isinstance(inner, Coded) and inner.code < m:
                    return inner
                if isinstance(inner, Numeral):
                    return Numeral(inner.value % m)
                return Mod(inner, m)
            case _:
                return t

    def red(f: ArithFormula) -> ArithFormula:
        match f:
            case Eq(lhs, rhs):
                return Eq(red_t(lhs), red_t(rhs))
            case SigmaAtom(sym, args):
                return SigmaAtom(sym, tuple(red_t(t) for t in args))
            case Not(body):
                return Not(red(body))
            case And(args):
                return And(tuple(red(x) for x in args))
            case Or(args):
                return Or(tuple(red(x) for x in args))
            case Implies(lhs, rhs):
                return Implies(red(lhs), red(rhs))
            case Forall(v, body):
                return Forall(v, red(body))
            case Exists(v, body):
                return Exists(v, red(body))
            case Box(index, body):
                return Box(index if isinstance(index, str) else red(index), red(body))
            case Diamond(index, body):
                return Diamond(
                    index if isinstance(index, str) else red(index), red(body)
                )
            case _:
                return f

    return red(a)


# ---------------------------------------------------------------------------
# Shadow evaluation


class ShadowFragmentError(Exception):
    """The formula lies outside the finitely evaluable fragment."""


def shadow_eval(
    shadow: ShadowStructure,
    world: int,
    env: Mapping[str, int],
    a: ArithFormula,
) -> bool:
    """Evaluate a finite-model interpretation formula at a world.

    Indicator atoms are true exactly at their own world; the provability
    modalities walk the accessibility relation; quantifiers range over the
    residues 0..m-1 (larger environment values are harmless since atoms
    reduce them).  Axiomatization-specific nodes are rejected.
    """
    succ = shadow.model.successors

    def ev_t(t: ArithTerm, env: Mapping[str, int]) -> int:
        match t:
            case AVar(name):
                if name not in env:
                    raise ShadowFragmentError(f"unbound variable {name!r}")
                return env[name]
            case Numeral(v):
                return v
            case Coded(code, _):
                return code
            case Mod(inner, m):
                return ev_t(inner, env) % m
        raise TypeError(t)

    def ev(f: ArithFormula, i: int, env: Mapping[str, int]) -> bool:
        match f:
            case Truth():
                return True
            case Falsity():
                return False
            case Eq(lhs, rhs):
                return ev_t(lhs, env) == ev_t(rhs, env)
            case LambdaAtom(j):
                return j == i
            case Not(body):
                return not ev(body, i, env)
            case And(args):
                return all(ev(x, i, env) for x in args)
            case Or(args):
                return any(ev(x, i, env) for x in args)
            case Implies(lhs, rhs):
                return (not ev(lhs, i, env)) or ev(rhs, i, env)
            case Forall(v, body):
                return all(ev(body, i, {**env, v: k}) for k in range(shadow.m))
            case Exists(v, body):
                return any(ev(body, i, {**env, v: k}) for k in range(shadow.m))
            case Diamond("tau", body):
                return any(ev(body, j, env) for j in succ[i])
            case Box("tau", body):
                return all(ev(body, j, env) for j in succ[i])
            case TauAxiom() | GodelEq() | SigmaAtom() | Schematic() | Box() | Diamond():
                raise ShadowFragmentError(f"not finitely evaluable: {type(f).__name__}")
        raise TypeError(f)

    return ev(a, world, dict(env))


def assignment_env(shadow: ShadowStructure, g: Mapping[str, Any]) -> dict[str, int]:
    """Code a modal assignment into a numeric environment."""
    return {y_var(x): shadow.coding[e] for x, e in g.items()}


def shadow_truth_audit(
    shadow: ShadowStructure,
    formulas: Iterable[qrc.Formula],
    lhs: qrc.Formula | None = None,
    rhs: qrc.Formula | None = None,
) -> dict:
    """Compare the finite evaluation of each formula's interpretation with
    Kripke satisfaction at every world above the artificial root, over every
    assignment to the formula's free variables; optionally check that some
    successor of world 0 satisfies the lhs interpretation and falsifies the
    rhs one.  Returns a report dict with any disagreements listed."""
    from itertools import product
    from .semantics import satisfies

    model = shadow.model
    domain = model.domains[0]
    mismatches = []
    checked = 0
    for phi in formulas:
        translated = solovay_star(phi, shadow)
        fvs = sorted(qrc.free_vars(phi))
        for values in product(domain, repeat=len(fvs)):
            g = dict(zip(fvs, values))
            env = assignment_env(shadow, g)
            for i in shadow.worlds:
                if i == 0:
                    continue
                checked += 1
                if shadow_eval(shadow, i, env, translated) != satisfies(
                    model, i, g, phi
                ):
                    mismatches.append((i, g, qrc.pretty(phi)))
    report = {"checked": checked, "mismatches": mismatches, "pass": not mismatches}
    if lhs is not None and rhs is not None:
        lhs_t = solovay_star(lhs, shadow)
        rhs_t = solovay_star(rhs, shadow)
        witnesses = [
            j
            for j in model.successors[0]
            if shadow_eval(shadow, j, {}, lhs_t)
            and not shadow_eval(shadow, j, {}, rhs_t)
        ]
        report["embedding_witnesses"] = witnesses
        report["embedding"] = bool(witnesses)
        report["pass"] = report["pass"] and report["embedding"]
    return report


# ---------------------------------------------------------------------------
# Printing


def ascii_term(t: ArithTerm) -> str:
    match t:
        case AVar(name):
            return name
        case Numeral(v):
            return str(v)
        case Coded(_, label):
            return f"godel<{label}>"
        case Mod(inner, m):
            return f"({ascii_term(inner)} mod {m})"
    raise TypeError(t)


def ascii_arith(a: ArithFormula) -> str:
    match a:
        case Truth():
            return "true"
        case Falsity():
            return "false"
        case Eq(lhs, rhs):
            return f"{ascii_term(lhs)} = {ascii_term(rhs)}"
        case LambdaAtom(i):
            return f"Lam({i})"
        case TauAxiom(tag):
            return "tau_isigma1(u)" if tag == "isigma1" else "tau(u)"
        case GodelEq(var, quoted):
            return f"{var} = godel<{ascii_arith(quoted.formula)}>"
        case SigmaAtom(sym, args):
            return f"sigma_{sym}({', '.join(ascii_term(t) for t in args)})"
        case Schematic(name):
            return name
        case Not(body):
            return f"~({ascii_arith(body)})"
        case And(args):
            return "(" + " & ".join(ascii_arith(x) for x in args) + ")"
        case Or(args):
            return "(" + " | ".join(ascii_arith(x) for x in args) + ")"
        case Implies(lhs, rhs):
            return f"({ascii_arith(lhs)} -> {ascii_arith(rhs)})"
        case Forall(var, body):
            return f"all {var}. {ascii_arith(body)}"
        case Exists(var, body):
            return f"ex {var}. {ascii_arith(body)}"
        case Box(index, body):
            tag = index if isinstance(index, str) else ascii_arith(index)
            return f"Box[{tag}] {ascii_arith(body)}"
        case Diamond(index, body):
            tag = index if isinstance(index, str) else ascii_arith(index)
            return f"Dia[{tag}] {ascii_arith(body)}"
    raise TypeError(a)
