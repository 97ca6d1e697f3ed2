"""Formulas of the strictly positive quantified modal language.

Formulas are built from the verum constant, relation symbols applied to
terms, binary conjunction, the diamond modality, and universal
quantification.  There is no negation, disjunction or implication.

All AST nodes are immutable and hashable.  Structural equality is strict
(alpha-variants compare unequal); code that needs set membership up to
renaming of bound variables goes through :func:`canonical` first.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Iterator, Mapping


class FormulaError(Exception):
    """Base for malformed-input errors raised by this module."""


class ParseError(FormulaError):
    def __init__(self, message: str, text: str, position: int):
        super().__init__(f"{message} at position {position}: {text!r}")
        self.position = position


class CaptureError(FormulaError):
    """Substitution would capture a free variable of the inserted term."""


class SignatureError(FormulaError):
    """Symbol clashes or undeclared symbols relative to a signature."""


VAR_RE = re.compile(r"x[0-9a-z_]*\Z")
CONST_RE = re.compile(r"c[0-9a-z_]*\Z")
IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
RESERVED = {"T", "A"}


def is_variable_name(name: str) -> bool:
    return VAR_RE.match(name) is not None


# ---------------------------------------------------------------------------
# Terms and formulas


@dataclass(frozen=True)
class Var:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Const:
    name: str

    def __str__(self) -> str:
        return self.name


Term = Var | Const


@dataclass(frozen=True)
class Top:
    def __str__(self) -> str:
        return "T"


@dataclass(frozen=True)
class Rel:
    symbol: str
    args: tuple[Term, ...]

    def __str__(self) -> str:
        return f"{self.symbol}({', '.join(str(a) for a in self.args)})"


@dataclass(frozen=True)
class And:
    left: "Formula"
    right: "Formula"

    def __str__(self) -> str:
        return f"({self.left} & {self.right})"


@dataclass(frozen=True)
class Diamond:
    body: "Formula"

    def __str__(self) -> str:
        return f"<> {self.body}"


@dataclass(frozen=True)
class Forall:
    var: str
    body: "Formula"

    def __str__(self) -> str:
        return f"A {self.var} . {self.body}"


Formula = Top | Rel | And | Diamond | Forall

TOP = Top()


def pretty(phi: Formula) -> str:
    """Canonical print form; ``parse_formula`` inverts it."""
    return str(phi)


# ---------------------------------------------------------------------------
# Signatures


@dataclass(frozen=True)
class Signature:
    """Finite stock of constants (ordered) and relation symbols with arities.

    The constant order is total and is the tie-breaker everywhere a
    deterministic "least constant" choice is needed.
    """

    constants: tuple[str, ...] = ()
    relations: Mapping[str, int] = None  # type: ignore[assignment]

    def __post_init__(self):
        object.__setattr__(self, "constants", tuple(self.constants))
        object.__setattr__(self, "relations", dict(self.relations or {}))
        self.validate()

    def validate(self) -> None:
        seen = set()
        for c in self.constants:
            if not c or c in RESERVED or is_variable_name(c):
                raise SignatureError(f"bad constant name {c!r}")
            if c in seen:
                raise SignatureError(f"duplicate constant {c!r}")
            seen.add(c)
        for s, n in self.relations.items():
            if not s or s in RESERVED or is_variable_name(s) or s in seen:
                raise SignatureError(f"bad relation symbol {s!r}")
            if not isinstance(n, int) or n < 0:
                raise SignatureError(f"bad arity {n!r} for {s!r}")

    def has_constant(self, name: str) -> bool:
        return name in self.constants

    def with_constants(self, extra: Iterable[str]) -> "Signature":
        new = [c for c in extra if c not in self.constants]
        return Signature(self.constants + tuple(new), self.relations)

    def fresh_constants(self, count: int, avoid: Iterable[str] = ()) -> tuple[str, ...]:
        """The `count` least names of the form c<k> absent from the signature."""
        taken = set(self.constants) | set(avoid)
        out = []
        k = 0
        while len(out) < count:
            name = f"c{k}"
            if name not in taken:
                out.append(name)
                taken.add(name)
            k += 1
        return tuple(out)


# ---------------------------------------------------------------------------
# Parsing

_TOKEN_ALIASES = {"⊤": "T", "◇": "<>", "∧": "&", "∀": "A"}


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in _TOKEN_ALIASES:
            alias = _TOKEN_ALIASES[ch]
            tokens.append(("punct" if alias in ("<>", "&") else "ident", alias, i))
            i += 1
            continue
        if text.startswith("<>", i):
            tokens.append(("punct", "<>", i))
            i += 2
            continue
        if ch in "()&,.":
            tokens.append(("punct", ch, i))
            i += 1
            continue
        m = IDENT_RE.match(text, i)
        if m:
            tokens.append(("ident", m.group(), i))
            i = m.end()
            continue
        raise ParseError("unexpected character", text, i)
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, sig: Signature):
        self.text = text
        self.sig = sig
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.pos]

    def take(self, value: str | None = None) -> tuple[str, str, int]:
        kind, val, at = self.tokens[self.pos]
        if value is not None and val != value:
            raise ParseError(f"expected {value!r}, found {val!r}", self.text, at)
        self.pos += 1
        return kind, val, at

    def parse(self) -> Formula:
        phi = self.formula()
        kind, val, at = self.peek()
        if kind != "eof":
            raise ParseError(f"trailing input {val!r}", self.text, at)
        return phi

    def formula(self) -> Formula:
        kind, val, at = self.peek()
        if val == "T":
            self.take()
            return TOP
        if val == "<>":
            self.take()
            return Diamond(self.formula())
        if val == "A":
            self.take()
            _, var, vat = self.take()
            if not is_variable_name(var):
                raise ParseError(f"bad bound variable {var!r}", self.text, vat)
            self.take(".")
            return Forall(var, self.formula())
        if val == "(":
            self.take()
            left = self.formula()
            self.take("&")
            right = self.formula()
            self.take(")")
            return And(left, right)
        if kind == "ident":
            return self.relation()
        raise ParseError(f"unexpected token {val!r}", self.text, at)

    def relation(self) -> Formula:
        _, sym, at = self.take()
        if sym not in self.sig.relations:
            raise ParseError(f"unknown relation symbol {sym!r}", self.text, at)
        self.take("(")
        args: list[Term] = []
        if self.peek()[1] != ")":
            args.append(self.term())
            while self.peek()[1] == ",":
                self.take(",")
                args.append(self.term())
        self.take(")")
        arity = self.sig.relations[sym]
        if len(args) != arity:
            raise ParseError(
                f"{sym!r} expects {arity} argument(s), got {len(args)}", self.text, at
            )
        return Rel(sym, tuple(args))

    def term(self) -> Term:
        kind, val, at = self.take()
        if kind != "ident" or val in RESERVED:
            raise ParseError(f"expected a term, found {val!r}", self.text, at)
        if is_variable_name(val):
            return Var(val)
        if self.sig.has_constant(val):
            return Const(val)
        raise ParseError(f"unknown constant {val!r}", self.text, at)


def parse_formula(text: str, sig: Signature) -> Formula:
    """Parse `text`; identifiers are resolved against `sig`."""
    return _Parser(text, sig).parse()


def infer_signature(*texts: str) -> Signature:
    """Lenient pre-pass: relations are idents applied to arguments, constants
    are non-variable idents in argument position.  Convenience for the CLI."""
    relations: dict[str, int] = {}
    constants: list[str] = []
    for text in texts:
        tokens = _tokenize(text)
        i = 0
        while tokens[i][0] != "eof":
            kind, val, at = tokens[i]
            if kind == "ident" and val not in RESERVED and tokens[i + 1][1] == "(":
                j = i + 2
                args = 0
                depth = 1
                while depth and tokens[j][0] != "eof":
                    tj = tokens[j][1]
                    if tj == "(":
                        depth += 1
                    elif tj == ")":
                        depth -= 1
                    elif depth == 1 and tokens[j][0] == "ident":
                        args += 1
                        if not is_variable_name(tj) and tj not in constants:
                            constants.append(tj)
                    j += 1
                if val in relations and relations[val] != args:
                    raise SignatureError(f"inconsistent arity for {val!r}")
                relations[val] = args
            i += 1
    return Signature(tuple(sorted(constants)), relations)


# ---------------------------------------------------------------------------
# Free variables, substitution, renaming


@lru_cache(maxsize=None)
def free_vars(phi: Formula) -> frozenset[str]:
    match phi:
        case Top():
            return frozenset()
        case Rel(_, args):
            return frozenset(t.name for t in args if isinstance(t, Var))
        case And(left, right):
            return free_vars(left) | free_vars(right)
        case Diamond(body):
            return free_vars(body)
        case Forall(var, body):
            return free_vars(body) - {var}
    raise TypeError(phi)


@lru_cache(maxsize=None)
def constants_of(phi: Formula) -> frozenset[str]:
    match phi:
        case Top():
            return frozenset()
        case Rel(_, args):
            return frozenset(t.name for t in args if isinstance(t, Const))
        case And(left, right):
            return constants_of(left) | constants_of(right)
        case Diamond(body) | Forall(_, body):
            return constants_of(body)
    raise TypeError(phi)


@lru_cache(maxsize=None)
def relations_of(phi: Formula) -> frozenset[str]:
    match phi:
        case Top():
            return frozenset()
        case Rel(sym, _):
            return frozenset([sym])
        case And(left, right):
            return relations_of(left) | relations_of(right)
        case Diamond(body) | Forall(_, body):
            return relations_of(body)
    raise TypeError(phi)


def is_closed(phi: Formula) -> bool:
    return not free_vars(phi)


def free_for(phi: Formula, x: str, t: Term) -> bool:
    """True iff substituting `t` for `x` in `phi` captures no variable of `t`."""
    if isinstance(t, Const):
        return True

    def ok(psi: Formula, blocked: frozenset[str]) -> bool:
        match psi:
            case Top():
                return True
            case Rel(_, args):
                if any(isinstance(a, Var) and a.name == x for a in args):
                    return t.name not in blocked
                return True
            case And(left, right):
                return ok(left, blocked) and ok(right, blocked)
            case Diamond(body):
                return ok(body, blocked)
            case Forall(var, body):
                if var == x:
                    return True
                return ok(body, blocked | {var})
        raise TypeError(psi)

    return ok(phi, frozenset())


def substitute(phi: Formula, x: str, t: Term) -> Formula:
    """phi with every free occurrence of `x` replaced by `t`."""
    if not free_for(phi, x, t):
        raise CaptureError(f"{t} is not free for {x} in {phi}")

    def sub(psi: Formula) -> Formula:
        match psi:
            case Top():
                return psi
            case Rel(sym, args):
                new = tuple(t if isinstance(a, Var) and a.name == x else a for a in args)
                return Rel(sym, new) if new != args else psi
            case And(left, right):
                return And(sub(left), sub(right))
            case Diamond(body):
                return Diamond(sub(body))
            case Forall(var, body):
                return psi if var == x else Forall(var, sub(body))
        raise TypeError(psi)

    return sub(phi)


def close_with_constants(phi: Formula, naming: Mapping[str, str]) -> Formula:
    """Replace every free variable by its constant under `naming`."""
    missing = free_vars(phi) - set(naming)
    if missing:
        raise FormulaError(f"naming misses free variable(s) {sorted(missing)}")
    out = phi
    for x in sorted(free_vars(phi)):
        out = substitute(out, x, Const(naming[x]))
    return out


def closing_map(formulas: Iterable[Formula], sig: Signature) -> dict[str, str]:
    """Fresh constant c_<x> (disambiguated against `sig`) per free variable."""
    fvs = sorted(set().union(*(free_vars(f) for f in formulas)) or set())
    taken = set(sig.constants)
    naming = {}
    for x in fvs:
        cand = f"c_{x}"
        while cand in taken:
            cand += "_"
        naming[x] = cand
        taken.add(cand)
    return naming


@lru_cache(maxsize=None)
def canonical(phi: Formula) -> Formula:
    """Alpha-canonical form: bound variables renumbered in traversal order,
    skipping names free in `phi`.  Alpha-variants map to the same formula."""
    avoid = free_vars(phi)
    counter = iter(range(10 ** 9))

    def fresh() -> str:
        for k in counter:
            name = f"x{k}"
            if name not in avoid:
                return name
        raise AssertionError

    def walk(psi: Formula, env: dict[str, str]) -> Formula:
        match psi:
            case Top():
                return psi
            case Rel(sym, args):
                new = tuple(
                    Var(env[a.name]) if isinstance(a, Var) and a.name in env else a
                    for a in args
                )
                return Rel(sym, new)
            case And(left, right):
                return And(walk(left, env), walk(right, env))
            case Diamond(body):
                return Diamond(walk(body, env))
            case Forall(var, body):
                name = fresh()
                return Forall(name, walk(body, {**env, var: name}))
        raise TypeError(psi)

    return walk(phi, {})


def alpha_equal(phi: Formula, psi: Formula) -> bool:
    return canonical(phi) == canonical(psi)


# ---------------------------------------------------------------------------
# Depth measures


@lru_cache(maxsize=None)
def mdepth(phi: Formula) -> int:
    match phi:
        case Top() | Rel():
            return 0
        case And(left, right):
            return max(mdepth(left), mdepth(right))
        case Forall(_, body):
            return mdepth(body)
        case Diamond(body):
            return mdepth(body) + 1
    raise TypeError(phi)


@lru_cache(maxsize=None)
def udepth(phi: Formula) -> int:
    match phi:
        case Top() | Rel():
            return 0
        case And(left, right):
            return max(udepth(left), udepth(right))
        case Forall(_, body):
            return udepth(body) + 1
        case Diamond(body):
            return udepth(body)
    raise TypeError(phi)


def cdepth(phi: Formula) -> int:
    """Number of distinct constants occurring in the formula."""
    return len(constants_of(phi))


def depths(phi: Formula) -> tuple[int, int, int]:
    return mdepth(phi), udepth(phi), cdepth(phi)


def set_mdepth(gamma: Iterable[Formula]) -> int:
    return max((mdepth(f) for f in gamma), default=0)


def set_udepth(gamma: Iterable[Formula]) -> int:
    return max((udepth(f) for f in gamma), default=0)


def set_cdepth(gamma: Iterable[Formula]) -> int:
    """Max over members, not the size of the union."""
    return max((cdepth(f) for f in gamma), default=0)


# ---------------------------------------------------------------------------
# Closure under a constant set


def closure(gamma: Iterable[Formula], constants: Iterable[str]) -> frozenset[Formula]:
    """Least superset closed under subformulas, with universal formulas
    instantiated by every constant in `constants`.  Members are kept in
    alpha-canonical form so set membership is stable."""
    cs = tuple(dict.fromkeys(constants))
    out: set[Formula] = set()

    def add(phi: Formula) -> None:
        phi = canonical(phi)
        if phi in out:
            return
        out.add(phi)
        match phi:
            case Top():
                pass
            case Rel():
                add(TOP)
            case And(left, right):
                add(left)
                add(right)
            case Diamond(body):
                add(body)
            case Forall(var, body):
                for c in cs:
                    add(substitute(body, var, Const(c)))
        return

    for phi in gamma:
        if not is_closed(phi):
            raise FormulaError(f"closure requires closed formulas, got {phi}")
        add(phi)
    return frozenset(out)


def sort_formulas(formulas: Iterable[Formula]) -> tuple[Formula, ...]:
    """Canonical print order; the deterministic order for formula sets."""
    return tuple(sorted(formulas, key=pretty))


def big_and(formulas: Iterable[Formula]) -> Formula:
    """Right-nested conjunction of the formulas in canonical print order."""
    fs = sort_formulas(formulas)
    if not fs:
        return TOP
    out = fs[-1]
    for f in reversed(fs[:-1]):
        out = And(f, out)
    return out


def validate_formula(phi: Formula, sig: Signature) -> None:
    """Well-formedness of `phi` in `sig`: declared symbols, matching arities,
    disjoint variable/constant namespaces."""
    match phi:
        case Top():
            return
        case Rel(sym, args):
            if sym not in sig.relations:
                raise SignatureError(f"undeclared relation {sym!r}")
            if len(args) != sig.relations[sym]:
                raise SignatureError(
                    f"{sym!r} expects {sig.relations[sym]} args, got {len(args)}"
                )
            for t in args:
                if isinstance(t, Var):
                    if not is_variable_name(t.name):
                        raise SignatureError(f"bad variable name {t.name!r}")
                elif not sig.has_constant(t.name):
                    raise SignatureError(f"undeclared constant {t.name!r}")
            return
        case And(left, right):
            validate_formula(left, sig)
            validate_formula(right, sig)
            return
        case Diamond(body):
            validate_formula(body, sig)
            return
        case Forall(var, body):
            if not is_variable_name(var):
                raise SignatureError(f"bad bound variable {var!r}")
            validate_formula(body, sig)
            return
    raise TypeError(phi)


def subformula_instances(phi: Formula) -> Iterator[Formula]:
    """Plain subformula traversal (universal bodies not instantiated)."""
    yield phi
    match phi:
        case And(left, right):
            yield from subformula_instances(left)
            yield from subformula_instances(right)
        case Diamond(body) | Forall(_, body):
            yield from subformula_instances(body)
