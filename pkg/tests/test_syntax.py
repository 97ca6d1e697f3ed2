import random

import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from qrc1.corpus import GenConfig, random_formula
from qrc1.syntax import (
    And,
    CaptureError,
    Const,
    Diamond,
    Forall,
    FormulaError,
    ParseError,
    Rel,
    Signature,
    SignatureError,
    TOP,
    Var,
    canonical,
    cdepth,
    close_with_constants,
    closing_map,
    closure,
    constants_of,
    depths,
    free_for,
    free_vars,
    infer_signature,
    is_closed,
    mdepth,
    parse_formula,
    pretty,
    substitute,
    udepth,
)

from conftest import FORMULAS, SIG


# ---------------------------------------------------------------------------
# Parsing


def test_parse_top(sig):
    assert parse_formula("T", sig) == TOP


def test_parse_diamond_atom(sig):
    assert parse_formula("<> S(x0)", sig) == Diamond(Rel("S", (Var("x0"),)))


def test_parse_forall_conjunction(sig):
    expected = Forall("x0", And(Rel("S", (Var("x0"),)), TOP))
    assert parse_formula("A x0 . (S(x0) & T)", sig) == expected


def test_parse_unicode_aliases(sig):
    assert parse_formula("◇ S(c)", sig) == parse_formula("<> S(c)", sig)
    assert parse_formula("∀ x0 . (S(x0) ∧ ⊤)", sig) == parse_formula(
        "A x0 . (S(x0) & T)", sig
    )


def test_parse_syntax_error_reports_position(sig):
    with pytest.raises(ParseError) as err:
        parse_formula("S(x0", sig)
    assert err.value.position == 4


def test_parse_unknown_symbol(sig):
    with pytest.raises(ParseError):
        parse_formula("Q(x0)", sig)
    with pytest.raises(ParseError):
        parse_formula("S(e)", sig)  # undeclared constant


def test_parse_arity_mismatch(sig):
    with pytest.raises(ParseError):
        parse_formula("S(x0, x1)", sig)
    with pytest.raises(ParseError):
        parse_formula("P(x0)", sig)


def test_parse_nullary_relation():
    sig = Signature((), {"R": 0})
    assert parse_formula("R()", sig) == Rel("R", ())
    assert pretty(Rel("R", ())) == "R()"


def test_signature_rejects_bad_names():
    with pytest.raises(SignatureError):
        Signature(("x0",), {})  # constants may not look like variables
    with pytest.raises(SignatureError):
        Signature(("T",), {})
    with pytest.raises(SignatureError):
        Signature((), {"S": -1})
    with pytest.raises(SignatureError):
        Signature(("c", "c"), {})


def test_infer_signature():
    sig = infer_signature("A x . <> S(x, c)", "P(d)")
    assert sig.relations == {"S": 2, "P": 1}
    assert set(sig.constants) == {"c", "d"}


@given(FORMULAS)
@settings(max_examples=200)
def test_roundtrip_parse_print(phi):
    assert parse_formula(pretty(phi), SIG) == phi


def test_roundtrip_corpus_500():
    rng = random.Random(20240811)
    cfg = GenConfig(signature=SIG, max_size=9, max_mdepth=3, max_udepth=2)
    for _ in range(500):
        phi = random_formula(rng, cfg)
        text = pretty(phi)
        assert parse_formula(text, SIG) == phi
        spaced = text.replace(" ", "  ").replace("(", " (")
        assert pretty(parse_formula(spaced, SIG)) == text


# ---------------------------------------------------------------------------
# Substitution


def test_substitute_under_binder(sig):
    phi = parse_formula("A x . S(x, x1)", Signature(sig.constants, {"S": 2}))
    out = substitute(phi, "x1", Const("c"))
    assert pretty(out) == "A x . S(x, c)"


def test_substitute_atom(sig):
    assert substitute(parse_formula("S(x)", sig), "x", Const("c")) == parse_formula(
        "S(c)", sig
    )


def test_substitute_capture_error(sig):
    sig2 = Signature(sig.constants, {"S": 2})
    phi = parse_formula("A x1 . S(x, x1)", sig2)
    with pytest.raises(CaptureError):
        substitute(phi, "x", Var("x1"))


def test_free_for(sig):
    sig2 = Signature(sig.constants, {"S": 2})
    assert not free_for(parse_formula("A x1 . S(x, x1)", sig2), "x", Var("x1"))
    assert free_for(parse_formula("S(x)", sig), "x", Const("c"))
    assert free_for(parse_formula("A x . S(x)", sig), "x", Var("x1"))


@given(FORMULAS, st.sampled_from(["x0", "x1"]), st.sampled_from([Var("x9"), Const("c")]))
@settings(max_examples=200)
def test_substitution_free_variables(phi, x, t):
    if x not in free_vars(phi) or not free_for(phi, x, t):
        return
    out = free_vars(substitute(phi, x, t))
    expected = (free_vars(phi) - {x}) | (
        frozenset([t.name]) if isinstance(t, Var) else frozenset()
    )
    assert out == expected


@given(FORMULAS, st.sampled_from(["x0", "x1"]))
@settings(max_examples=200)
def test_substitution_preserves_modal_and_quantifier_depth(phi, x):
    out = substitute(phi, x, Const("c"))
    assert mdepth(out) == mdepth(phi)
    assert udepth(out) == udepth(phi)


@given(FORMULAS, st.sampled_from(["x0", "x1"]))
@settings(max_examples=200)
def test_substitution_constant_count_bounds(phi, x):
    out = substitute(phi, x, Const("c"))
    assert cdepth(phi) <= cdepth(out) <= cdepth(phi) + 1


# ---------------------------------------------------------------------------
# Depth measures


def test_depths_examples(sig):
    assert depths(parse_formula("<> <> T", sig)) == (2, 0, 0)
    sig2 = Signature(sig.constants, {"S": 2})
    assert depths(parse_formula("A x . <> S(x, c)", sig2)) == (1, 1, 1)
    assert depths(TOP) == (0, 0, 0)


# ---------------------------------------------------------------------------
# Closure


def test_closure_top(sig):
    assert closure([TOP], ("c",)) == frozenset([TOP])


def test_closure_forall(sig):
    got = closure([parse_formula("A x . S(x)", sig)], ("c", "d"))
    expected = {
        parse_formula("A x0 . S(x0)", sig),
        parse_formula("S(c)", sig),
        parse_formula("S(d)", sig),
        TOP,
    }
    assert got == frozenset(expected)


def test_closure_diamond(sig):
    got = closure([parse_formula("<> S(c)", sig)], ("c",))
    assert got == frozenset(
        {parse_formula("<> S(c)", sig), parse_formula("S(c)", sig), TOP}
    )


def test_closure_rejects_open_formulas(sig):
    with pytest.raises(FormulaError):
        closure([parse_formula("S(x)", sig)], ("c",))


@given(FORMULAS, st.sets(st.sampled_from(["c", "d"]), min_size=1))
@settings(max_examples=150, deadline=None)
def test_closure_closed_and_idempotent(phi, constants):
    naming = closing_map([phi], SIG)
    closed = close_with_constants(phi, naming)
    cl = closure([closed], tuple(sorted(constants)))
    assert all(is_closed(f) for f in cl)
    assert closure(cl, tuple(sorted(constants))) == cl


def test_closure_constant_count_bounds_sampled():
    rng = random.Random(7)
    cfg = GenConfig(signature=SIG)
    for _ in range(100):
        phi = random_formula(rng, cfg, closed=True)
        cl = closure([phi], ("c", "d", "c0"))
        lower = cdepth(phi)
        upper = cdepth(phi) + udepth(phi)
        got = max(cdepth(f) for f in cl)
        assert lower <= got <= upper


# ---------------------------------------------------------------------------
# Closing maps


def test_close_with_constants(sig):
    naming = {"x": "c_x"}
    assert pretty(close_with_constants(parse_formula("S(x)", sig), naming)) == "S(c_x)"
    assert close_with_constants(TOP, {}) == TOP
    sig2 = Signature(sig.constants, {"S": 2})
    phi = parse_formula("A x . S(x, x1)", sig2)
    out = close_with_constants(phi, {"x1": "c_x1"})
    assert pretty(out) == "A x . S(x, c_x1)"


def test_close_with_constants_missing_variable(sig):
    with pytest.raises(FormulaError):
        close_with_constants(parse_formula("S(x)", sig), {})


def test_closing_map_avoids_signature():
    sig = Signature(("c_x",), {"S": 1})
    phi = parse_formula("S(x)", sig)
    naming = closing_map([phi], sig)
    assert naming["x"] != "c_x"


# ---------------------------------------------------------------------------
# Canonical renaming


def test_canonical_collides_alpha_variants(sig):
    a = parse_formula("A x0 . S(x0)", sig)
    b = parse_formula("A x1 . S(x1)", sig)
    assert a != b
    assert canonical(a) == canonical(b)


def test_canonical_preserves_free_variables(sig):
    sig2 = Signature(sig.constants, {"S": 2})
    phi = parse_formula("A x1 . S(x1, x0)", sig2)
    out = canonical(phi)
    assert free_vars(out) == {"x0"}
    assert pretty(out) == "A x1 . S(x1, x0)"


def test_canonical_handles_shadowing(sig):
    phi = Forall("x0", And(Rel("S", (Var("x0"),)), Forall("x0", Rel("S", (Var("x0"),)))))
    out = canonical(phi)
    assert out == Forall(
        "x0", And(Rel("S", (Var("x0"),)), Forall("x1", Rel("S", (Var("x1"),))))
    )


@given(FORMULAS)
@settings(max_examples=200)
def test_canonical_idempotent(phi):
    assert canonical(canonical(phi)) == canonical(phi)
    assert free_vars(canonical(phi)) == free_vars(phi)
    assert mdepth(canonical(phi)) == mdepth(phi)
