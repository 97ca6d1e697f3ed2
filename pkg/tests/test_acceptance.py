"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines; the suite is deterministic (fixed seeds throughout).
"""

import itertools
import random
import time

from qrc1.arith import ShadowStructure, free_arith_vars, shadow_eval, shadow_truth_audit, solovay_star, y_var
from qrc1.calculus import Sequent, check_derivation, prove
from qrc1.corpus import GenConfig, random_config, random_formula, random_root_pair, random_sequent
from qrc1.countermodel import (
    Pair,
    build_model,
    countermodel_for,
    truth_lemma_check,
)
from qrc1.semantics import (
    Derivable,
    Refuted,
    decide,
    enumerate_models,
    satisfies,
)
from qrc1.syntax import (
    Signature,
    cdepth,
    closure,
    free_vars,
    parse_formula,
    pretty,
    set_cdepth,
    set_mdepth,
    set_udepth,
    sort_formulas,
    udepth,
)

SIG = Signature(("c", "d"), {"S": 1})

_cache: dict = {}


def _report(num: int, name: str, detail: str) -> None:
    print(f"\nACCEPTANCE {num} ({name}): PASS — {detail}")


def _seq(lhs: str, rhs: str, sig=SIG) -> Sequent:
    return Sequent(parse_formula(lhs, sig), parse_formula(rhs, sig), sig)


# Criterion 1: every primitive axiom/rule instance and every derived-rule
# schema instance decides Derivable with a checkable search certificate.

PRIMITIVE_INSTANCES = [
    ("i-top", "S(c)", "T"),
    ("i-refl", "S(c)", "S(c)"),
    ("ii-left", "(S(c) & S(d))", "S(c)"),
    ("ii-right", "(S(c) & S(d))", "S(d)"),
    ("iii", "S(c)", "(S(c) & T)"),
    ("iv", "((S(c) & S(d)) & T)", "S(d)"),
    ("v", "<> S(c)", "<> T"),
    ("vi", "<> <> S(c)", "<> S(c)"),
    ("vii", "S(c)", "A x . S(c)"),
    ("viii", "A x . S(x)", "S(c)"),
    ("ix", "S(c)", "(T & S(c))"),
    ("x", "S(x)", "(S(x) & T)"),
]

DERIVED_INSTANCES = [
    ("quantifier-shift", "<> A x . S(x)", "A x . <> S(x)"),
    (
        "quantifier-swap",
        "A x0 . A x1 . (S(x0) & S(x1))",
        "A x1 . A x0 . (S(x0) & S(x1))",
    ),
    ("instantiation", "A x . S(x)", "S(d)"),
    ("renaming", "A x0 . S(x0)", "A x1 . S(x1)"),
    ("term-weakening", "A x0 . (S(x0) & S(c))", "(S(d) & S(c))"),
    ("fresh-generalization", "(A x0 . S(x0) & T)", "A x1 . S(x1)"),
]


def test_criterion_1_calculus_golden_corpus():
    start = time.time()
    certificates = []
    for name, lhs, rhs in PRIMITIVE_INSTANCES + DERIVED_INSTANCES:
        s = _seq(lhs, rhs)
        verdict = decide(s)
        assert isinstance(verdict, Derivable), f"{name}: {s} not derivable"
        cert = prove(s, 12)
        assert cert is not None, f"{name}: no certificate for {s}"
        assert check_derivation(cert), f"{name}: certificate rejected"
        certificates.append(cert)
    elapsed = time.time() - start
    assert elapsed < 60
    _cache["criterion1_certs"] = certificates
    _report(1, "calculus golden corpus", f"18 sequents certified in {elapsed:.1f}s")


# Criterion 2: the two canonical non-derivable sequents refute with
# re-verifiable countermodels.


def test_criterion_2_non_derivability_corpus():
    sig = Signature((), {"S": 1})
    goals = [("T", "<> T"), ("A x . <> S(x)", "<> A x . S(x)")]
    for lhs_text, rhs_text in goals:
        start = time.time()
        s = _seq(lhs_text, rhs_text, sig)
        verdict = decide(s)
        assert isinstance(verdict, Refuted), f"{s} should be refuted"
        assert satisfies(verdict.model, verdict.world, verdict.assignment, s.lhs)
        assert not satisfies(verdict.model, verdict.world, verdict.assignment, s.rhs)
        assert time.time() - start < 60
    _report(2, "non-derivability corpus", "both refutations re-verified")


# Criteria 3 and 4: term models for 100 sampled consistent root pairs pass
# the truth-lemma check and the model-shape audit.


def _sampled_term_models():
    if "term_models" in _cache:
        return _cache["term_models"]
    rng = random.Random(20240810)
    models = []
    attempts = 0
    while len(models) < 100:
        attempts += 1
        assert attempts < 2000, "sampling stalled"
        sig, positive, negatives = random_root_pair(rng)
        if not all(
            isinstance(decide(Sequent(positive, d, sig)), Refuted)
            for d in negatives
        ):
            continue
        tm = build_model(Pair.make([positive], negatives), sig)
        models.append(tm)
    _cache["term_models"] = models
    return models


def test_criterion_3_truth_lemma_suite():
    start = time.time()
    models = _sampled_term_models()
    failures = [i for i, tm in enumerate(models) if not truth_lemma_check(tm)]
    elapsed = time.time() - start
    assert not failures
    assert elapsed < 600
    worlds = sum(len(tm.pairs) for tm in models)
    _report(
        3,
        "truth-lemma suite",
        f"100/100 term models ({worlds} worlds) agree with their pairs in {elapsed:.1f}s",
    )


def test_criterion_4_model_shape_audit():
    models = _sampled_term_models()
    for tm in models:
        m = tm.model
        assert m.adequacy.ok
        assert m.constant_domain()
        assert m.irreflexive()
        assert m.transitive()
        for (w, v) in tm.frame.final.edges:
            assert set_mdepth(tm.pairs[v].positive) < set_mdepth(
                tm.pairs[w].positive
            )
    _report(4, "model-shape audit", "100/100 models adequate, constant-domain, irreflexive, transitive, depth-decreasing")


# Criterion 5: the syntactic prover never certifies a sequent whose
# semantics refutes it, on 200 seeded random sequents.


def test_criterion_5_prover_decider_agreement():
    start = time.time()
    rng = random.Random(424242)
    certificates = []
    certified = refuted = 0
    for _ in range(200):
        cfg = random_config(rng)
        lhs, rhs = random_sequent(rng, cfg)
        s = Sequent(lhs, rhs, cfg.signature)
        cert = prove(s, 12)
        verdict = decide(s)
        if isinstance(verdict, Refuted):
            refuted += 1
            assert cert is None, f"certified a refuted sequent: {s}"
        if cert is not None:
            certified += 1
            assert check_derivation(cert)
            certificates.append(cert)
    elapsed = time.time() - start
    assert elapsed < 900
    _cache["criterion5_certs"] = certificates
    _report(
        5,
        "prover/decider agreement",
        f"200 sequents, {certified} certified, {refuted} refuted, no conflicts, {elapsed:.1f}s",
    )


# Criterion 6: truth preservation of every collected certificate across
# 1000 enumerated adequate models per signature.


def test_criterion_6_soundness_fuzz():
    start = time.time()
    certificates = _cache.get("criterion1_certs", []) + _cache.get(
        "criterion5_certs", []
    )
    assert certificates, "earlier criteria must run first"
    by_sig: dict = {}
    for cert in certificates:
        sig = cert.conclusion.signature
        key = (sig.constants, tuple(sorted(sig.relations.items())))
        by_sig.setdefault(key, []).append(cert)
    total_checks = 0
    for (constants, relations), certs in sorted(by_sig.items()):
        sig = Signature(constants, dict(relations))
        domain = list(constants)
        filler = 0
        while len(domain) < 2:
            domain.append(f"e{filler}")
            filler += 1
        models = list(
            itertools.islice(enumerate_models(sig, tuple(domain), 2, 2), 1000)
        )
        assert len(models) == 1000
        for cert in certs:
            lhs, rhs = cert.conclusion.lhs, cert.conclusion.rhs
            fvs = sorted(free_vars(lhs) | free_vars(rhs))
            for m in models:
                for w in m.worlds:
                    for values in itertools.product(m.domains[w], repeat=len(fvs)):
                        g = dict(zip(fvs, values))
                        if satisfies(m, w, g, lhs):
                            assert satisfies(m, w, g, rhs), (
                                f"soundness violated at {w} of {m.worlds} "
                                f"for {cert.conclusion}"
                            )
                        total_checks += 1
    elapsed = time.time() - start
    _report(
        6,
        "soundness fuzz",
        f"{len(certificates)} certificates x 1000 models/signature, "
        f"{total_checks} world/assignment checks, {elapsed:.1f}s",
    )


# Criterion 7: the finite-model interpretation agrees with Kripke truth on
# the quantifier-commutation countermodel, with the root embedding shape.


def test_criterion_7_shadow_truth_lemma():
    sig = Signature((), {"S": 1})
    lhs = parse_formula("A x . <> S(x)", sig)
    rhs = parse_formula("<> A x . S(x)", sig)
    tm = countermodel_for(lhs, rhs, sig)
    assert tm is not None
    shadow = ShadowStructure.from_countermodel(tm.model, tm.root)
    report = shadow_truth_audit(
        shadow,
        sort_formulas(tm.closure_set),
        parse_formula("A x . <> S(x)", tm.signature),
        parse_formula("<> A x . S(x)", tm.signature),
    )
    assert report["pass"]
    assert report["embedding"]
    _report(
        7,
        "shadow truth lemma",
        f"{report['checked']} world/formula agreements, embedding witnesses {report['embedding_witnesses']}",
    )


# Criterion 8: residue invariance and free-variable correspondence on 500
# seeded random formulas each.


def test_criterion_8_mod_invariance_and_fv_correspondence():
    sig = Signature((), {"S": 1})
    tm = countermodel_for(
        parse_formula("A x . <> S(x)", sig), parse_formula("<> A x . S(x)", sig), sig
    )
    shadow = ShadowStructure.from_countermodel(tm.model, tm.root)
    rng = random.Random(31337)
    cfg = GenConfig(signature=tm.signature, max_size=7)
    for _ in range(500):
        phi = random_formula(rng, cfg)
        translated = solovay_star(phi, shadow)
        assert free_arith_vars(translated) == {y_var(x) for x in free_vars(phi)}
        names = sorted(free_arith_vars(translated))
        env = {y: rng.randrange(0, 60) for y in names}
        reduced = {y: v % shadow.m for y, v in env.items()}
        world = rng.choice(shadow.worlds)
        assert shadow_eval(shadow, world, env, translated) == shadow_eval(
            shadow, world, reduced, translated
        )
    _report(8, "mod-invariance and fv correspondence", "500 formulas, 100% pass")


# Criterion 9: the closure's per-formula constant count is sandwiched by
# the goal set's measures, on 500 random (set, constant-pool) pairs.


def test_criterion_9_depth_measure_bounds():
    rng = random.Random(90210)
    pools = [("c",), ("c", "d"), ("c", "d", "c0"), ("c", "d", "c0", "c1")]
    for _ in range(500):
        cfg = random_config(rng)
        gamma = [
            random_formula(rng, cfg, closed=True)
            for _ in range(rng.choice((1, 2, 3)))
        ]
        pool = rng.choice(pools)
        cl = closure(gamma, pool)
        low = set_cdepth(gamma)
        high = low + set_udepth(gamma)
        got = set_cdepth(cl)
        assert low <= got <= high, (
            f"bounds violated: {low} <= {got} <= {high} for "
            f"{[pretty(g) for g in gamma]} under {pool}"
        )
    _report(9, "depth-measure bounds", "500 closure samples within bounds")
