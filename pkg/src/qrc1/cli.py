"""Command-line front end.

Commands: decide, prove, countermodel, realize, audit, corpus.

Exit codes: 0 success/derivable, 1 refuted or failed audit, 2 inconclusive
(budget or cap exhausted), 64 usage error, 74 file I/O error.

Configuration precedence: command-line flags, then QRC1_* environment
variables, then a key=value config file, then built-in defaults.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import os
import sys
from dataclasses import dataclass, fields, replace

from . import arith
from .calculus import (
    DEFAULT_BUDGET,
    Sequent,
    check_derivation,
    derivation_to_json,
    format_tree,
    prove,
)
from .corpus import GenConfig, random_config, random_sequent
from .countermodel import Pair, TermModel, countermodel_for, truth_lemma_mismatches
from .semantics import (
    DEFAULT_MODEL_CAP,
    Derivable,
    InconclusiveError,
    Refuted,
    check_adequate,
    decide,
    model_from_json,
    model_to_dot,
    model_to_json,
    satisfies,
)
from .syntax import (
    FormulaError,
    Signature,
    SignatureError,
    infer_signature,
    parse_formula,
    pretty,
)

EX_OK = 0
EX_REFUTED = 1
EX_INCONCLUSIVE = 2
EX_USAGE = 64
EX_IOERR = 74


@dataclass
class RunConfig:
    depth_budget: int = DEFAULT_BUDGET
    model_cap: int = DEFAULT_MODEL_CAP
    worker_count: int = 1
    format: str = "text"
    seed: int = 0

    def validate(self) -> None:
        if self.depth_budget <= 0 or self.model_cap <= 0 or self.worker_count <= 0:
            raise ValueError("budgets and worker counts must be positive")
        if self.format not in ("text", "json", "dot"):
            raise ValueError(f"unknown output format {self.format!r}")


_INT_KEYS = ("depth_budget", "model_cap", "worker_count", "seed")


def load_config(path: str | None, overrides: dict) -> RunConfig:
    cfg = RunConfig()
    if path and os.path.exists(path):
        file_values = {}
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if not line or line.startswith("#"):
                    continue
                if "=" not in line:
                    raise ValueError(f"bad config line: {line!r}")
                key, value = (part.strip() for part in line.split("=", 1))
                file_values[key] = value
        cfg = _apply(cfg, file_values)
    env_values = {}
    for f in fields(RunConfig):
        env = os.environ.get(f"QRC1_{f.name.upper()}")
        if env is not None:
            env_values[f.name] = env
    cfg = _apply(cfg, env_values)
    cfg = replace(cfg, **{k: v for k, v in overrides.items() if v is not None})
    cfg.validate()
    return cfg


def _apply(cfg: RunConfig, values: dict) -> RunConfig:
    known = {f.name for f in fields(RunConfig)}
    out = {}
    for key, value in values.items():
        if key not in known:
            raise ValueError(f"unknown config key {key!r}")
        out[key] = int(value) if key in _INT_KEYS else value
    return replace(cfg, **out)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # usage errors exit 64
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EX_USAGE)


def _signature(args, *texts: str) -> Signature:
    if args.sig:
        try:
            with open(args.sig, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise SystemExit(_io_error(f"cannot read signature file: {exc}"))
        except json.JSONDecodeError as exc:
            raise SystemExit(_io_error(f"bad signature file: {exc}"))
        return Signature(tuple(data.get("constants", ())), data.get("relations", {}))
    return infer_signature(*texts)


def _io_error(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return EX_IOERR


def _emit(text: str, out: str | None) -> None:
    if out:
        try:
            with open(out, "w", encoding="utf-8") as fh:
                fh.write(text + "\n")
        except OSError as exc:
            raise SystemExit(_io_error(str(exc)))
    else:
        print(text)


def _dumps(data) -> str:
    return json.dumps(data, sort_keys=True, indent=2)


# ---------------------------------------------------------------------------
# Commands


def cmd_decide(args, cfg: RunConfig) -> int:
    try:
        sig = _signature(args, args.lhs, args.rhs)
        s = Sequent(
            parse_formula(args.lhs, sig), parse_formula(args.rhs, sig), sig
        )
        s.validate()
    except (FormulaError, SignatureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_USAGE
    try:
        verdict = decide(
            s,
            model_cap=cfg.model_cap,
            attach_certificate=True,
            prove_budget=cfg.depth_budget,
        )
    except InconclusiveError as exc:
        print(f"inconclusive: {exc}")
        return EX_INCONCLUSIVE
    if isinstance(verdict, Derivable):
        if cfg.format == "json":
            doc = {"verdict": "derivable"}
            if verdict.certificate is not None:
                doc["certificate"] = derivation_to_json(verdict.certificate)
            _emit(_dumps(doc), args.out)
        else:
            print("derivable")
            if verdict.certificate is not None:
                print(format_tree(verdict.certificate))
        return EX_OK
    doc = {
        "verdict": "refuted",
        "model": model_to_json(verdict.model),
        "world": verdict.world,
        "assignment": verdict.assignment,
    }
    if cfg.format == "dot":
        _emit(model_to_dot(verdict.model), args.out)
    else:
        _emit(_dumps(doc), args.out)
    return EX_REFUTED


def cmd_prove(args, cfg: RunConfig) -> int:
    try:
        sig = _signature(args, args.lhs, args.rhs)
        s = Sequent(
            parse_formula(args.lhs, sig), parse_formula(args.rhs, sig), sig
        )
        s.validate()
    except (FormulaError, SignatureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_USAGE
    found = prove(s, cfg.depth_budget)
    if found is None:
        print(f"no certificate within depth budget {cfg.depth_budget}")
        return EX_INCONCLUSIVE
    if cfg.format == "json":
        _emit(_dumps(derivation_to_json(found)), args.out)
    else:
        _emit(format_tree(found), args.out)
    return EX_OK


def _term_model_document(tm: TermModel, lhs: str, rhs: str) -> dict:
    mismatches = truth_lemma_mismatches(tm)
    return {
        "sequent": {"lhs": lhs, "rhs": rhs},
        "model": model_to_json(tm.model),
        "pairs": {
            str(w): {
                "positive": [pretty(f) for f in pair.positive],
                "negative": [pretty(f) for f in pair.negative],
            }
            for w, pair in tm.pairs.items()
        },
        "truth_lemma": {
            "pass": not mismatches,
            "worlds": len(tm.pairs),
            "closure_formulas": len(tm.closure_set),
            "mismatches": [
                {"world": w, "formula": pretty(f)} for w, f in mismatches
            ],
        },
    }


def cmd_countermodel(args, cfg: RunConfig) -> int:
    try:
        sig = _signature(args, args.lhs, args.rhs)
        lhs = parse_formula(args.lhs, sig)
        rhs = parse_formula(args.rhs, sig)
    except (FormulaError, SignatureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_USAGE
    try:
        tm = countermodel_for(lhs, rhs, sig, model_cap=cfg.model_cap)
    except InconclusiveError as exc:
        print(f"inconclusive: {exc}")
        return EX_INCONCLUSIVE
    if tm is None:
        print("derivable: no countermodel exists")
        return EX_REFUTED
    doc = _term_model_document(tm, args.lhs, args.rhs)
    if args.dot:
        _emit(model_to_dot(tm.model), args.dot)
    _emit(_dumps(doc), args.out)
    status = "PASS" if doc["truth_lemma"]["pass"] else "FAIL"
    print(f"truth-lemma audit: {status}", file=sys.stderr)
    return EX_OK if doc["truth_lemma"]["pass"] else EX_REFUTED


def _load_model_doc(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise SystemExit(_io_error(f"cannot read model file: {exc}"))
    model_data = doc.get("model", doc)
    return doc, model_from_json(model_data)


def cmd_realize(args, cfg: RunConfig) -> int:
    shadow = None
    doc = None
    if args.model:
        doc, model = _load_model_doc(args.model)
        shadow = arith.ShadowStructure.from_countermodel(model, model.worlds[0])
    try:
        sig = _signature(args, args.formula)
        if shadow is not None:
            sig = shadow.model.signature
        phi = parse_formula(args.formula, sig)
    except (FormulaError, SignatureError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_USAGE
    try:
        if args.style == "star":
            out = arith.star_realization(phi)
        else:
            out = arith.solovay_star(phi, shadow)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_USAGE
    _emit(arith.ascii_arith(out), args.out)
    if args.shadow_audit:
        if doc is None or "pairs" not in doc:
            print("error: --shadow-audit needs a countermodel document", file=sys.stderr)
            return EX_USAGE
        return _run_shadow_audit(doc, shadow)
    return EX_OK


def _run_shadow_audit(doc: dict, shadow: arith.ShadowStructure) -> int:
    sig = shadow.model.signature
    root_pair = doc["pairs"][min(doc["pairs"], key=int)]
    formulas = [
        parse_formula(text, sig)
        for text in root_pair["positive"] + root_pair["negative"]
    ]
    lhs = rhs = None
    if "sequent" in doc:
        lhs = parse_formula(doc["sequent"]["lhs"], sig)
        rhs = parse_formula(doc["sequent"]["rhs"], sig)
    report = arith.shadow_truth_audit(shadow, formulas, lhs, rhs)
    status = "PASS" if report["pass"] else "FAIL"
    print(
        f"shadow audit: {status} ({report['checked']} world/formula checks, "
        f"{len(report['mismatches'])} disagreements)"
    )
    if "embedding" in report:
        print(f"embedding witnesses below world 0: {report['embedding_witnesses']}")
    return EX_OK if report["pass"] else EX_REFUTED


def cmd_audit(args, cfg: RunConfig) -> int:
    doc, model = _load_model_doc(args.model)
    failures = []
    report = check_adequate(model)
    print(f"adequate: transitive={report.transitive} eta={report.eta_coherent} "
          f"concordant={report.concordant}")
    if not report.ok:
        failures.append("adequacy")
    if "pairs" in doc and "sequent" in doc:
        sig = model.signature
        try:
            lhs = parse_formula(doc["sequent"]["lhs"], sig)
            rhs = parse_formula(doc["sequent"]["rhs"], sig)
        except FormulaError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EX_USAGE
        root = model.worlds[0]
        refutes = satisfies(model, root, {}, lhs) and not satisfies(model, root, {}, rhs)
        print(f"root refutes sequent: {refutes}")
        if not refutes:
            failures.append("refutation")
        shadow = arith.ShadowStructure.from_countermodel(model, root)
        code = _run_shadow_audit(doc, shadow)
        if code != EX_OK:
            failures.append("shadow")
    if failures:
        print(f"audit FAILED: {', '.join(failures)}")
        return EX_REFUTED
    print("audit PASS")
    return EX_OK


def _decide_pair(payload):
    lhs_text, rhs_text, constants, relations, cap = payload
    sig = Signature(tuple(constants), relations)
    s = Sequent(parse_formula(lhs_text, sig), parse_formula(rhs_text, sig), sig)
    try:
        verdict = decide(s, model_cap=cap)
    except InconclusiveError:
        return "inconclusive"
    return "derivable" if isinstance(verdict, Derivable) else "refuted"


def cmd_corpus(args, cfg: RunConfig) -> int:
    import random

    rng = random.Random(cfg.seed)
    rows = []
    for _ in range(args.count):
        if args.sig:
            gen_cfg = GenConfig(signature=_signature(args))
        else:
            gen_cfg = random_config(rng)
        lhs, rhs = random_sequent(rng, gen_cfg)
        rows.append((pretty(lhs), pretty(rhs), gen_cfg.signature))
    if not args.decide:
        for lhs, rhs, _ in rows:
            print(f"{lhs}\t{rhs}")
        return EX_OK
    payloads = [
        (lhs, rhs, sig.constants, dict(sig.relations), cfg.model_cap)
        for lhs, rhs, sig in rows
    ]
    if cfg.worker_count > 1:
        with concurrent.futures.ProcessPoolExecutor(cfg.worker_count) as pool:
            verdicts = list(pool.map(_decide_pair, payloads))
    else:
        verdicts = [_decide_pair(p) for p in payloads]
    for (lhs, rhs, _), verdict in zip(rows, verdicts):
        print(f"{lhs}\t{rhs}\t{verdict}")
    return EX_OK


# ---------------------------------------------------------------------------
# Entry point


def build_parser() -> _Parser:
    parser = _Parser(prog="qrc1", description=__doc__)
    parser.add_argument("--config", help="key=value configuration file")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: _Parser, formulas: int) -> None:
        p.add_argument("--sig", help="signature JSON file")
        p.add_argument("--out", help="write the main artifact here")
        p.add_argument("--budget", type=int, help="proof search depth budget")
        p.add_argument("--cap", type=int, help="countermodel search cap")
        p.add_argument("--format", choices=("text", "json", "dot"))
        p.add_argument("--seed", type=int)
        p.add_argument("--workers", type=int)
        if formulas == 2:
            p.add_argument("lhs")
            p.add_argument("rhs")
        elif formulas == 1:
            p.add_argument("formula")

    p = sub.add_parser("decide", help="settle derivability of lhs |- rhs")
    common(p, 2)
    p = sub.add_parser("prove", help="search for a derivation certificate")
    common(p, 2)
    p = sub.add_parser("countermodel", help="build the saturated term model")
    common(p, 2)
    p.add_argument("--dot", help="also write a DOT rendering here")
    p = sub.add_parser("realize", help="emit an arithmetical interpretation")
    common(p, 1)
    p.add_argument("--style", choices=("star", "solovay"), required=True)
    p.add_argument("--model", help="countermodel JSON (for the solovay style)")
    p.add_argument("--shadow-audit", action="store_true")
    p = sub.add_parser("audit", help="re-check a countermodel document")
    p.add_argument("--model", required=True)
    common(p, 0)
    p = sub.add_parser("corpus", help="emit seeded random sequents")
    common(p, 0)
    p.add_argument("--count", type=int, default=20)
    p.add_argument("--decide", action="store_true")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = load_config(
            args.config,
            {
                "depth_budget": getattr(args, "budget", None),
                "model_cap": getattr(args, "cap", None),
                "format": getattr(args, "format", None),
                "seed": getattr(args, "seed", None),
                "worker_count": getattr(args, "workers", None),
            },
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EX_USAGE
    handlers = {
        "decide": cmd_decide,
        "prove": cmd_prove,
        "countermodel": cmd_countermodel,
        "realize": cmd_realize,
        "audit": cmd_audit,
        "corpus": cmd_corpus,
    }
    return handlers[args.command](args, cfg)


if __name__ == "__main__":
    raise SystemExit(main())
