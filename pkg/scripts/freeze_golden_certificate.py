#!/usr/bin/env python3
"""Find the primitive-rule certificate for the quantifier shift
(<> A x . S(x)  |-  A x . <> S(x)) by backward search and freeze it as the
golden certificate the test suite checks against.
"""

import json
import pathlib
import sys

from qrc1.calculus import Sequent, check_derivation, derivation_to_json, format_tree, prove
from qrc1.syntax import Signature, parse_formula

OUT = pathlib.Path(__file__).resolve().parent.parent / "tests" / "data" / "quantifier_shift_certificate.json"


def main() -> int:
    sig = Signature((), {"S": 1})
    s = Sequent(
        parse_formula("<> A x . S(x)", sig),
        parse_formula("A x . <> S(x)", sig),
        sig,
    )
    found = prove(s, 12)
    if found is None or not check_derivation(found):
        print("search failed to certify the quantifier shift", file=sys.stderr)
        return 1
    OUT.parent.mkdir(parents=True, exist_ok=True)
    OUT.write_text(json.dumps(derivation_to_json(found), indent=2, sort_keys=True) + "\n")
    print(format_tree(found))
    print(f"frozen at {OUT}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
