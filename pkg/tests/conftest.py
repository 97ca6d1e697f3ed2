import hypothesis.strategies as st
import pytest

from qrc1.syntax import And, Const, Diamond, Forall, Rel, Signature, TOP, Var

SIG = Signature(("c", "d"), {"S": 1, "P": 2})


@pytest.fixture
def sig():
    return SIG


def _terms():
    return st.sampled_from(
        [Var("x0"), Var("x1"), Var("x2"), Const("c"), Const("d")]
    )


def formula_strategy(max_leaves: int = 6):
    atoms = st.one_of(
        st.just(TOP),
        st.builds(lambda t: Rel("S", (t,)), _terms()),
        st.builds(lambda a, b: Rel("P", (a, b)), _terms(), _terms()),
    )
    return st.recursive(
        atoms,
        lambda child: st.one_of(
            st.builds(And, child, child),
            st.builds(Diamond, child),
            st.builds(Forall, st.sampled_from(["x0", "x1", "x2"]), child),
        ),
        max_leaves=max_leaves,
    )


FORMULAS = formula_strategy()
