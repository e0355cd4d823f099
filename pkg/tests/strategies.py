"""Hypothesis strategies for expression trees."""

from fractions import Fraction

from hypothesis import strategies as st

from tensorlang.expr import (
    Add, Apply, EdgePred, EqPred, GuardedAgg, LabelPred, One, Product, Scale, SumAgg, UncondAgg,
)

VARS = st.integers(1, 4)
COEFS = st.fractions(min_value=-5, max_value=5, max_denominator=6)

leaves = st.one_of(
    st.just(One()),
    st.builds(EqPred, VARS, VARS, st.sampled_from(["eq", "neq"])),
    st.builds(EdgePred, VARS, VARS),
    st.builds(LabelPred, st.integers(1, 2), VARS),
)


def _extend(children):
    return st.one_of(
        st.builds(Product, children, children),
        st.builds(Add, children, children),
        st.builds(Scale, COEFS, children),
        st.builds(SumAgg, VARS, children),
        st.builds(lambda a: Apply("relu", (a,)), children),
        st.builds(lambda a, b: Apply("identity", (a,)) if b else Apply("sign", (a,)), children, st.booleans()),
        st.builds(UncondAgg, st.sampled_from(["sum", "max", "min", "mean"]), VARS, children),
        st.builds(lambda i, body: GuardedAgg("max", i, i % 4 + 1, _only(body, i % 4 + 1)), VARS, children),
    )


def _only(body, j):
    """Rename every free variable of body to j so the guarded body condition holds."""
    from tensorlang.expr import free_vars, substitute

    return substitute(body, {v: j for v in free_vars(body)})


expressions = st.recursive(leaves, _extend, max_leaves=12)


def function_free_leaves(n_labels: int):
    opts = [st.just(One()), st.builds(EqPred, VARS, VARS, st.sampled_from(["eq", "neq"])),
            st.builds(EdgePred, VARS, VARS)]
    if n_labels:
        opts.append(st.builds(LabelPred, st.integers(1, n_labels), VARS))
    return st.one_of(*opts)


def function_free(n_labels: int = 1, max_leaves: int = 10):
    return st.recursive(
        function_free_leaves(n_labels),
        lambda c: st.one_of(
            st.builds(Product, c, c), st.builds(Add, c, c),
            st.builds(Scale, st.sampled_from([Fraction(-2), Fraction(-1, 2), Fraction(1, 3), Fraction(3)]), c),
            st.builds(SumAgg, VARS, c),
        ),
        max_leaves=max_leaves,
    )
