import pytest
from fractions import Fraction
from hypothesis import given, settings

from strategies import expressions
from tensorlang.expr import (
    EdgePred, EqPred, GuardedAgg, LabelPred, One, Product, Scale, SumAgg, structural_equal,
)
from tensorlang.parser import ParseError, load_expressions, parse, render, tokenize
from tensorlang.registry import DEFAULT_FUNCTIONS


def test_guarded_sum():
    assert structural_equal(parse("sum x2 : E(x1,x2) * P1(x2)"),
                            SumAgg(2, Product(EdgePred(1, 2), LabelPred(1, 2))))


def test_walk_expression():
    theta = SumAgg(2, SumAgg(3, Product(EdgePred(1, 2), EdgePred(2, 3))))
    assert structural_equal(parse("sum x2 : sum x3 : E(x1,x2)*E(x2,x3)"), theta)


def test_unterminated_bracket_span():
    with pytest.raises(ParseError) as info:
        parse("[x1=x2")
    assert info.value.span.start == 0 and info.value.span.end == 6


@pytest.mark.parametrize("text", ["x1", "E(x1)", "sum x0 : 1", "@nosuch(1)", "agg @nosuch x2 : 1", "1 +", "E(x1,x2))", "$"])
def test_errors(text):
    with pytest.raises(ParseError):
        parse(text)


def test_render_examples():
    assert render(EdgePred(1, 2)) == "E(x1,x2)"
    assert render(Scale(Fraction(3, 2), One())) == "3/2 * 1"


def test_precedence_and_reach():
    e = parse("1 + E(x1,x2) * P1(x1)")
    assert render(e) == "1 + E(x1,x2) * P1(x1)"
    s = parse("sum x2 : E(x1,x2) + 1")
    assert isinstance(s, SumAgg)
    assert not isinstance(parse("(sum x2 : E(x1,x2)) + 1"), SumAgg)


def test_decimals_are_exact():
    e = parse("0.5 * P1(x1)")
    assert isinstance(e, Scale) and e.coef == Fraction(1, 2)


def test_conditional_aggregation():
    e = parse("agg @max x2 | E(x1,x2) : P1(x2)")
    assert structural_equal(e, GuardedAgg("max", 1, 2, LabelPred(1, 2)))


def test_inequality_literal():
    assert structural_equal(parse("[x1!=x2]"), EqPred(1, 2, "neq"))


def test_comments_and_whitespace():
    assert [t.kind for t in tokenize("1 # note\n+ 1")][:3] == ["num", "op", "num"]


@settings(max_examples=1000)
@given(expressions)
def test_render_parse_round_trip(e):
    text = render(e)
    back = parse(text, DEFAULT_FUNCTIONS)
    assert structural_equal(back, e), text
    assert render(back) == text


def test_named_expression_file(tmp_path):
    p = tmp_path / "lib.json"
    p.write_text('[{"name": "deg", "expr": "sum x2 : E(x1,x2)"}, {"expr": "1"}]')
    items = load_expressions(p)
    assert items[0][0] == "deg" and len(items) == 2
    q = tmp_path / "theta.tl"
    q.write_text("sum x2 : sum x3 : E(x1,x2)*E(x2,x3)\n")
    assert load_expressions(q)[0][0] == "theta"
