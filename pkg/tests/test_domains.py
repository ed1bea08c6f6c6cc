"""Domain/problem text format and the bundled domains."""

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracle
from poclab.domains import (
    ParseError,
    Problem,
    bundled,
    bundled_names,
    format_domain,
    format_problem,
    parse,
    parse_domain,
    parse_problem,
)

BLOCKS_TEXT = """
; a tiny stacking world
(define (domain mini)
  (:predicates (on ?x ?y) (clear ?x))
  (:operator stack
    :parameters (?x ?y)
    :precondition (and (clear ?x) (clear ?y))
    :effect (and (on ?x ?y) (not (clear ?y)))))
"""


def test_parse_domain_basics():
    d = parse_domain(BLOCKS_TEXT)
    assert d.name == "mini"
    assert d.predicates == {"on": 2, "clear": 1}
    op = d.operator("stack")
    assert op.params == ("?x", "?y")
    assert [str(l) for l in op.preconds] == ["(clear ?x)", "(clear ?y)"]
    assert [str(l) for l in op.effects] == ["(on ?x ?y)", "(not (clear ?y))"]


def test_round_trip_through_printer():
    d = parse_domain(BLOCKS_TEXT)
    assert parse_domain(format_domain(d)) == d
    dom, probs = bundled("blocks")
    assert parse_domain(format_domain(dom)) == dom
    for p in probs:
        assert parse_problem(format_problem(p), dom) == p


def test_precondition_order_preserved():
    d = parse_domain(BLOCKS_TEXT)
    assert [l.pred for l in d.operator("stack").preconds] == ["clear", "clear"]
    flipped = BLOCKS_TEXT.replace("(clear ?x) (clear ?y)", "(clear ?y) (clear ?x)")
    d2 = parse_domain(flipped)
    assert [l.args for l in d2.operator("stack").preconds] == [("?y",), ("?x",)]


@pytest.mark.parametrize(
    "mangle,fragment",
    [
        (lambda t: t.replace("(and (on ?x ?y) (not", "(and (on ?x) (not"), "expects 2 arguments"),
        (lambda t: t.replace("(on ?x ?y) (not", "(onn ?x ?y) (not"), "undeclared predicate"),
        (lambda t: t.replace(":parameters (?x ?y)", ":parameters (?x)"), "not in :parameters"),
        (lambda t: t.replace("(:predicates", "(:predicats"), "unknown domain section"),
        (lambda t: t + ")", "unmatched ')'"),
        (lambda t: t.replace("(define", "((define"), None),
    ],
)
def test_domain_errors_are_positioned(mangle, fragment):
    with pytest.raises(ParseError) as err:
        parse_domain(mangle(BLOCKS_TEXT))
    assert "line" in str(err.value) and "column" in str(err.value)
    if fragment:
        assert fragment in str(err.value)


def test_problem_errors():
    d = parse_domain(BLOCKS_TEXT)
    base = (
        "(define (problem p) (:domain mini) (:objects A B)"
        " (:init (clear A) (clear B)) (:goal (and (on A B))))"
    )
    assert isinstance(parse_problem(base, d), Problem)
    with pytest.raises(ParseError, match="positive"):
        parse_problem(base.replace("(clear A)", "(not (clear A))"), d)
    with pytest.raises(ParseError, match="undeclared object"):
        parse_problem(base.replace("(clear B)", "(clear Z)"), d)
    with pytest.raises(ParseError, match="expects 2 arguments"):
        parse_problem(base.replace("(on A B)", "(on A)"), d)
    with pytest.raises(ParseError, match="must be ground"):
        parse_problem(base.replace("(on A B)", "(on A ?x)"), d)
    with pytest.raises(ParseError, match="declares domain"):
        parse_problem(base.replace("(:domain mini)", "(:domain other)"), d)


def test_arity_mismatch_names_predicate_and_position():
    d = parse_domain(BLOCKS_TEXT)
    text = "(define (problem p) (:domain mini) (:objects A)\n (:init (on A)) (:goal (and (clear A))))"
    with pytest.raises(ParseError) as err:
        parse_problem(text, d)
    assert "'on'" in str(err.value) and "line 2" in str(err.value)


def test_bundled_names_and_shapes():
    assert set(bundled_names()) == {"blocks", "briefcase", "tileworld"}
    dom, probs = bundled("blocks")
    assert [p.name for p in probs] == ["sussman", "tower4", "invert4"]
    dom, probs = bundled("briefcase")
    gp = probs[0]
    assert len(gp.goal) == 3
    # the paycheck starts inside the briefcase
    assert any(l.pred == "in" and l.args[0].name == "paycheck" for l in gp.init)
    dom, probs = bundled("tileworld")
    assert [p.name for p in probs] == [f"tileworld-{k}" for k in (1, 2, 3, 4)]
    assert [l.pred for l in probs[0].goal] == ["filled"]
    for k, p in enumerate(probs, start=1):
        assert len(p.goal) == k
    with pytest.raises(KeyError):
        bundled("trains")


def test_bundled_problems_pass_their_domains():
    for name in bundled_names():
        dom, probs = bundled(name)
        for p in probs:
            assert p.domain_name == dom.name


SYMBOL = st.text(alphabet="abcdefgxyz-", min_size=1, max_size=6).filter(
    lambda s: not s.startswith("-")
)


@settings(max_examples=200, deadline=None)
@given(
    preds=st.lists(st.tuples(SYMBOL, st.integers(0, 3)), min_size=1, max_size=4, unique_by=lambda t: t[0])
)
def test_generated_domains_round_trip(preds):
    decls = " ".join(f"({p}" + "".join(f" ?a{i}" for i in range(n)) + ")" for p, n in preds)
    pred, arity = preds[0]
    params = " ".join(f"?a{i}" for i in range(arity))
    litxt = f"({pred}" + ("" if arity == 0 else " " + params) + ")"
    text = (
        f"(define (domain g) (:predicates {decls})"
        f" (:operator o :parameters ({params}) :precondition (and {litxt})"
        f" :effect (and (not {litxt}))))"
    )
    d = parse_domain(text)
    assert parse_domain(format_domain(d)) == d


@settings(max_examples=300, deadline=None)
@given(st.text(alphabet="(); abc?\n-:", max_size=60))
def test_malformed_inputs_never_crash(text):
    try:
        parse(text)
    except ParseError as e:
        assert e.line >= 1 and e.col >= 1
    except RecursionError:
        pytest.fail("parser recursed unboundedly")


def test_every_bundled_problem_is_solvable():
    """Scripted ground solutions, checked by the independent executor
    (breadth-first search is infeasible for the larger tileworld maps)."""
    scripts = {
        "sussman": [("move-to-table", ("C", "A")), ("move-from-table", ("B", "C")),
                    ("move-from-table", ("A", "B"))],
        "tower4": [("move-from-table", ("C", "D")), ("move-from-table", ("B", "C")),
                   ("move-from-table", ("A", "B"))],
        "invert4": [("move-to-table", ("A", "B")), ("move", ("B", "C", "A")),
                    ("move", ("C", "D", "B")), ("move-from-table", ("D", "C"))],
        "get-paid": [("put-in", ("dictionary", "home")), ("move", ("home", "bank")),
                     ("take-out", ("paycheck", "bank")), ("move", ("bank", "office")),
                     ("take-out", ("dictionary", "office")), ("move", ("office", "home"))],
        "get-paid-bc-at-work": [("move", ("office", "home")), ("put-in", ("dictionary", "home")),
                                ("move", ("home", "bank")), ("take-out", ("paycheck", "bank")),
                                ("move", ("bank", "office")), ("take-out", ("dictionary", "office")),
                                ("move", ("office", "home"))],
    }
    for name in bundled_names():
        dom, probs = bundled(name)
        for p in probs:
            if p.name in scripts:
                assert oracle.execute(dom, p, scripts[p.name]), p.name
            else:
                assert p.name.startswith("tileworld-")
                k = int(p.name.split("-")[1])
                script = [("go", ("start", "depot"))]
                for i in range(1, k + 1):
                    script.append(("pickup", (f"t{i}", "depot", f"s{i}")))
                script.append(("go", ("depot", "field")))
                for i in range(1, k + 1):
                    script.append(("fill", (f"h{i}", f"t{i}", "field", f"s{i}")))
                assert oracle.execute(dom, p, script), p.name


def test_sussman_optimum_is_three_actions():
    dom, probs = bundled("blocks")
    assert oracle.optimal_length(dom, probs[0], max_depth=4) == 3
