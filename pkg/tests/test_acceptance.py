"""Acceptance suite: one test per criterion, one PASS/FAIL line each.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines as
they print.  Criterion 6 is a known red: the engine reproduces the
least-cost side of the tileworld ordering phenomenon but not the
DUnf-Gen side; the assertion states the criterion verbatim and the
failure message carries the measured table.
"""

import time

import oracle
from helpers import plan_with, separable_threat_fixture
from poclab.bench import (
    NODE_KIND,
    RunRecord,
    build_overrun_table,
    effective_count,
    pct_overrun,
    render_csv,
    run_matrix,
)
from poclab.domains import bundled, bundled_names, parse_domain, parse_problem
from poclab.flaws import (
    enumerate_open_repairs,
    enumerate_repairs,
    enumerate_threat_repairs,
    refresh_flaw,
    repair_cost,
)
from poclab.plan import (
    NONSEPARABLE,
    OPEN,
    Flaw,
    Step,
    add_ordering,
    validate_solution,
)
from poclab.search import SearchConfig, parse_rank, plan_search
from poclab.strategies import builtin, builtin_names, parse_strategy
from poclab.terms import const, lit

LIMIT = 10000
RANKS = ("S+OC", "S+OC+UC")


def report(criterion: str, ok: bool, detail: str = ""):
    line = f"ACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'}"
    if detail:
        line += f"  [{detail}]"
    print(line, flush=True)


def all_tasks():
    for name in bundled_names():
        dom, probs = bundled(name)
        for p in probs:
            yield dom, p


def test_criterion_1_soundness_suite():
    """Every solved (problem x strategy x rank) run validates."""
    t0 = time.time()
    solved = checked = 0
    for dom, prob in all_tasks():
        for rank in RANKS:
            for name in builtin_names():
                out = plan_search(
                    dom, prob, builtin(name),
                    SearchConfig(rank=parse_rank(rank), node_limit=LIMIT),
                )
                checked += 1
                if out.solved:
                    solved += 1
                    assert validate_solution(out.plan, dom, prob), (
                        f"{name} on {prob.name} ({rank}) returned an invalid plan"
                    )
    elapsed = time.time() - t0
    ok = elapsed < 120.0 and solved > 0
    report("1 soundness", ok, f"{solved}/{checked} runs solved, all valid, {elapsed:.1f}s")
    assert ok, f"suite took {elapsed:.1f}s (budget 120s)"


def test_criterion_2_overrun_formula():
    assert pct_overrun(200, 100) == 100  # the worked example
    assert pct_overrun(100, 100) == 0

    def rr(strategy, status, nodes):
        return RunRecord(strategy, "p", "S+OC", NODE_KIND, 10000.0, status, nodes, 0.0, 0, False)

    overshoot = rr("slow", "node-limit", 10007)
    assert effective_count(overshoot) == 10000  # clamped to the nominal limit
    table = build_overrun_table([rr("best", "solved", 250), overshoot])
    assert table.overruns[("best", "p")] == 0  # the per-problem best sits at zero
    assert table.overruns[("slow", "p")] == 3900
    report("2 overrun formula", True, "worked example, clamping, zero-at-best")


def test_criterion_3_separation_arithmetic():
    plan, flaw = separable_threat_fixture()
    repairs = enumerate_threat_repairs(plan, flaw)
    separations = [r for r in repairs if r.kind == "separate"]
    orderings = [r for r in repairs if r.kind in ("promote", "demote")]
    assert len(separations) == 3
    assert len(orderings) <= 2

    # nonseparable threats never exceed two repairs, checked along real runs
    checked = [0]

    class Obs:
        def __init__(self, dom):
            self.dom = dom

        def on_expand(self, plan, flaw, children):
            for f in plan.agenda:
                if f.kind == NONSEPARABLE:
                    assert len(enumerate_threat_repairs(plan, f)) <= 2
                    checked[0] += 1

    for domname, pidx, strat in (("blocks", 2, "UCPOP"), ("tileworld", 1, "DSep")):
        dom, probs = bundled(domname)
        plan_search(dom, probs[pidx], builtin(strat), SearchConfig(node_limit=3000), observer=Obs(dom))
    report("3 separation arithmetic", True, f"3 separations + <=2 orderings; {checked[0]} nonseparable spot checks")


def test_criterion_4_threat_cost_monotonicity():
    class Monotone:
        def __init__(self, dom):
            self.dom = dom
            self.samples = 0
            self.violations = []

        def on_expand(self, parent, flaw, children):
            parent_costs = {
                id(f): len(enumerate_repairs(parent, f, self.dom))
                for f in parent.agenda
                if f.is_threat
            }
            if not parent_costs:
                return
            for child in children:
                for f in child.agenda:
                    pc = parent_costs.get(id(f))
                    if pc is None:
                        continue
                    live = refresh_flaw(child, f)
                    if live is None:
                        continue  # vanished: no longer costs anything
                    cc = len(enumerate_repairs(child, live, self.dom))
                    self.samples += 1
                    if cc > pc:
                        self.violations.append((f.describe(), pc, cc))

    total = 0
    violations = []
    runs = [
        ("tileworld", 1, builtin("UCPOP"), 0),
        ("tileworld", 2, builtin("LCFR"), 0),
        ("briefcase", 1, builtin("DSep"), 0),
        ("blocks", 2, parse_strategy("{o,n,s}R", name="pure-random"), 13),
        ("tileworld", 1, parse_strategy("{o,n,s}R", name="pure-random"), 99),
    ]
    for domname, pidx, strategy, seed in runs:
        dom, probs = bundled(domname)
        obs = Monotone(dom)
        plan_search(
            dom, probs[pidx], strategy,
            SearchConfig(node_limit=1200, seed=seed), observer=obs,
        )
        total += obs.samples
        violations.extend(obs.violations)
    ok = total >= 1000 and not violations
    report("4 threat-cost monotonicity", ok, f"{total} parent/child threat samples, {len(violations)} violations")
    assert total >= 1000
    assert not violations, violations[:5]


def test_criterion_5_dsep_dominance():
    config = SearchConfig(rank=parse_rank("S+OC"), node_limit=LIMIT)
    rows = []
    caveat = []
    for dom, prob in all_tasks():
        u = plan_search(dom, prob, builtin("UCPOP"), config)
        d = plan_search(dom, prob, builtin("DSep"), config)
        if u.solved and d.solved:
            rows.append((prob.name, u.stats.nodes_generated, d.stats.nodes_generated))
        ul = plan_search(dom, prob, builtin("UCPOP-LC"), config)
        dl = plan_search(dom, prob, builtin("DSep-LC"), config)
        if ul.solved and dl.solved and dl.stats.nodes_generated > ul.stats.nodes_generated:
            caveat.append((prob.name, ul.stats.nodes_generated, dl.stats.nodes_generated))
    violations = [(p, u, d) for p, u, d in rows if d > u]
    detail = f"{len(rows)} problems solved by both; LC caveat witnesses: {caveat or 'none'}"
    report("5 DSep dominance", not violations, detail)
    assert rows, "no problem solved by both UCPOP and DSep"
    assert not violations, violations


def test_criterion_6_tileworld_phenomenon():
    """Stated comparison: LCFR and DUnf-Gen each beat LCFR-DSep and
    ZLIFO on >=2 of the 2..4-hole problems with default precondition
    order; reversal closes the gap to 2x; LCFR's counts are identical
    under both orders.  Known red: see the failure message."""
    t0 = time.time()
    dom, probs = bundled("tileworld")
    strategies = ("LCFR", "DUnf-Gen", "LCFR-DSep", "ZLIFO")
    counts = {}
    for prob in probs[1:]:  # the 2, 3, 4 hole instances
        for rev in (False, True):
            for name in strategies:
                out = plan_search(
                    dom, prob, builtin(name),
                    SearchConfig(rank=parse_rank("S+OC+UC"), node_limit=LIMIT,
                                 reverse_preconditions=rev),
                )
                counts[(prob.name, rev, name)] = out.stats.nodes_generated
    elapsed = time.time() - t0

    instances = [p.name for p in probs[1:]]
    default_wins = [
        p
        for p in instances
        if max(counts[(p, False, "LCFR")], counts[(p, False, "DUnf-Gen")])
        < min(counts[(p, False, "LCFR-DSep")], counts[(p, False, "ZLIFO")])
    ]
    lcfr_equal = [p for p in instances if counts[(p, False, "LCFR")] == counts[(p, True, "LCFR")]]
    gap_closed = [
        p
        for p in instances
        if max(counts[(p, True, "LCFR-DSep")], counts[(p, True, "ZLIFO")])
        <= 2 * min(counts[(p, True, "LCFR")], counts[(p, True, "DUnf-Gen")])
    ]
    lcfr_wins = [
        p
        for p in instances
        if counts[(p, False, "LCFR")]
        < min(counts[(p, False, "LCFR-DSep")], counts[(p, False, "ZLIFO")])
    ]

    table = "; ".join(
        f"{p}: " + " ".join(
            f"{s}={counts[(p, False, s)]}/{counts[(p, True, s)]}" for s in strategies
        )
        for p in instances
    )
    ok = (
        len(default_wins) >= 2
        and len(gap_closed) >= 2
        and len(lcfr_equal) == len(instances)
        and elapsed < 300.0
    )
    detail = (
        f"default wins {default_wins}, LCFR-only wins {lcfr_wins}, "
        f"reversal gap closed {gap_closed}, LCFR order-invariant on {lcfr_equal}, "
        f"{elapsed:.0f}s; counts (default/reversed): {table}"
    )
    report("6 tileworld phenomenon", ok, detail)
    assert elapsed < 300.0
    assert ok, (
        "tileworld ordering phenomenon not fully reproduced in this engine "
        "(the least-cost side holds: LCFR alone beats both delay strategies on "
        f"{lcfr_wins}); {detail}"
    )


def test_criterion_7_briefcase_variant():
    dom, probs = bundled("briefcase")
    variant = probs[1]
    assert variant.name == "get-paid-bc-at-work"
    results = {}
    for name in ("ZLIFO", "LCFR-DSep"):
        out = plan_search(dom, variant, builtin(name), SearchConfig(node_limit=LIMIT))
        assert out.solved, name
        results[name] = out.stats.nodes_generated
    ok = all(n <= 2000 for n in results.values())
    report("7 briefcase variant", ok, f"nodes: {results} (budget 2000 each)")
    assert ok, results


MICRO_CASES = {
    "blocks": [
        ("(on-table A) (on-table B) (on C A) (clear C) (clear B)", "(on C B)"),
        ("(on-table A) (on-table B) (on C A) (clear C) (clear B)", "(on-table C)"),
        ("(on-table A) (on-table B) (on C A) (clear C) (clear B)", "(on A B)"),
        ("(on-table A) (on-table B) (on C A) (clear C) (clear B)", "(on C B) (on-table A)"),
    ],
    "briefcase": [
        ("(bc-at home) (at dictionary home) (in paycheck)", "(in dictionary)"),
        ("(bc-at home) (at dictionary home) (in paycheck)", "(bc-at bank)"),
        ("(bc-at home) (at dictionary home) (in paycheck)", "(at paycheck home)"),
        ("(bc-at home) (at dictionary home) (in paycheck)", "(at paycheck bank)"),
        ("(bc-at home) (at dictionary home) (in paycheck)", "(bc-at bank) (in dictionary)"),
    ],
    "tileworld": [
        ("(at start) (tile-at t1 depot) (hole-at h1 field) (empty s1)", "(at depot)"),
        ("(at start) (tile-at t1 depot) (hole-at h1 field) (empty s1)", "(holding s1 t1)"),
        ("(at depot) (tile-at t1 depot) (hole-at h1 field) (empty s1)", "(tile-at t1 depot) (at field)"),
    ],
}

MICRO_OBJECTS = {
    "blocks": "A B C",
    "briefcase": "home office bank paycheck dictionary",
    "tileworld": "start depot field t1 h1 s1",
}


def test_criterion_8_completeness_on_two_action_problems():
    checked = 0
    for domname, cases in MICRO_CASES.items():
        dom, _ = bundled(domname)
        for i, (init, goal) in enumerate(cases):
            prob = parse_problem(
                f"(define (problem micro-{domname}-{i}) (:domain {dom.name})"
                f" (:objects {MICRO_OBJECTS[domname]})"
                f" (:init {init}) (:goal (and {goal})))",
                dom,
            )
            depth = oracle.optimal_length(dom, prob, max_depth=2)
            assert depth is not None and depth <= 2, (prob.name, depth)
            for name in builtin_names():
                out = plan_search(dom, prob, builtin(name), SearchConfig(node_limit=LIMIT))
                assert out.solved, f"{name} failed on {prob.name}"
                assert validate_solution(out.plan, dom, prob), (name, prob.name)
                checked += 1
    report("8 completeness", True, f"{checked} (micro-problem x strategy) runs all solved")


def test_criterion_9_bench_determinism():
    dom, probs = bundled("blocks")
    tasks = [(dom, p) for p in probs]
    strategies = [builtin(n) for n in ("UCPOP", "LCFR", "ZLIFO", "QLCFR")]
    config = SearchConfig(rank=parse_rank("S+OC"), node_limit=LIMIT, seed=7)
    a_records, a_table = run_matrix(tasks, strategies, config, (NODE_KIND,))
    b_records, b_table = run_matrix(tasks, strategies, config, (NODE_KIND,))
    nodes_equal = [r.nodes for r in a_records] == [r.nodes for r in b_records]
    bytes_equal = render_csv(a_records, a_table) == render_csv(b_records, b_table)
    report("9 determinism", nodes_equal and bytes_equal,
           f"{len(a_records)} cells, nodes {'==' if nodes_equal else '!='}, CSV bytes {'==' if bytes_equal else '!='}")
    assert nodes_equal and bytes_equal


def test_criterion_10_cached_cost_divergence():
    dom = parse_domain(
        """
(define (domain cache-demo)
  (:predicates (on ?x ?y) (go))
  (:operator mk-on
    :parameters (?x ?y)
    :precondition (and (go))
    :effect (and (on ?x ?y))))
"""
    )
    A, B = const("A"), const("B")
    producer = Step(2, "mk-on", (), (), (lit("on", A, B),), 0)
    consumer = Step(3, "consumer", (), (lit("on", A, B),), (), 0)
    open_flaw = Flaw(OPEN, 3, lit("on", A, B), None, inserted_at=4)
    base = plan_with(steps=(producer, consumer), agenda=(open_flaw,))
    # cost computed once, at insertion: the reuse candidate plus the library
    insertion_cost = len(enumerate_open_repairs(base, open_flaw, dom))
    flaw = Flaw(OPEN, 3, lit("on", A, B), None, inserted_at=4, cached_cost=insertion_cost)
    cached_plan = plan_with(steps=(producer, consumer), agenda=(flaw,))
    assert insertion_cost == 2

    # promote the candidate producer past the consumer
    moved = add_ordering(cached_plan, 3, 2)
    exact = repair_cost(moved, flaw, dom, mode="exact")
    cached = repair_cost(moved, flaw, dom, mode="cached")
    ok = exact == 1 and cached == insertion_cost
    report("10 cached-cost divergence", ok, f"insertion={insertion_cost}, exact-after-promotion={exact}, cached={cached}")
    assert ok
