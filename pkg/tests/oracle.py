"""Independent ground forward-search oracle used by the tests.

Breadth-first search over closed-world ground states, with operators
ground by brute-force enumeration over the object universe.  This is
deliberately the dumbest correct planner imaginable: it shares no code
with the plan-space engine it checks.
"""

from __future__ import annotations

from collections import deque
from itertools import product

GroundLiteral = tuple[bool, str, tuple[str, ...]]
Atom = tuple[str, tuple[str, ...]]
Action = tuple[str, tuple[str, ...]]


def _ground(schema, mapping) -> GroundLiteral:
    return (schema.positive, schema.pred, tuple(mapping.get(a, a) for a in schema.args))


def ground_actions(domain, objects):
    """Every total instantiation of every operator."""
    out = []
    for op in domain.operators:
        for combo in product(objects, repeat=len(op.params)):
            mapping = dict(zip(op.params, combo))
            pre = tuple(_ground(l, mapping) for l in op.preconds)
            eff = tuple(_ground(l, mapping) for l in op.effects)
            out.append(((op.name, combo), pre, eff))
    return out


def holds(state: frozenset[Atom], literal: GroundLiteral) -> bool:
    positive, pred, args = literal
    return ((pred, args) in state) == positive


def apply_effects(state: frozenset[Atom], effects) -> frozenset[Atom]:
    new = set(state)
    for positive, pred, args in effects:
        if not positive:
            new.discard((pred, args))
    for positive, pred, args in effects:
        if positive:
            new.add((pred, args))
    return frozenset(new)


def initial_state(problem) -> frozenset[Atom]:
    return frozenset((l.pred, tuple(t.name for t in l.args)) for l in problem.init)


def goal_literals(problem):
    return [(l.positive, l.pred, tuple(t.name for t in l.args)) for l in problem.goal]


def universe(domain, problem) -> tuple[str, ...]:
    return tuple(problem.objects) + tuple(c for c in domain.constants if c not in problem.objects)


def solve(domain, problem, max_depth: int, max_states: int = 2_000_000):
    """Shortest ground plan up to max_depth actions, or None."""
    actions = ground_actions(domain, universe(domain, problem))
    goals = goal_literals(problem)
    start = initial_state(problem)
    if all(holds(start, g) for g in goals):
        return []
    seen = {start}
    frontier = deque([(start, [])])
    while frontier:
        state, path = frontier.popleft()
        if len(path) >= max_depth:
            continue
        for action, pre, eff in actions:
            if not all(holds(state, p) for p in pre):
                continue
            nxt = apply_effects(state, eff)
            if nxt in seen:
                continue
            seen.add(nxt)
            if len(seen) > max_states:
                raise RuntimeError("oracle state budget exceeded")
            nxt_path = path + [action]
            if all(holds(nxt, g) for g in goals):
                return nxt_path
            frontier.append((nxt, nxt_path))
    return None


def optimal_length(domain, problem, max_depth: int) -> int | None:
    plan = solve(domain, problem, max_depth)
    return None if plan is None else len(plan)


def execute(domain, problem, actions: list[Action]) -> bool:
    """Run a scripted ground plan; True iff every precondition held and
    the goal holds at the end."""
    index = {}
    for op in domain.operators:
        index[op.name] = op
    state = initial_state(problem)
    for name, args in actions:
        op = index[name]
        if len(args) != len(op.params):
            return False
        mapping = dict(zip(op.params, args))
        for l in op.preconds:
            if not holds(state, _ground(l, mapping)):
                return False
        state = apply_effects(state, tuple(_ground(l, mapping) for l in op.effects))
    return all(holds(state, g) for g in goal_literals(problem))
