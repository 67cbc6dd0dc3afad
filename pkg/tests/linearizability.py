"""Small Wing-Gong style linearizability checker for store histories.

An operation record carries invocation/response timestamps and the
observed outcome. ``check`` searches for a sequential order that respects
real-time precedence and replays identically against a reference model of
the store (desk scale: <= 32 ops, DFS with memoized visited states).
"""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Op:
    kind: str  # create | write_cas | incr | delete | read
    path: str
    args: tuple
    outcome: object  # return value, or "ERR:<code>"
    start: float
    end: float


def _freeze(state: dict) -> tuple:
    return tuple(sorted(state.items()))


def _apply(state: dict, op: Op):
    """Replay op on the model; returns (outcome, new_state) or None on mismatch."""
    node = state.get(op.path)  # (data, version)
    if op.kind == "create":
        if node is not None:
            outcome = "ERR:ALREADY_EXISTS"
            new_state = state
        else:
            outcome = 0
            new_state = {**state, op.path: (op.args[0], 0)}
    elif op.kind == "write_cas":
        data, expected = op.args
        if node is None:
            outcome, new_state = "ERR:NOT_FOUND", state
        elif node[1] != expected:
            outcome, new_state = "ERR:VERSION_CONFLICT", state
        else:
            outcome = node[1] + 1
            new_state = {**state, op.path: (data, node[1] + 1)}
    elif op.kind == "incr":
        (delta,) = op.args
        if node is None:
            outcome, new_state = "ERR:NOT_FOUND", state
        else:
            try:
                pre = int(node[0].decode("ascii"))
                if pre < 0:
                    raise ValueError
            except (ValueError, UnicodeDecodeError):
                return (
                    {**state} if op.outcome == "ERR:MALFORMED_COUNTER" else None
                )
            outcome = (pre, pre + delta)
            new_state = {**state, op.path: (str(pre + delta).encode(), node[1] + 1)}
    elif op.kind == "delete":
        if node is None:
            outcome, new_state = "ERR:NOT_FOUND", state
        else:
            outcome = None
            new_state = {k: v for k, v in state.items() if k != op.path}
    elif op.kind == "read":
        if node is None:
            outcome, new_state = "ERR:NOT_FOUND", state
        else:
            outcome, new_state = node, state
    else:
        raise ValueError(op.kind)
    if outcome != op.outcome:
        return None
    return new_state


def check(history: list[Op], initial: dict | None = None) -> bool:
    """True iff some sequential order matches real time and the model."""
    initial = dict(initial or {})
    n = len(history)
    seen: set[tuple] = set()

    def dfs(done: frozenset, state: dict) -> bool:
        if len(done) == n:
            return True
        key = (done, _freeze(state))
        if key in seen:
            return False
        seen.add(key)
        pending = [i for i in range(n) if i not in done]
        # real-time constraint: an op is schedulable only if no pending op
        # finished before it started
        horizon = min(history[i].end for i in pending)
        for i in pending:
            if history[i].start > horizon:
                continue
            new_state = _apply(state, history[i])
            if new_state is None:
                continue
            if dfs(done | {i}, new_state):
                return True
        return False

    return dfs(frozenset(), initial)
