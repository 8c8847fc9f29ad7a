"""Shared test helpers: trace runners and independent big-integer oracles."""

from algocot.algorithms import Task, trace_task
from algocot.dataset import postprocess
from algocot.tint import tint
from algocot.tracing import TraceContext


def run_trace(task, values, **ctx_kwargs):
    """Trace a task over plain ints; returns (problem, cot_lines, answer)."""
    ctx = TraceContext(**ctx_kwargs)
    operands = [tint(v) for v in values]
    trace_task(ctx, task, operands)
    return postprocess(ctx.events)


def trace_text(task, values) -> str:
    problem, lines, answer = run_trace(task, values)
    return "\n".join([problem, *lines, answer])


def spaced(n: int) -> str:
    return " ".join(str(n))


def oracle_answer(task, values) -> str:
    """Expected rendered answer computed with Python int arithmetic only."""
    if task is Task.ADD:
        return spaced(values[0] + values[1])
    if task is Task.SUB:
        return spaced(values[0] - values[1])
    if task is Task.MUL:
        return spaced(values[0] * values[1])
    if task is Task.DIV:
        return spaced(values[0] // values[1])
    if task is Task.MEDIAN:
        ordered = sorted(values)
        n = len(ordered)
        if n % 2 == 1:
            return spaced(ordered[n // 2])
        total = ordered[n // 2 - 1] + ordered[n // 2]
        q, r = divmod(total, 2)
        return f"{spaced(q)} . 5" if r else spaced(q)
    raise ValueError(f"no oracle for {task!r}")


def parse_problem(task_name: str, problem: str) -> list[int]:
    """Recover operand ints from a rendered problem line."""
    ops = {"add": " + ", "sub": " - ", "mul": " * ", "div": " / "}
    if task_name == "median":
        body = problem.removeprefix("median ")
        return [int(part.replace(" ", "")) for part in body.split(" , ")]
    left, right = problem.split(ops[task_name])
    return [int(left.replace(" ", "")), int(right.replace(" ", ""))]
