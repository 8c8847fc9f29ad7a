"""Grade-school algorithms traced over digit integers.

Each algorithm threads a TraceContext and emits one assignment line per
step: extract a digit, strip it, combine, accumulate. Small digit
arithmetic (a sum or product of single digits plus a carry) is atomic and
leaves no events; the larger accumulations inside multiplication and the
trial subtractions inside division run as real sub-calls wrapped in
invisible scopes, so they compute normally but stay out of the trace.
Median is the one task that keeps its addition sub-call fully visible.

Variable names per algorithm are part of the output contract:

  add:    x, y, res, carry, digx, digy, ds
  sub:    x, y, res, borrow, digx, digy, dd
  mul:    x, y, out_res, carry, mag, fac, x_c, in_res, term, dm
  div:    x, y, q, rem, dig, t
  halve:  h, hd, hq, hr
  sort:   xs, min
  median: sort names plus mid, a, b, and the add/halve names
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

from .tint import (
    DigitBuffer,
    TInt,
    is_zero,
    less_than,
    lsd,
    render,
    strip_lsd,
    tint,
    to_int,
)
from .tracing import TraceContext, render_value

__all__ = [
    "Task",
    "MIXED_TASKS",
    "MedianValue",
    "PreconditionError",
    "PROTOCOLS",
    "add",
    "sub",
    "mul",
    "div",
    "halve",
    "selection_sort",
    "median",
    "problem_text",
    "trace_task",
]


class Task(str, Enum):
    ADD = "add"
    SUB = "sub"
    MUL = "mul"
    DIV = "div"
    MEDIAN = "median"
    MIXED = "mixed"


MIXED_TASKS = (Task.ADD, Task.SUB, Task.MUL, Task.DIV)

_OPERATORS = {Task.ADD: "+", Task.SUB: "-", Task.MUL: "*", Task.DIV: "/"}


class PreconditionError(ValueError):
    """An algorithm was called with operands outside its domain."""


@dataclass(frozen=True, slots=True)
class MedianValue:
    """A median result: an integer plus a half flag for even-length lists."""

    value: TInt
    half: bool

    def render(self) -> str:
        text = render(self.value)
        return f"{text} . 5" if self.half else text


_ADD_NAMES = frozenset({"x", "y", "res", "carry", "digx", "digy", "ds"})
_SUB_NAMES = frozenset({"x", "y", "res", "borrow", "digx", "digy", "dd"})
_MUL_NAMES = frozenset(
    {"x", "y", "out_res", "carry", "mag", "fac", "x_c", "in_res", "term", "dm"}
)
_DIV_NAMES = frozenset({"x", "y", "q", "rem", "dig", "t"})
_HALVE_NAMES = frozenset({"h", "hd", "hq", "hr"})
_SORT_NAMES = frozenset({"xs", "min"})

PROTOCOLS = {
    Task.ADD: _ADD_NAMES,
    Task.SUB: _SUB_NAMES,
    Task.MUL: _MUL_NAMES,
    Task.DIV: _DIV_NAMES,
    Task.MEDIAN: _SORT_NAMES | {"mid", "a", "b"} | _ADD_NAMES | _HALVE_NAMES,
}


def _bind_pair(ctx: TraceContext, x: TInt, y: TInt) -> None:
    # traces open with the single combined line "x = X , y = Y"
    ctx.assign("x", x)
    ctx.assign("y", y, join_prev=True)


def add(ctx: TraceContext, x: TInt, y: TInt) -> TInt:
    _bind_pair(ctx, x, y)
    res = DigitBuffer.accumulator(ctx.init("res", tint(0)))
    carry = ctx.init("carry", tint(0))
    while not (is_zero(x) and is_zero(y)):
        digx = lsd(x)
        ctx.assign("digx", digx)
        digy = lsd(y)
        ctx.assign("digy", digy)
        x = strip_lsd(x)
        ctx.assign("x", x)
        y = strip_lsd(y)
        ctx.assign("y", y)
        ds = tint(to_int(digx) + to_int(digy) + to_int(carry))
        ctx.assign("ds", ds)
        res.push_high(lsd(ds))
        ctx.assign("res", res)
        carry = strip_lsd(ds)
        ctx.assign("carry", carry)
    if not is_zero(carry):
        res.push_high(carry)
        ctx.assign("res", res)
    return res.to_tint()


def sub(ctx: TraceContext, x: TInt, y: TInt) -> TInt:
    if less_than(x, y):
        raise PreconditionError("subtraction requires x >= y")
    _bind_pair(ctx, x, y)
    res = DigitBuffer.accumulator(ctx.init("res", tint(0)))
    borrow = ctx.init("borrow", tint(0))
    while not (is_zero(x) and is_zero(y)):
        digx = lsd(x)
        ctx.assign("digx", digx)
        digy = lsd(y)
        ctx.assign("digy", digy)
        x = strip_lsd(x)
        ctx.assign("x", x)
        y = strip_lsd(y)
        ctx.assign("y", y)
        d = to_int(digx) - to_int(digy) - to_int(borrow)
        b = 0
        while d < 0:
            d += 10
            b += 1
        dd = tint(d)
        ctx.assign("dd", dd)
        res.push_high(dd)
        ctx.assign("res", res)
        borrow = tint(b)
        ctx.assign("borrow", borrow)
    return res.to_tint()


def mul(ctx: TraceContext, x: TInt, y: TInt) -> TInt:
    _bind_pair(ctx, x, y)
    out_res = ctx.init("out_res", tint(0))
    carry = ctx.init("carry", tint(0))
    mag = ctx.init("mag", tint(0))
    while not is_zero(y):
        fac = lsd(y)
        ctx.assign("fac", fac)
        y = strip_lsd(y)
        ctx.assign("y", y)
        x_c = x
        ctx.assign("x_c", x_c)
        in_res = DigitBuffer.accumulator(ctx.init("in_res", tint(0)))
        while not is_zero(x_c):
            term = lsd(x_c)
            ctx.assign("term", term)
            x_c = strip_lsd(x_c)
            ctx.assign("x_c", x_c)
            dm = tint(to_int(term) * to_int(fac))
            ctx.assign("dm", dm)
            if not is_zero(carry):
                dm = tint(to_int(dm) + to_int(carry))
                ctx.assign("dm", dm)
            in_res.push_high(lsd(dm))
            ctx.assign("in_res", in_res)
            carry = strip_lsd(dm)
            ctx.assign("carry", carry)
        if not is_zero(carry):
            in_res.push_high(carry)
            ctx.assign("in_res", in_res)
            carry = tint(0)
            ctx.assign("carry", carry)
        for _ in range(to_int(mag)):
            in_res.push_low(tint(0))
        ctx.assign("in_res", in_res)
        mag = tint(to_int(mag) + (0 if is_zero(y) else 1))
        ctx.assign("mag", mag)
        with ctx.invisible():
            out_res = add(ctx, out_res, in_res.to_tint())
        ctx.assign("out_res", out_res)
    return out_res


def div(ctx: TraceContext, x: TInt, y: TInt) -> TInt:
    if is_zero(y):
        raise PreconditionError("division by zero")
    _bind_pair(ctx, x, y)
    q = DigitBuffer.accumulator(ctx.init("q", tint(0)))
    rem = ctx.init("rem", tint(0))
    pending = DigitBuffer.digits_of(x)
    while len(pending) > 0:
        dig = pending.pop_high()
        ctx.assign("dig", dig)
        ctx.assign("x", pending)
        rem = tint(to_int(rem) * 10 + to_int(dig))
        ctx.assign("rem", rem)
        # grade-school trial: how many times does y fit, digit range [0, 9]
        t_count = 0
        while t_count < 9 and not less_than(rem, y):
            with ctx.invisible():
                rem = sub(ctx, rem, y)
            t_count += 1
        t = tint(t_count)
        ctx.assign("t", t)
        ctx.assign("rem", rem)
        q.push_low(t)
        ctx.assign("q", q)
    return q.to_tint()


def halve(ctx: TraceContext, x: TInt) -> tuple[TInt, TInt]:
    ctx.assign("h", x)
    hq = DigitBuffer.accumulator(ctx.init("hq", tint(0)))
    hr = ctx.init("hr", tint(0))
    pending = DigitBuffer.digits_of(x)
    while len(pending) > 0:
        hd = pending.pop_high()
        ctx.assign("hd", hd)
        ctx.assign("h", pending)
        value = to_int(hr) * 10 + to_int(hd)
        hq.push_low(tint(value // 2))
        ctx.assign("hq", hq)
        hr = tint(value % 2)
        ctx.assign("hr", hr)
    return hq.to_tint(), hr


def selection_sort(ctx: TraceContext, xs: list[TInt]) -> list[TInt]:
    if not xs:
        raise PreconditionError("cannot sort an empty list")
    xs = list(xs)
    ctx.assign("xs", xs)
    for i in range(len(xs) - 1):
        m = i
        for j in range(i + 1, len(xs)):
            if less_than(xs[j], xs[m]):
                m = j
        ctx.assign("min", xs[m])
        xs[i], xs[m] = xs[m], xs[i]
        ctx.assign("xs", xs)
    return xs


def median(ctx: TraceContext, xs: list[TInt]) -> MedianValue:
    if not xs:
        raise PreconditionError("cannot take the median of an empty list")
    ordered = selection_sort(ctx, xs)
    n = len(ordered)
    if n % 2 == 1:
        mid = ctx.init("mid", ordered[n // 2])
        return MedianValue(mid, False)
    a = ctx.init("a", ordered[n // 2 - 1])
    b = ctx.init("b", ordered[n // 2])
    total = add(ctx, a, b)
    quotient, remainder = halve(ctx, total)
    return MedianValue(quotient, not is_zero(remainder))


def problem_text(task: Task, operands: list[TInt]) -> str:
    if task is Task.MEDIAN:
        return "median " + " , ".join(render(o) for o in operands)
    if task in _OPERATORS:
        x, y = operands
        return f"{render(x)} {_OPERATORS[task]} {render(y)}"
    raise ValueError(f"no problem form for task {task!r}")


def trace_task(ctx: TraceContext, task: Task, operands: list[TInt]):
    """Run one task end to end: problem line, algorithm, answer line."""
    if task not in PROTOCOLS:
        raise ValueError(f"cannot trace task {task!r} directly")
    ctx.protocol = PROTOCOLS[task]
    ctx.problem(problem_text(task, operands))
    if task is Task.ADD:
        result = add(ctx, operands[0], operands[1])
    elif task is Task.SUB:
        result = sub(ctx, operands[0], operands[1])
    elif task is Task.MUL:
        result = mul(ctx, operands[0], operands[1])
    elif task is Task.DIV:
        result = div(ctx, operands[0], operands[1])
    else:
        result = median(ctx, list(operands))
    ctx.answer(render_value(result))
    return result
