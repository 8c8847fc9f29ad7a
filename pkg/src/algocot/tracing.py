"""Trace event model and the execution context algorithms run inside.

Algorithms emit their chain of thought as a flat list of events: one
problem line, a stream of variable assignments (delta printing, only the
assigned variable appears on a line), optional code lines, and one answer
line. Visibility is scoped: inside an invisible region the computation
runs normally but nothing is appended. Dynamic noise hooks into variable
initialization so corrupted values propagate through everything
downstream.
"""

from __future__ import annotations

import random
from contextlib import contextmanager
from dataclasses import dataclass
from typing import Callable, Optional, Union

from .noise import corrupt_digits
from .tint import TInt, render

__all__ = [
    "ProblemLine",
    "Assign",
    "CodeLine",
    "AnswerLine",
    "TraceEvent",
    "CorruptionRecord",
    "TraceContext",
    "TraceShapeError",
    "render_value",
]


@dataclass(frozen=True, slots=True)
class ProblemLine:
    text: str
    ordinal: int


@dataclass(frozen=True, slots=True)
class Assign:
    var_name: str
    rendered_value: str
    ordinal: int
    # joined assigns share one output line, e.g. "x = 5 , y = 6"
    join_prev: bool = False


@dataclass(frozen=True, slots=True)
class CodeLine:
    text: str
    ordinal: int


@dataclass(frozen=True, slots=True)
class AnswerLine:
    text: str
    ordinal: int


TraceEvent = Union[ProblemLine, Assign, CodeLine, AnswerLine]


@dataclass(frozen=True, slots=True)
class CorruptionRecord:
    """One dynamic-noise hit: which init site, and the value before/after."""

    site: int
    var: str
    before: str
    after: str


class TraceShapeError(Exception):
    """A trace violated the one-problem/one-answer line discipline."""


def render_value(value) -> str:
    """Render any traceable value the way it appears on a trace line."""
    if isinstance(value, TInt):
        return render(value)
    if isinstance(value, (list, tuple)):
        return " , ".join(render_value(v) for v in value)
    renderer = getattr(value, "render", None)
    if callable(renderer):
        return renderer()
    raise TypeError(f"cannot render {type(value).__name__} in a trace")


class TraceContext:
    """Single-use event sink threaded through one traced execution.

    dynamic_noise is the per-init corruption probability (None disables
    it); rng supplies the corruption draws. corruption_injector replays
    recorded corruptions instead of drawing fresh ones: it is called at
    every init site and returns a replacement TInt or None.
    """

    def __init__(
        self,
        rng: Optional[random.Random] = None,
        dynamic_noise: Optional[float] = None,
        emit_code_lines: bool = False,
        protocol: Optional[frozenset] = None,
        corruption_injector: Optional[Callable[[int, str, TInt], Optional[TInt]]] = None,
    ) -> None:
        if dynamic_noise is not None and not 0.0 <= dynamic_noise <= 1.0:
            raise ValueError("dynamic_noise must be in [0, 1]")
        self.events: list[TraceEvent] = []
        self.invisibility_depth = 0
        self.rng = rng
        self.dynamic_noise = dynamic_noise
        self.emit_code_lines = emit_code_lines
        self.protocol = protocol
        self.corruptions: list[CorruptionRecord] = []
        self._init_count = 0
        self._injector = corruption_injector

    @property
    def visible(self) -> bool:
        return self.invisibility_depth == 0

    def problem(self, text: str) -> None:
        if self.events:
            raise TraceShapeError("problem line must be the first event")
        self.events.append(ProblemLine(text, len(self.events)))

    def answer(self, text: str) -> None:
        self.events.append(AnswerLine(text, len(self.events)))

    def assign(self, name: str, value, join_prev: bool = False) -> None:
        if not self.visible:
            return
        if self.protocol is not None and name not in self.protocol:
            raise TraceShapeError(f"variable {name!r} not in the active protocol")
        self.events.append(Assign(name, render_value(value), len(self.events), join_prev))

    def code(self, text: str) -> None:
        if self.emit_code_lines and self.visible:
            self.events.append(CodeLine(text, len(self.events)))

    def init(self, name: str, value: TInt) -> TInt:
        """Bind a newly initialized variable, applying dynamic noise if armed.

        Corruption happens before the value is recorded or returned, and
        applies inside invisible scopes too (only the event is suppressed).
        """
        site = self._init_count
        self._init_count += 1
        if self._injector is not None:
            replacement = self._injector(site, name, value)
            if replacement is not None:
                value = replacement
        elif self.dynamic_noise is not None and self.rng is not None:
            if self.rng.random() < self.dynamic_noise:
                corrupted = corrupt_digits(self.rng, value)
                self.corruptions.append(
                    CorruptionRecord(site, name, render(value), render(corrupted))
                )
                value = corrupted
        self.assign(name, value)
        return value

    @contextmanager
    def invisible(self):
        self.invisibility_depth += 1
        try:
            yield
        finally:
            self.invisibility_depth -= 1
