"""Digit-sequence integers for traced algorithms.

TInt stores a non-negative integer as base-10 digits, least significant
first, so reading or stripping the low digit is O(1). Rendering reverses
to the usual most-significant-first order with single spaces between
digits ("1 9 2"). DigitBuffer is the mutable companion used while an
algorithm accumulates result digits; it keeps raw display order and may
carry leading zeros until canonicalized.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "TInt",
    "DigitBuffer",
    "tint",
    "tint_from_digits",
    "parse",
    "render",
    "to_int",
    "eq",
    "is_zero",
    "less_than",
    "lsd",
    "strip_lsd",
    "append_lsd",
    "length",
]


@dataclass(frozen=True, slots=True)
class TInt:
    """Canonical non-negative integer as digits, least significant first."""

    digits: tuple[int, ...]

    def __post_init__(self) -> None:
        if not self.digits:
            raise ValueError("TInt requires at least one digit")
        for d in self.digits:
            if not isinstance(d, int) or not 0 <= d <= 9:
                raise ValueError(f"digit out of range: {d!r}")
        if len(self.digits) > 1 and self.digits[-1] == 0:
            raise ValueError("most significant digit may not be zero")

    def __int__(self) -> int:
        return to_int(self)

    def __str__(self) -> str:
        return render(self)


def tint(value: int) -> TInt:
    """Build a TInt from a non-negative Python int."""
    if value < 0:
        raise ValueError("TInt values are non-negative")
    if value == 0:
        return TInt((0,))
    digits = []
    while value:
        value, d = divmod(value, 10)
        digits.append(d)
    return TInt(tuple(digits))


def tint_from_digits(digits) -> TInt:
    """Build a TInt from most-significant-first digits, stripping leading zeros."""
    digits = list(digits)
    if not digits:
        raise ValueError("empty digit sequence")
    for d in digits:
        if not isinstance(d, int) or not 0 <= d <= 9:
            raise ValueError(f"digit out of range: {d!r}")
    while len(digits) > 1 and digits[0] == 0:
        digits.pop(0)
    return TInt(tuple(reversed(digits)))


def parse(text: str) -> TInt:
    """Inverse of render: "1 9 2" -> TInt 192."""
    parts = text.split(" ")
    if not parts or any(len(p) != 1 or not p.isdigit() for p in parts):
        raise ValueError(f"not a rendered TInt: {text!r}")
    return tint_from_digits(int(p) for p in parts)


def render(t: TInt) -> str:
    return " ".join(str(d) for d in reversed(t.digits))


def to_int(t: TInt) -> int:
    value = 0
    for d in reversed(t.digits):
        value = value * 10 + d
    return value


def eq(a: TInt, b: TInt) -> bool:
    return a.digits == b.digits


def is_zero(t: TInt) -> bool:
    return t.digits == (0,)


def less_than(a: TInt, b: TInt) -> bool:
    if is_zero(a) and is_zero(b):
        return False
    if len(a.digits) != len(b.digits):
        return len(a.digits) < len(b.digits)
    return a.digits[::-1] < b.digits[::-1]


def lsd(t: TInt) -> TInt:
    """Least significant digit as a single-digit TInt."""
    return TInt((t.digits[0],))


def strip_lsd(t: TInt) -> TInt:
    """Drop the least significant digit; strip_lsd(5) = 0, strip_lsd(0) = 0."""
    if len(t.digits) == 1:
        return TInt((0,))
    return TInt(t.digits[1:])


def append_lsd(t: TInt, d: int) -> TInt:
    """Append a digit at the low end: append_lsd(19, 2) = 192."""
    if not 0 <= d <= 9:
        raise ValueError(f"digit out of range: {d!r}")
    if is_zero(t):
        return TInt((d,))
    return TInt((d,) + t.digits)


def length(t: TInt) -> int:
    return len(t.digits)


class DigitBuffer:
    """Mutable digit accumulator kept in display order (most significant first).

    Unlike TInt it may be empty (renders as "0") or carry leading zeros
    while a trace is in progress; to_tint canonicalizes at the end.
    """

    __slots__ = ("digits",)

    def __init__(self, digits=None) -> None:
        self.digits: list[int] = list(digits) if digits else []

    @classmethod
    def accumulator(cls, start: TInt) -> "DigitBuffer":
        """Buffer seeded from a starting value; zero starts empty."""
        if is_zero(start):
            return cls()
        return cls(reversed(start.digits))

    @classmethod
    def digits_of(cls, t: TInt) -> "DigitBuffer":
        """The full display digit sequence of t, including a lone zero."""
        return cls(reversed(t.digits))

    def push_high(self, t: TInt) -> None:
        """Prepend t's digits at the most significant end."""
        self.digits[:0] = reversed(t.digits)

    def push_low(self, t: TInt) -> None:
        """Append t's digits at the least significant end."""
        self.digits.extend(reversed(t.digits))

    def pop_high(self) -> TInt:
        """Remove and return the most significant digit."""
        if not self.digits:
            raise ValueError("pop from empty DigitBuffer")
        return TInt((self.digits.pop(0),))

    def __len__(self) -> int:
        return len(self.digits)

    def render(self) -> str:
        if not self.digits:
            return "0"
        return " ".join(str(d) for d in self.digits)

    def to_tint(self) -> TInt:
        if not self.digits:
            return TInt((0,))
        return tint_from_digits(self.digits)
