"""Noise models for generated traces.

Three kinds, one active per dataset: static character noise flips digits
in the finished trace text, static line noise deletes intermediate lines,
and dynamic noise corrupts traced values at initialization time so the
error propagates through the rest of the computation. The dataset noise
level n_d gates which samples receive the active kind at all; the
per-kind intensity (n_c, n_l, n_dl) controls how hard a noised sample is
hit. Problem lines are never touched by any kind.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .tint import TInt, tint_from_digits

__all__ = [
    "NoiseConfig",
    "NOISE_KINDS",
    "INTENSITY_NAMES",
    "select_noised",
    "apply_char_noise",
    "apply_line_noise",
    "corrupt_digits",
    "corrupt_init",
]

NOISE_KINDS = ("none", "char", "line", "dynamic")
INTENSITY_NAMES = {"char": "n_c", "line": "n_l", "dynamic": "n_dl"}


@dataclass(frozen=True, slots=True)
class NoiseConfig:
    """Dataset noise level n_d plus exactly one kind with its intensity."""

    kind: str = "none"
    n_d: float = 0.0
    intensity: float = 0.0
    # char noise only: flip to a digit different from the original, so the
    # intensity is the true change rate (False draws uniformly over all 10)
    different_digit: bool = True

    def __post_init__(self) -> None:
        if self.kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind: {self.kind!r}")
        for label, p in (("n_d", self.n_d), ("intensity", self.intensity)):
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{label} must be in [0, 1], got {p!r}")

    @property
    def effective_n_d(self) -> float:
        return 0.0 if self.kind == "none" else self.n_d

    def to_dict(self) -> dict:
        if self.kind == "none":
            return {"kind": "none"}
        out = {"kind": self.kind, "n_d": self.n_d, INTENSITY_NAMES[self.kind]: self.intensity}
        if self.kind == "char":
            out["different_digit"] = self.different_digit
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "NoiseConfig":
        kind = data.get("kind", "none")
        if kind == "none":
            return cls()
        intensity = data.get("intensity")
        if intensity is None:
            intensity = data.get(INTENSITY_NAMES.get(kind, ""), 0.0)
        return cls(
            kind=kind,
            n_d=float(data.get("n_d", 0.0)),
            intensity=float(intensity),
            different_digit=bool(data.get("different_digit", True)),
        )


def select_noised(rng: random.Random, n_d: float) -> bool:
    """Dataset-level gate: should this sample receive noise at all."""
    if not 0.0 <= n_d <= 1.0:
        raise ValueError(f"n_d must be in [0, 1], got {n_d!r}")
    if n_d == 0.0:
        return False
    if n_d == 1.0:
        return True
    return rng.random() < n_d


def _flip(rng: random.Random, digit: int, different_digit: bool) -> int:
    if different_digit:
        return (digit + rng.randint(1, 9)) % 10
    return rng.randrange(10)


def apply_char_noise(
    rng: random.Random,
    cot_lines: list[str],
    answer: str,
    n_c: float,
    different_digit: bool = True,
) -> tuple[list[str], str, int, int]:
    """Flip digits in the CoT lines and the answer line, never the problem.

    Each digit character independently flips with probability n_c.
    Returns (new cot_lines, new answer, flip count, digit count).
    """
    flips = 0
    digits = 0

    def noise_line(line: str) -> str:
        nonlocal flips, digits
        out = []
        for ch in line:
            if ch.isdigit():
                digits += 1
                if n_c > 0.0 and rng.random() < n_c:
                    ch = str(_flip(rng, int(ch), different_digit))
                    flips += 1
            out.append(ch)
        return "".join(out)

    new_lines = [noise_line(line) for line in cot_lines]
    new_answer = noise_line(answer)
    return new_lines, new_answer, flips, digits


def apply_line_noise(
    rng: random.Random, cot_lines: list[str], n_l: float
) -> tuple[list[str], list[int]]:
    """Delete each intermediate line with probability n_l.

    Problem and answer lines are not part of cot_lines and always survive.
    Returns (kept lines, deleted indices).
    """
    kept = []
    deleted = []
    for i, line in enumerate(cot_lines):
        if n_l > 0.0 and rng.random() < n_l:
            deleted.append(i)
        else:
            kept.append(line)
    return kept, deleted


def corrupt_digits(rng: random.Random, t: TInt) -> TInt:
    """Redraw every digit of t uniformly over [0, 9], then re-canonicalize."""
    return tint_from_digits(rng.randrange(10) for _ in t.digits)


def corrupt_init(rng: random.Random, t: TInt, n_dl: float) -> TInt:
    """With probability n_dl corrupt a newly initialized TInt, else pass through."""
    if not 0.0 <= n_dl <= 1.0:
        raise ValueError(f"n_dl must be in [0, 1], got {n_dl!r}")
    if n_dl > 0.0 and rng.random() < n_dl:
        return corrupt_digits(rng, t)
    return t
