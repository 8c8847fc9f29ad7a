"""Deterministic input sampling for task generation.

Two operand distributions: magnitude sampling draws an integer uniformly
from [lower, upper]; length sampling first draws a digit count, then a
non-zero leading digit and uniform remaining digits. Length sampling is
the default since it spreads operand sizes evenly. Every sample's draws
come from an RNG seeded by hashing (master seed, sample index), so any
sample regenerates in isolation and parallel generation order is
irrelevant.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from typing import Union

from .algorithms import MIXED_TASKS, Task

__all__ = [
    "MagnitudeSampler",
    "LengthSampler",
    "SamplerSpec",
    "TaskInputSpec",
    "default_sampler",
    "default_input_spec",
    "sampler_from_dict",
    "sample_magnitude",
    "sample_length",
    "sample_value",
    "resolve_task",
    "sample_task_inputs",
    "sample_seed",
    "stream_rng",
]


@dataclass(frozen=True, slots=True)
class MagnitudeSampler:
    lower: int
    upper: int

    def __post_init__(self) -> None:
        if self.lower < 0 or self.lower > self.upper:
            raise ValueError("magnitude sampler requires 0 <= lower <= upper")

    def to_dict(self) -> dict:
        return {"kind": "magnitude", "lower": self.lower, "upper": self.upper}


@dataclass(frozen=True, slots=True)
class LengthSampler:
    min_len: int
    max_len: int

    def __post_init__(self) -> None:
        if self.min_len < 1 or self.min_len > self.max_len:
            raise ValueError("length sampler requires 1 <= min_len <= max_len")

    def to_dict(self) -> dict:
        return {"kind": "length", "min_len": self.min_len, "max_len": self.max_len}


SamplerSpec = Union[MagnitudeSampler, LengthSampler]


def sampler_from_dict(data: dict) -> SamplerSpec:
    kind = data.get("kind")
    if kind == "magnitude":
        return MagnitudeSampler(int(data["lower"]), int(data["upper"]))
    if kind == "length":
        return LengthSampler(int(data.get("min_len", 1)), int(data["max_len"]))
    raise ValueError(f"unknown sampler kind: {kind!r}")


def default_sampler(task: Task) -> LengthSampler:
    """Per-task digit ranges: 10 digits for add/sub, 5 for mul/div and median elements."""
    if task in (Task.ADD, Task.SUB):
        return LengthSampler(1, 10)
    return LengthSampler(1, 5)


@dataclass(frozen=True, slots=True)
class TaskInputSpec:
    """Operand sampler plus the per-task structural constraints."""

    task: Task
    sampler: SamplerSpec
    min_list_len: int = 1
    max_list_len: int = 10

    def __post_init__(self) -> None:
        if self.min_list_len < 1 or self.min_list_len > self.max_list_len:
            raise ValueError("list length range requires 1 <= min <= max")


def default_input_spec(task: Task, sampler: SamplerSpec = None, max_list_len: int = 10) -> TaskInputSpec:
    if sampler is None:
        sampler = default_sampler(task)
    return TaskInputSpec(task, sampler, max_list_len=max_list_len)


def sample_magnitude(rng: random.Random, lower: int, upper: int) -> int:
    if lower < 0 or lower > upper:
        raise ValueError("requires 0 <= lower <= upper")
    return rng.randint(lower, upper)


def sample_length(rng: random.Random, min_len: int, max_len: int) -> int:
    """Uniform digit count, non-zero leading digit, uniform remaining digits."""
    if min_len < 1 or min_len > max_len:
        raise ValueError("requires 1 <= min_len <= max_len")
    d = rng.randint(min_len, max_len)
    value = rng.randint(1, 9)
    for _ in range(d - 1):
        value = value * 10 + rng.randint(0, 9)
    return value


def sample_value(rng: random.Random, sampler: SamplerSpec) -> int:
    if isinstance(sampler, MagnitudeSampler):
        return sample_magnitude(rng, sampler.lower, sampler.upper)
    return sample_length(rng, sampler.min_len, sampler.max_len)


def resolve_task(rng: random.Random, task: Task) -> Task:
    """Collapse the mixed task to a concrete one, 25% each."""
    if task is Task.MIXED:
        return MIXED_TASKS[rng.randrange(len(MIXED_TASKS))]
    return task


def sample_task_inputs(rng: random.Random, spec: TaskInputSpec) -> list[int]:
    task = spec.task
    if task is Task.MEDIAN:
        n = rng.randint(spec.min_list_len, spec.max_list_len)
        return [sample_value(rng, spec.sampler) for _ in range(n)]
    if task is Task.SUB:
        a = sample_value(rng, spec.sampler)
        b = sample_value(rng, spec.sampler)
        if a < b:
            a, b = b, a
        return [a, b]
    if task is Task.DIV:
        a = sample_value(rng, spec.sampler)
        b = sample_value(rng, spec.sampler)
        while b == 0:
            b = sample_value(rng, spec.sampler)
        return [a, b]
    if task in (Task.ADD, Task.MUL):
        return [sample_value(rng, spec.sampler), sample_value(rng, spec.sampler)]
    raise ValueError(f"cannot sample inputs for task {task!r}")


def sample_seed(master_seed: int, index: int) -> int:
    """Stable per-sample seed derived from the master seed and index."""
    digest = hashlib.sha256(f"{master_seed}:{index}".encode()).digest()
    return int.from_bytes(digest[:8], "big")


def stream_rng(seed: int, label: str) -> random.Random:
    """A named child stream, so input draws and noise draws never interleave."""
    digest = hashlib.sha256(f"{seed}:{label}".encode()).digest()
    return random.Random(int.from_bytes(digest, "big"))
