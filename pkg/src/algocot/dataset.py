"""Sample records, the generation pipeline, serialization, and statistics.

A dataset is one JSON object per line with the fields {id, task, problem,
cot_lines, answer, noised, noise, seed, meta}, plus a sibling manifest
carrying the generating spec, a content digest, and empirical noise
statistics. Generation is deterministic: every record depends only on
(spec, master seed, index), so parallel workers produce byte-identical
files and any record can be rebuilt in isolation, including replaying the
exact dynamic corruptions it saw.
"""

from __future__ import annotations

import hashlib
import json
import multiprocessing
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from functools import partial
from typing import Iterable, Iterator, Optional

from .algorithms import Task, trace_task
from .noise import NoiseConfig, apply_char_noise, apply_line_noise, select_noised
from .sampling import (
    SamplerSpec,
    default_input_spec,
    resolve_task,
    sample_seed,
    sample_task_inputs,
    sampler_from_dict,
    stream_rng,
)
from .tint import parse, render, tint
from .tracing import AnswerLine, Assign, CodeLine, ProblemLine, TraceContext, TraceShapeError

__all__ = [
    "SampleRecord",
    "DatasetSpec",
    "DatasetParseError",
    "ReplayError",
    "postprocess",
    "build_sample",
    "generate",
    "iter_records",
    "load_dataset",
    "load_manifest",
    "manifest_path_for",
    "dataset_stats",
    "StatsAccumulator",
    "replay_dynamic",
    "replay_matches",
    "write_atomic",
]

RECORD_FIELDS = ("id", "task", "problem", "cot_lines", "answer", "noised", "noise", "seed", "meta")


class DatasetParseError(Exception):
    """A dataset line failed to parse; carries the 1-based line number."""


class ReplayError(Exception):
    """A recorded corruption did not line up during replay."""


@dataclass(frozen=True, slots=True)
class SampleRecord:
    id: str
    task: str
    problem: str
    cot_lines: list[str]
    answer: str
    noised: bool
    noise: Optional[dict]
    seed: int
    meta: dict

    @property
    def text(self) -> str:
        """The rendered training text: problem, CoT lines, answer."""
        return "\n".join([self.problem, *self.cot_lines, self.answer])

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "task": self.task,
            "problem": self.problem,
            "cot_lines": list(self.cot_lines),
            "answer": self.answer,
            "noised": self.noised,
            "noise": self.noise,
            "seed": self.seed,
            "meta": self.meta,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SampleRecord":
        missing = [k for k in RECORD_FIELDS if k not in data]
        if missing:
            raise DatasetParseError(f"record missing fields: {missing}")
        return cls(
            id=data["id"],
            task=data["task"],
            problem=data["problem"],
            cot_lines=list(data["cot_lines"]),
            answer=data["answer"],
            noised=bool(data["noised"]),
            noise=data["noise"],
            seed=int(data["seed"]),
            meta=data["meta"],
        )


@dataclass(frozen=True, slots=True)
class DatasetSpec:
    task: Task
    count: int
    master_seed: int
    mode: str = "cot"
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    sampler: Optional[SamplerSpec] = None
    max_list_len: int = 10
    out: Optional[str] = None

    def __post_init__(self) -> None:
        if self.count <= 0:
            raise ValueError("count must be positive")
        if self.mode not in ("cot", "direct"):
            raise ValueError(f"mode must be 'cot' or 'direct', got {self.mode!r}")

    def to_dict(self) -> dict:
        return {
            "task": self.task.value,
            "count": self.count,
            "master_seed": self.master_seed,
            "mode": self.mode,
            "noise": self.noise.to_dict(),
            "sampler": self.sampler.to_dict() if self.sampler is not None else None,
            "max_list_len": self.max_list_len,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DatasetSpec":
        sampler = data.get("sampler")
        return cls(
            task=Task(data["task"]),
            count=int(data["count"]),
            master_seed=int(data["master_seed"]),
            mode=data.get("mode", "cot"),
            noise=NoiseConfig.from_dict(data.get("noise") or {}),
            sampler=sampler_from_dict(sampler) if sampler else None,
            max_list_len=int(data.get("max_list_len", 10)),
            out=data.get("out"),
        )


def postprocess(events, keep_code: bool = False) -> tuple[str, list[str], str]:
    """Flatten a finished event list into (problem, cot_lines, answer).

    Code lines are dropped unless keep_code; joined assigns merge onto one
    line. Raises TraceShapeError for anything but one problem line first
    and one answer line last.
    """
    if len(events) < 2:
        raise TraceShapeError("trace needs at least a problem and an answer line")
    first, last = events[0], events[-1]
    if not isinstance(first, ProblemLine) or not isinstance(last, AnswerLine):
        raise TraceShapeError("trace must start with a problem line and end with an answer line")
    lines: list[str] = []
    for ev in events[1:-1]:
        if isinstance(ev, Assign):
            text = f"{ev.var_name} = {ev.rendered_value}"
            if ev.join_prev and lines:
                lines[-1] = f"{lines[-1]} , {text}"
            else:
                lines.append(text)
        elif isinstance(ev, CodeLine):
            if keep_code:
                lines.append(ev.text)
        else:
            raise TraceShapeError(f"unexpected {type(ev).__name__} inside the trace body")
    return first.text, lines, last.text


def _sample_inputs(spec: DatasetSpec, rng) -> tuple[Task, list[int]]:
    task = resolve_task(rng, spec.task)
    input_spec = default_input_spec(task, spec.sampler, spec.max_list_len)
    return task, sample_task_inputs(rng, input_spec)


def build_sample(spec: DatasetSpec, index: int) -> SampleRecord:
    """Generate record number `index` of the dataset described by `spec`."""
    seed = sample_seed(spec.master_seed, index)
    rng_inputs = stream_rng(seed, "inputs")
    task, operand_ints = _sample_inputs(spec, rng_inputs)
    operands = [tint(v) for v in operand_ints]

    cfg = spec.noise
    rng_noise = stream_rng(seed, "noise")
    gated = select_noised(rng_noise, cfg.effective_n_d)
    dynamic = gated and cfg.kind == "dynamic"

    ctx = TraceContext(
        rng=rng_noise if dynamic else None,
        dynamic_noise=cfg.intensity if dynamic else None,
    )
    trace_task(ctx, task, operands)
    problem, cot_lines, answer = postprocess(ctx.events)

    noise_meta: Optional[dict] = None
    if dynamic:
        noise_meta = {
            "kind": "dynamic",
            "n_d": cfg.n_d,
            "n_dl": cfg.intensity,
            "inits": ctx._init_count,
            "sites": [
                {"site": c.site, "var": c.var, "before": c.before, "after": c.after}
                for c in ctx.corruptions
            ],
        }

    if spec.mode == "direct":
        cot_lines = []

    if gated and cfg.kind == "char":
        cot_lines, answer, flips, digits = apply_char_noise(
            rng_noise, cot_lines, answer, cfg.intensity, cfg.different_digit
        )
        noise_meta = {
            "kind": "char",
            "n_d": cfg.n_d,
            "n_c": cfg.intensity,
            "different_digit": cfg.different_digit,
            "flips": flips,
            "digits": digits,
        }
    elif gated and cfg.kind == "line":
        original = len(cot_lines)
        cot_lines, deleted = apply_line_noise(rng_noise, cot_lines, cfg.intensity)
        noise_meta = {
            "kind": "line",
            "n_d": cfg.n_d,
            "n_l": cfg.intensity,
            "lines": original,
            "deleted": deleted,
        }

    meta = {
        "index": index,
        "operand_lengths": [len(str(v)) for v in operand_ints],
        "list_length": len(operand_ints) if task is Task.MEDIAN else None,
    }
    return SampleRecord(
        id=f"{spec.task.value}-{spec.master_seed}-{index}",
        task=task.value,
        problem=problem,
        cot_lines=cot_lines,
        answer=answer,
        noised=gated,
        noise=noise_meta,
        seed=seed,
        meta=meta,
    )


def record_line(record: SampleRecord) -> str:
    return json.dumps(record.to_dict(), separators=(",", ":"))


def _build_line(spec: DatasetSpec, index: int) -> str:
    return record_line(build_sample(spec, index))


def iter_built_records(spec: DatasetSpec, workers: int = 1) -> Iterator[SampleRecord]:
    for line in iter_built_lines(spec, workers):
        yield SampleRecord.from_dict(json.loads(line))


def iter_built_lines(spec: DatasetSpec, workers: int = 1) -> Iterator[str]:
    """Serialized records in index order, fanned out to workers if asked."""
    if workers <= 1:
        for i in range(spec.count):
            yield _build_line(spec, i)
        return
    chunk = max(1, spec.count // (workers * 8))
    with multiprocessing.Pool(workers) as pool:
        yield from pool.imap(partial(_build_line, spec), range(spec.count), chunksize=chunk)


def write_atomic(path: str, content: str) -> None:
    tmp = f"{path}.tmp.{os.getpid()}"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(content)
    os.replace(tmp, path)


def manifest_path_for(path: str) -> str:
    base = path[: -len(".jsonl")] if path.endswith(".jsonl") else path
    return base + ".manifest.json"


def generate(spec: DatasetSpec, path: Optional[str] = None, workers: int = 1) -> dict:
    """Write the dataset and its manifest; returns the manifest."""
    path = path or spec.out
    if not path:
        raise ValueError("no output path given")
    digest = hashlib.sha256()
    acc = StatsAccumulator()
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        with open(tmp, "w", encoding="utf-8") as fh:
            for line in iter_built_lines(spec, workers):
                fh.write(line)
                fh.write("\n")
                digest.update(line.encode("utf-8"))
                digest.update(b"\n")
                acc.add(SampleRecord.from_dict(json.loads(line)))
        os.replace(tmp, path)
    finally:
        if os.path.exists(tmp):
            os.remove(tmp)
    manifest = {
        "spec": spec.to_dict(),
        "created": datetime.now(timezone.utc).isoformat(),
        "digest": digest.hexdigest(),
        "count": spec.count,
        "stats": acc.result(),
    }
    write_atomic(manifest_path_for(path), json.dumps(manifest, indent=2) + "\n")
    return manifest


def iter_records(path: str) -> Iterator[SampleRecord]:
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                yield SampleRecord.from_dict(json.loads(line))
            except (json.JSONDecodeError, DatasetParseError, KeyError, TypeError) as exc:
                raise DatasetParseError(f"{path}:{lineno}: {exc}") from exc


def load_dataset(path: str) -> list[SampleRecord]:
    return list(iter_records(path))


def load_manifest(path: str) -> dict:
    with open(manifest_path_for(path), "r", encoding="utf-8") as fh:
        return json.load(fh)


class StatsAccumulator:
    """Streaming dataset statistics, cheap enough to run during generation."""

    def __init__(self) -> None:
        self.count = 0
        self.noised = 0
        self.tasks: dict[str, int] = {}
        self.cot_lines_total = 0
        self.operand_len_hist: dict[int, int] = {}
        self.char_flips = 0
        self.char_digits = 0
        self.line_deleted = 0
        self.line_total = 0
        self.dynamic_hits = 0
        self.dynamic_inits = 0

    def add(self, record: SampleRecord) -> None:
        self.count += 1
        self.noised += 1 if record.noised else 0
        self.tasks[record.task] = self.tasks.get(record.task, 0) + 1
        self.cot_lines_total += len(record.cot_lines)
        for n in record.meta.get("operand_lengths", []):
            self.operand_len_hist[n] = self.operand_len_hist.get(n, 0) + 1
        noise = record.noise
        if not noise:
            return
        if noise.get("kind") == "char":
            self.char_flips += noise.get("flips", 0)
            self.char_digits += noise.get("digits", 0)
        elif noise.get("kind") == "line":
            self.line_deleted += len(noise.get("deleted", []))
            self.line_total += noise.get("lines", 0)
        elif noise.get("kind") == "dynamic":
            self.dynamic_hits += len(noise.get("sites", []))
            self.dynamic_inits += noise.get("inits", 0)

    def result(self) -> dict:
        out = {
            "count": self.count,
            "noised": self.noised,
            "noised_fraction": self.noised / self.count if self.count else 0.0,
            "tasks": dict(sorted(self.tasks.items())),
            "mean_cot_lines": self.cot_lines_total / self.count if self.count else 0.0,
            "operand_len_hist": {str(k): v for k, v in sorted(self.operand_len_hist.items())},
        }
        if self.char_digits:
            out["char_flip_rate"] = self.char_flips / self.char_digits
        if self.line_total:
            out["line_deletion_rate"] = self.line_deleted / self.line_total
        if self.dynamic_inits:
            out["dynamic_corruption_rate"] = self.dynamic_hits / self.dynamic_inits
        return out


def dataset_stats(records: Iterable[SampleRecord]) -> dict:
    acc = StatsAccumulator()
    for record in records:
        acc.add(record)
    return acc.result()


def replay_dynamic(record: SampleRecord, spec: DatasetSpec) -> tuple[str, list[str], str]:
    """Re-execute a dynamic-noise sample, injecting its recorded corruptions.

    Uses no randomness: inputs come from the record's stored seed and the
    corrupted values come from the noise metadata, so a byte-identical
    result demonstrates the trace is consistent with its corrupted state.
    """
    noise = record.noise or {}
    if noise and noise.get("kind") != "dynamic":
        raise ReplayError(f"record {record.id} does not carry dynamic noise")
    rng_inputs = stream_rng(record.seed, "inputs")
    task, operand_ints = _sample_inputs(spec, rng_inputs)
    operands = [tint(v) for v in operand_ints]

    sites = {s["site"]: s for s in noise.get("sites", [])}
    consumed = set()

    def injector(site, name, value):
        entry = sites.get(site)
        if entry is None:
            return None
        if entry["var"] != name:
            raise ReplayError(
                f"record {record.id}: site {site} bound {name!r}, recorded {entry['var']!r}"
            )
        if entry["before"] != render(value):
            raise ReplayError(
                f"record {record.id}: site {site} value {render(value)!r}, "
                f"recorded {entry['before']!r}"
            )
        consumed.add(site)
        return parse(entry["after"])

    ctx = TraceContext(corruption_injector=injector)
    trace_task(ctx, task, operands)
    problem, cot_lines, answer = postprocess(ctx.events)
    if spec.mode == "direct":
        cot_lines = []
    if consumed != set(sites):
        raise ReplayError(f"record {record.id}: unreached corruption sites {sorted(set(sites) - consumed)}")
    return problem, cot_lines, answer


def replay_matches(record: SampleRecord, spec: DatasetSpec) -> bool:
    problem, cot_lines, answer = replay_dynamic(record, spec)
    return (
        problem == record.problem
        and cot_lines == record.cot_lines
        and answer == record.answer
    )
