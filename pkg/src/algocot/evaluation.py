"""Few-shot prompting and scoring against a chat-completion endpoint.

A prompt bundle is an instruction, k demonstration traces (each
independently noised with probability n_d), and one bare test problem.
Bundles go to any endpoint speaking the usual chat wire format: POST
{model, messages} and read back the first choice's message content. The
credential is taken from an environment variable at request time and
never appears in logs, reports, or config echoes. Answers are extracted
from the last non-empty line of the completion and scored by exact match;
anything unparseable counts as incorrect.
"""

from __future__ import annotations

import os
import random
import re
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import httpx

from .algorithms import Task
from .dataset import SampleRecord
from .noise import NoiseConfig, apply_char_noise, apply_line_noise, select_noised

__all__ = [
    "DEFAULT_INSTRUCTION",
    "ConfigError",
    "EndpointError",
    "PromptBundle",
    "EndpointConfig",
    "ScoreReport",
    "render_demo",
    "build_fewshot_prompt",
    "complete",
    "evaluate_bundles",
    "extract_answer",
    "reference_value",
    "score",
]

# the source experiments' instruction text is not recoverable; this is a
# documented stand-in with the same intent
DEFAULT_INSTRUCTION = (
    "Follow the demonstrated algorithm exactly. End with the answer on the final line."
)

_MEDIAN_HALF = re.compile(r"^(\d+)\.5$")
_RETRYABLE_STATUS = frozenset({429, 500, 502, 503, 504})


class ConfigError(Exception):
    """The requested run is misconfigured (bad pool sizes, missing inputs)."""


class EndpointError(Exception):
    """A request failed for good; carries the per-attempt log."""

    def __init__(self, message: str, attempts: Optional[list[str]] = None) -> None:
        self.attempts = attempts or []
        if self.attempts:
            message = f"{message} ({'; '.join(self.attempts)})"
        super().__init__(message)


def render_demo(record: SampleRecord) -> str:
    """One demonstration block: problem, CoT lines, answer."""
    return record.text


@dataclass(frozen=True, slots=True)
class PromptBundle:
    instruction: str
    demos: list[str]
    test_problem: str
    k: int
    test_id: str
    noised_demos: int

    def render(self) -> str:
        parts = [self.instruction] if self.instruction else []
        parts.extend(self.demos)
        parts.append(self.test_problem)
        return "\n\n".join(parts)


def build_fewshot_prompt(
    rng: random.Random,
    demo_pool: list[SampleRecord],
    test_record: SampleRecord,
    k: int,
    noise: NoiseConfig = NoiseConfig(),
    noised_pool: Optional[dict[str, SampleRecord]] = None,
    instruction: str = DEFAULT_INSTRUCTION,
) -> PromptBundle:
    """Sample k demos without replacement, noising each with probability n_d.

    Static noise is drawn fresh per bundle; dynamic noise swaps in the
    demo's pre-generated corrupted twin, since it must happen at trace
    time. The test record must not be part of the demo pool.
    """
    if k < 0:
        raise ConfigError("k must be non-negative")
    if k > len(demo_pool):
        raise ConfigError(f"demo pool has {len(demo_pool)} records, need k={k}")
    if any(demo.id == test_record.id for demo in demo_pool):
        raise ConfigError(f"test record {test_record.id} appears in the demo pool")
    chosen = rng.sample(demo_pool, k) if k else []
    blocks: list[str] = []
    noised_count = 0
    for demo in chosen:
        gated = select_noised(rng, noise.effective_n_d)
        if not gated:
            blocks.append(render_demo(demo))
            continue
        noised_count += 1
        if noise.kind == "char":
            lines, answer, _, _ = apply_char_noise(
                rng, demo.cot_lines, demo.answer, noise.intensity, noise.different_digit
            )
            blocks.append("\n".join([demo.problem, *lines, answer]))
        elif noise.kind == "line":
            kept, _ = apply_line_noise(rng, demo.cot_lines, noise.intensity)
            blocks.append("\n".join([demo.problem, *kept, demo.answer]))
        elif noise.kind == "dynamic":
            if noised_pool is None or demo.id not in noised_pool:
                raise ConfigError("dynamic demo noise requires a noised twin pool")
            blocks.append(render_demo(noised_pool[demo.id]))
        else:
            blocks.append(render_demo(demo))
    return PromptBundle(
        instruction=instruction,
        demos=blocks,
        test_problem=test_record.problem,
        k=k,
        test_id=test_record.id,
        noised_demos=noised_count,
    )


@dataclass(frozen=True, slots=True)
class EndpointConfig:
    """Where and how to call the model; the key stays in the environment."""

    base_url: str
    model: str
    api_key_env: str = "ALGOCOT_API_KEY"
    timeout: float = 60.0
    max_inflight: int = 4
    max_attempts: int = 5
    backoff_base: float = 0.5

    def api_key(self) -> Optional[str]:
        return os.environ.get(self.api_key_env)

    def to_dict(self) -> dict:
        # echoes the env var NAME only, never the credential
        return {
            "base_url": self.base_url,
            "model": self.model,
            "api_key_env": self.api_key_env,
            "timeout": self.timeout,
            "max_inflight": self.max_inflight,
            "max_attempts": self.max_attempts,
            "backoff_base": self.backoff_base,
        }


def complete(cfg: EndpointConfig, prompt: str, client: Optional[httpx.Client] = None) -> str:
    """One chat completion with retry on 429/5xx and transport errors."""
    own_client = client is None
    if own_client:
        client = httpx.Client(timeout=cfg.timeout)
    payload = {"model": cfg.model, "messages": [{"role": "user", "content": prompt}]}
    headers = {}
    key = cfg.api_key()
    if key:
        headers["Authorization"] = f"Bearer {key}"
    attempts: list[str] = []
    try:
        for attempt in range(cfg.max_attempts):
            if attempt:
                delay = cfg.backoff_base * (2 ** (attempt - 1))
                time.sleep(delay * (1.0 + 0.25 * random.random()))
            try:
                response = client.post(cfg.base_url, json=payload, headers=headers)
            except httpx.TransportError as exc:
                attempts.append(f"attempt {attempt + 1}: {type(exc).__name__}")
                continue
            if response.status_code == 200:
                try:
                    data = response.json()
                    return data["choices"][0]["message"]["content"]
                except (ValueError, KeyError, IndexError, TypeError) as exc:
                    raise EndpointError(f"malformed response body: {exc}", attempts)
            attempts.append(f"attempt {attempt + 1}: HTTP {response.status_code}")
            if response.status_code not in _RETRYABLE_STATUS:
                raise EndpointError(f"non-retryable HTTP {response.status_code}", attempts)
        raise EndpointError(f"gave up after {cfg.max_attempts} attempts", attempts)
    finally:
        if own_client:
            client.close()


def evaluate_bundles(
    cfg: EndpointConfig,
    bundles: list[PromptBundle],
    client: Optional[httpx.Client] = None,
) -> list[dict]:
    """Call the endpoint for every bundle, bounded by cfg.max_inflight.

    Failures are recorded per row (raw=None plus the error text); the run
    continues.
    """
    own_client = client is None
    if own_client:
        client = httpx.Client(timeout=cfg.timeout)

    def run_one(bundle: PromptBundle) -> dict:
        try:
            raw = complete(cfg, bundle.render(), client=client)
            return {"id": bundle.test_id, "raw": raw, "error": None}
        except EndpointError as exc:
            return {"id": bundle.test_id, "raw": None, "error": str(exc)}

    try:
        with ThreadPoolExecutor(max_workers=max(1, cfg.max_inflight)) as pool:
            return list(pool.map(run_one, bundles))
    finally:
        if own_client:
            client.close()


def extract_answer(text: str, task) -> Optional[str]:
    """Canonical answer from the last non-empty line, or None.

    Digit spacing is stripped and leading zeros are normalized, so the
    extraction inverts the trace renderer; medians also accept the
    half-value form "Q . 5".
    """
    lines = [ln for ln in (raw.strip() for raw in text.splitlines()) if ln]
    if not lines:
        return None
    compact = lines[-1].replace(" ", "")
    task_value = task.value if isinstance(task, Task) else str(task)
    if task_value == Task.MEDIAN.value:
        m = _MEDIAN_HALF.match(compact)
        if m:
            return f"{int(m.group(1))}.5"
    if compact.isdigit():
        return str(int(compact))
    return None


def reference_value(record: SampleRecord) -> str:
    value = extract_answer(record.answer, record.task)
    if value is None:
        raise ValueError(f"record {record.id} has an unparseable answer: {record.answer!r}")
    return value


@dataclass(slots=True)
class ScoreReport:
    accuracy: float
    correct: int
    total: int
    extraction_failures: int
    per_task: dict[str, float] = field(default_factory=dict)
    rows: list[dict] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "correct": self.correct,
            "total": self.total,
            "extraction_failures": self.extraction_failures,
            "per_task": self.per_task,
            "rows": self.rows,
        }


def score(predictions: dict[str, Optional[str]], references: list[SampleRecord]) -> ScoreReport:
    """Exact-match accuracy of raw model texts against reference records.

    predictions maps record id to the raw completion text (None for a
    failed request). Ids must match the references exactly.
    """
    ref_ids = {r.id for r in references}
    if len(ref_ids) != len(references):
        raise ValueError("duplicate reference ids")
    if set(predictions) != ref_ids:
        missing = sorted(ref_ids - set(predictions))[:3]
        extra = sorted(set(predictions) - ref_ids)[:3]
        raise ValueError(f"prediction/reference id mismatch (missing {missing}, extra {extra})")
    rows = []
    correct = 0
    failures = 0
    task_totals: dict[str, int] = {}
    task_correct: dict[str, int] = {}
    for record in references:
        raw = predictions[record.id]
        predicted = extract_answer(raw, record.task) if raw is not None else None
        if predicted is None:
            failures += 1
        reference = reference_value(record)
        hit = predicted == reference
        correct += 1 if hit else 0
        task_totals[record.task] = task_totals.get(record.task, 0) + 1
        task_correct[record.task] = task_correct.get(record.task, 0) + (1 if hit else 0)
        rows.append(
            {
                "id": record.id,
                "task": record.task,
                "prediction": predicted,
                "reference": reference,
                "correct": hit,
                "raw": raw,
            }
        )
    per_task = {t: task_correct[t] / task_totals[t] for t in sorted(task_totals)}
    total = len(references)
    return ScoreReport(
        accuracy=correct / total if total else 0.0,
        correct=correct,
        total=total,
        extraction_failures=failures,
        per_task=per_task,
        rows=rows,
    )
