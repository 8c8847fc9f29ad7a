"""Algorithmic chain-of-thought dataset synthesis for integer tasks.

Traces grade-school algorithms over digit integers to produce training
and evaluation datasets, with controlled static and dynamic noise
injection and a few-shot prompting and scoring harness for external
chat-completion endpoints.
"""

from .algorithms import (
    MedianValue,
    PreconditionError,
    Task,
    add,
    div,
    halve,
    median,
    mul,
    selection_sort,
    sub,
    trace_task,
)
from .dataset import (
    DatasetSpec,
    SampleRecord,
    build_sample,
    dataset_stats,
    generate,
    load_dataset,
    load_manifest,
    postprocess,
    replay_dynamic,
    replay_matches,
)
from .evaluation import (
    EndpointConfig,
    PromptBundle,
    ScoreReport,
    build_fewshot_prompt,
    complete,
    evaluate_bundles,
    extract_answer,
    score,
)
from .noise import NoiseConfig, apply_char_noise, apply_line_noise, corrupt_init
from .sampling import LengthSampler, MagnitudeSampler, sample_seed, stream_rng
from .tint import TInt, parse, render, tint
from .tracing import TraceContext, TraceShapeError

__version__ = "0.1.0"
