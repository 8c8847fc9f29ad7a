"""Command line surface: generate, stats, prompts, evaluate, score, sweep.

Settings come from an optional YAML config file with flag overrides; the
effective spec is echoed into every manifest. Exit codes: 0 success, 1
configuration or input error, 2 runtime or transport failure. All output
files are written atomically.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from typing import Optional

import yaml

from .algorithms import Task
from .dataset import (
    DatasetParseError,
    DatasetSpec,
    StatsAccumulator,
    generate,
    iter_built_records,
    iter_records,
    manifest_path_for,
    write_atomic,
)
from .evaluation import (
    DEFAULT_INSTRUCTION,
    ConfigError,
    EndpointConfig,
    EndpointError,
    build_fewshot_prompt,
    evaluate_bundles,
    score,
)
from .noise import INTENSITY_NAMES, NoiseConfig
from .sampling import LengthSampler, MagnitudeSampler, SamplerSpec, stream_rng

__all__ = ["main"]

_INTENSITY_FLAGS = {"char": "nc", "line": "nl", "dynamic": "ndl"}


class _Parser(argparse.ArgumentParser):
    # spec exit-code contract: configuration errors exit 1
    def error(self, message: str):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}")
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config {path}: {exc}")
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must be a mapping")
    return data


def _getter(args: argparse.Namespace, cfg: dict):
    def get(name: str, default=None, required: bool = False):
        value = getattr(args, name, None)
        if value is None:
            value = cfg.get(name, default)
        if required and value is None:
            raise ConfigError(f"missing required setting {name!r}")
        return value

    return get


def _noise_config(get) -> NoiseConfig:
    kind = get("noise", "none")
    if kind == "none":
        return NoiseConfig()
    if kind not in _INTENSITY_FLAGS:
        raise ConfigError(f"unknown noise kind {kind!r}")
    flag = _INTENSITY_FLAGS[kind]
    intensity = get(flag)
    if intensity is None:
        raise ConfigError(f"--{flag} is required with --noise {kind}")
    nd = get("nd")
    different = not bool(get("flip_uniform", False))
    try:
        return NoiseConfig(
            kind=kind,
            n_d=1.0 if nd is None else float(nd),
            intensity=float(intensity),
            different_digit=different,
        )
    except ValueError as exc:
        raise ConfigError(str(exc))


def _sampler(get) -> Optional[SamplerSpec]:
    max_val = get("max_val")
    max_len = get("max_len")
    if max_val is not None and max_len is not None:
        raise ConfigError("give either a value range or a length range, not both")
    try:
        if max_val is not None:
            return MagnitudeSampler(int(get("min_val", 0)), int(max_val))
        if max_len is not None:
            return LengthSampler(int(get("min_len", 1)), int(max_len))
    except ValueError as exc:
        raise ConfigError(str(exc))
    return None


def _dataset_spec(get, noise: NoiseConfig) -> DatasetSpec:
    try:
        task = Task(get("task", required=True))
    except ValueError as exc:
        raise ConfigError(str(exc))
    try:
        return DatasetSpec(
            task=task,
            count=int(get("count", required=True)),
            master_seed=int(get("seed", 0)),
            mode=get("mode", "cot"),
            noise=noise,
            sampler=_sampler(get),
            max_list_len=int(get("max_list_len", 10)),
        )
    except ValueError as exc:
        raise ConfigError(str(exc))


def cmd_generate(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    get = _getter(args, cfg)
    spec = _dataset_spec(get, _noise_config(get))
    out = get("out", required=True)
    workers = int(get("workers", 1))
    manifest = generate(spec, out, workers=workers)
    stats = manifest["stats"]
    print(f"wrote {manifest['count']} records to {out}")
    print(f"digest sha256:{manifest['digest']}")
    print(f"noised fraction {stats['noised_fraction']:.4f}")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    path = args.dataset
    if not os.path.exists(path):
        raise ConfigError(f"no such dataset: {path}")
    acc = StatsAccumulator()
    for record in iter_records(path):
        acc.add(record)
    report = acc.result()
    if os.path.exists(manifest_path_for(path)):
        with open(manifest_path_for(path), "r", encoding="utf-8") as fh:
            report["configured_noise"] = json.load(fh)["spec"]["noise"]
    text = json.dumps(report, indent=2)
    print(text)
    if args.out:
        write_atomic(args.out, text + "\n")
    return 0


def _build_eval_bundles(get):
    """Demo/test pools plus one bundle per test record."""
    noise = _noise_config(get)
    try:
        task = Task(get("task", required=True))
    except ValueError as exc:
        raise ConfigError(str(exc))
    k = int(get("k", 6))
    n = int(get("n", 100))
    demo_count = int(get("demo_count", 100))
    seed = int(get("seed", 0))
    if k > demo_count:
        raise ConfigError(f"k={k} exceeds the demo pool size {demo_count}")
    pool_spec = DatasetSpec(
        task=task,
        count=demo_count + n,
        master_seed=seed,
        sampler=_sampler(get),
        max_list_len=int(get("max_list_len", 10)),
    )
    records = list(iter_built_records(pool_spec))
    demos, tests = records[:demo_count], records[demo_count:]
    noised_pool = None
    if noise.kind == "dynamic":
        twin_spec = DatasetSpec(
            task=task,
            count=demo_count,
            master_seed=seed,
            noise=NoiseConfig("dynamic", 1.0, noise.intensity),
            sampler=_sampler(get),
            max_list_len=int(get("max_list_len", 10)),
        )
        noised_pool = {r.id: r for r in iter_built_records(twin_spec)}
    instruction = get("instruction", DEFAULT_INSTRUCTION)
    bundles = []
    for test in tests:
        rng = stream_rng(test.seed, "bundle")
        bundles.append(
            build_fewshot_prompt(rng, demos, test, k, noise, noised_pool, instruction)
        )
    return bundles, tests, noise


def _write_bundles(out_dir: str, bundles) -> None:
    prompts_dir = os.path.join(out_dir, "prompts")
    os.makedirs(prompts_dir, exist_ok=True)
    index_lines = []
    for i, bundle in enumerate(bundles):
        write_atomic(os.path.join(prompts_dir, f"{i:05d}.txt"), bundle.render() + "\n")
        index_lines.append(
            json.dumps(
                {
                    "file": f"prompts/{i:05d}.txt",
                    "id": bundle.test_id,
                    "k": bundle.k,
                    "noised_demos": bundle.noised_demos,
                },
                separators=(",", ":"),
            )
        )
    write_atomic(os.path.join(out_dir, "bundles.jsonl"), "\n".join(index_lines) + "\n")


def _endpoint_config(get) -> EndpointConfig:
    base_url = get("base_url")
    model = get("model")
    if not base_url or not model:
        raise ConfigError("evaluation needs --base-url and --model (or --dry-run)")
    return EndpointConfig(
        base_url=base_url,
        model=model,
        api_key_env=get("api_key_env", "ALGOCOT_API_KEY"),
        timeout=float(get("timeout", 60.0)),
        max_inflight=int(get("max_inflight", 4)),
        max_attempts=int(get("max_attempts", 5)),
        backoff_base=float(get("backoff_base", 0.5)),
    )


def _run_eval(args: argparse.Namespace, force_dry: bool) -> int:
    cfg = _load_config(args.config)
    get = _getter(args, cfg)
    out_dir = get("out_dir", "eval-out")
    os.makedirs(out_dir, exist_ok=True)
    bundles, tests, noise = _build_eval_bundles(get)
    _write_bundles(out_dir, bundles)
    dry = force_dry or bool(get("dry_run", False))
    if dry:
        print(f"wrote {len(bundles)} prompt files to {out_dir} (no requests made)")
        return 0
    endpoint = _endpoint_config(get)
    rows = evaluate_bundles(endpoint, bundles)
    write_atomic(
        os.path.join(out_dir, "results.jsonl"),
        "\n".join(json.dumps(r, separators=(",", ":")) for r in rows) + "\n",
    )
    report = score({row["id"]: row["raw"] for row in rows}, tests)
    report_dict = report.to_dict()
    report_dict["endpoint"] = endpoint.to_dict()
    report_dict["noise"] = noise.to_dict()
    write_atomic(os.path.join(out_dir, "report.json"), json.dumps(report_dict, indent=2) + "\n")
    _write_csv(
        os.path.join(out_dir, "curve.csv"),
        [
            {
                "kind": noise.kind,
                "n_d": noise.effective_n_d,
                "intensity": noise.intensity,
                "accuracy": f"{report.accuracy:.4f}",
            }
        ],
    )
    failed = sum(1 for row in rows if row["error"] is not None)
    print(f"accuracy {report.accuracy:.4f} ({report.correct}/{report.total})")
    if failed:
        print(f"warning: {failed} requests failed; coverage is incomplete", file=sys.stderr)
        return 2
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    return _run_eval(args, force_dry=False)


def cmd_prompts(args: argparse.Namespace) -> int:
    return _run_eval(args, force_dry=True)


def cmd_score(args: argparse.Namespace) -> int:
    predictions = {}
    with open(args.predictions, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                row = json.loads(line)
                predictions[row["id"]] = row.get("raw")
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise DatasetParseError(f"{args.predictions}:{lineno}: {exc}")
    references = list(iter_records(args.references))
    try:
        report = score(predictions, references)
    except ValueError as exc:
        raise ConfigError(str(exc))
    print(f"accuracy {report.accuracy:.4f} ({report.correct}/{report.total})")
    for task, acc in report.per_task.items():
        print(f"  {task}: {acc:.4f}")
    if args.out:
        write_atomic(args.out, json.dumps(report.to_dict(), indent=2) + "\n")
    return 0


def _write_csv(path: str, rows: list[dict]) -> None:
    if not rows:
        write_atomic(path, "")
        return
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(rows[0]))
    writer.writeheader()
    writer.writerows(rows)
    write_atomic(path, buf.getvalue())


def cmd_sweep(args: argparse.Namespace) -> int:
    cfg = _load_config(args.config)
    if not cfg:
        raise ConfigError("sweep requires a config file")
    get = _getter(args, cfg)
    kind = get("noise", required=True)
    if kind not in _INTENSITY_FLAGS:
        raise ConfigError(f"sweep noise kind must be one of {sorted(_INTENSITY_FLAGS)}")
    nd_values = cfg.get("nd_grid") or [0.25, 0.5, 0.75, 1.0]
    intensity_values = cfg.get("intensity_grid") or [0.25, 0.5, 0.75, 1.0]
    out_dir = get("out_dir", "sweep-out")
    os.makedirs(out_dir, exist_ok=True)
    workers = int(get("workers", 1))
    rows = []
    for nd in nd_values:
        for intensity in intensity_values:
            noise = NoiseConfig(kind, float(nd), float(intensity))
            cell = dict(cfg)
            cell.update({"noise": kind, "nd": nd, _INTENSITY_FLAGS[kind]: intensity})
            spec = _dataset_spec(_getter(args, cell), noise)
            name = f"{kind}_nd{nd}_{INTENSITY_NAMES[kind]}{intensity}"
            out_path = os.path.join(out_dir, f"{name}.jsonl")
            manifest = generate(spec, out_path, workers=workers)
            stats = manifest["stats"]
            row = {
                "kind": kind,
                "n_d": nd,
                "intensity": intensity,
                "noised_fraction": f"{stats['noised_fraction']:.4f}",
                "measured_rate": "",
                "accuracy": "",
            }
            rate_key = {"char": "char_flip_rate", "line": "line_deletion_rate", "dynamic": "dynamic_corruption_rate"}[kind]
            if rate_key in stats:
                row["measured_rate"] = f"{stats[rate_key]:.4f}"
            print(f"{name}: noised {row['noised_fraction']} rate {row['measured_rate'] or '-'}")
            rows.append(row)
    _write_csv(os.path.join(out_dir, "sweep.csv"), rows)
    print(f"wrote {len(rows)} cells to {os.path.join(out_dir, 'sweep.csv')}")
    return 0


def _add_noise_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--noise", choices=["none", "char", "line", "dynamic"], default=None)
    p.add_argument("--nc", type=float, default=None, help="char noise intensity")
    p.add_argument("--nl", type=float, default=None, help="line noise intensity")
    p.add_argument("--ndl", type=float, default=None, help="dynamic noise intensity")
    p.add_argument("--nd", type=float, default=None, help="dataset noise level")
    p.add_argument(
        "--flip-uniform",
        dest="flip_uniform",
        action="store_true",
        default=None,
        help="char flips draw over all 10 digits instead of the 9 others",
    )


def _add_spec_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--task", choices=[t.value for t in Task], default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--min-len", dest="min_len", type=int, default=None)
    p.add_argument("--max-len", dest="max_len", type=int, default=None)
    p.add_argument("--min-val", dest="min_val", type=int, default=None)
    p.add_argument("--max-val", dest="max_val", type=int, default=None)
    p.add_argument("--max-list-len", dest="max_list_len", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="algocot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a dataset and its manifest")
    p.add_argument("--config", default=None)
    _add_spec_flags(p)
    p.add_argument("--count", type=int, default=None)
    p.add_argument("--mode", choices=["cot", "direct"], default=None)
    _add_noise_flags(p)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("stats", help="report dataset statistics")
    p.add_argument("dataset")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_stats)

    for name, func, help_text in (
        ("prompts", cmd_prompts, "build few-shot prompt files without calling anything"),
        ("evaluate", cmd_evaluate, "build prompts, call the endpoint, score the answers"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", default=None)
        _add_spec_flags(p)
        _add_noise_flags(p)
        p.add_argument("--k", type=int, default=None, help="demonstrations per prompt")
        p.add_argument("--n", type=int, default=None, help="test questions")
        p.add_argument("--demo-count", dest="demo_count", type=int, default=None)
        p.add_argument("--instruction", default=None)
        p.add_argument("--out-dir", dest="out_dir", default=None)
        if name == "evaluate":
            p.add_argument("--dry-run", dest="dry_run", action="store_true", default=None)
            p.add_argument("--base-url", dest="base_url", default=None)
            p.add_argument("--model", default=None)
            p.add_argument("--api-key-env", dest="api_key_env", default=None)
            p.add_argument("--timeout", type=float, default=None)
            p.add_argument("--max-inflight", dest="max_inflight", type=int, default=None)
            p.add_argument("--max-attempts", dest="max_attempts", type=int, default=None)
            p.add_argument("--backoff-base", dest="backoff_base", type=float, default=None)
        p.set_defaults(func=func)

    p = sub.add_parser("score", help="score a predictions file against references")
    p.add_argument("--predictions", required=True)
    p.add_argument("--references", required=True)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_score)

    p = sub.add_parser("sweep", help="generate a (n_d, intensity) grid and aggregate a CSV")
    p.add_argument("--config", required=True)
    p.add_argument("--noise", choices=["char", "line", "dynamic"], default=None)
    p.add_argument("--out-dir", dest="out_dir", default=None)
    p.add_argument("--workers", type=int, default=None)
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, DatasetParseError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except EndpointError as exc:
        print(f"endpoint failure: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
