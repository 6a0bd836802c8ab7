"""Command-line entry point: index, run, eval, sweep, sidecar-check.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 provider error. Outputs are written atomically and deterministically
(sorted keys, query results ordered by query id), so repeated runs over
identical inputs are byte-identical.
"""

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from .config import (
    EngineConfig,
    build_providers,
    load_engine_config,
    resolve_base_url,
)
from .corpus import Corpus, load_corpus
from .errors import ConfigError, DataError, ProviderError
from .evaluation import evaluate_run, load_benchmark
from .lexical import build_index, load_or_build_index, save_index
from .pipeline import PipelineResult, run_pipeline
from .temporal import ConstraintClass, ConstraintKind, TimePoint

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_PROVIDER = 3

DEFAULT_WORKERS = 4


class _Parser(argparse.ArgumentParser):
    """Raises instead of exiting so usage errors map to exit code 1."""

    def error(self, message: str):
        raise ConfigError(message)


def _atomic_write(path: Path, text: str) -> None:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)


def _load_corpus_checked(cfg: EngineConfig) -> Corpus:
    if not cfg.corpus:
        raise ConfigError("config is missing the corpus path")
    path = Path(cfg.corpus)
    if not path.exists():
        raise DataError(f"corpus file not found: {path}")
    return load_corpus(path)


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def command_index(cfg: EngineConfig) -> int:
    """Build the lexical index and write the cache file."""
    if not cfg.index_cache:
        raise ConfigError("config is missing the index_cache path")
    corpus = _load_corpus_checked(cfg)
    index = build_index(corpus)
    save_index(index, cfg.index_cache)
    print(f"indexed {len(corpus)} passages -> {cfg.index_cache}")
    return EXIT_OK


def _run_record(query_id: str, result: PipelineResult) -> Dict[str, Any]:
    record: Dict[str, Any] = {
        "query_id": query_id,
        "ranked": [
            {
                "passage_id": rp.passage_id,
                "score": rp.score,
                "semantic": rp.semantic,
                "temporal": rp.temporal,
                "best_sentence": rp.best_sentence.text,
                "origin": rp.best_sentence.origin.value,
            }
            for rp in result.ranked
        ],
    }
    if result.trace is not None:
        record["trace"] = [
            {"stage": t.stage, "ids": list(t.ids)}
            | ({"scores": list(t.scores)} if t.scores is not None else {})
            for t in result.trace
        ]
    return record


def command_run(
    cfg: EngineConfig,
    queries_path: str,
    out_path: str,
    workers: int = DEFAULT_WORKERS,
) -> int:
    """Run the retrieval pipeline over every benchmark query."""
    if workers < 1:
        raise ConfigError("--workers must be at least 1")
    corpus = _load_corpus_checked(cfg)
    index = load_or_build_index(corpus, cfg.index_cache)
    scorer, generator = build_providers(cfg.provider)
    load = load_benchmark(queries_path)
    if not load.samples:
        raise DataError(f"no usable queries in {queries_path}")

    def one(sample):
        result = run_pipeline(
            sample.question,
            corpus,
            index,
            scorer,
            generator=generator,
            config=cfg.pipeline,
            trace=cfg.trace,
            prompt_dir=cfg.prompt_dir,
        )
        return _run_record(sample.id, result)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        records = list(pool.map(one, load.samples))
    records.sort(key=lambda r: r["query_id"])
    _atomic_write(
        Path(out_path),
        json.dumps(records, sort_keys=True, indent=2, ensure_ascii=False) + "\n",
    )
    print(f"ran {len(records)} queries -> {out_path}")
    return EXIT_OK


def command_eval(
    cfg: EngineConfig, run_path: str, queries_path: str, out_path: str
) -> int:
    """Score a run file against the benchmark and write report.json."""
    corpus = _load_corpus_checked(cfg)
    run_file = Path(run_path)
    if not run_file.exists():
        raise DataError(f"run file not found: {run_file}")
    try:
        raw = json.loads(run_file.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise DataError(f"run file {run_file} is not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise DataError(f"run file {run_file} must hold a list of records")

    run: Dict[str, List[str]] = {}
    predictions: Dict[str, str] = {}
    has_predictions = False
    for record in raw:
        if not isinstance(record, dict) or "query_id" not in record:
            raise DataError(f"run file {run_file} has a record without query_id")
        qid = str(record["query_id"])
        run[qid] = [str(e["passage_id"]) for e in record.get("ranked", [])]
        if record.get("prediction") is not None:
            has_predictions = True
            predictions[qid] = str(record["prediction"])

    load = load_benchmark(queries_path)
    if not load.samples:
        raise DataError(f"no usable queries in {queries_path}")
    report = evaluate_run(
        run,
        load.samples,
        corpus,
        ks=cfg.metric_ks,
        predictions=predictions if has_predictions else None,
        skipped=load.skipped,
        config={"ks": list(cfg.metric_ks)},
    )
    _atomic_write(
        Path(out_path),
        json.dumps(report.to_dict(), sort_keys=True, indent=2, ensure_ascii=False) + "\n",
    )
    print(f"evaluated {report.counts['samples_evaluated']} samples -> {out_path}")
    return EXIT_OK


def _parse_class_spec(spec: str) -> ConstraintClass:
    parts = spec.split(":")
    kinds = {k.value: k for k in ConstraintKind}
    if parts[0] not in kinds:
        raise ConfigError(
            f"unknown constraint class {parts[0]!r}; choose from {sorted(kinds)}"
        )
    try:
        anchors = [float(p) for p in parts[1:]]
    except ValueError as exc:
        raise ConfigError(f"bad anchor in class spec {spec!r}") from exc
    try:
        if len(anchors) == 1:
            return ConstraintClass(kinds[parts[0]], anchors[0])
        if len(anchors) == 2:
            return ConstraintClass(kinds[parts[0]], anchors[0], anchors[1])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    raise ConfigError(f"class spec {spec!r} needs one or two anchors")


def _parse_grid_spec(spec: str) -> List[TimePoint]:
    try:
        start_s, end_s = spec.split(":")
        start, end = int(start_s), int(end_s)
    except ValueError as exc:
        raise ConfigError(f"grid spec must be START_YEAR:END_YEAR, got {spec!r}") from exc
    if end < start:
        raise ConfigError("grid end year precedes start year")
    try:
        return [TimePoint(year) for year in range(start, end + 1)]
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def command_sweep(
    cfg: EngineConfig, class_spec: str, grid_spec: str, out_path: str
) -> int:
    """Write the temporal-score curve for one constraint class as CSV."""
    from .evaluation import sweep, write_sweep_csv

    cls = _parse_class_spec(class_spec)
    grid = _parse_grid_spec(grid_spec)
    rows = sweep(cls, cfg.pipeline.curve, grid)
    out = Path(out_path)
    tmp = out.with_name(out.name + ".tmp")
    with open(tmp, "w", encoding="utf-8") as fh:
        write_sweep_csv(rows, fh)
    os.replace(tmp, out)
    print(f"swept {len(rows)} dates -> {out_path}")
    return EXIT_OK


def command_sidecar_check(cfg: EngineConfig) -> int:
    """Health plus one embed round-trip against the configured sidecar."""
    from .remote import RemoteConfig, SidecarClient

    base_url = resolve_base_url(cfg.provider)
    if not base_url:
        raise ConfigError(
            "sidecar-check needs provider.base_url or CHRONORAG_SIDECAR_URL"
        )
    client = SidecarClient(RemoteConfig(
        base_url=base_url,
        timeout_s=cfg.provider.timeout_s,
        retries=cfg.provider.retries,
        backoff_s=cfg.provider.backoff_s,
        max_in_flight=cfg.provider.max_in_flight,
    ))
    health = client.health()
    vectors = client.embed(["sidecar round-trip check"])
    print(f"sidecar ok: status={health.get('status')} dim={len(vectors[0])}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument wiring
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="chronorag", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="path to the JSON config manifest")

    p_index = sub.add_parser("index", help="build and cache the lexical index")
    common(p_index)

    p_run = sub.add_parser("run", help="retrieve passages for every query")
    common(p_run)
    p_run.add_argument("--queries", required=True, help="benchmark JSONL path")
    p_run.add_argument("--out", required=True, help="run output JSON path")
    p_run.add_argument("--k", type=int, help="override the output depth")
    p_run.add_argument("--qfs", type=int, help="override how many passages get summaries")
    p_run.add_argument("--provider", choices=["stub", "remote"], help="override provider kind")
    p_run.add_argument("--trace", action="store_true", help="record per-stage traces")
    p_run.add_argument("--workers", type=int, default=DEFAULT_WORKERS)

    p_eval = sub.add_parser("eval", help="score a run against the benchmark")
    common(p_eval)
    p_eval.add_argument("--run", required=True, help="run output JSON path")
    p_eval.add_argument("--queries", required=True, help="benchmark JSONL path")
    p_eval.add_argument("--out", required=True, help="report JSON path")

    p_sweep = sub.add_parser("sweep", help="export one scoring curve as CSV")
    common(p_sweep)
    p_sweep.add_argument(
        "--class", dest="class_spec", required=True,
        help="constraint class, e.g. last_before:1981.5 or last_between:1980.5:1990.5",
    )
    p_sweep.add_argument("--grid", required=True, help="year grid START:END inclusive")
    p_sweep.add_argument("--out", required=True, help="CSV output path")

    p_check = sub.add_parser("sidecar-check", help="verify the remote sidecar")
    common(p_check)

    return parser


def _engine_config(args: argparse.Namespace) -> EngineConfig:
    cfg = load_engine_config(args.config) if args.config else EngineConfig()
    if getattr(args, "provider", None):
        cfg = replace(cfg, provider=replace(cfg.provider, kind=args.provider))
    if getattr(args, "trace", False):
        cfg = replace(cfg, trace=True)
    pipeline = cfg.pipeline
    if getattr(args, "k", None) is not None:
        pipeline = replace(pipeline, top_out=args.k)
    if getattr(args, "qfs", None) is not None:
        pipeline = replace(pipeline, qfs_k=args.qfs)
    if pipeline is not cfg.pipeline:
        cfg = replace(cfg, pipeline=pipeline)
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        cfg = _engine_config(args)
        if args.command == "index":
            return command_index(cfg)
        if args.command == "run":
            return command_run(cfg, args.queries, args.out, args.workers)
        if args.command == "eval":
            return command_eval(cfg, args.run, args.queries, args.out)
        if args.command == "sweep":
            return command_sweep(cfg, args.class_spec, args.grid, args.out)
        return command_sidecar_check(cfg)
    except ConfigError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    except OSError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
