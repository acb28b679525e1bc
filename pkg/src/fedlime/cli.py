"""Command-line entry point: ``fedlime <command> [options]``.

Exit codes: 0 success, 2 usage / input / config error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, RunConfig, load_config
from .corpus import Corpus, CorpusError, clean_corpus, corpus_stats, load_corpus, save_corpus, split_train_test
from .curate import CurateError, load_candidates, matched_corpus, pseudo_label, semantic_match_filter
from .explain import ExplainError, explain_instance, render_explanation
from .federated import FederatedConfigError, run_federated, write_metrics
from .features import vectorize
from .hashing import derive_seed
from .model import Dataset, TrainingDivergence, evaluate, fit_centralized, load_model, save_model

logger = logging.getLogger("fedlime")

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC = 0, 2, 3


class UsageError(Exception):
    pass


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, ensure_ascii=False)


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    with Path(path).open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _require(value, flag: str):
    if value is None:
        raise UsageError(f"missing required path: {flag} (or set it in the config 'paths' section)")
    return value


def _resolve(args, cfg: RunConfig) -> RunConfig:
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.workers is not None:
        if args.workers < 1:
            raise UsageError("--workers must be >= 1")
        cfg = replace(cfg, workers=args.workers)
    overrides = {k: getattr(args, k) for k in ("train", "test", "unlabeled", "reference", "candidates",
                                               "model", "metrics", "output", "report")
                 if getattr(args, k, None) is not None}
    if overrides:
        cfg = replace(cfg, paths=replace(cfg.paths, **overrides))
    return cfg


def _labeled_dataset(corpus: Corpus, vec) -> Dataset:
    docs = [d for d in corpus if d.label is not None]
    if not docs:
        raise CorpusError("corpus has no labeled documents")
    return Dataset.from_pairs([(vectorize(vec, d.text), d.label) for d in docs], vec.hash_dim)


def _train_test(cfg: RunConfig) -> tuple[Corpus, Corpus]:
    train = clean_corpus(load_corpus(_require(cfg.paths.train, "--train")))
    if cfg.paths.test is None:
        return split_train_test(train, 0.2, derive_seed(cfg.seed, "split"))
    return train, clean_corpus(load_corpus(cfg.paths.test))


def cmd_stats(args, cfg: RunConfig) -> int:
    corpus = load_corpus(args.corpus, args.input_format)
    print(_dump(corpus_stats(corpus).to_json()))
    return EXIT_OK


def cmd_train_central(args, cfg: RunConfig) -> int:
    train, test = _train_test(cfg)
    vec = cfg.vectorizer
    params = fit_centralized(_labeled_dataset(train, vec), vec.hash_dim, cfg.train)
    m = evaluate(params, _labeled_dataset(test, vec))
    save_model(params, vec, _require(cfg.paths.model, "--model"))
    _write(cfg.paths.metrics, _dump({"accuracy": m.accuracy, "loss": m.loss, "n": m.n}) + "\n")
    return EXIT_OK


def cmd_train_fed(args, cfg: RunConfig) -> int:
    if args.strategy is not None:
        cfg = replace(cfg, partition=replace(cfg.partition, strategy=args.strategy))
    train, test = _train_test(cfg)
    params, history = run_federated(train, test, cfg.federated, cfg.partition, cfg.vectorizer,
                                    workers=cfg.resolved_workers())
    save_model(params, cfg.vectorizer, _require(cfg.paths.model, "--model"))
    if cfg.paths.metrics is None:
        for h in history:
            print(_dump(h.to_json()))
    else:
        write_metrics(history, cfg.paths.metrics)
    return EXIT_OK


def cmd_evaluate(args, cfg: RunConfig) -> int:
    params, vec = load_model(_require(cfg.paths.model, "--model"))
    test = clean_corpus(load_corpus(_require(cfg.paths.test, "--test")))
    m = evaluate(params, _labeled_dataset(test, vec), threshold=args.threshold)
    _write(cfg.paths.output, _dump(m.to_json()) + "\n")
    return EXIT_OK


def _read_texts(path: str) -> list[str]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if Path(path).suffix.lower() == ".jsonl":
        return [json.loads(line)["text"] for line in lines if line.strip()]
    return lines


def cmd_explain(args, cfg: RunConfig) -> int:
    try:
        params, vec = load_model(_require(cfg.paths.model, "--model"))
    except (OSError, ValueError, KeyError) as exc:
        raise UsageError(f"cannot load model: {exc}") from exc
    if args.text is not None:
        texts = [args.text]
    elif args.input is not None:
        texts = _read_texts(args.input)
    else:
        raise UsageError("explain needs --text or --input")

    def one(i: int) -> tuple[str, bool]:
        lime = replace(cfg.lime, seed=derive_seed(cfg.lime.seed, i))
        try:
            return render_explanation(explain_instance(params, vec, texts[i], lime), args.format), True
        except ExplainError as exc:
            logger.error("instance %d: %s", i, exc)
            if args.format == "json":
                return _dump({"index": i, "error": str(exc)}), False
            return f"[{i}] error: {exc}", False

    workers = cfg.resolved_workers()
    if workers > 1 and len(texts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, range(len(texts))))
    else:
        results = [one(i) for i in range(len(texts))]
    sep = "\n" if args.format == "json" else "\n\n"
    _write(cfg.paths.output, sep.join(r for r, _ in results) + "\n" if results else "")
    return EXIT_OK if all(ok for _, ok in results) else EXIT_INPUT


def cmd_curate(args, cfg: RunConfig) -> int:
    out = _require(cfg.paths.output, "--output")
    report_path = _require(cfg.paths.report, "--report")
    if args.mode == "match":
        threshold = cfg.curation.match_threshold if args.threshold is None else args.threshold
        if not 0.0 <= threshold <= 1.0:
            raise ConfigError(f"threshold must be in [0, 1], got {threshold}")
        cands = load_candidates(_require(cfg.paths.candidates, "--candidates"))
        kept, report = semantic_match_filter(cands, cfg.vectorizer, threshold)
        save_corpus(matched_corpus(kept), out)
    else:
        threshold = cfg.curation.keep_threshold if args.threshold is None else args.threshold
        if not 0.0 <= threshold <= 1.0:
            raise ConfigError(f"keep threshold must be in [0, 1], got {threshold}")
        reference = load_corpus(_require(cfg.paths.reference, "--reference"))
        unlabeled = load_corpus(_require(cfg.paths.unlabeled, "--unlabeled"))
        kept, report = pseudo_label(reference, unlabeled, cfg.train, cfg.vectorizer, threshold)
        save_corpus(kept, out)
    _write(report_path, _dump(report.to_json()) + "\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--seed", type=int, help="top-level seed (overrides config)")
    common.add_argument("--workers", type=int, help="worker threads (default: CPU count)")
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="fedlime", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("stats", parents=[common], help="label statistics of a corpus")
    p.add_argument("corpus")
    p.add_argument("--input-format", choices=("csv", "jsonl"))
    p.set_defaults(func=cmd_stats)

    for name, func, text in (("train-central", cmd_train_central, "train on the pooled corpus"),
                             ("train-fed", cmd_train_fed, "simulate FedAvg training")):
        p = sub.add_parser(name, parents=[common], help=text)
        p.add_argument("--train")
        p.add_argument("--test", help="held-out corpus (default: 20%% split of --train)")
        p.add_argument("--model")
        p.add_argument("--metrics")
        if name == "train-fed":
            p.add_argument("--strategy", choices=("iid", "label_skew"))
        p.set_defaults(func=func)

    p = sub.add_parser("evaluate", parents=[common], help="score a saved model on a labeled corpus")
    p.add_argument("--model")
    p.add_argument("--test")
    p.add_argument("--output")
    p.add_argument("--threshold", type=float, default=0.5)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("explain", parents=[common], help="LIME explanations for one or more texts")
    p.add_argument("--model")
    p.add_argument("--text")
    p.add_argument("--input", help="file with one text per line, or JSONL with a 'text' field")
    p.add_argument("--output")
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("curate", parents=[common], help="semantic-match or pseudo-label filtering")
    p.add_argument("mode", choices=("match", "pseudo"))
    p.add_argument("--candidates")
    p.add_argument("--reference")
    p.add_argument("--unlabeled")
    p.add_argument("--output")
    p.add_argument("--report")
    p.add_argument("--threshold", type=float)
    p.set_defaults(func=cmd_curate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        cfg = _resolve(args, load_config(args.config))
        return args.func(args, cfg)
    except TrainingDivergence as exc:
        print(f"fedlime: training diverged: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (UsageError, ConfigError, CorpusError, CurateError, FederatedConfigError, ExplainError,
            OSError, ValueError, KeyError) as exc:
        print(f"fedlime: error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
