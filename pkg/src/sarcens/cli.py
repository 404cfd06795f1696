"""Subcommand front door wiring the pipeline stages together.

Every subcommand reads the same declarative YAML run config; flags override
file values, and the effective config is echoed into the output directory.
Commands exit 0 only when their artifact was fully produced, and partial
LLM runs resume from the response cache instead of corrupting prior
outputs.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import corpus as corpus_mod
from . import evaluation, meta_learner, predictions, voting
from .config import ConfigError, RunConfig, echo_config, load_run_config
from .llm_client import (
    ProtocolError,
    TransportError,
    classify_corpus,
    default_template,
    load_template,
    template_fingerprint,
    translate_corpus,
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sarcens",
        description="Translate-train sarcasm detection pipeline with stacking and voting ensembles.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="YAML run config file")
        p.add_argument("--seed", type=int, help="override config seed")
        p.add_argument("--out", help="override output directory")

    p = sub.add_parser("build-dataset", help="load official splits, balance, and split train/val/test")
    common(p)
    p.add_argument("--train-file", required=True, help="official train CSV/JSONL (text,sarcastic)")
    p.add_argument("--test-file", required=True, help="official test CSV/JSONL (text,sarcastic)")
    p.add_argument("--ratios", help="train,val,test fractions, e.g. 0.8,0.1,0.1")
    p.add_argument("--corpus", help="output corpus JSONL path")
    p.set_defaults(func=cmd_build_dataset)

    p = sub.add_parser("translate", help="fill text_target for every corpus example")
    common(p)
    p.add_argument("--corpus", help="input corpus JSONL path")
    p.add_argument("--template", help="translation prompt template JSON (default: packaged shots)")
    p.add_argument("--out-corpus", help="translated corpus output path")
    p.add_argument("--base-url", help="endpoint base URL")
    p.add_argument("--model-name", help="endpoint model name")
    p.add_argument("--cache", help="response cache JSONL path")
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("classify", help="few-shot classify every corpus example")
    common(p)
    p.add_argument("--corpus", help="input corpus JSONL path")
    p.add_argument("--template", help="classification prompt template JSON (default: packaged shots)")
    p.add_argument("--model-id", help="model id for the prediction records (default: model name)")
    p.add_argument("--text-field", choices=("text_target", "text_source"), default="text_target")
    p.add_argument("--base-url", help="endpoint base URL")
    p.add_argument("--model-name", help="endpoint model name")
    p.add_argument("--cache", help="response cache JSONL path")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("train-meta", help="tune and train the stacking meta-learner")
    common(p)
    p.add_argument("--corpus", help="corpus JSONL with split assignments")
    p.add_argument("--predictions-dir", help="directory of per-model prediction JSONL files")
    p.add_argument("--models", help="comma-separated model ids to stack (default: all files)")
    p.add_argument("--lambda-grid", help="comma-separated lambda values")
    p.add_argument("--k", type=int, help="how many top-weight models to report")
    p.set_defaults(func=cmd_train_meta)

    p = sub.add_parser("ensemble", help="evaluate a voting or stacking ensemble on a split")
    common(p)
    p.add_argument("--corpus", help="corpus JSONL with split assignments")
    p.add_argument("--predictions-dir", help="directory of per-model prediction JSONL files")
    p.add_argument("--models", help="comma-separated model ids (default: all files)")
    p.add_argument("--scheme", choices=("hard", "soft", "mixed", "stacking"))
    p.add_argument("--n", type=int, help="mixed-voting cutoff n")
    p.add_argument("--tune-n", action="store_true", help="tune the mixed cutoff on the val split")
    p.add_argument("--threshold", type=float, help="vote binarization threshold")
    p.add_argument("--tie-label", type=int, choices=(0, 1), help="label returned on exact ties")
    p.add_argument("--split", choices=("train", "val", "test"))
    p.add_argument("--meta-model", help="trained meta-model JSON (stacking scheme)")
    p.add_argument("--name", help="system name used in reports")
    p.add_argument("--allow-low-coverage", action="store_true")
    p.set_defaults(func=cmd_ensemble)

    p = sub.add_parser("report", help="merge evaluation reports into one document")
    common(p)
    p.add_argument("--reports", nargs="*", help="report JSON files or directories")
    p.add_argument("--format", choices=("text-table", "csv", "json"), default="text-table")
    p.add_argument("--out-file", help="also write the document here")
    p.set_defaults(func=cmd_report)

    return parser


def _overrides(args) -> dict:
    mapping = {
        "seed": "seed",
        "out": "paths.output_dir",
        "corpus": "paths.corpus",
        "cache": "paths.cache",
        "predictions_dir": "paths.predictions_dir",
        "base_url": "llm.base_url",
        "model_name": "llm.model_name",
        "scheme": "ensemble.scheme",
        "n": "ensemble.cutoff_n",
        "threshold": "ensemble.threshold",
        "tie_label": "ensemble.tie_label",
        "split": "ensemble.split",
        "k": "ensemble.top_k",
    }
    overrides = {}
    for attr, key in mapping.items():
        value = getattr(args, attr, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "ratios", None):
        overrides["split_ratios"] = [float(r) for r in args.ratios.split(",")]
    if getattr(args, "lambda_grid", None):
        overrides["ensemble.lambda_grid"] = [float(g) for g in args.lambda_grid.split(",")]
    return overrides


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_build_dataset(args, config: RunConfig) -> int:
    loaded = corpus_mod.load_isarcasm(args.train_file, args.test_file)
    for origin, counts in corpus_mod.origin_counts(loaded).items():
        print(
            f"{origin}: {counts[corpus_mod.SARCASTIC]} sarcastic / "
            f"{counts[corpus_mod.NOT_SARCASTIC]} non-sarcastic"
        )
    balanced = corpus_mod.merge_and_balance(loaded, config.seed)
    print(f"{len(balanced)} examples ({balanced.n_sarcastic}/{balanced.n_not_sarcastic})")
    assigned = corpus_mod.stratified_split(balanced, config.split_ratios, config.seed)
    sizes = {split: len(assigned.subset(split)) for split in corpus_mod.SPLITS}
    print("splits: " + " ".join(f"{k}={v}" for k, v in sizes.items()))
    out_path = corpus_mod.save_corpus(assigned, config.paths.corpus)
    echo_config(config, config.paths.output_dir)
    print(f"wrote {out_path}")
    return 0


def _require_endpoint(config: RunConfig) -> None:
    if not config.llm.base_url:
        raise ConfigError("llm.base_url: required for endpoint commands")
    if not config.llm.model_name:
        raise ConfigError("llm.model_name: required for endpoint commands")


def cmd_translate(args, config: RunConfig) -> int:
    _require_endpoint(config)
    src = corpus_mod.load_corpus(config.paths.corpus)
    template = load_template(args.template) if args.template else default_template("translate")
    result = translate_corpus(src, template, config.llm, config.paths.cache)
    s = result.summary
    print(f"translated {s.completed}/{s.requested} ({s.from_cache} from cache)")
    if s.failures:
        print(f"failed examples: {', '.join(s.failures)}", file=sys.stderr)
        print("output not written; rerun resumes from cache", file=sys.stderr)
        return 1
    out_path = args.out_corpus or str(Path(config.paths.output_dir) / "corpus_translated.jsonl")
    corpus_mod.save_corpus(result.corpus, out_path)
    echo_config(config, config.paths.output_dir)
    print(f"wrote {out_path}")
    return 0


def cmd_classify(args, config: RunConfig) -> int:
    _require_endpoint(config)
    src = corpus_mod.load_corpus(config.paths.corpus)
    template = load_template(args.template) if args.template else default_template("classify")
    model_id = args.model_id or config.llm.model_name
    if not model_id:
        print("error: --model-id or llm.model_name required", file=sys.stderr)
        return 2
    result = classify_corpus(
        src, template, config.llm, model_id, config.paths.cache, text_field=args.text_field
    )
    s = result.summary
    n_ok = sum(1 for p in result.predictions if p.status == "ok")
    print(
        f"classified {s.completed}/{s.requested} ({s.from_cache} from cache): "
        f"{n_ok} ok, {len(s.refusals)} refused"
    )
    if s.failures:
        print(f"failed examples: {', '.join(s.failures)}", file=sys.stderr)
        print("predictions not written; rerun resumes from cache", file=sys.stderr)
        return 1
    out_path = Path(config.paths.predictions_dir) / f"{model_id}.jsonl"
    predictions.save_predictions(result.predictions, out_path)
    run_metadata = {
        "model_id": model_id,
        "model_name": config.llm.model_name,
        "template_source": args.template or "packaged:classification.json",
        "template_sha256": template_fingerprint(template),
        "text_field": args.text_field,
        "seed": config.seed,
    }
    meta_path = out_path.with_name(out_path.name + ".meta.json")
    meta_path.write_text(
        json.dumps(run_metadata, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    echo_config(config, config.paths.output_dir)
    print(f"wrote {out_path}")
    return 0


def _load_prediction_sets(config: RunConfig, models: str | None) -> list[list[predictions.Prediction]]:
    pred_dir = Path(config.paths.predictions_dir)
    if not pred_dir.is_dir():
        raise ValueError(f"predictions directory not found: {pred_dir}")
    files = sorted(pred_dir.glob("*.jsonl"))
    if not files:
        raise ValueError(f"no prediction files in {pred_dir}")
    sets = []
    for path in files:
        records = predictions.ingest(path)
        if not records:
            raise ValueError(f"{path}: no prediction records")
        counts = predictions.status_counts(records)
        print(f"{path.name}: {counts['ok']} ok, {counts['refused']} refused")
        sets.append(records)
    if models:
        wanted = [m.strip() for m in models.split(",") if m.strip()]
        by_model = {s[0].model_id: s for s in sets if s}
        missing = [m for m in wanted if m not in by_model]
        if missing:
            raise ValueError(f"no predictions found for models: {', '.join(missing)}")
        sets = [by_model[m] for m in wanted]
    return sets


def cmd_train_meta(args, config: RunConfig) -> int:
    src = corpus_mod.load_corpus(config.paths.corpus)
    sets = _load_prediction_sets(config, args.models)
    train_alignment = predictions.align(sets, src, "train")
    val_alignment = predictions.align(sets, src, "val")
    lam, model = meta_learner.tune_lambda(
        train_alignment.matrix, val_alignment.matrix, config.ensemble.lambda_grid,
        seed=config.seed,
    )
    val_probs = meta_learner.predict(model, val_alignment.matrix)
    val_acc = float(((val_probs > 0.5).astype(int) == val_alignment.matrix.labels).mean())
    k = min(config.ensemble.top_k, len(model.model_ids))
    top = meta_learner.select_top_k(model, k)

    out_dir = Path(config.paths.output_dir)
    model_path = model.save(out_dir / "meta_model.json")
    training_report = {
        "lambda": lam,
        "val_accuracy": val_acc,
        "top_k": top,
        "weights": {m: w for m, w in zip(model.model_ids, model.weights.tolist())},
        "intercept": model.intercept,
        "train_rows": train_alignment.matrix.n_examples,
        "train_dropped": train_alignment.dropped_total,
        "val_rows": val_alignment.matrix.n_examples,
        "val_dropped": val_alignment.dropped_total,
        "optimizer_report": model.optimizer_report,
        "seed": config.seed,
    }
    report_path = out_dir / "meta_training.json"
    report_path.parent.mkdir(parents=True, exist_ok=True)
    report_path.write_text(
        json.dumps(training_report, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    echo_config(config, config.paths.output_dir)
    print(f"lambda* = {lam} (val accuracy {evaluation.display(val_acc)})")
    print(f"top-{k} by |weight|: {', '.join(top)}")
    print(f"wrote {model_path} and {report_path}")
    return 0


def cmd_ensemble(args, config: RunConfig) -> int:
    src = corpus_mod.load_corpus(config.paths.corpus)
    sets = _load_prediction_sets(config, args.models)
    scheme = config.ensemble.scheme
    alignment = predictions.align(
        sets, src, config.ensemble.split, allow_low_coverage=args.allow_low_coverage
    )
    matrix = alignment.matrix

    if scheme == "stacking":
        model_path = args.meta_model or str(Path(config.paths.output_dir) / "meta_model.json")
        model = meta_learner.MetaModel.load(model_path)
        matrix = matrix.select_models(model.model_ids)
        probs = meta_learner.predict(model, matrix)
        preds = (probs > 0.5).astype(int)
        name = args.name or "stacking"
    else:
        vconf = voting.VotingConfig(
            scheme=scheme,
            cutoff_n=config.ensemble.cutoff_n,
            threshold=config.ensemble.threshold,
            tie_label=config.ensemble.tie_label,
        )
        if scheme == "mixed" and args.tune_n:
            val_alignment = predictions.align(
                sets, src, "val", allow_low_coverage=args.allow_low_coverage
            )
            best_n, best_acc = voting.tune_cutoff(val_alignment.matrix, vconf)
            print(f"tuned cutoff n = {best_n} (val accuracy {evaluation.display(best_acc)})")
            vconf = voting.VotingConfig(
                scheme="mixed", cutoff_n=best_n,
                threshold=vconf.threshold, tie_label=vconf.tie_label,
            )
        preds = voting.vote_matrix(matrix, vconf)
        name = args.name or (f"mixed-voting-n{vconf.cutoff_n}" if scheme == "mixed"
                             else f"{scheme}-voting")

    cm = evaluation.confusion(preds.tolist(), matrix.labels.tolist())
    report = evaluation.SystemReport.from_confusion(
        name, cm, dropped_count=alignment.dropped_total, members=matrix.model_ids
    )
    out_dir = Path(config.paths.output_dir) / "reports"
    evaluation.save_report([report], out_dir / f"{name}.json", format="json")
    echo_config(config, config.paths.output_dir)
    print(
        f"{name}: accuracy {evaluation.display(report.accuracy)}, "
        f"F1 {evaluation.display(report.f1)} "
        f"({report.evaluated_count} evaluated, {report.dropped_count} dropped)"
    )
    print(f"wrote {out_dir / (name + '.json')}")
    return 0


def cmd_report(args, config: RunConfig) -> int:
    sources = args.reports or [str(Path(config.paths.output_dir) / "reports")]
    files: list[Path] = []
    for source in sources:
        path = Path(source)
        if path.is_dir():
            files.extend(sorted(path.glob("*.json")))
        elif path.exists():
            files.append(path)
        else:
            print(f"error: report source not found: {path}", file=sys.stderr)
            return 1
    if not files:
        print("error: no report files found", file=sys.stderr)
        return 1
    reports = []
    for path in files:
        reports.extend(evaluation.load_report(path))
    document = evaluation.emit_report(reports, format=args.format)
    sys.stdout.write(document)
    if args.out_file:
        out_file = Path(args.out_file)
        out_file.parent.mkdir(parents=True, exist_ok=True)
        out_file.write_text(document, encoding="utf-8")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_run_config(args.config, _overrides(args))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return args.func(args, config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, OSError, TransportError, ProtocolError,
            meta_learner.ConvergenceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
