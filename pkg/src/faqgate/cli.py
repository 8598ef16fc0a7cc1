"""Operator entry points: ingest -> build -> calibrate -> eval -> compare -> energy -> serve.

Exit codes: 0 success, 1 validation/configuration error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from pathlib import Path

from . import energy as energy_mod
from .calibration import calibrate, load_config, roc_curve, roc_points_csv, save_config, score_texts
from .embedding import EmbeddingProviderSpec, make_provider
from .errors import ConfigurationError, FaqGateError, ValidationError
from .faq import build_index, ingest_faq
from .fixtures import generate_fixtures, load_dataset
from .metrics import confusion, metrics, wilson_ci
from .paired import compare_all


def _provider_from_args(args) -> EmbeddingProviderSpec:
    return EmbeddingProviderSpec(
        provider_kind=args.provider,
        model_id=args.model_id,
        dim=args.dim,
        query_prefix=args.query_prefix,
        passage_prefix=args.passage_prefix,
        cache_path=args.cache_path,
        endpoint_url=args.endpoint_url,
    )


def _add_provider_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--provider", choices=["toy_hash", "file_cache", "external_endpoint"],
                   default="toy_hash")
    p.add_argument("--dim", type=int, default=256)
    p.add_argument("--model-id", default="toy-hash-demo")
    p.add_argument("--cache-path", default=None)
    p.add_argument("--endpoint-url", default=None)
    p.add_argument("--query-prefix", default="")
    p.add_argument("--passage-prefix", default="")


def _write_json(path: str, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def cmd_ingest(args) -> int:
    entries, answers = ingest_faq(args.faq, args.answers)
    print(f"ok: {len(entries)} entries, {len(answers)} answers")
    return 0


def cmd_build(args) -> int:
    provider = make_provider(_provider_from_args(args))
    entries, _ = ingest_faq(args.faq, args.answers)
    index = build_index(entries, provider)
    manifest = index.manifest()
    if args.out:
        _write_json(args.out, manifest)
    print(json.dumps(manifest))
    return 0


def cmd_calibrate(args) -> int:
    provider = make_provider(_provider_from_args(args))
    entries, _ = ingest_faq(args.faq, args.answers)
    index = build_index(entries, provider)
    items = load_dataset(args.val)
    config, report = calibrate(
        [(text, label) for _, text, label in items],
        index,
        provider,
        domain=args.domain,
        calibrated_at=args.calibrated_at,
    )
    save_config(config, args.out)
    if args.report:
        _write_json(args.report, report)
    if args.roc_csv:
        labels = [label == "clinical" for _, _, label in items]
        scores = score_texts([text for _, text, _ in items], index, provider)
        with open(args.roc_csv, "w", encoding="utf-8") as fh:
            fh.write(roc_points_csv(roc_curve(scores, labels)))
    print(
        f"calibrated: threshold={config.threshold:.6f} J={config.youden_j:.4f} "
        f"auc={config.auc:.4f} frozen={config.frozen}"
    )
    return 0


def cmd_eval(args) -> int:
    config = load_config(args.config)
    if not config.frozen:
        raise ConfigurationError(
            "eval refuses unfrozen configs: the threshold must be frozen on "
            "validation before any test evaluation"
        )
    provider = make_provider(_provider_from_args(args))
    entries, _ = ingest_faq(args.faq, args.answers)
    index = build_index(entries, provider)
    if config.model_fingerprint != index.provider_fingerprint:
        raise ConfigurationError("config fingerprint does not match this provider/index")

    items = load_dataset(args.test)
    val_hashes = set(config.val_item_hashes)
    overlap = [
        item_id
        for item_id, text, _ in items
        if hashlib.sha256(text.encode("utf-8")).hexdigest() in val_hashes
    ]
    if overlap:
        raise ValidationError(
            f"test items overlap the calibration set (first: {overlap[0]}); "
            "validation and test must be independent"
        )

    texts = [text for _, text, _ in items]
    truths = [label == "clinical" for _, _, label in items]
    scores = score_texts(texts, index, provider)
    predictions = [bool(s >= config.threshold) for s in scores]

    cm = confusion(predictions, truths, positive=True)
    report_metrics = metrics(cm)
    correct = cm.tp + cm.tn
    lo, hi = wilson_ci(correct, cm.n)
    report = {
        "domain": config.domain,
        "threshold": config.threshold,
        "model_fingerprint": config.model_fingerprint,
        "n_test": cm.n,
        "confusion": {"tp": cm.tp, "fn": cm.fn, "fp": cm.fp, "tn": cm.tn},
        "metrics": report_metrics.to_dict(),
        "accuracy_wilson_ci_95": [lo, hi],
    }
    _write_json(args.out, report)
    if args.predictions:
        with open(args.predictions, "w", encoding="utf-8") as fh:
            for (item_id, _, label), score, pred in zip(items, scores, predictions):
                fh.write(
                    json.dumps(
                        {
                            "id": item_id,
                            "truth": label,
                            "predicted": "clinical" if pred else "casual",
                            "score": float(score),
                        }
                    )
                    + "\n"
                )
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["accuracy", "precision", "recall", "specificity",
                 "balanced_accuracy", "f1", "misclassifications"]
            )
            m = report_metrics.to_dict()
            writer.writerow(
                [m["accuracy"], m["precision"], m["recall"], m["specificity"],
                 m["balanced_accuracy"], m["f1"], m["misclassifications"]]
            )
    print(json.dumps(report["metrics"]))
    return 0


def _read_predictions(path: str) -> dict[str, str]:
    out = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            out[str(obj["id"])] = str(obj.get("predicted", obj.get("label")))
    return out


def cmd_compare(args) -> int:
    truth_map = {}
    with open(args.truth, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            truth_map[str(obj["id"])] = str(obj.get("truth", obj.get("label")))
    ids = sorted(truth_map)
    predictions = {}
    for path in args.preds:
        name = Path(path).stem
        preds = _read_predictions(path)
        missing = [i for i in ids if i not in preds]
        if missing:
            raise ValidationError(f"{path} is missing predictions for ids like {missing[0]!r}")
        predictions[name] = [preds[i] for i in ids]
    truths = [truth_map[i] for i in ids]
    results = compare_all(predictions, truths, family_size=args.family_size)
    rows = [r.to_dict() for r in results]
    _write_json(args.out, rows)
    if args.csv:
        with open(args.csv, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(
                fh, fieldnames=["model1", "model2", "b", "c", "p_raw", "p_holm", "cohens_h"]
            )
            writer.writeheader()
            writer.writerows(rows)
    for r in rows:
        print(
            f"{r['model1']} vs {r['model2']}: b={r['b']} c={r['c']} "
            f"p_raw={r['p_raw']:.6g} p_holm={r['p_holm']:.6g} h={r['cohens_h']:+.4f}"
        )
    return 0


def cmd_energy(args) -> int:
    if args.replay:
        trace = energy_mod.read_trace_csv(args.replay)
    elif args.source_cmd:
        trace, sampler = energy_mod.sample_live(
            args.source_cmd, interval_s=args.interval, duration_s=args.duration
        )
        if sampler.dropped_count:
            print(f"warning: dropped {sampler.dropped_count} malformed samples", file=sys.stderr)
        if sampler.partial:
            print("warning: source exited early; trace is partial", file=sys.stderr)
    else:
        raise ValidationError("energy requires --replay or --source-cmd")
    report = energy_mod.build_report(trace, n_requests=args.requests)
    _write_json(args.out, report.to_dict())
    print(
        f"total={report.total_wh:.6f} Wh over {report.n_requests} requests "
        f"-> {report.mwh_per_request:.3f} mWh/request"
    )
    return 0


def cmd_serve(args) -> int:
    from .service import ServerConfig, run_server

    run_server(ServerConfig.from_file(args.config))
    return 0


def cmd_demo_fixtures(args) -> int:
    manifest = generate_fixtures(args.out, seed=args.seed)
    print(json.dumps(manifest))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="faqgate",
        description="FAQ-similarity dialogue gate: calibration, evaluation, energy, serving",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="validate a FAQ corpus")
    p.add_argument("--faq", required=True)
    p.add_argument("--answers", required=True)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("build", help="build the index and emit its manifest")
    p.add_argument("--faq", required=True)
    p.add_argument("--answers", required=True)
    p.add_argument("--out", default=None, help="manifest JSON path")
    _add_provider_args(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("calibrate", help="select and freeze the operating threshold")
    p.add_argument("--faq", required=True)
    p.add_argument("--answers", required=True)
    p.add_argument("--val", required=True)
    p.add_argument("--out", required=True, help="frozen threshold config JSON")
    p.add_argument("--report", default=None, help="calibration report JSON")
    p.add_argument("--roc-csv", default=None, help="ROC points CSV (fpr,tpr,threshold)")
    p.add_argument("--domain", default="demo")
    p.add_argument("--calibrated-at", default=None,
                   help="override the timestamp (for reproducible artifacts)")
    _add_provider_args(p)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("eval", help="evaluate a frozen config on a test set")
    p.add_argument("--test", required=True)
    p.add_argument("--config", required=True)
    p.add_argument("--faq", required=True)
    p.add_argument("--answers", required=True)
    p.add_argument("--out", required=True, help="metrics report JSON")
    p.add_argument("--predictions", default=None, help="per-item predictions JSONL")
    p.add_argument("--csv", default=None, help="metrics CSV mirror")
    _add_provider_args(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("compare", help="pairwise McNemar + Holm over prediction files")
    p.add_argument("--preds", nargs="+", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--csv", default=None)
    p.add_argument("--family-size", type=int, default=None,
                   help="widen the Holm family beyond the computed pairs")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("energy", help="integrate a power trace into an energy report")
    p.add_argument("--replay", default=None, help="trace CSV to integrate")
    p.add_argument("--source-cmd", default=None, help="command emitting power_w,vram_mib lines")
    p.add_argument("--interval", type=float, default=1.0)
    p.add_argument("--duration", type=float, default=None)
    p.add_argument("--requests", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_energy)

    p = sub.add_parser("serve", help="run the local HTTP service")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("demo-fixtures", help="generate the synthetic demo corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=7)
    p.set_defaults(func=cmd_demo_fixtures)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ConfigurationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FaqGateError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
