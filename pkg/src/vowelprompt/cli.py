"""Command-line interface: extract, fit, render, verify, score, infer.

Each subcommand reads/writes plain files so stages compose through the shell.
Exit codes: 0 success, 1 validation error, 2 I/O error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import pipeline
from .config import load_config
from .errors import ConfigError, StructuralError, VowelPromptError
from .gateway import GatewayConfig, load_api_key, run_dataset
from .metrics import confusion, score
from .normquant import load_model
from .prompts import PromptTemplateId
from .rlvr import parse_output, reward
from .verbalize import load_lexicon


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; route them through the validation
    # path so the documented exit codes hold.
    def error(self, message: str):
        raise ConfigError(f"{message}\n{self.format_usage().rstrip()}")


def _read_jsonl(path: str) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                raise StructuralError(f"{path} line {lineno} is not valid JSON") from None
            records.append(obj)
    return records


def _pred_output(rec: dict, path: str) -> str:
    for key in ("output_text", "output"):
        if rec.get(key) is not None:
            return rec[key]
    return ""


def _pred_id(rec: dict, path: str) -> str:
    for key in ("id", "utterance_id"):
        if key in rec:
            return rec[key]
    raise StructuralError(f"{path}: prediction record has no 'id' field: {rec}")


def _cmd_extract(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    n = pipeline.extract_corpus(
        args.manifest,
        args.out,
        config,
        phones_tier=args.phones_tier,
        words_tier=args.words_tier,
        jobs=args.jobs,
        dump_contours_path=args.dump_contours,
    )
    print(f"extracted {n} utterances -> {args.out}")
    return 0


def _cmd_fit(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    if args.k is not None:
        config = _override_binning(config, k=args.k)
    if args.min_group_count is not None:
        config = _override_binning(config, min_group_count=args.min_group_count)
    model = pipeline.fit_corpus(
        args.manifest,
        args.out,
        config,
        lld_path=args.llds,
        phones_tier=args.phones_tier,
        words_tier=args.words_tier,
        jobs=args.jobs,
    )
    print(f"fit K={model.k} stats over manifest {args.manifest} -> {args.out}")
    return 0


def _override_binning(config, **kwargs):
    from dataclasses import replace

    return replace(config, binning=replace(config.binning, **kwargs))


def _cmd_render(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    template_id = args.template or config.template
    valid = [t.value for t in PromptTemplateId]
    if template_id not in valid:
        raise ConfigError(
            f"unknown template {template_id!r}; valid templates: {', '.join(valid)}"
        )
    lexicon = load_lexicon(args.lexicon or config.lexicon_path)
    model = load_model(args.stats)
    if lexicon.k != model.k:
        raise ConfigError(
            f"lexicon has K={lexicon.k} labels but the stats file was fit with "
            f"K={model.k}"
        )
    n = pipeline.render_corpus(
        args.manifest,
        model,
        lexicon,
        PromptTemplateId(template_id),
        args.out,
        config,
        lld_path=args.llds,
        few_shot_n=args.few_shot_n,
        phones_tier=args.phones_tier,
        words_tier=args.words_tier,
        jobs=args.jobs,
    )
    print(f"rendered {n} prompts ({template_id}) -> {args.out}")
    return 0


def _cmd_verify(args: argparse.Namespace) -> int:
    golds = _read_jsonl(args.gold)
    preds = {_pred_id(r, args.pred): r for r in _read_jsonl(args.pred)}

    lines = []
    totals = {"r_acc": 0, "r_format": 0, "total": 0}
    for gold in golds:
        gid = gold.get("id")
        if gid is None:
            raise StructuralError(f"{args.gold}: gold record has no 'id' field")
        if gold.get("label") is None:
            raise StructuralError(f"{args.gold}: utterance {gid!r} has no gold label")
        if gid not in preds:
            raise StructuralError(f"{args.pred}: no prediction for utterance {gid!r}")
        label_set = gold.get("label_set")
        if not label_set:
            raise StructuralError(f"{args.gold}: utterance {gid!r} has no label_set")
        result = reward(
            _pred_output(preds[gid], args.pred),
            gold["label"],
            label_set,
            strict_case=args.strict_case,
        )
        totals["r_acc"] += result.r_acc
        totals["r_format"] += result.r_format
        totals["total"] += result.total
        lines.append(
            json.dumps(
                {
                    "id": gid,
                    "r_acc": result.r_acc,
                    "r_format": result.r_format,
                    "total": result.total,
                }
            )
        )

    n = len(golds)
    aggregate = {
        "n": n,
        "mean_r_acc": totals["r_acc"] / n,
        "mean_r_format": totals["r_format"] / n,
        "mean_total": totals["total"] / n,
    }
    if args.out:
        Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    else:
        for line in lines:
            print(line)
    print(json.dumps(aggregate))
    return 0


def _cmd_score(args: argparse.Namespace) -> int:
    golds = _read_jsonl(args.gold)
    preds = {_pred_id(r, args.pred): r for r in _read_jsonl(args.pred)}

    if args.labels:
        labels = json.loads(Path(args.labels).read_text(encoding="utf-8"))
        if not isinstance(labels, list) or not all(isinstance(s, str) for s in labels):
            raise ConfigError(f"labels file {args.labels} must be a JSON array of strings")
    else:
        labels = golds[0].get("label_set") if golds else None
        if not labels:
            raise ConfigError(
                "no --labels file given and the gold records carry no label_set"
            )

    gold_labels = []
    pred_labels = []
    for gold in golds:
        gid = gold.get("id")
        if gold.get("label") is None:
            raise StructuralError(f"{args.gold}: utterance {gid!r} has no gold label")
        if gid not in preds:
            raise StructuralError(f"{args.pred}: no prediction for utterance {gid!r}")
        rec = preds[gid]
        if rec.get("pred") is not None:
            predicted = rec["pred"]
        else:
            answer = parse_output(_pred_output(rec, args.pred)).answer
            predicted = answer.strip().lower() if answer else ""
        gold_labels.append(gold["label"])
        pred_labels.append(predicted)

    cm = confusion(gold_labels, pred_labels, labels)
    result = score(cm)
    report = {
        "uacc": result.uacc,
        "wf1": result.wf1,
        "n": result.n,
        "per_class": {
            label: {
                "precision": cs.precision,
                "recall": cs.recall,
                "f1": cs.f1,
                "support": cs.support,
            }
            for label, cs in result.per_class.items()
        },
        "confusion": {
            "labels": list(cm.labels),
            "counts": [list(row) for row in cm.counts],
            "invalid": list(cm.invalid),
        },
    }
    print(json.dumps(report, indent=2))
    return 0


def _cmd_infer(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    gw = config.gateway
    cfg = GatewayConfig(
        base_url=args.base_url or gw.base_url,
        model_name=args.model or gw.model_name,
        api_key=load_api_key(),
        max_concurrency=args.concurrency if args.concurrency is not None else gw.max_concurrency,
        timeout=args.timeout if args.timeout is not None else gw.timeout,
        max_retries=args.max_retries if args.max_retries is not None else gw.max_retries,
        temperature=args.temperature if args.temperature is not None else gw.temperature,
        retry_base_delay=gw.retry_base_delay,
    )
    n_ok, n_err = run_dataset(cfg, args.prompts, args.out)
    print(json.dumps({"n_ok": n_ok, "n_err": n_err}))
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="pipeline config JSON file")


def _add_extract_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--phones-tier", default=None, help="phones tier name (default: phones)")
    p.add_argument("--words-tier", default=None, help="words tier name (default: words)")
    p.add_argument("--jobs", type=int, default=1, help="parallel utterance workers")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="vowelprompt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="manifest -> per-vowel LLD JSONL")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--dump-contours", help="also write per-frame contour JSONL here")
    _add_extract_flags(p)
    _add_common(p)
    p.set_defaults(func=_cmd_extract)

    p = sub.add_parser("fit", help="fit normalization stats and quantile edges")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--llds", help="reuse an extracted LLD file instead of re-extracting")
    p.add_argument("--k", type=int, help="bin count (default from config: 5)")
    p.add_argument("--min-group-count", type=int, dest="min_group_count")
    _add_extract_flags(p)
    _add_common(p)
    p.set_defaults(func=_cmd_fit)

    p = sub.add_parser("render", help="render prompt dataset JSONL")
    p.add_argument("--manifest", required=True)
    p.add_argument("--stats", required=True, help="stats JSON from fit")
    p.add_argument("--out", required=True)
    p.add_argument("--template", help="prompt template id")
    p.add_argument("--llds", help="reuse an extracted LLD file")
    p.add_argument("--lexicon", help="descriptor lexicon JSON (default: packaged K=5)")
    p.add_argument("--few-shot-n", type=int, default=3, dest="few_shot_n")
    _add_extract_flags(p)
    _add_common(p)
    p.set_defaults(func=_cmd_render)

    p = sub.add_parser("verify", help="reward model outputs against gold labels")
    p.add_argument("--pred", required=True, help="inference records JSONL")
    p.add_argument("--gold", required=True, help="prompt dataset JSONL with labels")
    p.add_argument("--out", help="write per-id rewards here (default: stdout)")
    p.add_argument("--strict-case", action="store_true", help="case-sensitive matching")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("score", help="UACC/WF1 report for a prediction file")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--labels", help="JSON array of class labels")
    p.set_defaults(func=_cmd_score)

    p = sub.add_parser("infer", help="run prompts against a chat-completions server")
    p.add_argument("--prompts", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--base-url", dest="base_url")
    p.add_argument("--model")
    p.add_argument("--concurrency", type=int)
    p.add_argument("--temperature", type=float)
    p.add_argument("--timeout", type=float)
    p.add_argument("--max-retries", type=int, dest="max_retries")
    _add_common(p)
    p.set_defaults(func=_cmd_infer)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except VowelPromptError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
