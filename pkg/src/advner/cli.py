"""``advner`` command line.

Exit codes: 0 success, 1 usage error, 2 data error, 3 transport error. Errors
are reported on stderr as one JSON line.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import __version__
from .corpus import SplitSpec, concat_corpora, read_corpus, split_corpus, write_corpus
from .errors import AdvnerError, DataError
from .evaluate import SCHEMAS, EvalReport, compare_reports, evaluate, render_grid
from .modelclient import (FileParaphraser, HTTPMaskFiller, HTTPParaphraser, HTTPTagger, ModelEndpoint,
                          StubMaskFiller, StubTagger, tag_corpus)
from .perturb import METHODS, Gazetteer, PerturbationConfig, perturb, write_records
from .stats import paired_t_test, read_run_series, summarize

log = logging.getLogger("advner")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_TRANSPORT = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _csv(value):
    if isinstance(value, (list, tuple)):
        return [str(v) for v in value]
    return [v.strip() for v in str(value).split(",") if v.strip()]


# -- metadata ------------------------------------------------------------------

def _digest(path):
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


# file locations; inputs are identified by digest instead
_PATH_OPTIONS = {"input", "output", "records", "gold", "pred", "text", "report_a", "report_b", "reports", "first",
                 "second", "train", "adv", "out_retrain", "out_finetune", "out_test", "series_a", "series_b",
                 "memory", "mask_corpus", "paraphrases"}


def _metadata(args, inputs):
    config = {k: v for k, v in sorted(vars(args).items())
              if k not in ("func", "config") and k not in _PATH_OPTIONS and not callable(v)}
    canonical = json.dumps(config, sort_keys=True, default=str)
    return {
        "tool": "advner",
        "version": __version__,
        "command": args.command,
        "config": json.loads(canonical),
        "config_hash": hashlib.sha256(canonical.encode()).hexdigest(),
        "inputs": {str(p): _digest(p) for p in inputs if p},
    }


def _write_sidecar(path, meta):
    with open(f"{path}.meta.json", "w", encoding="utf-8") as f:
        json.dump(meta, f, indent=2)
        f.write("\n")


def _emit(text, path):
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# -- commands ------------------------------------------------------------------

def _read(args, path, name=None):
    return read_corpus(path, column=args.tag_column, coerce=args.coerce_tags, name=name)


def _endpoint(args, url, role):
    return ModelEndpoint(url, role, timeout=args.timeout, max_in_flight=max(1, min(args.max_in_flight, args.jobs)),
                         retries=args.retries, token=args.token)


def cmd_perturb(args):
    corpus = _read(args, args.input)
    method = args.method.lower()
    gazetteer = suggester = paraphraser = None
    inputs = [args.input]
    locales = tuple(_csv(args.locales)) if args.locales else ()
    if method == "faker":
        gazetteer = Gazetteer.load(args.gazetteer)
        locales = locales or gazetteer.locales
        if Path(str(args.gazetteer)).exists():
            inputs.append(args.gazetteer)
    config = PerturbationConfig(method=method, seed=args.seed, max_masks=args.max_masks, jobs=args.jobs,
                                faker_types=frozenset(_csv(args.faker_types)), locales=locales)
    if method in ("mask", "m+r"):
        if args.offline or not args.maskfill_url:
            if not args.offline:
                raise UsageError(f"--method {method} needs --maskfill-url or --offline")
            source = _read(args, args.mask_corpus) if args.mask_corpus else corpus
            suggester = StubMaskFiller(source)
            if args.mask_corpus:
                inputs.append(args.mask_corpus)
        else:
            suggester = HTTPMaskFiller(_endpoint(args, args.maskfill_url, "maskfill"))
    if method == "para":
        if args.paraphrases:
            paraphraser = FileParaphraser.load(args.paraphrases)
            inputs.append(args.paraphrases)
        elif args.paraphrase_url and not args.offline:
            paraphraser = HTTPParaphraser(_endpoint(args, args.paraphrase_url, "paraphrase"))
        else:
            raise UsageError("--method para needs --paraphrases FILE (or --paraphrase-url when online)")

    out, records = perturb(corpus, config, gazetteer=gazetteer, suggester=suggester, paraphraser=paraphraser)
    write_corpus(out, args.output)
    records_path = args.records or f"{args.output}.records.jsonl"
    write_records(records, records_path)
    meta = _metadata(args, inputs)
    meta["resolved"] = {"locales": list(config.locales), "faker_types": sorted(config.faker_types)}
    meta["sentences"] = {"input": len(corpus), "output": len(out)}
    _write_sidecar(args.output, meta)
    log.info("%s: %d -> %d sentences", method, len(corpus), len(out))


def cmd_tag(args):
    corpus = _read(args, args.input)
    inputs = [args.input]
    if args.offline or not args.tagger_url:
        if not args.offline:
            raise UsageError("tag needs --tagger-url or --offline")
        if not args.memory:
            raise UsageError("offline tagging needs --memory CORPUS for the stub tagger")
        tagger = StubTagger(_read(args, args.memory))
        inputs.append(args.memory)
    else:
        tagger = HTTPTagger(_endpoint(args, args.tagger_url, "tagger"), batch_size=args.batch_size)
    pred = tag_corpus(tagger, corpus)
    write_corpus(pred, args.output)
    _write_sidecar(args.output, _metadata(args, inputs))


def cmd_evaluate(args):
    gold = _read(args, args.gold)
    # CoNLL files carry no sentence ids; pred sentences join gold by position
    pred = replace(_read(args, args.pred, name=gold.name), name=args.pred_name or Path(args.pred).stem)
    if args.gold_name:
        gold = replace(gold, name=args.gold_name)
    report = evaluate(gold, pred)
    report.meta = _metadata(args, [args.gold, args.pred])
    if args.output:
        Path(args.output).write_text(report.to_json(), encoding="utf-8")
    schemas = [s for v in args.schema for s in _csv(v)] if args.schema else [s.value for s in SCHEMAS]
    text = report.render_text(schemas=schemas, per_type=args.per_type)
    _emit(text, args.text)


def _load_report(path):
    try:
        return EvalReport.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))
    except json.JSONDecodeError as e:
        raise DataError(f"{path}: not a JSON report ({e})") from None


def cmd_compare(args):
    cmp = compare_reports(_load_report(args.report_a), _load_report(args.report_b))
    if args.format == "json":
        d = cmp.to_dict()
        d["meta"] = _metadata(args, [args.report_a, args.report_b])
        _emit(json.dumps(d, indent=2) + "\n", args.output)
    else:
        _emit(cmp.to_tsv(), args.output)
        if args.output:
            _write_sidecar(args.output, _metadata(args, [args.report_a, args.report_b]))


def cmd_report(args):
    reports = [_load_report(p) for p in args.reports]
    labels = _csv(args.labels) if args.labels else None
    if labels and len(labels) != len(reports):
        raise UsageError("--labels needs one label per report")
    schemas = [s for v in args.schema for s in _csv(v)] if args.schema else ["strict", "exact"]
    _emit(render_grid(reports, labels=labels, schemas=schemas, digits=args.digits), args.output)


def cmd_split(args):
    corpus = _read(args, args.input)
    first, second = split_corpus(corpus, SplitSpec(args.ratio, args.seed))
    meta = _metadata(args, [args.input])
    for part, path in ((first, args.first), (second, args.second)):
        write_corpus(part, path)
        _write_sidecar(path, dict(meta, sentences=len(part)))


def cmd_augment(args):
    train = _read(args, args.train)
    adv = _read(args, args.adv)
    adv_train, adv_test = split_corpus(adv, SplitSpec(args.ratio, args.seed))
    meta = _metadata(args, [args.train, args.adv])
    outputs = [(concat_corpora(train, adv_train), args.out_retrain), (adv_train, args.out_finetune),
               (adv_test, args.out_test)]
    for part, path in outputs:
        if path:
            write_corpus(part, path)
            _write_sidecar(path, dict(meta, sentences=len(part)))


def _pick_series(path, condition):
    series = read_run_series(path, condition)
    if len(series) != 1:
        raise UsageError(f"{path} holds {len(series)} conditions; choose one with --condition-a/--condition-b")
    return series[0]


def cmd_significance(args):
    a = _pick_series(args.series_a, args.condition_a)
    b = _pick_series(args.series_b, args.condition_b)
    result = paired_t_test(a, b)
    out = result.as_dict(args.threshold)
    out["a"] = {"condition": a.condition_name, "mean": summarize(a)[0], "sd": summarize(a)[1], "n": len(a.values)}
    out["b"] = {"condition": b.condition_name, "mean": summarize(b)[0], "sd": summarize(b)[1], "n": len(b.values)}
    out["meta"] = _metadata(args, [args.series_a, args.series_b])
    _emit(json.dumps(out, indent=2) + "\n", args.output)


# -- parser ----------------------------------------------------------------------

def build_parser():
    common = _Parser(add_help=False)
    g = common.add_argument_group("common options")
    g.add_argument("--config", help="JSON file of option defaults (flags override it)")
    g.add_argument("--offline", action="store_true", help="use built-in stubs for every model role")
    g.add_argument("--jobs", type=int, default=1, help="cap on worker parallelism")
    g.add_argument("--coerce-tags", action="store_true", help="repair IOB1/dangling I- tags instead of failing")
    g.add_argument("--tag-column", type=int, default=-1, help="tag column index (default: last)")
    g.add_argument("--log-level", default="WARNING")

    net = _Parser(add_help=False)
    n = net.add_argument_group("endpoint options")
    n.add_argument("--timeout", type=float, default=30.0)
    n.add_argument("--retries", type=int, default=2)
    n.add_argument("--max-in-flight", type=int, default=4)
    n.add_argument("--token", help="bearer token for model endpoints")

    parser = _Parser(prog="advner", description="Adversarial NER test sets, evaluation and significance testing.")
    parser.add_argument("--version", action="version", version=f"advner {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("perturb", parents=[common, net], help="generate an adversarial corpus variant")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--method", required=True, type=str.lower, choices=METHODS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-masks", type=int, default=3)
    p.add_argument("--locales", help="comma-separated locales for faker (default: all in the gazetteer)")
    p.add_argument("--faker-types", default="PER,LOC")
    p.add_argument("--gazetteer", default="english", help="gazetteer JSON file or bundled name "
                                                           "(english, german, hindi)")
    p.add_argument("--maskfill-url")
    p.add_argument("--mask-corpus", help="corpus backing the offline mask filler (default: input)")
    p.add_argument("--paraphrase-url")
    p.add_argument("--paraphrases", help="TSV of sentence_id<TAB>paraphrase")
    p.add_argument("--records", help="record sidecar path (default: OUTPUT.records.jsonl)")
    p.set_defaults(func=cmd_perturb)

    p = sub.add_parser("tag", parents=[common, net], help="tag a corpus with a model endpoint or the stub")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--tagger-url")
    p.add_argument("--memory", help="training corpus for the offline stub tagger")
    p.add_argument("--batch-size", type=int, default=32)
    p.set_defaults(func=cmd_tag)

    p = sub.add_parser("evaluate", parents=[common], help="score predictions against gold")
    p.add_argument("gold")
    p.add_argument("pred")
    p.add_argument("-o", "--output", help="report JSON path")
    p.add_argument("--text", help="write the text rendering here instead of stdout")
    p.add_argument("--schema", action="append", help="schemas to render (repeatable or comma-separated)")
    p.add_argument("--per-type", action="store_true", help="include per-type rows in the text rendering")
    p.add_argument("--gold-name")
    p.add_argument("--pred-name")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", parents=[common], help="F1 and error deltas between two reports (b - a)")
    p.add_argument("report_a")
    p.add_argument("report_b")
    p.add_argument("--format", choices=("tsv", "json"), default="tsv")
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", parents=[common], help="F1 grid over one or more reports")
    p.add_argument("reports", nargs="+")
    p.add_argument("--labels", help="comma-separated column labels")
    p.add_argument("--schema", action="append")
    p.add_argument("--digits", type=int, default=2)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("split", parents=[common], help="seeded random split")
    p.add_argument("input")
    p.add_argument("--ratio", type=float, default=0.6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--first", required=True, help="output for the ratio part")
    p.add_argument("--second", required=True, help="output for the remainder")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("augment", parents=[common], help="build re-training and fine-tuning files")
    p.add_argument("--train", required=True)
    p.add_argument("--adv", required=True)
    p.add_argument("--ratio", type=float, default=0.6)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-retrain", help="train + adversarial part")
    p.add_argument("--out-finetune", help="adversarial part alone")
    p.add_argument("--out-test", help="held-out adversarial remainder")
    p.set_defaults(func=cmd_augment)

    p = sub.add_parser("significance", parents=[common], help="paired t-test between two run series")
    p.add_argument("series_a")
    p.add_argument("series_b")
    p.add_argument("--condition-a")
    p.add_argument("--condition-b")
    p.add_argument("--threshold", type=float, default=0.001)
    p.add_argument("-o", "--output")
    p.set_defaults(func=cmd_significance)
    return parser, sub


def _apply_config(argv, sub):
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        cfg = json.loads(Path(known.config).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise UsageError(f"cannot read config {known.config}: {e}") from None
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    shared = {k.replace("-", "_"): v for k, v in cfg.items() if not isinstance(v, dict)}
    for name, p in sub.choices.items():
        dests = {a.dest for a in p._actions}
        section = {k.replace("-", "_"): v for k, v in cfg.get(name, {}).items()}
        values = {k: v for k, v in {**shared, **section}.items() if k in dests}
        for action in p._actions:
            if action.dest in values:
                action.required = False
        p.set_defaults(**values)


def _fail(code, kind, message, **details):
    payload = {"error": kind, "message": message, "exit_code": code, **details}
    print("advner: " + json.dumps(payload, ensure_ascii=False), file=sys.stderr)
    return code


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, sub = build_parser()
    try:
        _apply_config(argv, sub)
        args = parser.parse_args(argv)
        logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                            format="%(levelname)s %(name)s: %(message)s")
        args.func(args)
    except UsageError as e:
        return _fail(EXIT_USAGE, "usage", str(e))
    except AdvnerError as e:
        return _fail(e.exit_code, type(e).__name__, str(e), **e.details())
    except OSError as e:
        return _fail(EXIT_DATA, type(e).__name__, str(e))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
