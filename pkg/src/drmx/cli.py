"""Command line: ``drmx <command> [inputs] --out DIR [settings]``.

Exit status is 0 on success, 1 for usage errors, 2 for unparsable inputs,
3 when a resource bound is hit and 4 for internal failures. Failures print
one JSON line on stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Dict, List, Optional

from . import drm, pipeline
from .errors import DrmxError, ParseError, UsageError
from .kbio.config import RunConfig, load_config
from .kbio.formats import (format_features, format_network, format_vectors, header_lines,
                           parse_features, parse_network, parse_vectors)
from .kbio.report import serialize_report
from .kbio.syntax import parse_term
from .saturation import build_bottom_clause
from .vectorizer import vectorize

log = logging.getLogger("drmx")

REQUIRED = {
    "check": ("kb", "modes", "examples"),
    "saturate": ("kb", "modes", "examples", "instance"),
    "sample": ("kb", "modes", "examples"),
    "featurize": ("kb", "modes", "examples", "features"),
    "train": (),
    "predict": ("model",),
    "explain": ("kb", "modes", "examples", "relevance", "features", "model"),
    "eval": ("kb", "modes", "examples", "relevance"),
}

# flag -> (config field, type)
SETTINGS = {
    "depth": ("depth", int), "recall-cap": ("recall_cap", int),
    "literal-cap": ("literal_cap", int), "max-draws": ("max_draws", int),
    "max-clause-len": ("max_clause_len", int), "seed": ("seed", int),
    "proof-depth": ("proof_depth", int), "subsumption-budget": ("subsumption_budget", int),
    "hamming-k": ("hamming_k", int), "beam": ("beam_width", int),
    "max-body": ("max_body", int), "epsilon": ("epsilon", float),
    "partitions": ("partition_count", int), "compare-mode": ("compare_mode", str),
    "relevance-missing": ("relevance_missing", str), "hidden": ("hidden", str),
    "dropout": ("dropout", str), "lr": ("learning_rate", float),
    "momentum": ("momentum", float), "batch-size": ("batch_size", int),
    "epochs": ("epochs", int), "validation-fraction": ("validation_fraction", float),
    "init-std": ("init_std", float),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="drmx", description="Random relational features, a neural "
                "classifier over them, and symbolic explanations of its predictions.")
    sub = p.add_subparsers(dest="command", metavar="command", parser_class=_Parser)
    sub.required = True
    helps = {
        "check": "parse and validate the inputs",
        "saturate": "print the bottom clause of one example",
        "sample": "draw features",
        "featurize": "compute feature vectors",
        "train": "train the network",
        "predict": "predict classes for vectors",
        "explain": "explain predictions for instances",
        "eval": "cross-validated accuracy, fidelity and relevance statistics",
    }
    for name, text in helps.items():
        c = sub.add_parser(name, help=text)
        for f in ("kb", "modes", "examples", "relevance", "features", "model", "vectors",
                  "config"):
            c.add_argument(f"--{f}", type=Path)
        c.add_argument("--out", type=Path, help="output directory (default: stdout only)")
        c.add_argument("--instance", action="append", default=[],
                       help="instance id (repeatable)")
        c.add_argument("--holdout", action="store_true",
                       help="explain: leave the explained instances out of the training set")
        c.add_argument("--folds", type=int, default=10)
        c.add_argument("--workers", type=int, default=1)
        for flag, (_, typ) in SETTINGS.items():
            c.add_argument(f"--{flag}", type=typ, default=None)
    return p


def _tuple(text: str, typ) -> tuple:
    try:
        return tuple(typ(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise UsageError(f"expected a comma-separated list, got {text!r}") from None


def resolve_config(args, environ=os.environ) -> RunConfig:
    """Defaults < --config file < DRMX_SEED < command-line flags."""
    cfg = load_config(args.config) if args.config else RunConfig()
    env_seed = environ.get("DRMX_SEED")
    if env_seed is not None and env_seed.strip():
        try:
            cfg = cfg.update(seed=int(env_seed))
        except ValueError:
            raise UsageError(f"DRMX_SEED must be an integer, got {env_seed!r}") from None
    changes = {}
    for flag, (name, _) in SETTINGS.items():
        value = getattr(args, flag.replace("-", "_"))
        if value is None:
            continue
        if name == "hidden":
            value = _tuple(value, int)
        elif name == "dropout":
            value = _tuple(value, float)
        changes[name] = value
    if "hidden" in changes and "dropout" not in changes:
        changes["dropout"] = (0.0,) * len(changes["hidden"])
    return cfg.update(**changes)


def write_atomic(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


class Run:
    def __init__(self, args, cfg: RunConfig, stdout=None):
        self.args = args
        self.cfg = cfg
        self.stdout = stdout or sys.stdout

    @property
    def header(self) -> Dict:
        return {"command": self.args.command, "seed": self.cfg.seed,
                "config": self.cfg.to_dict()}

    def emit(self, name: str, text: str) -> None:
        if self.args.out is None:
            self.stdout.write(text)
        else:
            write_atomic(self.args.out / name, text)

    # inputs
    def kb(self):
        return pipeline.load_kb(self.args.kb, self.args.modes, self.args.examples)

    def relmap(self, kb):
        return pipeline.load_relevance(self.args.relevance, self.cfg.relevance_missing, kb.modes)

    def features(self):
        return parse_features(pipeline.read_text(self.args.features))

    def instances(self, kb) -> List:
        ids = [parse_term(i) for i in self.args.instance]
        for i in ids:
            if i not in kb.dataset.labels:
                raise UsageError(f"unknown instance {i}")
        return ids

    def vectors(self, class_set=()):
        if self.args.vectors:
            return parse_vectors(pipeline.read_text(self.args.vectors), class_set)
        missing = [f for f in ("kb", "modes", "examples", "features")
                   if getattr(self.args, f) is None]
        if missing:
            raise UsageError("need --vectors or " + ", ".join(f"--{m}" for m in missing))
        kb = self.kb()
        return vectorize(kb, self.features(), None, self.cfg.proof_depth)


def cmd_check(run: Run) -> None:
    kb = run.kb()
    info = {"background_clauses": len(kb.background), "examples": len(kb.dataset),
            "classes": [str(c) for c in kb.dataset.class_set], "modes": len(kb.modes)}
    if run.args.relevance:
        rm = run.relmap(kb)
        info["relevance_labels"] = list(rm.labels)
    if run.args.features:
        info["features"] = len(run.features())
    run.stdout.write(json.dumps(info, sort_keys=True) + "\n")


def cmd_saturate(run: Run) -> None:
    kb = run.kb()
    out = [header_lines(run.header)]
    for ident in run.instances(kb):
        b = build_bottom_clause(kb.scoped(ident), (ident, kb.dataset.labels[ident]), kb.modes,
                                run.cfg.depth, run.cfg.recall_cap, run.cfg.literal_cap,
                                run.cfg.proof_depth)
        if b.truncated:
            out.append(f"% truncated at {run.cfg.literal_cap} literals\n")
        out.append(f"{b.clause}\n")
    run.emit("bottom.pl", "".join(out))


def cmd_sample(run: Run) -> None:
    kb = run.kb()
    fs, sampler = pipeline.sample_features(kb, kb.dataset.examples(), run.cfg)
    s = sampler.stats
    log.info("draws %d, accepted %d, redundant %d", s.draws, s.accepted, s.redundant)
    run.emit("features.pl", format_features(fs, run.header))


def cmd_featurize(run: Run) -> None:
    kb = run.kb()
    data = vectorize(kb, run.features(), None, run.cfg.proof_depth)
    run.emit("vectors.txt", format_vectors(data, run.header))


def cmd_train(run: Run) -> None:
    data = run.vectors()
    net, report = drm.train(data, run.cfg)
    p = drm.NetworkPredictor(net, data.class_set)
    summary = dict(report.to_dict(), training_accuracy=drm.accuracy(p, data))
    run.emit("model.net", format_network(net, run.header))
    if run.args.out is not None:
        doc = {"run": {"seed": run.cfg.seed, "config": run.cfg.to_dict()}, "train": summary}
        write_atomic(run.args.out / "train_report.json",
                     json.dumps(doc, sort_keys=True, indent=2) + "\n")


def cmd_predict(run: Run) -> None:
    net = parse_network(pipeline.read_text(run.args.model))
    data = run.vectors(net.classes)
    p = drm.NetworkPredictor(net, net.classes)
    lines = [header_lines(run.header)]
    lines.extend(f"{v.instance_id} {p.predict(v)}\n" for v in data.vectors)
    run.emit("predictions.txt", "".join(lines))


def _slug(term) -> str:
    text = str(term)
    return "".join(ch if ch.isalnum() or ch in "_-" else "_" for ch in text)


def cmd_explain(run: Run) -> None:
    kb = run.kb()
    relmap = run.relmap(kb)
    features = run.features()
    net = parse_network(pipeline.read_text(run.args.model))
    predictor = drm.NetworkPredictor(net, net.classes)
    targets = run.instances(kb) or list(kb.dataset.ids)
    train_ids = [i for i in kb.dataset.ids if not (run.args.holdout and i in targets)]
    train = vectorize(kb, features, train_ids, run.cfg.proof_depth)
    queries = vectorize(kb, features, targets, run.cfg.proof_depth)
    meta = {"seed": run.cfg.seed, "config": run.cfg.to_dict()}
    texts = []
    for v in queries.vectors:
        result = pipeline.explain_one(v, features, train, predictor, relmap, run.cfg,
                                      kb.class_predicate)
        text, doc = serialize_report(result, features, relmap, meta)
        texts.append(text)
        if run.args.out is not None:
            write_atomic(run.args.out / f"report_{_slug(v.instance_id)}.json", doc)
            write_atomic(run.args.out / f"report_{_slug(v.instance_id)}.txt", text)
    if run.args.out is None:
        run.stdout.write("\n".join(texts))


def summary_text(summary, header_text: str) -> str:
    cols = ("fold", "n_train", "n_test", "n_features") + pipeline.METRICS
    lines = [header_text, "\t".join(cols) + "\n"]
    for f in summary.folds:
        row = f.row()
        lines.append("\t".join(f"{row[c]:.4f}" if isinstance(row[c], float) else str(row[c])
                               for c in cols) + "\n")
    for m in pipeline.METRICS:
        lines.append(f"{m}: {summary.mean[m]:.4f} ({summary.sd[m]:.4f})\n")
    return "".join(lines)


def cmd_eval(run: Run) -> None:
    kb = run.kb()
    relmap = run.relmap(kb)
    summary = pipeline.crossval(kb, relmap, run.cfg, run.args.folds, run.args.workers)
    meta = {"seed": run.cfg.seed, "config": run.cfg.to_dict()}
    doc = {"run": dict(meta, folds=run.args.folds), "summary": summary.to_dict()}
    body = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    text = summary_text(summary, header_lines(dict(run.header, folds=run.args.folds)))
    if run.args.out is None:
        run.stdout.write(text)
        return
    for fold in summary.folds:
        for result in fold.results:
            name = f"fold{fold.fold:02d}_{_slug(result.instance_id)}"
            rtext, rdoc = serialize_report(result, fold.features, relmap, meta)
            write_atomic(run.args.out / "reports" / f"{name}.json", rdoc)
            write_atomic(run.args.out / "reports" / f"{name}.txt", rtext)
    write_atomic(run.args.out / "summary.json", body)
    write_atomic(run.args.out / "summary.txt", text)


COMMANDS = {"check": cmd_check, "saturate": cmd_saturate, "sample": cmd_sample,
            "featurize": cmd_featurize, "train": cmd_train, "predict": cmd_predict,
            "explain": cmd_explain, "eval": cmd_eval}


def _error_record(exc: BaseException, code: int) -> str:
    rec = {"error": type(exc).__name__, "exit_code": code, "message": str(exc)}
    if isinstance(exc, ParseError):
        rec.update(line=exc.line, col=exc.col, token=exc.token)
    return json.dumps(rec, sort_keys=True)


def run(argv: Optional[List[str]] = None, stdout=None, stderr=None, environ=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        missing = [f for f in REQUIRED[args.command]
                   if not getattr(args, f, None)]
        if missing:
            raise UsageError(f"{args.command} needs " + ", ".join(f"--{m}" for m in missing))
        for f in ("kb", "modes", "examples", "relevance", "features", "model", "vectors",
                  "config"):
            path = getattr(args, f)
            if path is not None and not path.is_file():
                raise UsageError(f"--{f}: no such file {path}")
        if args.folds < 2 or args.workers < 1:
            raise UsageError("--folds must be >= 2 and --workers >= 1")
        cfg = resolve_config(args, os.environ if environ is None else environ)
        COMMANDS[args.command](Run(args, cfg, stdout))
        return 0
    except DrmxError as exc:
        stderr.write(_error_record(exc, exc.exit_code) + "\n")
        return exc.exit_code
    except (OSError, UnicodeDecodeError) as exc:
        stderr.write(_error_record(exc, 1) + "\n")
        return 1
    except RecursionError as exc:
        stderr.write(_error_record(exc, 3) + "\n")
        return 3
    except Exception as exc:  # anything else is a bug
        stderr.write(_error_record(exc, 4) + "\n")
        return 4


def main() -> None:
    logging.basicConfig(level=os.environ.get("DRMX_LOG", "WARNING"),
                        format="%(levelname)s %(name)s: %(message)s")
    sys.exit(run())


if __name__ == "__main__":
    main()
