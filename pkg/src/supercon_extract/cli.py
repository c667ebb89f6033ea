"""Command line entry points: extract, batch, eval, stats and serve."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys

from . import __version__
from .aggregator import export, process_corpus, read_database
from .evaluation import AlignmentError, MarkError, corpus_stats, score_links, score_ner, tally_errors
from .model import AnnotatedDocument, FormatError, digest_bytes, dumps
from .pipeline import (
    EXPORT_FORMATS, TAG_NEVER, ConfigError, PipelineConfig, process_bytes, process_document, resolve_timestamp,
)
from .tagger import AnnotationError, ingest_annotations

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_CONFIG = 2


class CommandError(Exception):
    """A user-facing failure; the message is printed and the exit code is 1."""


def _config(args):
    overrides = {
        "workers": getattr(args, "workers", None),
        "format": getattr(args, "format", None),
        "timestamp": getattr(args, "timestamp", None),
    }
    if args.config:
        return PipelineConfig.from_file(args.config, **overrides)
    return PipelineConfig(**{k: v for k, v in overrides.items() if v is not None}).checked()


def _write(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)
    except OSError as exc:
        raise CommandError(f"cannot write {path}: {exc.strerror}") from None


def _read_input(path):
    if path in (None, "-"):
        return sys.stdin.buffer.read(), ""
    try:
        with open(path, "rb") as handle:
            return handle.read(), path
    except OSError as exc:
        raise CommandError(f"cannot read {path}: {exc.strerror}") from None


def _table(header, rows):
    buffer = io.StringIO()
    writer = csv.writer(buffer, delimiter="\t", lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue()


# -- extract -------------------------------------------------------------------

def cmd_extract(args):
    config = _config(args)
    data, name = _read_input(args.input)
    try:
        if args.gold:
            text = data.decode("utf-8")
            digest = digest_bytes(data)
            doc = ingest_annotations(text, args.gold, doc_id=args.id or digest[:16], digest=digest,
                                     timestamp=resolve_timestamp(config.timestamp))
            result = process_document(doc, config, tagging=TAG_NEVER)
        elif name.lower().endswith(".json"):
            result = process_bytes(data, name, config, doc_id=args.id)
        else:
            # text files are not named after the file, so extract and the server agree byte for byte
            result = process_bytes(data, "", config, doc_id=args.id)
    except (UnicodeDecodeError, FormatError, AnnotationError, ValueError) as exc:
        raise CommandError(str(exc)) from None
    _write(dumps(result.to_dict()), args.output)
    if args.records:
        export(result.records, args.records, config.format)
    return EXIT_OK


# -- batch ---------------------------------------------------------------------

def cmd_batch(args):
    config = _config(args)
    if not os.path.isdir(args.input):
        raise CommandError(f"not a directory: {args.input}")
    try:
        report = process_corpus(args.input, args.output, config.workers, config, args.report)
    except OSError as exc:
        raise CommandError(str(exc)) from None
    if args.export:
        export(read_database(args.output), args.export, config.format)
    totals = report["totals"]
    print(
        f"{totals['documents']} documents: {totals['ok']} ok, {totals['failed']} failed; "
        f"{totals['records']} records written to {args.output}",
        file=sys.stderr,
    )
    return EXIT_OK


# -- eval / stats --------------------------------------------------------------

def load_corpus(path):
    """Canonical documents from a directory of ``.json`` files or one JSON file
    holding a document or a list of documents."""
    paths = [path]
    if os.path.isdir(path):
        paths = [os.path.join(path, n) for n in sorted(os.listdir(path)) if n.endswith(".json")]
    docs = []
    for p in paths:
        try:
            with open(p, encoding="utf-8") as handle:
                data = json.load(handle)
        except OSError as exc:
            raise CommandError(f"cannot read {p}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise CommandError(f"{p}: invalid JSON: {exc}") from None
        items = data if isinstance(data, list) else [data]
        try:
            docs.extend(AnnotatedDocument.from_dict(item) for item in items)
        except (FormatError, KeyError, TypeError, ValueError) as exc:
            raise CommandError(f"{p}: {exc}") from None
    return docs


def _score_rows(report):
    return [(name, f"{p:.2f}", f"{r:.2f}", f"{f:.2f}", s) for name, p, r, f, s in report.rows()]


def cmd_eval(args):
    if args.kind == "errors":
        if not args.marks:
            raise CommandError("eval errors needs a marked records file")
        try:
            report = tally_errors(args.marks)
        except OSError as exc:
            raise CommandError(f"cannot read {args.marks}: {exc.strerror}") from None
        except MarkError as exc:
            raise CommandError(str(exc)) from None
        rows = [(k, f"{v.precision:.2f}", v.total) for k, v in report.subsections.items()]
        rows += [(f"micro_{k}", f"{v.precision:.2f}", v.total) for k, v in report.micro.items()]
        text = _table(("subsection", "precision", "support"), rows)
        text += "\n" + _table(("error_type", "count"), list(report.tally.counts.items()))
    else:
        if not args.gold or not args.predicted:
            raise CommandError(f"eval {args.kind} needs --gold and --predicted")
        gold, predicted = load_corpus(args.gold), load_corpus(args.predicted)
        scorer = score_ner if args.kind == "ner" else score_links
        try:
            report = scorer(gold, predicted, args.subsection)
        except AlignmentError as exc:
            raise CommandError(str(exc)) from None
        text = _table(("label", "precision", "recall", "f1", "support"), _score_rows(report))
    _write(text, args.output)
    if args.json:
        _write(dumps(report.to_dict()), args.json)
    if args.figures:
        from .plotting import render_eval_figures

        for path in render_eval_figures(report, args.figures, args.kind):
            print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def cmd_stats(args):
    holdout = load_corpus(args.holdout)
    training = load_corpus(args.training) if args.training else None
    stats = corpus_stats(holdout, training)
    rows = [
        (label, stats.label_counts[label], stats.unique_counts[label],
         f"{stats.variability[label]:.2f}",
         f"{stats.out_of_domain[label]:.2f}" if label in stats.out_of_domain else "")
        for label in stats.label_counts
    ]
    text = _table(("label", "entities", "unique", "variability", "out_of_domain"), rows)
    text += "\n" + _table(("documents", "examples", "positive", "negative", "entities", "unique"), [(
        stats.documents, stats.examples, stats.positive_examples, stats.negative_examples,
        stats.entities, stats.unique_entities,
    )])
    _write(text, args.output)
    if args.json:
        _write(dumps(stats.to_dict()), args.json)
    if args.figures:
        from .plotting import plot_corpus_stats

        path = plot_corpus_stats(stats, os.path.join(args.figures, "corpus_stats.png"))
        print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def cmd_serve(args):
    from .server import serve

    serve(args.host, args.port, _config(args))
    return EXIT_OK


# -- parser --------------------------------------------------------------------

def build_parser():
    parser = argparse.ArgumentParser(prog="supercon-extract", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, workers=False):
        p.add_argument("--config", help="JSON configuration file")
        p.add_argument("--format", choices=EXPORT_FORMATS, help="record export format")
        p.add_argument("--timestamp", help="timestamp for documents that carry none (ISO 8601)")
        if workers:
            p.add_argument("--workers", type=int, help="parallel worker processes")

    p = sub.add_parser("extract", help="run the pipeline on one text or canonical JSON document")
    p.add_argument("input", nargs="?", default="-", help="input file, '-' for stdin")
    p.add_argument("--gold", help="annotation file to use instead of the tagger")
    p.add_argument("--id", help="document id (default: digest prefix)")
    p.add_argument("-o", "--output", help="annotations JSON destination (default stdout)")
    p.add_argument("--records", help="also export the records to this file")
    common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("batch", help="map-reduce run over a directory of documents")
    p.add_argument("input", help="directory of .txt and .json documents")
    p.add_argument("-o", "--output", required=True, help="newline-delimited JSON database")
    p.add_argument("--report", help="run report path (default: OUTPUT.report.json)")
    p.add_argument("--export", help="also export the database as csv/tsv/json")
    common(p, workers=True)
    p.set_defaults(func=cmd_batch)

    p = sub.add_parser("eval", help="score predictions or tally marked records")
    p.add_argument("kind", choices=("ner", "links", "errors"))
    p.add_argument("marks", nargs="?", help="marked records CSV (errors only)")
    p.add_argument("--gold", help="gold corpus (file or directory)")
    p.add_argument("--predicted", help="predicted corpus (file or directory)")
    p.add_argument("--subsection", help="score only sentences of this subsection")
    p.add_argument("-o", "--output", help="tab-separated report (default stdout)")
    p.add_argument("--json", help="also write the full report as JSON")
    p.add_argument("--figures", help="directory for PNG figures")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("stats", help="corpus statistics of a holdout set")
    p.add_argument("holdout")
    p.add_argument("--training", help="training corpus for the out-of-domain ratio")
    p.add_argument("-o", "--output", help="tab-separated report (default stdout)")
    p.add_argument("--json", help="also write the statistics as JSON")
    p.add_argument("--figures", help="directory for PNG figures")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("serve", help="HTTP endpoint: POST /process, GET /health")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8080)
    common(p)
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CommandError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
