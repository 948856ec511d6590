"""spoilkit command line: one subcommand per pipeline stage.

Stages couple through files, so each can be run (and re-run) on its own:

    spoilkit ingest        raw dump -> corpus.jsonl
    spoilkit clean         corpus.jsonl -> cleaned.jsonl + outcomes.jsonl
    spoilkit label         cleaned.jsonl -> labeled.jsonl
    spoilkit serve-review  labeled.jsonl + decisions.jsonl -> review UI
    spoilkit split         labeled.jsonl -> split.json
    spoilkit export        labeled.jsonl + split.json -> training files
    spoilkit eval          predictions + references -> report.jsonl
    spoilkit report        report.jsonl -> table/CSV/JSONL

Exit codes: 0 success, 1 validation/usage error, 2 I/O error.  Flags win
over the optional --config JSON file, which wins over built-in defaults.
Every subcommand writes deterministic output: same inputs and flags,
byte-identical files.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import __version__, cleaner, corpus, dataset, evalrun, review, spanlab
from .metrics import EmbeddingProvider
from .providers import HashedRandomProvider, HttpProvider, LookupFileProvider, OneHotProvider

log = logging.getLogger("spoilkit")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on usage errors; the contract here is exit 1.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(message)


class PipelineConfig:
    """Per-subcommand defaults loaded from a JSON config file.

    Shape: {"label": {"tau": 0.7}, "split": {"seed": 13}, ...} — keys match
    the long flag names with dashes as underscores.
    """

    def __init__(self, values: dict | None = None):
        self.values = values or {}

    @classmethod
    def load(cls, path: str | None) -> "PipelineConfig":
        if path is None:
            return cls()
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, dict):
            raise ValueError(f"{path}: config must be a JSON object")
        return cls(data)

    def resolve(self, subcommand: str, flag: str, cli_value, default):
        if cli_value is not None:
            return cli_value
        section = self.values.get(subcommand, {})
        if flag in section:
            return section[flag]
        return default


def _make_provider(args) -> EmbeddingProvider | None:
    kind = getattr(args, "provider", None)
    if kind is None:
        return None
    if kind == "one-hot":
        return OneHotProvider(dimension=args.provider_dim or 4096)
    if kind == "hash":
        return HashedRandomProvider(
            dimension=args.provider_dim or 32, seed=args.provider_seed or 0
        )
    if kind == "lookup":
        if not args.provider_arg:
            raise ValueError("--provider lookup requires --provider-arg PATH")
        return LookupFileProvider(args.provider_arg)
    if kind == "http":
        if not args.provider_arg:
            raise ValueError("--provider http requires --provider-arg URL")
        if not args.provider_dim:
            raise ValueError("--provider http requires --provider-dim")
        return HttpProvider(args.provider_arg, dimension=args.provider_dim)
    raise ValueError(f"unknown provider {kind!r}")


def _add_provider_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--provider",
        choices=["one-hot", "hash", "lookup", "http"],
        help="embedding provider for the semantic metric (omit: column renders n/a)",
    )
    p.add_argument("--provider-arg", help="lookup file path or http base URL")
    p.add_argument("--provider-dim", type=int, help="vector dimension")
    p.add_argument("--provider-seed", type=int, help="seed for the hash provider")


def build_parser() -> _Parser:
    parser = _Parser(prog="spoilkit", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"spoilkit {__version__}")
    parser.add_argument("--config", help="JSON config file with per-subcommand defaults")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")

    p = sub.add_parser("ingest", help="validate a raw scraped dump into a corpus file")
    p.add_argument("--in", dest="input", required=True, help="dump file")
    p.add_argument("--source", choices=list(corpus.SOURCES), required=True)
    p.add_argument("--format", choices=["jsonl", "csv"], default=None)
    p.add_argument("--out", required=True, help="corpus JSONL to write")
    p.add_argument(
        "--split-on-delimiter",
        metavar="DELIM",
        help="split a combined 'title DELIM answer' title field when no answer is present",
    )

    p = sub.add_parser("clean", help="apply answer-cleaning rules to a corpus")
    p.add_argument("--in", dest="input", required=True, help="corpus JSONL")
    p.add_argument("--rules", help="rules config file (default: packaged rules)")
    p.add_argument("--out", required=True, help="cleaned corpus JSONL")
    p.add_argument("--report", help="cleaning outcomes JSONL to write")

    p = sub.add_parser("label", help="locate answer spans in contexts")
    p.add_argument("--in", dest="input", required=True, help="cleaned corpus JSONL")
    p.add_argument("--out", required=True, help="labeled JSONL to write")
    p.add_argument("--tau", type=float, default=None, help="acceptance threshold")
    p.add_argument("--delta", type=float, default=None, help="ambiguity margin")
    p.add_argument("--window-slack", type=int, default=None, help="window length slack")

    p = sub.add_parser("split", help="deterministic stratified 8/1/1 split")
    p.add_argument("--in", dest="input", required=True, help="labeled JSONL")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True, help="split JSON to write")

    p = sub.add_parser("export", help="write training/eval files for one split part")
    p.add_argument("--in", dest="input", required=True, help="labeled JSONL")
    p.add_argument("--split", required=True, help="split JSON")
    p.add_argument("--part", choices=list(dataset.PARTS), required=True)
    p.add_argument(
        "--format",
        choices=["extractive", "abstractive", "predictions-template"],
        required=True,
    )
    p.add_argument("--out", required=True)
    p.add_argument("--decisions", help="review decision log to honor (export gate)")
    p.add_argument("--cleaning-report", help="outcomes JSONL; flagged posts are dropped")
    p.add_argument(
        "--include-flagged",
        action="store_true",
        help="keep cleaner-flagged posts in the export",
    )

    p = sub.add_parser("eval", help="score prediction files against references")
    p.add_argument("--references", required=True, help="labeled JSONL")
    p.add_argument("--split", required=True, help="split JSON")
    p.add_argument("--part", choices=list(dataset.PARTS), default=None)
    p.add_argument("--predictions", nargs="+", required=True, help="predictions JSONL file(s)")
    p.add_argument(
        "--model-names", nargs="+", help="row names (default: prediction file stems)"
    )
    p.add_argument("--cleaning-report", help="outcomes JSONL; flagged posts are excluded")
    p.add_argument("--out", required=True, help="report JSONL to write (raw scores)")
    _add_provider_flags(p)

    p = sub.add_parser("report", help="render a stored eval report")
    p.add_argument("--in", dest="input", required=True, help="report JSONL")
    p.add_argument(
        "--format", choices=list(evalrun.REPORT_FORMATS), default="text_table"
    )
    p.add_argument("--out", default="-", help="output file, '-' for stdout")

    p = sub.add_parser("serve-review", help="run the span review HTTP service")
    p.add_argument("--labeled", required=True, help="labeled JSONL")
    p.add_argument("--log", required=True, help="decision log (created if missing)")
    p.add_argument("--bind", default=None, help="host:port (default 127.0.0.1:8765)")
    p.add_argument("--static-dir", help="directory of review UI assets to serve")

    return parser


def _guess_format(path: str, explicit: str | None) -> str:
    if explicit:
        return explicit
    return "csv" if path.endswith(".csv") else "jsonl"


def _eprint(*args) -> None:
    print(*args, file=sys.stderr)


def _load_flagged(args) -> set[str]:
    if getattr(args, "include_flagged", False) or not getattr(args, "cleaning_report", None):
        return set()
    return cleaner.flagged_ids(cleaner.read_outcomes(args.cleaning_report))


def _cmd_ingest(args, cfg: PipelineConfig) -> int:
    fmt = _guess_format(args.input, cfg.resolve("ingest", "format", args.format, None))
    result = corpus.ingest_dump(
        args.input, args.source, fmt, split_delimiter=args.split_on_delimiter
    )
    corpus.write_corpus(args.out, result)
    _eprint(
        f"ingested {result.stats.count} posts "
        f"({result.stats.dropped_count} dropped: {result.stats.drop_reasons})"
    )
    return EXIT_OK


def _cmd_clean(args, cfg: PipelineConfig) -> int:
    rules_path = cfg.resolve("clean", "rules", args.rules, None)
    rules = cleaner.RuleSet.from_config(rules_path) if rules_path else cleaner.RuleSet.default()
    input_corpus = corpus.read_corpus(args.input)
    cleaned, outcomes = cleaner.clean_corpus(input_corpus, rules)
    corpus.write_corpus(args.out, cleaned)
    if args.report:
        cleaner.write_outcomes(args.report, outcomes)
    summary = cleaner.cleaning_summary(outcomes)
    _eprint(
        f"cleaned {summary['total']} posts: {summary['by_action']} "
        f"(flagged fraction {summary['flagged_fraction']:.2f})"
    )
    return EXIT_OK


def _cmd_label(args, cfg: PipelineConfig) -> int:
    labeler_cfg = spanlab.LabelerConfig(
        tau=float(cfg.resolve("label", "tau", args.tau, 0.65)),
        delta=float(cfg.resolve("label", "delta", args.delta, 0.05)),
        window_slack=int(cfg.resolve("label", "window_slack", args.window_slack, 3)),
    )
    posts = corpus.read_corpus(args.input).posts
    examples = spanlab.label_corpus(posts, labeler_cfg)
    spanlab.write_labeled(args.out, examples)
    _eprint(f"labeled {len(examples)} examples: {spanlab.status_histogram(examples)}")
    return EXIT_OK


def _cmd_split(args, cfg: PipelineConfig) -> int:
    seed = int(cfg.resolve("split", "seed", args.seed, 0))
    examples = spanlab.read_labeled(args.input)
    split = dataset.split_corpus(examples, seed)
    dataset.write_split(args.out, split)
    _eprint(
        f"split {len(examples)} examples with seed {seed}: "
        f"{len(split.train)}/{len(split.validation)}/{len(split.test)}"
    )
    return EXIT_OK


def _cmd_export(args, cfg: PipelineConfig) -> int:
    examples = spanlab.read_labeled(args.input)
    if args.decisions:
        examples = review.apply_decisions(examples, review.read_decision_log(args.decisions))
    split = dataset.read_split(args.split)
    flagged = _load_flagged(args)
    if args.format == "extractive":
        dataset.export_extractive(examples, split, args.part, args.out, flagged)
    elif args.format == "abstractive":
        dataset.export_abstractive(examples, split, args.part, args.out, flagged)
    else:
        dataset.export_predictions_template(examples, split, args.part, args.out, flagged)
    _eprint(f"wrote {args.format} export for part {args.part!r} to {args.out}")
    return EXIT_OK


def _cmd_eval(args, cfg: PipelineConfig) -> int:
    part = cfg.resolve("eval", "part", args.part, "test")
    examples = spanlab.read_labeled(args.references)
    split = dataset.read_split(args.split)
    flagged = _load_flagged(args)
    by_id = {e.post.id: e for e in examples}
    missing = [i for i in split.part(part) if i not in by_id]
    if missing:
        raise ValueError(
            f"split part {part!r} references ids missing from the labeled file: "
            f"{missing[:5]}"
        )
    references = {
        i: by_id[i].post.answer for i in split.part(part) if i not in flagged
    }
    provider = _make_provider(args)
    names = args.model_names or [None] * len(args.predictions)
    if len(names) != len(args.predictions):
        raise ValueError("--model-names must match --predictions in count")
    rows = []
    for path, name in zip(args.predictions, names):
        predictions = evalrun.load_predictions(path, name)
        rows.append(evalrun.evaluate(predictions, references, provider))
    report = evalrun.EvalReport(
        rows=tuple(rows), split_id=f"seed{split.seed}:{part}", example_count=len(references)
    )
    evalrun.write_report(args.out, report)
    _eprint(f"evaluated {len(rows)} model(s) on {len(references)} examples -> {args.out}")
    return EXIT_OK


def _cmd_report(args, cfg: PipelineConfig) -> int:
    report = evalrun.read_report(args.input)
    rendered = evalrun.render_report(report, args.format)
    if args.out == "-":
        sys.stdout.write(rendered)
    else:
        Path(args.out).write_text(rendered, encoding="utf-8")
    return EXIT_OK


def _cmd_serve_review(args, cfg: PipelineConfig) -> int:
    review.serve(
        args.labeled,
        args.log,
        bind=cfg.resolve("serve-review", "bind", args.bind, "127.0.0.1:8765"),
        static_dir=args.static_dir,
    )
    return EXIT_OK


_COMMANDS = {
    "ingest": _cmd_ingest,
    "clean": _cmd_clean,
    "label": _cmd_label,
    "split": _cmd_split,
    "export": _cmd_export,
    "eval": _cmd_eval,
    "report": _cmd_report,
    "serve-review": _cmd_serve_review,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        _eprint(f"spoilkit: error: {exc}")
        return EXIT_VALIDATION
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
        stream=sys.stderr,
    )
    if args.subcommand is None:
        parser.print_help(sys.stderr)
        return EXIT_VALIDATION
    try:
        config = PipelineConfig.load(args.config)
        return _COMMANDS[args.subcommand](args, config)
    except OSError as exc:
        _eprint(f"spoilkit: i/o error: {exc}")
        return EXIT_IO
    except (ValueError, KeyError) as exc:
        _eprint(f"spoilkit: error: {exc}")
        return EXIT_VALIDATION


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
