"""Command line entry point: ``dualctx index|context|prompt|eval|serve``.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .analogy import SIM_KINDS
from .chunking import ChunkingError
from .graph import GraphError
from .metrics import DatasetError, load_dataset, run_eval
from .pipeline import (
    ConfigError,
    MissingIndexError,
    NoFilesIndexed,
    PipelineConfig,
    QueryError,
    build_context,
    build_prompt,
    index_repo,
    load_index,
    write_index,
)
from .prompt import ORDERS
from .rtg import SCORER_KINDS, ScoringError
from .source_model import FactsSchemaError, RepoScanError

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

DATA_ERRORS = (
    ChunkingError, ConfigError, DatasetError, FactsSchemaError, GraphError,
    MissingIndexError, NoFilesIndexed, QueryError, RepoScanError, ScoringError,
)

# flag dest -> PipelineConfig field
_FLAG_FIELDS = {
    "ell": "ell", "eta": "eta", "sim": "sim", "threshold": "epsilon", "top_k": "top_k",
    "scorer": "scorer", "seed": "seed", "budget": "budget", "infile_budget": "infile_budget",
    "order": "order", "graph": "graph_path", "chunks": "chunks_path", "oracle_table": "oracle_table",
    "glob": "include_globs",
}


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise _UsageError(f"{self.prog}: error: {message}")


def dump_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, ensure_ascii=False) + "\n"


def _add_config_flags(p: argparse.ArgumentParser, retrieval: bool = True) -> None:
    p.add_argument("--config", help="JSON config file (same keys as the pipeline config)")
    p.add_argument("--ell", type=int, help="chunk length in lines (default 10)")
    p.add_argument("--eta", type=int, help="chunk sliding step (default 5)")
    p.add_argument("--graph", help="graph file (default <root>/.dualctx/graph.json)")
    p.add_argument("--chunks", help="chunk index file (default <root>/.dualctx/chunks.json)")
    p.add_argument("--glob", action="append", help="include glob, repeatable (default *.py)")
    if not retrieval:
        return
    p.add_argument("--sim", choices=SIM_KINDS)
    p.add_argument("--threshold", type=float, help="analogy similarity floor (default 0.3)")
    p.add_argument("--top-k", type=int, help="max analogy items (default 5)")
    p.add_argument("--scorer", choices=SCORER_KINDS)
    p.add_argument("--oracle-table", help="JSON map item id -> score for --scorer oracle")
    p.add_argument("--seed", type=int)
    p.add_argument("--budget", type=int, help="cross-file token budget (default 512)")
    p.add_argument("--infile-budget", type=int, help="in-file token budget (default 2048)")
    p.add_argument("--order", choices=ORDERS)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="dualctx", description="Repository-level dual context retrieval for code completion.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("index", help="index a repository (graph + chunk index)")
    p.add_argument("root")
    _add_config_flags(p, retrieval=False)

    for name, help_ in (("context", "report analogy, rationale and truncated context"),
                        ("prompt", "assemble the completion prompt")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("root")
        p.add_argument("--file", required=True, help="repo-relative path of the edited file")
        p.add_argument("--line", required=True, type=int, help="1-based cursor line")
        p.add_argument("--prefix-file", help="read the edited text from this file instead of the repo copy")
        if name == "prompt":
            p.add_argument("--raw", action="store_true", help="print the prompt text only")
        _add_config_flags(p)

    p = sub.add_parser("eval", help="score completions against a dataset")
    p.add_argument("--dataset", required=True, help="JSONL of examples")
    p.add_argument("--completions", required=True, help="JSONL of {task_id, prediction}")
    p.add_argument("--report", help="write the JSON report here")
    p.add_argument("--no-retrieval", action="store_true", help="skip context counting")
    _add_config_flags(p)

    p = sub.add_parser("serve", help="serve the context endpoints over HTTP")
    p.add_argument("root")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8765)
    _add_config_flags(p)
    return parser


def config_from_args(args: argparse.Namespace) -> PipelineConfig:
    """Defaults, then the config file, then explicit flags."""
    config = PipelineConfig.from_file(args.config) if getattr(args, "config", None) else PipelineConfig()
    overrides = {}
    for dest, fname in _FLAG_FIELDS.items():
        value = getattr(args, dest, None)
        if value is not None:
            overrides[fname] = tuple(value) if fname == "include_globs" else value
    return config.replace(**overrides)


def _cmd_index(args, config: PipelineConfig) -> int:
    index = index_repo(args.root, config)
    for d in index.diagnostics:
        logging.getLogger("dualctx.index").debug(d)
    write_index(index, config)
    summary = index.summary()
    summary["n_diagnostics"] = len(index.diagnostics)
    sys.stdout.write(dump_json(summary))
    return EXIT_OK


def _edited_text(args) -> str | None:
    return Path(args.prefix_file).read_text(encoding="utf-8") if args.prefix_file else None


def _cmd_context(args, config: PipelineConfig) -> int:
    index = load_index(args.root, config)
    ctx = build_context(index, args.file, args.line, config, edited_text=_edited_text(args))
    sys.stdout.write(dump_json(ctx.to_dict()))
    return EXIT_OK


def _cmd_prompt(args, config: PipelineConfig) -> int:
    index = load_index(args.root, config)
    _, bundle = build_prompt(index, args.file, args.line, config, edited_text=_edited_text(args))
    sys.stdout.write(bundle.full_prompt if args.raw else dump_json(bundle.to_dict()))
    return EXIT_OK


def _cmd_eval(args, config: PipelineConfig) -> int:
    dataset = load_dataset(args.dataset)
    report = run_eval(dataset, config, args.completions, with_retrieval=not args.no_retrieval)
    sys.stdout.write(report.table())
    if args.report:
        Path(args.report).write_text(dump_json(report.to_dict()), encoding="utf-8")
    if report.missing:
        sys.stderr.write(f"missing predictions for {len(report.missing)} task(s): {', '.join(report.missing)}\n")
        return EXIT_DATA
    return EXIT_OK


def _cmd_serve(args, config: PipelineConfig) -> int:
    from .server import serve

    serve(args.root, config, args.host, args.port)
    return EXIT_OK


COMMANDS = {
    "index": _cmd_index,
    "context": _cmd_context,
    "prompt": _cmd_prompt,
    "eval": _cmd_eval,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        sys.stderr.write(f"{exc}\n")
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args)
        return COMMANDS[args.command](args, config)
    except DATA_ERRORS as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DATA
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
