"""Command-line entry points: convert, evaluate, filter, serve.

Exit codes: 0 success, 2 input/validation problem, 3 content problem
(missing alt text).  All outputs are deterministic for identical inputs and
are written atomically (temp file + rename).
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

from .export import (
    ExportFormat,
    ExportOptions,
    MissingAltTextError,
    export_document,
    placeholder_alt_text,
)
from .ingest import (
    FilterConfig,
    SchemaError,
    ValidationError,
    parse_block_file,
    parse_manifest,
    run_filter_pipeline,
)
from .metrics import (
    Detection,
    GroundTruth,
    LevelAnnotation,
    MismatchedIdSetsError,
    OrderAnnotation,
    UnknownIdError,
    detection_report,
    hierarchy_report,
    order_report,
    report_to_json,
    report_to_text,
)
from .model import ExamDocument, VISUAL_CATEGORIES
from .solutions import (
    DEFAULT_SOLUTION_CONFIG,
    ExportLayout,
    SolutionConfig,
    detect_solutions,
)
from .structure import DEFAULT_HEADING_KEYWORDS, build_tree

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONTENT = 3

DEFAULT_BIND = "127.0.0.1:8000"


def _fail(message: str, code: int) -> int:
    print(f"error: {message}", file=sys.stderr)
    return code


def _warn(message: str) -> None:
    print(f"warning: {message}", file=sys.stderr)


def _atomic_write(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_json_file(path: str, kind: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValueError(f"cannot read {kind} {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValueError(f"{kind} {path!r}: malformed JSON ({exc.msg})") from exc


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    raw = _load_json_file(path, "config file")
    if not isinstance(raw, dict):
        raise ValueError(f"config file {path!r}: must be a JSON object")
    return raw


def _heading_keywords(args, config: dict) -> tuple[str, ...]:
    if args.heading_keywords:
        raw = _load_json_file(args.heading_keywords, "heading keyword file")
        if not isinstance(raw, list) or not all(isinstance(k, str) for k in raw):
            raise ValueError(f"heading keyword file {args.heading_keywords!r}: must be a JSON list of strings")
        return tuple(raw)
    if "heading_keywords" in config:
        return tuple(config["heading_keywords"])
    return DEFAULT_HEADING_KEYWORDS


def _solution_config(args, config: dict) -> SolutionConfig:
    raw = None
    if getattr(args, "solution_keywords", None):
        raw = _load_json_file(args.solution_keywords, "solution keyword file")
    elif "solution" in config:
        raw = config["solution"]
    if raw is None:
        return DEFAULT_SOLUTION_CONFIG
    if isinstance(raw, list):
        return SolutionConfig(keywords=tuple(str(k).lower() for k in raw))
    if isinstance(raw, dict):
        return SolutionConfig(
            keywords=tuple(str(k).lower() for k in raw.get("keywords", DEFAULT_SOLUTION_CONFIG.keywords)),
            synthesized_heading_label=raw.get("synthesized_heading_label", DEFAULT_SOLUTION_CONFIG.synthesized_heading_label),
            consolidated_section_label=raw.get("consolidated_section_label", DEFAULT_SOLUTION_CONFIG.consolidated_section_label),
        )
    raise ValueError("solution configuration must be a JSON list or object")


def _read_document(path: str) -> ExamDocument:
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        raise ValueError(f"cannot read {path!r}: {exc}") from exc
    try:
        return parse_block_file(data)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: malformed JSON ({exc.msg}, line {exc.lineno})") from exc
    except SchemaError as exc:
        raise ValueError(f"{path}: {exc}") from exc
    except ValidationError as exc:
        detail = "\n".join(f"  {v.code}: {v.message}" for v in exc.violations)
        raise ValueError(f"{path}: document failed validation\n{detail}") from exc


def _apply_alt_text(doc: ExamDocument, alt_map: dict[str, str], auto: bool) -> ExamDocument:
    blocks = []
    for block in doc.blocks:
        if block.id in alt_map:
            block = replace(block, alt_text=str(alt_map[block.id]))
        elif auto and block.category in VISUAL_CATEGORIES and not (block.alt_text or "").strip():
            block = replace(block, alt_text=placeholder_alt_text(block, doc))
        blocks.append(block)
    return replace(doc, blocks=tuple(blocks))


def cmd_convert(args) -> int:
    try:
        config = _load_config(args.config)
        doc = _read_document(args.input)
        heading_keywords = _heading_keywords(args, config)
        solution_cfg = _solution_config(args, config)
    except ValueError as exc:
        return _fail(str(exc), EXIT_INPUT)

    alt_map: dict[str, str] = {}
    if args.alt_text_file:
        try:
            raw = _load_json_file(args.alt_text_file, "alt-text file")
        except ValueError as exc:
            return _fail(str(exc), EXIT_INPUT)
        if not isinstance(raw, dict):
            return _fail(f"alt-text file {args.alt_text_file!r}: must be a JSON object", EXIT_INPUT)
        unknown = [bid for bid in raw if not any(b.id == bid for b in doc.blocks)]
        if unknown:
            return _fail(f"alt-text file names unknown blocks: {', '.join(sorted(unknown))}", EXIT_INPUT)
        alt_map = {bid: str(text) for bid, text in raw.items()}
    doc = _apply_alt_text(doc, alt_map, args.auto_alt)

    layout = ExportLayout(args.layout or config.get("layout", ExportLayout.INLINE_SOLUTIONS.value))
    fmt = ExportFormat(args.format or config.get("format", ExportFormat.MARKDOWN.value))
    out_dir = Path(args.output or config.get("output", "."))

    tree = build_tree(doc, heading_keywords)
    for diag in tree.diagnostics:
        _warn(f"{diag.code}: {diag.message}")
    tree = detect_solutions(tree, solution_cfg)

    opts = ExportOptions(format=fmt, layout=layout, asset_dir=Path("assets"))
    try:
        result = export_document(doc, tree, opts, solution_cfg)
    except MissingAltTextError as exc:
        print(
            "error: missing alt text for blocks: " + ", ".join(exc.block_ids),
            file=sys.stderr,
        )
        print("hint: supply --alt-text-file, --auto-alt, or edit via the review service", file=sys.stderr)
        return EXIT_CONTENT
    for warning in result.warnings:
        _warn(f"{warning.code}: {warning.message}")

    for name, text in sorted(result.files.items()):
        _atomic_write(out_dir / name, text.encode("utf-8"))
    for rel_path, payload in sorted(result.assets.items()):
        _atomic_write(out_dir / rel_path, payload)
    for name in sorted(result.files):
        print(out_dir / name)
    return EXIT_OK


def _gold_order(doc: ExamDocument) -> list[str]:
    if doc.annotations is not None and doc.annotations.order:
        return sorted(doc.annotations.order, key=lambda bid: doc.annotations.order[bid])
    return build_tree(doc).ordered


def _levels(doc: ExamDocument) -> dict[str, int]:
    if doc.annotations is not None and doc.annotations.level:
        return dict(doc.annotations.level)
    return build_tree(doc).block_level_map()


def cmd_evaluate(args) -> int:
    try:
        pred = _read_document(args.pred)
        gold = _read_document(args.gold)
    except ValueError as exc:
        return _fail(str(exc), EXIT_INPUT)

    try:
        if args.mode == "detection":
            detections = [
                Detection(b.bbox, b.category, b.confidence if b.confidence is not None else 1.0, b.id)
                for b in pred.blocks
            ]
            truths = [GroundTruth(b.bbox, b.category) for b in gold.blocks]
            report = detection_report(detections, truths)
        elif args.mode == "order":
            annotation = OrderAnnotation(tuple(_gold_order(gold)), tuple(_gold_order(pred)))
            report = order_report([annotation])
        else:
            order = tuple(_gold_order(gold))
            report = hierarchy_report([LevelAnnotation(_levels(gold), _levels(pred), order)])
    except (UnknownIdError, MismatchedIdSetsError, ValueError) as exc:
        return _fail(str(exc), EXIT_INPUT)

    sys.stdout.write(report_to_text(report))
    _atomic_write(Path(args.json_out), report_to_json(report).encode("utf-8"))
    return EXIT_OK


def cmd_filter(args) -> int:
    try:
        config = _load_config(args.config)
        manifest_text = Path(args.manifest).read_text(encoding="utf-8")
    except OSError as exc:
        return _fail(f"cannot read manifest {args.manifest!r}: {exc}", EXIT_INPUT)
    except ValueError as exc:
        return _fail(str(exc), EXIT_INPUT)

    try:
        if args.filter_config:
            raw = _load_json_file(args.filter_config, "filter config")
            filter_cfg = FilterConfig.from_dict(raw)
        elif "filter" in config:
            filter_cfg = FilterConfig.from_dict(config["filter"])
        else:
            filter_cfg = FilterConfig()
        entries = parse_manifest(manifest_text)
    except ValueError as exc:
        return _fail(str(exc), EXIT_INPUT)

    report = run_filter_pipeline(entries, filter_cfg)
    lines = []
    for entry in report.kept:
        suggestion = report.suggestions[entry.url]
        lines.append(
            json.dumps(
                {
                    "url": entry.url,
                    "path": entry.path,
                    "flags": list(entry.flags),
                    "study_field": suggestion.field,
                    "study_field_score": suggestion.score,
                },
                ensure_ascii=False,
            )
        )
    _atomic_write(Path(args.output), ("\n".join(lines) + "\n" if lines else "").encode("utf-8"))

    print(f"total: {report.total}")
    print(f"kept: {len(report.kept)}")
    print(f"dropped (no keyword): {report.dropped_no_keyword}")
    print(f"dropped (false positive): {report.dropped_false_positive}")
    print(f"needs text: {report.needs_text}")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    bind = args.bind or os.environ.get("ACCSAMS_BIND", DEFAULT_BIND)
    host, _, port_text = bind.rpartition(":")
    if not host or not port_text.isdigit():
        return _fail(f"invalid bind address {bind!r} (expected host:port)", EXIT_INPUT)
    app = create_app(data_dir=args.data_dir)
    uvicorn.run(app, host=host, port=int(port_text), log_level="info")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="accsams",
        description="Convert exam block files to accessible documents, evaluate pipeline output, filter crawl manifests, and run the review service.",
    )
    parser.add_argument("--config", help="JSON config file with default layout/format/keywords/filter settings")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("convert", help="convert a block file to accessible Markdown/HTML")
    p.add_argument("input", help="block file (JSON)")
    p.add_argument("-o", "--output", help="output directory (default: current directory)")
    p.add_argument("--format", choices=[f.value for f in ExportFormat], help="output format")
    p.add_argument("--layout", choices=[l.value for l in ExportLayout], help="solution layout")
    p.add_argument("--alt-text-file", help="JSON object mapping block id to alt text")
    p.add_argument(
        "--auto-alt",
        action="store_true",
        help="fill missing alt text with deterministic placeholders",
    )
    p.add_argument("--heading-keywords", help="JSON list file of heading keywords")
    p.add_argument("--solution-keywords", help="JSON file with solution keywords or full solution config")
    p.set_defaults(func=cmd_convert)

    p = sub.add_parser("evaluate", help="score predicted block files against gold")
    p.add_argument("--pred", required=True, help="predicted block file")
    p.add_argument("--gold", required=True, help="gold block file")
    p.add_argument("--mode", choices=["detection", "order", "hierarchy"], required=True)
    p.add_argument("--json-out", default="evaluation-report.json", help="where to write the JSON report")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("filter", help="filter a crawl manifest down to exam candidates")
    p.add_argument("--manifest", required=True, help="JSONL manifest of crawled documents")
    p.add_argument("--filter-config", help="JSON filter configuration")
    p.add_argument("-o", "--output", required=True, help="output JSONL of kept entries")
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("serve", help="run the HTTP review service")
    p.add_argument("--bind", help=f"host:port (default ACCSAMS_BIND or {DEFAULT_BIND})")
    p.add_argument("--data-dir", help="session storage directory (default ACCSAMS_DATA_DIR)")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
