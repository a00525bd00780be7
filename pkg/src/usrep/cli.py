"""Command-line entry point wiring corpus ingestion, table lifecycle,
dataset generation, statistics, evaluation, diffing, and the review server.

Every batch command writes its artifact plus a ``<artifact>.run.json``
manifest recording the resolved configuration, input/output hashes, counts,
and errors.  Exit codes: 0 success, 1 operation error, 2 missing input file.
Artifacts contain no timestamps, so identical inputs and flags produce
byte-identical outputs.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path
from typing import Any, Callable

from . import corpus as corpus_io
from . import datasetgen, lexicon, metrics
from .config import ConfigError, ToolConfig, load_config
from .segmenter import fragment_diff, segment_report

__all__ = ["main"]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_MISSING_INPUT = 2

DEFAULT_BIND = "127.0.0.1:8765"


class MissingInputError(FileNotFoundError):
    """An input path named on the command line that does not exist."""


def _require_input(path: str | None) -> Path:
    if path is None:
        raise MissingInputError("required input path not given")
    p = Path(path)
    if not p.is_file():
        raise MissingInputError(f"input file not found: {path}")
    return p


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _record_output(manifest: dict[str, Any], name: str, path: str | Path) -> None:
    p = Path(path)
    manifest["outputs"][name] = {
        "path": str(path),
        "sha256": _sha256(p),
        "bytes": p.stat().st_size,
    }


def _record_input(manifest: dict[str, Any], name: str, path: Path) -> None:
    manifest["inputs"][name] = {"path": str(path), "sha256": _sha256(path)}


def _write_json(path: str | Path, payload: Any) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, ensure_ascii=False, sort_keys=True, indent=2)
        fh.write("\n")


_OPERATION_ERRORS = (
    ConfigError,
    corpus_io.CorpusFormatError,
    lexicon.TableFormatError,
    lexicon.RulesConfigError,
    lexicon.ProtectedTermError,
    lexicon.UnresolvedFragmentsError,
    metrics.IdMismatchError,
    metrics.UnknownSiteError,
    metrics.EmbeddingsError,
    ValueError,
    RuntimeError,
    OSError,
)


def _run_command(
    name: str,
    config: ToolConfig,
    manifest_path: str | None,
    body: Callable[[dict[str, Any]], None],
) -> int:
    """Execute *body* under the standard manifest/exit-code discipline."""
    manifest: dict[str, Any] = {
        "command": name,
        "config": config.as_dict(),
        "inputs": {},
        "outputs": {},
        "counts": {},
        "errors": [],
    }
    try:
        body(manifest)
        code = EXIT_ERROR if manifest["errors"] else EXIT_OK
    except MissingInputError as exc:
        manifest["errors"].append(str(exc))
        code = EXIT_MISSING_INPUT
    except _OPERATION_ERRORS as exc:
        manifest["errors"].append(str(exc))
        code = EXIT_ERROR
    if manifest_path is not None:
        try:
            _write_json(manifest_path, manifest)
        except OSError as exc:
            print(f"error: cannot write run manifest: {exc}", file=sys.stderr)
            code = code or EXIT_ERROR
    for message in manifest["errors"]:
        print(f"error: {message}", file=sys.stderr)
    return code


def _overrides_from_args(args: argparse.Namespace) -> dict[str, Any]:
    mapping = {
        "delimiters": getattr(args, "delimiters", None),
        "fragment_join": getattr(args, "fragment_join", None),
        "terminal_mark": getattr(args, "terminal_mark", None),
        "image_token_count": getattr(args, "image_token_count", None),
        "query_images": getattr(args, "query_images", None),
        "bleu_mode": getattr(args, "bleu_mode", None),
        "cider_scale": getattr(args, "cider_scale", None),
        "rouge_beta": getattr(args, "rouge_beta", None),
    }
    return {k: v for k, v in mapping.items() if v is not None}


def _load_effective_config(args: argparse.Namespace) -> ToolConfig:
    config_path = getattr(args, "config", None)
    if config_path is not None:
        _require_input(config_path)
    return load_config(config_path, _overrides_from_args(args))


def _load_rules(args: argparse.Namespace) -> list[lexicon.ProtectedTermRule]:
    rules_path = getattr(args, "rules", None)
    if rules_path is None:
        return lexicon.default_rules()
    return lexicon.load_rules(_require_input(rules_path))


def cmd_segment(args: argparse.Namespace) -> int:
    config = _load_effective_config(args)

    def body(manifest: dict[str, Any]) -> None:
        corpus_path = _require_input(args.corpus)
        _record_input(manifest, "corpus", corpus_path)
        reports = corpus_io.read_reports(corpus_path)
        fragment_count = 0
        with open(args.out, "w", encoding="utf-8") as fh:
            for report in reports:
                fragments = segment_report(report.text, report.language, config.delimiter_set)
                fragment_count += len(fragments)
                record = {
                    "id": report.id,
                    "site": report.site,
                    "language": report.language,
                    "fragments": [
                        {"raw": f.raw, "normalized": f.normalized, "index": f.index}
                        for f in fragments
                    ],
                }
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        manifest["counts"] = {"reports": len(reports), "fragments": fragment_count}
        _record_output(manifest, "fragments", args.out)
        print(f"segmented {len(reports)} reports -> {args.out}")

    return _run_command("segment", config, f"{args.out}.run.json", body)


def cmd_build_table(args: argparse.Namespace) -> int:
    config = _load_effective_config(args)

    def body(manifest: dict[str, Any]) -> None:
        corpus_path = _require_input(args.corpus)
        _record_input(manifest, "corpus", corpus_path)
        candidates = None
        if args.candidates is not None:
            candidates_path = _require_input(args.candidates)
            _record_input(manifest, "candidates", candidates_path)
            candidates = lexicon.load_candidates(candidates_path)
        rules = _load_rules(args)
        reports = corpus_io.read_reports(corpus_path)
        table = lexicon.build_table(reports, candidates, config.delimiter_set)
        lexicon.save_table(table, args.out, rules)
        manifest["counts"] = {
            "reports": len(reports),
            "entries": len(table),
            "occurrences": sum(e.occurrences for e in table),
        }
        _record_output(manifest, "table", args.out)
        print(f"built table with {len(table)} entries -> {args.out}")

    return _run_command("build-table", config, f"{args.out}.run.json", body)


def cmd_validate_table(args: argparse.Namespace) -> int:
    config = _load_effective_config(args)
    manifest_path = f"{args.out}.run.json" if args.out else None

    def body(manifest: dict[str, Any]) -> None:
        table_path = _require_input(args.table)
        _record_input(manifest, "table", table_path)
        rules = _load_rules(args)
        table = lexicon.load_table(table_path)
        findings: list[dict[str, Any]] = []
        for entry in table.sorted_entries():
            if not entry.target:
                continue
            violations = lexicon.check_protected_terms(entry, rules)
            if violations:
                findings.append(
                    {
                        "source": entry.source,
                        "status": entry.status,
                        "violations": [
                            {"pattern": v.pattern, "term": v.term, "description": v.description}
                            for v in violations
                        ],
                    }
                )
        manifest["counts"] = {"entries": len(table), "entries_with_violations": len(findings)}
        if args.out:
            _write_json(args.out, {"violations": findings, "entries_checked": len(table)})
            _record_output(manifest, "report", args.out)
        for finding in findings:
            for violation in finding["violations"]:
                message = (
                    f"protected term {violation['term']!r} missing from target of "
                    f"{finding['source']!r} (status {finding['status']})"
                )
                manifest["errors"].append(message)
        if not findings:
            print(f"table ok: {len(table)} entries, no protected-term violations")

    return _run_command("validate-table", config, manifest_path, body)


def cmd_gen_dataset(args: argparse.Namespace) -> int:
    config = _load_effective_config(args)

    def body(manifest: dict[str, Any]) -> None:
        corpus_path = _require_input(args.corpus)
        table_path = _require_input(args.table)
        _record_input(manifest, "corpus", corpus_path)
        _record_input(manifest, "table", table_path)
        reports = corpus_io.read_reports(corpus_path)
        table = lexicon.load_table(table_path)
        samples, skips = datasetgen.gen_samples(
            reports,
            table,
            config.prompt_texts,
            query_images=config.query_images,
            delimiters=config.delimiter_set,
            fragment_join=config.fragment_join,
            terminal_mark=config.terminal_mark,
        )
        datasetgen.write_samples(samples, args.out)
        skips_path = args.skips or f"{args.out}.skips"
        datasetgen.write_skips(skips, skips_path)
        manifest["counts"] = {
            "reports": len(reports),
            "samples": len(samples),
            "skipped_reports": len(skips),
        }
        _record_output(manifest, "samples", args.out)
        _record_output(manifest, "skips", skips_path)
        print(
            f"wrote {len(samples)} samples ({len(skips)} reports with unresolved "
            f"fragments) -> {args.out}"
        )

    return _run_command("gen-dataset", config, f"{args.out}.run.json", body)


def cmd_stats(args: argparse.Namespace) -> int:
    config = _load_effective_config(args)

    def body(manifest: dict[str, Any]) -> None:
        corpus_path = _require_input(args.corpus)
        _record_input(manifest, "corpus", corpus_path)
        reports = corpus_io.read_reports(corpus_path)
        stats = lexicon.table_stats(reports, config.delimiter_set)
        payload = stats.to_json_dict()
        if args.table is not None:
            table_path = _require_input(args.table)
            _record_input(manifest, "table", table_path)
            table = lexicon.load_table(table_path)
            payload["table_status_counts"] = table.status_counts()
        _write_json(args.out, payload)
        manifest["counts"] = {
            "reports": len(reports),
            "unique_fragments": stats.overall.unique_fragments,
        }
        _record_output(manifest, "stats", args.out)
        print(f"wrote stats for {len(reports)} reports -> {args.out}")

    return _run_command("stats", config, f"{args.out}.run.json", body)


def cmd_eval(args: argparse.Namespace) -> int:
    config = _load_effective_config(args)

    def body(manifest: dict[str, Any]) -> None:
        hyps_path = _require_input(args.hyps)
        refs_path = _require_input(args.refs)
        keywords_path = _require_input(args.keywords)
        _record_input(manifest, "hyps", hyps_path)
        _record_input(manifest, "refs", refs_path)
        _record_input(manifest, "keywords", keywords_path)
        hyps = corpus_io.read_reports(hyps_path)
        refs = corpus_io.read_reports(refs_path)
        keywords = metrics.load_keywords(keywords_path)
        embeddings = None
        if args.embeddings is not None:
            embeddings_path = _require_input(args.embeddings)
            _record_input(manifest, "embeddings", embeddings_path)
            embeddings = metrics.load_embeddings(embeddings_path)
        report = metrics.evaluate_corpus(
            hyps,
            refs,
            keywords,
            embeddings,
            bleu_mode=config.bleu_mode,
            cider_scale=config.cider_scale,
            rouge_beta=config.rouge_beta,
        )
        payload = report.to_json_dict()
        if args.baseline is not None:
            baseline_path = _require_input(args.baseline)
            _record_input(manifest, "baseline", baseline_path)
            with open(baseline_path, encoding="utf-8") as fh:
                baseline = json.load(fh)
            if not isinstance(baseline, dict):
                raise ValueError(f"{args.baseline}: baseline report must be a JSON object")
            payload["gains_vs_baseline"] = metrics.compare_runs(report, baseline)
        _write_json(args.out, payload)
        manifest["counts"] = {"pairs": report.corpus_size}
        _record_output(manifest, "report", args.out)
        headline = (
            f"b1={report.b1:.4f} b4={report.b4:.4f} rl={report.rl:.4f} "
            f"cider={report.cider:.4f} mkf1={report.mkf1:.4f}"
        )
        print(f"evaluated {report.corpus_size} pairs: {headline} -> {args.out}")

    return _run_command("eval", config, f"{args.out}.run.json", body)


def cmd_diff(args: argparse.Namespace) -> int:
    config = _load_effective_config(args)

    def body(manifest: dict[str, Any]) -> None:
        pred_path = _require_input(args.pred)
        refs_path = _require_input(args.refs)
        _record_input(manifest, "pred", pred_path)
        _record_input(manifest, "refs", refs_path)
        preds = corpus_io.read_reports(pred_path)
        refs = {r.id: r for r in corpus_io.read_reports(refs_path)}
        missing_ids = [p.id for p in preds if p.id not in refs]
        if missing_ids:
            raise ValueError(f"no reference for ids: {missing_ids}")
        exact = 0
        with open(args.out, "w", encoding="utf-8") as fh:
            for pred in preds:
                diff = fragment_diff(pred, refs[pred.id], config.delimiter_set)
                if not diff.extra and not diff.missing:
                    exact += 1
                record = {
                    "id": pred.id,
                    "matched": len(diff.matched),
                    "extra": [f.normalized for f in diff.extra],
                    "missing": [f.normalized for f in diff.missing],
                }
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        manifest["counts"] = {"pairs": len(preds), "exact_matches": exact}
        _record_output(manifest, "diff", args.out)
        print(f"diffed {len(preds)} report pairs ({exact} exact) -> {args.out}")

    return _run_command("diff", config, f"{args.out}.run.json", body)


def cmd_serve(args: argparse.Namespace) -> int:
    config = _load_effective_config(args)

    def body(manifest: dict[str, Any]) -> None:
        table_path = _require_input(args.table)
        corpus_path = _require_input(args.corpus) if args.corpus else None

        import uvicorn

        from .server import create_app

        bind = args.bind or os.environ.get("USREP_BIND", DEFAULT_BIND)
        host, _, port_text = bind.rpartition(":")
        if not host or not port_text.isdigit():
            raise ValueError(f"bind address must look like host:port, got {bind!r}")

        with lexicon.table_lock(table_path):
            app = create_app(
                table_path=table_path,
                corpus_path=corpus_path,
                rules=_load_rules(args),
                audit_log_path=args.audit_log or f"{args.table}.audit.jsonl",
                config=config,
            )
            print(f"serving review API on http://{bind}/ (table: {args.table})")
            uvicorn.run(app, host=host, port=int(port_text), log_level="warning")

    return _run_command("serve", config, None, body)


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="JSON config file; flags override its values")
    parser.add_argument("--delimiters", help="fragment delimiter characters")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="usrep",
        description="Fragment-based bilingual ultrasound-report toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("segment", help="segment a corpus into fragments")
    _add_config_flags(p)
    p.add_argument("--corpus", required=True, help="input corpus (JSON lines)")
    p.add_argument("--out", required=True, help="output fragment dump (JSON lines)")
    p.set_defaults(func=cmd_segment)

    p = sub.add_parser("build-table", help="build a lookup table from a Chinese corpus")
    _add_config_flags(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True, help="output table (TSV)")
    p.add_argument("--candidates", help="candidate translations (TSV: source<TAB>target)")
    p.add_argument("--rules", help="protected-term patterns, one per line")
    p.set_defaults(func=cmd_build_table)

    p = sub.add_parser("validate-table", help="check protected terms across a table")
    _add_config_flags(p)
    p.add_argument("--table", required=True)
    p.add_argument("--rules")
    p.add_argument("--out", help="optional JSON violation report")
    p.set_defaults(func=cmd_validate_table)

    p = sub.add_parser("gen-dataset", help="emit SFT samples from corpus + table")
    _add_config_flags(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--table", required=True)
    p.add_argument("--out", required=True, help="output samples (JSON lines)")
    p.add_argument("--skips", help="skip manifest path (default: <out>.skips)")
    p.add_argument("--fragment-join", dest="fragment_join")
    p.add_argument("--terminal-mark", dest="terminal_mark")
    p.add_argument(
        "--no-query-images",
        dest="query_images",
        action="store_const",
        const=False,
        default=None,
        help="omit images from query-style prompts",
    )
    p.set_defaults(func=cmd_gen_dataset)

    p = sub.add_parser("stats", help="fragment statistics per site")
    _add_config_flags(p)
    p.add_argument("--corpus", required=True)
    p.add_argument("--table", help="optional table for status counts")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("eval", help="run the metric suite over aligned corpora")
    _add_config_flags(p)
    p.add_argument("--hyps", required=True, help="hypothesis corpus (JSON lines)")
    p.add_argument("--refs", required=True, help="reference corpus (JSON lines)")
    p.add_argument("--keywords", required=True, help="site -> keywords JSON")
    p.add_argument("--embeddings", help="optional embeddings (JSON lines)")
    p.add_argument("--baseline", help="earlier eval report JSON; adds relative gains")
    p.add_argument("--out", required=True)
    p.add_argument("--bleu-mode", dest="bleu_mode", choices=["corpus", "sentence"])
    p.add_argument("--cider-scale", dest="cider_scale", type=float)
    p.add_argument("--rouge-beta", dest="rouge_beta", type=float)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("diff", help="fragment-level diff of aligned corpora")
    _add_config_flags(p)
    p.add_argument("--pred", required=True)
    p.add_argument("--refs", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_diff)

    p = sub.add_parser("serve", help="serve the review API and UI")
    _add_config_flags(p)
    p.add_argument("--table", required=True)
    p.add_argument("--corpus", help="corpus for example contexts and site filters")
    p.add_argument("--rules")
    p.add_argument("--audit-log", dest="audit_log", help="decision audit log (JSON lines)")
    p.add_argument("--bind", help="host:port (default: USREP_BIND or 127.0.0.1:8765)")
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
