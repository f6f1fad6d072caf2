"""Command-line front door: parse, validate, report, link, build nets and
query them, in the order an analysis session runs.

Exit codes: 0 on success, 1 when validation or inference fails, 2 on
usage errors.  Reports go to stdout (or ``--out``); diagnostics go to
stderr.  Output is deterministic: identical arguments and files produce
byte-identical stdout.  Set ``HILLS_NO_COLOR`` to disable ANSI styling
of stderr messages.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import IO

from . import defaults
from .bn import BayesNet, BnError, bn_from_json, bn_from_links, bn_to_json
from .hillsfile import StudyDocument, load_study, parse_relations_file
from .linker import RelationTable, derive_links, links_from_json
from .model import HillsError, Study
from .report import FORMATS, ReportSpec, emit_report, emit_worksheet


def _use_color(stream: IO[str]) -> bool:
    if os.environ.get("HILLS_NO_COLOR"):
        return False
    return hasattr(stream, "isatty") and stream.isatty()


def _style(text: str, code: str, stream: IO[str]) -> str:
    if _use_color(stream):
        return f"\x1b[{code}m{text}\x1b[0m"
    return text


class _Cli:
    def __init__(self, stdout: IO[str], stderr: IO[str]):
        self.stdout = stdout
        self.stderr = stderr

    def fail(self, message: str) -> int:
        print(_style("error:", "31", self.stderr), message, file=self.stderr)
        return 1

    def emit(self, document: str, out: str | None) -> None:
        if out:
            Path(out).write_text(document, encoding="utf-8")
        else:
            self.stdout.write(document)

    def load_study_or_none(self, path: str) -> StudyDocument | None:
        doc = load_study(path)
        for diag in doc.diagnostics:
            color = "31" if diag.severity == "error" else "33"
            print(_style(diag.severity, color, self.stderr) + ":",
                  diag.render(doc.source_name), file=self.stderr)
        if not doc.ok:
            print(
                _style("FAIL:", "31", self.stderr),
                f"{len(doc.errors())} error(s) in {path}",
                file=self.stderr,
            )
            return None
        return doc

    def relations_for(self, doc: StudyDocument, override_path: str | None) -> RelationTable | None:
        if override_path is not None:
            table, diagnostics = parse_relations_file(
                Path(override_path).read_text(encoding="utf-8"), override_path
            )
            for diag in diagnostics:
                print(diag.render(override_path), file=self.stderr)
            return table
        if doc.relations is not None:
            return doc.relations
        return defaults.default_relations()

    def load_net(self, path: str) -> BayesNet | None:
        try:
            document = json.loads(Path(path).read_text(encoding="utf-8"))
            skeleton = bn_from_json(document)
            if not skeleton.is_complete:
                self.fail(
                    f"{path}: net is a skeleton; fill CPTs for {', '.join(skeleton.missing_cpts())}"
                )
                return None
            return skeleton.build()
        except (BnError, ValueError, json.JSONDecodeError) as exc:
            self.fail(f"{path}: {exc}")
            return None


def _parse_evidence(text: str | None) -> dict[str, str]:
    evidence: dict[str, str] = {}
    if not text:
        return evidence
    for chunk in text.split(","):
        if "=" not in chunk:
            raise ValueError(f"evidence must look like VAR=state, got {chunk!r}")
        var, state = chunk.split("=", 1)
        var, state = var.strip(), state.strip()
        if not var or not state:
            raise ValueError(f"evidence must look like VAR=state, got {chunk!r}")
        evidence[var] = state
    return evidence


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hills",
        description="Hierarchical deviation-study toolkit: validate studies, "
        "emit worksheets, derive cross-level links, and run what-if queries.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_validate = sub.add_parser("validate", help="parse a study file and check every invariant")
    p_validate.add_argument("study")

    p_worksheet = sub.add_parser("worksheet", help="emit worksheet tables, system level first")
    p_worksheet.add_argument("study")
    p_worksheet.add_argument("--level", type=int, default=None, help="emit one level only")
    p_worksheet.add_argument("--format", choices=FORMATS, default="markdown")
    p_worksheet.add_argument("--out", default=None)
    p_worksheet.add_argument(
        "--stop-at-level",
        type=int,
        default=None,
        help="emit levels 1..N only (analysis may stop once everything is mitigated)",
    )

    p_link = sub.add_parser("link", help="derive candidate links between deviations")
    p_link.add_argument("study")
    p_link.add_argument("--relations", default=None, help="relation-table file overriding the study's")
    p_link.add_argument("--format", choices=FORMATS, default="markdown")
    p_link.add_argument("--out", default=None)

    p_bn = sub.add_parser("bn", help="build or check Bayesian networks")
    bn_sub = p_bn.add_subparsers(dest="bn_command", required=True)
    p_skel = bn_sub.add_parser("skeleton", help="net skeleton from confirmed links")
    p_skel.add_argument("study")
    p_skel.add_argument("--links", default=None, help="link JSON with analyst decisions")
    p_skel.add_argument(
        "--root-prior",
        type=float,
        default=1.0,
        help="prior probability of 'present' for parentless threat variables (default 1.0)",
    )
    p_skel.add_argument("--out", default=None)
    p_check = bn_sub.add_parser("check", help="validate a CPT-filled net document")
    p_check.add_argument("net")

    p_query = sub.add_parser("query", help="exact posterior for a target given evidence")
    p_query.add_argument("study")
    p_query.add_argument("--bn", required=True, help="net JSON document")
    p_query.add_argument("--target", required=True)
    p_query.add_argument("--evidence", default=None, help="comma-separated VAR=state pairs")
    p_query.add_argument("--format", choices=FORMATS, default="markdown")
    p_query.add_argument("--out", default=None)

    p_serve = sub.add_parser("serve", help="serve the HTTP API (and the browser UI, if built)")
    p_serve.add_argument("study")
    p_serve.add_argument("--port", type=int, default=8000)
    p_serve.add_argument("--host", default="127.0.0.1")
    p_serve.add_argument("--bn", default=None, help="CPT-complete net JSON to query against")
    p_serve.add_argument("--relations", default=None)
    p_serve.add_argument("--static", default=None, help="directory of built UI assets")

    return parser


def run(argv: list[str], stdout: IO[str] | None = None, stderr: IO[str] | None = None) -> int:
    stdout = stdout if stdout is not None else sys.stdout
    stderr = stderr if stderr is not None else sys.stderr
    cli = _Cli(stdout, stderr)
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)

    if args.command == "validate":
        doc = cli.load_study_or_none(args.study)
        if doc is None:
            return 1
        print("OK: 0 violations", file=stdout)
        return 0

    if args.command == "worksheet":
        doc = cli.load_study_or_none(args.study)
        if doc is None:
            return 1
        study = doc.study
        assert study is not None
        if args.level is not None:
            if not study.has_level(args.level):
                return cli.fail(f"unknown level {args.level}")
            spec = ReportSpec("worksheet", args.format, args.level)
            cli.emit(emit_report(spec, study=study), args.out)
            return 0
        ranks = sorted(study.level_ranks())
        if args.stop_at_level is not None:
            ranks = [r for r in ranks if r <= args.stop_at_level]
        cli.emit(_multi_level_document(study, ranks, args.format), args.out)
        return 0

    if args.command == "link":
        doc = cli.load_study_or_none(args.study)
        if doc is None:
            return 1
        relations = cli.relations_for(doc, args.relations)
        if relations is None:
            return cli.fail(f"{args.relations}: relation file has errors")
        assert doc.study is not None
        linkset = derive_links(doc.study, relations)
        spec = ReportSpec("links", args.format)
        cli.emit(emit_report(spec, study=doc.study, linkset=linkset), args.out)
        return 0

    if args.command == "bn" and args.bn_command == "skeleton":
        doc = cli.load_study_or_none(args.study)
        if doc is None:
            return 1
        study = doc.study
        assert study is not None
        try:
            if args.links:
                link_doc = json.loads(Path(args.links).read_text(encoding="utf-8"))
                linkset = links_from_json(link_doc, study)
            else:
                relations = doc.relations or defaults.default_relations()
                linkset = derive_links(study, relations)
            skeleton = bn_from_links(study, linkset, root_threat_prior=args.root_prior)
        except (HillsError, ValueError, json.JSONDecodeError) as exc:
            return cli.fail(str(exc))
        cli.emit(json.dumps(bn_to_json(skeleton), indent=2, ensure_ascii=False) + "\n", args.out)
        return 0

    if args.command == "bn" and args.bn_command == "check":
        try:
            document = json.loads(Path(args.net).read_text(encoding="utf-8"))
            skeleton = bn_from_json(document)
            if not skeleton.is_complete:
                return cli.fail(
                    f"{args.net}: skeleton is missing CPTs for {', '.join(skeleton.missing_cpts())}"
                )
            net = skeleton.build()
        except (BnError, ValueError, json.JSONDecodeError) as exc:
            return cli.fail(f"{args.net}: {exc}")
        print(f"OK: {len(net.variables)} variables, {len(net.edges)} edges", file=stdout)
        return 0

    if args.command == "query":
        doc = cli.load_study_or_none(args.study)
        if doc is None:
            return 1
        net = cli.load_net(args.bn)
        if net is None:
            return 1
        try:
            evidence = _parse_evidence(args.evidence)
        except ValueError as exc:
            print(_style("usage error:", "31", stderr), exc, file=stderr)
            return 2
        try:
            spec = ReportSpec("bn_query", args.format)
            document = emit_report(spec, bn=net, queries=[(args.target, evidence)])
        except (BnError, ValueError) as exc:
            return cli.fail(str(exc))
        cli.emit(document, args.out)
        return 0

    if args.command == "serve":
        doc = cli.load_study_or_none(args.study)
        if doc is None:
            return 1
        net = None
        if args.bn:
            net = cli.load_net(args.bn)
            if net is None:
                return 1
        relations = cli.relations_for(doc, args.relations)
        if relations is None:
            return cli.fail(f"{args.relations}: relation file has errors")
        from .api import create_app

        app = create_app(doc.study, relations=relations, net=net, static_dir=args.static)
        import uvicorn

        print(f"serving on http://{args.host}:{args.port}", file=stderr)
        uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
        return 0

    raise AssertionError(f"unhandled command {args.command!r}")


def _multi_level_document(study: Study, ranks: list[int], fmt: str) -> str:
    if fmt == "json":
        parts = [json.loads(emit_worksheet(study, rank, "json")) for rank in ranks]
        return json.dumps({"kind": "worksheets", "levels": parts}, indent=2, ensure_ascii=False) + "\n"
    blocks = []
    for rank in ranks:
        table = emit_worksheet(study, rank, fmt)
        if fmt == "markdown":
            blocks.append(f"## Level {rank}: {study.level(rank).name}\n\n{table}")
        else:
            blocks.append(table)
    return "\n".join(blocks)


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
