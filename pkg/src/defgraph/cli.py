"""Command line front end: ``defgraph <subcommand> ...``.

Exit status is 0 on success (a rejected entailment is still a success),
2 for bad input or configuration, and 1 for anything unexpected.
"""

from __future__ import annotations

import argparse
import configparser
import json
import logging
import re
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterator

from .annotation import (
    AnnotatedDefinition,
    AnnotationError,
    RoleLabel,
    definition_from_json,
    definition_to_json,
    export_brat,
    import_brat,
    validate,
)
from .distsem import EmbeddingError, load_embeddings, load_stopwords
from .kgraph import (
    GraphError,
    GraphPolicy,
    NTriplesError,
    build_graph,
    check_integrity,
    parse_ntriples,
    serialize_ntriples,
    slug,
    unslug,
)
from .labeler import LabelingError, RuleConfig, load_word_list, preannotate, recover_supertype
from .entail import EntailConfig, entail
from .treebank import TreeSyntaxError, parse_tree

log = logging.getLogger("defgraph")


class InputError(Exception):
    """Bad input file or configuration; reported as ``file:line: message``."""

    def __init__(self, path, message: str, line: int | None = None):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")


# ---------------------------------------------------------------- configuration

_PATH_KEYS = {"definitions", "trees", "embeddings", "gazetteers", "stopwords", "output_dir"}
_RULE_KEYS = {"noun_family_matching", "temporal_head_nouns", "location_prepositions",
              "purpose_markers", "allowed_uncovered", "disabled_rules"}
_ENTAIL_KEYS = {"max_depth", "beam", "pair_count", "accept_threshold"}
_GRAPH_KEYS = {"bidirectional"}
_SECTIONS = {"paths": _PATH_KEYS, "rules": _RULE_KEYS, "entail": _ENTAIL_KEYS, "graph": _GRAPH_KEYS}


@dataclass
class PipelineConfig:
    paths: dict[str, Path] = field(default_factory=dict)
    gazetteers: tuple[Path, ...] = ()
    rules: RuleConfig = field(default_factory=RuleConfig)
    entail: EntailConfig = field(default_factory=EntailConfig)
    graph: GraphPolicy = field(default_factory=GraphPolicy)

    def path(self, key: str) -> Path | None:
        return self.paths.get(key)


def _words(value: str) -> frozenset[str]:
    return frozenset(w.strip() for w in value.split(",") if w.strip())


def load_config(path: str | Path | None) -> PipelineConfig:
    """Read an INI file with [paths], [rules], [entail] and [graph] sections.

    Unknown sections or keys are errors, and every path named in [paths]
    must exist (except ``output_dir``, which is created on demand).
    """
    cfg = PipelineConfig()
    if path is None:
        return cfg
    path = Path(path)
    if not path.is_file():
        raise InputError(path, "config file not found")
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read(path, encoding="utf-8")
    except configparser.Error as exc:
        raise InputError(path, str(exc).splitlines()[0], getattr(exc, "lineno", None)) from None

    for section in parser.sections():
        if section not in _SECTIONS:
            raise InputError(path, f"unknown section [{section}]")
        extra = set(parser[section]) - _SECTIONS[section]
        if extra:
            raise InputError(path, f"unknown key(s) in [{section}]: {', '.join(sorted(extra))}")

    base = path.parent
    if parser.has_section("paths"):
        for key, raw in parser["paths"].items():
            if key == "gazetteers":
                files = tuple(base / p.strip() for p in raw.split(",") if p.strip())
                for f in files:
                    if not f.exists():
                        raise InputError(path, f"gazetteers: {f} does not exist")
                cfg.gazetteers = files
                continue
            p = base / raw.strip()
            if key != "output_dir" and not p.exists():
                raise InputError(path, f"{key}: {p} does not exist")
            cfg.paths[key] = p

    try:
        rule_args = {}
        if parser.has_section("rules"):
            sec = parser["rules"]
            for key in sec:
                if key == "noun_family_matching":
                    rule_args[key] = sec.getboolean(key)
                elif key == "allowed_uncovered":
                    rule_args[key] = frozenset(w.lower() for w in _words(sec[key]))
                else:
                    rule_args[key] = _words(sec[key])
        gazetteer = frozenset().union(*(load_word_list(f) for f in cfg.gazetteers))
        cfg.rules = RuleConfig(gazetteer=gazetteer, **rule_args)

        entail_args = {}
        if parser.has_section("entail"):
            sec = parser["entail"]
            for key in sec:
                if key == "accept_threshold":
                    entail_args[key] = sec.getfloat(key)
                else:
                    entail_args[key] = sec.getint(key)
        if entail_args.get("beam") == 0:
            entail_args["beam"] = None
        bidirectional = parser.getboolean("graph", "bidirectional", fallback=False)
        cfg.entail = EntailConfig(bidirectional=bidirectional, **entail_args)
        cfg.graph = GraphPolicy(bidirectional=bidirectional)
    except ValueError as exc:
        raise InputError(path, str(exc)) from None
    return cfg


def _apply_flags(cfg: PipelineConfig, args: argparse.Namespace) -> PipelineConfig:
    changes = {}
    if args.max_depth is not None:
        changes["max_depth"] = args.max_depth
    if args.beam is not None:
        changes["beam"] = args.beam or None
    if args.bidirectional:
        changes["bidirectional"] = True
        cfg.graph = replace(cfg.graph, bidirectional=True)
    try:
        cfg.entail = replace(cfg.entail, **changes)
    except ValueError as exc:
        raise InputError("<command line>", str(exc)) from None
    return cfg


# ---------------------------------------------------------------- input helpers

_PARENS = re.compile(r"\s*\([^()]*\)")
_EXAMPLES = re.compile(r';\s*".*$', re.S)


def strip_gloss(gloss: str) -> str:
    """Drop parenthesised asides and trailing quoted example sentences."""
    text = _EXAMPLES.sub("", gloss)
    while True:
        shorter = _PARENS.sub("", text)
        if shorter == text:
            break
        text = shorter
    return " ".join(text.split())


def _resolve(cfg: PipelineConfig, given: str | None, key: str, what: str) -> Path:
    if given is not None:
        return Path(given)
    p = cfg.path(key)
    if p is None:
        raise InputError("<command line>", f"no {what} given and no [paths] {key} configured")
    return p


def _read_text(path: Path) -> str:
    try:
        return path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputError(path, "file not found") from None
    except (OSError, UnicodeDecodeError) as exc:
        raise InputError(path, str(exc)) from None


def _jsonl(path: Path) -> Iterator[tuple[int, str, dict]]:
    """Yield ``(line number, raw line, record)`` for each non-blank line."""
    for lineno, line in enumerate(_read_text(path).splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise InputError(path, f"invalid JSON: {exc.msg}", lineno) from None
        if not isinstance(obj, dict):
            raise InputError(path, "expected a JSON object", lineno)
        yield lineno, line, obj


def _definition(path: Path, lineno: int, obj: dict, strip: bool = False) -> AnnotatedDefinition:
    if strip and "gloss" in obj:
        obj = dict(obj, gloss=strip_gloss(obj["gloss"]))
    try:
        return definition_from_json(obj)
    except (AnnotationError, ValueError) as exc:
        raise InputError(path, str(exc), lineno) from None


def _load_definitions(path: Path) -> list[AnnotatedDefinition]:
    return [_definition(path, n, obj) for n, _, obj in _jsonl(path)]


def _dumps(obj) -> str:
    return json.dumps(obj, ensure_ascii=False)


def _write(path: str | None, text: str) -> None:
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    out = Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(text, encoding="utf-8")


def _write_brat(out_dir: Path, defn: AnnotatedDefinition) -> None:
    txt, ann = export_brat(defn)
    stem = slug(defn.id)
    (out_dir / f"{stem}.txt").write_text(txt, encoding="utf-8")
    (out_dir / f"{stem}.ann").write_text(ann, encoding="utf-8")


# ---------------------------------------------------------------- subcommands


def cmd_preannotate(args, cfg: PipelineConfig) -> int:
    src = _resolve(cfg, args.input, "definitions", "definitions file")
    records = list(_jsonl(src))
    trees_path = args.trees or (cfg.path("trees") if args.input is None else None)
    if trees_path is not None:
        trees_path = Path(trees_path)
        tree_lines = [l for l in _read_text(trees_path).splitlines() if l.strip()]
        if len(tree_lines) != len(records):
            raise InputError(trees_path, f"{len(tree_lines)} trees for {len(records)} definitions")
    else:
        tree_lines = []
        for lineno, _, obj in records:
            if "tree" not in obj:
                raise InputError(src, "record has no 'tree' field and no --trees file given", lineno)
            tree_lines.append(obj["tree"])

    out_dir = Path(args.out_dir) if args.out_dir else cfg.path("output_dir")
    if out_dir is not None:
        out_dir.mkdir(parents=True, exist_ok=True)

    labeled = missing = warnings = 0
    jsonl_lines = []
    for (lineno, _, obj), bracketing in zip(records, tree_lines):
        base = _definition(src, lineno, obj, strip=args.strip_gloss)
        try:
            tree = parse_tree(bracketing, base.gloss)
            defn = preannotate(tree, base.pos, cfg.rules, id=base.id, lemmas=base.lemmas,
                               ne_tags=obj.get("ne_tags"))
        except (TreeSyntaxError, LabelingError) as exc:
            log.warning("%s:%d: skipped %s: %s", src, lineno, base.id, exc)
            warnings += 1
            continue
        labeled += 1
        if not defn.spans_with(RoleLabel.SUPERTYPE):
            missing += 1
        if out_dir is not None:
            _write_brat(out_dir, defn)
        rec = definition_to_json(defn)
        rec["tree"] = bracketing
        jsonl_lines.append(_dumps(rec) + "\n")

    if args.jsonl:
        _write(args.jsonl, "".join(jsonl_lines))
    print(f"records: {len(records)}")
    print(f"labeled: {labeled}")
    print(f"missing_supertype: {missing}")
    print(f"warnings: {warnings}")
    return 0


def cmd_postprocess(args, cfg: PipelineConfig) -> int:
    src = Path(args.input)
    out_lines = []
    recovered = flagged = 0
    allowed = cfg.rules.allowed_uncovered
    for lineno, raw, obj in _jsonl(src):
        defn = _definition(src, lineno, obj)
        if not validate(defn, allowed):
            out_lines.append(raw)
            continue
        if "tree" not in obj:
            raise InputError(src, "record has no 'tree' field", lineno)
        try:
            tree = parse_tree(obj["tree"], defn.gloss)
        except TreeSyntaxError as exc:
            raise InputError(src, str(exc), lineno) from None
        result = recover_supertype(defn, tree, cfg.rules)
        fixed = result.definition
        recovered += result.recovered
        rec = dict(obj)
        rec["spans"] = definition_to_json(fixed)["spans"]
        problems = validate(fixed, allowed)
        if problems:
            flagged += 1
            rec["warning"] = "; ".join(f"{v.kind} {v.start}-{v.end}" for v in problems)
        out_lines.append(_dumps(rec))
    _write(args.output, "".join(l + "\n" for l in out_lines))
    report = sys.stderr if args.output in (None, "-") else sys.stdout
    print(f"recovered: {recovered}", file=report)
    print(f"warnings: {flagged}", file=report)
    return 0


def cmd_export_brat(args, cfg: PipelineConfig) -> int:
    src = _resolve(cfg, args.input, "definitions", "definitions file")
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    n = 0
    for lineno, _, obj in _jsonl(src):
        defn = _definition(src, lineno, obj)
        try:
            _write_brat(out_dir, defn)
        except AnnotationError as exc:
            raise InputError(src, str(exc), lineno) from None
        n += 1
    print(f"exported: {n}")
    return 0


def cmd_import_brat(args, cfg: PipelineConfig) -> int:
    brat_dir = Path(args.brat_dir)
    if not brat_dir.is_dir():
        raise InputError(brat_dir, "not a directory")
    meta = {}
    if args.defs:
        for _, _, obj in _jsonl(Path(args.defs)):
            if "id" in obj:
                meta[slug(str(obj["id"]))] = obj
    lines = []
    for txt_path in sorted(brat_dir.glob("*.txt")):
        ann_path = txt_path.with_suffix(".ann")
        ann = _read_text(ann_path) if ann_path.exists() else ""
        info = meta.get(txt_path.stem, {})
        try:
            defn = import_brat(_read_text(txt_path), ann, str(info.get("id", unslug(txt_path.stem))),
                               info.get("pos", "noun"), info.get("lemmas", []))
        except AnnotationError as exc:
            raise InputError(ann_path, str(exc).split(": ", 1)[-1], exc.line) from None
        lines.append(_dumps(definition_to_json(defn)) + "\n")
    _write(args.output, "".join(lines))
    return 0


def cmd_build(args, cfg: PipelineConfig) -> int:
    src = _resolve(cfg, args.input, "definitions", "definitions file")
    defs = _load_definitions(src)
    try:
        g = build_graph(defs, cfg.graph)
    except GraphError as exc:
        raise InputError(src, str(exc)) from None
    problems = check_integrity(g)
    if problems:
        raise RuntimeError("graph integrity check failed: " + problems[0])
    _write(args.output, serialize_ntriples(g))
    return 0


def cmd_entail(args, cfg: PipelineConfig) -> int:
    graph_path = Path(args.graph)
    try:
        g = parse_ntriples(_read_text(graph_path))
    except NTriplesError as exc:
        raise InputError(graph_path, f"column {exc.column}: {str(exc).split(': ', 1)[-1]}", exc.line) from None
    emb_path = _resolve(cfg, args.embeddings, "embeddings", "embeddings file")
    stop_path = cfg.path("stopwords")
    try:
        emb = load_embeddings(emb_path, load_stopwords(stop_path) if stop_path else None)
    except FileNotFoundError:
        raise InputError(emb_path, "file not found") from None
    except EmbeddingError as exc:
        raise InputError(emb_path, str(exc).split(": ", 1)[-1] if exc.line else str(exc), exc.line) from None

    pairs_path = Path(args.pairs)
    out = []
    for lineno, _, obj in _jsonl(pairs_path):
        if not isinstance(obj.get("t"), str) or not isinstance(obj.get("h"), str):
            raise InputError(pairs_path, "pair needs string fields 't' and 'h'", lineno)
        t_tags, h_tags = obj.get("t_tags"), obj.get("h_tags")
        for name, tags, text in (("t_tags", t_tags, obj["t"]), ("h_tags", h_tags, obj["h"])):
            if tags is not None and len(tags) != len(text.split()):
                raise InputError(pairs_path, f"{name} has {len(tags)} tags for {len(text.split())} tokens", lineno)
        verdict = entail(g, obj["t"], obj["h"], emb, cfg.entail, t_tags=t_tags, h_tags=h_tags)
        rec = {"id": obj["id"]} if "id" in obj else {}
        rec.update(verdict.to_json(g))
        out.append(_dumps(rec) + "\n")
    _write(args.output, "".join(out))
    return 0


def cmd_validate(args, cfg: PipelineConfig) -> int:
    src = _resolve(cfg, args.input, "definitions", "definitions file")
    bad = 0
    n = 0
    for lineno, _, obj in _jsonl(src):
        defn = _definition(src, lineno, obj)
        n += 1
        report = validate(defn, cfg.rules.allowed_uncovered)
        if not report:
            print(f"{defn.id}: ok")
            continue
        bad += 1
        for v in report:
            detail = f" {v.detail}" if v.detail else ""
            print(f"{defn.id}: {v.kind} {v.start}-{v.end}{detail}")
    print(f"valid: {n - bad}/{n}")
    return 0


# ---------------------------------------------------------------- entry point


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="defgraph", description="Definition graphs and graph-based entailment.")
    parser.add_argument("--config", help="INI file with [paths], [rules], [entail] and [graph] sections")
    parser.add_argument("--strip-gloss", action="store_true",
                        help="drop parentheses and quoted examples from glosses before labeling")
    parser.add_argument("--bidirectional", action="store_true", help="let navigation follow edges backwards")
    parser.add_argument("--max-depth", type=int, help="navigation depth budget")
    parser.add_argument("--beam", type=int, help="children kept per expansion (0 = unlimited)")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("preannotate", help="label definitions with the rule cascade")
    p.add_argument("input", nargs="?", help="definitions JSONL (records may carry a 'tree' field)")
    p.add_argument("--trees", help="one bracketed tree per line, aligned with the definitions")
    p.add_argument("--out-dir", help="directory for .txt/.ann pairs")
    p.add_argument("--jsonl", help="also write labeled records as JSONL")
    p.set_defaults(func=cmd_preannotate)

    p = sub.add_parser("postprocess", help="restore missing supertypes")
    p.add_argument("input")
    p.add_argument("output", nargs="?", default="-")
    p.set_defaults(func=cmd_postprocess)

    p = sub.add_parser("export-brat", help="write .txt/.ann pairs")
    p.add_argument("input", nargs="?")
    p.add_argument("out_dir")
    p.set_defaults(func=cmd_export_brat)

    p = sub.add_parser("import-brat", help="read .txt/.ann pairs back into JSONL")
    p.add_argument("brat_dir")
    p.add_argument("output", nargs="?", default="-")
    p.add_argument("--defs", help="JSONL supplying pos and lemmas by id")
    p.set_defaults(func=cmd_import_brat)

    p = sub.add_parser("build", help="build the definition graph as N-Triples")
    p.add_argument("input", nargs="?")
    p.add_argument("output", nargs="?", default="-")
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("entail", help="decide T/H pairs against a graph")
    p.add_argument("graph", help="N-Triples file")
    p.add_argument("pairs", help="JSONL with 't', 'h' and optional 'id', 't_tags', 'h_tags'")
    p.add_argument("--embeddings")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_entail)

    p = sub.add_parser("validate", help="report invariant violations")
    p.add_argument("input", nargs="?")
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = _apply_flags(load_config(args.config), args)
        return args.func(args, cfg)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - last-resort report
        log.exception("internal error: %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
