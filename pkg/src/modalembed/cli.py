"""Command-line interface: translate, inject-specs, convert-qmltp, oracle, run.

Exit codes: 0 success, 1 parse/input error, 2 unsupported logic or feature
(or a problem outside the oracle fragment), 3 internal fault.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import re
import shlex
import subprocess
import sys
import tempfile
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from modalembed import logic_spec as ls
from modalembed.embedding import EmbeddingOptions, embed_problem, resolve_spec
from modalembed.errors import (
    BoundsTooLarge, LogicSpecError, MissingConjecture, ModalEmbedError, OutsideFragment, ParseError,
    StageMismatch, TypeCheckError, UnsupportedFeature,
)
from modalembed.parser import DEFAULT_MAX_BYTES, Dialect, convert_qmltp, parse_file
from modalembed.syntax_core import AnnotatedFormula, Problem, Role
from modalembed.thf_printer import print_problem

log = logging.getLogger("modalembed")

DEFAULT_SYSTEMS = ["K", "D", "M", "S4", "S5"]
DEFAULT_DOMAINS = ["constant", "cumulative", "decreasing", "varying"]
STATUSES = ("Theorem", "CounterSatisfiable", "Unknown", "Timeout", "GaveUp", "Error")
_SZS = re.compile(r"SZS status\s+(\w+)")

EXIT_OK, EXIT_PARSE, EXIT_UNSUPPORTED, EXIT_INTERNAL = 0, 1, 2, 3


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, (ParseError, TypeCheckError, MissingConjecture)):
        return EXIT_PARSE
    if isinstance(exc, (LogicSpecError, UnsupportedFeature, OutsideFragment, BoundsTooLarge, StageMismatch)):
        return EXIT_UNSUPPORTED
    return EXIT_INTERNAL


# ---------------------------------------------------------------------------
# Configuration: optional JSON file whose keys mirror the long flag names
# (dashes become underscores); explicit flags take precedence.
# ---------------------------------------------------------------------------

DEFAULTS = {
    "system": None, "domains": None, "designation": None, "s5u": False, "s5_collapse": False,
    "defs": False, "include_root": None, "max_bytes": DEFAULT_MAX_BYTES, "systems": None,
    "max_worlds": 3, "max_domain": 2, "force": False, "timeout": 60.0, "jobs": None,
    "backend": None, "report": None, "workdir": None, "corpus": None,
}


def _settings(args: argparse.Namespace) -> argparse.Namespace:
    config = {}
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            config = json.load(fh)
        unknown = set(config) - set(DEFAULTS)
        if unknown:
            raise UnsupportedFeature(f"unknown configuration keys: {', '.join(sorted(unknown))}")
    merged = vars(args).copy()
    for key, default in DEFAULTS.items():
        if merged.get(key) is None:
            merged[key] = config.get(key, default)
    if merged.get("include_root") is None:
        merged["include_root"] = os.environ.get("TPTP")
    return argparse.Namespace(**merged)


def _options(s) -> EmbeddingOptions:
    return EmbeddingOptions(s5u=bool(s.s5u), s5_collapse=bool(s.s5_collapse), defs=bool(s.defs))


def _override_spec(problem: Problem, system, domains, designation) -> Optional[ls.LogicSpec]:
    """The problem's own specification with command-line overrides applied."""
    if system is None and domains is None and designation is None:
        return None
    base = problem.logic_spec
    if base is None and problem.logic_formula is not None:
        base = resolve_spec(problem, None)
    if base is None:
        if system is None or domains is None:
            raise UnsupportedFeature("the problem has no logic specification; give both --system and --domains")
        return ls.simple_spec(system, domains, designation or "rigid")
    if system is not None:
        base = replace(base, modalities=replace(base.modalities, default=ls.expand_system(ls.SYSTEM_PREFIX + system)))
    if domains is not None:
        base = replace(base, domain_default=ls.DomainSemantics(domains))
    if designation is not None:
        base = replace(base, designation=ls.Designation(designation))
    return base


def _warn(path, problem_or_diags):
    diags = getattr(problem_or_diags, "diagnostics", problem_or_diags)
    for d in diags:
        print(f"{path}:{d}", file=sys.stderr)


def _write(text: str, output: Optional[str]):
    if output:
        Path(output).write_text(text, encoding="ascii", errors="strict")
    else:
        sys.stdout.write(text)


def translate_file(path, s) -> str:
    problem = parse_file(path, include_root=s.include_root, max_bytes=s.max_bytes)
    _warn(path, problem)
    spec = _override_spec(problem, s.system, s.domains, s.designation)
    return print_problem(embed_problem(problem, spec, _options(s)), "thf")


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_translate(args) -> int:
    s = _settings(args)
    _write(translate_file(s.input, s), s.output)
    return EXIT_OK


def _inject(problem: Problem, spec: ls.LogicSpec) -> Problem:
    names = {af.name for af in problem.formulas}
    name = "logic_spec"
    k = 1
    while name in names:
        name = f"logic_spec{k}"
        k += 1
    lang = "tff" if all(af.language == "tff" for af in problem.formulas) else "thf"
    logic = AnnotatedFormula(lang, name, Role("logic"), ls.to_expr(spec))
    return Problem((logic,) + problem.formulas, spec, problem.signature, problem.stage, problem.header)


def cmd_inject_specs(args) -> int:
    s = _settings(args)
    systems = _split(s.systems) or DEFAULT_SYSTEMS
    domains = _split(s.domains) or DEFAULT_DOMAINS
    inputs = sorted(p for p in Path(s.input_dir).iterdir() if p.is_file() and p.suffix == ".p")
    problems = []
    for path in inputs:
        problem = parse_file(path, include_root=s.include_root, max_bytes=s.max_bytes)
        if problem.logic_formula is not None:
            print(f"{path}: already contains a logic specification", file=sys.stderr)
            return EXIT_UNSUPPORTED
        problems.append((path, problem))
    specs = [(sy, do, ls.simple_spec(sy, do, s.designation or "rigid")) for sy in systems for do in domains]
    out_dir = Path(s.output_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    count = 0
    for path, problem in problems:
        style = "nxf" if all(af.language == "tff" for af in problem.formulas) else "nhf"
        for system, dom, spec in specs:
            text = print_problem(_inject(problem, spec), style)
            (out_dir / f"{path.stem}.{system}.{dom}.p").write_text(text, encoding="ascii")
            count += 1
    print(f"wrote {count} problems to {out_dir}")
    return EXIT_OK


def _split(value):
    if value is None:
        return None
    if isinstance(value, (list, tuple)):
        return list(value)
    return [v for v in value.split(",") if v]


def cmd_convert_qmltp(args) -> int:
    s = _settings(args)
    text = Path(s.input).read_text(encoding="utf-8")
    problem = convert_qmltp(text, include_root=s.include_root, max_bytes=s.max_bytes)
    _warn(s.input, problem)
    _write(print_problem(problem, "nxf"), s.output)
    return EXIT_OK


def cmd_oracle(args) -> int:
    from modalembed import kripke_oracle as ko

    s = _settings(args)
    options = _options(s)
    reports = []
    if s.corpus:
        if not (s.system and s.domains):
            raise UnsupportedFeature("--corpus needs --system and --domains")
        spec = ls.simple_spec(s.system, s.domains, s.designation or "rigid")
        if s.corpus == "propositional":
            corpus, sig = ko.propositional_corpus(), ko.signature_problem()
        else:
            corpus, sig = ko.standard_first_order_corpus(), ko.signature_problem((), ("q",), ("a",))
        checker = ko.CorpusChecker(sig, spec, s.max_worlds, s.max_domain, options, s.force)
        total = ko.CrossCheckReport(f"{s.corpus} corpus, {spec.label}")
        valid = 0
        for f in corpus:
            r = checker.check(f)
            valid += r.valid
            r.countermodel = None
            total = total.merge(r)
        print(total.to_text())
        print(f"formulas: {len(corpus)}  valid: {valid}")
        reports.append(total)
    else:
        if not s.input:
            raise UnsupportedFeature("give a problem file or --corpus")
        problem = parse_file(s.input, include_root=s.include_root, max_bytes=s.max_bytes)
        _warn(s.input, problem)
        spec = _override_spec(problem, s.system, s.domains, s.designation) or resolve_spec(problem, None)
        decls = tuple(af for af in problem.formulas if af.role.base == "type")
        for af in problem.logical_formulas():
            single = Problem(decls + (replace(af, role=Role("conjecture")),), None, problem.signature)
            r = ko.cross_check(single, spec, s.max_worlds, s.max_domain, options, s.force)
            r.label = f"{af.name} as a goal, {r.label}"
            print(r.to_text())
            reports.append(r)
        if problem.conjecture is not None and len(problem.logical_formulas()) > 1:
            r = ko.cross_check(problem, spec, s.max_worlds, s.max_domain, options, s.force)
            r.label = f"problem, {r.label}"
            print(r.to_text())
            reports.append(r)
    summary = {"mismatches": sum(r.mismatches for r in reports),
               "axiom_violations": sum(r.axiom_violations for r in reports),
               "checks": [r.summary() for r in reports],
               "first_witness": next((w.describe() for r in reports for w in r.witnesses), None)}
    print("summary: " + json.dumps(summary, sort_keys=True))
    return EXIT_OK if summary["mismatches"] == 0 and summary["axiom_violations"] == 0 else 1


# ---------------------------------------------------------------------------
# Prover bridge
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunRecord:
    problem_id: str
    spec_label: str
    backend: str
    status: str
    wall_seconds: float


def parse_status(output: str) -> str:
    m = _SZS.search(output)
    if m is None:
        return "Unknown"
    return m.group(1) if m.group(1) in STATUSES else "Unknown"


def run_backend(template: str, file: str, timeout: float) -> tuple:
    cmd = [part.replace("{file}", file) for part in shlex.split(template)]
    start = time.monotonic()
    try:
        proc = subprocess.run(cmd, capture_output=True, text=True, timeout=timeout)
    except subprocess.TimeoutExpired:
        return "Timeout", time.monotonic() - start
    except OSError as exc:
        log.warning("cannot start backend %s: %s", cmd[0], exc)
        return "Error", time.monotonic() - start
    return parse_status(proc.stdout), time.monotonic() - start


def _problem_id(path: Path) -> str:
    m = re.match(r"(.+)\.([A-Za-z0-9]+)\.(constant|cumulative|decreasing|varying)$", path.stem)
    return m.group(1) if m else path.stem


def _backends(values) -> list:
    out = []
    for v in values or []:
        name, sep, template = v.partition("=")
        if not sep:
            template, name = v, Path(shlex.split(v)[0]).name
        if "{file}" not in template:
            raise UnsupportedFeature(f"backend command {template!r} has no {{file}} placeholder")
        out.append((name, template))
    if not out:
        raise UnsupportedFeature("give at least one --backend NAME=COMMAND")
    if len({n for n, _ in out}) != len(out):
        raise UnsupportedFeature("backend names must be distinct")
    return out


def summarize(records, backends) -> list:
    """Rows (spec label, per-backend solved, union, intersection, per-backend unique) plus totals."""
    labels = sorted({r.spec_label for r in records})
    solved = {}
    for r in records:
        if r.status == "Theorem":
            solved.setdefault((r.spec_label, r.backend), set()).add(r.problem_id)
    rows = []
    for label in labels + ["Total"]:
        sets = {}
        for b in backends:
            if label == "Total":
                sets[b] = {(lab, pid) for lab in labels for pid in solved.get((lab, b), ())}
            else:
                sets[b] = set(solved.get((label, b), ()))
        union = set().union(*sets.values())
        inter = set.intersection(*sets.values()) if sets else set()
        unique = {b: len(sets[b] - set().union(*(sets[o] for o in backends if o != b))) for b in backends}
        rows.append({"spec": label, **{b: len(sets[b]) for b in backends},
                     "Union": len(union), "Intersection": len(inter),
                     **{f"Unique {b}": unique[b] for b in backends}})
    return rows


def system_totals(records, backends) -> list:
    by_system = {}
    for r in records:
        if r.status == "Theorem":
            by_system.setdefault(r.spec_label.split("/")[0], {}).setdefault(r.backend, 0)
            by_system[r.spec_label.split("/")[0]][r.backend] += 1
    systems = sorted({r.spec_label.split("/")[0] for r in records})
    return [{"system": s, **{b: by_system.get(s, {}).get(b, 0) for b in backends}} for s in systems]


def render_table(rows) -> str:
    if not rows:
        return ""
    cols = list(rows[0])
    widths = {c: max(len(c), *(len(str(r[c])) for r in rows)) for c in cols}
    line = lambda vals: "  ".join(str(v).rjust(widths[c]) if i else str(v).ljust(widths[c])
                                  for i, (c, v) in enumerate(zip(cols, vals)))
    out = [line(cols), "  ".join("-" * widths[c] for c in cols)]
    out += [line([r[c] for c in cols]) for r in rows]
    return "\n".join(out)


def _tsv(rows) -> str:
    cols = list(rows[0]) if rows else []
    return "\n".join(["\t".join(cols)] + ["\t".join(str(r[c]) for c in cols) for r in rows]) + "\n"


def collect_problems(paths) -> list:
    out = []
    for p in map(Path, paths):
        if p.is_dir():
            out += sorted(q for q in p.iterdir() if q.is_file() and q.suffix == ".p")
        else:
            out.append(p)
    return out


def cmd_run(args) -> int:
    s = _settings(args)
    backends = _backends(s.backend)
    problems = collect_problems(s.problems)
    jobs = s.jobs or os.cpu_count() or 1
    timeout = float(s.timeout)

    with tempfile.TemporaryDirectory() as tmp:
        workdir = Path(s.workdir or tmp)
        workdir.mkdir(parents=True, exist_ok=True)

        def prepare(path: Path):
            try:
                problem = parse_file(path, include_root=s.include_root, max_bytes=s.max_bytes)
                spec = _override_spec(problem, s.system, s.domains, s.designation) or resolve_spec(problem, None)
                text = print_problem(embed_problem(problem, spec, _options(s)), "thf")
            except ModalEmbedError as exc:
                print(f"{path}: {exc}", file=sys.stderr)
                label = "unknown"
                return path, label, None
            out = workdir / f"{path.stem}.thf.p"
            out.write_text(text, encoding="ascii")
            return path, spec.label, out

        with ThreadPoolExecutor(max_workers=jobs) as pool:
            prepared = list(pool.map(prepare, problems))

            def job(item):
                (path, label, file), (name, template) = item
                if file is None:
                    return RunRecord(_problem_id(path), label, name, "Error", 0.0)
                status, wall = run_backend(template, str(file), timeout)
                return RunRecord(_problem_id(path), label, name, status, round(wall, 3))

            work = [(p, b) for p in prepared for b in backends]
            records = list(pool.map(job, work))

    names = [n for n, _ in backends]
    rows = summarize(records, names)
    header = f"# timeout {timeout:g}s wall-clock per problem (not CPU time); solved = SZS status Theorem\n"
    record_rows = [{"problem": r.problem_id, "spec": r.spec_label, "backend": r.backend,
                    "status": r.status, "wall_seconds": r.wall_seconds} for r in records]
    if s.report:
        report = Path(s.report)
        report.write_text(header + _tsv(record_rows), encoding="utf-8")
        summary_path = report.with_name(report.stem + ".summary.tsv")
        summary_path.write_text(header + _tsv(rows), encoding="utf-8")
    print(header.rstrip())
    print(render_table(rows))
    print()
    print(render_table(system_totals(records, names)))
    return EXIT_OK


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="modalembed", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file with default values for any long option")
        p.add_argument("--include-root", help="directory for include() resolution (default: $TPTP)")
        p.add_argument("--max-bytes", type=int, help="input size limit")

    def logic(p, plural=False):
        p.add_argument("--system", help="modal system: K, D, M, T, K4, D4, B, S4, S5")
        p.add_argument("--domains", help="constant, cumulative, decreasing or varying")
        p.add_argument("--designation", choices=["rigid", "flexible"])
        p.add_argument("--s5u", action="store_true", default=None, help="universal relation for S5 modalities")
        p.add_argument("--s5-collapse", action="store_true", default=None,
                       help="treat S5 cumulative/decreasing domains as constant")
        p.add_argument("--defs", action="store_true", default=None, help="emit named connective definitions")

    p = sub.add_parser("translate", help="embed a modal problem into THF")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    common(p)
    logic(p)
    p.set_defaults(func=cmd_translate)

    p = sub.add_parser("inject-specs", help="add logic specifications to spec-less problems")
    p.add_argument("input_dir")
    p.add_argument("output_dir")
    p.add_argument("--systems", help=f"comma-separated (default {','.join(DEFAULT_SYSTEMS)})")
    p.add_argument("--domains", help=f"comma-separated (default {','.join(DEFAULT_DOMAINS)})")
    p.add_argument("--designation", choices=["rigid", "flexible"])
    common(p)
    p.set_defaults(func=cmd_inject_specs)

    p = sub.add_parser("convert-qmltp", help="convert QMLTP qmf syntax to tff with connectives")
    p.add_argument("input")
    p.add_argument("-o", "--output")
    common(p)
    p.set_defaults(func=cmd_convert_qmltp)

    p = sub.add_parser("oracle", help="cross-check the embedding against Kripke semantics")
    p.add_argument("input", nargs="?")
    p.add_argument("--corpus", choices=["propositional", "first-order"])
    p.add_argument("--max-worlds", type=int)
    p.add_argument("--max-domain", type=int)
    p.add_argument("--force", action="store_true", default=None, help="allow bounds above the ceiling")
    common(p)
    logic(p)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("run", help="translate problems and run external provers")
    p.add_argument("problems", nargs="+", help="problem files or directories")
    p.add_argument("--backend", action="append", help="NAME=COMMAND with a {file} placeholder (repeatable)")
    p.add_argument("--timeout", type=float, help="wall-clock seconds per prover call")
    p.add_argument("--report", help="TSV file for run records (summary goes next to it)")
    p.add_argument("--jobs", type=int, help="worker threads (default: number of processors)")
    p.add_argument("--workdir", help="keep translated files here")
    common(p)
    logic(p)
    p.set_defaults(func=cmd_run)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ParseError as exc:
        for d in exc.diagnostics:
            print(f"{getattr(args, 'input', '') or ''}:{d}", file=sys.stderr)
        return EXIT_PARSE
    except ModalEmbedError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)
    except (OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except Exception as exc:  # noqa: BLE001 - last-resort fault barrier
        log.exception("internal fault")
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
