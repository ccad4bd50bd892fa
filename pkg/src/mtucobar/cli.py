"""Command-line driver: charts, coactions, obstruction reports and multiplier bounds.

Exit codes: 0 success, 2 usage or parse error, 3 computation error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass
from typing import Callable, Sequence

from . import __version__
from .bpalgebra import algebroid
from .chern import (
    BERNOULLI_CONVENTION,
    a_d,
    lcm_bound,
    parse_class,
    partition_refinements,
    section_report,
)
from .cobar import d1_matrix, differential_candidates, e2_chart, mode_divergences, thread_count
from .comodules import ComoduleSpec, Family, Mode, coaction_of, parse_element
from .errors import MtuCobarError, NonIntegerError
from .exactlin import AbelianGroupPresentation, Partition

EXIT_OK, EXIT_USAGE, EXIT_COMPUTE = 0, 2, 3


@dataclass
class RunConfig:
    command: str
    p: int = 2
    d: int = 0
    r: int = 0
    family: str = "mtubar"
    s_max: int = 3
    t_max: int = 16
    mode: str = "derived"
    cross_check: bool = True
    fmt: str = "json"
    output: str | None = None

    def spec(self, degree_bound: int | None = None) -> ComoduleSpec:
        bound = self.t_max if degree_bound is None else degree_bound
        bound += bound % 2
        return ComoduleSpec(Family(self.family), d=self.d, r=self.r, p=self.p, degree_bound=bound)


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def cmd_chart(cfg: RunConfig) -> int:
    if cfg.s_max < 0 or cfg.t_max < 0:
        raise ValueError("--smax and --tmax must be non-negative")
    spec = cfg.spec()
    chart = e2_chart(spec, cfg.s_max, cfg.t_max, Mode(cfg.mode))
    if cfg.cross_check and Mode(cfg.mode) is Mode.DERIVED:
        diverged = mode_divergences(chart)
        if diverged:
            for s, t, ours, theirs in diverged:
                print(f"mode divergence at E2^({s},{t}): derived {ours}, paper_table {theirs}", file=sys.stderr)
            return EXIT_COMPUTE
    _emit(cfg, chart.to_json() if cfg.fmt == "json" else chart.to_text())
    return EXIT_OK


def cmd_coaction(cfg: RunConfig, expression: str) -> int:
    # parse once against a generous table to learn the degree, then size the algebroid to it
    probe = cfg.spec(max(cfg.t_max, 32))
    poly = parse_element(probe, expression)
    top = max(probe.table.degree(m) for m in poly.terms)
    spec = cfg.spec(max(top, 2))
    psi = coaction_of(spec, parse_element(spec, expression), Mode(cfg.mode))
    if cfg.fmt == "json":
        _emit(cfg, json.dumps({"element": expression, "family": spec.label, "mode": cfg.mode,
                               "coaction": str(psi)}, indent=2))
    else:
        _emit(cfg, str(psi))
    return EXIT_OK


def cmd_obstruction(cfg: RunConfig, expression: str) -> int:
    report = section_report(parse_class(expression))
    doc = report.to_dict()
    if cfg.fmt == "json":
        _emit(cfg, json.dumps(doc, indent=2))
    else:
        lines = [f"d = {report.d}", f"rational_max_r = {report.rational_max_r}",
                 f"guaranteed_r = {report.guaranteed_r}",
                 f"multiplier = {report.multiplier if report.multiplier is not None else 'unavailable'}"]
        if report.multiplier_error:
            lines.append(f"multiplier error: {report.multiplier_error}")
        for r, ws in sorted(report.witnesses.items()):
            if ws:
                lines.append(f"r = {r}: witnesses " + ", ".join(str(tuple(w)) for w in ws))
        _emit(cfg, "\n".join(lines))
    return EXIT_OK


def _parse_partition(text: str) -> Partition:
    try:
        parts = [int(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise ValueError(f"bad partition {text!r}; expected e.g. 2,1") from None
    if not parts or any(x < 1 for x in parts):
        raise ValueError(f"bad partition {text!r}; expected positive parts such as 2,1")
    return Partition(parts)


def cmd_bound(cfg: RunConfig, partition: str) -> int:
    part = _parse_partition(partition)
    c = lcm_bound(part)
    table = []
    for j in partition_refinements(part):
        a_j = 1
        for x in j:
            a_j *= a_d(x).numerator
        table.append((j, a_j))
    if cfg.fmt == "json":
        doc = {"partition": list(part), "C": c, "convention": BERNOULLI_CONVENTION,
               "refinements": [{"J": list(j), "a_J": a} for j, a in table]}
        _emit(cfg, json.dumps(doc, indent=2))
    else:
        lines = [f"C = {c}"] + [f"  a_{tuple(j)} = {a}" for j, a in table]
        lines.append(f"convention: {BERNOULLI_CONVENTION}")
        _emit(cfg, "\n".join(lines))
    return EXIT_OK


# -- golden checks against printed values ---------------------------------------------


def _golden_checks() -> list[tuple[str, Callable[[], bool]]]:
    def eta_v1() -> bool:
        alg = algebroid(2, 4)
        return str(alg.eta_R(alg.table.parse("v1"))) == str(alg.table.parse("v1 + 2*t1"))

    def mtubar_coactions() -> bool:
        spec = ComoduleSpec(Family.MTUBAR, d=6, degree_bound=18)
        want = {"B1^7": "1 (x) B1^7", "B2*B1^6": "2 t1 (x) B1^7 + 1 (x) B2 B1^6",
                "B1^8": "8 t1 (x) B1^7 + 1 (x) B1^8", "v1*B1^7": "-2 t1 (x) B1^7 + 1 (x) v1 B1^7"}
        return all(str(coaction_of(spec, parse_element(spec, k))) == v for k, v in want.items())

    def table_7x4() -> bool:
        d = 6
        spec = ComoduleSpec(Family.MTUBAR, d=d, degree_bound=2 * d + 6)
        printed = [[3, 0, -2, 5], [4, 0, 0, 4], [d + 1, 2, 0, 2 * d + 3],
                   [0, d + 3, 0, (d + 3) * (d + 2) // 2], [-2, 0, 2, -4],
                   [0, -2, d + 2, 2 * (d + 2)], [0, 0, -4, 4]]
        return d1_matrix(spec, 0, 2 * d + 6, Mode.PAPER_TABLE).to_rows() == printed

    def parity() -> bool:
        out = []
        for d in (4, 5):
            spec = ComoduleSpec(Family.MTUBAR, d=d, degree_bound=2 * d + 4)
            g = e2_chart(spec, 1, 2 * d + 4, threads=1).group(1, 2 * d + 4)
            out.append(g == (AbelianGroupPresentation(0, (2,)) if d % 2 == 0 else AbelianGroupPresentation()))
        return all(out)

    def zero_line() -> bool:
        spec = ComoduleSpec(Family.MTUBAR, d=6, degree_bound=18)
        chart = e2_chart(spec, 0, 18, threads=1)
        return [chart.group(0, t).free_rank for t in (14, 16, 18)] == [1, 2, 4]

    def sphere() -> bool:
        spec = ComoduleSpec(Family.SPHERE, degree_bound=10)
        chart = e2_chart(spec, 4, 10, threads=1)
        want = {(0, 0): "Z", (1, 2): "Z/2", (2, 4): "Z/2", (1, 4): "Z/4", (3, 6): "Z/2", (2, 6): "0"}
        return all(str(chart.group(s, t)) == g for (s, t), g in want.items())

    def d3_candidate() -> bool:
        d = 6
        spec = ComoduleSpec(Family.MTUBAR, d=d, degree_bound=2 * d + 10)
        chart = e2_chart(spec, 5, 2 * d + 10, threads=1)
        found = [c for t in range(2 * d + 2, 2 * d + 7, 2) for c in differential_candidates(chart, (0, t))]
        return [(r, target) for r, target, _ in found] == [(3, (3, 2 * d + 8))]

    def gap_2d6() -> bool:
        d = 6
        spec = ComoduleSpec(Family.MTUBAR, d=d, degree_bound=2 * d + 6)
        return e2_chart(spec, 2, 2 * d + 6, threads=1).group(2, 2 * d + 6).is_zero()

    return [
        ("eta_R(v1) = v1 + 2 t1", eta_v1),
        ("four MTUbar(6) coactions", mtubar_coactions),
        ("7x4 d1 table, d=6", table_7x4),
        ("E2^(1,2d+4) parity, d=4,5", parity),
        ("MTUbar(6) zero line Z, Z2, Z4", zero_line),
        ("sphere chart, p=2", sphere),
        ("E2^(2,2d+6) = 0, d=6", gap_2d6),
        ("single d3 candidate, d=6", d3_candidate),
    ]


def cmd_selftest(cfg: RunConfig) -> int:
    rows = []
    for name, check in _golden_checks():
        try:
            ok = bool(check())
            rows.append((name, "PASS" if ok else "FAIL", ""))
        except MtuCobarError as exc:
            rows.append((name, "FAIL", f"{type(exc).__name__}: {exc}"))
    width = max(len(n) for n, _, _ in rows)
    lines = [f"{n.ljust(width)}  {status}  {note}".rstrip() for n, status, note in rows]
    failed = sum(status == "FAIL" for _, status, _ in rows)
    lines.append(f"{len(rows) - failed}/{len(rows)} golden checks passed")
    _emit(cfg, "\n".join(lines))
    return EXIT_OK if not failed else EXIT_COMPUTE


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--p", type=int, default=2, help="prime (default 2)")
    common.add_argument("--format", dest="fmt", choices=["json", "text"], default="json")
    common.add_argument("--output", help="write to this file instead of standard output")
    common.add_argument("--mode", choices=[m.value for m in Mode], default=Mode.DERIVED.value)

    fam = argparse.ArgumentParser(add_help=False)
    fam.add_argument("--family", choices=[f.value for f in Family], default=Family.MTUBAR.value)
    fam.add_argument("--d", type=int, default=0)
    fam.add_argument("--r", type=int, default=0)

    parser = argparse.ArgumentParser(prog="mtucobar", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    chart = sub.add_parser("chart", parents=[common, fam], help="E2 chart of a comodule family")
    chart.add_argument("--smax", dest="s_max", type=int, default=3)
    chart.add_argument("--tmax", dest="t_max", type=int, default=16)
    chart.add_argument("--no-cross-check", dest="cross_check", action="store_false",
                       help="skip the paper_table comparison of derived-mode charts")

    co = sub.add_parser("coaction", parents=[common, fam], help="coaction of a comodule element")
    co.add_argument("element", help='e.g. "B2*B1^6"')
    co.add_argument("--tmax", dest="t_max", type=int, default=0, help="degree bound override")

    ob = sub.add_parser("obstruction", parents=[common], help="section report of a cobordism class")
    ob.add_argument("cls", metavar="class", help='e.g. "3*[CP1xCP1]-4*[CP2]"')

    bd = sub.add_parser("bound", parents=[common], help="lcm multiplier bound for a partition")
    bd.add_argument("--partition", required=True, help="comma-separated parts, e.g. 2,1")

    sub.add_parser("selftest", parents=[common], help="run the golden checks")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    known = {f for f in RunConfig.__dataclass_fields__}
    cfg = RunConfig(**{k: v for k, v in vars(args).items() if k in known})
    try:
        thread_count()  # validate the environment variable early
        if args.command == "chart":
            return cmd_chart(cfg)
        if args.command == "coaction":
            return cmd_coaction(cfg, args.element)
        if args.command == "obstruction":
            return cmd_obstruction(cfg, args.cls)
        if args.command == "bound":
            return cmd_bound(cfg, args.partition)
        return cmd_selftest(cfg)
    except NonIntegerError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except MtuCobarError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
