"""Command line front end.

Each subcommand reads its inputs, runs one library computation and emits a
``Report``: human-readable lines by default, or one JSON document with
``--json``.  Errors surface with a stable code and a documented exit status.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

from .errors import EXIT_OK, EXIT_PARSE, FormalChartError, ParseError
from .exactalg import Rational, as_point, rational_str
from .localforms import (
    JetMap,
    constant_rank_check,
    identity_jetmap,
    jet_invert,
    jetmap_compose,
    kernel_surjectivity_certificate,
    morphism_to_jetmap,
    standardize,
)
from .morphfile import parse_expression, parse_morphism, print_morphism
from .morphism import Morphism, classify_at, compose, differential_at, source_names, target_names, underlying_point
from .series import DEFAULT_ORDER, Jet, fps_from_poly
from .submanifold import SliceSpec, borel_preimage, level_set, slice_pullback


@dataclass
class Report:
    command: str
    inputs: dict[str, Any]
    order: int
    results: dict[str, Any] = field(default_factory=dict)
    errors: list[dict[str, Any]] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "Report":
        data = json.loads(text)
        return cls(data["command"], data["inputs"], data["order"], data["results"], data["errors"])

    def to_text(self) -> str:
        lines = [f"command: {self.command}", f"order: {self.order}"]
        lines += _text_lines(self.results, 0)
        for err in self.errors:
            lines.append(f"error: {err['code']}: {err['message']}")
            for key, value in sorted(err.get("details", {}).items()):
                lines.append(f"  {key}: {value}")
        return "\n".join(lines) + "\n"


def _text_lines(value: Any, depth: int) -> list[str]:
    pad = "  " * depth
    out = []
    for key, item in value.items():
        if isinstance(item, dict):
            out.append(f"{pad}{key}:")
            out += _text_lines(item, depth + 1)
        elif isinstance(item, list) and item and all(isinstance(x, str) for x in item):
            out.append(f"{pad}{key}:")
            out += [f"{pad}  {x}" for x in item]
        elif isinstance(item, list) and item and all(isinstance(x, list) for x in item):
            out.append(f"{pad}{key}:")
            out += [f"{pad}  [" + ", ".join(str(_plain(v)) for v in row) + "]" for row in item]
        else:
            out.append(f"{pad}{key}: {_plain(item)}")
    return out


def _plain(value: Any) -> Any:
    """Convert to JSON-native values; rationals become ``"p/q"`` strings."""
    if isinstance(value, Rational):
        return rational_str(value)
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


# --- inputs ------------------------------------------------------------------------


def parse_point(text: str | None, length: int) -> tuple[Rational, ...]:
    if text is None or not text.strip():
        if text is not None and length:
            raise ParseError(f"expected {length} coordinates, got none", 1, 1)
        return (Rational(0),) * length
    parts = [p.strip() for p in text.split(",")]
    try:
        point = as_point(parts)
    except (ValueError, TypeError) as exc:
        raise ParseError(f"bad point {text!r}: {exc}", 1, 1) from exc
    if len(point) != length:
        raise ParseError(f"expected {length} coordinates, got {len(point)}", 1, 1)
    return point


def parse_slice(text: str) -> SliceSpec:
    try:
        values = [int(v) for v in text.split(",")]
    except ValueError as exc:
        raise ParseError(f"bad slice parameters {text!r}", 1, 1) from exc
    if len(values) != 5:
        raise ParseError("slice parameters are n,n',r,k,k'", 1, 1)
    return SliceSpec(*values)


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc.strerror}", 0, 0) from exc


def _load(path: str, order: int) -> Morphism:
    return parse_morphism(_read(path), order)


def _jet_lines(j: JetMap, labels: Sequence[str], names: Sequence[str]) -> list[str]:
    return [f"{lab} = {c.format(names)}" for lab, c in zip(labels, j.components)]


def _primed(names: Sequence[str]) -> list[str]:
    return [n[0] + "'" + n[1:] for n in names]


# --- subcommands -------------------------------------------------------------------


def cmd_analyze(args, report: Report) -> None:
    m = _load(args.file, args.order)
    b = parse_point(args.point, m.src[0])
    report.inputs["point"] = list(b)
    flags = classify_at(m, b)
    t = flags.triple
    report.results["underlying_point"] = list(underlying_point(m, b))
    report.results["rank_triple"] = {"total": t.rank_total, "reduced": t.rank_reduced, "formal": t.rank_formal}
    report.results["classification"] = {
        "immersion": flags.immersion,
        "submersion": flags.submersion,
        "regular": flags.regular,
        "bijective_differential": flags.bijective_differential,
    }
    report.results["differential"] = [list(row) for row in differential_at(m, b).entries]
    check = constant_rank_check(m, b)
    report.results["constant_rank"] = {"constant": check.constant, "witness": check.witness}
    if args.order >= 2:
        cert = kernel_surjectivity_certificate(m, b, args.cert_order or args.order)
        report.results["certificate"] = {
            "order": cert.order,
            "verdict": cert.verdict,
            "dim_ker_deg2": cert.dim_ker_deg2,
            "witness": cert.witness,
        }


def cmd_compose(args, report: Report) -> None:
    outer = _load(args.outer, args.order)
    inner = _load(args.inner, args.order)
    result = compose(outer, inner)
    report.results["morphism"] = print_morphism(result).splitlines()


def cmd_invert(args, report: Report) -> None:
    m = _load(args.file, args.order)
    b = parse_point(args.point, m.src[0])
    report.inputs["point"] = list(b)
    phi = morphism_to_jetmap(m, b, args.order)
    inv = jet_invert(phi)
    report.results["target_point"] = list(phi.target_basepoint)
    report.results["inverse"] = _jet_lines(inv, source_names(*m.src), target_names(*m.tgt))
    left = jetmap_compose(inv, phi) == identity_jetmap(*m.src, phi.source_basepoint, args.order)
    right = jetmap_compose(phi, inv) == identity_jetmap(*m.tgt, phi.target_basepoint, args.order)
    report.results["roundtrip"] = "ok" if left and right else "failed"


def cmd_standardize(args, report: Report) -> None:
    m = _load(args.file, args.order)
    b = parse_point(args.point, m.src[0])
    report.inputs["point"] = list(b)
    std = standardize(m, b, args.order, args.cert_order)
    src, tgt = source_names(*m.src), target_names(*m.tgt)
    t = std.rank_triple
    report.results["triple"] = {"r1": std.triple[0], "r2": std.triple[1], "r3": std.triple[2]}
    report.results["rank_triple"] = {"total": t.rank_total, "reduced": t.rank_reduced, "formal": t.rank_formal}
    report.results["certificate"] = {"order": std.certificate.order, "verdict": std.certificate.verdict}
    report.results["target_chart_change"] = _jet_lines(std.target_chart_change, _primed(tgt), tgt)
    report.results["source_chart_change"] = _jet_lines(std.source_chart_change, _primed(src), src)
    report.results["standardized"] = _jet_lines(std.standardized, _primed(tgt), _primed(src))
    report.results["residual"] = std.residual
    report.results["preserves_formal_ideal"] = std.preserves_formal_ideal


def cmd_level_set(args, report: Report) -> None:
    m = _load(args.file, args.order)
    b = parse_point(args.point, m.src[0])
    a = parse_point(args.value, m.tgt[0]) if args.value is not None else underlying_point(m, b)
    report.inputs["point"] = list(b)
    report.inputs["value"] = list(a)
    res = level_set(m, a, b, args.order, args.cert_order)
    n1, k1 = res.fiber_dims
    fiber = [f"u'{i + 1}" for i in range(n1)] + [f"z'{j + 1}" for j in range(k1)]
    report.results["triple"] = {"r1": res.triple[0], "r2": res.triple[1], "r3": res.triple[2]}
    report.results["fiber_dims"] = {"n1": n1, "k1": k1}
    report.results["embedding"] = _jet_lines(res.embedding, source_names(*m.src), fiber)
    src = source_names(*m.src)
    report.results["ideal_generators"] = [g.format(src) for g in res.ideal_generators]


def _series_arg(text: str, smooth: str, formal: str, n: int, k: int, order: int):
    return fps_from_poly(parse_expression(text, smooth, formal, n, k), n, k, order)


def cmd_slice_pullback(args, report: Report) -> None:
    spec = parse_slice(args.slice)
    report.inputs["slice"] = [spec.n, spec.n_src, spec.r, spec.k, spec.k_src]
    report.inputs["expr"] = args.expr
    f = _series_arg(args.expr, "x", "y", spec.n, spec.k, args.order)
    g = slice_pullback(spec, f)
    report.results["pullback"] = g.format(*_split_names(source_names(spec.n_src, spec.k_src), spec.n_src))


def cmd_borel_preimage(args, report: Report) -> None:
    spec = parse_slice(args.slice)
    report.inputs["slice"] = [spec.n, spec.n_src, spec.r, spec.k, spec.k_src]
    report.inputs["expr"] = args.expr
    g = _series_arg(args.expr, "u", "z", spec.n_src, spec.k_src, args.order)
    f = borel_preimage(spec, g, args.order)
    report.results["preimage"] = f.format(*_split_names(target_names(spec.n, spec.k), spec.n))
    report.results["roundtrip"] = "ok" if slice_pullback(spec, f) == g else "failed"


def _split_names(names: list[str], n: int) -> tuple[list[str], list[str]]:
    return names[:n], names[n:]


COMMANDS: dict[str, Callable] = {
    "analyze": cmd_analyze,
    "compose": cmd_compose,
    "invert": cmd_invert,
    "standardize": cmd_standardize,
    "level-set": cmd_level_set,
    "slice-pullback": cmd_slice_pullback,
    "borel-preimage": cmd_borel_preimage,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="formalchart", description="Exact jet calculus for formal chart morphisms.")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--order", type=int, default=DEFAULT_ORDER, help="truncation order (default 8)")
        p.add_argument("--json", action="store_true", help="emit one JSON document")

    def pointed(p, cert=False):
        p.add_argument("file", help="morphism description file")
        p.add_argument("--point", help="source point as comma-separated rationals (default: origin)")
        if cert:
            p.add_argument("--cert-order", type=int, default=None, help="order of the kernel certificate")
        common(p)

    pointed(sub.add_parser("analyze", help="rank triple, classification, constant rank, certificate"), cert=True)
    p = sub.add_parser("compose", help="compose two morphisms (outer after inner)")
    p.add_argument("outer")
    p.add_argument("inner")
    common(p)
    pointed(sub.add_parser("invert", help="invert the jet of a morphism at a point"))
    pointed(sub.add_parser("standardize", help="chart changes to the standard form"), cert=True)
    p = sub.add_parser("level-set", help="local model of a fiber")
    pointed(p, cert=True)
    p.add_argument("--value", help="target point (default: image of the source point)")
    for name in ("slice-pullback", "borel-preimage"):
        p = sub.add_parser(name, help=f"{name.replace('-', ' ')} along a slice")
        p.add_argument("--slice", required=True, help="slice parameters n,n',r,k,k'")
        p.add_argument("--expr", required=True, help="series expression")
        common(p)
    return parser


def run(argv: Sequence[str]) -> tuple[Report, int]:
    args = build_parser().parse_args(argv)
    inputs = {k: v for k, v in vars(args).items() if k not in ("command", "json", "order") and v is not None}
    report = Report(args.command, inputs, args.order)
    status = EXIT_OK
    try:
        if args.order < 0:
            raise ParseError("the order must be non-negative", 0, 0)
        COMMANDS[args.command](args, report)
    except FormalChartError as exc:
        report.errors.append({"code": exc.code, "message": str(exc), "details": exc.details()})
        status = exc.exit_status
    report.inputs = _plain(report.inputs)
    report.results = _plain(report.results)
    report.errors = _plain(report.errors)
    return report, status


def main(argv: Sequence[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        report, status = run(argv)
    except SystemExit as exc:
        # argparse usage errors count as parse errors
        return EXIT_PARSE if exc.code not in (0, None) else EXIT_OK
    as_json = "--json" in argv
    sys.stdout.write(report.to_json() + "\n" if as_json else report.to_text())
    return status


if __name__ == "__main__":
    sys.exit(main())
