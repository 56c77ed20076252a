#!/usr/bin/env python3
"""
Command-line entry point for the quantized knot toolkit
Every subcommand prints one JSON document on stdout; logs and errors go to
stderr. Exit status: 0 success, 1 invalid input or failed check, 2 cap hit
or an answer left unknown by the search limits.
"""

import argparse
import json
import logging
import math
import re
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import knot_settings
from bracket_state_sum import bracket_A, bracket_q, enhanced_states, jones
from gauss_moves import (
    MoveRule, QuantumGaussWord, apply_blank_swap, apply_cyclic, apply_cyclic_prefix, apply_r1,
    apply_r2, apply_r3, bounded_equivalence, load_r3_variants, neighbors, permute_indices,
)
from khovanov_complex import (
    build_complex, check_anticommutation, check_boundary_squared, check_eigenvalue_propagation, check_grading,
    amplitude, density_trace, eigenspace_amplitude, graded_euler, homology, shifted_table, unit_points,
)
from knot_codecs import (
    Mosaic, PlanarDiagram, format_pd, mirror, mosaic_injection, mosaic_to_pd, parse_mosaic, parse_pd,
    validate_mosaic,
)
from mosaic_moves import default_moves, load_moves, orbit_bfs, same_orbit
from quantized_instances import (
    Presentation, bounded_word_equivalence, isomorphic_graphs, load_graph, load_presentation, parse_word,
)
from quantum_core import (
    CapExceededError, CheckReport, ConventionError, KnotQuantError, LaurentPolynomial, SearchLimits, SearchStatus,
    ValidationError, dumps_compact, laurent_eval,
)

logger = logging.getLogger(__name__)

EXIT_OK, EXIT_INVALID, EXIT_UNKNOWN = 0, 1, 2

_ANGLE_RE = re.compile(r"^([+-]?\d*(?:\.\d+)?)\*?pi(?:/(\d+(?:\.\d+)?))?$")


class _ExitCode(Exception):
    def __init__(self, code: int):
        super().__init__(code)
        self.code = code


class _Parser(argparse.ArgumentParser):
    """argparse with one-line usage errors and exit status 1"""

    def error(self, message):
        print(f"error: usage: {message}", file=sys.stderr)
        raise _ExitCode(EXIT_INVALID)


def parse_angle(spec: str) -> complex:
    """
    Unit-circle point e^{i*theta} from "pi/5", "2pi/5", "-pi/3" or plain radians.

    Raises:
        ValidationError: unreadable angle
    """
    text = spec.strip().replace(" ", "")
    match = _ANGLE_RE.match(text)
    if match:
        factor = match.group(1)
        numerator = float(factor) if factor not in ("", "+", "-") else (-1.0 if factor == "-" else 1.0)
        theta = numerator * math.pi / float(match.group(2) or 1)
    else:
        try:
            theta = float(text)
        except ValueError:
            raise ValidationError(f"unreadable angle {spec!r}; use forms like pi/5 or 0.628")
    return complex(math.cos(theta), math.sin(theta))


def _read(path: str) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc.strerror}")


def load_diagram(path: str) -> PlanarDiagram:
    """PD JSON when the file starts with '{', a mosaic otherwise"""
    text = _read(path)
    if text.lstrip().startswith("{"):
        return parse_pd(text)
    m = parse_mosaic(text)
    report = validate_mosaic(m)
    if not report.valid:
        raise ValidationError(f"mosaic is not suitably connected: {report.summary()}")
    return mosaic_to_pd(m)


def _load_mosaic(path: str) -> Mosaic:
    return parse_mosaic(_read(path))


def _json_or_file(value: str) -> str:
    return value if value.lstrip().startswith("{") else _read(value)


def _complex(z: complex) -> List[float]:
    return [round(z.real, 12), round(z.imag, 12)]


def _limits(args) -> SearchLimits:
    base = knot_settings.current_limits()
    return SearchLimits(max_states=args.max_states if args.max_states is not None else base.max_states,
                        max_depth=args.max_depth if args.max_depth is not None else base.max_depth)


def _emit(data: Any, pretty: bool):
    print(json.dumps(data, indent=2, ensure_ascii=False) if pretty else dumps_compact(data))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_bracket(args) -> int:
    d = load_diagram(args.diagram)
    poly = bracket_A(d) if args.form == "a" else bracket_q(d)
    _emit(poly.to_json(), args.pretty)
    return EXIT_OK


def cmd_jones(args) -> int:
    _emit(jones(load_diagram(args.diagram)).to_json(), args.pretty)
    return EXIT_OK


def cmd_khovanov(args) -> int:
    d = load_diagram(args.diagram)
    complex_ = build_complex(d)
    unshifted = homology(complex_, torsion=args.torsion)
    table = shifted_table(unshifted, d) if args.shifted else unshifted
    if args.table:
        print(table.pivot().to_string())
        return EXIT_OK
    data = table.to_json()
    data["shifted"] = args.shifted
    data["eulerCharacteristic"] = graded_euler(complex_, unshifted).to_json()
    _emit(data, args.pretty)
    return EXIT_OK


def cmd_amplitude(args) -> int:
    d = load_diagram(args.diagram)
    q = parse_angle(args.q)
    bracket = bracket_q(d)
    data: Dict[str, Any] = {
        "q": _complex(q),
        "amplitude": _complex(amplitude(d, q)),
        "bracketAtQ": _complex(laurent_eval(bracket, q)),
        "densityTrace": _complex(density_trace(d, q)),
    }
    if args.eigenspaces:
        result = eigenspace_amplitude(build_complex(d), q, grouping=args.grouping)
        data["eigenspaces"] = {"value": _complex(result.value), "collapsed": result.collapsed,
                               "eulerByJ": {str(j): chi for j, chi in result.euler_by_j.items()}}
    _emit(data, args.pretty)
    return EXIT_OK


def _identity_check(name: str, compute) -> CheckReport:
    report = CheckReport(name, True, checked=1)
    try:
        compute()
    except ConventionError as exc:
        report.fail(str(exc))
    return report


def _compare(name: str, expected, actual) -> CheckReport:
    report = CheckReport(name, True, checked=1)
    if expected != actual:
        report.fail(f"expected {expected}, got {actual}")
    return report


def verify_diagram(d: PlanarDiagram, golden: Optional[Dict] = None, points: int = 12) -> List[CheckReport]:
    """Every identity check that applies to one diagram"""
    conversion = CheckReport("bracket-conversion", True, checked=1)
    reports = [conversion]
    try:
        bracket = bracket_q(d)
    except ConventionError as exc:
        conversion.fail(str(exc))
        return reports
    if d.crossing_count or d.free_loops:
        reports.append(_identity_check("delta-divisibility", lambda: jones(d)))
        reports.append(_compare("mirror-jones", jones(d).invert_variable(), jones(mirror(d))))

    if d.crossing_count <= knot_settings.MAX_HOMOLOGY_CROSSINGS:
        complex_ = build_complex(d)
        table = homology(complex_)
        reports.extend([check_boundary_squared(complex_), check_grading(complex_),
                        check_anticommutation(complex_), check_eigenvalue_propagation(complex_)])
        reports.append(_compare("euler-dimensions", bracket, graded_euler(complex_)))
        reports.append(_compare("euler-betti", bracket, graded_euler(complex_, table)))
        if golden and "homology" in golden:
            expected = {(i, j): b for i, j, b in golden["homology"] if b}
            reports.append(_compare("golden-homology", expected, table.nonzero()))
    else:
        logger.warning(f"Skipping homology checks: {d.crossing_count} crossings above "
                       f"{knot_settings.MAX_HOMOLOGY_CROSSINGS}")

    tolerance = 1e-9 * sum(1 for _ in enhanced_states(d))
    amp = CheckReport("amplitude", True)
    trace = CheckReport("density-trace", True)
    for q in unit_points(points):
        expected = laurent_eval(bracket, q)
        for report, value in ((amp, amplitude(d, q)), (trace, density_trace(d, q))):
            deviation = abs(value - expected)
            report.checked += 1
            report.max_deviation = max(report.max_deviation, deviation)
            if deviation > tolerance:
                report.fail(f"q={q:.6f} deviation {deviation:.3e}")
    reports.extend([amp, trace])

    if golden:
        if "bracketQ" in golden:
            reports.append(_compare("golden-bracket", LaurentPolynomial.from_json(golden["bracketQ"]), bracket))
        if "jones" in golden:
            reports.append(_compare("golden-jones", LaurentPolynomial.from_json(golden["jones"]), jones(d)))
    return reports


def cmd_verify(args) -> int:
    d = load_diagram(args.diagram)
    golden = None
    if args.golden:
        try:
            golden = json.loads(_read(args.golden))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"golden JSON: {exc.msg}")
    reports = verify_diagram(d, golden)
    passed = all(r.passed for r in reports)
    _emit({"diagram": json.loads(format_pd(d)), "passed": passed, "checks": [r.to_json() for r in reports]},
          args.pretty)
    return EXIT_OK if passed else EXIT_INVALID


def cmd_mosaic_orbit(args) -> int:
    m = _load_mosaic(args.mosaic)
    if args.pad:
        m = mosaic_injection(m, args.pad)
    moves = load_moves(args.moves) if args.moves else default_moves()
    limits = _limits(args)
    if args.target:
        target = _load_mosaic(args.target)
        if args.pad:
            target = mosaic_injection(target, args.pad)
        answer = same_orbit(m, target, moves, limits)
        _emit(answer.to_json(), args.pretty)
        return EXIT_UNKNOWN if answer.verdict == "unknown" else EXIT_OK
    result = orbit_bfs(m, moves, limits)
    data = result.to_json()
    data["moves"] = len(moves.moves)
    data["planarFamilies"] = [family.name for family in moves.families]
    _emit(data, args.pretty)
    return EXIT_OK if result.complete else EXIT_UNKNOWN


def cmd_mosaic_extract(args) -> int:
    m = _load_mosaic(args.mosaic)
    report = validate_mosaic(m)
    if not report.valid:
        _emit(report.to_json(), args.pretty)
        return EXIT_INVALID
    d = mosaic_to_pd(m)
    _emit({"pd": d.to_json(), "crossings": d.crossing_count, "jones": jones(d).to_json()}, args.pretty)
    return EXIT_OK


def _int_list(text: Optional[str]) -> List[int]:
    if not text:
        return []
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise ValidationError(f"expected comma-separated integers, got {text!r}")


def _gauss_word(text: str, args) -> QuantumGaussWord:
    return QuantumGaussWord.parse(text, args.bound, args.length)


def apply_gauss_rule(w: QuantumGaussWord, args) -> QuantumGaussWord:
    positions = _int_list(args.positions)
    fresh = _int_list(args.fresh)
    variant = args.variant or ""

    def need(count: int):
        if len(positions) != count:
            raise ValidationError(f"rule {args.rule} needs {count} position(s)")

    if args.rule == "r1":
        need(1)
        kind = variant[:1] or "o"
        sign = -1 if variant.endswith("-") else 1
        return apply_r1(w, positions[0], args.direction, fresh[0] if fresh else None, kind, sign)
    if args.rule == "r2":
        need(2)
        first_sign = -1 if variant.startswith("-") else 1
        return apply_r2(w, (positions[0], positions[1]), args.direction, tuple(fresh) if fresh else None,
                        first_sign, variant.endswith("x"))
    if args.rule == "r3":
        need(3)
        variants = load_r3_variants(args.r3_variants) if args.r3_variants else None
        return apply_r3(w, (positions[0], positions[1], positions[2]), variants)
    if args.rule == "blankSwap":
        need(1)
        return apply_blank_swap(w, positions[0])
    if args.rule == "cyclic":
        return apply_cyclic(w, inverse=args.direction == "reverse")
    if args.rule == "cyclicPrefix":
        need(1)
        return apply_cyclic_prefix(w, positions[0], inverse=args.direction == "reverse")
    if args.rule == "indexPerm":
        images = _int_list(args.sigma)
        return permute_indices(w, {i + 1: v for i, v in enumerate(images)})
    raise ValidationError(f"unknown rule {args.rule!r}")


def cmd_gauss(args) -> int:
    if args.action == "apply":
        w = _gauss_word(args.words[0], args)
        result = apply_gauss_rule(w, args)
        _emit({"word": str(result)}, args.pretty)
        return EXIT_OK
    if args.action == "neighbors":
        w = _gauss_word(args.words[0], args)
        variants = load_r3_variants(args.r3_variants) if args.r3_variants else None
        _emit([{**m.to_json(), "word": str(nw)} for m, nw in neighbors(w, variants)], args.pretty)
        return EXIT_OK
    if len(args.words) != 2:
        raise ValidationError("gauss search needs two words")
    first, second = (_gauss_word(text, args) for text in args.words)
    variants = load_r3_variants(args.r3_variants) if args.r3_variants else None
    answer = bounded_equivalence(first, second, _limits(args), variants)
    _emit(answer.to_json(), args.pretty)
    return EXIT_UNKNOWN if answer.status is SearchStatus.UNKNOWN else EXIT_OK


def cmd_graph(args) -> int:
    g = load_graph(_json_or_file(args.first))
    h = load_graph(_json_or_file(args.second))
    witness = isomorphic_graphs(g, h)
    _emit({"isomorphic": witness is not None,
           "witness": None if witness is None else {str(k): v for k, v in witness.items()}}, args.pretty)
    return EXIT_OK


def cmd_word(args) -> int:
    if args.presentation:
        presentation = load_presentation(_json_or_file(args.presentation))
    elif args.generators:
        presentation = Presentation.free(args.generators)
    else:
        raise ValidationError("word search needs --presentation or --generators")
    first = parse_word(args.first, presentation.generators)
    second = parse_word(args.second, presentation.generators)
    answer = bounded_word_equivalence(first, second, presentation, _limits(args))
    _emit(answer.to_json(), args.pretty)
    return EXIT_UNKNOWN if answer.status is SearchStatus.UNKNOWN else EXIT_OK


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------

def _add_limits(parser):
    parser.add_argument('--max-states', type=int, default=None,
                        help='State budget for the search (default: QKNOT_MAX_STATES)')
    parser.add_argument('--max-depth', type=int, default=None,
                        help='Depth budget for the search (default: QKNOT_MAX_DEPTH)')


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='knot_cli', description='Quantized knot toolkit - invariants, homology and move searches')
    parser.add_argument('--verbose', action='store_true', help='Log at INFO level')
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--pretty', action='store_true', help='Indented JSON output')
    sub = parser.add_subparsers(dest='command', parser_class=_Parser)
    sub.required = True

    p = sub.add_parser('bracket', parents=[common], help='Bracket polynomial of a diagram')
    p.add_argument('diagram', help='PD JSON or mosaic file')
    p.add_argument('--form', choices=['a', 'q'], default='a', help='A-form or q-form (default: a)')
    p.set_defaults(func=cmd_bracket)

    p = sub.add_parser('jones', parents=[common], help='Jones polynomial')
    p.add_argument('diagram')
    p.set_defaults(func=cmd_jones)

    p = sub.add_parser('khovanov', parents=[common], help='Khovanov homology ranks')
    p.add_argument('diagram')
    p.add_argument('--shifted', action='store_true', help='Apply the i - n_minus, j + n_plus - 2 n_minus shift')
    p.add_argument('--torsion', action='store_true', help='Add integer torsion from Smith normal form')
    p.add_argument('--table', action='store_true', help='Print a j-by-i text table instead of JSON')
    p.set_defaults(func=cmd_khovanov)

    p = sub.add_parser('amplitude', parents=[common], help='Quantum amplitude <psi|U|psi>')
    p.add_argument('diagram')
    p.add_argument('--q', required=True, help='Angle on the unit circle: pi/5, 2pi/5 or radians')
    p.add_argument('--eigenspaces', action='store_true', help='Also report the j-eigenspace decomposition')
    p.add_argument('--grouping', default='j', help='Eigenspace grouping (only j is available)')
    p.set_defaults(func=cmd_amplitude)

    p = sub.add_parser('verify', parents=[common], help='Run every identity check for one diagram')
    p.add_argument('diagram')
    p.add_argument('--golden', default=None, help='Golden JSON with bracketQ, jones and homology entries')
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser('mosaic-orbit', parents=[common], help='Orbit of a mosaic under a move set')
    p.add_argument('mosaic')
    p.add_argument('--moves', default=None, help='Move file (default: data/default.moves.json)')
    p.add_argument('--pad', type=int, default=0, help='Inject into a blank mosaic of this size first')
    p.add_argument('--target', default=None, help='Second mosaic: answer same-orbit instead')
    _add_limits(p)
    p.set_defaults(func=cmd_mosaic_orbit)

    p = sub.add_parser('mosaic-extract', parents=[common], help='Validate a mosaic and extract its PD code')
    p.add_argument('mosaic')
    p.set_defaults(func=cmd_mosaic_extract)

    p = sub.add_parser('gauss', parents=[common], help='Quantum Gauss code moves and searches')
    p.add_argument('action', choices=['apply', 'neighbors', 'search'])
    p.add_argument('words', nargs='+', help='Gauss words such as "o1+ u1+ * *"')
    p.add_argument('--bound', type=int, default=None, help='Index bound N (default: unbounded)')
    p.add_argument('--length', type=int, default=None, help='Pad words with blanks to this length')
    p.add_argument('--rule', choices=[r.value for r in MoveRule] + ['cyclicPrefix'], default=None)
    p.add_argument('--positions', default=None, help='Comma-separated positions, 0-based')
    p.add_argument('--direction', choices=['forward', 'reverse'], default='forward')
    p.add_argument('--fresh', default=None, help='Comma-separated fresh indices for reverse moves')
    p.add_argument('--variant', default=None, help='r1: o+, o-, u+, u-; r2: +, -, +x, -x')
    p.add_argument('--sigma', default=None, help='indexPerm images of 1..N, comma-separated')
    p.add_argument('--r3-variants', default=None, help='Alternative r3 variant table')
    _add_limits(p)
    p.set_defaults(func=cmd_gauss)

    p = sub.add_parser('graph', parents=[common], help='Quantized digraph operations')
    p.add_argument('action', choices=['iso'])
    p.add_argument('first', help='Graph JSON text or file')
    p.add_argument('second')
    p.set_defaults(func=cmd_graph)

    p = sub.add_parser('word', parents=[common], help='Quantized group word searches')
    p.add_argument('action', choices=['search'])
    p.add_argument('first')
    p.add_argument('second')
    p.add_argument('--presentation', default=None, help='Presentation JSON text or file')
    p.add_argument('--generators', type=int, default=None, help='Free group rank when no presentation')
    _add_limits(p)
    p.set_defaults(func=cmd_word)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point"""
    try:
        args = build_parser().parse_args(argv)
    except _ExitCode as exc:
        return exc.code

    level = logging.INFO if args.verbose else getattr(logging, knot_settings.LOG_LEVEL, logging.WARNING)
    logging.basicConfig(level=level, stream=sys.stderr, format='%(levelname)s %(name)s: %(message)s')

    if args.command == 'gauss' and args.action == 'apply' and not args.rule:
        print("error: usage: gauss apply needs --rule", file=sys.stderr)
        return EXIT_INVALID
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc.kind}: {exc.reason}", file=sys.stderr)
        return EXIT_INVALID
    except CapExceededError as exc:
        print(f"error: {exc.kind}: {exc.reason}", file=sys.stderr)
        return EXIT_UNKNOWN
    except NotImplementedError as exc:
        print(f"error: not-implemented: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except KnotQuantError as exc:
        print(f"error: {getattr(exc, 'kind', 'internal')}: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == '__main__':
    sys.exit(main())
