#!/usr/bin/env python3
"""
Khovanov chain complex for the quantized knot toolkit
Builds the bigraded complex on enhanced states, computes homology ranks and
torsion with sympy DomainMatrix, and checks the amplitude identities of the
diagonal unitary U|s> = (-1)^i q^j |s>.
"""

import cmath
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import pandas as pd
from sympy.polys.domains import QQ, ZZ
from sympy.polys.matrices import DomainMatrix
from sympy.polys.matrices.normalforms import invariant_factors

import knot_settings
from bracket_state_sum import (
    EnhancedState, LoopStructure, Smoothing, check_crossing_cap, enhanced_states, loops_of,
)
from knot_codecs import PlanarDiagram, crossing_signs
from quantum_core import (
    BasisKet, CheckReport, ConventionError, DiagonalUnitary, LaurentPolynomial, MotifFamily, StateVector,
    UNIT_TOLERANCE, ValidationError, Variable, apply_diagonal, inner_product,
)

logger = logging.getLogger(__name__)

Bidegree = Tuple[int, int]
PLUS, MINUS = 1, -1  # loop labels 1 and X


@dataclass
class GradedBasis:
    """Enhanced states bucketed by (i, j), each bucket in enumeration order"""
    crossings: int
    buckets: Dict[Bidegree, List[EnhancedState]] = field(default_factory=dict)
    position: Dict[EnhancedState, int] = field(default_factory=dict)

    def add(self, state: EnhancedState):
        bucket = self.buckets.setdefault((state.i, state.j), [])
        self.position[state] = len(bucket)
        bucket.append(state)

    def dim(self, i: int, j: int) -> int:
        return len(self.buckets.get((i, j), ()))

    def j_values(self) -> List[int]:
        return sorted({j for _, j in self.buckets})

    def states(self) -> List[EnhancedState]:
        return [s for key in sorted(self.buckets) for s in self.buckets[key]]


@dataclass
class ChainComplex:
    """
    Basis plus the boundary map as sparse coefficients alpha[s][s'].

    Matrices per bidegree are derived from the coefficient map on demand.
    """
    diagram: PlanarDiagram
    basis: GradedBasis
    boundary: Dict[EnhancedState, Dict[EnhancedState, int]] = field(default_factory=dict)

    def image(self, state: EnhancedState) -> Dict[EnhancedState, int]:
        return self.boundary.get(state, {})

    def matrix(self, i: int, j: int) -> DomainMatrix:
        """Boundary C^{i,j} -> C^{i+1,j} with rows indexing the target"""
        sources = self.basis.buckets.get((i, j), [])
        targets = self.basis.buckets.get((i + 1, j), [])
        rows: Dict[int, Dict[int, int]] = {}
        for col, state in enumerate(sources):
            for target, coeff in self.image(state).items():
                if (target.i, target.j) != (i + 1, j):
                    continue
                rows.setdefault(self.basis.position[target], {})[col] = ZZ(coeff)
        return DomainMatrix(rows, (len(targets), len(sources)), ZZ)


def _loop_pair(structure: LoopStructure, crossing: Tuple[int, int, int, int]) -> Tuple[int, int]:
    a, _, c, _ = crossing
    return structure.loop_of[a], structure.loop_of[c]


def _carry_labels(before: LoopStructure, after: LoopStructure, labels: Tuple[int, ...],
                  skip: Tuple[int, ...]) -> Dict[int, int]:
    """Labels of the loops the switch does not touch, keyed by loop index after the switch"""
    carried: Dict[int, int] = {}
    arc_loops = sum(1 for loop in before.loops if loop)
    arc_loops_after = sum(1 for loop in after.loops if loop)
    for index, loop in enumerate(before.loops):
        if index in skip:
            continue
        if loop:
            carried[after.loop_of[loop[0]]] = labels[index]
        else:
            carried[arc_loops_after + index - arc_loops] = labels[index]
    return carried


def build_complex(d: PlanarDiagram, max_crossings: Optional[int] = None) -> ChainComplex:
    """
    Khovanov complex on the enhanced states of d.

    Switching an A-smoothed crossing k to B merges or splits loops with
    m(1,1)=1, m(1,X)=m(X,1)=X, m(X,X)=0, D(1)=1X+X1, D(X)=XX, and sign
    (-1)^(number of B-smoothed crossings before k).

    Raises:
        CapExceededError: crossing count above the homology cap
    """
    cap = knot_settings.MAX_HOMOLOGY_CROSSINGS if max_crossings is None else max_crossings
    check_crossing_cap(d, cap, "homology crossings")
    basis = GradedBasis(d.crossing_count)
    for state in enhanced_states(d, max_crossings=cap):
        basis.add(state)
    complex_ = ChainComplex(d, basis)

    structures: Dict[int, LoopStructure] = {}

    def structure(bits: int) -> LoopStructure:
        if bits not in structures:
            structures[bits] = loops_of(d, Smoothing(bits, d.crossing_count))
        return structures[bits]

    for state in basis.states():
        before = structure(state.bits)
        images: Dict[EnhancedState, int] = {}
        for k, crossing in enumerate(d.crossings):
            if state.bits >> k & 1:
                continue
            sign = -1 if bin(state.bits & ((1 << k) - 1)).count("1") % 2 else 1
            bits = state.bits | (1 << k)
            after = structure(bits)
            first, second = _loop_pair(before, crossing)
            for labels, coeff in _switch(before, after, state.labels, crossing, first, second):
                target = EnhancedState(bits, state.size, labels)
                if target not in basis.position:
                    raise ConventionError(f"boundary target {labels} missing from bucket ({target.i},{target.j})")
                images[target] = images.get(target, 0) + sign * coeff
        images = {t: c for t, c in images.items() if c}
        if images:
            complex_.boundary[state] = images
    logger.info(f"Built complex: {len(basis.position)} states, {len(complex_.boundary)} with nonzero boundary")
    return complex_


def _switch(before: LoopStructure, after: LoopStructure, labels: Tuple[int, ...],
            crossing: Tuple[int, int, int, int], first: int, second: int) -> List[Tuple[Tuple[int, ...], int]]:
    a, b, _, _ = crossing
    if first != second:
        carried = _carry_labels(before, after, labels, (first, second))
        merged_loop = after.loop_of[a]
        x, y = labels[first], labels[second]
        if x == MINUS and y == MINUS:
            return []
        carried[merged_loop] = PLUS if (x == PLUS and y == PLUS) else MINUS
        return [(tuple(carried[i] for i in range(after.loop_count)), 1)]
    carried = _carry_labels(before, after, labels, (first,))
    left, right = after.loop_of[a], after.loop_of[b]
    outputs = []
    pairs = [(PLUS, MINUS), (MINUS, PLUS)] if labels[first] == PLUS else [(MINUS, MINUS)]
    for left_label, right_label in pairs:
        new = dict(carried)
        new[left], new[right] = left_label, right_label
        outputs.append((tuple(new[i] for i in range(after.loop_count)), 1))
    return outputs


# ---------------------------------------------------------------------------
# Homology
# ---------------------------------------------------------------------------

def matrix_rank(m: DomainMatrix) -> int:
    rows, cols = m.shape
    if rows == 0 or cols == 0:
        return 0
    return int(m.convert_to(QQ).rank())


def torsion_factors(m: DomainMatrix) -> List[int]:
    rows, cols = m.shape
    if rows == 0 or cols == 0:
        return []
    return [abs(int(f)) for f in invariant_factors(m) if abs(int(f)) > 1]


@dataclass
class HomologyRow:
    i: int
    j: int
    betti: int
    torsion: Optional[List[int]] = None

    def to_json(self) -> Dict:
        row = {"i": self.i, "j": self.j, "betti": self.betti}
        if self.torsion is not None:
            row["torsion"] = list(self.torsion)
        return row


@dataclass
class HomologyTable:
    """Rational ranks and optional integer torsion per bidegree"""
    rows: List[HomologyRow] = field(default_factory=list)

    def betti(self, i: int, j: int) -> int:
        return next((r.betti for r in self.rows if (r.i, r.j) == (i, j)), 0)

    def nonzero(self) -> Dict[Bidegree, int]:
        return {(r.i, r.j): r.betti for r in self.rows if r.betti}

    def torsion(self) -> Dict[Bidegree, List[int]]:
        return {(r.i, r.j): r.torsion for r in self.rows if r.torsion}

    def to_json(self) -> Dict:
        return {"rows": [r.to_json() for r in self.rows]}

    def to_frame(self) -> pd.DataFrame:
        frame = pd.DataFrame([r.to_json() for r in self.rows], columns=["i", "j", "betti", "torsion"])
        return frame.sort_values(["j", "i"]).reset_index(drop=True)

    def pivot(self) -> pd.DataFrame:
        """Betti numbers with j as rows and i as columns"""
        frame = self.to_frame()
        if frame.empty:
            return frame
        return frame.pivot_table(index="j", columns="i", values="betti", fill_value=0, aggfunc="sum")


def homology(complex_: ChainComplex, torsion: bool = False, torsion_max_dim: Optional[int] = None) -> HomologyTable:
    """
    betti(i,j) = dim C^{i,j} - rank d^{i,j} - rank d^{i-1,j}.

    Torsion of H^{i,j} is read from the invariant factors of d^{i-1,j} when
    both sides fit torsion_max_dim.
    """
    limit = knot_settings.TORSION_MAX_DIM if torsion_max_dim is None else torsion_max_dim
    basis = complex_.basis
    ranks: Dict[Bidegree, int] = {}
    for (i, j) in basis.buckets:
        ranks[(i, j)] = matrix_rank(complex_.matrix(i, j))
    table = HomologyTable()
    for (i, j) in sorted(basis.buckets, key=lambda key: (key[1], key[0])):
        betti = basis.dim(i, j) - ranks.get((i, j), 0) - ranks.get((i - 1, j), 0)
        factors = None
        if torsion:
            incoming = complex_.matrix(i - 1, j)
            if max(incoming.shape) <= limit:
                factors = torsion_factors(incoming)
            else:
                logger.warning(f"Skipping torsion at ({i},{j}): matrix side {max(incoming.shape)} above {limit}")
        table.rows.append(HomologyRow(i, j, betti, factors))
    return table


def graded_euler(complex_: ChainComplex, table: Optional[HomologyTable] = None) -> LaurentPolynomial:
    """Sum over j of q^j times the alternating sum of dimensions (or betti numbers)"""
    terms: Dict[int, int] = {}
    if table is None:
        for (i, j), bucket in complex_.basis.buckets.items():
            terms[j] = terms.get(j, 0) + (-1) ** i * len(bucket)
    else:
        for row in table.rows:
            terms[row.j] = terms.get(row.j, 0) + (-1) ** row.i * row.betti
    return LaurentPolynomial(terms, Variable.Q)


def poincare_polynomial(table: HomologyTable) -> Dict[Bidegree, int]:
    return table.nonzero()


def shifted_table(table: HomologyTable, d: PlanarDiagram) -> HomologyTable:
    """Conventional grading i - n_minus, j + n_plus - 2 n_minus"""
    signs = crossing_signs(d)
    n_plus = sum(1 for s in signs if s > 0)
    n_minus = len(signs) - n_plus
    return HomologyTable([HomologyRow(r.i - n_minus, r.j + n_plus - 2 * n_minus, r.betti, r.torsion)
                          for r in table.rows])


# ---------------------------------------------------------------------------
# The unitary U and its identities
# ---------------------------------------------------------------------------

def state_ket(state: EnhancedState) -> BasisKet:
    return BasisKet(MotifFamily.ENHANCED_STATE, state.encode())


def _check_unit(q: complex) -> complex:
    q = complex(q)
    if abs(abs(q) - 1.0) > UNIT_TOLERANCE:
        raise ValidationError(f"q = {q} is not on the unit circle")
    return q


def eigenvalue(state: EnhancedState, q: complex) -> complex:
    return (-1) ** state.i * q ** state.j


def symbolic_eigenvalue(state: EnhancedState) -> LaurentPolynomial:
    return LaurentPolynomial.monomial(state.j, (-1) ** state.i, Variable.Q)


def unitary_U(d: PlanarDiagram, q: complex) -> DiagonalUnitary:
    """U|s> = (-1)^i(s) q^j(s) |s> on enhanced-state kets"""
    q = _check_unit(q)

    def value(ket: BasisKet) -> complex:
        return eigenvalue(EnhancedState.decode(ket.payload), q)

    return DiagonalUnitary(MotifFamily.ENHANCED_STATE, value, "U")


def psi_vector(d: PlanarDiagram, max_crossings: Optional[int] = None) -> StateVector:
    """|psi> = sum of all enhanced-state kets, unnormalized"""
    return StateVector(MotifFamily.ENHANCED_STATE,
                       {state_ket(s): 1 for s in enhanced_states(d, max_crossings)})


def amplitude(d: PlanarDiagram, q: complex, max_crossings: Optional[int] = None) -> complex:
    """<psi|U|psi>"""
    U = unitary_U(d, q)
    psi = psi_vector(d, max_crossings)
    return inner_product(psi, apply_diagonal(U, psi))


def density_trace(d: PlanarDiagram, q: complex, max_crossings: Optional[int] = None) -> complex:
    """Tr(U rho) for rho = |psi><psi|, as the sum of lambda_s |psi_s|^2"""
    U = unitary_U(d, q)
    psi = psi_vector(d, max_crossings)
    return sum((U.value(k) * abs(a) ** 2 for k, a in psi.amplitudes.items()), 0j)


def check_boundary_squared(complex_: ChainComplex) -> CheckReport:
    """d d = 0 on every bidegree as exact integer matrices"""
    report = CheckReport("boundary-squared", True)
    for (i, j) in sorted(complex_.basis.buckets):
        first = complex_.matrix(i, j)
        second = complex_.matrix(i + 1, j)
        report.checked += 1
        if 0 in first.shape or second.shape[0] == 0:
            continue
        if not second.matmul(first).is_zero_matrix:
            report.passed = False
            report.failures.append(f"({i},{j})")
    return report


def check_grading(complex_: ChainComplex) -> CheckReport:
    """Every nonzero coefficient raises i by one and keeps j"""
    report = CheckReport("grading", True)
    for source, images in complex_.boundary.items():
        for target, coeff in images.items():
            report.checked += 1
            if coeff and (target.i != source.i + 1 or target.j != source.j):
                report.passed = False
                report.failures.append(f"({source.i},{source.j})->({target.i},{target.j})")
    return report


def check_anticommutation(complex_: ChainComplex, q: Optional[complex] = None,
                          tolerance: float = 1e-9) -> CheckReport:
    """
    U d + d U = 0 on every basis state.

    With q None the eigenvalues are symbolic and the check is exact.
    """
    symbolic = q is None
    if not symbolic:
        q = _check_unit(q)
    report = CheckReport("anticommutation" + ("" if symbolic else "-numeric"), True)
    for source, images in complex_.boundary.items():
        for target, coeff in images.items():
            report.checked += 1
            if symbolic:
                residue = (symbolic_eigenvalue(target) + symbolic_eigenvalue(source)) * coeff
                if not residue.is_zero():
                    report.passed = False
                    report.failures.append(f"({source.i},{source.j}) residue {residue}")
            else:
                deviation = abs(coeff * (eigenvalue(target, q) + eigenvalue(source, q)))
                report.max_deviation = max(report.max_deviation, deviation)
                if deviation > tolerance:
                    report.passed = False
                    report.failures.append(f"({source.i},{source.j}) deviation {deviation:.3e}")
    return report


def check_eigenvalue_propagation(complex_: ChainComplex) -> CheckReport:
    """lambda of the target equals minus lambda of the source on nonzero entries"""
    report = CheckReport("eigenvalue-propagation", True)
    for source, images in complex_.boundary.items():
        for target, coeff in images.items():
            if not coeff:
                continue
            report.checked += 1
            if symbolic_eigenvalue(target) != -symbolic_eigenvalue(source):
                report.passed = False
                report.failures.append(f"({source.i},{source.j})->({target.i},{target.j})")
    return report


@dataclass
class EigenspaceAmplitude:
    value: complex
    euler_by_j: Dict[int, int] = field(default_factory=dict)
    collapsed: bool = False  # q^j coincide for distinct occurring j


def eigenspace_amplitude(complex_: ChainComplex, q: complex, table: Optional[HomologyTable] = None,
                         grouping: str = "j") -> EigenspaceAmplitude:
    """
    Sum over j of q^j times the Euler characteristic of H(C^{*,j}).

    Only the j-graded decomposition is available.
    """
    if grouping != "j":
        raise NotImplementedError(
            f"eigenspace grouping {grouping!r}: only the j-graded subcomplexes are implemented; "
            "general eigenvalue subcomplexes are not")
    q = _check_unit(q)
    table = table if table is not None else homology(complex_)
    euler: Dict[int, int] = {}
    for row in table.rows:
        euler[row.j] = euler.get(row.j, 0) + (-1) ** row.i * row.betti
    js = complex_.basis.j_values()
    collapsed = any(abs(q ** a - q ** b) < 1e-12 for n, a in enumerate(js) for b in js[n + 1:])
    if collapsed:
        logger.warning(f"q = {q} is a root of unity identifying distinct j eigenvalues; grouping stays by j")
    value = sum((q ** j * chi for j, chi in euler.items()), 0j)
    return EigenspaceAmplitude(value, dict(sorted(euler.items())), collapsed)


def unit_points(count: int = 12) -> List[complex]:
    """count points on the unit circle avoiding +-1"""
    return [cmath.exp(1j * cmath.pi * (2 * k + 1) / (2 * count + 1)) for k in range(count)]
