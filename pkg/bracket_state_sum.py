#!/usr/bin/env python3
"""
Bracket state sum for the quantized knot toolkit
Enumerates smoothings and enhanced states of a planar diagram and folds them
into the bracket (A-form and q-form), the normalized f-polynomial and the Jones
polynomial.
"""

import itertools
import logging
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

import pandas as pd

import knot_settings
from knot_codecs import PlanarDiagram, UnionFind, writhe
from quantum_core import (
    CapExceededError, ConventionError, LaurentPolynomial, MotifFamily, ValidationError, Variable,
    delta_A, delta_q, laurent_convert, pack_fields, pack_ints, unpack_fields, unpack_ints,
)

logger = logging.getLogger(__name__)

Census = Counter  # (b_count, loop_count) -> number of smoothings


@dataclass(frozen=True)
class Smoothing:
    """Bit k set means crossing k is B-smoothed"""
    bits: int
    size: int

    @property
    def b_count(self) -> int:
        return bin(self.bits).count("1")

    def is_b(self, k: int) -> bool:
        return bool(self.bits >> k & 1)

    def __str__(self):
        return "".join("B" if self.is_b(k) else "A" for k in range(self.size))


@dataclass
class LoopStructure:
    """Loops of a smoothing; loops through crossings ordered by smallest arc, free loops last"""
    loops: List[Tuple[int, ...]] = field(default_factory=list)
    loop_of: Dict[int, int] = field(default_factory=dict)

    @property
    def loop_count(self) -> int:
        return len(self.loops)


def check_crossing_cap(d: PlanarDiagram, cap: Optional[int] = None, cap_name: str = "crossings"):
    cap = knot_settings.MAX_CROSSINGS if cap is None else cap
    if d.crossing_count > cap:
        raise CapExceededError(cap_name, cap, d.crossing_count)


def loops_of(d: PlanarDiagram, smoothing: Smoothing) -> LoopStructure:
    """
    Glue arc ends through each smoothed crossing.

    A joins a-b and c-d; B joins a-d and b-c.
    """
    if smoothing.size != d.crossing_count:
        raise ValidationError(f"smoothing has {smoothing.size} bits for {d.crossing_count} crossings")
    sets = UnionFind(d.arcs())
    for k, (a, b, c, e) in enumerate(d.crossings):
        if smoothing.is_b(k):
            sets.union(a, e)
            sets.union(b, c)
        else:
            sets.union(a, b)
            sets.union(c, e)
    grouped: Dict[int, List[int]] = {}
    for arc in d.arcs():
        grouped.setdefault(sets.find(arc), []).append(arc)
    loops = sorted((tuple(arcs) for arcs in grouped.values()), key=lambda arcs: arcs[0])
    loops.extend(() for _ in range(d.free_loops))
    loop_of = {arc: index for index, arcs in enumerate(loops) for arc in arcs}
    return LoopStructure(loops, loop_of)


def smoothings(d: PlanarDiagram, start: int = 0, stop: Optional[int] = None) -> Iterator[Smoothing]:
    """Smoothings in binary-counter order over [start, stop)"""
    total = 1 << d.crossing_count
    stop = total if stop is None else min(stop, total)
    for bits in range(max(start, 0), stop):
        yield Smoothing(bits, d.crossing_count)


def state_census(d: PlanarDiagram, start: int = 0, stop: Optional[int] = None,
                 max_crossings: Optional[int] = None) -> Census:
    """Count smoothings in [start, stop) by (B-count, loop count)"""
    check_crossing_cap(d, max_crossings)
    census: Census = Counter()
    for s in smoothings(d, start, stop):
        census[(s.b_count, loops_of(d, s).loop_count)] += 1
    return census


def merge_census(parts: Iterable[Census]) -> Census:
    total: Census = Counter()
    for part in parts:
        total.update(part)
    return total


def census_frame(census: Census) -> pd.DataFrame:
    rows = [{"b_count": i, "loops": loops, "smoothings": count} for (i, loops), count in sorted(census.items())]
    return pd.DataFrame(rows, columns=["b_count", "loops", "smoothings"])


def bracket_from_census(census: Census, crossings: int) -> LaurentPolynomial:
    """Sum of A^(#A - #B) delta^loops"""
    delta = delta_A()
    total = LaurentPolynomial.zero(Variable.A)
    for (i, loops), count in census.items():
        total = total + (delta ** loops).shift(crossings - 2 * i) * count
    return total


def bracket_q_from_census(census: Census) -> LaurentPolynomial:
    """Sum of (-1)^i q^i (q + q^-1)^loops"""
    delta = delta_q()
    total = LaurentPolynomial.zero(Variable.Q)
    for (i, loops), count in census.items():
        total = total + (delta ** loops).shift(i) * (count * (-1) ** i)
    return total


def bracket_A(d: PlanarDiagram, max_crossings: Optional[int] = None) -> LaurentPolynomial:
    """Bracket <K> as a Laurent polynomial in A"""
    census = state_census(d, max_crossings=max_crossings)
    return bracket_from_census(census, d.crossing_count)


def bracket_q(d: PlanarDiagram, max_crossings: Optional[int] = None) -> LaurentPolynomial:
    """
    Bracket as the enhanced-state sum of (-1)^i q^j.

    Raises:
        ConventionError: if it disagrees with A^-c <K> under A^2 -> -q^-1
    """
    census = state_census(d, max_crossings=max_crossings)
    q_form = bracket_q_from_census(census)
    converted = laurent_convert(bracket_from_census(census, d.crossing_count).shift(-d.crossing_count),
                                Variable.A, Variable.Q)
    if converted != q_form:
        raise ConventionError(f"q-form {q_form} differs from converted A-form {converted}")
    return q_form


def f_poly(d: PlanarDiagram, max_crossings: Optional[int] = None) -> LaurentPolynomial:
    """Writhe-normalized bracket (-A^3)^-wr <K> / delta"""
    if d.crossing_count == 0 and d.free_loops == 0:
        raise ValidationError("empty diagram has no f-polynomial")
    bracket = bracket_A(d, max_crossings)
    try:
        reduced = bracket.exact_divide(delta_A())
    except ValidationError:
        raise ConventionError(f"bracket {bracket} is not divisible by delta")
    w = writhe(d)
    return reduced.shift(-3 * w) * (-1) ** (w % 2)


def jones(d: PlanarDiagram, max_crossings: Optional[int] = None) -> LaurentPolynomial:
    """Jones polynomial; links with fractional powers stay in quarter-t units"""
    return laurent_convert(f_poly(d, max_crossings), Variable.A, Variable.T, strict=False)


@dataclass(frozen=True)
class EnhancedState:
    """A smoothing with a +1 / -1 label per loop"""
    bits: int
    size: int
    labels: Tuple[int, ...]

    family = MotifFamily.ENHANCED_STATE

    @property
    def i(self) -> int:
        return bin(self.bits).count("1")

    @property
    def j(self) -> int:
        return self.i + sum(self.labels)

    @property
    def smoothing(self) -> Smoothing:
        return Smoothing(self.bits, self.size)

    def validate(self) -> Tuple[bool, str]:
        if not 0 <= self.bits < (1 << self.size):
            return False, f"smoothing bits {self.bits} exceed {self.size} crossings"
        if any(label not in (1, -1) for label in self.labels):
            return False, "loop labels must be +1 or -1"
        return True, "valid"

    def encode(self) -> bytes:
        return pack_fields(pack_ints([self.size, self.bits]), pack_ints(self.labels))

    @classmethod
    def decode(cls, payload: bytes) -> 'EnhancedState':
        head, labels = unpack_fields(payload)
        size, bits = unpack_ints(head)
        return cls(bits, size, tuple(unpack_ints(labels)))


def enhanced_states(d: PlanarDiagram, max_crossings: Optional[int] = None) -> Iterator[EnhancedState]:
    """Enhanced states, smoothings in binary-counter order and labels in loop order"""
    check_crossing_cap(d, max_crossings)
    for s in smoothings(d):
        count = loops_of(d, s).loop_count
        for labels in itertools.product((1, -1), repeat=count):
            yield EnhancedState(s.bits, s.size, labels)


def state_sum_q(states: Iterable[EnhancedState]) -> LaurentPolynomial:
    terms: Counter = Counter()
    for s in states:
        terms[s.j] += (-1) ** s.i
    return LaurentPolynomial(terms, Variable.Q)


def bracket_numeric(d: PlanarDiagram, q: complex, max_crossings: Optional[int] = None) -> complex:
    """Numeric sum of (-1)^i q^j over enhanced states"""
    check_crossing_cap(d, max_crossings)
    q = complex(q)
    loop_value = q + 1 / q
    total = 0j
    for s in smoothings(d):
        total += (-q) ** s.b_count * loop_value ** loops_of(d, s).loop_count
    return total
