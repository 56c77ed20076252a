#!/usr/bin/env python3
"""
Tests for the bracket state sum
Bracket in both variables, f-polynomial and Jones normalization, enhanced states, partitioned census
"""

import sys
import os

import pytest

# Add project root to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import knot_settings
from bracket_state_sum import (
    EnhancedState, Smoothing, bracket_A, bracket_numeric, bracket_q, census_frame, enhanced_states, f_poly, jones,
    loops_of, merge_census, state_census, state_sum_q,
)
from khovanov_complex import unit_points
from knot_codecs import (
    PlanarDiagram, add_free_loop, component_count, delete_component, disjoint_union, mirror, parse_pd, writhe,
)
from quantum_core import (
    CapExceededError, LaurentPolynomial, ValidationError, Variable, delta_A, delta_q, laurent_convert, laurent_eval,
)

CORPUS = ["unknot", "two_unlink", "curl_positive", "curl_negative", "hopf", "trefoil", "trefoil_mirror",
          "figure_eight", "borromean"]


def diagram(name):
    return parse_pd(knot_settings.data_path(f"{name}.pd.json").read_text())


def A(terms):
    return LaurentPolynomial(terms, Variable.A)


def t(terms):
    return LaurentPolynomial(terms, Variable.T)


def test_unknot_bracket():
    """Test the unknot in both variables"""
    print("\n=== Testing Unknot Bracket ===")
    unknot = diagram("unknot")
    assert bracket_A(unknot) == A({2: -1, -2: -1})
    assert bracket_q(unknot) == LaurentPolynomial({1: 1, -1: 1}, Variable.Q)
    assert f_poly(unknot) == 1
    assert jones(unknot) == t({0: 1})
    assert bracket_A(diagram("two_unlink")) == delta_A() * delta_A()
    print("✓ <O> = -A^2 - A^-2 = q + q^-1")


def test_curl_identities():
    """Test the kink rules on single-curl closures"""
    print("\n=== Testing Curl Identities ===")
    positive, negative = diagram("curl_positive"), diagram("curl_negative")
    assert bracket_A(positive) == A({3: -1}) * delta_A()
    assert bracket_A(negative) == A({-3: -1}) * delta_A()
    assert f_poly(positive) == 1 and f_poly(negative) == 1
    print("✓ Curls contribute -A^3 and -A^-3 and normalize away")


def test_trefoil_invariants():
    """Test trefoil bracket, f-polynomial and Jones polynomial"""
    print("\n=== Testing Trefoil ===")
    trefoil = diagram("trefoil")
    assert bracket_A(trefoil) == A({9: -1, 1: 1, -3: 1, -7: 1})
    assert f_poly(trefoil) == A({16: -1, 12: 1, 4: 1})
    assert jones(trefoil) == t({-4: -1, -3: 1, -1: 1})
    assert jones(diagram("trefoil_mirror")) == t({4: -1, 3: 1, 1: 1})
    assert jones(trefoil) != jones(mirror(trefoil))
    print(f"✓ V = {jones(trefoil)}, distinct from its mirror")

    assert loops_of(trefoil, Smoothing(0b000, 3)).loop_count == 3
    assert loops_of(trefoil, Smoothing(0b111, 3)).loop_count == 2
    assert str(Smoothing(0b001, 3)) == "BAA"
    with pytest.raises(ValidationError):
        loops_of(trefoil, Smoothing(0, 2))
    print("✓ All-A smoothing has 3 loops, all-B has 2")


def test_figure_eight_and_hopf():
    """Test an amphichiral knot and a two-component link"""
    print("\n=== Testing Figure-Eight and Hopf ===")
    figure_eight = diagram("figure_eight")
    assert jones(figure_eight) == t({-2: 1, -1: -1, 0: 1, 1: -1, 2: 1})
    assert jones(mirror(figure_eight)) == jones(figure_eight)

    hopf = diagram("hopf")
    assert bracket_A(hopf) == delta_A() * A({4: -1, -4: -1})
    hopf_jones = jones(hopf)
    assert hopf_jones.variable is Variable.T_QUARTER
    assert hopf_jones.terms == {-10: -1, -2: -1}
    print("✓ Hopf link Jones stays in quarter powers of t")


def test_disjoint_union_rules():
    """Test that split diagrams multiply brackets"""
    print("\n=== Testing Disjoint Unions ===")
    trefoil, hopf = diagram("trefoil"), diagram("hopf")
    assert bracket_q(add_free_loop(trefoil)) == delta_q() * bracket_q(trefoil)
    assert bracket_A(add_free_loop(hopf, 2)) == delta_A() * delta_A() * bracket_A(hopf)
    assert bracket_A(disjoint_union(trefoil, hopf)) == bracket_A(trefoil) * bracket_A(hopf)
    print("✓ <D + O> = delta <D> and <D1 + D2> = <D1><D2>")


def test_conversion_and_mirror_on_corpus():
    """Test the change of variables and mirror rule on every corpus diagram"""
    print("\n=== Testing Corpus Identities ===")
    for name in CORPUS:
        d = diagram(name)
        converted = laurent_convert(bracket_A(d).shift(-d.crossing_count), Variable.A, Variable.Q)
        assert bracket_q(d) == converted, name
        assert jones(mirror(d)) == jones(d).invert_variable(), name
        print(f"✓ {name}: conversion and mirror identities hold")


def test_borromean_unlinking():
    """Test that deleting any Borromean component leaves a two-component unlink"""
    print("\n=== Testing Borromean Deletions ===")
    borromean = diagram("borromean")
    assert component_count(borromean) == 3
    unlink_f = f_poly(diagram("two_unlink"))
    assert unlink_f == delta_A()
    for index in range(3):
        reduced = delete_component(borromean, index)
        assert component_count(reduced) == 2
        assert writhe(reduced) == 0
        assert bracket_A(reduced) == delta_A() * delta_A()
        assert f_poly(reduced) == unlink_f
        print(f"✓ Deleting component {index} unlinks the rest")
    with pytest.raises(ValidationError):
        delete_component(borromean, 3)


def test_enhanced_states():
    """Test enhanced-state enumeration and the exact and numeric sums"""
    print("\n=== Testing Enhanced States ===")
    trefoil = diagram("trefoil")
    states = list(enhanced_states(trefoil))
    assert len(states) == 8 + 3 * 4 + 3 * 2 + 4
    assert state_sum_q(states) == bracket_q(trefoil)
    sample = states[5]
    assert EnhancedState.decode(sample.encode()) == sample
    assert sample.validate()[0]
    assert not EnhancedState(8, 3, (1,)).validate()[0]
    assert EnhancedState(0b011, 3, (1, -1)).j == 2
    print(f"✓ {len(states)} enhanced states sum to the q-bracket")

    bracket = bracket_q(trefoil)
    for q in unit_points(6):
        assert abs(bracket_numeric(trefoil, q) - laurent_eval(bracket, q)) < 1e-9
    print("✓ Numeric state sum matches the exact polynomial")


def test_partitioned_census():
    """Test that a split census merges to the serial one"""
    print("\n=== Testing Census Partition ===")
    figure_eight = diagram("figure_eight")
    serial = state_census(figure_eight)
    parts = [state_census(figure_eight, start, start + 5) for start in range(0, 16, 5)]
    assert merge_census(parts) == serial
    assert sum(serial.values()) == 16
    frame = census_frame(serial)
    assert list(frame.columns) == ["b_count", "loops", "smoothings"]
    assert frame["smoothings"].sum() == 16
    print("✓ Partitioned census equals the serial fold")


def test_caps_and_errors():
    """Test crossing caps and degenerate input"""
    print("\n=== Testing Caps ===")
    trefoil = diagram("trefoil")
    with pytest.raises(CapExceededError) as info:
        bracket_A(trefoil, max_crossings=2)
    assert info.value.cap == 2 and info.value.actual == 3
    with pytest.raises(CapExceededError):
        list(enhanced_states(trefoil, max_crossings=1))
    with pytest.raises(ValidationError):
        f_poly(PlanarDiagram())
    assert bracket_A(PlanarDiagram()) == 1
    print("✓ Caps raise before enumeration; empty diagram has no f-polynomial")
