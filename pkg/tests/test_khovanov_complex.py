#!/usr/bin/env python3
"""
Tests for the Khovanov complex and the amplitude identities
Boundary squares to zero, grading, Euler characteristic, homology oracle, U anticommutation and amplitudes
"""

import sys
import os
import cmath
import json
from fractions import Fraction

import pytest

# Add project root to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import knot_settings
from bracket_state_sum import bracket_q, enhanced_states
from khovanov_complex import (
    amplitude, build_complex, check_anticommutation, check_boundary_squared, check_eigenvalue_propagation,
    check_grading, density_trace, eigenspace_amplitude, graded_euler, homology, matrix_rank, poincare_polynomial,
    psi_vector, shifted_table, unit_points, unitary_U,
)
from knot_codecs import parse_pd
from quantum_core import CapExceededError, ValidationError, laurent_eval

CORPUS = ["unknot", "two_unlink", "curl_positive", "curl_negative", "hopf", "trefoil", "trefoil_mirror",
          "figure_eight", "borromean"]


def diagram(name):
    return parse_pd(knot_settings.data_path(f"{name}.pd.json").read_text())


def dense_rank(rows):
    """Rank by Gaussian elimination over the rationals"""
    matrix = [[Fraction(x) for x in row] for row in rows]
    rank = 0
    width = len(matrix[0]) if matrix else 0
    for col in range(width):
        pivot = next((r for r in range(rank, len(matrix)) if matrix[r][col] != 0), None)
        if pivot is None:
            continue
        matrix[rank], matrix[pivot] = matrix[pivot], matrix[rank]
        for r in range(len(matrix)):
            if r != rank and matrix[r][col] != 0:
                factor = matrix[r][col] / matrix[rank][col]
                matrix[r] = [x - factor * y for x, y in zip(matrix[r], matrix[rank])]
        rank += 1
    return rank


def oracle_betti(complex_):
    """Betti numbers from dense matrices built straight from the coefficient map"""
    buckets = complex_.basis.buckets
    ranks = {}
    for (i, j), sources in buckets.items():
        targets = buckets.get((i + 1, j), [])
        if not sources or not targets:
            ranks[(i, j)] = 0
            continue
        index = {t: n for n, t in enumerate(targets)}
        rows = [[0] * len(sources) for _ in targets]
        for col, s in enumerate(sources):
            for target, coeff in complex_.image(s).items():
                rows[index[target]][col] += coeff
        ranks[(i, j)] = dense_rank(rows)
    return {(i, j): len(states) - ranks[(i, j)] - ranks.get((i - 1, j), 0)
            for (i, j), states in buckets.items()
            if len(states) - ranks[(i, j)] - ranks.get((i - 1, j), 0)}


def test_complex_identities():
    """Test d^2 = 0, grading and the Euler characteristic on the corpus"""
    print("\n=== Testing Complex Identities ===")
    for name in CORPUS:
        d = diagram(name)
        complex_ = build_complex(d)
        assert check_boundary_squared(complex_).passed, name
        assert check_grading(complex_).passed, name
        table = homology(complex_)
        assert graded_euler(complex_) == bracket_q(d), name
        assert graded_euler(complex_, table) == bracket_q(d), name
        print(f"✓ {name}: {len(complex_.basis.position)} states, d^2 = 0, Euler characteristic = bracket")


def test_homology_matches_oracle():
    """Test betti numbers against dense rational elimination"""
    print("\n=== Testing Homology Oracle ===")
    for name in CORPUS:
        complex_ = build_complex(diagram(name))
        assert homology(complex_).nonzero() == oracle_betti(complex_), name
        print(f"✓ {name}: betti table agrees with the dense oracle")


def test_golden_tables():
    """Test trefoil and figure-eight homology against the shipped tables"""
    print("\n=== Testing Golden Tables ===")
    for name in ("trefoil", "figure_eight"):
        golden = json.loads(knot_settings.data_path(f"{name}.golden.json").read_text())
        table = homology(build_complex(diagram(name)))
        expected = {(i, j): b for i, j, b in golden["homology"]}
        assert poincare_polynomial(table) == expected
        print(f"✓ {name}: {sum(expected.values())} generators")


def test_shifted_table_and_torsion():
    """Test the conventional shift and integer torsion"""
    print("\n=== Testing Shift and Torsion ===")
    trefoil = diagram("trefoil")
    complex_ = build_complex(trefoil)
    table = homology(complex_, torsion=True)
    shifted = shifted_table(table, trefoil)
    assert shifted.nonzero() == {(-3, -9): 1, (-2, -5): 1, (0, -3): 1, (0, -1): 1}
    factors = [f for values in table.torsion().values() for f in values]
    assert 2 in factors
    print(f"✓ Shifted trefoil table and torsion factors {factors}")

    frame = table.to_frame()
    assert set(frame.columns) >= {"i", "j", "betti"}
    assert table.pivot().values.sum() == 4
    assert homology(complex_, torsion=True, torsion_max_dim=0).torsion() == {}


def test_matrix_shapes():
    """Test per-bidegree boundary matrices"""
    print("\n=== Testing Boundary Matrices ===")
    complex_ = build_complex(diagram("trefoil"))
    m = complex_.matrix(0, 3)
    assert m.shape == (3, 1)
    assert matrix_rank(m) == 1
    assert complex_.matrix(3, 5).shape == (0, 1)
    assert matrix_rank(complex_.matrix(3, 5)) == 0
    print("✓ Shapes follow bucket sizes; empty sides have rank 0")


def test_anticommutation_and_eigenvalues():
    """Test U d + d U = 0 exactly and eigenvalue propagation"""
    print("\n=== Testing U Anticommutation ===")
    for name in CORPUS:
        complex_ = build_complex(diagram(name))
        assert check_anticommutation(complex_).passed, name
        assert check_eigenvalue_propagation(complex_).passed, name
        numeric = check_anticommutation(complex_, cmath.exp(0.3j))
        assert numeric.passed and numeric.max_deviation < 1e-9, name
    print("✓ Symbolic and numeric anticommutation on the corpus")


def test_amplitudes():
    """Test <psi|U|psi> and Tr(U rho) against the bracket"""
    print("\n=== Testing Amplitudes ===")
    for name in CORPUS:
        d = diagram(name)
        bracket = bracket_q(d)
        states = sum(1 for _ in enhanced_states(d))
        for q in unit_points(12):
            expected = laurent_eval(bracket, q)
            assert abs(amplitude(d, q) - expected) <= 1e-9 * states, name
            assert abs(density_trace(d, q) - expected) <= 1e-9 * states, name
        print(f"✓ {name}: amplitude matches the bracket at 12 points")

    unknot = diagram("unknot")
    q = cmath.exp(1j * cmath.pi / 5)
    assert abs(amplitude(unknot, q) - 2 * cmath.cos(cmath.pi / 5)) < 1e-12
    assert len(psi_vector(unknot)) == 2
    with pytest.raises(ValidationError):
        unitary_U(unknot, 1.5)
    print("✓ Off-circle q is rejected")


def test_eigenspace_amplitude():
    """Test the j-eigenspace decomposition and root-of-unity collapse"""
    print("\n=== Testing Eigenspace Amplitude ===")
    trefoil = diagram("trefoil")
    complex_ = build_complex(trefoil)
    q = cmath.exp(0.4j)
    result = eigenspace_amplitude(complex_, q)
    assert abs(result.value - laurent_eval(bracket_q(trefoil), q)) < 1e-9
    assert not result.collapsed
    assert sum(result.euler_by_j.values()) == -2

    collapsed = eigenspace_amplitude(complex_, 1j)
    assert collapsed.collapsed
    with pytest.raises(NotImplementedError):
        eigenspace_amplitude(complex_, q, grouping="eigenvalue")
    print("✓ Root-of-unity q flags collapsed eigenspaces")


def test_homology_cap():
    """Test the homology crossing cap"""
    print("\n=== Testing Homology Cap ===")
    with pytest.raises(CapExceededError):
        build_complex(diagram("trefoil"), max_crossings=2)
    print("✓ Cap enforced before enumeration")
