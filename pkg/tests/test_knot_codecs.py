#!/usr/bin/env python3
"""
Tests for the diagram codecs
PD parsing and orientation, writhe and components, Gauss codes, mosaics and extraction
"""

import sys
import os

import pytest

# Add project root to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import knot_settings
from knot_codecs import (
    GaussToken, Mosaic, PlanarDiagram, TokenKind, UnionFind, add_free_loop, blank_mosaic, component_count,
    components, crossing_signs, disjoint_union, format_gauss, format_gauss_components, format_mosaic, format_pd,
    linking_number, mirror, mosaic_injection, mosaic_to_pd, parse_gauss, parse_gauss_components, parse_mosaic,
    parse_pd, pd_to_gauss, pd_to_gauss_link, validate_mosaic, writhe,
)
from quantum_core import GaussFormatError, MosaicFormatError, PDFormatError, ValidationError


def load(name):
    return knot_settings.data_path(name).read_text()


def test_union_find():
    """Test disjoint-set merging"""
    print("\n=== Testing Union-Find ===")
    uf = UnionFind(range(6))
    uf.union(0, 1)
    uf.union(2, 3)
    uf.union(1, 3)
    assert uf.find(3) == uf.find(0)
    assert uf.count_sets() == 3
    print("✓ Six labels merge into three sets")


def test_parse_pd_and_orientation():
    """Test PD parsing, writhe and crossing signs"""
    print("\n=== Testing PD Parsing ===")
    trefoil = parse_pd(load("trefoil.pd.json"))
    assert trefoil.crossing_count == 3
    assert crossing_signs(trefoil) == [-1, -1, -1]
    assert writhe(trefoil) == -3
    assert component_count(trefoil) == 1
    assert format_pd(trefoil) == load("trefoil.pd.json").strip()
    print(f"✓ Trefoil writhe {writhe(trefoil)}")

    assert writhe(parse_pd(load("curl_positive.pd.json"))) == 1
    assert writhe(parse_pd(load("curl_negative.pd.json"))) == -1
    assert writhe(parse_pd(load("figure_eight.pd.json"))) == 0
    unknot = parse_pd(load("unknot.pd.json"))
    assert unknot.crossing_count == 0 and component_count(unknot) == 1
    print("✓ Curls carry signs +1 and -1, figure-eight has writhe 0")


def test_pd_rejections():
    """Test malformed PD input"""
    print("\n=== Testing PD Rejections ===")
    for text in ('{"crossings": [[1, 2, 3]]}', '{"crossings": [[1, 1, 1, 2]]}', 'not json',
                 '{"crossings": [], "freeLoops": -1}', '{"crossings": [], "extra": 1}',
                 '{"crossings": [[1, 2, 3, 4]]}'):
        with pytest.raises(PDFormatError):
            parse_pd(text)
    assert not PlanarDiagram(((1, 2, 3, 4),)).validate()[0]
    print("✓ Arity, multiplicity and field errors are rejected")


def test_components_and_linking():
    """Test component detection on links"""
    print("\n=== Testing Components ===")
    hopf = parse_pd(load("hopf.pd.json"))
    assert sorted(sorted(c) for c in components(hopf)) == [[1, 2], [3, 4]]
    assert abs(linking_number(hopf, 0, 1)) == 1
    with pytest.raises(ValidationError):
        linking_number(hopf, 0, 0)

    borromean = parse_pd(load("borromean.pd.json"))
    assert sorted(sorted(c) for c in components(borromean)) == [[1, 2, 3, 4], [5, 6, 7, 8], [9, 10, 11, 12]]
    for first, second in ((0, 1), (0, 2), (1, 2)):
        assert linking_number(borromean, first, second) == 0
    print("✓ Hopf link has linking number +-1, Borromean rings pairwise 0")


def test_mirror_and_union():
    """Test mirroring and diagram assembly"""
    print("\n=== Testing Mirror and Union ===")
    trefoil = parse_pd(load("trefoil.pd.json"))
    flipped = mirror(trefoil)
    assert flipped == parse_pd(load("trefoil_mirror.pd.json"))
    assert writhe(flipped) == 3
    assert mirror(flipped) == trefoil

    hopf = parse_pd(load("hopf.pd.json"))
    both = disjoint_union(trefoil, hopf)
    assert both.crossing_count == 5 and component_count(both) == 3
    assert add_free_loop(trefoil).free_loops == 1
    print("✓ Mirror is an involution and flips the writhe")


def test_gauss_codes():
    """Test Gauss parsing, formatting and extraction from PD"""
    print("\n=== Testing Gauss Codes ===")
    tokens = parse_gauss("o1+u2+o3+u1+o2+u3+")
    assert len(tokens) == 6
    assert tokens[0] == GaussToken(TokenKind.OVER, 1, 1)
    assert format_gauss(tokens) == "o1+ u2+ o3+ u1+ o2+ u3+"
    assert format_gauss(parse_gauss("o1- * u1-")) == "o1- * u1-"

    trefoil = parse_pd(load("trefoil.pd.json"))
    assert format_gauss(pd_to_gauss(trefoil)) == "u1- o2- u3- o1- u2- o3-"
    assert format_gauss(pd_to_gauss(mirror(trefoil))) == "o1+ u2+ o3+ u1+ o2+ u3+"
    assert pd_to_gauss(parse_pd(load("unknot.pd.json"))) == []

    hopf_parts = pd_to_gauss_link(parse_pd(load("hopf.pd.json")))
    assert len(hopf_parts) == 2
    assert parse_gauss_components(format_gauss_components(hopf_parts)) == hopf_parts
    print("✓ Trefoil and mirror codes match the corpus")

    for text in ("o1+ u1-", "o1+", "o1+ o1+", "x1+", "o0+ u0+"):
        with pytest.raises(GaussFormatError):
            parse_gauss(text)
    print("✓ Sign mismatch, unpaired and unknown tokens rejected")


def test_mosaic_validation():
    """Test suitably-connected checks"""
    print("\n=== Testing Mosaic Validation ===")
    trefoil = parse_mosaic(load("trefoil.mosaic"))
    assert trefoil.n == 4
    assert validate_mosaic(trefoil).valid
    assert format_mosaic(trefoil) == load("trefoil.mosaic")
    assert Mosaic.decode(trefoil.encode()) == trefoil

    broken = Mosaic(((2, 0), (0, 0)))
    report = validate_mosaic(broken)
    assert not report.valid
    assert report.violations[0].row == 0 and report.violations[0].col == 0
    assert set(report.violations[0].faces) == {"S", "E"}
    assert report.to_json()["valid"] is False

    edge = Mosaic(((5,),))
    assert not validate_mosaic(edge).valid
    assert validate_mosaic(blank_mosaic(3)).valid
    print("✓ Dangling connection points are reported per cell")

    for text in ("1 2\n3", "1 x\n3 4", "11 0\n0 0", ""):
        with pytest.raises(MosaicFormatError):
            parse_mosaic(text)
    print("✓ Malformed mosaic text rejected")


def test_mosaic_extraction():
    """Test mosaic to PD extraction"""
    print("\n=== Testing Mosaic Extraction ===")
    trefoil = mosaic_to_pd(parse_mosaic(load("trefoil.mosaic")))
    assert trefoil.crossing_count == 3
    assert writhe(trefoil) == -3
    assert component_count(trefoil) == 1

    circle = mosaic_to_pd(parse_mosaic(load("circle.mosaic")))
    assert circle.crossing_count == 0 and circle.free_loops == 1

    padded = mosaic_injection(parse_mosaic(load("circle.mosaic")), 3, (1, 1))
    assert padded.tiles[0] == (0, 0, 0)
    assert validate_mosaic(padded).valid
    with pytest.raises(MosaicFormatError):
        mosaic_injection(padded, 3, (1, 0))
    with pytest.raises(MosaicFormatError):
        mosaic_to_pd(Mosaic(((2, 0), (0, 0))))
    print("✓ Trefoil mosaic extracts to a 3-crossing knot, circle to a free loop")
