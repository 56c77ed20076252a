#!/usr/bin/env python3
"""
Tests for the command-line surface
Output shapes, exit codes, error lines and determinism
"""

import sys
import os
import cmath
import json

import pytest

# Add project root to path for imports
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

import knot_settings
from knot_cli import main, parse_angle
from quantum_core import ValidationError


def data(name):
    return str(knot_settings.data_path(name))


def run(capsys, *argv):
    capsys.readouterr()
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_bracket_and_jones(capsys):
    """Test polynomial output"""
    print("\n=== Testing bracket and jones ===")
    code, out, _ = run(capsys, "bracket", "--form", "q", data("unknot.pd.json"))
    assert code == 0
    assert json.loads(out) == {"var": "q", "terms": [[-1, 1], [1, 1]]}

    code, out, _ = run(capsys, "jones", data("trefoil.pd.json"))
    assert code == 0
    assert json.loads(out) == {"var": "t", "terms": [[-4, -1], [-3, 1], [-1, 1]]}

    code, out, _ = run(capsys, "bracket", data("trefoil.mosaic"))
    assert code == 0
    assert json.loads(out)["var"] == "A"
    print("✓ PD and mosaic inputs both give polynomials")


def test_khovanov_command(capsys):
    """Test homology output and the shifted table"""
    print("\n=== Testing khovanov ===")
    code, out, _ = run(capsys, "khovanov", "--shifted", data("trefoil.pd.json"))
    assert code == 0
    result = json.loads(out)
    nonzero = {(r["i"], r["j"]): r["betti"] for r in result["rows"] if r["betti"]}
    assert nonzero == {(-3, -9): 1, (-2, -5): 1, (0, -3): 1, (0, -1): 1}
    assert result["shifted"] is True
    assert result["eulerCharacteristic"] == {"var": "q", "terms": [[-3, 1], [1, -1], [3, -1], [5, -1]]}

    code, out, _ = run(capsys, "khovanov", "--table", data("hopf.pd.json"))
    assert code == 0 and out.strip()
    print("✓ Shifted trefoil homology")


def test_khovanov_torsion_single_pass(capsys, monkeypatch):
    """Test that --torsion reuses one homology table for rows and Euler characteristic"""
    print("\n=== Testing khovanov --torsion ===")
    import knot_cli
    calls = []
    real_homology = knot_cli.homology

    def counting_homology(complex_, *args, **kwargs):
        calls.append(kwargs)
        return real_homology(complex_, *args, **kwargs)

    monkeypatch.setattr(knot_cli, "homology", counting_homology)
    code, out, _ = run(capsys, "khovanov", "--torsion", data("trefoil.pd.json"))
    assert code == 0
    assert calls == [{"torsion": True}]
    with_torsion = json.loads(out)
    assert all("torsion" in row for row in with_torsion["rows"])

    calls.clear()
    code, out, _ = run(capsys, "khovanov", data("trefoil.pd.json"))
    assert code == 0 and len(calls) == 1
    plain = json.loads(out)
    assert [(r["i"], r["j"], r["betti"]) for r in with_torsion["rows"]] == \
           [(r["i"], r["j"], r["betti"]) for r in plain["rows"]]
    assert with_torsion["eulerCharacteristic"] == plain["eulerCharacteristic"]
    print("✓ One homology pass per command")


def test_amplitude_command(capsys):
    """Test amplitude output at pi/5"""
    print("\n=== Testing amplitude ===")
    code, out, _ = run(capsys, "amplitude", "--q", "pi/5", "--eigenspaces", data("trefoil.pd.json"))
    assert code == 0
    result = json.loads(out)
    assert result["amplitude"] == pytest.approx(result["bracketAtQ"], abs=1e-9)
    assert result["densityTrace"] == pytest.approx(result["bracketAtQ"], abs=1e-9)
    assert result["eigenspaces"]["value"] == pytest.approx(result["bracketAtQ"], abs=1e-9)

    code, _, err = run(capsys, "amplitude", "--q", "pi/5", "--eigenspaces", "--grouping", "eigenvalue",
                       data("trefoil.pd.json"))
    assert code == 1 and err.startswith("error: not-implemented")
    print("✓ Amplitude, density trace and bracket agree")


def test_verify_command(capsys, tmp_path):
    """Test verify against golden files"""
    print("\n=== Testing verify ===")
    for name in ("trefoil", "figure_eight"):
        code, out, _ = run(capsys, "verify", data(f"{name}.pd.json"), "--golden", data(f"{name}.golden.json"))
        result = json.loads(out)
        assert code == 0, [c for c in result["checks"] if not c["passed"]]
        assert result["passed"] is True
        print(f"✓ {name}: {len(result['checks'])} checks pass")

    golden = json.loads(knot_settings.data_path("trefoil.golden.json").read_text())
    golden["homology"][0][2] = 2
    corrupted = tmp_path / "corrupted.golden.json"
    corrupted.write_text(json.dumps(golden))
    code, out, _ = run(capsys, "verify", data("trefoil.pd.json"), "--golden", str(corrupted))
    assert code == 1
    failed = [c["check"] for c in json.loads(out)["checks"] if not c["passed"]]
    assert failed == ["golden-homology"]

    code, out, _ = run(capsys, "verify", data("unknot.pd.json"))
    assert code == 0
    print("✓ A corrupted golden table fails exactly one check")


def test_mosaic_commands(capsys):
    """Test orbit truncation and extraction"""
    print("\n=== Testing mosaic commands ===")
    code, out, _ = run(capsys, "mosaic-orbit", data("trefoil.mosaic"), "--pad", "6", "--max-states", "10")
    assert code == 2
    assert json.loads(out)["status"] == "truncated"

    # unpadded, every 4x4 trefoil mosaic of this handedness fits under the cap
    code, out, _ = run(capsys, "mosaic-orbit", "--moves", data("default.moves.json"), "--max-states", "10",
                       data("trefoil.mosaic"))
    result = json.loads(out)
    assert code == 0
    assert result["status"] == "complete"
    assert result["states"] <= 10
    assert result["planarFamilies"] == ["strand-slide", "strand-slide@r1", "planar-slide"]

    code, out, _ = run(capsys, "mosaic-orbit", data("circle.mosaic"), "--pad", "3",
                       "--moves", data("planar.moves.json"))
    assert code == 0
    assert json.loads(out)["status"] == "complete"

    code, out, _ = run(capsys, "mosaic-extract", data("trefoil.mosaic"))
    assert code == 0
    result = json.loads(out)
    assert result["crossings"] == 3
    assert result["jones"] == {"var": "t", "terms": [[-4, -1], [-3, 1], [-1, 1]]}
    print("✓ Padded trefoil orbit truncates with exit 2")


def test_gauss_graph_word_commands(capsys):
    """Test the rewriting subcommands"""
    print("\n=== Testing gauss, graph and word ===")
    code, out, _ = run(capsys, "gauss", "apply", "o1+ u1+", "--rule", "r1", "--positions", "0")
    assert code == 0 and json.loads(out) == {"word": "* *"}

    code, out, _ = run(capsys, "gauss", "search", "o1+ u1+", "* *")
    assert code == 0 and json.loads(out)["verdict"] == "witness"

    code, out, _ = run(capsys, "gauss", "neighbors", "o1+ u1+")
    assert code == 0 and any(n["word"] == "* *" for n in json.loads(out))

    code, _, err = run(capsys, "gauss", "apply", "o1+ u1+")
    assert code == 1 and err.startswith("error: usage")

    code, out, _ = run(capsys, "graph", "iso", data("cycle3.graph.json"),
                       '{"n": 3, "edges": [[2, 1], [3, 2], [1, 3]]}')
    assert code == 0 and json.loads(out)["isomorphic"] is True

    code, out, _ = run(capsys, "graph", "iso", data("cycle3.graph.json"), data("path3.graph.json"))
    assert code == 0 and json.loads(out) == {"isomorphic": False, "witness": None}

    code, out, _ = run(capsys, "word", "search", "x x x", "* * *", "--presentation",
                       data("cyclic3.presentation.json"))
    assert code == 0 and json.loads(out)["verdict"] == "witness"

    code, _, err = run(capsys, "word", "search", "x x x", "* * *")
    assert code == 1 and "presentation" in err
    print("✓ Rewriting subcommands answer in JSON")


def test_errors_and_determinism(capsys, tmp_path):
    """Test error lines, exit codes and repeated runs"""
    print("\n=== Testing Errors ===")
    code, _, err = run(capsys, "bracket", str(tmp_path / "missing.json"))
    assert code == 1 and err.startswith("error: validation: cannot read")

    bad = tmp_path / "bad.pd.json"
    bad.write_text('{"crossings": [[1, 2, 3]]}')
    code, _, err = run(capsys, "jones", str(bad))
    assert code == 1 and err.startswith("error: pd-format:")

    code, _, err = run(capsys, "frobnicate")
    assert code == 1 and err.startswith("error: usage")

    big = tmp_path / "big.pd.json"
    big.write_text(knot_settings.data_path("borromean.pd.json").read_text())
    original = knot_settings.MAX_HOMOLOGY_CROSSINGS
    knot_settings.MAX_HOMOLOGY_CROSSINGS = 2
    try:
        code, _, err = run(capsys, "khovanov", str(big))
    finally:
        knot_settings.MAX_HOMOLOGY_CROSSINGS = original
    assert code == 2 and err.startswith("error: cap-exceeded")

    first = run(capsys, "khovanov", "--torsion", data("figure_eight.pd.json"))
    second = run(capsys, "khovanov", "--torsion", data("figure_eight.pd.json"))
    assert first == second
    print("✓ Errors print one line and exit 1 or 2; output is deterministic")


def test_parse_angle():
    """Test angle specifications"""
    print("\n=== Testing Angles ===")
    assert abs(parse_angle("pi/5") - cmath.exp(1j * cmath.pi / 5)) < 1e-12
    assert abs(parse_angle("2pi/5") - cmath.exp(2j * cmath.pi / 5)) < 1e-12
    assert abs(parse_angle("-pi/3") - cmath.exp(-1j * cmath.pi / 3)) < 1e-12
    assert abs(parse_angle("0.5") - cmath.exp(0.5j)) < 1e-12
    assert abs(parse_angle("pi") + 1) < 1e-12
    with pytest.raises(ValidationError):
        parse_angle("half a turn")
    print("✓ pi fractions and radians")
