#!/usr/bin/env python3
"""
Mosaic move group for the quantized knot toolkit
Loads data-driven tile-replacement moves, applies them to knot mosaics, explores
orbits and builds the orbit observables and move unitaries on mosaic kets.
"""

import json
import logging
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Dict, FrozenSet, Iterator, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

import knot_settings
from bracket_state_sum import bracket_A, jones
from knot_codecs import (
    CROSSING_TILES, EAST, FACE_STEP, NORTH, SOUTH, TILE_COUNT, TILE_PASSAGES, WEST, Mosaic, component_count,
    mosaic_to_pd, opposite, tile_faces,
)
from quantum_core import (
    BasisKet, CheckReport, ClosureResult, DiagonalOperator, MotifFamily, MoveError, PermutationUnitary,
    SearchLimits, SearchStatus, ValidationError, Variable, characteristic_projector, laurent_eval,
    orbit_closure,
)

logger = logging.getLogger(__name__)

Grid = Tuple[Tuple[int, ...], ...]
Point = Tuple[int, int, int]  # (row, col, face) on the box boundary
Chord = Tuple[Point, Point]

# tile lookup by passage set, for non-crossing tiles
_TILE_BY_PASSAGES = {frozenset(frozenset(p) for p in TILE_PASSAGES[t]): t
                     for t in range(TILE_COUNT) if t not in CROSSING_TILES}


def _as_grid(rows: Sequence[Sequence[int]]) -> Grid:
    return tuple(tuple(int(t) for t in row) for row in rows)


def _shape(grid: Grid) -> Tuple[int, int]:
    return len(grid), len(grid[0]) if grid else 0


@dataclass(frozen=True)
class BoxSignature:
    """Boundary points, their pairing through the box, and closed loops inside"""
    points: FrozenSet[Point]
    pairing: FrozenSet[FrozenSet[Point]]
    closed_loops: int
    # (over chord, under chord) per crossing tile; () marks a closed loop
    crossings: Tuple[Tuple[Chord, Chord], ...] = field(default=(), compare=False)


def box_signature(grid: Grid) -> BoxSignature:
    """
    Signature of a partial mosaic with crossings read as straight passages.

    Raises:
        MoveError: a connection point inside the box has no partner
    """
    rows, cols = _shape(grid)
    points: Set[Point] = set()
    for r in range(rows):
        for c in range(cols):
            for face in tile_faces(grid[r][c]):
                dr, dc = FACE_STEP[face]
                nr, nc = r + dr, c + dc
                if 0 <= nr < rows and 0 <= nc < cols:
                    if opposite(face) not in tile_faces(grid[nr][nc]):
                        raise MoveError(f"cell ({r},{c}) face {'ENWS'[face]} has no partner inside the box")
                else:
                    points.add((r, c, face))

    used: Set[Tuple[int, int, int]] = set()
    chord_of: Dict[Tuple[int, int, int], Chord] = {}

    def passage(r: int, c: int, face: int) -> Tuple[int, int]:
        for index, pair in enumerate(TILE_PASSAGES[grid[r][c]]):
            if face in pair:
                return index, pair[1] if pair[0] == face else pair[0]
        raise MoveError(f"cell ({r},{c}) has no passage through face {'ENWS'[face]}")

    pairing = set()
    for start in sorted(points):
        r, c, face = start
        if any(start in pair for pair in pairing):
            continue
        trail = []
        while True:
            index, out = passage(r, c, face)
            used.add((r, c, index))
            trail.append((r, c, index))
            if (r, c, out) in points:
                pairing.add(frozenset({start, (r, c, out)}))
                chord = tuple(sorted((start, (r, c, out))))
                chord_of.update((step, chord) for step in trail)
                break
            dr, dc = FACE_STEP[out]
            r, c, face = r + dr, c + dc, opposite(out)

    loops = 0
    for r in range(rows):
        for c in range(cols):
            for index, pair in enumerate(TILE_PASSAGES[grid[r][c]]):
                if (r, c, index) in used:
                    continue
                loops += 1
                cr, cc, face = r, c, pair[0]
                while (cr, cc, index) not in used:
                    used.add((cr, cc, index))
                    dr, dc = FACE_STEP[face]
                    cr, cc = cr + dr, cc + dc
                    index, face = passage(cr, cc, opposite(face))
    crossings = sorted((chord_of.get((r, c, 0), ()), chord_of.get((r, c, 1), ()))
                       for r in range(rows) for c in range(cols) if grid[r][c] in CROSSING_TILES)
    return BoxSignature(frozenset(points), frozenset(pairing), loops, tuple(crossings))


@dataclass(frozen=True)
class MosaicMove:
    """Replace pattern by replacement inside a rows x cols box"""
    name: str
    pattern: Grid
    replacement: Grid

    @property
    def k(self) -> Tuple[int, int]:
        return _shape(self.pattern)

    def inverse(self) -> 'MosaicMove':
        name = self.name[:-3] if self.name.endswith("^-1") else f"{self.name}^-1"
        return MosaicMove(name, self.replacement, self.pattern)

    def to_json(self) -> Dict:
        return {"name": self.name, "k": list(self.k),
                "pattern": [list(r) for r in self.pattern], "replacement": [list(r) for r in self.replacement]}


def validate_move(move: MosaicMove) -> Tuple[bool, str]:
    """Shapes, tile ids, internal consistency and equal boundary signatures"""
    if _shape(move.pattern) != _shape(move.replacement):
        return False, f"move {move.name}: pattern and replacement shapes differ"
    rows, cols = move.k
    if rows < 1 or cols < 1 or any(len(r) != cols for r in move.pattern + move.replacement):
        return False, f"move {move.name}: ragged or empty grid"
    if any(not 0 <= t < TILE_COUNT for r in move.pattern + move.replacement for t in r):
        return False, f"move {move.name}: tile id outside 0..{TILE_COUNT - 1}"
    if move.pattern == move.replacement:
        return False, f"move {move.name}: pattern equals replacement"
    try:
        before, after = box_signature(move.pattern), box_signature(move.replacement)
    except MoveError as exc:
        return False, f"move {move.name}: {exc.reason}"
    if before != after:
        return False, f"move {move.name}: boundary signatures differ"
    return True, "valid"


# --- symmetries of the square, plus over/under exchange -------------------

def _map_tile(tile: int, face_map: Callable[[int], int], swap_crossings: bool) -> int:
    if tile in CROSSING_TILES:
        over = TILE_PASSAGES[tile][0]
        vertical = {face_map(f) for f in over} == {1, 3}
        image = 9 if vertical else 10
        if swap_crossings:
            image = 19 - image
        return image
    passages = frozenset(frozenset(face_map(f) for f in p) for p in TILE_PASSAGES[tile])
    return _TILE_BY_PASSAGES[passages]


def _rotate(grid: Grid) -> Grid:
    """Quarter turn counterclockwise"""
    rows, cols = _shape(grid)
    return tuple(tuple(_map_tile(grid[c][cols - 1 - r], lambda f: (f + 1) % 4, False) for c in range(rows))
                 for r in range(cols))


def _reflect(grid: Grid) -> Grid:
    """Left-right mirror"""
    flip = {0: 2, 2: 0, 1: 1, 3: 3}
    return tuple(tuple(_map_tile(t, flip.get, False) for t in reversed(row)) for row in grid)


def _swap_crossings(grid: Grid) -> Grid:
    return tuple(tuple(19 - t if t in CROSSING_TILES else t for t in row) for row in grid)


def symmetry_images(grid: Grid) -> List[Tuple[str, Grid]]:
    """The sixteen images of a grid, tagged"""
    images = []
    for mirrored in (False, True):
        base = _swap_crossings(grid) if mirrored else grid
        for reflected in (False, True):
            current = _reflect(base) if reflected else base
            for turns in range(4):
                tag = f"r{turns}{'f' if reflected else ''}{'m' if mirrored else ''}"
                images.append((tag, current))
                current = _rotate(current)
    return images


# --- generated planar isotopies -------------------------------------------

PLANAR_MAX_CELLS = 4


def _box_fillings(rows: int, cols: int, max_crossings: int) -> Iterator[Grid]:
    """Every rows x cols filling whose tiles agree across inner edges"""
    grid = [[0] * cols for _ in range(rows)]
    cells = [(r, c) for r in range(rows) for c in range(cols)]

    def agrees(r: int, c: int, tile: int) -> bool:
        faces = tile_faces(tile)
        if c > 0 and (WEST in faces) != (EAST in tile_faces(grid[r][c - 1])):
            return False
        return r == 0 or (NORTH in faces) == (SOUTH in tile_faces(grid[r - 1][c]))

    def extend(k: int, crossings: int) -> Iterator[Grid]:
        if k == len(cells):
            yield _as_grid(grid)
            return
        r, c = cells[k]
        for tile in range(TILE_COUNT):
            count = crossings + (tile in CROSSING_TILES)
            if count <= max_crossings and agrees(r, c, tile):
                grid[r][c] = tile
                yield from extend(k + 1, count)
        grid[r][c] = 0

    return extend(0, 0)


@lru_cache(maxsize=None)
def planar_classes(rows: int, cols: int, max_crossings: int) -> Dict[Grid, Tuple[Grid, ...]]:
    """
    Fillings grouped by boundary points, their pairing and which chord passes
    over which at each crossing. Loop-free fillings with at most one crossing
    that share this data are isotopic relative to the box boundary. Only
    classes with two or more members are kept.
    """
    groups: Dict[Tuple, List[Grid]] = {}
    for grid in _box_fillings(rows, cols, max_crossings):
        signature = box_signature(grid)
        if signature.closed_loops:
            continue
        key = (signature.points, signature.pairing, signature.crossings)
        groups.setdefault(key, []).append(grid)
    classes: Dict[Grid, Tuple[Grid, ...]] = {}
    for members in groups.values():
        if len(members) > 1:
            shared = tuple(members)
            classes.update((grid, shared) for grid in members)
    logger.info(f"Planar classes for {rows}x{cols} boxes with <= {max_crossings} crossings: "
                f"{len(classes)} fillings")
    return classes


@dataclass(frozen=True)
class PlanarFamily:
    """Replace any window by another member of its planar class"""
    name: str
    k: Tuple[int, int]
    max_crossings: int = 1

    def alternatives(self, window: Grid) -> Tuple[Grid, ...]:
        members = planar_classes(self.k[0], self.k[1], self.max_crossings).get(window, ())
        return tuple(grid for grid in members if grid != window)

    def to_json(self) -> Dict:
        return {"name": self.name, "k": list(self.k), "maxCrossings": self.max_crossings}


def _load_planar(entries: Sequence[Dict], symmetry_closure: bool) -> List[PlanarFamily]:
    families: List[PlanarFamily] = []
    for entry in entries:
        if not isinstance(entry, dict):
            raise MoveError(f"planar family {len(families)}: expected an object, got {entry!r}")
        name = entry.get("name", f"planar{len(families)}")
        k = entry.get("k", [2, 2])
        shape = (k, k) if isinstance(k, int) else tuple(k)
        if len(shape) != 2 or not all(isinstance(s, int) and s >= 1 for s in shape):
            raise MoveError(f"planar family {name}: k must be one or two positive integers")
        if not 2 <= shape[0] * shape[1] <= PLANAR_MAX_CELLS:
            raise MoveError(f"planar family {name}: box {list(shape)} must hold 2 to {PLANAR_MAX_CELLS} cells")
        max_crossings = entry.get("maxCrossings", 1)
        # two crossings no longer fix the tangle from chord data alone
        if max_crossings not in (0, 1):
            raise MoveError(f"planar family {name}: maxCrossings must be 0 or 1")
        families.append(PlanarFamily(name, shape, max_crossings))
        if symmetry_closure and shape[0] != shape[1]:
            families.append(PlanarFamily(f"{name}@r1", (shape[1], shape[0]), max_crossings))
    return families


@dataclass
class MoveSet:
    """Moves closed under inversion, optionally under the square symmetries, plus planar families"""
    moves: List[MosaicMove] = field(default_factory=list)
    symmetry_closure: bool = False
    families: List[PlanarFamily] = field(default_factory=list)

    def __len__(self):
        return len(self.moves)

    def names(self) -> List[str]:
        return [m.name for m in self.moves]


def close_moves(moves: Sequence[MosaicMove], symmetry_closure: bool) -> MoveSet:
    seen: Set[Tuple[Grid, Grid]] = set()
    closed: List[MosaicMove] = []

    def add(move: MosaicMove):
        key = (move.pattern, move.replacement)
        if key not in seen:
            seen.add(key)
            closed.append(move)

    for move in moves:
        variants = [("", move.pattern, move.replacement)]
        if symmetry_closure:
            variants = [(tag, p, r) for (tag, p), (_, r)
                        in zip(symmetry_images(move.pattern), symmetry_images(move.replacement))]
        for tag, pattern, replacement in variants:
            name = move.name if tag in ("", "r0") else f"{move.name}@{tag}"
            image = MosaicMove(name, pattern, replacement)
            add(image)
            add(image.inverse())
    return MoveSet(closed, symmetry_closure)


def load_moves(source: Union[str, Path, Dict]) -> MoveSet:
    """
    Load a move file {"symmetryClosure": bool, "moves": [{"name", "k", "pattern", "replacement"}],
    "planar": [{"name", "k", "maxCrossings"}]}. The planar list is optional.

    Raises:
        MoveError: malformed file or a move whose sides disagree on the box boundary
    """
    if isinstance(source, dict):
        data = source
    else:
        is_text = isinstance(source, str) and source.lstrip().startswith("{")
        try:
            text = source if is_text else Path(source).read_text()
        except OSError as exc:
            raise MoveError(f"cannot read move file {source}: {exc.strerror}")
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise MoveError(f"move file: {exc.msg} at line {exc.lineno}")
    if not isinstance(data, dict) or not isinstance(data.get("moves"), list):
        raise MoveError('move file needs a "moves" list')
    moves = []
    for entry in data["moves"]:
        name = entry.get("name", f"move{len(moves)}")
        try:
            move = MosaicMove(name, _as_grid(entry["pattern"]), _as_grid(entry["replacement"]))
        except (KeyError, TypeError, ValueError):
            raise MoveError(f"move {name}: needs integer pattern and replacement grids")
        if "k" in entry:
            k = entry["k"]
            expected = (k, k) if isinstance(k, int) else tuple(k)
            if expected != move.k:
                raise MoveError(f"move {name}: declared k {list(expected)} but grids are {list(move.k)}")
        ok, reason = validate_move(move)
        if not ok:
            raise MoveError(reason)
        moves.append(move)
    symmetry_closure = bool(data.get("symmetryClosure", False))
    planar = data.get("planar", [])
    if not isinstance(planar, list):
        raise MoveError('"planar" must be a list of families')
    move_set = close_moves(moves, symmetry_closure)
    move_set.families = _load_planar(planar, symmetry_closure)
    logger.info(f"Loaded {len(moves)} moves, {len(move_set)} after closure, "
                f"{len(move_set.families)} planar families")
    return move_set


def default_moves() -> MoveSet:
    return load_moves(knot_settings.data_path("default.moves.json"))


# --- applying moves -------------------------------------------------------

@dataclass(frozen=True)
class MovePlacement:
    name: str
    row: int
    col: int

    def to_json(self) -> Dict:
        return {"move": self.name, "offset": [self.row, self.col]}


def _fits(m: Mosaic, move: MosaicMove, offset: Tuple[int, int]) -> bool:
    rows, cols = move.k
    r, c = offset
    return 0 <= r and 0 <= c and r + rows <= m.n and c + cols <= m.n


def applicable_moves(m: Mosaic, moves: MoveSet) -> List[Tuple[MosaicMove, Tuple[int, int]]]:
    """Every (move, offset) whose pattern matches the subgrid exactly, then every planar class swap"""
    found = []
    for move in moves.moves:
        rows, cols = move.k
        for r in range(m.n - rows + 1):
            for c in range(m.n - cols + 1):
                if m.subgrid(r, c, rows, cols) == move.pattern:
                    found.append((move, (r, c)))
    for family in moves.families:
        rows, cols = family.k
        for r in range(m.n - rows + 1):
            for c in range(m.n - cols + 1):
                window = m.subgrid(r, c, rows, cols)
                for other in family.alternatives(window):
                    found.append((MosaicMove(family.name, window, other), (r, c)))
    return found


def apply_move(m: Mosaic, move: MosaicMove, offset: Tuple[int, int]) -> Mosaic:
    """
    Replace the pattern at offset.

    Raises:
        MoveError: the box leaves the grid or the pattern is absent
    """
    if not _fits(m, move, offset):
        raise MoveError(f"move {move.name} at {offset} overlaps the {m.n}x{m.n} grid boundary")
    rows, cols = move.k
    if m.subgrid(offset[0], offset[1], rows, cols) != move.pattern:
        raise MoveError(f"move {move.name} does not match at {offset}")
    return m.replace(offset[0], offset[1], move.replacement)


def _neighbors(moves: MoveSet):
    def expand(m: Mosaic):
        for move, (r, c) in applicable_moves(m, moves):
            yield MovePlacement(move.name, r, c), m.replace(r, c, move.replacement)
    return expand


@dataclass
class OrbitResult:
    """Orbit of a mosaic under a move set"""
    status: SearchStatus
    closure: ClosureResult

    @property
    def complete(self) -> bool:
        return self.status is SearchStatus.COMPLETE

    @property
    def states(self) -> Set[Mosaic]:
        return self.closure.states

    @property
    def encodings(self) -> Set[bytes]:
        return {m.encode() for m in self.closure.states}

    def witness(self, target: Mosaic) -> List[Tuple[MovePlacement, Mosaic]]:
        return self.closure.path_to(target)

    def to_json(self) -> Dict:
        return {"status": self.status.value, "states": len(self.closure.parents),
                "maxDepth": max(self.closure.depth.values(), default=0)}


def orbit_bfs(m: Mosaic, moves: MoveSet, limits: Optional[SearchLimits] = None) -> OrbitResult:
    ok, reason = m.validate()
    if not ok:
        raise ValidationError(reason)
    limits = limits or knot_settings.current_limits()
    closure = orbit_closure(m, _neighbors(moves), limits)
    return OrbitResult(closure.status, closure)


@dataclass
class OrbitAnswer:
    """yes / no / unknown relative to the loaded move set"""
    verdict: str
    path: List[Tuple[MovePlacement, Mosaic]] = field(default_factory=list)
    explored: int = 0

    def to_json(self) -> Dict:
        return {"verdict": self.verdict, "relativeTo": "loaded move set", "explored": self.explored,
                "path": [p.to_json() for p, _ in self.path]}


def same_orbit(first: Mosaic, second: Mosaic, moves: MoveSet, limits: Optional[SearchLimits] = None) -> OrbitAnswer:
    """Characteristic observable chi(first) evaluated on |second>"""
    if first.n != second.n:
        raise ValidationError(f"mosaic sizes differ: {first.n} vs {second.n}")
    if first == second:
        return OrbitAnswer("yes", [], 1)
    result = orbit_bfs(first, moves, limits)
    explored = len(result.closure.parents)
    if second in result.closure.parents:
        return OrbitAnswer("yes", result.witness(second), explored)
    return OrbitAnswer("no" if result.complete else "unknown", [], explored)


def orbit_observable(result: OrbitResult) -> DiagonalOperator:
    """Projector chi(K) onto a completed orbit"""
    if not result.complete:
        raise ValidationError("characteristic observable needs a complete orbit")
    kets = [BasisKet(MotifFamily.MOSAIC, m.encode()) for m in result.states]
    return characteristic_projector(MotifFamily.MOSAIC, kets, "chi")


INVARIANTS = ("jones-at-real-t", "bracket-coefficient", "component-count")


def invariant_observable(k: Mosaic, invariant: str, t: float = 2.0, exponent: int = 0):
    """Eigenvalue Inv(K) of the invariant observable on |K>"""
    d = mosaic_to_pd(k)
    if invariant == "component-count":
        return component_count(d)
    if invariant == "bracket-coefficient":
        return bracket_A(d).coefficient(exponent)
    if invariant == "jones-at-real-t":
        v = jones(d)
        point = t ** 0.25 if v.variable is Variable.T_QUARTER else t
        return laurent_eval(v, point).real
    raise ValidationError(f"unknown invariant {invariant!r}; expected one of {', '.join(INVARIANTS)}")


# --- unitaries on mosaic kets ---------------------------------------------

def _cell_swap_unitary(n: int, row: int, col: int, first: Grid, second: Grid, name: str) -> PermutationUnitary:
    rows, cols = _shape(first)

    def swap(ket: BasisKet) -> Optional[BasisKet]:
        m = Mosaic.decode(ket.payload)
        if m.n != n:
            return None
        block = m.subgrid(row, col, rows, cols)
        if block == first:
            return BasisKet(MotifFamily.MOSAIC, m.replace(row, col, second).encode())
        if block == second:
            return BasisKet(MotifFamily.MOSAIC, m.replace(row, col, first).encode())
        return ket

    return PermutationUnitary(MotifFamily.MOSAIC, swap, swap, name)


def move_as_unitary(move: MosaicMove, offset: Tuple[int, int], n: int) -> PermutationUnitary:
    """Basis transpositions pattern <-> replacement at offset on n x n mosaic kets"""
    rows, cols = move.k
    if offset[0] < 0 or offset[1] < 0 or offset[0] + rows > n or offset[1] + cols > n:
        raise MoveError(f"move {move.name} at {offset} does not fit an {n}x{n} grid")
    return _cell_swap_unitary(n, offset[0], offset[1], move.pattern, move.replacement,
                              f"{move.name}@{offset[0]},{offset[1]}")


def crossing_switch_unitary(cell: Tuple[int, int], n: int) -> PermutationUnitary:
    """Exchange T9 and T10 at a cell"""
    return _cell_swap_unitary(n, cell[0], cell[1], ((9,),), ((10,),), f"switch@{cell[0]},{cell[1]}")


# A-smoothing of T9 is T7, of T10 is T8; B-smoothings are the other double arc
SMOOTHING_TILE = {(9, "A"): 7, (9, "B"): 8, (10, "A"): 8, (10, "B"): 7}


def smoothing_unitary(cell: Tuple[int, int], n: int, crossing_tile: int, kind: str) -> PermutationUnitary:
    """Exchange a crossing tile with its A- or B-smoothing at a cell"""
    if (crossing_tile, kind) not in SMOOTHING_TILE:
        raise ValidationError(f"no {kind}-smoothing for tile {crossing_tile}")
    target = SMOOTHING_TILE[(crossing_tile, kind)]
    return _cell_swap_unitary(n, cell[0], cell[1], ((crossing_tile,),), ((target,),),
                              f"smooth{kind}@{cell[0]},{cell[1]}")


def mosaic_ket(m: Mosaic) -> BasisKet:
    return BasisKet(MotifFamily.MOSAIC, m.encode())


# --- checks ---------------------------------------------------------------

def check_move_invariance(moves: MoveSet, mosaics: Sequence[Mosaic]) -> CheckReport:
    """Jones polynomial of the extracted diagram is unchanged by every applicable placement"""
    report = CheckReport("move-jones-invariance", True)
    for m in mosaics:
        before = jones(mosaic_to_pd(m))
        for move, offset in applicable_moves(m, moves):
            after = jones(mosaic_to_pd(apply_move(m, move, offset)))
            report.checked += 1
            if after != before:
                report.fail(f"{move.name} at {offset}: {before} -> {after}")
    return report


def random_walk(m: Mosaic, moves: MoveSet, steps: int, rng: Optional[np.random.Generator] = None) -> List[Mosaic]:
    """Mosaics visited by uniformly chosen applicable moves"""
    rng = rng if rng is not None else np.random.default_rng()
    visited = [m]
    for _ in range(steps):
        options = applicable_moves(visited[-1], moves)
        if not options:
            break
        move, offset = options[int(rng.integers(len(options)))]
        visited.append(apply_move(visited[-1], move, offset))
    return visited
