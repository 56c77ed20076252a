#!/usr/bin/env python3
"""
Diagram codecs for the quantized knot toolkit
Parses, validates and interconverts planar diagram (PD) codes, Gauss codes and
knot mosaics; computes orientation, writhe and component structure.
"""

import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from quantum_core import (
    GaussFormatError, MosaicFormatError, MotifFamily, PDFormatError, ValidationError,
    dumps_compact, pack_fields, pack_ints, unpack_fields, unpack_ints,
)

logger = logging.getLogger(__name__)

Crossing = Tuple[int, int, int, int]
Slot = Tuple[int, int]  # (crossing index, position 0..3)


class UnionFind:
    """Disjoint sets over hashable labels with path halving"""

    def __init__(self, elements: Iterable = ()):
        self.parent: Dict = {}
        for element in elements:
            self.add(element)

    def add(self, element):
        self.parent.setdefault(element, element)

    def find(self, element):
        self.add(element)
        while self.parent[element] != element:
            self.parent[element] = self.parent[self.parent[element]]
            element = self.parent[element]
        return element

    def union(self, keep, merge):
        """Join the sets; the root of `keep` survives"""
        root_keep, root_merge = self.find(keep), self.find(merge)
        if root_keep != root_merge:
            self.parent[root_merge] = root_keep

    def count_sets(self) -> int:
        return sum(1 for element in self.parent if self.find(element) == element)


# ---------------------------------------------------------------------------
# Planar diagrams
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PlanarDiagram:
    """
    Crossings listed counterclockwise from the incoming under-strand.

    Arcs are numbered consecutively along each component; crossing-free
    circles are counted in free_loops.
    """
    crossings: Tuple[Crossing, ...] = ()
    free_loops: int = 0

    def __post_init__(self):
        object.__setattr__(self, "crossings", tuple(tuple(int(a) for a in x) for x in self.crossings))

    @property
    def crossing_count(self) -> int:
        return len(self.crossings)

    def arcs(self) -> List[int]:
        return sorted({a for x in self.crossings for a in x})

    def validate(self) -> Tuple[bool, str]:
        try:
            orient(self)
        except ValidationError as exc:
            return False, exc.reason
        return True, "valid"

    def to_json(self) -> Dict:
        return {"crossings": [list(x) for x in self.crossings], "freeLoops": self.free_loops}


@dataclass
class Orientation:
    """Traversal data for the components of a diagram"""
    head: Dict[int, Slot] = field(default_factory=dict)  # slot where the arc ends
    tail: Dict[int, Slot] = field(default_factory=dict)  # slot where the arc starts
    components: List[List[int]] = field(default_factory=list)  # arcs in traversal order
    component_of: Dict[int, int] = field(default_factory=dict)
    signs: List[int] = field(default_factory=list)

    def successor(self, d: PlanarDiagram, arc: int) -> int:
        ci, pos = self.head[arc]
        return d.crossings[ci][pos ^ 2]


def parse_pd(text: str) -> PlanarDiagram:
    """
    Parse PD JSON {"crossings": [[a,b,c,d], ...], "freeLoops": k}.

    Raises:
        PDFormatError: malformed JSON, bad arc multiplicity or labelling
    """
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise PDFormatError(f"PD JSON: {exc.msg} at line {exc.lineno}")
    if not isinstance(data, dict) or "crossings" not in data:
        raise PDFormatError('PD JSON needs a "crossings" list')
    unknown = set(data) - {"crossings", "freeLoops"}
    if unknown:
        raise PDFormatError(f"unknown PD field {sorted(unknown)[0]!r}")
    crossings = data["crossings"]
    free_loops = data.get("freeLoops", 0)
    if not isinstance(crossings, list):
        raise PDFormatError('"crossings" must be a list')
    for x in crossings:
        if not isinstance(x, list) or len(x) != 4 or not all(isinstance(a, int) and not isinstance(a, bool) for a in x):
            raise PDFormatError(f"crossing {x!r} is not four integer arc labels")
    if not isinstance(free_loops, int) or isinstance(free_loops, bool) or free_loops < 0:
        raise PDFormatError('"freeLoops" must be a non-negative integer')
    diagram = PlanarDiagram(tuple(tuple(x) for x in crossings), free_loops)
    orient(diagram)
    return diagram


def format_pd(d: PlanarDiagram) -> str:
    return dumps_compact(d.to_json())


def orient(d: PlanarDiagram) -> Orientation:
    """
    Solve the head/tail role of every arc occurrence.

    The under strand enters at position 0 and leaves at position 2; at the
    over pair one slot is a head and the other a tail. Components running
    entirely over are seeded from their arc labels.

    Raises:
        PDFormatError: multiplicity, orientation or labelling violations
    """
    occurrences: Dict[int, List[Slot]] = {}
    for ci, crossing in enumerate(d.crossings):
        for pos, arc in enumerate(crossing):
            if arc < 1:
                raise PDFormatError(f"arc label {arc} is not positive")
            occurrences.setdefault(arc, []).append((ci, pos))
    for arc, slots in sorted(occurrences.items()):
        if len(slots) != 2:
            raise PDFormatError(f"arc {arc} appears {len(slots)} times, expected 2")
    expected = set(range(1, 2 * len(d.crossings) + 1))
    if set(occurrences) != expected:
        missing = sorted(expected - set(occurrences)) or sorted(set(occurrences) - expected)
        raise PDFormatError(f"arc labels must be 1..{2 * len(d.crossings)}; offending label {missing[0]}")

    role: Dict[Slot, bool] = {}  # True = head

    def other_occurrence(slot: Slot) -> Slot:
        first, second = occurrences[d.crossings[slot[0]][slot[1]]]
        return second if first == slot else first

    def assign(start: Slot, is_head: bool):
        stack = [(start, is_head)]
        while stack:
            slot, value = stack.pop()
            if slot in role:
                if role[slot] != value:
                    raise PDFormatError(f"inconsistent orientation at crossing {slot[0]}")
                continue
            role[slot] = value
            stack.append((other_occurrence(slot), not value))
            stack.append(((slot[0], slot[1] ^ 2), not value))

    for ci in range(len(d.crossings)):
        assign((ci, 0), True)

    # components passing only over crossings
    for arc in sorted(occurrences):
        if all(slot in role for slot in occurrences[arc]):
            continue
        group = _over_group(d, arc, occurrences, role)
        first, second = occurrences[arc]
        if len(group) >= 3 and d.crossings[second[0]][second[1] ^ 2] == arc + 1:
            assign(second, True)
        else:
            assign(first, True)

    orientation = Orientation()
    for arc, slots in occurrences.items():
        for slot in slots:
            if role[slot]:
                orientation.head[arc] = slot
            else:
                orientation.tail[arc] = slot

    seen: Set[int] = set()
    for arc in sorted(occurrences):
        if arc in seen:
            continue
        walk = [arc]
        seen.add(arc)
        nxt = orientation.successor(d, arc)
        while nxt != arc:
            if nxt in seen:
                raise PDFormatError(f"arc {nxt} is entered twice")
            walk.append(nxt)
            seen.add(nxt)
            nxt = orientation.successor(d, nxt)
        low, high = min(walk), max(walk)
        if walk != list(range(low, high + 1)):
            raise PDFormatError(f"component through arc {arc} is not labelled consecutively")
        index = len(orientation.components)
        orientation.components.append(walk)
        for a in walk:
            orientation.component_of[a] = index

    orientation.signs = [1 if role[(ci, 3)] else -1 for ci in range(len(d.crossings))]
    return orientation


def _over_group(d: PlanarDiagram, arc: int, occurrences, role) -> Set[int]:
    group = {arc}
    stack = [arc]
    while stack:
        a = stack.pop()
        for ci, pos in occurrences[a]:
            if pos in (1, 3):
                partner = d.crossings[ci][pos ^ 2]
                if partner not in group:
                    group.add(partner)
                    stack.append(partner)
    return group


def components(d: PlanarDiagram) -> List[List[int]]:
    """Arc lists of the components that meet crossings, ordered by smallest arc"""
    return orient(d).components


def component_count(d: PlanarDiagram) -> int:
    return len(orient(d).components) + d.free_loops


def crossing_signs(d: PlanarDiagram) -> List[int]:
    """+1 where the over strand runs from position 3 to position 1"""
    return orient(d).signs


def writhe(d: PlanarDiagram) -> int:
    return sum(orient(d).signs)


def crossing_components(d: PlanarDiagram) -> List[Tuple[int, int]]:
    """(under component, over component) per crossing"""
    o = orient(d)
    return [(o.component_of[x[0]], o.component_of[x[1]]) for x in d.crossings]


def linking_number(d: PlanarDiagram, first: int, second: int) -> int:
    o = orient(d)
    if not (0 <= first < len(o.components) and 0 <= second < len(o.components)) or first == second:
        raise ValidationError(f"components {first} and {second} are not two distinct crossed components")
    total = 0
    for ci, x in enumerate(d.crossings):
        pair = {o.component_of[x[0]], o.component_of[x[1]]}
        if pair == {first, second}:
            total += o.signs[ci]
    return total // 2


def mirror(d: PlanarDiagram) -> PlanarDiagram:
    """Exchange over and under at every crossing"""
    signs = crossing_signs(d)
    flipped = []
    for (a, b, c, e), sign in zip(d.crossings, signs):
        flipped.append((e, a, b, c) if sign > 0 else (b, c, e, a))
    return PlanarDiagram(tuple(flipped), d.free_loops)


def relabel_arcs(d: PlanarDiagram, mapping: Dict[int, int]) -> PlanarDiagram:
    return PlanarDiagram(tuple(tuple(mapping[a] for a in x) for x in d.crossings), d.free_loops)


def disjoint_union(first: PlanarDiagram, second: PlanarDiagram) -> PlanarDiagram:
    offset = 2 * first.crossing_count
    shifted = tuple(tuple(a + offset for a in x) for x in second.crossings)
    return PlanarDiagram(first.crossings + shifted, first.free_loops + second.free_loops)


def add_free_loop(d: PlanarDiagram, count: int = 1) -> PlanarDiagram:
    return PlanarDiagram(d.crossings, d.free_loops + count)


def delete_component(d: PlanarDiagram, index: int) -> PlanarDiagram:
    """
    Remove one component and relabel what remains.

    Components meeting crossings are indexed first (by smallest arc), then the
    free loops. Surviving strands pass straight through deleted crossings.
    """
    o = orient(d)
    total = len(o.components) + d.free_loops
    if not 0 <= index < total:
        raise ValidationError(f"component {index} out of range 0..{total - 1}")
    if index >= len(o.components):
        return PlanarDiagram(d.crossings, d.free_loops - 1)

    doomed = set(o.components[index])
    merged = UnionFind(a for a in o.component_of if a not in doomed)
    kept: List[Crossing] = []
    for ci, x in enumerate(d.crossings):
        under_gone, over_gone = x[0] in doomed, x[1] in doomed
        if not under_gone and not over_gone:
            kept.append(x)
        elif under_gone and not over_gone:
            enter, leave = (x[3], x[1]) if o.head[x[3]] == (ci, 3) else (x[1], x[3])
            merged.union(enter, leave)
        elif over_gone and not under_gone:
            merged.union(x[0], x[2])

    kept_arcs = {a for x in kept for a in x}
    mapping: Dict[int, int] = {}
    free_loops = d.free_loops
    label = 1
    for ci, walk in enumerate(o.components):
        if ci == index:
            continue
        if not kept_arcs.intersection(walk):
            free_loops += 1
            continue
        roots = []
        for a in walk:
            r = merged.find(a)
            if not roots or roots[-1] != r:
                roots.append(r)
        if len(roots) > 1 and roots[0] == roots[-1]:
            roots.pop()
        for r in roots:
            mapping[r] = label
            label += 1
    new_crossings = tuple(tuple(mapping[merged.find(a)] for a in x) for x in kept)
    result = PlanarDiagram(new_crossings, free_loops)
    orient(result)
    logger.debug(f"Deleted component {index}: {len(d.crossings)} -> {len(kept)} crossings")
    return result


# ---------------------------------------------------------------------------
# Gauss codes
# ---------------------------------------------------------------------------

class TokenKind(Enum):
    OVER = "o"
    UNDER = "u"
    BLANK = "*"


@dataclass(frozen=True)
class GaussToken:
    """One tensor factor |oi+>, |oi->, |ui+>, |ui-> or |*>"""
    kind: TokenKind
    index: Optional[int] = None
    sign: Optional[int] = None

    def __post_init__(self):
        if self.kind is TokenKind.BLANK:
            if self.index is not None or self.sign is not None:
                raise GaussFormatError("blank token carries no index or sign")
        elif self.index is None or self.index < 1 or self.sign not in (1, -1):
            raise GaussFormatError(f"token needs a positive index and a sign, got {self.index}/{self.sign}")

    @property
    def is_blank(self) -> bool:
        return self.kind is TokenKind.BLANK

    def with_index(self, index: int) -> 'GaussToken':
        return self if self.is_blank else GaussToken(self.kind, index, self.sign)

    def __str__(self):
        if self.is_blank:
            return "*"
        return f"{self.kind.value}{self.index}{'+' if self.sign > 0 else '-'}"


BLANK = GaussToken(TokenKind.BLANK)

_TOKEN_RE = re.compile(r"\s*(?:([ou])(\d+)([+-])|(\*))")


def _scan_tokens(text: str) -> List[GaussToken]:
    tokens = []
    pos = 0
    stripped = text.rstrip()
    while pos < len(stripped):
        match = _TOKEN_RE.match(stripped, pos)
        if not match:
            raise GaussFormatError(f"malformed token at character {pos}: {stripped[pos:pos + 8]!r}")
        if match.group(4):
            tokens.append(BLANK)
        else:
            kind = TokenKind.OVER if match.group(1) == "o" else TokenKind.UNDER
            index = int(match.group(2))
            if index < 1:
                raise GaussFormatError(f"index {index} is not positive")
            tokens.append(GaussToken(kind, index, 1 if match.group(3) == "+" else -1))
        pos = match.end()
    return tokens


def check_gauss_pairing(tokens: Sequence[GaussToken], allow_unpaired: bool = False) -> Tuple[bool, str]:
    """Each index once as o and once as u with one sign"""
    seen: Dict[int, List[GaussToken]] = {}
    for token in tokens:
        if not token.is_blank:
            seen.setdefault(token.index, []).append(token)
    for index, group in sorted(seen.items()):
        if len(group) > 2 or (len(group) == 1 and not allow_unpaired):
            return False, f"index {index} appears {len(group)} times"
        if len(group) == 2:
            if {t.kind for t in group} != {TokenKind.OVER, TokenKind.UNDER}:
                return False, f"index {index} needs one o and one u"
            if group[0].sign != group[1].sign:
                return False, f"index {index} has mismatched signs"
    return True, "valid"


def parse_gauss(text: str, allow_unpaired: bool = False) -> List[GaussToken]:
    """
    Parse Gauss text such as "o1+ u2- *" (whitespace between tokens optional).

    Raises:
        GaussFormatError: malformed token or pairing violation
    """
    tokens = _scan_tokens(text)
    ok, reason = check_gauss_pairing(tokens, allow_unpaired)
    if not ok:
        raise GaussFormatError(reason)
    return tokens


def format_gauss(tokens: Sequence[GaussToken]) -> str:
    return " ".join(str(t) for t in tokens)


def parse_gauss_components(text: str) -> List[List[GaussToken]]:
    """Link code with components separated by '|'"""
    parts = [_scan_tokens(part) for part in text.split("|")]
    ok, reason = check_gauss_pairing([t for part in parts for t in part])
    if not ok:
        raise GaussFormatError(reason)
    return parts


def format_gauss_components(parts: Sequence[Sequence[GaussToken]]) -> str:
    return " | ".join(format_gauss(part) for part in parts)


def pd_to_gauss(d: PlanarDiagram, component: int = 0) -> List[GaussToken]:
    """
    Gauss code of one component starting from its smallest arc.

    Crossings are numbered by first visit; signs are crossing signs.
    """
    o = orient(d)
    total = len(o.components) + d.free_loops
    if not 0 <= component < total:
        raise ValidationError(f"component {component} out of range 0..{total - 1}")
    if component >= len(o.components):
        return []
    return _walk_tokens(d, o, o.components[component], {})


def pd_to_gauss_link(d: PlanarDiagram) -> List[List[GaussToken]]:
    """Gauss codes of all crossed components with shared crossing numbers"""
    o = orient(d)
    numbering: Dict[int, int] = {}
    return [_walk_tokens(d, o, walk, numbering) for walk in o.components]


def _walk_tokens(d: PlanarDiagram, o: Orientation, walk: List[int], numbering: Dict[int, int]) -> List[GaussToken]:
    tokens = []
    for arc in walk:
        ci, pos = o.head[arc]
        if ci not in numbering:
            numbering[ci] = len(numbering) + 1
        kind = TokenKind.UNDER if pos == 0 else TokenKind.OVER
        tokens.append(GaussToken(kind, numbering[ci], o.signs[ci]))
    return tokens


# ---------------------------------------------------------------------------
# Mosaics
# ---------------------------------------------------------------------------

# faces: 0 = E, 1 = N, 2 = W, 3 = S (counterclockwise)
EAST, NORTH, WEST, SOUTH = 0, 1, 2, 3
FACE_NAMES = "ENWS"
FACE_STEP = {EAST: (0, 1), NORTH: (-1, 0), WEST: (0, -1), SOUTH: (1, 0)}

# passages per tile as face pairs; for crossings the over passage comes first
TILE_PASSAGES: Tuple[Tuple[Tuple[int, int], ...], ...] = (
    (),
    ((WEST, SOUTH),),
    ((SOUTH, EAST),),
    ((EAST, NORTH),),
    ((NORTH, WEST),),
    ((WEST, EAST),),
    ((NORTH, SOUTH),),
    ((NORTH, EAST), (SOUTH, WEST)),
    ((NORTH, WEST), (SOUTH, EAST)),
    ((NORTH, SOUTH), (WEST, EAST)),
    ((WEST, EAST), (NORTH, SOUTH)),
)
TILE_COUNT = len(TILE_PASSAGES)
CROSSING_TILES = (9, 10)


def tile_faces(tile: int) -> Set[int]:
    return {f for passage in TILE_PASSAGES[tile] for f in passage}


def opposite(face: int) -> int:
    return (face + 2) % 4


@dataclass(frozen=True)
class Mosaic:
    """n x n grid of tile ids 0..10, row 0 at the top"""
    tiles: Tuple[Tuple[int, ...], ...]

    def __post_init__(self):
        object.__setattr__(self, "tiles", tuple(tuple(int(t) for t in row) for row in self.tiles))

    family = MotifFamily.MOSAIC

    @property
    def n(self) -> int:
        return len(self.tiles)

    def tile(self, row: int, col: int) -> int:
        return self.tiles[row][col]

    def encode(self) -> bytes:
        return pack_fields(pack_ints([self.n]), bytes(t for row in self.tiles for t in row))

    @classmethod
    def decode(cls, payload: bytes) -> 'Mosaic':
        size_field, body = unpack_fields(payload)
        n = unpack_ints(size_field)[0]
        return cls(tuple(tuple(body[r * n:(r + 1) * n]) for r in range(n)))

    def validate(self) -> Tuple[bool, str]:
        report = validate_mosaic(self)
        if report.valid:
            return True, "suitably connected"
        return False, report.summary()

    def replace(self, row: int, col: int, block: Sequence[Sequence[int]]) -> 'Mosaic':
        grid = [list(r) for r in self.tiles]
        for dr, block_row in enumerate(block):
            for dc, t in enumerate(block_row):
                grid[row + dr][col + dc] = t
        return Mosaic(tuple(tuple(r) for r in grid))

    def subgrid(self, row: int, col: int, height: int, width: int) -> Tuple[Tuple[int, ...], ...]:
        return tuple(tuple(self.tiles[row + r][col:col + width]) for r in range(height))

    def __str__(self):
        return format_mosaic(self).rstrip("\n")


@dataclass(frozen=True)
class MosaicViolation:
    row: int
    col: int
    faces: Tuple[str, ...]
    reason: str


@dataclass
class MosaicReport:
    """Suitably-connected verdict with the violating cells"""
    valid: bool
    violations: List[MosaicViolation] = field(default_factory=list)

    def summary(self) -> str:
        if self.valid:
            return "suitably connected"
        first = self.violations[0]
        return (f"{len(self.violations)} violating cell(s); first at ({first.row},{first.col}): "
                f"{first.reason}")

    def to_json(self) -> Dict:
        return {"valid": self.valid,
                "violations": [{"row": v.row, "col": v.col, "faces": list(v.faces), "reason": v.reason}
                               for v in self.violations]}


def validate_mosaic(m: Mosaic) -> MosaicReport:
    """Check that every connection point meets a matching neighbour point"""
    violations = []
    n = m.n
    for r, row in enumerate(m.tiles):
        if len(row) != n:
            violations.append(MosaicViolation(r, 0, (), f"row has {len(row)} tiles, expected {n}"))
            continue
        for c, tile in enumerate(row):
            if not 0 <= tile < TILE_COUNT:
                violations.append(MosaicViolation(r, c, (), f"tile id {tile} outside 0..{TILE_COUNT - 1}"))
                continue
            dangling = []
            for face in sorted(tile_faces(tile)):
                dr, dc = FACE_STEP[face]
                nr, nc = r + dr, c + dc
                if not (0 <= nr < n and 0 <= nc < n):
                    dangling.append(face)
                    continue
                neighbour = m.tiles[nr][nc]
                if not (0 <= neighbour < TILE_COUNT) or opposite(face) not in tile_faces(neighbour):
                    dangling.append(face)
            if dangling:
                names = tuple(FACE_NAMES[f] for f in dangling)
                violations.append(MosaicViolation(r, c, names, f"unmatched connection point(s) {','.join(names)}"))
    return MosaicReport(not violations, violations)


def parse_mosaic(text: str) -> Mosaic:
    """
    Parse n lines of n integers 0..10.

    Raises:
        MosaicFormatError: non-integer, out of range or non-square input
    """
    rows = []
    for number, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            values = [int(v) for v in line.split()]
        except ValueError:
            raise MosaicFormatError(f"line {number} has a non-integer tile")
        bad = [v for v in values if not 0 <= v < TILE_COUNT]
        if bad:
            raise MosaicFormatError(f"line {number}: tile id {bad[0]} outside 0..{TILE_COUNT - 1}")
        rows.append(tuple(values))
    if not rows:
        raise MosaicFormatError("empty mosaic")
    n = len(rows)
    for number, row in enumerate(rows, 1):
        if len(row) != n:
            raise MosaicFormatError(f"row {number} has {len(row)} tiles, expected {n}")
    return Mosaic(tuple(rows))


def format_mosaic(m: Mosaic) -> str:
    return "".join(" ".join(str(t) for t in row) + "\n" for row in m.tiles)


def blank_mosaic(n: int) -> Mosaic:
    if n < 1:
        raise MosaicFormatError("mosaic size must be positive")
    return Mosaic(tuple((0,) * n for _ in range(n)))


def mosaic_injection(m: Mosaic, size: int, offset: Tuple[int, int] = (0, 0)) -> Mosaic:
    """Embed m into a blank size x size mosaic at the given (row, col) offset"""
    row, col = offset
    if row < 0 or col < 0 or row + m.n > size or col + m.n > size:
        raise MosaicFormatError(f"{m.n}x{m.n} mosaic does not fit a {size}x{size} grid at {offset}")
    return blank_mosaic(size).replace(row, col, m.tiles)


@dataclass
class _PassageVisit:
    entry: int
    in_arc: int = 0
    out_arc: int = 0


def _passage_through(tile: int, face: int) -> Tuple[int, int]:
    for index, passage in enumerate(TILE_PASSAGES[tile]):
        if face in passage:
            return index, passage[1] if passage[0] == face else passage[0]
    raise MosaicFormatError(f"tile {tile} has no connection point on face {FACE_NAMES[face]}")


def mosaic_to_pd(m: Mosaic) -> PlanarDiagram:
    """
    Trace the strands of a suitably connected mosaic into a PD code.

    Components are started at crossing cells in row-major order, leaving a
    north-south passage through N and a west-east passage through E.

    Raises:
        MosaicFormatError: the mosaic is not suitably connected
    """
    report = validate_mosaic(m)
    if not report.valid:
        raise MosaicFormatError(report.summary())

    crossing_cells = [(r, c) for r in range(m.n) for c in range(m.n) if m.tiles[r][c] in CROSSING_TILES]
    visits: Dict[Tuple[int, int, int], _PassageVisit] = {}
    used: Set[Tuple[int, int, int]] = set()
    label = 1

    for r, c in crossing_cells:
        for index, (face_a, face_b) in enumerate(TILE_PASSAGES[m.tiles[r][c]]):
            if (r, c, index) in used:
                continue
            # leave through N or E
            exit_face = NORTH if NORTH in (face_a, face_b) else EAST
            start_key = (r, c, index)
            start_visit = _PassageVisit(entry=opposite(exit_face), out_arc=label)
            visits[start_key] = start_visit
            used.add(start_key)
            row, col, face = r, c, exit_face
            while True:
                dr, dc = FACE_STEP[face]
                row, col, entry = row + dr, col + dc, opposite(face)
                passage, face = _passage_through(m.tiles[row][col], entry)
                key = (row, col, passage)
                if key == start_key:
                    start_visit.in_arc = label
                    break
                used.add(key)
                if m.tiles[row][col] in CROSSING_TILES:
                    visits[key] = _PassageVisit(entry=entry, in_arc=label, out_arc=label + 1)
                    label += 1
            label += 1

    free_loops = 0
    for r in range(m.n):
        for c in range(m.n):
            for index, (face_a, _) in enumerate(TILE_PASSAGES[m.tiles[r][c]]):
                if (r, c, index) in used:
                    continue
                free_loops += 1
                row, col, face = r, c, face_a
                used.add((r, c, index))
                while True:
                    dr, dc = FACE_STEP[face]
                    row, col = row + dr, col + dc
                    passage, face = _passage_through(m.tiles[row][col], opposite(face))
                    if (row, col, passage) in used:
                        break
                    used.add((row, col, passage))

    crossings = []
    for r, c in crossing_cells:
        tile = m.tiles[r][c]
        over_passage, under_passage = 0, 1
        under = visits[(r, c, under_passage)]
        tuple_arcs = []
        for step in range(4):
            face = (under.entry + step) % 4
            passage = over_passage if face in TILE_PASSAGES[tile][over_passage] else under_passage
            visit = visits[(r, c, passage)]
            tuple_arcs.append(visit.in_arc if face == visit.entry else visit.out_arc)
        crossings.append(tuple(tuple_arcs))
    diagram = PlanarDiagram(tuple(crossings), free_loops)
    orient(diagram)
    logger.debug(f"Extracted {len(crossings)} crossings and {free_loops} free loops from {m.n}x{m.n} mosaic")
    return diagram
