#!/usr/bin/env python3
"""
Quantized directed graphs and quantized group words
Two further instances of the motif/move framework: digraph kets acted on by
vertex relabelings, and fixed-length group words acted on by cancellation,
blank handling and relator moves.
"""

import itertools
import json
import logging
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, FrozenSet, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import networkx as nx

import knot_settings
from quantum_core import (
    BasisKet, CapExceededError, MotifFamily, PermutationUnitary, SearchLimits, SearchStatus, ValidationError,
    bidirectional_search, pack_fields, pack_ints, unpack_fields, unpack_ints,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Directed graphs
# ---------------------------------------------------------------------------

def validate_graph(n: int, edges: Iterable[Tuple[int, int]]) -> Tuple[bool, str]:
    """Vertices 1..n, no self-loops, at least one edge"""
    if n < 2:
        return False, f"need at least two vertices, got {n}"
    edges = list(edges)
    if not edges:
        return False, "empty edge set has no ket"
    for a, b in edges:
        if not (1 <= a <= n and 1 <= b <= n):
            return False, f"edge ({a},{b}) leaves vertices 1..{n}"
        if a == b:
            return False, f"self-loop at {a}"
    return True, "valid"


def edge_letter(a: int, b: int, n: int) -> int:
    """Position of (a,b) among the n(n-1) ordered pairs in lexicographic order"""
    return (a - 1) * (n - 1) + (b - 1 if b < a else b - 2)


def letter_edge(letter: int, n: int) -> Tuple[int, int]:
    a, rest = divmod(letter, n - 1)
    b = rest + 1
    return a + 1, b if b < a + 1 else b + 1


@dataclass(frozen=True)
class DirectedGraph:
    n: int
    edges: FrozenSet[Tuple[int, int]]

    family = MotifFamily.GRAPH

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Sequence[int]]) -> 'DirectedGraph':
        pairs = frozenset((int(a), int(b)) for a, b in edges)
        ok, reason = validate_graph(n, pairs)
        if not ok:
            raise ValidationError(reason)
        return cls(n, pairs)

    @property
    def edge_count(self) -> int:
        return len(self.edges)

    def sorted_edges(self) -> List[Tuple[int, int]]:
        return sorted(self.edges)

    def validate(self) -> Tuple[bool, str]:
        return validate_graph(self.n, self.edges)

    def encode(self) -> bytes:
        return pack_fields(pack_ints([self.n]), pack_ints(edge_letter(a, b, self.n) for a, b in self.sorted_edges()))

    @classmethod
    def decode(cls, payload: bytes) -> 'DirectedGraph':
        header, body = unpack_fields(payload)
        n = unpack_ints(header)[0]
        return cls(n, frozenset(letter_edge(x, n) for x in unpack_ints(body)))

    def to_json(self) -> Dict:
        return {"n": self.n, "edges": [list(e) for e in self.sorted_edges()]}


def load_graph(source: Union[str, Path, Dict]) -> DirectedGraph:
    """Graph JSON such as {"n":3,"edges":[[1,2],[2,3]]}, given as dict, text or path"""
    if isinstance(source, dict):
        data = source
    else:
        text = str(source)
        if not text.lstrip().startswith("{"):
            text = Path(source).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"graph JSON: {exc.msg}")
    if not isinstance(data.get("n"), int) or not isinstance(data.get("edges"), list):
        raise ValidationError("graph JSON needs an integer n and an edges list")
    try:
        return DirectedGraph.from_edges(data["n"], data["edges"])
    except ValidationError:
        raise
    except (TypeError, ValueError) as exc:
        raise ValidationError(f"graph JSON edges must be vertex pairs: {exc}")


def graph_ket(g: DirectedGraph) -> BasisKet:
    ok, reason = g.validate()
    if not ok:
        raise ValidationError(reason)
    return BasisKet(MotifFamily.GRAPH, g.encode())


def _as_permutation(sigma: Union[Mapping[int, int], Sequence[int]], n: int) -> Dict[int, int]:
    mapping = dict(sigma) if isinstance(sigma, Mapping) else {i + 1: int(v) for i, v in enumerate(sigma)}
    mapping = {**{v: v for v in range(1, n + 1)}, **mapping}
    if set(mapping) != set(range(1, n + 1)) or set(mapping.values()) != set(range(1, n + 1)):
        raise ValidationError(f"vertex map is not a permutation of 1..{n}")
    return mapping


def permute_graph(g: DirectedGraph, sigma: Union[Mapping[int, int], Sequence[int]]) -> DirectedGraph:
    """
    Relabel vertices: (a,b) becomes (sigma a, sigma b).

    `sigma` is a mapping or the image sequence of 1..n; unmentioned vertices stay fixed.
    """
    mapping = _as_permutation(sigma, g.n)
    return DirectedGraph(g.n, frozenset((mapping[a], mapping[b]) for a, b in g.edges))


def graph_unitary(sigma: Union[Mapping[int, int], Sequence[int]], n: int) -> PermutationUnitary:
    """Basis permutation induced by a vertex relabeling on n-vertex graph kets"""
    mapping = _as_permutation(sigma, n)
    inverse = {v: k for k, v in mapping.items()}

    def relabel(table):
        def move(k: BasisKet) -> Optional[BasisKet]:
            g = DirectedGraph.decode(k.payload)
            if g.n != n:
                return None
            return graph_ket(permute_graph(g, table))
        return move

    name = "sigma(" + ",".join(str(mapping[v]) for v in range(1, n + 1)) + ")"
    return PermutationUnitary(MotifFamily.GRAPH, relabel(mapping), relabel(inverse), name)


def _degree_profile(g: DirectedGraph) -> List[Tuple[int, int]]:
    out_deg = Counter(a for a, _ in g.edges)
    in_deg = Counter(b for _, b in g.edges)
    return sorted((out_deg[v], in_deg[v]) for v in range(1, g.n + 1))


def isomorphic_graphs(g: DirectedGraph, h: DirectedGraph,
                      max_vertices: Optional[int] = None) -> Optional[Dict[int, int]]:
    """
    Exhaustive permutation scan for sigma with sigma(G) = H.

    Returns the first witness in lexicographic permutation order, or None.

    Raises:
        ValidationError: vertex counts differ
        CapExceededError: n above the brute-force cap
    """
    if g.n != h.n:
        raise ValidationError(f"vertex counts differ: {g.n} vs {h.n}")
    cap = knot_settings.MAX_GRAPH_VERTICES if max_vertices is None else max_vertices
    if g.n > cap:
        raise CapExceededError("graph vertices", cap, g.n)
    if g.edge_count != h.edge_count or _degree_profile(g) != _degree_profile(h):
        return None
    vertices = list(range(1, g.n + 1))
    for image in itertools.permutations(vertices):
        mapping = dict(zip(vertices, image))
        if all((mapping[a], mapping[b]) in h.edges for a, b in g.edges):
            return mapping
    return None


def to_networkx(g: DirectedGraph) -> nx.DiGraph:
    graph = nx.DiGraph()
    graph.add_nodes_from(range(1, g.n + 1))
    graph.add_edges_from(g.sorted_edges())
    return graph


# ---------------------------------------------------------------------------
# Group words
# ---------------------------------------------------------------------------

_LETTER_RE = re.compile(r"\s*(?:(\*)|x(\d*)(\^\{?-1\}?)?)")


@dataclass(frozen=True)
class GroupWord:
    """
    Fixed-length word over x_i, x_i^-1 and the identity symbol.

    Letters are ints: +i is x_i, -i is x_i^-1 and 0 is the blank.
    """
    letters: Tuple[int, ...]
    generators: int

    family = MotifFamily.WORD

    @property
    def length(self) -> int:
        return len(self.letters)

    def validate(self) -> Tuple[bool, str]:
        if self.generators < 1:
            return False, "presentation needs a generator"
        for pos, letter in enumerate(self.letters):
            if abs(letter) > self.generators:
                return False, f"letter {letter} at {pos} outside generators 1..{self.generators}"
        return True, "valid"

    def encode(self) -> bytes:
        codes = [0 if x == 0 else (2 * x - 1 if x > 0 else -2 * x) for x in self.letters]
        return pack_fields(pack_ints([self.generators]), pack_ints(codes))

    @classmethod
    def decode(cls, payload: bytes) -> 'GroupWord':
        header, body = unpack_fields(payload)
        letters = tuple(0 if c == 0 else ((c + 1) // 2 if c % 2 else -(c // 2)) for c in unpack_ints(body))
        return cls(letters, unpack_ints(header)[0])

    def with_letters(self, letters: Sequence[int]) -> 'GroupWord':
        return GroupWord(tuple(letters), self.generators)

    def __str__(self):
        return format_word(self.letters)


def parse_word(text: str, generators: int) -> GroupWord:
    """
    Parse "x1 x2^-1 * * x3"; a bare "x" is x1 and "x^{-1}" its inverse.

    Raises:
        ValidationError: unreadable letter or generator out of range
    """
    letters = []
    pos = 0
    text = text.strip()
    while pos < len(text):
        match = _LETTER_RE.match(text, pos)
        if not match or match.end() == pos:
            raise ValidationError(f"unreadable word letter at {text[pos:pos + 8]!r}")
        if match.group(1):
            letters.append(0)
        else:
            index = int(match.group(2) or 1)
            if index < 1:
                raise ValidationError("generator indices start at 1")
            inverted = bool(match.group(3))
            letters.append(-index if inverted else index)
        pos = match.end()
        while pos < len(text) and text[pos].isspace():
            pos += 1
    word = GroupWord(tuple(letters), generators)
    ok, reason = word.validate()
    if not ok:
        raise ValidationError(reason)
    return word


def format_word(letters: Sequence[int]) -> str:
    return " ".join("*" if x == 0 else (f"x{x}" if x > 0 else f"x{-x}^-1") for x in letters)


def word_ket(w: GroupWord) -> BasisKet:
    ok, reason = w.validate()
    if not ok:
        raise ValidationError(reason)
    return BasisKet(MotifFamily.WORD, w.encode())


@dataclass(frozen=True)
class Presentation:
    generators: int
    relators: Tuple[Tuple[int, ...], ...] = ()

    def __post_init__(self):
        if self.generators < 1:
            raise ValidationError("presentation needs a generator")
        for relator in self.relators:
            if not relator or any(x == 0 or abs(x) > self.generators for x in relator):
                raise ValidationError(f"bad relator {list(relator)}")

    @classmethod
    def free(cls, generators: int) -> 'Presentation':
        return cls(generators, ())

    def relator_patterns(self) -> List[Tuple[int, ...]]:
        """Relators and their formal inverses, deduplicated"""
        patterns = []
        for relator in self.relators:
            for pattern in (tuple(relator), tuple(-x for x in reversed(relator))):
                if pattern not in patterns:
                    patterns.append(pattern)
        return patterns


def load_presentation(source: Union[str, Path, Dict]) -> Presentation:
    """Presentation JSON {"generators":2,"relators":[[1,1,1]]}"""
    if isinstance(source, dict):
        data = source
    else:
        text = str(source)
        if not text.lstrip().startswith("{"):
            text = Path(source).read_text()
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"presentation JSON: {exc.msg}")
    try:
        return Presentation(int(data["generators"]), tuple(tuple(int(x) for x in r) for r in data.get("relators", [])))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"presentation JSON needs generators: {exc}")


@dataclass(frozen=True)
class WordMove:
    """
    rule is cancel, blankSwap, cyclic or relator. `pattern` is the letter
    block the move trades for blanks (cancel and relator moves).
    """
    rule: str
    position: int
    direction: str = "forward"
    pattern: Tuple[int, ...] = ()

    def to_json(self) -> Dict:
        record = {"rule": self.rule, "position": self.position, "direction": self.direction}
        if self.pattern:
            record["pattern"] = format_word(self.pattern)
        return record


def _trade(w: GroupWord, move: WordMove) -> Optional[GroupWord]:
    """Swap the pattern block at the position with blanks, either way round"""
    span = len(move.pattern)
    block = w.letters[move.position:move.position + span]
    if len(block) != span:
        return None
    if block == move.pattern:
        replacement = (0,) * span
    elif all(x == 0 for x in block):
        replacement = move.pattern
    else:
        return None
    return w.with_letters(w.letters[:move.position] + replacement + w.letters[move.position + span:])


def apply_word_move(w: GroupWord, move: WordMove) -> Optional[GroupWord]:
    """The image of w, or None when the move does not apply"""
    if move.rule in ("cancel", "relator"):
        return _trade(w, move)
    if move.rule == "blankSwap":
        pair = w.letters[move.position:move.position + 2]
        if len(pair) != 2 or (pair[0] == 0) == (pair[1] == 0):
            return None
        p = move.position
        return w.with_letters(w.letters[:p] + (pair[1], pair[0]) + w.letters[p + 2:])
    if move.rule == "cyclic":
        if not w.letters:
            return w
        letters = w.letters[1:] + w.letters[:1] if move.direction == "reverse" else w.letters[-1:] + w.letters[:-1]
        return w.with_letters(letters)
    raise ValidationError(f"unknown word rule {move.rule!r}")


def word_moves(w: GroupWord, presentation: Presentation) -> List[Tuple[WordMove, GroupWord]]:
    """Every applicable move with its image, in a fixed order"""
    if w.generators != presentation.generators:
        raise ValidationError(f"word has {w.generators} generators, presentation {presentation.generators}")
    moves: List[WordMove] = []
    letters = w.letters
    for p in range(len(letters) - 1):
        a, b = letters[p], letters[p + 1]
        if a != 0 and b == -a:
            moves.append(WordMove("cancel", p, "forward", (a, b)))
        elif a == 0 and b == 0:
            for i in range(1, w.generators + 1):
                moves.append(WordMove("cancel", p, "reverse", (i, -i)))
                moves.append(WordMove("cancel", p, "reverse", (-i, i)))
        if (a == 0) != (b == 0):
            moves.append(WordMove("blankSwap", p))
    for pattern in presentation.relator_patterns():
        for p in range(len(letters) - len(pattern) + 1):
            block = letters[p:p + len(pattern)]
            if block == pattern:
                moves.append(WordMove("relator", p, "forward", pattern))
            elif all(x == 0 for x in block):
                moves.append(WordMove("relator", p, "reverse", pattern))
    if letters:
        moves.append(WordMove("cyclic", 0, "forward"))
        moves.append(WordMove("cyclic", 0, "reverse"))
    return [(m, apply_word_move(w, m)) for m in moves]


def word_unitary(move: WordMove, length: int, generators: int) -> PermutationUnitary:
    """
    The move as a permutation of word kets of one length.

    Cancel, relator and blank-swap placements are involutions, identity where
    they do not apply; the cyclic shift is inverted by the opposite shift.
    """
    def act(m: WordMove):
        def move_ket(k: BasisKet) -> Optional[BasisKet]:
            w = GroupWord.decode(k.payload)
            if w.length != length or w.generators != generators:
                return None
            image = apply_word_move(w, m)
            return k if image is None else word_ket(image)
        return move_ket

    label = f"{move.rule}@{move.position}"
    if move.rule == "cyclic":
        opposite = WordMove("cyclic", 0, "forward" if move.direction == "reverse" else "reverse")
        return PermutationUnitary(MotifFamily.WORD, act(move), act(opposite), label)
    # forward and reverse placements of one pattern are the same transposition
    return PermutationUnitary(MotifFamily.WORD, act(move), act(move), label)


@dataclass
class WordEquivalence:
    status: SearchStatus
    path: List[Tuple[WordMove, GroupWord]] = field(default_factory=list)
    explored: int = 0

    @property
    def verdict(self) -> str:
        return "witness" if self.status is SearchStatus.FOUND else self.status.value

    def to_json(self) -> Dict:
        return {"verdict": self.verdict, "explored": self.explored,
                "path": [{**m.to_json(), "word": str(w)} for m, w in self.path]}


def bounded_word_equivalence(first: GroupWord, second: GroupWord, presentation: Presentation,
                             limits: Optional[SearchLimits] = None) -> WordEquivalence:
    """
    Bidirectional search over word moves; never decides the word problem.

    Raises:
        ValidationError: length mismatch or letters outside the presentation
    """
    if first.length != second.length:
        raise ValidationError(f"word lengths differ: {first.length} vs {second.length}")
    for w in (first, second):
        ok, reason = w.validate()
        if not ok:
            raise ValidationError(reason)
    limits = limits or knot_settings.current_limits()
    result = bidirectional_search(first, second, lambda w: word_moves(w, presentation), limits)
    logger.info(f"Word search {result.status.value} after {result.explored} states")
    return WordEquivalence(result.status, result.path, result.explored)
