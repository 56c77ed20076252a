#!/usr/bin/env python3
"""
Quantum Gauss code rewriting for the quantized knot toolkit
Implements the Reidemeister-style moves on fixed-length Gauss words with
blanks, index permutations, the one-move neighbourhood and bounded
equivalence search.
"""

import json
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import knot_settings
from knot_codecs import BLANK, GaussToken, TokenKind, check_gauss_pairing, format_gauss, parse_gauss
from quantum_core import (
    BasisKet, GaussFormatError, MotifFamily, MoveError, PermutationUnitary, SearchLimits, SearchStatus,
    ValidationError, bidirectional_search, pack_fields, pack_ints, unpack_fields, unpack_ints,
)

logger = logging.getLogger(__name__)

_KIND_CODE = {TokenKind.BLANK: 0, TokenKind.OVER: 1, TokenKind.UNDER: 2}
_CODE_KIND = {v: k for k, v in _KIND_CODE.items()}


def validate_word(tokens: Sequence[GaussToken], index_bound: Optional[int]) -> Tuple[bool, str]:
    """Index pairing, sign agreement and the index bound"""
    ok, reason = check_gauss_pairing(tokens)
    if not ok:
        return False, reason
    if index_bound is not None:
        over = [t.index for t in tokens if not t.is_blank and t.index > index_bound]
        if over:
            return False, f"index {over[0]} exceeds bound {index_bound}"
    return True, "valid"


@dataclass(frozen=True)
class QuantumGaussWord:
    """Fixed-length word of Gauss tokens and blanks with index bound N (None = unbounded)"""
    tokens: Tuple[GaussToken, ...]
    index_bound: Optional[int] = None

    family = MotifFamily.GAUSS

    @classmethod
    def parse(cls, text: str, index_bound: Optional[int] = None, length: Optional[int] = None) -> 'QuantumGaussWord':
        word = cls(tuple(parse_gauss(text)), index_bound)
        if length is not None:
            word = pad_word(word, length)
        ok, reason = word.validate()
        if not ok:
            raise GaussFormatError(reason)
        return word

    @property
    def length(self) -> int:
        return len(self.tokens)

    def indices(self) -> List[int]:
        return sorted({t.index for t in self.tokens if not t.is_blank})

    def validate(self) -> Tuple[bool, str]:
        return validate_word(self.tokens, self.index_bound)

    def encode(self) -> bytes:
        flat = []
        for t in self.tokens:
            flat.extend((_KIND_CODE[t.kind], t.index or 0, t.sign or 0))
        bound = -1 if self.index_bound is None else self.index_bound
        return pack_fields(pack_ints([bound]), pack_ints(flat))

    @classmethod
    def decode(cls, payload: bytes) -> 'QuantumGaussWord':
        bound_field, body = unpack_fields(payload)
        bound = unpack_ints(bound_field)[0]
        flat = unpack_ints(body)
        tokens = []
        for n in range(0, len(flat), 3):
            kind = _CODE_KIND[flat[n]]
            tokens.append(BLANK if kind is TokenKind.BLANK else GaussToken(kind, flat[n + 1], flat[n + 2]))
        return cls(tuple(tokens), None if bound < 0 else bound)

    def with_tokens(self, tokens: Sequence[GaussToken]) -> 'QuantumGaussWord':
        return QuantumGaussWord(tuple(tokens), self.index_bound)

    def __str__(self):
        return format_gauss(self.tokens)


class MoveRule(Enum):
    R1 = "r1"
    R2 = "r2"
    R3 = "r3"
    BLANK_SWAP = "blankSwap"
    CYCLIC = "cyclic"
    INDEX_PERM = "indexPerm"


@dataclass(frozen=True)
class MoveInstance:
    """A rule at positions, with the indices it removes or introduces"""
    rule: MoveRule
    positions: Tuple[int, ...]
    direction: str = "forward"
    fresh: Tuple[int, ...] = ()
    variant: str = ""

    def to_json(self) -> Dict:
        record = {"rule": self.rule.value, "positions": list(self.positions), "direction": self.direction}
        if self.fresh:
            record["freshIndices"] = list(self.fresh)
        if self.variant:
            record["variant"] = self.variant
        return record


def _sign_char(sign: int) -> str:
    return "+" if sign > 0 else "-"


def _unused_indices(w: QuantumGaussWord, count: int) -> List[int]:
    used = set(w.indices())
    found = []
    candidate = 1
    while len(found) < count:
        if w.index_bound is not None and candidate > w.index_bound:
            break
        if candidate not in used:
            found.append(candidate)
        candidate += 1
    return found


def _check_fresh(w: QuantumGaussWord, indices: Sequence[int]):
    used = set(w.indices())
    for i in indices:
        if i < 1 or i in used:
            raise MoveError(f"index {i} is not new")
        if w.index_bound is not None and i > w.index_bound:
            raise MoveError(f"index {i} exceeds bound {w.index_bound}")
    if len(set(indices)) != len(indices):
        raise MoveError("fresh indices must be distinct")


def _pair_in_range(w: QuantumGaussWord, pos: int):
    if not 0 <= pos < w.length - 1:
        raise MoveError(f"position {pos} leaves no adjacent pair in a word of length {w.length}")


# --- move 1 ---------------------------------------------------------------

def apply_r1(w: QuantumGaussWord, pos: int, direction: str = "forward", fresh_index: Optional[int] = None,
             first_kind: str = "o", sign: int = 1) -> QuantumGaussWord:
    """
    Forward: adjacent o/u pair of one index with one sign becomes two blanks.
    Reverse: two blanks become (first_kind)(fresh)(sign) followed by its partner.
    """
    _pair_in_range(w, pos)
    tokens = list(w.tokens)
    first, second = tokens[pos], tokens[pos + 1]
    if direction == "forward":
        if first.is_blank or second.is_blank or first.index != second.index or first.kind is second.kind:
            raise MoveError(f"r1 needs an adjacent o/u pair of one index at {pos}")
        tokens[pos] = tokens[pos + 1] = BLANK
        return w.with_tokens(tokens)
    if not (first.is_blank and second.is_blank):
        raise MoveError(f"r1 reverse needs two blanks at {pos}")
    if fresh_index is None:
        raise MoveError("r1 reverse needs a fresh index")
    _check_fresh(w, [fresh_index])
    if sign not in (1, -1) or first_kind not in ("o", "u"):
        raise MoveError(f"bad r1 variant {first_kind}{_sign_char(sign)}")
    kind = TokenKind(first_kind)
    other = TokenKind.UNDER if kind is TokenKind.OVER else TokenKind.OVER
    tokens[pos] = GaussToken(kind, fresh_index, sign)
    tokens[pos + 1] = GaussToken(other, fresh_index, sign)
    return w.with_tokens(tokens)


# --- move 2 ---------------------------------------------------------------

def apply_r2(w: QuantumGaussWord, positions: Tuple[int, int], direction: str = "forward",
             fresh_indices: Optional[Tuple[int, int]] = None, first_sign: int = 1,
             u_swapped: bool = False) -> QuantumGaussWord:
    """
    Forward: oi oj at p, p+1 with opposite signs and ui uj (either order) at
    q, q+1 become four blanks. Reverse: four blanks become oi(s) oj(-s) and the
    u pair, in order unless u_swapped.
    """
    p, q = positions
    _pair_in_range(w, p)
    _pair_in_range(w, q)
    if q < p + 2:
        raise MoveError(f"r2 pairs at {p} and {q} overlap or are out of order")
    tokens = list(w.tokens)
    o_pair, u_pair = tokens[p:p + 2], tokens[q:q + 2]
    if direction == "forward":
        if any(t.is_blank or t.kind is not TokenKind.OVER for t in o_pair):
            raise MoveError(f"r2 needs two o tokens at {p}")
        i, j = o_pair[0].index, o_pair[1].index
        if i == j:
            raise MoveError("r2 needs distinct indices")
        if o_pair[0].sign == o_pair[1].sign:
            raise MoveError("r2 needs opposite signs on the o pair")
        if any(t.is_blank or t.kind is not TokenKind.UNDER for t in u_pair) or {t.index for t in u_pair} != {i, j}:
            raise MoveError(f"r2 needs the u tokens of {i} and {j} at {q}")
        tokens[p] = tokens[p + 1] = tokens[q] = tokens[q + 1] = BLANK
        return w.with_tokens(tokens)
    if not all(t.is_blank for t in o_pair + u_pair):
        raise MoveError(f"r2 reverse needs blanks at {p}, {p + 1}, {q}, {q + 1}")
    if fresh_indices is None:
        raise MoveError("r2 reverse needs two fresh indices")
    _check_fresh(w, list(fresh_indices))
    i, j = fresh_indices
    tokens[p] = GaussToken(TokenKind.OVER, i, first_sign)
    tokens[p + 1] = GaussToken(TokenKind.OVER, j, -first_sign)
    ui, uj = GaussToken(TokenKind.UNDER, i, first_sign), GaussToken(TokenKind.UNDER, j, -first_sign)
    tokens[q], tokens[q + 1] = (uj, ui) if u_swapped else (ui, uj)
    return w.with_tokens(tokens)


# --- move 3 ---------------------------------------------------------------

@dataclass(frozen=True)
class R3Variant:
    """Six (kind, role, sign) slots for the three adjacent pairs"""
    name: str
    slots: Tuple[Tuple[str, str, int], ...]

    def reverse_slots(self) -> Tuple[Tuple[str, str, int], ...]:
        s = self.slots
        return (s[1], s[0], s[3], s[2], s[5], s[4])


def load_r3_variants(source: Union[str, Path, None] = None) -> List[R3Variant]:
    """Read the r3 variant table; defaults to the shipped one"""
    path = Path(source) if source is not None else knot_settings.data_path("gauss_r3_variants.json")
    try:
        data = json.loads(path.read_text())
    except OSError as exc:
        raise ValidationError(f"cannot read r3 variants {path}: {exc.strerror}")
    except json.JSONDecodeError as exc:
        raise ValidationError(f"r3 variants: {exc.msg}")
    variants = []
    for entry in data.get("variants", []):
        slots = []
        for item in entry.get("forward", []):
            if len(item) != 3 or item[0] not in ("o", "u") or item[2] not in ("+", "-"):
                raise ValidationError(f"r3 variant {entry.get('name')}: bad slot {item!r}")
            slots.append((item[0], str(item[1]), 1 if item[2] == "+" else -1))
        if len(slots) != 6 or len({s[1] for s in slots}) != 3:
            raise ValidationError(f"r3 variant {entry.get('name')}: needs six slots over three roles")
        variants.append(R3Variant(entry.get("name", f"r3-{len(variants)}"), tuple(slots)))
    return variants


_DEFAULT_R3: List[R3Variant] = []


def default_r3_variants() -> List[R3Variant]:
    if not _DEFAULT_R3:
        _DEFAULT_R3.extend(load_r3_variants())
    return _DEFAULT_R3


def _match_slots(tokens: Sequence[GaussToken], slots) -> bool:
    binding: Dict[str, int] = {}
    for token, (kind, role, sign) in zip(tokens, slots):
        if token.is_blank or token.kind.value != kind or token.sign != sign:
            return False
        if binding.setdefault(role, token.index) != token.index:
            return False
    return len(set(binding.values())) == len(binding)


def r3_variant_at(w: QuantumGaussWord, positions: Tuple[int, int, int],
                  variants: Optional[Sequence[R3Variant]] = None) -> Optional[str]:
    p, q, r = positions
    if not (0 <= p and q >= p + 2 and r >= q + 2 and r + 1 < w.length):
        return None
    six = [w.tokens[x] for x in (p, p + 1, q, q + 1, r, r + 1)]
    for variant in variants if variants is not None else default_r3_variants():
        if _match_slots(six, variant.slots):
            return variant.name
        if _match_slots(six, variant.reverse_slots()):
            return f"{variant.name}^-1"
    return None


def apply_r3(w: QuantumGaussWord, positions: Tuple[int, int, int],
             variants: Optional[Sequence[R3Variant]] = None) -> QuantumGaussWord:
    """Swap each of the three adjacent pairs when they match an r3 variant"""
    if r3_variant_at(w, positions, variants) is None:
        raise MoveError(f"no r3 pattern at pairs {list(positions)}")
    tokens = list(w.tokens)
    for x in positions:
        tokens[x], tokens[x + 1] = tokens[x + 1], tokens[x]
    return w.with_tokens(tokens)


# --- move 4 and index permutations ------------------------------------------

def apply_blank_swap(w: QuantumGaussWord, pos: int) -> QuantumGaussWord:
    _pair_in_range(w, pos)
    first, second = w.tokens[pos], w.tokens[pos + 1]
    if first.is_blank == second.is_blank:
        raise MoveError(f"blank swap needs exactly one blank at {pos}")
    tokens = list(w.tokens)
    tokens[pos], tokens[pos + 1] = second, first
    return w.with_tokens(tokens)


def apply_cyclic(w: QuantumGaussWord, inverse: bool = False) -> QuantumGaussWord:
    """Last factor to the front, or first to the back when inverse"""
    if w.length == 0:
        return w
    tokens = w.tokens[1:] + w.tokens[:1] if inverse else w.tokens[-1:] + w.tokens[:-1]
    return w.with_tokens(tokens)


def apply_cyclic_prefix(w: QuantumGaussWord, k: int, inverse: bool = False) -> QuantumGaussWord:
    """Cyclic permutation of the first k factors; every later factor must be blank"""
    if not 0 < k <= w.length:
        raise MoveError(f"prefix length {k} outside 1..{w.length}")
    if any(not t.is_blank for t in w.tokens[k:]):
        raise MoveError(f"factors after position {k} are not all blank")
    head = w.with_tokens(w.tokens[:k])
    return w.with_tokens(apply_cyclic(head, inverse).tokens + w.tokens[k:])


def pad_word(w: QuantumGaussWord, length: int) -> QuantumGaussWord:
    if length < w.length:
        raise ValidationError(f"cannot pad a word of length {w.length} to {length}")
    return w.with_tokens(w.tokens + (BLANK,) * (length - w.length))


def permute_indices(w: QuantumGaussWord, sigma: Mapping[int, int]) -> QuantumGaussWord:
    """
    Relabel every index i as sigma[i].

    Raises:
        ValidationError: sigma is not a bijection covering the word's indices
    """
    keys, values = set(sigma), set(sigma.values())
    if len(values) != len(sigma) or keys != values:
        raise ValidationError("index permutation is not a bijection")
    if w.index_bound is not None and any(not 1 <= i <= w.index_bound for i in keys):
        raise ValidationError(f"index permutation leaves 1..{w.index_bound}")
    missing = [i for i in w.indices() if i not in sigma]
    if missing:
        raise ValidationError(f"index permutation does not cover index {missing[0]}")
    return w.with_tokens(tuple(t.with_index(sigma[t.index]) if not t.is_blank else t for t in w.tokens))


def canonical_relabel(w: QuantumGaussWord) -> QuantumGaussWord:
    """Number indices by first appearance"""
    order: Dict[int, int] = {}
    for t in w.tokens:
        if not t.is_blank and t.index not in order:
            order[t.index] = len(order) + 1
    return w.with_tokens(tuple(t if t.is_blank else t.with_index(order[t.index]) for t in w.tokens))


# --- neighbourhood and search -------------------------------------------------

def _raw_neighbors(w: QuantumGaussWord, variants: Optional[Sequence[R3Variant]]):
    M = w.length
    for pos in range(M - 1):
        first, second = w.tokens[pos], w.tokens[pos + 1]
        if not first.is_blank and not second.is_blank and first.index == second.index:
            yield (MoveInstance(MoveRule.R1, (pos,), "forward", (first.index,),
                                f"{first.kind.value}{_sign_char(first.sign)}"), apply_r1(w, pos))
        if first.is_blank and second.is_blank:
            fresh = _unused_indices(w, 1)
            if fresh:
                for kind in ("o", "u"):
                    for sign in (1, -1):
                        yield (MoveInstance(MoveRule.R1, (pos,), "reverse", (fresh[0],), f"{kind}{_sign_char(sign)}"),
                               apply_r1(w, pos, "reverse", fresh[0], kind, sign))
        if first.is_blank != second.is_blank:
            yield MoveInstance(MoveRule.BLANK_SWAP, (pos,)), apply_blank_swap(w, pos)

    for p in range(M - 1):
        for q in range(p + 2, M - 1):
            o_pair, u_pair = w.tokens[p:p + 2], w.tokens[q:q + 2]
            if all(t.is_blank for t in o_pair + u_pair):
                fresh = _unused_indices(w, 2)
                if len(fresh) == 2:
                    for first_sign in (1, -1):
                        for swapped in (False, True):
                            variant = f"{_sign_char(first_sign)}{'x' if swapped else ''}"
                            yield (MoveInstance(MoveRule.R2, (p, q), "reverse", tuple(fresh), variant),
                                   apply_r2(w, (p, q), "reverse", tuple(fresh), first_sign, swapped))
            elif all(not t.is_blank and t.kind is TokenKind.OVER for t in o_pair):
                try:
                    image = apply_r2(w, (p, q))
                except MoveError:
                    continue
                variant = f"{_sign_char(o_pair[0].sign)}{'' if u_pair[0].index == o_pair[0].index else 'x'}"
                yield MoveInstance(MoveRule.R2, (p, q), "forward", (o_pair[0].index, o_pair[1].index), variant), image

    for p in range(M - 1):
        for q in range(p + 2, M - 1):
            for r in range(q + 2, M - 1):
                name = r3_variant_at(w, (p, q, r), variants)
                if name is not None:
                    yield MoveInstance(MoveRule.R3, (p, q, r), "forward", (), name), apply_r3(w, (p, q, r), variants)

    if M:
        yield MoveInstance(MoveRule.CYCLIC, (), "forward"), apply_cyclic(w)
        yield MoveInstance(MoveRule.CYCLIC, (), "reverse"), apply_cyclic(w, inverse=True)


def neighbors(w: QuantumGaussWord, variants: Optional[Sequence[R3Variant]] = None
              ) -> List[Tuple[MoveInstance, QuantumGaussWord]]:
    """All index-canonical words one move away, first instance kept per word"""
    seen: Dict[QuantumGaussWord, MoveInstance] = {}
    for instance, image in _raw_neighbors(w, variants):
        image = canonical_relabel(image)
        if image not in seen:
            seen[image] = instance
    return [(instance, image) for image, instance in seen.items()]


@dataclass
class EquivalenceAnswer:
    """witness, unknown or distinct-within-bound"""
    status: SearchStatus
    path: List[Tuple[MoveInstance, QuantumGaussWord]] = field(default_factory=list)
    explored: int = 0

    @property
    def verdict(self) -> str:
        return "witness" if self.status is SearchStatus.FOUND else self.status.value

    def to_json(self) -> Dict:
        return {"verdict": self.verdict, "explored": self.explored,
                "path": [{**m.to_json(), "word": str(w)} for m, w in self.path]}


def verify_path(start: QuantumGaussWord, path: Sequence[Tuple[MoveInstance, QuantumGaussWord]],
                variants: Optional[Sequence[R3Variant]] = None) -> bool:
    current = canonical_relabel(start)
    for _, word in path:
        if word not in {image for _, image in neighbors(current, variants)}:
            return False
        current = word
    return True


def bounded_equivalence(first: QuantumGaussWord, second: QuantumGaussWord,
                        limits: Optional[SearchLimits] = None,
                        variants: Optional[Sequence[R3Variant]] = None) -> EquivalenceAnswer:
    """
    Bidirectional search over index-canonical words.

    Raises:
        ValidationError: words of different length or index bound
    """
    if first.length != second.length or first.index_bound != second.index_bound:
        raise ValidationError(f"word dimensions differ: M={first.length}/{second.length}, "
                              f"N={first.index_bound}/{second.index_bound}")
    for w in (first, second):
        ok, reason = w.validate()
        if not ok:
            raise ValidationError(reason)
    limits = limits or knot_settings.current_limits()
    start, goal = canonical_relabel(first), canonical_relabel(second)
    result = bidirectional_search(start, goal, lambda w: neighbors(w, variants), limits)
    if result.found and not verify_path(start, result.path, variants):
        raise ValidationError("search produced an invalid witness")
    logger.info(f"Gauss search {result.status.value} after {result.explored} states")
    return EquivalenceAnswer(result.status, result.path, result.explored)


def _named_r3_variants(name: str, variants: Optional[Sequence[R3Variant]]) -> List[R3Variant]:
    table = list(variants) if variants is not None else default_r3_variants()
    if not name:
        return table
    base = name[:-3] if name.endswith("^-1") else name
    chosen = [v for v in table if v.name == base]
    if not chosen:
        raise ValidationError(f"unknown r3 variant {name!r}")
    return chosen


def gauss_unitary(instance: MoveInstance, length: int, index_bound: Optional[int] = None,
                  variants: Optional[Sequence[R3Variant]] = None) -> PermutationUnitary:
    """
    A move placement as basis transpositions on Gauss kets of one length.

    r1 and r2 placements pair the blank block with the fixed-index pattern
    recorded in the instance; r3 acts only through the variant it names.
    Other rules are involutions or cyclic shifts.
    """
    rule = instance.rule
    r3_table = _named_r3_variants(instance.variant, variants) if rule is MoveRule.R3 else None

    def decode(ket: BasisKet) -> Optional[QuantumGaussWord]:
        w = QuantumGaussWord.decode(ket.payload)
        return w if (w.length == length and w.index_bound == index_bound) else None

    def encode(w: QuantumGaussWord) -> BasisKet:
        return BasisKet(MotifFamily.GAUSS, w.encode())

    def swap(ket: BasisKet) -> Optional[BasisKet]:
        w = decode(ket)
        if w is None:
            return None
        try:
            if rule is MoveRule.R1:
                kind, sign = instance.variant[0], 1 if instance.variant[1] == "+" else -1
                pos, index = instance.positions[0], instance.fresh[0]
                pair = w.tokens[pos:pos + 2]
                if all(t.is_blank for t in pair):
                    return encode(apply_r1(w, pos, "reverse", index, kind, sign))
                if pair[0].index == index and pair[0].kind.value == kind and pair[0].sign == sign:
                    return encode(apply_r1(w, pos))
            elif rule is MoveRule.R2:
                p, q = instance.positions
                first_sign = 1 if instance.variant[0] == "+" else -1
                swapped = instance.variant.endswith("x")
                if all(t.is_blank for t in w.tokens[p:p + 2] + w.tokens[q:q + 2]):
                    return encode(apply_r2(w, (p, q), "reverse", instance.fresh, first_sign, swapped))
                expected = apply_r2(pad_word(w.with_tokens(()), length), (p, q), "reverse",
                                    instance.fresh, first_sign, swapped)
                if all(w.tokens[x] == expected.tokens[x] for x in (p, p + 1, q, q + 1)):
                    return encode(apply_r2(w, (p, q)))
            elif rule is MoveRule.R3:
                return encode(apply_r3(w, instance.positions, r3_table))
            elif rule is MoveRule.BLANK_SWAP:
                return encode(apply_blank_swap(w, instance.positions[0]))
        except MoveError:
            return ket
        return ket

    if rule is MoveRule.CYCLIC:
        backwards = instance.direction == "reverse"

        def shift(ket: BasisKet) -> Optional[BasisKet]:
            w = decode(ket)
            return None if w is None else encode(apply_cyclic(w, backwards))

        def unshift(ket: BasisKet) -> Optional[BasisKet]:
            w = decode(ket)
            return None if w is None else encode(apply_cyclic(w, not backwards))

        return PermutationUnitary(MotifFamily.GAUSS, shift, unshift, f"cyclic-{instance.direction}")
    return PermutationUnitary(MotifFamily.GAUSS, swap, swap, f"{rule.value}@{list(instance.positions)}")


def gauss_ket(w: QuantumGaussWord) -> BasisKet:
    ok, reason = w.validate()
    if not ok:
        raise GaussFormatError(reason)
    return BasisKet(MotifFamily.GAUSS, w.encode())
