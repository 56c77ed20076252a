#!/usr/bin/env python3
"""
Quantization substrate for the knot toolkit
Provides exact Laurent polynomials, basis kets for the motif families, sparse state
vectors, permutation and diagonal unitaries, and the bounded searches that every
move family shares.
"""

import cmath
import json
import logging
import struct
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from types import MappingProxyType
from typing import Any, Callable, Dict, Hashable, Iterable, List, Mapping, Optional, Set, Tuple, Union

import numpy as np

logger = logging.getLogger(__name__)

UNIT_TOLERANCE = 1e-12  # |eigenvalue| - 1
EVAL_TOLERANCE = 1e-9


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------

class KnotQuantError(Exception):
    """Base class for toolkit errors"""


class ValidationError(KnotQuantError, ValueError):
    """Input failed a format or precondition check"""

    kind = "validation"

    def __init__(self, reason: str):
        super().__init__(reason)
        self.reason = reason


class PDFormatError(ValidationError):
    kind = "pd-format"


class GaussFormatError(ValidationError):
    kind = "gauss-format"


class MosaicFormatError(ValidationError):
    kind = "mosaic-format"


class MoveError(ValidationError):
    """A move was requested where its pattern does not hold"""
    kind = "move"


class FamilyMismatchError(ValidationError):
    kind = "family-mismatch"


class KetOutsideDomainError(ValidationError):
    kind = "outside-domain"

    def __init__(self, ket: 'BasisKet', unitary_name: str = ""):
        label = f" of {unitary_name}" if unitary_name else ""
        super().__init__(f"ket {ket.describe()} is outside the domain{label}")
        self.ket = ket


class CapExceededError(KnotQuantError):
    """An enumeration cap was exceeded"""

    kind = "cap-exceeded"

    def __init__(self, cap_name: str, cap: int, actual: int):
        super().__init__(f"{cap_name} cap is {cap}, input needs {actual}")
        self.cap_name = cap_name
        self.cap = cap
        self.actual = actual
        self.reason = str(self)


class ConventionError(KnotQuantError, AssertionError):
    """An identity that holds for every valid diagram failed"""
    kind = "convention"


# ---------------------------------------------------------------------------
# Laurent polynomials
# ---------------------------------------------------------------------------

class Variable(Enum):
    """Formal variable of a Laurent polynomial"""
    A = "A"
    Q = "q"
    T = "t"
    T_QUARTER = "tQuarter"  # exponent e stands for t^(e/4)


def _as_variable(tag: Union[str, Variable]) -> Variable:
    if isinstance(tag, Variable):
        return tag
    try:
        return Variable(tag)
    except ValueError:
        raise ValidationError(f"unknown polynomial variable {tag!r}")


class LaurentPolynomial:
    """
    Exact integer Laurent polynomial in one formal variable.

    Values are immutable; arithmetic returns new polynomials. Zero coefficients
    are never stored, so two polynomials are equal exactly when their variables
    and term sets agree.
    """

    __slots__ = ('_variable', '_terms', '_hash')

    def __init__(self, terms: Optional[Mapping[int, int]] = None, variable: Union[str, Variable] = Variable.A):
        clean: Dict[int, int] = {}
        for exponent, coeff in (terms or {}).items():
            if int(exponent) != exponent or int(coeff) != coeff:
                raise ValidationError(f"non-integer term {exponent}:{coeff}")
            exponent, coeff = int(exponent), int(coeff)
            total = clean.get(exponent, 0) + coeff
            if total:
                clean[exponent] = total
            else:
                clean.pop(exponent, None)
        self._variable = _as_variable(variable)
        self._terms = MappingProxyType(dict(sorted(clean.items())))
        self._hash = None

    # construction -------------------------------------------------------

    @classmethod
    def monomial(cls, exponent: int, coeff: int = 1, variable: Union[str, Variable] = Variable.A) -> 'LaurentPolynomial':
        return cls({exponent: coeff}, variable)

    @classmethod
    def constant(cls, value: int, variable: Union[str, Variable] = Variable.A) -> 'LaurentPolynomial':
        return cls({0: value}, variable)

    @classmethod
    def zero(cls, variable: Union[str, Variable] = Variable.A) -> 'LaurentPolynomial':
        return cls({}, variable)

    # access --------------------------------------------------------------

    @property
    def variable(self) -> Variable:
        return self._variable

    @property
    def terms(self) -> Mapping[int, int]:
        return self._terms

    def is_zero(self) -> bool:
        return not self._terms

    def coefficient(self, exponent: int) -> int:
        return self._terms.get(exponent, 0)

    def min_exponent(self) -> int:
        return next(iter(self._terms)) if self._terms else 0

    def max_exponent(self) -> int:
        return next(reversed(self._terms)) if self._terms else 0

    def degree_span(self) -> int:
        return self.max_exponent() - self.min_exponent() if self._terms else 0

    # arithmetic ------------------------------------------------------------

    def _coerce(self, other: Any) -> 'LaurentPolynomial':
        if isinstance(other, LaurentPolynomial):
            if other._variable is not self._variable:
                raise ValidationError(
                    f"cannot combine polynomials in {self._variable.value} and {other._variable.value}")
            return other
        if isinstance(other, (int, np.integer)) and not isinstance(other, bool):
            return LaurentPolynomial.constant(int(other), self._variable)
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        merged = dict(self._terms)
        for e, c in other._terms.items():
            merged[e] = merged.get(e, 0) + c
        return LaurentPolynomial(merged, self._variable)

    __radd__ = __add__

    def __neg__(self):
        return LaurentPolynomial({e: -c for e, c in self._terms.items()}, self._variable)

    def __sub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return self + (-other)

    def __rsub__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        return other + (-self)

    def __mul__(self, other):
        other = self._coerce(other)
        if other is NotImplemented:
            return other
        product: Dict[int, int] = {}
        for e1, c1 in self._terms.items():
            for e2, c2 in other._terms.items():
                product[e1 + e2] = product.get(e1 + e2, 0) + c1 * c2
        return LaurentPolynomial(product, self._variable)

    __rmul__ = __mul__

    def __pow__(self, power: int):
        if not isinstance(power, int):
            return NotImplemented
        if power < 0:
            if len(self._terms) != 1 or abs(next(iter(self._terms.values()))) != 1:
                raise ValidationError("only unit monomials have Laurent inverses")
            (e, c), = self._terms.items()
            return LaurentPolynomial({-e * -power: c ** -power}, self._variable)
        result = LaurentPolynomial.constant(1, self._variable)
        base = self
        while power:
            if power & 1:
                result = result * base
            base = base * base
            power >>= 1
        return result

    def shift(self, offset: int) -> 'LaurentPolynomial':
        """Multiply by variable^offset"""
        return LaurentPolynomial({e + offset: c for e, c in self._terms.items()}, self._variable)

    def invert_variable(self) -> 'LaurentPolynomial':
        """Substitute the variable by its inverse"""
        return LaurentPolynomial({-e: c for e, c in self._terms.items()}, self._variable)

    def conjugate(self) -> 'LaurentPolynomial':
        """Complex conjugate for a variable on the unit circle"""
        return self.invert_variable()

    def exact_divide(self, divisor: 'LaurentPolynomial') -> 'LaurentPolynomial':
        """
        Quotient of an exact division in the Laurent ring.

        Raises:
            ValidationError: if divisor is zero or does not divide self
        """
        divisor = self._coerce(divisor)
        if divisor is NotImplemented or divisor.is_zero():
            raise ValidationError("division by zero polynomial")
        if self.is_zero():
            return LaurentPolynomial.zero(self._variable)
        lead_e, lead_c = divisor.max_exponent(), divisor.coefficient(divisor.max_exponent())
        floor = self.min_exponent() - divisor.min_exponent()
        quotient: Dict[int, int] = {}
        remainder = self
        while not remainder.is_zero():
            top = remainder.max_exponent()
            top_c = remainder.coefficient(top)
            q_exp = top - lead_e
            if q_exp < floor or top_c % lead_c:
                raise ValidationError(f"{divisor} does not divide {self}")
            term = LaurentPolynomial.monomial(q_exp, top_c // lead_c, self._variable)
            quotient[q_exp] = quotient.get(q_exp, 0) + top_c // lead_c
            remainder = remainder - term * divisor
        return LaurentPolynomial(quotient, self._variable)

    # comparison -----------------------------------------------------------

    def __eq__(self, other):
        if isinstance(other, LaurentPolynomial):
            return self._variable is other._variable and dict(self._terms) == dict(other._terms)
        if isinstance(other, (int, np.integer)) and not isinstance(other, bool):
            return dict(self._terms) == ({0: int(other)} if other else {})
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self._variable, tuple(self._terms.items())))
        return self._hash

    # formatting -----------------------------------------------------------

    def to_json(self) -> Dict[str, Any]:
        return {"var": self._variable.value, "terms": [[e, c] for e, c in self._terms.items()]}

    @classmethod
    def from_json(cls, data: Union[str, Mapping[str, Any]]) -> 'LaurentPolynomial':
        if isinstance(data, str):
            try:
                data = json.loads(data)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"polynomial JSON: {exc.msg}")
        if not isinstance(data, Mapping) or set(data) != {"var", "terms"}:
            raise ValidationError('polynomial JSON needs exactly "var" and "terms"')
        terms: Dict[int, int] = {}
        previous = None
        for item in data["terms"]:
            if not isinstance(item, list) or len(item) != 2 or not all(isinstance(x, int) for x in item):
                raise ValidationError(f"bad polynomial term {item!r}")
            exponent, coeff = item
            if previous is not None and exponent <= previous:
                raise ValidationError("polynomial terms must be sorted by ascending exponent")
            if coeff == 0:
                raise ValidationError(f"zero coefficient stored at exponent {exponent}")
            previous = exponent
            terms[exponent] = coeff
        return cls(terms, data["var"])

    def __str__(self):
        if self.is_zero():
            return "0"
        symbol = "t" if self._variable is Variable.T_QUARTER else self._variable.value
        pieces = []
        for e, c in self._terms.items():
            if self._variable is Variable.T_QUARTER and e % 4:
                power = f"{symbol}^({e}/4)"
            else:
                exp = e // 4 if self._variable is Variable.T_QUARTER else e
                power = "" if exp == 0 else (symbol if exp == 1 else f"{symbol}^{exp}")
            magnitude = abs(c)
            body = power if (magnitude == 1 and power) else (f"{magnitude}{power}" if power else f"{magnitude}")
            sign = "-" if c < 0 else "+"
            pieces.append((sign, body))
        text = ("-" if pieces[0][0] == "-" else "") + pieces[0][1]
        for sign, body in pieces[1:]:
            text += f" {sign} {body}"
        return text

    def __repr__(self):
        return f"LaurentPolynomial({self._variable.value}: {self})"


def delta_A() -> LaurentPolynomial:
    """Loop value -A^2 - A^-2"""
    return LaurentPolynomial({2: -1, -2: -1}, Variable.A)


def delta_q() -> LaurentPolynomial:
    """Loop value q + q^-1"""
    return LaurentPolynomial({1: 1, -1: 1}, Variable.Q)


def laurent_eval(p: LaurentPolynomial, z: complex) -> complex:
    """Evaluate p at a nonzero complex point using integer powers"""
    z = complex(z)
    if z == 0:
        if p.min_exponent() < 0:
            raise ValidationError("cannot evaluate negative exponents at 0")
        return complex(p.coefficient(0))
    total = 0j
    for e, c in p.terms.items():
        total += c * z ** e
    return total


def laurent_eval_many(p: LaurentPolynomial, points: Iterable[complex]) -> np.ndarray:
    """Vectorised evaluation over an array of nonzero points"""
    zs = np.asarray(list(points), dtype=complex)
    if np.any(zs == 0) and p.min_exponent() < 0:
        raise ValidationError("cannot evaluate negative exponents at 0")
    values = np.zeros(zs.shape, dtype=complex)
    for e, c in p.terms.items():
        values += c * zs ** e
    return values


def _to_A(p: LaurentPolynomial) -> LaurentPolynomial:
    var = p.variable
    if var is Variable.A:
        return p
    if var is Variable.Q:
        # q = -A^-2
        return LaurentPolynomial({-2 * k: c * (-1) ** (k % 2) for k, c in p.terms.items()}, Variable.A)
    if var is Variable.T_QUARTER:
        return LaurentPolynomial({-e: c for e, c in p.terms.items()}, Variable.A)
    return LaurentPolynomial({-4 * e: c for e, c in p.terms.items()}, Variable.A)


def laurent_convert(p: LaurentPolynomial, source: Union[str, Variable], target: Union[str, Variable],
                    strict: bool = True) -> LaurentPolynomial:
    """
    Change of variables between the bracket and Jones forms.

    A^2 maps to -q^-1 and A maps to t^(-1/4). Conversions go through A.

    Args:
        p: polynomial in the source variable
        source: declared variable of p
        target: requested variable
        strict: when False, a t target that needs fractional powers stays in tQuarter

    Returns:
        the converted polynomial

    Raises:
        ValidationError: variable mismatch or an exponent not divisible as required
    """
    source, target = _as_variable(source), _as_variable(target)
    if p.variable is not source:
        raise ValidationError(f"polynomial is in {p.variable.value}, not {source.value}")
    if source is target:
        return p
    a_form = _to_A(p)
    if target is Variable.A:
        return a_form
    if target is Variable.Q:
        odd = [e for e in a_form.terms if e % 2]
        if odd:
            raise ValidationError(f"A-exponent {odd[0]} is odd; A^2 -> -q^-1 needs even exponents")
        return LaurentPolynomial({-e // 2: c * (-1) ** ((e // 2) % 2) for e, c in a_form.terms.items()}, Variable.Q)
    quarter = LaurentPolynomial({-e: c for e, c in a_form.terms.items()}, Variable.T_QUARTER)
    if target is Variable.T_QUARTER:
        return quarter
    bad = [e for e in quarter.terms if e % 4]
    if bad:
        if strict:
            raise ValidationError(f"t-exponent {bad[0]}/4 is not an integer")
        return quarter
    return LaurentPolynomial({e // 4: c for e, c in quarter.terms.items()}, Variable.T)


# ---------------------------------------------------------------------------
# Basis kets and state vectors
# ---------------------------------------------------------------------------

class MotifFamily(Enum):
    """Motif families that carry a quantization"""
    MOSAIC = "mosaic"
    GAUSS = "gauss"
    GRAPH = "graph"
    WORD = "word"
    ENHANCED_STATE = "enhanced-state"
    TEST = "test"  # bare labelled kets for unit tests and examples


class Carrier(Enum):
    """Amplitude carrier of a state vector"""
    COMPLEX = "complex"
    EXACT = "exact"  # LaurentPolynomial in q


def pack_fields(*fields: bytes) -> bytes:
    """Length-prefixed concatenation, injective over field tuples"""
    return b"".join(struct.pack(">I", len(f)) + f for f in fields)


def pack_ints(values: Iterable[int]) -> bytes:
    values = list(values)
    return struct.pack(f">{len(values)}q", *values)


def unpack_fields(payload: bytes) -> List[bytes]:
    fields = []
    offset = 0
    while offset < len(payload):
        (size,) = struct.unpack_from(">I", payload, offset)
        offset += 4
        fields.append(payload[offset:offset + size])
        offset += size
    return fields


def unpack_ints(data: bytes) -> List[int]:
    return list(struct.unpack(f">{len(data) // 8}q", data))


@dataclass(frozen=True)
class BasisKet:
    """Basis vector |K> for a motif K in its canonical byte encoding"""
    family: MotifFamily
    payload: bytes

    @property
    def sort_key(self) -> Tuple[str, bytes]:
        return (self.family.value, self.payload)

    def __lt__(self, other: 'BasisKet') -> bool:
        return self.sort_key < other.sort_key

    def describe(self) -> str:
        return f"{self.family.value}:{self.payload.hex()[:32]}"


def label_ket(label: str) -> BasisKet:
    """Test-family ket named by a string"""
    return BasisKet(MotifFamily.TEST, label.encode("utf-8"))


@dataclass(frozen=True)
class StateVector:
    """Finite-support vector over basis kets of a single family"""
    family: MotifFamily
    amplitudes: Mapping[BasisKet, Any] = field(default_factory=dict)
    carrier: Carrier = Carrier.COMPLEX

    def __post_init__(self):
        clean: Dict[BasisKet, Any] = {}
        for ket, amp in self.amplitudes.items():
            if ket.family is not self.family:
                raise FamilyMismatchError(f"{ket.family.value} ket in a {self.family.value} vector")
            if self.carrier is Carrier.EXACT:
                if isinstance(amp, int):
                    amp = LaurentPolynomial.constant(amp, Variable.Q)
                if not isinstance(amp, LaurentPolynomial) or amp.variable is not Variable.Q:
                    raise ValidationError("exact amplitudes are Laurent polynomials in q")
                if amp.is_zero():
                    continue
            else:
                amp = complex(amp)
                if amp == 0:
                    continue
            clean[ket] = amp
        object.__setattr__(self, "amplitudes", MappingProxyType(dict(sorted(clean.items(), key=lambda kv: kv[0].sort_key))))

    @property
    def support(self) -> List[BasisKet]:
        return list(self.amplitudes)

    def amplitude(self, ket: BasisKet):
        default = LaurentPolynomial.zero(Variable.Q) if self.carrier is Carrier.EXACT else 0j
        return self.amplitudes.get(ket, default)

    def __add__(self, other: 'StateVector') -> 'StateVector':
        _check_compatible(self, other)
        merged = dict(self.amplitudes)
        for ket, amp in other.amplitudes.items():
            merged[ket] = merged[ket] + amp if ket in merged else amp
        return StateVector(self.family, merged, self.carrier)

    def scale(self, factor) -> 'StateVector':
        return StateVector(self.family, {k: a * factor for k, a in self.amplitudes.items()}, self.carrier)

    def __len__(self):
        return len(self.amplitudes)


def _check_compatible(u: StateVector, v: StateVector):
    if u.family is not v.family:
        raise FamilyMismatchError(f"{u.family.value} vector against {v.family.value} vector")
    if u.carrier is not v.carrier:
        raise ValidationError(f"{u.carrier.value} carrier against {v.carrier.value} carrier")


def ket(motif: Any, carrier: Carrier = Carrier.COMPLEX) -> StateVector:
    """
    Unit vector |K> for a motif.

    The motif is either a BasisKet or an object exposing `family`, `validate()`
    returning (is_valid, reason) and `encode()` returning its canonical bytes.
    """
    if isinstance(motif, BasisKet):
        basis = motif
    else:
        is_valid, reason = motif.validate()
        if not is_valid:
            raise ValidationError(reason)
        basis = BasisKet(motif.family, motif.encode())
    one = LaurentPolynomial.constant(1, Variable.Q) if carrier is Carrier.EXACT else 1
    return StateVector(basis.family, {basis: one}, carrier)


def superpose(pairs: Iterable[Tuple[Any, Any]], carrier: Carrier = Carrier.COMPLEX) -> StateVector:
    """Linear combination of motifs; repeated motifs collect their amplitudes"""
    result: Optional[StateVector] = None
    for amplitude, motif in pairs:
        term = ket(motif, carrier).scale(amplitude)
        result = term if result is None else result + term
    if result is None:
        raise ValidationError("superpose needs at least one term")
    return result


def inner_product(u: StateVector, v: StateVector):
    """Hermitian inner product <u|v>, conjugate-linear in u"""
    _check_compatible(u, v)
    if u.carrier is Carrier.EXACT:
        total = LaurentPolynomial.zero(Variable.Q)
        for k, a in u.amplitudes.items():
            if k in v.amplitudes:
                total = total + a.conjugate() * v.amplitudes[k]
        return total
    return sum((a.conjugate() * v.amplitudes[k] for k, a in u.amplitudes.items() if k in v.amplitudes), 0j)


def norm(v: StateVector) -> float:
    if v.carrier is Carrier.EXACT:
        raise ValidationError("norm is defined on the complex carrier")
    return float(np.sqrt(sum(abs(a) ** 2 for a in v.amplitudes.values())))


# ---------------------------------------------------------------------------
# Unitaries and observables
# ---------------------------------------------------------------------------

KetMap = Callable[[BasisKet], Optional[BasisKet]]


@dataclass(frozen=True)
class PermutationUnitary:
    """
    Unitary induced by an injective partial map on basis kets.

    `forward` returns None outside the declared domain; `inverse` undoes it on
    the image.
    """
    family: MotifFamily
    forward: KetMap
    inverse: KetMap
    name: str = ""

    def image(self, basis: BasisKet) -> BasisKet:
        target = self.forward(basis) if basis.family is self.family else None
        if target is None:
            raise KetOutsideDomainError(basis, self.name)
        return target

    def inverted(self) -> 'PermutationUnitary':
        return PermutationUnitary(self.family, self.inverse, self.forward, f"{self.name}^-1")

    def check_inverse(self, kets: Iterable[BasisKet]) -> bool:
        """forward then inverse is the identity on the given domain kets"""
        return all(self.inverse(self.image(k)) == k for k in kets)

    @classmethod
    def identity(cls, family: MotifFamily) -> 'PermutationUnitary':
        same = lambda k: k
        return cls(family, same, same, "identity")

    @classmethod
    def from_mapping(cls, family: MotifFamily, mapping: Mapping[BasisKet, BasisKet],
                     name: str = "", identity_elsewhere: bool = False) -> 'PermutationUnitary':
        forward = dict(mapping)
        backward = {v: k for k, v in forward.items()}
        if len(backward) != len(forward):
            raise ValidationError(f"mapping {name!r} is not injective")
        if identity_elsewhere:
            return cls(family, lambda k: forward.get(k, k if k not in backward else None),
                       lambda k: backward.get(k, k if k not in forward else None), name)
        return cls(family, forward.get, backward.get, name)

    @classmethod
    def transpositions(cls, family: MotifFamily, pairs: Iterable[Tuple[BasisKet, BasisKet]],
                       name: str = "") -> 'PermutationUnitary':
        """Product of disjoint basis transpositions, identity elsewhere"""
        swap: Dict[BasisKet, BasisKet] = {}
        for a, b in pairs:
            if a in swap or b in swap:
                raise ValidationError(f"transpositions of {name!r} overlap")
            swap[a], swap[b] = b, a
        lookup = lambda k: swap.get(k, k)
        return cls(family, lookup, lookup, name)


def apply_permutation(unitary: PermutationUnitary, v: StateVector) -> StateVector:
    """Transport amplitudes along the forward map"""
    if unitary.family is not v.family:
        raise FamilyMismatchError(f"{unitary.family.value} unitary on {v.family.value} vector")
    moved = {unitary.image(k): a for k, a in v.amplitudes.items()}
    return StateVector(v.family, moved, v.carrier)


def compose(g: PermutationUnitary, h: PermutationUnitary) -> PermutationUnitary:
    """g after h"""
    if g.family is not h.family:
        raise FamilyMismatchError("composition across families")

    def forward(k):
        mid = h.forward(k)
        return None if mid is None else g.forward(mid)

    def inverse(k):
        mid = g.inverse(k)
        return None if mid is None else h.inverse(mid)

    return PermutationUnitary(g.family, forward, inverse, f"{g.name}*{h.name}")


@dataclass(frozen=True)
class DiagonalOperator:
    """Operator diagonal in the motif basis"""
    family: MotifFamily
    eigenvalue: Callable[[BasisKet], Any]
    name: str = ""

    def value(self, basis: BasisKet):
        return self.eigenvalue(basis)

    def apply(self, v: StateVector) -> StateVector:
        if v.family is not self.family:
            raise FamilyMismatchError(f"{self.family.value} operator on {v.family.value} vector")
        return StateVector(v.family, {k: self.value(k) * a for k, a in v.amplitudes.items()}, v.carrier)


@dataclass(frozen=True)
class DiagonalUnitary(DiagonalOperator):
    """Diagonal operator whose eigenvalues lie on the unit circle"""

    def value(self, basis: BasisKet):
        lam = self.eigenvalue(basis)
        if isinstance(lam, LaurentPolynomial):
            if len(lam.terms) != 1 or abs(next(iter(lam.terms.values()))) != 1:
                raise ValidationError(f"symbolic eigenvalue {lam} is not a unit monomial")
        elif abs(abs(lam) - 1.0) > UNIT_TOLERANCE:
            raise ValidationError(f"eigenvalue {lam} of {basis.describe()} is off the unit circle")
        return lam


def apply_diagonal(unitary: DiagonalOperator, v: StateVector) -> StateVector:
    return unitary.apply(v)


def characteristic_projector(family: MotifFamily, members: Iterable[BasisKet], name: str = "chi") -> DiagonalOperator:
    """Projector that keeps kets in the given orbit and kills the rest"""
    orbit = frozenset(members)
    return DiagonalOperator(family, lambda k: 1 if k in orbit else 0, name)


def observable_from_orbits(family: MotifFamily, classes: Iterable[Tuple[Iterable[BasisKet], Any]],
                         name: str = "O") -> DiagonalOperator:
    """
    Observable sum of value * projector over disjoint orbits.

    Kets outside every listed orbit are rejected when the observable is applied.
    """
    values: Dict[BasisKet, Any] = {}
    for members, value in classes:
        for member in members:
            if member in values and values[member] != value:
                raise ValidationError(f"ket {member.describe()} has two invariant values")
            values[member] = value

    def lookup(k):
        if k not in values:
            raise KetOutsideDomainError(k, name)
        return values[k]

    return DiagonalOperator(family, lookup, name)


def unit_circle_point(angle: float) -> complex:
    return cmath.exp(1j * angle)


# ---------------------------------------------------------------------------
# Bounded searches
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SearchLimits:
    """State and depth budget of a breadth-first search"""
    max_states: int = 200000
    max_depth: int = 64

    def __post_init__(self):
        if self.max_states < 1 or self.max_depth < 0:
            raise ValidationError(f"invalid search limits {self.max_states}/{self.max_depth}")


class SearchStatus(Enum):
    """Outcome of a bounded search"""
    COMPLETE = "complete"
    TRUNCATED = "truncated"
    FOUND = "found"
    DISTINCT_WITHIN_BOUND = "distinct-within-bound"
    UNKNOWN = "unknown"


NeighborFn = Callable[[Hashable], Iterable[Tuple[Any, Hashable]]]


@dataclass
class ClosureResult:
    """Breadth-first closure with parent links for witness paths"""
    status: SearchStatus
    start: Hashable
    parents: Dict[Hashable, Optional[Tuple[Hashable, Any]]] = field(default_factory=dict)
    depth: Dict[Hashable, int] = field(default_factory=dict)

    @property
    def states(self) -> Set[Hashable]:
        return set(self.parents)

    @property
    def complete(self) -> bool:
        return self.status is SearchStatus.COMPLETE

    def path_to(self, state: Hashable) -> List[Tuple[Any, Hashable]]:
        """Moves from start to state as (move, resulting state) pairs"""
        if state not in self.parents:
            raise ValidationError("state was not reached")
        steps = []
        while self.parents[state] is not None:
            parent, move = self.parents[state]
            steps.append((move, state))
            state = parent
        steps.reverse()
        return steps


def orbit_closure(start: Hashable, neighbors: NeighborFn, limits: SearchLimits) -> ClosureResult:
    """
    Breadth-first closure of start under a move relation.

    The result is complete only when every reached state had all of its
    neighbours inside the set.
    """
    result = ClosureResult(SearchStatus.COMPLETE, start, {start: None}, {start: 0})
    queue = deque([start])
    while queue:
        state = queue.popleft()
        d = result.depth[state]
        for move, nxt in neighbors(state):
            if nxt in result.parents:
                continue
            if d >= limits.max_depth or len(result.parents) >= limits.max_states:
                result.status = SearchStatus.TRUNCATED
                continue
            result.parents[nxt] = (state, move)
            result.depth[nxt] = d + 1
            queue.append(nxt)
    if result.status is SearchStatus.TRUNCATED:
        logger.warning(f"Closure truncated at {len(result.parents)} states")
    else:
        logger.info(f"Closure complete with {len(result.parents)} states")
    return result


@dataclass
class SearchResult:
    """Outcome of an equivalence search"""
    status: SearchStatus
    path: List[Tuple[Any, Hashable]] = field(default_factory=list)
    explored: int = 0

    @property
    def found(self) -> bool:
        return self.status is SearchStatus.FOUND


def bidirectional_search(start: Hashable, goal: Hashable, neighbors: NeighborFn,
                         limits: SearchLimits) -> SearchResult:
    """
    Meet-in-the-middle search over a symmetric move relation.

    The depth budget bounds the total witness length. FOUND carries a path of
    (move, state) pairs from start to goal; DISTINCT_WITHIN_BOUND means no path
    of length at most max_depth exists; UNKNOWN means the state budget ran out.
    """
    if start == goal:
        return SearchResult(SearchStatus.FOUND, [], 1)
    forward: Dict[Hashable, Optional[Tuple[Hashable, Any]]] = {start: None}
    backward: Dict[Hashable, Optional[Tuple[Hashable, Any]]] = {goal: None}
    front, back = [start], [goal]
    depth_f = depth_b = 0

    while front or back:
        if depth_f + depth_b >= limits.max_depth:
            break
        expand_forward = bool(front) and (not back or len(front) <= len(back))
        frontier, seen, other = (front, forward, backward) if expand_forward else (back, backward, forward)
        next_frontier = []
        meeting = None
        for state in frontier:
            for move, nxt in neighbors(state):
                if nxt in seen:
                    continue
                if len(forward) + len(backward) >= limits.max_states:
                    logger.warning(f"Search stopped after {len(forward) + len(backward)} states")
                    return SearchResult(SearchStatus.UNKNOWN, [], len(forward) + len(backward))
                seen[nxt] = (state, move)
                if nxt in other:
                    meeting = nxt
                    break
                next_frontier.append(nxt)
            if meeting is not None:
                break
        if meeting is not None:
            path = _join_paths(meeting, forward, backward, neighbors)
            return SearchResult(SearchStatus.FOUND, path, len(forward) + len(backward))
        if expand_forward:
            front, depth_f = next_frontier, depth_f + 1
        else:
            back, depth_b = next_frontier, depth_b + 1
        if not front and not back:
            break
        if not front or not back:
            # one side exhausted its component without meeting the other
            break

    return SearchResult(SearchStatus.DISTINCT_WITHIN_BOUND, [], len(forward) + len(backward))


def _join_paths(meeting, forward, backward, neighbors: NeighborFn) -> List[Tuple[Any, Hashable]]:
    head = []
    state = meeting
    while forward[state] is not None:
        parent, move = forward[state]
        head.append((move, state))
        state = parent
    head.reverse()
    tail = []
    state = meeting
    while backward[state] is not None:
        toward_goal, _ = backward[state]
        move = next((m for m, nxt in neighbors(state) if nxt == toward_goal), None)
        if move is None:
            raise ConventionError("move relation is not symmetric")
        tail.append((move, toward_goal))
        state = toward_goal
    return head + tail


def dumps_compact(data: Any) -> str:
    """Deterministic single-line JSON"""
    return json.dumps(data, separators=(",", ":"), ensure_ascii=False)


@dataclass
class CheckReport:
    """Pass/fail of an identity check with the largest deviation seen"""
    name: str
    passed: bool
    max_deviation: float = 0.0
    checked: int = 0
    failures: List[str] = field(default_factory=list)

    def fail(self, detail: str):
        self.passed = False
        self.failures.append(detail)

    def to_json(self) -> Dict[str, Any]:
        return {"check": self.name, "passed": self.passed, "maxDeviation": self.max_deviation,
                "checked": self.checked, "failures": self.failures[:10]}
