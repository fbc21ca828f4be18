"""Exact arithmetic in real algebraic number fields.

A field is described by an integer polynomial, irreducible over the
rationals, together with a rational interval bracketing exactly one of its
real roots.  Elements are polynomials in that root of degree less than the
field degree, with rational coefficients.  All arithmetic is exact; the
bracketing interval is only ever *refined* (by bisection) when a sign or a
numerical enclosure is requested, so no decision ever depends on floating
point.

    >>> from pafix.exactnum import RealNumberField
    >>> K = RealNumberField.create([1, -3, 1], 2, 3)   # x^2 - 3x + 1, root ~2.618
    >>> lam = K.gen()
    >>> lam + 1/lam == K.rational(3)
    True
    >>> (lam * lam - 3 * lam + 1).is_zero()
    True

Coefficient sequences are ascending: ``[c0, c1, ..., cd]`` stands for
``c0 + c1*x + ... + cd*x^d``.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from typing import Iterable, Sequence, Union

from .errors import (
    DivisionByZero,
    FieldMismatch,
    InternalCheckError,
    MultipleRootsInInterval,
    NoRootInInterval,
    NotIrreducible,
    ParseError,
)

Rat = Union[int, Fraction]

_ZERO = Fraction(0)
_ONE = Fraction(1)


# ---------------------------------------------------------------------------
# polynomial helpers over Fraction, ascending coefficient order


def _strip(p: list) -> list:
    while p and p[-1] == 0:
        p.pop()
    return p


def _poly_add(a: Sequence[Fraction], b: Sequence[Fraction]) -> list:
    n = max(len(a), len(b))
    out = [_ZERO] * n
    for i, c in enumerate(a):
        out[i] += c
    for i, c in enumerate(b):
        out[i] += c
    return _strip(out)


def _poly_scale(a: Sequence[Fraction], s: Fraction) -> list:
    if s == 0:
        return []
    return [c * s for c in a]


def _poly_mul(a: Sequence[Fraction], b: Sequence[Fraction]) -> list:
    if not a or not b:
        return []
    out = [_ZERO] * (len(a) + len(b) - 1)
    for i, ca in enumerate(a):
        if ca:
            for j, cb in enumerate(b):
                out[i + j] += ca * cb
    return _strip(out)


def _poly_divmod(a: Sequence[Fraction], b: Sequence[Fraction]) -> tuple:
    # b must be nonzero
    rem = list(a)
    quo = [_ZERO] * max(0, len(a) - len(b) + 1)
    db, lead = len(b) - 1, b[-1]
    while len(rem) - 1 >= db and rem:
        shift = len(rem) - 1 - db
        factor = rem[-1] / lead
        quo[shift] = factor
        for i, c in enumerate(b):
            rem[shift + i] -= factor * c
        _strip(rem)
    return _strip(quo), rem


def _poly_deriv(a: Sequence[Fraction]) -> list:
    return [i * c for i, c in enumerate(a)][1:]


def _poly_eval(a: Sequence[Fraction], x: Fraction) -> Fraction:
    acc = _ZERO
    for c in reversed(a):
        acc = acc * x + c
    return acc


def _poly_eval_interval(a, lo: Fraction, hi: Fraction) -> tuple:
    """Interval Horner: encloses {p(x) : x in [lo, hi]}."""
    acc_lo = acc_hi = _ZERO
    for c in reversed(a):
        p1, p2, p3, p4 = acc_lo * lo, acc_lo * hi, acc_hi * lo, acc_hi * hi
        acc_lo = min(p1, p2, p3, p4) + c
        acc_hi = max(p1, p2, p3, p4) + c
    return acc_lo, acc_hi


def _sign_variations(values: Iterable[Fraction]) -> int:
    count, prev = 0, 0
    for v in values:
        if v == 0:
            continue
        s = 1 if v > 0 else -1
        if prev and s != prev:
            count += 1
        prev = s
    return count


def _sturm_chain(p: Sequence[Fraction]) -> list:
    chain = [list(p), _poly_deriv(p)]
    while chain[-1]:
        _, rem = _poly_divmod(chain[-2], chain[-1])
        if not rem:
            break
        chain.append([-c for c in rem])
    return chain


def count_real_roots(coeffs: Sequence[Rat], lo: Rat, hi: Rat) -> int:
    """Number of distinct real roots of the polynomial in the open interval
    (lo, hi).  Endpoints must not be roots."""
    p = _strip([Fraction(c) for c in coeffs])
    lo, hi = Fraction(lo), Fraction(hi)
    if _poly_eval(p, lo) == 0 or _poly_eval(p, hi) == 0:
        raise ValueError("interval endpoint is a root")
    chain = _sturm_chain(p)
    va = _sign_variations(_poly_eval(q, lo) for q in chain)
    vb = _sign_variations(_poly_eval(q, hi) for q in chain)
    return va - vb


# ---------------------------------------------------------------------------
# rational intervals


class RationalInterval:
    """Closed interval with exact rational endpoints."""

    __slots__ = ("lo", "hi")

    def __init__(self, lo: Rat, hi: Rat):
        lo, hi = Fraction(lo), Fraction(hi)
        if lo > hi:
            raise ValueError("interval endpoints out of order")
        self.lo = lo
        self.hi = hi

    def width(self) -> Fraction:
        return self.hi - self.lo

    def midpoint(self) -> Fraction:
        return (self.lo + self.hi) / 2

    def contains(self, x: Rat) -> bool:
        return self.lo <= x <= self.hi

    __contains__ = contains

    def intersects(self, other: "RationalInterval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def __add__(self, other: "RationalInterval") -> "RationalInterval":
        return RationalInterval(self.lo + other.lo, self.hi + other.hi)

    def __neg__(self) -> "RationalInterval":
        return RationalInterval(-self.hi, -self.lo)

    def __sub__(self, other: "RationalInterval") -> "RationalInterval":
        return self + (-other)

    def __mul__(self, other: "RationalInterval") -> "RationalInterval":
        p = (self.lo * other.lo, self.lo * other.hi,
             self.hi * other.lo, self.hi * other.hi)
        return RationalInterval(min(p), max(p))

    def sign(self):
        """+1, -1, or None when the interval straddles zero."""
        if self.lo > 0:
            return 1
        if self.hi < 0:
            return -1
        if self.lo == self.hi == 0:
            return 0
        return None

    def __eq__(self, other):
        return (isinstance(other, RationalInterval)
                and self.lo == other.lo and self.hi == other.hi)

    def __hash__(self):
        return hash((self.lo, self.hi))

    def __repr__(self):
        return f"RationalInterval({self.lo}, {self.hi})"


# ---------------------------------------------------------------------------
# fields


def _normalize_minpoly(coeffs: Sequence[Rat]) -> tuple:
    """Clear denominators, remove content, force positive leading term."""
    fracs = _strip([Fraction(c) for c in coeffs])
    if len(fracs) < 2:
        raise ParseError("defining polynomial must have degree at least 1")
    denom_lcm = 1
    for c in fracs:
        denom_lcm = denom_lcm * c.denominator // math.gcd(denom_lcm, c.denominator)
    ints = [int(c * denom_lcm) for c in fracs]
    content = 0
    for c in ints:
        content = math.gcd(content, c)
    ints = [c // content for c in ints]
    if ints[-1] < 0:
        ints = [-c for c in ints]
    return tuple(ints)


def _is_irreducible(int_coeffs: tuple) -> bool:
    if len(int_coeffs) == 2:
        return True
    import sympy

    x = sympy.Symbol("x")
    poly = sympy.Poly(list(reversed(int_coeffs)), x, domain="QQ")
    return bool(poly.is_irreducible)


class RealNumberField:
    """A real algebraic number field Q(g), g the unique root of the defining
    polynomial inside the bracketing interval.

    Instances with the same defining polynomial and the same root compare
    equal and interoperate; their elements can be mixed freely.
    """

    __slots__ = ("minpoly", "_lo", "_hi", "_gpow", "_equal_ids",
                 "declared_interval", "__weakref__")

    def __init__(self, *args, **kwargs):
        raise TypeError("use RealNumberField.create(...)")

    @classmethod
    def create(cls, minpoly: Sequence[Rat], lo: Rat, hi: Rat) -> "RealNumberField":
        """Build a field from ascending coefficients and a root bracket.

        Raises NotIrreducible, NoRootInInterval, or MultipleRootsInInterval
        when the data does not pin down a single root of an irreducible
        polynomial.
        """
        coeffs = _normalize_minpoly(minpoly)
        lo, hi = Fraction(lo), Fraction(hi)
        if lo >= hi:
            raise ParseError("root interval is empty")
        if not _is_irreducible(coeffs):
            raise NotIrreducible(
                "polynomial %s factors over the rationals" % format_poly(coeffs, "x"))

        self = object.__new__(cls)
        self.minpoly = coeffs
        self._equal_ids = {id(self)}
        self.declared_interval = (lo, hi)

        if len(coeffs) == 2:
            # rational "field": the root is exact
            root = Fraction(-coeffs[0], coeffs[1])
            if not (lo < root < hi):
                raise NoRootInInterval("root %s not in (%s, %s)" % (root, lo, hi))
            self._lo = self._hi = root
        else:
            # irreducible of degree >= 2 has no rational roots, so rational
            # endpoints are never roots and open/closed does not matter
            fr = [Fraction(c) for c in coeffs]
            n = count_real_roots(fr, lo, hi)
            if n == 0:
                raise NoRootInInterval(
                    "no root of %s in (%s, %s)" % (format_poly(coeffs, "x"), lo, hi))
            if n > 1:
                raise MultipleRootsInInterval(
                    "%d roots of %s in (%s, %s)"
                    % (n, format_poly(coeffs, "x"), lo, hi))
            self._lo, self._hi = lo, hi
            self._refine(64)

        d = len(coeffs) - 1
        # g^k for k = d .. 2d-2, reduced to degree < d
        gpow = []
        lead = Fraction(coeffs[-1])
        base = [Fraction(-c, 1) / lead for c in coeffs[:-1]]  # g^d
        cur = base
        for _ in range(d - 1):
            gpow.append(tuple(cur) + (_ZERO,) * (d - len(cur)))
            nxt = [_ZERO] + list(cur)  # * g
            if len(nxt) > d:
                top = nxt.pop()
                nxt = _poly_add(nxt, _poly_scale(base, top))
            cur = nxt + [_ZERO] * (d - len(nxt))
        self._gpow = tuple(gpow)
        return self

    # -- basic data ---------------------------------------------------------

    @property
    def degree(self) -> int:
        return len(self.minpoly) - 1

    def root_interval(self) -> RationalInterval:
        return RationalInterval(self._lo, self._hi)

    def _refine(self, steps: int) -> None:
        if self._lo == self._hi:
            return
        p = self.minpoly
        sign_lo = 1 if _poly_eval(p, self._lo) > 0 else -1
        lo, hi = self._lo, self._hi
        for _ in range(steps):
            mid = (lo + hi) / 2
            v = _poly_eval(p, mid)
            if v == 0:
                raise InternalCheckError("rational root of irreducible polynomial")
            if (1 if v > 0 else -1) == sign_lo:
                lo = mid
            else:
                hi = mid
        self._lo, self._hi = lo, hi

    # -- element constructors -----------------------------------------------

    def element(self, coeffs: Sequence[Rat]) -> "FieldElement":
        vec = [Fraction(c) for c in coeffs]
        if len(vec) > self.degree:
            raise ParseError(
                "coefficient vector longer than field degree %d" % self.degree)
        vec += [_ZERO] * (self.degree - len(vec))
        return FieldElement(self, tuple(vec))

    def rational(self, value: Rat) -> "FieldElement":
        return self.element([Fraction(value)])

    def zero(self) -> "FieldElement":
        return self.rational(0)

    def one(self) -> "FieldElement":
        return self.rational(1)

    def gen(self) -> "FieldElement":
        if self.degree == 1:
            return self.rational(self._lo)
        return self.element([0, 1])

    def coerce(self, value) -> "FieldElement":
        if isinstance(value, FieldElement):
            if not self._same_field(value.field):
                raise FieldMismatch("element belongs to a different field")
            return value
        if isinstance(value, (int, Fraction)):
            return self.rational(value)
        raise TypeError("cannot coerce %r into the field" % (value,))

    # -- identity -----------------------------------------------------------

    def _same_field(self, other: "RealNumberField") -> bool:
        if other is self or id(other) in self._equal_ids:
            return True
        if not isinstance(other, RealNumberField) or other.minpoly != self.minpoly:
            return False
        if self.degree == 1:
            same = self._lo == other._lo
        else:
            # both intervals bracket exactly one root; same root iff the
            # overlap still holds one
            if self._lo >= other._hi or other._lo >= self._hi:
                same = False
            else:
                lo, hi = max(self._lo, other._lo), min(self._hi, other._hi)
                fr = [Fraction(c) for c in self.minpoly]
                same = count_real_roots(fr, lo, hi) == 1
        if same:
            self._equal_ids.add(id(other))
            other._equal_ids.add(id(self))
        return same

    def __eq__(self, other):
        return isinstance(other, RealNumberField) and self._same_field(other)

    def __hash__(self):
        return hash(self.minpoly)

    def __repr__(self):
        return "RealNumberField(%s, root in (%s, %s))" % (
            format_poly(self.minpoly, "x"), self._lo, self._hi)


class FieldElement:
    """Immutable element of a RealNumberField."""

    __slots__ = ("field", "coeffs", "_fb")

    def __init__(self, field: RealNumberField, coeffs: tuple):
        self.field = field
        self.coeffs = coeffs
        self._fb = None

    # -- coercion -----------------------------------------------------------

    def _pair(self, other):
        if isinstance(other, FieldElement):
            if other.field is not self.field and not self.field._same_field(other.field):
                raise FieldMismatch(
                    "cannot combine elements of %r and %r" % (self.field, other.field))
            return other
        if isinstance(other, (int, Fraction)):
            return self.field.rational(other)
        return None

    # -- predicates ----------------------------------------------------------

    def is_zero(self) -> bool:
        return all(c == 0 for c in self.coeffs)

    def is_rational(self) -> bool:
        return all(c == 0 for c in self.coeffs[1:])

    def as_fraction(self) -> Fraction:
        """The exact rational value; raises ValueError if irrational."""
        if not self.is_rational():
            raise ValueError("element is not rational: %s" % self)
        return self.coeffs[0]

    # -- ring operations ------------------------------------------------------

    def __add__(self, other):
        o = self._pair(other)
        if o is None:
            return NotImplemented
        return FieldElement(self.field,
                            tuple(a + b for a, b in zip(self.coeffs, o.coeffs)))

    __radd__ = __add__

    def __neg__(self):
        return FieldElement(self.field, tuple(-c for c in self.coeffs))

    def __sub__(self, other):
        o = self._pair(other)
        if o is None:
            return NotImplemented
        return FieldElement(self.field,
                            tuple(a - b for a, b in zip(self.coeffs, o.coeffs)))

    def __rsub__(self, other):
        o = self._pair(other)
        if o is None:
            return NotImplemented
        return o - self

    def __mul__(self, other):
        o = self._pair(other)
        if o is None:
            return NotImplemented
        d = self.field.degree
        raw = [_ZERO] * (2 * d - 1)
        for i, a in enumerate(self.coeffs):
            if a:
                for j, b in enumerate(o.coeffs):
                    if b:
                        raw[i + j] += a * b
        out = list(raw[:d])
        gpow = self.field._gpow
        for k in range(d, 2 * d - 1):
            c = raw[k]
            if c:
                rep = gpow[k - d]
                for i in range(d):
                    out[i] += c * rep[i]
        return FieldElement(self.field, tuple(out))

    __rmul__ = __mul__

    def inverse(self) -> "FieldElement":
        if self.is_zero():
            raise DivisionByZero("zero has no inverse")
        if self.is_rational():
            return self.field.rational(1 / self.coeffs[0])
        # extended euclid: s*self + t*minpoly = 1 in Q[x]
        a = _strip(list(self.coeffs))
        b = [Fraction(c) for c in self.field.minpoly]
        s0, s1 = [_ONE], []
        r0, r1 = a, b
        while r1:
            q, r = _poly_divmod(r0, r1)
            r0, r1 = r1, r
            s0, s1 = s1, _poly_add(s0, [-c for c in _poly_mul(q, s1)])
        # r0 = gcd, a nonzero constant because minpoly is irreducible
        if len(r0) != 1:
            raise InternalCheckError("gcd with irreducible polynomial not constant")
        inv = _poly_scale(s0, 1 / r0[0])
        d = self.field.degree
        if len(inv) > d:
            _, inv = _poly_divmod(inv, b)
        return self.field.element(inv)

    def __truediv__(self, other):
        o = self._pair(other)
        if o is None:
            return NotImplemented
        return self * o.inverse()

    def __rtruediv__(self, other):
        o = self._pair(other)
        if o is None:
            return NotImplemented
        return o * self.inverse()

    def __pow__(self, n: int):
        if not isinstance(n, int):
            return NotImplemented
        if n < 0:
            return self.inverse() ** (-n)
        result = self.field.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    # -- order ---------------------------------------------------------------

    def sign(self) -> int:
        """Exact sign: -1, 0, or +1."""
        if self.is_rational():
            c = self.coeffs[0]
            return (c > 0) - (c < 0)
        field = self.field
        for _ in range(300):
            lo, hi = _poly_eval_interval(self.coeffs, field._lo, field._hi)
            if lo > 0:
                return 1
            if hi < 0:
                return -1
            field._refine(16)
        raise InternalCheckError("sign of nonzero element did not resolve")

    def approx(self, bits: int = 53) -> RationalInterval:
        """Rational enclosure of width at most 2**-bits."""
        target = Fraction(1, 2 ** bits)
        if self.is_rational():
            c = self.coeffs[0]
            return RationalInterval(c, c)
        field = self.field
        for _ in range(300):
            lo, hi = _poly_eval_interval(self.coeffs, field._lo, field._hi)
            if hi - lo <= target:
                return RationalInterval(lo, hi)
            field._refine(16)
        raise InternalCheckError("enclosure did not converge")

    def float_bounds(self) -> tuple:
        """Cached conservative float enclosure (lo, hi), for prefilters only."""
        fb = self._fb
        if fb is None:
            box = self.approx(40)
            lo = math.nextafter(float(box.lo), -math.inf)
            hi = math.nextafter(float(box.hi), math.inf)
            fb = (lo, hi)
            self._fb = fb
        return fb

    def __float__(self):
        return float(self.approx(60).midpoint())

    def __eq__(self, other):
        o = self._pair(other)
        if o is None:
            return NotImplemented
        return self.coeffs == o.coeffs

    def __ne__(self, other):
        r = self.__eq__(other)
        return r if r is NotImplemented else not r

    def __lt__(self, other):
        o = self._pair(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() < 0

    def __le__(self, other):
        o = self._pair(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() <= 0

    def __gt__(self, other):
        o = self._pair(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() > 0

    def __ge__(self, other):
        o = self._pair(other)
        if o is None:
            return NotImplemented
        return (self - o).sign() >= 0

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def __hash__(self):
        return hash((self.field.minpoly, self.coeffs))

    def __repr__(self):
        return format_element(self)

    __str__ = __repr__


# ---------------------------------------------------------------------------
# element minimal polynomials


def element_minimal_polynomial(el: FieldElement) -> tuple:
    """Minimal polynomial of an element over Q, as normalized ascending
    integer coefficients, together with an isolating RationalInterval."""
    d = el.field.degree
    # rows: coefficient vectors of 1, el, el^2, ... until dependent
    rows = []
    power = el.field.one()
    for k in range(d + 1):
        rows.append(list(power.coeffs))
        power = power * el
    # augment with identity to track the dependency combination
    n = len(rows)
    aug = []
    for k in range(n):
        row = list(rows[k][:d])
        tail = [_ZERO] * n
        tail[k] = _ONE
        aug.append(row + tail)
    # gaussian elimination on the first d columns
    pivot_row = 0
    for col in range(d):
        sel = None
        for r in range(pivot_row, n):
            if aug[r][col] != 0:
                sel = r
                break
        if sel is None:
            continue
        aug[pivot_row], aug[sel] = aug[sel], aug[pivot_row]
        pv = aug[pivot_row][col]
        aug[pivot_row] = [c / pv for c in aug[pivot_row]]
        for r in range(n):
            if r != pivot_row and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [c - f * p for c, p in zip(aug[r], aug[pivot_row])]
        pivot_row += 1
    # first all-zero row in the value part gives the minimal dependency
    for r in range(n):
        if all(c == 0 for c in aug[r][:d]):
            combo = aug[r][d:]
            poly = _normalize_minpoly(combo)
            # isolate the root equal to el
            bits = 20
            while True:
                box = el.approx(bits)
                lo, hi = box.lo - Fraction(1, 2 ** bits), box.hi + Fraction(1, 2 ** bits)
                if _poly_eval([Fraction(c) for c in poly], lo) != 0 \
                        and _poly_eval([Fraction(c) for c in poly], hi) != 0 \
                        and count_real_roots(poly, lo, hi) == 1:
                    return poly, RationalInterval(lo, hi)
                bits += 20
                if bits > 2000:
                    raise InternalCheckError("failed to isolate element root")
    raise InternalCheckError("no minimal polynomial found")


# ---------------------------------------------------------------------------
# parsing and formatting


_TOKEN_RE = re.compile(r"\s*(\d+|[A-Za-z_][A-Za-z_0-9]*|\^|\+|-|\*|/|\(|\))")


def _tokenize(text: str) -> list:
    text = text.strip()
    pos, out = 0, []
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise ParseError("unexpected character %r in %r" % (text[pos], text))
        out.append(m.group(1))
        pos = m.end()
    return out


def _parse_poly(text: str, var: str) -> list:
    """Parse a sum of terms like '3*x^2 - x/2 + 5' into ascending Fraction
    coefficients.  Only the single variable `var` is allowed."""
    tokens = _tokenize(text)
    if not tokens:
        raise ParseError("empty expression")
    coeffs: dict = {}
    i = 0
    n = len(tokens)

    def fail(msg):
        raise ParseError("%s in %r" % (msg, text))

    first = True
    while i < n:
        sign = 1
        saw_sign = False
        while i < n and tokens[i] in "+-":
            saw_sign = True
            if tokens[i] == "-":
                sign = -sign
            i += 1
        if not first and not saw_sign:
            fail("missing operator between terms")
        first = False
        coeff = None
        power = 0
        saw_factor = False
        expect_factor = True
        while i < n and (expect_factor or tokens[i] in ("*", "/")):
            op = None
            if tokens[i] in ("*", "/") and saw_factor:
                op = tokens[i]
                i += 1
                if i >= n:
                    fail("dangling operator")
            tok = tokens[i]
            if tok.isdigit():
                val = Fraction(int(tok))
                i += 1
                if op == "/":
                    if val == 0:
                        fail("division by zero")
                    coeff = (coeff if coeff is not None else _ONE) / val
                else:
                    coeff = (coeff if coeff is not None else _ONE) * val
            elif tok == var:
                if op == "/":
                    fail("cannot divide by the generator")
                i += 1
                p = 1
                if i < n and tokens[i] == "^":
                    i += 1
                    if i >= n or not tokens[i].isdigit():
                        fail("exponent must be a nonnegative integer")
                    p = int(tokens[i])
                    i += 1
                power += p
            else:
                if op is not None:
                    fail("unexpected token %r" % tok)
                break
            saw_factor = True
            expect_factor = False
        if not saw_factor:
            fail("empty term")
        c = sign * (coeff if coeff is not None else _ONE)
        coeffs[power] = coeffs.get(power, _ZERO) + c
    deg = max(coeffs) if coeffs else 0
    return _strip([coeffs.get(k, _ZERO) for k in range(deg + 1)])


def parse_poly(text: str, var: str = "x") -> tuple:
    """Parse an integer-coefficient polynomial; returns normalized ascending
    integer coefficients."""
    return _normalize_minpoly(_parse_poly(text, var))


def parse_element(field: RealNumberField, text: str) -> FieldElement:
    """Parse an element written as a polynomial in ``g``.

        >>> K = RealNumberField.create([-1, -1, 1], 1, 2)
        >>> parse_element(K, "2*g - 1/2")
        2*g - 1/2
    """
    coeffs = _parse_poly(text, "g")
    if len(coeffs) > field.degree:
        # reduce high powers of g
        el = field.zero()
        g = field.gen()
        for k, c in enumerate(coeffs):
            if c:
                el = el + field.rational(c) * g ** k
        return el
    return field.element(coeffs)


def format_poly(coeffs: Sequence[Rat], var: str) -> str:
    """Render ascending coefficients as descending-power text: 'x^2 - 3*x + 1'."""
    terms = []
    for k in range(len(coeffs) - 1, -1, -1):
        c = Fraction(coeffs[k])
        if c == 0:
            continue
        if k == 0:
            body = str(abs(c))
        else:
            v = var if k == 1 else "%s^%d" % (var, k)
            body = v if abs(c) == 1 else "%s*%s" % (abs(c), v)
        terms.append((c < 0, body))
    if not terms:
        return "0"
    out = []
    for idx, (neg, body) in enumerate(terms):
        if idx == 0:
            out.append(("-" if neg else "") + body)
        else:
            out.append(("- " if neg else "+ ") + body)
    return " ".join(out)


def format_element(el: FieldElement) -> str:
    return format_poly(el.coeffs, "g")
