"""Exact arithmetic kernel: the fraction field Q(s, u, v) and series on top.

The base symbol is s = q^(1/2), so q = s^2 and half-integer powers of q are
exact.  u is the spectral parameter; v is a second spectral parameter used
by the two-parameter checks (Yang-Baxter, multi-factor composition).

Scalar and RatU are views on one fraction type:
  * a Scalar uses s only,
  * a RatU uses s and u.
Both are canonical: numerator and denominator are coprime integer
polynomials, integer contents are coprime, and the denominator's leading
coefficient in the fixed lex order (s before u before v) is positive.
Rendering those canonical forms gives the strings used in JSON output and
golden tests.
"""

from __future__ import annotations

from fractions import Fraction
from math import gcd as igcd

from . import _poly as P
from ._poly import KEY_S, KEY_U, KEY_V, MASK, SHIFT_S, SHIFT_U


class ScalarError(ValueError):
    """Precondition violation in scalar/series operations."""


class Frac:
    """Element of Q(s, u, v) in canonical form; immutable."""

    __slots__ = ("num", "den", "_hash")

    def __init__(self, num, den=None, _normalized=False):
        if isinstance(num, int):
            num = P.p_const(num)
        if den is None:
            den = dict(P.PONE)
        elif isinstance(den, int):
            den = P.p_const(den)
        if not _normalized:
            num = {k: v for k, v in num.items() if v}
            den = {k: v for k, v in den.items() if v}
            num, den = _normalize(num, den)
        self.num = num
        self.den = den
        self._hash = None

    # -- constructors ------------------------------------------------------

    @staticmethod
    def from_int(c: int) -> "Frac":
        return Frac(P.p_const(c), dict(P.PONE), _normalized=True)

    @staticmethod
    def from_fraction(fr: Fraction) -> "Frac":
        return Frac(P.p_const(fr.numerator), P.p_const(fr.denominator))

    # -- predicates --------------------------------------------------------

    def is_zero(self) -> bool:
        return not self.num

    def is_one(self) -> bool:
        return self.num == P.PONE and self.den == P.PONE

    def is_scalar(self) -> bool:
        """True when the value lies in Q(s)."""
        nv = P.p_vars(self.num)
        dv = P.p_vars(self.den)
        return not (nv[1] or nv[2] or dv[1] or dv[2])

    def is_ratu(self) -> bool:
        """True when the value lies in Q(s)(u) (no second spectral var)."""
        return not (P.p_vars(self.num)[2] or P.p_vars(self.den)[2])

    def is_int(self) -> bool:
        return P.p_is_const(self.num) and self.den == P.PONE

    def as_int(self) -> int:
        if not self.is_int():
            raise ScalarError(f"not an integer: {self}")
        return self.num.get(0, 0)

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not self.num:
            return other
        if not other.num:
            return self
        if self.den == other.den:
            num = P.p_add(self.num, other.num)
            if not num:
                return ZERO
            g = P.p_gcd(num, self.den)
            if g != P.PONE:
                return Frac(P.p_divexact(num, g), P.p_divexact(self.den, g), _normalized=True)
            return Frac(num, dict(self.den), _normalized=True)
        g = P.p_gcd(self.den, other.den)
        if g == P.PONE:
            num = P.p_add(P.p_mul(self.num, other.den), P.p_mul(other.num, self.den))
            if not num:
                return ZERO
            return Frac(num, P.p_mul(self.den, other.den), _normalized=True)
        da = P.p_divexact(self.den, g)
        db = P.p_divexact(other.den, g)
        num = P.p_add(P.p_mul(self.num, db), P.p_mul(other.num, da))
        if not num:
            return ZERO
        h = P.p_gcd(num, g)
        if h != P.PONE:
            num = P.p_divexact(num, h)
            g = P.p_divexact(g, h)
        return Frac(num, P.p_mul(P.p_mul(da, g), db), _normalized=True)

    __radd__ = __add__

    def __neg__(self):
        return Frac(P.p_neg(self.num), dict(self.den), _normalized=True)

    def __sub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other + (-self)

    def __mul__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        if not self.num or not other.num:
            return ZERO
        g1 = P.p_gcd(self.num, other.den)
        g2 = P.p_gcd(other.num, self.den)
        n1 = P.p_divexact(self.num, g1) if g1 != P.PONE else self.num
        d2 = P.p_divexact(other.den, g1) if g1 != P.PONE else other.den
        n2 = P.p_divexact(other.num, g2) if g2 != P.PONE else other.num
        d1 = P.p_divexact(self.den, g2) if g2 != P.PONE else self.den
        num = P.p_mul(n1, n2)
        den = P.p_mul(d1, d2)
        if den[max(den)] < 0:
            num, den = P.p_neg(num), P.p_neg(den)
        return Frac(num, den, _normalized=True)

    __rmul__ = __mul__

    def inv(self) -> "Frac":
        if not self.num:
            raise ZeroDivisionError("inverse of zero")
        num, den = self.den, self.num
        if den[max(den)] < 0:
            num, den = P.p_neg(num), P.p_neg(den)
        return Frac(dict(num), dict(den), _normalized=True)

    def __truediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self * other.inv()

    def __rtruediv__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return other * self.inv()

    def __pow__(self, n: int):
        if n == 0:
            return ONE
        if n < 0:
            return self.inv() ** (-n)
        return Frac(P.p_pow(self.num, n), P.p_pow(self.den, n), _normalized=True)

    def __eq__(self, other):
        other = _coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self.num == other.num and self.den == other.den

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(
                (tuple(sorted(self.num.items())), tuple(sorted(self.den.items())))
            )
        return self._hash

    def __bool__(self):
        return bool(self.num)

    # -- substitution ------------------------------------------------------

    def subst(self, var: str, value: "Frac") -> "Frac":
        """Substitute u or v by another field element."""
        shift = {"u": SHIFT_U, "v": 0}[var]
        return _p_subst(self.num, shift, value) / _p_subst(self.den, shift, value)

    def subst_u_inverse(self) -> "Frac":
        """u -> 1/u, renormalized back to polynomials."""
        dn = P.p_degree(self.num, SHIFT_U)
        dd = P.p_degree(self.den, SHIFT_U)
        d = max(dn, dd)
        num = {k + (d - 2 * ((k >> SHIFT_U) & MASK)) * KEY_U: c for k, c in self.num.items()}
        den = {k + (d - 2 * ((k >> SHIFT_U) & MASK)) * KEY_U: c for k, c in self.den.items()}
        return Frac(num, den)

    def u_order_at_one(self) -> int:
        """Order of vanishing at u = 1 (negative for a pole)."""
        if not self.num:
            raise ScalarError("zero has no order")
        return _order_at_one(self.num) - _order_at_one(self.den)

    def u_leading_at_one(self) -> "Frac":
        """Leading Laurent coefficient at u = 1."""
        n = _order_at_one(self.num)
        d = _order_at_one(self.den)
        num = self.num
        den = self.den
        for _ in range(n):
            num = P.p_divexact(num, _U_MINUS_1)
        for _ in range(d):
            den = P.p_divexact(den, _U_MINUS_1)
        return Frac(_eval_at_one_u(num), _eval_at_one_u(den))

    # -- rendering ---------------------------------------------------------

    def __str__(self):
        return render(self)

    def __repr__(self):
        return f"Frac({render(self)})"


def _normalize(num, den):
    if not den:
        raise ZeroDivisionError("zero denominator")
    if not num:
        return {}, dict(P.PONE)
    g = P.p_gcd(num, den)
    if g != P.PONE:
        num = P.p_divexact(num, g)
        den = P.p_divexact(den, g)
    if den[max(den)] < 0:
        num, den = P.p_neg(num), P.p_neg(den)
    return num, den


def _coerce(x):
    if isinstance(x, Frac):
        return x
    if isinstance(x, int):
        return Frac.from_int(x)
    if isinstance(x, Fraction):
        return Frac.from_fraction(x)
    return NotImplemented


def _p_subst(poly, shift, value: Frac) -> Frac:
    """Evaluate a polynomial at var -> value, other variables untouched."""
    if not poly:
        return ZERO
    groups: dict[int, dict[int, int]] = {}
    for k, c in poly.items():
        e = (k >> shift) & MASK
        groups.setdefault(e, {})[k - (e << shift)] = c
    out = ZERO
    for e in sorted(groups):
        out = out + Frac(groups[e], dict(P.PONE)) * value**e
    return out


_U_MINUS_1 = {KEY_U: 1, 0: -1}


def _order_at_one(poly) -> int:
    n = 0
    while True:
        q = P.p_divexact(poly, _U_MINUS_1)
        if q is None:
            return n
        poly = q
        n += 1


def _eval_at_one_u(poly):
    out: dict[int, int] = {}
    for k, c in poly.items():
        k2 = k - (((k >> SHIFT_U) & MASK) << SHIFT_U)
        w = out.get(k2, 0) + c
        if w:
            out[k2] = w
        elif k2 in out:
            del out[k2]
    return out


ZERO = Frac.from_int(0)
ONE = Frac.from_int(1)
TWO = Frac.from_int(2)
S = Frac({KEY_S: 1}, dict(P.PONE), _normalized=True)
U = Frac({KEY_U: 1}, dict(P.PONE), _normalized=True)
V2 = Frac({KEY_V: 1}, dict(P.PONE), _normalized=True)
Q = Frac({2 * KEY_S: 1}, dict(P.PONE), _normalized=True)

# Spec type names: a Scalar lives in Q(s), a RatU in Q(s)(u).  Both are
# ordinary Frac values; constructors below and the module boundaries
# enforce the variable restrictions.
Scalar = Frac
RatU = Frac


def spow(n: int) -> Frac:
    """s^n, Laurent exponents allowed."""
    if n >= 0:
        return Frac({n * KEY_S: 1}, dict(P.PONE), _normalized=True)
    return Frac(dict(P.PONE), {-n * KEY_S: 1}, _normalized=True)


def qpow(n: int) -> Frac:
    """q^n = s^(2n)."""
    return spow(2 * n)


def qhalfpow(n: int) -> Frac:
    """q^(n/2) = s^n."""
    return spow(n)


def integer(c: int) -> Frac:
    return Frac.from_int(c)


# -- q-combinatorics -------------------------------------------------------


def qint(m: int, base: Frac) -> Frac:
    """[m]_z = (z^m - z^-m)/(z - z^-1) at z = base."""
    if base.is_zero() or base == ONE or base == -ONE:
        raise ZeroDivisionError("qint base must differ from 0, 1, -1")
    return (base**m - base**(-m)) / (base - base.inv())


def qfact(m: int, base: Frac) -> Frac:
    """[m]_z! = prod_{j=1..m} [j]_z; empty product for m = 0."""
    if m < 0:
        raise ScalarError("qfact needs m >= 0")
    out = ONE
    for j in range(1, m + 1):
        out = out * qint(j, base)
    return out


def qfact_primed(m: int, base: Frac) -> Frac:
    """[m]'_z! = z^(m(m-1)/2) [m]_z!."""
    return base ** (m * (m - 1) // 2) * qfact(m, base)


# -- truncated power series ------------------------------------------------


class SeriesZ:
    """Truncated power series; coefficient list of Frac up to order T.

    Operations on series of orders T1, T2 return order min(T1, T2); the
    result records that truncation, never silently extending.
    """

    __slots__ = ("coeffs", "order")

    def __init__(self, coeffs, order: int | None = None):
        coeffs = [c if isinstance(c, Frac) else _coerce(c) for c in coeffs]
        if order is None:
            order = len(coeffs) - 1
        if order < 0:
            raise ScalarError("series order must be >= 0")
        coeffs = coeffs[: order + 1]
        coeffs += [ZERO] * (order + 1 - len(coeffs))
        self.coeffs = coeffs
        self.order = order

    @staticmethod
    def const(c, order: int) -> "SeriesZ":
        return SeriesZ([_coerce(c)], order)

    def __getitem__(self, m: int) -> Frac:
        return self.coeffs[m]

    def __eq__(self, other):
        return (
            isinstance(other, SeriesZ)
            and self.order == other.order
            and self.coeffs == other.coeffs
        )

    def __add__(self, other):
        T = min(self.order, other.order)
        return SeriesZ([self.coeffs[i] + other.coeffs[i] for i in range(T + 1)], T)

    def __sub__(self, other):
        T = min(self.order, other.order)
        return SeriesZ([self.coeffs[i] - other.coeffs[i] for i in range(T + 1)], T)

    def __mul__(self, other):
        if isinstance(other, (Frac, int)):
            c = _coerce(other)
            return SeriesZ([a * c for a in self.coeffs], self.order)
        T = min(self.order, other.order)
        out = [ZERO] * (T + 1)
        for i, a in enumerate(self.coeffs[: T + 1]):
            if a.is_zero():
                continue
            for j in range(T + 1 - i):
                b = other.coeffs[j]
                if not b.is_zero():
                    out[i + j] = out[i + j] + a * b
        return SeriesZ(out, T)

    __rmul__ = __mul__

    def truncate(self, order: int) -> "SeriesZ":
        if order > self.order:
            raise ScalarError("cannot extend a truncated series")
        return SeriesZ(self.coeffs[: order + 1], order)

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coeffs)

    def __str__(self):
        return " + ".join(f"({c})*z^{i}" for i, c in enumerate(self.coeffs) if c) or "0"


def series_log(sz: SeriesZ) -> SeriesZ:
    """log of a series with constant coefficient 1."""
    if sz[0] != ONE:
        raise ScalarError("series_log needs constant coefficient 1")
    T = sz.order
    n = SeriesZ([ZERO] + sz.coeffs[1:], T)
    out = SeriesZ.const(ZERO, T)
    power = SeriesZ.const(ONE, T)
    for t in range(1, T + 1):
        power = power * n
        if power.is_zero():
            break
        sign = ONE if t % 2 == 1 else -ONE
        out = out + power * (sign / Frac.from_int(t))
    return out


def series_exp(sz: SeriesZ) -> SeriesZ:
    """exp of a series with constant coefficient 0."""
    if not sz[0].is_zero():
        raise ScalarError("series_exp needs constant coefficient 0")
    T = sz.order
    out = SeriesZ.const(ONE, T)
    power = SeriesZ.const(ONE, T)
    fact = 1
    for t in range(1, T + 1):
        power = power * sz
        if power.is_zero():
            break
        fact *= t
        out = out + power * Frac.from_fraction(Fraction(1, fact))
    return out


# -- rational reconstruction ------------------------------------------------


class ReconstructionError(ArithmeticError):
    """No rational function with the given degree bounds fits the series."""


class Reconstruction:
    """Result of rational_reconstruct: num/den coefficient lists (den[0]=1)."""

    __slots__ = ("num", "den", "certified")

    def __init__(self, num, den, certified):
        self.num = num
        self.den = den
        self.certified = certified

    def as_ratu(self) -> Frac:
        """Assemble into an element of Q(s)(u) (series variable = u)."""
        return _coeffs_to_frac(self.num) / _coeffs_to_frac(self.den)

    def expand(self, order: int) -> SeriesZ:
        """Re-expand to a series of the given order."""
        out = [ZERO] * (order + 1)
        inv0 = self.den[0].inv()
        for t in range(order + 1):
            acc = self.num[t] if t < len(self.num) else ZERO
            for j in range(1, min(t, len(self.den) - 1) + 1):
                acc = acc - self.den[j] * out[t - j]
            out[t] = acc * inv0
        return SeriesZ(out, order)


def _coeffs_to_frac(coeffs) -> Frac:
    out = ZERO
    for t, c in enumerate(coeffs):
        out = out + c * U**t
    return out


def rational_reconstruct(sz: SeriesZ, max_num_deg: int, max_den_deg: int) -> Reconstruction:
    """Unique bounded-degree rational function matching the series.

    Searches denominator degrees from 0 up, so the minimal (canonical)
    representation is returned; every available series coefficient is then
    checked and the certified flag records the full match.
    """
    T = sz.order
    if T < max_num_deg + max_den_deg + 1:
        raise ReconstructionError(
            f"order {T} too small for bounds ({max_num_deg},{max_den_deg}): "
            f"need at least {max_num_deg + max_den_deg + 1}"
        )
    for dd in range(max_den_deg + 1):
        # unknowns d_1..d_dd with d_0 = 1: sum_j d_j c_{t-j} = 0 for t > dn
        rows = []
        rhs = []
        for t in range(max_num_deg + 1, T + 1):
            rows.append([sz[t - j] if t - j <= T else ZERO for j in range(1, dd + 1)])
            rhs.append(-sz[t])
        sol = _solve_unique(rows, rhs)
        if sol is None:
            continue
        den = [ONE] + sol
        num = []
        for t in range(max_num_deg + 1):
            acc = ZERO
            for j in range(0, min(t, dd) + 1):
                acc = acc + den[j] * sz[t - j]
            num.append(acc)
        while num and num[-1].is_zero():
            num.pop()
        if not num:
            num = [ZERO]
        rec = Reconstruction(num, den, False)
        if rec.expand(T) == sz:
            rec.certified = True
            return rec
    raise ReconstructionError(
        f"no rational function of degrees <= ({max_num_deg},{max_den_deg}) matches"
    )


def _solve_unique(rows, rhs):
    """Solve an overdetermined linear system over Frac.

    Returns the unique solution, or None when the system is inconsistent or
    underdetermined (the caller then tries other degree bounds).
    """
    n = len(rows[0]) if rows else 0
    if n == 0:
        return [] if all(r.is_zero() for r in rhs) else None
    A = [list(r) + [b] for r, b in zip(rows, rhs)]
    m = len(A)
    pivots = []
    row = 0
    for col in range(n):
        piv = None
        for r in range(row, m):
            if not A[r][col].is_zero():
                piv = r
                break
        if piv is None:
            return None  # underdetermined in this column
        A[row], A[piv] = A[piv], A[row]
        inv = A[row][col].inv()
        A[row] = [x * inv for x in A[row]]
        for r in range(m):
            if r != row and not A[r][col].is_zero():
                f = A[r][col]
                A[r] = [x - f * y for x, y in zip(A[r], A[row])]
        pivots.append(col)
        row += 1
    for r in range(row, m):
        if not A[r][n].is_zero():
            return None  # inconsistent
    return [A[i][n] for i in range(n)]


def solve_linear(rows, rhs):
    """Gaussian elimination over Frac; returns a solution or None."""
    return _solve_unique(rows, rhs)


# -- canonical rendering and parsing ----------------------------------------

_VAR_NAMES = ("s", "u", "v")


def _render_poly(poly) -> str:
    if not poly:
        return "0"
    parts = []
    for k in sorted(poly, reverse=True):
        c = poly[k]
        es, eu, ev = P.key_exps(k)
        mono = "*".join(
            (name if e == 1 else f"{name}^{e}")
            for name, e in zip(_VAR_NAMES, (es, eu, ev))
            if e
        )
        if mono:
            body = mono if abs(c) == 1 else f"{abs(c)}*{mono}"
        else:
            body = str(abs(c))
        if not parts:
            parts.append(body if c > 0 else f"-{body}")
        else:
            parts.append(f" + {body}" if c > 0 else f" - {body}")
    return "".join(parts)


def render(f: Frac) -> str:
    """Canonical string: "(num)/(den)", terms in the fixed monomial order."""
    ns = _render_poly(f.num)
    if f.den == P.PONE:
        return ns
    return f"({ns})/({_render_poly(f.den)})"


class ParseError(ValueError):
    """Malformed scalar expression; carries the offending position."""

    def __init__(self, text, pos, msg):
        super().__init__(f"parse error at {pos} in {text!r}: {msg}")
        self.pos = pos


def parse_frac(text: str) -> Frac:
    """Parse the canonical syntax (plus q = s^2 sugar) back into a Frac."""
    toks = _tokenize(text)
    val, pos = _parse_expr(toks, 0, text)
    if pos != len(toks):
        raise ParseError(text, pos, "trailing input")
    return val


def _tokenize(text):
    toks = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            toks.append(("int", int(text[i:j])))
            i = j
        elif ch in "suvq":
            toks.append(("var", ch))
            i += 1
        elif ch in "+-*/^()":
            toks.append((ch, ch))
            i += 1
        else:
            raise ParseError(text, i, f"unexpected character {ch!r}")
    return toks


def _parse_expr(toks, pos, text):
    val, pos = _parse_term(toks, pos, text)
    while pos < len(toks) and toks[pos][0] in "+-":
        op = toks[pos][0]
        rhs, pos = _parse_term(toks, pos + 1, text)
        val = val + rhs if op == "+" else val - rhs
    return val, pos


def _parse_term(toks, pos, text):
    val, pos = _parse_factor(toks, pos, text)
    while pos < len(toks) and toks[pos][0] in "*/":
        op = toks[pos][0]
        rhs, pos = _parse_factor(toks, pos + 1, text)
        val = val * rhs if op == "*" else val / rhs
    return val, pos


def _parse_factor(toks, pos, text):
    neg = False
    while pos < len(toks) and toks[pos][0] in "+-":
        if toks[pos][0] == "-":
            neg = not neg
        pos += 1
    if pos >= len(toks):
        raise ParseError(text, pos, "unexpected end")
    kind, val = toks[pos]
    if kind == "int":
        out = Frac.from_int(val)
        pos += 1
    elif kind == "var":
        out = {"s": S, "u": U, "v": V2, "q": Q}[val]
        pos += 1
    elif kind == "(":
        out, pos = _parse_expr(toks, pos + 1, text)
        if pos >= len(toks) or toks[pos][0] != ")":
            raise ParseError(text, pos, "missing )")
        pos += 1
    else:
        raise ParseError(text, pos, f"unexpected token {val!r}")
    if pos < len(toks) and toks[pos][0] == "^":
        pos += 1
        sign = 1
        while pos < len(toks) and toks[pos][0] in "+-":
            if toks[pos][0] == "-":
                sign = -sign
            pos += 1
        if pos >= len(toks) or toks[pos][0] != "int":
            raise ParseError(text, pos, "exponent must be an integer")
        out = out ** (sign * toks[pos][1])
        pos += 1
    return (-out if neg else out), pos


# qexp_operator is part of this module's contract but operates on LinearOp;
# the implementation lives next to LinearOp and is re-exported lazily to
# keep the import graph acyclic.
def __getattr__(name):
    if name == "qexp_operator":
        from .linop import qexp_operator

        return qexp_operator
    raise AttributeError(name)
