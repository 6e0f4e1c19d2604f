"""Sparse integer polynomials in the variables (s, u, v).

A polynomial is a plain dict mapping an encoded exponent key to a nonzero
int coefficient.  The key packs the three exponents into one int,

    key = (e_s << 42) | (e_u << 21) | e_v,

so monomial multiplication is integer addition and descending key order is
exactly the fixed lexicographic order with s before u before v.  Exponents
stay far below 2**21, so fields never carry into each other.

Everything here is module-level functions on dicts; the public fraction
field lives in scalarfield.
"""

from __future__ import annotations

from math import gcd as igcd

SHIFT_S = 42
SHIFT_U = 21
MASK = (1 << 21) - 1

PZERO: dict[int, int] = {}
PONE: dict[int, int] = {0: 1}

KEY_S = 1 << SHIFT_S
KEY_U = 1 << SHIFT_U
KEY_V = 1


def key_exps(k: int) -> tuple[int, int, int]:
    return (k >> SHIFT_S, (k >> SHIFT_U) & MASK, k & MASK)


def p_const(c: int) -> dict[int, int]:
    return {0: c} if c else {}


def p_is_const(a: dict[int, int]) -> bool:
    return not a or (len(a) == 1 and 0 in a)


def p_add(a, b):
    if not a:
        return dict(b)
    if not b:
        return dict(a)
    c = dict(a)
    for k, v in b.items():
        w = c.get(k, 0) + v
        if w:
            c[k] = w
        elif k in c:
            del c[k]
    return c


def p_sub(a, b):
    c = dict(a)
    for k, v in b.items():
        w = c.get(k, 0) - v
        if w:
            c[k] = w
        elif k in c:
            del c[k]
    return c


def p_neg(a):
    return {k: -v for k, v in a.items()}


def p_scale(a, c: int):
    if not c:
        return {}
    return {k: v * c for k, v in a.items()}


def p_mul(a, b):
    if not a or not b:
        return {}
    if len(a) > len(b):
        a, b = b, a
    if len(a) == 1:
        ((ka, va),) = a.items()
        if ka == 0 and va == 1:
            return dict(b)
        return {ka + kb: va * vb for kb, vb in b.items()}
    c: dict[int, int] = {}
    get = c.get
    for ka, va in a.items():
        for kb, vb in b.items():
            k = ka + kb
            w = get(k, 0) + va * vb
            if w:
                c[k] = w
            elif k in c:
                del c[k]
    return c


def p_pow(a, n: int):
    r = dict(PONE)
    base = a
    while n:
        if n & 1:
            r = p_mul(r, base)
        n >>= 1
        if n:
            base = p_mul(base, base)
    return r


def p_vars(a) -> tuple[bool, bool, bool]:
    """Which of (s, u, v) occur with positive exponent."""
    has_s = has_u = has_v = False
    for k in a:
        if k >> SHIFT_S:
            has_s = True
        if (k >> SHIFT_U) & MASK:
            has_u = True
        if k & MASK:
            has_v = True
        if has_s and has_u and has_v:
            break
    return has_s, has_u, has_v


def p_degree(a, shift: int) -> int:
    """Degree in the variable at bit offset `shift` (-1 for the zero poly)."""
    if not a:
        return -1
    return max((k >> shift) & MASK for k in a)


def p_icontent(a) -> int:
    g = 0
    for v in a.values():
        g = igcd(g, v)
        if g == 1:
            return 1
    return g


def p_mono_content(a) -> int:
    """Largest monomial key dividing every term."""
    es = eu = ev = None
    for k in a:
        x, y, z = key_exps(k)
        es = x if es is None else min(es, x)
        eu = y if eu is None else min(eu, y)
        ev = z if ev is None else min(ev, z)
        if not (es or eu or ev):
            return 0
    return (es << SHIFT_S) | (eu << SHIFT_U) | ev


def p_shift_down(a, mono: int):
    if not mono:
        return dict(a)
    return {k - mono: v for k, v in a.items()}


def p_idiv(a, c: int):
    if c == 1:
        return dict(a)
    return {k: v // c for k, v in a.items()}


def _fields_ge(ka: int, kb: int) -> bool:
    return (
        (ka >> SHIFT_S) >= (kb >> SHIFT_S)
        and ((ka >> SHIFT_U) & MASK) >= ((kb >> SHIFT_U) & MASK)
        and (ka & MASK) >= (kb & MASK)
    )


def p_divexact(a, b):
    """Quotient a/b when the division is exact over Z, else None."""
    if not a:
        return {}
    if not b:
        raise ZeroDivisionError("polynomial division by zero")
    if len(b) == 1:
        ((kb, cb),) = b.items()
        q = {}
        for ka, ca in a.items():
            if not _fields_ge(ka, kb) or ca % cb:
                return None
            q[ka - kb] = ca // cb
        return q
    kb = max(b)
    cb = b[kb]
    r = dict(a)
    q = {}
    while r:
        ka = max(r)
        ca = r[ka]
        if not _fields_ge(ka, kb) or ca % cb:
            return None
        t = ca // cb
        k = ka - kb
        q[k] = t
        for kk, vv in b.items():
            k2 = kk + k
            w = r.get(k2, 0) - t * vv
            if w:
                r[k2] = w
            elif k2 in r:
                del r[k2]
    return q


def p_eval_var(a, shift: int, x: int):
    """Substitute the variable at `shift` by the integer x."""
    out: dict[int, int] = {}
    powers: dict[int, int] = {0: 1}
    for k, v in a.items():
        e = (k >> shift) & MASK
        p = powers.get(e)
        if p is None:
            p = x**e
            powers[e] = p
        k2 = k - (e << shift)
        w = out.get(k2, 0) + v * p
        if w:
            out[k2] = w
        elif k2 in out:
            del out[k2]
    return out


def _balanced_digits(a, shift: int, x: int):
    """Inverse of p_eval_var for coefficients in (-x/2, x/2]."""
    out: dict[int, int] = {}
    cur = a
    e = 0
    half = x >> 1
    while cur:
        nxt: dict[int, int] = {}
        for k, c in cur.items():
            r = c % x
            if r > half:
                r -= x
            if r:
                out[k | (e << shift)] = r
            c2 = (c - r) // x
            if c2:
                nxt[k] = c2
        cur = nxt
        e += 1
        if e > MASK:
            return None
    return out


def _max_abs_coeff(a) -> int:
    return max(abs(v) for v in a.values()) if a else 0


def _gcd_heuristic_uni(a, b, shift):
    """Single-variable heuristic gcd with division verification.

    Evaluate at a large integer, take the integer gcd, reconstruct by
    balanced digits, strip content and verify.  Sound because any verified
    candidate divides both inputs, and a candidate surviving the digit
    reconstruction of gcd(a(x), b(x)) has the full gcd's degree.
    """
    bits = max(_max_abs_coeff(a).bit_length(), _max_abs_coeff(b).bit_length())
    deg = max(p_degree(a, shift), p_degree(b, shift))
    if (bits + 6) * (deg + 1) > 2_000_000:
        return None  # evaluation would create multi-megabyte integers
    x = 1 << (2 * bits + 6)
    for _ in range(4):
        ea = p_eval_var(a, shift, x)
        eb = p_eval_var(b, shift, x)
        if not p_is_const(ea) or not p_is_const(eb):
            return None
        g = p_const(igcd(ea.get(0, 0), eb.get(0, 0)))
        cand = _balanced_digits(g, shift, x)
        if cand:
            c = p_icontent(cand)
            if c > 1:
                cand = p_idiv(cand, c)
            if p_divexact(a, cand) is not None and p_divexact(b, cand) is not None:
                return cand
        x = x * x
    return None


def _to_main_var(a, shift: int):
    """View as dense coefficient list in the main variable (ascending)."""
    deg = p_degree(a, shift)
    coeffs: list[dict[int, int]] = [{} for _ in range(deg + 1)]
    for k, v in a.items():
        e = (k >> shift) & MASK
        coeffs[e][k - (e << shift)] = v
    return coeffs


def _from_main_var(coeffs, shift: int):
    out: dict[int, int] = {}
    for e, c in enumerate(coeffs):
        for k, v in c.items():
            out[k | (e << shift)] = v
    return out


def _poly_content(coeffs):
    """gcd of a coefficient list (polynomials in the remaining variables)."""
    g: dict[int, int] = {}
    for c in coeffs:
        if not c:
            continue
        g = p_gcd(g, c) if g else dict(c)
        if p_is_const(g) and abs(g.get(0, 0)) == 1:
            return dict(PONE)
    if not g:
        return dict(PONE)
    if g[max(g)] < 0:
        g = p_neg(g)
    return g


def _trim(R):
    while R and not R[-1]:
        R.pop()
    return R


def _pseudo_rem(A, B):
    """Pseudo-remainder lb^(da-db+1) * A mod B on dense main-var lists."""
    db = len(B) - 1
    lb = B[db]
    R = [dict(c) for c in A]
    _trim(R)
    scale_count = len(R) - 1 - db + 1
    steps = 0
    while len(R) - 1 >= db and R:
        dr = len(R) - 1
        lead = R[dr]
        R = [p_mul(c, lb) for c in R]
        steps += 1
        for j in range(db + 1):
            R[dr - db + j] = p_sub(R[dr - db + j], p_mul(lead, B[j]))
        _trim(R)
    # pad the lb-power so the total factor is lb^(da-db+1) as prem requires
    for _ in range(scale_count - steps):
        R = [p_mul(c, lb) for c in R]
    return R


def _divexact_list(coeffs, d):
    out = []
    for c in coeffs:
        q = p_divexact(c, d) if c else {}
        if q is None:
            raise ArithmeticError("inexact division in subresultant PRS")
        out.append(q)
    return out


def _gcd_prs(a, b, shift):
    """Subresultant PRS gcd with main variable at `shift`.

    Only exact divisions inside the loop; contents are computed once for
    the inputs and once for the (small) final remainder.
    """
    A = _to_main_var(a, shift)
    B = _to_main_var(b, shift)
    if len(A) < len(B):
        A, B = B, A
    ca = _poly_content(A)
    cb = _poly_content(B)
    cont = p_gcd(ca, cb)
    A = _divexact_list(A, ca)
    B = _divexact_list(B, cb)
    g = dict(PONE)
    h = dict(PONE)
    while True:
        _trim(B)
        if not B:
            G = A
            break
        if len(B) == 1:
            G = [B[0]]
            break
        d = (len(A) - 1) - (len(B) - 1)
        R = _pseudo_rem(A, B)
        if not R:
            G = B
            break
        beta = p_mul(g, p_pow(h, d))
        A = B
        B = _divexact_list(R, beta)
        g = A[-1]
        if d == 0:
            h = dict(h)
        elif d == 1:
            h = dict(g)
        else:
            # h = g^d / h^(d-1), exact in the subresultant scheme
            num = p_pow(g, d)
            den = p_pow(h, d - 1)
            q = p_divexact(num, den)
            if q is None:
                raise ArithmeticError("subresultant invariant violated")
            h = q
    cG = _poly_content(G)
    G = _divexact_list(G, cG)
    out = p_mul(_from_main_var(G, shift), cont)
    c = p_icontent(out)
    if c > 1:
        out = p_idiv(out, c)
    if out and out[max(out)] < 0:
        out = p_neg(out)
    return out


def p_gcd(a, b):
    """Positive-leading gcd over Z, including integer and monomial content."""
    if not a:
        if not b:
            return {}
        g = dict(b)
        return p_neg(g) if g[max(g)] < 0 else g
    if not b:
        g = dict(a)
        return p_neg(g) if g[max(g)] < 0 else g
    ma = p_mono_content(a)
    mb = p_mono_content(b)
    mono = 0
    if ma or mb:
        xa, ya, za = key_exps(ma)
        xb, yb, zb = key_exps(mb)
        mono = (min(xa, xb) << SHIFT_S) | (min(ya, yb) << SHIFT_U) | min(za, zb)
        a = p_shift_down(a, ma)
        b = p_shift_down(b, mb)
    ia = p_icontent(a)
    ib = p_icontent(b)
    ic = igcd(ia, ib)
    if ia > 1:
        a = p_idiv(a, ia)
    if ib > 1:
        b = p_idiv(b, ib)
    if len(a) == 1 or len(b) == 1:
        core = dict(PONE)  # primitive parts share no monomial now
    elif a == b or a == p_neg(b):
        core = p_neg(a) if a[max(a)] < 0 else dict(a)
    else:
        core = _gcd_core(a, b)
    return p_mul(core, {mono: ic})


def _gcd_core(a, b):
    """gcd of primitive multi-term polynomials."""
    while True:
        da = [p_degree(a, sh) for sh in (SHIFT_S, SHIFT_U, 0)]
        db = [p_degree(b, sh) for sh in (SHIFT_S, SHIFT_U, 0)]
        both = [(max(da[i], db[i]), i) for i in range(3) if da[i] > 0 and db[i] > 0]
        if not both:
            # every shared variable is constant in one input: the gcd lies in
            # the other's coefficient content w.r.t. that variable
            for i in range(3):
                sh = (SHIFT_S, SHIFT_U, 0)[i]
                if da[i] > 0 and db[i] <= 0:
                    a = _poly_content(_to_main_var(a, sh))
                    break
                if db[i] > 0 and da[i] <= 0:
                    b = _poly_content(_to_main_var(b, sh))
                    break
            else:
                return dict(PONE)
            if p_is_const(a) or p_is_const(b):
                return dict(PONE)
            continue
        uni_a = sum(1 for d in da if d > 0) == 1
        uni_b = sum(1 for d in db if d > 0) == 1
        if uni_a and uni_b and both:
            sh = (SHIFT_S, SHIFT_U, 0)[both[0][1]]
            core = _gcd_heuristic_uni(a, b, sh)
            if core is None:
                core = _gcd_prs(a, b, sh)
        else:
            _, i = min(both)
            core = _gcd_prs(a, b, (SHIFT_S, SHIFT_U, 0)[i])
        if core and core[max(core)] < 0:
            core = p_neg(core)
        return core
