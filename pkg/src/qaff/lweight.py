"""Loop-weights, the cross partial order, and exact eigenspace decomposition.

A loop-weight is a rational function psi(z) with psi(0) = q^n recording the
joint generalized eigenvalue of the phi^+ series; n is its ordinary weight.
Decomposition of a module (or tensor product) into joint generalized
eigenspaces of the derived h operators is computed blockwise per total
weight, using the triangularity of the h actions in the basis ordered by
descending first-factor weight; candidate loop-weights are recovered from
eigenvalue series by rational reconstruction and certified against every
computed coefficient.
"""

from __future__ import annotations

from .scalarfield import (
    Frac,
    ONE,
    Q,
    ReconstructionError,
    SeriesZ,
    U,
    ZERO,
    qpow,
    rational_reconstruct,
    series_log,
)

QQI = Q - Q.inv()


class LWeightError(ValueError):
    pass


class DecompositionError(RuntimeError):
    """Blocks could not be separated or certified; carries the block data."""


# -- polynomials in z over the fraction field --------------------------------


def _ztrim(c):
    while len(c) > 1 and c[-1].is_zero():
        c.pop()
    if not c:
        c.append(ZERO)
    return c


def _zmul(a, b):
    out = [ZERO] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x.is_zero():
            continue
        for j, y in enumerate(b):
            if not y.is_zero():
                out[i + j] = out[i + j] + x * y
    return _ztrim(out)


def _zdivmod(a, b):
    b = _ztrim(list(b))
    r = _ztrim(list(a))
    db = len(b) - 1
    inv = b[-1].inv()
    q = [ZERO] * max(len(r) - db, 1)
    while len(r) - 1 >= db and not (len(r) == 1 and r[0].is_zero()):
        f = r[-1] * inv
        pos = len(r) - 1 - db
        q[pos] = f
        for j in range(db + 1):
            r[pos + j] = r[pos + j] - f * b[j]
        r.pop()  # leading term cancels exactly
        _ztrim(r)
    return _ztrim(q), _ztrim(r)


def _zgcd(a, b):
    a = _ztrim(list(a))
    b = _ztrim(list(b))
    while not (len(b) == 1 and b[0].is_zero()):
        _, r = _zdivmod(a, b)
        a, b = b, r
    if len(a) == 1 and a[0].is_zero():
        return [ONE]
    lead = a[-1].inv()
    return [c * lead for c in a]


class LWeight:
    """Rational function psi(z) with weight n fixed by psi(0) = q^n."""

    __slots__ = ("num", "den", "weight", "_hash")

    def __init__(self, num, den, weight=None):
        num = _ztrim([c if isinstance(c, Frac) else Frac.from_int(c) for c in num])
        den = _ztrim([c if isinstance(c, Frac) else Frac.from_int(c) for c in den])
        if all(c.is_zero() for c in den):
            raise LWeightError("zero denominator")
        g = _zgcd(num, den)
        if len(g) > 1:
            num, _ = _zdivmod(num, g)
            den, _ = _zdivmod(den, g)
        if den[0].is_zero() or num[0].is_zero():
            raise LWeightError("loop-weight must be nonzero and finite at z = 0")
        d0 = den[0].inv()
        num = [c * d0 for c in num]
        den = [c * d0 for c in den]
        if weight is None:
            weight = _weight_from_constant(num[0])
        elif num[0] != qpow(weight):
            raise LWeightError(
                f"psi(0) = {num[0]} inconsistent with weight {weight}"
            )
        self.num = tuple(num)
        self.den = tuple(den)
        self.weight = weight
        self._hash = None

    # -- group structure -------------------------------------------------

    def __mul__(self, other: "LWeight") -> "LWeight":
        return LWeight(
            _zmul(list(self.num), list(other.num)),
            _zmul(list(self.den), list(other.den)),
            self.weight + other.weight,
        )

    def inv(self) -> "LWeight":
        return LWeight(list(self.den), list(self.num), -self.weight)

    def __truediv__(self, other: "LWeight") -> "LWeight":
        return self * other.inv()

    def __eq__(self, other):
        return (
            isinstance(other, LWeight)
            and self.num == other.num
            and self.den == other.den
        )

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.num, self.den))
        return self._hash

    # -- transforms --------------------------------------------------------

    def subst_z_scale(self, c: Frac) -> "LWeight":
        """psi(z) -> psi(z*c); the weight is unchanged."""
        num = [x * c**t for t, x in enumerate(self.num)]
        den = [x * c**t for t, x in enumerate(self.den)]
        return LWeight(num, den, self.weight)

    def u_deform(self) -> "LWeight":
        return self.subst_z_scale(U)

    def spectral_shift(self, s: Frac) -> "LWeight":
        return self.subst_z_scale(s)

    def normalized(self) -> "LWeight":
        """The weight-zero part: psi / q^weight."""
        c = qpow(-self.weight)
        return LWeight([x * c for x in self.num], list(self.den), 0)

    def h_series(self, order: int) -> SeriesZ:
        """h_{1,m} eigenvalues: log(psi(z)/psi(0)) / (q - q^{-1})."""
        inv0 = self.num[0].inv()
        T = order
        numn = SeriesZ([c * inv0 for c in self.num], T)
        expanded = _series_div(numn, SeriesZ(list(self.den), T))
        return series_log(expanded) * QQI.inv()

    def psi_coefficient(self, m: int, order: int) -> Frac:
        """Taylor coefficient Psi_m of psi(z)."""
        numn = SeriesZ(list(self.num), order)
        return _series_div(numn, SeriesZ(list(self.den), order))[m]

    def __str__(self):
        ns = " + ".join(f"({c})z^{t}" if t else f"({c})" for t, c in enumerate(self.num))
        if len(self.den) == 1 and self.den[0] == ONE:
            return ns
        ds = " + ".join(f"({c})z^{t}" if t else f"({c})" for t, c in enumerate(self.den))
        return f"[{ns}] / [{ds}]"

    def to_json(self):
        from .scalarfield import render

        return {
            "psi_num": [render(c) for c in self.num],
            "psi_den": [render(c) for c in self.den],
            "weight": self.weight,
        }


def _series_div(a: SeriesZ, b: SeriesZ) -> SeriesZ:
    T = min(a.order, b.order)
    inv0 = b[0].inv()
    out = [ZERO] * (T + 1)
    for t in range(T + 1):
        acc = a[t]
        for j in range(1, t + 1):
            acc = acc - b[j] * out[t - j]
        out[t] = acc * inv0
    return SeriesZ(out, T)


def _weight_from_constant(c: Frac) -> int:
    num, den = c.num, c.den
    if len(num) != 1 or len(den) != 1:
        raise LWeightError(f"psi(0) = {c} is not a power of q")
    (kn, cn), = num.items()
    (kd, cd), = den.items()
    if cn != 1 or cd != 1 or (kn and kd):
        raise LWeightError(f"psi(0) = {c} is not a power of q")
    es = (kn >> 42) - (kd >> 42)
    if es % 2 or (kn & ((1 << 42) - 1)) or (kd & ((1 << 42) - 1)):
        raise LWeightError(f"psi(0) = {c} is not an integer power of q")
    return es // 2


# -- monomials ----------------------------------------------------------------


def psi_monomial(sign: str, a: Frac) -> LWeight:
    """(1 - za)^{+-1}, weight 0."""
    if a.is_zero():
        raise LWeightError("spectral parameter must be nonzero")
    if sign == "+":
        return LWeight([ONE, -a], [ONE], 0)
    if sign == "-":
        return LWeight([ONE], [ONE, -a], 0)
    raise LWeightError("sign must be '+' or '-'")


def y_monomial(a: Frac) -> LWeight:
    """Y_a = q (1 - zaq^{-1})/(1 - zaq), weight 1."""
    if a.is_zero():
        raise LWeightError("spectral parameter must be nonzero")
    return LWeight([Q, -a], [ONE, -a * Q], 1)


def a_monomial(a: Frac) -> LWeight:
    """A_a = Y_{aq^{-1}} Y_{aq} (no neighbor factors at sl2), weight 2."""
    return y_monomial(a * Q.inv()) * y_monomial(a * Q)


def onedim_lweight(n: int) -> LWeight:
    return LWeight([qpow(n)], [ONE], n)


def eval_lweight(k: int, i: int, a: Frac) -> LWeight:
    """Loop-weight of v_i in the evaluation module W_k at spectral a."""
    out = onedim_lweight(0)
    for j in range(i, k):
        out = out * y_monomial(a * qpow(-1 - 2 * j))
    for j in range(i):
        out = out * y_monomial(a * qpow(1 - 2 * j)).inv()
    return out


def lplus_lweight(i: int, a: Frac) -> LWeight:
    """(1 - za) shifted by [-2i omega_1]."""
    return psi_monomial("+", a) * onedim_lweight(-2 * i)


def lminus_lweight(j: int, a: Frac) -> LWeight:
    """(1 - za)^{-1} A^{-1}_a A^{-1}_{aq^-2} ... (j factors)."""
    out = psi_monomial("-", a)
    for r in range(j):
        out = out * a_monomial(a * qpow(-2 * r)).inv()
    return out


# -- cross partial order -------------------------------------------------------


def weight_leq(a: int, b: int) -> bool:
    return b - a >= 0 and (b - a) % 2 == 0


def cross_compare(p1, p2) -> str:
    """The pair order: p1 >= p2 iff totals agree and p1's first <= p2's first.

    This is the formal orientation of the published ordering; the stable-map
    construction adds correction terms with strictly LOWER first-factor
    weight, i.e. along strictly cross-GREATER pairs (see stablemap).
    """
    (a, b), (c, d) = p1, p2
    if a + b != c + d:
        return "incomparable"
    if a == c:
        return "equal"
    if weight_leq(a, c):
        return "p1_greater"
    if weight_leq(c, a):
        return "p2_greater"
    return "incomparable"


# -- blockwise decomposition ---------------------------------------------------


class LBlock:
    """A joint generalized eigenspace: loop-weight, basis indices, nilpotency."""

    __slots__ = ("lweight", "indices", "nilpotency", "weight")

    def __init__(self, lweight, indices, nilpotency, weight):
        self.lweight = lweight
        self.indices = list(indices)
        self.nilpotency = nilpotency
        self.weight = weight

    def __repr__(self):
        return f"LBlock(weight={self.weight}, dim={len(self.indices)}, r={self.nilpotency})"


def weight_blocks(mod) -> dict[int, list[int]]:
    """Total-weight -> flat indices in triangular order.

    Indices are ordered by descending per-factor weight tuples (last factor
    omitted: it is fixed by the total), which makes every derived h operator
    lower-triangular.
    """
    blocks: dict[int, list[int]] = {}
    for i, w in enumerate(mod.weights):
        blocks.setdefault(w, []).append(i)
    facts = mod.factors

    def key(flat):
        idx = mod.index_tuple(flat)
        return tuple(-facts[t].weights[idx[t]] for t in range(len(facts) - 1))

    for w in blocks:
        blocks[w].sort(key=key)
    return blocks


def _assert_triangular(H, order_pos, ctx):
    for (r, c), v in H.ent.items():
        if order_pos[r] < order_pos[c]:
            raise DecompositionError(
                f"h operator not lower-triangular in the sorted basis ({ctx}); "
                f"entry {r},{c} = {v}"
            )


def block_tuples(mod, indices, max_m):
    """Diagonal eigenvalue tuples of h_1..h_max_m on a sorted weight block."""
    pos = {b: t for t, b in enumerate(indices)}
    tuples = {b: [] for b in indices}
    for m in range(1, max_m + 1):
        H = mod.derived("h", m)
        Hb = H.restrict(indices)
        _assert_triangular(Hb, {t: t for t in range(len(indices))}, f"h_{m}")
        for t, b in enumerate(indices):
            tuples[b].append(Hb[(t, t)])
    return tuples


def refine_classes(indices, tuples, max_m):
    """Partition block indices by their eigenvalue tuples, refining in m."""
    classes = [list(indices)]
    used = 0
    for m in range(max_m):
        if all(len(c) == 1 for c in classes):
            break
        nxt = []
        for cls in classes:
            if len(cls) == 1:
                nxt.append(cls)
                continue
            groups: dict = {}
            for b in cls:
                groups.setdefault(tuples[b][m], []).append(b)
            nxt.extend(groups.values())
        classes = nxt
        used = m + 1
    return classes, used


def default_max_m(mod, requested=None):
    """Separation/certification order, capped by the truncation buffer."""
    budget = psi_budget(mod)
    need = budget[0] + budget[1] + 1
    dims = {}
    for w in mod.weights:
        dims[w] = dims.get(w, 0) + 1
    need = max(need, max(dims.values()))
    if requested is not None:
        need = requested
    cap = mod.min_buffer()
    if cap is not None:
        need = min(need, cap)
    return max(1, need)


def psi_budget(mod):
    dn = dd = 0
    for f in mod.factors:
        b = f.family.get("psi_budget", (2, 2))
        dn += b[0]
        dd += b[1]
    return (dn, dd)


def lweight_decompose(mod, max_m: int | None = None) -> list[LBlock]:
    """Joint generalized eigenspace decomposition, certified per block."""
    max_m = default_max_m(mod, max_m)
    dn, dd = psi_budget(mod)
    out = []
    blocks = weight_blocks(mod)
    for w in sorted(blocks, reverse=True):
        indices = blocks[w]
        tuples = block_tuples(mod, indices, max_m)
        classes, _ = refine_classes(indices, tuples, max_m)
        for cls in sorted(classes, key=lambda c: c[0]):
            gamma = tuples[cls[0]]
            psi = reconstruct_lweight(gamma, w, dn, dd, max_m, ctx=str(cls))
            r = _nilpotency(mod, indices, cls, gamma, max_m)
            out.append(LBlock(psi, cls, r, w))
    return out


def reconstruct_lweight(gamma, weight, dn, dd, max_m, ctx="") -> LWeight:
    """Certified rational loop-weight from an h-eigenvalue tuple."""
    from .scalarfield import series_exp

    log_series = SeriesZ([ZERO] + [g * QQI for g in gamma], max_m)
    psi_norm = series_exp(log_series)
    try:
        rec = rational_reconstruct(psi_norm, min(dn, max_m - 1), min(dd, max_m - 1))
    except ReconstructionError as e:
        raise DecompositionError(
            f"loop-weight reconstruction failed for block {ctx}: {e}"
        ) from e
    qn = qpow(weight)
    return LWeight([c * qn for c in rec.num], list(rec.den), weight)


def _nilpotency(mod, block_indices, cls, gamma, max_m) -> int:
    if len(cls) == 1:
        return 1
    # nilpotency of (h_1 - gamma_1) on the class; exact when the class spans
    # its own coordinate subspace (equal tuples => invariant subspace here)
    H = mod.derived("h", 1).restrict(cls)
    N = H - LinearOpDiag(len(cls), gamma[0])
    r = 1
    M = N
    while not M.is_zero():
        M = M * N
        r += 1
        if r > len(cls) + 1:
            raise DecompositionError("nilpotency did not terminate")
    return r


def LinearOpDiag(n, c):
    from .linop import LinearOp

    return LinearOp(n, n, {(i, i): c for i in range(n)})


def qcharacter(mod, max_m: int | None = None):
    """Multiset of loop-weights with multiplicities (trusted indices only)."""
    blocks = lweight_decompose(mod, max_m)
    counts: dict[LWeight, int] = {}
    order = []
    for blk in blocks:
        trusted = [i for i in blk.indices if mod.trusted_flat(i)]
        if not trusted:
            continue
        if blk.lweight not in counts:
            counts[blk.lweight] = 0
            order.append(blk.lweight)
        counts[blk.lweight] += len(trusted)
    return [(w, counts[w]) for w in order]


def constant_part_from_normalized(psi_tilde: LWeight, highest: LWeight) -> int:
    """Weight forced by a normalized part, in a highest-loop-weight context.

    The quotient by the highest normalized part must be a product of N
    normalized A^{-1} factors; each contributes q^4 to the z -> infinity
    limit regardless of its spectral parameter, so N is read off the
    leading-coefficient ratio and the weight is highest - 2N.
    """
    x = psi_tilde.normalized() / highest.normalized()
    num, den = list(x.num), list(x.den)
    if len(num) != len(den):
        raise LWeightError("quotient is not a balanced product of A^{-1} factors")
    if len(num) == 1:
        if num[0] != den[0]:
            raise LWeightError("constant quotient should be 1")
        return highest.weight
    ratio = num[-1] / den[-1]
    n = _weight_from_constant(ratio)
    if n < 0 or n % 4:
        raise LWeightError(f"leading ratio q^{n} is not of the form q^(4N)")
    return highest.weight - 2 * (n // 4)
