"""Sparse linear operators over the exact fraction field.

Entries are kept in canonical form and zero entries are never stored, so
two equal operators compare equal as dicts.  Operators are maps between
labelled bases; the labels travel along so tensor and block bookkeeping
stays readable in reports.
"""

from __future__ import annotations

from .scalarfield import Frac, ONE, ZERO, qfact, qfact_primed


class LinOpError(ValueError):
    pass


class LinearOp:
    """Sparse matrix over Q(s,u,v) with basis label references."""

    __slots__ = ("nrows", "ncols", "ent", "row_labels", "col_labels", "_rows")

    def __init__(self, nrows, ncols, ent=None, row_labels=None, col_labels=None):
        self.nrows = nrows
        self.ncols = ncols
        self.ent: dict[tuple[int, int], Frac] = {}
        if ent:
            for rc, val in ent.items():
                if not val.is_zero():
                    self.ent[rc] = val
        self.row_labels = row_labels
        self.col_labels = col_labels
        self._rows = None

    # -- constructors --------------------------------------------------

    @staticmethod
    def identity(n, labels=None) -> "LinearOp":
        return LinearOp(n, n, {(i, i): ONE for i in range(n)}, labels, labels)

    @staticmethod
    def zero(nrows, ncols, row_labels=None, col_labels=None) -> "LinearOp":
        return LinearOp(nrows, ncols, {}, row_labels, col_labels)

    @staticmethod
    def diagonal(values, labels=None) -> "LinearOp":
        n = len(values)
        return LinearOp(
            n, n, {(i, i): v for i, v in enumerate(values)}, labels, labels
        )

    def identity_like(self) -> "LinearOp":
        if self.nrows != self.ncols:
            raise LinOpError("identity_like needs a square operator")
        return LinearOp.identity(self.nrows, self.row_labels)

    def copy(self) -> "LinearOp":
        return LinearOp(self.nrows, self.ncols, dict(self.ent), self.row_labels, self.col_labels)

    # -- structure -------------------------------------------------------

    def _by_col(self):
        if self._rows is None:
            cols: dict[int, list[tuple[int, Frac]]] = {}
            for (r, c), v in self.ent.items():
                cols.setdefault(c, []).append((r, v))
            self._rows = cols
        return self._rows

    def __getitem__(self, rc) -> Frac:
        return self.ent.get(rc, ZERO)

    def is_zero(self) -> bool:
        return not self.ent

    def is_identity(self) -> bool:
        return self.nrows == self.ncols and self.ent == {
            (i, i): ONE for i in range(self.nrows)
        }

    def __eq__(self, other):
        return (
            isinstance(other, LinearOp)
            and self.nrows == other.nrows
            and self.ncols == other.ncols
            and self.ent == other.ent
        )

    # -- arithmetic --------------------------------------------------------

    def __add__(self, other: "LinearOp") -> "LinearOp":
        if (self.nrows, self.ncols) != (other.nrows, other.ncols):
            raise LinOpError("shape mismatch in +")
        ent = dict(self.ent)
        for rc, v in other.ent.items():
            w = ent.get(rc, ZERO) + v
            if w.is_zero():
                ent.pop(rc, None)
            else:
                ent[rc] = w
        out = LinearOp(self.nrows, self.ncols, None, self.row_labels, self.col_labels)
        out.ent = ent
        return out

    def __sub__(self, other: "LinearOp") -> "LinearOp":
        return self + other.scale(-ONE)

    def scale(self, c: Frac) -> "LinearOp":
        if c.is_zero():
            return LinearOp.zero(self.nrows, self.ncols, self.row_labels, self.col_labels)
        return LinearOp(
            self.nrows,
            self.ncols,
            {rc: c * v for rc, v in self.ent.items()},
            self.row_labels,
            self.col_labels,
        )

    def __mul__(self, other: "LinearOp") -> "LinearOp":
        """Composition self ∘ other."""
        if self.ncols != other.nrows:
            raise LinOpError("shape mismatch in *")
        self_cols = self._by_col()
        other_cols: dict[int, list[tuple[int, Frac]]] = {}
        for (r, c), v in other.ent.items():
            other_cols.setdefault(c, []).append((r, v))
        ent: dict[tuple[int, int], Frac] = {}
        for c, col_terms in other_cols.items():
            acc: dict[int, Frac] = {}
            for k, bv in col_terms:
                for r, av in self_cols.get(k, ()):  # self[r,k] * other[k,c]
                    w = acc.get(r, ZERO) + av * bv
                    acc[r] = w
            for r, w in acc.items():
                if not w.is_zero():
                    ent[(r, c)] = w
        out = LinearOp(self.nrows, other.ncols, None, self.row_labels, other.col_labels)
        out.ent = ent
        return out

    def commutator(self, other: "LinearOp") -> "LinearOp":
        return self * other - other * self

    def power_applications(self, max_power: int):
        """Yields self^1, self^2, ... up to max_power, stopping at zero."""
        acc = self
        for _ in range(max_power):
            if acc.is_zero():
                return
            yield acc
            acc = self * acc

    def apply(self, vec: dict[int, Frac]) -> dict[int, Frac]:
        out: dict[int, Frac] = {}
        cols = self._by_col()
        for c, x in vec.items():
            if x.is_zero():
                continue
            for r, v in cols.get(c, ()):  # accumulate column action
                w = out.get(r, ZERO) + v * x
                out[r] = w
        return {r: v for r, v in out.items() if not v.is_zero()}

    def map_entries(self, f) -> "LinearOp":
        return LinearOp(
            self.nrows,
            self.ncols,
            {rc: f(v) for rc, v in self.ent.items()},
            self.row_labels,
            self.col_labels,
        )

    def restrict(self, indices) -> "LinearOp":
        """Square restriction to the given basis indices (in their order)."""
        pos = {b: i for i, b in enumerate(indices)}
        ent = {}
        for (r, c), v in self.ent.items():
            if r in pos and c in pos:
                ent[(pos[r], pos[c])] = v
        labels = [self.row_labels[b] for b in indices] if self.row_labels else None
        return LinearOp(len(indices), len(indices), ent, labels, labels)

    def entries_sorted(self):
        return sorted(self.ent.items())

    def __str__(self):
        lines = [f"LinearOp {self.nrows}x{self.ncols}:"]
        for (r, c), v in self.entries_sorted():
            rl = self.row_labels[r] if self.row_labels else r
            cl = self.col_labels[c] if self.col_labels else c
            lines.append(f"  [{rl} <- {cl}] {v}")
        return "\n".join(lines)


def kron(a: LinearOp, b: LinearOp) -> LinearOp:
    """Kronecker product; row-major index (i*b.nrows + j)."""
    ent = {}
    for (ra, ca), va in a.ent.items():
        for (rb, cb), vb in b.ent.items():
            ent[(ra * b.nrows + rb, ca * b.ncols + cb)] = va * vb
    labels_r = None
    labels_c = None
    if a.row_labels and b.row_labels:
        labels_r = [f"{x}|{y}" for x in a.row_labels for y in b.row_labels]
    if a.col_labels and b.col_labels:
        labels_c = [f"{x}|{y}" for x in a.col_labels for y in b.col_labels]
    return LinearOp(a.nrows * b.nrows, a.ncols * b.ncols, ent, labels_r, labels_c)


def embed_two_site(op: LinearOp, dims: list[int], p: int, q: int, labels=None) -> LinearOp:
    """Embed a two-site operator at tensor positions p < q of an N-site space.

    `op` acts on the pure-tensor basis of (factor p) x (factor q) with
    row-major indexing; all other positions carry the identity.
    """
    n = len(dims)
    total = 1
    for d in dims:
        total *= d
    strides = [1] * n
    for i in range(n - 2, -1, -1):
        strides[i] = strides[i + 1] * dims[i + 1]

    def decompose(flat):
        idx = []
        for i in range(n):
            idx.append(flat // strides[i])
            flat %= strides[i]
        return idx

    ent = {}
    for flat in range(total):
        idx = decompose(flat)
        key = idx[p] * dims[q] + idx[q]
        col_action = [
            (rc[0], v) for rc, v in op.ent.items() if rc[1] == key
        ]
        for r2, v in col_action:
            jdx = list(idx)
            jdx[p] = r2 // dims[q]
            jdx[q] = r2 % dims[q]
            row = sum(j * st for j, st in zip(jdx, strides))
            ent[(row, flat)] = v
    return LinearOp(total, total, ent, labels, labels)


def qexp_operator(base_exponent: int, X: LinearOp, variant: str = "primed") -> LinearOp:
    """q-exponential of a nilpotent operator.

    exp_{q^p}(X) = sum_r X^r / [r]'_{q^p}!  (primed variant), or with the
    plain q-factorial for variant="standard".  The sum must terminate by
    nilpotency within dim+1 powers; otherwise the guard trips.
    """
    from .scalarfield import Q

    if variant not in ("primed", "standard"):
        raise LinOpError(f"unknown q-exponential variant {variant!r}")
    base = Q**base_exponent
    out = X.identity_like()
    term = X.identity_like()
    r = 0
    while True:
        term = term * X
        r += 1
        if term.is_zero():
            return out
        if r > X.nrows + 1:
            raise LinOpError(
                f"q-exponential argument not nilpotent within dimension+1 "
                f"({X.nrows}) powers"
            )
        fact = qfact_primed(r, base) if variant == "primed" else qfact(r, base)
        out = out + term.scale(fact.inv())
