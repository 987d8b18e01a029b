"""Exact structure data for the simple Lie algebras behind the hierarchies.

Everything is realized concretely inside sl_n over Q: matrices are nested
tuples of Fractions, the bracket is the matrix commutator, and the invariant
form is the trace form (a|b) = tr(ab).  Three layers of data are provided:

* `LieAlgebraData` — a basis of sl_n with exact structure constants and the
  form matrix;
* `RootDatum` — a root-space decomposition relative to a regular diagonal
  element, with evaluation tables for the roots;
* `SL2TripleData` — an sl2-triple (f, x, e) together with the ad x grading,
  graded bases, trace-dual bases, the orthogonal projection onto the
  grade-zero centralizer of f, and (in the short case) the Jordan and circle
  product tables.

Bases are rational, not orthonormal (orthonormal bases do not exist over Q
for these forms); every inner-product contraction downstream goes through
the stored Gram matrices and their exact inverses.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Sequence

Matrix = tuple[tuple[Fraction, ...], ...]

__all__ = [
    "LieAlgebraData",
    "RootDatum",
    "SL2TripleData",
    "build_sl",
    "root_basis",
    "minimal_triple",
    "short_triple",
    "inverse_matrix",
]


# --------------------------------------------------------------------------
# exact matrix helpers
# --------------------------------------------------------------------------


def _frac(v) -> Fraction:
    return v if isinstance(v, Fraction) else Fraction(v)


def _zero(n: int) -> Matrix:
    return tuple((Fraction(0),) * n for _ in range(n))


def _elem(i: int, j: int, n: int) -> Matrix:
    """Elementary matrix E_ij (1-based indices)."""
    return tuple(
        tuple(Fraction(1) if (r, c) == (i - 1, j - 1) else Fraction(0)
              for c in range(n))
        for r in range(n)
    )


def _diag(entries: Sequence[Fraction]) -> Matrix:
    n = len(entries)
    return tuple(
        tuple(_frac(entries[r]) if r == c else Fraction(0) for c in range(n))
        for r in range(n)
    )


def _add(A: Matrix, B: Matrix) -> Matrix:
    return tuple(tuple(a + b for a, b in zip(ra, rb)) for ra, rb in zip(A, B))


def _sub(A: Matrix, B: Matrix) -> Matrix:
    return tuple(tuple(a - b for a, b in zip(ra, rb)) for ra, rb in zip(A, B))


def _scale(A: Matrix, c: Fraction) -> Matrix:
    return tuple(tuple(c * a for a in ra) for ra in A)


def _mul(A: Matrix, B: Matrix) -> Matrix:
    n = len(A)
    cols = list(zip(*B))
    return tuple(
        tuple(sum(a * b for a, b in zip(ra, col)) for col in cols)
        for ra in A
    )


def _comm(A: Matrix, B: Matrix) -> Matrix:
    return _sub(_mul(A, B), _mul(B, A))


def _tr_pair(A: Matrix, B: Matrix) -> Fraction:
    # tr(AB) without forming the product.
    return sum(
        (A[r][c] * B[c][r] for r in range(len(A)) for c in range(len(A))),
        Fraction(0),
    )


def _is_zero(A: Matrix) -> bool:
    return all(not a for ra in A for a in ra)


def inverse_matrix(rows: Sequence[Sequence[Fraction]]) -> Matrix:
    """Exact inverse of a square matrix over Fraction (Gauss-Jordan).

    Raises ValueError if the matrix is singular.  The empty 0x0 matrix is
    its own inverse.
    """
    m = len(rows)
    aug = [[_frac(v) for v in row] + [Fraction(int(r == c)) for c in range(m)]
           for r, row in enumerate(rows)]
    for col in range(m):
        piv = next((r for r in range(col, m) if aug[r][col]), None)
        if piv is None:
            raise ValueError("matrix is singular")
        aug[col], aug[piv] = aug[piv], aug[col]
        inv = 1 / aug[col][col]
        aug[col] = [a * inv for a in aug[col]]
        for r in range(m):
            if r != col and aug[r][col]:
                fac = aug[r][col]
                aug[r] = [a - fac * b for a, b in zip(aug[r], aug[col])]
    return tuple(tuple(row[m:]) for row in aug)


def _span_solve(coord_rows: Sequence[Sequence[Fraction]],
                target: Sequence[Fraction]) -> tuple[Fraction, ...]:
    """Solve sum_k c_k * coord_rows[k] = target exactly.

    Raises ValueError when the target is outside the span.  Assumes the rows
    are linearly independent (true for all stored bases).
    """
    rows = [list(r) + [Fraction(int(i == k)) for i in range(len(coord_rows))]
            for k, r in enumerate(coord_rows)]
    tgt = list(target)
    width = len(tgt)
    combo = [Fraction(0)] * len(coord_rows)
    for row in rows:
        lead = next((c for c in range(width) if row[c]), None)
        if lead is None:
            continue
        if tgt[lead]:
            fac = tgt[lead] / row[lead]
            for c in range(len(row)):
                if c < width:
                    tgt[c] -= fac * row[c]
                else:
                    combo[c - width] += fac * row[c]
        # eliminate this pivot from the remaining rows
        for other in rows:
            if other is not row and other[lead]:
                f2 = other[lead] / row[lead]
                for c in range(len(row)):
                    other[c] -= f2 * row[c]
    if any(tgt):
        raise ValueError("element is outside the span of the basis")
    return tuple(combo)


def _rank(rows: Iterable[Sequence[Fraction]]) -> int:
    work: list[list[Fraction]] = []
    for row in rows:
        r = list(row)
        for lead_row in work:
            lead = next(c for c, v in enumerate(lead_row) if v)
            if r[lead]:
                fac = r[lead] / lead_row[lead]
                r = [a - fac * b for a, b in zip(r, lead_row)]
        if any(r):
            work.append(r)
    return len(work)


# --------------------------------------------------------------------------
# LieAlgebraData
# --------------------------------------------------------------------------


class LieAlgebraData:
    """Basis, structure constants, and trace form of sl_n over Q.

    Elements of the algebra are n x n matrices (nested tuples of Fraction);
    `coords`/`from_coords` convert between matrices and coordinate tuples
    relative to the stored basis.
    """

    __slots__ = ("name", "n", "dim", "labels", "basis", "form",
                 "structure", "_by_label")

    def __init__(self, name: str, n: int, labels: Sequence[str],
                 basis: Sequence[Matrix]):
        self.name = name
        self.n = n
        self.labels = tuple(labels)
        self.basis = tuple(basis)
        self.dim = len(self.basis)
        self._by_label = dict(zip(self.labels, self.basis))
        self.form = tuple(
            tuple(_tr_pair(a, b) for b in self.basis) for a in self.basis
        )
        structure: dict[tuple[int, int], dict[int, Fraction]] = {}
        for i, a in enumerate(self.basis):
            for j, b in enumerate(self.basis):
                if j <= i:
                    continue
                cs = self.coords(_comm(a, b))
                entry = {k: c for k, c in enumerate(cs) if c}
                if entry:
                    structure[(i, j)] = entry
                    structure[(j, i)] = {k: -c for k, c in entry.items()}
        self.structure = structure

    # -- element conversions ------------------------------------------------

    def matrix_of(self, label: str) -> Matrix:
        return self._by_label[label]

    def coords(self, A: Matrix) -> tuple[Fraction, ...]:
        n = self.n
        if sum((A[i][i] for i in range(n)), Fraction(0)):
            raise ValueError("matrix is not traceless")
        out = []
        for lab in self.labels:
            if lab.startswith("E"):
                i, j = self._elem_indices(lab)
                out.append(_frac(A[i - 1][j - 1]))
            else:  # h_k: coefficient is the prefix sum of the diagonal
                k = int(lab[1:])
                out.append(sum((A[i][i] for i in range(k)), Fraction(0)))
        return tuple(out)

    def from_coords(self, cs: Sequence[Fraction]) -> Matrix:
        A = _zero(self.n)
        for c, b in zip(cs, self.basis):
            if c:
                A = _add(A, _scale(b, _frac(c)))
        return A

    @staticmethod
    def _elem_indices(label: str) -> tuple[int, int]:
        body = label[1:]
        half = len(body) // 2
        return int(body[:half]), int(body[half:])

    # -- algebra operations ---------------------------------------------------

    def bracket(self, A: Matrix, B: Matrix) -> Matrix:
        return _comm(A, B)

    def pair(self, A: Matrix, B: Matrix) -> Fraction:
        return _tr_pair(A, B)

    def structure_coords(self, i: int, j: int) -> tuple[Fraction, ...]:
        entry = self.structure.get((i, j), {})
        return tuple(entry.get(k, Fraction(0)) for k in range(self.dim))

    # -- invariants ----------------------------------------------------------

    def validate(self) -> None:
        """Check antisymmetry, Jacobi, invariance, and the form axioms."""
        bas = self.basis
        if self.form != tuple(tuple(col for col in row) for row in
                              zip(*self.form)):
            raise ValueError("form is not symmetric")
        inverse_matrix(self.form)  # raises when degenerate
        table = [[_comm(a, b) for b in bas] for a in bas]
        for i in range(self.dim):
            for j in range(self.dim):
                if table[i][j] != _scale(table[j][i], Fraction(-1)):
                    raise ValueError("bracket is not antisymmetric")
        for i in range(self.dim):
            for j in range(self.dim):
                for k in range(self.dim):
                    jac = _add(
                        _comm(table[i][j], bas[k]),
                        _add(_comm(table[j][k], bas[i]),
                             _comm(table[k][i], bas[j])),
                    )
                    if not _is_zero(jac):
                        raise ValueError("Jacobi identity fails")
                    if _tr_pair(table[i][j], bas[k]) != _tr_pair(
                            bas[i], table[j][k]):
                        raise ValueError("form is not invariant")


def build_sl(n: int) -> LieAlgebraData:
    """sl_n with the elementary-matrix basis and the trace form.

    Basis order: off-diagonal E_ij in lexicographic (i, j) order, then the
    simple coweights h_k = E_kk - E_(k+1)(k+1).
    """
    if n < 2:
        raise ValueError("sl_n needs n >= 2")
    labels: list[str] = []
    basis: list[Matrix] = []
    for i in range(1, n + 1):
        for j in range(1, n + 1):
            if i != j:
                labels.append(f"E{i}{j}")
                basis.append(_elem(i, j, n))
    for k in range(1, n):
        labels.append(f"h{k}")
        basis.append(_sub(_elem(k, k, n), _elem(k + 1, k + 1, n)))
    return LieAlgebraData(f"sl{n}", n, labels, basis)


# --------------------------------------------------------------------------
# RootDatum
# --------------------------------------------------------------------------


class RootDatum:
    """Root decomposition of sl_n relative to a regular diagonal element.

    Roots are labelled by ordered pairs (i, j), i != j, meaning the weight
    sending diag(t) to t_i - t_j; the root vector of (i, j) is E_ij, which
    already satisfies (e_a | e_-a) = 1 under the trace form.
    """

    __slots__ = ("algebra", "cartan_basis", "cartan_gram", "roots",
                 "s_matrix", "a_matrix", "alpha_s", "alpha_a", "alpha_x",
                 "pairing")

    def __init__(self, algebra: LieAlgebraData,
                 s_entries: Sequence[Fraction],
                 a_entries: Sequence[Fraction]):
        n = algebra.n
        s = [_frac(v) for v in s_entries]
        a = [_frac(v) for v in a_entries]
        if len(s) != n or len(a) != n:
            raise ValueError("diagonal entry lists must have length n")
        if sum(s, Fraction(0)) or sum(a, Fraction(0)):
            raise ValueError("diagonal elements must be traceless")
        if len(set(s)) != n:
            raise ValueError(
                "regular element needs pairwise distinct diagonal entries")
        self.algebra = algebra
        self.s_matrix = _diag(s)
        self.a_matrix = _diag(a)
        self.cartan_basis = tuple(
            _sub(_elem(k, k, n), _elem(k + 1, k + 1, n))
            for k in range(1, n)
        )
        self.cartan_gram = tuple(
            tuple(_tr_pair(x, y) for y in self.cartan_basis)
            for x in self.cartan_basis
        )
        self.roots = tuple(
            (i, j)
            for i in range(1, n + 1) for j in range(1, n + 1) if i != j
        )
        self.alpha_s = {(i, j): s[i - 1] - s[j - 1] for (i, j) in self.roots}
        self.alpha_a = {(i, j): a[i - 1] - a[j - 1] for (i, j) in self.roots}
        self.alpha_x = {
            (i, j): tuple(x[i - 1][i - 1] - x[j - 1][j - 1]
                          for x in self.cartan_basis)
            for (i, j) in self.roots
        }
        delta = lambda p, q: Fraction(int(p == q))
        self.pairing = {
            ((i, j), (k, l)): delta(i, k) - delta(i, l) - delta(j, k)
            + delta(j, l)
            for (i, j) in self.roots for (k, l) in self.roots
        }

    def root_vector(self, root: tuple[int, int]) -> Matrix:
        i, j = root
        return _elem(i, j, self.algebra.n)

    def validate(self) -> None:
        g = self.algebra
        for al in self.roots:
            e_al = self.root_vector(al)
            e_neg = self.root_vector((al[1], al[0]))
            if g.pair(e_al, e_neg) != 1:
                raise ValueError("(e_a | e_-a) != 1")
            if not self.alpha_s[al]:
                raise ValueError("s is not regular: a root vanishes on it")
            for x, val in zip(self.cartan_basis, self.alpha_x[al]):
                if g.bracket(x, e_al) != _scale(e_al, val):
                    raise ValueError("[x_i, e_a] != a(x_i) e_a")
            com = g.bracket(e_al, e_neg)
            if g.pair(self.s_matrix, com) != self.alpha_s[al]:
                raise ValueError("(s|[e_a, e_-a]) != a(s)")
        if _rank([self.alpha_x[al] for al in self.roots]) != g.n - 1:
            raise ValueError("roots do not span the weight space")


def root_basis(g: LieAlgebraData, s: Sequence, a: Sequence) -> RootDatum:
    """Root decomposition of sl_n for a regular diagonal s and auxiliary a.

    Both s and a are given by their diagonal entries (rationals summing to
    zero); s must have pairwise distinct entries.
    """
    return RootDatum(g, [_frac(v) for v in s], [_frac(v) for v in a])


# --------------------------------------------------------------------------
# SL2TripleData
# --------------------------------------------------------------------------


class SL2TripleData:
    """An sl2-triple (f, x, e) in sl_n with graded bases and projections.

    `case` is "minimal" (f a lowest root vector; ad x eigenvalues in
    {-1, -1/2, 0, 1/2, 1}) or "short" (f the lower-left identity block of
    sl_2m; eigenvalues in {-1, 0, 1}).

    * `a_basis` spans the grade-zero centralizer of f, with Gram matrix
      `a_gram` and its exact inverse `a_gram_inv`.
    * `u_basis` spans the lowest nonzero negative grade (-1/2 or -1).
    * Minimal case: `v_basis` spans grade +1/2 with u_k = [f, v_k], and
      `v_dual` is the trace-dual of `u_basis` inside grade +1/2.
    * Short case: `u_dual` is the trace-dual of `u_basis` inside grade +1;
      `jordan_table`/`circle_table` hold the products [[f,a],b] on grade +1
      and [[e,u],u1] on grade -1 in coordinates of `u_dual`/`u_basis`.
    * `sharp_matrix` is the orthogonal projection onto span(a_basis) in
      algebra coordinates (zero on every nonzero grade).
    """

    __slots__ = ("algebra", "case", "f", "x", "e", "grading",
                 "a_basis", "a_gram", "a_gram_inv",
                 "u_basis", "v_basis", "v_dual", "u_dual",
                 "jordan_table", "circle_table", "xx", "sharp_matrix")

    def __init__(self, algebra: LieAlgebraData, case: str, f: Matrix,
                 x: Matrix, e: Matrix, a_basis: Sequence[Matrix],
                 u_basis: Sequence[Matrix],
                 v_basis: Sequence[Matrix] = (),
                 v_dual: Sequence[Matrix] = (),
                 u_dual: Sequence[Matrix] = ()):
        self.algebra = algebra
        self.case = case
        self.f, self.x, self.e = f, x, e
        self.a_basis = tuple(a_basis)
        self.u_basis = tuple(u_basis)
        self.v_basis = tuple(v_basis)
        self.v_dual = tuple(v_dual)
        self.u_dual = tuple(u_dual)
        self.xx = _tr_pair(x, x)
        self.grading = {}
        for lab, b in zip(algebra.labels, algebra.basis):
            com = _comm(x, b)
            cs, bs = algebra.coords(com), algebra.coords(b)
            lead = next(k for k, v in enumerate(bs) if v)
            grade = cs[lead] / bs[lead]
            if com != _scale(b, grade):
                raise ValueError("basis is not ad x homogeneous")
            self.grading[lab] = grade
        self.a_gram = tuple(
            tuple(_tr_pair(p, q) for q in self.a_basis) for p in self.a_basis
        )
        self.a_gram_inv = inverse_matrix(self.a_gram)
        self.sharp_matrix = self._build_sharp()
        if case == "short":
            self.jordan_table = tuple(
                tuple(self._dual_coords(self.jordan(p, q))
                      for q in self.u_dual)
                for p in self.u_dual
            )
            self.circle_table = tuple(
                tuple(self.u_coords(self.circle(p, q)) for q in self.u_basis)
                for p in self.u_basis
            )
        else:
            self.jordan_table = ()
            self.circle_table = ()

    # -- construction helpers -------------------------------------------------

    def _build_sharp(self) -> Matrix:
        g = self.algebra
        cols = []
        a_coord_rows = [g.coords(a) for a in self.a_basis]
        for lab, b in zip(g.labels, g.basis):
            if self.grading[lab]:
                cols.append((Fraction(0),) * g.dim)
                continue
            # orthogonal projection onto span(a_basis) via the Gram inverse:
            # sharp(b) = sum_ij a_i Ginv_ij (a_j | b)
            rhs = [_tr_pair(a, b) for a in self.a_basis]
            coeffs = [
                sum((self.a_gram_inv[i][j] * rhs[j]
                     for j in range(len(rhs))), Fraction(0))
                for i in range(len(rhs))
            ]
            col = [Fraction(0)] * g.dim
            for cf, arow in zip(coeffs, a_coord_rows):
                for k, v in enumerate(arow):
                    col[k] += cf * v
            cols.append(tuple(col))
        return tuple(zip(*cols))

    def _dual_coords(self, A: Matrix) -> tuple[Fraction, ...]:
        g = self.algebra
        return _span_solve([g.coords(p) for p in self.u_dual], g.coords(A))

    # -- operations ------------------------------------------------------------

    def sharp(self, A: Matrix) -> Matrix:
        """Orthogonal projection onto the grade-zero centralizer of f
        (zero on elements of nonzero grade)."""
        g = self.algebra
        cs = g.coords(A)
        out = [
            sum((row[k] * cs[k] for k in range(g.dim)), Fraction(0))
            for row in self.sharp_matrix
        ]
        return g.from_coords(out)

    def jordan(self, A: Matrix, B: Matrix) -> Matrix:
        """Jordan product [[f, A], B] on grade +1 (short case)."""
        if self.case != "short":
            raise ValueError("Jordan product only exists in the short case")
        return _comm(_comm(self.f, A), B)

    def circle(self, A: Matrix, B: Matrix) -> Matrix:
        """Product [[e, A], B] on grade -1 (short case)."""
        if self.case != "short":
            raise ValueError("circle product only exists in the short case")
        return _comm(_comm(self.e, A), B)

    def a_coords(self, A: Matrix) -> tuple[Fraction, ...]:
        """Coordinates of A in the a_basis (error when outside its span)."""
        g = self.algebra
        return _span_solve([g.coords(p) for p in self.a_basis], g.coords(A))

    def u_coords(self, A: Matrix) -> tuple[Fraction, ...]:
        """Coordinates of A in the u_basis (error when outside its span)."""
        g = self.algebra
        return _span_solve([g.coords(p) for p in self.u_basis], g.coords(A))

    # -- invariants --------------------------------------------------------------

    def validate(self) -> None:
        g = self.algebra
        two_x = _scale(self.x, Fraction(2))
        if g.bracket(self.e, self.f) != two_x:
            raise ValueError("[e, f] != 2x")
        if g.bracket(self.x, self.e) != self.e:
            raise ValueError("[x, e] != e")
        if g.bracket(self.x, self.f) != _scale(self.f, Fraction(-1)):
            raise ValueError("[x, f] != -f")
        half = Fraction(1, 2)
        allowed = ({Fraction(-1), -half, Fraction(0), half, Fraction(1)}
                   if self.case == "minimal"
                   else {Fraction(-1), Fraction(0), Fraction(1)})
        got = set(self.grading.values())
        if not got <= allowed:
            raise ValueError("unexpected ad x eigenvalue")
        if self.case == "minimal" and g.n >= 3 and got != allowed:
            raise ValueError("missing ad x eigenvalue")
        for a in self.a_basis:
            if not _is_zero(_comm(self.f, a)):
                raise ValueError("a_basis element does not centralize f")
            if not _is_zero(_comm(self.x, a)):
                raise ValueError("a_basis element is not grade zero")
            if _tr_pair(self.x, a):
                raise ValueError("a_basis element is not orthogonal to x")
        if self.case == "minimal":
            for k, v in enumerate(self.v_basis):
                if _comm(self.f, v) != self.u_basis[k]:
                    raise ValueError("u_k != [f, v_k]")
            for k, u in enumerate(self.u_basis):
                for j, vd in enumerate(self.v_dual):
                    if _tr_pair(u, vd) != Fraction(int(j == k)):
                        raise ValueError("(u_k | v^j) != delta")
            for k, v in enumerate(self.v_basis):
                for j, vd in enumerate(self.v_dual):
                    want = Fraction(int(j == k))
                    if _tr_pair(self.f, _comm(v, vd)) != want:
                        raise ValueError("(f | [v_k, v^j]) != delta")
            if g.n >= 3:
                spans = [g.coords(_comm(v, u))
                         for v in self.v_basis for u in self.u_basis]
                dim0 = sum(1 for val in self.grading.values() if not val)
                if _rank(spans) != dim0:
                    raise ValueError(
                        "brackets of the half grades do not span grade zero")
            if len(self.a_basis) != (g.n - 2) ** 2:
                raise ValueError("wrong grade-zero centralizer dimension")
            if len(self.u_basis) != 2 * (g.n - 2):
                raise ValueError("wrong half-grade dimension")
        else:
            m = g.n // 2
            if len(self.a_basis) != m * m - 1:
                raise ValueError("wrong grade-zero centralizer dimension")
            if len(self.u_basis) != m * m:
                raise ValueError("wrong grade -1 dimension")
            for h, u in enumerate(self.u_basis):
                for k, ud in enumerate(self.u_dual):
                    if _tr_pair(u, ud) != Fraction(int(h == k)):
                        raise ValueError("(u_h | u^k) != delta")
            for h in range(len(self.u_dual)):
                for k in range(len(self.u_dual)):
                    if self.jordan_table[h][k] != self.jordan_table[k][h]:
                        raise ValueError("Jordan product is not commutative")
        # sharp: idempotent, self-adjoint, fixes a_basis, kills x
        S = self.sharp_matrix
        if _mul(S, S) != S:
            raise ValueError("sharp is not idempotent")
        for i, bi in enumerate(g.basis):
            si = self.sharp(bi)
            for j in range(i, g.dim):
                if _tr_pair(si, g.basis[j]) != _tr_pair(
                        bi, self.sharp(g.basis[j])):
                    raise ValueError("sharp is not self-adjoint")
        for a in self.a_basis:
            if self.sharp(a) != a:
                raise ValueError("sharp does not fix the centralizer")
        if not _is_zero(self.sharp(self.x)):
            raise ValueError("sharp does not kill x")


def minimal_triple(g: LieAlgebraData) -> SL2TripleData:
    """The sl2-triple of a lowest root vector of sl_n.

    f = E_n1, x = diag(1,0,...,0,-1)/2, e = E_1n.  Grade +1/2 is spanned by
    E_1j and E_in for middle indices i, j; the grade-zero centralizer of f
    consists of the middle off-diagonal entries together with the diagonals
    having equal first and last entry.
    """
    n = g.n
    f = _elem(n, 1, n)
    e = _elem(1, n, n)
    x = _diag([Fraction(1, 2)] + [Fraction(0)] * (n - 2) + [Fraction(-1, 2)])
    mids = range(2, n)
    a_basis: list[Matrix] = [
        _elem(i, j, n) for i in mids for j in mids if i != j
    ]
    for k in mids:
        if k + 1 < n:
            a_basis.append(_sub(_elem(k, k, n), _elem(k + 1, k + 1, n)))
    if n >= 3:
        # diagonal with equal first/last entries, orthogonal to the middle
        # coweights: diag(n-2, -2, ..., -2, n-2)
        a_basis.append(_diag([Fraction(n - 2)]
                             + [Fraction(-2)] * (n - 2)
                             + [Fraction(n - 2)]))
    v_basis = [_elem(1, j, n) for j in mids] + [_elem(i, n, n) for i in mids]
    u_basis = [_comm(f, v) for v in v_basis]
    v_dual = ([_elem(j, n, n) for j in mids]
              + [_scale(_elem(1, i, n), Fraction(-1)) for i in mids])
    return SL2TripleData(g, "minimal", f, x, e, a_basis, u_basis,
                         v_basis=v_basis, v_dual=v_dual)


def short_triple(g: LieAlgebraData) -> SL2TripleData:
    """The short sl2-triple of sl_2m (block realization).

    f has the identity in the lower-left m x m block, x = diag(I, -I)/2,
    e the identity in the upper-right block.  Grade -1 is the lower-left
    block; the grade-zero centralizer of f is {diag(A, A) : tr A = 0}.
    """
    n = g.n
    if n % 2:
        raise ValueError("short triple needs sl_2m (even matrix size)")
    m = n // 2
    f = _zero(n)
    for a in range(1, m + 1):
        f = _add(f, _elem(m + a, a, n))
    e = _zero(n)
    for a in range(1, m + 1):
        e = _add(e, _elem(a, m + a, n))
    x = _diag([Fraction(1, 2)] * m + [Fraction(-1, 2)] * m)
    a_basis: list[Matrix] = []
    for a in range(1, m + 1):
        for b in range(1, m + 1):
            if a != b:
                a_basis.append(_add(_elem(a, b, n), _elem(m + a, m + b, n)))
    for k in range(1, m):
        blk = _sub(_elem(k, k, n), _elem(k + 1, k + 1, n))
        blk = _add(blk, _sub(_elem(m + k, m + k, n),
                             _elem(m + k + 1, m + k + 1, n)))
        a_basis.append(blk)
    u_basis = [_elem(m + a, b, n)
               for a in range(1, m + 1) for b in range(1, m + 1)]
    u_dual = [_elem(b, m + a, n)
              for a in range(1, m + 1) for b in range(1, m + 1)]
    return SL2TripleData(g, "short", f, x, e, a_basis, u_basis,
                         u_dual=u_dual)
