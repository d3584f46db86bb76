"""APM CSS codes: check matrices, parameters, logical bases, girth, alist I/O.

Permutation blocks follow one convention throughout: the P x P block of an
APM ``f`` has a 1 at ``(f(x), x)``, so column ``x`` maps to row ``f(x)``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Sequence

import numba
import numpy as np

from .apm import Apm, commutes
from .errors import AlistParseError, ConstructionError, DomainError
from .gf2 import RowSpace, SparseGf2Matrix, gf2_rank, inverse, nullspace, rref, unpack_rows

J_ROWS = 3
L_COLS = 12
FIXTURES = (96, 192, 384)


@dataclass(frozen=True)
class CodeSpec:
    P: int
    f: tuple[Apm, ...]
    g: tuple[Apm, ...]
    d_upper: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "f", tuple(self.f))
        object.__setattr__(self, "g", tuple(self.g))
        if len(self.f) != 6 or len(self.g) != 6:
            raise DomainError("a code spec needs exactly 6 F and 6 G maps")
        for m in self.f + self.g:
            if m.modulus != self.P:
                raise DomainError(f"{m} does not act on Z_{self.P}")

    @property
    def J(self) -> int:
        return J_ROWS

    @property
    def L(self) -> int:
        return L_COLS

    @property
    def maps(self) -> tuple[Apm, ...]:
        """F_0..F_5 followed by G_0..G_5 (index 6 + i is G_i)."""
        return self.f + self.g

    def to_json(self) -> dict:
        obj = {"P": self.P,
               "f": [{"a": m.a, "b": m.b} for m in self.f],
               "g": [{"a": m.a, "b": m.b} for m in self.g]}
        if self.d_upper is not None:
            obj["d_upper"] = self.d_upper
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> CodeSpec:
        try:
            P = int(obj["P"])
            f = [Apm.from_json(m, P) for m in obj["f"]]
            g = [Apm.from_json(m, P) for m in obj["g"]]
        except KeyError as exc:
            raise DomainError(f"code spec JSON is missing field {exc}") from None
        return cls(P, tuple(f), tuple(g), obj.get("d_upper"))

    @classmethod
    def load(cls, path: str | Path) -> CodeSpec:
        return cls.from_json(json.loads(Path(path).read_text()))


def load_fixture(P: int) -> CodeSpec:
    """One of the shipped instances (P = 96, 192 or 384)."""
    if P not in FIXTURES:
        raise DomainError(f"no shipped fixture for P={P}; have {FIXTURES}")
    text = resources.files("apmqec.fixtures").joinpath(f"p{P}.json").read_text()
    return CodeSpec.from_json(json.loads(text))


# ------------------------------------------------------------- construction

def _block_entries(P: int, layout: list[list[tuple[Apm, bool]]]):
    """COO entries for a block matrix of (APM, transposed) blocks."""
    x = np.arange(P)
    rows, cols = [], []
    for br, blocks in enumerate(layout):
        for bc, (m, transposed) in enumerate(blocks):
            y = (m.a * x + m.b) % P
            if transposed:
                rows.append(br * P + x)
                cols.append(bc * P + y)
            else:
                rows.append(br * P + y)
                cols.append(bc * P + x)
    return np.concatenate(rows), np.concatenate(cols)


def _x_layout(spec: CodeSpec, nrows: int):
    return [[(spec.f[(c - r) % 6], False) for c in range(6)]
            + [(spec.g[(c - r) % 6], False) for c in range(6)]
            for r in range(nrows)]


def _z_layout(spec: CodeSpec, nrows: int):
    return [[(spec.g[(r - c) % 6], True) for c in range(6)]
            + [(spec.f[(r - c) % 6], True) for c in range(6)]
            for r in range(nrows)]


def _assemble(spec: CodeSpec, layout) -> SparseGf2Matrix:
    r, c = _block_entries(spec.P, layout)
    return SparseGf2Matrix.from_coo(len(layout) * spec.P, L_COLS * spec.P, r, c)


def build_parent_matrices(spec: CodeSpec) -> tuple[SparseGf2Matrix, SparseGf2Matrix]:
    """The full 6 x 12 block matrices whose first three block rows are the
    retained checks."""
    return _assemble(spec, _x_layout(spec, 6)), _assemble(spec, _z_layout(spec, 6))


def noncommuting_pairs(spec: CodeSpec, shift: int) -> list[tuple[int, int]]:
    """Pairs ``(i, j)`` with ``i + j = shift (mod 6)`` where F_i and G_j fail
    to commute; these are the terms that survive in block ``shift`` of
    ``H_X H_Z^T``."""
    return [(i, (shift - i) % 6) for i in range(6)
            if not commutes(spec.f[i], spec.g[(shift - i) % 6])]


@dataclass
class CssCode:
    h_x: SparseGf2Matrix
    h_z: SparseGf2Matrix
    d_upper: int | None = None
    spec: CodeSpec | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return self.h_x.cols

    @cached_property
    def rank_x(self) -> int:
        return gf2_rank(self.h_x)

    @cached_property
    def rank_z(self) -> int:
        return gf2_rank(self.h_z)

    @cached_property
    def k(self) -> int:
        return self.n - self.rank_x - self.rank_z

    @cached_property
    def _logicals(self) -> tuple[np.ndarray, np.ndarray]:
        return logical_basis(self)

    @property
    def logical_x(self) -> np.ndarray:
        return self._logicals[0]

    @property
    def logical_z(self) -> np.ndarray:
        return self._logicals[1]

    @property
    def rate(self) -> float:
        return self.k / self.n

    def is_css(self) -> bool:
        return (self.h_x @ self.h_z.T).nnz == 0

    def __repr__(self) -> str:
        d = f"<={self.d_upper}" if self.d_upper is not None else "?"
        return f"CssCode([[{self.n},{self.k},{d}]])"


def css_from_dense(h_x, h_z, n: int | None = None) -> CssCode:
    """Convenience constructor for small hand-written codes."""
    h_x = np.atleast_2d(np.asarray(h_x, dtype=np.uint8))
    h_z = np.atleast_2d(np.asarray(h_z, dtype=np.uint8))
    if n is not None:
        h_x = h_x.reshape(-1, n)
        h_z = h_z.reshape(-1, n)
    if h_x.shape[1] != h_z.shape[1]:
        raise DomainError("h_x and h_z must have the same number of columns")
    code = CssCode(SparseGf2Matrix.from_dense(h_x), SparseGf2Matrix.from_dense(h_z))
    if not code.is_css():
        raise ConstructionError("h_x h_z^T != 0")
    return code


def build_check_matrices(spec: CodeSpec) -> CssCode:
    h_x = _assemble(spec, _x_layout(spec, J_ROWS))
    h_z = _assemble(spec, _z_layout(spec, J_ROWS))
    prod = h_x @ h_z.T
    if prod.nnz:
        csr = prod.to_csr().tocoo()
        rx, rz = int(csr.row[0]) // spec.P, int(csr.col[0]) // spec.P
        pairs = noncommuting_pairs(spec, rz - rx)
        names = ", ".join(f"F_{i}/G_{j}" for i, j in pairs)
        raise ConstructionError(
            f"CSS orthogonality fails between X block row {rx} and Z block row {rz}: "
            f"non-commuting block pair(s) {names}"
        )
    return CssCode(h_x, h_z, d_upper=spec.d_upper, spec=spec)


# ------------------------------------------------------------ logical basis

def _independent_mod(candidates: np.ndarray, stabilizers: SparseGf2Matrix) -> np.ndarray:
    """Rows spanning ``span(candidates)`` modulo ``rowspace(stabilizers)``."""
    space = RowSpace(stabilizers)
    residual = space.reduce(candidates)
    if not residual.shape[0]:
        return residual
    R, _, ncols = rref(residual)
    return unpack_rows(R, ncols) if R.shape[0] else np.zeros((0, ncols), np.uint8)


def _greedy_lower_weight(vectors: np.ndarray, stabilizers: SparseGf2Matrix,
                         max_passes: int = 4) -> np.ndarray:
    """Add stabilizer rows while doing so lowers the weight of a vector."""
    if not stabilizers.rows or not vectors.shape[0]:
        return vectors
    S = stabilizers.to_dense().astype(bool)
    out = vectors.astype(bool).copy()
    for i in range(out.shape[0]):
        v = out[i]
        for _ in range(max_passes * S.shape[0]):
            w = (v ^ S).sum(axis=1)
            j = int(np.argmin(w))
            if w[j] >= v.sum():
                break
            v = v ^ S[j]
        out[i] = v
    return out.astype(np.uint8)


def logical_basis(code: CssCode) -> tuple[np.ndarray, np.ndarray]:
    """Symplectically paired logical bases with ``L_X L_Z^T = I``.

    X logicals lie in ``ker(h_z)`` modulo ``rowspace(h_x)`` and Z logicals in
    ``ker(h_x)`` modulo ``rowspace(h_z)``.
    """
    lx = _independent_mod(nullspace(code.h_z), code.h_x)
    lz0 = _independent_mod(nullspace(code.h_x), code.h_z)
    if lx.shape[0] != code.k or lz0.shape[0] != code.k:
        raise RuntimeError(
            f"logical count mismatch: {lx.shape[0]} X / {lz0.shape[0]} Z vs k={code.k}"
        )
    if code.k == 0:
        return lx, lz0
    if code.n <= 64:
        lx = _greedy_lower_weight(lx, code.h_x)
        lz0 = _greedy_lower_weight(lz0, code.h_z)
    gram = (lx.astype(np.int64) @ lz0.T.astype(np.int64)) % 2
    lz = (inverse(gram).T.astype(np.int64) @ lz0.astype(np.int64)) % 2
    return lx, lz.astype(np.uint8)


# -------------------------------------------------------------------- girth

@numba.njit(cache=True)
def _girth_bfs(indptr, indices, nnodes):
    best = np.iinfo(np.int64).max
    dist = np.full(nnodes, -1, dtype=np.int64)
    parent = np.full(nnodes, -1, dtype=np.int64)
    queue = np.empty(nnodes, dtype=np.int64)
    touched = np.empty(nnodes, dtype=np.int64)
    for s in range(nnodes):
        head, tail, nt = 0, 0, 0
        dist[s] = 0
        parent[s] = -1
        queue[tail] = s
        tail += 1
        touched[nt] = s
        nt += 1
        while head < tail:
            u = queue[head]
            head += 1
            if 2 * dist[u] + 1 >= best:
                break
            for k in range(indptr[u], indptr[u + 1]):
                w = indices[k]
                if dist[w] < 0:
                    dist[w] = dist[u] + 1
                    parent[w] = u
                    queue[tail] = w
                    tail += 1
                    touched[nt] = w
                    nt += 1
                elif parent[u] != w:
                    cyc = dist[u] + dist[w] + 1
                    if cyc < best:
                        best = cyc
        for i in range(nt):
            dist[touched[i]] = -1
            parent[touched[i]] = -1
    return best


def tanner_girth(m: SparseGf2Matrix) -> float:
    """Shortest cycle length in the Tanner graph; ``math.inf`` for a forest."""
    import scipy.sparse as sp

    H = m.to_csr()
    adj = sp.bmat([[None, H], [H.T, None]], format="csr")
    adj.sort_indices()
    best = _girth_bfs(adj.indptr.astype(np.int64), adj.indices.astype(np.int64),
                      m.rows + m.cols)
    return math.inf if best == np.iinfo(np.int64).max else int(best)


# -------------------------------------------------------------------- alist

def export_alist(m: SparseGf2Matrix) -> str:
    """MacKay alist text (columns first, 1-based indices, zero padded)."""
    csc = m.to_csr().tocsc()
    csc.sort_indices()
    col_w = np.diff(csc.indptr)
    row_w = m.row_weights()
    max_c = int(col_w.max(initial=0))
    max_r = int(row_w.max(initial=0))
    lines = [f"{m.cols} {m.rows}", f"{max_c} {max_r}",
             " ".join(map(str, col_w)), " ".join(map(str, row_w))]
    for c in range(m.cols):
        ids = list(csc.indices[csc.indptr[c]:csc.indptr[c + 1]] + 1)
        lines.append(" ".join(map(str, ids + [0] * (max_c - len(ids)))))
    for r in range(m.rows):
        ids = list(m.row(r) + 1)
        lines.append(" ".join(map(str, ids + [0] * (max_r - len(ids)))))
    return "\n".join(lines) + "\n"


def import_alist(text: str) -> SparseGf2Matrix:
    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    pos = 0

    def ints(expected: int | None = None, what: str = "line") -> list[int]:
        nonlocal pos
        if pos >= len(lines):
            raise AlistParseError(f"unexpected end of file, expected {what}", pos + 1)
        try:
            vals = [int(t) for t in lines[pos].split()]
        except ValueError:
            raise AlistParseError(f"non-integer token in {what}", pos + 1) from None
        if expected is not None and len(vals) != expected:
            raise AlistParseError(f"{what}: expected {expected} values, got {len(vals)}", pos + 1)
        pos += 1
        return vals

    ncols, nrows = ints(2, "dimensions")
    if ncols < 0 or nrows < 0:
        raise AlistParseError("negative dimension", 1)
    ints(2, "maximum weights")
    col_w = ints(ncols, "column weights")
    row_w = ints(nrows, "row weights")
    from_cols = set()
    for c in range(ncols):
        line = pos + 1
        ids = [v for v in ints(what=f"column {c + 1}") if v != 0]
        if len(ids) != col_w[c]:
            raise AlistParseError(f"column {c + 1} has {len(ids)} entries, header says {col_w[c]}", line)
        for r in ids:
            if not 1 <= r <= nrows:
                raise AlistParseError(f"row index {r} out of range", line)
            from_cols.add((r - 1, c))
    entries = []
    for r in range(nrows):
        line = pos + 1
        ids = [v for v in ints(what=f"row {r + 1}") if v != 0]
        if len(ids) != row_w[r]:
            raise AlistParseError(f"row {r + 1} has {len(ids)} entries, header says {row_w[r]}", line)
        for c in ids:
            if not 1 <= c <= ncols:
                raise AlistParseError(f"column index {c} out of range", line)
        entries.append(sorted(c - 1 for c in ids))
    from_rows = {(r, c) for r, row in enumerate(entries) for c in row}
    if from_rows != from_cols:
        raise AlistParseError("row and column lists disagree", pos)
    return SparseGf2Matrix(nrows, ncols, entries)
