"""Sparse binary matrices and bit-packed GF(2) elimination."""

from __future__ import annotations

from typing import Iterable, Sequence

import numba
import numpy as np
import scipy.sparse as sp

from .errors import DomainError, InfeasibleSyndrome


class SparseGf2Matrix:
    """Binary matrix stored as sorted column indices per row (CSR layout)."""

    __slots__ = ("rows", "cols", "indptr", "indices", "_csr32")

    def __init__(self, rows: int, cols: int, entries: Sequence[Iterable[int]]):
        if len(entries) != rows:
            raise DomainError(f"expected {rows} rows of entries, got {len(entries)}")
        indptr = [0]
        indices: list[int] = []
        for r, row in enumerate(entries):
            row = list(row)
            for prev, nxt in zip(row, row[1:]):
                if nxt <= prev:
                    raise DomainError(f"row {r}: indices not strictly increasing")
            if row and (row[0] < 0 or row[-1] >= cols):
                raise DomainError(f"row {r}: index out of range [0, {cols})")
            indices.extend(row)
            indptr.append(len(indices))
        self.rows = rows
        self.cols = cols
        self.indptr = np.asarray(indptr, dtype=np.int64)
        self.indices = np.asarray(indices, dtype=np.int64)
        self._csr32 = None

    @classmethod
    def _raw(cls, rows: int, cols: int, indptr, indices) -> SparseGf2Matrix:
        out = cls.__new__(cls)
        out.rows, out.cols = rows, cols
        out.indptr = np.asarray(indptr, dtype=np.int64)
        out.indices = np.asarray(indices, dtype=np.int64)
        out._csr32 = None
        return out

    @classmethod
    def from_coo(cls, rows: int, cols: int, r_idx, c_idx) -> SparseGf2Matrix:
        """Build from coordinate lists; repeated coordinates cancel mod 2."""
        data = np.ones(len(r_idx), dtype=np.int64)
        m = sp.coo_matrix((data, (np.asarray(r_idx), np.asarray(c_idx))),
                          shape=(rows, cols)).tocsr()
        m.sum_duplicates()
        m.data %= 2
        m.eliminate_zeros()
        m.sort_indices()
        return cls._raw(rows, cols, m.indptr, m.indices)

    @classmethod
    def from_dense(cls, arr) -> SparseGf2Matrix:
        arr = np.asarray(arr) % 2
        if arr.ndim != 2:
            raise DomainError("dense matrix must be 2-D")
        m = sp.csr_matrix(arr.astype(np.uint8))
        m.eliminate_zeros()
        m.sort_indices()
        return cls._raw(arr.shape[0], arr.shape[1], m.indptr, m.indices)

    @classmethod
    def from_csr(cls, m) -> SparseGf2Matrix:
        m = sp.csr_matrix(m)
        m.data %= 2
        m.eliminate_zeros()
        m.sort_indices()
        return cls._raw(m.shape[0], m.shape[1], m.indptr, m.indices)

    @property
    def shape(self) -> tuple[int, int]:
        return (self.rows, self.cols)

    @property
    def nnz(self) -> int:
        return int(self.indices.size)

    def row(self, i: int) -> np.ndarray:
        return self.indices[self.indptr[i]:self.indptr[i + 1]]

    def row_weights(self) -> np.ndarray:
        return np.diff(self.indptr)

    def col_weights(self) -> np.ndarray:
        return np.bincount(self.indices, minlength=self.cols)

    def to_csr(self) -> sp.csr_matrix:
        data = np.ones(self.nnz, dtype=np.uint8)
        return sp.csr_matrix((data, self.indices, self.indptr), shape=self.shape)

    def to_dense(self) -> np.ndarray:
        out = np.zeros(self.shape, dtype=np.uint8)
        rows = np.repeat(np.arange(self.rows), np.diff(self.indptr))
        out[rows, self.indices] = 1
        return out

    @property
    def T(self) -> SparseGf2Matrix:
        return SparseGf2Matrix.from_csr(self.to_csr().T.tocsr())

    def submatrix_rows(self, rows: Sequence[int]) -> SparseGf2Matrix:
        return SparseGf2Matrix.from_csr(self.to_csr()[list(rows)])

    def _int_csr(self) -> sp.csr_matrix:
        if self._csr32 is None:
            self._csr32 = sp.csr_matrix((np.ones(self.nnz, dtype=np.int32), self.indices, self.indptr),
                                        shape=self.shape)
        return self._csr32

    def __matmul__(self, other):
        """Product over GF(2); dense vectors/matrices give dense uint8 results."""
        if isinstance(other, SparseGf2Matrix):
            return SparseGf2Matrix.from_csr(self._int_csr() @ other._int_csr())
        other = np.asarray(other)
        return ((self._int_csr() @ (other.astype(np.int32) & 1)) & 1).astype(np.uint8)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SparseGf2Matrix):
            return NotImplemented
        return (self.shape == other.shape
                and np.array_equal(self.indptr, other.indptr)
                and np.array_equal(self.indices, other.indices))

    def __hash__(self):
        return hash((self.shape, self.indices.tobytes()))

    def __repr__(self) -> str:
        return f"SparseGf2Matrix({self.rows}x{self.cols}, nnz={self.nnz})"


def vstack(mats: Sequence[SparseGf2Matrix]) -> SparseGf2Matrix:
    return SparseGf2Matrix.from_csr(sp.vstack([m.to_csr() for m in mats]).tocsr())


# ---------------------------------------------------------------- packing

def n_words(ncols: int) -> int:
    return max(1, (ncols + 63) // 64)


def pack_rows(dense: np.ndarray) -> np.ndarray:
    """Pack a 0/1 matrix into uint64 words, bit ``c % 64`` of word ``c // 64``."""
    dense = np.atleast_2d(np.asarray(dense, dtype=np.uint8) & 1)
    nrows, ncols = dense.shape
    nw = n_words(ncols)
    padded = np.zeros((nrows, nw * 64), dtype=np.uint8)
    padded[:, :ncols] = dense
    packed = np.packbits(padded, axis=1, bitorder="little")
    return np.ascontiguousarray(packed).view(np.uint64).reshape(nrows, nw)


def unpack_rows(words: np.ndarray, ncols: int) -> np.ndarray:
    words = np.ascontiguousarray(np.atleast_2d(words), dtype=np.uint64)
    bits = np.unpackbits(words.view(np.uint8), axis=1, bitorder="little")
    return bits[:, :ncols]


def as_packed(m) -> tuple[np.ndarray, int]:
    if isinstance(m, SparseGf2Matrix):
        return pack_rows(m.to_dense()), m.cols
    arr = np.atleast_2d(np.asarray(m))
    return pack_rows(arr), arr.shape[1]


@numba.njit(cache=True)
def _rref_inplace(W, col_order):
    """Reduced row echelon form over GF(2), pivoting through ``col_order``.

    Returns the number of pivots; ``pivots[:rank]`` lists pivot columns and
    rows ``0..rank-1`` of ``W`` hold the reduced basis.
    """
    nrows, nw = W.shape
    pivots = np.empty(min(nrows, col_order.size), dtype=np.int64)
    r = 0
    for c in col_order:
        if r == nrows:
            break
        w = c >> 6
        mask = np.uint64(1) << np.uint64(c & 63)
        p = -1
        for i in range(r, nrows):
            if W[i, w] & mask:
                p = i
                break
        if p < 0:
            continue
        if p != r:
            for k in range(nw):
                tmp = W[r, k]
                W[r, k] = W[p, k]
                W[p, k] = tmp
        for i in range(nrows):
            if i != r and (W[i, w] & mask):
                for k in range(nw):
                    W[i, k] ^= W[r, k]
        pivots[r] = c
        r += 1
    return r, pivots


def rref(m, col_order: Sequence[int] | None = None) -> tuple[np.ndarray, np.ndarray, int]:
    """Reduced row echelon form of ``m``.

    Returns ``(rows, pivots, ncols)``: the packed nonzero rows and their pivot
    columns. Pivot order follows ``col_order`` (natural order by default).
    """
    W, ncols = as_packed(m)
    order = (np.arange(ncols, dtype=np.int64) if col_order is None
             else np.asarray(col_order, dtype=np.int64))
    W = W.copy()
    rank, piv = _rref_inplace(W, order)
    return W[:rank], piv[:rank].copy(), ncols


def gf2_rank(m) -> int:
    if isinstance(m, SparseGf2Matrix) and (m.rows == 0 or m.cols == 0):
        return 0
    arr = m if isinstance(m, SparseGf2Matrix) else np.atleast_2d(np.asarray(m))
    if arr.shape[0] == 0 or arr.shape[1] == 0:
        return 0
    return int(rref(arr)[1].size)


def nullspace(m) -> np.ndarray:
    """Basis of ``{v : m v = 0}`` as rows of a dense uint8 array."""
    if isinstance(m, SparseGf2Matrix):
        ncols = m.cols
        R, piv, _ = rref(m) if m.rows else (np.zeros((0, n_words(ncols)), np.uint64), np.zeros(0, np.int64), ncols)
    else:
        arr = np.atleast_2d(np.asarray(m))
        ncols = arr.shape[1]
        R, piv, _ = rref(arr) if arr.shape[0] else (np.zeros((0, n_words(ncols)), np.uint64), np.zeros(0, np.int64), ncols)
    dense = unpack_rows(R, ncols) if R.shape[0] else np.zeros((0, ncols), np.uint8)
    free = np.setdiff1d(np.arange(ncols), piv)
    basis = np.zeros((free.size, ncols), dtype=np.uint8)
    basis[np.arange(free.size), free] = 1
    if piv.size:
        # v_j = e_j + sum over pivot rows i with R[i, j] = 1 of e_{piv[i]}
        basis[:, piv] = dense[:, free].T
    return basis


class RowSpace:
    """Membership tests against the row space of a fixed matrix."""

    def __init__(self, m):
        arr = m.to_dense() if isinstance(m, SparseGf2Matrix) else np.atleast_2d(np.asarray(m, np.uint8))
        self.ncols = arr.shape[1]
        if arr.shape[0]:
            self.rows, self.pivots, _ = rref(arr)
        else:
            self.rows = np.zeros((0, n_words(self.ncols)), np.uint64)
            self.pivots = np.zeros(0, np.int64)
        self.dense = unpack_rows(self.rows, self.ncols) if self.rows.shape[0] else np.zeros((0, self.ncols), np.uint8)

    @property
    def rank(self) -> int:
        return int(self.pivots.size)

    def reduce(self, v: np.ndarray) -> np.ndarray:
        """Residual of ``v`` (or each row of a 2-D ``v``) modulo the row space."""
        v = np.asarray(v, dtype=np.uint8) & 1
        if not self.rank:
            return v.copy()
        coeff = v[..., self.pivots]
        return ((v.astype(np.int64) + coeff.astype(np.int64) @ self.dense) % 2).astype(np.uint8)

    def contains(self, v: np.ndarray) -> np.ndarray | bool:
        res = self.reduce(v)
        out = ~res.any(axis=-1)
        return bool(out) if out.ndim == 0 else out


def solve(m, syndrome: np.ndarray) -> np.ndarray:
    """One solution ``e`` of ``m e = syndrome`` (free variables set to 0)."""
    arr = m.to_dense() if isinstance(m, SparseGf2Matrix) else np.atleast_2d(np.asarray(m, np.uint8))
    s = np.asarray(syndrome, dtype=np.uint8).reshape(-1, 1) & 1
    aug = np.hstack([arr, s])
    ncols = arr.shape[1]
    R, piv, _ = rref(aug, col_order=np.arange(ncols + 1))
    if piv.size and piv[-1] == ncols:
        raise InfeasibleSyndrome("syndrome not in the column space")
    dense = unpack_rows(R, ncols + 1)
    e = np.zeros(ncols, dtype=np.uint8)
    e[piv] = dense[:, ncols]
    return e


def inverse(m: np.ndarray) -> np.ndarray:
    """Inverse of a square invertible GF(2) matrix."""
    m = np.atleast_2d(np.asarray(m, np.uint8))
    k = m.shape[0]
    aug = np.hstack([m, np.eye(k, dtype=np.uint8)])
    R, piv, _ = rref(aug, col_order=np.arange(k))
    if piv.size != k:
        raise DomainError("matrix is singular over GF(2)")
    return unpack_rows(R, 2 * k)[:, k:]
