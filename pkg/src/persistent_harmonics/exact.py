"""Exact rational sparse matrices and elimination helpers.

Elimination (rank, nullspace, pivots) runs on sympy's sparse ``DomainMatrix``
over QQ; everything user-facing is expressed with :class:`fractions.Fraction`.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping

import numpy as np
import scipy.sparse as sp
from sympy import QQ
from sympy.polys.matrices import DomainMatrix

Vector = dict[int, Fraction]


def qq(x):
    x = Fraction(x)
    return QQ(x.numerator, x.denominator)


def frac(x) -> Fraction:
    return Fraction(int(x.numerator), int(x.denominator))


def dot(a: Mapping[int, Fraction], b: Mapping[int, Fraction]) -> Fraction:
    if len(a) > len(b):
        a, b = b, a
    total = Fraction(0)
    for i, x in a.items():
        y = b.get(i)
        if y is not None:
            total += x * y
    return total


def axpy(alpha, x: Mapping[int, Fraction], y: Vector) -> Vector:
    """``y += alpha * x`` in place, dropping exact zeros."""
    for i, v in x.items():
        s = y.get(i, 0) + alpha * v
        if s:
            y[i] = s
        else:
            y.pop(i, None)
    return y


def scale(alpha, x: Mapping[int, Fraction]) -> Vector:
    if not alpha:
        return {}
    return {i: alpha * v for i, v in x.items()}


class RationalMatrix:
    """Column-sparse matrix with Fraction entries."""

    __slots__ = ("shape", "cols")

    def __init__(self, shape: tuple[int, int], cols: dict[int, dict[int, Fraction]] | None = None):
        self.shape = (int(shape[0]), int(shape[1]))
        self.cols: dict[int, dict[int, Fraction]] = {}
        for j, col in (cols or {}).items():
            clean = {i: Fraction(v) for i, v in col.items() if v}
            if clean:
                self.cols[j] = clean

    @classmethod
    def from_entries(cls, shape, entries: Iterable[tuple[int, int, Fraction]]):
        cols: dict[int, dict[int, Fraction]] = {}
        for i, j, v in entries:
            col = cols.setdefault(j, {})
            col[i] = col.get(i, 0) + Fraction(v)
        return cls(shape, cols)

    @classmethod
    def from_dense(cls, rows) -> RationalMatrix:
        rows = [[Fraction(x) for x in r] for r in rows]
        n = len(rows[0]) if rows else 0
        return cls.from_entries((len(rows), n), ((i, j, x) for i, r in enumerate(rows) for j, x in enumerate(r) if x))

    @classmethod
    def identity(cls, n: int) -> RationalMatrix:
        return cls((n, n), {i: {i: Fraction(1)} for i in range(n)})

    def __repr__(self):
        return f"RationalMatrix(shape={self.shape}, nnz={self.nnz})"

    @property
    def nnz(self) -> int:
        return sum(len(c) for c in self.cols.values())

    def entries(self):
        for j in sorted(self.cols):
            col = self.cols[j]
            for i in sorted(col):
                yield i, j, col[i]

    def get(self, i: int, j: int) -> Fraction:
        return self.cols.get(j, {}).get(i, Fraction(0))

    def column(self, j: int) -> Vector:
        return dict(self.cols.get(j, {}))

    def transpose(self) -> RationalMatrix:
        return RationalMatrix.from_entries((self.shape[1], self.shape[0]), ((j, i, v) for i, j, v in self.entries()))

    T = property(transpose)

    def matvec(self, x: Mapping[int, Fraction]) -> Vector:
        out: Vector = {}
        for j, xj in x.items():
            col = self.cols.get(j)
            if col and xj:
                axpy(xj, col, out)
        return out

    def rmatvec(self, x: Mapping[int, Fraction]) -> Vector:
        """``self.T @ x``."""
        out: Vector = {}
        for j, col in self.cols.items():
            s = dot(col, x)
            if s:
                out[j] = s
        return out

    def __matmul__(self, other: RationalMatrix) -> RationalMatrix:
        if self.shape[1] != other.shape[0]:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        cols = {j: self.matvec(col) for j, col in other.cols.items()}
        return RationalMatrix((self.shape[0], other.shape[1]), cols)

    def __add__(self, other: RationalMatrix) -> RationalMatrix:
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} + {other.shape}")
        cols = {j: dict(c) for j, c in self.cols.items()}
        for j, c in other.cols.items():
            axpy(1, c, cols.setdefault(j, {}))
        return RationalMatrix(self.shape, cols)

    def __sub__(self, other: RationalMatrix) -> RationalMatrix:
        return self + other.scaled(-1)

    def scaled(self, alpha) -> RationalMatrix:
        alpha = Fraction(alpha)
        return RationalMatrix(self.shape, {j: scale(alpha, c) for j, c in self.cols.items()})

    def is_zero(self) -> bool:
        return not self.cols

    def __eq__(self, other) -> bool:
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return self.shape == other.shape and self.cols == other.cols

    def is_symmetric(self) -> bool:
        return self.shape[0] == self.shape[1] and self == self.transpose()

    def max_abs(self) -> Fraction:
        return max((abs(v) for _, _, v in self.entries()), default=Fraction(0))

    def to_domain(self) -> DomainMatrix:
        dod: dict[int, dict[int, object]] = {}
        for i, j, v in self.entries():
            dod.setdefault(i, {})[j] = qq(v)
        return DomainMatrix.from_dod(dod, self.shape, QQ)

    def to_scipy(self) -> sp.csr_matrix:
        rows, cols, vals = [], [], []
        for i, j, v in self.entries():
            rows.append(i)
            cols.append(j)
            vals.append(float(v))
        return sp.csr_matrix((np.array(vals, dtype=float), (rows, cols)), shape=self.shape)

    def to_dense_float(self) -> np.ndarray:
        return self.to_scipy().toarray()

    def rank(self) -> int:
        if self.is_zero():
            return 0
        return self.to_domain().rank()

    def nullspace(self) -> list[Vector]:
        """Basis of the right kernel, one sparse vector per pivot-free column."""
        n = self.shape[1]
        if n == 0:
            return []
        if self.is_zero() or self.shape[0] == 0:
            return [{j: Fraction(1)} for j in range(n)]
        ns = self.to_domain().nullspace()
        out = []
        for _, row in sorted(ns.to_dod().items()):
            out.append({j: frac(v) for j, v in row.items() if v})
        return out

    def pivot_columns(self) -> list[int]:
        if self.is_zero() or self.shape[0] == 0:
            return []
        _, pivots = self.to_domain().rref()
        return list(pivots)


def vstack(*blocks: RationalMatrix) -> RationalMatrix:
    n = blocks[0].shape[1]
    entries, offset = [], 0
    for b in blocks:
        if b.shape[1] != n:
            raise ValueError("column counts differ")
        entries.extend((i + offset, j, v) for i, j, v in b.entries())
        offset += b.shape[0]
    return RationalMatrix.from_entries((offset, n), entries)


class OrthogonalBasis:
    """Exact Gram-Schmidt basis (orthogonal, not normalised)."""

    def __init__(self, vectors: Iterable[Mapping[int, Fraction]] = ()):
        self.vectors: list[Vector] = []
        self.norms_sq: list[Fraction] = []
        for v in vectors:
            self.add(v)

    def __len__(self):
        return len(self.vectors)

    def add(self, v: Mapping[int, Fraction]) -> bool:
        """Orthogonalise ``v`` against the basis; False if it was dependent."""
        r = dict(v)
        for g, n in zip(self.vectors, self.norms_sq):
            c = dot(g, r)
            if c:
                axpy(-c / n, g, r)
        if not r:
            return False
        self.vectors.append(r)
        self.norms_sq.append(dot(r, r))
        return True

    def coefficients(self, v: Mapping[int, Fraction]) -> list[Fraction]:
        return [dot(g, v) / n for g, n in zip(self.vectors, self.norms_sq)]

    def project(self, v: Mapping[int, Fraction]) -> Vector:
        out: Vector = {}
        for c, g in zip(self.coefficients(v), self.vectors):
            if c:
                axpy(c, g, out)
        return out

    def projection_norm_sq(self, v: Mapping[int, Fraction]) -> Fraction:
        total = Fraction(0)
        for g, n in zip(self.vectors, self.norms_sq):
            c = dot(g, v)
            total += c * c / n
        return total


def column_space_projector(a: RationalMatrix):
    """Return a callable projecting exactly onto the column space of ``a``.

    Uses the normal equations on a maximal independent column subset, which
    avoids orthogonalising large boundary spaces.
    """
    pivots = a.pivot_columns()
    if not pivots:
        return lambda v: {}
    sub = RationalMatrix((a.shape[0], len(pivots)), {k: a.cols[j] for k, j in enumerate(pivots) if j in a.cols})
    gram = (sub.T @ sub).to_domain()

    def project(v: Mapping[int, Fraction]) -> Vector:
        rhs = sub.rmatvec(v)
        if not rhs:
            return {}
        b = DomainMatrix.from_dod({i: {0: qq(x)} for i, x in rhs.items()}, (len(pivots), 1), QQ)
        x = gram.lu_solve(b)
        coeffs = {i: frac(row[0]) for i, row in x.to_dod().items() if row.get(0)}
        return sub.matvec(coeffs)

    return project
