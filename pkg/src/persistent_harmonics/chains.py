"""Chain spaces, subset states, weighted boundary operators and Laplacians.

Chains are stored in the orthonormal basis ``|s'> = |s> / w(s)`` unless
flagged otherwise.  In that basis the weighted boundary operator is the
matrix with entry ``(-1)**i * w(v_i)`` in row ``s \\ {v_i}`` of column ``s``,
and the adjoint is the plain transpose.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import product
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .complex import CliqueComplex, JoinDecomposition, Simplex, format_rational, orient, parse_rational
from .exact import RationalMatrix, Vector, axpy, dot

ORTHONORMAL = "orthonormal"
WEIGHTED = "weighted"


@dataclass
class Chain:
    """Element of ``C_p(K)``: ``sqrt(scale_sq) * sum coeffs[i] |K_p[i]>``.

    Exact chains hold Fraction coefficients and an exact ``scale_sq`` so that
    states such as ``1/sqrt(2L) * (...)`` stay rational.  Floating chains
    hold floats with ``scale_sq == 1``.
    """

    complex: CliqueComplex
    p: int
    coeffs: dict
    scale_sq: Fraction = Fraction(1)
    basis: str = ORTHONORMAL

    def __post_init__(self):
        if self.basis not in (ORTHONORMAL, WEIGHTED):
            raise ValueError(f"unknown basis {self.basis!r}")
        n = self.complex.size(self.p)
        for i in self.coeffs:
            if not 0 <= i < n:
                raise ValueError(f"simplex index {i} out of range for C_{self.p}")
        self.coeffs = {i: c for i, c in self.coeffs.items() if c}

    @property
    def exact(self) -> bool:
        return isinstance(self.scale_sq, (int, Fraction)) and all(
            isinstance(c, (int, Fraction)) for c in self.coeffs.values()
        )

    @classmethod
    def from_simplices(cls, K: CliqueComplex, items: Iterable[tuple[Sequence[int], object]], basis=ORTHONORMAL):
        """Build from ``(oriented vertex list, coefficient)`` pairs."""
        coeffs: dict = {}
        p = None
        for verts, c in items:
            sign, s = orient(verts)
            if p is None:
                p = len(s) - 1
            elif len(s) - 1 != p:
                raise ValueError("mixed simplex dimensions in chain")
            if s not in K:
                raise ValueError(f"{s} is not a simplex of the complex")
            i = K.index(s)
            coeffs[i] = coeffs.get(i, 0) + sign * c
        if p is None:
            raise ValueError("cannot infer dimension of an empty chain")
        return cls(K, p, coeffs, basis=basis)

    def to_orthonormal(self) -> Chain:
        if self.basis == ORTHONORMAL:
            return self
        simp = self.complex.simplices[self.p]
        coeffs = {i: c * _weight(self.complex, simp[i], self.exact) for i, c in self.coeffs.items()}
        return Chain(self.complex, self.p, coeffs, self.scale_sq, ORTHONORMAL)

    def to_weighted(self) -> Chain:
        if self.basis == WEIGHTED:
            return self
        simp = self.complex.simplices[self.p]
        coeffs = {i: c / _weight(self.complex, simp[i], self.exact) for i, c in self.coeffs.items()}
        return Chain(self.complex, self.p, coeffs, self.scale_sq, WEIGHTED)

    def norm_sq(self):
        x = self.to_orthonormal()
        return x.scale_sq * sum(c * c for c in x.coeffs.values())

    def norm(self) -> float:
        return math.sqrt(float(self.norm_sq()))

    def inner(self, other: Chain):
        """Weighted inner product; exact when both chains are."""
        if other.complex is not self.complex or other.p != self.p:
            raise ValueError("chains live in different chain spaces")
        a, b = self.to_orthonormal(), other.to_orthonormal()
        raw = dot(a.coeffs, b.coeffs) if self.exact and other.exact else sum(
            c * b.coeffs.get(i, 0) for i, c in a.coeffs.items()
        )
        s = a.scale_sq * b.scale_sq
        if isinstance(s, Fraction):
            r = _exact_sqrt(s)
            if r is not None:
                return r * raw
        return math.sqrt(float(s)) * float(raw)

    def unscaled(self) -> Vector:
        """Orthonormal-basis coefficients without the ``sqrt(scale_sq)`` factor."""
        return dict(self.to_orthonormal().coeffs)

    def to_array(self) -> np.ndarray:
        x = self.to_orthonormal()
        out = np.zeros(self.complex.size(self.p))
        f = math.sqrt(float(x.scale_sq))
        for i, c in x.coeffs.items():
            out[i] = f * float(c)
        return out

    def with_coeffs(self, coeffs, p=None) -> Chain:
        return Chain(self.complex, self.p if p is None else p, coeffs, self.scale_sq, ORTHONORMAL)

    def __add__(self, other: Chain) -> Chain:
        a, b = self.to_orthonormal(), other.to_orthonormal()
        if a.p != b.p or a.complex is not b.complex:
            raise ValueError("chains live in different chain spaces")
        if a.scale_sq == b.scale_sq:
            out = dict(a.coeffs)
            axpy(1, b.coeffs, out)
            return a.with_coeffs(out)
        ra, rb = _exact_sqrt(Fraction(a.scale_sq)), _exact_sqrt(Fraction(b.scale_sq))
        if ra is None or rb is None:
            raise ValueError("cannot add exact chains with incommensurate scales")
        out = {i: ra * c for i, c in a.coeffs.items()}
        axpy(rb, b.coeffs, out)
        return Chain(a.complex, a.p, out)

    def __neg__(self) -> Chain:
        return self.with_coeffs({i: -c for i, c in self.to_orthonormal().coeffs.items()})

    def __sub__(self, other: Chain) -> Chain:
        return self + (-other)

    def is_zero(self) -> bool:
        return not self.coeffs

    def to_json(self) -> list:
        """List of ``[simplex, "p/q"]`` pairs (orthonormal basis, scale folded in)."""
        x = self.to_orthonormal()
        r = _exact_sqrt(Fraction(x.scale_sq)) if self.exact else None
        simp = self.complex.simplices[self.p]
        out = []
        for i in sorted(x.coeffs):
            c = x.coeffs[i]
            if r is not None:
                out.append([list(simp[i]), format_rational(r * c)])
            else:
                out.append([list(simp[i]), float(c) * math.sqrt(float(x.scale_sq))])
        return out

    @classmethod
    def from_json(cls, K: CliqueComplex, data: list) -> Chain:
        items = []
        for k, entry in enumerate(data):
            if not (isinstance(entry, list) and len(entry) == 2):
                raise ValueError(f"chain[{k}]: expected [simplex, coefficient]")
            verts, c = entry
            items.append((verts, c if isinstance(c, float) else parse_rational(c)))
        return cls.from_simplices(K, items)


def _weight(K: CliqueComplex, s: Simplex, exact: bool):
    w = K.weight(s)
    return w if exact else float(w)


def _exact_sqrt(x: Fraction) -> Fraction | None:
    if x < 0:
        return None
    n, d = math.isqrt(x.numerator), math.isqrt(x.denominator)
    if n * n == x.numerator and d * d == x.denominator:
        return Fraction(n, d)
    return None


# -- subset states ------------------------------------------------------------


OrientedEdge = tuple[int, int]
Block = tuple[tuple[OrientedEdge, ...], ...]


@dataclass(frozen=True)
class SubsetStateDescriptor:
    """Union of Cartesian products of oriented edge sets, one set per factor.

    Each block ``(E1, ..., Ep)`` stands for the simplices ``e1 * ... * ep``
    (vertex lists concatenated in factor order), a subset of the
    ``(2p - 1)``-simplices of a join.
    """

    blocks: tuple[Block, ...]
    decomposition: JoinDecomposition | None = field(default=None, compare=False)

    def __post_init__(self):
        blocks = tuple(tuple(tuple(tuple(e) for e in es) for es in b) for b in self.blocks)
        if not blocks:
            raise ValueError("descriptor has no blocks")
        p = len(blocks[0])
        if p == 0 or any(len(b) != p for b in blocks):
            raise ValueError("every block needs the same, nonzero number of edge sets")
        for b in blocks:
            for es in b:
                if not es:
                    raise ValueError("empty edge set in descriptor block")
        object.__setattr__(self, "blocks", blocks)

    @property
    def p(self) -> int:
        """Number of edge sets per block."""
        return len(self.blocks[0])

    @property
    def dimension(self) -> int:
        return 2 * self.p - 1

    def block_size(self, k: int) -> int:
        return math.prod(len(es) for es in self.blocks[k])

    def iter_block(self, k: int):
        """Yield ``(sign, sorted_simplex)`` for block ``k``."""
        for tup in product(*self.blocks[k]):
            verts = [v for e in tup for v in e]
            yield orient(verts)

    @property
    def total_size(self) -> int:
        return sum(self.block_size(k) for k in range(len(self.blocks)))

    def validate(self, K: CliqueComplex) -> None:
        seen: dict[Simplex, int] = {}
        for k, b in enumerate(self.blocks):
            if self.decomposition is not None:
                if len(b) > len(self.decomposition.factors):
                    raise ValueError(f"block {k} has more edge sets than join factors")
                for f, es in enumerate(b):
                    for e in es:
                        if any(self.decomposition.factor_of(v) != f for v in e):
                            raise ValueError(f"block {k}: edge {e} is not in join factor {f}")
            for _, s in self.iter_block(k):
                if s not in K:
                    raise ValueError(f"block {k}: {s} is not a simplex of the complex")
                if s in seen:
                    if seen[s] == k:
                        raise ValueError(f"block {k}: simplex {s} listed twice")
                    raise ValueError(f"blocks {seen[s]} and {k} overlap at simplex {s}")
                seen[s] = k

    def to_json(self) -> dict:
        return {"p": self.p, "blocks": [[[list(e) for e in es] for es in b] for b in self.blocks]}

    @classmethod
    def from_json(cls, data: dict, decomposition: JoinDecomposition | None = None) -> SubsetStateDescriptor:
        if not isinstance(data, dict) or "blocks" not in data:
            raise ValueError("descriptor.blocks: missing field")
        blocks = []
        for k, b in enumerate(data["blocks"]):
            if not isinstance(b, list):
                raise ValueError(f"descriptor.blocks[{k}]: expected a list of edge sets")
            sets = []
            for f, es in enumerate(b):
                edges = []
                for j, e in enumerate(es):
                    if not (isinstance(e, list) and len(e) == 2 and all(isinstance(x, int) for x in e)):
                        raise ValueError(f"descriptor.blocks[{k}][{f}][{j}]: expected [u, v]")
                    edges.append(tuple(e))
                sets.append(tuple(edges))
            blocks.append(tuple(sets))
        desc = cls(tuple(blocks), decomposition)
        if "p" in data and data["p"] != desc.p:
            raise ValueError(f"descriptor.p: says {data['p']} but blocks have {desc.p} edge sets")
        return desc

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))

    @classmethod
    def load(cls, path, decomposition=None) -> SubsetStateDescriptor:
        return cls.from_json(json.loads(Path(path).read_text()), decomposition)


def expand_subset_state(K: CliqueComplex, d: SubsetStateDescriptor, exact: bool = True) -> Chain:
    """Expand ``(1/sqrt(m)) sum_i |S_i>`` with each block uniformly normalised.

    The exact expansion requires the block sizes to differ by rational square
    factors (true for equal sizes); otherwise use ``exact=False``.
    """
    d.validate(K)
    m = len(d.blocks)
    sizes = [d.block_size(k) for k in range(m)]
    coeffs: dict = {}
    if exact:
        base = sizes[0]
        for k, size in enumerate(sizes):
            ratio = _exact_sqrt(Fraction(base, size))
            if ratio is None:
                raise ValueError("block sizes do not admit an exact common scale; use exact=False")
            for sign, s in d.iter_block(k):
                coeffs[K.index(s)] = sign * ratio
        return Chain(K, d.dimension, coeffs, Fraction(1, m * base))
    for k, size in enumerate(sizes):
        amp = 1.0 / math.sqrt(m * size)
        for sign, s in d.iter_block(k):
            coeffs[K.index(s)] = sign * amp
    return Chain(K, d.dimension, coeffs, 1.0)


# -- boundary operators -----------------------------------------------------


@dataclass(frozen=True)
class BoundaryMatrix:
    """Weighted ``d_p : C_p -> C_{p-1}`` in orthonormal bases."""

    complex: CliqueComplex
    p: int
    matrix: RationalMatrix

    @property
    def shape(self):
        return self.matrix.shape

    def to_scipy(self):
        return self.matrix.to_scipy()


def _check_dim(K: CliqueComplex, p: int) -> None:
    if not 0 <= p <= K.max_dim:
        raise ValueError(f"dimension {p} outside 0..{K.max_dim}")


def boundary_matrix(K: CliqueComplex, p: int) -> BoundaryMatrix:
    _check_dim(K, p)
    rows = K.size(p - 1) if p > 0 else 0
    cols: dict[int, dict[int, Fraction]] = {}
    if p > 0:
        w = K.graph.weights
        for j, s in enumerate(K.simplices[p]):
            col = {}
            for i, v in enumerate(s):
                face = s[:i] + s[i + 1:]
                col[K.index(face)] = w[v] if i % 2 == 0 else -w[v]
            cols[j] = col
    return BoundaryMatrix(K, p, RationalMatrix((rows, K.size(p)), cols))


def _up_boundary(K: CliqueComplex, p: int) -> RationalMatrix:
    """``d_{p+1}``, or the zero map when no (p+1)-simplices exist."""
    if p + 1 <= K.max_dim:
        return boundary_matrix(K, p + 1).matrix
    if K.truncated:
        raise ValueError(
            f"complex truncated at dimension {K.max_dim}; rebuild with max_dim >= {p + 1}"
        )
    return RationalMatrix((K.size(p), 0))


class Laplacian:
    """``Delta_p = d_{p+1} d_{p+1}^T + d_p^T d_p`` with its up/down parts."""

    def __init__(self, K: CliqueComplex, p: int):
        _check_dim(K, p)
        self.complex = K
        self.p = p
        self.boundary = boundary_matrix(K, p).matrix
        self.coboundary = _up_boundary(K, p)

    @cached_property
    def up(self) -> RationalMatrix:
        b = self.coboundary
        return b @ b.T

    @cached_property
    def down(self) -> RationalMatrix:
        b = self.boundary
        return b.T @ b

    @cached_property
    def matrix(self) -> RationalMatrix:
        return self.up + self.down

    @property
    def size(self) -> int:
        return self.complex.size(self.p)

    def to_scipy(self):
        return self.matrix.to_scipy()

    def max_abs(self) -> float:
        return float(self.matrix.max_abs())

    def __repr__(self):
        return f"Laplacian(p={self.p}, size={self.size})"


def laplacian(K: CliqueComplex, p: int) -> Laplacian:
    return Laplacian(K, p)


# -- matrix-free application -------------------------------------------------


def _value(c, exact):
    return c if exact else float(c)


def apply_boundary(chain: Chain) -> Chain:
    """``d_p chain`` without assembling the matrix."""
    x = chain.to_orthonormal()
    K, p = x.complex, x.p
    if p == 0:
        raise ValueError("boundary of a 0-chain maps to the zero space")
    w, exact = K.graph.weights, x.exact
    simp = K.simplices[p]
    out: dict = {}
    for j, c in x.coeffs.items():
        s = simp[j]
        for i, v in enumerate(s):
            face = K.index(s[:i] + s[i + 1:])
            term = c * _value(w[v], exact)
            out[face] = out.get(face, 0) + (term if i % 2 == 0 else -term)
    return Chain(K, p - 1, out, x.scale_sq)


def apply_adjoint(chain: Chain, target_dim: int | None = None) -> Chain:
    """``d_{p+1}^T chain``: spread each simplex onto its cofaces."""
    x = chain.to_orthonormal()
    K, p = x.complex, x.p
    if target_dim is not None and target_dim != p + 1:
        raise ValueError(f"adjoint maps C_{p} to C_{p + 1}, not C_{target_dim}")
    if p + 1 > K.max_dim:
        if K.truncated:
            raise ValueError(f"complex truncated at dimension {K.max_dim}")
        return Chain(K, p + 1, {}, x.scale_sq)
    w, exact = K.graph.weights, x.exact
    simp = K.simplices[p]
    out: dict = {}
    for j, c in x.coeffs.items():
        for pos, tau in K.cofaces(simp[j]):
            v = tau[pos]
            term = c * _value(w[v], exact)
            k = K.index(tau)
            out[k] = out.get(k, 0) + (term if pos % 2 == 0 else -term)
    return Chain(K, p + 1, out, x.scale_sq)


def apply_laplacian(chain: Chain) -> Chain:
    x = chain.to_orthonormal()
    out: dict = {}
    up = apply_adjoint(x)
    if up.coeffs:
        out = _accumulate(out, apply_boundary(up).coeffs)
    if x.p > 0:
        out = _accumulate(out, apply_adjoint(apply_boundary(x)).coeffs)
    return Chain(x.complex, x.p, out, x.scale_sq)


def _accumulate(acc: dict, add: dict) -> dict:
    for i, v in add.items():
        s = acc.get(i, 0) + v
        if s:
            acc[i] = s
        else:
            acc.pop(i, None)
    return acc
