"""Harmonic spaces, harmonic projections and the persistence decision procedures."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .chains import (
    Chain,
    Laplacian,
    SubsetStateDescriptor,
    apply_adjoint,
    apply_boundary,
    expand_subset_state,
    laplacian,
    _up_boundary,
)
from .complex import CliqueComplex, parse_rational
from .decision import Decision
from .exact import OrthogonalBasis, RationalMatrix, column_space_projector
from .overlap import HamiltonianMatrix, QpeConfig, qpe_decide
from .spectra import DENSE_LIMIT, SpectralSummary, dense_eigh, float_spectrum, zero_cutoff

GAP_FLOOR_EXPONENT = 3

# cached per-Laplacian exact data lives in the instance dict
_KERNEL = "_exact_kernel"
_BASIS = "_harmonic_basis"
_EIGH = "_float_eigh"


def exact_kernel(lap: Laplacian) -> list[dict[int, Fraction]]:
    """Rational basis of ``ker Delta_p`` by elimination on ``Delta_p``."""
    if _KERNEL not in lap.__dict__:
        lap.__dict__[_KERNEL] = lap.matrix.nullspace()
    return lap.__dict__[_KERNEL]


def harmonic_basis(lap: Laplacian) -> OrthogonalBasis:
    """Deterministic orthogonal basis of the harmonic space (pivot order)."""
    if _BASIS not in lap.__dict__:
        lap.__dict__[_BASIS] = OrthogonalBasis(exact_kernel(lap))
    return lap.__dict__[_BASIS]


def _float_eigh(lap: Laplacian):
    if _EIGH not in lap.__dict__:
        if lap.size > DENSE_LIMIT:
            raise ValueError(f"harmonic projection in floating point is limited to dimension {DENSE_LIMIT}")
        evals, evecs = dense_eigh(lap.to_scipy())
        lap.__dict__[_EIGH] = (evals, evecs, zero_cutoff(lap.max_abs()))
    return lap.__dict__[_EIGH]


def spectral_summary(lap: Laplacian, backend: str = "float", seed: int = 0) -> SpectralSummary:
    if backend == "exact":
        return SpectralSummary("exact", lap.size, len(exact_kernel(lap)))
    if backend != "float":
        raise ValueError(f"unknown backend {backend!r}")
    return float_spectrum(lap.to_scipy(), seed=seed)


def betti_number(K: CliqueComplex, p: int) -> int:
    """``dim Z_p - dim B_p`` by rank computations."""
    lap = Laplacian(K, p)
    z = lap.size - lap.boundary.rank()
    b = lap.coboundary.rank()
    return z - b


def _laplacian_for(K: CliqueComplex, p: int, lap: Laplacian | None) -> Laplacian:
    if lap is not None:
        if lap.complex is not K or lap.p != p:
            raise ValueError("Laplacian does not match the complex and dimension")
        return lap
    return laplacian(K, p)


def _check_chain(K: CliqueComplex, p: int, chain: Chain) -> None:
    if chain.complex is not K:
        raise ValueError("chain belongs to a different complex")
    if chain.p != p:
        raise ValueError(f"chain has dimension {chain.p}, expected {p}")


def harmonic_projection_norm_sq(K: CliqueComplex, p: int, chain: Chain, backend: str = "exact",
                                lap: Laplacian | None = None):
    """``||proj_{ker Delta_p} chain||^2``; a Fraction for the exact backend."""
    _check_chain(K, p, chain)
    lap = _laplacian_for(K, p, lap)
    x = chain.to_orthonormal()
    if backend == "exact":
        if not x.exact:
            raise ValueError("exact backend needs an exact chain")
        if x.norm_sq() != 1:
            raise ValueError("chain is not unit norm")
        return x.scale_sq * harmonic_basis(lap).projection_norm_sq(x.coeffs)
    if backend != "float":
        raise ValueError(f"unknown backend {backend!r}")
    v = x.to_array()
    if abs(np.linalg.norm(v) - 1) > 1e-9:
        raise ValueError("chain is not unit norm")
    evals, evecs, cutoff = _float_eigh(lap)
    sel = np.abs(evals) <= cutoff
    return float(min(1.0, ((evecs[:, sel].T @ v) ** 2).sum()))


def harmonic_projection_norm(K: CliqueComplex, p: int, chain: Chain, backend: str = "exact",
                             lap: Laplacian | None = None) -> float:
    return math.sqrt(float(harmonic_projection_norm_sq(K, p, chain, backend, lap)))


def is_cycle(chain: Chain) -> bool:
    if chain.p == 0:
        return True
    return apply_boundary(chain).is_zero() if chain.exact else bool(
        np.allclose(list(apply_boundary(chain).coeffs.values()) or [0.0], 0.0, atol=1e-12)
    )


def is_harmonic(chain: Chain) -> bool:
    """Exact ``Delta_p chain = 0`` via the two conditions ``d z = 0`` and ``d^T z = 0``."""
    if not is_cycle(chain):
        return False
    up = apply_adjoint(chain)
    return up.is_zero() if chain.exact else bool(np.allclose(list(up.coeffs.values()) or [0.0], 0.0, atol=1e-12))


_BOUNDARY_PROJ = "_boundary_projector"


def boundary_projector(lap: Laplacian):
    """Exact projector onto ``B_p = Im d_{p+1}`` (cached)."""
    if _BOUNDARY_PROJ not in lap.__dict__:
        lap.__dict__[_BOUNDARY_PROJ] = column_space_projector(lap.coboundary)
    return lap.__dict__[_BOUNDARY_PROJ]


def harmonic_representative(K: CliqueComplex, p: int, cycle: Chain, lap: Laplacian | None = None) -> Chain:
    """``proj_{B_p^perp}(z)`` for a cycle ``z``: the harmonic representative of its class."""
    _check_chain(K, p, cycle)
    if not cycle.exact:
        raise ValueError("harmonic_representative works over the rationals")
    if not is_cycle(cycle):
        raise ValueError("input chain is not a cycle")
    lap = _laplacian_for(K, p, lap)
    z = cycle.to_orthonormal()
    b = boundary_projector(lap)(z.coeffs)
    out = dict(z.coeffs)
    for i, v in b.items():
        s = out.get(i, 0) - v
        if s:
            out[i] = s
        else:
            out.pop(i, None)
    return Chain(K, p, out, z.scale_sq)


def embed_chain(chain: Chain, K2: CliqueComplex) -> Chain:
    """Same chain viewed in a supercomplex with shared vertex ids (and weights)."""
    x = chain.to_orthonormal()
    simp = x.complex.simplices[x.p]
    coeffs = {}
    for i, c in x.coeffs.items():
        s = simp[i]
        if s not in K2:
            raise ValueError(f"simplex {s} missing from the larger complex")
        coeffs[K2.index(s)] = c
    return Chain(K2, x.p, coeffs, x.scale_sq)


@dataclass
class PersistenceMap:
    """Matrix of the induced map ``H_p(K1) -> H_p(K2)`` in the two harmonic bases.

    Column ``i`` holds the coordinates of the ``i``-th K1 basis vector's
    projection onto ``H_p(K2)`` in the (orthogonal, unnormalised) K2 basis.
    """

    matrix: list[list[Fraction]]
    source: OrthogonalBasis
    target: OrthogonalBasis
    p: int

    @property
    def shape(self) -> tuple[int, int]:
        return (len(self.target), len(self.source))

    def rank(self) -> int:
        r, c = self.shape
        if r == 0 or c == 0:
            return 0
        return RationalMatrix.from_dense(self.matrix).rank()

    def apply(self, coords: list[Fraction]) -> list[Fraction]:
        return [sum((row[i] * coords[i] for i in range(len(coords))), Fraction(0)) for row in self.matrix]


def persistence_map(K1: CliqueComplex, K2: CliqueComplex, p: int) -> PersistenceMap:
    if not K1.is_subcomplex_of(K2):
        raise ValueError("K1 is not a subcomplex of K2")
    b1 = harmonic_basis(laplacian(K1, p))
    b2 = harmonic_basis(laplacian(K2, p))
    cols = []
    for v in b1.vectors:
        h = embed_chain(Chain(K1, p, v), K2)
        cols.append(b2.coefficients(h.coeffs))
    rows = [[cols[i][j] for i in range(len(cols))] for j in range(len(b2))]
    return PersistenceMap(rows, b1, b2, p)


def basis_chain(K: CliqueComplex, p: int, basis: OrthogonalBasis, coords: list[Fraction]) -> Chain:
    out: dict = {}
    for c, g in zip(coords, basis.vectors):
        for i, v in g.items():
            s = out.get(i, 0) + c * v
            if s:
                out[i] = s
            else:
                out.pop(i, None)
    return Chain(K, p, out)


# -- decisions ----------------------------------------------------------------


@dataclass
class PersistenceInstance:
    K1: CliqueComplex
    K2: CliqueComplex
    p: int
    descriptor: SubsetStateDescriptor
    delta: Fraction

    def __post_init__(self):
        self.delta = parse_rational(self.delta) if not isinstance(self.delta, Fraction) else self.delta
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if not self.K1.is_subcomplex_of(self.K2):
            raise ValueError("K1 is not a subcomplex of K2")
        if self.descriptor.dimension != self.p:
            raise ValueError(f"descriptor targets dimension {self.descriptor.dimension}, not {self.p}")


def _promise_flags(norm: float, delta: float, gap: float | None, n: int) -> list[str]:
    """Reasons the instance falls outside the decision promise.

    The gap should be at least ``n^-3`` and the norm either below
    ``exp(-n)`` or at least ``delta`` (``n`` the vertex count).
    """
    reasons = []
    if gap is not None and gap < n ** (-GAP_FLOOR_EXPONENT):
        reasons.append("gap")
    if math.exp(-n) < norm < delta:
        reasons.append("norm")
    return reasons


def _float_gap(lap: Laplacian) -> float | None:
    if lap.size == 0:
        return None
    if lap.size <= DENSE_LIMIT:
        evals, _, cutoff = _float_eigh(lap)
        nz = np.abs(evals[np.abs(evals) > cutoff])
        return float(nz.min()) if nz.size else None
    return float_spectrum(lap.to_scipy()).gap


def _decide_chain(K: CliqueComplex, p: int, chain: Chain, delta, method: str, qpe: QpeConfig | None,
                  lap: Laplacian | None = None, compute_gap: bool = True) -> Decision:
    delta = Fraction(delta) if not isinstance(delta, float) else delta
    lap = _laplacian_for(K, p, lap)
    n = K.graph.vertex_count
    gap = _float_gap(lap) if compute_gap else None
    if method == "exact":
        if not chain.exact:
            raise ValueError("exact method needs an exact chain")
        norm_sq = harmonic_projection_norm_sq(K, p, chain, "exact", lap)
        outcome = int(norm_sq >= Fraction(delta) ** 2)
        norm = math.sqrt(float(norm_sq))
        reasons = _promise_flags(norm, float(delta), gap, n)
        return Decision(outcome, norm, "exact", norm_sq, gap, bool(reasons), {"promise_reasons": reasons})
    if method == "float":
        norm_sq = float(harmonic_projection_norm_sq(K, p, chain, "float", lap))
        norm = math.sqrt(max(norm_sq, 0.0))
        outcome = int(norm >= float(delta) - 1e-12)
        reasons = _promise_flags(norm, float(delta), gap, n)
        return Decision(outcome, norm, "float", norm_sq, gap, bool(reasons), {"promise_reasons": reasons})
    if method == "qpe":
        cfg = qpe or QpeConfig()
        H = HamiltonianMatrix(lap.to_scipy(), check=False)
        v = chain.to_array()
        d = qpe_decide(H, v, float(delta), cfg, gap=gap)
        reasons = _promise_flags(1.0, float(delta), gap, n)
        d.gap = gap
        d.promise_violated = bool(reasons)
        d.diagnostics["promise_reasons"] = reasons
        return d
    raise ValueError(f"unknown method {method!r}")


def decide_harmonics(K: CliqueComplex, p: int, descriptor: SubsetStateDescriptor, delta, method: str = "exact",
                     qpe: QpeConfig | None = None, lap: Laplacian | None = None) -> Decision:
    """1 iff ``||proj_{H_p(K)} sigma|| >= delta`` for the subset state ``sigma``."""
    descriptor.validate(K)
    if descriptor.dimension != p:
        raise ValueError(f"descriptor targets dimension {descriptor.dimension}, not {p}")
    chain = expand_subset_state(K, descriptor, exact=True)
    return _decide_chain(K, p, chain, delta, method, qpe, lap)


def decide_harmonic_persistence(instance: PersistenceInstance, method: str = "exact", qpe: QpeConfig | None = None,
                                validate: bool = True, lap: Laplacian | None = None) -> Decision:
    """Expand ``sigma`` in K1, optionally check it is K1-harmonic, and measure
    its projection onto ``H_p(K2)``."""
    inst = instance
    inst.descriptor.validate(inst.K1)
    sigma = expand_subset_state(inst.K1, inst.descriptor, exact=True)
    if validate and not _harmonic_in(inst.K1, sigma):
        raise ValueError("sigma is not harmonic in K1")
    chain = embed_chain(sigma, inst.K2)
    return _decide_chain(inst.K2, inst.p, chain, inst.delta, method, qpe, lap)


def _harmonic_in(K: CliqueComplex, chain: Chain) -> bool:
    if chain.p + 1 > K.max_dim and K.truncated:
        _up_boundary(K, chain.p)
    return is_harmonic(chain)
