"""Kernel / low-energy overlap: exact eigen-oracle and simulated phase estimation.

Phase estimation is simulated analytically.  With ``M = 2**b`` ancilla
outcomes and eigenphase ``theta``, outcome ``j`` has probability
``|sin(M x / 2) / (M sin(x / 2))|^2`` with ``x = theta - 2 pi j / M``.  The
input state's eigen-weights mix these distributions; each repetition draws one
outcome from the mixture with its own generator seeded by ``(seed, r)``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from .circuits import ExactState
from .decision import Decision
from .exact import OrthogonalBasis, RationalMatrix
from .spectra import SpectralSummary, dense_eigh, float_spectrum, max_abs_entry, zero_cutoff

SIMULATOR_CAP = 2**13
MAX_REPETITIONS = 10**4
UNIT_TOL = 1e-9


class HamiltonianMatrix:
    """Hermitian matrix, exact (``RationalMatrix``) or floating (dense/sparse).

    ``parts`` optionally lists matrices (same type) that sum to ``matrix``,
    for example a rank-one projector decomposition.
    """

    def __init__(self, matrix, parts=None, locality: int | None = None, check: bool = True):
        if isinstance(matrix, RationalMatrix):
            self.exact = True
        else:
            matrix = sp.csr_matrix(matrix) if sp.issparse(matrix) else np.asarray(matrix, dtype=float)
            self.exact = False
        if matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"Hamiltonian must be square, got {matrix.shape}")
        self.matrix = matrix
        self.parts = list(parts) if parts is not None else None
        self.locality = locality
        if check:
            if not self.is_hermitian():
                raise ValueError("Hamiltonian is not Hermitian")
            if self.parts is not None and not self._parts_sum_ok():
                raise ValueError("decomposition does not sum to the matrix")

    @classmethod
    def from_hamiltonian(cls, h, groups=None) -> HamiltonianMatrix:
        """Wrap a ``QsatHamiltonian`` or ``KitaevHamiltonian`` (exact)."""
        return cls(h.matrix(groups))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        if self.exact:
            return self.matrix.is_symmetric()
        a = self.matrix
        diff = a - a.T
        if sp.issparse(diff):
            return diff.nnz == 0 or float(abs(diff).max()) <= tol * max(1.0, max_abs_entry(a))
        return float(np.abs(diff).max(initial=0.0)) <= tol * max(1.0, max_abs_entry(a))

    def _parts_sum_ok(self) -> bool:
        if self.exact:
            acc = RationalMatrix(self.matrix.shape)
            for p in self.parts:
                acc = acc + p
            return acc == self.matrix
        acc = sum((np.asarray(p.toarray() if sp.issparse(p) else p, dtype=float) for p in self.parts), np.zeros(self.matrix.shape))
        return np.allclose(acc, self.dense(), atol=1e-12)

    def dense(self) -> np.ndarray:
        if self.exact:
            return self.matrix.to_dense_float()
        return self.matrix.toarray() if sp.issparse(self.matrix) else self.matrix

    def float_matrix(self):
        return self.matrix.to_scipy() if self.exact else self.matrix


# -- state coercion --------------------------------------------------------


def _as_array(state, dim: int) -> np.ndarray:
    if isinstance(state, ExactState):
        if state.dim != dim:
            raise ValueError(f"state dimension {state.dim} does not match Hamiltonian dimension {dim}")
        return state.to_array()
    if hasattr(state, "to_array"):
        v = np.asarray(state.to_array(), dtype=float)
    else:
        v = np.asarray(state, dtype=float)
    if v.shape != (dim,):
        raise ValueError(f"state dimension {v.shape} does not match Hamiltonian dimension {dim}")
    return v


def _check_unit_float(v: np.ndarray) -> None:
    n = float(np.linalg.norm(v))
    if abs(n - 1.0) > UNIT_TOL:
        raise ValueError(f"state is not unit norm (norm {n:.12g})")


_EIG_CACHE_ATTR = "_eig_cache"


def eigensystem(H: HamiltonianMatrix):
    """Dense eigendecomposition with small eigenvalues snapped to zero (cached)."""
    cached = getattr(H, _EIG_CACHE_ATTR, None)
    if cached is not None:
        return cached
    if H.dim > SIMULATOR_CAP:
        raise ValueError(f"dimension {H.dim} exceeds the dense cap {SIMULATOR_CAP}")
    evals, evecs = dense_eigh(H.float_matrix())
    cutoff = zero_cutoff(max_abs_entry(H.float_matrix()))
    evals = np.where(np.abs(evals) <= cutoff, 0.0, evals)
    setattr(H, _EIG_CACHE_ATTR, (evals, evecs, cutoff))
    return evals, evecs, cutoff


def spectral_gap(H: HamiltonianMatrix, seed: int = 0) -> SpectralSummary:
    """Smallest nonzero ``|lambda|`` above the cutoff, with the kernel dimension."""
    if not H.is_hermitian():
        raise ValueError("Hamiltonian is not Hermitian")
    return float_spectrum(H.float_matrix(), seed=seed)


# -- exact overlap ----------------------------------------------------------

KERNEL, LOW_ENERGY, COMPLEMENT = "kernel", "low_energy", "complement"


def kernel_overlap_sq(H: HamiltonianMatrix, state: ExactState) -> Fraction:
    """``||proj_ker(H) state||^2`` exactly (rational H and state)."""
    if not H.exact:
        raise ValueError("exact kernel overlap needs a rational Hamiltonian")
    if state.dim != H.dim:
        raise ValueError(f"state dimension {state.dim} does not match Hamiltonian dimension {H.dim}")
    if state.norm_sq() != 1:
        raise ValueError("state is not unit norm")
    basis = OrthogonalBasis(H.matrix.nullspace())
    return state.scale_sq * basis.projection_norm_sq(state.amps)


def exact_overlap(H: HamiltonianMatrix, state, mode: str = KERNEL, eta: float | None = None) -> float:
    """Norm of the projection of ``state`` onto ``ker H`` (or its complement, or ``E_{<eta}``).

    Exact arithmetic is used for the kernel modes when both inputs are
    rational; otherwise the dense eigendecomposition with the zero cutoff.
    """
    if mode not in (KERNEL, LOW_ENERGY, COMPLEMENT):
        raise ValueError(f"unknown mode {mode!r}")
    if not H.is_hermitian():
        raise ValueError("Hamiltonian is not Hermitian")
    if mode == LOW_ENERGY and (eta is None or eta <= 0):
        raise ValueError("low-energy mode needs eta > 0")
    if mode != LOW_ENERGY and H.exact and isinstance(state, ExactState):
        k = kernel_overlap_sq(H, state)
        return math.sqrt(float(k if mode == KERNEL else 1 - k))
    v = _as_array(state, H.dim)
    _check_unit_float(v)
    evals, evecs, _ = eigensystem(H)
    w = (evecs.T @ v) ** 2
    if mode == KERNEL:
        sel = evals == 0
    elif mode == COMPLEMENT:
        sel = evals != 0
    else:
        sel = evals < eta
    return math.sqrt(float(min(1.0, w[sel].sum())))


# -- phase estimation ---------------------------------------------------------


@dataclass
class QpeConfig:
    bits: int = 8
    repetitions: int | None = None
    seed: int = 0
    window: float | None = None
    norm_bound: str = "spectral"

    def __post_init__(self):
        if self.bits < 1:
            raise ValueError("bits must be >= 1")
        if self.repetitions is not None and self.repetitions < 1:
            raise ValueError("repetitions must be >= 1")
        if self.norm_bound not in ("spectral", "row-sum"):
            raise ValueError("norm_bound must be 'spectral' or 'row-sum'")
        if self.window is not None and self.window <= 0:
            raise ValueError("window must be positive")

    def repetitions_for(self, delta: float) -> int:
        if self.repetitions is not None:
            return self.repetitions
        return default_repetitions(delta)


def default_repetitions(delta: float) -> int:
    return min(MAX_REPETITIONS, math.ceil(16 / (float(delta) ** 2)))


def phase_scale(bound: float, bits: int) -> float:
    if not math.isfinite(bound) or bound < 0:
        raise ValueError(f"cannot scale: norm bound estimate {bound!r} is invalid")
    return 2 * math.pi * (1 - 2.0 ** (-bits)) / (bound + 1)


def fejer(x: np.ndarray, M: int) -> np.ndarray:
    """``|sin(M x/2) / (M sin(x/2))|^2`` with the removable singularities filled."""
    x = np.asarray(x, dtype=float)
    s = np.sin(x / 2)
    out = np.ones_like(x)
    ok = np.abs(s) > 1e-15
    out[ok] = (np.sin(M * x[ok] / 2) / (M * s[ok])) ** 2
    return out


def outcome_distribution(phases: np.ndarray, weights: np.ndarray, bits: int) -> np.ndarray:
    M = 1 << bits
    half_grid = np.pi * np.arange(M) / M
    p = np.zeros(M)
    for th, w in zip(phases, weights):
        if w <= 0:
            continue
        # sin(M x / 2) = +-sin(M th / 2) on the grid, so the numerator is constant
        num = math.sin(M * th / 2) ** 2
        if num < 1e-24:
            p[int(round(th * M / (2 * np.pi))) % M] += w
            continue
        s = np.sin(th / 2 - half_grid)
        p += (w * num / M**2) / (s * s)
    total = p.sum()
    return p / total if total > 0 else p


def wrap_phase(phi: float) -> float:
    """Representative in ``(-pi, pi]``."""
    phi = math.fmod(phi, 2 * math.pi)
    if phi > math.pi:
        phi -= 2 * math.pi
    elif phi <= -math.pi:
        phi += 2 * math.pi
    return phi


@dataclass
class QpeRun:
    bits: int
    repetitions: int
    seed: int
    scale: float
    window: float
    bound: float
    samples: list = field(default_factory=list)

    @property
    def hits(self) -> int:
        return sum(1 for _, _, hit in self.samples if hit)


def _merge(evals: np.ndarray, weights: np.ndarray):
    keys: dict[float, float] = {}
    for e, w in zip(evals, weights):
        keys[float(e)] = keys.get(float(e), 0.0) + float(w)
    e = np.array(list(keys))
    return e, np.array([keys[k] for k in keys])


def run_qpe(H: HamiltonianMatrix, state, cfg: QpeConfig, repetitions: int, mode: str = KERNEL,
            gap: float | None = None, eta: float | None = None) -> QpeRun:
    if H.dim > SIMULATOR_CAP:
        raise ValueError(f"dimension {H.dim} exceeds the simulator cap {SIMULATOR_CAP}")
    v = _as_array(state, H.dim)
    _check_unit_float(v)
    evals, evecs, _ = eigensystem(H)
    if cfg.norm_bound == "spectral":
        bound = float(np.abs(evals).max(initial=0.0))
    else:
        a = H.float_matrix()
        bound = float(abs(a).sum(axis=1).max()) if a.shape[0] else 0.0
    scale = phase_scale(bound, cfg.bits)
    M = 1 << cfg.bits
    top = scale * float(np.abs(evals).max(initial=0.0))
    headroom = 2 * math.pi - top
    if mode == LOW_ENERGY:
        if eta is None or eta <= 0:
            raise ValueError("low-energy mode needs eta > 0")
        limit = scale * eta
    else:
        if gap is None:
            nz = np.abs(evals[evals != 0])
            gap = float(nz.min()) if nz.size else None
        limit = scale * gap / 2 if gap is not None else math.pi / M
    # keep the window clear of wrapped-around high eigenphases
    limit = min(limit, headroom / 2)
    if cfg.window is not None:
        if cfg.window > limit:
            raise ValueError(f"window {cfg.window} exceeds the admissible {limit}")
        window = cfg.window
    else:
        window = limit
    weights = (evecs.T @ v) ** 2
    e, w = _merge(evals, weights)
    probs = outcome_distribution(scale * e, w, cfg.bits)
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    run = QpeRun(cfg.bits, repetitions, cfg.seed, scale, window, bound)
    for r in range(repetitions):
        rng = np.random.default_rng([cfg.seed, r])
        j = int(np.searchsorted(cdf, rng.random(), side="right"))
        j = min(j, M - 1)
        phi = wrap_phase(2 * math.pi * j / M)
        run.samples.append((r, phi, abs(phi) < window))
    return run


def qpe_decide(H: HamiltonianMatrix, state, delta, cfg: QpeConfig, mode: str = KERNEL,
               gap: float | None = None, eta: float | None = None) -> Decision:
    """Repeat-and-threshold: outcome 1 iff some sample lands in the zero window."""
    delta = float(delta)
    if not 0 < delta < 1:
        raise ValueError("delta must lie in (0, 1)")
    R = cfg.repetitions_for(delta)
    run = run_qpe(H, state, cfg, R, mode, gap, eta)
    frac_hits = run.hits / R
    evals = eigensystem(H)[0]
    nz = np.abs(evals[evals != 0])
    return Decision(
        outcome=int(run.hits > 0),
        norm=math.sqrt(frac_hits),
        method="qpe",
        norm_sq=frac_hits,
        gap=float(nz.min()) if nz.size else None,
        diagnostics={
            "bits": run.bits,
            "repetitions": R,
            "seed": run.seed,
            "scale": run.scale,
            "window": run.window,
            "bound": run.bound,
            "hits": run.hits,
            "samples": run.samples,
        },
    )


def sample_log_csv(decision: Decision) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["repetition", "phase", "in_window"])
    for r, phi, hit in decision.diagnostics.get("samples", []):
        w.writerow([r, repr(float(phi)), int(hit)])
    return buf.getvalue()


def write_sample_log(decision: Decision, path) -> None:
    Path(path).write_text(sample_log_csv(decision))


def read_sample_log(path) -> list[tuple[int, float, bool]]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return [(int(r["repetition"]), float(r["phase"]), r["in_window"] == "1") for r in rows]


def leakage_bound(scaled_gap: float, window: float, bits: int) -> float:
    """Upper bound on the probability that an eigenphase at least ``scaled_gap``
    from zero produces an outcome inside ``|phase| < window``."""
    d0 = scaled_gap - window
    if d0 <= 0:
        return 1.0
    M = 1 << bits
    # sin(x/2) >= x/pi on [0, pi]; sum of pi^2 / (M x)^2 over bins spaced 2 pi / M
    one_side = math.pi**2 / (M * d0) ** 2 + math.pi / (2 * M * d0)
    return min(1.0, 2 * one_side)


def bits_for_gap(gap: float, bound: float, repetitions: int, failure: float = 1e-2, max_bits: int = 22) -> int:
    """Smallest ``b`` whose leakage bound keeps ``R`` repetitions below ``failure``."""
    for b in range(1, max_bits + 1):
        s = phase_scale(bound, b)
        g = s * gap
        headroom = 2 * math.pi - s * bound
        window = min(g / 2, headroom / 2)
        eff = min(g, headroom)
        leak = leakage_bound(eff, window, b)
        if 1 - (1 - leak) ** repetitions <= failure:
            return b
    return max_bits


# -- agreement suite -------------------------------------------------------------


@dataclass
class PlantedInstance:
    H: HamiltonianMatrix
    state: np.ndarray
    planted: float
    gap: float
    kernel_dim: int
    seed: int


def planted_instance(seed: int, dim: int | None = None, positive: bool | None = None,
                     min_gap: float = 0.1, min_overlap: float = 0.3) -> PlantedInstance:
    """Random sum of rank-one projectors with a planted kernel and overlap.

    The projectors live in the orthogonal complement of a random kernel
    subspace, so the kernel is known exactly; the state mixes a kernel unit
    vector (amplitude ``alpha``) with a gapped unit vector.
    """
    rng = np.random.default_rng([seed, 0xC0FFEE])
    d = int(dim if dim is not None else rng.integers(8, 65))
    if not 2 <= d <= 64:
        raise ValueError("dimension must be in 2..64")
    k = int(rng.integers(1, max(1, d // 4) + 1))
    if positive is None:
        positive = bool(rng.integers(0, 2))
    alpha = float(rng.uniform(min_overlap, 1.0)) if positive else 0.0
    for _ in range(1000):
        q, _ = np.linalg.qr(rng.standard_normal((d, d)))
        ker, perp = q[:, :k], q[:, k:]
        count = 3 * (d - k)
        coeffs = rng.standard_normal((d - k, count))
        vecs = perp @ coeffs
        vecs /= np.linalg.norm(vecs, axis=0)
        mat = vecs @ vecs.T
        mat = (mat + mat.T) / 2
        evals = np.linalg.eigvalsh(mat)
        nonzero = np.sort(evals)[k:]
        if nonzero.min() >= min_gap:
            break
    else:
        raise RuntimeError("could not sample a gapped instance")
    kv = ker @ rng.standard_normal(k)
    kv /= np.linalg.norm(kv)
    gv = perp @ rng.standard_normal(d - k)
    gv /= np.linalg.norm(gv)
    psi = alpha * kv + math.sqrt(1 - alpha**2) * gv
    psi /= np.linalg.norm(psi)
    parts = [np.outer(vecs[:, i], vecs[:, i]) for i in range(count)]
    H = HamiltonianMatrix(mat, parts=parts)
    return PlantedInstance(H, psi, alpha, float(nonzero.min()), k, seed)


def agreement_suite(n: int = 25, delta: float = 0.25, seed: int = 2024, bits: int | None = None,
                    failure: float = 1e-2) -> list[dict]:
    """Compare ``qpe_decide`` with exact thresholding on ``n`` planted instances."""
    rows = []
    R = default_repetitions(delta)
    for i in range(n):
        inst = planted_instance(seed * 1000 + i, positive=bool(i % 2))
        exact = exact_overlap(inst.H, inst.state)
        expected = int(exact >= delta)
        evals = eigensystem(inst.H)[0]
        b = bits if bits is not None else bits_for_gap(inst.gap, float(np.abs(evals).max()), R, failure)
        dec = qpe_decide(inst.H, inst.state, delta, QpeConfig(bits=b, seed=seed + i))
        rows.append({
            "index": i,
            "dim": inst.H.dim,
            "gap": inst.gap,
            "planted": inst.planted,
            "exact_norm": exact,
            "expected": expected,
            "qpe": dec.outcome,
            "bits": b,
            "agree": dec.outcome == expected,
        })
    return rows
