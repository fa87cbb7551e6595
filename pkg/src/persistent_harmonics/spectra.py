"""Floating-point spectra of symmetric operators, with explicit zero cutoff."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

DENSE_LIMIT = 4096
ITERATIVE_TOL = 1e-10


class EigensolverError(RuntimeError):
    """The iterative eigensolver did not converge."""


def zero_cutoff(max_abs: float) -> float:
    return 1e-9 * max(1.0, float(max_abs))


@dataclass
class SpectralSummary:
    backend: str
    size: int
    kernel_dim: int
    gap: float | None = None
    cutoff: float | None = None
    eigenvalues: np.ndarray | None = None
    complete: bool = True

    def to_json(self) -> dict:
        out = {
            "backend": self.backend,
            "size": self.size,
            "kernel_dim": self.kernel_dim,
            "gap": self.gap,
            "cutoff": self.cutoff,
            "complete": self.complete,
        }
        if self.eigenvalues is not None:
            out["eigenvalues"] = [float(x) for x in self.eigenvalues]
        return out


def _as_float(a):
    if hasattr(a, "to_scipy"):
        return a.to_scipy()
    return a


def max_abs_entry(a) -> float:
    a = _as_float(a)
    if sp.issparse(a):
        return float(abs(a).max()) if a.nnz else 0.0
    a = np.asarray(a)
    return float(np.abs(a).max()) if a.size else 0.0


def dense_eigh(a) -> tuple[np.ndarray, np.ndarray]:
    a = _as_float(a)
    dense = a.toarray() if sp.issparse(a) else np.asarray(a, dtype=float)
    return np.linalg.eigh(dense)


def summarize(evals: np.ndarray, cutoff: float, backend: str = "float", complete: bool = True, size=None) -> SpectralSummary:
    evals = np.sort(np.asarray(evals, dtype=float))
    small = np.abs(evals) <= cutoff
    above = np.abs(evals[~small])
    gap = float(above.min()) if above.size else None
    return SpectralSummary(
        backend=backend,
        size=len(evals) if size is None else size,
        kernel_dim=int(small.sum()),
        gap=gap,
        cutoff=cutoff,
        eigenvalues=evals,
        complete=complete,
    )


def float_spectrum(a, dense_limit: int = DENSE_LIMIT, seed: int = 0, tol: float = ITERATIVE_TOL) -> SpectralSummary:
    """Spectrum of a symmetric PSD matrix.

    Dense ``eigh`` up to ``dense_limit``.  Beyond that, shift-invert Lanczos
    (seeded start vector) with deflation: kernel vectors already found are
    lifted to a large eigenvalue, and batches repeat until one contains no
    new zero eigenvalue.  Plain Lanczos can miss copies of a degenerate
    eigenvalue, so a single call would undercount the kernel.
    """
    a = _as_float(a)
    n = a.shape[0]
    cutoff = zero_cutoff(max_abs_entry(a))
    if n == 0:
        return SpectralSummary("float", 0, 0, None, cutoff, np.zeros(0))
    if n <= dense_limit:
        evals, _ = dense_eigh(a)
        return summarize(evals, cutoff)
    return _deflated_lanczos(sp.csc_matrix(a), cutoff, seed, tol)


def _deflated_lanczos(a: sp.csc_matrix, cutoff: float, seed: int, tol: float) -> SpectralSummary:
    n = a.shape[0]
    rng = np.random.default_rng(seed)
    lu = spla.splu((a + sp.identity(n, format="csc")).tocsc())
    lift = 2.0 * float(abs(a).sum(axis=1).max()) + 1.0
    V = np.zeros((n, 0))
    MinvV = np.zeros((n, 0))
    core = np.zeros((0, 0))

    def matvec(x):
        x = np.ravel(x)
        return a @ x + lift * (V @ (V.T @ x))

    def solve(x):
        # Woodbury for (A + I + lift V V^T)^{-1}
        x = np.ravel(x)
        y = lu.solve(x)
        if V.shape[1]:
            y = y - MinvV @ np.linalg.solve(core, V.T @ y)
        return y

    k = 8
    while True:
        kk = min(k, n - 2 - V.shape[1]) if n - 2 - V.shape[1] > 0 else 1
        op = spla.LinearOperator((n, n), matvec=matvec, dtype=float)
        opinv = spla.LinearOperator((n, n), matvec=solve, dtype=float)
        try:
            evals, evecs = spla.eigsh(op, k=kk, sigma=-1.0, which="LM", OPinv=opinv,
                                      v0=rng.standard_normal(n), tol=tol)
        except spla.ArpackNoConvergence as exc:
            raise EigensolverError(f"eigsh failed to converge for k={kk}") from exc
        zero = np.abs(evals) <= cutoff
        if not zero.any():
            if V.shape[1]:
                # the lifted kernel vectors reappear only above the gap
                evals = np.concatenate([np.zeros(V.shape[1]), evals[evals < lift * 0.5]])
            return summarize(evals, cutoff, complete=False, size=n)
        new = evecs[:, zero]
        new = new - V @ (V.T @ new)
        q, _ = np.linalg.qr(new)
        V = np.hstack([V, q])
        MinvV = np.column_stack([lu.solve(V[:, j]) for j in range(V.shape[1])])
        core = np.eye(V.shape[1]) / lift + V.T @ MinvV
        if V.shape[1] >= n - 1:
            raise EigensolverError("kernel fills the space; use the dense path")
        if kk == k and not (~zero).any():
            k *= 2
