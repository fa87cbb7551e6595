"""Self-checks behind the ``verify-suite`` command and the acceptance tests."""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable

import networkx as nx
import numpy as np

from .chains import Chain, apply_laplacian, boundary_matrix, expand_subset_state, laplacian
from .circuits import Circuit, Gate
from .complex import CliqueComplex, WeightedGraph, qubit_graph, wedge_base_graph
from .exact import RationalMatrix
from .harmonics import (
    PersistenceInstance,
    basis_chain,
    boundary_projector,
    decide_harmonic_persistence,
    embed_chain,
    exact_kernel,
    harmonic_projection_norm_sq,
    harmonic_representative,
    persistence_map,
    spectral_summary,
)
from .overlap import QpeConfig, agreement_suite
from .qsat import build_bravyi_hamiltonian, check_clock_legality, history_state, prehistory_state
from .reduction import FilledQubitComplex, attach_fill_gadget, prehistory_descriptor, s_label


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    elapsed: float
    limit: float
    details: dict = field(default_factory=dict)

    @property
    def in_time(self) -> bool:
        return self.elapsed < self.limit

    @property
    def ok(self) -> bool:
        return self.passed and self.in_time

    def line(self) -> str:
        tag = "PASS" if self.ok else "FAIL"
        note = "" if self.in_time else " (over time limit)"
        return f"[{tag}] criterion {self.number}: {self.title} ({self.elapsed:.2f}s / {self.limit:.0f}s){note}"


# -- test complexes -------------------------------------------------------------


def _rand_weight(rng: random.Random) -> Fraction:
    return Fraction(rng.randint(1, 9), rng.randint(1, 5))


def _clique_dim(g: WeightedGraph) -> int:
    if g.vertex_count == 0:
        return 0
    return max(len(c) for c in nx.find_cliques(g.to_networkx())) - 1


def full_complex(g: WeightedGraph) -> CliqueComplex:
    """Clique complex with every simplex (never truncated)."""
    return CliqueComplex(g, max(1, _clique_dim(g)))


def oracle_suite(seed: int = 11) -> list[tuple[str, WeightedGraph]]:
    """Small weighted graphs (at most 12 vertices) for backend comparisons."""
    rng = random.Random(seed)
    out = [
        ("triangle", WeightedGraph.from_edges(3, [(0, 1), (1, 2), (0, 2)], [2, 3, Fraction(1, 2)])),
        ("K4", WeightedGraph.from_edges(4, list(combinations(range(4), 2)), [1, 2, 3, 4])),
        ("wedge", wedge_base_graph().graph),
        ("octahedron", WeightedGraph.from_edges(
            6, [e for e in combinations(range(6), 2) if e not in {(0, 1), (2, 3), (4, 5)}],
            [Fraction(1, 3), 2, 1, 5, Fraction(7, 2), 1])),
        ("5-cycle", WeightedGraph.from_edges(5, [(i, (i + 1) % 5) for i in range(5)], [1, 2, 3, 1, 2])),
    ]
    while len(out) < 12:
        n = rng.randint(5, 12)
        p = rng.uniform(0.25, 0.6)
        g = nx.gnp_random_graph(n, p, seed=rng.randint(0, 10**6))
        w = [_rand_weight(rng) for _ in range(n)]
        out.append((f"gnp({n},{p:.2f})", WeightedGraph.from_edges(n, g.edges(), w)))
    return out


def persistence_pairs() -> list[tuple[str, CliqueComplex, CliqueComplex, int]]:
    """``(name, K1, K2, p)`` with ``K1`` a subcomplex of ``K2``."""
    pairs = []
    g1 = FilledQubitComplex(qubit_graph(1))
    pairs.append(("G1 + cone(0)", g1.complex, attach_fill_gadget(g1, "0").complex, 1))
    pairs.append(("G1 + cone(1)", g1.complex, attach_fill_gadget(g1, "1", Fraction(1, 3)).complex, 1))
    both = attach_fill_gadget(attach_fill_gadget(g1, "0"), "1", Fraction(2))
    pairs.append(("G1 + both cones", g1.complex, both.complex, 1))
    pairs.append(("G1 = G1", g1.complex, g1.complex, 1))
    g2 = FilledQubitComplex(qubit_graph(2))
    pairs.append(("G2 + cone(00)", g2.complex, attach_fill_gadget(g2, "00").complex, 3))
    # weighted 6-cycle with two chords added in K2
    w = [Fraction(1), Fraction(2), Fraction(1, 2), Fraction(3), Fraction(1), Fraction(5, 4)]
    ring = [(i, (i + 1) % 6) for i in range(6)]
    a = WeightedGraph.from_edges(6, ring, w)
    b = WeightedGraph.from_edges(6, ring + [(0, 2), (0, 3), (3, 5)], w)
    pairs.append(("6-cycle + chords", CliqueComplex(a, 2), CliqueComplex(b, 2), 1))
    # two 4-cycles joined with a 3-vertex path: H_3 of a join, partial filling
    c4 = WeightedGraph.from_edges(4, [(0, 1), (1, 2), (2, 3), (3, 0)], [1, 2, 1, 3])
    j = WeightedGraph.from_edges(8, list(c4.edges) + [(u + 4, v + 4) for u, v in c4.edges]
                                 + [(u, v) for u in range(4) for v in range(4, 8)],
                                 list(c4.weights) * 2)
    j2 = j.add_vertex(Fraction(1, 2), [0, 1, 2, 3, 4, 5])
    pairs.append(("C4*C4 + partial cone", CliqueComplex(j, 4), CliqueComplex(j2, 4), 3))
    return pairs


# -- criteria -----------------------------------------------------------------


def criterion_1() -> dict:
    rows, ok = [], True
    for name, g in oracle_suite():
        K = full_complex(g)
        for p in range(K.max_dim + 1):
            lap = laplacian(K, p)
            if lap.size == 0:
                continue
            ex = spectral_summary(lap, "exact").kernel_dim
            fl = spectral_summary(lap, "float")
            good = ex == fl.kernel_dim
            ok &= good
            rows.append((name, p, ex, fl.kernel_dim, fl.gap))
    return {"passed": ok and len({r[0] for r in rows}) >= 10, "rows": rows}


def criterion_2() -> dict:
    dims = {}
    for N in (1, 2):
        K = FilledQubitComplex(qubit_graph(N)).complex
        dims[N] = len(exact_kernel(laplacian(K, 2 * N - 1)))
    return {"passed": all(dims[N] == 2**N for N in dims), "dims": dims}


def criterion_3() -> dict:
    res = {}
    for N in (1, 2):
        qg = qubit_graph(N)
        K = FilledQubitComplex(qg).complex
        for i in range(2**N):
            x = format(i, f"0{N}b")
            res[x] = apply_laplacian(expand_subset_state(K, s_label(qg, x))).is_zero()
    qg = qubit_graph(2)
    K = FilledQubitComplex(qg).complex
    sigma = expand_subset_state(K, prehistory_descriptor(qg, 0, 0, 1))
    res["prehist(m=0,T=0,L=1)"] = apply_laplacian(sigma).is_zero() and sigma.norm_sq() == 1
    return {"passed": all(res.values()), "zero": res}


def criterion_4() -> dict:
    c = Circuit(1, (Gate.pythagorean(0), Gate.identity()), idle=1)
    h = build_bravyi_hamiltonian(c)
    psi = history_state(c, "bravyi")
    resid = h.apply(psi, ["in", "prop", "clock"])
    legal = {}
    for steps in (1, 2, 3):
        legal[steps] = check_clock_legality(build_bravyi_hamiltonian(Circuit(1, (), idle=steps)))[0]
    return {
        "passed": resid.is_zero() and psi.norm_sq() == 1 and all(legal.values()),
        "residual_norm_sq": resid.norm_sq(),
        "legality": legal,
    }


def criterion_5() -> dict:
    got, ok = {}, True
    for L, T in ((3, 1), (9, 2), (99, 1)):
        c = Circuit(1, (Gate.pythagorean(0),) * T, idle=L)
        b = history_state(c, "bravyi").overlap_sq(prehistory_state(c, "bravyi"))
        k = history_state(c, "kitaev").overlap_sq(prehistory_state(c, "kitaev"))
        got[(L, T)] = (b, k)
        ok &= b == Fraction(L, L + T) and k == Fraction(L + 1, L + T + 1)
    return {"passed": ok, "overlaps": got}


def _gadget_instance(lam):
    qg = qubit_graph(2)
    K1 = FilledQubitComplex(qg)
    K2 = attach_fill_gadget(K1, "00", lam)
    return qg, K1, K2


SURVIVORS = ("01", "10", "11")


def criterion_6() -> dict:
    qg, K1, K2 = _gadget_instance(Fraction(1, 10))
    d1 = len(exact_kernel(laplacian(K1.complex, 3)))
    C2 = K2.complex
    lap2 = laplacian(C2, 3)
    d2 = len(exact_kernel(lap2))
    norms = {x: harmonic_projection_norm_sq(C2, 3, expand_subset_state(C2, s_label(qg, x)), "exact", lap2)
             for x in ("00",) + SURVIVORS}
    _, _, K2b = _gadget_instance(Fraction(1, 20))
    C2b = K2b.complex
    lap2b = laplacian(C2b, 3)
    half = {x: harmonic_projection_norm_sq(C2b, 3, expand_subset_state(C2b, s_label(qg, x)), "exact", lap2b)
            for x in SURVIVORS}
    ok = (d1 == 4 and d2 == 3 and norms["00"] == 0
          and all(norms[x] >= Fraction(81, 100) for x in SURVIVORS)
          and all(half[x] >= norms[x] for x in SURVIVORS))
    return {"passed": ok, "kernel_dims": (d1, d2), "norm_sq": norms, "norm_sq_half_lambda": half}


def criterion_7(bits: int = 8, repetitions: int = 400, seed: int = 2024) -> dict:
    qg, K1, K2 = _gadget_instance(Fraction(1, 10))
    C1, C2 = K1.complex, K2.complex
    lap = laplacian(C2, 3)
    expected = {"00": 0, "01": 1, "10": 1, "11": 1}
    outcomes = {}
    for x, want in expected.items():
        inst = PersistenceInstance(C1, C2, 3, s_label(qg, x), Fraction(1, 2))
        ex = decide_harmonic_persistence(inst, "exact", lap=lap)
        q = decide_harmonic_persistence(inst, "qpe", QpeConfig(bits=bits, repetitions=repetitions, seed=seed), lap=lap)
        outcomes[x] = {"expected": want, "exact": ex.outcome, "qpe": q.outcome,
                       "qpe_hits": q.diagnostics["hits"], "gap": ex.gap}
    ok = all(o["exact"] == o["expected"] == o["qpe"] for o in outcomes.values())
    return {"passed": ok, "outcomes": outcomes}


def criterion_8() -> dict:
    rows = agreement_suite(25)
    again = agreement_suite(25)
    agree = sum(r["agree"] for r in rows)
    deterministic = [r["qpe"] for r in rows] == [r["qpe"] for r in again]
    return {"passed": agree >= 24 and deterministic, "agree": agree, "deterministic": deterministic,
            "rows": rows}


def _psd_exact_spot(m: RationalMatrix, rng: random.Random, trials: int = 3) -> bool:
    n = m.shape[0]
    for _ in range(trials):
        x = {i: Fraction(rng.randint(-5, 5), rng.randint(1, 4)) for i in range(n) if rng.random() < 0.5}
        y = m.matvec(x)
        if sum((x[i] * y.get(i, 0) for i in x), Fraction(0)) < 0:
            return False
    return True


def commuting_residual(K1: CliqueComplex, K2: CliqueComplex, p: int, z: Chain) -> Chain:
    """``proj_{B(K2)^perp}(rep_K2(z) - i(rep_K1(z)))`` -- zero when the diagram commutes."""
    r1 = harmonic_representative(K1, p, z)
    r2 = harmonic_representative(K2, p, embed_chain(z, K2))
    pm = persistence_map(K1, K2, p)
    coords = pm.source.coefficients(r1.coeffs)
    image = basis_chain(K2, p, pm.target, pm.apply(coords))
    diff = dict(r2.coeffs)
    for i, v in image.coeffs.items():
        s = diff.get(i, 0) - v
        if s:
            diff[i] = s
        else:
            diff.pop(i, None)
    proj = boundary_projector(laplacian(K2, p))(diff)
    for i, v in proj.items():
        s = diff.get(i, 0) - v
        if s:
            diff[i] = s
        else:
            diff.pop(i, None)
    return Chain(K2, p, diff)


def _test_cycles(K: CliqueComplex, p: int, rng: random.Random) -> list[Chain]:
    """Harmonic basis vectors plus boundary noise, so representatives are nontrivial."""
    out = []
    basis = exact_kernel(laplacian(K, p))
    up = boundary_matrix(K, p + 1).matrix if p + 1 <= K.max_dim else None
    for v in basis[:3]:
        z = dict(v)
        if up is not None and up.shape[1]:
            y = {j: Fraction(rng.randint(-3, 3)) for j in rng.sample(range(up.shape[1]), min(3, up.shape[1]))}
            for i, c in up.matvec(y).items():
                s = z.get(i, 0) + c
                if s:
                    z[i] = s
                else:
                    z.pop(i, None)
        out.append(Chain(K, p, z))
    return out


def criterion_9() -> dict:
    rng = random.Random(5)
    dd_ok, sym_ok, psd_ok = True, True, True
    complexes = [full_complex(g) for _, g in oracle_suite()]
    complexes += [FilledQubitComplex(qubit_graph(2)).complex,
                  attach_fill_gadget(FilledQubitComplex(qubit_graph(2)), "00").complex]
    for K in complexes:
        for p in range(1, K.max_dim + 1):
            a, b = boundary_matrix(K, p).matrix, boundary_matrix(K, p - 1).matrix if p >= 1 else None
            if p >= 1 and b is not None:
                dd_ok &= (b @ a).is_zero()
        for p in range(K.max_dim + 1):
            lap = laplacian(K, p)
            if lap.size == 0:
                continue
            m = lap.matrix
            sym_ok &= m.is_symmetric() and (lap.up + lap.down) == m
            ev = np.linalg.eigvalsh(m.to_dense_float())
            psd_ok &= ev.min() >= -1e-9 * max(1.0, lap.max_abs())
            psd_ok &= _psd_exact_spot(m, rng)
    unit = {}
    for N in (1, 2):
        qg = qubit_graph(N)
        K = FilledQubitComplex(qg).complex
        for i in range(2**N):
            x = format(i, f"0{N}b")
            unit[x] = expand_subset_state(K, s_label(qg, x)).norm_sq() == 1
    qg = qubit_graph(2)
    unit["prehist"] = expand_subset_state(FilledQubitComplex(qg).complex, prehistory_descriptor(qg, 0, 0, 1)).norm_sq() == 1
    residuals = {}
    for name, K1, K2, p in persistence_pairs():
        zs = _test_cycles(K1, p, rng)
        residuals[name] = all(commuting_residual(K1, K2, p, z).is_zero() for z in zs) and bool(zs)
    ok = dd_ok and sym_ok and psd_ok and all(unit.values()) and sum(residuals.values()) >= 5 and all(residuals.values())
    return {"passed": ok, "dd_zero": dd_ok, "symmetric": sym_ok, "psd": psd_ok, "unit_norm": unit,
            "commuting": residuals}


CRITERIA: dict[int, tuple[str, float, Callable[[], dict]]] = {
    1: ("exact vs float kernel dimensions", 10, criterion_1),
    2: ("dim ker Delta_{2N-1}(Cl(G_N)) = 2^N", 30, criterion_2),
    3: ("s-map and prehistory subset states are harmonic", 30, criterion_3),
    4: ("history state in the kernel; clock legality", 60, criterion_4),
    5: ("exact prehistory/history overlaps", 5, criterion_5),
    6: ("fill gadget kills exactly the target class", 120, criterion_6),
    7: ("persistence decision: exact and QPE agree", 120, criterion_7),
    8: ("QPE agreement suite", 60, criterion_8),
    9: ("structural properties and commuting diagram", 60, criterion_9),
}


def run_criterion(k: int) -> CriterionResult:
    title, limit, fn = CRITERIA[k]
    t0 = time.perf_counter()
    details = fn()
    elapsed = time.perf_counter() - t0
    return CriterionResult(k, title, bool(details.pop("passed")), elapsed, limit, details)


def run_all(selected=None) -> list[CriterionResult]:
    keys = sorted(CRITERIA) if selected is None else sorted(selected)
    return [run_criterion(k) for k in keys]
