from fractions import Fraction

import numpy as np
import pytest
import sympy
from hypothesis import given

from persistent_harmonics.chains import Chain, boundary_matrix, expand_subset_state, laplacian
from persistent_harmonics.complex import CliqueComplex, WeightedGraph, qubit_graph, wedge_base_graph
from persistent_harmonics.harmonics import (
    PersistenceInstance,
    betti_number,
    decide_harmonic_persistence,
    decide_harmonics,
    exact_kernel,
    harmonic_projection_norm,
    harmonic_projection_norm_sq,
    harmonic_representative,
    is_cycle,
    is_harmonic,
    persistence_map,
    spectral_summary,
)
from persistent_harmonics.reduction import FilledQubitComplex, attach_fill_gadget, s_label

from strategies import graphs


def sympy_betti(K, p):
    """rank-nullity oracle over sympy's own rational elimination."""
    n = K.size(p)
    d = boundary_matrix(K, p).matrix
    dp = sympy.Matrix(d.shape[0], d.shape[1], lambda i, j: d.get(i, j)) if p > 0 else sympy.zeros(0, n)
    z = n - (dp.rank() if p > 0 else 0)
    if p + 1 <= K.max_dim and K.size(p + 1):
        u = boundary_matrix(K, p + 1).matrix
        b = sympy.Matrix(u.shape[0], u.shape[1], lambda i, j: u.get(i, j)).rank()
    else:
        b = 0
    return z - b


def test_wedge_betti():
    K = CliqueComplex(wedge_base_graph().graph, 2)
    assert betti_number(K, 0) == 1
    assert betti_number(K, 1) == 2
    assert len(exact_kernel(laplacian(K, 1))) == 2


@given(graphs(max_vertices=6))
def test_betti_equals_kernel_dim(g):
    K = CliqueComplex(g, 3)
    for p in range(3):
        lap = laplacian(K, p)
        kd = len(exact_kernel(lap))
        assert kd == betti_number(K, p) == sympy_betti(K, p)
        if lap.size:
            assert spectral_summary(lap, "float").kernel_dim == kd


def test_weights_do_not_change_betti():
    edges = [(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 2)]
    a = CliqueComplex(WeightedGraph.from_edges(5, edges), 2)
    b = CliqueComplex(WeightedGraph.from_edges(5, edges, [3, Fraction(1, 7), 2, 5, 9]), 2)
    for p in range(3):
        assert betti_number(a, p) == betti_number(b, p)


@pytest.mark.parametrize("N", [1, 2])
def test_kunneth_dimension(N):
    K = FilledQubitComplex(qubit_graph(N)).complex
    assert len(exact_kernel(laplacian(K, 2 * N - 1))) == 2**N


def test_projection_exact_and_float_agree():
    qg = qubit_graph(2)
    K2 = attach_fill_gadget(FilledQubitComplex(qg), "00").complex
    lap = laplacian(K2, 3)
    for x in ("00", "01"):
        c = expand_subset_state(K2, s_label(qg, x))
        ex = harmonic_projection_norm(K2, 3, c, "exact", lap)
        fl = harmonic_projection_norm(K2, 3, c, "float", lap)
        assert fl == pytest.approx(ex, abs=1e-9)


def test_projection_of_a_square_cycle():
    # the square 0-1-2-3 is a harmonic cycle; adding the chord 02 fills it
    square = [(0, 1), (1, 2), (2, 3), (0, 3)]
    hollow = CliqueComplex(WeightedGraph.from_edges(4, square), 2)
    filled = CliqueComplex(WeightedGraph.from_edges(4, square + [(0, 2)]), 2)
    items = [((0, 1), 1), ((1, 2), 1), ((2, 3), 1), ((0, 3), -1)]
    z1 = Chain.from_simplices(hollow, items)
    z2 = Chain.from_simplices(filled, items)
    z1, z2 = (Chain(z.complex, 1, z.coeffs, Fraction(1, 4)) for z in (z1, z2))
    assert harmonic_projection_norm_sq(hollow, 1, z1) == 1
    assert harmonic_projection_norm_sq(filled, 1, z2) == 0
    assert is_cycle(z2) and not is_harmonic(z2)


def _add(a: dict, b: dict) -> dict:
    out = dict(a)
    for i, v in b.items():
        out[i] = out.get(i, 0) + v
    return {i: v for i, v in out.items() if v}


def test_harmonic_representative_kills_boundaries():
    edges = [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4), (0, 2)]
    K = CliqueComplex(WeightedGraph.from_edges(5, edges, [1, 2, 1, 3, Fraction(1, 2)]), 2)
    basis = exact_kernel(laplacian(K, 1))
    assert len(basis) == 1
    h = Chain(K, 1, basis[0])
    d2 = boundary_matrix(K, 2).matrix
    noisy = Chain(K, 1, _add(h.coeffs, d2.matvec({0: Fraction(5)})))
    assert not is_harmonic(noisy)
    r = harmonic_representative(K, 1, noisy)
    assert r.coeffs == h.coeffs
    assert is_harmonic(r)
    with pytest.raises(ValueError):
        harmonic_representative(K, 1, Chain(K, 1, {0: Fraction(1)}))


def test_persistence_map_rank():
    qg = qubit_graph(2)
    K1 = FilledQubitComplex(qg)
    K2 = attach_fill_gadget(K1, "00")
    pm = persistence_map(K1.complex, K2.complex, 3)
    assert pm.shape == (3, 4)
    assert pm.rank() == 3
    ident = persistence_map(K1.complex, K1.complex, 3)
    assert ident.rank() == 4


def test_decide_harmonics_and_promise_flag():
    qg = qubit_graph(1)
    K = FilledQubitComplex(qg).complex
    d = decide_harmonics(K, 1, s_label(qg, "0"), Fraction(1, 2))
    assert d.outcome == 1 and d.norm_sq == 1 and not d.promise_violated
    # a norm strictly between exp(-n) and delta violates the promise
    K2 = attach_fill_gadget(FilledQubitComplex(qg), "0", Fraction(1)).complex
    from persistent_harmonics.chains import SubsetStateDescriptor

    mixed = SubsetStateDescriptor(((qg.cycle(0, 0),), (qg.cycle(0, 1),)), qg.decomposition)
    d2 = decide_harmonics(K2, 1, mixed, Fraction(9, 10))
    assert d2.norm_sq == Fraction(1, 2)
    assert d2.promise_violated and "norm" in d2.diagnostics["promise_reasons"]


def test_persistence_decision_validates_sigma():
    qg = qubit_graph(2)
    K1 = FilledQubitComplex(qg)
    K2 = attach_fill_gadget(K1, "00")
    inst = PersistenceInstance(K1.complex, K2.complex, 3, s_label(qg, "00"), Fraction(1, 2))
    d = decide_harmonic_persistence(inst)
    assert d.outcome == 0 and d.norm_sq == 0
    assert d.gap == pytest.approx(0.01, rel=1e-9)
    with pytest.raises(ValueError):
        PersistenceInstance(K1.complex, K2.complex, 3, s_label(qg, "00"), Fraction(3, 2))


def test_float_spectrum_gap_of_gadget_is_lambda_squared():
    qg = qubit_graph(2)
    for lam in (Fraction(1, 10), Fraction(1, 5)):
        K2 = attach_fill_gadget(FilledQubitComplex(qg), "00", lam).complex
        s = spectral_summary(laplacian(K2, 3), "float")
        assert s.gap == pytest.approx(float(lam * lam), rel=1e-9)
        assert np.isclose(s.kernel_dim, 3)
