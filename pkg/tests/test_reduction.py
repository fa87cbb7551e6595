import json
from fractions import Fraction

import pytest

from persistent_harmonics.chains import apply_boundary, apply_laplacian, expand_subset_state, laplacian
from persistent_harmonics.circuits import Circuit, ExactState, Gate, IntegerState
from persistent_harmonics.complex import qubit_graph
from persistent_harmonics.harmonics import exact_kernel, harmonic_projection_norm_sq, is_harmonic
from persistent_harmonics.reduction import (
    FilledQubitComplex,
    attach_fill_gadget,
    build_reduction,
    cone_chain,
    gadget_bundle,
    load_bundle,
    prehistory_descriptor,
    prehistory_labels,
    s_label,
    s_map,
    survivor_norms,
)


def test_s_label_validation():
    qg = qubit_graph(2)
    with pytest.raises(ValueError):
        s_label(qg, "0")
    with pytest.raises(ValueError):
        s_label(qg, "0a")


@pytest.mark.parametrize("N", [1, 2])
def test_s_map_harmonic_for_every_label(N):
    qg = qubit_graph(N)
    K = FilledQubitComplex(qg).complex
    for i in range(2**N):
        c = expand_subset_state(K, s_label(qg, format(i, f"0{N}b")))
        assert apply_laplacian(c).is_zero()


def test_s_map_is_linear_and_isometric():
    qg = qubit_graph(2)
    K = FilledQubitComplex(qg).complex
    x = ExactState.on_qubits(2, {0: Fraction(3), 3: Fraction(-4)}, Fraction(1, 25))
    c = s_map(x, qg, K)
    assert c.norm_sq() == 1
    a = expand_subset_state(K, s_label(qg, "00"))
    b = expand_subset_state(K, s_label(qg, "11"))
    assert c.inner(a) == Fraction(3, 5) and c.inner(b) == Fraction(-4, 5)
    y = s_map(IntegerState((0, 1), {0: 3, 3: -4}), qg, K)
    assert y.coeffs == c.coeffs and y.scale_sq == c.scale_sq
    assert s_map("01", qg).blocks == s_label(qg, "01").blocks


@pytest.mark.parametrize("label", ["00", "01", "10", "11"])
def test_cone_boundary_is_lambda_times_s(label):
    qg = qubit_graph(2)
    lam = Fraction(1, 10)
    K2 = attach_fill_gadget(FilledQubitComplex(qg), label, lam)
    cone = cone_chain(K2, K2.gadgets[0])
    s = expand_subset_state(K2.complex, s_label(qg, label))
    db = apply_boundary(cone)
    assert db.scale_sq == s.scale_sq
    assert db.coeffs == {i: lam * v for i, v in s.coeffs.items()}


def test_gadget_drops_kernel_and_kills_only_target():
    qg = qubit_graph(2)
    K1 = FilledQubitComplex(qg)
    K2 = attach_fill_gadget(K1, "00")
    assert K1.complex.is_subcomplex_of(K2.complex)
    assert len(exact_kernel(laplacian(K1.complex, 3))) == 4
    lap = laplacian(K2.complex, 3)
    assert len(exact_kernel(lap)) == 3
    for x, want in (("00", 0), ("01", 1), ("10", 1), ("11", 1)):
        c = expand_subset_state(K2.complex, s_label(qg, x))
        assert harmonic_projection_norm_sq(K2.complex, 3, c, "exact", lap) == want


def test_two_gadgets():
    qg = qubit_graph(2)
    K2 = attach_fill_gadget(attach_fill_gadget(FilledQubitComplex(qg), "00"), "11", Fraction(1, 3))
    assert len(exact_kernel(laplacian(K2.complex, 3))) == 2
    assert K2.labels() == ["00", "11"]


def test_gadget_errors():
    K = attach_fill_gadget(FilledQubitComplex(qubit_graph(1)), "0")
    with pytest.raises(ValueError):
        attach_fill_gadget(K, "0")
    with pytest.raises(ValueError):
        attach_fill_gadget(FilledQubitComplex(qubit_graph(1)), "1", 0)


def test_survivor_norms_lambda_sweep():
    rows = survivor_norms(2, "00", [Fraction(1, 10), Fraction(1, 20), Fraction(1, 2)])
    for lam, row in rows.items():
        assert row["00"] == 0
        for x in ("01", "10", "11"):
            assert row[x] >= Fraction(81, 100)
    for x in ("01", "10", "11"):
        assert rows[Fraction(1, 20)][x] >= rows[Fraction(1, 10)][x]


def test_prehistory_labels_and_descriptor():
    labels = prehistory_labels(0, 0, 1)
    assert labels == ["01", "10"]  # C_1 = a1, C'_1 = a2 on the single clock qudit
    assert len(prehistory_labels(1, 1, 2)) == 4
    qg = qubit_graph(2)
    K = FilledQubitComplex(qg).complex
    sigma = expand_subset_state(K, prehistory_descriptor(qg, 0, 0, 1))
    assert sigma.norm_sq() == 1
    assert is_harmonic(sigma)
    with pytest.raises(ValueError):
        prehistory_descriptor(qg, 1, 0, 1)


def test_build_reduction_three_qubits(tmp_path):
    c = Circuit(1, (), idle=1)
    art = build_reduction(c)
    assert art.N == 3 and art.p == 5
    assert art.K1.complex.is_subcomplex_of(art.K2.complex)
    assert set(art.label_blocks) == set(prehistory_labels(1, 0, 1))
    path = art.save_bundle(tmp_path / "b")
    man = json.loads((path / "manifest.json").read_text())
    assert (man["N"], man["m"], man["T"], man["L"], man["lambda"]) == (3, 1, 0, 1, "1/10")
    b = load_bundle(path)
    assert b.K2.counts == art.K2.complex.counts
    assert b.descriptor.blocks == art.sigma_prehist.blocks
    sigma = expand_subset_state(b.K1, b.descriptor)
    assert sigma.norm_sq() == 1 and apply_laplacian(sigma).is_zero()


def test_build_reduction_limits():
    with pytest.raises(ValueError, match="cap"):
        build_reduction(Circuit(1, (Gate.pythagorean(0),), idle=1))
    with pytest.raises(ValueError, match="pre-idled"):
        build_reduction(Circuit(1, (Gate.identity(),)))
    with pytest.raises(ValueError, match="basis projector"):
        build_reduction(Circuit(1, (), idle=1), gadget_labels=["001"])


def test_gadget_bundle_round_trip(tmp_path):
    gadget_bundle(tmp_path, 2, ["00"])
    b = load_bundle(tmp_path)
    assert b.p == 3 and b.descriptor is None
    assert len(exact_kernel(laplacian(b.K2, 3))) == 3
    (tmp_path / "manifest.json").write_text("{}")
    with pytest.raises(ValueError, match="manifest.N"):
        load_bundle(tmp_path)
