"""Circuit -> (K1, K2, sigma_prehist, H_x) instances with cone fill gadgets.

Basis label ``x`` (a bit string of length ``N``) corresponds to the
``(2N-1)``-cycle that picks, in factor ``i``, the 4-cycle numbered ``x[i]``.
A fill gadget for ``x`` is one apex vertex joined to the ``4N`` vertices of
those cycles; the cone over the cycle makes the class a boundary.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

from .chains import Chain, SubsetStateDescriptor, expand_subset_state
from .circuits import Circuit, ExactState, IntegerState
from .complex import CliqueComplex, QubitGraph, WeightedGraph, format_rational, parse_rational, qubit_graph
from .harmonics import PersistenceInstance, harmonic_projection_norm_sq, laplacian
from .qsat import QsatHamiltonian, build_bravyi_hamiltonian, diagonal_labels, global_label

MAX_REDUCTION_QUBITS = 3
DEFAULT_LAMBDA = Fraction(1, 10)


def _check_label(label: str, n: int) -> str:
    if not isinstance(label, str) or any(ch not in "01" for ch in label):
        raise ValueError(f"basis label {label!r} must be a bit string")
    if len(label) != n:
        raise ValueError(f"basis label {label!r} has length {len(label)}, expected {n}")
    return label


def s_label(qg: QubitGraph, label: str) -> SubsetStateDescriptor:
    """Descriptor of ``s(|x>)``: one block, the ``x[i]`` cycle in factor ``i``."""
    _check_label(label, qg.n)
    block = tuple(qg.cycle(i, int(b)) for i, b in enumerate(label))
    return SubsetStateDescriptor((block,), qg.decomposition)


def s_map(x, qg: QubitGraph, K: CliqueComplex | None = None):
    """Map a basis label to a descriptor, or a state to a chain in ``K``.

    Labels give a :class:`SubsetStateDescriptor`.  ``IntegerState`` (on
    qubits ``0..N-1``) and ``ExactState`` (register of ``N`` qubits) map
    linearly to an exact :class:`Chain` in ``K``.
    """
    if isinstance(x, str):
        return s_label(qg, x)
    if K is None:
        raise ValueError("mapping a state needs the target complex")
    if isinstance(x, IntegerState):
        if tuple(x.qubits) != tuple(range(qg.n)):
            raise ValueError("integer state must act on qubits 0..N-1 in order")
        amps = {y: Fraction(a) for y, a in x.coeffs}
        scale = Fraction(1, x.z_sq)
    elif isinstance(x, ExactState):
        if x.dim != 1 << qg.n:
            raise ValueError(f"state has dimension {x.dim}, expected 2^{qg.n}")
        amps, scale = x.amps, x.scale_sq
    else:
        raise TypeError(f"cannot map {type(x).__name__}")
    coeffs: dict = {}
    for y, a in amps.items():
        d = s_label(qg, format(y, f"0{qg.n}b"))
        for sign, simp in d.iter_block(0):
            i = K.index(simp)
            s = coeffs.get(i, 0) + sign * a
            if s:
                coeffs[i] = s
            else:
                coeffs.pop(i, None)
    # each basis image is a uniform superposition over 4^N simplices
    return Chain(K, 2 * qg.n - 1, coeffs, scale / 4**qg.n)


@dataclass(frozen=True)
class FillGadget:
    label: str
    apex: int
    weight: Fraction

    def __post_init__(self):
        w = parse_rational(self.weight)
        if w <= 0:
            raise ValueError("gadget weight must be positive")
        object.__setattr__(self, "weight", w)

    def to_json(self) -> dict:
        return {"label": self.label, "apex": self.apex, "weight": format_rational(self.weight)}


@dataclass(frozen=True)
class FilledQubitComplex:
    """Qubit graph plus any number of fill gadgets (apex vertices appended in order)."""

    qubits: QubitGraph
    gadgets: tuple[FillGadget, ...] = ()

    @property
    def N(self) -> int:
        return self.qubits.n

    @property
    def p(self) -> int:
        return 2 * self.N - 1

    def cycle_vertices(self, label: str) -> list[int]:
        _check_label(label, self.N)
        out = []
        for i, b in enumerate(label):
            out.extend(self.qubits.cycle_vertices(i, int(b)))
        return out

    @cached_property
    def graph(self) -> WeightedGraph:
        g = self.qubits.graph
        for gad in self.gadgets:
            if gad.apex != g.vertex_count:
                raise ValueError("gadget apex ids must follow the qubit graph consecutively")
            g = g.add_vertex(gad.weight, self.cycle_vertices(gad.label))
        return g

    @cached_property
    def complex(self) -> CliqueComplex:
        # one dimension above p so the up-Laplacian at p is known
        return CliqueComplex(self.graph, self.p + 1)

    def labels(self) -> list[str]:
        return [g.label for g in self.gadgets]


def base_complex(N: int, qg: QubitGraph | None = None) -> FilledQubitComplex:
    return FilledQubitComplex(qg or qubit_graph(N))


def attach_fill_gadget(K: FilledQubitComplex, label: str, lam=DEFAULT_LAMBDA) -> FilledQubitComplex:
    """New complex with one apex of weight ``lam`` coning off the ``label`` cycle."""
    _check_label(label, K.N)
    if label in K.labels():
        raise ValueError(f"a gadget for {label!r} is already attached")
    lam = parse_rational(lam)
    if lam <= 0:
        raise ValueError("gadget weight must be positive")
    apex = K.qubits.graph.vertex_count + len(K.gadgets)
    return FilledQubitComplex(K.qubits, K.gadgets + (FillGadget(label, apex, lam),))


def cone_chain(K: FilledQubitComplex, gadget: FillGadget) -> Chain:
    """The ``2N``-chain ``s(|x>) * apex``, whose boundary is ``lam * s(|x>)``."""
    C = K.complex
    d = s_label(K.qubits, gadget.label)
    coeffs: dict = {}
    for sign, simp in d.iter_block(0):
        cone = tuple(sorted(simp + (gadget.apex,)))
        # the apex has the largest id, so appending it keeps the orientation sign
        coeffs[C.index(cone)] = sign
    return Chain(C, 2 * K.N, coeffs, Fraction(1, 4**K.N))


# -- prehistory descriptor ------------------------------------------------------


def prehistory_labels(m: int, T: int, L: int) -> list[str]:
    """Labels ``(C_t, 0^m)`` and ``(C'_t, 0^m)`` for ``t = 1..L``."""
    if L < 1:
        raise ValueError("prehistory needs L >= 1")
    layout = _LayoutOnly(m, T + L)
    out = []
    for t in range(1, L + 1):
        for primed in (False, True):
            out.append(global_label(layout, 0, layout.legal_clock(t, primed)))
    return out


class _LayoutOnly:
    def __init__(self, m: int, steps: int):
        self.m, self.steps = m, steps
        self.n_qubits = m + 2 * steps

    clock_index = QsatHamiltonian.clock_index
    basis_index = QsatHamiltonian.basis_index
    legal_clock = QsatHamiltonian.legal_clock


def prehistory_descriptor(qg: QubitGraph, m: int, T: int, L: int) -> SubsetStateDescriptor:
    """``sigma_prehist``: ``2L`` blocks, one per legal idle clock configuration."""
    N = m + 2 * (T + L)
    if N != qg.n:
        raise ValueError(f"(m, T, L) = ({m}, {T}, {L}) needs N = {N}, qubit graph has {qg.n}")
    blocks = [s_label(qg, lab).blocks[0] for lab in prehistory_labels(m, T, L)]
    return SubsetStateDescriptor(tuple(blocks), qg.decomposition)


# -- end-to-end ---------------------------------------------------------------


@dataclass
class ReductionArtifacts:
    circuit: Circuit
    hamiltonian: QsatHamiltonian
    K1: FilledQubitComplex
    K2: FilledQubitComplex
    sigma_prehist: SubsetStateDescriptor
    label_blocks: dict[str, list[int]] = field(default_factory=dict)
    lam: Fraction = DEFAULT_LAMBDA

    @property
    def N(self) -> int:
        return self.K1.N

    @property
    def p(self) -> int:
        return 2 * self.N - 1

    def instance(self, delta=Fraction(1, 2), descriptor: SubsetStateDescriptor | None = None) -> PersistenceInstance:
        return PersistenceInstance(self.K1.complex, self.K2.complex, self.p, descriptor or self.sigma_prehist, delta)

    def manifest(self) -> dict:
        return {
            "N": self.N,
            "m": self.circuit.qubits,
            "T": self.circuit.T,
            "L": self.circuit.L,
            "p": self.p,
            "lambda": format_rational(self.lam),
            "gadgets": [g.to_json() for g in self.K2.gadgets],
            "label_blocks": self.label_blocks,
        }

    def save_bundle(self, directory) -> Path:
        return write_bundle(directory, self.K1, self.K2, self.sigma_prehist, self.manifest(),
                            hamiltonian=self.hamiltonian.to_json(), circuit=self.circuit)


def build_reduction(circuit: Circuit, lam=DEFAULT_LAMBDA, gadget_labels: Sequence[str] | None = None,
                    max_qubits: int = MAX_REDUCTION_QUBITS) -> ReductionArtifacts:
    if circuit.idle < 1:
        raise ValueError("circuit must be pre-idled (L >= 1)")
    N = circuit.qubits + 2 * circuit.length
    if N > max_qubits:
        raise ValueError(f"N = {N} exceeds the reduction cap of {max_qubits} qubits")
    lam = parse_rational(lam)
    h = build_bravyi_hamiltonian(circuit)
    allowed = set(diagonal_labels(h))
    if gadget_labels is None:
        labels = sorted(allowed)
    else:
        labels = list(gadget_labels)
        for lab in labels:
            _check_label(lab, N)
            if lab not in allowed:
                raise ValueError(f"{lab!r} is not a basis projector of a diagonal term")
    qg = qubit_graph(N)
    K1 = FilledQubitComplex(qg)
    K2 = K1
    for lab in labels:
        K2 = attach_fill_gadget(K2, lab, lam)
    pre = prehistory_labels(circuit.qubits, circuit.T, circuit.L)
    sigma = prehistory_descriptor(qg, circuit.qubits, circuit.T, circuit.L)
    return ReductionArtifacts(circuit, h, K1, K2, sigma, {lab: [k] for k, lab in enumerate(pre)}, lam)


# -- bundles -----------------------------------------------------------------


def write_bundle(directory, K1: FilledQubitComplex, K2: FilledQubitComplex, descriptor: SubsetStateDescriptor | None,
                 manifest: dict, hamiltonian: dict | None = None, circuit: Circuit | None = None) -> Path:
    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    K1.graph.save(d / "k1.json")
    K2.graph.save(d / "k2.json")
    files = {"k1": "k1.json", "k2": "k2.json"}
    if descriptor is not None:
        descriptor.save(d / "descriptor.json")
        files["descriptor"] = "descriptor.json"
    if hamiltonian is not None:
        (d / "hamiltonian.json").write_text(json.dumps(hamiltonian))
        files["hamiltonian"] = "hamiltonian.json"
    if circuit is not None:
        circuit.save(d / "circuit.json")
        files["circuit"] = "circuit.json"
    manifest = dict(manifest, files=files)
    (d / "manifest.json").write_text(json.dumps(manifest, indent=1))
    return d


def gadget_bundle(directory, N: int, labels: Iterable[str], lam=DEFAULT_LAMBDA) -> Path:
    """Bundle for a bare qubit-graph instance (no circuit)."""
    K1 = base_complex(N)
    K2 = K1
    for lab in labels:
        K2 = attach_fill_gadget(K2, lab, lam)
    manifest = {"N": N, "p": 2 * N - 1, "lambda": format_rational(parse_rational(lam)),
                "gadgets": [g.to_json() for g in K2.gadgets]}
    return write_bundle(directory, K1, K2, None, manifest)


@dataclass
class Bundle:
    K1: CliqueComplex
    K2: CliqueComplex
    qubits: QubitGraph
    manifest: dict
    descriptor: SubsetStateDescriptor | None

    @property
    def p(self) -> int:
        return int(self.manifest["p"])


def load_bundle(directory) -> Bundle:
    d = Path(directory)
    mpath = d / "manifest.json"
    if not mpath.exists():
        raise ValueError(f"{mpath}: missing manifest")
    manifest = json.loads(mpath.read_text())
    for key in ("N", "p"):
        if key not in manifest:
            raise ValueError(f"manifest.{key}: missing field")
    N, p = int(manifest["N"]), int(manifest["p"])
    g1 = WeightedGraph.load(d / "k1.json")
    g2 = WeightedGraph.load(d / "k2.json")
    qg = qubit_graph(N)
    K1 = CliqueComplex(g1, p + 1)
    K2 = CliqueComplex(g2, p + 1)
    if not K1.is_subcomplex_of(K2):
        raise ValueError("bundle: K1 is not a subcomplex of K2")
    desc = None
    if (d / "descriptor.json").exists():
        desc = SubsetStateDescriptor.load(d / "descriptor.json", qg.decomposition)
    return Bundle(K1, K2, qg, manifest, desc)


# -- lambda sweep ---------------------------------------------------------------


def survivor_norms(N: int, killed: str, lams: Iterable, survivors: Sequence[str] | None = None) -> dict:
    """Exact ``||proj_{H(K2)} s(|x'>)||^2`` for each gadget weight ``lam``."""
    qg = qubit_graph(N)
    labels = [format(i, f"0{N}b") for i in range(2**N)]
    survivors = [x for x in labels if x != killed] if survivors is None else list(survivors)
    out = {}
    for lam in lams:
        K2 = attach_fill_gadget(FilledQubitComplex(qg), killed, lam)
        C = K2.complex
        lap = laplacian(C, K2.p)
        row = {}
        for x in survivors + [killed]:
            chain = expand_subset_state(C, s_label(qg, x))
            row[x] = harmonic_projection_norm_sq(C, K2.p, chain, "exact", lap)
        out[parse_rational(lam)] = row
    return out
