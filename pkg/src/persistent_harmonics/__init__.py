"""Weighted clique-complex harmonics, clock Hamiltonians and overlap decisions."""

from .chains import (
    Chain,
    Laplacian,
    SubsetStateDescriptor,
    apply_adjoint,
    apply_boundary,
    apply_laplacian,
    boundary_matrix,
    expand_subset_state,
    laplacian,
)
from .circuits import Circuit, ExactState, Gate, IntegerState, UnsupportedGate, preidle
from .complex import (
    CliqueComplex,
    ComplexTooLarge,
    QubitGraph,
    WeightedGraph,
    build_clique_complex,
    graph_join,
    qubit_graph,
    wedge_base_graph,
)
from .decision import Decision
from .exact import OrthogonalBasis, RationalMatrix
from .harmonics import (
    PersistenceInstance,
    PersistenceMap,
    betti_number,
    decide_harmonic_persistence,
    decide_harmonics,
    harmonic_projection_norm,
    harmonic_projection_norm_sq,
    harmonic_representative,
    is_harmonic,
    persistence_map,
    spectral_summary,
)
from .overlap import HamiltonianMatrix, QpeConfig, exact_overlap, qpe_decide, spectral_gap
from .qsat import (
    KitaevHamiltonian,
    QsatHamiltonian,
    build_bravyi_hamiltonian,
    build_kitaev_hamiltonian,
    check_clock_legality,
    history_state,
    prehistory_state,
)
from .reduction import (
    FilledQubitComplex,
    attach_fill_gadget,
    build_reduction,
    load_bundle,
    prehistory_descriptor,
    s_label,
    s_map,
)
from .spectra import SpectralSummary, float_spectrum

__version__ = "0.1.0"
