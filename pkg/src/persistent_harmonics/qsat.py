"""Circuit-to-Hamiltonian constructions.

Two variants:

* ``bravyi``: four-state clock qudits (unborn, active 1, active 2, dead),
  each stored in two qubits as u=00, a1=01, a2=10, d=11.  Register order is
  the ``m`` computational qubits, then clock qudit 1, 2, ...
* ``kitaev``: a unary clock index ``t`` in ``0..T+L``; basis index
  ``x * (T+L+1) + t``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import product
from pathlib import Path
from typing import Iterable

from .circuits import Circuit, ExactState, Gate, IntegerState, apply_gate, local_index, replace_local
from .complex import format_rational, parse_rational
from .exact import RationalMatrix, axpy

U, A1, A2, D = 0, 1, 2, 3
QUDIT_NAMES = {U: "u", A1: "a1", A2: "a2", D: "d"}
ACTIVE = (A1, A2)

GROUPS = ("in", "prop", "clock", "out")
MAX_ASSEMBLY_QUBITS = 14


@dataclass(frozen=True)
class Term:
    """One local operator: ``matrix`` acts on ``qubits`` (first most significant)."""

    group: str
    label: str
    qubits: tuple[int, ...]
    matrix: RationalMatrix
    kind: str = "generic"
    gate: Gate | None = None

    @property
    def is_diagonal(self) -> bool:
        return all(i == j for i, j, _ in self.matrix.entries())

    def to_json(self) -> dict:
        return {
            "group": self.group,
            "label": self.label,
            "qubits": list(self.qubits),
            "entries": [[i, j, format_rational(v)] for i, j, v in self.matrix.entries()],
        }

    @classmethod
    def from_json(cls, data: dict) -> Term:
        k = len(data["qubits"])
        d = 2 ** k
        m = RationalMatrix.from_entries((d, d), ((i, j, parse_rational(v)) for i, j, v in data["entries"]))
        return cls(data["group"], data["label"], tuple(data["qubits"]), m)


def apply_local(term_qubits: tuple[int, ...], matrix: RationalMatrix, amps: dict, n: int) -> dict:
    """Apply a local matrix to a sparse global amplitude map."""
    out: dict = {}
    for x, a in amps.items():
        y = local_index(x, term_qubits, n)
        col = matrix.cols.get(y)
        if not col:
            continue
        for y2, v in col.items():
            x2 = replace_local(x, term_qubits, n, y2)
            s = out.get(x2, 0) + v * a
            if s:
                out[x2] = s
            else:
                out.pop(x2, None)
    return out


def embed_local(term_qubits: tuple[int, ...], matrix: RationalMatrix, n: int) -> RationalMatrix:
    dim = 1 << n
    cols = {}
    for x in range(dim):
        col = apply_local(term_qubits, matrix, {x: Fraction(1)}, n)
        if col:
            cols[x] = col
    return RationalMatrix((dim, dim), cols)


def _projector(vec: dict[int, Fraction], dim: int, factor=Fraction(1)) -> RationalMatrix:
    return RationalMatrix.from_entries(
        (dim, dim), ((i, j, factor * a * b) for i, a in vec.items() for j, b in vec.items())
    )


def _diag(dim: int, indices: Iterable[int]) -> RationalMatrix:
    return RationalMatrix((dim, dim), {i: {i: Fraction(1)} for i in indices})


def _qudit_product_diag(sets: list[tuple[int, ...]]) -> RationalMatrix:
    """Diagonal projector onto ``set_1 x set_2 x ...`` of qudit values."""
    k = len(sets)
    dim = 4 ** k
    idx = []
    for vals in product(*sets):
        y = 0
        for v in vals:
            y = (y << 2) | v
        idx.append(y)
    return _diag(dim, idx)


class QsatHamiltonian:
    """Clock Hamiltonian with four-state clock qudits.

    ``witness_qubits`` are exempt from the input penalty; by default every
    computational qubit is forced to start in ``|0>``.  ``reject_bit`` is the
    value of computational qubit 0 penalised at the end of the computation.
    """

    def __init__(self, circuit: Circuit, witness_qubits: Iterable[int] = (), reject_bit: int = 1):
        if circuit.length < 1:
            raise ValueError("circuit needs at least one step (T + L >= 1)")
        if reject_bit not in (0, 1):
            raise ValueError("reject_bit must be 0 or 1")
        self.circuit = circuit
        self.m = circuit.qubits
        self.steps = circuit.length
        self.witness_qubits = tuple(sorted(set(witness_qubits)))
        for q in self.witness_qubits:
            if not 0 <= q < self.m:
                raise ValueError(f"witness qubit {q} out of range")
        self.reject_bit = reject_bit
        self.n_qubits = self.m + 2 * self.steps
        self.terms: tuple[Term, ...] = tuple(self._build_terms())

    # -- layout ----------------------------------------------------------
    def clock_qubits(self, t: int) -> tuple[int, int]:
        """Register qubits of clock qudit ``t`` (1-based)."""
        if not 1 <= t <= self.steps:
            raise IndexError(t)
        q = self.m + 2 * (t - 1)
        return (q, q + 1)

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def clock_index(self, config) -> int:
        y = 0
        for v in config:
            y = (y << 2) | v
        return y

    def basis_index(self, comp: int, config) -> int:
        return (comp << (2 * self.steps)) | self.clock_index(config)

    def legal_clock(self, t: int, primed: bool = False) -> tuple[int, ...]:
        """``C_t`` (or ``C'_t``): dead before ``t``, active at ``t``, unborn after."""
        return (D,) * (t - 1) + ((A2 if primed else A1),) + (U,) * (self.steps - t)

    def legal_clock_states(self) -> list[tuple[int, ...]]:
        return [self.legal_clock(t, p) for t in range(1, self.steps + 1) for p in (False, True)]

    # -- terms ---------------------------------------------------------
    def _build_terms(self):
        S = self.steps
        cq = self.clock_qubits
        r_in = [b for b in range(self.m) if b not in self.witness_qubits]
        for b in r_in:
            # |a1><a1|_1 (x) |1><1|_b ; local index (a1 << 1) | 1
            yield Term("in", f"in,{b}", cq(1) + (b,), _diag(8, [(A1 << 1) | 1]), "diagonal")

        for t in range(1, S + 1):
            g = self.circuit.gate(t)
            yield Term("prop", f"prop,{t}", cq(t) + tuple(g.qubits), _prop_matrix(g), "prop", g)
        for t in range(1, S):
            a2u, da1 = (A2 << 2) | U, (D << 2) | A1
            vec = {a2u: Fraction(1), da1: Fraction(-1)}
            yield Term("prop", f"prop',{t}", cq(t) + cq(t + 1), _projector(vec, 16, Fraction(1, 2)), "prop_prime")

        act, act_u, act_d = (A1, A2), (A1, A2, U), (A1, A2, D)
        yield Term("clock", "clock1", cq(1), _qudit_product_diag([(U,)]), "diagonal")
        yield Term("clock", "clock2", cq(S), _qudit_product_diag([(D,)]), "diagonal")
        for i in range(1, S + 1):
            for k in range(i + 1, S + 1):
                qs = cq(i) + cq(k)
                yield Term("clock", f"clock3,{i},{k}", qs, _qudit_product_diag([act, act]), "diagonal")
                yield Term("clock", f"clock4,{i},{k}", qs, _qudit_product_diag([act_u, (D,)]), "diagonal")
                yield Term("clock", f"clock5,{i},{k}", qs, _qudit_product_diag([(U,), act_d]), "diagonal")
        for i in range(1, S):
            yield Term("clock", f"clock6,{i}", cq(i) + cq(i + 1), _qudit_product_diag([(D,), (U,)]), "diagonal")

        if self.m > 0:
            y = (A2 << 1) | self.reject_bit
            yield Term("out", "out", cq(S) + (0,), _diag(8, [y]), "diagonal")

    def group(self, name: str) -> list[Term]:
        if name not in GROUPS:
            raise ValueError(f"unknown term group {name!r}")
        return [t for t in self.terms if t.group == name]

    def _select(self, groups) -> list[Term]:
        if groups is None:
            return list(self.terms)
        groups = [groups] if isinstance(groups, str) else list(groups)
        for g in groups:
            if g not in GROUPS:
                raise ValueError(f"unknown term group {g!r}")
        return [t for t in self.terms if t.group in groups]

    # -- action ----------------------------------------------------------
    def apply(self, state: ExactState, groups=None) -> ExactState:
        if state.dim != self.dim:
            raise ValueError("state dimension does not match the Hamiltonian")
        out: dict = {}
        for term in self._select(groups):
            axpy(1, apply_local(term.qubits, term.matrix, state.amps, self.n_qubits), out)
        return state.with_amps(out)

    def matrix(self, groups=None) -> RationalMatrix:
        if self.n_qubits > MAX_ASSEMBLY_QUBITS:
            raise ValueError(f"{self.n_qubits} qubits exceeds the assembly cap of {MAX_ASSEMBLY_QUBITS}")
        dim = self.dim
        cols: dict[int, dict] = {}
        terms = self._select(groups)
        for x in range(dim):
            col: dict = {}
            for term in terms:
                axpy(1, apply_local(term.qubits, term.matrix, {x: Fraction(1)}, self.n_qubits), col)
            if col:
                cols[x] = col
        return RationalMatrix((dim, dim), cols)

    def clock_energy(self, config) -> Fraction:
        """Diagonal ``H_clock`` energy of a clock configuration (tuple of qudit values)."""
        if len(config) != self.steps:
            raise ValueError("configuration length differs from the number of clock qudits")
        x = self.clock_index(config)
        n = 2 * self.steps
        total = Fraction(0)
        for term in self.group("clock"):
            qs = tuple(q - self.m for q in term.qubits)
            y = local_index(x, qs, n)
            total += term.matrix.get(y, y)
        return total

    def to_json(self) -> dict:
        return {
            "variant": "bravyi",
            "qubits": self.n_qubits,
            "computational_qubits": self.m,
            "steps": self.steps,
            "reject_bit": self.reject_bit,
            "witness_qubits": list(self.witness_qubits),
            "circuit": self.circuit.to_json(),
            "terms": [t.to_json() for t in self.terms],
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))


def _prop_matrix(g: Gate) -> RationalMatrix:
    """``(1/2)[(a1 + a2) (x) I - |a2><a1| (x) U - |a1><a2| (x) U^dag]`` on clock pair + gate qubits."""
    k = len(g.qubits)
    gd = 2 ** k
    dim = 4 * gd
    half = Fraction(1, 2)
    entries = []
    for j in range(gd):
        for a in ACTIVE:
            entries.append(((a << k) | j, (a << k) | j, half))
        for i, u in g.column(j).items():
            # |a2, i><a1, j| U[i, j]
            entries.append(((A2 << k) | i, (A1 << k) | j, -half * u))
            entries.append(((A1 << k) | j, (A2 << k) | i, -half * u))
    return RationalMatrix.from_entries((dim, dim), entries)


def build_bravyi_hamiltonian(c: Circuit, witness_qubits: Iterable[int] = (), reject_bit: int = 1) -> QsatHamiltonian:
    return QsatHamiltonian(c, witness_qubits, reject_bit)


def check_clock_legality(h: QsatHamiltonian, max_steps: int = 6) -> tuple[bool, dict]:
    """Exhaustively compare the zero-energy clock configurations with ``{C_t, C'_t}``.

    Since ``H_clock`` is diagonal this decides whether its kernel is exactly
    the span of the legal clock states.  Returns ``(ok, details)``.
    """
    if h.steps > max_steps:
        raise ValueError(f"exhaustive check limited to {max_steps} clock qudits")
    legal = set(h.legal_clock_states())
    zero, min_illegal = set(), None
    for config in product(range(4), repeat=h.steps):
        e = h.clock_energy(config)
        if e < 0:
            return False, {"negative": config}
        if e == 0:
            zero.add(config)
        elif config not in legal:
            min_illegal = e if min_illegal is None else min(min_illegal, e)
    ok = zero == legal
    return ok, {
        "zero_energy": sorted(zero),
        "legal": sorted(legal),
        "min_illegal_energy": min_illegal,
        "missing": sorted(legal - zero),
        "unexpected": sorted(zero - legal),
    }


# -- Kitaev ------------------------------------------------------------------


class KitaevHamiltonian:
    """Clock index ``t in 0..T+L``; ``H_in + H_out + H_prop`` over ``2^m (T+L+1)``."""

    def __init__(self, circuit: Circuit, witness_qubits: Iterable[int] = (), reject_bit: int = 1):
        if circuit.length < 1:
            raise ValueError("circuit needs at least one step (T + L >= 1)")
        if reject_bit not in (0, 1):
            raise ValueError("reject_bit must be 0 or 1")
        self.circuit = circuit
        self.m = circuit.qubits
        self.steps = circuit.length
        self.witness_qubits = tuple(sorted(set(witness_qubits)))
        for q in self.witness_qubits:
            if not 0 <= q < self.m:
                raise ValueError(f"witness qubit {q} out of range")
        self.reject_bit = reject_bit
        self.dim = (1 << self.m) * (self.steps + 1)

    def index(self, x: int, t: int) -> int:
        return x * (self.steps + 1) + t

    def _bit(self, x: int, q: int) -> int:
        return (x >> (self.m - 1 - q)) & 1

    @cached_property
    def h_in(self) -> RationalMatrix:
        r_in = [b for b in range(self.m) if b not in self.witness_qubits]
        entries = []
        for x in range(1 << self.m):
            ones = sum(self._bit(x, b) for b in r_in)
            if ones:
                entries.append((self.index(x, 0), self.index(x, 0), Fraction(ones)))
        return RationalMatrix.from_entries((self.dim, self.dim), entries)

    @cached_property
    def h_out(self) -> RationalMatrix:
        entries = []
        if self.m > 0:
            for x in range(1 << self.m):
                if self._bit(x, 0) == self.reject_bit:
                    i = self.index(x, self.steps)
                    entries.append((i, i, Fraction(1)))
        return RationalMatrix.from_entries((self.dim, self.dim), entries)

    def h_prop_t(self, t: int) -> RationalMatrix:
        g = self.circuit.gate(t)
        entries = []
        for x in range(1 << self.m):
            a, b = self.index(x, t - 1), self.index(x, t)
            entries.append((a, a, Fraction(1)))
            entries.append((b, b, Fraction(1)))
            # - U |x>|t><t-1| - U^dag ...
            for y, u in _apply_gate_basis(g, x, self.m).items():
                entries.append((self.index(y, t), a, -u))
                entries.append((a, self.index(y, t), -u))
        return RationalMatrix.from_entries((self.dim, self.dim), entries)

    @cached_property
    def h_prop(self) -> RationalMatrix:
        acc = RationalMatrix((self.dim, self.dim))
        for t in range(1, self.steps + 1):
            acc = acc + self.h_prop_t(t)
        return acc

    def group_matrix(self, name: str) -> RationalMatrix:
        if name == "in":
            return self.h_in
        if name == "out":
            return self.h_out
        if name == "prop":
            return self.h_prop
        raise ValueError(f"unknown term group {name!r}")

    def matrix(self, groups=None) -> RationalMatrix:
        groups = ("in", "out", "prop") if groups is None else ([groups] if isinstance(groups, str) else groups)
        acc = RationalMatrix((self.dim, self.dim))
        for g in groups:
            acc = acc + self.group_matrix(g)
        return acc

    def apply(self, state: ExactState, groups=None) -> ExactState:
        if state.dim != self.dim:
            raise ValueError("state dimension does not match the Hamiltonian")
        return state.with_amps(self.matrix(groups).matvec(state.amps))

    def to_json(self) -> dict:
        terms = []
        for name in ("in", "out", "prop"):
            terms.append({
                "group": name,
                "entries": [[i, j, format_rational(v)] for i, j, v in self.group_matrix(name).entries()],
            })
        return {
            "variant": "kitaev",
            "dimension": self.dim,
            "computational_qubits": self.m,
            "steps": self.steps,
            "reject_bit": self.reject_bit,
            "circuit": self.circuit.to_json(),
            "terms": terms,
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json()))


def _apply_gate_basis(g: Gate, x: int, m: int) -> dict[int, Fraction]:
    return apply_gate(g, {x: Fraction(1)}, m)


def build_kitaev_hamiltonian(c: Circuit, witness_qubits: Iterable[int] = (), reject_bit: int = 1) -> KitaevHamiltonian:
    return KitaevHamiltonian(c, witness_qubits, reject_bit)


# -- history states --------------------------------------------------------------


def _initial(c: Circuit, witness) -> dict[int, Fraction]:
    if witness is None:
        return {0: Fraction(1)}
    amps = {int(x): Fraction(a) for x, a in dict(witness).items() if a}
    if not amps:
        raise ValueError("witness state is zero")
    hi = 1 << c.qubits
    if any(not 0 <= x < hi for x in amps):
        raise ValueError("witness index out of range")
    return amps


def _check_variant(variant: str) -> None:
    if variant not in ("bravyi", "kitaev"):
        raise ValueError(f"unknown variant {variant!r}; expected 'bravyi' or 'kitaev'")


def history_state(c: Circuit, variant: str = "bravyi", witness=None) -> ExactState:
    """Exact history state.  ``witness`` is an optional sparse map over register indices.

    The witness amplitudes must have unit squared norm; otherwise the result is
    rescaled to unit norm exactly.
    """
    _check_variant(variant)
    psi0 = _initial(c, witness)
    wnorm = sum(a * a for a in psi0.values())
    S = c.length
    if S < 1:
        raise ValueError("circuit needs at least one step (T + L >= 1)")
    psis = list(c.run(psi0))
    if variant == "kitaev":
        h = KitaevHamiltonian(c)
        amps = {}
        for t, psi in enumerate(psis):
            for x, a in psi.items():
                amps[h.index(x, t)] = a
        return ExactState(h.dim, amps, Fraction(1, S + 1) / wnorm)
    h = _layout(c)
    amps = {}
    for t in range(1, S + 1):
        for primed, psi in ((False, psis[t - 1]), (True, psis[t])):
            cfg = h.legal_clock(t, primed)
            for x, a in psi.items():
                amps[h.basis_index(x, cfg)] = a
    return ExactState.on_qubits(h.n_qubits, amps, Fraction(1, 2 * S) / wnorm)


def prehistory_state(c: Circuit, variant: str = "bravyi") -> ExactState:
    """Restriction of the history state to the idle prefix, renormalised."""
    _check_variant(variant)
    L = c.idle
    if L < 1:
        raise ValueError("prehistory state needs an idle prefix (L >= 1)")
    if variant == "kitaev":
        h = KitaevHamiltonian(c)
        amps = {h.index(0, t): Fraction(1) for t in range(L + 1)}
        return ExactState(h.dim, amps, Fraction(1, L + 1))
    h = _layout(c)
    amps = {}
    for t in range(1, L + 1):
        for primed in (False, True):
            amps[h.basis_index(0, h.legal_clock(t, primed))] = Fraction(1)
    return ExactState.on_qubits(h.n_qubits, amps, Fraction(1, 2 * L))


class _Layout:
    """Register layout of the qudit-clock construction without building terms."""

    def __init__(self, c: Circuit):
        self.m, self.steps = c.qubits, c.length
        self.n_qubits = self.m + 2 * self.steps

    clock_index = QsatHamiltonian.clock_index
    basis_index = QsatHamiltonian.basis_index
    legal_clock = QsatHamiltonian.legal_clock


def _layout(c: Circuit) -> _Layout:
    return _Layout(c)


def global_label(h: QsatHamiltonian | _Layout, comp: int, config) -> str:
    """Bit string of a register basis state (computational bits, then clock bits)."""
    return format(h.basis_index(comp, config), f"0{h.n_qubits}b")


# -- rank-one decomposition ----------------------------------------------------


@dataclass(frozen=True)
class RankOneTerm:
    """``weight * |phi><phi|`` with ``phi`` an integer state on ``state.qubits``."""

    group: str
    label: str
    state: IntegerState
    weight: Fraction = Fraction(1)

    @property
    def is_basis_projector(self) -> bool:
        return len(self.state.coeffs) == 1

    def projector(self) -> RationalMatrix:
        return self.state.projector().scaled(self.weight)


def decompose_term(term: Term) -> list[RankOneTerm]:
    if term.is_diagonal:
        out = []
        for i, _, v in term.matrix.entries():
            if v < 0:
                raise ValueError(f"{term.label}: negative diagonal entry, term is not PSD")
            out.append(RankOneTerm(term.group, term.label, IntegerState(term.qubits, {i: 1}), v))
        return out
    if term.kind == "prop" and term.gate is not None:
        g = term.gate
        k = len(g.qubits)
        out = []
        for j in range(2 ** k):
            col = g.column(j)
            den = 1
            for u in col.values():
                den = den * u.denominator // math.gcd(den, u.denominator)
            coeffs = {(A1 << k) | j: den}
            for i, u in col.items():
                coeffs[(A2 << k) | i] = coeffs.get((A2 << k) | i, 0) - int(u * den)
            # Z^2 = 2 den^2 absorbs the overall 1/2
            st = IntegerState(term.qubits, coeffs)
            out.append(RankOneTerm(term.group, term.label, st, Fraction(1)))
        return out
    return _ldl_decompose(term)


def _ldl_decompose(term: Term) -> list[RankOneTerm]:
    """Exact ``sum_k d_k v_k v_k^T`` with integer ``v_k`` for a rational PSD matrix."""
    d = term.matrix.shape[0]
    a = [[term.matrix.get(i, j) for j in range(d)] for i in range(d)]
    out = []
    for k in range(d):
        p = a[k][k]
        if p < 0:
            raise ValueError(f"{term.label}: term is not positive semidefinite")
        if p == 0:
            if any(a[k][j] for j in range(d)):
                raise ValueError(f"{term.label}: term is not positive semidefinite")
            continue
        col = {i: a[i][k] / p for i in range(d) if a[i][k]}
        den = 1
        for v in col.values():
            den = den * v.denominator // math.gcd(den, v.denominator)
        ints = {i: int(v * den) for i, v in col.items()}
        st = IntegerState(term.qubits, ints)
        # p * (col)(col)^T = p * ints ints^T / den^2 = (p * z_sq / den^2) |phi><phi|
        out.append(RankOneTerm(term.group, term.label, st, p * st.z_sq / (den * den)))
        for i in range(d):
            for j in range(d):
                a[i][j] -= p * col.get(i, 0) * col.get(j, 0)
    return out


def decompose_rank_one(h: QsatHamiltonian) -> list[RankOneTerm]:
    out = []
    for term in h.terms:
        out.extend(decompose_term(term))
    return out


def reconstruct_term(parts: list[RankOneTerm], shape) -> RationalMatrix:
    acc = RationalMatrix(shape)
    for r in parts:
        acc = acc + r.projector()
    return acc


def diagonal_labels(h: QsatHamiltonian, groups=("in", "clock", "out")) -> list[str]:
    """Global basis labels whose projectors appear in the diagonal terms.

    A local basis projector on ``k`` qubits expands into ``2^(n-k)`` global
    basis projectors; all of them are listed (sorted, deduplicated).
    """
    labels = set()
    n = h.n_qubits
    for term in h.terms:
        if term.group not in groups or not term.is_diagonal:
            continue
        rest = [q for q in range(n) if q not in term.qubits]
        for i, _, _ in term.matrix.entries():
            for bits in product((0, 1), repeat=len(rest)):
                x = replace_local(0, term.qubits, n, i)
                for q, b in zip(rest, bits):
                    x |= b << (n - 1 - q)
                labels.add(format(x, f"0{n}b"))
    return sorted(labels)
