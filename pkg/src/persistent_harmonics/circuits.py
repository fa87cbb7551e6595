"""Rational circuits over {Identity, CNOT, Pythagorean} and exact sparse states.

Qubit 0 is the most significant bit of a basis index.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Iterable, Mapping

import numpy as np

from .exact import RationalMatrix

IDENTITY, CNOT, PYTHAGOREAN = "id", "cnot", "pyth"

PYTHAGOREAN_MATRIX = ((Fraction(3, 5), Fraction(4, 5)), (Fraction(-4, 5), Fraction(3, 5)))
CNOT_MATRIX = tuple(
    tuple(Fraction(int(v)) for v in row)
    for row in ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 0, 1), (0, 0, 1, 0))
)

_ALIASES = {
    "id": IDENTITY, "identity": IDENTITY, "i": IDENTITY,
    "cnot": CNOT, "cx": CNOT,
    "pyth": PYTHAGOREAN, "pythagorean": PYTHAGOREAN,
}


class UnsupportedGate(ValueError):
    pass


@dataclass(frozen=True)
class Gate:
    kind: str
    control: int | None = None
    target: int | None = None

    def __post_init__(self):
        kind = _ALIASES.get(str(self.kind).lower())
        if kind is None:
            raise UnsupportedGate(f"unsupported gate kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if kind == IDENTITY:
            if self.control is not None or self.target is not None:
                raise ValueError("identity gate takes no qubits")
        elif kind == PYTHAGOREAN:
            if self.target is None or self.control is not None:
                raise ValueError("Pythagorean gate needs exactly a target")
        else:
            if self.control is None or self.target is None:
                raise ValueError("CNOT needs control and target")
            if self.control == self.target:
                raise ValueError("CNOT control equals target")

    @classmethod
    def identity(cls) -> Gate:
        return cls(IDENTITY)

    @classmethod
    def cnot(cls, control: int, target: int) -> Gate:
        return cls(CNOT, control, target)

    @classmethod
    def pythagorean(cls, target: int) -> Gate:
        return cls(PYTHAGOREAN, None, target)

    @property
    def qubits(self) -> tuple[int, ...]:
        if self.kind == IDENTITY:
            return ()
        if self.kind == PYTHAGOREAN:
            return (self.target,)
        return (self.control, self.target)

    @property
    def local_matrix(self) -> tuple[tuple[Fraction, ...], ...]:
        """Matrix on ``self.qubits`` (first listed qubit most significant)."""
        if self.kind == IDENTITY:
            return ((Fraction(1),),)
        if self.kind == PYTHAGOREAN:
            return PYTHAGOREAN_MATRIX
        return CNOT_MATRIX

    def column(self, j: int) -> dict[int, Fraction]:
        m = self.local_matrix
        return {i: m[i][j] for i in range(len(m)) if m[i][j]}

    def adjoint_column(self, j: int) -> dict[int, Fraction]:
        m = self.local_matrix
        return {i: m[j][i] for i in range(len(m)) if m[j][i]}

    def to_json(self) -> dict:
        out: dict = {"kind": self.kind}
        if self.control is not None:
            out["control"] = self.control
        if self.target is not None:
            out["target"] = self.target
        return out


@dataclass(frozen=True)
class Circuit:
    """``qubits`` computational qubits, an idle prefix of ``idle`` identities, then ``gates``."""

    qubits: int
    gates: tuple[Gate, ...] = ()
    idle: int = 0

    def __post_init__(self):
        if self.qubits < 0:
            raise ValueError("qubit count must be nonnegative")
        if self.idle < 0:
            raise ValueError("idle count must be nonnegative")
        gates = tuple(self.gates)
        for k, g in enumerate(gates):
            if not isinstance(g, Gate):
                raise TypeError(f"gates[{k}] is not a Gate")
            for q in g.qubits:
                if not 0 <= q < self.qubits:
                    raise ValueError(f"gates[{k}]: qubit {q} out of range for {self.qubits} qubits")
        object.__setattr__(self, "gates", gates)

    @property
    def T(self) -> int:
        return len(self.gates)

    @property
    def L(self) -> int:
        return self.idle

    @property
    def length(self) -> int:
        return self.idle + len(self.gates)

    @property
    def all_gates(self) -> tuple[Gate, ...]:
        return (Gate.identity(),) * self.idle + self.gates

    def gate(self, t: int) -> Gate:
        """Gate ``U_t`` for ``t`` in ``1..length``."""
        if not 1 <= t <= self.length:
            raise IndexError(f"step {t} outside 1..{self.length}")
        return self.all_gates[t - 1]

    def apply(self, state: Mapping[int, Fraction], t: int, adjoint: bool = False) -> dict[int, Fraction]:
        return apply_gate(self.gate(t), state, self.qubits, adjoint)

    def run(self, state: Mapping[int, Fraction] | None = None, steps: int | None = None):
        """Yield ``psi_0, psi_1, ...`` (sparse exact amplitudes on the register)."""
        psi = dict(state) if state is not None else {0: Fraction(1)}
        yield psi
        for t in range(1, (self.length if steps is None else steps) + 1):
            psi = self.apply(psi, t)
            yield psi

    def unitary(self) -> RationalMatrix:
        d = 2 ** self.qubits
        cols = {}
        for j in range(d):
            psi = {j: Fraction(1)}
            for t in range(1, self.length + 1):
                psi = self.apply(psi, t)
            cols[j] = psi
        return RationalMatrix((d, d), cols)

    def to_json(self) -> dict:
        return {"qubits": self.qubits, "idle": self.idle, "gates": [g.to_json() for g in self.gates]}

    @classmethod
    def from_json(cls, data: dict) -> Circuit:
        if not isinstance(data, dict):
            raise ValueError("circuit: expected a JSON object")
        if "qubits" not in data:
            raise ValueError("circuit.qubits: missing field")
        m = data["qubits"]
        if not isinstance(m, int) or isinstance(m, bool) or m < 0:
            raise ValueError("circuit.qubits: expected a nonnegative integer")
        idle = data.get("idle", 0)
        if not isinstance(idle, int) or isinstance(idle, bool) or idle < 0:
            raise ValueError("circuit.idle: expected a nonnegative integer")
        gates = []
        for k, g in enumerate(data.get("gates", [])):
            if not isinstance(g, dict) or "kind" not in g:
                raise ValueError(f"circuit.gates[{k}].kind: missing field")
            extra = set(g) - {"kind", "control", "target"}
            if extra:
                raise ValueError(f"circuit.gates[{k}]: unknown fields {sorted(extra)}")
            try:
                gates.append(Gate(g["kind"], g.get("control"), g.get("target")))
            except ValueError as exc:
                raise ValueError(f"circuit.gates[{k}]: {exc}") from exc
            bad = [q for q in gates[-1].qubits if not 0 <= q < m]
            if bad:
                raise ValueError(f"circuit.gates[{k}]: qubit {bad[0]} out of range for {m} qubits")
        try:
            return cls(m, tuple(gates), idle)
        except ValueError as exc:
            raise ValueError(f"circuit: {exc}") from exc

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_json(), indent=1))

    @classmethod
    def load(cls, path) -> Circuit:
        return cls.from_json(json.loads(Path(path).read_text()))


def preidle(c: Circuit, L: int) -> Circuit:
    """Prepend ``L`` identity gates."""
    if L < 0:
        raise ValueError("L must be nonnegative")
    return Circuit(c.qubits, c.gates, c.idle + L)


def _bit(index: int, q: int, n: int) -> int:
    return (index >> (n - 1 - q)) & 1


def local_index(index: int, qubits: Iterable[int], n: int) -> int:
    y = 0
    for q in qubits:
        y = (y << 1) | _bit(index, q, n)
    return y


def replace_local(index: int, qubits: tuple[int, ...], n: int, y: int) -> int:
    k = len(qubits)
    for pos, q in enumerate(qubits):
        shift = n - 1 - q
        b = (y >> (k - 1 - pos)) & 1
        index = (index & ~(1 << shift)) | (b << shift)
    return index


def apply_gate(g: Gate, state: Mapping[int, Fraction], n: int, adjoint: bool = False) -> dict[int, Fraction]:
    if g.kind == IDENTITY:
        return dict(state)
    qs = g.qubits
    out: dict[int, Fraction] = {}
    for x, a in state.items():
        y = local_index(x, qs, n)
        col = g.adjoint_column(y) if adjoint else g.column(y)
        for y2, u in col.items():
            x2 = replace_local(x, qs, n, y2)
            s = out.get(x2, 0) + u * a
            if s:
                out[x2] = s
            else:
                out.pop(x2, None)
    return out


# -- exact states -------------------------------------------------------------


@dataclass
class ExactState:
    """``sqrt(scale_sq) * sum amps[x] |x>`` in a ``dim``-dimensional space.

    Indices are Python ints, so registers far beyond dense size are fine as
    long as the support stays small.
    """

    dim: int
    amps: dict[int, Fraction]
    scale_sq: Fraction = Fraction(1)

    def __post_init__(self):
        self.amps = {int(x): Fraction(a) for x, a in self.amps.items() if a}
        for x in self.amps:
            if not 0 <= x < self.dim:
                raise ValueError(f"basis index {x} out of range")
        self.scale_sq = Fraction(self.scale_sq)

    @classmethod
    def on_qubits(cls, n: int, amps, scale_sq=Fraction(1)) -> ExactState:
        return cls(1 << n, amps, scale_sq)

    @property
    def qubits(self) -> int:
        n = self.dim.bit_length() - 1
        if 1 << n != self.dim:
            raise ValueError("dimension is not a power of two")
        return n

    def norm_sq(self) -> Fraction:
        return self.scale_sq * sum(a * a for a in self.amps.values())

    def inner_raw(self, other: ExactState) -> Fraction:
        a, b = (self.amps, other.amps) if len(self.amps) <= len(other.amps) else (other.amps, self.amps)
        return sum((v * b[x] for x, v in a.items() if x in b), Fraction(0))

    def overlap_sq(self, other: ExactState) -> Fraction:
        """``|<self|other>|^2`` as an exact rational."""
        if other.dim != self.dim:
            raise ValueError("states live in different spaces")
        r = self.inner_raw(other)
        return self.scale_sq * other.scale_sq * r * r

    def with_amps(self, amps) -> ExactState:
        return ExactState(self.dim, amps, self.scale_sq)

    def is_zero(self) -> bool:
        return not self.amps

    def to_array(self) -> np.ndarray:
        if self.dim > 1 << 24:
            raise ValueError("state too large for a dense array")
        out = np.zeros(self.dim)
        f = math.sqrt(float(self.scale_sq))
        for x, a in self.amps.items():
            out[x] = f * float(a)
        return out


@dataclass(frozen=True)
class IntegerState:
    """``(1/Z) sum coeffs[y] |y>`` on local ``qubits``, integer coefficients."""

    qubits: tuple[int, ...]
    coeffs: tuple[tuple[int, int], ...] = field(default=())

    def __post_init__(self):
        items = dict(self.coeffs) if not isinstance(self.coeffs, dict) else self.coeffs
        clean = []
        for y, a in sorted(items.items()):
            if int(a) != a:
                raise ValueError("integer state coefficients must be integers")
            if not 0 <= y < 2 ** len(self.qubits):
                raise ValueError(f"local label {y} out of range")
            if a:
                clean.append((int(y), int(a)))
        if not clean:
            raise ValueError("integer state is zero")
        object.__setattr__(self, "qubits", tuple(self.qubits))
        object.__setattr__(self, "coeffs", tuple(clean))

    @property
    def z_sq(self) -> int:
        return sum(a * a for _, a in self.coeffs)

    @property
    def z(self) -> float:
        return math.sqrt(self.z_sq)

    def as_dict(self) -> dict[int, int]:
        return dict(self.coeffs)

    def labels(self) -> dict[str, int]:
        k = len(self.qubits)
        return {format(y, f"0{k}b"): a for y, a in self.coeffs}

    def projector(self) -> RationalMatrix:
        d = 2 ** len(self.qubits)
        z = Fraction(self.z_sq)
        return RationalMatrix.from_entries(
            (d, d), ((i, j, Fraction(a * b) / z) for i, a in self.coeffs for j, b in self.coeffs)
        )

    def to_exact_state(self) -> ExactState:
        return ExactState.on_qubits(len(self.qubits), {y: Fraction(a) for y, a in self.coeffs}, Fraction(1, self.z_sq))
