"""Dense numpy constructions of the clock Hamiltonians, written from the term
definitions with Kronecker products.  Used only as test oracles."""

from functools import reduce

import numpy as np

U, A1, A2, D = 0, 1, 2, 3


def ket(v, d):
    e = np.zeros(d)
    e[v] = 1.0
    return e


def proj(v, d):
    return np.outer(ket(v, d), ket(v, d))


def kron(*ops):
    return reduce(np.kron, ops, np.eye(1))


def gate_matrix(g, m):
    """Full ``2^m`` matrix of a gate by explicit basis action (qubit 0 = MSB)."""
    M = np.zeros((2**m, 2**m))
    loc = np.array([[float(x) for x in row] for row in g.local_matrix])
    qs = list(g.qubits)
    for x in range(2**m):
        bits = [(x >> (m - 1 - q)) & 1 for q in range(m)]
        j = 0
        for q in qs:
            j = (j << 1) | bits[q]
        for i in range(len(loc)):
            if loc[i, j] == 0:
                continue
            nb = list(bits)
            for k, q in enumerate(qs):
                nb[q] = (i >> (len(qs) - 1 - k)) & 1
            y = int("".join(map(str, nb)), 2) if m else 0
            M[y, x] += loc[i, j]
    return M


def bravyi_dense(circuit, reject_bit=1, witness=()):
    m, S = circuit.qubits, circuit.length
    dims = [2] * m + [4] * S

    def site_op(ops: dict):
        return kron(*[ops.get(k, np.eye(d)) for k, d in enumerate(dims)])

    def qd(t):  # site of clock qudit t (1-based)
        return m + t - 1

    n = int(np.prod(dims))
    H = {"in": np.zeros((n, n)), "prop": np.zeros((n, n)), "clock": np.zeros((n, n)), "out": np.zeros((n, n))}
    for b in range(m):
        if b not in witness:
            H["in"] += site_op({qd(1): proj(A1, 4), b: proj(1, 2)})
    for t in range(1, S + 1):
        Ut = gate_matrix(circuit.gate(t), m)
        Icomp = np.eye(2**m)
        clk = lambda op: kron(*[op if k == t else np.eye(4) for k in range(1, S + 1)])
        a2a1 = np.outer(ket(A2, 4), ket(A1, 4))
        H["prop"] += 0.5 * (np.kron(Icomp, clk(proj(A1, 4) + proj(A2, 4)))
                            - np.kron(Ut, clk(a2a1)) - np.kron(Ut.T, clk(a2a1.T)))
    for t in range(1, S):
        v = (np.kron(ket(A2, 4), ket(U, 4)) - np.kron(ket(D, 4), ket(A1, 4))) / np.sqrt(2)
        pair = np.outer(v, v)
        ops = [np.eye(2**m)] + [np.eye(4)] * (t - 1) + [pair] + [np.eye(4)] * (S - t - 1)
        H["prop"] += kron(*ops)
    active = proj(A1, 4) + proj(A2, 4)
    H["clock"] += site_op({qd(1): proj(U, 4)})
    H["clock"] += site_op({qd(S): proj(D, 4)})
    for i in range(1, S + 1):
        for k in range(i + 1, S + 1):
            H["clock"] += site_op({qd(i): active, qd(k): active})
            H["clock"] += site_op({qd(i): active + proj(U, 4), qd(k): proj(D, 4)})
            H["clock"] += site_op({qd(i): proj(U, 4), qd(k): active + proj(D, 4)})
    for i in range(1, S):
        H["clock"] += site_op({qd(i): proj(D, 4), qd(i + 1): proj(U, 4)})
    if m:
        H["out"] += site_op({qd(S): proj(A2, 4), 0: proj(reject_bit, 2)})
    return H


def kitaev_dense(circuit, reject_bit=1):
    m, S = circuit.qubits, circuit.length
    Ic = np.eye(2**m)
    H = {"in": np.zeros(((2**m) * (S + 1),) * 2), "out": None, "prop": None}
    for i in range(m):
        ops = [proj(1, 2) if q == i else np.eye(2) for q in range(m)]
        H["in"] += np.kron(kron(*ops), proj(0, S + 1))
    ops = [proj(reject_bit, 2) if q == 0 else np.eye(2) for q in range(m)]
    H["out"] = np.kron(kron(*ops), proj(S, S + 1)) if m else np.zeros_like(H["in"])
    H["prop"] = np.zeros_like(H["in"])
    for t in range(1, S + 1):
        Ut = gate_matrix(circuit.gate(t), m)
        step = np.outer(ket(t, S + 1), ket(t - 1, S + 1))
        H["prop"] += (np.kron(Ic, proj(t, S + 1) + proj(t - 1, S + 1))
                      - np.kron(Ut, step) - np.kron(Ut.T, step.T))
    return H
