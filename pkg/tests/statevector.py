"""Dense state-vector reference for graph-state rewrites (a few qubits only)."""

from __future__ import annotations

import itertools

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S = np.diag([1, 1j]).astype(complex)
PAULI = {"X": X, "Y": Y, "Z": Z}


def _axis_perm(c: np.ndarray) -> str | None:
    out = ""
    for j in "XYZ":
        img = c @ PAULI[j] @ c.conj().T
        for k in "XYZ":
            if abs(abs(np.trace(PAULI[k].conj().T @ img)) / 2 - 1) < 1e-9:
                out += k
                break
        else:
            return None
    return out


def _clifford_table() -> dict[str, np.ndarray]:
    table = {"XYZ": I2}
    frontier = [I2]
    while len(table) < 6:
        nxt = []
        for c in frontier:
            for g in (H, S):
                m = g @ c
                p = _axis_perm(m)
                if p not in table:
                    table[p] = m
                    nxt.append(m)
        frontier = nxt
    return table


CLIFFORD = _clifford_table()


class State:
    """Amplitudes over an ordered list of vertex labels."""

    def __init__(self, labels, psi):
        self.labels = list(labels)
        self.psi = np.asarray(psi, dtype=complex).reshape((2,) * len(self.labels))

    @classmethod
    def graph(cls, vertices, edges, tags=None):
        labels = sorted(vertices)
        k = len(labels)
        if k == 0:
            return cls([], np.array(1.0 + 0j))
        pos = {v: i for i, v in enumerate(labels)}
        bits = np.array(list(itertools.product((0, 1), repeat=k)), dtype=int).reshape(-1, k)
        phase = np.zeros(bits.shape[0], dtype=int)
        for a, b in edges:
            phase += bits[:, pos[a]] * bits[:, pos[b]]
        amp = (-1.0) ** phase / np.sqrt(2.0**k)
        st = cls(labels, amp.astype(complex))
        for v, t in (tags or {}).items():
            st = st.apply(v, CLIFFORD[t])
        return st

    def apply(self, v, u):
        i = self.labels.index(v)
        psi = np.moveaxis(np.tensordot(u, self.psi, axes=([1], [i])), 0, i)
        return State(self.labels, psi)

    def project(self, v, op):
        """Project ``v`` onto an eigenvector of ``op`` with nonzero weight; drop ``v``."""
        vals, vecs = np.linalg.eigh(op)
        i = self.labels.index(v)
        for k in range(2):
            bra = vecs[:, k].conj()
            rest = np.tensordot(bra, self.psi, axes=([0], [i]))
            norm = np.linalg.norm(rest)
            if norm > 1e-9:
                labels = [x for x in self.labels if x != v]
                return State(labels, rest / norm)
        raise AssertionError("zero state")

    def bell(self, a, b):
        """H on ``a`` then projection of (a, b) onto some Bell state."""
        st = self.apply(a, H)
        ia, ib = st.labels.index(a), st.labels.index(b)
        bells = [
            np.array([[1, 0], [0, 1]]) / np.sqrt(2),
            np.array([[1, 0], [0, -1]]) / np.sqrt(2),
            np.array([[0, 1], [1, 0]]) / np.sqrt(2),
            np.array([[0, 1], [-1, 0]]) / np.sqrt(2),
        ]
        for m in bells:
            rest = np.tensordot(m.conj(), st.psi, axes=([0, 1], [ia, ib]))
            norm = np.linalg.norm(rest)
            if norm > 1e-9:
                labels = [x for x in st.labels if x not in (a, b)]
                return State(labels, rest / norm)
        raise AssertionError("zero state")

    def equal_up_to_pauli(self, other) -> bool:
        if sorted(self.labels) != sorted(other.labels):
            return False
        o = other.reorder(self.labels)
        k = len(self.labels)
        if k == 0:
            return True
        for paulis in itertools.product((I2, X, Y, Z), repeat=k):
            st = o
            for v, p in zip(self.labels, paulis):
                st = st.apply(v, p)
            if abs(abs(np.vdot(self.psi.ravel(), st.psi.ravel())) - 1) < 1e-8:
                return True
        return False

    def reorder(self, labels):
        perm = [self.labels.index(v) for v in labels]
        return State(labels, np.transpose(self.psi, perm))


def of(g) -> State:
    """Physical state of an engine GraphState."""
    return State.graph(g.vertices, g.edges(), g.tags)
