"""Dense state-vector kernel.

Qubit 0 is the most significant bit of the basis index, so ``|100>`` has
amplitude at index 4.  Gates and measurements only ever touch the leading
qubits of a state; a gate wider than the state acts as the identity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidState, InvalidUnitary

NORM_TOL = 1e-9
ZERO_PROB = 1e-12
EQ_TOL = 1e-12


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.complex128)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class QState:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = _frozen(self.amplitudes).reshape(-1)
        object.__setattr__(self, "amplitudes", amps)
        if self.n_qubits < 0 or amps.shape[0] != 2 ** self.n_qubits:
            raise InvalidState(
                f"{amps.shape[0]} amplitudes do not describe {self.n_qubits} qubits")
        if not np.all(np.isfinite(amps)):
            raise InvalidState("amplitudes must be finite")
        norm = float(np.linalg.norm(amps))
        if abs(norm - 1.0) > NORM_TOL:
            raise InvalidState(f"state has norm {norm:.12g}, expected 1")

    @classmethod
    def _trusted(cls, n_qubits: int, amps: np.ndarray) -> "QState":
        """Skip validation for results of norm-preserving kernel operations."""
        obj = object.__new__(cls)
        amps = np.ascontiguousarray(amps, dtype=np.complex128).reshape(-1)
        amps.setflags(write=False)
        object.__setattr__(obj, "n_qubits", n_qubits)
        object.__setattr__(obj, "amplitudes", amps)
        return obj

    @classmethod
    def from_amplitudes(cls, amps, *, normalize: bool = False) -> "QState":
        amps = np.asarray(amps, dtype=np.complex128).reshape(-1)
        n = int(round(np.log2(amps.shape[0]))) if amps.shape[0] else -1
        if n < 0 or 2 ** n != amps.shape[0]:
            raise InvalidState(f"length {amps.shape[0]} is not a power of two")
        if normalize:
            norm = np.linalg.norm(amps)
            if norm == 0:
                raise InvalidState("cannot normalise the zero vector")
            amps = amps / norm
        return cls(n, amps)

    @classmethod
    def basis(cls, bits: str) -> "QState":
        amps = np.zeros(2 ** len(bits), dtype=np.complex128)
        amps[int(bits, 2) if bits else 0] = 1.0
        return cls(len(bits), amps)

    def allclose(self, other: "QState", tol: float = EQ_TOL) -> bool:
        return (self.n_qubits == other.n_qubits
                and bool(np.allclose(self.amplitudes, other.amplitudes, rtol=0, atol=tol)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, QState):
            return NotImplemented
        return self.allclose(other)

    def __hash__(self) -> int:
        # consistent with approximate equality: equal states share a length
        return hash(("QState", self.n_qubits))

    def key(self, digits: int = 12) -> tuple:
        """Hashable rounding used to merge distribution supports."""
        a = np.round(self.amplitudes, digits) + 0.0  # clears negative zeros
        return (self.n_qubits, tuple(complex(x) for x in a))

    def terms(self, tol: float = 1e-15):
        """Yield (bitstring, amplitude) for the non-negligible amplitudes."""
        for idx, amp in enumerate(self.amplitudes):
            if abs(amp) > tol:
                yield format(idx, f"0{self.n_qubits}b") if self.n_qubits else "", complex(amp)

    def __repr__(self) -> str:
        body = " + ".join(f"{_fmt_complex(a)}|{b}>" for b, a in self.terms())
        return f"QState({body or '0'})"


def _fmt_complex(z: complex) -> str:
    if z.imag == 0:
        return repr(float(z.real))
    return f"({z.real!r}{z.imag:+.17g}i)"


@dataclass(frozen=True, eq=False)
class Unitary:
    name: str
    n_qubits: int
    matrix: np.ndarray

    def __post_init__(self):
        m = _frozen(self.matrix)
        object.__setattr__(self, "matrix", m)
        dim = 2 ** self.n_qubits
        if self.n_qubits < 1 or m.shape != (dim, dim):
            raise InvalidUnitary(f"{self.name}: matrix shape {m.shape} does not match "
                                 f"{self.n_qubits} qubits")
        if not np.all(np.isfinite(m)):
            raise InvalidUnitary(f"{self.name}: entries must be finite")
        err = np.max(np.abs(m @ m.conj().T - np.eye(dim)))
        if err > NORM_TOL:
            raise InvalidUnitary(f"{self.name}: U U^dagger deviates from I by {err:.3g}")

    @classmethod
    def from_matrix(cls, name: str, matrix) -> "Unitary":
        m = np.asarray(matrix, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise InvalidUnitary(f"{name}: matrix must be square")
        n = int(round(np.log2(m.shape[0]))) if m.shape[0] else 0
        if 2 ** n != m.shape[0]:
            raise InvalidUnitary(f"{name}: dimension {m.shape[0]} is not a power of two")
        return cls(name, n, m)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Unitary):
            return NotImplemented
        return (self.name == other.name and self.n_qubits == other.n_qubits
                and bool(np.allclose(self.matrix, other.matrix, atol=EQ_TOL)))

    def __hash__(self) -> int:
        return hash(("Unitary", self.name, self.n_qubits))

    def __repr__(self) -> str:
        return f"Unitary({self.name}, {self.n_qubits})"


def tensor(a: QState, b: QState) -> QState:
    return QState._trusted(a.n_qubits + b.n_qubits, np.kron(a.amplitudes, b.amplitudes))


def apply_unitary(u: Unitary, s: QState) -> QState:
    if s.n_qubits < u.n_qubits:
        return s
    rest = 2 ** (s.n_qubits - u.n_qubits)
    out = u.matrix @ s.amplitudes.reshape(2 ** u.n_qubits, rest)
    return QState._trusted(s.n_qubits, out)


def _split_first(s: QState) -> np.ndarray:
    if s.n_qubits < 1:
        raise InvalidState("measurement needs at least one qubit")
    return s.amplitudes.reshape(2, -1)


def measure_prob(i: int, s: QState) -> float:
    rows = _split_first(s)
    p = float(np.sum(np.abs(rows[i]) ** 2))
    return min(max(p, 0.0), 1.0)


def post_measure(i: int, s: QState) -> QState:
    rows = _split_first(s)
    p = float(np.sum(np.abs(rows[i]) ** 2))
    if p <= ZERO_PROB:
        return s
    out = np.zeros_like(rows)
    out[i] = rows[i] / np.sqrt(p)
    return QState._trusted(s.n_qubits, out)


def projector_part(i: int, s: QState) -> np.ndarray:
    """Unnormalised projection of ``s`` onto first qubit = i."""
    rows = _split_first(s)
    out = np.zeros_like(rows)
    out[i] = rows[i]
    return out.reshape(-1)


def random_state(rng: np.random.Generator, n_qubits: int) -> QState:
    v = rng.normal(size=2 ** n_qubits) + 1j * rng.normal(size=2 ** n_qubits)
    return QState.from_amplitudes(v, normalize=True)


def random_unitary(rng: np.random.Generator, n_qubits: int, name: str = "R") -> Unitary:
    dim = 2 ** n_qubits
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    q = q * (d / np.abs(d))
    return Unitary(name, n_qubits, q)


_S2 = 1 / np.sqrt(2)

BUILTIN_GATES: dict[str, Unitary] = {
    u.name: u for u in [
        Unitary("H", 1, [[_S2, _S2], [_S2, -_S2]]),
        Unitary("X", 1, [[0, 1], [1, 0]]),
        Unitary("Y", 1, [[0, -1j], [1j, 0]]),
        Unitary("Z", 1, [[1, 0], [0, -1]]),
        Unitary("S", 1, [[1, 0], [0, 1j]]),
        Unitary("T", 1, [[1, 0], [0, np.exp(1j * np.pi / 4)]]),
        Unitary("CNOT", 2, [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]]),
        Unitary("SWAP", 2, [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]]),
    ]
}
