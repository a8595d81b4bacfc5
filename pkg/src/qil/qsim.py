"""Dense statevector simulation of small qubit registers.

Qubit 0 is the most significant bit of the amplitude index, so a register
built with :func:`tensor_product` is a plain Kronecker product with the left
factor major.  Rotations use the half-angle convention
``R_P(theta) = exp(-i theta P / 2)``.

Besides the single-state API (:class:`Statevector`, :func:`apply_gate`,
:func:`expectation`) the module exposes batched kernels operating on arrays of
shape ``(batch, 2**n)``; the VQC layer is built on those.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError

MAX_QUBITS = 20

SINGLE_QUBIT_KINDS = ("H", "X", "Y", "Z", "RX", "RY", "RZ")
TWO_QUBIT_KINDS = ("CNOT", "CZ")
ROTATION_KINDS = ("RX", "RY", "RZ")

_SQRT1_2 = 1.0 / np.sqrt(2.0)


@dataclass(frozen=True)
class Statevector:
    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (2**self.n_qubits,):
            raise ValueError(
                f"expected {2**self.n_qubits} amplitudes for {self.n_qubits} qubits, "
                f"got shape {amps.shape}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amplitudes) ** 2)))

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amplitudes) ** 2


@dataclass(frozen=True)
class Gate:
    kind: str
    targets: tuple[int, ...]
    angle: float | None = None

    def __post_init__(self):
        kind = self.kind.upper()
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if kind in SINGLE_QUBIT_KINDS:
            n_targets = 1
        elif kind in TWO_QUBIT_KINDS:
            n_targets = 2
        else:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        if len(self.targets) != n_targets:
            raise ValueError(f"{kind} acts on {n_targets} qubit(s), got targets {self.targets}")
        if kind in ROTATION_KINDS and self.angle is None:
            raise ValueError(f"{kind} needs an angle")

    @property
    def matrix(self) -> np.ndarray:
        return gate_matrix(self)


def rotation_matrix(axis: str, theta: float) -> np.ndarray:
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    if axis == "X":
        return np.array([[c, -1j * s], [-1j * s, c]], dtype=np.complex128)
    if axis == "Y":
        return np.array([[c, -s], [s, c]], dtype=np.complex128)
    if axis == "Z":
        return np.array([[np.exp(-0.5j * theta), 0], [0, np.exp(0.5j * theta)]], dtype=np.complex128)
    raise ValueError(f"unknown rotation axis {axis!r}")


PAULI_MATRICES = {
    "I": np.eye(2, dtype=np.complex128),
    "X": np.array([[0, 1], [1, 0]], dtype=np.complex128),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=np.complex128),
    "Z": np.array([[1, 0], [0, -1]], dtype=np.complex128),
}


def gate_matrix(gate: Gate) -> np.ndarray:
    """Unitary of ``gate`` on its own targets (2x2 or 4x4, first target major)."""
    kind = gate.kind
    if kind == "H":
        return np.array([[1, 1], [1, -1]], dtype=np.complex128) * _SQRT1_2
    if kind in ("X", "Y", "Z"):
        return PAULI_MATRICES[kind].copy()
    if kind in ROTATION_KINDS:
        return rotation_matrix(kind[1], float(gate.angle))
    if kind == "CNOT":
        m = np.eye(4, dtype=np.complex128)
        m[2:, 2:] = PAULI_MATRICES["X"]
        return m
    if kind == "CZ":
        return np.diag([1, 1, 1, -1]).astype(np.complex128)
    raise ValueError(f"unknown gate kind {kind!r}")


# ---------------------------------------------------------------------------
# Pauli observables


@dataclass(frozen=True, eq=False)
class PauliObservable:
    """Real-weighted sum of Pauli strings.

    ``terms`` holds ``(coefficient, {qubit: "X" | "Y" | "Z"})`` pairs; an empty
    mapping is the identity.
    """

    terms: tuple[tuple[float, Mapping[int, str]], ...] = field(default_factory=tuple)

    def __post_init__(self):
        clean = []
        for coef, paulis in self.terms:
            ops = {int(q): str(p).upper() for q, p in dict(paulis).items()}
            for q, p in ops.items():
                if p not in ("X", "Y", "Z"):
                    raise ValueError(f"bad Pauli factor {p!r} on qubit {q}")
                if q < 0:
                    raise ValueError(f"negative qubit index {q}")
            clean.append((float(coef), ops))
        object.__setattr__(self, "terms", tuple(clean))

    def _key(self):
        return tuple((c, tuple(sorted(o.items()))) for c, o in self.terms)

    def __eq__(self, other):
        return isinstance(other, PauliObservable) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    @classmethod
    def parse(cls, text: str) -> "PauliObservable":
        """Parse strings like ``"Z0Z1"``, ``"-Z0Z1Z2Z3"`` or ``"0.5*X0 + Z1"``."""
        terms = []
        compact = "".join(text.split())
        for chunk in re.sub(r"(?<![eE])-", "+-", compact).split("+"):
            chunk = chunk.strip()
            if not chunk:
                continue
            coef = 1.0
            if "*" in chunk:
                num, chunk = chunk.split("*", 1)
                coef = float(num)
                chunk = chunk.strip()
            if chunk.startswith("-"):
                coef, chunk = -coef, chunk[1:].strip()
            ops: dict[int, str] = {}
            i = 0
            while i < len(chunk):
                p = chunk[i].upper()
                if p not in "XYZ":
                    raise ValueError(f"cannot parse observable {text!r}")
                j = i + 1
                while j < len(chunk) and chunk[j].isdigit():
                    j += 1
                if j == i + 1:
                    raise ValueError(f"missing qubit index in {text!r}")
                q = int(chunk[i + 1 : j])
                if q in ops:
                    raise ValueError(f"qubit {q} repeated in {text!r}")
                ops[q] = p
                i = j
            terms.append((coef, ops))
        if not terms:
            raise ValueError(f"empty observable {text!r}")
        return cls(tuple(terms))

    def label(self) -> str:
        parts = []
        for coef, ops in self.terms:
            body = "".join(f"{p}{q}" for q, p in sorted(ops.items())) or "I"
            if coef == 1.0:
                parts.append(body)
            elif coef == -1.0:
                parts.append("-" + body)
            else:
                parts.append(f"{coef!r}*{body}")
        return " + ".join(parts).replace("+ -", "- ")

    @property
    def max_qubit(self) -> int:
        return max((max(ops) for _, ops in self.terms if ops), default=-1)

    @property
    def norm_bound(self) -> float:
        """Upper bound on ``|<O>|`` for any normalized state."""
        return float(sum(abs(c) for c, _ in self.terms))


class CompiledPauli:
    """A Pauli string specialised to an ``n``-qubit register.

    ``P|x> = phase(x) |x xor mask>``; we store, for every output index ``y``,
    the source index ``y xor mask`` and the phase attached to it.
    """

    def __init__(self, paulis: Mapping[int, str], n_qubits: int):
        idx = np.arange(2**n_qubits)
        mask = 0
        phase = np.ones(2**n_qubits, dtype=np.complex128)
        for q, p in paulis.items():
            if q >= n_qubits:
                raise IndexError(f"observable acts on qubit {q}, register has {n_qubits}")
            bit = 1 << (n_qubits - 1 - q)
            sign = np.where(idx & bit, -1.0, 1.0)
            if p == "Z":
                phase *= sign
            elif p == "X":
                mask ^= bit
            else:  # Y|0> = i|1>, Y|1> = -i|0>
                mask ^= bit
                phase *= 1j * sign
        self.src = idx ^ mask
        self.coeff = phase[self.src]
        self.diagonal = mask == 0
        if self.diagonal:
            self.coeff = self.coeff.real.copy()

    def apply(self, states: np.ndarray) -> np.ndarray:
        if self.diagonal:
            return states * self.coeff
        return states[..., self.src] * self.coeff

    def expectation(self, states: np.ndarray) -> np.ndarray:
        if self.diagonal:
            return (states.real**2 + states.imag**2) @ self.coeff
        return np.einsum("...i,...i->...", states.conj(), self.apply(states)).real


@lru_cache(maxsize=None)
def compile_observable(obs: PauliObservable, n_qubits: int) -> tuple[tuple[float, CompiledPauli], ...]:
    return tuple((coef, CompiledPauli(ops, n_qubits)) for coef, ops in obs.terms)


# ---------------------------------------------------------------------------
# batched kernels; states are complex arrays of shape (batch, 2**n)


def _split(states: np.ndarray, n_qubits: int, qubit: int) -> np.ndarray:
    return states.reshape(states.shape[0], 2**qubit, 2, 2 ** (n_qubits - qubit - 1))


def _bcast(x):
    x = np.asarray(x, dtype=np.float64)
    return x[:, None, None] if x.ndim == 1 else x


def apply_rotation(states: np.ndarray, n_qubits: int, qubit: int, axis: str, theta) -> np.ndarray:
    """Apply ``R_axis(theta)`` on ``qubit``; ``theta`` is a scalar or one angle per row."""
    v = _split(states, n_qubits, qubit)
    a0, a1 = v[:, :, 0, :], v[:, :, 1, :]
    half = _bcast(theta) / 2
    c, s = np.cos(half), np.sin(half)
    out = np.empty_like(v)
    if axis == "Y":
        out[:, :, 0, :] = c * a0 - s * a1
        out[:, :, 1, :] = s * a0 + c * a1
    elif axis == "X":
        out[:, :, 0, :] = c * a0 - 1j * s * a1
        out[:, :, 1, :] = c * a1 - 1j * s * a0
    elif axis == "Z":
        out[:, :, 0, :] = (c - 1j * s) * a0
        out[:, :, 1, :] = (c + 1j * s) * a1
    else:
        raise ValueError(f"unknown rotation axis {axis!r}")
    return out.reshape(states.shape)


def apply_matrix1(states: np.ndarray, n_qubits: int, qubit: int, m: np.ndarray) -> np.ndarray:
    v = _split(states, n_qubits, qubit)
    a0, a1 = v[:, :, 0, :], v[:, :, 1, :]
    out = np.empty_like(v)
    out[:, :, 0, :] = m[0, 0] * a0 + m[0, 1] * a1
    out[:, :, 1, :] = m[1, 0] * a0 + m[1, 1] * a1
    return out.reshape(states.shape)


def pauli_inner_imag(lam: np.ndarray, psi: np.ndarray, n_qubits: int, qubit: int, axis: str) -> np.ndarray:
    """Row-wise ``Im <lam| P_qubit |psi>`` for a single-qubit Pauli ``P``."""
    lv, pv = _split(lam, n_qubits, qubit), _split(psi, n_qubits, qubit)
    l0, l1 = lv[:, :, 0, :].conj(), lv[:, :, 1, :].conj()
    p0, p1 = pv[:, :, 0, :], pv[:, :, 1, :]
    if axis == "Z":
        z = l0 * p0 - l1 * p1
        return z.imag.sum(axis=(1, 2))
    if axis == "X":
        z = l0 * p1 + l1 * p0
        return z.imag.sum(axis=(1, 2))
    if axis == "Y":
        z = l1 * p0 - l0 * p1
        return z.real.sum(axis=(1, 2))
    raise ValueError(f"unknown rotation axis {axis!r}")


@lru_cache(maxsize=None)
def cnot_permutation(n_qubits: int, control: int, target: int) -> np.ndarray:
    idx = np.arange(2**n_qubits)
    cbit = 1 << (n_qubits - 1 - control)
    tbit = 1 << (n_qubits - 1 - target)
    return np.where(idx & cbit, idx ^ tbit, idx)


@lru_cache(maxsize=None)
def cz_phase(n_qubits: int, a: int, b: int) -> np.ndarray:
    idx = np.arange(2**n_qubits)
    abit = 1 << (n_qubits - 1 - a)
    bbit = 1 << (n_qubits - 1 - b)
    return np.where(((idx & abit) != 0) & ((idx & bbit) != 0), -1.0, 1.0)


def apply_gate_batch(states: np.ndarray, n_qubits: int, gate: Gate) -> np.ndarray:
    _check_targets(gate, n_qubits)
    kind = gate.kind
    if kind in ROTATION_KINDS:
        return apply_rotation(states, n_qubits, gate.targets[0], kind[1], gate.angle)
    if kind in SINGLE_QUBIT_KINDS:
        return apply_matrix1(states, n_qubits, gate.targets[0], gate_matrix(gate))
    if kind == "CNOT":
        return states[:, cnot_permutation(n_qubits, *gate.targets)]
    return states * cz_phase(n_qubits, *gate.targets)


def _check_targets(gate: Gate, n_qubits: int) -> None:
    for t in gate.targets:
        if not 0 <= t < n_qubits:
            raise IndexError(f"{gate.kind} target {t} out of range for {n_qubits} qubits")
    if len(set(gate.targets)) != len(gate.targets):
        raise ValueError(f"{gate.kind} targets must be distinct, got {gate.targets}")


# ---------------------------------------------------------------------------
# single-state API


def zero_state(n_qubits: int) -> Statevector:
    if not isinstance(n_qubits, (int, np.integer)) or not 1 <= n_qubits <= MAX_QUBITS:
        raise ConfigurationError(f"n_qubits must be an integer in [1, {MAX_QUBITS}], got {n_qubits!r}")
    amps = np.zeros(2**n_qubits, dtype=np.complex128)
    amps[0] = 1.0
    return Statevector(int(n_qubits), amps)


def basis_state(bits: str) -> Statevector:
    """``basis_state("10")`` is |10>."""
    n = len(bits)
    amps = np.zeros(2**n, dtype=np.complex128)
    amps[int(bits, 2)] = 1.0
    return Statevector(n, amps)


def apply_gate(state: Statevector, gate: Gate) -> Statevector:
    out = apply_gate_batch(state.amplitudes[None, :].copy(), state.n_qubits, gate)
    return Statevector(state.n_qubits, out[0])


def apply_circuit(state: Statevector, gates: Iterable[Gate]) -> Statevector:
    amps = state.amplitudes[None, :].copy()
    for g in gates:
        amps = apply_gate_batch(amps, state.n_qubits, g)
    return Statevector(state.n_qubits, amps[0])


def tensor_product(a: Statevector, b: Statevector) -> Statevector:
    return Statevector(a.n_qubits + b.n_qubits, np.kron(a.amplitudes, b.amplitudes))


def expectation(state: Statevector, obs: PauliObservable) -> float:
    if obs.max_qubit >= state.n_qubits:
        raise IndexError(f"observable touches qubit {obs.max_qubit}, state has {state.n_qubits}")
    amps = state.amplitudes[None, :]
    total = 0.0
    for coef, op in compile_observable(obs, state.n_qubits):
        total += coef * float(op.expectation(amps)[0])
    return total


def expectations_batch(states: np.ndarray, n_qubits: int, observables: Sequence[PauliObservable]) -> np.ndarray:
    """``(batch, len(observables))`` real expectation values."""
    out = np.zeros((states.shape[0], len(observables)))
    for k, obs in enumerate(observables):
        for coef, op in compile_observable(obs, n_qubits):
            out[:, k] += coef * op.expectation(states)
    return out


def apply_observable_batch(states: np.ndarray, n_qubits: int, observables: Sequence[PauliObservable], weights: np.ndarray) -> np.ndarray:
    """Row-wise ``sum_k weights[b, k] O_k |psi_b>``."""
    out = np.zeros_like(states)
    for k, obs in enumerate(observables):
        w = weights[:, k : k + 1]
        for coef, op in compile_observable(obs, n_qubits):
            out += (coef * w) * op.apply(states)
    return out
