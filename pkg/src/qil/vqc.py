"""Data re-uploading variational circuits used as policies.

Layer ``l`` of an ``L``-layer circuit is

    variational rotations (per qubit, ``rotations`` pattern, angles ``phi[l]``)
    -> entangling ring (CNOT or CZ between neighbours, closing on qubit 0)
    -> encoding rotations ``R_Y(lam[l, q] * x[q])``

and a last variational sub-layer ``phi[L]`` follows the final upload.  With
every angle at zero the circuit is the identity.

Two gradient routes are provided and are kept independent of each other:

* adjoint differentiation through the statevector (:meth:`Circuit.gradient`),
  which pre-multiplies each variational sub-layer into a dense block and
  back-propagates a single adjoint vector per sample;
* the parameter-shift rule evaluated on explicit :mod:`qil.qsim` gate lists
  (:func:`parameter_shift_jacobian`).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels, qsim
from .qsim import Gate, PauliObservable

CHECKPOINT_FORMAT = "qil-vqc-policy"
CHECKPOINT_VERSION = 1

ENTANGLERS = ("cnot", "cz")


@dataclass(frozen=True)
class EncodingSpec:
    state_bounds: tuple[float, ...]
    clamp: bool = True

    def __post_init__(self):
        bounds = tuple(float(b) for b in self.state_bounds)
        if not bounds or any(not (b > 0 and math.isfinite(b)) for b in bounds):
            raise ValueError(f"state bounds must be positive and finite, got {bounds}")
        object.__setattr__(self, "state_bounds", bounds)

    @property
    def n_qubits(self) -> int:
        return len(self.state_bounds)

    def normalize(self, observations) -> np.ndarray:
        x = np.asarray(observations, dtype=np.float64)
        if x.shape[-1] != self.n_qubits:
            raise ValueError(f"observation has dimension {x.shape[-1]}, encoding expects {self.n_qubits}")
        if not np.all(np.isfinite(x)):
            raise ValueError("observation contains non-finite values")
        return x / np.asarray(self.state_bounds)


@dataclass(frozen=True)
class CircuitArchitecture:
    n_qubits: int
    n_layers: int
    observables: tuple[PauliObservable, ...]
    entangler: str = "cnot"
    rotations: tuple[str, ...] = ("X", "Y", "Z")

    def __post_init__(self):
        obs = tuple(o if isinstance(o, PauliObservable) else PauliObservable.parse(o) for o in self.observables)
        object.__setattr__(self, "observables", obs)
        object.__setattr__(self, "rotations", tuple(r.upper() for r in self.rotations))
        if not 1 <= self.n_qubits <= qsim.MAX_QUBITS:
            raise qsim.ConfigurationError(f"n_qubits must lie in [1, {qsim.MAX_QUBITS}]")
        if self.n_layers < 1:
            raise qsim.ConfigurationError("n_layers must be >= 1")
        if self.entangler not in ENTANGLERS:
            raise qsim.ConfigurationError(f"entangler must be one of {ENTANGLERS}")
        if not self.rotations or any(r not in ("X", "Y", "Z") for r in self.rotations):
            raise qsim.ConfigurationError(f"bad rotation pattern {self.rotations}")
        if not obs:
            raise qsim.ConfigurationError("at least one observable is required")
        for o in obs:
            if o.max_qubit >= self.n_qubits:
                raise qsim.ConfigurationError(f"observable {o.label()} exceeds {self.n_qubits} qubits")

    @property
    def n_observables(self) -> int:
        return len(self.observables)

    @property
    def lam_shape(self) -> tuple[int, int]:
        return (self.n_layers, self.n_qubits)

    @property
    def phi_shape(self) -> tuple[int, int, int]:
        return (self.n_layers + 1, self.n_qubits, len(self.rotations))

    def entangler_pairs(self) -> list[tuple[int, int]]:
        n = self.n_qubits
        if n == 1:
            return []
        if n == 2:
            return [(0, 1)] if self.entangler == "cz" else [(0, 1), (1, 0)]
        return [(q, (q + 1) % n) for q in range(n)]

    def to_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "n_layers": self.n_layers,
            "observables": [o.label() for o in self.observables],
            "entangler": self.entangler,
            "rotations": list(self.rotations),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CircuitArchitecture":
        return cls(
            n_qubits=int(d["n_qubits"]),
            n_layers=int(d["n_layers"]),
            observables=tuple(PauliObservable.parse(o) for o in d["observables"]),
            entangler=d.get("entangler", "cnot"),
            rotations=tuple(d.get("rotations", ("X", "Y", "Z"))),
        )


@dataclass
class PolicyParameters:
    """Trainable angles and scalers.

    The flat vector layout is ``[lam, phi, nu, log_sigma]`` (``log_sigma`` only
    for Gaussian policies); ``beta`` is a fixed hyperparameter and never part
    of the vector.
    """

    lam: np.ndarray
    phi: np.ndarray
    nu: np.ndarray
    beta: float = 1.0
    log_sigma: np.ndarray | None = None

    @classmethod
    def initial(cls, arch: CircuitArchitecture, rng: np.random.Generator, *, beta: float = 1.0,
                gaussian: bool = False, sigma: float = 0.5) -> "PolicyParameters":
        return cls(
            lam=np.ones(arch.lam_shape),
            phi=rng.uniform(0.0, 2 * np.pi, size=arch.phi_shape),
            nu=np.ones(arch.n_observables),
            beta=float(beta),
            log_sigma=np.full(arch.n_observables, np.log(sigma)) if gaussian else None,
        )

    @property
    def gaussian(self) -> bool:
        return self.log_sigma is not None

    @property
    def sigma(self) -> np.ndarray:
        if self.log_sigma is None:
            raise AttributeError("softmax policies have no sigma")
        return np.exp(self.log_sigma)

    def group_slices(self) -> dict[str, slice]:
        out, start = {}, 0
        for name, arr in self._groups():
            out[name] = slice(start, start + arr.size)
            start += arr.size
        return out

    def _groups(self):
        groups = [("lam", self.lam), ("phi", self.phi), ("nu", self.nu)]
        if self.log_sigma is not None:
            groups.append(("log_sigma", self.log_sigma))
        return groups

    @property
    def size(self) -> int:
        return sum(a.size for _, a in self._groups())

    def vector(self) -> np.ndarray:
        return np.concatenate([a.ravel() for _, a in self._groups()])

    def with_vector(self, v: np.ndarray) -> "PolicyParameters":
        v = np.asarray(v, dtype=np.float64)
        if v.shape != (self.size,):
            raise ValueError(f"expected vector of length {self.size}, got {v.shape}")
        sl = self.group_slices()
        return PolicyParameters(
            lam=v[sl["lam"]].reshape(self.lam.shape).copy(),
            phi=v[sl["phi"]].reshape(self.phi.shape).copy(),
            nu=v[sl["nu"]].copy(),
            beta=self.beta,
            log_sigma=v[sl["log_sigma"]].copy() if self.log_sigma is not None else None,
        )

    def copy(self) -> "PolicyParameters":
        return self.with_vector(self.vector())

    def to_dict(self) -> dict:
        d = {"lam": self.lam.tolist(), "phi": self.phi.tolist(), "nu": self.nu.tolist(), "beta": self.beta}
        if self.log_sigma is not None:
            d["log_sigma"] = self.log_sigma.tolist()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PolicyParameters":
        return cls(
            lam=np.asarray(d["lam"], dtype=np.float64),
            phi=np.asarray(d["phi"], dtype=np.float64),
            nu=np.asarray(d["nu"], dtype=np.float64),
            beta=float(d.get("beta", 1.0)),
            log_sigma=np.asarray(d["log_sigma"], dtype=np.float64) if "log_sigma" in d else None,
        )


# ---------------------------------------------------------------------------
# encoding


def encode(observation, spec: EncodingSpec, lam_layer) -> np.ndarray:
    """Encoding angles ``lam_layer * observation / s_b`` (clamped to [-pi, pi] if requested)."""
    x = spec.normalize(observation)
    return encode_normalized(x, lam_layer, spec.clamp)


def encode_normalized(x_norm, lam, clamp: bool = True) -> np.ndarray:
    angles = np.asarray(lam, dtype=np.float64) * np.asarray(x_norm, dtype=np.float64)
    if not np.all(np.isfinite(angles)):
        raise ValueError("encoded angles are not finite")
    if clamp:
        angles = np.clip(angles, -np.pi, np.pi)
    return angles


# ---------------------------------------------------------------------------
# circuit engine


class Circuit:
    """Batched simulator for one :class:`CircuitArchitecture`."""

    def __init__(self, arch: CircuitArchitecture, clamp: bool = True):
        self.arch = arch
        self.clamp = clamp
        self.n = arch.n_qubits
        self.dim = 2**self.n
        self._block_key: bytes | None = None
        self._blocks: list[np.ndarray] = []
        self._ent_perm = None
        self._ent_phase = None
        if arch.entangler == "cnot":
            perm = np.arange(self.dim)
            for c, t in arch.entangler_pairs():
                perm = perm[qsim.cnot_permutation(self.n, c, t)]
            self._ent_perm = perm
            self._ent_perm_inv = np.argsort(perm)
        else:
            phase = np.ones(self.dim)
            for a, b in arch.entangler_pairs():
                phase = phase * qsim.cz_phase(self.n, a, b)
            self._ent_phase = phase

    # -- building blocks -------------------------------------------------

    def _entangle(self, states):
        if self._ent_perm is not None:
            return states[:, self._ent_perm]
        return states * self._ent_phase

    def _unentangle(self, states):
        if self._ent_perm is not None:
            return states[:, self._ent_perm_inv]
        return states * self._ent_phase

    def _rotate_layer(self, states, phi_layer, inverse=False):
        order = [(q, r, axis) for q in range(self.n) for r, axis in enumerate(self.arch.rotations)]
        if inverse:
            order.reverse()
        sign = -1.0 if inverse else 1.0
        for q, r, axis in order:
            states = qsim.apply_rotation(states, self.n, q, axis, sign * phi_layer[q, r])
        return states

    def blocks(self, phi: np.ndarray) -> list[np.ndarray]:
        """Row-convention matrices ``W_l`` with ``psi_out = psi_in @ W_l``."""
        key = phi.tobytes()
        if key != self._block_key:
            eye = np.eye(self.dim, dtype=np.complex128)
            blocks = []
            for l in range(self.arch.n_layers + 1):
                w = self._rotate_layer(eye, phi[l])
                if l < self.arch.n_layers:
                    w = self._entangle(w)
                blocks.append(w)
            self._blocks, self._block_key = blocks, key
        return self._blocks

    def angles(self, lam: np.ndarray, x_norm: np.ndarray) -> np.ndarray:
        """Encoding angles of shape ``(batch, L, n)``."""
        return encode_normalized(x_norm[:, None, :], lam[None, :, :], self.clamp)

    def _encode_layer(self, states, angles_l, inverse=False):
        out = np.array(states, dtype=np.complex128, order="C", copy=True)
        _kernels.ry_layer_inplace(out, np.ascontiguousarray(angles_l), -1.0 if inverse else 1.0)
        return out

    # -- forward ---------------------------------------------------------

    def forward(self, params: PolicyParameters, x_norm: np.ndarray, keep: bool = False):
        x_norm = np.atleast_2d(np.asarray(x_norm, dtype=np.float64))
        if x_norm.shape[1] != self.n:
            raise ValueError(f"expected {self.n} input features, got {x_norm.shape[1]}")
        W = self.blocks(params.phi)
        ang = self.angles(params.lam, x_norm)
        batch = x_norm.shape[0]
        psi = np.repeat(W[0][:1, :], batch, axis=0)
        block_inputs = [None]
        for l in range(self.arch.n_layers):
            psi = self._encode_layer(psi, ang[:, l, :])
            block_inputs.append(psi)
            psi = psi @ W[l + 1]
        if keep:
            return psi, block_inputs, ang
        return psi

    def expectations(self, params: PolicyParameters, x_norm: np.ndarray) -> np.ndarray:
        psi = self.forward(params, x_norm)
        return qsim.expectations_batch(psi, self.n, self.arch.observables)

    # -- adjoint gradient ------------------------------------------------

    def gradient(self, params: PolicyParameters, x_norm: np.ndarray, weights: np.ndarray,
                 per_sample: bool = False):
        """Gradient of ``sum_b sum_k weights[b, k] <H_k>_b`` w.r.t. ``(lam, phi)``.

        Returns ``(expectations, d_lam, d_phi)``; the gradients carry a leading
        batch axis when ``per_sample`` is set, otherwise they are summed.
        """
        x_norm = np.atleast_2d(np.asarray(x_norm, dtype=np.float64))
        weights = np.atleast_2d(np.asarray(weights, dtype=np.float64))
        psi, block_inputs, ang = self.forward(params, x_norm, keep=True)
        W = self.blocks(params.phi)
        L = self.arch.n_layers
        batch = x_norm.shape[0]
        expect = qsim.expectations_batch(psi, self.n, self.arch.observables)
        lam_vec = qsim.apply_observable_batch(psi, self.n, self.arch.observables, weights)

        d_phi = np.zeros((batch,) + self.arch.phi_shape) if per_sample else np.zeros(self.arch.phi_shape)
        d_ang = np.zeros((batch, L, self.n))
        for l in range(L, -1, -1):
            psi_in = block_inputs[l]
            if psi_in is None:  # first block acts on |0...0>
                psi_in = np.zeros((batch, self.dim), dtype=np.complex128)
                psi_in[:, 0] = 1.0
            g = self._block_gradient(l, params.phi[l], psi_in, lam_vec, per_sample)
            if per_sample:
                d_phi[:, l] = g
            else:
                d_phi[l] = g
            lam_vec = lam_vec @ W[l].conj().T
            if l > 0:
                lam_vec = np.ascontiguousarray(lam_vec)
                d_ang[:, l - 1, :] = _kernels.y_inner_imag(lam_vec, block_inputs[l], self.n)
                lam_vec = self._encode_layer(lam_vec, ang[:, l - 1, :], inverse=True)

        raw = x_norm[:, None, :] * params.lam[None, :, :]
        if self.clamp:
            d_ang = d_ang * (np.abs(raw) <= np.pi)
        d_lam = d_ang * x_norm[:, None, :]
        if not per_sample:
            d_lam = d_lam.sum(axis=0)
        return expect, d_lam, d_phi

    def _block_gradient(self, l, phi_l, psi_in, lam_out, per_sample):
        if not per_sample and psi_in.shape[0] > self.dim:
            # sum_b <lam_b| X |psi_b> == sum_k <e_k| X |c_k>, c_k = sum_b conj(lam_b[k]) psi_b
            psi_in = lam_out.conj().T @ psi_in
            lam_out = np.eye(self.dim, dtype=np.complex128)
        psi = self._rotate_layer(psi_in, phi_l)
        lam = self._unentangle(lam_out) if l < self.arch.n_layers else lam_out
        rot = self.arch.rotations
        g = np.zeros((psi.shape[0], self.n, len(rot)))
        for q in reversed(range(self.n)):
            for r in reversed(range(len(rot))):
                g[:, q, r] = qsim.pauli_inner_imag(lam, psi, self.n, q, rot[r])
                psi = qsim.apply_rotation(psi, self.n, q, rot[r], -phi_l[q, r])
                lam = qsim.apply_rotation(lam, self.n, q, rot[r], -phi_l[q, r])
        return g if per_sample else g.sum(axis=0)


# ---------------------------------------------------------------------------
# explicit gate lists and the parameter-shift route


def circuit_gates(params: PolicyParameters, arch: CircuitArchitecture, x_norm, clamp: bool = True) -> list[Gate]:
    x_norm = np.asarray(x_norm, dtype=np.float64)
    gates: list[Gate] = []

    def variational(l):
        for q in range(arch.n_qubits):
            for r, axis in enumerate(arch.rotations):
                gates.append(Gate("R" + axis, (q,), float(params.phi[l, q, r])))

    ent = "CNOT" if arch.entangler == "cnot" else "CZ"
    for l in range(arch.n_layers):
        variational(l)
        for pair in arch.entangler_pairs():
            gates.append(Gate(ent, pair))
        angles = encode_normalized(x_norm, params.lam[l], clamp)
        for q in range(arch.n_qubits):
            gates.append(Gate("RY", (q,), float(angles[q])))
    variational(arch.n_layers)
    return gates


def _gate_index(arch: CircuitArchitecture):
    """Positions of parameterised gates in :func:`circuit_gates` output."""
    n, R = arch.n_qubits, len(arch.rotations)
    n_ent = len(arch.entangler_pairs())
    phi_pos, lam_pos = {}, {}
    pos = 0
    for l in range(arch.n_layers + 1):
        for q in range(n):
            for r in range(R):
                phi_pos[(l, q, r)] = pos
                pos += 1
        if l == arch.n_layers:
            break
        pos += n_ent
        for q in range(n):
            lam_pos[(l, q)] = pos
            pos += 1
    return phi_pos, lam_pos


def _run_gates(gates, arch) -> np.ndarray:
    state = qsim.apply_circuit(qsim.zero_state(arch.n_qubits), gates)
    return np.array([qsim.expectation(state, o) for o in arch.observables])


def parameter_shift_jacobian(params: PolicyParameters, arch: CircuitArchitecture, x_norm,
                             clamp: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Jacobians ``d<H_k>/d lam`` (k, L, n) and ``d<H_k>/d phi`` (k, L+1, n, R).

    Each rotation angle gets ``(f(theta + pi/2) - f(theta - pi/2)) / 2``; the
    scalers ``lam`` follow by the chain rule through ``angle = lam * x``.
    """
    x_norm = np.asarray(x_norm, dtype=np.float64)
    gates = circuit_gates(params, arch, x_norm, clamp)
    phi_pos, lam_pos = _gate_index(arch)
    K = arch.n_observables

    def shifted(pos):
        plus, minus = list(gates), list(gates)
        g = gates[pos]
        plus[pos] = Gate(g.kind, g.targets, g.angle + np.pi / 2)
        minus[pos] = Gate(g.kind, g.targets, g.angle - np.pi / 2)
        return 0.5 * (_run_gates(plus, arch) - _run_gates(minus, arch))

    d_phi = np.zeros((K,) + arch.phi_shape)
    for (l, q, r), pos in phi_pos.items():
        d_phi[:, l, q, r] = shifted(pos)
    d_lam = np.zeros((K,) + arch.lam_shape)
    for (l, q), pos in lam_pos.items():
        raw = params.lam[l, q] * x_norm[q]
        if clamp and abs(raw) > np.pi:
            continue
        d_lam[:, l, q] = shifted(pos) * x_norm[q]
    return d_lam, d_phi


# ---------------------------------------------------------------------------
# action distributions


@dataclass
class ActionDistribution:
    probabilities: np.ndarray | None = None
    mean: np.ndarray | None = None
    std: np.ndarray | None = None

    @property
    def discrete(self) -> bool:
        return self.probabilities is not None

    def log_prob(self, action) -> float:
        if self.discrete:
            return float(np.log(self.probabilities[int(action)]))
        a = np.asarray(action, dtype=np.float64)
        return float(np.sum(gaussian_log_density(a, self.mean, self.std)))

    def entropy(self) -> float:
        if self.discrete:
            p = self.probabilities
            return float(-np.sum(p * np.log(p)))
        return float(np.sum(0.5 * np.log(2 * np.pi * np.e * self.std**2)))

    def sample(self, rng: np.random.Generator):
        if self.discrete:
            return int(rng.choice(len(self.probabilities), p=self.probabilities))
        return self.mean + self.std * rng.standard_normal(self.mean.shape)


def softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def softmax_policy(expectations, nu, beta: float) -> ActionDistribution:
    if beta <= 0:
        raise ValueError("beta must be positive")
    scaled = np.asarray(nu, dtype=np.float64) * np.asarray(expectations, dtype=np.float64)
    return ActionDistribution(probabilities=softmax(beta * scaled))


def gaussian_log_density(a, mean, std):
    return -0.5 * ((a - mean) / std) ** 2 - np.log(std) - 0.5 * np.log(2 * np.pi)


def gaussian_policy(expectations, nu, sigma) -> ActionDistribution:
    sigma = np.broadcast_to(np.asarray(sigma, dtype=np.float64), np.shape(expectations)).copy()
    if np.any(sigma <= 0):
        raise AssertionError("sigma must stay positive")
    mean = np.asarray(nu, dtype=np.float64) * np.asarray(expectations, dtype=np.float64)
    return ActionDistribution(mean=mean, std=sigma)


# ---------------------------------------------------------------------------
# functional single-observation API


def build_and_run(params: PolicyParameters, arch: CircuitArchitecture, observation, clamp: bool = True) -> np.ndarray:
    """Raw expectation ``<H_k>`` of every observable for one normalized observation."""
    return Circuit(arch, clamp).expectations(params, np.asarray(observation)[None, :])[0]


def expectation_gradient(params: PolicyParameters, arch: CircuitArchitecture, observation,
                         method: str = "adjoint", clamp: bool = True) -> tuple[np.ndarray, np.ndarray]:
    """Jacobians of the raw expectations w.r.t. ``lam`` and ``phi``."""
    x = np.asarray(observation, dtype=np.float64)
    if method == "shift":
        return parameter_shift_jacobian(params, arch, x, clamp)
    if method != "adjoint":
        raise ValueError(f"unknown gradient method {method!r}")
    circ = Circuit(arch, clamp)
    K = arch.n_observables
    d_lam = np.zeros((K,) + arch.lam_shape)
    d_phi = np.zeros((K,) + arch.phi_shape)
    for k in range(K):
        w = np.zeros((1, K))
        w[0, k] = 1.0
        _, dl, dp = circ.gradient(params, x[None, :], w)
        d_lam[k], d_phi[k] = dl, dp
    return d_lam, d_phi


def log_prob_gradient(params: PolicyParameters, arch: CircuitArchitecture, observation, action,
                      clamp: bool = True) -> np.ndarray:
    """Flat gradient of ``log pi(action | observation)`` for a softmax VQC."""
    K = arch.n_observables
    if not (isinstance(action, (int, np.integer)) and 0 <= action < K):
        raise ValueError(f"invalid action {action!r} for {K} actions")
    policy = SoftmaxVQCPolicy(arch, params, None, clamp=clamp)
    return policy.score_gradient_normalized(np.asarray(observation, dtype=np.float64)[None, :],
                                            np.array([action]), np.ones(1))


# ---------------------------------------------------------------------------
# policies


class VQCPolicy:
    """Shared plumbing for softmax and Gaussian VQC policies.

    Observations passed to the public methods are raw environment states; they
    are divided by the encoding's state bounds before upload.
    """

    kind = "base"

    def __init__(self, arch: CircuitArchitecture, params: PolicyParameters, encoding: EncodingSpec | None,
                 clamp: bool | None = None):
        if encoding is not None and encoding.n_qubits != arch.n_qubits:
            raise qsim.ConfigurationError("encoding dimension must equal the qubit count")
        self.arch = arch
        self.params = params
        self.encoding = encoding
        if clamp is None:
            clamp = encoding.clamp if encoding is not None else True
        self.circuit = Circuit(arch, clamp)

    def normalize(self, obs) -> np.ndarray:
        obs = np.atleast_2d(np.asarray(obs, dtype=np.float64))
        return obs if self.encoding is None else self.encoding.normalize(obs)

    def raw_expectations(self, obs) -> np.ndarray:
        return self.circuit.expectations(self.params, self.normalize(obs))

    def set_vector(self, v: np.ndarray) -> None:
        self.params = self.params.with_vector(v)

    def _pack(self, d_lam, d_phi, d_nu, d_ls=None) -> np.ndarray:
        parts = [d_lam.reshape(d_lam.shape[: d_lam.ndim - 2] + (-1,)),
                 d_phi.reshape(d_phi.shape[: d_phi.ndim - 3] + (-1,)), d_nu]
        if self.params.log_sigma is not None:
            parts.append(d_ls)
        return np.concatenate(parts, axis=-1)

    # -- persistence -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": CHECKPOINT_FORMAT,
            "version": CHECKPOINT_VERSION,
            "kind": self.kind,
            "architecture": self.arch.to_dict(),
            "encoding": None if self.encoding is None else {
                "state_bounds": list(self.encoding.state_bounds),
                "clamp": self.encoding.clamp,
            },
            "params": self.params.to_dict(),
        }

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=1) + "\n")


class SoftmaxVQCPolicy(VQCPolicy):
    kind = "softmax"

    def logits(self, obs) -> np.ndarray:
        return self.params.beta * self.params.nu * self.raw_expectations(obs)

    def probs(self, obs) -> np.ndarray:
        return softmax(self.logits(obs))

    def distribution(self, obs) -> ActionDistribution:
        return ActionDistribution(probabilities=self.probs(obs)[0])

    def sample(self, obs, rng: np.random.Generator) -> np.ndarray:
        p = self.probs(obs)
        u = rng.random(p.shape[0])
        return np.minimum((np.cumsum(p, axis=1) < u[:, None]).sum(axis=1), p.shape[1] - 1)

    def log_prob(self, obs, actions) -> np.ndarray:
        p = self.probs(obs)
        return np.log(p[np.arange(len(p)), np.asarray(actions, dtype=int)])

    def entropy(self, obs) -> np.ndarray:
        p = self.probs(obs)
        return -np.sum(p * np.log(p), axis=1)

    def score_gradient(self, obs, actions, weights, per_sample: bool = False) -> np.ndarray:
        """``sum_b weights[b] * grad log pi(a_b | s_b)`` as a flat vector."""
        return self.score_gradient_normalized(self.normalize(obs), actions, weights, per_sample)

    def score_gradient_normalized(self, x_norm, actions, weights, per_sample: bool = False) -> np.ndarray:
        actions = np.asarray(actions, dtype=int)
        weights = np.asarray(weights, dtype=np.float64)
        beta, nu = self.params.beta, self.params.nu
        raw = self.circuit.expectations(self.params, x_norm)
        p = softmax(beta * nu * raw)
        onehot = np.zeros_like(p)
        onehot[np.arange(len(actions)), actions] = 1.0
        # d log pi(a|s) / d<O_k>  with <O_k> = nu_k <H_k>
        coef = beta * (onehot - p) * weights[:, None]
        _, d_lam, d_phi = self.circuit.gradient(self.params, x_norm, coef * nu, per_sample)
        d_nu = coef * raw
        if not per_sample:
            d_nu = d_nu.sum(axis=0)
        return self._pack(d_lam, d_phi, d_nu)


class GaussianVQCPolicy(VQCPolicy):
    kind = "gaussian"

    def __init__(self, arch, params, encoding, clamp=None):
        if params.log_sigma is None:
            raise qsim.ConfigurationError("Gaussian policies need log_sigma")
        super().__init__(arch, params, encoding, clamp)

    def mean(self, obs) -> np.ndarray:
        return self.params.nu * self.raw_expectations(obs)

    def distribution(self, obs) -> ActionDistribution:
        return gaussian_policy(self.raw_expectations(obs)[0], self.params.nu, self.params.sigma)

    def sample(self, obs, rng: np.random.Generator) -> np.ndarray:
        mu = self.mean(obs)
        return mu + self.params.sigma * rng.standard_normal(mu.shape)

    def log_prob(self, obs, actions) -> np.ndarray:
        a = np.asarray(actions, dtype=np.float64).reshape(-1, self.arch.n_observables)
        return gaussian_log_density(a, self.mean(obs), self.params.sigma).sum(axis=1)

    def entropy(self, obs) -> np.ndarray:
        n = np.atleast_2d(obs).shape[0]
        return np.full(n, np.sum(0.5 * np.log(2 * np.pi * np.e) + self.params.log_sigma))

    def score_gradient(self, obs, actions, weights, per_sample: bool = False) -> np.ndarray:
        x_norm = self.normalize(obs)
        a = np.asarray(actions, dtype=np.float64).reshape(-1, self.arch.n_observables)
        weights = np.asarray(weights, dtype=np.float64)
        nu, sigma = self.params.nu, self.params.sigma
        raw = self.circuit.expectations(self.params, x_norm)
        z = (a - nu * raw) / sigma
        coef = (z / sigma) * weights[:, None]  # d log N / d mean
        _, d_lam, d_phi = self.circuit.gradient(self.params, x_norm, coef * nu, per_sample)
        d_nu = coef * raw
        d_ls = (z**2 - 1.0) * weights[:, None]
        if not per_sample:
            d_nu, d_ls = d_nu.sum(axis=0), d_ls.sum(axis=0)
        return self._pack(d_lam, d_phi, d_nu, d_ls)


def load_policy(path_or_dict) -> VQCPolicy:
    d = path_or_dict
    if not isinstance(d, dict):
        d = json.loads(Path(d).read_text())
    if d.get("format") != CHECKPOINT_FORMAT:
        raise ValueError("not a VQC policy checkpoint")
    if int(d.get("version", 0)) > CHECKPOINT_VERSION:
        raise ValueError(f"checkpoint version {d['version']} is newer than supported")
    arch = CircuitArchitecture.from_dict(d["architecture"])
    params = PolicyParameters.from_dict(d["params"])
    enc = d.get("encoding")
    encoding = None if enc is None else EncodingSpec(tuple(enc["state_bounds"]), bool(enc.get("clamp", True)))
    cls = GaussianVQCPolicy if d["kind"] == "gaussian" else SoftmaxVQCPolicy
    return cls(arch, params, encoding)
