"""Independent reference implementations used only by the tests.

These rebuild quantities from their definitions with explicit Kronecker
products and plain loops, sharing no code with the package kernels.
"""

import numpy as np

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
PAULI = {"I": I2, "X": X, "Y": Y, "Z": Z}


def rot(axis, theta):
    """exp(-i theta P / 2) by the matrix exponential of a Pauli (P^2 = I)."""
    p = PAULI[axis]
    return np.cos(theta / 2) * I2 - 1j * np.sin(theta / 2) * p


def embed1(u, q, n):
    """Single-qubit operator on qubit q of n, qubit 0 leftmost in the kron."""
    out = np.array([[1.0 + 0j]])
    for k in range(n):
        out = np.kron(out, u if k == q else I2)
    return out


def cnot_dense(c, t, n):
    dim = 2**n
    m = np.zeros((dim, dim), dtype=complex)
    for i in range(dim):
        bits = [(i >> (n - 1 - k)) & 1 for k in range(n)]
        if bits[c]:
            bits[t] ^= 1
        j = sum(b << (n - 1 - k) for k, b in enumerate(bits))
        m[j, i] = 1
    return m


def cz_dense(a, b, n):
    dim = 2**n
    d = np.ones(dim, dtype=complex)
    for i in range(dim):
        if (i >> (n - 1 - a)) & 1 and (i >> (n - 1 - b)) & 1:
            d[i] = -1
    return np.diag(d)


def gate_dense(kind, targets, angle, n):
    kind = kind.upper()
    if kind in ("RX", "RY", "RZ"):
        return embed1(rot(kind[1], angle), targets[0], n)
    if kind in ("X", "Y", "Z"):
        return embed1(PAULI[kind], targets[0], n)
    if kind == "H":
        return embed1(H, targets[0], n)
    if kind == "CNOT":
        return cnot_dense(targets[0], targets[1], n)
    if kind == "CZ":
        return cz_dense(targets[0], targets[1], n)
    raise ValueError(kind)


def pauli_string_dense(paulis, n):
    """paulis: dict qubit -> 'X'|'Y'|'Z'."""
    out = np.array([[1.0 + 0j]])
    for k in range(n):
        out = np.kron(out, PAULI[paulis.get(k, "I")])
    return out


def z_expectation_by_bits(amps, q, n):
    """sum over basis states of (+1 if bit q is 0 else -1) |amp|^2."""
    total = 0.0
    for i, a in enumerate(amps):
        sign = -1.0 if (i >> (n - 1 - q)) & 1 else 1.0
        total += sign * abs(a) ** 2
    return total


def vqc_dense_expectations(arch, params, x_norm, clamp=True):
    """Brute-force circuit: full 2^n x 2^n matrices for every gate."""
    n = arch.n_qubits
    psi = np.zeros(2**n, dtype=complex)
    psi[0] = 1

    def variational(layer):
        nonlocal psi
        for q in range(n):
            for r, axis in enumerate(arch.rotations):
                psi = embed1(rot(axis, params.phi[layer, q, r]), q, n) @ psi

    for layer in range(arch.n_layers):
        variational(layer)
        for a, b in arch.entangler_pairs():
            psi = (cnot_dense(a, b, n) if arch.entangler == "cnot" else cz_dense(a, b, n)) @ psi
        ang = params.lam[layer] * x_norm
        if clamp:
            ang = np.clip(ang, -np.pi, np.pi)
        for q in range(n):
            psi = embed1(rot("Y", ang[q]), q, n) @ psi
    variational(arch.n_layers)
    out = []
    for obs in arch.observables:
        m = np.zeros((2**n, 2**n), dtype=complex)
        for coef, paulis in obs.terms:
            m += coef * pauli_string_dense(dict(paulis), n)
        out.append(float(np.real(np.conj(psi) @ m @ psi)))
    return np.array(out)


def central_difference(f, x, h=1e-5):
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e.flat[i] = h
        g.flat[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g
