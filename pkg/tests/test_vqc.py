import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qil import vqc
from qil.vqc import (Circuit, CircuitArchitecture, EncodingSpec, GaussianVQCPolicy, PolicyParameters,
                     SoftmaxVQCPolicy)

from oracles import central_difference, rot, vqc_dense_expectations, Z


def random_params(arch, rng, gaussian=False, lam_scale=1.0):
    p = PolicyParameters.initial(arch, rng, beta=float(rng.uniform(0.5, 2.0)), gaussian=gaussian)
    p.lam = rng.normal(scale=lam_scale, size=arch.lam_shape)
    p.nu = rng.normal(size=arch.n_observables)
    if gaussian:
        p.log_sigma = rng.normal(scale=0.3, size=arch.n_observables)
    return p


def softmax_policy_from(arch, params):
    return SoftmaxVQCPolicy(arch, params, None)


# -- encoding ---------------------------------------------------------------


def test_zero_observation_gives_zero_angles():
    spec = EncodingSpec((2.4, 2.5, 0.21, 2.5))
    angles = vqc.encode(np.zeros(4), spec, np.array([0.3, -2.0, 5.0, 1.0]))
    assert np.array_equal(angles, np.zeros(4))
    assert np.allclose([np.cos(angles[0]), np.sin(angles[0])], [1.0, 0.0])


def test_cartpole_bounds_map_to_unit_angles():
    bounds = (2.4, 2.5, 0.21, 2.5)
    angles = vqc.encode(np.array(bounds), EncodingSpec(bounds), np.ones(4))
    assert np.allclose(angles, 1.0, atol=1e-15)


def test_zero_lambda_collapses_encoding():
    rng = np.random.default_rng(0)
    angles = vqc.encode(rng.normal(size=4) * 10, EncodingSpec((1, 1, 1, 1)), np.zeros(4))
    assert np.array_equal(angles, np.zeros(4))


def test_encoding_rejects_bad_input():
    with pytest.raises(ValueError):
        EncodingSpec((1.0, 0.0))
    with pytest.raises(ValueError):
        EncodingSpec((1.0, 1.0)).normalize([1.0, np.nan])
    with pytest.raises(ValueError):
        EncodingSpec((1.0, 1.0)).normalize([1.0, 2.0, 3.0])


# -- circuit ----------------------------------------------------------------


def test_zero_parameter_circuit_is_identity():
    arch = CircuitArchitecture(3, 1, ("Z0", "Z1"))
    params = PolicyParameters(np.zeros(arch.lam_shape), np.zeros(arch.phi_shape), np.ones(2))
    x = np.array([[0.4, -0.9, 0.2]])
    assert np.allclose(Circuit(arch).expectations(params, x), [[1.0, 1.0]], atol=1e-14)


def test_cartpole_parity_observables_are_negatives():
    arch = CircuitArchitecture(4, 4, ("Z0Z1Z2Z3", "-Z0Z1Z2Z3"))
    rng = np.random.default_rng(1)
    params = random_params(arch, rng)
    e = Circuit(arch).expectations(params, rng.uniform(-1, 1, size=(50, 4)))
    assert np.max(np.abs(e[:, 0] + e[:, 1])) < 1e-14


@pytest.mark.parametrize("n,layers,obs,ent,rot_pattern", [
    (1, 2, ("Z0", "-Z0"), "cnot", ("X", "Y", "Z")),
    (2, 3, ("Z0", "Z1"), "cnot", ("X", "Y", "Z")),
    (3, 2, ("Z0", "Z0Z1", "Z1"), "cnot", ("Y", "Z")),
    (4, 2, ("Z0Z1Z2Z3", "X0Y1"), "cz", ("X", "Y", "Z")),
    (2, 1, ("0.5*Z0 - 2*X1",), "cz", ("Z", "X")),
])
def test_expectations_match_dense_matrix_circuit(n, layers, obs, ent, rot_pattern):
    arch = CircuitArchitecture(n, layers, obs, ent, rot_pattern)
    rng = np.random.default_rng(n * 10 + layers)
    for _ in range(5):
        params = random_params(arch, rng, lam_scale=2.0)
        x = rng.uniform(-2, 2, size=n)
        got = Circuit(arch).expectations(params, x[None, :])[0]
        assert np.max(np.abs(got - vqc_dense_expectations(arch, params, x))) < 1e-10


def test_batch_rows_are_independent():
    arch = CircuitArchitecture(3, 2, ("Z0", "Z1", "Z2"))
    rng = np.random.default_rng(2)
    params = random_params(arch, rng)
    x = rng.uniform(-1, 1, size=(7, 3))
    batch = Circuit(arch).expectations(params, x)
    for b in range(7):
        assert np.allclose(batch[b], vqc.build_and_run(params, arch, x[b]), atol=1e-13)


def test_parameter_count_for_cartpole_layout():
    arch = CircuitArchitecture(4, 4, ("Z0Z1Z2Z3", "-Z0Z1Z2Z3"))
    p = PolicyParameters.initial(arch, np.random.default_rng(0))
    assert p.size == 4 * 4 + 5 * 4 * 3 + 2


def test_parameter_vector_round_trip():
    arch = CircuitArchitecture(2, 2, ("Z0",))
    rng = np.random.default_rng(3)
    p = random_params(arch, rng, gaussian=True)
    q = p.with_vector(p.vector())
    assert np.array_equal(q.vector(), p.vector()) and q.beta == p.beta
    sl = p.group_slices()
    assert list(sl) == ["lam", "phi", "nu", "log_sigma"]
    with pytest.raises(ValueError):
        p.with_vector(np.zeros(p.size + 1))


# -- distributions ----------------------------------------------------------


def test_equal_scaled_expectations_give_uniform():
    d = vqc.softmax_policy([0.3, 0.3, 0.3], [1.0, 1.0, 1.0], 1.7)
    assert np.allclose(d.probabilities, 1 / 3)


def test_two_action_softmax_values():
    d = vqc.softmax_policy([1.0, -1.0], [1.0, 1.0], 1.0)
    e = np.e
    assert np.allclose(d.probabilities, [e / (e + 1 / e), (1 / e) / (e + 1 / e)], atol=1e-12)
    assert np.allclose(d.probabilities, [0.8808, 0.1192], atol=1e-4)


def test_entropy_decreases_with_beta():
    rng = np.random.default_rng(4)
    for _ in range(50):
        e = rng.uniform(-1, 1, size=3)
        nu = rng.normal(size=3)
        ents = [vqc.softmax_policy(e, nu, b).entropy() for b in (0.5, 1.0, 1.2)]
        assert ents[0] >= ents[1] >= ents[2]
    e = np.array([0.5, -0.2, 0.1])
    ents = [vqc.softmax_policy(e, np.ones(3), b).entropy() for b in (0.5, 1.0, 1.2)]
    assert ents[0] > ents[1] > ents[2]


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=2, max_size=6), st.floats(0.01, 50.0), st.integers(0, 2**31))
def test_softmax_sums_to_one(expectations, beta, seed):
    nu = np.random.default_rng(seed).normal(scale=3, size=len(expectations))
    p = vqc.softmax_policy(expectations, nu, beta).probabilities
    assert abs(p.sum() - 1.0) < 1e-10 and np.all(p >= 0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=2, max_size=5), st.floats(-0.5, 0.5), st.floats(0.1, 5.0))
def test_argmax_invariant_under_uniform_shift(expectations, shift, beta):
    e = np.array(expectations)
    nu = np.full(len(e), 1.3)
    a = np.argmax(vqc.softmax_policy(e, nu, beta).probabilities)
    b = np.argmax(vqc.softmax_policy(e + shift, nu, beta).probabilities)
    assert vqc.softmax_policy(e, nu, beta).probabilities[a] == pytest.approx(
        vqc.softmax_policy(e + shift, nu, beta).probabilities[b], rel=1e-9)


def test_gaussian_log_density_standard_normal():
    d = vqc.gaussian_policy([0.0], [1.0], 1.0)
    assert d.log_prob([0.0]) == pytest.approx(-0.5 * np.log(2 * np.pi), abs=1e-15)


def test_gaussian_sample_tiny_sigma_is_mean():
    d = vqc.gaussian_policy([0.4], [1.5], 1e-8)
    a = d.sample(np.random.default_rng(0))
    assert abs(a[0] - 0.6) < 1e-6


def test_gaussian_log_density_mean_derivative():
    for a, mu, s in [(0.3, -0.2, 0.7), (1.0, 1.0, 0.1), (-2.0, 0.5, 2.0)]:
        fd = central_difference(lambda m: vqc.gaussian_log_density(a, m[0], s), np.array([mu]), 1e-5)[0]
        assert fd == pytest.approx((a - mu) / s**2, abs=1e-6)


# -- gradients --------------------------------------------------------------


def test_single_qubit_ry_gradient_is_minus_sine():
    # phi rotations Y only; lam x = 0, so the circuit is RY(phi0) then RY(phi1)
    arch = CircuitArchitecture(1, 1, ("Z0",), rotations=("Y",))
    for theta in (0.3, np.pi / 2, 2.0):
        params = PolicyParameters(np.ones((1, 1)), np.array([[[theta]], [[0.0]]]), np.ones(1))
        _, d_phi = vqc.expectation_gradient(params, arch, np.zeros(1))
        assert d_phi[0, 0, 0, 0] == pytest.approx(-np.sin(theta), abs=1e-12)
        _, d_phi_s = vqc.expectation_gradient(params, arch, np.zeros(1), method="shift")
        assert d_phi_s[0, 0, 0, 0] == pytest.approx(-np.sin(theta), abs=1e-12)
    params = PolicyParameters(np.ones((1, 1)), np.array([[[np.pi / 2]], [[0.0]]]), np.ones(1))
    assert vqc.expectation_gradient(params, arch, np.zeros(1))[1][0, 0, 0, 0] == pytest.approx(-1.0)


def test_shift_rule_conventions_agree():
    # exp(-i t Y) with shift pi/4 equals the half-angle rule at 2t with shift pi/2, times 2
    def full(t):
        u = np.cos(t) * np.eye(2) - 1j * np.sin(t) * np.array([[0, -1j], [1j, 0]])
        psi = u @ np.array([1, 0])
        return float(np.real(psi.conj() @ Z @ psi))

    def half(t):
        psi = rot("Y", t) @ np.array([1, 0])
        return float(np.real(psi.conj() @ Z @ psi))

    for t in np.linspace(-2, 2, 9):
        quarter = full(t + np.pi / 4) - full(t - np.pi / 4)
        halfrule = 2 * 0.5 * (half(2 * t + np.pi / 2) - half(2 * t - np.pi / 2))
        assert quarter == pytest.approx(halfrule, abs=1e-12)
        assert quarter == pytest.approx(-2 * np.sin(2 * t), abs=1e-12)


@pytest.mark.parametrize("ent", ["cnot", "cz"])
def test_parameter_shift_equals_adjoint_on_four_qubits(ent):
    arch = CircuitArchitecture(4, 3, ("Z0Z1", "Z2", "-Z3"), ent)
    rng = np.random.default_rng(5)
    for _ in range(3):
        params = random_params(arch, rng)
        x = rng.uniform(-1, 1, size=4)
        al, ap = vqc.expectation_gradient(params, arch, x, "adjoint")
        sl, sp = vqc.expectation_gradient(params, arch, x, "shift")
        assert max(np.max(np.abs(al - sl)), np.max(np.abs(ap - sp))) < 1e-8


def test_parameter_shift_matches_finite_differences():
    arch = CircuitArchitecture(2, 2, ("Z0", "X0Z1"))
    rng = np.random.default_rng(6)
    params = random_params(arch, rng)
    x = rng.uniform(-1, 1, size=2)
    _, d_phi = vqc.expectation_gradient(params, arch, x, "shift")
    d_lam, _ = vqc.expectation_gradient(params, arch, x, "shift")

    def f_phi(v):
        p = params.copy()
        p.phi = v.reshape(arch.phi_shape)
        return vqc.build_and_run(p, arch, x)

    def f_lam(v):
        p = params.copy()
        p.lam = v.reshape(arch.lam_shape)
        return vqc.build_and_run(p, arch, x)

    for k in range(2):
        fd_phi = central_difference(lambda v: f_phi(v)[k], params.phi.ravel())
        fd_lam = central_difference(lambda v: f_lam(v)[k], params.lam.ravel())
        assert np.max(np.abs(fd_phi - d_phi[k].ravel())) < 1e-5
        assert np.max(np.abs(fd_lam - d_lam[k].ravel())) < 1e-5


def test_zero_lambda_and_zero_input_gives_zero_lambda_gradient():
    arch = CircuitArchitecture(3, 2, ("Z0", "Z1"))
    rng = np.random.default_rng(7)
    params = random_params(arch, rng)
    params.lam[1, 2] = 0.0
    x = np.array([0.3, -0.6, 0.0])
    d_lam, _ = vqc.expectation_gradient(params, arch, x)
    assert np.all(d_lam[:, :, 2] == 0.0)


def test_identical_observables_give_zero_circuit_gradient():
    # one nu per action: the circuit angles get no gradient, the two nu entries
    # get equal and opposite ones, so a frozen nu keeps the policy uniform
    arch = CircuitArchitecture(2, 2, ("Z0Z1", "Z0Z1"))
    rng = np.random.default_rng(8)
    params = random_params(arch, rng)
    params.nu = np.array([0.7, 0.7])
    pol = softmax_policy_from(arch, params)
    x = rng.uniform(-1, 1, size=(5, 2))
    assert np.allclose(pol.probs(x), 0.5)
    g = pol.score_gradient(x, rng.integers(0, 2, size=5), np.ones(5))
    sl = params.group_slices()
    assert np.max(np.abs(g[sl["lam"]])) < 1e-14 and np.max(np.abs(g[sl["phi"]])) < 1e-14
    assert abs(g[sl["nu"]].sum()) < 1e-14


def flat_log_prob(arch, params, x, a):
    def f(v):
        return softmax_policy_from(arch, params.with_vector(v)).log_prob(x[None, :], [a])[0]
    return f


def test_log_prob_gradient_matches_finite_differences():
    arch = CircuitArchitecture(2, 2, ("Z0", "Z1"))
    rng = np.random.default_rng(9)
    for _ in range(5):
        params = random_params(arch, rng)
        x = rng.uniform(-1, 1, size=2)
        a = int(rng.integers(2))
        g = vqc.log_prob_gradient(params, arch, x, a)
        fd = central_difference(flat_log_prob(arch, params, x, a), params.vector())
        assert np.max(np.abs(g - fd)) < 1e-5


def test_gaussian_score_matches_finite_differences():
    arch = CircuitArchitecture(2, 2, ("Z0",))
    rng = np.random.default_rng(10)
    params = random_params(arch, rng, gaussian=True)
    pol = GaussianVQCPolicy(arch, params, EncodingSpec((1.0, 2.0)))
    s = rng.uniform(-1, 1, size=(1, 2))
    a = np.array([[0.3]])

    def f(v):
        return GaussianVQCPolicy(arch, params.with_vector(v), pol.encoding).log_prob(s, a)[0]

    g = pol.score_gradient(s, a, np.ones(1))
    assert np.max(np.abs(g - central_difference(f, params.vector()))) < 1e-5


def test_score_function_identity():
    rng = np.random.default_rng(11)
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(1, 4))
        k = int(rng.integers(2, 4))
        obs = [f"Z{int(rng.integers(n))}" if rng.random() < 0.5 else f"X{int(rng.integers(n))}" for _ in range(k)]
        arch = CircuitArchitecture(n, int(rng.integers(1, 3)), tuple(obs))
        params = random_params(arch, rng)
        pol = softmax_policy_from(arch, params)
        x = rng.uniform(-1, 1, size=(1, n))
        p = pol.probs(x)[0]
        total = sum(p[a] * pol.score_gradient(x, [a], np.ones(1)) for a in range(k))
        worst = max(worst, np.max(np.abs(total)))
    assert worst < 1e-8


def test_per_sample_gradients_sum_to_total():
    arch = CircuitArchitecture(3, 2, ("Z0", "Z1", "Z2"))
    rng = np.random.default_rng(12)
    pol = softmax_policy_from(arch, random_params(arch, rng))
    x = rng.uniform(-1, 1, size=(6, 3))
    a = rng.integers(0, 3, size=6)
    w = rng.normal(size=6)
    per = pol.score_gradient(x, a, w, per_sample=True)
    assert per.shape == (6, pol.params.size)
    assert np.allclose(per.sum(axis=0), pol.score_gradient(x, a, w), atol=1e-12)


def test_log_prob_gradient_rejects_bad_action():
    arch = CircuitArchitecture(2, 1, ("Z0", "Z1"))
    params = PolicyParameters.initial(arch, np.random.default_rng(0))
    with pytest.raises(ValueError):
        vqc.log_prob_gradient(params, arch, np.zeros(2), 2)


# -- persistence ------------------------------------------------------------


@pytest.mark.parametrize("gaussian", [False, True])
def test_policy_checkpoint_round_trip(tmp_path, gaussian):
    arch = CircuitArchitecture(2, 2, ("Z0",) if gaussian else ("Z0", "Z1"))
    rng = np.random.default_rng(13)
    params = random_params(arch, rng, gaussian=gaussian)
    cls = GaussianVQCPolicy if gaussian else SoftmaxVQCPolicy
    pol = cls(arch, params, EncodingSpec((2.0, 3.0)))
    pol.save(tmp_path / "p.json")
    back = vqc.load_policy(tmp_path / "p.json")
    assert type(back) is cls
    assert np.array_equal(back.params.vector(), pol.params.vector())
    x = rng.uniform(-2, 2, size=(4, 2))
    assert np.array_equal(back.raw_expectations(x), pol.raw_expectations(x))
    d = json.loads((tmp_path / "p.json").read_text())
    d["version"] = 999
    with pytest.raises(ValueError):
        vqc.load_policy(d)
