"""Toy verifiers, prover strategies, post-selection, rewinding, and the verifier."""

import numpy as np
import pytest

from eprverify.channels import choi_state, pinch_phi
from eprverify.kernel import (
    BELL_STATES,
    DensityOperator,
    StateVector,
    layout,
    partial_trace,
    rx_prob,
    tensor_product,
    to_density,
)
from eprverify.linalg import dagger, is_unitary, max_eigpair, operator_norm, proj, tensor
from eprverify.metrics import pure_fidelity_form, trace_distance
from eprverify.protocol import (
    HalfEigenpairError,
    ProtocolRun,
    ProtocolState,
    ProverStrategy,
    accept_operator,
    cheating_proof,
    honest_proof,
    honest_rewinding_instance,
    make_toy_verifier,
    post_selection,
    postsel_success_prob,
    proof_layout,
    rewinding_residual,
    swap_test,
    swap_test_formula,
    symmetrize_and_pinch_fixed_point_distance,
    verifier_marginal_distance,
    verifier_w,
)
from eprverify.rng import stream
from eprverify.sampling import random_density, random_pure, random_unitary

RNG = np.random.default_rng(424242)


# ---------------------------------------------------------------------------
# Toy verifiers and the acceptance operator
# ---------------------------------------------------------------------------

def test_toy_verifier_unitary_and_spectrum():
    for p in (1e-3, 0.5, 0.75, 1.0):
        toy = make_toy_verifier(p)
        assert is_unitary(toy.v)
        lam, vec = max_eigpair(accept_operator(toy))
        assert lam == pytest.approx(p, abs=1e-12)
        assert abs(vec[-1]) == pytest.approx(1.0, abs=1e-9)


def test_toy_verifier_p_one_accepts_witness_surely():
    toy = make_toy_verifier(1.0)
    m = accept_operator(toy)
    assert np.allclose(m, proj(np.array([0.0, 1.0])), atol=1e-12)


def test_toy_verifier_rejects_bad_p():
    with pytest.raises(ValueError):
        make_toy_verifier(0.0)
    with pytest.raises(ValueError):
        make_toy_verifier(1.2)


def test_accept_operator_norm_and_interval():
    for _ in range(10):
        p = float(RNG.uniform(0.05, 1.0))
        pq = int(RNG.integers(1, 3))
        aq = int(RNG.integers(1, 3))
        toy = make_toy_verifier(p, pq, aq)
        m = accept_operator(toy)
        assert operator_norm(m) == pytest.approx(p, abs=1e-9)
        vals = np.linalg.eigvalsh(m)
        assert np.min(vals) >= -1e-12 and np.max(vals) <= 1 + 1e-12


# ---------------------------------------------------------------------------
# Proof construction
# ---------------------------------------------------------------------------

def test_honest_proof_pair_closed_forms():
    # p = 1/2 gives q = 1 and the pair i|psi+>; p = 1 gives q = 1/2.
    # At the q = 1 endpoint the solver's ~1e-16 eigenvalue noise enters the
    # amplitudes as sqrt(1-q), so the comparison tolerance sits at sqrt(eps).
    toy = make_toy_verifier(0.5)
    proof = honest_proof(toy, l=2)
    pair = partial_trace(to_density(proof.state), ["S1", "S1'"])
    assert trace_distance(pair.matrix, proj(1j * BELL_STATES[2])) <= 1e-7
    toy = make_toy_verifier(1.0)
    proof = honest_proof(toy, l=2)
    pair = partial_trace(to_density(proof.state), ["S1", "S1'"])
    expected = (BELL_STATES[0] + 1j * BELL_STATES[2]) / np.sqrt(2)
    assert trace_distance(pair.matrix, proj(expected)) <= 1e-9


def test_honest_proof_requires_yes_instance():
    with pytest.raises(ValueError):
        honest_proof(make_toy_verifier(0.3), l=2)


def test_proof_marginal_is_maximally_mixed():
    toy = make_toy_verifier(0.75)
    for l in (2, 3):
        proof = honest_proof(toy, l)
        assert verifier_marginal_distance(proof) <= 1e-9


def test_strategies_build_and_validate():
    toy = make_toy_verifier(1e-3)
    for strat in (
        ProverStrategy.honest(),
        ProverStrategy.idle_epr(),
        ProverStrategy.choi_product(0.6),
        ProverStrategy.local_unitaries(31),
    ):
        proof = cheating_proof(strat, toy, l=2)
        assert verifier_marginal_distance(proof) <= 1e-9


def test_idle_epr_pairs_are_epr():
    toy = make_toy_verifier(1e-3)
    proof = cheating_proof(ProverStrategy.idle_epr(), toy, l=2)
    pair = partial_trace(to_density(proof.state), ["S2", "S2'"])
    assert trace_distance(pair.matrix, proj(BELL_STATES[0])) <= 1e-12


def test_custom_state_marginal_rejection():
    toy = make_toy_verifier(1e-3)
    lay = proof_layout(1, 2)
    # prover halves entangled correctly but one verifier half forced to |0>
    bad = tensor(
        np.array([0.0, 1.0], dtype=complex),  # P
        np.array([1.0, 0.0, 0.0, 0.0], dtype=complex),  # pair 1 = |00>
        BELL_STATES[0],
    )
    proof = ProtocolState(StateVector(lay, bad), 2)
    with pytest.raises(ValueError):
        cheating_proof(ProverStrategy.custom(proof), toy, l=2)


def test_witness_override_is_used():
    toy = make_toy_verifier(1e-3)
    override = StateVector(layout(("P", 1)), np.array([1.0, 0.0]))
    proof = cheating_proof(ProverStrategy.idle_epr(witness=override), toy, l=2)
    marg = partial_trace(to_density(proof.state), ["P"])
    assert trace_distance(marg.matrix, proj(np.array([1.0, 0.0]))) <= 1e-12


# ---------------------------------------------------------------------------
# SWAP test
# ---------------------------------------------------------------------------

def _product_state(rho, sigma, k):
    left = DensityOperator(layout(("L", k)), rho, validate=False)
    right = DensityOperator(layout(("R", k)), sigma, validate=False)
    return tensor_product(left, right)


def test_swap_test_identical_pure_accepts_surely():
    psi = random_pure(RNG, 2)
    state = _product_state(proj(psi), proj(psi), 1)
    assert swap_test(state, ["L"], ["R"]) == pytest.approx(1.0, abs=1e-12)


def test_swap_test_orthogonal_pure_half():
    state = _product_state(proj(np.array([1.0, 0.0])), proj(np.array([0.0, 1.0])), 1)
    assert swap_test(state, ["L"], ["R"]) == pytest.approx(0.5, abs=1e-12)


def test_swap_test_maximally_mixed_three_quarters():
    state = _product_state(np.eye(2) / 2, np.eye(2) / 2, 1)
    assert swap_test(state, ["L"], ["R"]) == pytest.approx(0.75, abs=1e-12)


def test_swap_test_circuit_matches_product_formula():
    for _ in range(50):
        k = int(RNG.integers(1, 3))
        rho, sigma = random_density(RNG, 2**k), random_density(RNG, 2**k)
        state = _product_state(rho, sigma, k)
        circuit = swap_test(state, ["L"], ["R"])
        assert circuit == pytest.approx((1 + np.trace(rho @ sigma).real) / 2, abs=1e-12)
        assert circuit == pytest.approx(swap_test_formula(state, ["L"], ["R"]), abs=1e-12)


def test_swap_test_on_correlated_joint_state():
    # formula route (1 + Tr(rho S))/2 must match the circuit beyond product inputs
    lay = layout(("L", 1), ("R", 1))
    for _ in range(20):
        dm = DensityOperator(lay, random_density(RNG, 4), validate=False)
        assert swap_test(dm, ["L"], ["R"]) == pytest.approx(
            swap_test_formula(dm, ["L"], ["R"]), abs=1e-12
        )


def test_swap_test_sampled_mode():
    psi = random_pure(RNG, 2)
    state = _product_state(proj(psi), proj(psi), 1)
    assert all(swap_test(state, ["L"], ["R"], rng=stream(1, t)) for t in range(50))


def test_swap_test_dim_mismatch():
    state = tensor_product(
        DensityOperator(layout(("L", 2)), np.eye(4) / 4),
        DensityOperator(layout(("R", 1)), np.eye(2) / 2),
    )
    with pytest.raises(ValueError):
        swap_test(state, ["L"], ["R"])


# ---------------------------------------------------------------------------
# Post-selection
# ---------------------------------------------------------------------------

def _teleport_input(q: float, phi: np.ndarray):
    pair = choi_state(dagger(rx_prob(q)), names=("S2", "S2'"))
    return tensor_product(pair, StateVector(layout(("S1", 1)), phi))


def test_post_selection_choi_pair_lemma():
    # success probability exactly 1/2 and output R(q)†|phi> on S2
    for _ in range(20):
        q = float(RNG.uniform(0, 1))
        phi = random_pure(RNG, 2)
        branches = post_selection(_teleport_input(q, phi))
        success = sum(b.probability for b in branches if b.success)
        assert success == pytest.approx(0.5, abs=1e-12)
        expected = dagger(rx_prob(q)) @ phi
        for b in branches:
            if not b.success or b.state is None:
                continue
            out = partial_trace(to_density(b.state), ["S2"])
            assert pure_fidelity_form(expected, out.matrix) >= 1 - 1e-10


def test_post_selection_identity_pair_teleports_exactly():
    phi = random_pure(RNG, 2)
    branches = post_selection(_teleport_input(0.0, phi))
    for b in branches:
        if b.success and b.state is not None:
            out = partial_trace(to_density(b.state), ["S2"])
            assert trace_distance(out.matrix, proj(phi)) <= 1e-12


def test_post_selection_phi_minus_pair_brute_force():
    # pair phi-, input |0>: every branch 1/4; brute-force amplitude oracle per branch
    pair = StateVector(layout(("S2", 1), ("S2'", 1)), BELL_STATES[1].copy())
    zero = np.array([1.0, 0.0], dtype=complex)
    state = tensor_product(pair, StateVector(layout(("S1", 1)), zero))
    vec = state.amplitudes  # order (S2, S2', S1)
    x = np.array([[0, 1], [1, 0]], dtype=complex)
    labels = {"phi+": BELL_STATES[0], "phi-": BELL_STATES[1],
              "psi+": BELL_STATES[2], "psi-": BELL_STATES[3]}
    branches = {b.label: b for b in post_selection(state)}
    for label, bell in labels.items():
        # project (S2', S1) on the bell vector by explicit amplitude sums
        out = np.zeros(2, dtype=complex)
        for s2 in range(2):
            for s2p in range(2):
                for s1 in range(2):
                    out[s2] += np.conj(bell[2 * s2p + s1]) * vec[4 * s2 + 2 * s2p + s1]
        prob = float(np.vdot(out, out).real)
        assert branches[label].probability == pytest.approx(prob, abs=1e-12)
        assert prob == pytest.approx(0.25, abs=1e-12)
        if branches[label].success:
            corrected = x @ out if label == "psi+" else out
            corrected = corrected / np.linalg.norm(corrected)
            got = partial_trace(to_density(branches[label].state), ["S2"])
            assert trace_distance(got.matrix, proj(corrected)) <= 1e-12


def test_post_selection_sampled_mode():
    q, phi = 0.5, random_pure(RNG, 2)
    outcomes = [post_selection(_teleport_input(q, phi), rng=stream(2, t)) for t in range(200)]
    freq = sum(o.success for o in outcomes) / len(outcomes)
    assert abs(freq - 0.5) <= 5 * np.sqrt(0.25 / 200)


def test_postsel_success_prob_choi_pair_times_anything():
    for _ in range(10):
        q = float(RNG.uniform(0, 1))
        zeta = random_density(RNG, 2)
        pair = choi_state(dagger(rx_prob(q)), names=("S2", "S2'"))
        state = tensor_product(to_density(pair), DensityOperator(layout(("S1", 1)), zeta, validate=False))
        assert postsel_success_prob(state) == pytest.approx(0.5, abs=1e-12)


def test_postsel_success_prob_hadamard_basis_form():
    # product sigma (x) psi succeeds with |a|^2 <+|sigma|+> + |b|^2 <-|sigma|->
    plus = np.array([1.0, 1.0], dtype=complex) / np.sqrt(2)
    minus = np.array([1.0, -1.0], dtype=complex) / np.sqrt(2)
    for _ in range(20):
        sigma = random_density(RNG, 2)
        a, b = random_pure(RNG, 2)
        psi = a * plus + b * minus
        state = tensor_product(
            tensor_product(
                DensityOperator(layout(("S2", 1)), random_density(RNG, 2), validate=False),
                DensityOperator(layout(("S2'", 1)), sigma, validate=False),
            ),
            StateVector(layout(("S1", 1)), psi / np.linalg.norm(psi)),
        )
        got = postsel_success_prob(state)
        plus_w = np.real(np.vdot(plus, sigma @ plus))
        minus_w = np.real(np.vdot(minus, sigma @ minus))
        expected = abs(a) ** 2 * plus_w + abs(b) ** 2 * minus_w
        assert got == pytest.approx(expected, abs=1e-12)


def test_postsel_success_prob_balanced_sigma_gives_half():
    # <+|sigma|+> = <-|sigma|-> = 1/2 forces probability 1/2 for any zeta
    sigma = proj(np.array([1.0, 0.0]))  # |0><0| is Hadamard-balanced
    for _ in range(5):
        zeta = random_density(RNG, 2)
        state = tensor_product(
            tensor_product(
                DensityOperator(layout(("S2", 1)), random_density(RNG, 2), validate=False),
                DensityOperator(layout(("S2'", 1)), sigma, validate=False),
            ),
            DensityOperator(layout(("S1", 1)), zeta, validate=False),
        )
        assert postsel_success_prob(state) == pytest.approx(0.5, abs=1e-12)


# ---------------------------------------------------------------------------
# Rewinding identity
# ---------------------------------------------------------------------------

def test_rewinding_residual_honest_grid():
    for p in np.linspace(0.5, 1.0, 11):
        toy = make_toy_verifier(float(p))
        delta, pi, omega = honest_rewinding_instance(toy)
        assert rewinding_residual(delta, pi, omega) <= 1e-8
        lam, _ = max_eigpair(delta @ pi @ delta)
        assert lam == pytest.approx(0.5, abs=1e-9)


def test_rewinding_two_dim_algebra():
    # delta = |e0><e0| against pi tilted 45 degrees: delta pi delta = (1/2)|e0><e0|
    theta = np.pi / 4
    pi = proj(np.array([np.cos(theta), np.sin(theta)], dtype=complex))
    delta = proj(np.array([1.0, 0.0]))
    omega = np.array([1.0, 0.0], dtype=complex)
    assert rewinding_residual(delta, pi, omega) <= 1e-12


def jordan_half_instance(rng, dim):
    """Random pair of projectors with a planted 45-degree principal angle."""
    assert dim % 2 == 0
    angles = [np.pi / 4] + [float(rng.uniform(0.1, np.pi / 2 - 0.1)) for _ in range(dim // 2 - 1)]
    delta_dirs = []
    pi_dirs = []
    for k, angle in enumerate(angles):
        e_a = np.zeros(dim, dtype=complex)
        e_b = np.zeros(dim, dtype=complex)
        e_a[2 * k] = 1.0
        e_b[2 * k + 1] = 1.0
        delta_dirs.append(e_a)
        pi_dirs.append(np.cos(angle) * e_a + np.sin(angle) * e_b)
    u = random_unitary(rng, dim)
    delta = sum(proj(u @ d) for d in delta_dirs)
    pi = sum(proj(u @ d) for d in pi_dirs)
    omega = u @ delta_dirs[0]
    return delta, pi, omega


def test_rewinding_synthetic_jordan_instances():
    for _ in range(30):
        dim = int(RNG.integers(1, 9)) * 2
        delta, pi, omega = jordan_half_instance(RNG, dim)
        assert rewinding_residual(delta, pi, omega) <= 1e-8


def test_rewinding_precondition_errors():
    delta = proj(np.array([1.0, 0.0]))
    with pytest.raises(ValueError):
        rewinding_residual(np.eye(2) * 0.5, delta, np.array([1.0, 0.0]))
    with pytest.raises(HalfEigenpairError):
        rewinding_residual(np.eye(2), np.eye(2), np.array([1.0, 0.0]))


# ---------------------------------------------------------------------------
# The verifier
# ---------------------------------------------------------------------------

def test_completeness_spot_checks():
    for p in (0.5, 0.75, 1.0):
        toy = make_toy_verifier(p)
        result = verifier_w(honest_proof(toy, l=2), toy)
        assert result.accept_probability == pytest.approx(1.0, abs=1e-9)
        assert result.branches["b0_allzero_reject"] <= 1e-12


def test_branch_masses_sum_to_one():
    toy = make_toy_verifier(1e-3)
    for strat in (ProverStrategy.idle_epr(), ProverStrategy.local_unitaries(3)):
        result = verifier_w(cheating_proof(strat, toy, l=2), toy)
        assert sum(result.branches.values()) == pytest.approx(1.0, abs=1e-9)


def test_idle_epr_exact_accept_is_three_quarters():
    # postselection teleports |0> through an untouched pair; the all-zero
    # measurement then fires with certainty, so accept = 1/2 + 1/4 exactly
    toy = make_toy_verifier(1e-3)
    result = verifier_w(cheating_proof(ProverStrategy.idle_epr(), toy, l=2), toy)
    assert result.accept_probability == pytest.approx(0.75, abs=1e-12)
    assert result.branches["b0_allzero_reject"] == pytest.approx(0.25, abs=1e-12)


def test_choi_product_matches_hand_closed_form():
    # one-control-qubit algebra gives accept = 3/4 + (1 - (1 - 2 p q')^2)/4
    p = 1e-3
    toy = make_toy_verifier(p)
    for qp in (0.0, 0.3, 0.8, 1.0):
        proof = cheating_proof(ProverStrategy.choi_product(qp), toy, l=2)
        result = verifier_w(proof, toy)
        expected = 0.75 + (1 - (1 - 2 * p * qp) ** 2) / 4
        assert result.accept_probability == pytest.approx(expected, abs=1e-12)


def test_asymmetric_custom_state_swap_branch_formula():
    # pair 1 != pair 2 as a product: conditional b=1 reject = (1 - Tr(rho1 rho2))/2
    # with rho1, rho2 the pinched pair states
    toy = make_toy_verifier(1e-3)
    lay = proof_layout(1, 2)
    u1, u2 = random_unitary(RNG, 2), random_unitary(RNG, 2)
    witness = np.array([0.0, 1.0], dtype=complex)
    amps = tensor(witness, choi_state(u1).amplitudes, choi_state(u2).amplitudes)
    proof = ProtocolState(StateVector(lay, amps), 2)
    result = verifier_w(cheating_proof(ProverStrategy.custom(proof), toy, l=2), toy)
    rho1 = pinch_phi(proj(choi_state(u1).amplitudes))
    rho2 = pinch_phi(proj(choi_state(u2).amplitudes))
    expected = (1 - np.trace(rho1 @ rho2).real) / 2
    conditional_reject = result.branches["b1_swap_reject"] * 2
    assert conditional_reject == pytest.approx(expected, abs=1e-9)


def test_step_one_two_fixed_point_for_honest_proof():
    toy = make_toy_verifier(0.75)
    for l in (2, 3):
        proof = honest_proof(toy, l)
        assert symmetrize_and_pinch_fixed_point_distance(proof) <= 1e-10


def test_sampled_runs_deterministic_and_consistent():
    toy = make_toy_verifier(1e-3)
    proof = cheating_proof(ProverStrategy.idle_epr(), toy, l=2)
    run = ProtocolRun(proof, toy)
    a = [run.sample(stream(9, t)) for t in range(500)]
    b = [run.sample(stream(9, t)) for t in range(500)]
    assert a == b
    freq = sum(o.verdict == "accept" for o in a) / len(a)
    assert abs(freq - 0.75) <= 5 * np.sqrt(0.75 * 0.25 / 500)


def test_run_outcome_fields_consistent():
    toy = make_toy_verifier(0.5)
    proof = honest_proof(toy, l=3)
    run = ProtocolRun(proof, toy)
    for t in range(200):
        out = run.sample(stream(11, t))
        assert out.pair[0] != out.pair[1]
        assert 1 <= out.pair[0] <= 3 and 1 <= out.pair[1] <= 3
        if out.branch == "b1_swap":
            assert out.coin == 1 and out.bell is None
        else:
            assert out.coin == 0 and out.bell is not None
        if out.branch == "b0_measured":
            assert out.bits is not None
            assert (out.verdict == "reject") == (out.bits == "00")
        if out.branch == "b0_postsel_fail":
            assert out.verdict == "accept"


def test_verifier_rejects_bad_inputs():
    toy = make_toy_verifier(0.75)
    proof = honest_proof(toy, l=2)
    with pytest.raises(ValueError):
        verifier_w(proof, toy, mode="other")
    with pytest.raises(ValueError):
        verifier_w(proof, toy, mode="sampled")  # missing rng
    other = make_toy_verifier(0.75, p_qubits=2)
    with pytest.raises(ValueError):
        verifier_w(proof, other)
    with pytest.raises(ValueError):
        ProtocolState(proof.state, 1)


def test_two_qubit_register_toys():
    toy = make_toy_verifier(0.7, p_qubits=2, a_qubits=2)
    result = verifier_w(honest_proof(toy, l=2), toy)
    assert result.accept_probability == pytest.approx(1.0, abs=1e-9)


def test_four_pair_runs():
    # the supported upper end of the pair count
    toy = make_toy_verifier(0.75)
    result = verifier_w(honest_proof(toy, l=4), toy)
    assert result.accept_probability == pytest.approx(1.0, abs=1e-9)
    cheat = verifier_w(cheating_proof(ProverStrategy.local_unitaries(3), toy, l=4), toy)
    assert sum(cheat.branches.values()) == pytest.approx(1.0, abs=1e-9)
