"""The verification protocol: toy verifiers, prover strategies, SWAP test,
teleportation-based post-selection, the rewinding identity, and the two-coin
verifier circuit that ties them together.

Proof states live on the canonical layout (P, S1, S1', ..., Sl, Sl'): P holds
the witness, each (Si, Si') is an EPR pair the prover may have acted on through
the Si half only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng as rngmod
from .channels import apply_pinch, bell_subspaces, choi_state
from .kernel import (
    RegisterLayout,
    State,
    StateVector,
    apply_unitary,
    bell_measurement,
    bell_to_computational,
    layout,
    measure,
    partial_trace,
    rx_prob,
    select_ordered_pair,
    standard_basis_measurement,
    symmetrize_pairs,
    tensor_product,
    to_density,
    zero_state,
    HADAMARD,
    PAULI_X,
)
from .linalg import (
    dagger,
    embed_unitary,
    is_projector,
    max_eigpair,
    proj,
    tensor,
)
from .metrics import trace_distance
from .sampling import random_unitary

MARGINAL_TOL = 1e-9
HALF_EIG_TOL = 1e-9

BRANCH_KEYS = (
    "b0_postsel_fail",
    "b0_allzero_reject",
    "b0_measured_accept",
    "b1_swap_accept",
    "b1_swap_reject",
)


class HalfEigenpairError(ValueError):
    """The supplied vector is not a 1/2-eigenvector of delta pi delta."""


# ---------------------------------------------------------------------------
# Toy verifiers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ToyVerifier:
    """Verifier unitary on (P, A) with an analytically known acceptance maximum.

    The acceptance qubit is the first (most significant) qubit of A; the
    verifier accepts when it measures to 1.
    """

    v: np.ndarray
    p_qubits: int
    a_qubits: int
    acc_projector: np.ndarray
    target_p: float


def make_toy_verifier(p: float, p_qubits: int = 1, a_qubits: int = 1) -> ToyVerifier:
    """Controlled rotation driving the acceptance qubit to 1 with probability p.

    On control P = |1...1> the acceptance qubit is rotated by theta with
    sin^2(theta) = p; every other P basis state is left alone, so the
    acceptance operator has top eigenvalue p (witness |1...1>) and all other
    eigenvalues 0.
    """
    if not 0.0 < p <= 1.0:
        raise ValueError(f"acceptance target p must be in (0, 1], got {p}")
    if p_qubits < 1 or a_qubits < 1:
        raise ValueError("register sizes must be >= 1")
    dp, da = 2**p_qubits, 2**a_qubits
    theta = np.arcsin(np.sqrt(p))
    g = np.array(
        [[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]], dtype=complex
    )
    rotate_acc = tensor(g, np.eye(da // 2)) if a_qubits > 1 else g
    v = np.zeros((dp * da, dp * da), dtype=complex)
    for x in range(dp):
        block = rotate_acc if x == dp - 1 else np.eye(da)
        v[x * da:(x + 1) * da, x * da:(x + 1) * da] = block
    acc = embed_unitary(proj(np.array([0.0, 1.0])), p_qubits + a_qubits, [p_qubits])
    toy = ToyVerifier(v, p_qubits, a_qubits, acc, float(p))
    top, _ = max_eigpair(accept_operator(toy))
    if abs(top - p) > 1e-9:
        raise ValueError(f"construction drifted: max acceptance {top} vs target {p}")
    return toy


def accept_operator(toy: ToyVerifier) -> np.ndarray:
    """M = (I (x) <0|) V† Pi_acc V (I (x) |0>): acceptance operator on P alone."""
    da = 2**toy.a_qubits
    cols = [x * da for x in range(2**toy.p_qubits)]
    v_from_zero = toy.v[:, cols]
    return dagger(v_from_zero) @ toy.acc_projector @ v_from_zero


def best_witness(toy: ToyVerifier) -> tuple[float, np.ndarray]:
    """Maximum acceptance probability and an optimal witness vector on P."""
    return max_eigpair(accept_operator(toy))


# ---------------------------------------------------------------------------
# Proof states
# ---------------------------------------------------------------------------

def pair_names(i: int) -> tuple[str, str]:
    return f"S{i}", f"S{i}'"


def proof_layout(p_qubits: int, l: int) -> RegisterLayout:
    regs: list[tuple[str, int]] = [("P", p_qubits)]
    for i in range(1, l + 1):
        regs.extend((name, 1) for name in pair_names(i))
    return RegisterLayout(tuple(regs))


@dataclass(frozen=True)
class ProtocolState:
    """Joint prover/verifier state over (P, S1, S1', ..., Sl, Sl')."""

    state: State
    l: int

    def __post_init__(self) -> None:
        if self.l < 2:
            raise ValueError("protocol needs at least 2 shared pairs")
        expected = proof_layout(self.state.layout.size("P"), self.l)
        if self.state.layout.registers != expected.registers:
            raise ValueError(
                f"layout {self.state.layout.registers} does not match the canonical "
                f"proof layout {expected.registers}"
            )

    @property
    def pairs(self) -> list[tuple[str, str]]:
        return [pair_names(i) for i in range(1, self.l + 1)]


def verifier_marginal_distance(proof: ProtocolState) -> float:
    """Trace distance of the (S1', ..., Sl') marginal from the maximally mixed state."""
    primed = [pair_names(i)[1] for i in range(1, proof.l + 1)]
    marg = partial_trace(to_density(proof.state), primed)
    d = marg.layout.dim
    return trace_distance(marg.matrix, np.eye(d) / d)


def symmetrize_and_pinch_fixed_point_distance(proof: ProtocolState) -> float:
    """How far the verifier's first two steps move the proof state.

    For an exchangeable proof whose pairs already live in the kept Bell
    subspaces (the honest case), symmetrizing and pinching leave its two-pair
    restriction untouched and this distance is ~0.
    """
    dm = to_density(proof.state)
    sym = symmetrize_pairs(dm, proof.pairs)
    pinched = apply_pinch(apply_pinch(sym, pair_names(1)), pair_names(2))
    reference = partial_trace(dm, ["P", *pair_names(1), *pair_names(2)])
    return trace_distance(pinched.matrix, reference.matrix)


def _clamped_q(p_x: float) -> float:
    return float(min(max(1.0 / (2.0 * p_x), 0.5), 1.0))


def _choi_pair_proof(toy: ToyVerifier, l: int, q: float, witness: np.ndarray) -> ProtocolState:
    lay = proof_layout(toy.p_qubits, l)
    amps = witness
    pair = choi_state(dagger(rx_prob(q))).amplitudes
    for _ in range(l):
        amps = tensor(amps, pair)
    return ProtocolState(StateVector(lay, amps), l)


def honest_proof(toy: ToyVerifier, l: int = 2) -> ProtocolState:
    """Optimal witness in P and the matching rotated EPR pair in every slot.

    Only defined in the yes-instance regime (maximum acceptance >= 1/2), where
    q = 1/(2 p_x) lands in [1/2, 1].
    """
    p_x, witness = best_witness(toy)
    if p_x < 0.5 - 1e-12:
        raise ValueError(f"honest proof needs max acceptance >= 1/2, got {p_x}")
    proof = _choi_pair_proof(toy, l, _clamped_q(p_x), witness)
    dist = verifier_marginal_distance(proof)
    if dist > MARGINAL_TOL:
        raise ValueError(f"shared-pair marginal is off by trace distance {dist:.3e}")
    return proof


@dataclass(frozen=True)
class ProverStrategy:
    """Recipe for how the proof state is produced.

    Kinds: honest (best witness, matched pairs, q clamped into [1/2, 1]),
    choi_product (honest structure with a chosen q), idle_epr (untouched
    pairs), local_unitaries (seeded random unitaries on P and each prover
    half), custom (explicit state).
    """

    kind: str
    q: float | None = None
    seed: int | None = None
    state: ProtocolState | None = None
    witness_override: StateVector | None = None

    @classmethod
    def honest(cls) -> "ProverStrategy":
        return cls(kind="honest")

    @classmethod
    def choi_product(cls, q: float, witness: StateVector | None = None) -> "ProverStrategy":
        return cls(kind="choi_product", q=q, witness_override=witness)

    @classmethod
    def idle_epr(cls, witness: StateVector | None = None) -> "ProverStrategy":
        return cls(kind="idle_epr", witness_override=witness)

    @classmethod
    def local_unitaries(cls, seed: int, witness: StateVector | None = None) -> "ProverStrategy":
        return cls(kind="local_unitaries", seed=seed, witness_override=witness)

    @classmethod
    def custom(cls, state: ProtocolState) -> "ProverStrategy":
        return cls(kind="custom", state=state)


def _witness_vector(strategy: ProverStrategy, toy: ToyVerifier) -> np.ndarray:
    if strategy.witness_override is not None:
        override = strategy.witness_override
        if override.layout.dim != 2**toy.p_qubits:
            raise ValueError("witness override does not match the P register size")
        return override.amplitudes
    return best_witness(toy)[1]


def cheating_proof(strategy: ProverStrategy, toy: ToyVerifier, l: int = 2) -> ProtocolState:
    """Build a proof state from a strategy and check the shared-pair marginal.

    Whatever the prover does to P and the Si halves, the (S1', ..., Sl')
    marginal must stay maximally mixed; a custom state violating that is
    rejected here.
    """
    if strategy.kind == "custom":
        if strategy.state is None:
            raise ValueError("custom strategy needs an explicit state")
        proof = strategy.state
        if proof.l != l:
            raise ValueError(f"custom state has l={proof.l}, expected {l}")
    elif strategy.kind == "honest":
        p_x, _ = best_witness(toy)
        proof = _choi_pair_proof(toy, l, _clamped_q(p_x), _witness_vector(strategy, toy))
    elif strategy.kind == "choi_product":
        if strategy.q is None or not 0.0 <= strategy.q <= 1.0:
            raise ValueError(f"choi_product needs q in [0, 1], got {strategy.q}")
        proof = _choi_pair_proof(toy, l, strategy.q, _witness_vector(strategy, toy))
    elif strategy.kind == "idle_epr":
        proof = _choi_pair_proof(toy, l, 0.0, _witness_vector(strategy, toy))
    elif strategy.kind == "local_unitaries":
        if strategy.seed is None:
            raise ValueError("local_unitaries needs a seed")
        lay = proof_layout(toy.p_qubits, l)
        amps = _witness_vector(strategy, toy)
        epr = choi_state(np.eye(2)).amplitudes
        for _ in range(l):
            amps = tensor(amps, epr)
        sv = StateVector(lay, amps)
        sv = apply_unitary(sv, random_unitary(rngmod.stream(strategy.seed, 0), 2**toy.p_qubits), ["P"])
        for i in range(1, l + 1):
            u = random_unitary(rngmod.stream(strategy.seed, i), 2)
            sv = apply_unitary(sv, u, [pair_names(i)[0]])
        proof = ProtocolState(sv, l)
    else:
        raise ValueError(f"unknown strategy kind {strategy.kind!r}")
    dist = verifier_marginal_distance(proof)
    if dist > MARGINAL_TOL:
        raise ValueError(f"shared-pair marginal is off by trace distance {dist:.3e}")
    return proof


# ---------------------------------------------------------------------------
# SWAP test
# ---------------------------------------------------------------------------

def _swap_operator(dim: int) -> np.ndarray:
    s = np.zeros((dim * dim, dim * dim), dtype=complex)
    for a in range(dim):
        for b in range(dim):
            s[b * dim + a, a * dim + b] = 1.0
    return s


def swap_test(
    state: State,
    reg1: list[str],
    reg2: list[str],
    rng: np.random.Generator | None = None,
) -> float | bool:
    """Run the SWAP test circuit between two equally sized register groups.

    Exact mode (rng=None) returns the acceptance probability from the full
    circuit: ancilla Hadamard, controlled swap of the two groups, Hadamard,
    standard-basis measurement, accepting on 0.  Sampled mode returns one
    accept/reject draw.
    """
    reg1, reg2 = list(reg1), list(reg2)
    d1 = 2 ** sum(state.layout.size(r) for r in reg1)
    d2 = 2 ** sum(state.layout.size(r) for r in reg2)
    if d1 != d2:
        raise ValueError(f"register groups have different dimensions {d1} vs {d2}")
    anc = "_swap_anc"
    if anc in state.layout.names:
        raise ValueError(f"layout already uses the reserved name {anc!r}")
    joint = tensor_product(zero_state(layout((anc, 1))), state)
    joint = apply_unitary(joint, HADAMARD, [anc])
    cswap = np.block(
        [
            [np.eye(d1 * d1), np.zeros((d1 * d1, d1 * d1))],
            [np.zeros((d1 * d1, d1 * d1)), _swap_operator(d1)],
        ]
    ).astype(complex)
    joint = apply_unitary(joint, cswap, [anc] + reg1 + reg2, check=False)
    joint = apply_unitary(joint, HADAMARD, [anc])
    pm = standard_basis_measurement(joint.layout, [anc])
    if rng is None:
        records = measure(joint, pm)
        return records[0].probability
    record = measure(joint, pm, rng)
    return record.label == "0"


def swap_test_formula(state: State, reg1: list[str], reg2: list[str]) -> float:
    """Closed form (1 + Tr(rho S))/2 for the joint state and the group-swap S."""
    dm = to_density(state)
    positions = dm.layout.positions(list(reg1) + list(reg2))
    d = 2 ** (len(positions) // 2)
    s = embed_unitary(_swap_operator(d), dm.layout.total_qubits, positions)
    return float((1.0 + np.trace(dm.matrix @ s).real) / 2.0)


# ---------------------------------------------------------------------------
# Post-selection (teleportation with two kept Bell outcomes)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PostSelectionBranch:
    label: str
    probability: float
    success: bool
    state: State | None


def post_selection(
    state: State,
    regs: tuple[str, str, str] = ("S2", "S2'", "S1"),
    rng: np.random.Generator | None = None,
) -> list[PostSelectionBranch] | PostSelectionBranch:
    """Teleport the third register's content into the first through a shared pair.

    Bell-measures (regs[1], regs[2]); phi+ succeeds as is, psi+ succeeds after
    an X correction on regs[0], and the minus outcomes are failures.  Exact
    mode returns all four branches with probabilities and post states.
    """
    out_reg, bridge, source = regs
    for r in regs:
        if state.layout.size(r) != 1:
            raise ValueError(f"post_selection registers must be single qubits, {r} is not")
    pm = bell_measurement((bridge, source))

    def mk(record) -> PostSelectionBranch:
        success = record.label in ("phi+", "psi+")
        post = record.post_state
        if post is not None and record.label == "psi+":
            post = apply_unitary(post, PAULI_X, [out_reg])
        return PostSelectionBranch(record.label, record.probability, success, post)

    if rng is None:
        return [mk(record) for record in measure(state, pm)]
    return mk(measure(state, pm, rng))


def postsel_success_prob(state: State, regs: tuple[str, str, str] = ("S2", "S2'", "S1")) -> float:
    """Probability mass of the two kept Bell outcomes on (regs[1], regs[2])."""
    dm = to_density(state)
    positions = dm.layout.positions([regs[1], regs[2]])
    big = embed_unitary(bell_subspaces().pi_plus, dm.layout.total_qubits, positions)
    return float(np.trace(dm.matrix @ big).real)


# ---------------------------------------------------------------------------
# Rewinding identity
# ---------------------------------------------------------------------------

def rewinding_residual(
    delta: np.ndarray, pi: np.ndarray, omega: np.ndarray, pre_tol: float = HALF_EIG_TOL
) -> float:
    """Norm of delta (I - 2 pi) delta |omega> for a 1/2-eigenvector omega.

    Raises HalfEigenpairError when delta pi delta |omega> deviates from
    |omega>/2 beyond pre_tol; for valid inputs the residual is 0 up to float
    noise.
    """
    delta = np.asarray(delta, dtype=complex)
    pi = np.asarray(pi, dtype=complex)
    omega = np.asarray(omega, dtype=complex).reshape(-1)
    if not is_projector(delta) or not is_projector(pi):
        raise ValueError("delta and pi must be orthogonal projectors")
    sandwich = delta @ pi @ delta
    if np.linalg.norm(sandwich @ omega - 0.5 * omega) > pre_tol:
        raise HalfEigenpairError(
            "omega is not a 1/2-eigenvector of delta pi delta within tolerance"
        )
    full = delta @ (np.eye(delta.shape[0]) - 2.0 * pi) @ delta
    return float(np.linalg.norm(full @ omega))


def honest_rewinding_instance(toy: ToyVerifier) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(delta, pi, omega) on (P, A, S) realizing the 1/2-eigenvalue construction.

    delta projects A and the single control qubit S to all-zero; pi conjugates
    the acceptance projector by the verifier and the |1> projector by the
    q-rotation with q = 1/(2 p_x), so delta pi delta has top eigenvalue
    p_x * q = 1/2 at omega = witness (x) |0...0>.
    """
    p_x, witness = best_witness(toy)
    r = rx_prob(_clamped_q(p_x))
    da = 2**toy.a_qubits
    zero_a = np.zeros(da, dtype=complex)
    zero_a[0] = 1.0
    qubit0 = np.array([1.0, 0.0], dtype=complex)
    delta = tensor(np.eye(2**toy.p_qubits), proj(zero_a), proj(qubit0))
    pi = tensor(
        dagger(toy.v) @ toy.acc_projector @ toy.v,
        dagger(r) @ proj(np.array([0.0, 1.0])) @ r,
    )
    omega = tensor(witness, zero_a, qubit0)
    return delta, pi, omega


# ---------------------------------------------------------------------------
# The two-coin verifier
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RunOutcome:
    """One sampled protocol run."""

    verdict: str
    branch: str
    pair: tuple[int, int]
    coin: int
    bell: str | None = None
    bits: str | None = None


@dataclass(frozen=True)
class BranchBreakdown:
    """Exact-mode result: total accept probability and per-branch masses."""

    accept_probability: float
    reject_probability: float
    branches: dict[str, float]


@dataclass
class _PairTree:
    bell_probs: dict[str, float]
    bit_dists: dict[str, tuple[list[str], list[float]]]
    swap_pass: float


def _draw(rng: np.random.Generator, labels: list[str], probs: list[float]) -> str:
    edge = rng.random() * sum(probs)
    acc = 0.0
    last = labels[0]
    for label, p in zip(labels, probs):
        if p <= 0.0:
            continue
        acc += p
        last = label
        if edge <= acc:
            return label
    return last


class ProtocolRun:
    """Verifier evaluation against a fixed proof, exact or sampled.

    Outcome distributions for each (ordered pair, coin) choice are computed
    once and cached, so large sampled suites pay the circuit cost only
    l(l-1) times.
    """

    def __init__(self, proof: ProtocolState, toy: ToyVerifier):
        if proof.state.layout.size("P") != toy.p_qubits:
            raise ValueError("proof P register does not match the verifier")
        self.proof = proof
        self.toy = toy
        self._dm = to_density(proof.state)
        self._trees: dict[tuple[int, int], _PairTree] = {}

    def _tree(self, i: int, j: int) -> _PairTree:
        key = (i, j)
        if key in self._trees:
            return self._trees[key]
        toy = self.toy
        dm = select_ordered_pair(self._dm, self.proof.pairs, i, j)
        dm = apply_pinch(dm, ("S1", "S1'"))
        dm = apply_pinch(dm, ("S2", "S2'"))
        swap_pass = swap_test(dm, ["S1", "S1'"], ["S2", "S2'"])

        w = apply_unitary(dm, bell_to_computational(), ["S1", "S1'"])
        w = partial_trace(w, ["P", "S1", "S2", "S2'"])
        ancilla = zero_state(layout(("A", toy.a_qubits)))
        w = tensor_product(w, ancilla.density())
        w = apply_unitary(w, toy.v, ["P", "A"], check=False)
        da = 2**toy.a_qubits
        flip = np.eye(2**toy.p_qubits * da * 2) - 2.0 * tensor(
            toy.acc_projector, proj(np.array([0.0, 1.0]))
        )
        w = apply_unitary(w, flip, ["P", "A", "S1"], check=False)
        w = apply_unitary(w, dagger(toy.v), ["P", "A"], check=False)

        bell_probs: dict[str, float] = {}
        bit_dists: dict[str, tuple[list[str], list[float]]] = {}
        for branch in post_selection(w, ("S2", "S2'", "S1")):
            bell_probs[branch.label] = branch.probability
            if branch.success and branch.state is not None:
                pm = standard_basis_measurement(branch.state.layout, ["A", "S2"])
                records = measure(branch.state, pm)
                bit_dists[branch.label] = (
                    [r.label for r in records],
                    [r.probability for r in records],
                )
        tree = _PairTree(bell_probs, bit_dists, swap_pass)
        self._trees[key] = tree
        return tree

    def _ordered_pairs(self) -> list[tuple[int, int]]:
        l = self.proof.l
        return [(i, j) for i in range(l) for j in range(l) if i != j]

    def exact(self) -> BranchBreakdown:
        masses = {k: 0.0 for k in BRANCH_KEYS}
        pairs = self._ordered_pairs()
        weight = 0.5 / len(pairs)
        zero_label = "0" * (self.toy.a_qubits + 1)
        for i, j in pairs:
            tree = self._tree(i, j)
            masses["b1_swap_accept"] += weight * tree.swap_pass
            masses["b1_swap_reject"] += weight * (1.0 - tree.swap_pass)
            for label, p_bell in tree.bell_probs.items():
                if label in ("phi-", "psi-"):
                    masses["b0_postsel_fail"] += weight * p_bell
                    continue
                if label not in tree.bit_dists:
                    continue
                labels, probs = tree.bit_dists[label]
                for bits, p_bits in zip(labels, probs):
                    mass = weight * p_bell * p_bits
                    if bits == zero_label:
                        masses["b0_allzero_reject"] += mass
                    else:
                        masses["b0_measured_accept"] += mass
        reject = masses["b0_allzero_reject"] + masses["b1_swap_reject"]
        return BranchBreakdown(1.0 - reject, reject, masses)

    def sample(self, rng: np.random.Generator) -> RunOutcome:
        l = self.proof.l
        i = int(rng.integers(l))
        j = int(rng.integers(l - 1))
        if j >= i:
            j += 1
        coin = int(rng.integers(2))
        tree = self._tree(i, j)
        pair = (i + 1, j + 1)
        if coin == 1:
            passed = bool(rng.random() < tree.swap_pass)
            return RunOutcome(
                verdict="accept" if passed else "reject",
                branch="b1_swap",
                pair=pair,
                coin=1,
                bits="0" if passed else "1",
            )
        bell = _draw(rng, list(tree.bell_probs), list(tree.bell_probs.values()))
        if bell in ("phi-", "psi-"):
            return RunOutcome(
                verdict="accept", branch="b0_postsel_fail", pair=pair, coin=0, bell=bell
            )
        bits = _draw(rng, *tree.bit_dists[bell])
        zero_label = "0" * (self.toy.a_qubits + 1)
        return RunOutcome(
            verdict="reject" if bits == zero_label else "accept",
            branch="b0_measured",
            pair=pair,
            coin=0,
            bell=bell,
            bits=bits,
        )


def verifier_w(
    proof: ProtocolState,
    toy: ToyVerifier,
    mode: str = "exact",
    rng: np.random.Generator | None = None,
) -> BranchBreakdown | RunOutcome:
    """Evaluate the verifier on a proof: exact branch masses or one sampled run."""
    run = ProtocolRun(proof, toy)
    if mode == "exact":
        return run.exact()
    if mode == "sampled":
        if rng is None:
            raise ValueError("sampled mode needs an rng stream")
        return run.sample(rng)
    raise ValueError(f"unknown mode {mode!r}")
