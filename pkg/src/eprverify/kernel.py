"""Registers, states, gates, and measurements.

Register convention: a layout lists named registers left to right; the leftmost
qubit of the leftmost register is the most significant index bit.  All
operations are pure: they return new values and never mutate their inputs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import (
    HERMITIAN_TOL,
    dagger,
    embed_unitary,
    is_hermitian,
    is_unitary,
    partial_trace as _partial_trace_positions,
    permute_matrix,
    permute_vector,
    proj,
    tensor,
)

NORM_TOL = 1e-10
PROB_FLOOR = 1e-14


# ---------------------------------------------------------------------------
# Layouts and states
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RegisterLayout:
    """Ordered named registers mapped to tensor-factor positions."""

    registers: tuple[tuple[str, int], ...]

    def __post_init__(self) -> None:
        names = [name for name, _ in self.registers]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate register names in layout: {names}")
        if any(size < 1 for _, size in self.registers):
            raise ValueError("register sizes must be >= 1")

    @property
    def total_qubits(self) -> int:
        return sum(size for _, size in self.registers)

    @property
    def dim(self) -> int:
        return 2**self.total_qubits

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(name for name, _ in self.registers)

    def size(self, name: str) -> int:
        for reg, size in self.registers:
            if reg == name:
                return size
        raise ValueError(f"unknown register {name!r}; layout has {self.names}")

    def positions(self, names: list[str] | tuple[str, ...]) -> list[int]:
        """Qubit positions of the named registers, concatenated in the order given."""
        offsets = {}
        at = 0
        for reg, size in self.registers:
            offsets[reg] = (at, size)
            at += size
        out: list[int] = []
        for name in names:
            if name not in offsets:
                raise ValueError(f"unknown register {name!r}; layout has {self.names}")
            start, size = offsets[name]
            out.extend(range(start, start + size))
        return out


def layout(*registers: tuple[str, int]) -> RegisterLayout:
    return RegisterLayout(tuple(registers))


@dataclass(frozen=True)
class StateVector:
    """Unit-norm pure state over a register layout."""

    layout: RegisterLayout
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex).reshape(-1)
        object.__setattr__(self, "amplitudes", amps)
        if amps.shape[0] != self.layout.dim:
            raise ValueError(
                f"amplitude length {amps.shape[0]} does not match layout dim {self.layout.dim}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state norm {norm} deviates from 1 beyond {NORM_TOL}")

    def density(self) -> DensityOperator:
        return DensityOperator(self.layout, proj(self.amplitudes), validate=False)


@dataclass(frozen=True)
class DensityOperator:
    """Hermitian PSD unit-trace operator over a register layout."""

    layout: RegisterLayout
    matrix: np.ndarray
    validate: bool = True

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", mat)
        d = self.layout.dim
        if mat.shape != (d, d):
            raise ValueError(f"matrix shape {mat.shape} does not match layout dim {d}")
        if self.validate:
            if not is_hermitian(mat, HERMITIAN_TOL):
                raise ValueError("density operator is not Hermitian within tolerance")
            if abs(np.trace(mat).real - 1.0) > HERMITIAN_TOL:
                raise ValueError(f"density operator trace {np.trace(mat).real} is not 1")
            if np.min(np.linalg.eigvalsh(mat)) < -HERMITIAN_TOL:
                raise ValueError("density operator has an eigenvalue below -1e-10")


State = StateVector | DensityOperator


def to_density(state: State) -> DensityOperator:
    return state if isinstance(state, DensityOperator) else state.density()


def basis_state(lay: RegisterLayout, bits: str) -> StateVector:
    """Computational basis state from a bit string over the whole layout."""
    if len(bits) != lay.total_qubits or any(b not in "01" for b in bits):
        raise ValueError(f"bit string {bits!r} does not match {lay.total_qubits} qubits")
    amps = np.zeros(lay.dim, dtype=complex)
    amps[int(bits, 2)] = 1.0
    return StateVector(lay, amps)


def zero_state(lay: RegisterLayout) -> StateVector:
    return basis_state(lay, "0" * lay.total_qubits)


def tensor_product(a: State, b: State) -> State:
    """Concatenate two states side by side; register names must not clash."""
    clash = set(a.layout.names) & set(b.layout.names)
    if clash:
        raise ValueError(f"register names clash in tensor product: {sorted(clash)}")
    lay = RegisterLayout(a.layout.registers + b.layout.registers)
    if isinstance(a, StateVector) and isinstance(b, StateVector):
        return StateVector(lay, tensor(a.amplitudes, b.amplitudes))
    return DensityOperator(lay, tensor(to_density(a).matrix, to_density(b).matrix), validate=False)


def partial_trace(dm: DensityOperator, keep: set[str] | list[str]) -> DensityOperator:
    """Reduce to the named registers, preserved in layout order."""
    if not keep:
        raise ValueError("partial_trace requires a nonempty keep set")
    keep_set = set(keep)
    names = [name for name in dm.layout.names if name in keep_set]
    unknown = keep_set - set(dm.layout.names)
    if unknown:
        raise ValueError(f"unknown registers {sorted(unknown)}; layout has {dm.layout.names}")
    return partial_trace_ordered(dm, names)


def partial_trace_ordered(dm: DensityOperator, keep_names: list[str]) -> DensityOperator:
    """Reduce to the named registers, arranged in the order given."""
    positions = dm.layout.positions(keep_names)
    reduced = _partial_trace_positions(dm.matrix, dm.layout.total_qubits, positions)
    lay = RegisterLayout(tuple((n, dm.layout.size(n)) for n in keep_names))
    return DensityOperator(lay, reduced, validate=False)


# ---------------------------------------------------------------------------
# Gates
# ---------------------------------------------------------------------------

_S2 = 1 / np.sqrt(2)
HADAMARD = np.array([[_S2, _S2], [_S2, -_S2]], dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)
CSWAP = np.block(
    [[np.eye(4), np.zeros((4, 4))], [np.zeros((4, 4)), SWAP]]
).astype(complex)

# Bell states in the fixed order phi+, phi-, psi+, psi-; the single source of
# truth for every sign-sensitive construction in the package.
BELL_STATES = np.array(
    [
        [_S2, 0, 0, _S2],
        [_S2, 0, 0, -_S2],
        [0, _S2, _S2, 0],
        [0, _S2, -_S2, 0],
    ],
    dtype=complex,
)
BELL_LABELS = ("phi+", "phi-", "psi+", "psi-")


def rx_prob(q: float) -> np.ndarray:
    """X-axis rotation parameterized by the flip probability q in [0, 1].

    Maps |0> to sqrt(1-q)|0> - i sqrt(q)|1>, so a standard-basis measurement
    of the rotated |0> yields 1 with probability exactly q.
    """
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"flip probability q must be in [0, 1], got {q}")
    c, s = np.sqrt(1.0 - q), np.sqrt(q)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


def bell_to_computational() -> np.ndarray:
    """Two-qubit unitary mapping phi+ -> |00>, psi+ -> -|10>, phi- -> |01>, psi- -> -|11>.

    The signs on the psi rows matter: they make the decoder send
    a|phi+> + b|psi+> to (a|0> - b|1>) (x) |0>.
    """
    phi_p, phi_m, psi_p, psi_m = BELL_STATES
    out = np.zeros((4, 4), dtype=complex)
    for ket_index, sign, bell in ((0b00, 1, phi_p), (0b10, -1, psi_p), (0b01, 1, phi_m), (0b11, -1, psi_m)):
        out[ket_index, :] += sign * bell.conj()
    return out


_FIXED_GATES = {
    "H": HADAMARD,
    "X": PAULI_X,
    "Y": PAULI_Y,
    "Z": PAULI_Z,
    "CNOT": CNOT,
    "CSWAP": CSWAP,
    "BELL_TO_COMP": bell_to_computational(),
}


def make_gate(kind: str, q: float | None = None) -> np.ndarray:
    """Exact unitary for a named gate; RX_PROB takes the flip probability q."""
    if kind == "RX_PROB":
        if q is None:
            raise ValueError("RX_PROB requires the flip probability q")
        return rx_prob(q)
    if kind in _FIXED_GATES:
        return _FIXED_GATES[kind].copy()
    raise ValueError(f"unknown gate kind {kind!r}")


# ---------------------------------------------------------------------------
# Unitary application
# ---------------------------------------------------------------------------

def apply_unitary(state: State, u: np.ndarray, targets: list[str], check: bool = True) -> State:
    """Apply a unitary to the named registers (in that order), identity elsewhere."""
    u = np.asarray(u, dtype=complex)
    if check and not is_unitary(u, HERMITIAN_TOL):
        raise ValueError("operator is not unitary within tolerance")
    positions = state.layout.positions(targets)
    if u.shape[0] != 2 ** len(positions):
        raise ValueError(
            f"unitary dim {u.shape[0]} does not match {len(positions)} target qubits"
        )
    big = embed_unitary(u, state.layout.total_qubits, positions)
    if isinstance(state, StateVector):
        return StateVector(state.layout, big @ state.amplitudes)
    return DensityOperator(state.layout, big @ state.matrix @ dagger(big), validate=False)


# ---------------------------------------------------------------------------
# Measurement
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProjectiveMeasurement:
    """Labeled complete set of orthogonal projectors on the target registers."""

    outcomes: tuple[tuple[str, np.ndarray], ...]
    targets: tuple[str, ...]

    def __post_init__(self) -> None:
        mats = [np.asarray(m, dtype=complex) for _, m in self.outcomes]
        if not mats:
            raise ValueError("measurement needs at least one outcome")
        d = mats[0].shape[0]
        total = np.zeros((d, d), dtype=complex)
        for label, m in zip(self.labels, mats):
            if m.shape != (d, d):
                raise ValueError(f"projector {label!r} has shape {m.shape}, expected {(d, d)}")
            if not is_hermitian(m) or np.max(np.abs(m @ m - m)) > NORM_TOL:
                raise ValueError(f"outcome {label!r} is not an orthogonal projector")
            total += m
        for i, (la, ma) in enumerate(self.outcomes):
            for lb, mb in self.outcomes[i + 1:]:
                if np.max(np.abs(np.asarray(ma) @ np.asarray(mb))) > NORM_TOL:
                    raise ValueError(f"projectors {la!r} and {lb!r} are not orthogonal")
        if np.max(np.abs(total - np.eye(d))) > NORM_TOL:
            raise ValueError("projectors do not sum to the identity")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.outcomes)


@dataclass(frozen=True)
class MeasurementRecord:
    label: str
    probability: float
    post_state: State | None


def standard_basis_measurement(lay: RegisterLayout, targets: list[str]) -> ProjectiveMeasurement:
    """Full standard-basis measurement of the named registers, bitstring labels."""
    k = sum(lay.size(t) for t in targets)
    outcomes = []
    for idx in range(2**k):
        vec = np.zeros(2**k, dtype=complex)
        vec[idx] = 1.0
        outcomes.append((format(idx, f"0{k}b"), proj(vec)))
    return ProjectiveMeasurement(tuple(outcomes), tuple(targets))


def bell_measurement(targets: tuple[str, str]) -> ProjectiveMeasurement:
    """Bell-basis measurement of two single-qubit registers."""
    outcomes = tuple((label, proj(vec)) for label, vec in zip(BELL_LABELS, BELL_STATES))
    return ProjectiveMeasurement(outcomes, tuple(targets))


def measure(
    state: State,
    pm: ProjectiveMeasurement,
    rng: np.random.Generator | None = None,
) -> list[MeasurementRecord] | MeasurementRecord:
    """Measure the state: all outcomes exactly (rng=None) or one sampled outcome.

    Outcomes with probability below 1e-14 are reported with probability 0 and
    no post state.
    """
    n = state.layout.total_qubits
    positions = state.layout.positions(list(pm.targets))
    records = []
    probs = []
    for label, small in pm.outcomes:
        big = embed_unitary(small, n, positions)
        if isinstance(state, StateVector):
            branch = big @ state.amplitudes
            p = float(np.vdot(branch, branch).real)
            post = StateVector(state.layout, branch / np.sqrt(p)) if p >= PROB_FLOOR else None
        else:
            branch = big @ state.matrix @ dagger(big)
            p = float(np.trace(branch).real)
            post = (
                DensityOperator(state.layout, branch / p, validate=False)
                if p >= PROB_FLOOR
                else None
            )
        p = p if p >= PROB_FLOOR else 0.0
        probs.append(p)
        records.append(MeasurementRecord(label, p, post))
    if rng is None:
        return records
    total = sum(probs)
    pick = int(rng.choice(len(records), p=np.asarray(probs) / total))
    return records[pick]


# ---------------------------------------------------------------------------
# Pair symmetrization
# ---------------------------------------------------------------------------

def _check_pairs(state: State, pairs: list[tuple[str, str]]) -> list[tuple[str, ...]]:
    pairs = [tuple(p) for p in pairs]
    if len(pairs) < 2:
        raise ValueError("symmetrize_pairs needs at least 2 pairs")
    shapes = [tuple(state.layout.size(r) for r in p) for p in pairs]
    if any(s != shapes[0] for s in shapes):
        raise ValueError(f"pairs are not structurally identical: {shapes}")
    return pairs


def select_ordered_pair(
    dm: DensityOperator, pairs: list[tuple[str, str]], i: int, j: int
) -> DensityOperator:
    """Move pair i into slot 1 and pair j into slot 2, tracing out all other pairs.

    Output layout: registers not belonging to any pair (in layout order), then
    the first two pairs' register names carrying the selected contents.
    """
    pair_regs = {r for p in pairs for r in p}
    untouched = [n for n in dm.layout.names if n not in pair_regs]
    keep = untouched + list(pairs[i]) + list(pairs[j])
    reduced = partial_trace_ordered(dm, keep)
    slot_names = untouched + list(pairs[0]) + list(pairs[1])
    lay = RegisterLayout(tuple((n, reduced.layout.size(o)) for n, o in zip(slot_names, keep)))
    return DensityOperator(lay, reduced.matrix, validate=False)


def symmetrize_pairs(
    state: State,
    pairs: list[tuple[str, str]],
    rng: np.random.Generator | None = None,
) -> State:
    """Uniformly permute structurally identical register pairs.

    Exact mode (rng=None) returns the permutation average restricted to the
    first two pair slots, as a density operator; sample mode applies one
    uniformly drawn permutation to the full state.
    """
    pairs = _check_pairs(state, pairs)
    n = state.layout.total_qubits
    if rng is not None:
        perm = rng.permutation(len(pairs))
        order = list(range(n))
        for slot, src in enumerate(perm):
            dst_pos = state.layout.positions(list(pairs[slot]))
            src_pos = state.layout.positions(list(pairs[src]))
            for d, s in zip(dst_pos, src_pos):
                order[d] = s
        if isinstance(state, StateVector):
            return StateVector(state.layout, permute_vector(state.amplitudes, n, order))
        return DensityOperator(state.layout, permute_matrix(state.matrix, n, order), validate=False)
    dm = to_density(state)
    count = len(pairs)
    acc = None
    for i in range(count):
        for j in range(count):
            if i == j:
                continue
            term = select_ordered_pair(dm, pairs, i, j)
            acc = term if acc is None else DensityOperator(
                acc.layout, acc.matrix + term.matrix, validate=False
            )
    return DensityOperator(acc.layout, acc.matrix / (count * (count - 1)), validate=False)
