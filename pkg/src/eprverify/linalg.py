"""Dense complex linear algebra on raw numpy arrays.

Everything here operates on plain ``np.ndarray`` values; register-aware
wrappers live in :mod:`eprverify.kernel`.  Qubit convention throughout the
package: qubit 0 is the most significant index bit, so a basis index reads
left-to-right as a bit string.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

HERMITIAN_TOL = 1e-10
EIG_RESIDUAL_TOL = 1e-9


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


def proj(v: np.ndarray) -> np.ndarray:
    """Outer product |v><v|."""
    v = np.asarray(v, dtype=complex).reshape(-1)
    return np.outer(v, v.conj())


def tensor(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product of one or more matrices/vectors, left factor most significant."""
    if not ops:
        raise ValueError("tensor requires at least one operand")
    out = np.asarray(ops[0], dtype=complex)
    for op in ops[1:]:
        out = np.kron(out, np.asarray(op, dtype=complex))
    return out


def is_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    return a.shape[0] == a.shape[1] and np.max(np.abs(a - dagger(a))) <= tol


def is_unitary(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    if a.shape[0] != a.shape[1]:
        return False
    return np.max(np.abs(dagger(a) @ a - np.eye(a.shape[0]))) <= tol


def is_projector(a: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    a = np.asarray(a)
    return is_hermitian(a, tol) and np.max(np.abs(a @ a - a)) <= tol


def _require_square(a: np.ndarray, what: str) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"{what} requires a square matrix, got shape {a.shape}")
    return a


def trace_norm(a: np.ndarray) -> float:
    """Sum of singular values of a square matrix."""
    a = _require_square(a, "trace_norm")
    return float(np.sum(np.linalg.svd(a, compute_uv=False)))


def operator_norm(a: np.ndarray) -> float:
    """Largest singular value of a square matrix."""
    a = _require_square(a, "operator_norm")
    return float(np.max(np.linalg.svd(a, compute_uv=False)))


@dataclass(frozen=True)
class Spectrum:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    ``eigenvectors[:, k]`` is the unit-norm eigenvector for ``eigenvalues[k]``.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dagger(v)


def spectrum(a: np.ndarray, tol: float = HERMITIAN_TOL) -> Spectrum:
    a = _require_square(a, "spectrum")
    if not is_hermitian(a, tol):
        raise ValueError("spectrum requires a Hermitian matrix")
    vals, vecs = np.linalg.eigh(a)
    return Spectrum(eigenvalues=vals[::-1].copy(), eigenvectors=vecs[:, ::-1].copy())


def max_eigpair(m: np.ndarray, tol: float = HERMITIAN_TOL) -> tuple[float, np.ndarray]:
    """Largest eigenvalue and a unit-norm eigenvector of a Hermitian matrix.

    The eigenvector is whichever one the deterministic solver ordering yields;
    for a degenerate top eigenspace any member is acceptable.
    """
    spec = spectrum(m, tol)
    lam = float(spec.eigenvalues[0])
    vec = spec.eigenvectors[:, 0]
    residual = np.linalg.norm(np.asarray(m, dtype=complex) @ vec - lam * vec)
    if residual > EIG_RESIDUAL_TOL:
        raise ValueError(f"eigensolver residual {residual:.3e} above {EIG_RESIDUAL_TOL}")
    return lam, vec


def hermitian_sqrt(a: np.ndarray, clip: float = HERMITIAN_TOL) -> np.ndarray:
    """PSD matrix square root via spectral decomposition.

    Eigenvalues in [-clip, 0) are clamped to 0; anything more negative is an
    error.  Eigenvalues below a relative noise floor are zeroed outright: the
    square root would otherwise amplify O(eps) solver noise to O(sqrt(eps)).
    """
    spec = spectrum(a)
    vals = spec.eigenvalues
    if np.min(vals) < -clip:
        raise ValueError(f"hermitian_sqrt requires PSD input, min eigenvalue {np.min(vals):.3e}")
    floor = 1e-12 * max(float(np.max(vals)), 1.0)
    cleaned = np.where(vals < floor, 0.0, vals)
    root = np.sqrt(cleaned)
    return (spec.eigenvectors * root) @ dagger(spec.eigenvectors)


def permute_vector(vec: np.ndarray, n_qubits: int, order: list[int]) -> np.ndarray:
    """Reorder tensor factors of a 2^n vector: new axis k holds old axis order[k]."""
    vec = np.asarray(vec, dtype=complex).reshape([2] * n_qubits)
    return vec.transpose(order).reshape(-1)


def permute_matrix(mat: np.ndarray, n_qubits: int, order: list[int]) -> np.ndarray:
    """Reorder tensor factors of a 2^n x 2^n matrix on both index groups."""
    mat = np.asarray(mat, dtype=complex).reshape([2] * (2 * n_qubits))
    axes = list(order) + [n_qubits + k for k in order]
    d = 2**n_qubits
    return mat.transpose(axes).reshape(d, d)


def embed_unitary(u: np.ndarray, n_qubits: int, targets: list[int]) -> np.ndarray:
    """Extend an operator on the listed qubits (in that order) to the full space.

    Works for any square operator on the target subspace, not only unitaries.
    """
    u = np.asarray(u, dtype=complex)
    t = list(targets)
    if len(set(t)) != len(t):
        raise ValueError(f"duplicate target qubits: {t}")
    if u.shape != (2 ** len(t), 2 ** len(t)):
        raise ValueError(f"operator shape {u.shape} does not match {len(t)} target qubits")
    rest = [k for k in range(n_qubits) if k not in t]
    big = tensor(u, np.eye(2 ** len(rest))) if rest else u
    # big acts on qubit order t + rest; move axes back to global order.
    inv = np.argsort(t + rest)
    return permute_matrix(big, n_qubits, list(inv))


def partial_trace(mat: np.ndarray, n_qubits: int, keep: list[int]) -> np.ndarray:
    """Trace out all qubits not in ``keep``; kept factors appear in the listed order."""
    keep = list(keep)
    if not keep:
        raise ValueError("partial_trace requires a nonempty keep list")
    if len(set(keep)) != len(keep) or any(k < 0 or k >= n_qubits for k in keep):
        raise ValueError(f"invalid keep positions {keep} for {n_qubits} qubits")
    drop = [k for k in range(n_qubits) if k not in keep]
    t = np.asarray(mat, dtype=complex).reshape([2] * (2 * n_qubits))
    axes = keep + drop + [n_qubits + k for k in keep] + [n_qubits + k for k in drop]
    dk, dd = 2 ** len(keep), 2 ** len(drop)
    t = t.transpose(axes).reshape(dk, dd, dk, dd)
    return np.einsum("ikjk->ij", t)
