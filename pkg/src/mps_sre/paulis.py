"""Pauli strings, the replica moment operator, and its factorization.

The single-site moment operator for replica index n averages the 2n-fold
Kronecker powers of the Pauli matrices:

    conjugated variant:  L = (1/2) sum_a (sigma_a (x) sigma_a^*)^{(x) n}
    symmetric  variant:  L = (1/2) sum_a (sigma_a)^{(x) 4}      (n = 2 only)

Both are real symmetric, square to 2L, and have rank 2^(2(n-1)) — the
physical dimension of one replica site.  ``factor_gamma`` extracts the
rectangular factor G with G^T G = L from the eigendecomposition.

Index order everywhere (including flattened Kronecker products): replica
pair index slowest; within a pair the ket copy precedes the conjugated
copy.  np.kron follows the same convention (first factor slowest).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .errors import PositivityError, VariantError

__all__ = [
    "PAULIS",
    "PAULI_LABELS",
    "HADAMARD",
    "PHASE_S",
    "CNOT",
    "PauliString",
    "pauli_matrix",
    "pauli_string_matrix",
    "replica_phys_dim",
    "build_lambda",
    "factor_gamma",
]

PAULI_LABELS = "IXYZ"

_I = np.eye(2, dtype=complex)
_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
PAULIS = (_I, _X, _Y, _Z)

HADAMARD = np.array([[1.0, 1.0], [1.0, -1.0]], dtype=complex) / np.sqrt(2.0)
PHASE_S = np.array([[1.0, 0.0], [0.0, 1.0j]], dtype=complex)
# two-qubit basis order |00>,|01>,|10>,|11>, first qubit = control
CNOT = np.array(
    [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, 0.0, 1.0, 0.0],
    ],
    dtype=complex,
)


def pauli_matrix(alpha: int) -> np.ndarray:
    """2x2 Pauli matrix for index alpha in {0: I, 1: X, 2: Y, 3: Z}."""
    if alpha not in (0, 1, 2, 3):
        raise ValueError(f"pauli index must be 0..3, got {alpha}")
    return PAULIS[alpha].copy()


@dataclass(frozen=True)
class PauliString:
    """A Pauli word (a_1, ..., a_N), site k acting with sigma_{a_k}."""

    word: tuple[int, ...]

    def __post_init__(self):
        if any(a not in (0, 1, 2, 3) for a in self.word):
            raise ValueError(f"pauli word entries must be 0..3: {self.word}")

    def __len__(self) -> int:
        return len(self.word)

    def __str__(self) -> str:
        return "".join(PAULI_LABELS[a] for a in self.word)

    @classmethod
    def from_label(cls, label: str) -> "PauliString":
        try:
            return cls(tuple(PAULI_LABELS.index(c) for c in label.upper()))
        except ValueError:
            raise ValueError(f"pauli label may only contain IXYZ: {label!r}") from None

    @classmethod
    def from_index(cls, index: int, n_sites: int) -> "PauliString":
        """Base-4 decoding, site 1 = most significant digit."""
        if not 0 <= index < 4**n_sites:
            raise ValueError(f"index {index} out of range for {n_sites} sites")
        word = []
        for k in range(n_sites - 1, -1, -1):
            word.append((index >> (2 * k)) & 3)
        return cls(tuple(word))

    def to_index(self) -> int:
        idx = 0
        for a in self.word:
            idx = (idx << 2) | a
        return idx

    def matrices(self) -> list[np.ndarray]:
        return [PAULIS[a] for a in self.word]


def pauli_string_matrix(p: PauliString | Iterable[int]) -> np.ndarray:
    """Dense 2^N x 2^N matrix of a Pauli word (small N only)."""
    word = p.word if isinstance(p, PauliString) else tuple(p)
    if len(word) > 12:
        raise ValueError("dense pauli string limited to N <= 12")
    m = np.eye(1, dtype=complex)
    for a in word:
        m = np.kron(m, PAULIS[a])
    return m


def replica_phys_dim(n: int) -> int:
    """Physical dimension of one replica site: 2^(2(n-1))."""
    if n < 2:
        raise VariantError(f"replica index must be >= 2, got {n}")
    return 4 ** (n - 1)


def _check_variant(n: int, variant: str) -> str:
    if n < 2:
        raise VariantError(f"replica index must be >= 2, got {n}")
    if variant not in ("conjugated", "symmetric"):
        raise VariantError(f"unknown variant {variant!r} (use 'conjugated' or 'symmetric')")
    if variant == "symmetric" and n != 2:
        if n % 2 == 1:
            raise VariantError(
                f"symmetric variant is not positive for odd replica index (n={n}); "
                "use the conjugated variant"
            )
        raise VariantError(f"symmetric variant only implemented for n=2, got n={n}")
    return variant


def build_lambda(n: int = 2, variant: str = "conjugated") -> np.ndarray:
    """Single-site replica moment operator (real symmetric, 4^n x 4^n).

    Conjugated variant pairs each ket copy with a conjugated copy, so at
    n=2 the operator acts on (C^2)^{(x)4} with pair order
    (ket_0, conj_0, ket_1, conj_1).  Symmetric variant (n=2 only) uses
    four plain ket copies.
    """
    _check_variant(n, variant)
    dim = 4**n
    acc = np.zeros((dim, dim), dtype=complex)
    for a in range(4):
        s = PAULIS[a]
        if variant == "conjugated":
            factor = np.kron(s, s.conj())
            term = np.eye(1, dtype=complex)
            for _ in range(n):
                term = np.kron(term, factor)
        else:
            term = np.eye(1, dtype=complex)
            for _ in range(2 * n):
                term = np.kron(term, s)
        acc += term
    acc *= 0.5
    assert np.max(np.abs(acc.imag)) < 1e-14
    return np.ascontiguousarray(acc.real)


def factor_gamma(lam: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    """Rectangular factor G (rank x dim) with G^T G = L.

    Rows are eigenvectors of L scaled by sqrt(eigenvalue); eigenvalues
    below -tol raise PositivityError, eigenvalues within [-tol, tol] are
    treated as zero.  L real symmetric gives a real G.
    """
    lam = np.asarray(lam)
    if not np.allclose(lam, lam.T.conj(), atol=1e-12):
        raise ValueError("moment operator must be Hermitian")
    evals, evecs = np.linalg.eigh(np.real(lam))
    if evals[0] < -tol:
        raise PositivityError(
            f"moment operator has negative eigenvalue {evals[0]:.3e}; "
            "the symmetric form is only positive for even replica index"
        )
    keep = evals > tol
    rows = (evecs[:, keep] * np.sqrt(evals[keep])).T
    # order rows deterministically: descending eigenvalue, then first
    # significant component positive
    rows = rows[::-1].copy()
    for r in rows:
        j = int(np.argmax(np.abs(r) > 1e-10))
        if r[j] < 0:
            r *= -1.0
    return np.ascontiguousarray(rows)
