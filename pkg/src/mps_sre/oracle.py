"""Brute-force references: statevector Renyi entropies and exact
diagonalization of the transverse-field Ising chain.

Everything here is deliberately independent of the tensor-network code so
it can certify it.  A Pauli word factors as i^{|Y|} X^a Z^b with bit masks
a (X or Y present) and b (Z or Y present); its action on basis states is
pure bit arithmetic: X flips a bit, Z contributes a sign, Y both plus a
phase.  Summing over all words with fixed a at once turns the b-sum into
a Walsh-Hadamard transform, which keeps the 4^N enumeration at O(2^N)
memory per batch.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .errors import NumericGuardError, SizeGuardError
from .mps import MPS, product_state
from .paulis import CNOT, HADAMARD, PHASE_S, PauliString

__all__ = [
    "statevector_sre",
    "statevector_sre_reference",
    "pauli_expectation_statevector",
    "dump_pauli_expectations",
    "ising_dense_hamiltonian",
    "ising_sparse_hamiltonian",
    "ed_ground_state",
    "clifford_fixtures",
    "apply_gate_statevector",
]

_PHASE = np.array([1.0, 1.0j, -1.0, -1.0j])


def _check_state(psi: np.ndarray, n_max: int) -> int:
    psi = np.asarray(psi).ravel()
    n = int(np.log2(psi.size))
    if 2**n != psi.size:
        raise SizeGuardError(f"amplitude count {psi.size} is not a power of 2")
    if n > n_max:
        raise SizeGuardError(f"brute-force path refused for N={n} (limit {n_max})")
    nrm = float(np.vdot(psi, psi).real)
    if abs(nrm - 1.0) > 1e-10:
        raise NumericGuardError(
            f"statevector must be normalized within 1e-10 (|psi|^2 = {nrm:.12f})"
        )
    return n


def _wht_last_axis(x: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along the last axis."""
    n = x.shape[-1]
    x = x.copy()
    h = 1
    while h < n:
        v = x.reshape(-1, n // (2 * h), 2, h)
        a0 = v[:, :, 0, :].copy()
        a1 = v[:, :, 1, :]
        v[:, :, 0, :] = a0 + a1
        v[:, :, 1, :] = a0 - a1
        h *= 2
    return x


def statevector_sre(psi: np.ndarray, n: int = 2, block: int = 256) -> float:
    """Stabilizer Renyi entropy M_n of a normalized statevector, N <= 12.

    Enumerates all 4^N Pauli expectations in batches grouped by the X
    mask; within a batch the Z masks are swept by a Walsh-Hadamard
    transform of conj(psi[s ^ a]) * psi[s].
    """
    psi = np.asarray(psi, dtype=complex).ravel()
    nq = _check_state(psi, 12)
    if n < 2:
        raise ValueError(f"replica index must be >= 2, got {n}")
    dim = psi.size
    s = np.arange(dim)
    pop = np.zeros(dim, dtype=np.uint8)
    for bit in range(nq):
        pop += ((s >> bit) & 1).astype(np.uint8)
    total = 0.0
    worst_imag = 0.0
    psi_c = psi.conj()
    for start in range(0, dim, block):
        a = s[start : start + block]
        g = psi_c[a[:, None] ^ s[None, :]] * psi[None, :]
        f = _wht_last_axis(g)
        phase = _PHASE[(pop[a[:, None] & s[None, :]] & 3)]
        vals = f * phase
        worst_imag = max(worst_imag, float(np.max(np.abs(vals.imag))))
        total += float(np.sum(vals.real ** (2 * n)))
    if worst_imag > 1e-8:
        raise NumericGuardError(f"pauli expectations not real (residue {worst_imag:.3e})")
    return float(np.log(total / dim) / (1 - n))


def pauli_expectation_statevector(psi: np.ndarray, p: PauliString | str) -> float:
    """Single <psi|P|psi> by bit-mask action (reference path)."""
    if isinstance(p, str):
        p = PauliString.from_label(p)
    psi = np.asarray(psi, dtype=complex).ravel()
    nq = int(np.log2(psi.size))
    if len(p) != nq:
        raise ValueError(f"word length {len(p)} != {nq} qubits")
    a = b = 0
    ny = 0
    for k, alpha in enumerate(p.word):
        bit = 1 << (nq - 1 - k)  # site 1 = most significant bit
        if alpha in (1, 2):
            a |= bit
        if alpha in (3, 2):
            b |= bit
        if alpha == 2:
            ny += 1
    s = np.arange(psi.size)
    signs = 1.0 - 2.0 * (np.bitwise_count(b & s) & 1).astype(float)
    val = complex(1j**ny * np.sum(psi.conj()[s ^ a] * signs * psi))
    if abs(val.imag) > 1e-8:
        raise NumericGuardError(f"pauli expectation not real: {val}")
    return float(val.real)


def statevector_sre_reference(psi: np.ndarray, n: int = 2) -> float:
    """Per-string bit-mask enumeration, N <= 8.  Slow; for cross-checks."""
    psi = np.asarray(psi, dtype=complex).ravel()
    nq = _check_state(psi, 8)
    total = 0.0
    for idx in range(4**nq):
        p = PauliString.from_index(idx, nq)
        total += pauli_expectation_statevector(psi, p) ** (2 * n)
    return float(np.log(total / psi.size) / (1 - n))


def dump_pauli_expectations(path, psi: np.ndarray) -> None:
    """Debug CSV (pauli_index,label,expectation) of all words, N <= 6."""
    psi = np.asarray(psi, dtype=complex).ravel()
    nq = _check_state(psi, 6)
    with open(path, "w") as f:
        f.write("pauli_index,label,expectation\n")
        for idx in range(4**nq):
            p = PauliString.from_index(idx, nq)
            f.write(f"{idx},{p},{pauli_expectation_statevector(psi, p):.17g}\n")


# -- transverse-field Ising chain ---------------------------------------


def ising_dense_hamiltonian(n_sites: int, h: float) -> np.ndarray:
    """H = -sum_k X_k X_{k+1} - h sum_k Z_k, open chain, dense (N <= 12)."""
    if n_sites > 12:
        raise SizeGuardError(f"dense Hamiltonian refused for N={n_sites}")
    x = np.array([[0.0, 1.0], [1.0, 0.0]])
    z = np.array([[1.0, 0.0], [0.0, -1.0]])
    dim = 2**n_sites
    ham = np.zeros((dim, dim))

    def embed(op: np.ndarray, k: int) -> np.ndarray:
        left = np.eye(2**k)
        right = np.eye(2 ** (n_sites - k - int(np.log2(op.shape[0]))))
        return np.kron(np.kron(left, op), right)

    xx = np.kron(x, x)
    for k in range(n_sites - 1):
        ham -= embed(xx, k)
    for k in range(n_sites):
        ham -= h * embed(z, k)
    return ham


def ising_sparse_hamiltonian(n_sites: int, h: float) -> scipy.sparse.csr_matrix:
    x = scipy.sparse.csr_matrix(np.array([[0.0, 1.0], [1.0, 0.0]]))
    z = scipy.sparse.csr_matrix(np.array([[1.0, 0.0], [0.0, -1.0]]))
    eye = scipy.sparse.identity

    def embed(op, k, width):
        return scipy.sparse.kron(
            scipy.sparse.kron(eye(2**k), op), eye(2 ** (n_sites - k - width)), format="csr"
        )

    ham = scipy.sparse.csr_matrix((2**n_sites, 2**n_sites))
    xx = scipy.sparse.kron(x, x)
    for k in range(n_sites - 1):
        ham = ham - embed(xx, k, 2)
    for k in range(n_sites):
        ham = ham - h * embed(z, k, 1)
    return ham.tocsr()


def ed_ground_state(n_sites: int, h: float) -> tuple[float, np.ndarray]:
    """Ground energy and state; dense eigh up to N=10, Lanczos to N=14.

    The returned vector is normalized, with the largest-magnitude
    amplitude made real positive, and satisfies ||Hv - Ev|| <= 1e-9.
    """
    if n_sites > 14:
        raise SizeGuardError(f"exact diagonalization refused for N={n_sites} (limit 14)")
    if n_sites <= 10:
        ham = ising_dense_hamiltonian(n_sites, h)
        vals, vecs = scipy.linalg.eigh(ham)
        energy, vec = float(vals[0]), vecs[:, 0]
        hv = ham @ vec
    else:
        ham = ising_sparse_hamiltonian(n_sites, h)
        v0 = np.ones(2**n_sites) / np.sqrt(2**n_sites)
        vals, vecs = scipy.sparse.linalg.eigsh(ham, k=1, which="SA", v0=v0, tol=0)
        energy, vec = float(vals[0]), vecs[:, 0]
        hv = ham @ vec
    resid = float(np.linalg.norm(hv - energy * vec))
    if resid > 1e-9 * max(1.0, abs(energy)):
        raise NumericGuardError(f"eigenpair residual {resid:.3e} too large")
    vec = vec / np.linalg.norm(vec)
    k = int(np.argmax(np.abs(vec)))
    vec = vec * (np.conj(vec[k]) / abs(vec[k]))
    return energy, vec


# -- Clifford circuit fixtures ------------------------------------------


def apply_gate_statevector(psi: np.ndarray, gate: np.ndarray, site: int, n_sites: int) -> np.ndarray:
    """Apply a 1- or 2-site gate at ``site`` (acting on site, site+1 when
    two-site) to dense amplitudes with site 1 slowest."""
    width = int(np.log2(gate.shape[0]))
    left = 2**site
    right = 2 ** (n_sites - site - width)
    v = psi.reshape(left, 2**width, right)
    g = np.asarray(gate)
    return np.einsum("st,atb->asb", g, v, optimize=True).reshape(-1)


def clifford_fixtures(
    seed: int,
    n_sites: int,
    depth: int,
    max_chi: int | None = None,
) -> tuple[np.ndarray, MPS]:
    """Random H/S/CNOT circuit applied to |0...0>, in both representations.

    Layers alternate single-qubit gates (H or S, coin-flipped per site)
    with brickwork CNOTs.  When ``max_chi`` is given, a CNOT whose exact
    splitting would push a bond beyond it is skipped; the dense and MPS
    histories always receive the identical accepted gate sequence.
    """
    rng = np.random.default_rng(seed)
    zero = np.zeros(2, dtype=complex)
    zero[0] = 1.0
    psi_mps = product_state(zero, n_sites)
    accepted: list[tuple[np.ndarray, int]] = []
    for layer in range(depth):
        for k in range(n_sites):
            r = rng.random()
            if r < 1.0 / 3.0:
                gate = HADAMARD
            elif r < 2.0 / 3.0:
                gate = PHASE_S
            else:
                continue
            psi_mps = psi_mps.apply_one_site(gate, site=k)
            accepted.append((gate, k))
        offset = layer % 2
        for k in range(offset, n_sites - 1, 2):
            if rng.random() < 0.5:
                trial, _ = psi_mps.apply_two_site(CNOT, k, cutoff=1e-14)
                if max_chi is not None and trial.max_bond > max_chi:
                    continue
                psi_mps = trial
                accepted.append((CNOT, k))
    psi_vec = np.zeros(2**n_sites, dtype=complex)
    psi_vec[0] = 1.0
    for gate, k in accepted:
        psi_vec = apply_gate_statevector(psi_vec, gate, k, n_sites)
    return psi_vec, psi_mps
