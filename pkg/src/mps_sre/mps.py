"""Matrix product states with open or periodic boundaries.

Site tensors have shape (chi_left, d, chi_right), row-major.  Open-boundary
states absorb the boundary vectors into the edge tensors, so the first
tensor has chi_left = 1 and the last has chi_right = 1.  Periodic states
wrap the last bond onto the first; translation-invariant (TI) states share
one tensor object across all sites and are always periodic.

All chain contractions ("ladders") accumulate an overall scale in the log
domain so that norms of long chains neither overflow nor underflow.
"""

from __future__ import annotations

import struct
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from .errors import (
    DimensionMismatchError,
    FixtureError,
    NumericGuardError,
    SizeGuardError,
)
from .paulis import PAULIS, PauliString
from .tensors import svd_truncate

__all__ = [
    "MPS",
    "T_LOCAL",
    "product_state",
    "ghz_state",
    "random_mps",
    "random_ti_tensor",
    "from_statevector",
    "mps_tensor_product",
    "mps_sum",
    "state_transfer_matrix",
    "save_mps",
    "load_mps",
    "write_pauli_expectations",
]

# single-qubit magic state (|0> + e^{i pi/4} |1>)/sqrt(2)
T_LOCAL = np.array([1.0, np.exp(0.25j * np.pi)], dtype=complex) / np.sqrt(2.0)

_MAGIC = b"MPS1"


class MPS:
    """A finite matrix product state.

    Parameters
    ----------
    tensors:
        Site tensors, each of shape (chi_l, d, chi_r).
    boundary:
        "obc" (edge bonds of extent 1) or "pbc" (last bond wraps onto the
        first).
    ti:
        Translation invariant: all entries of ``tensors`` must be the very
        same array object and the boundary must be periodic.
    """

    def __init__(self, tensors: Sequence[np.ndarray], boundary: str = "obc", ti: bool = False):
        tensors = list(tensors)
        if not tensors:
            raise DimensionMismatchError("an MPS needs at least one site")
        if boundary not in ("obc", "pbc"):
            raise DimensionMismatchError(f"boundary must be 'obc' or 'pbc', got {boundary!r}")
        for k, t in enumerate(tensors):
            if t.ndim != 3:
                raise DimensionMismatchError(f"site {k} tensor has shape {t.shape}, expected 3 axes")
        for k in range(len(tensors) - 1):
            if tensors[k].shape[2] != tensors[k + 1].shape[0]:
                raise DimensionMismatchError(
                    f"bond mismatch between sites {k} and {k + 1}: "
                    f"{tensors[k].shape[2]} vs {tensors[k + 1].shape[0]}"
                )
        if boundary == "obc":
            if tensors[0].shape[0] != 1 or tensors[-1].shape[2] != 1:
                raise DimensionMismatchError(
                    "open boundaries require edge bond extent 1 "
                    "(boundary vectors are absorbed into the edge tensors)"
                )
        else:
            if tensors[-1].shape[2] != tensors[0].shape[0]:
                raise DimensionMismatchError("periodic boundary requires matching wrap bond")
        if ti:
            if boundary != "pbc":
                raise DimensionMismatchError("translation-invariant states must be periodic")
            if any(t is not tensors[0] for t in tensors):
                raise DimensionMismatchError("ti=True requires all sites to share one tensor object")
        self.tensors = tensors
        self.boundary = boundary
        self.ti = ti

    # -- basic structure ------------------------------------------------

    @classmethod
    def translation_invariant(cls, tensor: np.ndarray, n_sites: int) -> "MPS":
        return cls([tensor] * n_sites, boundary="pbc", ti=True)

    @property
    def n_sites(self) -> int:
        return len(self.tensors)

    @property
    def phys_dims(self) -> tuple[int, ...]:
        return tuple(t.shape[1] for t in self.tensors)

    @property
    def bond_dims(self) -> tuple[int, ...]:
        """Bond extents (chi_0, ..., chi_N); for OBC both edges are 1."""
        return tuple([self.tensors[0].shape[0]] + [t.shape[2] for t in self.tensors])

    @property
    def max_bond(self) -> int:
        return max(self.bond_dims)

    def copy(self) -> "MPS":
        if self.ti:
            return MPS.translation_invariant(self.tensors[0].copy(), self.n_sites)
        return MPS([t.copy() for t in self.tensors], self.boundary)

    def conj(self) -> "MPS":
        if self.ti:
            return MPS.translation_invariant(self.tensors[0].conj(), self.n_sites)
        return MPS([t.conj() for t in self.tensors], self.boundary)

    # -- ladders --------------------------------------------------------

    def _ladder(self, bra: "MPS", ops: Sequence[np.ndarray | None] | None = None):
        """Contract <bra|O|self> site by site.

        Returns (log_scale, value) with the true scalar equal to
        value * exp(log_scale).  For periodic states the ladder carries a
        chi^2 x chi^2 environment and closes with a trace.
        """
        if bra.n_sites != self.n_sites:
            raise DimensionMismatchError("bra and ket must have the same number of sites")
        n = self.n_sites
        if ops is None:
            ops = [None] * n
        log_scale = 0.0
        if self.boundary == "obc" and bra.boundary == "obc":
            env = np.ones((1, 1), dtype=np.result_type(self.tensors[0], bra.tensors[0]))
            for k in range(n):
                a = bra.tensors[k]
                b = self.tensors[k]
                if ops[k] is None:
                    env = np.einsum("ab,asc,bsd->cd", env, a.conj(), b, optimize=True)
                else:
                    env = np.einsum(
                        "ab,asc,st,btd->cd", env, a.conj(), ops[k], b, optimize=True
                    )
                scale = np.max(np.abs(env))
                if scale > 0.0:
                    env /= scale
                    log_scale += float(np.log(scale))
            return log_scale, complex(env[0, 0])
        # periodic: environment indexed by (bra bond, ket bond) pairs
        chi_b = bra.tensors[0].shape[0]
        chi_k = self.tensors[0].shape[0]
        env = np.einsum("ac,bd->abcd", np.eye(chi_b), np.eye(chi_k)).reshape(
            chi_b * chi_k, chi_b * chi_k
        )
        env = env.astype(np.result_type(self.tensors[0], bra.tensors[0]))
        for k in range(n):
            a = bra.tensors[k]
            b = self.tensors[k]
            if ops[k] is None:
                site = np.einsum("asc,bsd->abcd", a.conj(), b, optimize=True)
            else:
                site = np.einsum("asc,st,btd->abcd", a.conj(), ops[k], b, optimize=True)
            site = site.reshape(a.shape[0] * b.shape[0], a.shape[2] * b.shape[2])
            env = env @ site
            scale = np.max(np.abs(env))
            if scale > 0.0:
                env /= scale
                log_scale += float(np.log(scale))
        return log_scale, complex(np.trace(env))

    def log_norm_squared(self) -> float:
        log_scale, value = self._ladder(self)
        v = value.real
        if v <= 0.0:
            return -np.inf
        return log_scale + float(np.log(v))

    def norm_squared(self) -> float:
        log_scale, value = self._ladder(self)
        return float(value.real) * float(np.exp(log_scale))

    def overlap(self, other: "MPS") -> complex:
        """<self|other> (self is the bra)."""
        log_scale, value = other._ladder(self)
        return value * np.exp(log_scale)

    def log_overlap(self, other: "MPS") -> tuple[float, complex]:
        """(log |<self|other>|, phase) with phase on the unit circle."""
        log_scale, value = other._ladder(self)
        mag = abs(value)
        if mag == 0.0:
            return -np.inf, 1.0 + 0.0j
        return log_scale + float(np.log(mag)), value / mag

    def expectation_pauli(self, p: PauliString | str) -> float:
        """Normalized expectation <psi|P|psi> / <psi|psi> of a Pauli word."""
        if isinstance(p, str):
            p = PauliString.from_label(p)
        if len(p) != self.n_sites:
            raise DimensionMismatchError(
                f"pauli word length {len(p)} != number of sites {self.n_sites}"
            )
        ops = [PAULIS[a] for a in p.word]
        log_num, num = self._ladder(self, ops)
        log_den, den = self._ladder(self)
        if den == 0:
            raise NumericGuardError("expectation of a zero-norm state")
        val = (num / den.real) * np.exp(log_num - log_den)
        if abs(val.imag) > 1e-10 * max(1.0, abs(val)):
            raise NumericGuardError(
                f"pauli expectation has imaginary residue {val.imag:.3e}"
            )
        return float(val.real)

    # -- gates ----------------------------------------------------------

    def apply_one_site(self, v: np.ndarray, site: int | None = None, check_unitary: bool = True) -> "MPS":
        """Apply a d x d unitary on one site (or on every site if None)."""
        d = self.phys_dims[0]
        v = np.asarray(v)
        if v.shape != (d, d):
            raise DimensionMismatchError(f"one-site operator must be {d}x{d}, got {v.shape}")
        if check_unitary and np.max(np.abs(v.conj().T @ v - np.eye(d))) > 1e-8:
            raise ValueError("one-site operator is not unitary within 1e-8")
        if self.ti and site is None:
            t = np.einsum("st,atb->asb", v, self.tensors[0])
            return MPS.translation_invariant(t, self.n_sites)
        sites = range(self.n_sites) if site is None else [site]
        tensors = list(self.tensors)
        for k in sites:
            tensors[k] = np.einsum("st,atb->asb", v, tensors[k])
        return MPS(tensors, self.boundary)

    def apply_two_site(
        self,
        g: np.ndarray,
        k: int,
        max_chi: int | None = None,
        cutoff: float = 0.0,
    ) -> tuple["MPS", float]:
        """Apply a two-site gate on sites (k, k+1) and re-split by SVD.

        The gate is (d^2 x d^2) with row multi-index (s_k, s_{k+1}), site k
        slowest.  Returns the new state and the discarded squared weight.
        With cutoff 0 and no rank cap the splitting is exact and the bond
        at most doubles ... d times.
        """
        if self.boundary != "obc":
            raise DimensionMismatchError("two-site gates are implemented for open boundaries")
        if not 0 <= k < self.n_sites - 1:
            raise DimensionMismatchError(f"bond {k} out of range")
        a, b = self.tensors[k], self.tensors[k + 1]
        d1, d2 = a.shape[1], b.shape[1]
        g = np.asarray(g)
        if g.shape != (d1 * d2, d1 * d2):
            raise DimensionMismatchError(f"two-site gate must be {d1 * d2}x{d1 * d2}")
        theta = np.einsum("asb,btc->astc", a, b, optimize=True)
        g4 = g.reshape(d1, d2, d1, d2)
        theta = np.einsum("stuv,auvc->astc", g4, theta, optimize=True)
        chi_l, chi_r = a.shape[0], b.shape[2]
        m = theta.reshape(chi_l * d1, d2 * chi_r)
        u, s, v, discarded = svd_truncate(m, max_rank=max_chi, cutoff=cutoff)
        r = len(s)
        tensors = list(self.tensors)
        tensors[k] = u.reshape(chi_l, d1, r)
        tensors[k + 1] = (s[:, None] * v).reshape(r, d2, chi_r)
        return MPS(tensors, self.boundary), discarded

    # -- canonical form -------------------------------------------------

    def canonicalize(self, center: int = 0) -> "MPS":
        """Mixed canonical form: left-orthogonal before ``center``,
        right-orthogonal after it.  Open boundaries only."""
        if self.boundary != "obc":
            raise DimensionMismatchError("canonical form is defined here for open boundaries")
        if not 0 <= center < self.n_sites:
            raise DimensionMismatchError(f"center {center} out of range")
        tensors = [t.copy() for t in self.tensors]
        for k in range(center):
            chi_l, d, chi_r = tensors[k].shape
            q, r = np.linalg.qr(tensors[k].reshape(chi_l * d, chi_r))
            tensors[k] = q.reshape(chi_l, d, q.shape[1])
            tensors[k + 1] = np.einsum("ab,bsc->asc", r, tensors[k + 1])
        for k in range(self.n_sites - 1, center, -1):
            chi_l, d, chi_r = tensors[k].shape
            r, q = scipy.linalg.rq(tensors[k].reshape(chi_l, d * chi_r), mode="economic")
            tensors[k] = q.reshape(q.shape[0], d, chi_r)
            tensors[k - 1] = np.einsum("asb,bc->asc", tensors[k - 1], r)
        return MPS(tensors, self.boundary)

    def compress(
        self, max_chi: int | None = None, cutoff: float = 0.0
    ) -> tuple["MPS", float]:
        """Globally truncate every bond to ``max_chi`` (and/or by ``cutoff``).

        Right-canonicalizes first so each local SVD sees the true Schmidt
        spectrum, then sweeps left to right keeping the ``max_chi``
        largest singular values per bond.  Returns the truncated state
        and the summed discarded squared weight.  The norm is left as-is
        (truncation lowers it slightly); open boundaries only.
        """
        if self.boundary != "obc":
            raise DimensionMismatchError("compression is implemented for open boundaries")
        if cutoff == 0.0 and (max_chi is None or self.max_bond <= max_chi):
            return self, 0.0
        out = self.canonicalize(0)
        tensors = out.tensors
        discarded_total = 0.0
        for k in range(self.n_sites - 1):
            chi_l, d, chi_r = tensors[k].shape
            u, s, v, discarded = svd_truncate(
                tensors[k].reshape(chi_l * d, chi_r), max_rank=max_chi, cutoff=cutoff
            )
            discarded_total += discarded
            r = len(s)
            tensors[k] = u.reshape(chi_l, d, r)
            tensors[k + 1] = np.einsum(
                "ab,bsc->asc", s[:, None] * v, tensors[k + 1]
            )
        return MPS(tensors, self.boundary), discarded_total

    # -- conversion -----------------------------------------------------

    def to_statevector(self) -> np.ndarray:
        """Dense amplitudes, site 1 slowest (most significant).  N <= 20."""
        if self.n_sites > 20:
            raise SizeGuardError(f"statevector of {self.n_sites} sites refused (N <= 20)")
        if self.boundary == "obc":
            acc = self.tensors[0][0]  # (d, chi)
            for t in self.tensors[1:]:
                acc = np.tensordot(acc, t, axes=(acc.ndim - 1, 0))
            return np.ascontiguousarray(acc[..., 0].reshape(-1))
        chi = self.tensors[0].shape[0]
        acc = np.eye(chi, dtype=self.tensors[0].dtype)[:, None, :]  # (chi, 1, chi)
        for t in self.tensors:
            acc = np.einsum("apb,bsc->apsc", acc, t, optimize=True)
            acc = acc.reshape(chi, -1, t.shape[2])
        return np.ascontiguousarray(np.einsum("apa->p", acc))


# -- fixtures -----------------------------------------------------------


def product_state(locals_: Sequence[np.ndarray] | np.ndarray, n_sites: int | None = None) -> MPS:
    """Product state from per-site local vectors.

    Pass a list of local vectors, or one vector plus ``n_sites`` to repeat
    it across the chain.
    """
    if isinstance(locals_, np.ndarray) and locals_.ndim == 1:
        if n_sites is None:
            raise DimensionMismatchError("a single local vector needs n_sites")
        locals_ = [locals_] * n_sites
    tensors = [np.asarray(v, dtype=complex).reshape(1, -1, 1) for v in locals_]
    return MPS(tensors)


def ghz_state(n_sites: int, normalized: bool = True) -> MPS:
    """GHZ state with amplitudes (1, 0, ..., 0, 1), divided by sqrt(2) if
    normalized.  Bond dimension 2."""
    if n_sites < 2:
        raise DimensionMismatchError("GHZ needs at least 2 sites")
    first = np.zeros((1, 2, 2), dtype=complex)
    first[0, 0, 0] = 1.0
    first[0, 1, 1] = 1.0
    if normalized:
        first /= np.sqrt(2.0)
    mid = np.zeros((2, 2, 2), dtype=complex)
    mid[0, 0, 0] = 1.0
    mid[1, 1, 1] = 1.0
    last = np.zeros((2, 2, 1), dtype=complex)
    last[0, 0, 0] = 1.0
    last[1, 1, 0] = 1.0
    return MPS([first] + [mid.copy() for _ in range(n_sites - 2)] + [last])


def random_mps(
    n_sites: int,
    chi: int,
    seed: int,
    normalized: bool = True,
    dtype=complex,
) -> MPS:
    """Random OBC state with interior bonds min(chi, 2^k, 2^(N-k))."""
    rng = np.random.default_rng(seed)
    d = 2
    bonds = [1] + [min(chi, 2 ** min(k, n_sites - k)) for k in range(1, n_sites)] + [1]
    tensors = []
    for k in range(n_sites):
        shape = (bonds[k], d, bonds[k + 1])
        t = rng.standard_normal(shape)
        if dtype is complex or dtype is np.complex128:
            t = t + 1j * rng.standard_normal(shape)
        tensors.append(t / np.sqrt(shape[0] * d))
    psi = MPS(tensors)
    if normalized:
        shift = psi.log_norm_squared() / (2.0 * n_sites)
        psi = MPS([t * np.exp(-shift) for t in psi.tensors])
    return psi


def state_transfer_matrix(a: np.ndarray) -> np.ndarray:
    """Transfer matrix sum_s A^s (x) conj(A^s) as a chi^2 x chi^2 matrix.

    Compound index (ket bond, conjugate bond), ket slowest.
    """
    chi = a.shape[0]
    t = np.einsum("asb,csd->acbd", a, a.conj(), optimize=True)
    return t.reshape(chi * chi, chi * chi)


def random_ti_tensor(chi: int, seed: int, normality_check: bool = True) -> np.ndarray:
    """Random normal TI tensor (chi, 2, chi), scaled so the leading
    transfer eigenvalue is 1.

    Resamples (up to 100 draws) until the transfer spectrum has a clear
    gap and a real positive leading eigenvalue; raises FixtureError if no
    draw passes.
    """
    rng = np.random.default_rng(seed)
    for _ in range(100):
        a = rng.standard_normal((chi, 2, chi)) + 1j * rng.standard_normal((chi, 2, chi))
        a /= np.sqrt(2.0 * chi)
        tau = state_transfer_matrix(a)
        vals = np.linalg.eigvals(tau)
        vals = vals[np.argsort(-np.abs(vals))]
        lam0 = vals[0]
        if abs(lam0) == 0.0:
            continue
        if normality_check:
            if abs(lam0.imag) > 1e-10 * abs(lam0):
                continue
            if len(vals) > 1 and abs(vals[1]) / abs(lam0) > 1.0 - 1e-6:
                continue
        return a / np.sqrt(lam0.real if normality_check else abs(lam0))
    raise FixtureError(f"no acceptable TI tensor found for chi={chi}, seed={seed}")


def from_statevector(vec: np.ndarray, max_chi: int | None = None, cutoff: float = 0.0) -> MPS:
    """Exact (or truncated) MPS of a 2^N amplitude vector by repeated SVD."""
    vec = np.asarray(vec)
    n = int(np.log2(vec.size))
    if 2**n != vec.size:
        raise DimensionMismatchError(f"amplitude count {vec.size} is not a power of 2")
    tensors = []
    rest = vec.reshape(1, -1)
    for _ in range(n - 1):
        chi_l = rest.shape[0]
        m = rest.reshape(chi_l * 2, -1)
        u, s, v, _ = svd_truncate(m, max_rank=max_chi, cutoff=cutoff)
        tensors.append(u.reshape(chi_l, 2, len(s)))
        rest = s[:, None] * v
    tensors.append(rest.reshape(rest.shape[0], 2, 1))
    return MPS(tensors)


def mps_tensor_product(a: MPS, b: MPS) -> MPS:
    """State a (x) b on the concatenated chain (open boundaries)."""
    if a.boundary != "obc" or b.boundary != "obc":
        raise DimensionMismatchError("tensor product implemented for open boundaries")
    return MPS([t.copy() for t in a.tensors] + [t.copy() for t in b.tensors])


def mps_sum(a: MPS, b: MPS) -> MPS:
    """Superposition |a> + |b> as a direct-sum MPS (open boundaries).

    Bond dimensions add; the result is not normalized or compressed --
    chain with ``compress`` when the summands overlap strongly.
    """
    if a.boundary != "obc" or b.boundary != "obc":
        raise DimensionMismatchError("mps_sum is implemented for open boundaries")
    if a.n_sites != b.n_sites:
        raise DimensionMismatchError(
            f"cannot add states on {a.n_sites} and {b.n_sites} sites"
        )
    if a.phys_dims != b.phys_dims:
        raise DimensionMismatchError("cannot add states with different site dimensions")
    if a.n_sites == 1:
        return MPS([a.tensors[0] + b.tensors[0]])
    last = a.n_sites - 1
    tensors = []
    for k, (x, y) in enumerate(zip(a.tensors, b.tensors)):
        if k == 0:
            tensors.append(np.concatenate([x, y], axis=2))
        elif k == last:
            tensors.append(np.concatenate([x, y], axis=0))
        else:
            la, d, ra = x.shape
            lb, _, rb = y.shape
            t = np.zeros((la + lb, d, ra + rb), dtype=np.result_type(x, y))
            t[:la, :, :ra] = x
            t[la:, :, ra:] = y
            tensors.append(t)
    return MPS(tensors)


# -- serialization ------------------------------------------------------


def save_mps(path, psi: MPS) -> None:
    """Binary container: magic 'MPS1', counts, shapes, then the tensors as
    row-major complex128 little-endian (re, im) pairs."""
    d = psi.phys_dims[0]
    if any(p != d for p in psi.phys_dims):
        raise DimensionMismatchError("serialization requires a uniform physical dimension")
    with open(path, "wb") as f:
        f.write(_MAGIC)
        f.write(struct.pack("<IIBBH", psi.n_sites, d, 0 if psi.boundary == "obc" else 1,
                            1 if psi.ti else 0, 0))
        for t in psi.tensors:
            f.write(struct.pack("<II", t.shape[0], t.shape[2]))
        for t in psi.tensors:
            f.write(np.ascontiguousarray(t, dtype="<c16").tobytes())


def load_mps(path) -> MPS:
    with open(path, "rb") as f:
        if f.read(4) != _MAGIC:
            raise ValueError(f"{path}: not an MPS container")
        n, d, boundary, ti, _ = struct.unpack("<IIBBH", f.read(12))
        shapes = [struct.unpack("<II", f.read(8)) for _ in range(n)]
        tensors = []
        for chi_l, chi_r in shapes:
            count = chi_l * d * chi_r
            buf = f.read(16 * count)
            t = np.frombuffer(buf, dtype="<c16").reshape(chi_l, d, chi_r)
            tensors.append(t.astype(complex))
    if ti:
        return MPS.translation_invariant(tensors[0], n)
    return MPS(tensors, "obc" if boundary == 0 else "pbc")


def write_pauli_expectations(path, psi: MPS, strings: Iterable[PauliString | str]) -> None:
    """CSV table (pauli, expectation) for the given Pauli words."""
    with open(path, "w") as f:
        f.write("pauli,expectation\n")
        for p in strings:
            label = p if isinstance(p, str) else str(p)
            f.write(f"{label},{psi.expectation_pauli(label):.17g}\n")
