"""Replica-network evaluation of stabilizer Renyi entropies for MPS.

The normalized Pauli-spectrum sum sum_P <P>^{2n} / 2^N of an MPS is the
squared norm of a *replica* tensor network: 2n copies of the state glued
site-by-site through the rank-4^{n-1} channel map

    lam = (1/2) * sum_{alpha in {I,X,Y,Z}} m_0 x m_1 x ... x m_{2n-1}

acting on the 2n copies of one site, with per-copy factors m_r drawn
from sigma_alpha (and its complex conjugate, depending on the variant).
Because lam is a sum of only four product operators, the norm ladder
factorizes into per-copy chi^2 x chi^2 bond maps and never needs the
replica tensor itself; that is the default evaluation path.

Two interchangeable variants of the channel exist:

* ``conj`` — copies alternate state / conjugated state; per-copy factors
  alternate sigma_alpha / conj(sigma_alpha).  Valid for every n >= 2.
* ``sym`` — all 2n copies carry the state itself and the factor
  (sigma_alpha)^{x 2n}.  Valid (positive semidefinite) only for n = 2,
  where its four identical copies admit an exact bond compression onto
  the sector invariant under the double-transposition permutations
  {e, (01)(23), (02)(13), (03)(12)}, shrinking the replica bond from
  chi^4 to chi^2 (3 + chi^2) / 4 (``sym-compressed``).

Copy and leg conventions (pinned by tests):

* copies are numbered r = 0 .. 2n-1; even r is a state copy, odd r its
  conjugate in the ``conj`` variant; pair j holds copies (2j, 2j+1);
* every multi-index over copies puts copy 0 slowest, matching np.kron;
* factorized-ladder environments carry one axis per copy, each axis a
  compound (bra bond, ket bond) with the bra bond slowest;
* replica MPS tensors are stored (left bond, channel, right bond) with
  4^{n-1} channel states, and bond multi-indices again copy-0 slowest.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from functools import lru_cache, reduce

import numpy as np
import scipy.sparse

from .errors import (
    DegenerateOverlapError,
    NormalizationError,
    NumericGuardError,
    SizeGuardError,
    VariantError,
)
from .mps import MPS, state_transfer_matrix
from .paulis import PAULIS, build_lambda, factor_gamma, replica_phys_dim
from .tensors import dominant_eig, eig_dense

__all__ = [
    "SreResult",
    "TiDensityResult",
    "TransferMatrix",
    "sre",
    "ti_density",
    "ti_finite_sre",
    "local_probe",
    "build_replica",
    "klein_projector",
    "klein_rank",
    "replica_transfer",
    "append_sre_row",
    "SRE_CSV_HEADER",
]

# real stand-in for sigma_y: sigma_y = i * _K.  With real state tensors
# the i factors cancel over the 2n copies in both variants, so the whole
# ladder stays in float64.
_K = np.array([[0.0, -1.0], [1.0, 0.0]])
_SIGMA_REAL = (
    np.eye(2),
    np.array([[0.0, 1.0], [1.0, 0.0]]),
    _K,
    np.array([[1.0, 0.0], [0.0, -1.0]]),
)

SRE_CSV_HEADER = "n,N,chi,variant,M,m,log_replica_norm,log_state_norm,gap_ratio"


# -- results -------------------------------------------------------------


@dataclass
class SreResult:
    """One stabilizer-entropy evaluation.

    ``M`` is the total entropy, ``m = M / N`` its per-site density;
    ``log_replica_norm`` is ln of the replica-network squared norm and
    ``log_state_norm`` ln of the state's squared norm (the evaluation
    never requires normalized input).  ``gap_ratio`` is the subleading /
    leading transfer-spectrum ratio where a spectral method was used,
    NaN otherwise.
    """

    n: int
    n_sites: int
    chi: int
    variant: str
    M: float
    m: float
    log_replica_norm: float
    log_state_norm: float
    gap_ratio: float = float("nan")
    diagnostics: dict = field(default_factory=dict)


@dataclass
class TiDensityResult:
    """Thermodynamic-limit entropy density of a translation-invariant MPS."""

    n: int
    chi: int
    variant: str
    m: float
    leading_eigenvalue: float
    gap_ratio: float
    converged: bool = True
    iterations: int = 0
    diagnostics: dict = field(default_factory=dict)


def append_sre_row(path, result: SreResult) -> None:
    """Append ``result`` to a CSV file, writing the header when new."""
    need_header = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, "a") as f:
        if need_header:
            f.write(SRE_CSV_HEADER + "\n")
        f.write(
            f"{result.n},{result.n_sites},{result.chi},{result.variant},"
            f"{result.M:.17g},{result.m:.17g},{result.log_replica_norm:.17g},"
            f"{result.log_state_norm:.17g},{result.gap_ratio:.17g}\n"
        )


# -- variants ------------------------------------------------------------


def _normalize_variant(variant: str | None, n: int) -> tuple[str, bool, str]:
    """Return (kind, compressed, csv_token)."""
    if variant is None:
        variant = "sym-compressed" if n == 2 else "conj"
    key = str(variant).lower().replace("_", "-")
    if key in ("conj", "conjugated"):
        return "conjugated", False, "conj"
    if key in ("sym", "symmetric"):
        return "symmetric", False, "sym"
    if key in ("sym-compressed", "symmetric-compressed", "compressed"):
        return "symmetric", True, "sym-compressed"
    raise VariantError(
        f"unknown variant {variant!r}: expected conj, sym, or sym-compressed"
    )


def _check_kind(kind: str, n: int) -> None:
    if n < 2 or int(n) != n:
        raise ValueError(f"replica index must be an integer >= 2, got {n}")
    if kind == "symmetric" and n != 2:
        if n % 2:
            raise VariantError(
                f"symmetric channel is not positive semidefinite for odd n={n}"
            )
        raise VariantError(f"symmetric channel only implemented for n=2, got n={n}")


def _ensure_qubit_mps(psi: MPS) -> None:
    if any(d != 2 for d in psi.phys_dims):
        raise ValueError(
            f"Pauli spectra are defined for qubit chains; got site dims {psi.phys_dims}"
        )


# -- factorized per-copy bond maps --------------------------------------


def _copy_maps(a: np.ndarray, kind: str, n: int) -> list[list[np.ndarray]]:
    """Per-alpha lists of 2n per-copy bond maps (chi_l^2 x chi_r^2 each).

    Copy r's map sends its compound (bra, ket) left-bond pair to the
    right-bond pair.  For real state tensors sigma_y is replaced by its
    real part-with-phase-stripped stand-in; the stripped i factors cancel
    across the 2n copies in both variants.
    """
    cl, _, cr = a.shape
    maps: list[list[np.ndarray]] = []
    if np.isrealobj(a):
        for sig in _SIGMA_REAL:
            w = np.einsum("asb,st,ctd->acbd", a, sig, a, optimize=True)
            w = np.ascontiguousarray(w.reshape(cl * cl, cr * cr))
            maps.append([w] * (2 * n))
        return maps
    ac = a.conj()
    for sig in PAULIS:
        w_even = np.einsum("asb,st,ctd->acbd", ac, sig, a, optimize=True)
        w_even = np.ascontiguousarray(w_even.reshape(cl * cl, cr * cr))
        w_odd = w_even.conj() if kind == "conjugated" else w_even
        maps.append([w_even, w_odd] * n)
    return maps


def _apply_copy_chain(g: np.ndarray, ws: list[np.ndarray]) -> tuple[np.ndarray, int]:
    """Contract each copy axis of ``g`` (copy 0 first) with its bond map.

    Each tensordot consumes the current leading axis and appends the
    mapped axis at the end, so after all 2n steps the copy order is
    restored.  Returns the new environment and the multiply-add count.
    """
    madds = 0
    for w in ws:
        madds += g.size * w.shape[1]
        g = np.tensordot(g, w, axes=([0], [0]))
    return g, madds


def _apply_channel(g: np.ndarray, maps: list[list[np.ndarray]]) -> tuple[np.ndarray, int]:
    """Apply the full channel transfer (1/2) sum_alpha x_r W_alpha^(r)."""
    out = None
    madds = 0
    for ws in maps:
        term, cnt = _apply_copy_chain(g, ws)
        madds += cnt
        out = term if out is None else out + term
    return 0.5 * out, madds


def _factorized_ladder(
    psi: MPS, n: int, kind: str, max_env_elements: int
) -> tuple[float, int]:
    """ln of the replica-network squared norm of an open chain."""
    worst = max(psi.bond_dims) ** (4 * n)
    if worst > max_env_elements:
        raise SizeGuardError(
            f"factorized ladder environment would hold {worst:.3g} elements "
            f"(limit {max_env_elements:.3g}); for n=2 use variant='sym-compressed'"
        )
    two_n = 2 * n
    env = np.ones((1,) * two_n)
    log_scale = 0.0
    madds = 0
    for a in psi.tensors:
        maps = _copy_maps(a, kind, n)
        env, cnt = _apply_channel(env, maps)
        madds += cnt
        scale = float(np.max(np.abs(env)))
        if scale == 0.0 or not np.isfinite(scale):
            raise NumericGuardError(f"replica ladder produced scale {scale}")
        env = env / scale
        log_scale += np.log(scale)
    val = complex(env.reshape(-1)[0])
    if abs(val.imag) > 1e-9 * max(1.0, abs(val)):
        raise NumericGuardError(f"replica norm not real: {val}")
    if val.real <= 0.0:
        raise NumericGuardError(f"replica norm not positive: {val}")
    return log_scale + float(np.log(val.real)), madds


# -- Klein-sector compression (sym variant, n = 2) -----------------------

_KLEIN_PERMS = ((0, 1, 2, 3), (1, 0, 3, 2), (2, 3, 0, 1), (3, 2, 1, 0))


def klein_rank(chi: int) -> int:
    """Dimension of the double-transposition-invariant bond sector."""
    return chi * chi * (3 + chi * chi) // 4


@lru_cache(maxsize=None)
def klein_projector(chi: int) -> scipy.sparse.csr_matrix:
    """Isometry Q (rank x chi^4) onto the invariant bond sector.

    Rows are indexed by orbits of 4-tuples over [chi] under the three
    double transpositions, in lexicographic order of each orbit's
    smallest member; each row spreads 1/sqrt(orbit size) over the orbit.
    Q Q^T = identity and Q^T Q is the sector projector.
    """
    if chi < 1:
        raise ValueError(f"bond dimension must be positive, got {chi}")
    data: list[float] = []
    cols: list[int] = []
    ptr = [0]
    for t0 in range(chi):
        for t1 in range(chi):
            for t2 in range(chi):
                for t3 in range(chi):
                    tup = (t0, t1, t2, t3)
                    orbit = {
                        (tup[p[0]], tup[p[1]], tup[p[2]], tup[p[3]])
                        for p in _KLEIN_PERMS
                    }
                    if tup != min(orbit):
                        continue
                    w = 1.0 / np.sqrt(len(orbit))
                    for m in sorted(orbit):
                        cols.append(((m[0] * chi + m[1]) * chi + m[2]) * chi + m[3])
                        data.append(w)
                    ptr.append(len(cols))
    q = scipy.sparse.csr_matrix(
        (np.array(data), np.array(cols, dtype=np.int64), np.array(ptr, dtype=np.int64)),
        shape=(len(ptr) - 1, chi**4),
    )
    assert q.shape[0] == klein_rank(chi)
    return q


@lru_cache(maxsize=None)
def _gamma_rows(n: int, kind: str) -> np.ndarray:
    token = "conjugated" if kind == "conjugated" else "symmetric"
    gamma = factor_gamma(build_lambda(n, token))
    assert gamma.shape[0] == replica_phys_dim(n)
    return gamma


def _compressed_site(
    a: np.ndarray, block_elements: int = 40_000_000
) -> np.ndarray:
    """Klein-compressed replica site tensor, stacked (4, rank_l, rank_r).

    Built channel by channel: the channel row of the glue map, reshaped
    over the four copy legs, is chained through four factors of the site
    tensor, then both chi^4 bond legs are rotated into the invariant
    sector.  The left bond is processed in slices so the uncompressed
    intermediate never exceeds ``block_elements`` entries.
    """
    gamma = _gamma_rows(2, "symmetric")
    cl, _, cr = a.shape
    ql = klein_projector(cl)
    qr_t = klein_projector(cr).T.tocsc()
    rl, rr = ql.shape[0], qr_t.shape[1]
    dtype = a.dtype if np.iscomplexobj(a) else np.float64
    out = np.zeros((4, rl, rr), dtype=dtype)
    rows_per_a0 = cl**3
    blk = max(1, block_elements // max(1, rows_per_a0 * cr**4))
    for s in range(4):
        x = gamma[s].reshape(2, 2, 2, 2).astype(dtype, copy=False)
        for a0 in range(0, cl, blk):
            a_first = a[a0 : a0 + blk]
            y = np.tensordot(x, a_first, axes=([0], [1]))
            for _ in range(3):
                y = np.tensordot(y, a, axes=([0], [1]))
            # axes now (a0, b0, a1, b1, a2, b2, a3, b3)
            y = y.transpose(0, 2, 4, 6, 1, 3, 5, 7)
            d_block = y.reshape(a_first.shape[0] * rows_per_a0, cr**4)
            proj_r = d_block @ qr_t
            col_lo = a0 * rows_per_a0
            ql_cols = ql[:, col_lo : col_lo + d_block.shape[0]]
            out[s] += ql_cols @ proj_r
    return out


def _compressed_ladder(psi: MPS) -> tuple[float, int]:
    """ln of the replica squared norm via the Klein-compressed ladder."""
    env = np.ones((1, 1))
    log_scale = 0.0
    madds = 0
    for a in psi.tensors:
        c = _compressed_site(a)
        _, rl, rr = c.shape
        new = np.zeros((rr, rr), dtype=np.result_type(env, c))
        for s in range(4):
            f = env @ c[s]
            new += c[s].conj().T @ f
            madds += rl * rl * rr + rl * rr * rr
        env = new
        scale = float(np.max(np.abs(env)))
        if scale == 0.0 or not np.isfinite(scale):
            raise NumericGuardError(f"compressed ladder produced scale {scale}")
        env = env / scale
        log_scale += np.log(scale)
    val = complex(env[0, 0])
    if abs(val.imag) > 1e-9 * max(1.0, abs(val)):
        raise NumericGuardError(f"replica norm not real: {val}")
    if val.real <= 0.0:
        raise NumericGuardError(f"replica norm not positive: {val}")
    return log_scale + float(np.log(val.real)), madds


# -- explicit replica network -------------------------------------------


def _replica_site(a: np.ndarray, n: int, kind: str) -> np.ndarray:
    """Full replica site tensor (chi_l^{2n}, 4^{n-1}, chi_r^{2n})."""
    gamma = _gamma_rows(n, kind)
    cl, _, cr = a.shape
    two_n = 2 * n
    copies = [a if (r % 2 == 0 or kind == "symmetric") else a.conj() for r in range(two_n)]
    d_out = replica_phys_dim(n)
    dtype = np.result_type(*(c.dtype for c in copies), gamma.dtype)
    out = np.empty((cl**two_n, d_out, cr**two_n), dtype=dtype)
    perm = tuple(range(0, 2 * two_n, 2)) + tuple(range(1, 2 * two_n, 2))
    for s in range(d_out):
        y = gamma[s].reshape((2,) * two_n).astype(dtype, copy=False)
        for c in copies:
            y = np.tensordot(y, c, axes=([0], [1]))
        out[:, s, :] = y.transpose(perm).reshape(cl**two_n, cr**two_n)
    return out


def build_replica(
    psi: MPS,
    n: int = 2,
    variant: str | None = None,
    compress: bool = False,
    max_elements: int = 100_000_000,
) -> MPS:
    """Materialize the replica network of ``psi`` as an MPS.

    The result has 4^{n-1} channel states per site and bond chi^{2n}
    (or the Klein-sector rank when ``compress`` is set, which requires
    the ``sym`` variant).  Its squared norm equals
    exp(n * ln<psi|psi>) * sum_P <P>^{2n} / 2^N for the normalized state.
    Intended for cross-checks at small bond dimension; ``sre`` never
    needs it.
    """
    _ensure_qubit_mps(psi)
    kind, compressed_flag, _ = _normalize_variant(variant, n)
    compress = compress or compressed_flag
    _check_kind(kind, n)
    if compress:
        if kind != "symmetric":
            raise VariantError("bond compression applies to the sym variant only")
        if psi.boundary != "obc":
            raise VariantError(
                "compressed replica networks are only valid on open chains"
            )
        for cl, cr in zip(psi.bond_dims[:-1], psi.bond_dims[1:]):
            if 4 * klein_rank(cl) * klein_rank(cr) > max_elements:
                raise SizeGuardError(
                    f"compressed replica site would exceed {max_elements:.3g} elements"
                )
        if psi.ti:
            shared = _compressed_site(psi.tensors[0]).transpose(1, 0, 2)
            tensors = [shared] * psi.n_sites
        else:
            tensors = [_compressed_site(a).transpose(1, 0, 2) for a in psi.tensors]
    else:
        d_out = replica_phys_dim(n)
        for cl, cr in zip(psi.bond_dims[:-1], psi.bond_dims[1:]):
            if d_out * (cl * cr) ** (2 * n) > max_elements:
                raise SizeGuardError(
                    f"explicit replica site would exceed {max_elements:.3g} elements; "
                    "use sre() (factorized) or compress=True"
                )
        if psi.ti:
            shared = _replica_site(psi.tensors[0], n, kind)
            tensors = [shared] * psi.n_sites
        else:
            tensors = [_replica_site(a, n, kind) for a in psi.tensors]
    if psi.ti:
        return MPS.translation_invariant(tensors[0], psi.n_sites)
    return MPS(tensors, boundary=psi.boundary)


# -- main entry point ----------------------------------------------------


def sre(
    psi: MPS,
    n: int = 2,
    variant: str | None = None,
    max_env_elements: int = 60_000_000,
) -> SreResult:
    """Stabilizer Renyi entropy of an MPS via the replica construction.

    Works for unnormalized input; the state norm is evaluated alongside
    and divided out in log space.  The default route is the compressed
    symmetric ladder for n = 2 and the factorized conjugated ladder for
    n >= 3.  Open chains are evaluated by the factorized/compressed
    ladders; periodic chains fall back to the explicit replica network,
    which is only feasible at small bond dimension.
    """
    _ensure_qubit_mps(psi)
    kind, compressed, token = _normalize_variant(variant, n)
    _check_kind(kind, n)
    log_state = psi.log_norm_squared()
    if not np.isfinite(log_state):
        raise NormalizationError("state has zero (or non-finite) norm", suggested_scale=None)
    diagnostics: dict = {"method": "compressed" if compressed else "factorized"}
    if psi.boundary == "pbc":
        if compressed:
            raise VariantError(
                "compressed replica networks are only valid on open chains; "
                "use variant='sym' or 'conj' for periodic input"
            )
        phi = build_replica(psi, n=n, variant=token, max_elements=max_env_elements)
        log_rep = phi.log_norm_squared()
        diagnostics = {"method": "explicit-pbc", "madds": None}
    elif compressed:
        log_rep, madds = _compressed_ladder(psi)
        diagnostics["madds"] = madds
    else:
        log_rep, madds = _factorized_ladder(psi, n, kind, max_env_elements)
        diagnostics["madds"] = madds
    # each of the 2n replica copies divides one <P> by the squared state
    # norm, so the normalized spectrum sum is exp(log_rep - 2n * log_state)
    total = (log_rep - 2 * n * log_state) / (1 - n)
    return SreResult(
        n=n,
        n_sites=psi.n_sites,
        chi=psi.max_bond,
        variant=token,
        M=float(total),
        m=float(total / psi.n_sites),
        log_replica_norm=float(log_rep),
        log_state_norm=float(log_state),
        diagnostics=diagnostics,
    )


# -- translation-invariant chains ---------------------------------------


class TransferMatrix:
    """Factorized replica bond transfer of one translation-invariant site.

    Acts on environments with one compound (bra, ket) axis per copy.
    ``apply`` consumes a flat vector or a (chi^2,)*2n tensor; ``dense``
    materializes the full chi^{4n} matrix for small bond dimension.
    """

    def __init__(self, a: np.ndarray, n: int, kind: str):
        a = np.asarray(a)
        if a.ndim != 3 or a.shape[0] != a.shape[2]:
            raise ValueError("translation-invariant site tensor must be (chi, d, chi)")
        self.n = n
        self.kind = kind
        self.chi = a.shape[0]
        self.maps = _copy_maps(a, kind, n)
        self.dim = (self.chi**2) ** (2 * n)
        self.dtype = np.result_type(*(w[0].dtype for w in self.maps))

    def apply(self, x: np.ndarray) -> np.ndarray:
        shape = (self.chi**2,) * (2 * self.n)
        g = np.asarray(x).reshape(shape)
        out, _ = _apply_channel(g, self.maps)
        return out.reshape(np.asarray(x).shape)

    def dense(self, max_dim: int = 4096) -> np.ndarray:
        if self.dim > max_dim:
            raise SizeGuardError(
                f"dense transfer of dimension {self.dim} exceeds limit {max_dim}"
            )
        out = None
        for ws in self.maps:
            term = reduce(np.kron, ws)
            out = term if out is None else out + term
        # kron(A, B) maps compound inputs with A's input slowest, matching
        # the copy-0-slowest environment layout, but builds the (out, in)
        # matrix while apply() consumes input axes: transpose to match.
        return 0.5 * out.T


def replica_transfer(a: np.ndarray | MPS, n: int = 2, variant: str | None = None) -> TransferMatrix:
    """Transfer operator for a translation-invariant site tensor."""
    if isinstance(a, MPS):
        if not a.ti:
            raise ValueError("expected a translation-invariant MPS or a bare tensor")
        a = a.tensors[0]
    kind, compressed, _ = _normalize_variant(variant if variant is not None else "conj", n)
    if compressed:
        raise VariantError("transfer operators are built in the uncompressed bond space")
    _check_kind(kind, n)
    return TransferMatrix(np.asarray(a), n, kind)


def _state_spectrum(a: np.ndarray):
    tau = state_transfer_matrix(a)
    if tau.shape[0] > 4096:
        raise SizeGuardError(
            f"state transfer dimension {tau.shape[0]} too large for the dense solver"
        )
    return eig_dense(tau, want_left=True)


def _normalized_ti_tensor(a: np.ndarray, normalize: bool) -> tuple[np.ndarray, "object"]:
    spec = _state_spectrum(a)
    lam0 = spec.eigenvalues[0]
    if abs(lam0.imag) > 1e-10 * max(1.0, abs(lam0)) or lam0.real <= 0.0:
        raise NumericGuardError(
            f"leading state-transfer eigenvalue {lam0} is not positive real"
        )
    lam0 = float(lam0.real)
    if normalize:
        if abs(lam0 - 1.0) > 1e-14:
            a = a / np.sqrt(lam0)
            spec = _state_spectrum(a)
    elif abs(lam0 - 1.0) > 1e-8:
        raise NormalizationError(
            f"site tensor is not norm-stationary (leading eigenvalue {lam0:.12g}); "
            "rescale or pass normalize=True",
            suggested_scale=1.0 / np.sqrt(lam0),
        )
    return a, spec


def ti_density(
    a: np.ndarray | MPS,
    n: int = 2,
    variant: str | None = None,
    normalize: bool = True,
    dense_dim_limit: int = 2048,
    tol: float = 1e-12,
    seed: int = 0,
) -> TiDensityResult:
    """Entropy density per site of an infinite translation-invariant MPS.

    The density is ln of the leading replica-transfer eigenvalue divided
    by (1 - n), after rescaling the site tensor so the state transfer has
    unit leading eigenvalue.  Small transfer dimensions use the dense
    spectrum (exact gap ratio); larger ones a deterministic two-vector
    orthogonal iteration.
    """
    if isinstance(a, MPS):
        if not a.ti:
            raise ValueError("expected a translation-invariant MPS or a bare tensor")
        a = a.tensors[0]
    a = np.asarray(a)
    kind, compressed, token = _normalize_variant(variant if variant is not None else "conj", n)
    if compressed:
        raise VariantError("the thermodynamic-limit path uses uncompressed transfers")
    _check_kind(kind, n)
    a, _ = _normalized_ti_tensor(a, normalize)
    transfer = TransferMatrix(a, n, kind)
    if transfer.dim <= dense_dim_limit:
        spec = eig_dense(transfer.dense(max_dim=dense_dim_limit), want_left=False)
        method = "dense"
    else:
        spec = dominant_eig(transfer.apply, transfer.dim, tol=tol, seed=seed)
        method = "iterative"
    lam0 = spec.eigenvalues[0]
    if abs(lam0.imag) > 1e-8 * max(1.0, abs(lam0)) or lam0.real <= 0.0:
        raise NumericGuardError(
            f"leading replica-transfer eigenvalue {lam0} is not positive real"
        )
    m = float(np.log(lam0.real) / (1 - n))
    return TiDensityResult(
        n=n,
        chi=a.shape[0],
        variant=token,
        m=m,
        leading_eigenvalue=float(lam0.real),
        gap_ratio=float(spec.gap_ratio),
        converged=bool(spec.converged),
        iterations=int(spec.iterations),
        diagnostics={"method": method, "residual": float(spec.residual)},
    )


def ti_finite_sre(
    a: np.ndarray,
    n_sites: int,
    n: int = 2,
    variant: str | None = None,
    dense_dim_limit: int = 2048,
) -> SreResult:
    """Exact entropy of a finite periodic ring of one repeated tensor.

    Both the replica and state norms are traces of transfer powers,
    evaluated from the full dense spectra; feasible only while the
    replica transfer dimension stays within ``dense_dim_limit``.
    """
    a = np.asarray(a)
    kind, compressed, token = _normalize_variant(variant if variant is not None else "conj", n)
    if compressed:
        raise VariantError("the periodic trace path uses uncompressed transfers")
    _check_kind(kind, n)
    if n_sites < 1:
        raise ValueError(f"need at least one site, got {n_sites}")
    transfer = TransferMatrix(a, n, kind)
    lam_rep = np.linalg.eigvals(transfer.dense(max_dim=dense_dim_limit))
    tau = state_transfer_matrix(a)
    if tau.shape[0] > dense_dim_limit:
        raise SizeGuardError(f"state transfer dimension {tau.shape[0]} too large")
    lam_state = np.linalg.eigvals(tau)

    def log_trace_power(lams: np.ndarray, p: int, label: str) -> float:
        top = float(np.max(np.abs(lams)))
        if top == 0.0:
            raise NumericGuardError(f"{label} transfer is nilpotent")
        s = complex(np.sum((lams / top) ** p))
        if abs(s.imag) > 1e-8 * max(1.0, abs(s)) or s.real <= 0.0:
            raise NumericGuardError(f"{label} trace power is not positive real: {s}")
        return p * float(np.log(top)) + float(np.log(s.real))

    log_rep = log_trace_power(lam_rep, n_sites, "replica")
    log_state = log_trace_power(lam_state, n_sites, "state")
    total = (log_rep - 2 * n * log_state) / (1 - n)
    mags = np.sort(np.abs(lam_rep))[::-1]
    gap = float(mags[1] / mags[0]) if mags.size > 1 and mags[0] > 0 else 0.0
    return SreResult(
        n=n,
        n_sites=n_sites,
        chi=a.shape[0],
        variant=token,
        M=float(total),
        m=float(total / n_sites),
        log_replica_norm=float(log_rep),
        log_state_norm=float(log_state),
        gap_ratio=gap,
        diagnostics={"method": "spectral-pbc", "boundary": "pbc"},
    )


def local_probe(
    a: np.ndarray,
    ell_max: int = 8,
    n: int = 2,
    variant: str | None = None,
    normalize: bool = True,
) -> np.ndarray:
    """Finite-window density estimates m_1 .. m_{ell_max} for a TI tensor.

    The replica transfer is sandwiched between boundary environments
    assembled from the state transfer's leading left/right eigenvectors
    (one slot per copy, conjugated on odd copies in the conj variant),
    gauged so the zero-window overlap is one:

        m_ell = ln( <L| T^ell |R> ) / ((1 - n) * ell)

    The window estimates converge to the ``ti_density`` value with
    corrections that shrink as the window grows.
    """
    if isinstance(a, MPS):
        if not a.ti:
            raise ValueError("expected a translation-invariant MPS or a bare tensor")
        a = a.tensors[0]
    a = np.asarray(a)
    kind, compressed, _ = _normalize_variant(variant if variant is not None else "conj", n)
    if compressed:
        raise VariantError("the probe uses uncompressed transfers")
    _check_kind(kind, n)
    if ell_max < 1:
        raise ValueError(f"need at least one window length, got {ell_max}")
    a, spec = _normalized_ti_tensor(a, normalize)
    chi = a.shape[0]
    # state-transfer eigenvectors arrive with (ket, conj) compound bonds;
    # ladder slots are (bra, ket), so transpose the chi x chi matrix.
    r_slot = np.asarray(spec.leading_right).reshape(chi, chi).T.ravel()
    l_slot = np.asarray(spec.leading_left).reshape(chi, chi).T.ravel()
    two_n = 2 * n
    if kind == "conjugated":
        r_slots = [r_slot if r % 2 == 0 else r_slot.conj() for r in range(two_n)]
        l_slots = [l_slot if r % 2 == 0 else l_slot.conj() for r in range(two_n)]
    else:
        r_slots = [r_slot] * two_n
        l_slots = [l_slot] * two_n
    overlap = complex(np.prod([np.dot(l, r) for l, r in zip(l_slots, r_slots)]))
    norms = float(
        np.prod([np.linalg.norm(l) * np.linalg.norm(r) for l, r in zip(l_slots, r_slots)])
    )
    if abs(overlap) < 1e-12 * max(norms, 1e-300):
        raise DegenerateOverlapError(
            "boundary environments are (numerically) orthogonal; the window "
            "probe is ill-conditioned for this tensor"
        )
    transfer = TransferMatrix(a, n, kind)
    g = reduce(np.multiply.outer, l_slots).reshape((chi * chi,) * two_n)
    r_full = reduce(np.multiply.outer, r_slots).reshape((chi * chi,) * two_n)
    log_acc = 0.0
    out = np.empty(ell_max)
    for ell in range(1, ell_max + 1):
        g = transfer.apply(g)
        scale = float(np.max(np.abs(g)))
        if scale == 0.0 or not np.isfinite(scale):
            raise NumericGuardError(f"window probe produced scale {scale}")
        g = g / scale
        log_acc += np.log(scale)
        v = complex(np.tensordot(g, r_full, axes=two_n)) / overlap
        if abs(v.imag) > 1e-8 * max(1.0, abs(v)) or v.real <= 0.0:
            raise NumericGuardError(f"window overlap not positive real: {v}")
        out[ell - 1] = (log_acc + np.log(v.real)) / ((1 - n) * ell)
    return out
