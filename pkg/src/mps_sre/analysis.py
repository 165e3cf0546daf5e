"""Experiment pipeline pieces: field sweeps of the entropy density,
peak extraction, scaling fits, data collapse, rotated single-qubit
bases, and minimization of the density over local bases.

Conventions fixed here and relied on by the drivers and tests:

* a sweep record keys one evaluated point by (h, N, chi, basis);
* peak refinement is a parabola through the grid argmax and its two
  neighbors, optionally narrowed by a golden-section pass that calls
  back into fresh evaluations;
* scaling fits use y = c * N^(-eta) + b with Levenberg-Marquardt from
  several eta starting points, reporting Jacobian-based standard errors;
* the collapse score is the mean pairwise root-mean-square distance
  between linearly interpolated rescaled curves on their common window
  (0 for identical curves; lower is better);
* rotated bases: V_alpha = exp(-i (pi/8) sigma_alpha), the axis-0 label
  being the exact identity; general rotations use Euler angles
  V = Rz(t1) Ry(t2) Rz(t3) with the global phase dropped.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
import scipy.optimize

from .errors import (
    BracketError,
    ConvergenceError,
    DegenerateFitError,
    NumericGuardError,
)
from .ising import DmrgConfig, DmrgResult, dmrg_ground_state
from .mps import MPS, mps_sum
from .replica import sre

__all__ = [
    "BASIS_LABELS",
    "BasisRotation",
    "SweepRecord",
    "LinearDecomposition",
    "PowerFit",
    "PeakFit",
    "MagicMinimum",
    "GroundStateCache",
    "evaluate_point",
    "basis_rotation",
    "euler_rotation",
    "rotate_mps",
    "parity_project",
    "sweep_density",
    "rotated_sweep",
    "find_peak",
    "refine_peak",
    "fit_power_offset",
    "extract_linear",
    "collapse",
    "collapse_quality",
    "scan_gamma",
    "minimize_magic",
    "fit_log",
]

BASIS_LABELS = ("0", "x", "y", "z")

_SQ8 = np.pi / 8.0


# -- single-qubit bases --------------------------------------------------


@dataclass(frozen=True)
class BasisRotation:
    """A single-qubit basis change applied to every site before the SRE.

    ``label`` is "0", "x", "y", "z" for the fixed eighth-turn rotations
    (axis 0 being the exact identity) or "euler" with ``angles`` set.
    """

    label: str
    matrix: np.ndarray
    angles: tuple[float, float, float] | None = None

    def __post_init__(self):
        m = np.asarray(self.matrix)
        if m.shape != (2, 2):
            raise ValueError(f"basis rotation must be 2x2, got {m.shape}")
        if np.max(np.abs(m.conj().T @ m - np.eye(2))) > 1e-10:
            raise ValueError("basis rotation is not unitary within 1e-10")

    @property
    def is_identity(self) -> bool:
        return self.label == "0"


def basis_rotation(alpha: int | str) -> BasisRotation:
    """Eighth-turn rotation about a Pauli axis: exp(-i (pi/8) sigma_alpha).

    ``alpha`` may be 0/1/2/3 or "0"/"x"/"y"/"z".  Axis 0 exponentiates
    to a pure global phase and is returned as the exact identity; the y
    rotation is real, which keeps real states on the fast real path.
    """
    key = {0: "0", 1: "x", 2: "y", 3: "z"}.get(alpha, str(alpha).lower())
    c, s = np.cos(_SQ8), np.sin(_SQ8)
    if key == "0":
        return BasisRotation("0", np.eye(2))
    if key == "x":
        return BasisRotation("x", np.array([[c, -1j * s], [-1j * s, c]]))
    if key == "y":
        return BasisRotation("y", np.array([[c, -s], [s, c]]))
    if key == "z":
        return BasisRotation("z", np.array([[c - 1j * s, 0.0], [0.0, c + 1j * s]]))
    raise ValueError(f"unknown basis axis {alpha!r}; expected 0, x, y, or z")


def euler_rotation(t1: float, t2: float, t3: float) -> BasisRotation:
    """V = Rz(t1) Ry(t2) Rz(t3), global phase dropped."""
    c2, s2 = np.cos(t2 / 2), np.sin(t2 / 2)
    rz1 = np.array([[np.exp(-0.5j * t1), 0.0], [0.0, np.exp(0.5j * t1)]])
    ry = np.array([[c2, -s2], [s2, c2]])
    rz3 = np.array([[np.exp(-0.5j * t3), 0.0], [0.0, np.exp(0.5j * t3)]])
    return BasisRotation("euler", rz1 @ ry @ rz3, angles=(float(t1), float(t2), float(t3)))


def rotate_mps(psi: MPS, rotation: BasisRotation) -> MPS:
    """Apply the rotation to every site (identity label: returned as-is)."""
    if rotation.is_identity:
        return psi
    return psi.apply_one_site(rotation.matrix)


def parity_project(
    psi: MPS,
    v: np.ndarray | None = None,
    sector: int = 1,
    cutoff: float = 1e-12,
    max_chi: int | None = None,
) -> MPS:
    """Normalized projection onto an eigensector of a product symmetry.

    ``v`` is a single-site involution (v @ v = identity) acting on every
    site; the default sigma_z makes the product operator the spin-flip
    symmetry of the transverse-field chain.  Returns psi + sector * V psi
    normalized, with numerically null bond directions trimmed.

    When the ground doublet of an ordered phase is nearly degenerate, an
    iterative solver returns an arbitrary mixture of the two nearly
    degenerate combinations; quantities that are not mixture-invariant
    (any rotated-basis entropy, whose two branch values swap under the
    rotation-angle sign) then jump from point to point.  Projecting pins
    the evaluation to one sector -- the even one is the true finite-size
    ground state of the transverse-field chain.

    Raises NumericGuardError if psi has numerically no weight in the
    requested sector.
    """
    if sector not in (1, -1):
        raise ValueError(f"sector must be +1 or -1, got {sector!r}")
    d = psi.phys_dims[0]
    v = np.diag([1.0, -1.0]) if v is None else np.asarray(v)
    if v.shape != (d, d) or np.max(np.abs(v @ v - np.eye(d))) > 1e-10:
        raise ValueError("symmetry operator must be an involution on one site")
    flipped = psi.apply_one_site(v)
    if sector < 0:
        ts = list(flipped.tensors)
        ts[0] = -ts[0]
        flipped = MPS(ts)
    total = mps_sum(psi, flipped)
    weight = total.norm_squared()
    if weight <= 4e-20 * max(psi.norm_squared(), 1.0):
        raise NumericGuardError(
            "state has no weight in the requested symmetry sector"
        )
    ts = [t.copy() for t in total.tensors]
    ts[0] = ts[0] / np.sqrt(weight)
    out, _ = MPS(ts).compress(max_chi=max_chi, cutoff=cutoff)
    ts = [t.copy() for t in out.tensors]
    ts[0] = ts[0] / np.sqrt(out.norm_squared())
    return MPS(ts)


# -- sweep records -------------------------------------------------------


@dataclass
class SweepRecord:
    """One evaluated point of the density study, keyed by (h, N, chi, basis)."""

    h: float
    n_sites: int
    chi: int
    n: int
    basis: str
    M: float
    m: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def key(self) -> tuple:
        return (self.h, self.n_sites, self.chi, self.basis)


class GroundStateCache:
    """Ground states keyed by (N, h), warm-starting along each size's grid.

    DMRG results are computed once per (N, h) and shared by every basis
    evaluation.  Within one size, requesting fields in ascending order
    seeds each solve with the previous solution.
    """

    def __init__(self, config: DmrgConfig | None = None):
        self.config = config or DmrgConfig()
        self._states: dict[tuple[int, float], DmrgResult] = {}
        self._last_for_size: dict[int, MPS] = {}

    def ground_state(self, n_sites: int, h: float) -> DmrgResult:
        key = (n_sites, float(h))
        if key not in self._states:
            initial = self._last_for_size.get(n_sites)
            try:
                result = dmrg_ground_state(n_sites, h, self.config, initial=initial)
            except ConvergenceError as err:
                if err.best is None:
                    raise
                result = err.best
                result.diagnostics["converged"] = False
            self._states[key] = result
            self._last_for_size[n_sites] = result.psi
        return self._states[key]


def evaluate_point(
    cache: GroundStateCache,
    n_sites: int,
    h: float,
    chi_sre: int,
    n: int,
    variant: str | None,
    basis: BasisRotation,
    chi_flag_delta: int = 2,
    flag_threshold: float = 1e-6,
    rank_trim: float = 1e-12,
    state_prep: Callable[[MPS], MPS] | None = None,
) -> SweepRecord:
    # rank_trim drops relative singular values below it (squared weight
    # ~1e-24): numerically null directions that would only pad the bond.
    gs = cache.ground_state(n_sites, h)
    src = gs.psi if state_prep is None else state_prep(gs.psi)
    psi, discarded = src.compress(max_chi=chi_sre, cutoff=rank_trim)
    res = sre(rotate_mps(psi, basis), n=n, variant=variant)
    diagnostics = {
        "energy": gs.energy,
        "dmrg_sweeps": len(gs.sweeps),
        "dmrg_converged": gs.converged and gs.diagnostics.get("converged", True),
        "dmrg_max_bond": gs.psi.max_bond,
        "sre_truncation_weight": discarded,
    }
    if chi_flag_delta and chi_sre - chi_flag_delta >= 1:
        psi_lo, _ = src.compress(max_chi=chi_sre - chi_flag_delta, cutoff=rank_trim)
        res_lo = sre(rotate_mps(psi_lo, basis), n=n, variant=variant)
        diagnostics["m_lower_chi"] = res_lo.m
        diagnostics["chi_flagged"] = bool(abs(res.m - res_lo.m) > flag_threshold)
    return SweepRecord(
        h=float(h),
        n_sites=n_sites,
        chi=psi.max_bond,
        n=n,
        basis=basis.label,
        M=res.M,
        m=res.m,
        diagnostics=diagnostics,
    )


def sweep_density(
    h_values: Sequence[float],
    sizes: Sequence[int],
    cache: GroundStateCache | None = None,
    chi_sre: int = 6,
    n: int = 2,
    variant: str | None = None,
    chi_flag_delta: int = 2,
) -> list[SweepRecord]:
    """Unrotated density records for every (h, N) pair.

    Fields are visited in ascending order per size so DMRG warm starts
    carry over.  The convergence flag in each record's diagnostics marks
    points where the density moved by more than 1e-6 when the evaluation
    bond was lowered by ``chi_flag_delta``.
    """
    if len(h_values) == 0 or len(sizes) == 0:
        raise ValueError("empty sweep grid")
    return rotated_sweep(
        h_values, sizes, basis_rotation(0), cache, chi_sre, n, variant, chi_flag_delta
    )


def rotated_sweep(
    h_values: Sequence[float],
    sizes: Sequence[int],
    basis: BasisRotation,
    cache: GroundStateCache | None = None,
    chi_sre: int = 6,
    n: int = 2,
    variant: str | None = None,
    chi_flag_delta: int = 2,
    state_prep: Callable[[MPS], MPS] | None = None,
) -> list[SweepRecord]:
    """Density records with every site rotated by ``basis`` before the SRE.

    ``state_prep`` (e.g. a symmetry projection) is applied to each ground
    state before truncation; energy and convergence diagnostics still refer
    to the raw optimized state.
    """
    cache = cache or GroundStateCache()
    records = []
    for n_sites in sizes:
        for h in sorted(float(x) for x in h_values):
            records.append(
                evaluate_point(
                    cache,
                    n_sites,
                    h,
                    chi_sre,
                    n,
                    variant,
                    basis,
                    chi_flag_delta,
                    state_prep=state_prep,
                )
            )
    return records


# -- peaks ---------------------------------------------------------------


def find_peak(
    xs: Sequence[float], ys: Sequence[float], kind: str = "max"
) -> tuple[float, float]:
    """Grid extremum refined by a parabola through argmax and neighbors.

    Needs >= 5 points; an extremum sitting on the first or last grid
    point raises BracketError (extend the grid).  ``kind`` is "max" or
    "min".  Returns (x0, y0) of the fitted vertex.
    """
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.ndim != 1 or xs.size != ys.size:
        raise ValueError("xs and ys must be equal-length 1-D sequences")
    if xs.size < 5:
        raise ValueError(f"need at least 5 grid points, got {xs.size}")
    order = np.argsort(xs)
    xs, ys = xs[order], ys[order]
    sign = {"max": 1.0, "min": -1.0}.get(kind)
    if sign is None:
        raise ValueError(f"kind must be 'max' or 'min', got {kind!r}")
    k = int(np.argmax(sign * ys))
    if k == 0 or k == xs.size - 1:
        raise BracketError(
            f"grid {kind} at edge point x={xs[k]:.6g}; extend the scan interval"
        )
    x3, y3 = xs[k - 1 : k + 2], ys[k - 1 : k + 2]
    denom = (x3[0] - x3[1]) * (x3[0] - x3[2]) * (x3[1] - x3[2])
    a = (
        x3[2] * (y3[1] - y3[0]) + x3[1] * (y3[0] - y3[2]) + x3[0] * (y3[2] - y3[1])
    ) / denom
    b = (
        x3[2] ** 2 * (y3[0] - y3[1])
        + x3[1] ** 2 * (y3[2] - y3[0])
        + x3[0] ** 2 * (y3[1] - y3[2])
    ) / denom
    if sign * a >= 0.0:
        # flat or wrong-curvature parabola: fall back to the grid point
        return float(x3[1]), float(y3[1])
    x0 = -b / (2 * a)
    x0 = float(np.clip(x0, x3[0], x3[2]))
    c = y3[0] - a * x3[0] ** 2 - b * x3[0]
    return x0, float(a * x0 * x0 + b * x0 + c)


_GOLDEN = (np.sqrt(5.0) - 1.0) / 2.0


def refine_peak(
    fun: Callable[[float], float],
    lo: float,
    mid: float,
    hi: float,
    kind: str = "max",
    evals: int = 8,
) -> tuple[float, float]:
    """Golden-section narrowing of a bracketed extremum with fresh calls.

    ``fun`` is called at most ``evals`` times in total (the bracket
    midpoint included); the best point seen -- including a final
    parabolic vertex through the sampled points -- is returned.
    Intended for expensive objectives such as a DMRG+SRE evaluation
    at one field value.
    """
    sign = {"max": 1.0, "min": -1.0}.get(kind)
    if sign is None:
        raise ValueError(f"kind must be 'max' or 'min', got {kind!r}")
    if not (lo < mid < hi):
        raise ValueError(f"need lo < mid < hi, got {lo}, {mid}, {hi}")
    budget = max(1, int(evals))
    spent = 0
    seen: dict[float, float] = {}

    def f(x: float) -> float:
        nonlocal spent
        x = float(x)
        if x not in seen:
            seen[x] = float(fun(x))
            spent += 1
        return seen[x]

    f(mid)
    a, b = float(lo), float(hi)
    x1 = b - _GOLDEN * (b - a)
    x2 = a + _GOLDEN * (b - a)
    while spent < budget:
        y1 = f(x1)
        if spent >= budget and float(x2) not in seen:
            break
        if sign * y1 >= sign * f(x2):
            b, x2 = x2, x1
            x1 = b - _GOLDEN * (b - a)
        else:
            a, x1 = x1, x2
            x2 = a + _GOLDEN * (b - a)
    xs = np.array(sorted(seen))
    ys = np.array([seen[x] for x in xs])
    if xs.size >= 5:
        try:
            return find_peak(xs, ys, kind=kind)
        except BracketError:
            pass
    k = int(np.argmax(sign * ys))
    return float(xs[k]), float(ys[k])


# -- fits ----------------------------------------------------------------


@dataclass
class PowerFit:
    """y = c * N^(-eta) + b with Jacobian-based standard errors."""

    c: float
    eta: float
    b: float
    stderr_c: float
    stderr_eta: float
    stderr_b: float
    residual: float

    @property
    def params(self) -> tuple[float, float, float]:
        return (self.c, self.eta, self.b)


@dataclass
class PeakFit:
    """Per-size peak locations/heights with their scaling fits."""

    sizes: tuple[int, ...]
    h0: tuple[float, ...]
    m0: tuple[float, ...]
    fit_h: PowerFit
    fit_m: PowerFit


def fit_power_offset(ns: Sequence[float], ys: Sequence[float]) -> PowerFit:
    """Levenberg-Marquardt fit of y = c N^(-eta) + b, multi-start in eta.

    Needs >= 4 strictly increasing N.  Standard errors come from the
    Jacobian at the optimum; a singular normal matrix raises
    DegenerateFitError.
    """
    ns = np.asarray(ns, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if ns.size != ys.size or ns.size < 4:
        raise ValueError(f"need >= 4 points, got {ns.size}")
    if np.any(np.diff(ns) <= 0):
        raise ValueError("sizes must be strictly increasing")

    def resid(p):
        c, eta, b = p
        return c * ns ** (-eta) + b - ys

    best = None
    for eta0 in (0.5, 1.0, 1.5):
        b0 = ys[-1]
        c0 = (ys[0] - b0) * ns[0] ** eta0
        if not np.isfinite(c0) or c0 == 0.0:
            c0 = 1.0
        try:
            sol = scipy.optimize.least_squares(
                resid, x0=[c0, eta0, b0], method="lm", max_nfev=5000
            )
        except Exception:
            continue
        if best is None or sol.cost < best.cost:
            best = sol
    if best is None or not np.all(np.isfinite(best.x)):
        raise DegenerateFitError("power-law fit failed from every starting point")
    jac = best.jac
    jtj = jac.T @ jac
    cond = np.linalg.cond(jtj)
    if not np.isfinite(cond) or cond > 1e14:
        raise DegenerateFitError(
            f"singular fit Jacobian (condition number {cond:.3g}); "
            "the data cannot distinguish the model parameters"
        )
    dof = max(1, ns.size - 3)
    cov = np.linalg.inv(jtj) * (2.0 * best.cost / dof)
    err = np.sqrt(np.maximum(np.diag(cov), 0.0))
    c, eta, b = (float(v) for v in best.x)
    return PowerFit(
        c=c,
        eta=eta,
        b=b,
        stderr_c=float(err[0]),
        stderr_eta=float(err[1]),
        stderr_b=float(err[2]),
        residual=float(np.sqrt(2.0 * best.cost / ns.size)),
    )


@dataclass
class LinearDecomposition:
    """Three-point linear split M(N) ~ D_N * N + c_N around one size."""

    n_sites: int
    delta_n: int
    D_N: float
    c_N: float


def extract_linear(
    n_mid: int, delta_n: int, m_minus: float, m_mid: float, m_plus: float
) -> LinearDecomposition:
    """Least-squares line through (N-dN, N, N+dN); exact on collinear input."""
    if delta_n <= 0:
        raise ValueError(f"delta_n must be positive, got {delta_n}")
    slope = (m_plus - m_minus) / (2.0 * delta_n)
    intercept = (m_minus + m_mid + m_plus) / 3.0 - slope * n_mid
    return LinearDecomposition(
        n_sites=int(n_mid), delta_n=int(delta_n), D_N=float(slope), c_N=float(intercept)
    )


# -- data collapse -------------------------------------------------------


def _group_curves(records: Iterable[SweepRecord]) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    by_n: dict[int, list[tuple[float, float]]] = {}
    for r in records:
        by_n.setdefault(r.n_sites, []).append((r.h, r.m))
    out = {}
    for n_sites, pts in by_n.items():
        pts.sort()
        hs = np.array([p[0] for p in pts])
        ms = np.array([p[1] for p in pts])
        out[n_sites] = (hs, ms)
    return out


def collapse(
    records: Iterable[SweepRecord],
    peaks: dict[int, tuple[float, float]],
    gamma: float,
    nu: float = 1.0,
) -> dict[int, tuple[np.ndarray, np.ndarray]]:
    """Rescaled curves x = (h - h0(N)) N^(1/nu), y = (m - m0(N)) N^gamma."""
    groups = _group_curves(records)
    missing = sorted(set(groups) - set(peaks))
    if missing:
        raise ValueError(f"no extracted peak for sizes {missing}")
    out = {}
    for n_sites, (hs, ms) in sorted(groups.items()):
        h0, m0 = peaks[n_sites]
        out[n_sites] = (
            (hs - h0) * n_sites ** (1.0 / nu),
            (ms - m0) * n_sites**gamma,
        )
    return out


def collapse_quality(curves: dict[int, tuple[np.ndarray, np.ndarray]], grid: int = 101) -> float:
    """Mean pairwise RMS distance between curves on their common window."""
    keys = sorted(curves)
    if len(keys) < 2:
        raise ValueError("need at least two curves to score a collapse")
    lo = max(curves[k][0].min() for k in keys)
    hi = min(curves[k][0].max() for k in keys)
    if hi <= lo:
        return float("inf")
    xg = np.linspace(lo, hi, grid)
    interp = [np.interp(xg, *curves[k]) for k in keys]
    total = 0.0
    pairs = 0
    for i in range(len(keys)):
        for j in range(i + 1, len(keys)):
            total += float(np.sqrt(np.mean((interp[i] - interp[j]) ** 2)))
            pairs += 1
    return total / pairs


def scan_gamma(
    records: Iterable[SweepRecord],
    peaks: dict[int, tuple[float, float]],
    gammas: Sequence[float],
    nu: float = 1.0,
) -> tuple[np.ndarray, np.ndarray, float]:
    """Collapse quality over a gamma grid; returns (grid, scores, best)."""
    records = list(records)
    gammas = np.asarray(gammas, dtype=float)
    scores = np.array(
        [collapse_quality(collapse(records, peaks, g, nu)) for g in gammas]
    )
    return gammas, scores, float(gammas[int(np.argmin(scores))])


# -- minimization over single-qubit bases --------------------------------


@dataclass
class MagicMinimum:
    """Best single-qubit basis found for reducing the entropy density."""

    m_min: float
    rotation: BasisRotation
    m_unrotated: float
    restarts: int
    evaluations: int
    history: list = field(default_factory=list)


def minimize_magic(
    psi: MPS,
    n: int = 2,
    restarts: int = 5,
    seed: int = 0,
    maxiter: int = 100,
    chi_eval: int | None = None,
    variant: str | None = None,
) -> MagicMinimum:
    """Nelder-Mead over Euler angles of a uniform single-qubit rotation.

    The identity is always evaluated as a candidate, so the result never
    exceeds the unrotated density (up to 1e-12); ``restarts`` additional
    seeded starting simplices guard against local minima.  ``chi_eval``
    truncates the state once before the search to bound the cost of each
    objective call.
    """
    if restarts < 1:
        raise ValueError(f"restarts must be >= 1, got {restarts}")
    if chi_eval is not None:
        psi, _ = psi.compress(max_chi=chi_eval)
    evals = 0

    def density(angles) -> float:
        nonlocal evals
        evals += 1
        rot = euler_rotation(*angles)
        return sre(rotate_mps(psi, rot), n=n, variant=variant).m

    m_unrot = sre(psi, n=n, variant=variant).m
    best_angles = (0.0, 0.0, 0.0)
    best_m = density(best_angles)  # identity candidate via the same objective
    if m_unrot < best_m:
        best_m = m_unrot
    history = [((0.0, 0.0, 0.0), best_m)]
    rng = np.random.default_rng(seed)
    starts = [np.zeros(3)] + [rng.uniform(0.0, 2.0 * np.pi, size=3) for _ in range(restarts - 1)]
    for x0 in starts:
        sol = scipy.optimize.minimize(
            density,
            x0=x0,
            method="Nelder-Mead",
            options={"maxiter": maxiter, "xatol": 1e-4, "fatol": 1e-10},
        )
        history.append((tuple(float(v) for v in sol.x), float(sol.fun)))
        if sol.fun < best_m:
            best_m = float(sol.fun)
            best_angles = tuple(float(v) for v in sol.x)
    return MagicMinimum(
        m_min=float(best_m),
        rotation=euler_rotation(*best_angles),
        m_unrotated=float(m_unrot),
        restarts=restarts,
        evaluations=evals,
        history=history,
    )


def fit_log(ns: Sequence[float], ys: Sequence[float]) -> tuple[float, float]:
    """Least-squares fit of y = a ln(N) + b; returns (a, b)."""
    ns = np.asarray(ns, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if ns.size != ys.size or ns.size < 3:
        raise ValueError(f"need >= 3 points, got {ns.size}")
    if np.any(ns <= 0):
        raise ValueError("sizes must be positive")
    a, b = np.polyfit(np.log(ns), ys, 1)
    return float(a), float(b)
