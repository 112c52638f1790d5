"""Coupled state/observer updates, stability analysis, bifurcation sweeps.

The coupled step advances the state by the update map and lets the
observer read the new state; the perturbed family F_r adds an observer
back-action r * O(x) to the update.  The critical-coupling search locates
parameter values where det(I - DF) or det(I + DF) vanishes at the tracked
fixed point (fold and flip candidates respectively), and the sweep
classifies the long-run attractor per coupling value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from ._formats import fmt_real
from .cascade import LinOp, spectrum
from .entropy import ProbState, shannon_entropy
from .errors import (
    DimMismatchError,
    DomainError,
    LengthMismatchError,
    NoConvergenceError,
    NonFiniteError,
)

__all__ = [
    "MapSpec",
    "AffineMap",
    "PolynomialMap",
    "PipelineMap",
    "WeightedSumMap",
    "zero_map",
    "scale_map",
    "CoupledState",
    "Trajectory",
    "DiagramRow",
    "BifurcationDiagram",
    "BifRoot",
    "CriticalReport",
    "LyapunovReport",
    "StabilityReport",
    "coupled_step",
    "perturbed_map",
    "jacobian",
    "jacobian_fd",
    "find_fixed_point",
    "find_critical_r",
    "sweep_bifurcation",
    "simulate_coupled",
    "lyapunov_trace",
    "stability_report",
    "diagram_to_csv",
    "trajectory_to_csv",
]

MAX_POLY_DEGREE = 3
PERIOD_TOL = 1e-6
MAX_PERIOD = 16
DIVERGENCE_THRESHOLD = 1e12
DEFAULT_TRANSIENT = 500
DEFAULT_SAMPLE = 64
DET_TOL = 1e-8
LYAPUNOV_TOL = 1e-9
REPRESENTATIVE_SLOTS = 4


class MapSpec:
    """Interface for the state-update maps: evaluate and differentiate."""

    dim: int

    def __call__(self, x: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def jacobian_analytic(self, x: np.ndarray) -> np.ndarray | None:
        """Exact Jacobian when the map's form supports one, else None."""
        raise NotImplementedError


@dataclass(frozen=True)
class AffineMap(MapSpec):
    """x -> A x + b."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.array(self.a, dtype=np.float64, copy=True)
        b = np.array(self.b, dtype=np.float64, copy=True)
        if a.ndim != 2 or a.shape[0] != a.shape[1] or b.shape != (a.shape[0],):
            raise DimMismatchError("affine map needs square A and matching b")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise NonFiniteError("affine coefficients must be finite")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def dim(self) -> int:
        return self.a.shape[0]

    def __call__(self, x):
        return self.a @ np.asarray(x, dtype=np.float64) + self.b

    def jacobian_analytic(self, x):
        return np.array(self.a, copy=True)


def zero_map(dim: int) -> AffineMap:
    return AffineMap(np.zeros((dim, dim)), np.zeros(dim))


def scale_map(dim: int, c: float) -> AffineMap:
    return AffineMap(c * np.eye(dim), np.zeros(dim))


@dataclass(frozen=True)
class PolynomialMap(MapSpec):
    """Per-coordinate polynomial terms (coeff, exponent tuple), degree <= 3."""

    dim: int
    coords: tuple[tuple[tuple[float, tuple[int, ...]], ...], ...]

    def __post_init__(self):
        if len(self.coords) != self.dim:
            raise DimMismatchError("one term list per output coordinate required")
        for terms in self.coords:
            for coeff, powers in terms:
                if len(powers) != self.dim:
                    raise DimMismatchError("exponent tuple length must equal dim")
                if any(p < 0 for p in powers) or sum(powers) > MAX_POLY_DEGREE:
                    raise DomainError(
                        f"total degree above {MAX_POLY_DEGREE} is not supported"
                    )
                if not math.isfinite(coeff):
                    raise NonFiniteError("polynomial coefficient must be finite")

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros(self.dim)
        for i, terms in enumerate(self.coords):
            acc = 0.0
            for coeff, powers in terms:
                term = coeff
                for j, p in enumerate(powers):
                    if p:
                        term *= x[j] ** p
                acc += term
            out[i] = acc
        return out

    def jacobian_analytic(self, x):
        x = np.asarray(x, dtype=np.float64)
        jac = np.zeros((self.dim, self.dim))
        for i, terms in enumerate(self.coords):
            for coeff, powers in terms:
                for j, p in enumerate(powers):
                    if p == 0:
                        continue
                    term = coeff * p
                    for k, q in enumerate(powers):
                        e = q - 1 if k == j else q
                        if e:
                            term *= x[k] ** e
                    jac[i, j] += term
        return jac


@dataclass(frozen=True)
class PipelineMap(MapSpec):
    """Sequential composition of endomaps; differentiated numerically."""

    parts: tuple[MapSpec, ...]

    def __post_init__(self):
        if not self.parts:
            raise DimMismatchError("pipeline needs at least one part")
        dims = {p.dim for p in self.parts}
        if len(dims) != 1:
            raise DimMismatchError("pipeline parts must share one dimension")

    @property
    def dim(self) -> int:
        return self.parts[0].dim

    def __call__(self, x):
        out = np.asarray(x, dtype=np.float64)
        for p in self.parts:
            out = p(out)
        return out

    def jacobian_analytic(self, x):
        return None


@dataclass(frozen=True)
class WeightedSumMap(MapSpec):
    """Pointwise weighted sum of maps; analytic iff all parts are."""

    parts: tuple[MapSpec, ...]
    weights: tuple[float, ...]

    def __post_init__(self):
        if len(self.parts) != len(self.weights) or not self.parts:
            raise DimMismatchError("need one weight per part")
        dims = {p.dim for p in self.parts}
        if len(dims) != 1:
            raise DimMismatchError("summed maps must share one dimension")

    @property
    def dim(self) -> int:
        return self.parts[0].dim

    def __call__(self, x):
        x = np.asarray(x, dtype=np.float64)
        out = np.zeros(self.dim)
        for w, p in zip(self.weights, self.parts):
            out = out + w * p(x)
        return out

    def jacobian_analytic(self, x):
        total = np.zeros((self.dim, self.dim))
        for w, p in zip(self.weights, self.parts):
            jac = p.jacobian_analytic(x)
            if jac is None:
                return None
            total += w * jac
        return total


@dataclass(frozen=True)
class CoupledState:
    x: np.ndarray
    o: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", np.array(self.x, dtype=np.float64, copy=True))
        object.__setattr__(self, "o", np.array(self.o, dtype=np.float64, copy=True))


@dataclass(frozen=True)
class Trajectory:
    states: tuple[CoupledState, ...]
    r: float
    seed: int = 0
    transient: int = 0

    def __post_init__(self):
        if not self.states:
            raise LengthMismatchError("trajectory must contain at least one state")


def coupled_step(update: MapSpec, observer: MapSpec, s: CoupledState) -> CoupledState:
    """Advance the state, then let the observer read the new state."""
    if update.dim != observer.dim or s.x.shape != (update.dim,):
        raise DimMismatchError("state, update and observer dimensions differ")
    x_next = update(s.x)
    o_next = observer(x_next)
    if not (np.all(np.isfinite(x_next)) and np.all(np.isfinite(o_next))):
        raise NonFiniteError("coupled step produced a non-finite coordinate")
    return CoupledState(x_next, o_next)


def perturbed_map(update: MapSpec, observer: MapSpec, r: float) -> MapSpec:
    """Observer back-action family F_r(x) = update(x) + r * observer(x)."""
    if update.dim != observer.dim:
        raise DimMismatchError("update and observer dimensions differ")
    return WeightedSumMap((update, observer), (1.0, float(r)))


def jacobian_fd(F: MapSpec, x: np.ndarray) -> np.ndarray:
    """Central finite differences with per-coordinate step 1e-6 max(1, |x_i|)."""
    x = np.asarray(x, dtype=np.float64)
    n = F.dim
    jac = np.zeros((n, n))
    for j in range(n):
        h = 1e-6 * max(1.0, abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += h
        xm[j] -= h
        jac[:, j] = (F(xp) - F(xm)) / (2.0 * h)
    return jac


def jacobian(F: MapSpec, x: np.ndarray) -> LinOp:
    """Jacobian at x: analytic where the map supports it, else central FD."""
    jac = F.jacobian_analytic(np.asarray(x, dtype=np.float64))
    if jac is None:
        jac = jacobian_fd(F, x)
    if not np.all(np.isfinite(jac)):
        raise NonFiniteError("Jacobian contains non-finite entries")
    return LinOp(jac)


def _ninf(v: np.ndarray) -> float:
    return float(np.max(np.abs(v))) if v.size else 0.0


def find_fixed_point(F: MapSpec, x0: Sequence[float], max_iter: int = 10_000,
                     tol: float = 1e-10) -> np.ndarray:
    """Damped iteration x <- x + beta (F(x) - x), beta halving on stalled residual.

    A step is accepted only when it shrinks the residual by a relative
    margin; merely-not-worse progress (the signature of a neutral
    multiplier) triggers the same halving as an outright increase, which
    restores contraction near flip-neutral points.  beta never grows back.
    """
    x = np.asarray(x0, dtype=np.float64).copy()
    fx = F(x)
    res = _ninf(fx - x)
    if res <= tol:
        return x
    beta = 1.0
    for _ in range(max_iter):
        cand = x + beta * (fx - x)
        fc = F(cand)
        if np.all(np.isfinite(fc)):
            cres = _ninf(fc - cand)
            if cres <= tol:
                return cand
            if cres <= res * (1.0 - 1e-3):
                x, fx, res = cand, fc, cres
                continue
        beta *= 0.5
        if beta < 1e-16:
            break
    raise NoConvergenceError(
        f"fixed-point iteration stalled at residual {res:.3e} (tol {tol:.1e})"
    )


@dataclass(frozen=True)
class BifRoot:
    kind: str            # "fold" (det(I - DF) = 0) or "flip" (det(I + DF) = 0)
    r: float
    residual: float
    bracket: tuple[float, float]
    even_multiplicity: bool = False

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "r": self.r,
            "residual": self.residual,
            "bracket": list(self.bracket),
            "even_multiplicity": self.even_multiplicity,
        }


@dataclass(frozen=True)
class CriticalReport:
    r_c_fold: float | None
    r_c_flip: float | None
    roots: tuple[BifRoot, ...]
    fold_degenerate: bool
    flip_degenerate: bool
    branch_failures: tuple[tuple[float, float], ...]
    grid: tuple[float, ...]
    d_minus: tuple[float | None, ...]
    d_plus: tuple[float | None, ...]

    def to_dict(self) -> dict:
        return {
            "r_c_fold": self.r_c_fold,
            "r_c_flip": self.r_c_flip,
            "roots": [r.to_dict() for r in self.roots],
            "fold_degenerate": self.fold_degenerate,
            "flip_degenerate": self.flip_degenerate,
            "branch_failures": [list(b) for b in self.branch_failures],
            "grid": list(self.grid),
            "d_minus": list(self.d_minus),
            "d_plus": list(self.d_plus),
        }


def _dets_at(update: MapSpec, observer: MapSpec, r: float,
             guess: np.ndarray) -> tuple[float, float, np.ndarray]:
    fr = perturbed_map(update, observer, r)
    xstar = find_fixed_point(fr, guess)
    jac = jacobian(fr, xstar).entries
    eye = np.eye(update.dim)
    return (float(np.linalg.det(eye - jac)),
            float(np.linalg.det(eye + jac)),
            xstar)


def _bisect_root(eval_det: Callable[[float], float], r_a: float, r_b: float,
                 d_a: float, d_b: float, det_tol: float) -> tuple[float, float]:
    """Bisect a sign change of the determinant down to |det| <= det_tol."""
    for _ in range(200):
        mid = 0.5 * (r_a + r_b)
        d_mid = eval_det(mid)
        if abs(d_mid) <= det_tol or (r_b - r_a) < 1e-15:
            return mid, abs(d_mid)
        if (d_a < 0.0) != (d_mid < 0.0):
            r_b, d_b = mid, d_mid
        else:
            r_a, d_a = mid, d_mid
    return 0.5 * (r_a + r_b), abs(eval_det(0.5 * (r_a + r_b)))


def _refine_touch_root(eval_det: Callable[[float], float], r_a: float,
                       r_b: float, det_tol: float) -> tuple[float, float] | None:
    """Golden-section search for a |det| minimum that touches zero."""
    gr = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = r_a, r_b
    c = b - gr * (b - a)
    d = a + gr * (b - a)
    fc, fd = abs(eval_det(c)), abs(eval_det(d))
    for _ in range(120):
        if b - a < 1e-13:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - gr * (b - a)
            fc = abs(eval_det(c))
        else:
            a, c, fc = c, d, fd
            d = a + gr * (b - a)
            fd = abs(eval_det(d))
    r_min = c if fc < fd else d
    val = abs(eval_det(r_min))
    if val <= det_tol:
        return r_min, val
    return None


def find_critical_r(update: MapSpec, observer: MapSpec, r_lo: float, r_hi: float,
                    grid: int, x0: Sequence[float] | None = None,
                    det_tol: float = DET_TOL) -> CriticalReport:
    """Scan the coupling range for fold and flip conditions at the fixed point.

    For each grid value the fixed point of F_r is located by continuation
    from the previous root, and the two determinants det(I -/+ DF) are
    tabulated.  Sign changes are bisected to |det| <= det_tol; interior
    local minima of |det| that reach zero without a sign change are
    reported with the even-multiplicity flag.  Grid cells where the
    fixed-point branch is lost are reported, not raised.
    """
    if not r_lo < r_hi:
        raise DomainError("need r_lo < r_hi")
    if grid < 2:
        raise DomainError("need at least two grid points")
    start = np.zeros(update.dim) if x0 is None else np.asarray(x0, dtype=np.float64)
    rs = np.linspace(r_lo, r_hi, grid)
    d_minus: list[float | None] = []
    d_plus: list[float | None] = []
    xstars: list[np.ndarray | None] = []
    failures: list[tuple[float, float]] = []
    guess = start.copy()
    cell = (r_hi - r_lo) / (grid - 1)
    for r in rs:
        try:
            dm, dp, xstar = _dets_at(update, observer, float(r), guess)
            guess = xstar
            d_minus.append(dm)
            d_plus.append(dp)
            xstars.append(xstar)
        except NoConvergenceError:
            failures.append((float(max(r_lo, r - cell)), float(min(r_hi, r + cell))))
            d_minus.append(None)
            d_plus.append(None)
            xstars.append(None)
    branch = [(float(rs[i]), xs) for i, xs in enumerate(xstars) if xs is not None]
    roots: list[BifRoot] = []
    for kind, dvals in (("fold", d_minus), ("flip", d_plus)):
        valid = [(float(rs[i]), d) for i, d in enumerate(dvals) if d is not None]
        if not valid:
            continue
        if all(abs(d) <= det_tol for _, d in valid):
            continue  # degenerate: flagged below, no isolated roots

        def eval_det(r: float, _kind=kind) -> float:
            # nearest tracked fixed point seeds the local solve (continuation)
            seed_guess = min(branch, key=lambda t: abs(t[0] - r))[1] if branch else start
            dm, dp, _ = _dets_at(update, observer, r, seed_guess)
            return dm if _kind == "fold" else dp

        def _grid_root_is_even(idx: int) -> bool:
            # a zero at a grid point without a sign change across it
            before = next((d for _, d in reversed(valid[:idx]) if abs(d) > det_tol),
                          None)
            after = next((d for _, d in valid[idx + 1:] if abs(d) > det_tol), None)
            if before is None or after is None:
                return False
            return (before < 0.0) == (after < 0.0)

        found: list[tuple[float, float, bool]] = []
        for i, ((ra, da), (rb, db)) in enumerate(zip(valid, valid[1:])):
            if abs(da) <= det_tol:
                found.append((ra, abs(da), _grid_root_is_even(i)))
                continue
            if (da < 0.0) != (db < 0.0):
                root, resid = _bisect_root(eval_det, ra, rb, da, db, det_tol)
                found.append((root, resid, False))
        if abs(valid[-1][1]) <= det_tol:
            found.append((valid[-1][0], abs(valid[-1][1]),
                          _grid_root_is_even(len(valid) - 1)))
        # touch-zero minima (even multiplicity): |det| dips to zero between
        # grid points without changing sign
        for j in range(1, len(valid) - 1):
            ra, da = valid[j - 1]
            rm, dm_ = valid[j]
            rb, db = valid[j + 1]
            if abs(dm_) < abs(da) and abs(dm_) < abs(db) and abs(dm_) > det_tol \
                    and (da < 0.0) == (dm_ < 0.0) == (db < 0.0):
                refined = _refine_touch_root(eval_det, ra, rb, det_tol)
                if refined is not None:
                    found.append((refined[0], refined[1], True))
        found.sort()
        dedup: list[tuple[float, float, bool]] = []
        for root, resid, even in found:
            if dedup and abs(root - dedup[-1][0]) < 0.5 * cell:
                continue
            dedup.append((root, resid, even))
        for root, resid, even in dedup:
            lo_b = max(r_lo, root - cell)
            hi_b = min(r_hi, root + cell)
            roots.append(BifRoot(kind, root, resid, (lo_b, hi_b), even))
    fold_roots = [r for r in roots if r.kind == "fold"]
    flip_roots = [r for r in roots if r.kind == "flip"]
    valid_minus = [d for d in d_minus if d is not None]
    valid_plus = [d for d in d_plus if d is not None]
    return CriticalReport(
        r_c_fold=fold_roots[0].r if fold_roots else None,
        r_c_flip=flip_roots[0].r if flip_roots else None,
        roots=tuple(sorted(roots, key=lambda b: (b.kind, b.r))),
        fold_degenerate=bool(valid_minus) and all(abs(d) <= det_tol
                                                  for d in valid_minus),
        flip_degenerate=bool(valid_plus) and all(abs(d) <= det_tol
                                                 for d in valid_plus),
        branch_failures=tuple(failures),
        grid=tuple(float(r) for r in rs),
        d_minus=tuple(d_minus),
        d_plus=tuple(d_plus),
    )


@dataclass(frozen=True)
class DiagramRow:
    r: float
    attractor: str       # fixed-point | period-2 | period-p | aperiodic | divergent
    period: int | None
    points: tuple[tuple[float, ...], ...]
    lead_eig: complex | None

    def to_dict(self) -> dict:
        return {
            "r": self.r,
            "attractor": self.attractor,
            "period": self.period,
            "points": [list(p) for p in self.points],
            "lead_eig": None if self.lead_eig is None
            else {"re": self.lead_eig.real, "im": self.lead_eig.imag},
        }


@dataclass(frozen=True)
class BifurcationDiagram:
    rows: tuple[DiagramRow, ...]

    def __post_init__(self):
        rs = [row.r for row in self.rows]
        if any(b <= a for a, b in zip(rs, rs[1:])):
            raise DomainError("diagram grid must be strictly increasing")


def _classify(samples: list[np.ndarray], period_tol: float,
              max_period: int) -> tuple[str, int | None]:
    for p in range(1, max_period + 1):
        if len(samples) <= p:
            break
        if all(_ninf(samples[i + p] - samples[i]) <= period_tol
               for i in range(len(samples) - p)):
            if p == 1:
                return "fixed-point", 1
            return f"period-{p}", p
    return "aperiodic", None


def _sweep_row(update: MapSpec, observer: MapSpec, r: float,
               transient: int, sample: int, x0: np.ndarray,
               period_tol: float, max_period: int,
               divergence: float) -> DiagramRow:
    fr = perturbed_map(update, observer, r)
    x = x0.copy()
    divergent = False
    for _ in range(transient):
        x = fr(x)
        if not np.all(np.isfinite(x)) or _ninf(x) > divergence:
            divergent = True
            break
    samples: list[np.ndarray] = []
    if not divergent:
        for _ in range(sample):
            x = fr(x)
            if not np.all(np.isfinite(x)) or _ninf(x) > divergence:
                divergent = True
                break
            samples.append(x.copy())
    if divergent:
        attractor, period = "divergent", None
        samples = []
    else:
        attractor, period = _classify(samples, period_tol, max_period)
    reps = samples[-min(len(samples), period or REPRESENTATIVE_SLOTS):]
    lead = None
    try:
        xstar = find_fixed_point(fr, samples[-1] if samples else x0,
                                 max_iter=2000, tol=1e-9)
        eigs = spectrum(jacobian(fr, xstar)).eigenvalues
        lead = max(eigs, key=abs) if eigs else None
    except (NoConvergenceError, NonFiniteError):
        lead = None
    return DiagramRow(float(r), attractor, period,
                      tuple(tuple(float(v) for v in p) for p in reps), lead)


def sweep_bifurcation(update: MapSpec, observer: MapSpec,
                      r_grid: Sequence[float],
                      transient: int = DEFAULT_TRANSIENT,
                      sample: int = DEFAULT_SAMPLE,
                      x0: Sequence[float] | None = None,
                      seed: int = 0,
                      threads: int = 1,
                      period_tol: float = PERIOD_TOL,
                      max_period: int = MAX_PERIOD,
                      divergence: float = DIVERGENCE_THRESHOLD) -> BifurcationDiagram:
    """Classify the attractor of F_r on a grid of coupling values.

    Each r is independent, so rows may be evaluated on a thread pool; the
    result order always follows the grid, keeping output deterministic.
    The seed is recorded for provenance only: deterministic families make
    no random choices.
    """
    if transient < 1:
        raise DomainError("transient must be >= 1")
    if sample < 2:
        raise DomainError("sample must be >= 2")
    start = np.zeros(update.dim) if x0 is None else np.asarray(x0, dtype=np.float64)
    rs = [float(r) for r in r_grid]

    def row(r: float) -> DiagramRow:
        return _sweep_row(update, observer, r, transient, sample, start,
                          period_tol, max_period, divergence)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(row, rs))
    else:
        rows = [row(r) for r in rs]
    return BifurcationDiagram(tuple(rows))


def simulate_coupled(update: MapSpec, observer: MapSpec, x0: Sequence[float],
                     steps: int, r: float = 0.0, schedule: int = 1,
                     seed: int = 0) -> Trajectory:
    """Roll out the coupled system, observing every `schedule`-th step.

    The state advances under F_r = update + r * observer back-action; the
    observer coordinate refreshes only on scheduled steps and holds its
    last reading in between.
    """
    if schedule < 1:
        raise DomainError("schedule must be >= 1")
    fr = perturbed_map(update, observer, r) if r != 0.0 else update
    x = np.asarray(x0, dtype=np.float64)
    o = observer(x)
    states = [CoupledState(x, o)]
    for n in range(1, steps + 1):
        x = fr(x)
        if not np.all(np.isfinite(x)):
            raise NonFiniteError(f"trajectory left the finite range at step {n}")
        if n % schedule == 0:
            o = observer(x)
        states.append(CoupledState(x, o))
    return Trajectory(tuple(states), r=float(r), seed=seed, transient=0)


@dataclass(frozen=True)
class LyapunovReport:
    values: tuple[float, ...]
    monotone: bool
    violations: tuple[int, ...]

    def to_dict(self) -> dict:
        return {
            "values": list(self.values),
            "monotone": self.monotone,
            "violations": list(self.violations),
        }


def lyapunov_trace(traj: Trajectory,
                   ledger_states: Sequence[tuple[ProbState, ProbState]],
                   alpha: float) -> LyapunovReport:
    """Entropy functional H(state) + alpha H(observer) along a trajectory.

    The verdict is non-increase up to tolerance at every step; violating
    step indices are listed so a spreading observation can be located.
    """
    if len(ledger_states) != len(traj.states):
        raise LengthMismatchError(
            f"{len(ledger_states)} ledger entries for {len(traj.states)} states"
        )
    values = [shannon_entropy(px) + alpha * shannon_entropy(po)
              for px, po in ledger_states]
    violations = [n for n in range(len(values) - 1)
                  if values[n + 1] > values[n] + LYAPUNOV_TOL]
    return LyapunovReport(tuple(values), not violations, tuple(violations))


@dataclass(frozen=True)
class StabilityReport:
    spectral_radius: float
    stable: bool
    eigenvalues: tuple[complex, ...]

    def to_dict(self) -> dict:
        return {
            "spectral_radius": self.spectral_radius,
            "stable": self.stable,
            "eigenvalues": [{"re": ev.real, "im": ev.imag}
                            for ev in self.eigenvalues],
        }


def stability_report(J: LinOp) -> StabilityReport:
    """Linear stability: all eigenvalues strictly inside the unit disk."""
    report = spectrum(J)
    radius = report.max_modulus
    return StabilityReport(radius, radius < 1.0 - 1e-9, report.eigenvalues)


# --- CSV artifacts --------------------------------------------------------


def diagram_to_csv(diagram: BifurcationDiagram, dim: int) -> str:
    header = ["r", "class", "period"]
    for k in range(REPRESENTATIVE_SLOTS):
        for j in range(dim):
            header.append(f"pt{k}_x{j}")
    header += ["lead_eig_re", "lead_eig_im"]
    lines = [",".join(header)]
    for row in diagram.rows:
        cells = [fmt_real(row.r), row.attractor,
                 "" if row.period is None else str(row.period)]
        pts = list(row.points)[:REPRESENTATIVE_SLOTS]
        for k in range(REPRESENTATIVE_SLOTS):
            if k < len(pts):
                cells.extend(fmt_real(v) for v in pts[k])
            else:
                cells.extend([""] * dim)
        if row.lead_eig is None:
            cells.extend(["", ""])
        else:
            cells.extend([fmt_real(row.lead_eig.real), fmt_real(row.lead_eig.imag)])
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def trajectory_to_csv(traj: Trajectory,
                      lyapunov: LyapunovReport | None = None) -> str:
    dim_x = traj.states[0].x.shape[0]
    dim_o = traj.states[0].o.shape[0]
    header = ["n"] + [f"x{j}" for j in range(dim_x)] \
        + [f"o{j}" for j in range(dim_o)] + ["L"]
    lines = [",".join(header)]
    for n, s in enumerate(traj.states):
        cells = [str(n)]
        cells.extend(fmt_real(v) for v in s.x)
        cells.extend(fmt_real(v) for v in s.o)
        if lyapunov is not None:
            cells.append(fmt_real(lyapunov.values[n]))
        else:
            cells.append("")
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"
