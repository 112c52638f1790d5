"""Damped observer cascades on a real vector space.

The cascade operator is the affine combination  C = Lambda*I + sum_i
(1 - lambda_i) * theta_i  with Lambda the product of the damping factors
and each theta_i a real matrix of finite multiplicative order.  This
module builds C, extracts its fixed directions, computes its full
spectrum with a self-contained Hessenberg/double-shift iteration, and
evaluates the convex-hull containment of the spectrum as an empirical
verdict (the containment fails on easy examples and is never asserted).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._formats import fmt_real
from .errors import (
    DimensionCapError,
    DimMismatchError,
    NoConvergenceError,
    NonFiniteError,
    PeriodMismatchError,
    UndefinedClaimError,
)
from .phase import RationalPhase

__all__ = [
    "LinOp",
    "CascadeStage",
    "CascadeSpec",
    "SpectrumReport",
    "build_cascade",
    "cascade_fixed_points",
    "spectrum",
    "check_hull_claim",
    "check_commuting",
    "compose_cascades",
    "spectrum_to_csv",
]

DIM_CAP = 64
PERIOD_TOL = 1e-9
PIVOT_RTOL = 1e-10
RESIDUAL_TOL = 1e-6
_EPS = float(np.finfo(np.float64).eps)


@dataclass(frozen=True)
class LinOp:
    """A dense square real operator with immutable entries."""

    entries: np.ndarray

    def __post_init__(self):
        arr = np.array(self.entries, dtype=np.float64, copy=True)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1]:
            raise DimMismatchError(f"operator must be square, got shape {arr.shape}")
        if arr.shape[0] > DIM_CAP:
            raise DimensionCapError(f"dimension {arr.shape[0]} exceeds cap {DIM_CAP}")
        if not np.all(np.isfinite(arr)):
            raise NonFiniteError("operator entries must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "entries", arr)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, n: int) -> "LinOp":
        return cls(np.eye(n))

    @classmethod
    def rotation(cls, turns: RationalPhase, dim: int = 2,
                 plane: tuple[int, int] = (0, 1)) -> "LinOp":
        """Plane rotation by a rational fraction of a full turn.

        Quarter-turn multiples produce exact integer entries so damping
        identities on them hold to the last bit.
        """
        if 4 % turns.denominator == 0:
            quarter = (turns.numerator * 4 // turns.denominator) % 4
            cos_a, sin_a = [(1.0, 0.0), (0.0, 1.0), (-1.0, 0.0), (0.0, -1.0)][quarter]
        else:
            angle = 2.0 * math.pi * turns.numerator / turns.denominator
            cos_a, sin_a = math.cos(angle), math.sin(angle)
        i, j = plane
        m = np.eye(dim)
        m[i, i] = cos_a
        m[i, j] = -sin_a
        m[j, i] = sin_a
        m[j, j] = cos_a
        return cls(m)

    @classmethod
    def permutation(cls, perm: Sequence[int]) -> "LinOp":
        """Matrix sending basis vector j to basis vector perm[j]."""
        n = len(perm)
        if sorted(perm) != list(range(n)):
            raise DimMismatchError(f"{list(perm)} is not a permutation of 0..{n - 1}")
        m = np.zeros((n, n))
        for j, i in enumerate(perm):
            m[i, j] = 1.0
        return cls(m)

    def inf_norm(self) -> float:
        """Entrywise max-abs norm (used for all matrix comparisons here)."""
        return float(np.max(np.abs(self.entries))) if self.dim else 0.0

    def __matmul__(self, other: "LinOp") -> "LinOp":
        if self.dim != other.dim:
            raise DimMismatchError("operator dimensions differ")
        return LinOp(self.entries @ other.entries)

    def power(self, k: int) -> "LinOp":
        out = np.eye(self.dim)
        for _ in range(k):
            out = out @ self.entries
        return LinOp(out)


def matrix_order_defect(theta: LinOp, period: int) -> float:
    """Entrywise distance of theta^period from the identity."""
    return float(np.max(np.abs(theta.power(period).entries - np.eye(theta.dim))))


@dataclass(frozen=True)
class CascadeStage:
    """One damped observer: damping factor in [0, 1] plus a finite-order matrix."""

    lam: float
    theta: LinOp
    period: int

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise DimMismatchError(f"damping factor {self.lam} outside [0, 1]")
        if self.period < 1:
            raise PeriodMismatchError("declared period must be >= 1")
        defect = matrix_order_defect(self.theta, self.period)
        if defect > PERIOD_TOL:
            raise PeriodMismatchError(
                f"theta^{self.period} differs from the identity by {defect:.3e}"
            )


@dataclass(frozen=True)
class CascadeSpec:
    stages: tuple[CascadeStage, ...]

    def __post_init__(self):
        if not self.stages:
            raise DimMismatchError("cascade needs at least one stage")
        dims = {s.theta.dim for s in self.stages}
        if len(dims) != 1:
            raise DimMismatchError(f"stage dimensions differ: {sorted(dims)}")

    @property
    def dim(self) -> int:
        return self.stages[0].theta.dim

    @property
    def contraction(self) -> float:
        out = 1.0
        for s in self.stages:
            out *= s.lam
        return out


def build_cascade(spec: CascadeSpec) -> LinOp:
    """C = (prod lambda_i) I + sum (1 - lambda_i) theta_i."""
    n = spec.dim
    c = spec.contraction * np.eye(n)
    for s in spec.stages:
        c = c + (1.0 - s.lam) * s.theta.entries
    return LinOp(c)


def cascade_fixed_points(C: LinOp, tol: float = PIVOT_RTOL) -> list[np.ndarray]:
    """Orthonormal basis of the fixed directions, null(I - C).

    Gaussian elimination with partial pivoting; a pivot below tol times
    the largest entry of I - C counts as zero.  An empty list means only
    the trivial fixed point.
    """
    n = C.dim
    a = np.eye(n) - C.entries
    scale = float(np.max(np.abs(a)))
    # I - C that is pure roundoff relative to C counts as the zero matrix
    noise_floor = 64.0 * _EPS * max(1.0, float(np.max(np.abs(C.entries))))
    if scale <= noise_floor:
        return [np.eye(n)[:, k] for k in range(n)]
    thresh = tol * scale
    a = a.copy()
    pivots: list[int] = []
    row = 0
    for col in range(n):
        if row >= n:
            break
        p = row + int(np.argmax(np.abs(a[row:, col])))
        if abs(a[p, col]) <= thresh:
            continue
        a[[row, p]] = a[[p, row]]
        a[row] /= a[row, col]
        for r in range(n):
            if r != row and a[r, col] != 0.0:
                a[r] -= a[r, col] * a[row]
        pivots.append(col)
        row += 1
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for fc in free:
        v = np.zeros(n)
        v[fc] = 1.0
        for i, pc in enumerate(pivots):
            v[pc] = -a[i, fc]
        basis.append(v)
    # modified Gram-Schmidt; deterministic order from the free columns
    ortho: list[np.ndarray] = []
    for v in basis:
        w = v.copy()
        for u in ortho:
            w -= (u @ w) * u
        norm = float(np.linalg.norm(w))
        if norm > thresh:
            ortho.append(w / norm)
    return ortho


# --- dense eigensolver: Hessenberg reduction + double-shift iteration ----


def _hessenberg(a: np.ndarray) -> np.ndarray:
    h = np.array(a, dtype=np.float64, copy=True)
    n = h.shape[0]
    for k in range(n - 2):
        x = h[k + 1:, k].copy()
        alpha = float(np.linalg.norm(x))
        if alpha == 0.0:
            continue
        if x[0] < 0.0:
            alpha = -alpha
        v = x
        v[0] += alpha
        vnorm = float(np.linalg.norm(v))
        if vnorm == 0.0:
            continue
        v /= vnorm
        h[k + 1:, k:] -= 2.0 * np.outer(v, v @ h[k + 1:, k:])
        h[:, k + 1:] -= 2.0 * np.outer(h[:, k + 1:] @ v, v)
        h[k + 2:, k] = 0.0
    return h


def _eig2(a: float, b: float, c: float, d: float) -> tuple[complex, complex]:
    """Eigenvalues of [[a, b], [c, d]]."""
    p = 0.5 * (a + d)
    disc = 0.25 * (a - d) ** 2 + b * c
    if disc >= 0.0:
        sq = math.sqrt(disc)
        l1 = p + sq if p >= 0.0 else p - sq
        det = a * d - b * c
        l2 = det / l1 if l1 != 0.0 else 0.0
        return complex(l1), complex(l2)
    sq = math.sqrt(-disc)
    return complex(p, sq), complex(p, -sq)


def _double_shift_sweep(h: np.ndarray, lo: int, hi: int,
                        trace: float, det: float) -> None:
    """One implicit double-shift bulge chase on the window [lo, hi]."""
    x = h[lo, lo] * h[lo, lo] + h[lo, lo + 1] * h[lo + 1, lo] \
        - trace * h[lo, lo] + det
    y = h[lo + 1, lo] * (h[lo, lo] + h[lo + 1, lo + 1] - trace)
    z = h[lo + 2, lo + 1] * h[lo + 1, lo]
    for k in range(lo, hi):
        if k > lo:
            x = h[k, k - 1]
            y = h[k + 1, k - 1]
            z = h[k + 2, k - 1] if k + 2 <= hi else 0.0
        if k + 2 <= hi:
            w = np.array([x, y, z])
        else:
            w = np.array([x, y])
        scale = float(np.max(np.abs(w)))
        if scale == 0.0:
            continue
        w = w / scale
        s = float(np.linalg.norm(w))
        if w[0] < 0.0:
            s = -s
        w[0] += s
        wn2 = float(w @ w)
        if wn2 == 0.0:
            continue
        tau = 2.0 / wn2
        rows = slice(k, k + len(w))
        c0 = k - 1 if k > lo else lo
        h[rows, c0:hi + 1] -= np.outer(tau * w, w @ h[rows, c0:hi + 1])
        r1 = min(k + 3, hi) + 1
        h[lo:r1, rows] -= np.outer(h[lo:r1, rows] @ w, tau * w)
        if k > lo:
            h[k + 1, k - 1] = 0.0
            if k + 2 <= hi:
                h[k + 2, k - 1] = 0.0


def _hessenberg_eigenvalues(h: np.ndarray, max_sweeps: int) -> list[complex]:
    n = h.shape[0]
    if n == 0:
        return []
    hnorm = float(np.max(np.abs(h)))
    if hnorm == 0.0:
        return [0j] * n
    eigs: list[complex] = []
    hi = n - 1
    sweeps = 0
    stall = 0
    while hi >= 0:
        if hi == 0:
            eigs.append(complex(h[0, 0]))
            break
        lo = hi
        while lo > 0:
            s = abs(h[lo - 1, lo - 1]) + abs(h[lo, lo])
            if s == 0.0:
                s = hnorm
            if abs(h[lo, lo - 1]) <= _EPS * s:
                h[lo, lo - 1] = 0.0
                break
            lo -= 1
        if lo == hi:
            eigs.append(complex(h[hi, hi]))
            hi -= 1
            stall = 0
        elif lo == hi - 1:
            eigs.extend(_eig2(h[lo, lo], h[lo, hi], h[hi, lo], h[hi, hi]))
            hi -= 2
            stall = 0
        else:
            sweeps += 1
            stall += 1
            if sweeps > max_sweeps:
                raise NoConvergenceError(
                    f"eigenvalue iteration exceeded {max_sweeps} sweeps"
                )
            if stall % 10 == 0:
                # exceptional shifts to break symmetric cycling
                s = abs(h[hi, hi - 1]) + abs(h[hi - 1, hi - 2])
                trace = 1.5 * s
                det = 0.5625 * s * s
            else:
                trace = h[hi - 1, hi - 1] + h[hi, hi]
                det = h[hi - 1, hi - 1] * h[hi, hi] - h[hi - 1, hi] * h[hi, hi - 1]
            _double_shift_sweep(h, lo, hi, trace, det)
    return eigs


def _eigenvector_residual(a: np.ndarray, lam: complex) -> float:
    """Relative residual of an eigenvector extracted by inverse iteration."""
    n = a.shape[0]
    scale = max(1.0, float(np.max(np.abs(a))))
    b = a.astype(complex) - lam * np.eye(n)
    v = np.ones(n, dtype=complex) / math.sqrt(n)
    nudge = _EPS * scale
    for _ in range(5):
        try:
            w = np.linalg.solve(b, v)
        except np.linalg.LinAlgError:
            b = b + nudge * np.eye(n)
            nudge *= 16.0
            continue
        norm = float(np.linalg.norm(w))
        if not math.isfinite(norm) or norm == 0.0:
            b = b + nudge * np.eye(n)
            nudge *= 16.0
            continue
        v = w / norm
    return float(np.linalg.norm(a @ v - lam * v) / np.linalg.norm(v))


@dataclass(frozen=True)
class SpectrumReport:
    """Eigenvalues with multiplicity, sorted by (real, imaginary) part."""

    eigenvalues: tuple[complex, ...]
    max_modulus: float
    residuals: tuple[float, ...]
    hull_check: tuple[bool, ...] | None = None

    def to_dict(self) -> dict:
        return {
            "eigenvalues": [{"re": ev.real, "im": ev.imag}
                            for ev in self.eigenvalues],
            "max_modulus": self.max_modulus,
            "residuals": list(self.residuals),
            "hull_check": list(self.hull_check) if self.hull_check is not None else None,
        }


def spectrum(C: LinOp, max_sweeps: int | None = None) -> SpectrumReport:
    """Full spectrum of C via Hessenberg reduction and double-shift sweeps.

    Every eigenvalue is re-verified after the solve: an eigenvector is
    extracted by inverse iteration and must satisfy the relative residual
    bound, with a determinant fallback for extreme cases.  Verification
    failure raises NoConvergenceError rather than returning silently.
    """
    n = C.dim
    if max_sweeps is None:
        max_sweeps = 500 * max(n, 1)
    h = _hessenberg(C.entries)
    eigs = _hessenberg_eigenvalues(h, max_sweeps)
    eigs.sort(key=lambda ev: (ev.real, ev.imag))
    residuals = []
    scale = max(1.0, float(np.max(np.abs(C.entries))) if n else 1.0)
    for ev in eigs:
        res = _eigenvector_residual(C.entries, ev)
        if res > RESIDUAL_TOL:
            detval = abs(np.linalg.det(C.entries.astype(complex)
                                       - ev * np.eye(n)))
            if detval > RESIDUAL_TOL * scale ** n:
                raise NoConvergenceError(
                    f"eigenvalue {ev} failed verification "
                    f"(residual {res:.3e}, |det| {detval:.3e})"
                )
        residuals.append(res)
    max_mod = max((abs(ev) for ev in eigs), default=0.0)
    return SpectrumReport(tuple(eigs), float(max_mod), tuple(residuals))


def check_hull_claim(report: SpectrumReport, spec: CascadeSpec,
                     tol: float = 1e-6) -> list[bool]:
    """Is each eigenvalue inside the convex hull of {1} and the 1/lambda_i?

    The hull of real points is a segment on the real axis, so membership
    requires a near-real eigenvalue inside the segment.  The verdicts are
    an empirical finding about the containment claim, never an assertion.
    """
    lams = [s.lam for s in spec.stages]
    if any(l == 0.0 for l in lams):
        raise UndefinedClaimError("hull is undefined when some damping factor is 0")
    points = [1.0] + [1.0 / l for l in lams]
    lo, hi = min(points), max(points)
    verdicts = []
    for ev in report.eigenvalues:
        inside = abs(ev.imag) <= tol and lo - tol <= ev.real <= hi + tol
        verdicts.append(inside)
    return verdicts


def check_commuting(theta_i: LinOp, theta_j: LinOp,
                    tol: float = 1e-9) -> tuple[bool, float]:
    """Commutator check; returns the verdict and the max-abs commutator norm."""
    if theta_i.dim != theta_j.dim:
        raise DimMismatchError("operators have different dimensions")
    comm = theta_i.entries @ theta_j.entries - theta_j.entries @ theta_i.entries
    norm = float(np.max(np.abs(comm))) if comm.size else 0.0
    return norm <= tol, norm


def compose_cascades(first: LinOp, second: LinOp) -> LinOp:
    """Operator of applying `first`, then `second` (matrix product order)."""
    return second @ first


def spectrum_to_csv(report: SpectrumReport) -> str:
    lines = ["re,im,modulus,hull_ok"]
    hull = report.hull_check
    for i, ev in enumerate(report.eigenvalues):
        flag = "" if hull is None else str(hull[i]).lower()
        lines.append(",".join([
            fmt_real(ev.real), fmt_real(ev.imag), fmt_real(abs(ev)), flag,
        ]))
    return "\n".join(lines) + "\n"
