"""Exact phase arithmetic and phase-coherence constructions.

A phase is a rational fraction of a full turn kept in canonical residue
form (reduced, in [0, 1)), so the mod-2pi identities become exact equality
tests with no tolerance policy.  On top of the phase group sit the cycle
checks, the locked subspace of a finite-order symmetry, and the matched
pairing of equal-phase elements.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .category import (
    FinMor,
    FinObj,
    automorphism_order,
    compose,
    identity_morphism,
)
from .errors import (
    DenominatorOverflowError,
    NonComposableError,
    NotAClosedLoopError,
    NotAutomorphismError,
    PartialPhaseMapError,
    ShapeMismatchError,
)

__all__ = [
    "RationalPhase",
    "PhasedElement",
    "PhasedMorphism",
    "ZERO_PHASE",
    "phase_add",
    "phase_inverse",
    "compose_phased",
    "cycle_net_phase",
    "phase_lock_space",
    "interference_pairing",
    "lift_phi_phase",
]

DENOMINATOR_CAP = 10 ** 6


@dataclass(frozen=True, slots=True)
class RationalPhase:
    """An exact phase: (numerator / denominator) of a full turn, canonical."""

    numerator: int
    denominator: int = 1

    def __post_init__(self):
        den = self.denominator
        if den <= 0:
            raise DenominatorOverflowError("denominator must be positive")
        num = self.numerator % den
        g = math.gcd(num, den)
        num //= g
        den //= g
        if den > DENOMINATOR_CAP:
            raise DenominatorOverflowError(
                f"reduced denominator {den} exceeds cap {DENOMINATOR_CAP}"
            )
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "denominator", den)

    @classmethod
    def parse(cls, text: str) -> "RationalPhase":
        """Accepts "p/q" or a bare integer numerator."""
        part = text.strip().split("/")
        if len(part) == 1:
            return cls(int(part[0]), 1)
        if len(part) == 2:
            return cls(int(part[0]), int(part[1]))
        raise ValueError(f"cannot parse phase {text!r}")

    def is_zero(self) -> bool:
        return self.numerator == 0

    def as_float_turns(self) -> float:
        return self.numerator / self.denominator

    def __str__(self) -> str:
        return f"{self.numerator}/{self.denominator}"

    def __add__(self, other: "RationalPhase") -> "RationalPhase":
        return phase_add(self, other)

    def __neg__(self) -> "RationalPhase":
        return phase_inverse(self)


ZERO_PHASE = RationalPhase(0, 1)


def _make_canonical(num: int, den: int) -> RationalPhase:
    # fast path for values already in canonical residue form
    p = object.__new__(RationalPhase)
    object.__setattr__(p, "numerator", num)
    object.__setattr__(p, "denominator", den)
    return p


def phase_add(a: RationalPhase, b: RationalPhase) -> RationalPhase:
    """Exact sum of two phases, reduced mod one full turn."""
    den = a.denominator * b.denominator
    num = (a.numerator * b.denominator + b.numerator * a.denominator) % den
    g = math.gcd(num, den)
    num //= g
    den //= g
    if den > DENOMINATOR_CAP:
        raise DenominatorOverflowError(
            f"reduced denominator {den} exceeds cap {DENOMINATOR_CAP}"
        )
    return _make_canonical(num, den)


def phase_inverse(a: RationalPhase) -> RationalPhase:
    if a.numerator == 0:
        return a
    return _make_canonical(a.denominator - a.numerator, a.denominator)


@dataclass(frozen=True)
class PhasedElement:
    element: str
    phase: RationalPhase


@dataclass(frozen=True)
class PhasedMorphism:
    base: FinMor
    phase: RationalPhase


def compose_phased(a: PhasedMorphism, b: PhasedMorphism) -> PhasedMorphism:
    """Compose the bases (first a, then b); the phases add."""
    if a.base.dst != b.base.src:
        raise NonComposableError("phased morphisms are not composable")
    return PhasedMorphism(compose(a.base, b.base), phase_add(a.phase, b.phase))


def cycle_net_phase(cycle: Sequence[PhasedMorphism]) -> RationalPhase:
    """Exact phase accumulated around a closed loop of morphisms.

    The morphisms must chain head-to-tail and close up; the caller decides
    what to make of a non-zero result.
    """
    if not cycle:
        raise NotAClosedLoopError("empty morphism list")
    for cur, nxt in zip(cycle, cycle[1:]):
        if cur.base.dst != nxt.base.src:
            raise NotAClosedLoopError(
                f"step ending at {cur.base.dst.id!r} does not meet the next step"
            )
    if cycle[-1].base.dst != cycle[0].base.src:
        raise NotAClosedLoopError("loop does not close")
    total = ZERO_PHASE
    for m in cycle:
        total = phase_add(total, m.phase)
    return total


def _fixed_points(theta: FinMor) -> set[str]:
    return {x for x, y in theta.pairs if x == y}


def phase_lock_space(theta: FinMor, k: int) -> FinObj:
    """Elements invariant under every power of the finite-order symmetry.

    Computed two ways that must agree: the intersection of the fixed sets
    of theta^m for m = 0..k-1, and the fixed set of theta alone (every
    fixed point of theta is fixed by all powers).
    """
    if theta.src != theta.dst or not theta.is_bijection():
        raise NotAutomorphismError(
            f"phase symmetry on {theta.src.id!r} must be a bijective endomap"
        )
    if k < 1 or k % automorphism_order(theta) != 0:
        raise NotAutomorphismError(
            f"declared period {k} is not a multiple of the symmetry's order"
        )
    locked = set(theta.src.elements)
    power = identity_morphism(theta.src)
    for _ in range(k):
        locked &= _fixed_points(power)
        power = compose(power, theta)
    direct = _fixed_points(theta)
    if locked != direct:  # pragma: no cover - impossible once k is validated
        raise AssertionError("kernel intersection disagrees with fixed-point set")
    return FinObj(f"PhaseLock({theta.src.id})", tuple(sorted(locked)))


def interference_pairing(carrier: FinObj,
                         phases: Mapping[str, RationalPhase]) -> FinObj:
    """Carrier of all ordered element pairs with exactly matching phases."""
    missing = [x for x in carrier.elements if x not in phases]
    if missing:
        raise PartialPhaseMapError(f"no phase assigned to elements {missing}")
    pairs = []
    for x in carrier.elements:
        for y in carrier.elements:
            if phases[x] == phases[y]:
                pairs.append(f"({x},{y})")
    return FinObj(f"PhasePairs({carrier.id})", tuple(pairs))


def lift_phi_phase(update: FinMor,
                   states: Sequence[PhasedElement]) -> list[PhasedElement]:
    """Apply the update to the element coordinate; phases ride along unchanged."""
    table = update.mapping
    out = []
    for s in states:
        if s.element not in table:
            raise ShapeMismatchError(
                f"{s.element!r} is not in the update map's source"
            )
        out.append(PhasedElement(table[s.element], s.phase))
    return out


def parse_phase_table(raw: Mapping[str, str]) -> dict[str, RationalPhase]:
    """Parse a JSON-style {element: "p/q"} assignment table."""
    return {k: RationalPhase.parse(v) for k, v in raw.items()}
