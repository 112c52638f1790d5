"""Temporal iteration and the distributed verification limit.

Repeatedly applies the verification-augmented update F(Y) = V(update(Y))
over a declared finite universe and detects the first stage whose carrier
is isomorphic to its own image.  Isomorphism of finite carriers is decided
by the canonical positional bijection (lexicographic tie-breaking), which
doubles as the stored witness.
"""

from __future__ import annotations

from dataclasses import dataclass

from .category import (
    FinMor,
    FinObj,
    FunctorRep,
    SquareReport,
    SquareViolation,
    canonical_bijection,
)
from .errors import NoWitnessError

__all__ = [
    "ChainRecord",
    "ThetaResult",
    "iterate_temporal",
    "apply_F",
    "iterate_to_theta",
    "verify_theta",
    "build_chain",
    "chain_to_csv",
]

DEFAULT_MAX_ITER = 64


@dataclass(frozen=True)
class ChainRecord:
    """One stage of an iteration chain, with its connecting inclusion if any.

    connecting_map is present only when the previous carrier embeds into
    this one label-for-label (the union/colimit reading); it is None at
    stage 0 and whenever the step is not an inclusion.
    """

    stage: int
    carrier: FinObj
    connecting_map: FinMor | None = None

    def __post_init__(self):
        if self.connecting_map is not None and self.connecting_map.dst != self.carrier:
            raise ValueError("connecting map must land in this stage's carrier")


@dataclass(frozen=True)
class ThetaResult:
    """Outcome of iterating the verification-augmented update to stabilization."""

    carrier: FinObj
    iterations: int
    converged: bool
    witness: FinMor | None = None
    inclusion_chain: bool = False   # True when every step embedded the previous carrier

    def to_dict(self) -> dict:
        return {
            "carrier": self.carrier.to_dict(),
            "iterations": self.iterations,
            "converged": self.converged,
            "witness": self.witness.to_dict() if self.witness else None,
            "inclusion_chain": self.inclusion_chain,
        }


def iterate_temporal(update: FunctorRep, start: FinObj, n: int) -> list[FinObj]:
    """Orbit [X, update(X), ..., update^n(X)]; length n + 1."""
    out = [start]
    for _ in range(n):
        out.append(update.apply_obj(out[-1]))
    return out


def apply_F(verification: FunctorRep, update: FunctorRep, carrier: FinObj) -> FinObj:
    """One verification-augmented step: verification(update(Y))."""
    return verification.apply_obj(update.apply_obj(carrier))


def _is_inclusion(a: FinObj, b: FinObj) -> bool:
    return set(a.elements) <= set(b.elements)


def iterate_to_theta(verification: FunctorRep, update: FunctorRep, start: FinObj,
                     max_iter: int = DEFAULT_MAX_ITER) -> ThetaResult:
    """Iterate Y_{n+1} = F(Y_n) until a carrier is isomorphic to its image.

    Convergence is declared at the first stage n where a canonical
    bijection Y_n ~ F(Y_n) exists; that bijection is stored as the
    witness.  Non-convergence within max_iter is reported in the result,
    not raised.
    """
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    carrier = start
    inclusions = True
    for n in range(max_iter):
        image = apply_F(verification, update, carrier)
        witness = canonical_bijection(carrier, image)
        if witness is not None:
            return ThetaResult(carrier, n, True, witness, inclusions)
        inclusions = inclusions and _is_inclusion(carrier, image)
        carrier = image
    return ThetaResult(carrier, max_iter, False, None, inclusions)


def verify_theta(verification: FunctorRep, update: FunctorRep,
                 result: ThetaResult) -> SquareReport:
    """Independent re-check that the stored witness exhibits the fixed point.

    Recomputes the image F(carrier), re-derives the canonical bijection and
    confirms the stored witness is a bijection identical to it.  Any
    discrepancy (including a tampered witness) yields holds=False with the
    offending elements listed.
    """
    if not result.converged or result.witness is None:
        raise NoWitnessError("verification requested on a non-converged result")
    image = apply_F(verification, update, result.carrier)
    expected = canonical_bijection(result.carrier, image)
    violations = []
    if expected is None:
        violations.append(SquareViolation("<carrier>", str(result.carrier.size),
                                          str(image.size)))
        return SquareReport(False, tuple(violations))
    w = result.witness
    if w.src != result.carrier or w.dst != image or not w.is_bijection():
        violations.append(SquareViolation("<witness>", f"{w.src.id}->{w.dst.id}",
                                          f"{expected.src.id}->{expected.dst.id}"))
    else:
        for (x, got), (_, want) in zip(w.pairs, expected.pairs):
            if got != want:
                violations.append(SquareViolation(x, got, want))
    return SquareReport(not violations, tuple(violations))


def build_chain(verification: FunctorRep, update: FunctorRep, start: FinObj,
                stages: int) -> list[ChainRecord]:
    """Materialize the first `stages` + 1 records of the F-iteration chain."""
    records = [ChainRecord(0, start, None)]
    carrier = start
    for n in range(1, stages + 1):
        nxt = apply_F(verification, update, carrier)
        incl = None
        if _is_inclusion(carrier, nxt):
            incl = FinMor(carrier, nxt, tuple((x, x) for x in carrier.elements))
        records.append(ChainRecord(n, nxt, incl))
        carrier = nxt
    return records


def chain_to_csv(records: list[ChainRecord]) -> str:
    lines = ["stage,carrier_size"]
    for rec in records:
        lines.append(f"{rec.stage},{rec.carrier.size}")
    return "\n".join(lines) + "\n"
