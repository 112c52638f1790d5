import itertools
from math import gcd

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_permutation_mor
from veridyn.category import FinMor, FinObj, identity_morphism
from veridyn.errors import (
    DenominatorOverflowError,
    NonComposableError,
    NotAClosedLoopError,
    NotAutomorphismError,
    PartialPhaseMapError,
    ShapeMismatchError,
)
from veridyn.phase import (
    ZERO_PHASE,
    PhasedElement,
    PhasedMorphism,
    RationalPhase,
    compose_phased,
    cycle_net_phase,
    interference_pairing,
    lift_phi_phase,
    phase_add,
    phase_inverse,
    phase_lock_space,
)

# denominators divide 2520 so exact sums never exceed the denominator cap
_DENOMS = sorted(d for d in range(1, 2521) if 2520 % d == 0)
rationals = st.builds(
    RationalPhase,
    numerator=st.integers(-5000, 5000),
    denominator=st.sampled_from(_DENOMS),
)


def test_canonical_residue():
    assert RationalPhase(3, 2) == RationalPhase(1, 2)
    assert RationalPhase(-1, 4) == RationalPhase(3, 4)
    assert RationalPhase(4, 8) == RationalPhase(1, 2)
    assert RationalPhase(7, 7) == ZERO_PHASE
    p = RationalPhase(5, 10)
    assert (p.numerator, p.denominator) == (1, 2)


def test_parse():
    assert RationalPhase.parse("3/4") == RationalPhase(3, 4)
    assert RationalPhase.parse(" 0 ") == ZERO_PHASE
    assert RationalPhase.parse("-1/3") == RationalPhase(2, 3)
    with pytest.raises(ValueError):
        RationalPhase.parse("1/2/3")


def test_add_examples():
    q = RationalPhase(1, 4)
    assert phase_add(q, ZERO_PHASE) == q
    assert phase_add(q, q) == RationalPhase(1, 2)
    assert phase_add(RationalPhase(3, 4), RationalPhase(3, 4)) == RationalPhase(1, 2)
    assert phase_add(RationalPhase(1, 3), RationalPhase(2, 3)) == ZERO_PHASE
    assert phase_add(RationalPhase(1, 2), RationalPhase(1, 3)) == RationalPhase(5, 6)


def test_denominator_cap():
    with pytest.raises(DenominatorOverflowError):
        phase_add(RationalPhase(1, 999_983), RationalPhase(1, 999_979))


@given(rationals, rationals, rationals)
@settings(max_examples=300, deadline=None)
def test_group_laws_sampled(a, b, c):
    assert phase_add(a, b) == phase_add(b, a)
    assert phase_add(phase_add(a, b), c) == phase_add(a, phase_add(b, c))
    assert phase_add(a, ZERO_PHASE) == a
    assert phase_add(a, phase_inverse(a)) == ZERO_PHASE


def test_group_laws_exhaustive_small_denominators():
    phases = [RationalPhase(n, d)
              for d in range(1, 9) for n in range(d) if gcd(n, d) == 1]
    for a in phases:
        assert phase_add(a, ZERO_PHASE) == a
        inv = phase_inverse(a)
        assert phase_add(a, inv) == ZERO_PHASE
        assert inv == RationalPhase(a.denominator - a.numerator, a.denominator)
    for a, b in itertools.product(phases, repeat=2):
        assert phase_add(a, b) == phase_add(b, a)
    for a, b, c in itertools.product(phases, repeat=3):
        assert phase_add(phase_add(a, b), c) == phase_add(a, phase_add(b, c))


# --- phased morphisms --------------------------------------------------------

X = FinObj("X", ("a", "b", "c"))
Y = FinObj("Y", ("u", "v"))


def _mor(src, dst, mapping, phase):
    return PhasedMorphism(FinMor.from_mapping(src, dst, mapping), phase)


def test_compose_phased_adds_phases():
    f = _mor(X, Y, {"a": "u", "b": "u", "c": "v"}, RationalPhase(1, 3))
    g = _mor(Y, X, {"u": "a", "v": "b"}, RationalPhase(2, 3))
    comp = compose_phased(f, g)
    assert comp.phase == ZERO_PHASE
    assert comp.base.apply("c") == "b"
    zero = compose_phased(_mor(X, X, {x: x for x in X.elements}, ZERO_PHASE),
                          _mor(X, X, {x: x for x in X.elements}, ZERO_PHASE))
    assert zero.phase == ZERO_PHASE
    h = compose_phased(_mor(X, X, {x: x for x in X.elements}, RationalPhase(1, 2)),
                       _mor(X, X, {x: x for x in X.elements}, RationalPhase(1, 3)))
    assert h.phase == RationalPhase(5, 6)


def test_compose_phased_rejects_mismatch():
    f = _mor(X, Y, {"a": "u", "b": "u", "c": "v"}, ZERO_PHASE)
    with pytest.raises(NonComposableError):
        compose_phased(f, f)


def test_compose_phased_associative_and_homomorphic():
    rng = np.random.default_rng(8)
    for _ in range(50):
        ms = []
        for _ in range(3):
            base = random_permutation_mor(rng, X)
            ph = RationalPhase(int(rng.integers(0, 12)), 12)
            ms.append(PhasedMorphism(base, ph))
        left = compose_phased(compose_phased(ms[0], ms[1]), ms[2])
        right = compose_phased(ms[0], compose_phased(ms[1], ms[2]))
        assert left == right
        assert left.phase == phase_add(phase_add(ms[0].phase, ms[1].phase),
                                       ms[2].phase)


# --- cycles -------------------------------------------------------------------


def _loop(phases):
    ident = {x: x for x in X.elements}
    return [_mor(X, X, ident, p) for p in phases]


def test_cycle_net_phase_examples():
    assert cycle_net_phase(_loop([ZERO_PHASE] * 3)) == ZERO_PHASE
    tri = _loop([RationalPhase(1, 4), RationalPhase(1, 4), RationalPhase(1, 2)])
    assert cycle_net_phase(tri) == ZERO_PHASE
    tq = _loop([RationalPhase(1, 4)] * 3)
    assert cycle_net_phase(tq) == RationalPhase(3, 4)


def test_cycle_must_close():
    f = _mor(X, Y, {"a": "u", "b": "u", "c": "v"}, ZERO_PHASE)
    with pytest.raises(NotAClosedLoopError):
        cycle_net_phase([f])
    with pytest.raises(NotAClosedLoopError):
        cycle_net_phase([])
    g = _mor(Y, X, {"u": "a", "v": "b"}, ZERO_PHASE)
    assert cycle_net_phase([f, g]) == ZERO_PHASE


def test_cycle_rotation_invariance():
    rng = np.random.default_rng(12)
    for _ in range(100):
        k = int(rng.integers(2, 7))
        loop = []
        for _ in range(k):
            base = random_permutation_mor(rng, X)
            den = int(rng.choice(_DENOMS))
            loop.append(PhasedMorphism(
                base, RationalPhase(int(rng.integers(0, den * 2)), den)))
        net = cycle_net_phase(loop)
        for shift in range(1, k):
            rotated = loop[shift:] + loop[:shift]
            assert cycle_net_phase(rotated) == net


# --- lock space ---------------------------------------------------------------


def test_lock_space_examples():
    ident = identity_morphism(X)
    assert phase_lock_space(ident, 1).elements == X.elements
    cyc = FinMor.from_mapping(X, X, {"a": "b", "b": "c", "c": "a"})
    assert phase_lock_space(cyc, 3).elements == ()
    swap = FinMor.from_mapping(X, X, {"a": "b", "b": "a", "c": "c"})
    assert phase_lock_space(swap, 2).elements == ("c",)


def test_lock_space_validates_inputs():
    notbij = FinMor.from_mapping(X, X, {"a": "a", "b": "a", "c": "c"})
    with pytest.raises(NotAutomorphismError):
        phase_lock_space(notbij, 2)
    swap = FinMor.from_mapping(X, X, {"a": "b", "b": "a", "c": "c"})
    with pytest.raises(NotAutomorphismError):
        phase_lock_space(swap, 3)  # 3 is not a multiple of the order 2


def test_lock_space_equals_fixed_set_on_random_permutations():
    from veridyn.category import automorphism_order
    rng = np.random.default_rng(77)
    for size in range(1, 8):
        obj = FinObj("P", tuple(f"e{i}" for i in range(size)))
        for _ in range(30):
            theta = random_permutation_mor(rng, obj)
            k = automorphism_order(theta)
            locked = phase_lock_space(theta, k)
            fixed = tuple(x for x, y in theta.pairs if x == y)
            assert locked.elements == fixed


# --- pairing and lifting --------------------------------------------------------


def test_pairing_all_equal_and_all_distinct():
    same = {x: RationalPhase(1, 4) for x in X.elements}
    full = interference_pairing(X, same)
    assert full.size == X.size ** 2
    distinct = {"a": ZERO_PHASE, "b": RationalPhase(1, 3), "c": RationalPhase(2, 3)}
    diag = interference_pairing(X, distinct)
    assert diag.elements == ("(a,a)", "(b,b)", "(c,c)")


def test_pairing_mixed_example():
    phases = {"a": ZERO_PHASE, "b": ZERO_PHASE, "c": RationalPhase(1, 2)}
    got = interference_pairing(X, phases)
    assert got.elements == ("(a,a)", "(a,b)", "(b,a)", "(b,b)", "(c,c)")


def test_pairing_requires_total_assignment():
    with pytest.raises(PartialPhaseMapError):
        interference_pairing(X, {"a": ZERO_PHASE})


def test_lift_preserves_phases_and_commutes_with_projection():
    update = FinMor.from_mapping(X, X, {"a": "b", "b": "c", "c": "a"})
    states = [PhasedElement("a", RationalPhase(1, 3)),
              PhasedElement("c", RationalPhase(1, 2))]
    lifted = lift_phi_phase(update, states)
    assert [s.element for s in lifted] == ["b", "a"]
    assert [s.phase for s in lifted] == [s.phase for s in states]
    assert [s.element for s in lifted] == [update.apply(s.element) for s in states]
    assert lift_phi_phase(update, []) == []
    const = FinMor.from_mapping(X, X, {"a": "a", "b": "a", "c": "a"})
    allsame = lift_phi_phase(const, states)
    assert {s.element for s in allsame} == {"a"}
    assert [s.phase for s in allsame] == [s.phase for s in states]


def test_lift_rejects_unknown_element():
    update = identity_morphism(X)
    with pytest.raises(ShapeMismatchError):
        lift_phi_phase(update, [PhasedElement("zz", ZERO_PHASE)])
