import numpy as np
import pytest

from conftest import make_theta_system, relabel_obj
from veridyn.category import FinMor, FinObj, FunctorRep, identity_functor
from veridyn.coalgebra import (
    apply_F,
    build_chain,
    chain_to_csv,
    iterate_temporal,
    iterate_to_theta,
    verify_theta,
)
from veridyn.errors import NoWitnessError, UniverseEscapeError

A = FinObj("A", ("a1", "a2"))
B = FinObj("B", ("b1", "b2"))
MARKED = FinObj("Am", ("a1", "a2", "m"))
STAR = FinObj("S", ("s",))


def test_iterate_temporal_zero_steps():
    ident = identity_functor([A])
    assert iterate_temporal(ident, A, 0) == [A]


def test_iterate_temporal_identity():
    ident = identity_functor([A])
    assert iterate_temporal(ident, A, 5) == [A] * 6


def test_iterate_temporal_two_cycle():
    cyc = FunctorRep("P", {A: B, B: A}, {})
    assert iterate_temporal(cyc, A, 3) == [A, B, A, B]


def test_iterate_temporal_escape():
    partial = FunctorRep("P", {A: B}, {})
    with pytest.raises(UniverseEscapeError):
        iterate_temporal(partial, A, 2)


def test_iterate_temporal_append_recurrence():
    rng = np.random.default_rng(5)
    for _ in range(20):
        verification, update, start, _ = make_theta_system(rng)
        for n in range(16):
            longer = iterate_temporal(update, start, n + 1)
            shorter = iterate_temporal(update, start, n)
            assert longer[:-1] == shorter
            assert longer[-1] == update.apply_obj(shorter[-1])


def test_apply_F_identity_and_marker():
    ident = identity_functor([A, MARKED])
    assert apply_F(ident, ident, A) == A
    grower = FunctorRep("V", {A: MARKED, MARKED: MARKED}, {})
    assert apply_F(grower, ident, A) == MARKED
    collapser = FunctorRep("P", {A: STAR, STAR: STAR}, {})
    assert apply_F(identity_functor([A, STAR]), collapser, A) == STAR


def test_theta_identity_converges_at_zero():
    ident = identity_functor([A])
    result = iterate_to_theta(ident, ident, A)
    assert result.converged and result.iterations == 0
    assert result.carrier == A
    assert result.witness.is_identity()
    assert verify_theta(ident, ident, result).holds


def test_theta_eventually_constant_chain():
    # sizes 2 -> 3 -> 1 -> 1: no early isomorphism, settles on the sink
    wide = FinObj("W", ("w1", "w2", "w3"))
    update = FunctorRep("P", {A: wide, wide: STAR, STAR: STAR}, {})
    ident = identity_functor([A, wide, STAR])
    result = iterate_to_theta(ident, update, A)
    assert result.converged
    assert result.carrier == STAR
    assert result.iterations == 2
    assert verify_theta(ident, update, result).holds


def test_theta_equal_size_step_counts_as_isomorphic():
    # carriers of equal size are isomorphic as bare finite sets, so the
    # stabilization criterion may fire before the chain is constant
    update = FunctorRep("P", {A: B, B: A}, {})
    ident = identity_functor([A, B])
    result = iterate_to_theta(ident, update, A)
    assert result.converged and result.iterations == 0
    assert result.witness.pairs == (("a1", "b1"), ("a2", "b2"))
    assert verify_theta(ident, update, result).holds


def test_theta_growing_chain_does_not_converge():
    g0 = FinObj("G0", ("x0",))
    g1 = FinObj("G1", ("x0", "x1"))
    g2 = FinObj("G2", ("x0", "x1", "x2"))
    g3 = FinObj("G3", ("x0", "x1", "x2", "x3"))
    grower = FunctorRep("V", {g0: g1, g1: g2, g2: g3}, {})
    ident = identity_functor([g0, g1, g2, g3])
    result = iterate_to_theta(grower, ident, g0, max_iter=3)
    assert not result.converged
    assert result.carrier == g3
    assert result.iterations == 3
    assert result.inclusion_chain
    with pytest.raises(NoWitnessError):
        verify_theta(grower, ident, result)
    with pytest.raises(UniverseEscapeError):
        iterate_to_theta(grower, ident, g0, max_iter=16)


def test_generated_systems_converge_and_idempotent():
    rng = np.random.default_rng(17)
    for _ in range(30):
        verification, update, start, _ = make_theta_system(rng)
        result = iterate_to_theta(verification, update, start)
        assert result.converged
        assert verify_theta(verification, update, result).holds
        once_more = apply_F(verification, update, result.carrier)
        assert once_more.size == result.carrier.size


def test_corrupted_witness_detected():
    rng = np.random.default_rng(23)
    found = 0
    for _ in range(60):
        verification, update, start, _ = make_theta_system(rng)
        result = iterate_to_theta(verification, update, start)
        if not result.converged or result.carrier.size < 2:
            continue
        w = result.witness
        (x1, y1), (x2, y2) = w.pairs[0], w.pairs[1]
        tampered = FinMor(w.src, w.dst,
                          ((x1, y2), (x2, y1)) + w.pairs[2:])
        from dataclasses import replace
        bad = replace(result, witness=tampered)
        report = verify_theta(verification, update, bad)
        assert not report.holds
        assert {v.element for v in report.violations} == {x1, x2}
        found += 1
    assert found >= 5


def test_convergence_invariant_under_relabeling():
    rng = np.random.default_rng(31)
    for _ in range(20):
        verification, update, start, objs = make_theta_system(rng)
        labels = sorted({x for o in objs for x in o.elements})
        shuffled = list(labels)
        rng.shuffle(shuffled)
        table = dict(zip(labels, shuffled))
        mapped = {o: relabel_obj(o, table) for o in objs}
        verification2 = FunctorRep("V", {mapped[a]: mapped[b]
                                         for a, b in verification.obj_map.items()}, {})
        update2 = FunctorRep("P", {mapped[a]: mapped[b]
                                   for a, b in update.obj_map.items()}, {})
        r1 = iterate_to_theta(verification, update, start)
        r2 = iterate_to_theta(verification2, update2, mapped[start])
        assert (r1.converged, r1.iterations) == (r2.converged, r2.iterations)


def test_chain_records_and_csv():
    update = FunctorRep("P", {A: B, B: STAR, STAR: STAR}, {})
    ident = identity_functor([A, B, STAR])
    chain = build_chain(ident, update, A, 3)
    assert [rec.stage for rec in chain] == [0, 1, 2, 3]
    assert chain[0].connecting_map is None
    # A and B share no labels: not an inclusion step
    assert chain[1].connecting_map is None
    # STAR -> STAR is an inclusion
    assert chain[3].connecting_map is not None
    csv = chain_to_csv(chain)
    assert csv.splitlines()[0] == "stage,carrier_size"
    assert csv.splitlines()[1] == "0,2"


def test_theta_result_serializes():
    ident = identity_functor([A])
    doc = iterate_to_theta(ident, ident, A).to_dict()
    assert doc["converged"] is True
    assert doc["carrier"]["id"] == "A"
    assert doc["witness"]["mapping"] == {"a1": "a1", "a2": "a2"}
