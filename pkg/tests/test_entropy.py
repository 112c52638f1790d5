import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_mor, random_obj
from veridyn.category import FinMor, FinObj, FunctorRep, compose, identity_functor
from veridyn.entropy import (
    EntropyParams,
    ProbState,
    build_filtration,
    build_trace,
    check_observation_bound,
    check_step_bound,
    entropy_direction_report,
    memory_sequence,
    pushforward,
    shannon_entropy,
    total_entropy_bound,
    trace_to_csv,
)
from veridyn.errors import (
    DomainError,
    InvalidDistributionError,
    NotMonotoneError,
    ShapeMismatchError,
)

FOUR = FinObj("F4", ("w", "x", "y", "z"))
THREE = FinObj("T3", ("p", "q", "r"))
TWO = FinObj("T2", ("m", "n"))


def _random_dist(rng, carrier):
    raw = rng.random(carrier.size) + 1e-9
    return ProbState(carrier, tuple(raw / raw.sum()))


def test_normalization_enforced():
    with pytest.raises(InvalidDistributionError):
        ProbState(FOUR, (0.5, 0.5, 0.1, 0.0))
    with pytest.raises(InvalidDistributionError):
        ProbState(FOUR, (0.5, 0.5))
    with pytest.raises(InvalidDistributionError):
        ProbState(TWO, (1.5, -0.5))


def test_entropy_known_values():
    assert shannon_entropy(ProbState.uniform(FOUR)) == pytest.approx(2.0, abs=1e-12)
    assert shannon_entropy(ProbState.point_mass(FOUR, "x")) == 0.0
    assert shannon_entropy(ProbState(THREE, (0.5, 0.25, 0.25))) == pytest.approx(
        1.5, abs=1e-12)


def test_pushforward_identity_and_collapse():
    p = _random_dist(np.random.default_rng(1), THREE)
    ident = FinMor.from_mapping(THREE, THREE, {x: x for x in THREE.elements})
    assert pushforward(p, ident).probs == pytest.approx(p.probs)
    const = FinMor.from_mapping(THREE, TWO, {x: "m" for x in THREE.elements})
    q = pushforward(p, const)
    assert q.probs == pytest.approx((1.0, 0.0))
    assert shannon_entropy(q) == 0.0


def test_pushforward_merge_example():
    p = ProbState.uniform(THREE)
    merge = FinMor.from_mapping(THREE, TWO, {"p": "m", "q": "m", "r": "n"})
    q = pushforward(p, merge)
    assert q.probs == pytest.approx((2 / 3, 1 / 3))
    assert shannon_entropy(q) == pytest.approx(0.9182958340544896, abs=1e-12)


def test_pushforward_shape_mismatch():
    p = ProbState.uniform(THREE)
    f = FinMor.from_mapping(TWO, TWO, {"m": "m", "n": "n"})
    with pytest.raises(ShapeMismatchError):
        pushforward(p, f)


def test_data_processing_inequality_and_direction_report():
    rng = np.random.default_rng(42)
    pairs = []
    for _ in range(500):
        src = random_obj(rng, "S", max_elems=5)
        dst = random_obj(rng, "D", max_elems=5, pool="ijklmn")
        p = _random_dist(rng, src)
        f = random_mor(rng, src, dst)
        pairs.append((p, f))
        assert shannon_entropy(pushforward(p, f)) <= shannon_entropy(p) + 1e-9
    report = entropy_direction_report(pairs)
    assert report["pairs"] == 500
    assert report["contraction_holds"] == 500
    assert 0.0 <= report["nondecreasing_postulate_violation_rate"] <= 1.0


# --- bounds -----------------------------------------------------------------


def test_step_bound_no_violation_for_constant_trace():
    trace = build_trace([1.0] * 6, [0.5] * 6, EntropyParams(C=0.0))
    assert check_step_bound(trace, 0.0) == []


def test_step_bound_flags_initial_jump():
    trace = build_trace([0.0, 3.0, 3.0], [0.0, 0.0, 0.0], EntropyParams(C=1.0))
    assert check_step_bound(trace, 1.0) == [0]
    assert not trace.steps[0].step_bound_ok


def test_step_bound_half_log_growth_passes():
    H = [0.0]
    for n in range(8):
        H.append(H[-1] + 0.5 * math.log(n + 1))
    trace = build_trace(H, [0.0] * len(H), EntropyParams(C=1.0))
    assert check_step_bound(trace, 1.0) == []


def test_step_bound_oracle_agreement_random_traces():
    rng = np.random.default_rng(7)
    for _ in range(100):
        length = int(rng.integers(2, 20))
        H = np.abs(rng.standard_normal(length).cumsum()).tolist()
        C = float(rng.random() * 2)
        trace = build_trace(H, [0.0] * length, EntropyParams(C=C))
        brute = [n for n in range(length - 1)
                 if H[n + 1] - H[n] > C * math.log(n + 1) + 1e-9]
        assert check_step_bound(trace, C) == brute


def test_observation_bound_cases():
    assert check_observation_bound(2.0, 2.5, 1.0)
    assert check_observation_bound(2.0, 2.0, 0.0)
    assert not check_observation_bound(1.0, 2.0, 0.5)


def test_total_bound_values_and_domain():
    params = EntropyParams(C=2.0, K=0.5)
    assert total_entropy_bound(1, 1.0, params) == pytest.approx(1.5)
    assert total_entropy_bound(3, 1.0, params) == pytest.approx(
        1.0 + 2.0 * math.log(3) + 1.5)
    assert total_entropy_bound(5, 1.0, EntropyParams()) == 1.0
    with pytest.raises(DomainError):
        total_entropy_bound(0, 1.0, params)


@given(st.integers(1, 50), st.floats(0, 10), st.floats(0, 5), st.floats(0, 5))
@settings(max_examples=80, deadline=None)
def test_total_bound_monotone(n, H0, C, K):
    params = EntropyParams(C=C, K=K)
    base = total_entropy_bound(n, H0, params)
    assert total_entropy_bound(n + 1, H0, params) >= base
    assert total_entropy_bound(n, H0 + 1.0, params) >= base
    assert total_entropy_bound(n, H0, EntropyParams(C=C + 1, K=K)) >= base
    assert total_entropy_bound(n, H0, EntropyParams(C=C, K=K + 1)) >= base


def test_params_validation():
    with pytest.raises(DomainError):
        EntropyParams(C=-1.0)
    with pytest.raises(DomainError):
        EntropyParams(alpha=0.0)


def test_k_schedule_overrides_constant():
    H = [1.0, 1.0, 1.0]
    H_O = [0.0, 3.0, 1.0]
    loose = build_trace(H, H_O, EntropyParams(K=0.1), k_schedule=[5.0, 5.0, 5.0])
    assert all(s.obs_bound_ok for s in loose.steps)
    tight = build_trace(H, H_O, EntropyParams(K=5.0), k_schedule=[0.1, 0.1, 0.1])
    assert not tight.steps[0].obs_bound_ok


# --- filtration and memory --------------------------------------------------


def test_filtration_identity_functor():
    ident = identity_functor([THREE])
    filt = build_filtration(ident, THREE, 4)
    assert all(layer == THREE for layer in filt.layers)
    assert len(filt.inclusions) == 4


def test_filtration_growing_layers():
    l0 = FinObj("L0", ("a",))
    l1 = FinObj("L1", ("a", "b"))
    l2 = FinObj("L2", ("a", "b", "c"))
    grower = FunctorRep("V", {l0: l1, l1: l2}, {})
    filt = build_filtration(grower, l0, 2)
    assert [layer.size for layer in filt.layers] == [1, 2, 3]
    for incl in filt.inclusions:
        assert incl.is_identity() or all(a == b for a, b in incl.pairs)


def test_filtration_collapse_rejected():
    l1 = FinObj("L1", ("a", "b"))
    l0 = FinObj("L0", ("a",))
    collapser = FunctorRep("V", {l1: l0}, {})
    with pytest.raises(NotMonotoneError):
        build_filtration(collapser, l1, 1)


def test_filtration_inclusions_compose_exactly():
    l0 = FinObj("L0", ("a",))
    l1 = FinObj("L1", ("a", "b"))
    l2 = FinObj("L2", ("a", "b", "c"))
    grower = FunctorRep("V", {l0: l1, l1: l2}, {})
    filt = build_filtration(grower, l0, 2)
    direct = FinMor(filt.layers[0], filt.layers[2],
                    tuple((x, x) for x in filt.layers[0].elements))
    assert compose(filt.inclusions[0], filt.inclusions[1]) == direct


def test_memory_sequence_unions():
    orbit = [FinObj("O0", ("a", "b")), FinObj("O1", ("b", "c")),
             FinObj("O2", ("d",))]
    mem = memory_sequence(orbit)
    assert [m.elements for m in mem] == [
        ("a", "b"), ("a", "b", "c"), ("a", "b", "c", "d")]


# --- CSV --------------------------------------------------------------------


def test_trace_csv_shape_and_flags():
    params = EntropyParams(C=0.0, K=0.0)
    trace = build_trace([0.0, 3.0], [0.0, 5.0], params)
    csv = trace_to_csv(trace, params)
    lines = csv.splitlines()
    assert lines[0] == "n,H,H_O,step_bound,obs_bound,total_bound,violated_flags"
    assert len(lines) == 3
    assert lines[1].endswith("step;obs")
    assert "total" in lines[2]
