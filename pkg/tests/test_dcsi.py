import json
from fractions import Fraction

import numpy as np
import pytest

from sagin_ia import linalg
from sagin_ia.schemes import dcsi
from sagin_ia.schemes.common import InfeasibleScheme

from conftest import make_block


def _session(kd, n, seed=0, payloads=None):
    blk = make_block(kd, n, (kd + 1) * n, (kd * kd + 1) * n * n, seed=seed)
    out, state = dcsi.run(channels=blk, payloads=payloads, rng=np.random.default_rng(seed))
    return blk, out, state


def test_phase1_dimensions_and_underdetermined():
    blk = make_block(2, 2, 6, 20)
    st = dcsi.SessionState(2, 2)
    y = dcsi.phase1(st, blk[0], np.ones(6))
    assert y["c"].shape == (2,)
    assert linalg.rank_tol(blk[0].h_sc[:, :6]) == 2 < 6


def test_phase1_zero_payload():
    blk = make_block(2, 2, 6, 20)
    st = dcsi.SessionState(2, 2)
    y = dcsi.phase1(st, blk[0], np.zeros(6))
    assert all(not np.any(v) for v in y.values())


def test_phase1_rejects_small_ms():
    blk = make_block(2, 2, 5, 20)
    with pytest.raises(InfeasibleScheme):
        dcsi.phase1(dcsi.SessionState(2, 2), blk[0], np.ones(6))


def test_delay_discipline():
    st = dcsi.SessionState(2, 2)
    blk = make_block(2, 2, 6, 20)
    dcsi.phase1(st, blk[0], np.ones(6))
    with pytest.raises(dcsi.DelayViolation):
        st.satellite_csi(1)
    st.slot = 2
    assert len(st.satellite_csi(1)) == 2
    with pytest.raises(dcsi.DelayViolation):
        st.satellite_csi(2)


def test_rx_log_append_only():
    st = dcsi.SessionState(2, 2)
    st.log_rx(0, 1, np.zeros(2))
    with pytest.raises(RuntimeError):
        st.log_rx(0, 1, np.ones(2))


def test_slot_order_enforced():
    st = dcsi.SessionState(2, 2)
    blk = make_block(2, 2, 6, 20)
    with pytest.raises(RuntimeError):
        dcsi.phase3(st, blk[0])


@pytest.mark.parametrize("kd", [2, 3, 4])
def test_constraint_count_enumerated(kd):
    n = 2
    _, _, state = _session(kd, n)
    phase2 = [r for r in state.trace if r["phase"] == 2]
    phase3 = [r for r in state.trace if r["phase"] == 3]
    assert all(r["ris_constraints"] * n * n == dcsi.constraint_count(kd, n, 2) for r in phase2)
    assert phase3[0]["ris_constraints"] * n * n == dcsi.constraint_count(kd, n, 3)
    assert all(r["ris_max_residual"] <= 1e-8 for r in phase2 + phase3)


def test_received_signal_substitution():
    kd, n = 3, 2
    blk, _, state = _session(kd, n, seed=4)
    width = (kd + 1) * n
    common = sum(h[:, :width] for h in blk[0].h_skr) @ state.x_s1
    for t in range(2, kd + 2):
        m = t - 2
        for j in range(kd):
            want = common.copy()
            if j != m:
                want = want + state.desired_log[j][t] @ state.fresh_sent[j][t]
            assert np.allclose(state.rx_log[j][t], want, atol=1e-8)


def test_satuser_slot_signal():
    kd, n = 2, 2
    blk, _, state = _session(kd, n, seed=5)
    width = (kd + 1) * n
    for t in range(2, kd + 2):
        m = t - 2
        h_bar = sum(blk[0].h_skr[k][:, :width] for k in range(kd) if k != m)
        want = blk[t - 1].h_sc[:, :n] @ h_bar @ state.x_s1
        assert np.allclose(state.sat_rx[t - 1], want, atol=1e-8)


def test_phase3_satellite_silent_and_slot_count():
    kd = 3
    _, _, state = _session(kd, 2)
    assert state.trace[-1]["satellite"] == "silent"
    assert len(state.trace) == kd + 2 == state.total_slots
    assert len(state.sat_rows) == kd + 1
    assert all(len(state.rx_log[k]) == kd + 2 for k in range(kd))


def test_satuser_stack_square_full_rank():
    _, out, state = _session(2, 2)
    a = dcsi.satuser_stack(state)
    assert a.shape == (6, 6)
    assert linalg.rank_tol(a) == 6
    assert out.details["satuser_rank"] == 6


@pytest.mark.parametrize("kd,n", [(2, 2), (3, 2), (3, 3), (4, 2)])
def test_end_to_end(kd, n):
    _, out, _ = _session(kd, n, seed=kd * 10 + n)
    assert out.recovery_err <= 1e-6
    assert out.details["merging_residual"] <= 1e-8
    assert out.interference_residual <= 1e-8
    assert out.details["satellite_symbols"] == (kd + 1) * n
    assert out.details["fresh_d2d_symbols"] == kd * (kd - 1) * n
    assert out.dof_counted == Fraction((kd * kd + 1) * n, kd + 2)


def test_kd2_one_fresh_vector_per_pair():
    _, out, _ = _session(2, 2)
    assert sorted(k for k in out.recovered if k != "s") == [(0, 3), (1, 2)]


def test_zero_payloads():
    kd, n = 2, 2
    payloads = {"s": np.zeros(6), (0, 3): np.zeros(2), (1, 2): np.zeros(2)}
    _, out, _ = _session(kd, n, payloads=payloads)
    assert out.recovery_err == 0
    assert all(not np.any(v) for v in out.recovered.values())


@pytest.mark.parametrize("kd,n,want", [(6, 3, Fraction(111, 8)), (2, 2, Fraction(5, 2))])
def test_analytic(kd, n, want):
    assert dcsi.analytic_dof(kd, n) == want


def test_trace_jsonl():
    _, _, state = _session(2, 2)
    lines = dcsi.trace_jsonl(state).strip().split("\n")
    recs = [json.loads(x) for x in lines]
    assert [r["slot"] for r in recs] == [1, 2, 3, 4]
    assert recs[1]["d2d"] == {"0": "retransmit", "1": "fresh"}


def test_rejects_single_pair():
    with pytest.raises(InfeasibleScheme):
        dcsi.run(channels=make_block(1, 2, 4, 4))
