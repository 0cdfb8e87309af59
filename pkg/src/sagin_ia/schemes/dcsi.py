"""
Space-time interference management with delayed CSI at the satellite.

A session spans ``kd + 2`` slots (D2D indices are 0-based here):

* slot 1: the satellite sends ``x_s`` of length ``(kd+1) n``; D2D silent.
  Each receiver's observation ``H_{s,k}[1] x_s`` is fed back to its own
  transmitter and the satellite learns ``H_{s,k}[1]`` (delayed CSI).
* slot ``t`` in ``2..kd+1``: transmitter ``m = t-2`` retransmits
  ``H_{s,m}[1] x_s``; the satellite sends ``sum_{k != m} H_{s,k}[1] x_s`` on
  ``n`` antennas; everybody else sends fresh data. The RIS makes the
  retransmission arrive at every receiver through the same effective channel
  as the satellite, so after ``V_j = H_{s,j}[t]^{-1}`` all receivers see the
  common term ``sum_k H_{s,k}[1] x_s`` plus their own fresh data.
* slot ``kd+2``: the satellite is silent and each transmitter repeats its
  latest fresh payload.

Receiver ``j`` subtracts its observation from slot ``j+2`` (where it got the
common term only) to isolate each fresh payload; the satellite user stacks
slots ``1..kd+1`` into a square system for ``x_s``.
"""

import json
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List

import numpy as np

from .. import linalg, ris
from ..channel import generate_block
from .common import (
    DegenerateChannel,
    InfeasibleScheme,
    SchemeOutcome,
    payload_or_random,
    relative_error,
    require_invertible,
)


class DelayViolation(RuntimeError):
    """The satellite tried to use CSI that is not yet available to it."""


def retransmit_slot(k):
    """Slot in which transmitter ``k`` retransmits."""
    return k + 2


def last_fresh_slot(k, kd):
    return kd if k == kd - 1 else kd + 1


@dataclass
class SessionState:
    kd: int
    n: int
    slot: int = 0
    phase: int = 0
    csi_cache: Dict[int, List[np.ndarray]] = field(default_factory=dict)
    rx_log: Dict[int, Dict[int, np.ndarray]] = field(default_factory=dict)
    precoder_log: Dict[int, Dict[int, np.ndarray]] = field(default_factory=dict)
    desired_log: Dict[int, Dict[int, np.ndarray]] = field(default_factory=dict)
    feedback: Dict[int, np.ndarray] = field(default_factory=dict)
    fresh_sent: Dict[int, Dict[int, np.ndarray]] = field(default_factory=dict)
    sat_rows: List[np.ndarray] = field(default_factory=list)
    sat_rx: List[np.ndarray] = field(default_factory=list)
    x_s1: Any = None
    prev_channels: Any = None
    trace: List[Dict[str, Any]] = field(default_factory=list)
    merging_residual: float = 0.0
    ris_residual: float = 0.0
    interference_residual: float = 0.0

    @property
    def total_slots(self):
        return self.kd + 2

    def cache_satellite_csi(self, slot, matrices):
        self.csi_cache[slot] = [m.copy() for m in matrices]

    def satellite_csi(self, slot):
        """Delayed CSI of ``slot`` as seen by the satellite now."""
        if slot >= self.slot:
            raise DelayViolation(f"satellite CSI of slot {slot} requested at slot {self.slot}")
        return self.csi_cache[slot]

    def log_rx(self, rx, slot, y):
        self.rx_log.setdefault(rx, {})
        if slot in self.rx_log[rx]:
            raise RuntimeError(f"rx_log is append-only (rx {rx}, slot {slot})")
        self.rx_log[rx][slot] = y


def _active(h, n):
    return h[:, :n]


def phase1(state, channels, x_s1):
    kd, n = state.kd, state.n
    width = (kd + 1) * n
    x_s1 = np.asarray(x_s1, dtype=np.complex128)
    if x_s1.shape != (width,):
        raise ValueError(f"slot-1 satellite payload must have length {width}")
    if channels.ms < width:
        raise InfeasibleScheme("ms-too-small", f"delayed-CSI scheme needs ms >= (kd+1)n = {width}")
    state.slot, state.phase = 1, 1
    state.x_s1 = x_s1
    h_c = channels.h_sc[:, :width]
    h_k = [h[:, :width] for h in channels.h_skr]
    y_c = h_c @ x_s1
    state.sat_rows.append(h_c)
    state.sat_rx.append(y_c)
    for k in range(kd):
        y = h_k[k] @ x_s1
        state.log_rx(k, 1, y)
        state.feedback[k] = y
    # reaches the satellite after the slot
    state.cache_satellite_csi(1, h_k)
    state.prev_channels = channels
    state.trace.append({"slot": 1, "phase": 1, "satellite": "send x_s[1]",
                        "d2d": {str(k): "silent" for k in range(kd)}})
    return {"c": y_c, **{k: state.rx_log[k][1] for k in range(kd)}}


def _chained_precoder(state, k, channels, t):
    """Delayed-CSI chaining of transmitter ``k``'s precoder from slot ``t-1`` to ``t``."""
    n = state.n
    if t == 2:
        return np.eye(n, dtype=np.complex128)
    prev = state.prev_channels
    w_prev = state.precoder_log[k][t - 1]
    h_now = channels.h_ktkr[k][k]
    require_invertible(h_now, f"H[{k}->{k}][{t}]")
    hs_prev = _active(prev.h_skr[k], n)
    require_invertible(hs_prev, f"H_s,{k}[{t - 1}]")
    return np.linalg.solve(
        h_now,
        _active(channels.h_skr[k], n) @ np.linalg.solve(hs_prev, prev.h_ktkr[k][k] @ w_prev),
    )


def _d2d_constraints(channels, v_kr, v_c, w, senders, retransmitter=None, sat_eff=None):
    """
    RIS requirements for one slot.

    ``senders`` are the fresh transmitters; cross links among them and all
    their links to the satellite user are nulled. A retransmitter's block at
    every receiver is matched to ``sat_eff[j]`` and nulled at the satellite
    user.
    """
    kd = channels.kd
    n = channels.n
    out = []
    g = [v_kr[j] @ channels.h_rkr[j] for j in range(kd)]
    g_c = v_c @ channels.h_rc
    if retransmitter is not None:
        m = retransmitter
        f = channels.h_ktr[m] @ w[m]
        for j in range(kd):
            target = v_kr[j] @ channels.h_ktkr[m][j] @ w[m] - sat_eff[j]
            out.append(ris.NullConstraint(target, g[j], f, ("merge", m, j)))
        out.append(ris.NullConstraint(v_c @ channels.h_ktc[m] @ w[m], g_c, f, ("sat", m, "c")))
    for k in senders:
        f = channels.h_ktr[k] @ w[k]
        for j in range(kd):
            if j != k:
                target = v_kr[j] @ channels.h_ktkr[k][j] @ w[k]
                out.append(ris.NullConstraint(target, g[j], f, ("cross", k, j)))
        out.append(ris.NullConstraint(v_c @ channels.h_ktc[k] @ w[k], g_c, f, ("sat", k, "c")))
    assert all(c.target.shape == (n, n) for c in out)
    return out


def constraint_count(kd, n, phase):
    """Scalar RIS equations per slot of the given phase."""
    if phase == 2:
        return (kd + (kd - 1) ** 2 + kd) * n * n
    if phase == 3:
        return kd * kd * n * n
    return 0


def _nulled_residual(channels, theta, v_kr, v_c, w, senders):
    worst = 0.0
    for k in senders:
        for j in list(range(channels.kd)) + ["c"]:
            if j == k:
                continue
            v = v_c if j == "c" else v_kr[j]
            worst = max(worst, float(np.linalg.norm(v @ channels.effective(k, j, theta) @ w[k])))
    return worst


def phase2_slot(state, channels, fresh):
    """
    One slot of the second phase. ``fresh`` maps every non-retransmitting
    transmitter to its new ``n``-vector.
    """
    kd, n = state.kd, state.n
    t = state.slot + 1
    if not 2 <= t <= kd + 1 or state.phase not in (1, 2):
        raise RuntimeError(f"phase-2 slot out of order (next slot {t})")
    state.slot, state.phase = t, 2
    m = t - 2
    senders = [k for k in range(kd) if k != m]
    if set(fresh) != set(senders):
        raise ValueError(f"fresh payloads required exactly for transmitters {senders}")
    for k in senders:
        state.fresh_sent.setdefault(k, {})[t] = np.asarray(fresh[k], dtype=np.complex128)

    h_s1 = state.satellite_csi(1)
    h_bar = sum(h_s1[k] for k in senders)
    x_sat = h_bar @ state.x_s1

    v_kr = []
    for j in range(kd):
        hs = _active(channels.h_skr[j], n)
        require_invertible(hs, f"H_s,{j}[{t}]")
        v_kr.append(np.linalg.inv(hs))
    v_c = np.eye(n, dtype=np.complex128)
    w = {m: np.eye(n, dtype=np.complex128)}
    for k in senders:
        w[k] = _chained_precoder(state, k, channels, t)
    for k in range(kd):
        state.precoder_log.setdefault(k, {})[t] = w[k]

    sat_eff = [v_kr[j] @ _active(channels.h_skr[j], n) for j in range(kd)]
    cons = _d2d_constraints(channels, v_kr, v_c, w, senders, m, sat_eff)
    design = ris.solve(cons)
    theta = design.theta

    retx = state.feedback[m]
    for j in list(range(kd)) + ["c"]:
        y = _active(channels.sat(j), n) @ x_sat
        y = y + channels.effective(m, j, theta) @ w[m] @ retx
        for k in senders:
            y = y + channels.effective(k, j, theta) @ w[k] @ fresh[k]
        if j == "c":
            state.sat_rows.append(_active(channels.h_sc, n) @ h_bar)
            state.sat_rx.append(v_c @ y)
        else:
            state.log_rx(j, t, v_kr[j] @ y)
    for k in senders:
        state.desired_log.setdefault(k, {})[t] = v_kr[k] @ channels.effective(k, k, theta) @ w[k]

    merging = max(
        float(np.linalg.norm(channels.effective(m, j, theta) - _active(channels.h_skr[j], n))
              / np.linalg.norm(_active(channels.h_skr[j], n)))
        for j in range(kd)
    )
    nulled = _nulled_residual(channels, theta, v_kr, v_c, w, senders)
    nulled = max(nulled, float(np.linalg.norm(v_c @ channels.effective(m, "c", theta) @ w[m])))
    state.merging_residual = max(state.merging_residual, merging)
    state.ris_residual = max(state.ris_residual, design.max_residual)
    state.interference_residual = max(state.interference_residual, nulled)
    state.prev_channels = channels
    roles = {str(k): "fresh" for k in senders}
    roles[str(m)] = "retransmit"
    state.trace.append({
        "slot": t, "phase": 2, "satellite": "send sum_{k!=%d} H_s,k[1] x_s[1]" % m,
        "d2d": roles, "ris_constraints": len(cons), "ris_max_residual": design.max_residual,
        "merging_residual": merging, "interference_residual": nulled,
    })
    return design


def phase3(state, channels):
    kd, n = state.kd, state.n
    t = kd + 2
    if state.slot != kd + 1:
        raise RuntimeError("phase 3 requires a completed phase 2")
    state.slot, state.phase = t, 3
    senders = list(range(kd))
    w = {k: _chained_precoder(state, k, channels, t) for k in senders}
    for k in senders:
        state.precoder_log[k][t] = w[k]
    v_kr = [np.eye(n, dtype=np.complex128) for _ in range(kd)]
    v_c = np.eye(n, dtype=np.complex128)
    cons = _d2d_constraints(channels, v_kr, v_c, w, senders)
    design = ris.solve(cons)
    theta = design.theta
    repeat = {k: state.fresh_sent[k][last_fresh_slot(k, kd)] for k in senders}
    for j in range(kd):
        y = np.zeros(n, dtype=np.complex128)
        for k in senders:
            y = y + channels.effective(k, j, theta) @ w[k] @ repeat[k]
        state.log_rx(j, t, y)
        state.desired_log.setdefault(j, {})[t] = channels.effective(j, j, theta) @ w[j]
    nulled = _nulled_residual(channels, theta, v_kr, v_c, w, senders)
    state.ris_residual = max(state.ris_residual, design.max_residual)
    state.interference_residual = max(state.interference_residual, nulled)
    state.prev_channels = channels
    state.trace.append({
        "slot": t, "phase": 3, "satellite": "silent",
        "d2d": {str(k): f"repeat x[{last_fresh_slot(k, kd)}]" for k in senders},
        "ris_constraints": len(cons), "ris_max_residual": design.max_residual,
        "interference_residual": nulled,
    })
    return design


def satuser_stack(state):
    return np.vstack(state.sat_rows)


def decode_satuser(state):
    """Solve the stacked ``(kd+1) n`` square system for ``x_s[1]``."""
    a = satuser_stack(state)
    size = (state.kd + 1) * state.n
    if a.shape != (size, size):
        raise RuntimeError("satellite-user decoding needs slots 1..kd+1")
    if linalg.rank_tol(a) < size:
        raise DegenerateChannel("stacked satellite-user matrix is rank deficient")
    return np.linalg.solve(a, np.concatenate(state.sat_rx))


def decode_d2d(state, k_r):
    """
    Recover the ``kd-1`` fresh payloads of pair ``k_r``.

    Differences against the retransmission slot remove the common satellite
    term; the phase-3 repetition adds one more (redundant) block row.
    """
    kd, n = state.kd, state.n
    log = state.rx_log[k_r]
    if len(log) != kd + 2:
        raise RuntimeError("D2D decoding needs all kd+2 slots")
    ref = log[retransmit_slot(k_r)]
    slots = [t for t in range(2, kd + 2) if t != retransmit_slot(k_r)]
    rows = len(slots) + 1
    a = np.zeros((rows * n, len(slots) * n), dtype=np.complex128)
    b = np.zeros(rows * n, dtype=np.complex128)
    for r, t in enumerate(slots):
        a[r * n:(r + 1) * n, r * n:(r + 1) * n] = state.desired_log[k_r][t]
        b[r * n:(r + 1) * n] = log[t] - ref
    c = slots.index(last_fresh_slot(k_r, kd))
    a[-n:, c * n:(c + 1) * n] = state.desired_log[k_r][kd + 2]
    b[-n:] = log[kd + 2]
    if linalg.rank_tol(a) < a.shape[1]:
        raise DegenerateChannel(f"D2D block system of receiver {k_r} is singular")
    x = linalg.pinv(a) @ b
    return {t: x[r * n:(r + 1) * n] for r, t in enumerate(slots)}


def analytic_dof(kd, n):
    return Fraction((kd * kd + 1) * n, kd + 2)


def run(cfg=None, payloads=None, rng=None, fading=None, channels=None):
    """
    Full ``kd+2``-slot session. Returns ``(outcome, state)``.

    ``channels`` may supply the ``kd+2`` slot realizations directly; otherwise
    they are drawn from ``rng`` with ``fading``. ``payloads`` may carry
    ``"s"`` (length ``(kd+1) n``) and ``(k, t)`` keys for fresh D2D vectors.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    if channels is None:
        if cfg is None:
            raise ValueError("either cfg or channels is required")
        from ..channel import FadingParams
        channels = generate_block(cfg, fading or FadingParams(), rng, cfg.kd + 2)
    kd, n = channels[0].kd, channels[0].n
    if kd < 2:
        raise InfeasibleScheme("kd-too-small", "delayed-CSI scheme needs kd >= 2")
    if len(channels) != kd + 2:
        raise ValueError(f"need {kd + 2} slot realizations")
    state = SessionState(kd, n)
    x_s = payload_or_random(payloads, "s", (kd + 1) * n, rng)
    phase1(state, channels[0], x_s)
    for t in range(2, kd + 2):
        fresh = {}
        for k in range(kd):
            if k != t - 2:
                fresh[k] = payload_or_random(payloads, (k, t), n, rng)
        phase2_slot(state, channels[t - 1], fresh)
    phase3(state, channels[kd + 1])

    sent = {"s": x_s}
    recovered = {"s": decode_satuser(state)}
    fresh_count = 0
    for k in range(kd):
        got = decode_d2d(state, k)
        for t, x in got.items():
            sent[(k, t)] = state.fresh_sent[k][t]
            recovered[(k, t)] = x
            fresh_count += 1
    streams = recovered["s"].size + fresh_count * n
    outcome = SchemeOutcome(
        sent=sent,
        recovered=recovered,
        recovery_err=relative_error(sent, recovered),
        interference_residual=state.interference_residual,
        dof_counted=Fraction(streams, state.total_slots),
        details={
            "ris_max_residual": state.ris_residual,
            "merging_residual": state.merging_residual,
            "satuser_rank": linalg.rank_tol(satuser_stack(state)),
            "satellite_symbols": int(recovered["s"].size),
            "fresh_d2d_symbols": fresh_count * n,
        },
    )
    return outcome, state


def trace_jsonl(state):
    return "\n".join(json.dumps(rec, sort_keys=True) for rec in state.trace) + "\n"
