"""
Interference management with instantaneous (or moderately delayed) CSI at
the satellite.

The satellite beamforms into the null space of the stacked satellite-to-D2D
channel, so no D2D receiver sees it. Every link is then SVD-diagonalized and
the RIS removes all cross-D2D blocks and all D2D blocks at the satellite
user. Every source sends ``n`` streams in one slot.

Below ``ms = (kd+1) n`` only the dimension count is available
(:func:`deficient_plan`).
"""

import math
from dataclasses import dataclass, field
from typing import List

import numpy as np

from .. import linalg, ris
from .common import (
    InfeasibleScheme,
    SchemeOutcome,
    SchemePlan,
    count_dof,
    payload_or_random,
    relative_error,
    require_invertible,
)


@dataclass
class NullspacePlan:
    w_sc: np.ndarray
    silenced: List[int] = field(default_factory=list)

    @property
    def effective_streams(self):
        return self.w_sc.shape[1]


def stacked_sat_to_d2d(channels):
    return np.vstack(channels.h_skr)


def nullspace_precoder(channels):
    """Orthonormal basis of ``null(H_{s,D})`` of width ``min(n, ms - kd n)``."""
    kd, n, ms = channels.kd, channels.n, channels.ms
    if ms <= kd * n:
        raise InfeasibleScheme(
            "empty-null-space", f"ms={ms} <= kd*n={kd * n}: satellite null space is empty"
        )
    basis = linalg.null_space(stacked_sat_to_d2d(channels))
    width = min(n, ms - kd * n)
    return NullspacePlan(basis[:, :width], [0] * kd)


def effective_sat_channel(channels, plan):
    return channels.h_sc @ plan.w_sc


@dataclass
class Factors:
    w_kt: List[np.ndarray]
    v_kr: List[np.ndarray]
    w_s: np.ndarray
    v_c: np.ndarray


def svd_factors(channels, null_plan):
    """``W_k = B_k``, ``V_k = A_k^H`` per desired link, same for the satellite."""
    w_kt, v_kr = [], []
    for k in range(channels.kd):
        u, _, v = linalg.svd(channels.h_ktkr[k][k])
        w_kt.append(v)
        v_kr.append(u.conj().T)
    u, _, v = linalg.svd(effective_sat_channel(channels, null_plan))
    return Factors(w_kt, v_kr, null_plan.w_sc @ v, u.conj().T)


def build_constraints(channels, factors):
    kd = channels.kd
    out = []
    for j in range(kd):
        v = factors.v_kr[j]
        g = v @ channels.h_rkr[j]
        for i in range(kd):
            if i == j:
                continue
            target = v @ channels.h_ktkr[i][j] @ factors.w_kt[i]
            out.append(ris.NullConstraint(target, g, channels.h_ktr[i] @ factors.w_kt[i], ("a", i, j)))
    g_c = factors.v_c @ channels.h_rc
    for i in range(kd):
        target = factors.v_c @ channels.h_ktc[i] @ factors.w_kt[i]
        out.append(ris.NullConstraint(target, g_c, channels.h_ktr[i] @ factors.w_kt[i], ("b", i, "c")))
    return out


def design(channels):
    kd, n, ms = channels.kd, channels.n, channels.ms
    if ms < (kd + 1) * n:
        raise InfeasibleScheme(
            "ms-too-small",
            f"full-DoF instantaneous-CSI scheme needs ms >= (kd+1)n = {(kd + 1) * n}",
        )
    null_plan = nullspace_precoder(channels)
    require_invertible(effective_sat_channel(channels, null_plan), "H_sc W_sc")
    for k in range(kd):
        require_invertible(channels.h_ktkr[k][k], f"H[{k}->{k}]")
    factors = svd_factors(channels, null_plan)
    design_ = ris.solve(build_constraints(channels, factors))
    nulled = [(i, j) for j in range(kd) for i in range(kd) if i != j]
    nulled += [(i, "c") for i in range(kd)] + [("s", j) for j in range(kd)]
    streams = {"s": n}
    streams.update({k: n for k in range(kd)})
    return SchemePlan(
        w_s=factors.w_s,
        w_kt=factors.w_kt,
        v_kr=factors.v_kr,
        v_c=factors.v_c,
        ris=design_,
        streams=streams,
        slots=1,
        nulled=nulled,
        desired=[(k, k) for k in range(kd)] + [("s", "c")],
    ), null_plan


def null_space_residual(channels, null_plan):
    """Worst ``||H_{s,k} W_sc|| / ||H_{s,k}||`` over D2D receivers."""
    return max(
        float(np.linalg.norm(h @ null_plan.w_sc) / np.linalg.norm(h)) for h in channels.h_skr
    )


def transmit(channels, plan, x):
    kd = channels.kd
    y = {}
    for rx in list(range(kd)) + ["c"]:
        acc = channels.sat(rx) @ plan.w_s @ x["s"]
        for i in range(kd):
            acc = acc + channels.effective(i, rx, plan.theta) @ plan.w_kt[i] @ x[i]
        y[rx] = acc
    return y


def decode(channels, plan, y):
    out = {}
    for j in range(channels.kd):
        eff = ris.effective_block(channels, plan.theta, plan, j, j)
        out[j] = np.linalg.solve(eff, plan.v_kr[j] @ y[j])
    eff_c = ris.effective_block(channels, plan.theta, plan, "s", "c")
    out["s"] = np.linalg.solve(eff_c, plan.v_c @ y["c"])
    return out


def run(channels, payloads=None, rng=None):
    """Design, transmit and decode one slot. Returns ``(outcome, plan)``."""
    rng = np.random.default_rng(0) if rng is None else rng
    plan, null_plan = design(channels)
    n = channels.n
    x = {"s": payload_or_random(payloads, "s", n, rng)}
    for k in range(channels.kd):
        x[k] = payload_or_random(payloads, k, n, rng)
    xr = decode(channels, plan, transmit(channels, plan, x))
    report = ris.verify(channels, plan.theta, plan)
    outcome = SchemeOutcome(
        sent=x,
        recovered=xr,
        recovery_err=relative_error(x, xr),
        interference_residual=report.max_interference,
        dof_counted=count_dof(plan.streams, plan.slots),
        details={
            "ris_max_residual": plan.ris.max_residual,
            "null_space_residual": null_space_residual(channels, null_plan),
            "min_desired_sv": report.min_desired_sv,
        },
    )
    return outcome, plan


@dataclass
class DeficientPlan:
    ms: int
    kd: int
    n: int
    streams_per_receiver: int
    silenced: int
    dof: int
    null_width: int = -1

    @property
    def null_space_supports_streams(self):
        return self.null_width >= self.streams_per_receiver


def deficient_plan(ms, kd, n, channels=None):
    """
    Antenna-deficient operating point for ``psi < ms < (kd+1) n``.

    Each D2D receiver keeps ``ceil(ms / (kd+1))`` antennas and silences the
    rest (the first ones). With ``channels`` given, the null-space width of
    the satellite-to-D2D stack restricted to the kept antennas is measured.
    """
    psi = (kd + 1) * (n // 2)
    if not psi < ms < (kd + 1) * n:
        raise InfeasibleScheme(
            "out-of-regime", f"ms={ms} not in the deficient regime ({psi}, {(kd + 1) * n})"
        )
    s = math.ceil(ms / (kd + 1))
    plan = DeficientPlan(ms, kd, n, s, n - s, s * (kd + 1))
    if channels is not None:
        if channels.ms != ms or channels.kd != kd or channels.n != n:
            raise ValueError("channel dimensions do not match (ms, kd, n)")
        stack = np.vstack([h[n - s:, :] for h in channels.h_skr])
        plan.null_width = ms - linalg.rank_tol(stack)
    return plan
