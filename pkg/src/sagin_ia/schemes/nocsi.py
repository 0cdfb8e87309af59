"""
Interference management without CSI at the satellite.

The satellite sends on its first ``n`` antennas with identity precoding. Each
D2D transmitter ``i`` aligns its signal with the satellite's at one
non-intended receiver (transmitter ``i`` at receiver ``i-1``, transmitter 0
at the last receiver), so the satellite and that transmitter occupy a single
``n/2``-dimensional subspace there. The RIS removes everything else:

(a) cross-D2D blocks from transmitters that are neither desired nor aligned,
(b) the RIS path of the aligned transmitter (its direct path is the aligned
    one and must stay that way),
(c) every D2D block at the satellite user.

All sources send ``n/2`` streams in one slot.
"""

from dataclasses import dataclass
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


def aligned_receiver(tx, kd):
    """Receiver at which transmitter ``tx`` aligns with the satellite."""
    return (tx - 1) % kd


def aligned_transmitter(rx, kd):
    """Transmitter aligned with the satellite at receiver ``rx``."""
    return (rx + 1) % kd


def _check(channels):
    kd, n, ms = channels.kd, channels.n, channels.ms
    if kd < 2:
        raise InfeasibleScheme("kd-too-small", "no-CSI alignment needs kd >= 2")
    if ms < n:
        raise InfeasibleScheme("ms-too-small", f"no-CSI scheme needs ms >= n ({ms} < {n})")


def design_alignment(channels):
    """
    Satellite identity precoder on ``n`` active antennas and the aligning
    transmitter precoders ``W_i = H_{i,j(i)}^{-1} H_{s,j(i)} W_s``.

    Returns ``(w_s, w_kt)`` with ``w_s`` of shape (ms, n) and each ``w_kt[i]``
    of shape (n, n).
    """
    _check(channels)
    kd, n, ms = channels.kd, channels.n, channels.ms
    w_s = np.eye(ms, n, dtype=np.complex128)
    w_kt = []
    for i in range(kd):
        j = aligned_receiver(i, kd)
        h = channels.h_ktkr[i][j]
        require_invertible(h, f"H[{i}->{j}]")
        w_kt.append(np.linalg.solve(h, channels.h_skr[j] @ w_s))
    return w_s, w_kt


@dataclass
class SvdFactors:
    a: List[np.ndarray]
    lam: List[np.ndarray]
    b: List[np.ndarray]
    w_bar: List[np.ndarray]
    v_kr: List[np.ndarray]


def svd_normalize(channels, w_kt):
    """Diagonalize each desired link: ``H_kk W_k = A_k diag(lam_k) B_k^H``."""
    a, lam, b, w_bar, v = [], [], [], [], []
    for k, w in enumerate(w_kt):
        u, s, vv = linalg.svd(channels.h_ktkr[k][k] @ w)
        a.append(u)
        lam.append(s)
        b.append(vv)
        w_bar.append(w @ vv)
        v.append(u.conj().T)
    return SvdFactors(a, lam, b, w_bar, v)


def satuser_zf(channels):
    """Zero-forcing filter ``(H^H H)^{-1} H^H`` over the ``n`` active satellite antennas."""
    h = channels.h_sc[:, : channels.n]
    if linalg.rank_tol(h) < h.shape[1]:
        raise InfeasibleScheme("rank-deficient", "H_sc is rank deficient on the active antennas")
    hh = h.conj().T
    return np.linalg.solve(hh @ h, hh)


def build_constraints(channels, factors, v_c):
    kd = channels.kd
    out = []
    for j in range(kd):
        v = factors.v_kr[j]
        g = v @ channels.h_rkr[j]
        a = aligned_transmitter(j, kd)
        for i in range(kd):
            f = channels.h_ktr[i] @ factors.w_bar[i]
            if i == j:
                continue
            if i == a:
                out.append(ris.NullConstraint(np.zeros((channels.n, channels.n), complex), g, f, ("b", i, j)))
            else:
                target = v @ channels.h_ktkr[i][j] @ factors.w_bar[i]
                out.append(ris.NullConstraint(target, g, f, ("a", i, j)))
    g_c = v_c @ channels.h_rc
    for i in range(kd):
        target = v_c @ channels.h_ktc[i] @ factors.w_bar[i]
        f = channels.h_ktr[i] @ factors.w_bar[i]
        out.append(ris.NullConstraint(target, g_c, f, ("c", i, "c")))
    return out


def design(channels):
    """Full one-slot plan; ``plan.w_*`` carry only the ``n/2`` active streams."""
    _check(channels)
    kd, n = channels.kd, channels.n
    if n % 2:
        raise InfeasibleScheme("odd-n", "the one-slot no-CSI simulator needs even n")
    d = n // 2
    w_s, w_kt = design_alignment(channels)
    factors = svd_normalize(channels, w_kt)
    v_c = satuser_zf(channels)
    design_ = ris.solve(build_constraints(channels, factors, v_c))
    nulled = [(i, j) for j in range(kd) for i in range(kd)
              if i != j and i != aligned_transmitter(j, kd)]
    nulled += [(i, "c") for i in range(kd)]
    streams = {"s": d}
    streams.update({k: d for k in range(kd)})
    return SchemePlan(
        w_s=w_s[:, :d],
        w_kt=[w[:, :d] for w in w_kt],
        v_kr=factors.v_kr,
        v_c=v_c,
        ris=design_,
        streams=streams,
        slots=1,
        nulled=nulled,
        desired=[(k, k) for k in range(kd)] + [("s", "c")],
    )


def alignment_residuals(channels, plan):
    """
    Per receiver, relative mismatch between the aligned transmitter's
    post-RIS block and the satellite block (both before decoding).
    """
    out = []
    kd = channels.kd
    for j in range(kd):
        a = aligned_transmitter(j, kd)
        sat = channels.h_skr[j] @ plan.w_s
        tx = channels.effective(a, j, plan.theta) @ plan.w_kt[a]
        out.append(float(np.linalg.norm(tx - sat) / np.linalg.norm(sat)))
    return out


def precoder_alignment_residuals(channels, w_s, w_kt):
    """Relative ``||H_{s,j} W_s - H_{i,j} W_i||`` on direct links, per aligned pair."""
    out = []
    for i, w in enumerate(w_kt):
        j = aligned_receiver(i, channels.kd)
        sat = channels.h_skr[j] @ w_s
        out.append(float(np.linalg.norm(sat - channels.h_ktkr[i][j] @ w) / np.linalg.norm(sat)))
    return out


def aligned_subspace_dims(channels, plan, tol=1e-8):
    dims = []
    kd = channels.kd
    for j in range(kd):
        a = aligned_transmitter(j, kd)
        sat = channels.h_skr[j] @ plan.w_s
        tx = channels.effective(a, j, plan.theta) @ plan.w_kt[a]
        dims.append(linalg.rank_tol(np.hstack([sat, tx]), tol))
    return dims


def transmit(channels, plan, x):
    """Noiseless received vectors (before decoding) for payload dict ``x``."""
    kd = channels.kd
    theta = plan.theta
    y = {}
    for rx in list(range(kd)) + ["c"]:
        acc = channels.sat(rx) @ plan.w_s @ x["s"]
        for i in range(kd):
            acc = acc + channels.effective(i, rx, theta) @ plan.w_kt[i] @ x[i]
        y[rx] = acc
    return y


def decode(channels, plan, y):
    kd = channels.kd
    d = plan.w_s.shape[1]
    out = {}
    for j in range(kd):
        desired = channels.effective(j, j, plan.theta) @ plan.w_kt[j]
        aligned = channels.h_skr[j] @ plan.w_s
        proj = np.eye(channels.n) - aligned @ linalg.pinv(aligned)
        out[j] = linalg.pinv(proj @ desired) @ (proj @ y[j])
    out["s"] = (plan.v_c @ y["c"])[:d]
    return out


def run(channels, payloads=None, rng=None):
    """
    Design, transmit and decode one slot. Returns ``(outcome, plan)``.

    ``payloads`` maps ``"s"`` and each D2D index to an ``n/2``-vector; any
    missing entry is drawn from ``rng``.
    """
    rng = np.random.default_rng(0) if rng is None else rng
    plan = design(channels)
    d = plan.w_s.shape[1]
    x = {"s": payload_or_random(payloads, "s", d, rng)}
    for k in range(channels.kd):
        x[k] = payload_or_random(payloads, k, d, rng)
    y = transmit(channels, plan, x)
    xr = decode(channels, plan, y)
    report = ris.verify(channels, plan.theta, plan)
    align = alignment_residuals(channels, plan)
    outcome = SchemeOutcome(
        sent=x,
        recovered=xr,
        recovery_err=relative_error(x, xr),
        interference_residual=report.max_interference,
        dof_counted=count_dof(plan.streams, plan.slots),
        details={
            "ris_max_residual": plan.ris.max_residual,
            "max_alignment_residual": max(align),
            "aligned_dims": aligned_subspace_dims(channels, plan),
            "min_desired_sv": report.min_desired_sv,
        },
    )
    return outcome, plan
