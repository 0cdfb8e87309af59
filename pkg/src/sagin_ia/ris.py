"""
Active-RIS reflection design by minimum-norm least squares.

Every requirement on the RIS has the form ``target + G @ diag(alpha) @ F = 0``
for one N x N block. Vectorizing gives

    vec(G diag(alpha) F) = (F^T kron G) @ beta @ alpha

so all blocks stack into one linear system in ``alpha``. The product
``(F^T kron G) @ beta`` is formed column by column as ``vec(g_p f_p^T)``
(``g_p`` the p-th column of G, ``f_p`` the p-th row of F), which never
materializes the L^2-wide Kronecker factor.
"""

import json
from dataclasses import dataclass, field
from typing import Any, Dict, List, Tuple

import numpy as np

from . import linalg


@dataclass(frozen=True)
class NullConstraint:
    """One block requirement ``target + g_bar @ Theta @ f_bar = 0``."""

    target: np.ndarray   # n x n
    g_bar: np.ndarray    # n x l
    f_bar: np.ndarray    # l x n
    label: Tuple[Any, ...] = ()


@dataclass
class RisDesign:
    alpha: np.ndarray
    residuals: List[float]
    labels: List[Tuple[Any, ...]] = field(default_factory=list)

    @property
    def theta(self):
        return np.diag(self.alpha)

    @property
    def max_residual(self):
        return max(self.residuals, default=0.0)

    def to_dict(self):
        return {
            "l": int(self.alpha.size),
            "max_abs_alpha": float(np.max(np.abs(self.alpha), initial=0.0)),
            "max_residual": self.max_residual,
            "residuals": [
                {"label": [str(x) for x in lab], "residual": r}
                for lab, r in zip(self.labels, self.residuals)
            ],
        }


def _block_rows(g_bar, f_bar):
    # column p: vec(g_p f_p^T) in column-major order
    n_rx, l = g_bar.shape
    n_tx = f_bar.shape[1]
    cols = np.einsum("ip,pj->jip", g_bar, f_bar)  # (n_tx, n_rx, l)
    return cols.reshape(n_tx * n_rx, l)


def assemble(constraints):
    """
    Stack all constraints into ``(system, rhs)`` with ``system @ alpha = rhs``.

    Each constraint contributes ``N^2`` rows ``(F^T kron G) beta`` and right-hand
    side ``-vec(target)``.
    """
    if not constraints:
        raise ValueError("at least one constraint is required")
    l = constraints[0].g_bar.shape[1]
    rows, rhs = [], []
    for c in constraints:
        if c.g_bar.shape[1] != l or c.f_bar.shape[0] != l:
            raise ValueError(f"inconsistent RIS size in constraint {c.label}")
        if c.target.shape != (c.g_bar.shape[0], c.f_bar.shape[1]):
            raise ValueError(f"target shape mismatch in constraint {c.label}")
        rows.append(_block_rows(c.g_bar, c.f_bar))
        rhs.append(-linalg.vec(c.target))
    return np.vstack(rows), np.concatenate(rhs)


def residuals(constraints, alpha):
    """Frobenius norm of ``target + G diag(alpha) F`` for each constraint."""
    out = []
    for c in constraints:
        block = c.target + (c.g_bar * alpha[None, :]) @ c.f_bar
        out.append(float(np.linalg.norm(block)))
    return out


def solve(constraints, rcond=linalg.DEFAULT_RANK_TOL):
    """Minimum-norm least-squares reflection vector for ``constraints``.

    Infeasible (over-determined) systems are not an error: the least-squares
    ``alpha`` is returned and the residuals say how far off it is.
    """
    system, rhs = assemble(constraints)
    if not np.any(rhs):
        alpha = np.zeros(system.shape[1], dtype=np.complex128)
    else:
        alpha = linalg.pinv(system, rcond=rcond) @ rhs
    return RisDesign(alpha, residuals(constraints, alpha), [c.label for c in constraints])


@dataclass
class ResidualReport:
    """Norms of the effective blocks ``V_j (H_ij + H_rj Theta H_ir) W_i``."""

    interference: Dict[Tuple[Any, Any], float]
    desired_min_sv: Dict[Tuple[Any, Any], float]

    @property
    def max_interference(self):
        return max(self.interference.values(), default=0.0)

    @property
    def min_desired_sv(self):
        return min(self.desired_min_sv.values(), default=float("inf"))

    def to_dict(self):
        return {
            "max_interference": self.max_interference,
            "min_desired_sv": self.min_desired_sv,
            "interference": {f"{i}->{j}": v for (i, j), v in self.interference.items()},
            "desired_min_sv": {f"{i}->{j}": v for (i, j), v in self.desired_min_sv.items()},
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def effective_block(channels, theta, plan, tx, rx):
    """Decoder-channel-precoder product seen by sink ``rx`` from source ``tx``.

    ``tx`` is ``"s"`` for the satellite or a D2D index, ``rx`` is ``"c"`` for
    the satellite user or a D2D index. The satellite has no RIS path.
    """
    v = plan.v_c if rx == "c" else plan.v_kr[rx]
    if tx == "s":
        return v @ channels.sat(rx) @ plan.w_s
    return v @ channels.effective(tx, rx, theta) @ plan.w_kt[tx]


def verify(channels, theta, plan):
    """Recompute every block the plan claims to null or to deliver."""
    interference = {}
    for tx, rx in plan.nulled:
        interference[(tx, rx)] = float(
            np.linalg.norm(effective_block(channels, theta, plan, tx, rx))
        )
    desired = {}
    for tx, rx in plan.desired:
        s = np.linalg.svd(effective_block(channels, theta, plan, tx, rx), compute_uv=False)
        desired[(tx, rx)] = float(s[-1]) if s.size else 0.0
    return ResidualReport(interference, desired)
