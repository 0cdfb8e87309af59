"""
Closed-form sum-DoF of the three schemes, in exact rational arithmetic.

The delayed-CSI evaluator uses the ``(kd-1) n`` coefficient, i.e. each D2D
receiver collects ``(kd-1) n`` fresh streams over the session. That is the
value consistent with the slot-by-slot construction, which yields
``(kd^2+1) n / (kd+2)`` at ``ms = (kd+1) n``.
"""

import csv
import io
import math
from dataclasses import dataclass
from fractions import Fraction

from .config import CsiType

REGIMES = (
    "noCSI",
    "icsi-full",
    "icsi-deficient",
    "icsi-fallback",
    "dcsi-spacetime",
    "dcsi-fallback",
)


@dataclass(frozen=True)
class DofPoint:
    kd: int
    n: int
    ms: int
    csi: CsiType
    dof: Fraction
    regime: str

    @property
    def scheme(self):
        return {"noCSI": "nocsi", "icsi-full": "icsi", "icsi-deficient": "icsi",
                "dcsi-spacetime": "dcsi"}.get(self.regime, "nocsi")


def _check(*values):
    for v in values:
        if int(v) != v or v < 1:
            raise ValueError("kd, n and ms must be positive integers")


def psi(kd, n):
    """Largest ms at which instantaneous CSI is no better than none."""
    return (kd + 1) * (n // 2)


def dof_t1(kd, n):
    _check(kd, n)
    return Fraction((kd + 1) * n, 2)


def dof_t2(ms, kd, n, csi=CsiType.INSTANTANEOUS):
    _check(ms, kd, n)
    if ms <= psi(kd, n):
        return DofPoint(kd, n, ms, csi, dof_t1(kd, n), "icsi-fallback")
    if ms < (kd + 1) * n:
        dof = Fraction(math.ceil(Fraction(ms, kd + 1)) * (kd + 1))
        return DofPoint(kd, n, ms, csi, dof, "icsi-deficient")
    return DofPoint(kd, n, ms, csi, Fraction((kd + 1) * n), "icsi-full")


def dcsi_condition(ms, kd, n):
    """True when the space-time scheme beats the no-CSI fallback."""
    phi = Fraction(ms, n)
    c = math.ceil(phi)
    return 3 * kd - 1 <= 2 * phi + (kd - 3) * c


def dof_spacetime(ms, kd, n):
    """Space-time scheme DoF without the fallback test."""
    _check(ms, kd, n)
    c = math.ceil(Fraction(ms, n))
    return Fraction(ms + (c - 1) * (kd - 1) * n, c + 1)


def dof_t3(ms, kd, n):
    """
    Delayed-CSI DoF: the space-time value when it beats no CSI, otherwise the
    no-CSI value. At ``ms = (kd+1) n`` the space-time branch is active for
    ``kd >= 3`` only; at ``kd = 2`` it gives ``5n/4 < 3n/2``.
    """
    _check(ms, kd, n)
    if not dcsi_condition(ms, kd, n):
        return DofPoint(kd, n, ms, CsiType.DELAYED, dof_t1(kd, n), "dcsi-fallback")
    return DofPoint(kd, n, ms, CsiType.DELAYED, dof_spacetime(ms, kd, n), "dcsi-spacetime")


def select_scheme(csi, ms, kd, n):
    """Scheme id and DoF point for the satellite's CSI type."""
    if csi is CsiType.NONE:
        _check(ms, kd, n)
        return "nocsi", DofPoint(kd, n, ms, csi, dof_t1(kd, n), "noCSI")
    if csi in (CsiType.INSTANTANEOUS, CsiType.MODERATELY_DELAYED):
        point = dof_t2(ms, kd, n, csi)
    elif csi is CsiType.DELAYED:
        point = dof_t3(ms, kd, n)
    else:
        raise ValueError(f"unknown CSI type {csi!r}")
    return point.scheme, point


def ris_elements(scheme, kd, n):
    """RIS elements needed for exact nulling in every slot of ``scheme``."""
    if scheme == "dcsi":
        return (kd * kd + 1) * n * n
    return kd * kd * n * n


CSV_COLUMNS = ["scheme", "csi", "kd", "n", "ms", "l", "dof_num", "dof_den", "regime"]
_SWEEP_CSI = (CsiType.INSTANTANEOUS, CsiType.DELAYED, CsiType.NONE)


def sweep(axis, values, kd=None, n=None, ms=None):
    """
    DoF rows for all three CSI types along one axis.

    ``axis`` is ``"n"``, ``"kd"`` or ``"ms"``. ``ms`` may be a callable
    ``(kd, n) -> ms`` for sweeps that tie ms to the other dimensions.
    """
    if axis not in ("n", "kd", "ms"):
        raise ValueError(f"unknown sweep axis {axis!r}")
    values = list(values)
    if not values:
        raise ValueError("empty sweep axis")
    points = []
    for v in values:
        dims = {"kd": kd, "n": n, "ms": ms}
        dims[axis] = v
        if callable(dims["ms"]):
            dims["ms"] = dims["ms"](dims["kd"], dims["n"])
        for csi in _SWEEP_CSI:
            points.append(select_scheme(csi, dims["ms"], dims["kd"], dims["n"])[1])
    return points


def to_csv(points):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for p in points:
        w.writerow([p.scheme, p.csi.value, p.kd, p.n, p.ms, ris_elements(p.scheme, p.kd, p.n),
                    p.dof.numerator, p.dof.denominator, p.regime])
    return buf.getvalue()
