"""Plan / outcome containers shared by the three schemes."""

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Tuple

import numpy as np


class InfeasibleScheme(ValueError):
    """The scheme cannot run for this configuration or CSI type."""

    def __init__(self, code, message):
        super().__init__(message)
        self.code = code

    def to_dict(self):
        return {"error": self.code, "message": str(self)}


class DegenerateChannel(InfeasibleScheme):
    def __init__(self, message):
        super().__init__("degenerate-channel", message)


@dataclass
class SchemePlan:
    """
    Precoders, decoders and RIS setting for one slot.

    ``w_s`` and ``w_kt[i]`` hold one column per transmitted stream, ``v_kr``
    and ``v_c`` are the receive filters. ``nulled`` lists the (tx, rx) pairs
    whose effective block must vanish, ``desired`` the ones carrying data.
    """

    w_s: np.ndarray
    w_kt: List[np.ndarray]
    v_kr: List[np.ndarray]
    v_c: np.ndarray
    ris: Any
    streams: Dict[Any, int]
    slots: int = 1
    nulled: List[Tuple[Any, Any]] = field(default_factory=list)
    desired: List[Tuple[Any, Any]] = field(default_factory=list)

    @property
    def theta(self):
        return self.ris.theta


@dataclass
class SchemeOutcome:
    sent: Dict[Any, np.ndarray]
    recovered: Dict[Any, np.ndarray]
    recovery_err: float
    interference_residual: float
    dof_counted: Fraction
    details: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self):
        return {
            "recovery_err": self.recovery_err,
            "interference_residual": self.interference_residual,
            "dof_counted": str(self.dof_counted),
            "details": self.details,
        }


def relative_error(sent, recovered):
    """Worst per-sink relative error; absolute when the payload is zero."""
    worst = 0.0
    for key, x in sent.items():
        err = np.linalg.norm(recovered[key] - x)
        ref = np.linalg.norm(x)
        worst = max(worst, err / ref if ref > 0 else err)
    return float(worst)


def random_symbols(rng, size):
    """Unit-power complex Gaussian payload."""
    return (rng.standard_normal(size) + 1j * rng.standard_normal(size)) / np.sqrt(2)


def require_invertible(m, what, tol=1e-10):
    s = np.linalg.svd(m, compute_uv=False)
    if s[-1] <= tol * s[0]:
        raise DegenerateChannel(f"degenerate channel: {what} is singular")


def count_dof(streams, slots) -> Fraction:
    return Fraction(sum(streams.values()), slots)


def payload_or_random(payloads: Optional[dict], key, size, rng):
    if payloads is not None and key in payloads:
        x = np.asarray(payloads[key], dtype=np.complex128)
        if x.shape != (size,):
            raise ValueError(f"payload {key!r} must have length {size}")
        return x
    return random_symbols(rng, size)
