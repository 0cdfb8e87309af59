"""
Random channel generation for the satellite / UAV-RIS / D2D network.

Satellite links follow a Shadowed-Rician law, every terrestrial and RIS
link follows a Nakagami-m law. Channels are block-fading: constant within
a slot and independent across slots.

Indexing convention: D2D transmitters and receivers are numbered from 0 in
code. ``h_ktkr[i][j]`` is the link from transmitter ``i`` to receiver ``j``.
"""

import json
from dataclasses import dataclass
from typing import List

import numpy as np


@dataclass(frozen=True)
class FadingParams:
    """Fading-law parameters.

    The Shadowed-Rician defaults (b, m, Omega) = (0.126, 10.1, 0.835) are the
    usual "average shadowing" land-mobile-satellite values. Nothing in the
    scheme constructions depends on them; any generic draw works.

    ``model="gaussian"`` replaces every link with unit-variance circular
    complex Gaussian entries.
    """

    sr_b: float = 0.126
    sr_m: float = 10.1
    sr_omega: float = 0.835
    nak_m: float = 2.0
    nak_omega: float = 1.0
    model: str = "default"

    def __post_init__(self):
        if not self.sr_b > 0:
            raise ValueError("sr_b must be > 0")
        if not self.sr_m > 0:
            raise ValueError("sr_m must be > 0")
        if not self.sr_omega >= 0:
            raise ValueError("sr_omega must be >= 0")
        if not self.nak_m >= 0.5:
            raise ValueError("nak_m must be >= 0.5")
        if not self.nak_omega > 0:
            raise ValueError("nak_omega must be > 0")
        if self.model not in ("default", "gaussian"):
            raise ValueError(f"unknown fading model {self.model!r}")


GAUSSIAN = FadingParams(model="gaussian")


def _cn(rng, shape, var):
    """Circular complex Gaussian with total variance ``var``."""
    scale = np.sqrt(var / 2.0)
    return scale * (rng.standard_normal(shape) + 1j * rng.standard_normal(shape))


def _nakagami_amplitude(rng, shape, m, omega):
    return np.sqrt(rng.gamma(shape=m, scale=omega / m, size=shape))


def sample_shadowed_rician(rows, cols, params, rng):
    """
    Shadowed-Rician matrix: scattered CN(0, 2b) part plus a LOS part whose
    amplitude is Nakagami(m, Omega) and whose phase is uniform.

    E|h|^2 = 2b + Omega.
    """
    shape = (rows, cols)
    if params.model == "gaussian":
        return _cn(rng, shape, 1.0)
    scatter = _cn(rng, shape, 2.0 * params.sr_b)
    if params.sr_omega == 0:
        return scatter
    zeta = _nakagami_amplitude(rng, shape, params.sr_m, params.sr_omega)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=shape)
    return scatter + zeta * np.exp(1j * phase)


def sample_nakagami(rows, cols, params, rng):
    """Nakagami-m amplitude with uniform phase; E|h|^2 = Omega."""
    shape = (rows, cols)
    if params.model == "gaussian":
        return _cn(rng, shape, 1.0)
    amp = _nakagami_amplitude(rng, shape, params.nak_m, params.nak_omega)
    phase = rng.uniform(0.0, 2.0 * np.pi, size=shape)
    return amp * np.exp(1j * phase)


@dataclass(frozen=True)
class ChannelRealization:
    """All channel matrices of one slot."""

    h_sc: np.ndarray            # n x ms
    h_skr: List[np.ndarray]     # kd of n x ms
    h_ktkr: List[List[np.ndarray]]  # kd x kd of n x n, [tx][rx]
    h_ktc: List[np.ndarray]     # kd of n x n
    h_rc: np.ndarray            # n x l
    h_rkr: List[np.ndarray]     # kd of n x l
    h_ktr: List[np.ndarray]     # kd of l x n
    slot: int = 1

    @property
    def kd(self):
        return len(self.h_skr)

    @property
    def n(self):
        return self.h_sc.shape[0]

    @property
    def ms(self):
        return self.h_sc.shape[1]

    @property
    def l(self):
        return self.h_rc.shape[1]

    def direct(self, tx, rx):
        """Direct D2D/satellite-user link from transmitter ``tx``."""
        return self.h_ktc[tx] if rx == "c" else self.h_ktkr[tx][rx]

    def ris_rx(self, rx):
        return self.h_rc if rx == "c" else self.h_rkr[rx]

    def sat(self, rx):
        return self.h_sc if rx == "c" else self.h_skr[rx]

    def effective(self, tx, rx, theta):
        """Direct plus RIS-cascaded channel ``H + H_r Theta H_t``."""
        return self.direct(tx, rx) + self.ris_rx(rx) @ theta @ self.h_ktr[tx]

    def matrices(self):
        """Flat ``name -> matrix`` view, in a fixed order."""
        kd = self.kd
        out = {"h_sc": self.h_sc, "h_rc": self.h_rc}
        for k in range(kd):
            out[f"h_skr[{k}]"] = self.h_skr[k]
            out[f"h_ktc[{k}]"] = self.h_ktc[k]
            out[f"h_rkr[{k}]"] = self.h_rkr[k]
            out[f"h_ktr[{k}]"] = self.h_ktr[k]
            for j in range(kd):
                out[f"h_ktkr[{k}][{j}]"] = self.h_ktkr[k][j]
        return out

    def to_json(self):
        """Serialize as JSON: per matrix a dims header and row-major (re, im) pairs."""
        doc = {"slot": self.slot, "kd": self.kd, "matrices": {}}
        for name, m in self.matrices().items():
            flat = m.reshape(-1)
            doc["matrices"][name] = {
                "rows": m.shape[0],
                "cols": m.shape[1],
                "entries": [[float(z.real), float(z.imag)] for z in flat],
            }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        kd = doc["kd"]

        def get(name):
            rec = doc["matrices"][name]
            e = np.asarray(rec["entries"], dtype=float).reshape(-1, 2)
            return (e[:, 0] + 1j * e[:, 1]).reshape(rec["rows"], rec["cols"])

        return cls(
            h_sc=get("h_sc"),
            h_skr=[get(f"h_skr[{k}]") for k in range(kd)],
            h_ktkr=[[get(f"h_ktkr[{k}][{j}]") for j in range(kd)] for k in range(kd)],
            h_ktc=[get(f"h_ktc[{k}]") for k in range(kd)],
            h_rc=get("h_rc"),
            h_rkr=[get(f"h_rkr[{k}]") for k in range(kd)],
            h_ktr=[get(f"h_ktr[{k}]") for k in range(kd)],
            slot=doc["slot"],
        )


def generate_slot(cfg, fading, rng, slot=1):
    kd, n, ms, l = cfg.kd, cfg.n, cfg.ms, cfg.l
    sr = lambda r, c: sample_shadowed_rician(r, c, fading, rng)  # noqa: E731
    nk = lambda r, c: sample_nakagami(r, c, fading, rng)  # noqa: E731
    h_sc = sr(n, ms)
    h_skr = [sr(n, ms) for _ in range(kd)]
    h_ktkr = [[nk(n, n) for _ in range(kd)] for _ in range(kd)]
    h_ktc = [nk(n, n) for _ in range(kd)]
    h_rc = nk(n, l)
    h_rkr = [nk(n, l) for _ in range(kd)]
    h_ktr = [nk(l, n) for _ in range(kd)]
    return ChannelRealization(h_sc, h_skr, h_ktkr, h_ktc, h_rc, h_rkr, h_ktr, slot)


def generate_block(cfg, fading, rng, t_count):
    """Independent realizations for slots ``1..t_count``."""
    if t_count < 1:
        raise ValueError("t_count must be >= 1")
    return [generate_slot(cfg, fading, rng, slot=t) for t in range(1, t_count + 1)]
