"""System parameters, validation and CSI latency classification."""

import enum
import json
from dataclasses import asdict, dataclass, field, fields
from typing import List, Optional


@dataclass(frozen=True)
class SystemConfig:
    """Network dimensions and link budget.

    ``n`` is the common antenna count of the satellite user, every D2D
    transmitter and every D2D receiver.
    """

    kd: int
    n: int
    ms: int
    l: int
    p_s: float = 1.0
    p_k: float = 1.0
    sigma2: float = 1.0
    seed: int = 0
    snr_grid_db: List[float] = field(default_factory=list)

    @classmethod
    def from_dict(cls, doc):
        known = {f.name for f in fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        missing = {"kd", "n", "ms", "l"} - set(doc)
        if missing:
            raise ValueError(f"missing config keys: {sorted(missing)}")
        doc = dict(doc)
        if "snr_grid_db" in doc:
            doc["snr_grid_db"] = [float(x) for x in doc["snr_grid_db"]]
        return cls(**doc)

    @classmethod
    def load(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self):
        return asdict(self)


@dataclass
class ValidationReport:
    errors: List[str] = field(default_factory=list)
    warnings: List[str] = field(default_factory=list)

    @property
    def ok(self):
        return not self.errors


def validate(cfg):
    """Collect invariant violations (errors) and soft warnings for ``cfg``."""
    report = ValidationReport()
    for name in ("kd", "n", "ms", "l"):
        value = getattr(cfg, name)
        if not isinstance(value, int) or isinstance(value, bool) or value < 1:
            report.errors.append(f"{name} must be an integer >= 1 (got {value!r})")
    for name in ("p_s", "p_k"):
        if not getattr(cfg, name) > 0:
            report.errors.append(f"{name} must be > 0")
    if not cfg.sigma2 >= 0:
        report.errors.append("sigma2 must be >= 0")
    if not isinstance(cfg.seed, int) or not 0 <= cfg.seed < 2**64:
        report.errors.append("seed must be a 64-bit unsigned integer")
    grid = list(cfg.snr_grid_db)
    if any(b <= a for a, b in zip(grid, grid[1:])):
        report.errors.append("snr_grid_db must be strictly increasing")
    if not report.errors:
        need = cfg.kd**2 * cfg.n**2
        if cfg.l < need:
            report.warnings.append(
                f"RIS under-provisioned: l={cfg.l} < kd^2*n^2={need}; "
                "interference nulling will leave a residual"
            )
    return report


@dataclass(frozen=True)
class CsiLatency:
    """Timing of one CSI acquisition, all in seconds."""

    t_p: float
    t_f: float
    t_c: float
    t_acq: float


class CsiType(enum.Enum):
    INSTANTANEOUS = "inst"
    MODERATELY_DELAYED = "moderate"
    DELAYED = "delayed"
    NONE = "none"


def classify_csi(lat):
    """Classify CSI timeliness from the ratio ``t_f / (t_c - t_p)``.

    For ``0 < ratio < 1`` the acquisition instant decides: up to and
    including ``t_p + t_f`` the CSI behaves as instantaneous, after that
    it is moderately delayed.
    """
    if lat.t_c <= lat.t_p:
        raise ValueError("coherence time must exceed past time (t_c > t_p)")
    if lat.t_p < 0 or lat.t_f < 0:
        raise ValueError("t_p and t_f must be nonnegative")
    if not lat.t_p <= lat.t_acq <= lat.t_c:
        raise ValueError("t_acq must lie in [t_p, t_c]")
    if lat.t_f == 0:
        return CsiType.INSTANTANEOUS
    if lat.t_f >= lat.t_c - lat.t_p:
        return CsiType.DELAYED
    if lat.t_acq <= lat.t_p + lat.t_f:
        return CsiType.INSTANTANEOUS
    return CsiType.MODERATELY_DELAYED


def parse_csi(name: Optional[str]):
    aliases = {
        "none": CsiType.NONE,
        "inst": CsiType.INSTANTANEOUS,
        "instantaneous": CsiType.INSTANTANEOUS,
        "moderate": CsiType.MODERATELY_DELAYED,
        "delayed": CsiType.DELAYED,
    }
    try:
        return aliases[str(name).lower()]
    except KeyError:
        raise ValueError(f"unknown CSI type {name!r}") from None
