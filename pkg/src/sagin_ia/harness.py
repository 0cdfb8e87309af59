"""Monte-Carlo trials, rate-slope DoF estimation and figure data."""

import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Dict, List

import numpy as np

from . import dof
from .channel import FadingParams, generate_slot
from .config import CsiType
from .schemes import dcsi, icsi, nocsi
from .schemes.common import InfeasibleScheme

log = logging.getLogger(__name__)

SCHEMES = ("nocsi", "icsi", "dcsi")

# Weakest satellite CSI each scheme can run with.
_LAWFUL = {
    "nocsi": {CsiType.NONE, CsiType.DELAYED, CsiType.MODERATELY_DELAYED, CsiType.INSTANTANEOUS},
    "icsi": {CsiType.MODERATELY_DELAYED, CsiType.INSTANTANEOUS},
    "dcsi": {CsiType.DELAYED, CsiType.MODERATELY_DELAYED, CsiType.INSTANTANEOUS},
}


def check_lawful(scheme, csi):
    if scheme not in SCHEMES:
        raise InfeasibleScheme("unknown-scheme", f"unknown scheme {scheme!r}")
    if csi is not None and csi not in _LAWFUL[scheme]:
        raise InfeasibleScheme(
            "csi-mismatch", f"scheme {scheme} needs more satellite CSI than {csi.value!r}"
        )


def sink_blocks(channels, plan):
    """
    Per sink ``(desired, [interference...])`` received-signal blocks, i.e.
    channel times precoder before any receive filter.
    """
    theta = plan.theta
    kd = channels.kd

    def block(tx, rx):
        if tx == "s":
            return channels.sat(rx) @ plan.w_s
        return channels.effective(tx, rx, theta) @ plan.w_kt[tx]

    sources = ["s"] + list(range(kd))
    out = {}
    for rx, want in [("c", "s")] + [(j, j) for j in range(kd)]:
        out[rx] = (block(want, rx), [block(tx, rx) for tx in sources if tx != want])
    return out


def _logdet2(m):
    sign, value = np.linalg.slogdet(m)
    return value / np.log(2.0)


def sink_rate(desired, interference, snr, sigma2=1.0):
    """log2 det(I + P Hd Hd^H (sigma2 I + sum P Hi Hi^H)^{-1}) with P = snr * sigma2."""
    if sigma2 <= 0:
        raise ValueError("sigma2 must be > 0")
    p = snr * sigma2
    n = desired.shape[0]
    cov_i = sigma2 * np.eye(n, dtype=np.complex128)
    for h in interference:
        cov_i = cov_i + p * (h @ h.conj().T)
    cov = cov_i + p * (desired @ desired.conj().T)
    return max(_logdet2(cov) - _logdet2(cov_i), 0.0)


def sum_rate(blocks, snr_db, sigma2=1.0):
    snr = 10.0 ** (snr_db / 10.0)
    return sum(sink_rate(d, i, snr, sigma2) for d, i in blocks.values())


def empirical_dof(blocks, snr_pair_db=(40.0, 60.0), sigma2=1.0, per_sink=False):
    """High-SNR slope of the sum rate between two SNR points (both >= 30 dB)."""
    lo, hi = snr_pair_db
    if min(lo, hi) < 30 or hi <= lo:
        raise ValueError("need two increasing SNR points, both >= 30 dB")
    denom = np.log2(10.0 ** (hi / 10.0) / 10.0 ** (lo / 10.0))
    slopes = {}
    for rx, (d, i) in blocks.items():
        r_lo = sink_rate(d, i, 10.0 ** (lo / 10.0), sigma2)
        r_hi = sink_rate(d, i, 10.0 ** (hi / 10.0), sigma2)
        slopes[rx] = (r_hi - r_lo) / denom
    return slopes if per_sink else float(sum(slopes.values()))


@dataclass
class TrialReport:
    config: Dict[str, Any]
    scheme: str
    trials: List[Dict[str, Any]] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def aggregate(self):
        rows = sorted(self.trials, key=lambda r: r["trial"])
        if not rows:
            return {}
        agg = {}
        for key in ("interference_residual", "ris_max_residual", "recovery_err"):
            vals = [r[key] for r in rows]
            agg[f"max_{key}"] = max(vals)
            agg[f"mean_{key}"] = float(np.mean(vals))
        agg["dof_counted"] = sorted({r["dof_counted"] for r in rows})
        if any("empirical_dof" in r for r in rows):
            agg["mean_empirical_dof"] = float(np.mean([r["empirical_dof"] for r in rows]))
        return agg

    def to_dict(self, include_timing=False):
        doc = {
            "config": self.config,
            "scheme": self.scheme,
            "trials": sorted(self.trials, key=lambda r: r["trial"]),
            "aggregate": self.aggregate,
        }
        if include_timing:
            doc["wall_time"] = self.wall_time
        return doc

    def to_json(self, include_timing=False):
        return json.dumps(self.to_dict(include_timing), sort_keys=True, indent=2)


def trial_rng(seed, index):
    """Independent stream for trial ``index`` derived from the master seed."""
    return np.random.default_rng(np.random.SeedSequence([seed, index]))


def run_trial(cfg, scheme, index, fading=None):
    fading = fading or FadingParams()
    rng = trial_rng(cfg.seed, index)
    row = {"trial": index}
    if scheme == "dcsi":
        outcome, _ = dcsi.run(cfg, rng=rng, fading=fading)
        row["merging_residual"] = outcome.details["merging_residual"]
    else:
        channels = generate_slot(cfg, fading, rng)
        module = nocsi if scheme == "nocsi" else icsi
        outcome, plan = module.run(channels, rng=rng)
        blocks = sink_blocks(channels, plan)
        row["sum_rate"] = {str(s): sum_rate(blocks, s) for s in cfg.snr_grid_db}
        row["empirical_dof"] = empirical_dof(blocks)
    row["interference_residual"] = outcome.interference_residual
    row["ris_max_residual"] = outcome.details["ris_max_residual"]
    row["recovery_err"] = outcome.recovery_err
    row["dof_counted"] = str(outcome.dof_counted)
    return row


def run_experiment(cfg, scheme, trials, fading=None, csi=None, workers=1):
    """Run ``trials`` independent trials; output does not depend on ``workers``."""
    check_lawful(scheme, csi)
    start = time.perf_counter()
    report = TrialReport(cfg.to_dict(), scheme)
    if trials > 0:
        if workers > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                rows = list(pool.map(lambda i: run_trial(cfg, scheme, i, fading), range(trials)))
        else:
            rows = [run_trial(cfg, scheme, i, fading) for i in range(trials)]
        report.trials = rows
    report.wall_time = time.perf_counter() - start
    log.info("%s: %d trials in %.2fs", scheme, trials, report.wall_time)
    return report


FIGURES = ("fig3", "fig4", "fig5")


def figure_points(which):
    """Analytic DoF rows for the three figure sets (proposed schemes only)."""
    tied = lambda kd, n: (kd + 1) * n  # noqa: E731
    if which == "fig3":
        return dof.sweep("n", range(2, 9), kd=6, ms=tied)
    if which == "fig4":
        return [p for n in (2, 3) for p in dof.sweep("kd", range(2, 11), n=n, ms=tied)]
    if which == "fig5":
        return dof.sweep("ms", range(3, 100), kd=6, n=3)
    raise ValueError(f"unknown figure {which!r}")


def figure_data(which):
    return dof.to_csv(figure_points(which))
