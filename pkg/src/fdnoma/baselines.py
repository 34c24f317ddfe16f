"""Half-duplex NOMA and full-duplex OMA comparison systems.

Both baselines reuse the same channel statistics and run Monte Carlo
only:

* half-duplex NOMA removes the loop-interference term from every stage
  ratio and applies its own threshold set.  By default the thresholds
  equal the full-duplex ones (the comparison convention that keeps every
  stage feasible); the rate-matched alternative, where one half-duplex
  channel use must carry what two full-duplex uses carry, is available
  through :func:`hd_thresholds_rate_matched`.  No prelog factor is
  applied: with thresholds fixed, the outage comparison is
  threshold-to-threshold.
* full-duplex OMA serves each user alone (full power, no interference,
  no SIC) against a single threshold, by default the rate-sum
  equivalent ``prod(1 + thr_l) - 1``.  Each user keeps its own,
  unordered channel: orthogonal access has no ordering-based power
  allocation, so the multiuser-diversity boost of the ordered gains
  belongs to the NOMA side only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import draw_batch, seeded_stream
from .config import ConfigError, SystemConfig, derive_constants
from .montecarlo import OutageEstimate, _run_blocks
from .sidnr import outage_mask

__all__ = [
    "BaselineConfig",
    "hd_thresholds_rate_matched",
    "fd_thresholds_rate_matched",
    "oma_threshold_rate_sum",
    "hd_outage",
    "hd_outage_all",
    "oma_outage",
    "oma_outage_all",
]


def hd_thresholds_rate_matched(fd_thresholds) -> tuple[float, ...]:
    """Thresholds a half-duplex link needs to match full-duplex rates:
    (1 + thr)**2 - 1 per user (two channel uses per symbol)."""
    return tuple((1.0 + t) ** 2 - 1.0 for t in fd_thresholds)


def fd_thresholds_rate_matched(hd_thresholds) -> tuple[float, ...]:
    """Full-duplex thresholds carrying the same rates as a half-duplex
    system with the given thresholds: sqrt(1 + thr) - 1 per user.

    Anchoring the half-duplex side keeps every decode stage feasible when
    the half-duplex thresholds are the standard ones; the full-duplex
    system then runs at the rate-equivalent lower targets.
    """
    return tuple(math.sqrt(1.0 + t) - 1.0 for t in hd_thresholds)


def oma_threshold_rate_sum(fd_thresholds) -> float:
    """Single OMA threshold carrying the summed NOMA rates:
    prod(1 + thr_l) - 1."""
    return math.prod(1.0 + t for t in fd_thresholds) - 1.0


@dataclass(frozen=True)
class BaselineConfig:
    """A comparison system derived from a full-duplex NOMA configuration.

    ``hd_thresholds`` defaults to the base thresholds; ``oma_threshold``
    defaults to the rate-sum equivalent.
    """

    base: SystemConfig
    mode: str  # "hd_noma" or "fd_oma"
    hd_thresholds: tuple[float, ...] | None = None
    oma_threshold: float | None = None

    def __post_init__(self):
        if self.mode not in ("hd_noma", "fd_oma"):
            raise ConfigError(f"unknown baseline mode {self.mode!r}")
        if self.mode == "hd_noma":
            thr = self.hd_thresholds
            thr = self.base.thresholds if thr is None else tuple(float(t) for t in thr)
            if len(thr) != self.base.num_users or any(t <= 0 for t in thr):
                raise ConfigError("hd_thresholds needs one positive entry per user")
            object.__setattr__(self, "hd_thresholds", thr)
        else:
            t = self.oma_threshold
            t = oma_threshold_rate_sum(self.base.thresholds) if t is None else float(t)
            if t <= 0:
                raise ConfigError("oma_threshold must be positive")
            object.__setattr__(self, "oma_threshold", t)


def _oma_outage_mask(gain_sr, gains_ru, gain_li, dc, user, threshold):
    """Outage of user ``user`` served alone at full power (no IUI, no SIC
    residue), with the loop-interference term kept."""
    g = dc.snr_lin
    t2 = dc.noise_ru[user - 1]
    g2 = gains_ru[:, user - 1]
    num = gain_sr * g2 * g * g
    den = (
        gain_sr * g2 * g * g * dc.rhi_mix
        + gain_sr * g * t2 * dc.rhi_amp
        + (g2 * g + t2) * (gain_li * g * dc.sr_derate + dc.noise_sr) * dc.rhi_amp
    )
    return num <= threshold * den


def _baseline_estimates(bcfg, users, trials, seed, partitions):
    if trials < 1:
        raise ValueError("trials must be >= 1")
    cfg = bcfg.base
    dc = derive_constants(cfg)
    if users is None:
        users = tuple(range(1, cfg.num_users + 1))
    users = tuple(int(u) for u in users)
    for u in users:
        if not 1 <= u <= cfg.num_users:
            raise ValueError(f"user {u} outside 1..{cfg.num_users}")
    hd = bcfg.mode == "hd_noma"
    method = "hd" if hd else "oma"

    def kernel(block):
        index, size = block
        rng = seeded_stream(seed, index)
        g1, g2, g3 = draw_batch(dc, rng, size, include_li=not hd, sort=hd)
        if hd:
            masks = [
                outage_mask(g1, g2, 0.0, dc, u, thresholds=bcfg.hd_thresholds)
                for u in users
            ]
        else:
            masks = [
                _oma_outage_mask(g1, g2, g3, dc, u, bcfg.oma_threshold)
                for u in users
            ]
        return np.array([int(m.sum()) for m in masks], dtype=np.int64)

    counts = _run_blocks(kernel, trials, partitions, len(users))
    return [
        OutageEstimate(
            op_value=float(k / trials),
            trials=trials,
            std_error=float(np.sqrt((k / trials) * (1.0 - k / trials) / trials)),
            method=method,
            user=u,
            seed=seed,
            partitions=partitions,
        )
        for u, k in zip(users, counts)
    ]


def hd_outage_all(bcfg: BaselineConfig, trials, seed=0, partitions=1, users=None):
    """Half-duplex NOMA outage for several users from shared draws."""
    if bcfg.mode != "hd_noma":
        raise ConfigError("hd_outage requires a hd_noma baseline config")
    return _baseline_estimates(bcfg, users, trials, seed, partitions)


def hd_outage(bcfg: BaselineConfig, user: int, trials, seed=0, partitions=1) -> OutageEstimate:
    return hd_outage_all(bcfg, trials, seed, partitions, users=(user,))[0]


def oma_outage_all(bcfg: BaselineConfig, trials, seed=0, partitions=1, users=None):
    """Full-duplex OMA outage for several users from shared draws."""
    if bcfg.mode != "fd_oma":
        raise ConfigError("oma_outage requires a fd_oma baseline config")
    return _baseline_estimates(bcfg, users, trials, seed, partitions)


def oma_outage(bcfg: BaselineConfig, user: int, trials, seed=0, partitions=1) -> OutageEstimate:
    return oma_outage_all(bcfg, trials, seed, partitions, users=(user,))[0]
