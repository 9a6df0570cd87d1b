"""Slot-discretized protocol timing and backoff constants.

All durations inside the model are integer numbers of slots.  A timed
activity whose timer starts at t occupies t + 1 slots (the timer counts
t, t-1, ..., 0), so a packet lasting n slots of airtime gets timer n - 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigurationError, ContractViolation

# Fraction of a slot by which a duration may miss the slot grid and still
# be treated as grid-aligned.  Reported transmit times from packet-level
# simulators carry sub-slot framing overhead (562 us of DATA airtime on a
# 140 us slot is 4 slots of signal), while the model assumes every
# duration is a slot multiple.
GRID_TOLERANCE = 0.05


def _slots(duration: float, sigma: float) -> int:
    """Number of slots of airtime for a continuous duration, minus one.

    Durations within GRID_TOLERANCE of an exact slot multiple are snapped
    to the grid before the ceiling is taken.
    """
    if duration <= 0:
        raise ConfigurationError(f"duration must be positive, got {duration}")
    q = duration / sigma
    nearest = round(q)
    if nearest >= 1 and abs(q - nearest) <= GRID_TOLERANCE:
        return int(nearest) - 1
    return math.ceil(q) - 1


@dataclass(frozen=True)
class Timing:
    """Timer start values, in slots."""

    t_rts: int
    t_cts: int
    t_data: int
    t_out: int
    t_navr: int
    t_navc: int


def discretize_times(t_rts_us: float, t_cts_us: float, t_data_ack_us: float,
                     t_out_us: float, sigma_us: float) -> Timing:
    """Discretize continuous durations into slot-valued timer constants.

    ``t_data_ack_us`` is the combined DATA + ACK airtime; the NAV carried
    in an RTS covers CTS + DATA + ACK and the NAV in a CTS covers
    DATA + ACK.
    """
    if sigma_us <= 0:
        raise ConfigurationError("slot length must be positive")
    return Timing(
        t_rts=_slots(t_rts_us, sigma_us),
        t_cts=_slots(t_cts_us, sigma_us),
        t_data=_slots(t_data_ack_us, sigma_us),
        t_out=_slots(t_out_us, sigma_us),
        t_navr=_slots(t_cts_us + t_data_ack_us, sigma_us),
        t_navc=_slots(t_data_ack_us, sigma_us),
    )


@dataclass(frozen=True)
class ProtocolParams:
    """Backoff constants plus the Timing fields, validated together.

    w is the initial contention window, m the maximum backoff stage
    (equivalently the RTS retry limit).  sigma is metadata only.
    """

    w: int
    m: int
    t_rts: int
    t_cts: int
    t_data: int
    t_out: int
    t_navr: int
    t_navc: int
    sigma: float = 140.0

    def __post_init__(self):
        if self.w < 1:
            raise ConfigurationError("initial contention window must be >= 1")
        if self.m < 0:
            raise ConfigurationError("max backoff stage must be >= 0")
        for name in ("t_rts", "t_cts", "t_data", "t_out"):
            if getattr(self, name) < 1:
                raise ConfigurationError(f"{name} must be >= 1 slot")
        if self.t_navr < 0 or self.t_navc < 0:
            raise ConfigurationError("NAV durations must be >= 0")
        if self.t_rts != self.t_cts:
            raise ConfigurationError("RTS and CTS must have equal airtime")
        if self.t_out < self.t_cts:
            raise ConfigurationError("CTS timeout must cover the CTS airtime")

    def window(self, stage: int) -> int:
        """Contention window at a backoff stage: 2^stage * w."""
        if not 0 <= stage <= self.m:
            raise ContractViolation(f"stage {stage} outside [0, {self.m}]")
        return (2 ** stage) * self.w

    @classmethod
    def from_durations(cls, w: int, m: int, t_rts_us: float, t_cts_us: float,
                       t_data_ack_us: float, t_out_us: float,
                       sigma_us: float) -> "ProtocolParams":
        t = discretize_times(t_rts_us, t_cts_us, t_data_ack_us, t_out_us, sigma_us)
        return cls(w=w, m=m, t_rts=t.t_rts, t_cts=t.t_cts, t_data=t.t_data,
                   t_out=t.t_out, t_navr=t.t_navr, t_navc=t.t_navc,
                   sigma=sigma_us)


# Defaults mirroring the reference 802.11b configuration: 140 us slots,
# 280 us RTS/CTS/ACK, 562 us DATA, 420 us CTS timeout, CWmin 3.
def default_params(m: int = 0, w: int = 3) -> ProtocolParams:
    return ProtocolParams.from_durations(
        w=w, m=m, t_rts_us=280.0, t_cts_us=280.0,
        t_data_ack_us=562.0 + 280.0, t_out_us=420.0, sigma_us=140.0)
