"""Time-to-space demultiplexer: routing waveforms and n-photon conversion rates."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .io import dumps_csv, read_csv

NS = 1e-9
DEFAULT_DT = 0.1 * NS


@dataclass(frozen=True)
class RoutingWaveform:
    """One period of the relative output signal of a demultiplexer arm.

    Samples sit on a uniform periodic grid ``t0 + i * T / N`` (``i < N``); the
    point ``t0 + T`` is the periodic image of ``t0`` and is not stored.
    """

    samples: np.ndarray
    period: float
    t0: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=float).copy()
        if s.ndim != 1 or s.size < 2:
            raise ValueError("waveform needs at least two samples")
        if np.any(s < -1e-12) or np.any(s > 1 + 1e-12):
            raise ValueError("waveform levels must lie in [0, 1]")
        if not self.period > 0:
            raise ValueError("period must be positive")
        s = np.clip(s, 0.0, 1.0)
        s.setflags(write=False)
        object.__setattr__(self, "samples", s)

    @property
    def dt(self) -> float:
        return self.period / self.samples.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.samples.size)

    def mean(self) -> float:
        """Period average (trapezoidal rule on the periodic grid)."""
        return float(np.mean(self.samples))

    def to_csv(self) -> str:
        return dumps_csv(["time_ns", "level"], zip(self.times / NS, self.samples))

    @classmethod
    def from_csv(cls, path, period: float | None = None) -> "RoutingWaveform":
        """Read a ``time_ns, level`` trace on a uniform grid.

        If the last time equals the first plus ``period``, the duplicated
        endpoint is dropped.
        """
        _, rows = read_csv(path)
        t = np.array([float(r[0]) for r in rows]) * NS
        y = np.array([float(r[1]) for r in rows])
        steps = np.diff(t)
        if steps.size == 0 or np.any(steps <= 0) or np.ptp(steps) > 1e-6 * steps.mean():
            raise ValueError(f"{path}: times must be uniformly increasing")
        dt = steps.mean()
        if period is None:
            period = dt * t.size
        elif abs((t[-1] - t[0]) - period) < 0.5 * dt:
            t, y = t[:-1], y[:-1]
        if abs(dt * t.size - period) > 1e-6 * period:
            raise ValueError(f"{path}: samples do not cover exactly one period")
        return cls(y, period, t0=float(t[0]))


def square_waveform(period: float, start: float, duration: float, *, contrast: float = 1.0,
                    rise_time: float = 0.0, dt: float = DEFAULT_DT) -> RoutingWaveform:
    """Periodic gate high on ``[start, start + duration)``.

    Edges are linear ramps of width ``rise_time`` centred on the nominal edge.
    Finite ``contrast`` compresses the levels to ``[(1 - c)/2, 1 - (1 - c)/2]``.
    The grid is offset by ``dt / 2`` so that nominal edges on multiples of
    ``dt`` never fall on a sample.
    """
    if not 0.0 <= contrast <= 1.0:
        raise ValueError("contrast must lie in [0, 1]")
    if not 0.0 < duration <= period:
        raise ValueError("gate duration must lie in (0, period]")
    if rise_time < 0 or (duration < period and rise_time > min(duration, period - duration)):
        raise ValueError("rise time longer than the gate or the gap")
    n = int(round(period / dt))
    t = (np.arange(n) + 0.5) * (period / n)
    if duration == period:
        level = np.ones(n)
    else:
        u = np.mod(t - start, period)
        # measure time relative to the rising edge, splitting the low part in half
        u = np.where(u < 0.5 * (duration + period), u, u - period)
        if rise_time > 0:
            with np.errstate(over="ignore"):  # tiny ramps saturate to a step
                up = np.clip(u / rise_time + 0.5, 0.0, 1.0)
                down = np.clip((duration - u) / rise_time + 0.5, 0.0, 1.0)
            level = np.minimum(up, down)
        else:
            level = ((u >= 0) & (u < duration)).astype(float)
    floor = 0.5 * (1.0 - contrast)
    return RoutingWaveform(floor + (1.0 - 2.0 * floor) * level, period, t0=float(t[0]))


@dataclass(frozen=True)
class DemuxScheme:
    waveforms: tuple[RoutingWaveform, ...]
    arm_transmissions: tuple[float, ...] = ()
    contrast: float = 1.0
    rise_time: float = 0.0
    delays: tuple[float, ...] = ()
    label: str = ""

    def __post_init__(self):
        wf = tuple(self.waveforms)
        if not wf:
            raise ValueError("scheme needs at least one arm")
        object.__setattr__(self, "waveforms", wf)
        tr = tuple(float(x) for x in self.arm_transmissions) or (1.0,) * len(wf)
        if len(tr) != len(wf) or any(not 0 <= x <= 1 for x in tr):
            raise ValueError("one transmission in [0, 1] per arm required")
        object.__setattr__(self, "arm_transmissions", tr)
        _check_aligned(wf)

    @property
    def n_arms(self) -> int:
        return len(self.waveforms)

    @property
    def period(self) -> float:
        return self.waveforms[0].period

    def duty_cycles(self) -> np.ndarray:
        return np.array([w.mean() for w in self.waveforms])


def _check_aligned(waveforms: Sequence[RoutingWaveform]):
    w0 = waveforms[0]
    for w in waveforms[1:]:
        if abs(w.period - w0.period) > 1e-9 * w0.period:
            raise ValueError("all arms must share the same period")
        if w.samples.size != w0.samples.size or abs(w.t0 - w0.t0) > 1e-6 * w0.dt:
            raise ValueError("all arms must share the same time grid")


def _gated_scheme(period, durations, label, *, contrast, rise_time, dt, arm_transmissions) -> DemuxScheme:
    """Arms routed in consecutive windows, then delayed so all windows start at 0."""
    starts = np.concatenate([[0.0], np.cumsum(durations)[:-1]])
    delays = tuple(float(-s) % period for s in starts)
    waves = tuple(square_waveform(period, 0.0, d, contrast=contrast, rise_time=rise_time, dt=dt)
                  for d in durations)
    return DemuxScheme(waves, arm_transmissions=tuple(arm_transmissions), contrast=contrast,
                       rise_time=rise_time, delays=delays, label=label)


def cascaded_binary_scheme(n: int, period: float, *, contrast=1.0, rise_time=0.0, dt=DEFAULT_DT,
                           arm_transmissions=()) -> DemuxScheme:
    """``n - 1`` cascaded two-way switches, each halving the remaining time.

    Arm windows are ``T/2^(n-1), T/2^(n-1), T/2^(n-2), ..., T/2``.
    """
    if n < 1:
        raise ValueError("need at least one arm")
    if n == 1:
        durations = [period]
    else:
        durations = [period / 2 ** (n - 1)] + [period / 2 ** k for k in range(n - 1, 0, -1)]
    return _gated_scheme(period, durations, f"cascaded-binary n={n}", contrast=contrast,
                         rise_time=rise_time, dt=dt, arm_transmissions=arm_transmissions)


def equal_slot_scheme(n: int, period: float, *, contrast=1.0, rise_time=0.0, dt=DEFAULT_DT,
                      arm_transmissions=()) -> DemuxScheme:
    """Every arm gets one ``T/n`` slot; the active conversion rate is ``1/n``."""
    if n < 1:
        raise ValueError("need at least one arm")
    return _gated_scheme(period, [period / n] * n, f"equal-slot n={n}", contrast=contrast,
                         rise_time=rise_time, dt=dt, arm_transmissions=arm_transmissions)


def ideal_scheme_3arm(period: float = 200 * NS, *, contrast=1.0, rise_time=0.0, dt=DEFAULT_DT,
                      arm_transmissions=()) -> DemuxScheme:
    """Two cascaded switches at 1/8 and 1/16 of the pulse rate.

    With ``tau = T/4`` the arms carry ``[0, tau)``, ``[tau, 2 tau)`` and
    ``[2 tau, 4 tau)``; after the delays all three overlap on ``[0, tau)``.
    """
    return cascaded_binary_scheme(3, period, contrast=contrast, rise_time=rise_time, dt=dt,
                                  arm_transmissions=arm_transmissions)


def conversion_rate_active(scheme: DemuxScheme) -> float:
    """Period average of the product of all (aligned) arm signals."""
    _check_aligned(scheme.waveforms)
    prod = np.prod(np.stack([w.samples for w in scheme.waveforms]), axis=0)
    return float(np.mean(prod))


def conversion_rate_passive(probs: Sequence[float]) -> float:
    p = np.asarray(probs, dtype=float)
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("static output probabilities must lie in [0, 1]")
    return float(np.prod(p))


def active_passive_ratio(scheme: DemuxScheme) -> float:
    return conversion_rate_active(scheme) / conversion_rate_passive(scheme.duty_cycles())


def active_efficiency(r_exp: float, r_ideal: float) -> float:
    """``(r_exp - 1) / (r_ideal - 1)``: 1 for ideal switching, 0 for passive splitting."""
    if r_ideal <= 1:
        raise ValueError("ideal active-to-passive ratio must exceed 1")
    eta = (r_exp - 1.0) / (r_ideal - 1.0)
    if not 0.0 <= eta <= 1.0:
        warnings.warn(f"active efficiency {eta:.4g} outside [0, 1]", RuntimeWarning, stacklevel=2)
    return eta
