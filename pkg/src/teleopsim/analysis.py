"""Offline analysis of experiment logs.

Frequency responses are estimated nonparametrically (Welch cross-spectra
with Hann windows and 50% overlap) from force-input / velocity-output
series; the energy audit integrates the work exchanged at the controller
ports to certify that no run ever extracted more energy than it injected;
task metrics reduce a button-task log to success, completion time and
overshoot numbers.

The audit evaluates each controller term at its own port: the phase
dependent stiffness against the target-relative end-effector velocity (the
commanded pose is the frame the spring is anchored to) and the viscous term
against the absolute velocity it physically opposes. Work increments use
the trapezoidal rule in position, which is exact for piecewise affine force
profiles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import signal

from .logio import ExperimentLog

COHERENCE_GATE = 0.6


@dataclass
class FrequencyResponse:
    freqs: np.ndarray
    magnitude: np.ndarray
    phase: np.ndarray
    coherence: np.ndarray

    def scaled(self, gain: float) -> "FrequencyResponse":
        return FrequencyResponse(self.freqs, gain * self.magnitude,
                                 self.phase, self.coherence)


def estimate_frf(inp, out, sample_rate: float,
                 window_len: int = 2048) -> FrequencyResponse:
    """H1 estimate S_xy/S_xx of the transfer from `inp` to `out`.

    Hann windows, 50% overlap; per-bin coherence comes along for gating.
    The DC bin is dropped so the grid suits log-frequency plotting.
    """
    inp = np.asarray(inp, dtype=float)
    out = np.asarray(out, dtype=float)
    if inp.shape != out.shape or inp.ndim != 1:
        raise ValueError("input and output must be equal-length 1-d series")
    if len(inp) < window_len:
        raise ValueError(f"series of {len(inp)} samples is shorter than one "
                         f"window ({window_len})")
    noverlap = window_len // 2
    freqs, pxx = signal.welch(inp, fs=sample_rate, window="hann",
                              nperseg=window_len, noverlap=noverlap)
    _, pxy = signal.csd(inp, out, fs=sample_rate, window="hann",
                        nperseg=window_len, noverlap=noverlap)
    with np.errstate(divide="ignore", invalid="ignore"):
        _, coh = signal.coherence(inp, out, fs=sample_rate, window="hann",
                                  nperseg=window_len, noverlap=noverlap)
        h = np.where(pxx > 0, pxy / pxx, 0.0)
    keep = freqs > 0
    return FrequencyResponse(freqs=freqs[keep],
                             magnitude=np.abs(h[keep]),
                             phase=np.angle(h[keep]),
                             coherence=np.nan_to_num(coh[keep]))


def cutoff_frequency(frf: FrequencyResponse,
                     reference_band: tuple[float, float]) -> float | None:
    """First frequency past the reference band where the magnitude falls
    3 dB below the band mean; None when no such crossing exists in the
    coherent part of the estimate."""
    lo, hi = reference_band
    if not lo < hi:
        raise ValueError("reference band must satisfy lo < hi")
    band = (frf.freqs >= lo) & (frf.freqs <= hi)
    if not np.any(band):
        raise ValueError("reference band contains no frequency bins")
    if float(np.mean(frf.coherence[band])) < COHERENCE_GATE:
        raise ValueError("coherence too low over the reference band")
    ref = float(np.mean(frf.magnitude[band]))
    target = ref / math.sqrt(2.0)
    usable = (frf.freqs > hi) & (frf.coherence >= COHERENCE_GATE)
    idx = np.nonzero(usable & (frf.magnitude < target))[0]
    if idx.size == 0:
        return None
    i = idx[0]
    # log-log interpolate back to the crossing
    prev = i - 1
    while prev >= 0 and not usable[prev]:
        prev -= 1
    if prev < 0 or frf.magnitude[prev] <= target:
        return float(frf.freqs[i])
    f0, f1 = frf.freqs[prev], frf.freqs[i]
    m0, m1 = frf.magnitude[prev], frf.magnitude[i]
    w = (math.log(target) - math.log(m0)) / (math.log(m1) - math.log(m0))
    return float(math.exp(math.log(f0) + w * (math.log(f1) - math.log(f0))))


@dataclass
class EnergyLedger:
    """Cumulative energy bookkeeping of the replica controller."""

    time: np.ndarray
    injected: np.ndarray  # work done on the controller by the arm/operator
    extracted: np.ndarray  # work done by the controller on the arm
    stored: np.ndarray  # net balance currently held (or dissipated)

    def max_violation(self) -> float:
        """Largest excess of extraction over injection, any time."""
        return float(np.max(self.extracted - self.injected, initial=0.0))


_AUDIT_COLUMNS = ("t", "ee_x", "ee_y", "ee_vx", "ee_vy", "xd_post_x",
                  "xd_post_y", "ctrl_stiff_x", "ctrl_stiff_y",
                  "ctrl_damp_x", "ctrl_damp_y")


def energy_audit(log: ExperimentLog) -> EnergyLedger:
    """Split the controller's work exchange into injected and extracted
    streams, cumulatively over time."""
    missing = [c for c in _AUDIT_COLUMNS if c not in log.columns]
    if missing:
        raise ValueError(f"log lacks audit channels: {missing}")
    t = log.column("t")
    n = len(t)
    work = np.zeros(n)
    for axis in ("x", "y"):
        rel = log.column(f"ee_{axis}") - log.column(f"xd_post_{axis}")
        f_spring = log.column(f"ctrl_stiff_{axis}")
        f_damp = log.column(f"ctrl_damp_{axis}")
        pos = log.column(f"ee_{axis}")
        dw = np.zeros(n)
        dw[1:] += 0.5 * (f_spring[1:] + f_spring[:-1]) * np.diff(rel)
        dw[1:] += 0.5 * (f_damp[1:] + f_damp[:-1]) * np.diff(pos)
        work += dw
    extracted = np.cumsum(np.where(work > 0.0, work, 0.0))
    injected = np.cumsum(np.where(work < 0.0, -work, 0.0))
    return EnergyLedger(time=t, injected=injected, extracted=extracted,
                        stored=injected - extracted)


def concatenate_ledgers(a: EnergyLedger, b: EnergyLedger) -> EnergyLedger:
    """Ledger of two logs played back to back."""
    return EnergyLedger(
        time=np.concatenate([a.time, a.time[-1] + b.time]),
        injected=np.concatenate([a.injected, a.injected[-1] + b.injected]),
        extracted=np.concatenate([a.extracted,
                                  a.extracted[-1] + b.extracted]),
        stored=np.concatenate([a.stored, a.stored[-1] + b.stored]))


def overshoot_ratio(err: np.ndarray) -> float:
    """Peak error after the first return through zero, relative to the
    excursion peak; zero when the error never crosses back."""
    if len(err) == 0 or not np.any(err):
        return 0.0
    i_peak = int(np.argmax(np.abs(err)))
    peak = abs(err[i_peak])
    if peak == 0.0:
        return 0.0
    sign = np.sign(err[i_peak])
    after = err[i_peak:]
    crossed = np.nonzero(np.sign(after) == -sign)[0]
    if crossed.size == 0:
        return 0.0
    return float(np.max(np.abs(after[crossed[0]:])) / peak)


def button_events(log: ExperimentLog) -> list[tuple[float, int, bool]]:
    """(time, button index, active) transitions recovered from the log."""
    out = []
    t = log.column("t")
    for i in range(8):
        name = f"btn{i}"
        if name not in log.columns:
            break
        col = log.column(name)
        flips = np.nonzero(np.diff(col) != 0)[0]
        for k in flips:
            out.append((float(t[k + 1]), i, bool(col[k + 1] > 0.5)))
    out.sort()
    return out


def task_metrics(log: ExperimentLog) -> dict:
    """Success, completion time, peak interaction force and overshoot."""
    events = button_events(log)
    n_buttons = sum(1 for c in log.columns if c.startswith("btn"))
    activated = {i for _, i, on in events if on}
    success = n_buttons > 0 and len(activated) == n_buttons \
        and not bool(log.summary.get("script_failed", False))
    completion = None
    if success:
        releases = [t for t, _, on in events if not on]
        if releases and len({i for _, i, on in events if not on}) == n_buttons:
            completion = releases[-1]
        else:
            success = False
    peak_force = 0.0
    if "ffb_pre_x" in log.columns:
        peak_force = float(np.max(np.hypot(log.column("ffb_pre_x"),
                                           log.column("ffb_pre_y"))))
    overshoot = 0.0
    if "xd_post_x" in log.columns:
        ex = log.column("xd_post_x") - log.column("ee_x")
        ey = log.column("xd_post_y") - log.column("ee_y")
        overshoot = max(overshoot_ratio(ex), overshoot_ratio(ey))
    return {"success": success, "completion_time": completion,
            "peak_force": peak_force, "overshoot": overshoot}
