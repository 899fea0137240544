"""One-sided periodograms of sampled trajectories."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import find_peaks
from scipy.signal.windows import get_window

from becmirror.errors import ParameterError

MIN_SAMPLES = 2**14


@dataclass
class PowerSpectrum:
    """PSD on an angular-frequency grid in units of omega_m.

    Normalised so that ``sum(psd) * dfreq`` equals the variance of the
    (window-compensated) signal.
    """

    frequencies: np.ndarray
    psd: np.ndarray
    window: str
    record_length: int
    dtau: float

    @property
    def dfreq(self) -> float:
        return float(self.frequencies[1] - self.frequencies[0])

    def band(self, fmax: float | None) -> PowerSpectrum:
        """The part of the spectrum with frequency <= ``fmax`` (all of it for None)."""
        if fmax is None:
            return self
        k = self.frequencies <= fmax
        return PowerSpectrum(self.frequencies[k], self.psd[k], self.window, self.record_length, self.dtau)

    def flatness(self, fmax: float | None = None) -> float:
        return spectral_flatness(self.band(fmax).psd)

    def peaks(self, fmax: float | None = None, min_db_above_median: float = 20.0,
              min_separation: float = 0.02) -> np.ndarray:
        """Frequencies of local maxima standing ``min_db_above_median`` dB over the median bin.

        Peaks closer than ``min_separation`` (in omega_m) count once.
        """
        sub = self.band(fmax)
        body = sub.psd[1:]
        floor = np.median(body) * 10 ** (min_db_above_median / 10)
        distance = max(1, int(round(min_separation / self.dfreq)))
        idx, _ = find_peaks(body, height=floor, distance=distance)
        return sub.frequencies[idx + 1]


def periodogram(x, dtau: float, window: str = "hann") -> PowerSpectrum:
    """Mean-removed one-sided periodogram of a uniformly sampled signal."""
    x = np.asarray(x, dtype=float)
    n = x.size
    if n < MIN_SAMPLES:
        raise ParameterError(f"record has {n} samples, need at least {MIN_SAMPLES}", "trajectory")
    if not dtau > 0:
        raise ParameterError("sampling interval must be positive", "dtau")
    if window == "rect":
        w = np.ones(n)
    elif window == "hann":
        w = get_window("hann", n, fftbins=True)
    else:
        raise ParameterError(f"unknown window {window!r}", "window")
    x = x - x.mean()
    X = np.fft.rfft(x * w)
    # mean(w^2) compensates the window's power loss
    power = np.abs(X) ** 2 / (n * n * np.mean(w * w))
    power[1:] *= 2.0
    if n % 2 == 0:
        power[-1] /= 2.0
    dfreq = 2.0 * np.pi / (n * dtau)
    freqs = dfreq * np.arange(power.size)
    return PowerSpectrum(freqs, power / dfreq, window, n, dtau)


def power_spectrum(trajectory, component: str = "q", window: str = "hann") -> PowerSpectrum:
    """Periodogram of one coordinate of a uniformly sampled trajectory."""
    if component not in ("q", "Q"):
        raise ParameterError(f"component must be 'q' or 'Q', got {component!r}", "component")
    tau = np.asarray(trajectory.tau)
    if tau.size < 2:
        raise ParameterError("trajectory too short", "trajectory")
    steps = np.diff(tau)
    dtau = float(steps[0])
    if np.max(np.abs(steps - dtau)) > 1e-9 * max(1.0, abs(tau[-1])):
        raise ParameterError("trajectory is not uniformly sampled", "trajectory")
    return periodogram(trajectory.component(component), dtau, window)


def normal_mode_frequencies(model) -> np.ndarray:
    """Small-oscillation frequencies (units omega_m) about every potential minimum."""
    from becmirror.potential import find_critical_points, hessian

    freqs = []
    for cp in find_critical_points(model.conservative()):
        if cp.kind != "minimum":
            continue
        hqq, hqQ, hQQ = hessian(cp.q, cp.Q, model)
        # q'' = -V_qq q - V_qQ Q ;  Q'' = -w (V_qQ q + V_QQ Q)
        w = model.sm_freq
        A = np.array([[hqq, hqQ], [w * hqQ, w * hQQ]])
        freqs.extend(np.sqrt(np.abs(np.linalg.eigvals(A).real)))
    return np.sort(np.array(freqs))


def analysis_band(model, harmonics: float = 2.0) -> float:
    """Upper edge of the band holding the mechanical dynamics: twice the fastest normal mode."""
    return harmonics * float(np.max(normal_mode_frequencies(model)))


def spectral_flatness(psd) -> float:
    """Geometric over arithmetic mean of the PSD, DC bin excluded."""
    body = np.asarray(psd, dtype=float)[1:]
    if body.size == 0 or body.mean() <= 0:
        return 0.0
    if np.any(body <= 0):
        return 0.0
    return float(np.exp(np.mean(np.log(body))) / body.mean())
