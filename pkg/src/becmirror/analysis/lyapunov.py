"""Largest Lyapunov exponent by the two-trajectory (Benettin) method."""
from __future__ import annotations

import numpy as np

from becmirror import _kernels
from becmirror.dynamics import DEFAULT_DT, State
from becmirror.errors import IntegrationDiverged, ParameterError
from becmirror.model import DimensionlessModel

REGULAR_THRESHOLD = 1e-3
CHAOTIC_THRESHOLD = 1e-2


def lyapunov_largest(model: DimensionlessModel, initial: State, tau_end: float = 5000.0,
                     renorm_interval: float = 1.0, dt: float = DEFAULT_DT, d0: float = 1e-8,
                     return_series: bool = False):
    """Average log-stretch rate of a shadow orbit over the second half of the run.

    The first half is discarded as transient. With ``return_series`` the
    per-interval log stretches are returned alongside the exponent.
    """
    if not model.is_conservative:
        raise ParameterError("Lyapunov estimate requires an undamped model", "gamma")
    steps = int(round(renorm_interval / dt))
    if steps < 1 or abs(steps * dt - renorm_interval) > 1e-9 * renorm_interval:
        raise ParameterError("renorm_interval must be an integer multiple of dt", "renorm_interval")
    n_int = int(round(tau_end / renorm_interval))
    if n_int < 2:
        raise ParameterError("tau_end must span at least two renormalisation intervals", "tau_end")
    y0 = initial.as_array()
    y0[3] *= model.sm_freq
    logs = _kernels.benettin(y0, _kernels.pack_params(model), float(dt), n_int, steps, float(d0))
    if not np.all(np.isfinite(logs)):
        bad = int(np.argmax(~np.isfinite(logs)))
        raise IntegrationDiverged(f"shadow separation became non-finite at tau={bad * renorm_interval:.6g}")
    half = n_int // 2
    exponent = float(np.sum(logs[half:]) / ((n_int - half) * renorm_interval))
    if return_series:
        return exponent, logs
    return exponent


def classify_exponent(exponent: float) -> str:
    if exponent <= REGULAR_THRESHOLD:
        return "regular"
    if exponent >= CHAOTIC_THRESHOLD:
        return "chaotic"
    return "undetermined"
