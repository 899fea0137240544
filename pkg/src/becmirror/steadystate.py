"""Steady-state intracavity intensity and the bistable branches of both mirrors."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from becmirror.errors import ConvergenceError, ParameterError
from becmirror.model import DimensionlessModel

FOLD_RTOL = 1e-7


@dataclass
class SteadyStateBranch:
    n_s: float
    q_s: float
    Q_s: float
    stable: bool
    eigenvalues: list = field(default_factory=list)
    fold: bool = False
    classification: str = ""
    P_s: float = 0.0


def intracavity_intensity(q, Q, model: DimensionlessModel):
    """Adiabatic photon number n(q, Q) = eta^2 / (kappa^2 + (Delta + xi q - xi_sm Q)^2).

    Works elementwise on arrays.
    """
    x = model.detuning + model.xi * q - model.xi_sm * Q
    return model.eta2 / (model.kappa**2 + x * x)


def residual(n, model: DimensionlessModel):
    """R(n) = n (kappa^2 + (Delta + K n)^2) - eta^2."""
    x = model.detuning + model.kerr * n
    return n * (model.kappa**2 + x * x) - model.eta2


def cubic_coefficients(model: DimensionlessModel) -> tuple[float, float, float, float]:
    """Coefficients (a, b, c, d) of R(n) = a n^3 + b n^2 + c n + d."""
    K = model.kerr
    D = model.detuning
    return K * K, 2.0 * D * K, model.kappa**2 + D * D, -model.eta2


def _real_cubic_roots(a: float, b: float, c: float, d: float) -> list[float]:
    """Real roots of a x^3 + b x^2 + c x + d in closed form (unpolished)."""
    if a == 0.0:
        if b == 0.0:
            return [] if c == 0.0 else [-d / c]
        disc = c * c - 4.0 * b * d
        if disc < 0:
            return []
        s = math.sqrt(disc)
        # avoids cancellation in the smaller root
        qq = -0.5 * (c + math.copysign(s, c))
        roots = [qq / b]
        if qq != 0.0:
            roots.append(d / qq)
        return sorted(roots)
    B, C, D = b / a, c / a, d / a
    shift = B / 3.0
    p = C - B * B / 3.0
    q = 2.0 * B**3 / 27.0 - B * C / 3.0 + D
    disc = (q / 2.0) ** 2 + (p / 3.0) ** 3
    if disc > 0:
        s = math.sqrt(disc)
        u = math.copysign(abs(-q / 2.0 - math.copysign(s, q)) ** (1.0 / 3.0), -q / 2.0 - math.copysign(s, q))
        t = u - p / (3.0 * u) if u != 0.0 else 0.0
        return [t - shift]
    if p == 0.0:
        return [-shift]
    r = 2.0 * math.sqrt(-p / 3.0)
    arg = 3.0 * q / (p * r)
    arg = max(-1.0, min(1.0, arg))
    phi = math.acos(arg) / 3.0
    return sorted(r * math.cos(phi - 2.0 * math.pi * k / 3.0) - shift for k in range(3))


def _polish(n: float, model: DimensionlessModel, tol: float, max_iter: int = 60) -> float:
    a, b, c, d = cubic_coefficients(model)
    for _ in range(max_iter):
        r = ((a * n + b) * n + c) * n + d
        if abs(r) <= tol:
            return n
        dr = (3.0 * a * n + 2.0 * b) * n + c
        if dr == 0.0:
            break
        n_new = n - r / dr
        if n_new == n:
            break
        n = n_new
    r = ((a * n + b) * n + c) * n + d
    if abs(r) <= tol:
        return n
    raise ConvergenceError(
        "steady-state root polish did not reach residual tolerance",
        {"n": n, "residual": r, "tolerance": tol, "model": model.fingerprint()},
    )


def _residual_tolerance(n: float, model: DimensionlessModel) -> float:
    # floor at a few ulps of the largest term so that tiny pumps stay solvable
    a, b, c, d = cubic_coefficients(model)
    scale = max(abs(a * n**3), abs(b * n**2), abs(c * n), abs(d))
    return max(1e-12 * model.eta2, 16.0 * np.finfo(float).eps * scale)


def steady_photon_numbers(model: DimensionlessModel) -> list[tuple[float, bool]]:
    """All real non-negative roots of R(n), ascending, as (n, is_fold) pairs."""
    if model.eta2 == 0.0:
        return [(0.0, False)]
    raw = _real_cubic_roots(*cubic_coefficients(model))
    polished = []
    for n in raw:
        n = _polish(max(n, 0.0), model, _residual_tolerance(n, model))
        if n >= 0:
            polished.append(n)
    polished.sort()
    out: list[tuple[float, bool]] = []
    for n in polished:
        if out and abs(n - out[-1][0]) <= FOLD_RTOL * max(abs(n), 1e-300):
            out[-1] = (0.5 * (n + out[-1][0]), True)
        else:
            out.append((n, False))
    return out


def branch_from_photon_number(n: float, model: DimensionlessModel, fold: bool = False) -> SteadyStateBranch:
    q_s = model.xi * n
    Q_s = -model.xi_sm * n / (model.sm_freq * model.sm_damping_factor)
    P_s = model.gamma_sm * Q_s / model.sm_freq
    return SteadyStateBranch(n_s=n, q_s=q_s, Q_s=Q_s, stable=True, fold=fold, P_s=P_s)


def solve_steady_states(model: DimensionlessModel, pump_ratio: float | None = None) -> list[SteadyStateBranch]:
    """Enumerate steady states and classify each by linear stability.

    ``pump_ratio`` overrides the model's ``eta**2 / kappa**2`` when given.
    A branch counts as ``stable`` unless it has a growing linear mode, so
    centres of the undamped flow are stable.
    """
    from becmirror.analysis.stability import linearize_fixed_point

    if pump_ratio is not None:
        if not pump_ratio >= 0:
            raise ParameterError(f"pump_ratio must be >= 0, got {pump_ratio!r}", "pump_ratio")
        model = model.with_pump_ratio(pump_ratio)
    branches = []
    for n, fold in steady_photon_numbers(model):
        branch = branch_from_photon_number(n, model, fold)
        report = linearize_fixed_point(branch, model)
        branch.eigenvalues = list(report.eigenvalues)
        branch.classification = report.classification
        branch.stable = report.classification != "unstable"
        branches.append(branch)
    return branches


@dataclass
class BistabilitySweep:
    model: DimensionlessModel
    pump_ratios: np.ndarray
    branches: list
    folds: list

    @property
    def root_counts(self) -> np.ndarray:
        return np.array([len(b) for b in self.branches])

    def windows(self) -> list[tuple[float, float]]:
        """Pump-ratio intervals bounded by consecutive fold points with three roots inside."""
        out = []
        for lo, hi in zip(self.folds[:-1], self.folds[1:]):
            mid = 0.5 * (lo + hi)
            if len(steady_photon_numbers(self.model.with_pump_ratio(mid))) == 3:
                out.append((lo, hi))
        return out


def _root_count(model: DimensionlessModel, pump_ratio: float) -> int:
    return sum(1 for _ in steady_photon_numbers(model.with_pump_ratio(pump_ratio)))


def _bisect_fold(model, lo, hi, count_lo, rel_width=1e-6) -> float:
    while hi - lo > rel_width * max(abs(hi), abs(lo), 1e-300):
        mid = 0.5 * (lo + hi)
        if _root_count(model, mid) == count_lo:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def sweep_bistability(model: DimensionlessModel, pump_ratio_range=(0.0, 3.0), n_points: int = 301) -> BistabilitySweep:
    """Branches across a pump-ratio grid plus the fold points between grid nodes."""
    lo, hi = pump_ratio_range
    if not (lo >= 0 and hi >= lo):
        raise ParameterError(f"invalid pump-ratio range {pump_ratio_range!r}", "pump_ratio_range")
    if n_points < 2:
        raise ParameterError("n_points must be >= 2", "n_points")
    ratios = np.linspace(lo, hi, n_points)
    branches = [solve_steady_states(model, float(r)) for r in ratios]
    counts = [len(b) for b in branches]
    folds = []
    for i in range(n_points - 1):
        if counts[i] != counts[i + 1]:
            folds.append(_bisect_fold(model, float(ratios[i]), float(ratios[i + 1]), counts[i]))
    return BistabilitySweep(model, ratios, branches, folds)

