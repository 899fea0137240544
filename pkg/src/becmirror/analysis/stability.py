"""Linear stability of steady states of the damped four-dimensional flow."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from becmirror.errors import ParameterError
from becmirror.model import DimensionlessModel

STABILITY_EPS = 1e-12


@dataclass
class StabilityReport:
    fixed_point: tuple[float, float, float, float]
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    classification: str

    @property
    def max_real_part(self) -> float:
        return float(np.max(self.eigenvalues.real))


def flow_jacobian(q: float, Q: float, model: DimensionlessModel) -> np.ndarray:
    """Analytic Jacobian of (q, p, Q, P)' at a point; independent of p and P."""
    x = model.detuning + model.xi * q - model.xi_sm * Q
    denom = model.kappa**2 + x * x
    n = model.eta2 / denom
    dn_dx = -2.0 * x * n / denom
    n_q = model.xi * dn_dx
    n_Q = -model.xi_sm * dn_dx
    w = model.sm_freq
    return np.array([
        [0.0, 1.0, 0.0, 0.0],
        [-1.0 + model.xi * n_q, -model.gamma_m, model.xi * n_Q, 0.0],
        [0.0, 0.0, -model.gamma_sm, w],
        [-model.xi_sm * n_q, 0.0, -w - model.xi_sm * n_Q, -model.gamma_sm],
    ])


def fixed_point_residual(q: float, Q: float, P: float, model: DimensionlessModel) -> float:
    x = model.detuning + model.xi * q - model.xi_sm * Q
    n = model.eta2 / (model.kappa**2 + x * x)
    w = model.sm_freq
    r = np.array([
        -q + model.xi * n,
        w * P - model.gamma_sm * Q,
        -w * Q - model.xi_sm * n - model.gamma_sm * P,
    ])
    return float(np.max(np.abs(r)))


def classify(eigenvalues: np.ndarray, eps: float = STABILITY_EPS) -> str:
    re = np.real(eigenvalues)
    if np.all(re < -eps):
        return "stable"
    if np.any(re > eps):
        return "unstable"
    return "marginal"


def linearize_fixed_point(branch, model: DimensionlessModel) -> StabilityReport:
    """Eigen-decomposition of the flow Jacobian at a steady-state branch.

    Raises
    ------
    ParameterError
        If the branch point is not a fixed point of ``model`` to 1e-8.
    """
    q, Q = branch.q_s, branch.Q_s
    P = model.gamma_sm * Q / model.sm_freq
    res = fixed_point_residual(q, Q, P, model)
    scale = max(1.0, abs(q), abs(Q))
    if res > 1e-8 * scale:
        raise ParameterError(f"branch is not a fixed point (residual {res:.3e})", "branch")
    J = flow_jacobian(q, Q, model)
    vals, vecs = np.linalg.eig(J)
    order = np.lexsort((vals.imag, vals.real))
    vals, vecs = vals[order], vecs[:, order]
    return StabilityReport((q, 0.0, Q, P), vals, vecs, classify(vals))
