"""Time integration of the mirror equations of motion in scaled time tau = omega_m t."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from becmirror import _kernels
from becmirror.errors import IntegrationDiverged, ParameterError
from becmirror.model import DimensionlessModel
from becmirror.potential import potential_energy
from becmirror.steadystate import intracavity_intensity

DEFAULT_DT = 1e-3
DEFAULT_RTOL = 1e-9
DEFAULT_ATOL = 1e-12


@dataclass(frozen=True)
class State:
    q: float
    p: float
    Q: float
    P: float
    tau: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.q, self.p, self.Q, self.P, self.tau)):
            raise ParameterError(f"state has non-finite fields: {self!r}", "state")

    def as_array(self) -> np.ndarray:
        return np.array([self.q, self.p, self.Q, self.P])

    def reversed(self) -> State:
        """Same point with both momenta negated."""
        return State(self.q, -self.p, self.Q, -self.P, self.tau)


ORIGIN = State(0.0, 0.0, 0.0, 0.0)


@dataclass
class Trajectory:
    """Uniformly sampled solution; ``y`` columns are (q, p, Q, P)."""

    tau: np.ndarray
    y: np.ndarray
    model: dict
    integrator: dict

    def __len__(self) -> int:
        return len(self.tau)

    @property
    def dtau(self) -> float:
        return float(self.tau[1] - self.tau[0]) if len(self.tau) > 1 else 0.0

    def component(self, name: str) -> np.ndarray:
        try:
            return self.y[:, "qpQP".index(name)]
        except ValueError:
            raise ParameterError(f"unknown component {name!r}", "component") from None

    @property
    def states(self) -> list[State]:
        return [State(*row, tau=t) for t, row in zip(self.tau, self.y)]

    def state(self, i: int) -> State:
        return State(*self.y[i], tau=float(self.tau[i]))

    @property
    def final(self) -> State:
        return self.state(-1)


@dataclass
class EnergyReport:
    E0: float
    drift_series: np.ndarray = field(repr=False)

    @property
    def max_relative_drift(self) -> float:
        return float(np.max(self.drift_series)) if len(self.drift_series) else 0.0


def total_energy(state, model: DimensionlessModel):
    """H / (hbar omega_m) for a :class:`State` or an ``(..., 4)`` array of (q, p, Q, P)."""
    if isinstance(state, State):
        q, p, Q, P = state.q, state.p, state.Q, state.P
    else:
        arr = np.asarray(state)
        q, p, Q, P = arr[..., 0], arr[..., 1], arr[..., 2], arr[..., 3]
    return 0.5 * p * p + 0.5 * model.sm_freq * P * P + potential_energy(q, Q, model)


def energy_report(traj: Trajectory, model: DimensionlessModel) -> EnergyReport:
    E = total_energy(traj.y, model)
    E0 = float(E[0])
    scale = abs(E0) if E0 != 0.0 else 1.0
    return EnergyReport(E0, np.abs(E - E0) / scale)


def _to_velocity(y: np.ndarray, w: float) -> np.ndarray:
    v = np.array(y, dtype=float)
    v[..., 3] *= w
    return v


def _to_momentum(v: np.ndarray, w: float) -> np.ndarray:
    y = np.array(v, dtype=float)
    y[..., 3] /= w
    return y


def _check_steps(tau_end, dt, dtau_out):
    if not (dt > 0 and tau_end > 0):
        raise ParameterError("dt and tau_end must be positive", "dt")
    if dtau_out is None:
        dtau_out = dt
    stride = int(round(dtau_out / dt))
    if stride < 1 or abs(stride * dt - dtau_out) > 1e-9 * dtau_out:
        raise ParameterError(f"dtau_out={dtau_out!r} is not an integer multiple of dt={dt!r}", "dtau_out")
    n_out = int(round(tau_end / dtau_out))
    if n_out < 1:
        raise ParameterError("tau_end shorter than one output interval", "tau_end")
    return stride, n_out, dtau_out


def integrate_conservative(initial: State, model: DimensionlessModel, tau_end: float,
                           dt: float = DEFAULT_DT, dtau_out: float | None = None):
    """Störmer-Verlet integration of the undamped flow.

    Returns ``(trajectory, energy_report)``. Damping constants of ``model``
    are ignored. Raises :class:`IntegrationDiverged` carrying the last
    finite state if the solution overflows.
    """
    stride, n_out, dtau_out = _check_steps(tau_end, dt, dtau_out)
    w = model.sm_freq
    y0 = _to_velocity(initial.as_array(), w)
    out, n_good = _kernels.leapfrog(y0, _kernels.pack_params(model), float(dt), n_out, stride)
    tau = initial.tau + dtau_out * np.arange(n_out + 1)
    if n_good <= n_out:
        last = _to_momentum(out[n_good - 1], w)
        raise IntegrationDiverged(
            f"non-finite state after tau={tau[n_good]:.6g}",
            State(*last, tau=float(tau[n_good - 1])),
        )
    traj = Trajectory(
        tau, _to_momentum(out, w), model.fingerprint(),
        {"name": "stormer-verlet", "order": 2, "dt": dt, "dtau_out": dtau_out},
    )
    return traj, energy_report(traj, model)


def leapfrog_step(y, model: DimensionlessModel, dt: float) -> np.ndarray:
    """One Störmer-Verlet step on canonical (q, p, Q, P); pure Python reference."""
    w = model.sm_freq
    q, vq, Q, vQ = _to_velocity(y, w)
    aq, aQ = _kernels._accel(q, Q, *_kernels.pack_params(model))
    vq += 0.5 * dt * aq
    vQ += 0.5 * dt * aQ
    q += dt * vq
    Q += dt * vQ
    aq, aQ = _kernels._accel(q, Q, *_kernels.pack_params(model))
    vq += 0.5 * dt * aq
    vQ += 0.5 * dt * aQ
    return _to_momentum(np.array([q, vq, Q, vQ]), w)


def _force_jacobian(q, Q, model):
    """d(a_q, a_Q)/d(q, Q) for the velocity-form accelerations."""
    from becmirror.potential import hessian

    hqq, hqQ, hQQ = hessian(q, Q, model)
    w = model.sm_freq
    # a_q = -V_q, a_Q = -w V_Q
    return np.array([[-hqq, -hqQ], [-w * hqQ, -w * hQQ]])


def leapfrog_step_jacobian(y, model: DimensionlessModel, dt: float) -> np.ndarray:
    """Analytic 4x4 Jacobian of one step in canonical coordinates (q, p, Q, P)."""
    w = model.sm_freq
    q, vq, Q, vQ = _to_velocity(y, w)
    # coordinates ordered (q, Q, v_q, v_Q) for the block form
    I2 = np.eye(2)
    Z2 = np.zeros((2, 2))

    def kick(qq, QQ):
        return np.block([[I2, Z2], [0.5 * dt * _force_jacobian(qq, QQ, model), I2]])

    drift = np.block([[I2, dt * I2], [Z2, I2]])
    aq, aQ = _kernels._accel(q, Q, *_kernels.pack_params(model))
    q1 = q + dt * (vq + 0.5 * dt * aq)
    Q1 = Q + dt * (vQ + 0.5 * dt * aQ)
    J = kick(q1, Q1) @ drift @ kick(q, Q)
    # (q, p, Q, P) -> (q, Q, v_q, v_Q)
    T = np.zeros((4, 4))
    T[0, 0] = 1.0
    T[1, 2] = 1.0
    T[2, 1] = 1.0
    T[3, 3] = w
    return np.linalg.solve(T, J @ T)


def damped_rhs(model: DimensionlessModel):
    """Vector field of the damped flow in canonical (q, p, Q, P)."""
    xi, xi_sm, w = model.xi, model.xi_sm, model.sm_freq
    gm, gs = model.gamma_m, model.gamma_sm

    def rhs(_tau, y):
        q, p, Q, P = y
        n = intracavity_intensity(q, Q, model)
        return [p, -q + xi * n - gm * p, w * P - gs * Q, -w * Q - xi_sm * n - gs * P]

    return rhs


def integrate_damped(initial: State, model: DimensionlessModel, tau_end: float,
                     dtau_out: float = 0.01, rtol: float = DEFAULT_RTOL, atol: float = DEFAULT_ATOL,
                     method: str = "DOP853") -> Trajectory:
    """Adaptive Runge-Kutta solution resampled on a uniform grid via dense output."""
    if model.gamma_m < 0 or model.gamma_sm < 0:
        raise ParameterError("damping rates must be non-negative", "gamma")
    if not (tau_end > 0 and dtau_out > 0):
        raise ParameterError("tau_end and dtau_out must be positive", "tau_end")
    n_out = int(round(tau_end / dtau_out))
    tau = initial.tau + dtau_out * np.arange(n_out + 1)
    sol = solve_ivp(damped_rhs(model), (initial.tau, tau[-1]), initial.as_array(),
                    method=method, rtol=rtol, atol=atol, dense_output=True)
    if sol.status != 0:
        last = sol.y[:, -1] if sol.y.size else initial.as_array()
        last_state = State(*last, tau=float(sol.t[-1])) if np.all(np.isfinite(last)) else initial
        raise IntegrationDiverged(f"adaptive integration failed: {sol.message}", last_state)
    y = sol.sol(tau).T
    y[0] = initial.as_array()
    if not np.all(np.isfinite(y)):
        raise IntegrationDiverged("non-finite state in damped solution", initial)
    return Trajectory(tau, y, model.fingerprint(),
                      {"name": method, "rtol": rtol, "atol": atol, "dtau_out": dtau_out})
