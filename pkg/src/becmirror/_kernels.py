"""Compiled inner loops for the conservative flow.

State vectors inside the kernels use velocities ``(q, v_q, Q, v_Q)`` with
``v_q = p`` and ``v_Q = 4 omega_r P``; callers convert to canonical momenta.
"""
import math

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def _accel(q, Q, xi, xi_sm, w, detuning, kappa2, eta2):
    x = detuning + xi * q - xi_sm * Q
    n = eta2 / (kappa2 + x * x)
    return -q + xi * n, -w * w * Q - w * xi_sm * n


@njit(cache=True, nogil=True)
def leapfrog(y0, params, dt, n_out, stride):
    """Velocity-Verlet run storing every ``stride``-th step.

    Returns ``(out, n_good)``; rows past ``n_good`` are unfilled when the
    state became non-finite.
    """
    xi, xi_sm, w, detuning, kappa2, eta2 = params[0], params[1], params[2], params[3], params[4], params[5]
    out = np.empty((n_out + 1, 4))
    q, vq, Q, vQ = y0[0], y0[1], y0[2], y0[3]
    out[0, 0] = q
    out[0, 1] = vq
    out[0, 2] = Q
    out[0, 3] = vQ
    h2 = 0.5 * dt
    aq, aQ = _accel(q, Q, xi, xi_sm, w, detuning, kappa2, eta2)
    for k in range(1, n_out + 1):
        for _ in range(stride):
            vq += h2 * aq
            vQ += h2 * aQ
            q += dt * vq
            Q += dt * vQ
            aq, aQ = _accel(q, Q, xi, xi_sm, w, detuning, kappa2, eta2)
            vq += h2 * aq
            vQ += h2 * aQ
        if not (math.isfinite(q) and math.isfinite(vq) and math.isfinite(Q) and math.isfinite(vQ)):
            return out, k
        out[k, 0] = q
        out[k, 1] = vq
        out[k, 2] = Q
        out[k, 3] = vQ
    return out, n_out + 1


@njit(cache=True, nogil=True)
def benettin(y0, params, dt, n_intervals, steps_per_interval, d0):
    """Two-trajectory Benettin run; returns log stretch per renormalisation interval.

    Separation is measured in canonical coordinates (q, p, Q, P), i.e. the
    v_Q offset is divided by ``w``. A NaN entry marks divergence.
    """
    xi, xi_sm, w, detuning, kappa2, eta2 = params[0], params[1], params[2], params[3], params[4], params[5]
    logs = np.full(n_intervals, np.nan)
    a = y0.copy()
    b = y0.copy()
    # initial offset along (1, 1, 1, 1)/2 in canonical coordinates
    b[0] += 0.5 * d0
    b[1] += 0.5 * d0
    b[2] += 0.5 * d0
    b[3] += 0.5 * d0 * w
    h2 = 0.5 * dt
    aq, aQ = _accel(a[0], a[2], xi, xi_sm, w, detuning, kappa2, eta2)
    bq, bQ = _accel(b[0], b[2], xi, xi_sm, w, detuning, kappa2, eta2)
    for k in range(n_intervals):
        for _ in range(steps_per_interval):
            a[1] += h2 * aq
            a[3] += h2 * aQ
            a[0] += dt * a[1]
            a[2] += dt * a[3]
            aq, aQ = _accel(a[0], a[2], xi, xi_sm, w, detuning, kappa2, eta2)
            a[1] += h2 * aq
            a[3] += h2 * aQ
            b[1] += h2 * bq
            b[3] += h2 * bQ
            b[0] += dt * b[1]
            b[2] += dt * b[3]
            bq, bQ = _accel(b[0], b[2], xi, xi_sm, w, detuning, kappa2, eta2)
            b[1] += h2 * bq
            b[3] += h2 * bQ
        d_q = b[0] - a[0]
        d_p = b[1] - a[1]
        d_Q = b[2] - a[2]
        d_P = (b[3] - a[3]) / w
        d = math.sqrt(d_q * d_q + d_p * d_p + d_Q * d_Q + d_P * d_P)
        if not (math.isfinite(d) and d > 0.0):
            return logs
        logs[k] = math.log(d / d0)
        s = d0 / d
        b[0] = a[0] + s * d_q
        b[1] = a[1] + s * d_p
        b[2] = a[2] + s * d_Q
        b[3] = a[3] + s * d_P * w
        bq, bQ = _accel(b[0], b[2], xi, xi_sm, w, detuning, kappa2, eta2)
    return logs


@njit(cache=True, nogil=True)
def _rhs_over_Qdot(Q, z, xi, xi_sm, w, detuning, kappa2, eta2):
    # d(q, v_q, tau, v_Q)/dQ with Q as the independent variable
    aq, aQ = _accel(z[0], Q, xi, xi_sm, w, detuning, kappa2, eta2)
    inv = 1.0 / z[3]
    out = np.empty(4)
    out[0] = z[1] * inv
    out[1] = aq * inv
    out[2] = inv
    out[3] = aQ * inv
    return out


@njit(cache=True, nogil=True)
def henon_refine(y, Q_target, params, substeps):
    """Integrate from ``y = (q, v_q, Q, v_Q)`` to ``Q = Q_target`` with Q as time.

    Classic RK4 in the exchanged variable. Returns ``(q, v_q, v_Q, dtau)``
    where ``dtau`` is the elapsed physical time (negative when integrating
    backwards).
    """
    xi, xi_sm, w, detuning, kappa2, eta2 = params[0], params[1], params[2], params[3], params[4], params[5]
    z = np.empty(4)
    z[0] = y[0]
    z[1] = y[1]
    z[2] = 0.0
    z[3] = y[3]
    Q = y[2]
    h = (Q_target - Q) / substeps
    for _ in range(substeps):
        k1 = _rhs_over_Qdot(Q, z, xi, xi_sm, w, detuning, kappa2, eta2)
        k2 = _rhs_over_Qdot(Q + 0.5 * h, z + 0.5 * h * k1, xi, xi_sm, w, detuning, kappa2, eta2)
        k3 = _rhs_over_Qdot(Q + 0.5 * h, z + 0.5 * h * k2, xi, xi_sm, w, detuning, kappa2, eta2)
        k4 = _rhs_over_Qdot(Q + h, z + h * k3, xi, xi_sm, w, detuning, kappa2, eta2)
        z = z + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        Q += h
    return z[0], z[1], z[3], z[2]


@njit(cache=True, nogil=True)
def section_crossings(samples, Q_target, params, substeps):
    """Upward crossings of ``Q = Q_target`` between consecutive samples.

    Each crossing is refined from whichever bracketing sample moves faster
    in Q, so a turning point inside the bracket cannot stall the exchanged
    integration. Returns rows ``(q, v_q, v_Q, sample_index, dtau)`` with
    ``dtau`` measured from that sample.
    """
    n = samples.shape[0]
    out = np.empty((n, 5))
    m = 0
    for k in range(n - 1):
        a = samples[k, 2] - Q_target
        b = samples[k + 1, 2] - Q_target
        if a < 0.0 and b >= 0.0:
            start = k if samples[k, 3] >= samples[k + 1, 3] else k + 1
            if samples[start, 3] <= 0.0:
                continue
            q, vq, vQ, dtau = henon_refine(samples[start], Q_target, params, substeps)
            if vQ > 0.0:
                out[m, 0] = q
                out[m, 1] = vq
                out[m, 2] = vQ
                out[m, 3] = start
                out[m, 4] = dtau
                m += 1
    return out[:m]


@njit(cache=True, nogil=True)
def leapfrog_section(y0, params, dt, n_out, stride, Q_target, substeps):
    """Leapfrog run that keeps only refined upward crossings of ``Q = Q_target``.

    Crossings are detected between output samples spaced ``stride`` steps
    apart, as in :func:`section_crossings`. Returns ``(rows, n_good)`` with
    rows ``(q, v_q, v_Q, tau)``; ``n_good <= n_out`` flags divergence at
    that sample.
    """
    xi, xi_sm, w, detuning, kappa2, eta2 = params[0], params[1], params[2], params[3], params[4], params[5]
    cap = 1024
    rows = np.empty((cap, 4))
    m = 0
    prev = np.empty(4)
    cur = np.empty(4)
    q, vq, Q, vQ = y0[0], y0[1], y0[2], y0[3]
    h2 = 0.5 * dt
    aq, aQ = _accel(q, Q, xi, xi_sm, w, detuning, kappa2, eta2)
    tau_out = stride * dt
    for k in range(1, n_out + 1):
        prev[0] = q
        prev[1] = vq
        prev[2] = Q
        prev[3] = vQ
        for _ in range(stride):
            vq += h2 * aq
            vQ += h2 * aQ
            q += dt * vq
            Q += dt * vQ
            aq, aQ = _accel(q, Q, xi, xi_sm, w, detuning, kappa2, eta2)
            vq += h2 * aq
            vQ += h2 * aQ
        if not (math.isfinite(q) and math.isfinite(vq) and math.isfinite(Q) and math.isfinite(vQ)):
            return rows[:m], k
        if prev[2] - Q_target < 0.0 and Q - Q_target >= 0.0:
            cur[0] = q
            cur[1] = vq
            cur[2] = Q
            cur[3] = vQ
            if prev[3] >= vQ:
                start = prev
                t0 = (k - 1) * tau_out
            else:
                start = cur
                t0 = k * tau_out
            if start[3] > 0.0:
                rq, rvq, rvQ, dtau = henon_refine(start, Q_target, params, substeps)
                if rvQ > 0.0:
                    if m == cap:
                        cap *= 2
                        grown = np.empty((cap, 4))
                        grown[:m] = rows[:m]
                        rows = grown
                    rows[m, 0] = rq
                    rows[m, 1] = rvq
                    rows[m, 2] = rvQ
                    rows[m, 3] = t0 + dtau
                    m += 1
    return rows[:m], n_out + 1


def pack_params(model):
    return np.array([model.xi, model.xi_sm, model.sm_freq, model.detuning,
                     model.kappa**2, model.eta2])
