"""Effective double-well potential V(q, Q) and its critical points."""
from __future__ import annotations

import logging
import warnings
from dataclasses import asdict, dataclass

import numpy as np

from becmirror.errors import ParameterError
from becmirror.model import DimensionlessModel
from becmirror.steadystate import intracavity_intensity, steady_photon_numbers, branch_from_photon_number

log = logging.getLogger(__name__)

GRAD_TOL = 1e-12
DEDUP_RADIUS = 1e-6


class CriticalPointWarning(UserWarning):
    pass


@dataclass
class CriticalPoint:
    q: float
    Q: float
    energy: float
    kind: str
    hessian_eigenvalues: tuple[float, float]
    gradient_norm: float = 0.0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["hessian_eigenvalues"] = list(self.hessian_eigenvalues)
        return d


def potential_energy(q, Q, model: DimensionlessModel):
    """V / (hbar omega_m); elementwise on arrays."""
    x = model.detuning + model.xi * q - model.xi_sm * Q
    return (0.5 * q * q + 0.5 * model.sm_freq * Q * Q
            - model.eta2 / model.kappa * np.arctan(x / model.kappa))


def gradient(q, Q, model: DimensionlessModel):
    """(dV/dq, dV/dQ)."""
    n = intracavity_intensity(q, Q, model)
    return q - model.xi * n, model.sm_freq * Q + model.xi_sm * n


def hessian(q, Q, model: DimensionlessModel):
    """Second derivatives (V_qq, V_qQ, V_QQ)."""
    x = model.detuning + model.xi * q - model.xi_sm * Q
    denom = model.kappa**2 + x * x
    # d n / d x
    dn = -2.0 * x * model.eta2 / (denom * denom)
    return (1.0 - model.xi**2 * dn,
            model.xi * model.xi_sm * dn,
            model.sm_freq - model.xi_sm**2 * dn)


def classify_hessian(eigs) -> str:
    lo, hi = min(eigs), max(eigs)
    if lo > 0:
        return "minimum"
    if hi < 0:
        return "maximum"
    return "saddle"


def default_search_box(model: DimensionlessModel, pad: float = 0.5):
    """Box around the steady-state branch points (and the origin), padded by ``pad`` of its span."""
    qs, Qs = [0.0], [0.0]
    for n, _ in steady_photon_numbers(model.conservative()):
        b = branch_from_photon_number(n, model.conservative())
        qs.append(b.q_s)
        Qs.append(b.Q_s)
    q_lo, q_hi, Q_lo, Q_hi = min(qs), max(qs), min(Qs), max(Qs)
    dq = max(q_hi - q_lo, 1.0) * pad
    dQ = max(Q_hi - Q_lo, 1.0) * pad
    return (q_lo - dq, q_hi + dq), (Q_lo - dQ, Q_hi + dQ)


def _newton(q, Q, model, max_iter=100):
    """Damped Newton on grad V, vectorised over seed arrays."""
    q = np.array(q, dtype=float)
    Q = np.array(Q, dtype=float)
    gq, gQ = gradient(q, Q, model)
    norm = np.hypot(gq, gQ)
    active = norm > GRAD_TOL
    for _ in range(max_iter):
        if not active.any():
            break
        a, b, c = hessian(q, Q, model)
        det = a * c - b * b
        with np.errstate(divide="ignore", invalid="ignore"):
            sq = -(c * gq - b * gQ) / det
            sQ = -(a * gQ - b * gq) / det
        bad = ~np.isfinite(sq) | ~np.isfinite(sQ)
        # fall back to steepest descent where the Hessian is singular
        sq = np.where(bad, -gq, sq)
        sQ = np.where(bad, -gQ, sQ)
        t = np.ones_like(q)
        pending = active.copy()
        new_q, new_Q, new_norm = q.copy(), Q.copy(), norm.copy()
        for _ in range(40):
            if not pending.any():
                break
            tq = q + t * sq
            tQ = Q + t * sQ
            hq, hQ = gradient(tq, tQ, model)
            tn = np.hypot(hq, hQ)
            ok = pending & (tn < norm)
            new_q[ok], new_Q[ok], new_norm[ok] = tq[ok], tQ[ok], tn[ok]
            pending &= ~ok
            t = np.where(pending, 0.5 * t, t)
        stalled = active & pending
        q, Q, norm = new_q, new_Q, new_norm
        gq, gQ = gradient(q, Q, model)
        active = active & ~stalled & (norm > GRAD_TOL)
    return q, Q, norm


def find_critical_points(model: DimensionlessModel, search_box=None, seeds_per_axis: int = 64,
                         accept_tol: float = 1e-10) -> list[CriticalPoint]:
    """All critical points of V inside ``search_box`` sorted by energy.

    ``search_box`` is ``((q_min, q_max), (Q_min, Q_max))``; the default comes
    from :func:`default_search_box`. A grid cell where both gradient
    components change sign and whose corner seeds all failed to converge
    produces a :class:`CriticalPointWarning`.
    """
    if search_box is None:
        search_box = default_search_box(model)
    (q_lo, q_hi), (Q_lo, Q_hi) = search_box
    if not all(np.isfinite([q_lo, q_hi, Q_lo, Q_hi])) or q_hi < q_lo or Q_hi < Q_lo:
        raise ParameterError(f"invalid search box {search_box!r}", "search_box")
    gq_axis = np.linspace(q_lo, q_hi, seeds_per_axis)
    gQ_axis = np.linspace(Q_lo, Q_hi, seeds_per_axis)
    qq, QQ = np.meshgrid(gq_axis, gQ_axis, indexing="ij")
    q, Q, norm = _newton(qq.ravel(), QQ.ravel(), model)

    eps_q = 1e-9 * max(1.0, abs(q_lo), abs(q_hi))
    eps_Q = 1e-9 * max(1.0, abs(Q_lo), abs(Q_hi))
    inside = (q >= q_lo - eps_q) & (q <= q_hi + eps_q) & (Q >= Q_lo - eps_Q) & (Q <= Q_hi + eps_Q)
    good = inside & (norm <= accept_tol)
    found: list[tuple[float, float]] = []
    for a, b in zip(q[good], Q[good]):
        if all(np.hypot(a - fa, b - fb) > DEDUP_RADIUS for fa, fb in found):
            found.append((float(a), float(b)))

    points = []
    for a, b in found:
        hqq, hqQ, hQQ = hessian(a, b, model)
        eigs = tuple(float(e) for e in np.linalg.eigvalsh(np.array([[hqq, hqQ], [hqQ, hQQ]])))
        g = gradient(a, b, model)
        points.append(CriticalPoint(a, b, float(potential_energy(a, b, model)),
                                    classify_hessian(eigs), eigs, float(np.hypot(*g))))
    points.sort(key=lambda p: p.energy)
    converged = (norm <= accept_tol).reshape(qq.shape)
    _warn_failed_cells(model, gq_axis, gQ_axis, converged)
    return points


def _warn_failed_cells(model, q_axis, Q_axis, converged):
    qq, QQ = np.meshgrid(q_axis, Q_axis, indexing="ij")
    gq, gQ = gradient(qq, QQ, model)

    def corners(a):
        return np.stack([a[:-1, :-1], a[1:, :-1], a[:-1, 1:], a[1:, 1:]])

    def changes(g):
        c = corners(g)
        return (c.min(axis=0) <= 0) & (c.max(axis=0) >= 0)

    suspect = changes(gq) & changes(gQ) & ~corners(converged).any(axis=0)
    for i, j in zip(*np.nonzero(suspect)):
        msg = (f"Newton failed from every seed of cell q=[{q_axis[i]:.4g},{q_axis[i + 1]:.4g}] "
               f"Q=[{Q_axis[j]:.4g},{Q_axis[j + 1]:.4g}]")
        log.warning(msg)
        warnings.warn(msg, CriticalPointWarning, stacklevel=3)


def potential_grid(model: DimensionlessModel, search_box=None, resolution=(201, 201)):
    """V sampled on a regular grid; returns (q_axis, Q_axis, V[i_q, i_Q])."""
    if search_box is None:
        search_box = default_search_box(model)
    (q_lo, q_hi), (Q_lo, Q_hi) = search_box
    nq, nQ = resolution
    if nq < 2 or nQ < 2:
        raise ParameterError("grid resolution must be at least 2x2", "resolution")
    q_axis = np.linspace(q_lo, q_hi, nq)
    Q_axis = np.linspace(Q_lo, Q_hi, nQ)
    qq, QQ = np.meshgrid(q_axis, Q_axis, indexing="ij")
    return q_axis, Q_axis, potential_energy(qq, QQ, model)
