"""Surfaces of section Q = Q_B, P > 0 of the undamped flow."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from becmirror import _kernels
from becmirror.analysis.sampling import sample_energy_shell, trajectory_seeds
from becmirror.dynamics import DEFAULT_DT, State, _check_steps
from becmirror.errors import IntegrationDiverged, ParameterError
from becmirror.model import DimensionlessModel
from becmirror.potential import find_critical_points

log = logging.getLogger(__name__)

DEFAULT_TRAJECTORIES = 24
DEFAULT_TAU_END = 5000.0
DEFAULT_DTAU_OUT = 0.01
HENON_SUBSTEPS = 4


@dataclass
class PoincareSection:
    """Crossings per trajectory as ``(k, 4)`` arrays of refined (q, p, Q, P)."""

    section_Q: float
    energy: float
    crossings: list
    seeds: list
    initial_states: list = field(default_factory=list)
    failures: dict = field(default_factory=dict)
    settings: dict = field(default_factory=dict)

    def points(self, i: int) -> np.ndarray:
        """(q, p) pairs of trajectory ``i``."""
        c = self.crossings[i]
        return c[:, :2] if len(c) else np.empty((0, 2))

    def all_points(self) -> np.ndarray:
        pts = [self.points(i) for i in range(len(self.crossings))]
        return np.vstack(pts) if pts else np.empty((0, 2))


def section_plane(model: DimensionlessModel) -> float:
    """Q coordinate of the lowest potential minimum."""
    minima = [cp for cp in find_critical_points(model.conservative()) if cp.kind == "minimum"]
    if not minima:
        raise ParameterError("potential has no minimum in the default search box", "model")
    return min(minima, key=lambda cp: cp.energy).Q


def crossings_of(trajectory, model: DimensionlessModel, section_Q: float,
                 substeps: int = HENON_SUBSTEPS) -> np.ndarray:
    """Refined upward crossings of ``Q = section_Q`` along a sampled trajectory.

    Returns rows (q, p, Q, P, tau).
    """
    w = model.sm_freq
    v = np.array(trajectory.y, dtype=float)
    v[:, 3] *= w
    raw = _kernels.section_crossings(v, float(section_Q), _kernels.pack_params(model), substeps)
    out = np.empty((len(raw), 5))
    out[:, 0] = raw[:, 0]
    out[:, 1] = raw[:, 1]
    out[:, 2] = section_Q
    out[:, 3] = raw[:, 2] / w
    out[:, 4] = trajectory.tau[raw[:, 3].astype(int)] + raw[:, 4]
    return out


def section_run(initial: State, model: DimensionlessModel, section_Q: float, tau_end: float,
                dt: float = DEFAULT_DT, dtau_out: float = DEFAULT_DTAU_OUT) -> np.ndarray:
    """Integrate one orbit and return its refined crossings as rows (q, p, Q, P, tau).

    Only crossings are kept, so long runs need no sample storage.
    """
    stride, n_out, dtau_out = _check_steps(tau_end, dt, dtau_out)
    w = model.sm_freq
    y0 = initial.as_array()
    y0[3] *= w
    rows, n_good = _kernels.leapfrog_section(y0, _kernels.pack_params(model), float(dt), n_out, stride,
                                             float(section_Q), HENON_SUBSTEPS)
    if n_good <= n_out:
        raise IntegrationDiverged(f"non-finite state after tau={initial.tau + n_good * dtau_out:.6g}")
    out = np.empty((len(rows), 5))
    out[:, 0] = rows[:, 0]
    out[:, 1] = rows[:, 1]
    out[:, 2] = section_Q
    out[:, 3] = rows[:, 2] / w
    out[:, 4] = initial.tau + rows[:, 3]
    return out


def _one_trajectory(model, E, seed, tau_end, dt, dtau_out, section_Q, region_box):
    state = sample_energy_shell(model, E, seed, region_box)
    return state, section_run(state, model, section_Q, tau_end, dt, dtau_out)[:, :4]


def poincare_section(model: DimensionlessModel, E: float, n_trajectories: int = DEFAULT_TRAJECTORIES,
                     tau_end: float = DEFAULT_TAU_END, rng_seed: int = 1, *, dt: float = DEFAULT_DT,
                     dtau_out: float = DEFAULT_DTAU_OUT, region_box=None, section_Q: float | None = None,
                     threads: int = 1) -> PoincareSection:
    """Seeded shell trajectories cut by the plane through the lowest minimum.

    A diverging trajectory is dropped (empty crossing list) and its error
    recorded in ``failures``; the others are unaffected.
    """
    model = model.conservative()
    if section_Q is None:
        section_Q = section_plane(model)
    seeds = trajectory_seeds(rng_seed, n_trajectories)

    def work(seed):
        try:
            return _one_trajectory(model, E, seed, tau_end, dt, dtau_out, section_Q, region_box)
        except IntegrationDiverged as exc:
            return exc

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, seeds))
    else:
        results = [work(s) for s in seeds]

    crossings, states, failures = [], [], {}
    for i, res in enumerate(results):
        if isinstance(res, Exception):
            log.warning("trajectory %d diverged: %s", i, res)
            failures[i] = str(res)
            crossings.append(np.empty((0, 4)))
            states.append(None)
        else:
            states.append(res[0])
            crossings.append(res[1])
    settings = {"n_trajectories": n_trajectories, "tau_end": tau_end, "dt": dt,
                "dtau_out": dtau_out, "rng_seed": rng_seed, "henon_substeps": HENON_SUBSTEPS}
    return PoincareSection(section_Q, E, crossings, seeds, states, failures, settings)


def grid_occupancy(points: np.ndarray, bounds, bins: int = 64) -> int:
    """Number of cells of a ``bins`` x ``bins`` grid over ``bounds`` hit by ``points``."""
    (x_lo, x_hi), (y_lo, y_hi) = bounds
    pts = np.asarray(points)
    if pts.size == 0:
        return 0
    H, _, _ = np.histogram2d(pts[:, 0], pts[:, 1], bins=bins, range=[[x_lo, x_hi], [y_lo, y_hi]])
    return int(np.count_nonzero(H))


def common_bounds(*point_sets) -> tuple:
    pts = np.vstack([p for p in point_sets if len(p)])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    pad = 1e-9 * np.maximum(1.0, np.abs(hi - lo))
    return (lo[0] - pad[0], hi[0] + pad[0]), (lo[1] - pad[1], hi[1] + pad[1])
