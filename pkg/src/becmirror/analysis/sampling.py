"""Random initial conditions on a fixed-energy shell."""
from __future__ import annotations

import math

import numpy as np

from becmirror.dynamics import State
from becmirror.errors import EmptyShellError, ParameterError
from becmirror.model import DimensionlessModel
from becmirror.potential import potential_energy

MAX_REJECTIONS = 1_000_000


def energy_box(model: DimensionlessModel, E: float):
    """A box guaranteed to contain every (q, Q) with V(q, Q) <= E.

    Uses arctan <= pi/2, so the harmonic part alone bounds the region.
    """
    bound = E + model.eta2 / model.kappa * 0.5 * math.pi
    if bound < 0:
        raise EmptyShellError(f"E={E!r} lies below every value of V")
    q_max = math.sqrt(2.0 * bound)
    Q_max = math.sqrt(2.0 * bound / model.sm_freq)
    return (-q_max, q_max), (-Q_max, Q_max)


def sample_energy_shell(model: DimensionlessModel, E: float, rng_seed, region_box=None,
                        batch: int = 4096) -> State:
    """Uniform position in ``{V <= E}`` within ``region_box``, kinetic energy split at random.

    ``rng_seed`` is anything accepted by :func:`numpy.random.default_rng`.
    Raises :class:`EmptyShellError` after a million consecutive rejections.
    """
    if region_box is None:
        region_box = energy_box(model, E)
    (q_lo, q_hi), (Q_lo, Q_hi) = region_box
    if q_hi < q_lo or Q_hi < Q_lo:
        raise ParameterError(f"invalid region box {region_box!r}", "region_box")
    rng = np.random.default_rng(rng_seed)
    tried = 0
    while tried < MAX_REJECTIONS:
        k = min(batch, MAX_REJECTIONS - tried)
        q = rng.uniform(q_lo, q_hi, k)
        Q = rng.uniform(Q_lo, Q_hi, k)
        ok = np.nonzero(potential_energy(q, Q, model) <= E)[0]
        if ok.size:
            i = ok[0]
            tried += i + 1
            break
        tried += k
    else:
        raise EmptyShellError(f"no point with V <= {E!r} after {MAX_REJECTIONS} draws in {region_box!r}")
    q, Q = float(q[i]), float(Q[i])
    K = max(E - float(potential_energy(q, Q, model)), 0.0)
    u = rng.uniform(0.0, 1.0)
    s_p, s_P = rng.choice([-1.0, 1.0], size=2)
    p = s_p * math.sqrt(2.0 * u * K)
    P = s_P * math.sqrt(2.0 * (1.0 - u) * K / model.sm_freq)
    return State(q, p, Q, P)


def trajectory_seeds(seed: int, n: int) -> list[int]:
    """Deterministic per-trajectory seeds derived from one master seed."""
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n)]
