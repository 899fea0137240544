import dataclasses

import numpy as np
import pytest
from scipy.stats import chisquare

from becmirror.analysis.lyapunov import classify_exponent, lyapunov_largest
from becmirror.analysis.poincare import (common_bounds, crossings_of, grid_occupancy, poincare_section,
                                         section_plane, section_run)
from becmirror.analysis.sampling import energy_box, sample_energy_shell, trajectory_seeds
from becmirror.analysis.spectrum import (MIN_SAMPLES, analysis_band, periodogram, power_spectrum,
                                         spectral_flatness)
from becmirror.analysis.stability import classify, flow_jacobian, linearize_fixed_point
from becmirror.dynamics import ORIGIN, State, Trajectory, integrate_conservative, total_energy
from becmirror.errors import EmptyShellError, ParameterError
from becmirror.potential import find_critical_points, potential_energy
from becmirror.steadystate import solve_steady_states


# --- shell sampling -------------------------------------------------------

def test_sample_exact_energy(model18):
    for seed in range(50):
        s = sample_energy_shell(model18, 150.0, seed)
        assert total_energy(s, model18) == pytest.approx(150.0, rel=1e-12)


def test_sample_at_well_bottom(model18):
    B = find_critical_points(model18)[0]
    s = sample_energy_shell(model18, B.energy, 0, ((B.q, B.q), (B.Q, B.Q)))
    assert (s.q, s.p, s.Q, s.P) == (B.q, 0.0, B.Q, 0.0)


def test_sample_deterministic(model18):
    assert sample_energy_shell(model18, 160.0, 42) == sample_energy_shell(model18, 160.0, 42)
    assert sample_energy_shell(model18, 160.0, 42) != sample_energy_shell(model18, 160.0, 43)


def test_empty_shell(model18):
    with pytest.raises(EmptyShellError):
        sample_energy_shell(model18, 100.0, 0, ((0.0, 1.0), (0.0, 1.0)))


def test_energy_box_contains_shell(model18):
    (ql, qh), (Ql, Qh) = energy_box(model18, 170.0)
    q = np.linspace(2 * ql, 2 * qh, 400)
    Q = np.linspace(2 * Ql, 2 * Qh, 400)
    qq, QQ = np.meshgrid(q, Q, indexing="ij")
    inside = potential_energy(qq, QQ, model18) <= 170.0
    assert qq[inside].min() >= ql and qq[inside].max() <= qh
    assert QQ[inside].min() >= Ql and QQ[inside].max() <= Qh


def test_samples_uniform_over_accessible_region(model18):
    E = 140.0
    (ql, qh), (Ql, Qh) = energy_box(model18, E)
    qq, QQ = np.meshgrid(np.linspace(ql, qh, 1500), np.linspace(Ql, Qh, 1500), indexing="ij")
    inside = potential_energy(qq, QQ, model18) <= E
    box = ((qq[inside].min() - 0.05, qq[inside].max() + 0.05), (QQ[inside].min() - 0.05, QQ[inside].max() + 0.05))

    pts = np.array([[s.q, s.Q] for s in (sample_energy_shell(model18, E, sd, box)
                                         for sd in trajectory_seeds(7, 10_000))])
    # expected cell weights: area of {V <= E} in each cell, from a fine grid
    fq, fQ = np.meshgrid(np.linspace(*box[0], 1000), np.linspace(*box[1], 1000), indexing="ij")
    ok = potential_energy(fq, fQ, model18) <= E
    area, _, _ = np.histogram2d(fq[ok], fQ[ok], bins=10, range=box)
    obs, _, _ = np.histogram2d(pts[:, 0], pts[:, 1], bins=10, range=box)
    exp = area.ravel() / area.sum() * len(pts)
    use = exp >= 5
    o, e = obs.ravel()[use], exp[use]
    assert chisquare(o, e * o.sum() / e.sum()).pvalue > 0.01


def test_trajectory_seeds_deterministic():
    assert trajectory_seeds(1, 5) == trajectory_seeds(1, 5)
    assert trajectory_seeds(1, 5)[:3] == trajectory_seeds(1, 3)
    assert len(set(trajectory_seeds(1, 100))) == 100


# --- Poincare sections ----------------------------------------------------

def test_section_plane_is_lower_well(model18):
    B = find_critical_points(model18)[0]
    assert section_plane(model18) == B.Q


def test_crossings_on_plane_and_shell(model18):
    sec = poincare_section(model18, 160.0, 4, 500.0, rng_seed=3)
    assert sec.seeds == trajectory_seeds(3, 4)
    assert not sec.failures
    assert sum(len(c) for c in sec.crossings) > 40
    for c in sec.crossings:
        assert np.all(np.abs(c[:, 2] - sec.section_Q) <= 1e-9)
        assert np.all(c[:, 3] > 0)
        E = total_energy(c, model18)
        assert np.all(np.abs(E - 160.0) <= 1e-6 * 160.0)


def test_stored_and_streamed_crossings_agree(model18):
    start = sample_energy_shell(model18, 160.0, 9)
    QB = section_plane(model18)
    traj, _ = integrate_conservative(start, model18, 300.0, 1e-3, 0.01)
    rows = crossings_of(traj, model18, QB)
    streamed = section_run(start, model18, QB, 300.0, 1e-3, 0.01)
    assert len(rows) > 5
    assert rows == pytest.approx(streamed, abs=1e-10)
    assert np.all(np.diff(rows[:, 4]) > 0)


def test_decoupled_side_mode_section_is_a_level_curve(model18):
    m = dataclasses.replace(model18, xi_sm=0.0)
    sec = poincare_section(m, 150.0, 3, 500.0)
    assert sec.section_Q == 0.0
    for c in sec.crossings:
        q, p = c[:, 0], c[:, 1]
        Hq = p**2 / 2 + q**2 / 2 - m.eta2 / m.kappa * np.arctan((m.detuning + m.xi * q) / m.kappa)
        assert np.ptp(Hq) <= 1e-6


def test_uncoupled_section_is_an_ellipse(model18):
    m = dataclasses.replace(model18, xi=0.0, xi_sm=0.0)
    sec = poincare_section(m, 170.0, 3, 500.0)
    for c in sec.crossings:
        H = c[:, 1] ** 2 / 2 + c[:, 0] ** 2 / 2
        assert np.ptp(H) <= 1e-6 * H.mean()


def test_threads_do_not_change_results(model18):
    a = poincare_section(model18, 160.0, 3, 200.0, threads=1)
    b = poincare_section(model18, 160.0, 3, 200.0, threads=3)
    for x, y in zip(a.crossings, b.crossings):
        assert np.array_equal(x, y)


def test_occupancy_helpers():
    pts = np.array([[0.1, 0.1], [0.15, 0.12], [0.9, 0.9]])
    assert grid_occupancy(pts, ((0, 1), (0, 1)), bins=4) == 2
    assert grid_occupancy(np.empty((0, 2)), ((0, 1), (0, 1))) == 0
    (xl, xh), (yl, yh) = common_bounds(pts, np.array([[-1.0, 2.0]]))
    assert xl < -1 and xh > 0.9 and yl < 0.1 and yh > 2


# --- spectra --------------------------------------------------------------

def tone_trajectory(freq, dtau, n):
    tau = dtau * np.arange(n)
    y = np.zeros((n, 4))
    y[:, 0] = np.cos(freq * tau)
    return Trajectory(tau, y, {}, {})


def test_pure_tone_peak():
    spec = power_spectrum(tone_trajectory(0.7, 0.05, 2**15), "q", "hann")
    k = np.argmax(spec.psd)
    assert abs(spec.frequencies[k] - 0.7) <= spec.dfreq
    assert spec.frequencies[0] == 0.0
    assert np.all(spec.psd >= 0)
    assert np.allclose(np.diff(spec.frequencies), spec.dfreq)


def test_parseval_rect():
    rng = np.random.default_rng(3)
    x = rng.normal(size=2**15) + np.sin(0.3 * np.arange(2**15))
    spec = periodogram(x, 0.1, "rect")
    assert np.sum(spec.psd) * spec.dfreq == pytest.approx(np.var(x), rel=1e-6)


def test_parseval_odd_length():
    x = np.random.default_rng(4).normal(size=2**14 + 1)
    spec = periodogram(x, 0.2, "rect")
    assert np.sum(spec.psd) * spec.dfreq == pytest.approx(np.var(x), rel=1e-6)


def test_flatness_scale_invariant():
    x = np.random.default_rng(5).normal(size=2**14)
    a = periodogram(x, 0.1).flatness()
    assert periodogram(1e6 * x, 0.1).flatness() == pytest.approx(a, rel=1e-9)
    assert 0.3 < a <= 1.0


def test_flatness_limits():
    assert spectral_flatness(np.ones(10)) == pytest.approx(1.0)
    assert spectral_flatness([5.0, 1.0, 0.0, 1.0]) == 0.0


def test_short_record_rejected():
    with pytest.raises(ParameterError):
        periodogram(np.ones(MIN_SAMPLES - 1), 0.1)
    with pytest.raises(ParameterError):
        power_spectrum(tone_trajectory(0.7, 0.05, 2**15), "p")


def test_nonuniform_record_rejected():
    t = tone_trajectory(0.7, 0.05, 2**15)
    t.tau[5] += 0.01
    with pytest.raises(ParameterError):
        power_spectrum(t)


def test_peaks_separate_tones():
    tau = 0.1 * np.arange(2**16)
    x = np.cos(0.5 * tau) + 0.3 * np.cos(1.1 * tau) + 0.1 * np.cos(2.0 * tau)
    # a noiseless record has a round-off median, so look only where the signal lives
    peaks = periodogram(x, 0.1).peaks(fmax=3.0)
    assert len(peaks) == 3
    assert peaks == pytest.approx([0.5, 1.1, 2.0], abs=2 * 2 * np.pi / (2**16 * 0.1))


def test_analysis_band(model18):
    band = analysis_band(model18)
    assert 2.0 < band < 4.0


# --- linear stability -----------------------------------------------------

def test_centres_without_damping(model18):
    b = solve_steady_states(model18)
    for branch in (b[0], b[2]):
        rep = linearize_fixed_point(branch, model18)
        assert np.max(np.abs(rep.eigenvalues.real)) <= 1e-10
        assert rep.classification == "marginal"
        assert branch.stable


def test_middle_branch_has_growing_mode(model18):
    rep = linearize_fixed_point(solve_steady_states(model18)[1], model18)
    assert rep.classification == "unstable"
    grow = rep.eigenvalues[np.argmax(rep.eigenvalues.real)]
    assert grow.real > 0 and abs(grow.imag) < 1e-12


def test_eigenpairs_residual(model18):
    m = model18.with_damping(0.1, 0.1)
    for b in solve_steady_states(m):
        rep = linearize_fixed_point(b, m)
        J = flow_jacobian(b.q_s, b.Q_s, m)
        for lam, v in zip(rep.eigenvalues, rep.eigenvectors.T):
            assert np.linalg.norm(J @ v - lam * v) <= 1e-10


def test_hamiltonian_eigenvalues_pair(model18):
    for b in solve_steady_states(model18):
        ev = linearize_fixed_point(b, model18).eigenvalues
        for lam in ev:
            assert np.min(np.abs(ev + lam)) <= 1e-10


def test_jacobian_matches_finite_differences(model18):
    from becmirror.dynamics import damped_rhs

    m = model18.with_damping(0.1, 0.2)
    rhs = damped_rhs(m)
    y = np.array([4.0, 0.1, -9.0, -0.3])
    h = 1e-6
    fd = np.column_stack([(np.array(rhs(0, y + h * e)) - np.array(rhs(0, y - h * e))) / (2 * h) for e in np.eye(4)])
    assert np.max(np.abs(flow_jacobian(y[0], y[2], m) - fd)) <= 1e-6


@pytest.mark.parametrize("gamma", [0.01, 0.1])
def test_bad_cavity_always_stable(model18, gamma):
    m = model18.with_damping(gamma, gamma)
    for r in np.linspace(0.0, 3.0, 121):
        for b in solve_steady_states(m, r):
            if b.stable:
                assert np.max(np.real(b.eigenvalues)) < 0


def test_non_fixed_point_rejected(model18):
    b = solve_steady_states(model18)[0]
    b = dataclasses.replace(b, q_s=b.q_s + 0.1)
    with pytest.raises(ParameterError):
        linearize_fixed_point(b, model18)


def test_classify_thresholds():
    assert classify(np.array([-1e-11, -1.0])) == "stable"
    assert classify(np.array([1e-11, -1.0])) == "unstable"
    assert classify(np.array([1e-13, -1.0])) == "marginal"


# --- Lyapunov -------------------------------------------------------------

def test_harmonic_exponent_vanishes(harmonic):
    s = sample_energy_shell(harmonic, 10.0, 1)
    assert lyapunov_largest(harmonic, s, 5000.0) <= 1e-4


def test_regular_orbit_at_low_energy(model18):
    s = sample_energy_shell(model18, 140.0, trajectory_seeds(1, 1)[0])
    lam = lyapunov_largest(model18, s, 5000.0)
    assert lam <= 1e-3
    assert classify_exponent(lam) == "regular"


@pytest.mark.parametrize("index", [12, 14, 15])
def test_chaotic_orbit_and_reversed_twin(model18, index):
    s = sample_energy_shell(model18, 170.0, trajectory_seeds(1, 24)[index])
    a = lyapunov_largest(model18, s, 5000.0)
    b = lyapunov_largest(model18, s.reversed(), 5000.0)
    assert a >= 1e-2 and classify_exponent(a) == "chaotic"
    assert 0.5 <= a / b <= 2.0


def test_estimate_converges_as_run_doubles(model18):
    s = sample_energy_shell(model18, 170.0, trajectory_seeds(1, 24)[15])
    a = lyapunov_largest(model18, s, 2500.0)
    b = lyapunov_largest(model18, s, 5000.0)
    assert b == pytest.approx(a, rel=0.3)


def test_series_and_errors(model18):
    lam, logs = lyapunov_largest(model18, ORIGIN, 20.0, return_series=True)
    assert len(logs) == 20
    assert lam == pytest.approx(np.sum(logs[10:]) / 10.0)
    with pytest.raises(ParameterError):
        lyapunov_largest(model18.with_damping(0.1, 0.1), ORIGIN, 100.0)
    with pytest.raises(ParameterError):
        lyapunov_largest(model18, ORIGIN, 100.0, renorm_interval=1.0005)
    assert classify_exponent(5e-3) == "undetermined"


def test_state_type_roundtrip():
    s = State(1.0, 2.0, 3.0, 4.0)
    assert s.reversed().reversed() == s
