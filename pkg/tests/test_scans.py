import math

import mpmath as mp
import numpy as np
import pytest

from diracdot import core, scans
from diracdot.core import Branch, Classification, DelayCurve, DotParams, StateKind
from diracdot.errors import DomainError, EvaluationError, UnmatchedResonance

import oracle


def oracle_critical_p(ell, mu, guess):
    with mp.workdps(30):
        def f(p):
            return ell * (mu + mp.sqrt(mu * mu + p * p)) * mp.besselj(ell, p) - mu * p * mp.besselj(ell + 1, p)

        return float(mp.findroot(f, guess))


@pytest.fixture(scope="module")
def spectrum_l2():
    return scans.bound_spectrum(2.0, 2, -14.0, -0.1, 140)


# ---------------------------------------------------------------------------
# helpers


@pytest.mark.parametrize("x, want", [(-2.755813, -2.75), (-5.864808, -5.86), (-8.998279, -8.99), (-5.135622, -5.13),
                                     (-2.40, -2.40), (-7.0, -7.0), (1.239, 1.23)])
def test_two_decimals_truncates(x, want):
    assert scans.two_decimals(x) == want


def test_depth_grid():
    g = scans.depth_grid(-1.0, -14.0)
    assert len(g) == 261 and g[0] == -1.0 and g[-1] == -14.0
    assert np.allclose(np.diff(g), -0.05)


# ---------------------------------------------------------------------------
# capture depths


def test_capture_depths_massive_against_oracle():
    depths = scans.capture_depths(2.0, 2, 3)
    assert [d.v for d in depths] == sorted((d.v for d in depths), reverse=True)
    crit = [d for d in depths if d.kind is StateKind.CRITICAL]
    sup = [d for d in depths if d.kind is StateKind.SUPERCRITICAL]
    assert len(crit) == 3 and len(sup) == 3
    for d in crit:
        p = oracle_critical_p(2, 2.0, d.p_inner)
        assert abs(d.p_inner - p) < 1e-10
        assert d.residual <= 1e-9
    for k, d in enumerate(sup, 1):
        j = oracle.j_zero(2, k)
        assert abs(d.v - (-2 - math.sqrt(4 + j * j))) < 1e-10


def test_capture_depths_l0_starts_at_zero():
    depths = scans.capture_depths(2.0, 0, 2)
    crit = [d.v for d in depths if d.kind is StateKind.CRITICAL]
    assert crit[0] == 0.0
    assert crit[1] == pytest.approx(2 - math.sqrt(4 + oracle.j_zero(1, 1) ** 2), abs=1e-10)


def test_capture_depths_massless():
    depths = scans.capture_depths(0.0, 0, 2)
    assert scans.two_decimals(depths[0].v) == -2.40
    assert abs(depths[0].v + oracle.j_zero(0, 1)) < 1e-10
    assert all(d.kind is StateKind.MASSLESS_BOUND for d in depths)


@pytest.mark.parametrize("ell", [0, 1, 2, 5])
def test_massless_symmetry(ell):
    a = scans.capture_depths(0.0, ell, 4)
    b = scans.capture_depths(0.0, -ell - 1, 4)
    assert np.allclose([d.v for d in a], [d.v for d in b], rtol=0, atol=1e-10)


def test_capture_depths_errors():
    with pytest.raises(DomainError):
        scans.capture_depths(2.0, 2, 0)
    with pytest.raises(DomainError):
        scans.capture_depths(2.0, -1, 2)


# ---------------------------------------------------------------------------
# bound spectrum


def test_spectrum_residuals_and_monotone(spectrum_l2):
    p_check = []
    for br in spectrum_l2.branches:
        assert np.all(br.residual <= 1e-9)
        if len(br.v) > 1:
            # levels drop as the well deepens: eps non-decreasing in v
            assert np.all(np.diff(br.eps) / np.diff(br.v) >= 0)
        k = len(br.v) // 2
        p_check.append(core.relative_residual(DotParams(2.0, br.v[k], 2), br.eps[k], Branch.BOUND_SEARCH))
    assert max(p_check) <= 1e-9
    assert spectrum_l2.coexisting() <= 2
    assert not spectrum_l2.gaps


def test_spectrum_branches_appear_at_critical_depths(spectrum_l2):
    first = min(-br.v.max() for br in spectrum_l2.branches)
    assert max(br.v.max() for br in spectrum_l2.branches) < -2.75
    assert first == pytest.approx(2.75581, abs=0.1)
    assert spectrum_l2.critical_depths[0] == pytest.approx(-2.755813002627, abs=1e-9)


def test_spectrum_branches_end_at_supercritical_depths(spectrum_l2):
    sup = spectrum_l2.supercritical_depths
    assert len(sup) == 3
    for k, depth in enumerate(sup, 1):
        j = oracle.j_zero(2, k)
        assert depth == pytest.approx(-2 - math.sqrt(4 + j * j), abs=1e-10)
        # some branch ends within one grid step of the depth, close to eps = -2
        ends = [(br.v[0], br.eps[0]) for br in spectrum_l2.branches]
        v_end, e_end = min(ends, key=lambda t: abs(t[0] - depth))
        assert abs(v_end - depth) < 0.11 and e_end < -1.9


def test_spectrum_preconditions():
    with pytest.raises(DomainError):
        scans.bound_spectrum(0.0, 2, -5, -1, 20)
    with pytest.raises(DomainError):
        scans.bound_spectrum(2.0, 2, -1, -5, 20)
    with pytest.raises(DomainError):
        scans.bound_spectrum(2.0, 2, -5, -1, 5)


def test_spectrum_records_gaps(monkeypatch):
    real = core.bound_residual

    def flaky(params, eps):
        if abs(params.v + 4.0) < 1e-9:
            raise EvaluationError("synthetic failure")
        return real(params, eps)

    monkeypatch.setattr(core, "bound_residual", flaky)
    result = scans.bound_spectrum(2.0, 2, -5.0, -3.0, 21)
    assert [v for v, _ in result.gaps] == [-4.0]
    assert all(-4.0 not in br.v for br in result.branches)


def test_bound_states_window():
    levels = scans.bound_states(DotParams(2.0, -4.0, 2))
    assert len(levels) == 1 and -2 < levels[0] < 2
    with pytest.raises(DomainError):
        scans.bound_states(DotParams(0.0, -4.0, 2))


# ---------------------------------------------------------------------------
# resonances


def test_find_resonances_known_values():
    found = scans.find_resonances(DotParams(2.0, -1.0, 2))
    assert [p.eps.real for p in found] == sorted(p.eps.real for p in found)
    lead = scans.leading_resonance(found)
    assert abs(lead.eps - (2.9194979 - 0.6204734j)) < 1e-6
    assert all(p.residual <= 1e-9 for p in found)
    left = scans.find_resonances(DotParams(2.0, -14.0, 2))
    assert any(abs(p.eps - (-8.23537 + 0.395326j)) < 1e-5 for p in left)
    assert any(p.classification is Classification.BOUND for p in left)


def test_find_resonances_massless():
    found = scans.find_resonances(DotParams(0.0, -4.0, 2), im_range=(-3.0, 0.0))
    lead = scans.leading_resonance(found)
    assert abs(lead.eps - (0.86735913 - 0.00870032j)) < 1e-7
    assert all(p.eps.imag <= 0 for p in found)


def test_leading_widths_massive_same_order():
    l2 = scans.leading_resonance(scans.find_resonances(DotParams(2.0, -2.0, 2)))
    l0 = scans.leading_resonance(scans.find_resonances(DotParams(2.0, -2.0, 0)))
    ratio = abs(l0.eps.imag) / abs(l2.eps.imag)
    assert 1 < ratio < 10


@pytest.mark.parametrize("v", [-4.0, -6.0])
def test_leading_widths_massless_order_of_magnitude(v):
    l2 = scans.leading_resonance(scans.find_resonances(DotParams(0.0, v, 2), im_range=(-3.0, 0.0)))
    l0 = scans.leading_resonance(scans.find_resonances(DotParams(0.0, v, 0), im_range=(-3.0, 0.0)))
    assert abs(l0.eps.imag) / abs(l2.eps.imag) > 5


def test_polish_resonance_rejects_garbage():
    assert scans.polish_resonance(DotParams(2.0, -1.0, 2), 2.9 - 0.6j).classification is Classification.RESONANCE
    assert scans.leading_resonance([]) is None


# ---------------------------------------------------------------------------
# trajectories


@pytest.fixture(scope="module")
def track_l2():
    return scans.track_resonance(2.0, 2, scans.depth_grid(-1.0, -14.0), 2.9194979 - 0.6204734j)


def test_trajectory_events(track_l2):
    t = track_l2
    assert not t.lost and len(t.points) == 261
    kinds = [e.kind for e in t.capture_events]
    assert kinds == [StateKind.CRITICAL, StateKind.SUPERCRITICAL]
    crit, sup = t.capture_events
    assert crit.v == pytest.approx(-2.755813002627, abs=1e-9) and crit.v_grid == -2.75
    j = oracle.j_zero(2, 1)
    assert sup.v == pytest.approx(-2 - math.sqrt(4 + j * j), abs=1e-9) and sup.v_grid == -7.5
    # the state sits on the threshold at the event depth
    assert abs(core.critical_residual(2, 2.0, math.sqrt(crit.v ** 2 - 4 * crit.v))) < 1e-12
    assert abs(oracle.j(2, math.sqrt(sup.v ** 2 + 4 * sup.v))) < 1e-12


def test_trajectory_points(track_l2):
    t = track_l2
    assert [p.param_value for p in t.points] == list(scans.depth_grid(-1.0, -14.0))
    assert all(p.residual <= 1e-9 for p in t.points)
    steps = [abs(b.root - a.root) for a, b in zip(t.points, t.points[1:])]
    assert max(steps) < 0.5
    assert abs(t.points[-1].root - (-8.23537 + 0.395326j)) < 1e-5
    classes = [c.value for c in t.classifications]
    first_bound, last_bound = classes.index("Bound"), len(classes) - 1 - classes[::-1].index("Bound")
    assert t.points[first_bound].param_value == pytest.approx(-2.8)
    assert t.points[last_bound].param_value == pytest.approx(-7.5)
    for p, c in zip(t.points, t.classifications):
        if c is Classification.BOUND:
            assert p.root.imag == 0 and -2 < p.root.real < 2


def test_massless_trajectory_crosses_zero():
    t = scans.track_resonance(0.0, 2, scans.depth_grid(-4.0, -6.0), 0.86735913 - 0.00870032j)
    assert not t.lost
    (event,) = t.capture_events
    assert event.kind is StateKind.MASSLESS_BOUND
    assert event.v == pytest.approx(-oracle.j_zero(2, 1), abs=1e-10)
    assert scans.two_decimals(event.v) == -5.13


def test_trajectories_conserve_count():
    seeds = [2.9194979 - 0.6204734j, 6.14 - 1.65j]
    found = scans.find_resonances(DotParams(2.0, -1.0, 2), re_range=(0.0, 10.0), im_range=(-3.0, 0.0))
    seeds[1] = min((p.eps for p in found), key=lambda z: abs(z - seeds[1]))
    grid = scans.depth_grid(-1.0, -3.0)
    out = scans.resonance_trajectories(2.0, 2, grid, seeds)
    assert len(out) == 2
    for t in out:
        assert not t.lost and len(t.points) == len(grid)
    assert abs(out[0].points[-1].root - out[1].points[-1].root) > 0.1


def test_lost_track_is_recorded():
    t = scans.track_resonance(2.0, 2, scans.depth_grid(-1.0, -2.0), 40 + 40j)
    assert t.lost and t.message


# ---------------------------------------------------------------------------
# delay curves


def test_delay_scan_defaults_and_flags():
    c = scans.delay_scan(0.0, 2, -4.0, 0.01, 6.0)
    assert len(c.energies) == 800 and c.flagged == ()
    k = scans.delay_maxima(c)
    assert c.energies[k[np.argmax(c.delay[k])]] == pytest.approx(0.8646, abs=1e-3)


def test_delay_zero_without_well():
    for mu, lo in ((2.0, 2.01), (0.0, 0.01)):
        c = scans.delay_scan(mu, 1, 0.0, lo, 10.0)
        assert np.max(np.abs(c.delay)) < 1e-10


def test_delay_single_sharp_maximum_before_capture():
    c = scans.delay_scan(2.0, 2, -2.0, 2.001, 10.0)
    k = scans.delay_maxima(c)
    top = k[np.argmax(c.delay[k])]
    assert 2.0 < c.energies[top] < 2.6
    others = np.delete(c.delay[k], np.argmax(c.delay[k]))
    assert np.all(others < 0.1 * c.delay[top])


def test_massless_phase_starts_at_pi():
    c = scans.delay_scan(0.0, 2, -5.13, 0.001, 6.0)
    assert c.unwrapped_phase[0] == pytest.approx(math.pi, abs=1e-3)
    c = scans.delay_scan(0.0, 2, -4.0, 0.001, 6.0)
    assert c.unwrapped_phase[0] == pytest.approx(0.0, abs=1e-3)


def test_phase_anchor_independent_of_grid_top():
    a = scans.delay_scan(2.0, 2, -3.5, 2.01, 10.0)
    b = scans.delay_scan(2.0, 2, -3.5, 2.01, 2.5, steps=200)
    assert a.unwrapped_phase[0] == pytest.approx(b.unwrapped_phase[0], abs=1e-12)


def test_levinson_jump():
    lo = scans.delay_scan(2.0, 2, -2.0, 2.01, 10.0).unwrapped_phase[0]
    hi = scans.delay_scan(2.0, 2, -3.5, 2.01, 10.0).unwrapped_phase[0]
    assert hi - lo == pytest.approx(math.pi, abs=0.05)


def test_delay_preconditions():
    with pytest.raises(DomainError):
        scans.delay_scan(2.0, 2, -2.0, 1.0, 10.0)
    with pytest.raises(DomainError):
        scans.delay_scan(0.0, 2, -2.0, 0.0, 10.0)
    with pytest.raises(DomainError):
        scans.delay_scan(2.0, 2, -2.0, 3.0, 10.0, steps=50)


def test_indeterminate_points_are_interpolated(monkeypatch):
    real = core._phase_terms

    def patched(params, e):
        num, den = real(params, e)
        hit = np.abs(e - 5.0) < 1e-9
        return np.where(hit, 0.0, num), np.where(hit, 0.0, den)

    monkeypatch.setattr(core, "_phase_terms", patched)
    c = scans.delay_scan(2.0, 2, -3.5, 2.5, 7.5, steps=101)
    assert c.flagged == (50,)
    assert c.raw_phase[50] == pytest.approx(0.5 * (c.raw_phase[49] + c.raw_phase[51]))


# ---------------------------------------------------------------------------
# consistency


def _report(mu, ell, v, lo, hi):
    c = scans.delay_scan(mu, ell, v, lo, hi)
    return scans.consistency_report(mu, ell, v, scans.resonances_for_curve(DotParams(mu, v, ell), c), c)


def test_consistency_rows_sorted_and_paired():
    r = _report(0.0, 2, -4.0, 0.01, 6.0)
    assert [row.eps_R for row in r.rows] == sorted(row.eps_R for row in r.rows)
    lead = min(r.rows, key=lambda row: abs(row.eps_I))
    assert lead.gap <= max(0.05, 2 * abs(lead.eps_I))
    for row in r.rows:
        assert row.gap == pytest.approx(abs(row.eps_R - row.delay_peak_eps))


def test_consistency_massive_l2_better_than_l0():
    def broad_gap(ell):
        rows = _report(2.0, ell, -2.75, 2.001, 10.0).rows
        return min((row for row in rows if row.eps_I < -0.5), key=lambda row: row.eps_R).gap

    assert broad_gap(2) < 0.05
    assert broad_gap(0) > broad_gap(2)


def test_consistency_empty_and_unmatched():
    c = scans.delay_scan(2.0, 2, -2.0, 2.001, 10.0)
    assert scans.consistency_report(2.0, 2, -2.0, [], c).rows == []
    e = np.linspace(3.0, 4.0, 101)
    flat = DelayCurve(e, np.zeros_like(e), -0.1 * e, -0.2 * np.ones_like(e))
    res = core.ResonancePoint(-2.0, 3.5 - 0.1j, 0.0, Classification.RESONANCE)
    with pytest.raises(UnmatchedResonance):
        scans.consistency_report(2.0, 2, -2.0, [res], flat)
    outside = core.ResonancePoint(-2.0, 9.5 - 0.1j, 0.0, Classification.RESONANCE)
    assert scans.consistency_report(2.0, 2, -2.0, [outside], flat).rows == []


# ---------------------------------------------------------------------------
# spinor profiles


def test_spinor_profile_defaults():
    prof = scans.spinor_profile(DotParams(2.0, -4.0, 2), None, "Bound", np.linspace(0.1, 3.0, 30))
    assert prof.eps.real == pytest.approx(scans.bound_states(DotParams(2.0, -4.0, 2))[-1])
    assert len(prof.points) == 30
    j = oracle.j_zero(2, 1)
    prof = scans.spinor_profile(DotParams(0.0, -j, 2), None, "MasslessBound", [0.5, 2.0])
    assert prof.eps == 0
    with pytest.raises(DomainError):
        scans.spinor_profile(DotParams(2.0, -1.0, 2), None, "Bound", [0.5])
