import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levybdg.prm import (
    LevyTriplet,
    MarkMeasure,
    analytic_cf,
    cf_check,
    jumps,
    levy_path,
    poisson_central_moment,
    poisson_lemma_grid,
    sample_prm,
    truncate,
)


def delta1():
    return MarkMeasure.from_atoms([[1.0]], [1.0])


# -- measures and truncation ------------------------------------------


def test_truncate_identity_and_filter():
    nu = MarkMeasure.from_atoms([[0.1], [1.0], [2.0]], [5.0, 1.0, 1.0])
    assert truncate(nu, 0.0) is nu
    cut = truncate(nu, 0.5)
    assert cut.total_mass == 2.0
    assert cut.atoms.shape[0] == 2


def test_truncate_geometric_mass_recovers():
    ks = np.arange(12)
    nu = MarkMeasure.from_atoms(2.0 ** -ks[:, None], np.full(12, 0.5))
    masses = [truncate(nu, e).total_mass for e in [1.0, 0.25, 0.03, 0.001, 0.0]]
    assert masses == sorted(masses)
    assert masses[-1] == nu.total_mass


def test_truncate_density_measures():
    uni = MarkMeasure.uniform_density(0.0, 2.0, mass=4.0)
    cut = truncate(uni, 1.0)
    assert cut.mass == 2.0
    expo = MarkMeasure.exponential_density(scale=1.0, mass=1.0)
    cute = truncate(expo, 1.0)
    assert cute.mass == pytest.approx(np.exp(-1.0))
    assert cute.shift == 1.0


def test_measure_validation():
    with pytest.raises(ValueError, match="positive"):
        MarkMeasure.from_atoms([[1.0]], [0.0])
    with pytest.raises(ValueError, match="mismatch"):
        MarkMeasure.from_atoms([[1.0], [2.0]], [1.0])


# -- sampling -----------------------------------------------------------


def test_empty_measure_gives_empty_path():
    nu = MarkMeasure.from_atoms(np.zeros((0, 1)), np.zeros(0))
    path = sample_prm(nu, 1.0, seed=1)
    assert path.count == 0


def test_sampling_deterministic_byte_for_byte():
    nu = MarkMeasure.from_atoms([[1.0], [2.0]], [1.5, 0.5])
    a = sample_prm(nu, 2.0, seed=99, index=7)
    b = sample_prm(nu, 2.0, seed=99, index=7)
    assert np.array_equal(a.times, b.times)
    assert np.array_equal(a.marks, b.marks)
    c = sample_prm(nu, 2.0, seed=99, index=8)
    assert not (a.count == c.count and np.array_equal(a.times, c.times))


def test_times_strictly_increasing_and_in_range():
    nu = MarkMeasure.from_atoms([[1.0]], [30.0])
    for i in range(30):
        p = sample_prm(nu, 1.0, seed=5, index=i)
        if p.count:
            assert (np.diff(p.times) > 0).all()
            assert p.times[0] > 0.0 and p.times[-1] <= 1.0


def test_count_distribution_mean_and_variance():
    nu = delta1()
    n = 100_000
    from levybdg import engine

    counts, _, _, _ = engine.sample_batch(3, 0, n, nu.mass, 1.0, np.array([1.0]))
    mean = counts.mean()
    var = counts.var(ddof=1)
    se_mean = counts.std(ddof=1) / np.sqrt(n)
    assert abs(mean - 1.0) <= 3 * se_mean
    m4 = np.mean((counts - mean) ** 4)
    se_var = np.sqrt((m4 - var**2) / n)
    assert abs(var - 1.0) <= 3 * se_var


def test_disjoint_intervals_uncorrelated():
    nu = delta1()
    n = 100_000
    lo = np.zeros(n)
    hi = np.zeros(n)
    for i in range(0, n, 1 << 14):
        m = min(1 << 14, n - i)
        from levybdg import engine

        counts, offs, times, _ = engine.sample_batch(17, i, m, 1.0, 1.0, np.array([1.0]))
        pid = np.repeat(np.arange(m), counts)
        np.add.at(lo[i : i + m], pid[times <= 0.5], 1.0)
        np.add.at(hi[i : i + m], pid[times > 0.5], 1.0)
    corr = np.corrcoef(lo, hi)[0, 1]
    assert abs(corr) <= 3.0 / np.sqrt(n)
    # each half carries rate mass/2
    assert abs(lo.mean() - 0.5) <= 3 * lo.std(ddof=1) / np.sqrt(n)


def test_mark_frequencies_follow_weights():
    nu = MarkMeasure.from_atoms([[1.0], [2.0], [3.0]], [1.0, 0.5, 0.25])
    from levybdg import engine

    counts, _, _, aidx = engine.sample_batch(
        23, 0, 50_000, nu.mass, 1.0, engine.weight_cdf(nu.weights)
    )
    freqs = np.bincount(aidx, minlength=3) / aidx.shape[0]
    probs = nu.weights / nu.mass
    for f, q in zip(freqs, probs):
        assert abs(f - q) <= 4 * np.sqrt(q * (1 - q) / aidx.shape[0])


# -- Levy paths -----------------------------------------------------------


def test_levy_path_pure_drift():
    nu = MarkMeasure.from_atoms(np.zeros((0, 1)), np.zeros(0))
    trip = LevyTriplet.build([1.0], nu)
    L = levy_path(trip, 1.0, seed=4)
    assert L.value(0.5) == pytest.approx(0.5)
    assert jumps(L) == []


def test_levy_path_mean_increment():
    trip = LevyTriplet.build([0.0], delta1())
    n = 20_000
    vals = np.array([levy_path(trip, 1.0, seed=31, index=i).value(1.0)[0] for i in range(n)])
    se = vals.std(ddof=1) / np.sqrt(n)
    assert abs(vals.mean() - 1.0) <= 3 * se


def test_levy_path_jump_roundtrip():
    trip = LevyTriplet.build([0.5], MarkMeasure.from_atoms([[1.0], [-2.0]], [2.0, 1.0]))
    L = levy_path(trip, 1.0, seed=8, index=2)
    ev = jumps(L)
    assert len(ev) == L.events.count
    for (t, dz), (te, ze) in zip(ev, zip(L.events.times, L.events.marks)):
        assert t == te
        assert np.array_equal(dz, ze)


def test_density_sampling_uniform_range():
    nu = MarkMeasure.uniform_density(0.5, 1.5, mass=3.0)
    p = sample_prm(nu, 1.0, seed=12)
    if p.count:
        assert (p.marks >= 0.5).all() and (p.marks <= 1.5).all()


# -- Poisson moment lemma ---------------------------------------------------


def test_poisson_moment_p2_is_variance():
    for lam in [0.25, 1.0, 4.0, 8.0]:
        assert poisson_central_moment(lam, 2.0) == pytest.approx(lam, abs=1e-9)


def test_poisson_moment_p1_closed_form():
    # E|X - lam| = 2 lam^(floor(lam)+1) e^(-lam) / floor(lam)! ; for
    # lam = 0.5 this is e^(-1/2)
    assert poisson_central_moment(0.5, 1.0) == pytest.approx(np.exp(-0.5), abs=1e-12)


def test_poisson_moment_bound_p15():
    val = poisson_central_moment(4.0, 1.5)
    assert val <= 2.0**0.5 * 4.0


@settings(max_examples=40, deadline=None)
@given(
    lam=st.floats(min_value=0.05, max_value=30.0),
    p=st.floats(min_value=1.0, max_value=2.0),
)
def test_poisson_moment_bound_property(lam, p):
    assert poisson_central_moment(lam, p) <= 2.0 ** (2.0 - p) * lam * (1 + 1e-12)


def test_poisson_lemma_grid():
    rep = poisson_lemma_grid([0.25, 0.5, 1, 2, 4, 8], [1, 1.25, 1.5, 1.75, 2])
    assert rep["pass"]
    assert rep["equality_error_p2"] <= 1e-9


# -- characteristic function -----------------------------------------------


def test_cf_theta_zero_is_one():
    trip = LevyTriplet.build([0.0], delta1())
    rep = cf_check(trip, 1.0, np.array([[0.0]]), 2000, seed=3)
    assert rep["empirical"][0] == pytest.approx(1.0 + 0.0j, abs=1e-12)
    assert rep["analytic"][0] == pytest.approx(1.0 + 0.0j, abs=1e-12)


def test_cf_pure_drift_unit_modulus():
    nu = MarkMeasure.from_atoms(np.zeros((0, 1)), np.zeros(0))
    trip = LevyTriplet.build([1.0], nu)
    thetas = np.linspace(-2, 2, 9)[:, None]
    rep = cf_check(trip, 1.0, thetas, 500, seed=3)
    assert np.allclose(np.abs(rep["empirical"]), 1.0, atol=1e-12)
    assert np.allclose(rep["empirical"], np.exp(1j * thetas[:, 0]), atol=1e-12)


def test_cf_compound_poisson_matches_analytic():
    trip = LevyTriplet.build([0.0], delta1())
    thetas = np.linspace(-np.pi, np.pi, 16)[:, None]
    rep = cf_check(trip, 1.0, thetas, 30_000, seed=14)
    expected = np.exp(np.exp(1j * thetas[:, 0]) - 1.0)
    assert np.allclose(rep["analytic"], expected, atol=1e-14)
    assert rep["sup_error"] <= rep["bound"]


def test_cf_density_uniform_analytic():
    nu = MarkMeasure.uniform_density(0.0, 1.0, mass=2.0)
    trip = LevyTriplet.build([0.0], nu)
    th = np.array([[1.3]])
    got = analytic_cf(trip, 1.0, th)[0]
    want = np.exp(2.0 * ((np.exp(1.3j) - 1.0) / 1.3j - 1.0))
    assert got == pytest.approx(want, abs=1e-12)
