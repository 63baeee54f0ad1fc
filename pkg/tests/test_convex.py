import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levybdg.convex import (
    ConvexFunction,
    c_star,
    check_identities,
    conjugate,
    growth_constant,
    power_phi,
)


def test_power_values():
    f = power_phi(2.0)
    assert f.value(3.0) == 9.0
    assert f.density(3.0) == 6.0
    g = power_phi(1.0)
    assert g.value(5.0) == 5.0
    assert g.density(5.0) == 1.0
    h = power_phi(1.5)
    assert h.value(4.0) == 8.0
    assert h.density(4.0) == 3.0


def test_power_rejects_p_below_one():
    with pytest.raises(ValueError):
        power_phi(0.8)


def test_conjugate_of_square():
    pair = conjugate(power_phi(2.0))
    assert pair.dual.kind == "power"
    assert pair.dual.p == 2.0
    assert pair.dual.scale == 0.25
    assert pair.dual.density(2.0) == 1.0  # psi(s) = s/2
    # Young gap at u=3, v=2: 9 + 1 - 6 = 4
    assert pair.primal.value(3.0) + pair.dual.value(2.0) - 6.0 == 4.0


def test_conjugate_of_linear_is_degenerate_flat():
    pair = conjugate(power_phi(1.0))
    # psi = 0 on [0, 1], represented as a clipped table
    assert pair.dual.kind == "table"
    assert pair.dual.t_end == 1.0
    for s in [0.0, 0.3, 0.7, 1.0]:
        assert pair.dual.density(s) == 0.0
        assert pair.dual.value(s) == 0.0
    assert np.isnan(pair.c_star_dual)


def test_conjugate_duality_on_grid_against_scan_oracle():
    # psi(s) = inf{t: phi(t) >= s} by dense scan of the primal density
    tab = ConvexFunction.table([0.0, 1.0, 4.0], [0.0, 1.0, 1.0])
    dual = conjugate(tab).dual
    ts = np.linspace(0.0, 4.0, 400001)
    phis = tab.density(ts)
    for s in [0.05, 0.2, 0.5, 0.77, 0.9, 1.0]:
        oracle = ts[np.argmax(phis >= s)]
        assert dual.density(s) == pytest.approx(oracle, abs=2e-5)


def test_conjugation_is_involutive_for_powers():
    for p in [1.3, 1.5, 1.7, 2.0]:
        f = power_phi(p)
        back = conjugate(conjugate(f).dual).dual
        grid = np.linspace(0.1, 8.0, 50)
        assert np.allclose(back.value(grid), f.value(grid), rtol=1e-10)


def test_conjugation_roundtrips_tables():
    tab = ConvexFunction.table([0.0, 1.0, 2.0, 4.0], [0.0, 0.5, 0.5, 3.0])
    back = conjugate(conjugate(tab).dual).dual
    grid = np.linspace(0.0, 4.0, 257)
    assert np.allclose(back.value(grid), tab.value(grid), atol=1e-12)


def test_growth_constant():
    assert growth_constant(power_phi(2.0), 4.0) == 4.0
    assert growth_constant(power_phi(1.0), 4.0) == 2.0


def test_growth_constant_tabulated_against_dense_oracle():
    # phi(t) = min(t, 1) on [0, 4]; oracle integrates the density on a
    # uniform grid and takes the ratio sup by brute force
    tab = ConvexFunction.table([0.0, 1.0, 4.0], [0.0, 1.0, 1.0])
    ts = np.linspace(0.0, 4.0, 10001)
    big_phi = np.concatenate(([0.0], np.cumsum(np.diff(ts) * 0.5 * (np.minimum(ts, 1)[1:] + np.minimum(ts, 1)[:-1]))))
    lam = ts[(ts > 0) & (2 * ts <= 4.0)]
    idx = np.searchsorted(ts, lam)
    idx2 = np.searchsorted(ts, 2 * lam)
    oracle = np.max(big_phi[idx2] / big_phi[idx])
    got = growth_constant(tab, 4.0)
    assert got == pytest.approx(4.0, abs=1e-9)
    assert got == pytest.approx(oracle, rel=1e-3)


def test_c_star():
    for p in [1.0, 1.5, 2.0]:
        assert c_star(power_phi(p), 10.0) == p
    # classical constant: C_Psi* = 2 for the conjugate of the square,
    # giving 4 (C_Psi* - 1) = 4
    pair = conjugate(power_phi(2.0))
    assert 4.0 * (pair.c_star_dual - 1.0) == 4.0


def test_c_star_tabulated_and_degenerate():
    tab = ConvexFunction.table([0.0, 1.0, 4.0], [0.0, 1.0, 1.0])
    assert c_star(tab, 4.0) == pytest.approx(2.0, abs=1e-6)
    flat = ConvexFunction.table([0.0, 1.0, 2.0], [0.0, 0.0, 1.0])
    with pytest.raises(ValueError, match="degenerate"):
        c_star(flat, 2.0)


def test_table_validation():
    with pytest.raises(ValueError, match="nondecreasing"):
        ConvexFunction.table([0.0, 1.0, 2.0], [0.0, 1.0, 0.5])
    with pytest.raises(ValueError, match="start at 0"):
        ConvexFunction.table([1.0, 2.0], [0.0, 1.0])


def test_check_identities_power_square():
    pair = conjugate(power_phi(2.0))
    rep = check_identities(pair, np.linspace(0.1, 5.0, 60))
    # u phi(u) = Phi(u) + Psi(phi(u)) is an identity here
    assert rep["density_product_identity"] <= 1e-8
    assert rep["young_gap"] <= 1e-10
    assert rep["unit_scaling"] <= 1e-10
    assert rep["unit_scaling_corrected_form"] is True
    # Phi(rt) <= r^2 Phi(t) holds with equality for the square
    assert rep["power_scaling"] <= 1e-9
    # Psi(t) <= (c*-1) Phi(psi(t)) with equality for the square
    assert rep["dual_domination"] <= 1e-10


def test_check_identities_example_points():
    pair = conjugate(power_phi(2.0))
    # u = 1: u phi(u) = 2 = Phi(1) + Psi(2) = 1 + 1
    assert 1.0 * pair.primal.density(1.0) == pair.primal.value(1.0) + pair.dual.value(2.0)
    # scaling at r = 3, t = 1: Phi(3) = 9 = 3^2 Phi(1)
    assert pair.primal.value(3.0) == 3.0 ** pair.c_star_primal * pair.primal.value(1.0)
    # dual bound at t = 2: Psi(2) = 1 = (2 - 1) Phi(psi(2)) = Phi(1)
    assert pair.dual.value(2.0) == (pair.c_star_primal - 1.0) * pair.primal.value(
        pair.dual.density(2.0)
    )


@settings(max_examples=40, deadline=None)
@given(
    p=st.floats(min_value=1.05, max_value=2.0),
    u=st.floats(min_value=1e-3, max_value=50.0),
    v=st.floats(min_value=1e-3, max_value=50.0),
)
def test_young_inequality_powers(p, u, v):
    pair = conjugate(power_phi(p))
    assert u * v <= pair.primal.value(u) + pair.dual.value(v) + 1e-10


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(min_value=0.0, max_value=3.0), min_size=3, max_size=8))
def test_young_inequality_tables(incs):
    # random nondecreasing density from nonnegative increments
    f = np.concatenate(([0.0], np.cumsum(incs)))
    t = np.linspace(0.0, 4.0, f.shape[0])
    tab = ConvexFunction.table(t, f)
    pair = conjugate(tab)
    us = np.linspace(0.0, 4.0, 21)
    vs = np.linspace(0.0, pair.dual.t_end, 21)
    gaps = pair.primal.value(us)[:, None] + pair.dual.value(vs)[None, :] - us[:, None] * vs[None, :]
    assert gaps.min() >= -1e-10


def test_config_roundtrip():
    f = power_phi(1.5)
    assert ConvexFunction.from_config(f.to_config()).p == 1.5
    tab = ConvexFunction.table([0.0, 1.0, 2.0], [0.0, 1.0, 3.0])
    back = ConvexFunction.from_config(tab.to_config())
    grid = np.linspace(0, 2, 33)
    assert np.array_equal(back.value(grid), tab.value(grid))


def test_t_dphi():
    # phi(t) = t: integral of t dt = x^2 / 2
    lin = ConvexFunction.table([0.0, 2.0], [0.0, 2.0])
    assert lin.t_dphi(1.0) == 0.5
    assert power_phi(2.0).t_dphi(3.0) == 9.0
    assert power_phi(1.0).t_dphi(7.0) == 0.0
    # density jump at t=1 of height 2 contributes 1 * 2
    jumpy = ConvexFunction.table([0.0, 1.0, 1.0, 2.0], [0.0, 0.0, 2.0, 2.0])
    assert jumpy.t_dphi(1.5) == 2.0
