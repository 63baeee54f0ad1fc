import numpy as np
import pytest

from levybdg.engine import IntegrandSpec
from levybdg.integrator import (
    StepIntegrand,
    integrate,
    jump_power_sum,
    nu_power_integral,
    sup_norm,
)
from levybdg.prm import MarkMeasure, PRMPath, jumps, sample_prm


def delta1():
    return MarkMeasure.from_atoms([[1.0]], [1.0])


def manual_path(times, marks, horizon=1.0):
    marks = (
        np.asarray(marks, dtype=np.float64).reshape(len(times), -1)
        if times
        else np.zeros((0, 1))
    )
    return PRMPath(
        horizon=horizon,
        times=np.asarray(times, dtype=np.float64),
        marks=marks,
        seed=0,
        index=0,
    )


def test_zero_integrand():
    path = manual_path([0.4], [[1.0]])
    ip = integrate(StepIntegrand.constant([0.0], [0.0, 1.0]), path, delta1())
    assert sup_norm(ip, 1.0, 2.0) == 0.0
    assert jumps(ip) == []


def test_compensated_poisson_hand_path():
    # single unit jump at t = 0.4 with unit compensator slope:
    # I(t) = N(t) - t
    path = manual_path([0.4], [[1.0]])
    xi = StepIntegrand.constant([1.0], [0.0, 1.0])
    ip = integrate(xi, path, delta1())
    assert ip.value(0.0)[0] == 0.0
    assert ip.value(0.3)[0] == pytest.approx(-0.3, abs=1e-15)
    assert ip.value(0.4)[0] == pytest.approx(0.6, abs=1e-15)
    assert ip.value(1.0)[0] == pytest.approx(0.0, abs=1e-15)
    assert sup_norm(ip, 1.0, 2.0) == pytest.approx(0.6, abs=1e-15)
    ev = jumps(ip)
    assert len(ev) == 1 and ev[0][0] == 0.4 and ev[0][1][0] == 1.0


def test_sup_monotone_in_time():
    nu = MarkMeasure.from_atoms([[1.0], [-0.5]], [1.0, 1.0])
    path = sample_prm(nu, 1.0, seed=3, index=5)
    ip = integrate(StepIntegrand.constant([1.0], [0.0, 1.0]), path, nu)
    sups = [sup_norm(ip, t, 2.0) for t in np.linspace(0.01, 1.0, 40)]
    assert all(b >= a - 1e-15 for a, b in zip(sups, sups[1:]))


def test_sup_dominates_dense_grid_eval():
    nu = MarkMeasure.from_atoms([[2.0], [-1.0]], [0.8, 1.2])
    path = sample_prm(nu, 1.0, seed=9, index=1)
    ip = integrate(StepIntegrand.constant([1.0], [0.0, 0.5, 1.0]), path, nu)
    sup = sup_norm(ip, 1.0, 2.0)
    dense = max(abs(ip.value(t)[0]) for t in np.linspace(0.0, 1.0, 20001))
    assert sup >= dense - 1e-12
    assert sup == pytest.approx(dense, abs=1e-3)


def test_jump_identity_cross_module():
    nu = MarkMeasure.from_atoms([[1.0], [2.0]], [1.0, 1.0])
    path = sample_prm(nu, 1.0, seed=21, index=0)
    xi = StepIntegrand.linear_in_mark([[0.5]], [0.0, 1.0])
    ip = integrate(xi, path, nu)
    ev = jumps(ip)
    assert len(ev) == path.count
    for (t, dz), tk, zk in zip(ev, path.times, path.marks):
        assert t == tk
        assert dz[0] == pytest.approx(0.5 * zk[0], abs=1e-15)


def test_jump_power_sum_examples():
    nu = delta1()
    assert jump_power_sum(
        StepIntegrand.constant([1.0], [0.0, 1.0]), manual_path([], []), 2.0, 1.0
    ) == 0.0
    p3 = manual_path([0.1, 0.5, 0.9], [[1.0], [1.0], [1.0]])
    xi = StepIntegrand.constant([1.0], [0.0, 1.0])
    assert jump_power_sum(xi, p3, 2.0, 1.0) == 3.0
    # consistency with the jumps of the integral path
    ip = integrate(xi, p3, nu)
    total = sum(abs(dz[0]) ** 2 for _, dz in jumps(ip))
    assert total == jump_power_sum(xi, p3, 2.0, 1.0)


def test_nu_power_integral_examples():
    nu = delta1()
    xi = StepIntegrand.constant([1.0], [0.0, 1.0])
    assert nu_power_integral(xi, nu, 2.0, 1.0) == 1.0
    xic = StepIntegrand.constant([3.0], [0.0, 1.0])
    assert nu_power_integral(xic, nu, 2.0, 1.0) == 9.0
    # two intervals with different values: hand sum
    two = StepIntegrand.matrices([[[2.0]], [[1.0]]], [0.0, 0.25, 1.0])
    want = 0.25 * 4.0 + 0.75 * 1.0
    assert nu_power_integral(two, nu, 2.0, 1.0) == pytest.approx(want, abs=1e-15)


def test_linearity_pathwise():
    nu = MarkMeasure.from_atoms([[1.0], [-1.0]], [1.0, 0.5])
    path = sample_prm(nu, 1.0, seed=33, index=4)
    a = integrate(StepIntegrand.constant([1.0], [0.0, 1.0]), path, nu)
    b = integrate(StepIntegrand.linear_in_mark([[1.0]], [0.0, 1.0]), path, nu)
    comb = integrate(
        StepIntegrand(
            np.array([0.0, 1.0]),
            lambda j, past: _SumMap(2.0, -3.0),
            1,
        ),
        path,
        nu,
    )
    grid = np.linspace(0, 1, 50)
    for t in grid:
        want = 2.0 * a.value(t)[0] - 3.0 * b.value(t)[0]
        assert comb.value(t)[0] == pytest.approx(want, abs=1e-12)


class _SumMap:
    def __init__(self, ca, cb):
        self.ca, self.cb = ca, cb

    def value(self, z):
        return np.atleast_1d(self.ca * 1.0 + self.cb * np.asarray(z))


def test_foreign_mark_rejected_with_location():
    nu = delta1()
    xi = StepIntegrand.from_table([{(1.0,): [1.0]}], [0.0, 1.0])
    bad = manual_path([0.5], [[2.0]])
    with pytest.raises(ValueError, match="outside integrand table"):
        integrate(xi, bad, nu)


def test_predictability_is_structural():
    # the builder only ever sees events up to the interval's left end
    seen = []

    def builder(j, past):
        seen.append((j, past.count, past.horizon))
        from levybdg.integrator import ConstantMap

        return ConstantMap([1.0])

    xi = StepIntegrand(np.array([0.0, 0.5, 1.0]), builder, 1)
    path = manual_path([0.25, 0.75], [[1.0], [1.0]])
    integrate(xi, path, delta1())
    assert seen[0] == (0, 0, 0.0)
    assert seen[1] == (1, 1, 0.5)


def test_adapted_threshold_switches_scale():
    nu = delta1()
    path = manual_path([0.1, 0.6], [[1.0], [1.0]])
    xi = StepIntegrand.adapted_threshold(1, 1.0, 2.0, [0.0, 0.5, 1.0], dmark=1)
    # first interval: no events yet -> scale 1; second: one event -> 2
    assert jump_power_sum(xi, path, 1.0, 1.0) == pytest.approx(1.0 + 2.0)


def test_integrand_spec_roundtrip_matches_engine_forms():
    spec = IntegrandSpec("adapted_threshold", threshold=2, lo=0.5, hi=1.5, n_intervals=4)
    xi = StepIntegrand.from_spec(spec, 1.0, dmark=1)
    assert xi.partition.shape[0] == 5
    spec2 = IntegrandSpec("matrix_per_interval", matrices=(((1.0,),), ((2.0,),)))
    xi2 = StepIntegrand.from_spec(spec2, 1.0)
    assert xi2.partition.shape[0] == 3


def test_integral_path_csv():
    path = manual_path([0.4], [[1.0]])
    ip = integrate(StepIntegrand.constant([1.0], [0.0, 1.0]), path, delta1())
    text = ip.to_csv()
    assert text.splitlines()[0] == "t,left_1,right_1"
    assert len(text.splitlines()) == 1 + ip.times.shape[0]


def test_table_per_interval_matches_engine():
    from levybdg.engine import compile_campaign, evaluate

    nu = MarkMeasure.from_atoms([[0.5], [2.0]], [1.0, 0.5])
    spec = IntegrandSpec(
        "table_per_interval", tables=(((1.0,), (0.0,)), ((0.5,), (2.0,)))
    )
    camp = compile_campaign(nu.atoms, nu.weights, 1.0, spec, s=2.0)
    st = evaluate(camp, seed=17, n_paths=40, exponents=[2.0])
    xi = StepIntegrand.from_spec(spec, 1.0, atoms=nu.atoms)
    for i in range(40):
        p = sample_prm(nu, 1.0, seed=17, index=i)
        ip = integrate(xi, p, nu)
        assert sup_norm(ip, 1.0, 2.0) == pytest.approx(st.sup[i], abs=1e-12)
        assert jump_power_sum(xi, p, 2.0, 1.0) == pytest.approx(
            st.jump_pows[i, 0], abs=1e-12
        )


def test_prm_path_csv():
    p = manual_path([0.2, 0.8], [[1.0], [2.0]])
    text = p.to_csv()
    lines = text.splitlines()
    assert lines[0] == "t,z_1"
    assert len(lines) == 3


def test_jump_power_sum_monotone_in_time():
    nu = MarkMeasure.from_atoms([[1.0], [0.5]], [2.0, 1.0])
    path = sample_prm(nu, 1.0, seed=44, index=0)
    xi = StepIntegrand.linear_in_mark([[1.0]], [0.0, 1.0])
    vals = [jump_power_sum(xi, path, 2.0, t) for t in np.linspace(0.05, 1.0, 20)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    nus = [nu_power_integral(xi, nu, 2.0, t) for t in np.linspace(0.05, 1.0, 20)]
    assert all(b >= a for a, b in zip(nus, nus[1:]))
