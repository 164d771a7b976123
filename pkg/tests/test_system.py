import math

import numpy as np
import pytest

from hessbif.core import LimitClass
from hessbif.errors import InvalidInputError, NumericalFailureError
from hessbif.shooting import ShootingConfig, first_eigenvalue
from hessbif.system import (
    NonlinearitySpec2,
    SystemSpec,
    check_monotonicity,
    fd_nondecreasing,
    integrate_system,
    power_pair_constant,
    solve_system_shooting,
    system_apriori_monitor,
    system_boundary_values,
    system_eigenvalue,
    trace_system_branch,
)

LAM_COS = 2.4674011002723395
FAST = ShootingConfig(grid_points=128)


def coupled(N, k, base, params=None, R=1.0):
    return SystemSpec(
        N=N, k=k, R=R,
        g=NonlinearitySpec2(f"{base}_t", dict(params or {})),
        h=NonlinearitySpec2(f"{base}_s", dict(params or {})),
    )


class TestNonlinearitySpec2:
    def test_zeros_on_coupling_axis(self):
        g = NonlinearitySpec2("saturating_t")
        assert g(5.0, 0.0) == 0.0
        assert g(0.0, 2.0) == pytest.approx(2.0 / 3.0)
        h = NonlinearitySpec2("saturating_s")
        assert h(0.0, 5.0) == 0.0
        assert h(2.0, 0.0) == pytest.approx(2.0 / 3.0)

    def test_declared_classes(self):
        g = NonlinearitySpec2("powermix_t")
        assert g.lim0.is_infinite and g.liminf.is_infinite
        g = NonlinearitySpec2("logbump_t")
        assert g.lim0.is_zero and g.liminf.is_zero
        g = NonlinearitySpec2("rational_t", {"b": 2.0})
        assert g.liminf == LimitClass.finite(2.0)

    def test_bad_kinds_rejected(self):
        with pytest.raises(InvalidInputError):
            NonlinearitySpec2("saturating")
        with pytest.raises(InvalidInputError):
            NonlinearitySpec2("unknown_t")
        with pytest.raises(InvalidInputError):
            NonlinearitySpec2("rational_t", {"b": -1.0})

    def test_system_spec_roles_enforced(self):
        with pytest.raises(InvalidInputError):
            SystemSpec(N=2, k=1, R=1.0, g=NonlinearitySpec2("linear_s"),
                       h=NonlinearitySpec2("linear_s"))

    def test_json_roundtrip(self):
        spec = coupled(2, 1, "rational", {"b": 2.0})
        again = SystemSpec.from_json(spec.to_json())
        assert again.g.kind == "rational_t"
        assert again.g(1.0, 1.0) == spec.g(1.0, 1.0)
        assert again.monotone_g_in_t and again.monotone_h_in_s


class TestIntegrateSystem:
    def test_lambda_zero_constant(self):
        pu, pv = integrate_system(coupled(2, 1, "linear"), 0.0, 1.0, 2.0, FAST)
        assert np.all(pu.u == -1.0)
        assert np.all(pv.u == -2.0)

    def test_symmetric_reduction_matches_scalar(self):
        # g(s,t)=t, h(s,t)=s with equal amplitudes: u == v == scalar profile
        pu, pv = integrate_system(coupled(1, 1, "linear"), 1.0, 1.0, 1.0, FAST)
        assert np.max(np.abs(pu.u - pv.u)) < 1e-10
        assert np.max(np.abs(pu.u + np.cos(pu.r))) < 1e-9

    def test_eigenvalue_boundary_zero(self):
        ru, rv = system_boundary_values(coupled(1, 1, "linear"), LAM_COS, 1.0, 1.0, FAST)
        assert abs(ru) < 1e-8 and abs(rv) < 1e-8

    def test_consistency_residuals_small(self):
        pu, pv = integrate_system(coupled(2, 1, "saturating"), 3.0, 1.0, 1.0,
                                  ShootingConfig(grid_points=1024))
        assert pu.max_consistency_residual < 1e-6
        assert pv.max_consistency_residual < 1e-6

    def test_invalid_amplitudes(self):
        with pytest.raises(InvalidInputError):
            integrate_system(coupled(2, 1, "linear"), 1.0, 0.0, 1.0, FAST)


class TestSolveSystemShooting:
    def test_symmetric_solution_found(self):
        point = solve_system_shooting(coupled(1, 1, "linear"), 1.0,
                                      (1.1 * LAM_COS, 0.8), FAST)
        assert point.lam == pytest.approx(LAM_COS, rel=1e-8)
        assert point.d_v == pytest.approx(1.0, rel=1e-8)
        assert abs(point.res_u) < 1e-9 and abs(point.res_v) < 1e-9
        assert point.admissible

    def test_rejects_bad_inputs(self):
        spec = coupled(1, 1, "linear")
        with pytest.raises(InvalidInputError):
            solve_system_shooting(spec, 0.0, (1.0, 1.0), FAST)
        with pytest.raises(InvalidInputError):
            solve_system_shooting(spec, 1.0, (-1.0, 1.0), FAST)

    def test_superlinear_small_amplitude_near_table_value(self):
        # mu = g0 = 1: branch emanates from lambda1 / mu
        spec = coupled(2, 1, "superlinear")
        lam1 = first_eigenvalue(2, 1, 1.0, FAST).lambda1
        point = solve_system_shooting(spec, 5e-4, (lam1, 5e-4), FAST)
        assert point.lam == pytest.approx(lam1, rel=1e-2)


class TestSystemEigenvalue:
    @pytest.mark.parametrize("N,k,expect", [(1, 1, LAM_COS), (3, 1, math.pi**2)])
    def test_analytic_cases(self, N, k, expect):
        assert system_eigenvalue(N, k, 1.0, FAST) == pytest.approx(expect, rel=1e-8)

    def test_coupled_equals_scalar(self):
        for N, k in ((2, 1), (2, 2), (3, 3)):
            lam0 = system_eigenvalue(N, k, 1.0, FAST)
            lam1 = first_eigenvalue(N, k, 1.0, FAST).lambda1
            assert abs(lam0 - lam1) <= 1e-8 * lam1


class TestPowerPair:
    def test_symmetric_pair_interval(self):
        res = power_pair_constant(1, 1, 1.0, 1.0, n_samples=8, cfg=FAST)
        assert res.constant == pytest.approx((math.pi / 2) ** 4, rel=1e-8)
        assert res.max_rel_deviation < 1e-6
        lams = [lam for lam, _ in res.samples]
        assert all(b < a for a, b in zip(lams, lams[1:]))  # lam falls as mu grows

    def test_asymmetric_pair_monge_ampere(self):
        res = power_pair_constant(2, 2, 4.0, 1.0, n_samples=8, cfg=FAST)
        assert res.max_rel_deviation < 1e-5
        # dual-resolution cross-check
        tight = ShootingConfig(grid_points=128, integrator_tol=1e-12, root_tol=1e-12)
        res2 = power_pair_constant(2, 2, 4.0, 1.0, n_samples=8, cfg=tight)
        assert res.constant == pytest.approx(res2.constant, rel=1e-8)

    def test_product_rule_enforced(self):
        with pytest.raises(InvalidInputError):
            power_pair_constant(2, 2, 3.0, 1.0, cfg=FAST)
        with pytest.raises(InvalidInputError):
            power_pair_constant(1, 1, -1.0, -1.0, cfg=FAST)


class TestMonotonicity:
    def test_linear_coupling(self):
        assert check_monotonicity(coupled(2, 1, "linear"), 3.0)

    def test_quadratic_hump_fails(self):
        assert not fd_nondecreasing(lambda s, t: t * (2.0 - t), "t", 3.0)

    def test_registry_pairs_monotone(self):
        for base, params in (("saturating", None), ("superlinear", None),
                             ("rational", {"b": 0.5}), ("rational", {"b": 2.0}),
                             ("powermix", None), ("logbump", None)):
            assert check_monotonicity(coupled(2, 1, base, params), 5.0), base


@pytest.fixture(scope="module")
def lam1():
    return first_eigenvalue(1, 1, 1.0, FAST).lambda1


class TestTraceSystemBranch:
    def test_symmetric_linear_flat(self, lam1):
        spec = coupled(1, 1, "linear")
        sb = trace_system_branch(spec, np.geomspace(1e-2, 1e2, 16), FAST,
                                 lambda_scale=lam1)
        lams = sb.branch.lam_values()
        assert max(abs(l - lam1) for l in lams) < 1e-6
        assert sb.branch.folds == []
        for p in sb.points:
            assert p.d_v == pytest.approx(p.d_u, rel=1e-8)
            assert p.admissible

    def test_saturating_asymptote(self, lam1):
        spec = coupled(1, 1, "saturating")
        sb = trace_system_branch(spec, np.geomspace(1e-2, 1e2, 16), FAST,
                                 lambda_scale=lam1)
        assert sb.branch.lambda_at_zero.kind == "finite"
        assert sb.branch.lambda_at_zero.value == pytest.approx(lam1, rel=1e-3)
        assert sb.branch.lambda_at_infinity.kind == "infinite"

    def test_powermix_single_max_and_monitor(self, lam1):
        spec = coupled(1, 1, "powermix")
        sb = trace_system_branch(spec, np.geomspace(1e-2, 1e2, 16), FAST,
                                 lambda_scale=lam1)
        assert [f.kind for f in sb.branch.folds] == ["max"]
        rep = system_apriori_monitor(sb, spec, lam1, FAST)
        assert rep.passed
        assert any("superlinear norm bound" in c.name for c in rep.checks)

    def test_sublinear_monitor_uniform_bound(self, lam1):
        spec = coupled(1, 1, "saturating")
        sb = trace_system_branch(spec, np.geomspace(1e-2, 1e2, 16), FAST,
                                 lambda_scale=lam1)
        rep = system_apriori_monitor(sb, spec, lam1, FAST)
        assert rep.passed
        assert any("uniform norm bound" in c.name for c in rep.checks)

    def test_linear_monitor_vacuous(self, lam1):
        spec = coupled(1, 1, "linear")
        sb = trace_system_branch(spec, np.geomspace(1e-2, 1e2, 16), FAST,
                                 lambda_scale=lam1)
        rep = system_apriori_monitor(sb, spec, lam1, FAST)
        assert rep.passed
        assert any("vacuous" in n for n in rep.notes)

    def test_csv_format(self, tmp_path, lam1):
        spec = coupled(1, 1, "linear")
        sb = trace_system_branch(spec, np.geomspace(1e-2, 1e2, 16), FAST,
                                 lambda_scale=lam1)
        path = tmp_path / "system.csv"
        sb.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "index,d_u,d_v,lambda,res_u,res_v,is_fold"
        assert len(lines) == len(sb.points) + 1
        cells = lines[1].split(",")
        assert len(cells) == 7


class TestProfileInvariants:
    def test_accepted_points_nonpositive_and_peaked_at_origin(self):
        spec = coupled(2, 1, "saturating")
        lam1 = first_eigenvalue(2, 1, 1.0, FAST).lambda1
        point = solve_system_shooting(spec, 1.0, (2.0 * lam1, 1.0), FAST)
        pu, pv = integrate_system(spec, point.lam, point.d_u, point.d_v, FAST)
        for prof, d in ((pu, point.d_u), (pv, point.d_v)):
            assert prof.u[0] == -d
            assert np.all(prof.u <= 1e-8)
            assert np.max(np.abs(prof.u)) == pytest.approx(d)
            assert np.all(np.diff(prof.u) >= -1e-15)
