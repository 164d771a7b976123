import math

import numpy as np
import pytest

from hessbif.core import NonlinearitySpec, ProblemSpec
from hessbif.errors import InvalidInputError
from hessbif.shooting import (
    ShootingConfig,
    boundary_residual,
    first_eigenvalue,
    integrate_profile,
    profile_admissible,
    self_consistency_residual,
    shoot_boundary_value,
    solve_lambda,
)

from _oracles import eigen_value

LAM_COS = (math.pi / 2) ** 2        # 2.4674011002723395, interval eigenvalue
LAM_SINC = math.pi**2               # 9.869604401089358, 3-ball eigenvalue
J0SQ = 5.78318596294678             # squared first zero of J_0, disk eigenvalue


def linear_spec(N, k, R=1.0):
    return ProblemSpec(N=N, k=k, R=R, f=NonlinearitySpec("linear"))


class TestIntegrateProfile:
    def test_lambda_zero_constant(self):
        prof = integrate_profile(linear_spec(2, 1), 0.0, 1.0)
        assert np.all(prof.u == -1.0)
        assert np.all(prof.uprime == 0.0)
        assert prof.boundary_value == -1.0
        assert prof.max_consistency_residual == 0.0

    def test_cosine_case(self):
        # N=1, k=1, f(s)=s, lambda=1: u'' = -u, u = -cos(r)
        prof = integrate_profile(linear_spec(1, 1), 1.0, 1.0)
        assert prof.boundary_value == pytest.approx(-math.cos(1.0), abs=1e-10)
        assert np.max(np.abs(prof.u + np.cos(prof.r))) < 1e-9
        assert np.max(np.abs(prof.uprime - np.sin(prof.r))) < 1e-9

    def test_radial_sinc_case(self):
        # N=3, k=1, lambda = pi^2: u = -sin(pi r)/(pi r), u(1) = 0
        prof = integrate_profile(linear_spec(3, 1), LAM_SINC, 1.0)
        assert abs(prof.boundary_value) < 1e-8
        r = prof.r[1:]
        exact = -np.sin(math.pi * r) / (math.pi * r)
        assert np.max(np.abs(prof.u[1:] - exact)) < 1e-8
        assert prof.u[0] == -1.0

    def test_invalid_inputs(self):
        spec = linear_spec(1, 1)
        with pytest.raises(InvalidInputError):
            integrate_profile(spec, 1.0, 0.0)
        with pytest.raises(InvalidInputError):
            integrate_profile(spec, 1.0, -2.0)
        with pytest.raises(InvalidInputError):
            integrate_profile(spec, -1.0, 1.0)
        with pytest.raises(InvalidInputError):
            ShootingConfig(grid_points=32)

    def test_csv_dump(self, tmp_path):
        prof = integrate_profile(linear_spec(1, 1), 1.0, 1.0,
                                 ShootingConfig(grid_points=64))
        path = tmp_path / "profile.csv"
        prof.to_csv(path)
        lines = path.read_text().splitlines()
        assert lines[0] == "r,u,uprime"
        assert len(lines) == 65
        r, u, up = (float(x) for x in lines[-1].split(","))
        assert r == 1.0
        assert u == pytest.approx(prof.boundary_value, rel=1e-16)


class TestBoundaryResidual:
    def test_constant_profile(self):
        prof = integrate_profile(linear_spec(2, 2), 0.0, 1.0)
        assert boundary_residual(prof) == -1.0

    def test_eigen_lambda_hits_zero(self):
        prof = integrate_profile(linear_spec(1, 1), LAM_COS, 1.0)
        assert abs(boundary_residual(prof)) < 1e-8

    def test_cosine_value(self):
        prof = integrate_profile(linear_spec(1, 1), 1.0, 1.0)
        assert boundary_residual(prof) == pytest.approx(-0.5403023058681398, abs=1e-10)


class TestSolveLambda:
    def test_interval_eigenvalue(self):
        roots = solve_lambda(linear_spec(1, 1), 1.0, (0.1, 10.0))
        assert len(roots) == 1
        assert roots[0] == pytest.approx(LAM_COS, rel=1e-9)

    def test_saturating_small_amplitude_limit(self):
        # f0 = 1 so the branch bifurcates from lambda1/f0
        spec = ProblemSpec(N=1, k=1, R=1.0, f=NonlinearitySpec("saturating"))
        roots = solve_lambda(spec, 1e-6, (0.1, 10.0))
        assert len(roots) == 1
        assert roots[0] == pytest.approx(LAM_COS, rel=1e-3)

    def test_bracket_below_branch_is_empty(self):
        assert solve_lambda(linear_spec(1, 1), 1.0, (1e-6, 1e-2)) == []

    def test_bad_bracket(self):
        with pytest.raises(InvalidInputError):
            solve_lambda(linear_spec(1, 1), 1.0, (2.0, 1.0))

    def test_monotone_residual_single_sign_change(self):
        # at most one sign change over a wide scan, per registry entry
        from hessbif.core import registry

        for name, f in registry().items():
            spec = ProblemSpec(N=2, k=1, R=1.0, f=f)
            nodes = np.geomspace(1e-3, 1e3, 49)
            vals = [shoot_boundary_value(spec, lam, 1.0) for lam in nodes]
            signs = np.sign(vals)
            changes = int(np.sum(signs[1:] != signs[:-1]))
            assert changes <= 1, name


class TestFirstEigenvalue:
    def test_interval(self):
        res = first_eigenvalue(1, 1, 1.0)
        assert res.lambda1 == pytest.approx(LAM_COS, rel=1e-9)
        assert abs(res.residual) < 1e-8

    def test_ball_3d(self):
        res = first_eigenvalue(3, 1, 1.0)
        assert res.lambda1 == pytest.approx(LAM_SINC, rel=1e-9)

    def test_disk_vs_bessel_and_oracle(self):
        got = first_eigenvalue(2, 1, 1.0).lambda1
        assert got == pytest.approx(J0SQ, rel=1e-8)
        assert got == pytest.approx(eigen_value(2, 1, 1.0), rel=1e-8)

    def test_monge_ampere_2d_dual_integrator(self):
        # no closed form: compare against the independent fixed-step RK4 oracle
        got = first_eigenvalue(2, 2, 1.0).lambda1
        assert got == pytest.approx(eigen_value(2, 2, 1.0), rel=1e-8)

    def test_homogeneity_in_amplitude(self):
        # f linear: lambda(d) independent of d
        spec = linear_spec(1, 1)
        base = solve_lambda(spec, 1.0, (0.1, 10.0))[0]
        for d in (1e-3, 1e3):
            lam = solve_lambda(spec, d, (0.1, 10.0))[0]
            assert abs(lam - base) < 1e-8

    def test_eigen_scaling_law(self):
        # lambda1 scales as R^-2 for every order k
        for N, k in ((1, 1), (2, 1), (2, 2), (3, 2), (3, 3)):
            lam_1 = first_eigenvalue(N, k, 1.0).lambda1
            lam_2 = first_eigenvalue(N, k, 2.0).lambda1
            assert abs(lam_2 * 4.0 - lam_1) < 1e-8 * max(1.0, lam_1)


class TestConsistencyAndAdmissibility:
    def test_cosine_consistency_below_tolerance(self):
        prof = integrate_profile(linear_spec(1, 1), 1.0, 1.0)
        assert prof.max_consistency_residual < 1e-6

    def test_refinement_reduces_residual(self):
        spec = linear_spec(1, 1)
        coarse = integrate_profile(spec, 1.0, 1.0, ShootingConfig(grid_points=512))
        fine = integrate_profile(spec, 1.0, 1.0, ShootingConfig(grid_points=1024))
        assert fine.max_consistency_residual < coarse.max_consistency_residual / 3.0

    def test_solution_profiles_admissible(self):
        for N, k in ((2, 1), (2, 2), (3, 2)):
            spec = ProblemSpec(N=N, k=k, R=1.0, f=NonlinearitySpec("saturating"))
            lam1 = first_eigenvalue(N, k, 1.0).lambda1
            roots = solve_lambda(spec, 1.0, (lam1, 50 * lam1))
            assert len(roots) == 1
            prof = integrate_profile(spec, roots[0], 1.0)
            assert profile_admissible(prof, N, k)
            assert np.all(prof.u[:-1] < 0.0)
            assert np.all(np.diff(prof.u) >= 0.0)
            assert prof.u[0] == -1.0 and prof.uprime[0] == 0.0

    def test_consistency_nonlinear_case(self):
        # root_sum_powers expresses S_k = lambda^k (|u|^k + c |u|^b)
        spec = ProblemSpec(
            N=2, k=2, R=1.0,
            f=NonlinearitySpec("root_sum_powers", {"a": 2.0, "b": 1.0, "c": 0.5}),
        )
        prof = integrate_profile(spec, 2.0, 1.0)
        assert prof.max_consistency_residual < 1e-5
        upp = np.gradient(prof.uprime, prof.r)
        mid = len(prof.r) // 2
        r, u = prof.r[mid], prof.u[mid]
        sk = upp[mid] * prof.uprime[mid] / r
        assert sk == pytest.approx(2.0**2 * (u**2 + 0.5 * (-u)), rel=1e-3)
