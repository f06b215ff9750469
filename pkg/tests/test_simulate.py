import numpy as np
import pytest
from scipy.linalg import expm
from scipy.stats import ks_2samp

from grou.errors import StationarityError
from grou.graphs import complete_graph, path_graph, weight_matrices
from grou.model import GrouParams, build_companion
from grou.noise import CompoundPoissonJumps, LevySpec, SymmetricGammaJumps
from grou.simulate import (
    SampledPath,
    grid_from_times,
    make_uniform_grids,
    power_law_grids,
    read_path_csv,
    simulate_path,
    write_path_csv,
)


def scalar_system(rate=2.0):
    return build_companion(GrouParams(np.array([[rate]]), (np.empty(0),)), None)


def two_edge_system():
    weights = weight_matrices(path_graph(3), 1)
    params = GrouParams(np.array([[4.0, 3.0], [2.0, 1.0]]), (np.array([1.0]), np.array([1.0])))
    return build_companion(params, weights)


def k5_predictive_system(beta=2.0, dominant=5.0):
    graph = complete_graph(5)
    weights = weight_matrices(graph, 1)
    alpha = np.full((1, 10), 1.0)
    alpha[0, 0] = dominant
    params = GrouParams(alpha, (np.array([beta]),))
    return build_companion(params, weights)


class TestGrids:
    def test_paper_meshes_for_t2(self):
        grid = make_uniform_grids(2.0, 2.0**-6, 16)
        assert grid.t_end == pytest.approx(2.0)
        assert grid.mesh_fine == pytest.approx(1 / 64)
        assert grid.mesh_coarse == pytest.approx(1 / 4)
        assert grid.ratio == 16
        assert grid.fine.size == 129
        assert grid.coarse.size == 9

    def test_ratio_one_collapses(self):
        grid = make_uniform_grids(1.0, 0.125, 1)
        np.testing.assert_array_equal(grid.coarse, grid.fine)

    def test_snapping_to_coarse_step(self):
        grid = make_uniform_grids(1.0, 0.01, 18)
        assert grid.mesh_coarse == pytest.approx(0.18)
        assert grid.t_end == pytest.approx(0.18 * 6)  # snapped up from 1.0
        assert grid.uniformity_fine == pytest.approx(1.0)

    def test_power_law_grids(self):
        grid = power_law_grids(2.0)
        assert grid.mesh_fine == pytest.approx(2.0**-6)
        assert grid.ratio == 16
        capped = power_law_grids(8.0)
        assert capped.mesh_fine == pytest.approx(2.0**-14)
        assert capped.ratio == 256

    def test_grid_from_times_appends_endpoint(self):
        grid = grid_from_times([5.0, 6.0, 7.0, 8.0, 9.0], ratio=3)
        np.testing.assert_allclose(grid.fine, [0, 1, 2, 3, 4])
        np.testing.assert_array_equal(grid.coarse_idx, [0, 3, 4])
        assert grid.uniformity_coarse < 1.0

    def test_invalid_grids_rejected(self):
        with pytest.raises(ValueError):
            make_uniform_grids(1.0, -0.1, 1)
        with pytest.raises(ValueError):
            make_uniform_grids(1.0, 0.1, 0)
        with pytest.raises(ValueError):
            grid_from_times([0.0, 0.0, 1.0])


class TestSimulatePath:
    def test_zero_noise_is_matrix_exponential_flow(self):
        system = two_edge_system()
        spec = LevySpec(np.zeros(2), np.zeros((2, 2)))
        grid = make_uniform_grids(1.0, 1 / 32, 4)
        x0 = np.array([1.0, -0.5, 0.25, 2.0])
        path = simulate_path(system, spec, grid, init=x0, rng_seed=0)
        for n in (0, 7, 19, 32):
            t = grid.fine[n]
            want = (system.observation @ expm(t * system.transition) @ x0)
            np.testing.assert_allclose(path.values[n], want, atol=1e-12)

    def test_explicit_init_shape_check(self):
        system = scalar_system()
        spec = LevySpec(np.zeros(1), np.eye(1))
        grid = make_uniform_grids(1.0, 0.25, 1)
        with pytest.raises(ValueError):
            simulate_path(system, spec, grid, init=[1.0, 2.0])

    def test_non_hurwitz_stationary_init_rejected(self):
        system = scalar_system(0.0)
        spec = LevySpec(np.zeros(1), np.eye(1))
        grid = make_uniform_grids(1.0, 0.25, 1)
        with pytest.raises(StationarityError):
            simulate_path(system, spec, grid, init="stationary")

    def test_scalar_ou_stationary_variance(self):
        system = scalar_system(2.0)
        spec = LevySpec(np.zeros(1), np.eye(1))
        grid = make_uniform_grids(1.0, 1 / 16, 4)
        n_paths = 2000
        finals = np.array(
            [
                simulate_path(system, spec, grid, init="stationary", rng_seed=s).values[-1, 0]
                for s in range(n_paths)
            ]
        )
        # exact stationary variance 1/4; allow 3 standard errors of the
        # sample variance of a Gaussian: sd ~ var*sqrt(2/(n-1))
        tol = 3 * 0.25 * np.sqrt(2 / (n_paths - 1))
        assert abs(finals.var() - 0.25) < tol
        assert abs(finals.mean()) < 3 * 0.5 / np.sqrt(n_paths)

    def test_marginal_time_invariance_and_mid_path(self):
        system = scalar_system(2.0)
        spec = LevySpec(np.zeros(1), np.eye(1))
        grid = make_uniform_grids(1.0, 1 / 16, 4)
        vals = np.array(
            [
                simulate_path(system, spec, grid, init="stationary", rng_seed=s).values[:, 0]
                for s in range(1500)
            ]
        )
        mid, end = vals[:, 8], vals[:, -1]
        assert abs(mid.var() - end.var()) < 3 * 0.25 * np.sqrt(4 / 1500)
        assert abs(mid.mean() - end.mean()) < 3 * 0.5 * np.sqrt(2 / 1500)

    def test_compound_poisson_superposition(self):
        # responses to the continuous part and to the jumps add up to the
        # full path when the randomness is shared through the seed
        system = two_edge_system()
        jumps = CompoundPoissonJumps(rate=3.0, jump_cov=np.eye(2))
        full_spec = LevySpec(np.array([0.2, -0.1]), np.eye(2), jumps)
        cont_spec = LevySpec(np.array([0.2, -0.1]), np.eye(2))
        jump_spec = LevySpec(np.zeros(2), np.zeros((2, 2)), jumps)
        grid = make_uniform_grids(2.0, 1 / 32, 8)
        x0 = np.array([0.5, -1.0, 0.0, 0.3])
        full = simulate_path(system, full_spec, grid, init=x0, rng_seed=77)
        cont = simulate_path(system, cont_spec, grid, init=x0, rng_seed=77)
        jump = simulate_path(system, jump_spec, grid, init=np.zeros(4), rng_seed=77)
        np.testing.assert_allclose(full.values, cont.values + jump.values, atol=1e-10)

    def test_jump_truth_metadata(self):
        system = k5_predictive_system()
        spec = LevySpec(np.zeros(10), np.eye(10), CompoundPoissonJumps(1.0, np.eye(10)))
        grid = make_uniform_grids(2.0, 2 / 128, 4)
        path = simulate_path(system, spec, grid, init="stationary", rng_seed=5)
        truth = path.truth
        assert truth is not None
        assert truth.arrival_times is not None
        assert np.all(np.diff(truth.arrival_times) >= 0) or truth.arrival_times.size <= 1
        assert truth.arrival_sizes.shape[1] == 10
        assert truth.noise is spec

    def test_mesh_refinement_does_not_change_law(self):
        # the scheme is distribution-exact, so a 4x finer mesh gives the
        # same terminal law; two-sample KS at n=m=4000 should sit well
        # below 0.043 (the 1e-3 critical value for identical laws)
        system = scalar_system(2.0)
        spec = LevySpec(np.zeros(1), np.eye(1), CompoundPoissonJumps(1.0, np.eye(1)))
        coarse = make_uniform_grids(1.0, 1 / 8, 2)
        fine = make_uniform_grids(1.0, 1 / 32, 8)
        a = np.array(
            [
                simulate_path(system, spec, coarse, init="stationary", rng_seed=s).values[-1, 0]
                for s in range(4000)
            ]
        )
        b = np.array(
            [
                simulate_path(system, spec, fine, init="stationary", rng_seed=100_000 + s).values[
                    -1, 0
                ]
                for s in range(4000)
            ]
        )
        assert ks_2samp(a, b).statistic < 0.043

    def test_gamma_regime_long_run_variance(self):
        # stationary variance = (1 + 2)/4 = 0.75; single-path time averages
        # are heavy-tailed here, so check the median over several paths
        system = scalar_system(2.0)
        spec = LevySpec(np.zeros(1), np.eye(1), SymmetricGammaJumps(1.0, 1.0))
        grid = make_uniform_grids(60.0, 2.0**-8, 16)
        stats = []
        for seed in range(12):
            x = simulate_path(system, spec, grid, init="stationary", rng_seed=seed).values[:, 0]
            stats.append((x.var(), x.mean()))
        var_med = np.median([v for v, _ in stats])
        mean_med = np.median([m for _, m in stats])
        assert abs(var_med / 0.75 - 1.0) < 0.12
        assert abs(mean_med) < 0.1

    def test_determinism(self):
        system = two_edge_system()
        spec = LevySpec(np.zeros(2), np.eye(2), CompoundPoissonJumps(1.0, np.eye(2)))
        grid = make_uniform_grids(1.0, 1 / 64, 8)
        a = simulate_path(system, spec, grid, init="stationary", rng_seed=9)
        b = simulate_path(system, spec, grid, init="stationary", rng_seed=9)
        np.testing.assert_array_equal(a.values, b.values)


class TestPathContainer:
    def make_path(self):
        grid = make_uniform_grids(1.0, 0.125, 2)
        values = np.arange(grid.fine.size * 2, dtype=float).reshape(-1, 2)
        return SampledPath(grid=grid, values=values, labels=("e_1", "e_2"))

    def test_section(self):
        path = self.make_path()
        sub = path.section(2, 7)
        assert sub.n_points == 5
        np.testing.assert_allclose(sub.grid.fine, path.grid.fine[2:7] - path.grid.fine[2])
        np.testing.assert_array_equal(sub.values, path.values[2:7])

    def test_section_bounds(self):
        path = self.make_path()
        with pytest.raises(ValueError):
            path.section(5, 5)

    def test_drop_columns(self):
        path = self.make_path()
        dropped = path.drop_columns([0])
        assert dropped.n_edges == 1
        assert dropped.labels == ("e_2",)
        np.testing.assert_array_equal(dropped.values, path.values[:, 1:])

    def test_non_finite_rejected(self):
        grid = make_uniform_grids(1.0, 0.5, 1)
        values = np.full((3, 1), np.nan)
        with pytest.raises(ValueError):
            SampledPath(grid=grid, values=values)

    def test_csv_round_trip(self, tmp_path):
        system = two_edge_system()
        spec = LevySpec(np.zeros(2), np.eye(2))
        grid = make_uniform_grids(0.5, 1 / 32, 4)
        path = simulate_path(system, spec, grid, init="stationary", rng_seed=1)
        file = tmp_path / "path.csv"
        write_path_csv(path, file, header_lines=["config: {}"])
        back = read_path_csv(file, ratio=4)
        np.testing.assert_array_equal(back.values, path.values)
        np.testing.assert_array_equal(back.grid.fine, path.grid.fine)
        np.testing.assert_array_equal(back.grid.coarse_idx, path.grid.coarse_idx)
        assert back.labels == ("e_1", "e_2")

    def test_csv_errors(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        with pytest.raises(ValueError):
            read_path_csv(bad)
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        with pytest.raises(ValueError):
            read_path_csv(empty)
