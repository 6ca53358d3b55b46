import numpy as np
import pytest

from romatlas import interpolation as interp
from romatlas.burgers import Grid, ModelParams, solve
from romatlas.linalg import orthonormalize
from romatlas.pod import Pod


def projector(modes):
    return modes @ modes.T


def projector_distance(a, b):
    return np.max(np.abs(projector(a) - projector(b)))


def random_basis(n, k, seed, source_mu=None):
    rng = np.random.default_rng(seed)
    q = orthonormalize(rng.standard_normal((n, k)))
    return Pod.from_modes(q, source_mu=source_mu)


def rotated_line_basis(theta):
    """1-d subspace span{cos(theta) e1 + sin(theta) e2} in R^4."""
    v = np.zeros((4, 1))
    v[0, 0] = np.cos(theta)
    v[1, 0] = np.sin(theta)
    return Pod.from_modes(v, source_mu=None)


class TestMatrixInterpolation:
    def test_query_at_node_recovers_span(self):
        b1 = random_basis(10, 3, 1, source_mu=0.3)
        b2 = random_basis(10, 3, 2, source_mu=0.4)
        out = interp.interpolate_basis_matrices([b1, b2], 0.3)
        assert projector_distance(out.modes_, b1.modes_) < 1e-8

    def test_identical_bases_any_query(self):
        b1 = random_basis(8, 2, 3, source_mu=0.3)
        b2 = Pod.from_modes(b1.modes_.copy(), source_mu=0.4)
        out = interp.interpolate_basis_matrices([b1, b2], 0.9)
        assert projector_distance(out.modes_, b1.modes_) < 1e-8

    def test_midpoint_matches_direct_recomputation(self):
        b1 = random_basis(10, 3, 4, source_mu=0.3)
        b2 = random_basis(10, 3, 5, source_mu=0.4)
        out = interp.interpolate_basis_matrices([b1, b2], 0.35)
        assert np.max(np.abs(out.modes_.T @ out.modes_ - np.eye(3))) < 1e-10
        aligned = interp.align_column_signs(b1.modes_, b2.modes_)
        expected = orthonormalize(0.5 * b1.modes_ + 0.5 * aligned)
        assert projector_distance(out.modes_, expected) < 1e-10

    def test_rank_collapse_raises(self):
        # swapped mode ordering between the two bases: the midpoint average
        # produces two identical columns, which orthogonalization drops
        m1 = np.zeros((6, 2))
        m1[0, 0] = 1.0
        m1[1, 1] = 1.0
        m2 = m1[:, ::-1].copy()
        b1 = Pod.from_modes(m1, source_mu=0.3)
        b2 = Pod.from_modes(m2, source_mu=0.5)
        with pytest.raises(interp.RankCollapseError) as info:
            interp.interpolate_basis_matrices([b1, b2], 0.4)
        assert "retained" in str(info.value)


class TestGrassmann:
    def test_log_at_origin_is_zero(self):
        b = random_basis(9, 3, 6, source_mu=0.5)
        tangent = interp.grassmann_log(b, b)
        assert np.max(np.abs(tangent.gamma)) < 1e-10

    def test_log_principal_angle_2d(self):
        theta = 0.3
        origin = rotated_line_basis(0.0)
        other = rotated_line_basis(theta)
        tangent = interp.grassmann_log(origin, other)
        expected = np.zeros((4, 1))
        expected[1, 0] = theta
        assert np.max(np.abs(tangent.gamma - expected)) < 1e-12

    def test_exp_of_zero_returns_origin(self):
        b = random_basis(7, 2, 7)
        out = interp.grassmann_exp(b, np.zeros((7, 2)))
        assert projector_distance(out.modes_, b.modes_) < 1e-12

    def test_exp_inverts_log_2d(self):
        origin = rotated_line_basis(0.0)
        other = rotated_line_basis(0.3)
        out = interp.grassmann_exp(origin, interp.grassmann_log(origin, other))
        assert projector_distance(out.modes_, other.modes_) < 1e-12

    def test_round_trip_random(self):
        origin = random_basis(12, 3, 8)
        rng = np.random.default_rng(9)
        # keep the second subspace close enough for the log precondition
        perturbed = orthonormalize(origin.modes_ + 0.2 * rng.standard_normal((12, 3)))
        other = Pod.from_modes(perturbed)
        out = interp.grassmann_exp(origin, interp.grassmann_log(origin, other))
        assert projector_distance(out.modes_, other.modes_) < 1e-8

    def test_exp_output_orthonormal(self):
        origin = random_basis(10, 4, 10)
        rng = np.random.default_rng(11)
        raw = 0.3 * rng.standard_normal((10, 4))
        # tangent vectors are horizontal: orthogonal to the origin span
        gamma = raw - origin.modes_ @ (origin.modes_.T @ raw)
        out = interp.grassmann_exp(origin, gamma)
        assert np.max(np.abs(out.modes_.T @ out.modes_ - np.eye(4))) < 1e-8

    def test_far_subspaces_rejected(self):
        v = np.zeros((4, 1))
        v[0, 0] = 1.0
        w = np.zeros((4, 1))
        w[1, 0] = 1.0  # orthogonal: principal angle pi/2
        with pytest.raises(ValueError):
            interp.grassmann_log(Pod.from_modes(v), Pod.from_modes(w))


class TestGrassmannInterpolation:
    def test_query_at_origin_node(self):
        b1 = random_basis(10, 3, 12, source_mu=0.3)
        rng = np.random.default_rng(13)
        b2 = Pod.from_modes(
            orthonormalize(b1.modes_ + 0.15 * rng.standard_normal((10, 3))),
            source_mu=0.4,
        )
        out = interp.interpolate_basis_grassmann([b1, b2], 0, 0.3)
        assert projector_distance(out.modes_, b1.modes_) < 1e-8

    def test_query_at_other_node(self):
        b1 = random_basis(10, 3, 14, source_mu=0.3)
        rng = np.random.default_rng(15)
        b2 = Pod.from_modes(
            orthonormalize(b1.modes_ + 0.15 * rng.standard_normal((10, 3))),
            source_mu=0.4,
        )
        out = interp.interpolate_basis_grassmann([b1, b2], 0, 0.4)
        assert projector_distance(out.modes_, b2.modes_) < 1e-8

    def test_rotating_family_midpoint(self):
        # subspace angle linear in mu: interpolation must hit the midpoint angle
        theta = lambda mu: 0.8 * mu
        b1 = rotated_line_basis(theta(0.3))
        b1.source_mu_ = 0.3
        b2 = rotated_line_basis(theta(0.4))
        b2.source_mu_ = 0.4
        out = interp.interpolate_basis_grassmann([b1, b2], 0, 0.35)
        expected = rotated_line_basis(theta(0.35))
        assert projector_distance(out.modes_, expected.modes_) < 1e-6


class TestConcatenation:
    def test_duplicate_basis_keeps_k_columns(self):
        b = random_basis(9, 3, 16)
        out = interp.concatenate_bases(b, b, k1=3, k2=3)
        assert out.n_modes_ == 3
        assert projector_distance(out.modes_, b.modes_) < 1e-10

    def test_orthogonal_spans_keep_all_columns(self):
        m = np.zeros((8, 2))
        m[0, 0] = 1.0
        m[1, 1] = 1.0
        n = np.zeros((8, 2))
        n[4, 0] = 1.0
        n[5, 1] = 1.0
        out = interp.concatenate_bases(Pod.from_modes(m), Pod.from_modes(n))
        assert out.n_modes_ == 4

    def test_retained_counts_bracketed(self):
        rng = np.random.default_rng(17)
        b1 = random_basis(12, 4, 18)
        b2 = Pod.from_modes(
            orthonormalize(
                np.hstack([b1.modes_[:, :2], rng.standard_normal((12, 2))])
            )
        )
        out = interp.concatenate_bases(b1, b2, k1=4, k2=4)
        assert max(4, 4) <= out.n_modes_ <= 8

    def test_rank_deficient_snapshot_reconstruction(self):
        # two exact-rank-3 snapshot sets: the stacked leading bases must
        # reconstruct the stacked snapshots to numerical precision
        rng = np.random.default_rng(19)
        x1 = rng.standard_normal((15, 3)) @ rng.standard_normal((3, 20))
        x2 = rng.standard_normal((15, 3)) @ rng.standard_normal((3, 20))
        b1 = Pod(n_modes=3).fit(x1)
        b2 = Pod(n_modes=3).fit(x2)
        combined = interp.concatenate_bases(b1, b2, k1=3, k2=3)
        stacked = np.hstack([x1, x2])
        u = combined.modes_
        assert np.linalg.norm(stacked - u @ (u.T @ stacked)) < 1e-8

    def test_span_containment(self):
        b1 = random_basis(10, 3, 20)
        b2 = random_basis(10, 2, 21)
        out = interp.concatenate_bases(b1, b2, k1=3, k2=2)
        p = projector(out.modes_)
        for j in range(3):
            v = b1.modes_[:, j]
            assert np.linalg.norm(p @ v - v) < 1e-8


@pytest.fixture(scope="module")
def trajectories():
    grid = Grid(n_space=31, t_final=0.5, n_time=26)
    s1 = solve(grid, ModelParams(mu=0.3))
    s2 = solve(grid, ModelParams(mu=0.4))
    return s1, s2


class TestSolutionInterpolation:
    def test_query_at_node(self, trajectories):
        s1, s2 = trajectories
        out = interp.interpolate_solutions([s1, s2], 0.3, n_modes=4)
        direct = Pod(n_modes=4).fit(s1)
        assert projector_distance(out.modes_, direct.modes_) < 1e-8

    def test_identical_sets(self, trajectories):
        from romatlas.burgers import SnapshotMatrix

        s1, _ = trajectories
        # same states under a different parameter label: the interpolant is
        # the common trajectory for any query (weights sum to one)
        twin = SnapshotMatrix(
            states=s1.states.copy(), grid=s1.grid, params=ModelParams(mu=0.4)
        )
        out = interp.interpolate_solutions([s1, twin], 0.9, n_modes=4)
        direct = Pod(n_modes=4).fit(s1)
        assert projector_distance(out.modes_, direct.modes_) < 1e-8

    def test_midpoint_matches_bruteforce_average(self, trajectories):
        s1, s2 = trajectories
        out = interp.interpolate_solutions([s1, s2], 0.35, n_modes=5)
        avg = 0.5 * s1.states + 0.5 * s2.states
        direct = Pod(n_modes=5).fit(avg)
        assert projector_distance(out.modes_, direct.modes_) < 1e-8
        assert np.max(np.abs(out.modes_.T @ out.modes_ - np.eye(5))) < 1e-8

    def test_grid_mismatch_raises(self, trajectories):
        s1, _ = trajectories
        other_grid = Grid(n_space=41, t_final=0.5, n_time=26)
        s3 = solve(other_grid, ModelParams(mu=0.4))
        with pytest.raises(ValueError):
            interp.interpolate_solutions([s1, s3], 0.35)

    def test_all_methods_return_orthonormal(self, trajectories):
        s1, s2 = trajectories
        b1 = Pod(n_modes=5).fit(s1)
        b2 = Pod(n_modes=5).fit(s2)
        outputs = [
            interp.interpolate_basis_matrices([b1, b2], 0.35),
            interp.interpolate_basis_grassmann([b1, b2], 0, 0.35),
            interp.concatenate_bases(b1, b2, k1=5, k2=5),
            interp.interpolate_solutions([s1, s2], 0.35, n_modes=5),
        ]
        for out in outputs:
            k = out.n_modes_
            assert np.max(np.abs(out.modes_.T @ out.modes_ - np.eye(k))) < 1e-8
