import numpy as np
import pytest

from zenodrive.geometry import (
    DegenerateGroundStateError,
    DiscretizedPath,
    GeodesicConvergenceError,
    cumulative_lengths,
    geodesic,
    metric,
    metric_many,
    metric_with_gradient_many,
    path_length,
    refine,
    reparameterize,
    step_length,
    step_lengths_along,
)
from zenodrive.models import HamiltonianFamily, LipkinModel, TwoLevelModel
from zenodrive.spectral import DegeneracyWarning

START = np.array([0.0, 0.0])
END = np.array([2.0, 0.5])


class ConstantModel(HamiltonianFamily):
    """Fixed Hamiltonian; the ground state never moves."""

    nparams = 2

    def __init__(self):
        rng = np.random.default_rng(42)
        m = rng.normal(size=(4, 4))
        self._h = 0.5 * (m + m.T)
        self.dim = 4

    def hamiltonian(self, point):
        return self._h.copy()

    def derivative(self, point, axis):
        return np.zeros((4, 4))

    def second_derivative(self, point, axis1, axis2):
        return np.zeros((4, 4))


class FlatModel(HamiltonianFamily):
    """Two independently rotated qubits: constant diagonal metric, no curvature."""

    dim = 4
    nparams = 2

    @staticmethod
    def _rot(theta):
        sz = np.array([[-1.0, 0.0], [0.0, 1.0]])
        sx = np.array([[0.0, 1.0], [1.0, 0.0]])
        return -0.5 * (np.cos(theta) * sz + np.sin(theta) * sx)

    def hamiltonian(self, point):
        x, y = np.asarray(point, dtype=float)
        return np.kron(self._rot(x), np.eye(2)) + 2 * np.kron(np.eye(2), self._rot(y))

    def derivative(self, point, axis):
        x, y = np.asarray(point, dtype=float)
        h = 1e-6  # unused; analytic below
        sz = np.array([[-1.0, 0.0], [0.0, 1.0]])
        sx = np.array([[0.0, 1.0], [1.0, 0.0]])
        if axis == 0:
            d = -0.5 * (-np.sin(x) * sz + np.cos(x) * sx)
            return np.kron(d, np.eye(2))
        d = -0.5 * (-np.sin(y) * sz + np.cos(y) * sx)
        return 2 * np.kron(np.eye(2), d)

    def second_derivative(self, point, axis1, axis2):
        if axis1 != axis2:
            return np.zeros((4, 4))
        x, y = np.asarray(point, dtype=float)
        if axis1 == 0:
            return np.kron(-self._rot(x), np.eye(2))
        return 2 * np.kron(np.eye(2), -self._rot(y))


class NearDegenerateModel(HamiltonianFamily):
    """Tunable gap; lets tests hit the degeneracy guards."""

    dim = 2
    nparams = 1

    def __init__(self, coupling):
        self.coupling = coupling

    def hamiltonian(self, point):
        x = float(np.asarray(point).reshape(-1)[0])
        return np.array([[x, self.coupling], [self.coupling, -x]])

    def derivative(self, point, axis):
        return np.array([[1.0, 0.0], [0.0, -1.0]])

    def second_derivative(self, point, axis1, axis2):
        return np.zeros((2, 2))


@pytest.fixture(scope="module")
def lipkin_geodesic_diag(lipkin10):
    path, diag = geodesic(lipkin10, START, END, 128, return_diagnostics=True)
    return path, diag


def overlap_metric_fd(model, point, d=1e-4):
    """Finite-difference metric from the defining ground-state overlap form.

    Symmetrized probes cancel the cubic term of the overlap expansion, leaving
    the quadratic form to O(d^2) relative accuracy.
    """
    from zenodrive.spectral import eigh

    base = eigh(model.hamiltonian(point)).ground_state()

    def q(step):
        other = eigh(model.hamiltonian(point + step)).ground_state()
        loss = 1.0 - np.abs(np.vdot(other, base)) ** 2
        mirror = eigh(model.hamiltonian(point - step)).ground_state()
        loss_m = 1.0 - np.abs(np.vdot(mirror, base)) ** 2
        return 0.5 * (loss + loss_m)

    nparams = model.nparams
    g = np.empty((nparams, nparams))
    qs = []
    for a in range(nparams):
        e = np.zeros(nparams)
        e[a] = d
        qs.append(q(e))
        g[a, a] = qs[a] / d**2
    for a in range(nparams):
        for b in range(a + 1, nparams):
            e = np.zeros(nparams)
            e[a] = d
            e[b] = d
            g[a, b] = g[b, a] = (q(e) - qs[a] - qs[b]) / (2 * d**2)
    return g


class TestMetric:
    def test_two_level_quarter(self, two_level):
        for theta in np.linspace(0.0, 2 * np.pi, 7):
            g = metric(two_level, np.array([theta]))
            assert abs(g[0, 0] - 0.25) <= 1e-10

    def test_constant_model_zero(self):
        g = metric(ConstantModel(), np.array([0.3, 0.7]))
        assert np.abs(g).max() == 0.0

    def test_symmetric_psd_on_lipkin(self, lipkin10):
        rng = np.random.default_rng(8)
        pts = np.column_stack([rng.uniform(0, 3, 10), rng.uniform(0, 1, 10)])
        gs = metric_many(lipkin10, pts)
        for g in gs:
            assert np.abs(g - g.T).max() <= 1e-14
            assert np.linalg.eigvalsh(g).min() >= -1e-12

    def test_matches_overlap_definition(self, lipkin10):
        rng = np.random.default_rng(77)
        count = 0
        while count < 6:
            point = np.array([rng.uniform(0, 3), rng.uniform(0.05, 1)])
            g = metric(lipkin10, point)
            g_fd = overlap_metric_fd(lipkin10, point)
            assert np.abs(g_fd - g).max() <= 1e-3 * np.abs(g).max()
            count += 1

    def test_energy_shift_invariance(self, lipkin10):
        class Shifted(HamiltonianFamily):
            dim = lipkin10.dim
            nparams = 2

            def hamiltonian(self, point):
                return lipkin10.hamiltonian(point) + 17.3 * np.eye(self.dim)

            def derivative(self, point, axis):
                return lipkin10.derivative(point, axis)

            def second_derivative(self, point, a, b):
                return lipkin10.second_derivative(point, a, b)

        point = np.array([1.0, 0.4])
        assert np.abs(metric(Shifted(), point) - metric(lipkin10, point)).max() <= 1e-12

    def test_degenerate_ground_state_error_names_gap(self):
        model = NearDegenerateModel(coupling=0.0)
        with pytest.raises(DegenerateGroundStateError) as err:
            metric(model, np.array([0.0]))
        assert "gap" in str(err.value)
        assert err.value.gap <= 1e-12

    def test_metric_cap_warning(self):
        model = NearDegenerateModel(coupling=1e-8)
        with pytest.warns(UserWarning, match="cap"):
            g = metric(model, np.array([0.0]))
        assert np.abs(g).max() <= 1e12

    def test_gradient_matches_finite_difference(self, lipkin10):
        pts = np.array([[0.7, 0.3], [1.6, 0.8], [2.4, 0.15]])
        g, dg = metric_with_gradient_many(lipkin10, pts)
        h = 1e-5
        for axis in range(2):
            e = np.zeros(2)
            e[axis] = h
            fd = (metric_many(lipkin10, pts + e) - metric_many(lipkin10, pts - e)) / (2 * h)
            assert np.abs(fd - dg[:, axis]).max() <= 1e-5 * max(1.0, np.abs(fd).max())


class TestStepLength:
    def test_zero_at_equal_points(self, lipkin10):
        p = np.array([1.0, 0.5])
        assert step_length(lipkin10, p, p) == 0.0

    def test_symmetry(self, lipkin10):
        a, b = np.array([0.2, 0.1]), np.array([1.7, 0.8])
        assert step_length(lipkin10, a, b) == pytest.approx(
            step_length(lipkin10, b, a), abs=1e-14
        )

    def test_two_level_half_angle(self, two_level):
        for dtheta in (0.3, np.pi / 2, 2.5):
            got = step_length(two_level, np.array([0.4]), np.array([0.4 + dtheta]))
            assert got == pytest.approx(abs(np.sin(dtheta / 2)), abs=1e-12)

    def test_quadratic_form_convergence_order(self, lipkin10):
        # delta_l^2 - g[v, v] should shrink like |v|^3
        point = np.array([1.0, 0.3])
        direction = np.array([0.8, 0.6])
        g = metric(lipkin10, point)
        errs = []
        for d in (1e-2, 1e-3):
            v = d * direction
            dl2 = step_length(lipkin10, point, point + v) ** 2
            errs.append(abs(dl2 - v @ g @ v))
        assert errs[1] <= errs[0] / 100


class TestPathLength:
    def test_single_point(self, lipkin10):
        assert path_length(lipkin10, np.array([[1.0, 0.5]])) == 0.0

    def test_two_level_total_angle(self, two_level):
        thetas = np.linspace(0.0, np.pi, 1001)[:, None]
        assert path_length(two_level, thetas) == pytest.approx(np.pi / 2, abs=1e-4)

    def test_lipkin_linear_regression_anchor(self, lipkin10):
        pts = START + np.linspace(0, 1, 2001)[:, None] * (END - START)
        ell = path_length(lipkin10, pts)
        # frozen from a converged run; doubling the resolution moves it < 1e-4 relative
        assert ell == pytest.approx(1.558555130036301, rel=1e-9)
        pts2 = START + np.linspace(0, 1, 4001)[:, None] * (END - START)
        assert abs(path_length(lipkin10, pts2) - ell) / ell < 1e-4

    def test_degeneracy_warning_along_path(self):
        model = NearDegenerateModel(coupling=0.0)
        pts = np.linspace(-1, 1, 5)[:, None]
        with pytest.warns(DegeneracyWarning):
            step_lengths_along(model, pts)


class TestGeodesic:
    def test_flat_model_gives_chord(self):
        model = FlatModel()
        a, b = np.array([0.1, 0.2]), np.array([1.1, 0.9])
        path = geodesic(model, a, b, 24)
        chord = a + np.linspace(0, 1, 25)[:, None] * (b - a)
        assert np.abs(path.points - chord).max() <= 1e-8
        assert path.family == "geodesic"
        assert path.parameterization == "constant-manifold-speed"

    def test_two_level_uniform_angles(self, two_level):
        path = geodesic(two_level, np.array([0.0]), np.array([2.0]), 32)
        uniform = np.linspace(0.0, 2.0, 33)[:, None]
        assert np.abs(path.points - uniform).max() <= 1e-8

    def test_lipkin_converges_with_equal_steps(self, lipkin10, lipkin_geodesic_diag):
        path, diag = lipkin_geodesic_diag
        assert diag.residual < 1e-9
        dl = step_lengths_along(lipkin10, path.points)
        assert dl.max() / dl.min() - 1 < 0.01

    def test_lipkin_shorter_than_chord_and_bows_up(self, lipkin10, lipkin_geodesic_diag):
        path, _ = lipkin_geodesic_diag
        ell_geo = path_length(lipkin10, path.points)
        chord = START + np.linspace(0, 1, 129)[:, None] * (END - START)
        ell_lin = path_length(lipkin10, chord)
        assert ell_geo < ell_lin
        # curved toward larger chi than the chord while crossing the small-gap region
        chord_chi = np.interp(path.points[:, 0], [START[0], END[0]], [START[1], END[1]])
        interior = slice(10, -10)
        assert np.all(path.points[interior, 1] > chord_chi[interior])

    def test_length_trace_monotone(self, lipkin_geodesic_diag):
        # non-increasing up to the discretization slack between the exact
        # overlap length and the energy the solver actually descends on;
        # endgame Newton polish wiggles the inscribed length at ~1e-7
        _, diag = lipkin_geodesic_diag
        lengths = np.array(diag.length_trace)
        assert np.all(np.diff(lengths) <= lengths[:-1] * 1e-6)
        assert lengths.argmax() == 0
        assert lengths[-1] < lengths[0]

    def test_energy_trace_decreasing(self, lipkin_geodesic_diag):
        _, diag = lipkin_geodesic_diag
        energies = np.array(diag.energy_trace)
        assert np.all(np.diff(energies) < 0)

    def test_endpoints_fixed_exactly(self, lipkin_geodesic_diag):
        path, _ = lipkin_geodesic_diag
        assert np.array_equal(path.points[0], START)
        assert np.array_equal(path.points[-1], END)

    def test_interior_respects_halfplane(self, lipkin_geodesic_diag):
        path, _ = lipkin_geodesic_diag
        assert np.all(path.points[:, 1] >= 0.0)

    def test_convergence_error_carries_residual(self, lipkin10):
        with pytest.raises(GeodesicConvergenceError) as err:
            geodesic(lipkin10, START, END, 64, max_iterations=1)
        assert err.value.residual > 0

    def test_needs_two_steps(self, lipkin10):
        with pytest.raises(ValueError):
            geodesic(lipkin10, START, END, 1)


class TestReparameterize:
    def test_modes_coincide_on_flat_model(self):
        model = FlatModel()
        a, b = np.array([0.0, 0.0]), np.array([1.0, 0.5])
        dense = DiscretizedPath(a + np.linspace(0, 1, 501)[:, None] * (b - a))
        pv = reparameterize(model, dense, 20, "constant-manifold-speed")
        pu = reparameterize(model, dense, 20, "constant-euclidean-speed")
        assert np.abs(pv.points - pu.points).max() <= 1e-9
        assert pv.parameterization == "constant-manifold-speed"
        assert pu.parameterization == "constant-euclidean-speed"

    def test_two_level_uniform(self, two_level):
        dense = DiscretizedPath(np.linspace(0.0, np.pi, 801)[:, None])
        out = reparameterize(two_level, dense, 16, "constant-manifold-speed")
        assert np.abs(out.points - np.linspace(0, np.pi, 17)[:, None]).max() <= 1e-8

    def test_constant_speed_spread(self, lipkin10):
        dense = DiscretizedPath(START + np.linspace(0, 1, 4001)[:, None] * (END - START))
        out = reparameterize(lipkin10, dense, 100, "constant-manifold-speed")
        dl = step_lengths_along(lipkin10, out.points)
        assert (dl.max() - dl.min()) / dl.mean() <= 0.01

    def test_euclidean_spacing_exact(self, lipkin10):
        dense = DiscretizedPath(START + np.linspace(0, 1, 2001)[:, None] * (END - START))
        out = reparameterize(lipkin10, dense, 50, "constant-euclidean-speed")
        steps = np.linalg.norm(np.diff(out.points, axis=0), axis=1)
        assert steps.max() - steps.min() <= 1e-10

    def test_points_concentrate_in_small_gap_region(self, lipkin10):
        dense = DiscretizedPath(START + np.linspace(0, 1, 4001)[:, None] * (END - START))
        out = reparameterize(lipkin10, dense, 100, "constant-manifold-speed")
        euclid = np.linalg.norm(np.diff(out.points, axis=0), axis=1)
        lam_at_min = out.points[np.argmin(euclid), 0]
        # the plane speed collapses where the gap is smallest (lam ~ 1.2 at N=10)
        assert 0.8 <= lam_at_min <= 1.6

    def test_rejects_coarse_input(self, lipkin10):
        dense = DiscretizedPath(START + np.linspace(0, 1, 100)[:, None] * (END - START))
        with pytest.raises(ValueError, match="too coarse"):
            reparameterize(lipkin10, dense, 50, "constant-manifold-speed")

    def test_rejects_unknown_mode(self, lipkin10):
        dense = DiscretizedPath(START + np.linspace(0, 1, 501)[:, None] * (END - START))
        with pytest.raises(ValueError, match="mode"):
            reparameterize(lipkin10, dense, 10, "smooth")

    def test_refinement_consistency_flat_model(self):
        model = FlatModel()
        a, b = np.array([0.0, 0.1]), np.array([1.2, 0.7])
        dense = DiscretizedPath(a + np.linspace(0, 1, 3201)[:, None] * (b - a))
        coarse = reparameterize(model, dense, 10, "constant-manifold-speed")
        fine = reparameterize(model, dense, 20, "constant-manifold-speed")
        assert np.abs(coarse.points - fine.points[::2]).max() <= 1e-6

    def test_refine_keeps_curve(self, lipkin10):
        pts = START + np.linspace(0, 1, 11)[:, None] * (END - START)
        dense = refine(DiscretizedPath(pts, family="linear"), 10)
        assert dense.points.shape == (101, 2)
        assert np.abs(dense.points[::10] - pts).max() <= 1e-15
        assert dense.family == "linear"

    def test_cumulative_lengths_monotone(self, lipkin10):
        pts = START + np.linspace(0, 1, 301)[:, None] * (END - START)
        table = cumulative_lengths(lipkin10, pts)
        assert table[0] == 0.0
        assert np.all(np.diff(table) >= 0)
