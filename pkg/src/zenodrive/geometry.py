"""Ground-state manifold geometry.

The metric tensor measures the distinguishability of neighboring ground states:
its quadratic form reproduces, to leading order in the parameter displacement,
one minus the squared ground-state overlap.  On top of it sit exact step
lengths, discretized path lengths, a geodesic solver based on relaxation of the
discrete path energy, and constant-speed reparameterizations.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .models import HamiltonianFamily
from .spectral import eigh_many, warn_if_degenerate

GAP_FLOOR = 1e-12
METRIC_CAP = 1e12

PARAMETERIZATIONS = ("constant-manifold-speed", "constant-euclidean-speed", "custom")


class DegenerateGroundStateError(RuntimeError):
    """Ground state too close to the first excited level for perturbation theory."""

    def __init__(self, gap: float):
        super().__init__(f"degenerate ground state: gap E1 - E0 = {gap:.3e}")
        self.gap = gap


class GeodesicConvergenceError(RuntimeError):
    """Relaxation failed to reach the gradient tolerance within the iteration budget."""

    def __init__(self, residual: float, iterations: int):
        super().__init__(
            f"geodesic relaxation stalled at max gradient {residual:.3e} "
            f"after {iterations} iterations"
        )
        self.residual = residual
        self.iterations = iterations


@dataclass
class DiscretizedPath:
    """Ordered parameter points of a stroboscopic driving path.

    ``points`` has shape (K+1, D); the first and last rows are the fixed
    endpoints.  The tags record how the path was produced, not a constraint
    enforced here.
    """

    points: np.ndarray
    family: str = "custom"
    parameterization: str = "custom"

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))

    @property
    def steps(self) -> int:
        return self.points.shape[0] - 1

    @property
    def start(self) -> np.ndarray:
        return self.points[0]

    @property
    def end(self) -> np.ndarray:
        return self.points[-1]


@dataclass
class GeodesicDiagnostics:
    """Per-iteration record of the geodesic relaxation."""

    iterations: int = 0
    residual: float = np.inf
    energy_trace: list = field(default_factory=list)
    length_trace: list = field(default_factory=list)


def _as_points(path) -> np.ndarray:
    if isinstance(path, DiscretizedPath):
        return path.points
    return np.atleast_2d(np.asarray(path, dtype=float))


def metric(model: HamiltonianFamily, point: np.ndarray) -> np.ndarray:
    """Metric tensor at one parameter point, from the perturbative sum over states.

    g_mn = Re sum_{i>0} <E0|dH_m|Ei><Ei|dH_n|E0> / (Ei - E0)^2.  Symmetric and
    positive semidefinite; independent of eigenvector phase conventions and of
    global energy shifts of the Hamiltonian.

    Raises
    ------
    DegenerateGroundStateError
        If the gap to the first excited level is at or below ``GAP_FLOOR``.
    """
    return metric_many(model, np.asarray(point, dtype=float)[None])[0]


def metric_many(model: HamiltonianFamily, points: np.ndarray) -> np.ndarray:
    """Batched metric tensors, shape (..., D, D)."""
    return _metric_impl(model, points, with_gradient=False)[0]


def metric_with_gradient_many(
    model: HamiltonianFamily, points: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Metric tensors and their parameter gradients, both in closed form.

    Returns ``(g, dg)`` with shapes (..., D, D) and (..., D, D, D) where
    ``dg[..., c, m, n]`` is the derivative of ``g[..., m, n]`` along axis c.
    The gradient follows from differentiating the perturbative sum, using the
    standard first-order expressions for eigenvector and eigenvalue derivatives.
    """
    return _metric_impl(model, points, with_gradient=True)


def _metric_impl(model, points, *, with_gradient):
    points = np.asarray(points, dtype=float)
    nparams = model.nparams
    ham = model.hamiltonian_many(points)
    energies, states = np.linalg.eigh(0.5 * (ham + np.conj(np.swapaxes(ham, -1, -2))))
    gap = energies[..., 1] - energies[..., 0]
    min_gap = float(gap.min())
    if min_gap <= GAP_FLOOR:
        raise DegenerateGroundStateError(min_gap)

    # B^c = V^dagger (dH_c) V in the eigenbasis, one per parameter axis
    bmats = [
        np.einsum("...ji,...jk,...kl->...il", np.conj(states), model.derivative_many(points, c), states)
        for c in range(nparams)
    ]
    amp = [b[..., :, 0] for b in bmats]          # <E_i|dH_c|E_0>
    delta = energies - energies[..., 0:1]
    weight = np.zeros_like(delta)
    weight[..., 1:] = 1.0 / delta[..., 1:] ** 2

    batch_shape = points.shape[:-1]
    g = np.empty(batch_shape + (nparams, nparams))
    for m in range(nparams):
        for n in range(nparams):
            g[..., m, n] = np.real(np.sum(np.conj(amp[m]) * amp[n] * weight, axis=-1))
    g = 0.5 * (g + np.swapaxes(g, -1, -2))
    if np.abs(g).max() > METRIC_CAP:
        warnings.warn(
            f"metric component exceeds cap {METRIC_CAP:.0e}; clipping (near-degenerate gap)",
            stacklevel=3,
        )
        g = np.clip(g, -METRIC_CAP, METRIC_CAP)
    if not with_gradient:
        return g, None

    dim = ham.shape[-1]
    eye = np.eye(dim, dtype=bool)
    # denom[j, i] = E_i - E_j, guarded on the diagonal and at accidental
    # excited-level crossings (those pair contributions are dropped)
    denom = energies[..., None, :] - energies[..., :, None]
    tiny = np.abs(denom) < 1e2 * GAP_FLOOR
    denom_safe = np.where(tiny | eye, 1.0, denom)
    damp = np.empty((nparams, nparams) + batch_shape + (dim,), dtype=states.dtype)
    for c in range(nparams):
        tmat = np.where(tiny | eye, 0.0, bmats[c] / denom_safe)   # T[j,i] = B[j,i]/(E_i-E_j)
        for m in range(nparams):
            lo, hi = min(c, m), max(c, m)
            cmat = np.einsum(
                "...ji,...jk,...kl->...il",
                np.conj(states),
                model.second_derivative_many(points, lo, hi),
                states,
            )
            term1 = np.einsum("...ji,...j->...i", np.conj(tmat), bmats[m][..., :, 0])
            term2 = np.einsum("...ij,...j->...i", bmats[m], tmat[..., :, 0])
            damp[c, m] = term1 + cmat[..., :, 0] + term2

    weight3 = np.zeros_like(delta)
    weight3[..., 1:] = 1.0 / delta[..., 1:] ** 3
    diag_idx = np.arange(dim)
    dgap = [
        np.real(b[..., diag_idx, diag_idx] - b[..., 0, 0][..., None]) for b in bmats
    ]
    dg = np.empty(batch_shape + (nparams, nparams, nparams))
    for c in range(nparams):
        for m in range(nparams):
            for n in range(nparams):
                dg[..., c, m, n] = np.real(
                    np.sum((np.conj(damp[c, m]) * amp[n] + np.conj(amp[m]) * damp[c, n]) * weight, axis=-1)
                    - 2 * np.sum(np.conj(amp[m]) * amp[n] * dgap[c] * weight3, axis=-1)
                )
    return g, dg


def ground_states_along(model: HamiltonianFamily, points: np.ndarray) -> np.ndarray:
    """Ground-state vectors at each point of a path, shape (M, dim)."""
    energies, states = eigh_many(model.hamiltonian_many(points))
    warn_if_degenerate(energies)
    return states[..., :, 0]


def step_lengths_along(model: HamiltonianFamily, points: np.ndarray) -> np.ndarray:
    """Exact quench lengths sqrt(1 - |<E0(k+1)|E0(k)>|^2) between consecutive points."""
    v0 = ground_states_along(model, points)
    overlap = np.abs(np.sum(np.conj(v0[:-1]) * v0[1:], axis=-1))
    return np.sqrt(np.maximum(0.0, 1.0 - overlap**2))


def step_length(model: HamiltonianFamily, a: np.ndarray, b: np.ndarray) -> float:
    """Exact ground-state distance between two parameter points.

    Computed from the full overlap, not the perturbative quadratic form, so it
    is valid at any separation; symmetric in its arguments.
    """
    pts = np.stack([np.asarray(a, dtype=float), np.asarray(b, dtype=float)])
    return float(step_lengths_along(model, pts)[0])


def path_length(model: HamiltonianFamily, path) -> float:
    """Sum of exact step lengths over consecutive path points."""
    points = _as_points(path)
    if points.shape[0] < 2:
        return 0.0
    return float(step_lengths_along(model, points).sum())


def cumulative_lengths(model: HamiltonianFamily, points: np.ndarray) -> np.ndarray:
    """Cumulative metric length table along a polyline, shape (M+1,)."""
    dl = step_lengths_along(model, points)
    return np.concatenate([[0.0], np.cumsum(dl)])


def cumulative_euclidean(points: np.ndarray) -> np.ndarray:
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    return np.concatenate([[0.0], np.cumsum(seg)])


def points_at_quantiles(points: np.ndarray, cumlen: np.ndarray, count: int) -> np.ndarray:
    """Resample a polyline at ``count + 1`` equal quantiles of a cumulative table."""
    targets = np.linspace(0.0, cumlen[-1], count + 1)
    return interpolate_at(points, cumlen, targets)


def interpolate_at(points: np.ndarray, cumlen: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Positions on a polyline at given cumulative-length values."""
    seg = np.diff(cumlen)
    idx = np.clip(np.searchsorted(cumlen, targets, side="right") - 1, 0, len(seg) - 1)
    frac = (targets - cumlen[idx]) / np.where(seg[idx] > 0, seg[idx], 1.0)
    out = points[idx] + frac[..., None] * (points[idx + 1] - points[idx])
    return out


def refine(path, factor: int) -> DiscretizedPath:
    """Subdivide every segment of a path ``factor`` times (the curve is unchanged)."""
    points = _as_points(path)
    if factor < 1:
        raise ValueError("factor must be >= 1")
    steps = points.shape[0] - 1
    frac = np.linspace(0.0, 1.0, factor + 1)[:-1]
    pieces = [points[k] + frac[:, None] * (points[k + 1] - points[k]) for k in range(steps)]
    pieces.append(points[-1:])
    dense = np.concatenate(pieces, axis=0)
    family = path.family if isinstance(path, DiscretizedPath) else "custom"
    return DiscretizedPath(points=dense, family=family, parameterization="custom")


def reparameterize(model: HamiltonianFamily, path, count: int, mode: str) -> DiscretizedPath:
    """Resample a densely sampled path at ``count`` equal-length steps.

    ``mode`` selects the notion of length: ``constant-manifold-speed`` uses the
    exact metric step lengths, ``constant-euclidean-speed`` the parameter-plane
    distance.  The input must resolve the output: at least 10 input segments
    per output step.
    """
    if mode not in ("constant-manifold-speed", "constant-euclidean-speed"):
        raise ValueError(f"unknown parameterization mode {mode!r}")
    points = _as_points(path)
    if points.shape[0] - 1 < 10 * count:
        raise ValueError(
            f"input path too coarse: {points.shape[0] - 1} segments "
            f"cannot resolve {count} output steps (need >= {10 * count})"
        )
    if mode == "constant-manifold-speed":
        table = cumulative_lengths(model, points)
    else:
        table = cumulative_euclidean(points)
    out = points_at_quantiles(points, table, count)
    out[0] = points[0]
    out[-1] = points[-1]
    family = path.family if isinstance(path, DiscretizedPath) else "custom"
    return DiscretizedPath(points=out, family=family, parameterization=mode)


# ---------------------------------------------------------------------------
# geodesic relaxation
# ---------------------------------------------------------------------------

def _discrete_energy(model, points):
    mids = 0.5 * (points[:-1] + points[1:])
    delta = points[1:] - points[:-1]
    g = metric_many(model, mids)
    return float(np.einsum("kab,ka,kb->", g, delta, delta))


def _energy_grad_hess(model, points, fd_step=1e-4):
    """Energy, gradient, and block-tridiagonal Hessian data of the path energy.

    The energy is sum_k g(mid_k)[delta_k, delta_k].  Metric values and first
    derivatives are analytic; the second metric derivative entering the Hessian
    is a central difference of the analytic gradient (its accuracy only affects
    the convergence rate, not the converged point).  Midpoint probes are
    projected onto the model domain.
    """
    segs = points.shape[0] - 1
    nparams = model.nparams
    mids = 0.5 * (points[:-1] + points[1:])
    delta = points[1:] - points[:-1]
    probes = [mids]
    for c in range(nparams):
        shift = np.zeros(nparams)
        shift[c] = fd_step
        probes.extend([model.project_point(mids + shift), model.project_point(mids - shift)])
    g_all, dg_all = metric_with_gradient_many(model, np.concatenate(probes, axis=0))
    g_all = g_all.reshape(2 * nparams + 1, segs, nparams, nparams)
    dg_all = dg_all.reshape(2 * nparams + 1, segs, nparams, nparams, nparams)
    g, dg = g_all[0], dg_all[0]
    d2g = np.empty((segs, nparams, nparams, nparams, nparams))
    for c in range(nparams):
        d2g[:, c] = (dg_all[1 + 2 * c] - dg_all[2 + 2 * c]) / (2 * fd_step)

    energy = float(np.einsum("kab,ka,kb->", g, delta, delta))
    gdelta = np.einsum("kab,kb->ka", g, delta)
    quad = np.einsum("kxab,ka,kb->kx", dg, delta, delta)
    grad = np.zeros_like(points)
    grad[1:] += 0.5 * quad + 2 * gdelta
    grad[:-1] += 0.5 * quad - 2 * gdelta

    w = np.einsum("kbac,kc->kab", dg, delta)      # w[a,b] = (d_b g . delta)_a
    sym = w + w.transpose(0, 2, 1)
    qq = 0.25 * np.einsum("kxyab,ka,kb->kxy", d2g, delta, delta)
    qq = 0.5 * (qq + qq.transpose(0, 2, 1))
    h_low = qq - sym + 2 * g          # d2e_k / dP_k dP_k
    h_high = qq + sym + 2 * g         # d2e_k / dP_{k+1} dP_{k+1}
    h_cross = qq + w.transpose(0, 2, 1) - w - 2 * g   # d2e_k / dP_k dP_{k+1}
    return energy, grad, (h_low, h_high, h_cross)


def _assemble_hessian(blocks, segs, nparams, damping):
    h_low, h_high, h_cross = blocks
    n = (segs - 1) * nparams
    diag_blocks = h_high[:-1] + h_low[1:]
    cross_blocks = h_cross[1:-1]
    rows, cols, vals = [], [], []
    base = np.arange(segs - 1) * nparams
    for a in range(nparams):
        for b in range(nparams):
            rows.append(base + a)
            cols.append(base + b)
            vals.append(diag_blocks[:, a, b])
    base = np.arange(segs - 2) * nparams
    for a in range(nparams):
        for b in range(nparams):
            rows.append(base + a)
            cols.append(base + nparams + b)
            vals.append(cross_blocks[:, a, b])
            rows.append(base + nparams + b)
            cols.append(base + a)
            vals.append(cross_blocks[:, a, b])
    mat = sp.csc_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
    )
    if damping > 0:
        mat = mat + damping * sp.identity(n, format="csc")
    return mat


def _constant_speed_resample(model, points):
    table = cumulative_lengths(model, points)
    out = points_at_quantiles(points, table, points.shape[0] - 1)
    out[0] = points[0]
    out[-1] = points[-1]
    return out


def geodesic(
    model: HamiltonianFamily,
    start: np.ndarray,
    end: np.ndarray,
    steps: int,
    *,
    gtol: float = 1e-9,
    max_iterations: int = 200,
    return_diagnostics: bool = False,
):
    """Minimal-length driving path between two parameter points.

    Relaxes the discrete path energy sum_k g(mid_k)[delta_k, delta_k] over the
    interior points, starting from the constant-speed straight chord, with
    damped Newton steps and a step-halving line search on the energy.  The
    energy minimizer is automatically a constant-speed discretization, so the
    returned path carries the ``constant-manifold-speed`` tag.  Interior points
    are projected onto the model domain (e.g. chi >= 0) after every trial step.

    Raises
    ------
    GeodesicConvergenceError
        If the maximum gradient component does not drop below ``gtol`` within
        ``max_iterations``; the error carries the residual.
    """
    if steps < 2:
        raise ValueError("need at least 2 steps")
    start = model.project_point(np.asarray(start, dtype=float))
    end = model.project_point(np.asarray(end, dtype=float))
    frac = np.linspace(0.0, 1.0, steps + 1)[:, None]
    points = start + frac * (end - start)
    points = _constant_speed_resample(model, points)
    points[:, :] = model.project_point(points)

    diag = GeodesicDiagnostics()
    diag.length_trace.append(path_length(model, points))
    energy, grad, blocks = _energy_grad_hess(model, points)
    diag.energy_trace.append(energy)
    damping = 0.0
    # While the curve is still reshaping globally, every accepted step is
    # followed by a constant-speed resampling of the same polyline.  This keeps
    # the iterate free of parameterization slack, which is what makes the metric
    # length decrease together with the energy; once steps shrink below a small
    # fraction of a segment the resampling is switched off so its interpolation
    # error cannot limit the Newton endgame.
    resample_active = True
    segment_scale = max(float(np.linalg.norm(end - start)) / steps, 1e-300)
    for iteration in range(max_iterations):
        interior_grad = grad[1:-1].copy()
        if model.lower_bounds is not None:
            # projected gradient: ignore components pushing against an active bound
            at_bound = points[1:-1] <= model.lower_bounds + 1e-15
            interior_grad[at_bound & (interior_grad > 0)] = 0.0
        residual = float(np.abs(interior_grad).max())
        diag.iterations = iteration
        diag.residual = residual
        if residual < gtol:
            path = DiscretizedPath(
                points=points, family="geodesic", parameterization="constant-manifold-speed"
            )
            return (path, diag) if return_diagnostics else path

        accepted = False
        trial = None
        while True:
            damping_try = damping
            for _ in range(40):
                hess = _assemble_hessian(blocks, steps, model.nparams, damping_try)
                try:
                    step = spla.spsolve(hess, -interior_grad.ravel()).reshape(steps - 1, -1)
                except Exception:
                    damping_try = max(damping_try * 10, 1e-8)
                    continue
                if np.all(np.isfinite(step)) and np.dot(step.ravel(), interior_grad.ravel()) < 0:
                    scale = 1.0
                    for _ in range(30):
                        trial = points.copy()
                        trial[1:-1] = points[1:-1] + scale * step
                        trial[:, :] = model.project_point(trial)
                        if resample_active:
                            trial = _constant_speed_resample(model, trial)
                            trial[:, :] = model.project_point(trial)
                        trial_energy = _discrete_energy(model, trial)
                        if trial_energy < energy:
                            accepted = True
                            break
                        scale *= 0.5
                if accepted:
                    break
                damping_try = max(damping_try * 10, 1e-8)
            if accepted or not resample_active:
                break
            # the resampling's interpolation error now exceeds the attainable
            # energy decrease; drop it and polish with plain Newton steps
            resample_active = False
        if not accepted:
            raise GeodesicConvergenceError(residual, iteration)
        if resample_active and float(np.abs(scale * step).max()) < 0.05 * segment_scale:
            resample_active = False
        points = trial
        energy, grad, blocks = _energy_grad_hess(model, points)
        damping = damping_try / 10 if damping_try > 1e-11 else 0.0
        diag.energy_trace.append(energy)
        diag.length_trace.append(path_length(model, points))
    raise GeodesicConvergenceError(float(np.abs(grad[1:-1]).max()), max_iterations)
