"""Coherent-driving baseline: Schrodinger evolution along a parameter ramp.

The propagator freezes the Hamiltonian at the midpoint of each substep and
applies the exact unitary exp(-i H dt) through the spectral decomposition, so
the evolution is unconditionally unitary and second order in the substep.  The
substep count doubles adaptively until the final ground-state fidelity is
converged.  On top of the integrator sit the infidelity-versus-time sweep and
the search for the smallest stroboscopic step count that beats coherent
driving on the same trajectory.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .models import HamiltonianFamily
from .protocol import run_stroboscopic
from .spectral import eigh_many
from .trajectories import Trajectory

DEFAULT_TOLERANCE = 1e-8
DEFAULT_STEP_CAP = 10**6


class IntegratorConvergenceError(RuntimeError):
    """Substep doubling exhausted before the fidelity settled."""

    def __init__(self, last: float, previous: float, substeps: int):
        super().__init__(
            f"fidelity not converged at {substeps} substeps: "
            f"last two values {previous:.12f}, {last:.12f}"
        )
        self.last_values = (previous, last)
        self.substeps = substeps


@dataclass
class CoherentResult:
    """Final state and ground-state fidelity of one coherent drive."""

    state: np.ndarray
    fidelity: float
    substeps: int
    trace_times: np.ndarray | None = None
    trace_fidelity: np.ndarray | None = None

    @property
    def infidelity(self) -> float:
        return 1.0 - self.fidelity


def _ground_state(model, point):
    energies, states = eigh_many(model.hamiltonian_many(np.asarray(point)[None]))
    return states[0][:, 0]


def _propagate(model, position_fn, total_time, substeps, chunk=8192):
    """Apply the midpoint-frozen exponential chain; returns the final state.

    Substep unitaries are built in chunks and multiplied pairwise (tree
    reduction), which keeps everything in batched linear algebra.
    """
    psi = _ground_state(model, position_fn(np.array(0.0))).astype(complex)
    dt = total_time / substeps
    for lo in range(0, substeps, chunk):
        hi = min(substeps, lo + chunk)
        mids = (np.arange(lo, hi) + 0.5) / substeps
        pts = position_fn(mids)
        energies, states = np.linalg.eigh(model.hamiltonian_many(pts))
        phases = np.exp(-1j * energies * dt)
        unitaries = np.einsum("kij,kj,klj->kil", states, phases, np.conj(states))
        while unitaries.shape[0] > 1:
            count = unitaries.shape[0]
            half = count // 2
            prod = np.einsum("kij,kjl->kil", unitaries[1 : 2 * half : 2], unitaries[0 : 2 * half : 2])
            if count % 2:
                prod = np.concatenate([prod, unitaries[-1:]], axis=0)
            unitaries = prod
        psi = unitaries[0] @ psi
    return psi


def integrate_schrodinger(
    model: HamiltonianFamily,
    position_fn,
    total_time: float,
    *,
    tolerance: float = DEFAULT_TOLERANCE,
    initial_substeps: int | None = None,
    max_doublings: int = 22,
    substep_cap: int = 2**23,
    trace_times: np.ndarray | None = None,
) -> CoherentResult:
    """Evolve the instantaneous ground state along a ramp and score the target overlap.

    ``position_fn`` maps an array of time fractions in [0, 1] to parameter
    points.  The state starts in the ground state at fraction 0; the fidelity
    is the squared overlap with the ground state at fraction 1.  Substeps
    double until the fidelity changes by less than ``tolerance``.

    Raises
    ------
    IntegratorConvergenceError
        If the doubling budget is exhausted; carries the last two fidelities.
    """
    target = _ground_state(model, position_fn(np.array(1.0)))
    if total_time == 0:
        initial = _ground_state(model, position_fn(np.array(0.0)))
        fid = float(np.abs(np.vdot(target, initial)) ** 2)
        return CoherentResult(state=initial.astype(complex), fidelity=fid, substeps=0)

    substeps = initial_substeps or max(64, int(np.ceil(8 * total_time)))
    psi = _propagate(model, position_fn, total_time, substeps)
    fid = float(np.abs(np.vdot(target, psi)) ** 2)
    new_fid = fid
    for _ in range(max_doublings):
        if 2 * substeps > substep_cap:
            break
        substeps *= 2
        psi = _propagate(model, position_fn, total_time, substeps)
        new_fid = float(np.abs(np.vdot(target, psi)) ** 2)
        if abs(new_fid - fid) < tolerance:
            result = CoherentResult(state=psi, fidelity=new_fid, substeps=substeps)
            if trace_times is not None:
                result.trace_times, result.trace_fidelity = _fidelity_trace(
                    model, position_fn, total_time, substeps, trace_times
                )
            return result
        fid = new_fid
    raise IntegratorConvergenceError(new_fid, fid, substeps)


def _fidelity_trace(model, position_fn, total_time, substeps, sample_times):
    """Instantaneous ground-state fidelity at requested times (diagnostic)."""
    sample_times = np.asarray(sample_times, dtype=float)
    marks = np.unique(np.clip(np.round(sample_times / total_time * substeps), 0, substeps).astype(int))
    psi = _ground_state(model, position_fn(np.array(0.0))).astype(complex)
    dt = total_time / substeps
    fids = []
    times = []
    prev = 0
    for mark in marks:
        if mark > prev:
            mids = (np.arange(prev, mark) + 0.5) / substeps
            pts = position_fn(mids)
            energies, states = np.linalg.eigh(model.hamiltonian_many(pts))
            phases = np.exp(-1j * energies * dt)
            unitaries = np.einsum("kij,kj,klj->kil", states, phases, np.conj(states))
            for u in unitaries:
                psi = u @ psi
            prev = mark
        here = _ground_state(model, position_fn(np.array(mark / substeps)))
        fids.append(float(np.abs(np.vdot(here, psi)) ** 2))
        times.append(mark / substeps * total_time)
    return np.array(times), np.array(fids)


def coherent_sweep(
    model: HamiltonianFamily,
    trajectory: Trajectory,
    times,
    *,
    tolerance: float = DEFAULT_TOLERANCE,
) -> list[dict]:
    """Final coherent infidelity for each total driving time on one trajectory."""
    rows = []
    for total_time in times:
        result = integrate_schrodinger(
            model, trajectory.position_at, float(total_time), tolerance=tolerance
        )
        rows.append(
            {
                "path_family": trajectory.family,
                "T": float(total_time),
                "I_coherent": result.infidelity,
            }
        )
    return rows


def minimal_steps(
    model: HamiltonianFamily,
    trajectory: Trajectory,
    total_time: float,
    *,
    cap: int = DEFAULT_STEP_CAP,
    coherent_infidelity: float | None = None,
    tolerance: float = DEFAULT_TOLERANCE,
) -> tuple[int | None, float | None]:
    """Smallest stroboscopic step count that beats coherent driving at this time.

    Evaluates the decoherent protocol exactly per step count; finds a
    satisfying K by doubling, narrows it by bisection, then scans +-10% around
    the bisection result since exact monotonicity in K is not assumed.  Returns
    ``(K_min, tau)`` with tau = T / K_min, or ``(None, None)`` if no step count
    up to ``cap`` (or resolvable by the trajectory table) wins.
    """
    if total_time <= 0:
        raise ValueError("total time must be positive")
    if coherent_infidelity is None:
        coherent_infidelity = integrate_schrodinger(
            model, trajectory.position_at, total_time, tolerance=tolerance
        ).infidelity

    step_cap = min(cap, trajectory.dense_steps // 10)

    def beats(steps: int) -> bool:
        path = trajectory.discretize(steps)
        return run_stroboscopic(model, path).final_infidelity < coherent_infidelity

    steps = 1
    while not beats(steps):
        if steps >= step_cap:
            return None, None
        steps = min(2 * steps, step_cap)
    lo, hi = steps // 2, steps
    while hi - lo > 1 and lo >= 1:
        mid = (lo + hi) // 2
        if beats(mid):
            hi = mid
        else:
            lo = mid
    best = hi
    for candidate in range(max(1, int(0.9 * best)), min(step_cap, int(1.1 * best)) + 1):
        if candidate < best and beats(candidate):
            best = candidate
    return best, total_time / best
