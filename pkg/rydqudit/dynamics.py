"""
Propagation of piecewise-constant Hamiltonians.

Every slice propagator is the exact exponential of its Hermitian exponent,
taken through the spectral decomposition ``H = V diag(lambda) V^dagger``.
"""
import logging

import numpy as np

from .conf import get_setting
from .exceptions import DimensionMismatch, GridTooCoarse, NonFiniteControls
from .models import PropagationRecord, StateTrajectory
from .utils import dagger

logger = logging.getLogger('rydqudit.dynamics')


def spectral_propagators(hamiltonians, dt):
    """
    ``exp(-i dt H_r)`` for a stack of Hermitian matrices, plus their
    eigenvalues and eigenvectors.
    """
    eigenvalues, eigenvectors = np.linalg.eigh(hamiltonians)
    phases = np.exp(-1j * dt * eigenvalues)
    slices = (eigenvectors * phases[..., None, :]) @ dagger(eigenvectors)
    return slices, eigenvalues, eigenvectors


def cumulative_products(slices):
    """``U_r ... U_1`` for every ``r``."""
    forward = np.empty_like(slices)
    current = np.eye(slices.shape[1], dtype=complex)
    for r, step in enumerate(slices):
        current = step @ current
        forward[r] = current
    return forward


def check_slice_norm(drive, dt):
    """
    Refuse grids on which the time-dependent part of ``H`` turns by
    ``MAX_SLICE_PHASE`` radians or more within a single slice.  Static drift
    is exponentiated exactly and does not count.
    """
    norm = float(np.max(np.abs(np.linalg.eigvalsh(drive)), initial=0.0))
    limit = get_setting('MAX_SLICE_PHASE')
    if norm * dt >= limit:
        raise GridTooCoarse(f'max ||H|| * dt = {norm * dt:.3g} rad is not below {limit} rad; use more slices')
    return norm


def propagate(controls, basis, grid):
    """
    ``U_r = exp(-i dt sum_m u_m,r H_m)`` for every slice and the products
    ``U_N ... U_1`` of the controls ``u`` (shape ``(2M, N)``).
    """
    controls = np.asarray(controls, dtype=float)
    if controls.shape != (basis.n_controls, grid.N):
        raise DimensionMismatch(
            f'controls of shape {controls.shape} do not match {basis.n_controls} operators on {grid.N} slices'
        )
    if not np.all(np.isfinite(controls)):
        raise NonFiniteControls('controls contain NaN or infinite values')
    hamiltonians = basis.hamiltonians(controls, grid.midpoints)
    norm = check_slice_norm(hamiltonians - basis.drift, grid.dt)
    logger.debug(f'dynamics.propagate dim={basis.dim} slices={grid.N} max_phase={norm * grid.dt:.3g}')
    slices, eigenvalues, eigenvectors = spectral_propagators(hamiltonians, grid.dt)
    return PropagationRecord(
        grid=grid,
        slices=slices,
        forward=cumulative_products(slices),
        eigenvalues=eigenvalues,
        eigenvectors=eigenvectors,
        n_computational=basis.n_computational,
    )


def evolve_state(state, hamiltonian, grid):
    """
    Evolve ``state`` on ``grid`` and return it at every grid edge.
    ``hamiltonian`` is a function of time (sampled at slice midpoints), a
    single matrix, or a stack of ``N`` matrices.
    """
    if callable(hamiltonian):
        stack = np.array([hamiltonian(t) for t in grid.midpoints])
    else:
        stack = np.asarray(hamiltonian)
        if stack.ndim == 2:
            stack = np.broadcast_to(stack, (grid.N,) + stack.shape)
    if stack.shape != (grid.N, state.dim, state.dim):
        raise DimensionMismatch(
            f'Hamiltonian stack of shape {stack.shape} for a {state.dim}-level state on {grid.N} slices'
        )
    slices, _, _ = spectral_propagators(stack, grid.dt)
    states = np.empty((grid.N + 1, state.dim), dtype=complex)
    states[0] = state.amplitudes
    for r, step in enumerate(slices):
        states[r + 1] = step @ states[r]
    return StateTrajectory(grid.edges, states)


def average_rydberg_population(record, projectors, space=None):
    """
    ``(1/(d^2 T)) int_0^T Tr[U(t)^dagger (Pi_ryd + 2 Pi_bloc) U(t) Pi_comp] dt``
    by the midpoint rule on the propagation grid.

    ``space`` is only used to check that ``Pi_comp`` spans ``d^2`` states.
    """
    comp, ryd, bloc = (np.asarray(p) for p in projectors)
    for name, p in (('Pi_comp', comp), ('Pi_ryd', ryd), ('Pi_bloc', bloc)):
        if p.shape != (record.dim, record.dim):
            raise DimensionMismatch(f'{name} has shape {p.shape}, the record is {record.dim}-dimensional')
    n_comp = float(np.trace(comp).real)
    if space is not None and round(n_comp) != space.d ** 2:
        raise DimensionMismatch(f'Pi_comp has rank {n_comp:g}, expected {space.d ** 2}')
    weight = ryd + 2 * bloc
    unitaries = record.midpoint_unitaries()
    values = np.einsum('rai,ab,rbj,ji->r', np.conj(unitaries), weight, unitaries, comp).real
    return float(values.mean() / n_comp)
