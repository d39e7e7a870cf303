"""
Dense qudit gates: generalized Paulis, the Fourier (Hadamard) gate, level
phases, CZ, the CR family, and the averaged gate fidelity.
"""
import cmath
import math

import numpy as np

from .exceptions import DimensionMismatch, InvalidLevel
from .models import QuditGate, QuditSpace


def _space(space):
    return space if isinstance(space, QuditSpace) else QuditSpace(space)


def pauli_x(space):
    """``X|j> = |j+1 mod d>``."""
    d = _space(space).d
    return QuditGate(np.roll(np.eye(d), 1, axis=0), label='X')


def pauli_z(space):
    """``Z|j> = omega^j |j>``."""
    space = _space(space)
    return QuditGate(np.diag(space.omega ** np.arange(space.d)), label='Z')


def hadamard(space):
    """``H|j> = d^(-1/2) sum_k omega^(jk) |k>``."""
    space = _space(space)
    j, k = np.meshgrid(np.arange(space.d), np.arange(space.d))
    return QuditGate(space.omega ** (j * k) / math.sqrt(space.d), label='H')


def phase_gate(space, k, theta):
    """``R_k(theta)``: phase ``exp(i theta)`` on level ``k`` only."""
    space = _space(space)
    space.check_level(k)
    diagonal = np.ones(space.d, dtype=complex)
    diagonal[k] = cmath.exp(1j * theta)
    return QuditGate(np.diag(diagonal), label=f'R_{k}({theta:.6g})')


def local_phases(space, chi):
    """
    Diagonal single-qudit phase ``L(chi)`` from a mapping or sequence of
    (level, radians) pairs.
    """
    space = _space(space)
    diagonal = np.ones(space.d, dtype=complex)
    for level, value in dict(chi).items():
        space.check_level(level)
        diagonal[level] = cmath.exp(1j * value)
    return QuditGate(np.diag(diagonal))


def cz(space):
    """``CZ|j,k> = omega^(jk) |j,k>``."""
    space = _space(space)
    levels = np.arange(space.d)
    return QuditGate(np.diag((space.omega ** np.outer(levels, levels)).ravel()), label='CZ')


def cr(space, targets, theta):
    """
    ``CR_S(theta)``: phase ``exp(i theta)`` on ``|k1,k2>`` when both ``k1`` and
    ``k2`` are in ``S``.
    """
    space = _space(space)
    targets = set(targets)
    if not targets:
        raise InvalidLevel('CR needs a nonempty target set')
    if 0 in targets:
        raise InvalidLevel('level 0 is never Rydberg-coupled')
    for level in targets:
        space.check_level(level)
    inside = np.isin(np.arange(space.d), sorted(targets))
    hit = np.outer(inside, inside).ravel()
    diagonal = np.where(hit, cmath.exp(1j * theta), 1.0)
    return QuditGate(np.diag(diagonal), label=f"CR_{{{','.join(map(str, sorted(targets)))}}}({theta:.6g})")


def swap(space):
    d = _space(space).d
    permutation = np.arange(d * d).reshape(d, d).T.ravel()
    return QuditGate(np.eye(d * d)[permutation])


def average_gate_fidelity(target, achieved, n_qudits, space):
    """
    ``|Tr(U_tar^dagger U)|^2 / d^(2n)``.  ``achieved`` may be the sub-unitary
    projection of a larger propagator onto the computational block.
    """
    space = _space(space)
    target = np.asarray(getattr(target, 'entries', target))
    achieved = np.asarray(getattr(achieved, 'entries', achieved))
    dim = space.d ** n_qudits
    if target.shape != (dim, dim) or achieved.shape != (dim, dim):
        raise DimensionMismatch(
            f'fidelity needs two {dim}x{dim} matrices, got {target.shape} and {achieved.shape}'
        )
    overlap = np.trace(np.conj(target).T @ achieved)
    return float(abs(overlap) ** 2 / dim ** 2)


def gate_by_name(name, space):
    gates = {'x': pauli_x, 'z': pauli_z, 'h': hadamard}
    try:
        return gates[name.lower()](space)
    except KeyError:
        raise InvalidLevel(f'unknown single-qudit gate {name!r}; expected one of {sorted(gates)}')
