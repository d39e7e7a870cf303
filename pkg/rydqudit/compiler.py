"""
CZ compilation from CR pulses.

Angles inside the modular solver are carried in turns (units of 2*pi) as
:class:`fractions.Fraction` whenever they are rational multiples of 2*pi/d, so
feasibility is decided exactly over the integers.
"""
import itertools
import logging
import math
from fractions import Fraction

import numpy as np

from .algebra import cr, cz, local_phases, pauli_x, phase_gate
from .conf import get_setting
from .exceptions import InvalidConfiguration, PulseBudgetExceeded, RydquditError, SequenceFormError
from .hamiltonian import chain_tones, control_basis
from .models import (
    CRPulse,
    GateSequence,
    NoGoVerdict,
    PhaseMatrix,
    QuditGate,
    QuditSpace,
    SingleQuditGate,
    VirtualPhase,
)
from .utils import TWO_PI, deviation_up_to_phase, turns_to_angle, wrap_angle

logger = logging.getLogger('rydqudit.compiler')


def cz_phase_matrix(d):
    """
    ``theta[j, m] = (2 pi/d) j m + [(2 pi/d) j^2 - pi j (d-1)] delta_jm`` for
    ``j, m`` in ``1..d-1``, wrapped onto (-pi, pi].
    """
    QuditSpace(d)
    theta = np.zeros((d - 1, d - 1))
    for j in range(1, d):
        for m in range(1, d):
            value = TWO_PI / d * j * m
            if j == m:
                value += TWO_PI / d * j * j - math.pi * j * (d - 1)
            theta[j - 1, m - 1] = wrap_angle(value)
    return PhaseMatrix(d, theta)


def _is_trivial(theta):
    return abs(wrap_angle(theta)) < get_setting('ANGLE_TOL')


def compile_cz(d):
    """
    ``CZ`` as single-tone pulses ``CR_j(theta_jj)`` followed by two-tone pulses
    ``CR_{j,m}(theta_jm)``, ``j < m``.  Pulses with a trivial angle are left out.
    """
    phases = cz_phase_matrix(d)
    steps = [CRPulse((j,), phases(j, j)) for j in range(1, d)]
    steps += [CRPulse((j, m), phases(j, m)) for j in range(1, d) for m in range(j + 1, d)]
    return GateSequence(d, tuple(step for step in steps if not _is_trivial(step.theta)))


def compile_cz_qutrit_single_rydberg():
    """
    Qutrit CZ with only level 2 Rydberg-coupled: ``[X x X, CR_2(4pi/3)]`` three
    times, then ``R_0(2pi/3)`` on both atoms.
    """
    x = SingleQuditGate(pauli_x(3), label='X')
    steps = [x, CRPulse((2,), 4 * math.pi / 3)] * 3
    steps.append(VirtualPhase(0, TWO_PI / 3))
    return GateSequence(3, tuple(steps))


def step_unitary(step, d):
    """The ideal two-qudit action of one sequence step."""
    if isinstance(step, SingleQuditGate):
        u = np.asarray(step.gate.entries)
        return np.kron(u, u)
    if isinstance(step, VirtualPhase):
        r = np.asarray(phase_gate(d, step.level, step.theta).entries)
        return np.kron(r, r)
    if isinstance(step, CRPulse):
        phases = np.asarray(local_phases(d, step.chi).entries)
        return np.asarray(cr(d, step.targets, step.theta).entries) @ np.kron(phases, phases)
    raise SequenceFormError(f'cannot evaluate step {step!r}')


def sequence_to_unitary(seq, space=None):
    """Product of the step unitaries in time order."""
    d = seq.d if space is None else (space.d if isinstance(space, QuditSpace) else int(space))
    if d != seq.d:
        raise SequenceFormError(f'sequence for d={seq.d} evaluated in a d={d} space')
    total = np.eye(d * d, dtype=complex)
    for step in seq.steps:
        total = step_unitary(step, d) @ total
    return QuditGate(total)


def verify_cz(seq, tol=1e-9):
    deviation = deviation_up_to_phase(np.asarray(sequence_to_unitary(seq).entries), np.asarray(cz(seq.d).entries))
    return deviation < tol, deviation


# ---------------------------------------------------------------------------
# Exact modular linear algebra
# ---------------------------------------------------------------------------

def smith_diagonalize(matrix):
    """
    Integer matrices ``U``, ``D``, ``V`` with ``U A V = D`` diagonal and ``U``,
    ``V`` unimodular, plus the rank.  The divisibility chain of the true Smith
    normal form is not enforced; solving does not need it.
    """
    a = [[int(value) for value in row] for row in matrix]
    n_rows = len(a)
    n_cols = len(a[0]) if a else 0
    u = [[int(i == j) for j in range(n_rows)] for i in range(n_rows)]
    v = [[int(i == j) for j in range(n_cols)] for i in range(n_cols)]

    def add_row(target, source, factor):
        for rows in (a, u):
            rows[target] = [x - factor * y for x, y in zip(rows[target], rows[source])]

    def add_col(target, source, factor):
        for cols in (a, v):
            for row in cols:
                row[target] -= factor * row[source]

    def swap_cols(i, j):
        for cols in (a, v):
            for row in cols:
                row[i], row[j] = row[j], row[i]

    rank = 0
    for t in range(min(n_rows, n_cols)):
        while True:
            candidates = [(abs(a[i][j]), i, j) for i in range(t, n_rows) for j in range(t, n_cols) if a[i][j]]
            if not candidates:
                return u, a, v, rank
            _, i, j = min(candidates)
            a[t], a[i] = a[i], a[t]
            u[t], u[i] = u[i], u[t]
            swap_cols(t, j)
            clean = True
            for i in range(t + 1, n_rows):
                add_row(i, t, a[i][t] // a[t][t])
                clean = clean and a[i][t] == 0
            for j in range(t + 1, n_cols):
                add_col(j, t, a[t][j] // a[t][t])
                clean = clean and a[t][j] == 0
            if clean:
                break
        rank += 1
    return u, a, v, rank


def _is_integer(value, tol):
    if isinstance(value, Fraction):
        return value.denominator == 1
    return abs(value - round(value)) < tol


def solve_modular(matrix, b_turns, tol=1e-9):
    """
    A real ``x`` with ``A x = b (mod 1)``, or None when no such ``x`` exists.
    ``A`` is an integer matrix, ``b`` is in turns (Fractions give an exact
    answer, floats are compared against ``tol``).
    """
    u, d, v, rank = smith_diagonalize(matrix)
    c = [sum((coeff * value for coeff, value in zip(row, b_turns)), Fraction(0)) for row in u]
    if not all(_is_integer(value, tol) for value in c[rank:]):
        return None
    y = [c[i] / d[i][i] for i in range(rank)] + [Fraction(0)] * (len(v) - rank)
    return [sum((coeff * value for coeff, value in zip(row, y)), Fraction(0)) for row in v]


def _pair_rows(d):
    return [(j, m) for j in range(1, d) for m in range(j, d)]


def _supports(d, max_tones):
    """Non-empty tone subsets, by size and then lexicographically."""
    levels = range(1, d)
    return [support for size in range(1, max_tones + 1) for support in itertools.combinations(levels, size)]


def minimize_pulse_count(d, max_tones, max_pulses=None):
    """
    The fewest CR pulses, each driving at most ``max_tones`` Rydberg tones at
    once, that compose to ``CZ``.  Among solutions with the same pulse count the
    one with the fewest tones in total wins; remaining ties go to the first
    support choice in canonical order.
    """
    QuditSpace(d)
    if not 1 <= max_tones <= d - 1:
        raise InvalidConfiguration(f'max_tones must lie in 1..{d - 1}, got {max_tones}')
    rows = _pair_rows(d)
    targets = [Fraction(j * m, d) for j, m in rows]
    supports = _supports(d, max_tones)
    budget = len(rows) if max_pulses is None else max_pulses

    for count in range(1, budget + 1):
        best = None
        for choice in itertools.combinations(supports, count):
            tones = sum(len(support) for support in choice)
            if best is not None and tones >= best[0]:
                continue
            matrix = [[int(j in support and m in support) for support in choice] for j, m in rows]
            solution = solve_modular(matrix, targets)
            if solution is not None:
                best = (tones, choice, solution)
        if best is not None:
            _, choice, solution = best
            pulses = tuple(
                CRPulse(support, turns_to_angle(turns))
                for support, turns in zip(choice, solution)
                if not _is_trivial(turns_to_angle(turns))
            )
            seq = GateSequence(d, pulses)
            ok, deviation = verify_cz(seq)
            if not ok:
                raise RydquditError(f'pulse search produced a sequence off CZ by {deviation:.3g}')
            logger.info(
                f'compiler.minimize.done d={d} max_tones={max_tones} pulses={seq.pulse_count} tones={seq.tone_count}'
            )
            return seq
    logger.warning(f'compiler.minimize.budget_exceeded d={d} max_tones={max_tones} budget={budget}')
    raise PulseBudgetExceeded(f'no CZ decomposition for d={d} with <= {max_tones} tones in {budget} pulses')


# ---------------------------------------------------------------------------
# Lowering onto physically coupled Rydberg levels
# ---------------------------------------------------------------------------

def transposition(d, k):
    """Permutation gate exchanging levels ``k`` and ``k + 1``."""
    space = QuditSpace(d)
    space.check_level(k + 1)
    order = list(range(d))
    order[k], order[k + 1] = order[k + 1], order[k]
    return QuditGate(np.eye(d)[order], label=f'P_{k}{k + 1}')


def _route(targets, coupled, d):
    """
    Adjacent transpositions (as lower level indices) moving ``targets`` onto
    coupled levels, order-preserving, and the levels the targets end up on.
    """
    if set(targets) <= set(coupled):
        return [], tuple(targets)
    if len(targets) > len(coupled):
        raise SequenceFormError(f'{len(targets)} targets cannot share {len(coupled)} Rydberg levels')
    images = min(
        itertools.combinations(sorted(coupled), len(targets)),
        key=lambda images: sum(abs(s - c) for s, c in zip(targets, images)),
    )
    position = {level: image for level, image in zip(targets, images)}
    free = iter(level for level in range(1, d) if level not in images)
    for level in range(1, d):
        if level not in position:
            position[level] = next(free)
    arrangement = list(range(1, d))
    swaps = []
    for _ in range(len(arrangement)):
        for i in range(len(arrangement) - 1):
            if position[arrangement[i]] > position[arrangement[i + 1]]:
                arrangement[i], arrangement[i + 1] = arrangement[i + 1], arrangement[i]
                swaps.append(i + 1)
    return swaps, tuple(images)


def lower_to_two_rydberg_levels(seq, coupled=(1, 2), library=None):
    """
    Rewrite ``seq`` for hardware where only ``coupled`` levels have a
    Rydberg partner.  A pulse on other levels is conjugated by level
    permutations; the local phases of each physical pulse (from ``library``
    when given, else carried by the pulse) are undone by virtual phases.
    """
    coupled = tuple(sorted(coupled))
    steps = []
    for step in seq.steps:
        if not isinstance(step, CRPulse):
            steps.append(step)
            continue
        swaps, images = _route(step.targets, coupled, seq.d)
        gates = [SingleQuditGate(transposition(seq.d, k), label=f'P_{k}{k + 1}') for k in swaps]
        chi = library.lookup(images, step.theta).chi if library is not None else step.chi
        steps.extend(gates)
        steps.append(CRPulse(images, step.theta, chi))
        steps.extend(VirtualPhase(level, -value) for level, value in chi)
        steps.extend(reversed(gates))
    lowered = GateSequence(seq.d, tuple(steps))
    logger.debug(f'compiler.lower.done d={seq.d} coupled={coupled} steps={len(lowered)}')
    return lowered


# ---------------------------------------------------------------------------
# Single-Rydberg-level phase structure
# ---------------------------------------------------------------------------

def _check_single_rydberg_form(seq):
    levels = set()
    for step in seq.steps:
        if isinstance(step, CRPulse):
            if len(step.targets) != 1:
                raise SequenceFormError(f'{step.label} drives more than one Rydberg level')
            levels.add(step.targets[0])
        elif not isinstance(step, (SingleQuditGate, VirtualPhase)):
            raise SequenceFormError(f'unexpected step {step!r}')
    if len(levels) > 1:
        raise SequenceFormError(f'pulses address Rydberg partners of levels {sorted(levels)}, expected one')


def verify_no_go_structure(seq):
    """
    For a sequence using a single Rydberg-coupled level: if its action is
    diagonal, check that ``U|j,m> = exp(i(xi_j + xi_m))|j,m>`` for all ``j != m``.
    """
    _check_single_rydberg_form(seq)
    d = seq.d
    unitary = sequence_to_unitary(seq)
    if not unitary.is_diagonal(1e-10):
        return NoGoVerdict(applicable=False, unitary=unitary)
    angles = np.angle(np.diag(unitary.entries)).reshape(d, d)
    pairs = [(j, m) for j in range(d) for m in range(d) if j != m]
    xi = np.zeros(d)
    if d == 2:
        xi[1] = angles[0, 1]
    else:
        xi[0] = (angles[0, 1] + angles[0, 2] - angles[1, 2]) / 2
        xi[1:] = angles[0, 1:] - xi[0]
    design = np.zeros((len(pairs), d))
    for row, (j, m) in enumerate(pairs):
        design[row, j] += 1
        design[row, m] += 1

    def residuals(xi):
        return np.array([wrap_angle(angles[j, m] - xi[j] - xi[m]) for j, m in pairs])

    correction, *_ = np.linalg.lstsq(design, residuals(xi), rcond=None)
    xi = xi + correction
    residual = float(np.max(np.abs(residuals(xi))))
    return NoGoVerdict(
        applicable=True,
        additive=residual < 1e-9,
        xi=np.array([wrap_angle(value) for value in xi]),
        residual=residual,
        unitary=unitary,
    )


def cz_additive_feasible(d):
    """
    Whether phases ``xi`` with ``xi_j + xi_m = 2 pi j m / d (mod 2 pi)`` exist
    for all ``j < m``; exact.
    """
    rows = [(j, m) for j in range(d) for m in range(j + 1, d)]
    matrix = [[int(k in (j, m)) for k in range(d)] for j, m in rows]
    return solve_modular(matrix, [Fraction(j * m, d) for j, m in rows]) is not None


# ---------------------------------------------------------------------------
# Controllability
# ---------------------------------------------------------------------------

def _real_vector(matrix):
    flat = np.asarray(matrix, dtype=complex).ravel()
    return np.concatenate([flat.real, flat.imag])


def lie_closure_dimension(generators, tol=1e-9):
    """
    Dimension of the real Lie algebra generated by Hermitian ``generators``
    under ``i[A, B]``.
    """
    basis, vectors = [], []

    def absorb(matrix):
        norm = np.linalg.norm(matrix)
        if norm < tol:
            return None
        matrix = matrix / norm
        vector = _real_vector(matrix)
        for _ in range(2):
            for existing in vectors:
                vector = vector - (existing @ vector) * existing
        residual = np.linalg.norm(vector)
        if residual < tol:
            return None
        vectors.append(vector / residual)
        basis.append(matrix)
        return matrix

    frontier = [m for m in (absorb(np.asarray(g, dtype=complex)) for g in generators) if m is not None]
    while frontier:
        snapshot = list(basis)
        fresh = []
        for a in frontier:
            for b in snapshot:
                added = absorb(1j * (a @ b - b @ a))
                if added is not None:
                    fresh.append(added)
        frontier = fresh
    return len(basis)


def chain_generators(d):
    """The control operators of nearest-neighbour driving ``j <-> j+1``."""
    return list(control_basis(chain_tones(d), dim=d).operators)
