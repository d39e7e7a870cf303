"""
Gradient-ascent pulse engineering.

The fidelity ``F = |Tr(U_tar^dagger U)|^2 / D^2`` of the projected propagator
is differentiated exactly: every slice propagator comes from the spectral
decomposition of its Hamiltonian, so its derivative along ``H_m`` is
``V [(V^dagger (-i dt H_m) V) o Phi] V^dagger`` with the divided differences
``Phi_ab = (exp(-i dt l_a) - exp(-i dt l_b)) / (-i dt (l_a - l_b))``.  To first
order in ``dt`` this is the familiar ``dt Im{...}`` expression.

Three parametrizations share that core:

* ``slice``: free per-slice controls, kept inside the Rabi cap by radial
  projection after every ascent step;
* ``phase``: ``|Omega|`` pinned at the cap (times an optional ramp), only the
  per-slice phases move;
* ``fourier``: a truncated Fourier series per control, mapped into the cap by
  a smooth ``tanh`` saturation of each tone's amplitude.
"""
import concurrent.futures
import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.optimize import minimize

from .algebra import cr, cz, gate_by_name
from .conf import get_setting
from .dynamics import propagate
from .exceptions import BracketError, DimensionMismatch, GridTooCoarse, InvalidConfiguration, NonFiniteControls
from .hamiltonian import chain_tones, control_basis, two_atom_control_basis
from .models import (
    RYDBERG,
    FourierParams,
    GrapeProblem,
    LevelScheme,
    OptimizationResult,
    PulseSchedule,
    QuditSpace,
    TimeGrid,
    TimeScan,
    TwoAtomConfig,
)
from .signals import pulse_optimized, scan_point_finished
from .utils import TWO_PI, dagger, raised_cosine_ramp, trajectory_rng, wrap_angle

logger = logging.getLogger('rydqudit.grape')


@dataclass(frozen=True)
class OptimizerOptions:

    max_iter: int = field(default_factory=lambda: get_setting('MAX_ITER'))
    ftol: float = field(default_factory=lambda: get_setting('FTOL'))
    gtol: float = field(default_factory=lambda: get_setting('GTOL'))
    n_starts: int = field(default_factory=lambda: get_setting('MULTISTART'))
    threads: int = 1
    # 'smooth': random phase knots interpolated across the pulse; 'uniform': iid per slice
    init: str = 'smooth'


# ---------------------------------------------------------------------------
# Fidelity and exact gradients
# ---------------------------------------------------------------------------

def _divided_differences(eigenvalues, dt):
    exponents = -1j * dt * eigenvalues
    a = exponents[:, :, None]
    b = exponents[:, None, :]
    diff = a - b
    small = np.abs(diff) < 1e-12
    ratio = np.where(small, 1 + diff / 2, np.expm1(diff) / np.where(small, 1, diff))
    return np.exp(b) * ratio


def _evaluate(problem, controls, chi=None):
    """
    Fidelity, its gradient with respect to the physical controls ``u`` and
    with respect to the free local phases.
    """
    controls = np.asarray(controls, dtype=float)
    if not np.all(np.isfinite(controls)):
        raise NonFiniteControls('controls contain NaN or infinite values')
    if chi is not None and not np.all(np.isfinite(chi)):
        raise NonFiniteControls('local phases contain NaN or infinite values')
    grid, basis = problem.grid, problem.basis
    record = propagate(controls, basis, grid)
    n = problem.dim
    target = problem.target_matrix(chi)
    overlap = target.conj().T @ record.projected
    g = np.trace(overlap)
    fidelity = float(abs(g) ** 2 / n ** 2)

    dim = record.dim
    embedded = np.zeros((dim, dim), dtype=complex)
    embedded[:n, :n] = target
    target_dagger = embedded.conj().T
    eye = np.eye(dim, dtype=complex)
    sandwich = np.empty_like(record.slices)
    backward = eye
    for r in range(grid.N - 1, -1, -1):
        before = record.forward[r - 1] if r > 0 else eye
        sandwich[r] = before @ target_dagger @ backward
        backward = backward @ record.slices[r]

    vectors = record.eigenvectors
    rotated = dagger(vectors) @ sandwich @ vectors
    phi = _divided_differences(record.eigenvalues, grid.dt)
    times = grid.midpoints
    grad_g = np.empty((basis.n_controls, grid.N), dtype=complex)
    for m in range(basis.n_controls):
        generator = (-1j * grid.dt) * (dagger(vectors) @ basis.control_operator(m, times) @ vectors)
        grad_g[m] = np.einsum('rba,rab->r', rotated, generator * phi)
    grad = 2 * np.real(np.conj(g) * grad_g) / n ** 2

    grad_chi = np.zeros(len(problem.free_phases))
    if problem.free_phases and chi is not None:
        weights = problem.phase_weights()
        untwisted = problem.target.entries.conj().T @ record.projected
        terms = np.conj(np.exp(1j * weights @ np.asarray(chi))) * np.diag(untwisted)
        dg = (-1j * weights * terms[:, None]).sum(axis=0)
        grad_chi = 2 * np.real(np.conj(g) * dg) / n ** 2
    return fidelity, grad, grad_chi


def fidelity(problem, controls, chi=None):
    return _evaluate(problem, controls, chi)[0]


def fidelity_and_gradient(problem, controls, chi=None):
    """``(F, dF/du)`` for per-slice controls ``u`` of shape ``(2M, N)``."""
    F, grad, _ = _evaluate(problem, controls, chi)
    return F, grad


def _amplitude_profile(problem):
    ramp = np.ones(problem.grid.N) if problem.ramp is None else np.asarray(problem.ramp)
    return problem.cap / 2 * ramp


def phase_controls(problem, phases):
    """Controls with ``|Omega| = cap * ramp`` and the given phases, shape (M, N)."""
    phases = np.asarray(phases, dtype=float)
    if phases.shape != (problem.n_tones, problem.grid.N):
        raise DimensionMismatch(
            f'phases of shape {phases.shape} for {problem.n_tones} tones on {problem.grid.N} slices'
        )
    amplitude = _amplitude_profile(problem)
    controls = np.empty((problem.n_controls, problem.grid.N))
    controls[0::2] = amplitude * np.cos(phases)
    controls[1::2] = amplitude * np.sin(phases)
    return controls


def phase_fidelity_and_gradient(problem, phases, chi=None):
    """``(F, dF/dphi, dF/dchi)`` in the phase-only parametrization."""
    phases = np.asarray(phases, dtype=float)
    F, grad, grad_chi = _evaluate(problem, phase_controls(problem, phases), chi)
    amplitude = _amplitude_profile(problem)
    grad_phase = amplitude * (-np.sin(phases) * grad[0::2] + np.cos(phases) * grad[1::2])
    return F, grad_phase, grad_chi


def _fourier_tables(problem, params):
    t = problem.grid.sample_times
    k = np.arange(1, params.n_harmonics + 1)
    angles = np.outer(k, params.omega0 * t)
    return np.cos(angles), np.sin(angles)


def _saturation(raw, c):
    """
    ``v -> c tanh(|v|/c) v/|v|`` on each tone's control pair, and a function
    applying its (symmetric) Jacobian.
    """
    pairs = raw.reshape(-1, 2, raw.shape[1])
    radius = np.linalg.norm(pairs, axis=1)
    safe = np.where(radius > 1e-15, radius, 1.0)
    squashed = c * np.tanh(radius / c)
    scale = np.where(radius > 1e-15, squashed / safe, 1.0)
    slope = 1 - np.tanh(radius / c) ** 2
    out = (pairs * scale[:, None, :]).reshape(raw.shape)

    def jacobian_apply(w):
        w = w.reshape(pairs.shape)
        radial = (pairs * w).sum(axis=1) / safe ** 2
        result = scale[:, None, :] * w + ((slope - scale) * radial)[:, None, :] * pairs
        return result.reshape(raw.shape)

    return out, jacobian_apply


def fourier_raw_controls(problem, params):
    cos, sin = _fourier_tables(problem, params)
    return params.a[:, :1] + params.a[:, 1:] @ cos + params.b @ sin


def fourier_controls(problem, params):
    raw = fourier_raw_controls(problem, params)
    if problem.saturate:
        raw, _ = _saturation(raw, problem.cap / 2)
    ramp = np.ones(problem.grid.N) if problem.ramp is None else np.asarray(problem.ramp)
    return raw * ramp


def _check_fourier(problem, params):
    if params.a.shape[0] != problem.n_controls:
        raise DimensionMismatch(f'{params.a.shape[0]} Fourier rows for {problem.n_controls} controls')
    cutoff = params.cutoff
    if cutoff * 10 > TWO_PI * problem.grid.N / problem.grid.T:
        raise GridTooCoarse(f'the grid does not resolve the Fourier cutoff {cutoff:.4g} rad/s')


def _fourier_evaluate(problem, params, chi=None):
    _check_fourier(problem, params)
    cos, sin = _fourier_tables(problem, params)
    raw = params.a[:, :1] + params.a[:, 1:] @ cos + params.b @ sin
    jacobian_apply = None
    if problem.saturate:
        raw, jacobian_apply = _saturation(raw, problem.cap / 2)
    ramp = np.ones(problem.grid.N) if problem.ramp is None else np.asarray(problem.ramp)
    F, grad, grad_chi = _evaluate(problem, raw * ramp, chi)
    w = grad * ramp
    if jacobian_apply is not None:
        w = jacobian_apply(w)
    grad_a = np.concatenate([w.sum(axis=1, keepdims=True), w @ cos.T], axis=1)
    grad_b = w @ sin.T
    return F, grad_a, grad_b, grad_chi


def fourier_fidelity_and_gradient(problem, params, chi=None):
    """``(F, dF/da, dF/db)`` for Fourier coefficients in rad/s."""
    F, grad_a, grad_b, _ = _fourier_evaluate(problem, params, chi)
    return F, grad_a, grad_b


# ---------------------------------------------------------------------------
# Objectives: the optimizer's flat vector <-> physical controls
# ---------------------------------------------------------------------------

def _smooth_random(rng, n_rows, n_slices, low, high, init):
    if init == 'uniform':
        return high - rng.uniform(0, high - low, size=(n_rows, n_slices))
    knots = max(2, min(get_setting('SMOOTH_KNOTS'), n_slices))
    positions = np.linspace(0, n_slices - 1, knots)
    values = high - rng.uniform(0, high - low, size=(n_rows, knots))
    return np.array([np.interp(np.arange(n_slices), positions, row) for row in values])


class _Objective:

    def __init__(self, problem, options):
        self.problem = problem
        self.options = options
        self.n_free = len(problem.free_phases)

    def split(self, x):
        cut = len(x) - self.n_free
        return x[:cut], x[cut:]

    def __call__(self, x):
        params, chi = self.split(x)
        F, grad, grad_chi = self.value_and_grad(params, chi if self.n_free else None)
        return F, np.concatenate([grad, grad_chi])

    def start(self, rng, init=None):
        params = self.initial(rng) if init is None else self.encode(init)
        return np.concatenate([params, np.zeros(self.n_free)])

    def project(self, x):
        return x


class _PhaseObjective(_Objective):

    def shape(self):
        return (self.problem.n_tones, self.problem.grid.N)

    def value_and_grad(self, params, chi):
        F, grad, grad_chi = phase_fidelity_and_gradient(self.problem, params.reshape(self.shape()), chi)
        return F, grad.ravel(), grad_chi

    def initial(self, rng):
        return _smooth_random(rng, *self.shape(), -math.pi, math.pi, self.options.init).ravel()

    def encode(self, init):
        return np.asarray(init, dtype=float).ravel()

    def decode(self, params):
        phases = params.reshape(self.shape())
        return phases, phase_controls(self.problem, phases), None


class _SliceObjective(_Objective):
    """Controls in units of cap/2, so the cap is the unit disc per tone."""

    def shape(self):
        return (self.problem.n_controls, self.problem.grid.N)

    @property
    def scale(self):
        return self.problem.cap / 2

    def value_and_grad(self, params, chi):
        F, grad, grad_chi = _evaluate(self.problem, params.reshape(self.shape()) * self.scale, chi)
        return F, grad.ravel() * self.scale, grad_chi

    def initial(self, rng):
        tones, n = self.problem.n_tones, self.problem.grid.N
        amplitude = _smooth_random(rng, tones, n, 0.0, 1.0, self.options.init)
        phase = _smooth_random(rng, tones, n, -math.pi, math.pi, self.options.init)
        u = np.empty(self.shape())
        u[0::2] = amplitude * np.cos(phase)
        u[1::2] = amplitude * np.sin(phase)
        return u.ravel()

    def encode(self, init):
        return np.asarray(init, dtype=float).ravel() / self.scale

    def decode(self, params):
        u = params.reshape(self.shape()) * self.scale
        return u, u, None

    def project(self, x):
        params, chi = self.split(x)
        pairs = params.reshape(self.problem.n_tones, 2, self.problem.grid.N).copy()
        radius = np.linalg.norm(pairs, axis=1)
        over = radius > 1
        pairs[:, 0][over] /= radius[over]
        pairs[:, 1][over] /= radius[over]
        return np.concatenate([pairs.ravel(), chi])


class _FourierObjective(_Objective):
    """Fourier coefficients in units of cap/2."""

    @property
    def scale(self):
        return self.problem.cap / 2

    def params(self, flat):
        problem = self.problem
        return FourierParams.from_flat(problem.omega0, problem.K, problem.n_controls, flat * self.scale)

    def value_and_grad(self, params, chi):
        F, grad_a, grad_b, grad_chi = _fourier_evaluate(self.problem, self.params(params), chi)
        return F, np.concatenate([grad_a.ravel(), grad_b.ravel()]) * self.scale, grad_chi

    def initial(self, rng):
        problem = self.problem
        harmonics = (problem.K - 1) // 2
        size = problem.n_controls * (2 * harmonics + 1)
        return rng.normal(0.0, 1.0 / math.sqrt(problem.K), size=size)

    def encode(self, init):
        return init.flatten() / self.scale

    def decode(self, params):
        fourier = self.params(params)
        return fourier, fourier_controls(self.problem, fourier), fourier


_OBJECTIVES = {'phase': _PhaseObjective, 'slice': _SliceObjective, 'fourier': _FourierObjective}


# ---------------------------------------------------------------------------
# Ascent
# ---------------------------------------------------------------------------

def _lbfgs(objective, x0, options):
    cache = {}

    def negative(x):
        F, grad = objective(x)
        if len(cache) > 64:
            cache.clear()
        cache[x.tobytes()] = F
        return -F, -grad

    history = []

    def record(xk):
        key = xk.tobytes()
        history.append(cache[key] if key in cache else objective(xk)[0])

    result = minimize(
        negative, x0, jac=True, method='L-BFGS-B', callback=record,
        options={'maxiter': options.max_iter, 'ftol': options.ftol, 'gtol': options.gtol},
    )
    return result.x, int(result.nit), result.status == 0, history


def _projected_ascent(objective, x0, options):
    """
    Gradient ascent with backtracking; every trial point is projected back
    into the feasible set and only non-decreasing steps are accepted.
    """
    x = objective.project(x0)
    F, grad = objective(x)
    history = [F]
    step = 0.1 / max(float(np.max(np.abs(grad))), 1e-12)
    converged = False
    iterations = 0
    for iterations in range(1, options.max_iter + 1):
        if np.linalg.norm(objective.project(x + step * grad) - x) / step < options.gtol:
            converged = True
            break
        for _ in range(60):
            trial = objective.project(x + step * grad)
            trial_F, trial_grad = objective(trial)
            if trial_F >= F:
                break
            step *= 0.5
        else:
            converged = True
            break
        gain = trial_F - F
        x, F, grad = trial, trial_F, trial_grad
        history.append(F)
        step *= 1.5
        if gain < options.ftol:
            converged = True
            break
    return x, iterations, converged, history


def _single_run(problem, objective, x0, options, seed, start):
    if problem.parametrization == 'slice':
        x, iterations, converged, history = _projected_ascent(objective, x0, options)
    else:
        x, iterations, converged, history = _lbfgs(objective, x0, options)
    params, chi = objective.split(x)
    chi = np.array([wrap_angle(value) for value in chi])
    controls, physical, fourier = objective.decode(params)
    chi_arg = chi if problem.free_phases else None
    F = fidelity(problem, physical, chi_arg)
    chi_pairs = tuple(zip(problem.free_phases, chi.tolist()))
    pulse = PulseSchedule.from_controls(
        problem.basis.tones, problem.cap, problem.grid, physical, fourier=fourier, chi=chi_pairs
    )
    logger.debug(
        f'grape.run.done label={problem.label!r} start={start} fidelity={F:.8f} iterations={iterations}'
    )
    return OptimizationResult(
        controls=controls,
        fidelity=F,
        iterations=iterations,
        converged=converged,
        pulse=pulse,
        chi=chi_pairs,
        history=tuple(history),
        seed=seed,
        start=start,
        label=problem.label,
    )


def optimize(problem, init=None, seed=0, options=None, chi=None):
    """
    Maximise the fidelity of ``problem``.  Without ``init`` this runs
    ``options.n_starts`` random starts (start ``k`` draws from the stream keyed
    by ``(seed, k)``) and keeps the best; with ``init`` (controls in the
    problem's parametrization) it runs once from there.

    Non-convergence is reported through ``result.converged``, never raised.
    """
    options = options or OptimizerOptions()
    if problem.parametrization == 'fourier' and not problem.saturate:
        raise InvalidConfiguration('Fourier optimisation keeps the cap through saturation; set saturate=True')
    objective = _OBJECTIVES[problem.parametrization](problem, options)

    if init is not None:
        x0 = objective.start(None, init)
        if chi is not None:
            x0[len(x0) - objective.n_free:] = chi
        best = _single_run(problem, objective, x0, options, seed, 0)
    else:
        def run(start):
            x0 = objective.start(trajectory_rng(seed, start))
            return _single_run(problem, objective, x0, options, seed, start)

        starts = range(options.n_starts)
        if options.threads > 1:
            with concurrent.futures.ThreadPoolExecutor(max_workers=options.threads) as executor:
                results = list(executor.map(run, starts))
        else:
            results = [run(start) for start in starts]
        best = max(results, key=lambda result: (result.fidelity, -result.start))

    level = logging.INFO if best.converged else logging.WARNING
    logger.log(
        level,
        f'grape.optimize.done label={problem.label!r} fidelity={best.fidelity:.8f} '
        f'iterations={best.iterations} converged={best.converged} seed={seed} start={best.start}'
    )
    pulse_optimized.send(sender=GrapeProblem, problem=problem, result=best)
    return best


# ---------------------------------------------------------------------------
# Problem builders
# ---------------------------------------------------------------------------

def _grid(duration, cap, n_slices=None, delta=None):
    return TimeGrid(duration, n_slices) if n_slices else TimeGrid.for_cap(duration, cap, delta)


def _ramp(grid, ramp_fraction):
    return raised_cosine_ramp(grid.N, ramp_fraction) if ramp_fraction else None


def single_qudit_problem(target, cap, duration, tones=None, parametrization='phase', n_slices=None,
                         ramp_fraction=None, label=''):
    """
    Drive one qudit with the given transitions (nearest-neighbour chain by
    default) towards ``target``.
    """
    d = target.dim
    tones = chain_tones(d) if tones is None else [tuple(tone) for tone in tones]
    grid = _grid(duration, cap, n_slices)
    return GrapeProblem(
        target=target,
        basis=control_basis(tones, dim=d),
        grid=grid,
        cap=cap,
        parametrization=parametrization,
        n_qudits=1,
        ramp=_ramp(grid, ramp_fraction),
        label=label or f'{target.label or "U"}[d={d}]',
    )


def single_qudit_target(name, d):
    return gate_by_name(name, QuditSpace(d))


def cr_problem(targets, theta, cap, duration, d=None, scheme=None, blockade_V=math.inf, crosstalk_delta=None,
               tones=None, free_phases=None, parametrization='phase', n_slices=None, ramp_fraction=None,
               omega0=None, K=None):
    """
    Two atoms under global Rydberg driving towards ``CR_targets(theta)``.
    By default the scheme couples exactly the target levels, one Rydberg tone
    per target, and the targets' local phases are free.
    """
    targets = tuple(sorted(set(targets)))
    d = d or (scheme.d if scheme else max(targets) + 1)
    scheme = scheme or LevelScheme(d, targets)
    config = TwoAtomConfig(scheme, blockade_V, crosstalk_delta)
    tones = [(level, RYDBERG) for level in targets] if tones is None else [tuple(tone) for tone in tones]
    grid = _grid(duration, cap, n_slices, crosstalk_delta)
    return GrapeProblem(
        target=cr(d, targets, theta),
        basis=two_atom_control_basis(config, tones),
        grid=grid,
        cap=cap,
        parametrization=parametrization,
        n_qudits=2,
        free_phases=targets if free_phases is None else tuple(free_phases),
        ramp=_ramp(grid, ramp_fraction),
        omega0=omega0,
        K=K,
        label=f"CR_{{{','.join(map(str, targets))}}}({theta:.6g})[d={d}]",
    )


def cz_simultaneous_problem(cap, duration=None, omega0=None, K=None, n_slices=None):
    """
    Qutrit CZ in one shot: tones ``0<->1``, ``1<->2`` and ``2<->r`` driven at
    once on both atoms under perfect blockade, Fourier-parameterized.
    """
    duration = duration or 6 * math.pi / cap
    scheme = LevelScheme(3, (2,))
    tones = [(0, 1), (1, 2), (2, RYDBERG)]
    grid = _grid(duration, cap, n_slices)
    return GrapeProblem(
        target=cz(3),
        basis=two_atom_control_basis(TwoAtomConfig(scheme), tones),
        grid=grid,
        cap=cap,
        parametrization='fourier',
        n_qudits=2,
        omega0=omega0 or cap / 2,
        K=K or get_setting('FOURIER_K'),
        label='CZ[d=3,simultaneous]',
    )


def synthesize_cz_simultaneous_qutrit(cap, omega0=None, K=None, duration=None, seed=0, options=None):
    return optimize(cz_simultaneous_problem(cap, duration, omega0, K), seed=seed, options=options)


# ---------------------------------------------------------------------------
# Optimal time
# ---------------------------------------------------------------------------

def _map(function, values, threads):
    if threads and threads > 1:
        with concurrent.futures.ThreadPoolExecutor(max_workers=threads) as executor:
            return list(executor.map(function, values))
    return [function(value) for value in values]


def find_optimal_time(build_problem, t_range, threshold=None, points=None, options=None, seed=0, threads=1):
    """
    Scan ``F(T)`` (best of restarts) over ``points`` durations in ``t_range``,
    refine once between the last point below ``threshold`` and the first one
    above it, and return the smallest duration reaching the threshold with
    the whole curve.

    ``build_problem`` maps a duration in seconds to a :class:`GrapeProblem`.
    """
    threshold = get_setting('FIDELITY_THRESHOLD') if threshold is None else threshold
    points = points or get_setting('SCAN_POINTS')
    options = replace(options or OptimizerOptions(), threads=1)
    t_min, t_max = t_range
    if not 0 < t_min < t_max:
        raise BracketError(f'invalid duration bracket ({t_min}, {t_max})')

    def evaluate(duration):
        result = optimize(build_problem(duration), seed=seed, options=options)
        scan_point_finished.send(sender=TimeScan, duration=duration, fidelity=result.fidelity)
        return duration, result

    coarse = _map(evaluate, np.linspace(t_min, t_max, points), threads)
    above = [i for i, (_, result) in enumerate(coarse) if result.fidelity >= threshold]
    if not above:
        logger.warning(f'grape.scan.bracket_error reason=never_reached threshold={threshold} t_max={t_max:.6g}')
        raise BracketError(f'F(T) stays below {threshold} up to T={t_max:.6g}s')
    first = above[0]
    if first == 0:
        logger.warning(f'grape.scan.bracket_error reason=already_above threshold={threshold} t_min={t_min:.6g}')
        raise BracketError(f'F(T) already reaches {threshold} at T={t_min:.6g}s')
    low, high = coarse[first - 1][0], coarse[first][0]
    fine = _map(evaluate, np.linspace(low, high, points)[1:-1], threads)

    curve = sorted(coarse + fine, key=lambda item: item[0])
    t_opt, best = next(
        (duration, result) for duration, result in curve if duration >= low and result.fidelity >= threshold
    )
    logger.info(f'grape.scan.done t_opt={t_opt:.6g} fidelity={best.fidelity:.8f} points={len(curve)}')
    return TimeScan(
        times=np.array([duration for duration, _ in curve]),
        fidelities=np.array([result.fidelity for _, result in curve]),
        t_opt=float(t_opt),
        threshold=threshold,
        best=best,
    )
