import math
from dataclasses import dataclass, field, replace
from typing import Optional, Tuple, Union

import numpy as np

from ..conf import get_setting, slices_for
from ..exceptions import DimensionMismatch, GridTooCoarse, InvalidConfiguration, InvalidLevel
from ..utils import TWO_PI, freeze
from .space import QuditGate, ToneLabel


PARAMETRIZATIONS = ('slice', 'phase', 'fourier')


@dataclass(frozen=True)
class TimeGrid:
    """
    ``N`` equal slices covering ``[0, T]``.
    """

    T: float
    N: int

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 1:
            raise InvalidConfiguration(f'a time grid needs N >= 1 slices, got {self.N!r}')
        if not self.T > 0 or not math.isfinite(self.T):
            raise InvalidConfiguration(f'a time grid needs a finite T > 0, got {self.T!r}')
        object.__setattr__(self, 'N', int(self.N))

    @classmethod
    def for_cap(cls, T, cap, delta=None):
        return cls(T, slices_for(T, cap, delta))

    @property
    def dt(self):
        return self.T / self.N

    @property
    def midpoints(self):
        return (np.arange(self.N) + 0.5) * self.dt

    @property
    def sample_times(self):
        """``r * dt`` for ``r = 1..N``; the Fourier series is sampled here."""
        return np.arange(1, self.N + 1) * self.dt

    @property
    def edges(self):
        return np.linspace(0.0, self.T, self.N + 1)

    def refined(self, factor):
        return TimeGrid(self.T, self.N * int(factor))


@dataclass(frozen=True, eq=False)
class ControlBasis:
    """
    Real control operators ``H_m`` such that ``H(t) = drift + sum_m u_m(t) H_m(t)``.
    Tone ``j`` owns operators ``2j`` and ``2j + 1`` and its Rabi frequency is
    ``Omega_j = 2 u_2j + 2i u_2j+1``.

    With crosstalk the operators rotate:
    ``H_m(t) = operators[m] + cos(delta t) cos_part[m] + sin(delta t) sin_part[m]``.

    The first ``n_computational`` basis states span the computational subspace.
    """

    operators: np.ndarray
    tones: Tuple[ToneLabel, ...]
    n_computational: int
    drift: Optional[np.ndarray] = None
    cos_part: Optional[np.ndarray] = None
    sin_part: Optional[np.ndarray] = None
    delta: Optional[float] = None

    def __post_init__(self):
        operators = np.asarray(self.operators, dtype=complex)
        if operators.ndim != 3 or operators.shape[1] != operators.shape[2]:
            raise DimensionMismatch(f'control operators must have shape (2M, D, D), got {operators.shape}')
        if operators.shape[0] != 2 * len(self.tones):
            raise DimensionMismatch(f'{operators.shape[0]} operators for {len(self.tones)} tones')
        dim = operators.shape[1]
        if not 0 < self.n_computational <= dim:
            raise DimensionMismatch(f'computational block of {self.n_computational} in a {dim}-level space')
        object.__setattr__(self, 'operators', freeze(operators))
        object.__setattr__(self, 'tones', tuple(tuple(tone) for tone in self.tones))
        drift = np.zeros((dim, dim)) if self.drift is None else self.drift
        object.__setattr__(self, 'drift', freeze(drift))
        if (self.cos_part is None) != (self.sin_part is None) or ((self.cos_part is None) != (self.delta is None)):
            raise InvalidConfiguration('rotating control parts need cos_part, sin_part and delta together')
        if self.cos_part is not None:
            object.__setattr__(self, 'cos_part', freeze(self.cos_part))
            object.__setattr__(self, 'sin_part', freeze(self.sin_part))

    @property
    def dim(self):
        return self.operators.shape[1]

    @property
    def n_controls(self):
        return self.operators.shape[0]

    @property
    def n_tones(self):
        return len(self.tones)

    @property
    def rotating(self):
        return self.delta is not None

    def _modulation(self, times):
        return np.cos(self.delta * times), np.sin(self.delta * times)

    def hamiltonians(self, controls, times):
        """``H`` at every slice, shape (N, D, D)."""
        controls = np.asarray(controls, dtype=float)
        h = np.einsum('mr,mab->rab', controls, self.operators) + self.drift
        if self.rotating:
            cos, sin = self._modulation(times)
            h = h + np.einsum('mr,mab->rab', controls * cos, self.cos_part)
            h = h + np.einsum('mr,mab->rab', controls * sin, self.sin_part)
        return h

    def control_operator(self, m, times):
        """``H_m`` at every slice, shape (N, D, D) (or (D, D) when static)."""
        if not self.rotating:
            return self.operators[m]
        cos, sin = self._modulation(times)
        return (self.operators[m][None] + cos[:, None, None] * self.cos_part[m][None]
                + sin[:, None, None] * self.sin_part[m][None])

    def with_drift(self, extra):
        return replace(self, drift=np.asarray(self.drift) + extra)


@dataclass(frozen=True, eq=False)
class FourierParams:
    """
    ``u_m(t) = a[m, 0] + sum_k a[m, k] cos(k omega0 t) + b[m, k-1] sin(k omega0 t)``
    with ``k = 1..(K-1)/2``.
    """

    omega0: float
    K: int
    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1 or self.K % 2 == 0:
            raise InvalidConfiguration(f'K must be a positive odd integer, got {self.K!r}')
        if not self.omega0 > 0:
            raise InvalidConfiguration(f'omega0 must be positive, got {self.omega0!r}')
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        harmonics = (self.K - 1) // 2
        if a.ndim != 2 or a.shape[1] != harmonics + 1 or b.shape != (a.shape[0], harmonics):
            raise DimensionMismatch(f'coefficient shapes {a.shape}, {b.shape} do not match K={self.K}')
        object.__setattr__(self, 'a', freeze(a, dtype=float))
        object.__setattr__(self, 'b', freeze(b, dtype=float))

    @property
    def n_harmonics(self):
        return (self.K - 1) // 2

    @property
    def cutoff(self):
        return self.n_harmonics * self.omega0

    def flatten(self):
        return np.concatenate([self.a.ravel(), self.b.ravel()])

    @classmethod
    def from_flat(cls, omega0, K, n_controls, flat):
        harmonics = (K - 1) // 2
        split = n_controls * (harmonics + 1)
        a = np.reshape(flat[:split], (n_controls, harmonics + 1))
        b = np.reshape(flat[split:], (n_controls, harmonics))
        return cls(omega0, K, a, b)


@dataclass(frozen=True, eq=False)
class PulseSchedule:
    """
    Complex Rabi envelopes, one row per tone, sampled on ``grid``.  ``chi``
    records the local phases (level, radians) the pulse imparts on top of its
    target.
    """

    tones: Tuple[ToneLabel, ...]
    cap: float
    grid: TimeGrid
    envelopes: np.ndarray
    fourier: Optional[FourierParams] = None
    chi: Tuple[Tuple[int, float], ...] = ()

    def __post_init__(self):
        envelopes = np.atleast_2d(np.asarray(self.envelopes, dtype=complex))
        if envelopes.shape != (len(self.tones), self.grid.N):
            raise DimensionMismatch(
                f'envelopes of shape {envelopes.shape} for {len(self.tones)} tones on {self.grid.N} slices'
            )
        if np.any(np.abs(envelopes) > self.cap * (1 + 1e-9)):
            raise InvalidConfiguration('pulse envelope exceeds the Rabi frequency cap')
        object.__setattr__(self, 'envelopes', freeze(envelopes))
        object.__setattr__(self, 'tones', tuple(tuple(tone) for tone in self.tones))
        object.__setattr__(self, 'chi', tuple((int(level), float(value)) for level, value in self.chi))

    @classmethod
    def from_controls(cls, tones, cap, grid, controls, **kwargs):
        controls = np.asarray(controls, dtype=float)
        envelopes = 2 * controls[0::2] + 2j * controls[1::2]
        # clip rounding noise on pulses pinned at the cap
        magnitude = np.abs(envelopes)
        over = magnitude > cap
        envelopes[over] *= cap / magnitude[over]
        return cls(tones, cap, grid, envelopes, **kwargs)

    @property
    def duration(self):
        return self.grid.T

    def controls(self):
        """The real controls (2M, N) that reproduce the envelopes."""
        u = np.empty((2 * len(self.tones), self.grid.N))
        u[0::2] = self.envelopes.real / 2
        u[1::2] = self.envelopes.imag / 2
        return u

    def amplitude_fraction(self):
        return np.abs(self.envelopes) / self.cap

    def phases(self, unwrapped=True):
        phase = np.angle(self.envelopes)
        return np.unwrap(phase, axis=1) if unwrapped else phase

    def wrap_points(self):
        """Per tone, the slice indices where the wrapped phase jumps by 2*pi."""
        jumps = np.diff(np.round((self.phases() - self.phases(unwrapped=False)) / TWO_PI), axis=1)
        return [tuple(int(i) + 1 for i in np.nonzero(row)[0]) for row in jumps]

    @property
    def chi_map(self):
        return dict(self.chi)


@dataclass(frozen=True, eq=False)
class PropagationRecord:
    """
    Slice propagators ``U_r = V_r exp(-i dt lambda_r) V_r^dagger`` together
    with the cumulative products ``U_r ... U_1`` and the spectral data needed
    for exact gradients.
    """

    grid: TimeGrid
    slices: np.ndarray
    forward: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    n_computational: int

    @property
    def dim(self):
        return self.slices.shape[1]

    @property
    def final(self):
        return self.forward[-1]

    @property
    def projected(self):
        n = self.n_computational
        return self.final[:n, :n]

    def midpoint_unitaries(self):
        """``U(t)`` at every slice midpoint, shape (N, D, D)."""
        half = np.exp(-0.5j * self.grid.dt * self.eigenvalues)
        half_step = (self.eigenvectors * half[:, None, :]) @ np.conj(np.swapaxes(self.eigenvectors, 1, 2))
        previous = np.concatenate([np.eye(self.dim)[None], self.forward[:-1]])
        return half_step @ previous


@dataclass(frozen=True, eq=False)
class GrapeProblem:
    """
    Everything needed to evaluate the fidelity of a pulse against ``target``:
    the control operators, time grid, Rabi cap and parametrization.

    ``free_phases`` lists qudit levels whose local phase chi is optimised
    together with the controls, so the pulse is only required to realise
    ``target (L(chi) x ... x L(chi))``.  ``ramp`` is an amplitude profile
    multiplied onto phase and Fourier controls.
    """

    target: QuditGate
    basis: ControlBasis
    grid: TimeGrid
    cap: float
    parametrization: str = 'phase'
    n_qudits: int = 1
    free_phases: Tuple[int, ...] = ()
    ramp: Optional[np.ndarray] = None
    omega0: Optional[float] = None
    K: Optional[int] = None
    saturate: bool = True
    label: str = ''

    def __post_init__(self):
        if self.parametrization not in PARAMETRIZATIONS:
            raise InvalidConfiguration(f'unknown parametrization {self.parametrization!r}')
        if not self.cap > 0:
            raise InvalidConfiguration(f'cap must be positive, got {self.cap!r}')
        d = round(self.target.dim ** (1 / self.n_qudits))
        if d ** self.n_qudits != self.target.dim:
            raise DimensionMismatch(f'target of dimension {self.target.dim} is not d^{self.n_qudits}')
        if self.target.dim != self.basis.n_computational:
            raise DimensionMismatch(
                f'target dimension {self.target.dim} != computational block {self.basis.n_computational}'
            )
        for level in self.free_phases:
            if not 0 <= level < d:
                raise InvalidLevel(f'free phase level {level} is outside 0..{d - 1}')
        object.__setattr__(self, 'free_phases', tuple(int(level) for level in self.free_phases))
        if self.ramp is not None:
            ramp = np.asarray(self.ramp, dtype=float)
            if ramp.shape != (self.grid.N,):
                raise DimensionMismatch(f'ramp of shape {ramp.shape} for {self.grid.N} slices')
            object.__setattr__(self, 'ramp', freeze(ramp, dtype=float))
        if self.parametrization == 'fourier':
            if self.omega0 is None:
                object.__setattr__(self, 'omega0', self.cap / 2)
            if self.K is None:
                object.__setattr__(self, 'K', get_setting('FOURIER_K'))
            cutoff = (self.K - 1) // 2 * self.omega0
            if cutoff * 10 > TWO_PI * self.grid.N / self.grid.T:
                raise GridTooCoarse(
                    f'{self.grid.N} slices do not resolve the Fourier cutoff {cutoff:.4g} rad/s'
                )
        if self.basis.rotating and abs(self.basis.delta) * self.grid.dt > get_setting('MAX_SLICE_PHASE'):
            raise GridTooCoarse(f'dt={self.grid.dt:.4g}s does not resolve the crosstalk rotation')

    @property
    def d(self):
        return round(self.target.dim ** (1 / self.n_qudits))

    @property
    def dim(self):
        return self.target.dim

    @property
    def n_tones(self):
        return self.basis.n_tones

    @property
    def n_controls(self):
        return self.basis.n_controls

    def phase_weights(self):
        """
        ``W[i, l]``: how many of the qudits in computational state ``i`` sit in
        free level ``free_phases[l]``.
        """
        digits = np.array(np.unravel_index(np.arange(self.dim), (self.d,) * self.n_qudits)).T
        return np.stack([(digits == level).sum(axis=1) for level in self.free_phases], axis=1) \
            if self.free_phases else np.zeros((self.dim, 0))

    def target_matrix(self, chi=None):
        """The target including the local phases ``chi``."""
        if not self.free_phases or chi is None:
            return np.asarray(self.target.entries)
        return self.target.entries * np.exp(1j * self.phase_weights() @ np.asarray(chi))[None, :]


@dataclass(frozen=True, eq=False)
class OptimizationResult:

    controls: Union[np.ndarray, FourierParams]
    fidelity: float
    iterations: int
    converged: bool
    pulse: PulseSchedule
    chi: Tuple[Tuple[int, float], ...] = ()
    history: Tuple[float, ...] = field(default=())
    seed: int = 0
    start: int = 0
    label: str = ''

    @property
    def chi_values(self):
        return np.array([value for _, value in self.chi])


@dataclass(frozen=True, eq=False)
class TimeScan:

    times: np.ndarray
    fidelities: np.ndarray
    t_opt: float
    threshold: float
    best: OptimizationResult
