import math
from dataclasses import dataclass, field
from typing import Dict, Optional, Tuple

from ..conf import get_setting
from ..exceptions import InvalidConfiguration, MissingPulse
from ..utils import angles_equal, wrap_angle
from .pulses import PulseSchedule
from .sequences import CRPulse


@dataclass(frozen=True)
class NoiseModel:
    """
    Error channels for the quantum-jump benchmark.  Frequencies are angular
    (rad/s), times are seconds.  ``tau_ryd = math.inf`` switches decay off.
    """

    tau_ryd: float = math.inf
    detuning_sigma: float = 0.0
    intensity_rel_var: float = 0.0
    blockade_V: float = math.inf
    crosstalk_delta: Optional[float] = None
    decay_target: int = 0

    def __post_init__(self):
        if not self.tau_ryd > 0:
            raise InvalidConfiguration(f'tau_ryd must be positive, got {self.tau_ryd!r}')
        if self.intensity_rel_var < 0:
            raise InvalidConfiguration(f'intensity_rel_var must be >= 0, got {self.intensity_rel_var!r}')
        if self.detuning_sigma < 0:
            raise InvalidConfiguration(f'detuning_sigma must be >= 0, got {self.detuning_sigma!r}')
        if not self.blockade_V > 0:
            raise InvalidConfiguration(f'blockade_V must be positive, got {self.blockade_V!r}')

    @property
    def decay_rate(self):
        return 0.0 if math.isinf(self.tau_ryd) else 1 / self.tau_ryd


@dataclass(frozen=True)
class TrajectoryConfig:
    """
    ``dt`` is the largest propagation step; pulse slices longer than it are
    subdivided.  ``None`` keeps the pulse grids as they are.
    """

    n_traj: int = field(default_factory=lambda: get_setting('N_TRAJ'))
    master_seed: int = 0
    dt: Optional[float] = None

    def __post_init__(self):
        if int(self.n_traj) != self.n_traj or self.n_traj < 1:
            raise InvalidConfiguration(f'n_traj must be a positive integer, got {self.n_traj!r}')
        if self.dt is not None and not self.dt > 0:
            raise InvalidConfiguration(f'dt must be positive, got {self.dt!r}')


@dataclass(frozen=True)
class TrajectoryResult:

    index: int
    fidelity: float
    jumps: int
    pulse_jumps: Tuple[int, ...] = ()


@dataclass(frozen=True)
class SimResult:

    fidelity_mean: float
    fidelity_stderr: float
    n_traj: int
    jump_histogram: Dict[int, int]
    per_pulse: Tuple[dict, ...] = ()
    master_seed: int = 0

    @property
    def mean_jumps(self):
        return sum(n * count for n, count in self.jump_histogram.items()) / self.n_traj


@dataclass(frozen=True, eq=False)
class PulseLibraryEntry:
    """
    A synthesized CR pulse: its schedule, duration, time-averaged Rydberg
    population and the local phases it leaves behind.
    """

    targets: Tuple[int, ...]
    theta: float
    schedule: PulseSchedule
    chi_ryd: float
    fidelity: float
    d: int = 2

    def __post_init__(self):
        object.__setattr__(self, 'targets', tuple(sorted(int(level) for level in self.targets)))
        object.__setattr__(self, 'theta', wrap_angle(float(self.theta)))

    @property
    def duration(self):
        return self.schedule.duration

    @property
    def chi(self):
        return self.schedule.chi

    def matches(self, targets, theta):
        return self.targets == tuple(sorted(targets)) and angles_equal(self.theta, theta)

    def decay_exponent(self, tau_ryd, n_tones=1):
        """``n_tones * chi_ryd * T / tau``: two-tone drives count as two pulses."""
        if math.isinf(tau_ryd):
            return 0.0
        return n_tones * self.chi_ryd * self.duration / tau_ryd


@dataclass(frozen=True)
class PulseLibrary:

    entries: Tuple[PulseLibraryEntry, ...] = ()

    def lookup(self, targets, theta):
        for entry in self.entries:
            if entry.matches(targets, theta):
                return entry
        raise MissingPulse(f'no pulse for targets {tuple(targets)} and theta={theta:.6g}')

    def for_pulse(self, pulse: CRPulse):
        return self.lookup(pulse.targets, pulse.theta)

    def for_angle(self, theta, cap=None):
        """The single-tone pulse for ``theta``, whatever level it targets, optionally at Rabi cap ``cap``."""
        for entry in self.entries:
            if len(entry.targets) != 1 or not angles_equal(entry.theta, theta):
                continue
            if cap is None or math.isclose(entry.schedule.cap, cap, rel_tol=1e-9):
                return entry
        at = '' if cap is None else f' at cap {cap:.6g}'
        raise MissingPulse(f'no single-tone pulse for theta={theta:.6g}{at}')

    def add(self, entry):
        kept = tuple(e for e in self.entries if not e.matches(entry.targets, entry.theta))
        return PulseLibrary(kept + (entry,))

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)


@dataclass(frozen=True)
class ScalingPrediction:

    d: int
    product_infidelity: float
    closed_form_infidelity: float
    weighted_count: int
    pulse_count: int
    mean_duration: float


@dataclass(frozen=True)
class JumpRecord:
    """One decay event: which pulse, when (s, from the pulse start), which atom and Rydberg level."""

    pulse: int
    time: float
    atom: int
    level: int
