import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Tuple, Union

import numpy as np

from ..exceptions import DimensionMismatch, InvalidConfiguration, InvalidLevel
from ..utils import dagger, freeze, is_unitary


@dataclass(frozen=True)
class QuditSpace:
    """
    The local dimension ``d`` of a qudit and its root of unity.
    """

    d: int

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 2:
            raise InvalidLevel(f'qudit dimension must be an integer >= 2, got {self.d!r}')

    @property
    def omega(self):
        return cmath.exp(2j * math.pi / self.d)

    def check_level(self, k):
        if not 0 <= k < self.d:
            raise InvalidLevel(f'level {k} is outside 0..{self.d - 1}')
        return k


@dataclass(frozen=True, eq=False)
class QuditGate:
    """
    A square complex matrix over a flat level ordering.  Usually unitary; the
    projection of a larger propagator onto the computational block is allowed
    to be sub-unitary.
    """

    entries: np.ndarray
    label: str = ''

    def __post_init__(self):
        entries = np.asarray(self.entries)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
            raise DimensionMismatch(f'gate matrix must be square, got shape {entries.shape}')
        object.__setattr__(self, 'entries', freeze(entries))

    @property
    def dim(self):
        return self.entries.shape[0]

    @property
    def unitary_flag(self):
        return is_unitary(self.entries)

    def dagger(self):
        return QuditGate(dagger(self.entries), label=f'{self.label}†' if self.label else '')

    def tensor(self, other):
        return QuditGate(np.kron(self.entries, other.entries))

    def __matmul__(self, other):
        if not isinstance(other, QuditGate):
            return NotImplemented
        if other.dim != self.dim:
            raise DimensionMismatch(f'cannot multiply {self.dim}x{self.dim} by {other.dim}x{other.dim}')
        return QuditGate(self.entries @ other.entries)

    def is_diagonal(self, tol=1e-10):
        off = self.entries - np.diag(np.diag(self.entries))
        return float(np.max(np.abs(off), initial=0.0)) < tol


@dataclass(frozen=True, eq=False)
class StateVector:

    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = np.asarray(self.amplitudes)
        if amplitudes.ndim != 1:
            raise DimensionMismatch(f'state must be a vector, got shape {amplitudes.shape}')
        object.__setattr__(self, 'amplitudes', freeze(amplitudes))

    @classmethod
    def basis(cls, dim, index):
        amplitudes = np.zeros(dim, dtype=complex)
        amplitudes[index] = 1
        return cls(amplitudes)

    @classmethod
    def uniform(cls, d, n_qudits=2):
        """The product state (sum_j |j>)^n / d^(n/2)."""
        dim = d ** n_qudits
        return cls(np.full(dim, 1 / math.sqrt(dim), dtype=complex))

    @property
    def dim(self):
        return self.amplitudes.shape[0]

    @property
    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def normalized(self):
        return StateVector(self.amplitudes / self.norm)

    def populations(self):
        return np.abs(self.amplitudes) ** 2

    def overlap(self, other):
        if other.dim != self.dim:
            raise DimensionMismatch(f'state dimensions differ: {self.dim} vs {other.dim}')
        return complex(np.vdot(self.amplitudes, other.amplitudes))


# A tone's upper level is either a qudit level or the marker below, which
# stands for "the Rydberg level coupled to ``lower``".  Keeping tones in this
# form lets a pulse synthesized in one level scheme run in another.
RYDBERG = 'r'

ToneLabel = Tuple[int, Union[int, str]]


@dataclass(frozen=True)
class LevelScheme:
    """
    Single-atom levels: qudit levels ``0..d-1`` followed by Rydberg levels
    ``r_1..r_n``.  ``couplings[k-1]`` is the qudit level that ``r_k`` couples
    to.
    """

    d: int
    couplings: Tuple[int, ...] = ()

    def __post_init__(self):
        QuditSpace(self.d)
        couplings = tuple(int(level) for level in self.couplings)
        if len(set(couplings)) != len(couplings):
            raise InvalidConfiguration(f'Rydberg couplings must be distinct, got {couplings}')
        for level in couplings:
            if level == 0:
                raise InvalidLevel('level 0 is never Rydberg-coupled')
            if not 0 < level < self.d:
                raise InvalidLevel(f'coupled level {level} is outside 1..{self.d - 1}')
        object.__setattr__(self, 'couplings', couplings)

    @property
    def n_ryd(self):
        return len(self.couplings)

    @property
    def dim(self):
        return self.d + self.n_ryd

    @property
    def space(self):
        return QuditSpace(self.d)

    def rydberg_index(self, level):
        """The single-atom index of the Rydberg level coupled to qudit ``level``."""
        try:
            return self.d + self.couplings.index(level)
        except ValueError:
            raise InvalidConfiguration(f'level {level} has no Rydberg coupling in {self.couplings}')

    def coupled_level(self, index):
        if not self.d <= index < self.dim:
            raise InvalidLevel(f'{index} is not a Rydberg index')
        return self.couplings[index - self.d]

    def resolve(self, tone):
        """Map a tone label onto a pair of single-atom indices."""
        lower, upper = tone
        if upper == RYDBERG:
            return lower, self.rydberg_index(lower)
        if not (0 <= lower < self.d and 0 <= upper < self.d) or lower == upper:
            raise InvalidLevel(f'tone {tone} does not connect two qudit levels of d={self.d}')
        return lower, upper

    def is_rydberg_tone(self, tone):
        return tone[1] == RYDBERG


@dataclass(frozen=True)
class DriveTone:
    """
    A resonant drive between single-atom levels ``lower`` and ``upper``.  The
    envelope is a complex Rabi frequency in rad/s, either constant or a
    function of time.
    """

    lower: int
    upper: int
    envelope: Union[complex, Callable[[float], complex]] = 0.0
    cap: float = math.inf

    def rabi(self, t):
        value = self.envelope(t) if callable(self.envelope) else self.envelope
        value = complex(value)
        if abs(value) > self.cap * (1 + 1e-9):
            raise InvalidConfiguration(
                f'tone {self.lower}<->{self.upper}: |Omega|={abs(value):.6g} exceeds cap {self.cap:.6g}'
            )
        return value

    @property
    def pair(self):
        return (self.lower, self.upper)


@dataclass(frozen=True)
class TwoAtomConfig:
    """
    Two atoms under global driving.  ``blockade_V`` is the uniform Rydberg
    interaction in rad/s; ``math.inf`` means perfect blockade, which removes
    the doubly excited states.  ``crosstalk_delta`` is the Zeeman splitting
    that lets each Rydberg tone also drive the other coupled transition.
    """

    scheme: LevelScheme
    blockade_V: float = math.inf
    crosstalk_delta: Optional[float] = None

    def __post_init__(self):
        if not self.blockade_V > 0:
            raise InvalidConfiguration(f'blockade_V must be positive, got {self.blockade_V}')

    @property
    def perfect_blockade(self):
        return math.isinf(self.blockade_V)


@dataclass(frozen=True, eq=False)
class StateTrajectory:

    times: np.ndarray
    states: np.ndarray
    labels: Tuple[str, ...] = field(default=())

    def __post_init__(self):
        object.__setattr__(self, 'times', freeze(self.times, dtype=float))
        object.__setattr__(self, 'states', freeze(self.states))

    @property
    def final(self):
        return StateVector(self.states[-1])

    def populations(self):
        return np.abs(self.states) ** 2
