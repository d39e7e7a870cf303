from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np

from ..exceptions import InvalidLevel, SequenceFormError
from ..utils import freeze, wrap_angle
from .space import QuditGate, QuditSpace


@dataclass(frozen=True, eq=False)
class SingleQuditGate:
    """``U`` applied to both atoms as ``U x U``."""

    gate: QuditGate
    label: str = ''

    kind = 'single'


@dataclass(frozen=True)
class VirtualPhase:
    """A zero-duration ``R_level(theta)`` frame update on both atoms."""

    level: int
    theta: float

    kind = 'virtual'

    def __post_init__(self):
        object.__setattr__(self, 'theta', wrap_angle(float(self.theta)))


@dataclass(frozen=True)
class CRPulse:
    """
    An entangling pulse imparting ``theta`` on ``|k1, k2>`` whenever both
    levels are in ``targets``.  ``chi`` holds the local phases (level,
    radians) the physical pulse adds on each atom.
    """

    targets: Tuple[int, ...]
    theta: float
    chi: Tuple[Tuple[int, float], ...] = ()

    kind = 'cr'

    def __post_init__(self):
        targets = tuple(sorted(set(int(level) for level in self.targets)))
        if not targets:
            raise InvalidLevel('a CR pulse needs at least one target level')
        if 0 in targets:
            raise InvalidLevel('level 0 is never Rydberg-coupled')
        object.__setattr__(self, 'targets', targets)
        object.__setattr__(self, 'theta', wrap_angle(float(self.theta)))
        object.__setattr__(self, 'chi', tuple((int(level), float(value)) for level, value in self.chi))

    @property
    def n_tones(self):
        return len(self.targets)

    @property
    def label(self):
        return f"CR_{{{','.join(str(t) for t in self.targets)}}}({self.theta:.6g})"


Step = Union[SingleQuditGate, VirtualPhase, CRPulse]


@dataclass(frozen=True)
class GateSequence:
    """
    Steps in time order.  Every CR target set lies in ``1..d-1``.
    """

    d: int
    steps: Tuple[Step, ...] = ()

    def __post_init__(self):
        QuditSpace(self.d)
        steps = tuple(self.steps)
        for step in steps:
            if isinstance(step, CRPulse):
                if step.targets[-1] >= self.d:
                    raise InvalidLevel(f'{step.label} targets a level outside 1..{self.d - 1}')
            elif isinstance(step, VirtualPhase):
                QuditSpace(self.d).check_level(step.level)
            elif isinstance(step, SingleQuditGate):
                if step.gate.dim != self.d:
                    raise SequenceFormError(f'single-qudit step of dimension {step.gate.dim} in a d={self.d} sequence')
            else:
                raise SequenceFormError(f'unknown step {step!r}')
        object.__setattr__(self, 'steps', steps)

    @property
    def pulses(self):
        return tuple(step for step in self.steps if isinstance(step, CRPulse))

    @property
    def pulse_count(self):
        return len(self.pulses)

    @property
    def tone_count(self):
        return sum(pulse.n_tones for pulse in self.pulses)

    def __len__(self):
        return len(self.steps)


@dataclass(frozen=True, eq=False)
class PhaseMatrix:
    """
    ``theta[j-1, m-1]`` is the CZ decomposition angle for levels ``j, m`` in
    ``1..d-1``; symmetric.
    """

    d: int
    theta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, 'theta', freeze(self.theta, dtype=float))

    def __call__(self, j, m):
        if not (1 <= j < self.d and 1 <= m < self.d):
            raise InvalidLevel(f'phase matrix is indexed by 1..{self.d - 1}, got ({j}, {m})')
        return float(self.theta[j - 1, m - 1])


@dataclass(frozen=True, eq=False)
class NoGoVerdict:
    """
    Outcome of checking a single-Rydberg-level sequence for the additive
    phase structure ``U|j,m> = exp(i(xi_j + xi_m))|j,m>`` for ``j != m``.
    ``applicable`` is False when the sequence is not diagonal.
    """

    applicable: bool
    additive: bool = False
    xi: Optional[np.ndarray] = None
    residual: float = float('nan')
    unitary: Optional[QuditGate] = field(default=None, repr=False)
