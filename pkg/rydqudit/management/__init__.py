import math
from dataclasses import dataclass
from typing import Optional, Tuple

from rydqudit.algebra import gate_by_name
from rydqudit.exceptions import InvalidConfiguration
from rydqudit.grape import OptimizerOptions, cr_problem, single_qudit_problem
from rydqudit.models import LevelScheme, QuditSpace, TwoAtomConfig
from rydqudit.utils import MHZ, MICROSECOND
from rydqudit.validators import LevelSetValidator, parse_angle


GATES = ('x', 'h', 'cr')


@dataclass(frozen=True)
class GateFamily:
    """
    The gate named by the command options, as a family of problems over the
    pulse duration.
    """

    gate: str
    d: int
    cap: float
    mode: str
    ramp_fraction: float
    targets: Tuple[int, ...] = ()
    theta: float = 0.0
    config: Optional[TwoAtomConfig] = None

    def build(self, duration):
        if self.gate == 'cr':
            return cr_problem(
                self.targets, self.theta, self.cap, duration,
                scheme=self.config.scheme,
                blockade_V=self.config.blockade_V,
                parametrization=self.mode,
                ramp_fraction=self.ramp_fraction,
            )
        target = gate_by_name(self.gate, QuditSpace(self.d))
        return single_qudit_problem(
            target, self.cap, duration, parametrization=self.mode, ramp_fraction=self.ramp_fraction
        )

    def bracket(self, t_min_us=None, t_max_us=None):
        """Scan range in seconds; defaults scale with pi/cap."""
        unit = math.pi / self.cap
        low = 0.25 * unit if t_min_us is None else t_min_us * MICROSECOND
        high = (8 if self.gate == 'cr' else 4) * unit if t_max_us is None else t_max_us * MICROSECOND
        return low, high


def gate_family(options):
    gate, d = options['gate'], options['d']
    if gate not in GATES:
        raise InvalidConfiguration(f'unknown gate {gate!r}; expected one of {GATES}')
    QuditSpace(d)
    common = dict(
        gate=gate,
        d=d,
        cap=options['omega_mhz'] * MHZ,
        mode=options['mode'],
        ramp_fraction=options['ramp_fraction'],
    )
    if gate != 'cr':
        return GateFamily(**common)
    targets = tuple(sorted(set(options['targets'] or (d - 1,))))
    LevelSetValidator(d)(targets)
    blockade = options['blockade_mhz']
    blockade = math.inf if blockade in (None, 'inf') else float(blockade) * MHZ
    return GateFamily(
        targets=targets,
        theta=parse_angle(options['theta']),
        config=TwoAtomConfig(LevelScheme(d, targets), blockade),
        **common,
    )


def optimizer_options(options):
    """Solver options from the command options; ``threads`` parallelises the restarts."""
    kwargs = {'threads': options.get('threads') or 1}
    if options.get('starts'):
        kwargs['n_starts'] = options['starts']
    return OptimizerOptions(**kwargs)
