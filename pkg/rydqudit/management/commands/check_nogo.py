"""
Management utility to check the phase structure of single-Rydberg-level
sequences and whether CZ can have it.
"""
import math

import numpy as np
from django.core.management.base import CommandError

from rydqudit.compiler import (
    chain_generators,
    compile_cz_qutrit_single_rydberg,
    cz_additive_feasible,
    lie_closure_dimension,
    verify_cz,
    verify_no_go_structure,
)
from rydqudit.management.base import NOT_CONVERGED, RydquditCommand
from rydqudit.models import CRPulse, GateSequence, QuditGate, QuditSpace, SingleQuditGate


def random_single_rydberg_sequence(d, rng, max_segments=4):
    """``W_n CR_k(theta_n) ... W_1 CR_k(theta_1) W_0`` with diagonal ``W`` and one Rydberg level ``k``."""
    level = int(rng.integers(1, d))

    def diagonal():
        return SingleQuditGate(QuditGate(np.diag(np.exp(1j * rng.uniform(-math.pi, math.pi, d)))), label='W')

    steps = [diagonal()]
    for _ in range(int(rng.integers(1, max_segments + 1))):
        steps += [CRPulse((level,), float(rng.uniform(-math.pi, math.pi))), diagonal()]
    return GateSequence(d, tuple(steps))


class Command(RydquditCommand):
    help = 'Check the additive phase structure of single-Rydberg sequences and the CZ feasibility certificate.'

    def add_command_arguments(self, parser):
        parser.add_argument('--d', type=int, default=None, help='Qudit dimension. Default is 4.')
        parser.add_argument('--trials', type=int, default=None, help='Random sequences to check. Default is 200.')

    defaults = {'d': 4, 'trials': 200}

    def run(self, **options):
        d, trials = options['d'], options['trials']
        QuditSpace(d)
        if trials < 0:
            raise ValueError(f'--trials must be >= 0, got {trials}')
        rng = np.random.default_rng(options['seed'])
        failures, worst = 0, 0.0
        for _ in range(trials):
            verdict = verify_no_go_structure(random_single_rydberg_sequence(d, rng))
            if not (verdict.applicable and verdict.additive):
                failures += 1
            if verdict.applicable:
                worst = max(worst, verdict.residual)
        feasible = cz_additive_feasible(d)
        qutrit_ok, qutrit_deviation = verify_cz(compile_cz_qutrit_single_rydberg())
        rank = lie_closure_dimension(chain_generators(d))
        checks = {
            'constructive_family': failures == 0,
            # a single Rydberg level can only give CZ when d <= 3
            'cz_certificate': feasible == (d <= 3),
            'qutrit_single_rydberg_cz': bool(qutrit_ok),
            'chain_controllable': rank == d * d - 1,
        }
        passed = all(checks.values())
        self.write_json('nogo.json', {
            'd': d,
            'trials': trials,
            'failures': failures,
            'max_residual': worst,
            'cz_additive_feasible': feasible,
            'qutrit_deviation': qutrit_deviation,
            'lie_closure_dimension': rank,
            'checks': checks,
            'passed': passed,
        })
        self.report(f'constructive family: {trials - failures}/{trials} additive, max residual {worst:.2g}')
        self.report(f'CZ additive phases for d={d}: {"feasible" if feasible else "infeasible"}')
        self.report(f'qutrit single-Rydberg CZ deviation: {qutrit_deviation:.2g}')
        self.report(f'chain drive closure: dim {rank} (su({d}) has {d * d - 1})')
        self.report('PASS' if passed else 'FAIL')
        if not passed:
            failed = ', '.join(name for name, ok in checks.items() if not ok)
            raise CommandError(f'no-go check failed: {failed}', returncode=NOT_CONVERGED)
