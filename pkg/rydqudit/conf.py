"""
Package defaults.  Any of these can be overridden from the host project's
settings module by defining ``RYDQUDIT_<NAME>``, e.g.::

    RYDQUDIT_MULTISTART = 16
    RYDQUDIT_N_TRAJ = 1000000
"""
import math

from django.conf import settings
from django.core import checks


DEFAULTS = {
    # random restarts per (target, duration)
    'MULTISTART': 8,
    # default slicing: dt * cap stays below this many radians
    'SLICE_PHASE': 0.02,
    # hard limit on ||H|| * dt for any slice
    'MAX_SLICE_PHASE': 0.5,
    # crosstalk rotation resolved per slice: delta * dt stays below this
    'CROSSTALK_SLICE_PHASE': 0.1,
    'FIDELITY_THRESHOLD': 1 - 1e-4,
    'SCAN_POINTS': 40,
    'RAMP_FRACTION': 0.05,
    'FOURIER_K': 13,
    'MAX_ITER': 2000,
    'FTOL': 1e-10,
    'GTOL': 1e-8,
    'N_TRAJ': 20000,
    'THREADS': 1,
    'OUT_DIR': '.',
    'ANGLE_TOL': 1e-9,
    'UNITARY_TOL': 1e-10,
    'SMOOTH_KNOTS': 8,
}


def get_setting(name):
    """
    Return ``settings.RYDQUDIT_<name>`` if the host project defines it,
    otherwise our default.  Works before settings are configured, in which case
    the default is always returned.
    """
    default = DEFAULTS[name]
    if not settings.configured:
        return default
    return getattr(settings, f'RYDQUDIT_{name}', default)


def slices_for(duration, cap, delta=None):
    """
    The default number of slices for a pulse of ``duration`` seconds driven at
    up to ``cap`` rad/s, optionally with a crosstalk rotation at ``delta`` rad/s.
    """
    n = math.ceil(duration * cap / get_setting('SLICE_PHASE'))
    if delta:
        n = max(n, math.ceil(duration * abs(delta) / get_setting('CROSSTALK_SLICE_PHASE')))
    return max(n, 1)


# settings that must be strictly positive when overridden
POSITIVE = {
    'MULTISTART', 'SLICE_PHASE', 'MAX_SLICE_PHASE', 'CROSSTALK_SLICE_PHASE', 'SCAN_POINTS', 'FOURIER_K',
    'MAX_ITER', 'FTOL', 'GTOL', 'N_TRAJ', 'THREADS', 'ANGLE_TOL', 'UNITARY_TOL', 'SMOOTH_KNOTS',
}


def check_settings(app_configs=None, **kwargs):
    """
    System check for ``RYDQUDIT_*`` overrides: unknown names are warnings,
    out-of-range values are errors.
    """
    messages = []
    for attr in dir(settings):
        if not attr.startswith('RYDQUDIT_'):
            continue
        name = attr[len('RYDQUDIT_'):]
        if name not in DEFAULTS:
            messages.append(checks.Warning(f'{attr} is not a rydqudit setting.', id='rydqudit.W001'))
            continue
        value = getattr(settings, attr)
        if name in POSITIVE and not (isinstance(value, (int, float)) and value > 0):
            messages.append(checks.Error(f'{attr} must be a positive number, not {value!r}.', id='rydqudit.E001'))
        elif name == 'FIDELITY_THRESHOLD' and not (isinstance(value, float) and 0 < value < 1):
            messages.append(checks.Error(f'{attr} must lie strictly between 0 and 1.', id='rydqudit.E002'))
        elif name == 'RAMP_FRACTION' and not (isinstance(value, (int, float)) and 0 <= value <= 0.5):
            messages.append(checks.Error(f'{attr} must lie in [0, 0.5].', id='rydqudit.E003'))
    return messages
