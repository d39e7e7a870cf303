import math

import numpy as np

from .conf import get_setting


TWO_PI = 2 * math.pi
MHZ = TWO_PI * 1e6
KHZ = TWO_PI * 1e3
MICROSECOND = 1e-6


def wrap_angle(theta):
    """
    Wrap ``theta`` (radians) onto the half-open branch (-pi, pi].
    """
    return theta - TWO_PI * math.ceil((theta - math.pi) / TWO_PI)


def angles_equal(a, b, tol=None):
    tol = get_setting('ANGLE_TOL') if tol is None else tol
    return abs(wrap_angle(a - b)) < tol


def wrap_turns(value):
    """
    Reduce a phase expressed in turns (units of 2*pi) to [0, 1).  Exact for
    Fractions.
    """
    return value - math.floor(value)


def turns_to_angle(value):
    return wrap_angle(TWO_PI * float(value))


def freeze(array, dtype=complex):
    """
    Return a read-only copy of ``array``.
    """
    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)
    return out


def dagger(matrix):
    return np.conj(np.swapaxes(matrix, -1, -2))


def is_unitary(matrix, tol=None):
    tol = get_setting('UNITARY_TOL') if tol is None else tol
    dim = matrix.shape[0]
    return np.linalg.norm(dagger(matrix) @ matrix - np.eye(dim)) <= tol * dim


def align_global_phase(matrix, reference=0):
    """
    Divide ``matrix`` by the phase of its (reference, reference) entry.  The
    CZ family fixes the |0,0> entry to one, so that is the default reference.
    """
    entry = matrix[reference, reference]
    if abs(entry) == 0:
        return np.array(matrix, dtype=complex)
    return matrix * (abs(entry) / entry)


def deviation_up_to_phase(a, b, reference=0):
    """
    Maximum entrywise deviation between ``a`` and ``b`` after both have been
    aligned to the phase of their reference diagonal entry.
    """
    return float(np.max(np.abs(align_global_phase(a, reference) - align_global_phase(b, reference))))


def trajectory_rng(master_seed, index):
    """
    Independent, reproducible stream for work item ``index`` under
    ``master_seed``.  Depends only on the pair, never on scheduling.
    """
    return np.random.default_rng(np.random.SeedSequence(entropy=master_seed, spawn_key=(index,)))


def raised_cosine_ramp(n_slices, fraction):
    """
    Amplitude profile on ``n_slices`` slice centres that rises and falls with
    a raised cosine over ``fraction`` of the pulse at each end, and is one in
    between.
    """
    profile = np.ones(n_slices)
    if fraction <= 0:
        return profile
    centres = (np.arange(n_slices) + 0.5) / n_slices
    rise = centres < fraction
    fall = centres > 1 - fraction
    profile[rise] = 0.5 * (1 - np.cos(math.pi * centres[rise] / fraction))
    profile[fall] = 0.5 * (1 - np.cos(math.pi * (1 - centres[fall]) / fraction))
    return profile
