import os
from unittest import skipUnless

from django.test import tag


def slow(test):
    """
    Long optimisations and Monte Carlo runs.  Tagged so ``--exclude-tag slow``
    drops them, and skipped unless ``RYDQUDIT_SLOW_TESTS`` is set.
    """
    return tag('slow')(skipUnless(os.environ.get('RYDQUDIT_SLOW_TESTS'), 'set RYDQUDIT_SLOW_TESTS=1')(test))
