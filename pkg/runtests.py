#!/usr/bin/env python
"""
Run the test suite without a host project:

    ./runtests.py                       # fast tests
    RYDQUDIT_SLOW_TESTS=1 ./runtests.py # everything
    ./runtests.py rydqudit.tests.test_compiler
"""
import os
import sys

import django
from django.conf import settings
from django.test.utils import get_runner


def main(argv):
    os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'rydqudit.tests.settings')
    django.setup()
    runner = get_runner(settings)()
    failures = runner.run_tests(argv or ['rydqudit.tests'])
    return bool(failures)


if __name__ == '__main__':
    sys.exit(main(sys.argv[1:]))
