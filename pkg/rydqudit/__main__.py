"""
The ``rydqudit`` console script: run the package's management commands
without a host Django project, e.g. ``rydqudit compile-cz --d 5 --max-tones 3``.
"""
import os
import sys

import django
from django.conf import settings
from django.core.management import find_commands, load_command_class


STANDALONE_SETTINGS = {
    'INSTALLED_APPS': ['rydqudit'],
    'LOGGING': {
        'version': 1,
        'disable_existing_loggers': False,
        'formatters': {
            'structured': {'format': '%(asctime)s %(levelname)s %(name)s %(message)s'},
        },
        'handlers': {
            'stderr': {'class': 'logging.StreamHandler', 'formatter': 'structured'},
        },
        'loggers': {
            'rydqudit': {
                'handlers': ['stderr'],
                'level': os.environ.get('RYDQUDIT_LOG_LEVEL', 'WARNING'),
                'propagate': False,
            },
        },
    },
}


def commands():
    return sorted(find_commands(os.path.join(os.path.dirname(__file__), 'management')))


def usage():
    names = ', '.join(name.replace('_', '-') for name in commands())
    return f'usage: rydqudit <command> [options]\n\ncommands: {names}\n'


def main(argv=None):
    argv = list(sys.argv if argv is None else argv)
    if not settings.configured and 'DJANGO_SETTINGS_MODULE' not in os.environ:
        settings.configure(**STANDALONE_SETTINGS)
    django.setup()
    if len(argv) < 2 or argv[1] in ('-h', '--help', 'help'):
        sys.stdout.write(usage())
        return 0
    name = argv[1].replace('-', '_')
    if name not in commands():
        sys.stderr.write(f'rydqudit: unknown command {argv[1]!r}\n{usage()}')
        return 2
    command = load_command_class('rydqudit', name)
    command.run_from_argv([argv[0], name] + argv[2:])
    return 0


if __name__ == '__main__':
    sys.exit(main())
