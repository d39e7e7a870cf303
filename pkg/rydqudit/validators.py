import math
import re
from fractions import Fraction

from django.core.exceptions import ValidationError
from django.core.validators import RegexValidator
from django.utils.deconstruct import deconstructible


SCHEMA_VERSION = 1

ANGLE_RE = re.compile(
    r'^\s*(?P<coeff>[+-]?(?:\d+(?:\.\d*)?|\.\d+)?)\s*\*?\s*(?P<pi>pi|π)?\s*(?:/\s*(?P<den>\d+(?:\.\d+)?))?\s*$',
    re.IGNORECASE,
)


def get_angle_validators():
    """
    Returns the validators for an angle given on the command line, e.g.
    ``4pi/3``, ``-pi/2`` or ``1.0472``.

    :rtype: a list of validator classes
    """
    regex_validator = RegexValidator(
        ANGLE_RE,
        'Please enter an angle in radians or as a fraction of pi, e.g. 4pi/3.'
    )
    return [regex_validator]


def parse_angle(text):
    """
    Radians from ``text``: a plain number, or a multiple of pi with an
    optional integer denominator.
    """
    text = str(text).strip()
    for validator in get_angle_validators():
        validator(text)
    match = ANGLE_RE.match(text)
    coeff, has_pi, den = match.group('coeff'), match.group('pi'), match.group('den')
    if not has_pi and coeff in ('', '+', '-'):
        raise ValidationError(f'"{text}" is not an angle.', 'invalid')
    if coeff in ('', '+'):
        value = Fraction(1)
    elif coeff == '-':
        value = Fraction(-1)
    else:
        value = Fraction(coeff)
    if den is not None:
        if Fraction(den) == 0:
            raise ValidationError(f'"{text}" divides by zero.', 'invalid')
        value /= Fraction(den)
    return float(value) * (math.pi if has_pi else 1.0)


def get_artifact_validators(kind, required):
    """
    Returns the validators every JSON artifact of ``kind`` goes through on
    load.

    :rtype: a list of validator classes
    """
    return [SchemaVersionValidator(), RequiredKeysValidator(kind, required)]


def validate_artifact(data, kind, required=()):
    if not isinstance(data, dict):
        raise ValidationError(f'{kind} must be a JSON object.', 'invalid')
    for validator in get_artifact_validators(kind, required):
        validator(data)
    return data


@deconstructible
class SchemaVersionValidator:
    """
    Validates that an artifact declares the schema version this package
    writes.
    """

    def __init__(self, version=SCHEMA_VERSION):
        self.version = version

    def __call__(self, value):
        if 'schema_version' not in value:
            raise ValidationError('Missing schema_version.', 'invalid')
        if value['schema_version'] != self.version:
            raise ValidationError(
                f'Unsupported schema_version {value["schema_version"]!r}; expected {self.version}.',
                'invalid'
            )
        return True

    def __eq__(self, other):
        return isinstance(other, SchemaVersionValidator) and self.version == other.version


@deconstructible
class RequiredKeysValidator:
    """
    Validates that every key in ``required`` is present.
    """

    def __init__(self, kind, required):
        self.kind = kind
        self.required = tuple(required)

    def __call__(self, value):
        missing = [key for key in self.required if key not in value]
        if missing:
            raise ValidationError(f'{self.kind} is missing {", ".join(missing)}.', 'invalid')
        return True

    def __eq__(self, other):
        return isinstance(other, RequiredKeysValidator) and (self.kind, self.required) == (other.kind, other.required)


@deconstructible
class QuantityValidator:
    """
    Validates a physical quantity: a finite positive number, or the string
    ``"inf"`` where infinity means something (lifetime, blockade).
    """

    def __init__(self, name, allow_inf=False, allow_zero=False):
        self.name = name
        self.allow_inf = allow_inf
        self.allow_zero = allow_zero

    def __call__(self, value):
        if self.allow_inf and value in ('inf', math.inf):
            return True
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not math.isfinite(value):
            raise ValidationError(f'{self.name} must be a finite number, got {value!r}.', 'invalid')
        if value < 0 or (value == 0 and not self.allow_zero):
            raise ValidationError(f'{self.name} must be positive, got {value!r}.', 'invalid')
        return True

    def __eq__(self, other):
        return isinstance(other, QuantityValidator) and \
            (self.name, self.allow_inf, self.allow_zero) == (other.name, other.allow_inf, other.allow_zero)


@deconstructible
class LevelSetValidator:
    """
    Validates a set of Rydberg-coupled levels: non-empty, inside 1..d-1.
    """

    def __init__(self, d):
        self.d = d

    def __call__(self, value):
        levels = list(value)
        if not levels:
            raise ValidationError('At least one target level is required.', 'invalid')
        bad = [level for level in levels if not (isinstance(level, int) and 1 <= level < self.d)]
        if bad:
            raise ValidationError(f'Target levels must lie in 1..{self.d - 1}, got {bad}.', 'invalid')
        return True

    def __eq__(self, other):
        return isinstance(other, LevelSetValidator) and self.d == other.d


def quantity(value, name, allow_inf=False, allow_zero=False):
    QuantityValidator(name, allow_inf, allow_zero)(value)
    return math.inf if value in ('inf', math.inf) else float(value)
