"""
Hamiltonian builders.

Single-atom drives act on qudit levels ``0..d-1`` followed by the Rydberg
levels of a :class:`~rydqudit.models.LevelScheme`.  Two-atom operators act on
a reordered product space: the ``d*d`` computational states first (index
``j*d + m``), then states with exactly one Rydberg excitation, then (finite
blockade only) the doubly excited states.
"""
import functools

import numpy as np

from .exceptions import DimensionMismatch, InvalidConfiguration
from .models import RYDBERG, ControlBasis, DriveTone, LevelScheme, TwoAtomConfig
from .utils import freeze


def transition_operators(dim, lower, upper):
    """
    ``(|g><e| + h.c., i|g><e| + h.c.)`` for the transition ``lower <-> upper``.
    """
    flip = np.zeros((dim, dim), dtype=complex)
    flip[lower, upper] = 1
    return flip + flip.T.conj(), 1j * flip + (1j * flip).T.conj()


def _check_distinct(pairs):
    seen = set()
    for lower, upper in pairs:
        key = frozenset((lower, upper))
        if lower == upper:
            raise InvalidConfiguration(f'tone {lower}<->{upper} does not connect two levels')
        if key in seen:
            raise InvalidConfiguration(f'transition {lower}<->{upper} is driven by more than one tone')
        seen.add(key)


def single_atom_hamiltonian(tones, t, dim=None):
    """
    ``sum_tones (Omega(t)/2) |lower><upper| + h.c.`` over ``dim`` levels
    (default: just enough for the highest level any tone touches).
    """
    pairs = [tone.pair for tone in tones]
    _check_distinct(pairs)
    if dim is None:
        dim = 1 + max((max(pair) for pair in pairs), default=0)
    h = np.zeros((dim, dim), dtype=complex)
    for tone in tones:
        if max(tone.pair) >= dim:
            raise DimensionMismatch(f'tone {tone.pair} does not fit in {dim} levels')
        h[tone.lower, tone.upper] += tone.rabi(t) / 2
    return h + h.conj().T


def control_basis(tones, dim=None, n_computational=None):
    """
    Two Hermitian operators per tone: ``H_2j = |g_j><e_j| + h.c.`` and
    ``H_2j+1 = i|g_j><e_j| + h.c.``, so ``sum_m u_m H_m`` equals the drive with
    ``Omega_j = 2 u_2j + 2i u_2j+1``.

    ``tones`` may be :class:`DriveTone` objects or ``(lower, upper)`` pairs.
    """
    pairs = [tone.pair if isinstance(tone, DriveTone) else tuple(tone) for tone in tones]
    _check_distinct(pairs)
    if dim is None:
        dim = 1 + max(max(pair) for pair in pairs)
    operators = []
    for lower, upper in pairs:
        operators.extend(transition_operators(dim, lower, upper))
    return ControlBasis(
        np.array(operators),
        tones=tuple(pairs),
        n_computational=dim if n_computational is None else n_computational,
    )


def chain_tones(d):
    """Nearest-neighbour transitions ``j <-> j+1``."""
    return [(j, j + 1) for j in range(d - 1)]


class TwoAtomSpace:
    """
    The two-atom evolution space of a level scheme, embedded in the product
    space through an isometry.
    """

    def __init__(self, scheme, include_doubly=True):
        self.scheme = scheme
        self.include_doubly = include_doubly
        d, s = scheme.d, scheme.dim
        product = [(a, b) for a in range(s) for b in range(s)]
        excitations = {pair: (pair[0] >= d) + (pair[1] >= d) for pair in product}
        self.states = [pair for pair in product if excitations[pair] == 0]
        self.states += [pair for pair in product if excitations[pair] == 1]
        if include_doubly:
            self.states += [pair for pair in product if excitations[pair] == 2]
        self.index = {pair: i for i, pair in enumerate(self.states)}
        self.rydberg_count = freeze([excitations[pair] for pair in self.states], dtype=float)
        isometry = np.zeros((len(self.states), s * s))
        for i, (a, b) in enumerate(self.states):
            isometry[i, a * s + b] = 1
        self.isometry = freeze(isometry, dtype=float)

    @property
    def dim(self):
        return len(self.states)

    @property
    def n_computational(self):
        return self.scheme.d ** 2

    def embed_symmetric(self, h):
        """``P (h x I + I x h) P^T``: a global drive on both atoms."""
        eye = np.eye(self.scheme.dim)
        return self.isometry @ (np.kron(h, eye) + np.kron(eye, h)) @ self.isometry.T

    def embed_local(self, u):
        """``P (u x u) P^T`` for a gate ``u`` that preserves the Rydberg count."""
        return self.isometry @ np.kron(u, u) @ self.isometry.T

    def embed_on_atom(self, op, atom):
        eye = np.eye(self.scheme.dim)
        full = np.kron(op, eye) if atom == 0 else np.kron(eye, op)
        return self.isometry @ full @ self.isometry.T

    def swap(self):
        perm = np.zeros((self.dim, self.dim))
        for i, (a, b) in enumerate(self.states):
            perm[self.index[(b, a)], i] = 1
        return perm

    def blockade_diagonal(self, V):
        return np.diag(np.where(self.rydberg_count == 2, V, 0.0))


@functools.lru_cache(maxsize=64)
def two_atom_space(scheme, include_doubly=True):
    return TwoAtomSpace(scheme, include_doubly)


def _space_for(config):
    return two_atom_space(config.scheme, not config.perfect_blockade)


def _check_rydberg_tone(scheme, tone):
    if tone.upper < scheme.d:
        raise InvalidConfiguration(f'Rydberg tone {tone.pair} does not end on a Rydberg level')
    if scheme.coupled_level(tone.upper) != tone.lower:
        raise InvalidConfiguration(
            f'tone {tone.pair} is inconsistent with the scheme couplings {scheme.couplings}'
        )


def two_atom_hamiltonian(config, ryd_tones, t, qudit_tones=(), detuning=0.0):
    """
    ``h x I + I x h + V sum_kl |r_k r_l><r_k r_l|`` for the single-atom drive
    ``h`` made of ``ryd_tones`` (and ``qudit_tones``, driven globally as well).
    With perfect blockade the doubly excited states are absent.  ``detuning``
    shifts every Rydberg level of both atoms.
    """
    scheme = config.scheme
    for tone in ryd_tones:
        _check_rydberg_tone(scheme, tone)
    for tone in qudit_tones:
        if max(tone.pair) >= scheme.d:
            raise InvalidConfiguration(f'qudit tone {tone.pair} leaves the qudit levels')
    space = _space_for(config)
    h = single_atom_hamiltonian(list(ryd_tones) + list(qudit_tones), t, dim=scheme.dim)
    total = space.embed_symmetric(h) + np.diag(detuning * space.rydberg_count)
    if not config.perfect_blockade:
        total = total + space.blockade_diagonal(config.blockade_V)
    return total


def _crosstalk_partner(scheme, lower):
    """The other coupled transition a Rydberg tone from ``lower`` leaks onto."""
    if set(scheme.couplings) != {1, 2}:
        raise InvalidConfiguration(
            f'crosstalk needs r_1 <-> |1> and r_2 <-> |2>, the scheme couples {scheme.couplings}'
        )
    return 2 if lower == 1 else 1


def crosstalk_hamiltonian(config, omega1_envelope, t, omega2_envelope=None):
    """
    The two-atom drive with the Zeeman crosstalk: tone 1 on ``1 <-> r_1`` also
    drives ``2 <-> r_2`` as ``Omega_1(t) exp(i delta t)``.  A second tone on
    ``2 <-> r_2`` leaks symmetrically onto ``1 <-> r_1`` with
    ``exp(-i delta t)``.
    """
    if config.crosstalk_delta is None:
        raise InvalidConfiguration('crosstalk_hamiltonian needs config.crosstalk_delta')
    scheme = config.scheme
    _crosstalk_partner(scheme, 1)
    delta = config.crosstalk_delta

    def value(envelope):
        if envelope is None:
            return 0.0
        return complex(envelope(t) if callable(envelope) else envelope)

    omega1, omega2 = value(omega1_envelope), value(omega2_envelope)
    rotation = np.exp(1j * delta * t)
    tones = [
        DriveTone(1, scheme.rydberg_index(1), omega1 + omega2 * np.conj(rotation)),
        DriveTone(2, scheme.rydberg_index(2), omega2 + omega1 * rotation),
    ]
    return two_atom_hamiltonian(TwoAtomConfig(scheme, config.blockade_V), tones, t)


def two_atom_control_basis(config, tones):
    """
    Control operators for global driving of two atoms.  ``tones`` are labels:
    ``(level, 'r')`` for the Rydberg tone from ``level``, ``(j, k)`` for a qudit
    transition.  With ``config.crosstalk_delta`` set, every Rydberg tone also
    gets the rotating crosstalk operators.
    """
    scheme = config.scheme
    space = _space_for(config)
    labels = [tuple(tone) for tone in tones]
    pairs = [scheme.resolve(tone) for tone in labels]
    _check_distinct(pairs)
    crosstalk = config.crosstalk_delta is not None
    operators, cos_part, sin_part = [], [], []
    for label, (lower, upper) in zip(labels, pairs):
        x, y = transition_operators(scheme.dim, lower, upper)
        operators.extend([space.embed_symmetric(x), space.embed_symmetric(y)])
        zero = np.zeros((space.dim, space.dim), dtype=complex)
        if crosstalk and label[1] == RYDBERG:
            partner = _crosstalk_partner(scheme, lower)
            sign = 1 if lower == 1 else -1
            xp, yp = transition_operators(scheme.dim, partner, scheme.rydberg_index(partner))
            xp, yp = space.embed_symmetric(xp), space.embed_symmetric(yp)
            cos_part.extend([xp, yp])
            sin_part.extend([sign * yp, -sign * xp])
        else:
            cos_part.extend([zero, zero])
            sin_part.extend([zero, zero])
    drift = None if config.perfect_blockade else space.blockade_diagonal(config.blockade_V)
    kwargs = {}
    if crosstalk:
        kwargs = dict(cos_part=np.array(cos_part), sin_part=np.array(sin_part), delta=config.crosstalk_delta)
    return ControlBasis(
        np.array(operators),
        tones=tuple(labels),
        n_computational=space.n_computational,
        drift=drift,
        **kwargs,
    )


def rydberg_count(config):
    """Number of Rydberg-excited atoms in each evolution basis state."""
    return _space_for(config).rydberg_count


def projectors(scheme, perfect_blockade=False):
    """
    ``(Pi_comp, Pi_ryd, Pi_bloc)`` over the two-atom evolution space: no
    Rydberg excitation, exactly one, and both atoms excited.
    """
    space = two_atom_space(scheme, not perfect_blockade)
    count = space.rydberg_count
    return tuple(np.diag((count == n).astype(float)) for n in (0, 1, 2))


def single_rydberg_scheme(d, level):
    return LevelScheme(d, (level,))
