"""Random multipath channel generation and frequency-domain inversion.

Two channel families are provided: the exponentially decaying power delay
profile (tap 0 pinned to 1, later taps complex Gaussian around a shared
random anchor) and a tapped-delay-line family driven by a profile of per-tap
powers and Rician K factors.  A third, plain Gaussian sampler backs the
covariance-rank experiments.

Randomness flows through :class:`RngStream`, a seed-addressed wrapper around
numpy's PCG64 that supports deterministic splitting, so identical seeds give
identical realizations on every platform.
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import BadProfile, SpectralNull
from .numkit import dft_response, poly_roots

EXP_PDP_MEAN_DECAY = 1.5     # mu_l = exp(-1.5 l) * mu0
EXP_PDP_VAR_DECAY = 3.75     # sigma_l^2 = 0.5 * exp(-3.75 l)
MIN_PHASE_MARGIN = 1e-9      # zeros must satisfy |z| < 1 - margin


class RngStream:
    """Deterministic, splittable random stream.

    A stream is identified by a 64-bit seed plus a tuple of child indices;
    children derived with :meth:`child` are statistically independent and
    reproducible:  ``RngStream(7).child(3, 1)`` always yields the same
    sequence.  Attribute access falls through to the underlying
    ``numpy.random.Generator``.
    """

    def __init__(self, seed, _key=()):
        self.seed = int(seed)
        self.key = tuple(int(k) for k in _key)
        self._gen = np.random.default_rng(
            np.random.SeedSequence(entropy=self.seed, spawn_key=self.key)
        )

    def child(self, *key):
        """Derive an independent stream addressed by ``key`` integers."""
        return RngStream(self.seed, self.key + tuple(key))

    def __getattr__(self, name):
        return getattr(self._gen, name)

    def __repr__(self):
        return f"RngStream(seed={self.seed}, key={self.key})"


def sample_cn(rng, shape=None, var=1.0):
    """Circularly symmetric complex Gaussian CN(0, var) draws.

    Real and imaginary parts are independent with variance ``var / 2`` each;
    the real block is drawn first so the consumption order is part of the
    determinism contract.
    """
    re = rng.standard_normal(shape)
    im = rng.standard_normal(shape)
    return (re + 1j * im) * np.sqrt(var / 2.0)


@dataclass
class ChannelRealization:
    """One draw of an L-tap impulse response."""

    taps: np.ndarray
    freq_samples: Optional[np.ndarray] = None

    @property
    def n_taps(self):
        return len(self.taps)


@dataclass
class ChannelStatistics:
    """Distribution parameters for a channel family.

    For ``family == "tdl"`` the ``powers`` (linear) and ``k_factors``
    (linear) arrays are indexed by ``delays`` sample positions; ``n_taps`` is
    the full impulse-response length including any zero gaps.
    """

    family: str                    # "exp_pdp" | "tdl"
    n_taps: int
    means: Optional[np.ndarray] = None
    variances: Optional[np.ndarray] = None
    powers: Optional[np.ndarray] = None
    k_factors: Optional[np.ndarray] = None
    delays: Optional[np.ndarray] = None
    name: str = ""


def exp_pdp_variances(n_taps):
    """Per-tap variances of the exponential-PDP family (tap 0 is exact)."""
    var = 0.5 * np.exp(-EXP_PDP_VAR_DECAY * np.arange(n_taps))
    var[0] = 0.0
    return var


def sample_exp_pdp(n_taps, rng, mu0=None, variances=None):
    """Draw one exponential-PDP realization.

    Tap 0 is exactly 1.  A per-realization anchor ``mu0 ~ CN(0, 1)`` is drawn
    (unless supplied), then tap ``l >= 1`` follows
    ``CN(exp(-1.5 l) mu0, 0.5 exp(-3.75 l))``.  ``variances`` overrides the
    per-tap variance profile (entry 0 ignored), which tests use to freeze the
    noise part.
    """
    if n_taps < 2:
        raise ValueError("exponential PDP needs at least 2 taps")
    if mu0 is None:
        mu0 = complex(sample_cn(rng))
    if variances is None:
        variances = exp_pdp_variances(n_taps)
    variances = np.asarray(variances, dtype=float)
    ell = np.arange(1, n_taps)
    means = np.exp(-EXP_PDP_MEAN_DECAY * ell) * mu0
    noise = sample_cn(rng, n_taps - 1) * np.sqrt(variances[1:])
    taps = np.empty(n_taps, dtype=complex)
    taps[0] = 1.0
    taps[1:] = means + noise
    return ChannelRealization(taps=taps)


def sample_tdl(stats, rng):
    """Draw one tapped-delay-line realization.

    Each listed tap is ``sqrt(power) * (sqrt(K/(K+1)) + sqrt(1/(K+1)) g)``
    with ``g ~ CN(0, 1)``; ``K = 0`` is pure Rayleigh.  Taps are independent;
    unlisted delays stay zero.
    """
    if stats.family != "tdl":
        raise BadProfile(f"sample_tdl needs a tdl statistics record, got {stats.family!r}")
    powers = np.asarray(stats.powers, dtype=float)
    kf = np.asarray(stats.k_factors, dtype=float)
    delays = np.asarray(stats.delays, dtype=int)
    if not (len(powers) == len(kf) == len(delays)):
        raise BadProfile("powers, k_factors and delays must have equal length")
    if np.any(powers <= 0):
        raise BadProfile("tap powers must be positive")
    if np.any(kf < 0):
        raise BadProfile("K factors must be nonnegative")
    if np.any(delays < 0) or np.any(delays > stats.n_taps - 1):
        raise BadProfile("delays beyond n_taps - 1 are rejected")
    if len(np.unique(delays)) != len(delays):
        raise BadProfile("duplicate delays")
    g = sample_cn(rng, len(powers))
    los = np.sqrt(kf / (kf + 1.0))
    nlos = np.sqrt(1.0 / (kf + 1.0))
    taps = np.zeros(stats.n_taps, dtype=complex)
    taps[delays] = np.sqrt(powers) * (los + nlos * g)
    return ChannelRealization(taps=taps)


def sample_gaussian(means, variances, rng):
    """Draw taps ``h_l ~ CN(means_l, variances_l)``, independent per tap.

    Backs the covariance-rank experiments, where every tap (including the
    first) is random.
    """
    means = np.asarray(means, dtype=complex)
    variances = np.asarray(variances, dtype=float)
    if means.shape != variances.shape:
        raise ValueError("means and variances must have identical shape")
    noise = sample_cn(rng, means.shape) * np.sqrt(variances)
    return ChannelRealization(taps=means + noise)


def channel_zeros(realization):
    """Zeros of the channel transfer function H(z) in the z plane."""
    taps = np.asarray(realization.taps, dtype=complex)
    while len(taps) > 1 and taps[-1] == 0.0:
        taps = taps[:-1]
    if len(taps) < 2:
        return np.zeros(0, dtype=complex)
    # H(z) = sum h_l z^-l; zeros are roots of h_0 z^(L-1) + ... + h_{L-1},
    # i.e. of the reversed tap vector in ascending powers of z.
    return poly_roots(taps[::-1])


def is_minimum_phase(realization):
    """True iff every zero of H(z) lies strictly inside the unit circle."""
    zeros = channel_zeros(realization)
    if len(zeros) == 0:
        return True
    return bool(np.all(np.abs(zeros) < 1.0 - MIN_PHASE_MARGIN))


def sample_min_phase(sampler, rng, max_tries=100000):
    """Rejection-sample ``sampler(rng)`` until a minimum-phase draw appears.

    Returns ``(realization, n_rejected)``.
    """
    for attempt in range(max_tries):
        h = sampler(rng)
        if is_minimum_phase(h):
            return h, attempt
    raise BadProfile(f"no minimum-phase draw within {max_tries} tries")


def channel_inverse_freq(realization, n):
    """Sampled frequency-domain channel inverse ``v_i = 1 / H(e^{j w_i})``.

    Raises :class:`SpectralNull` (with the offending bin) if the response
    magnitude drops to 1e-9 or below at any of the ``n`` sample points.
    """
    response = dft_response(realization.taps, n)
    mags = np.abs(response)
    worst = int(np.argmin(mags))
    if mags[worst] <= 1e-9:
        raise SpectralNull(
            f"|H| = {mags[worst]:.3e} at frequency bin {worst}", index=worst
        )
    return 1.0 / response
