"""Fock-basis state containers and overflow-safe factorial-moment combinatorics.

The two container types are thin, immutable wrappers around dense numpy
vectors indexed by photon number n = 0..n_cut.  A ``PureFockState`` holds
complex amplitudes c_n; a ``PhotonNumberDistribution`` holds the photon-number
probabilities p_n (the diagonal of a density matrix in the Fock basis).
Everything downstream (coherence functions, bounds, the optimizer) only ever
consumes the diagonal, which is why ``dephase`` is the bridge between the two.

All operations here are pure functions on immutable data and are safe for
unrestricted concurrent use.
"""

from __future__ import annotations

import math
import operator
from dataclasses import dataclass

import numpy as np

# Absolute drift of the total mass that is accepted as "already normalized".
NORM_TOL = 1e-12
# Drift up to this bound is silently renormalized; anything larger is treated
# as a user error rather than accumulated rounding, and is rejected.
RENORM_LIMIT = 1e-9

# Below this order the falling factorial is evaluated as an exact integer
# product (then rounded once to float); above it we switch to log-gamma.
_EXACT_ORDER_LIMIT = 128


class NormalizationError(ValueError):
    """Total probability / squared norm is too far from one to be rounding."""


def _as_index(value, name: str) -> int:
    try:
        return operator.index(value)
    except TypeError:
        raise TypeError(f"{name} must be an integer, got {value!r}") from None


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class PureFockState:
    """Pure single-mode field state: complex amplitudes over n = 0..n_cut.

    The squared amplitudes must sum to one within ``NORM_TOL``; drift up to
    ``RENORM_LIMIT`` is renormalized on construction, larger drift raises
    :class:`NormalizationError`.  Amplitudes within tolerance are stored
    bit-for-bit unchanged so that round-trips stay exact.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=np.complex128)
        if amps.ndim != 1 or amps.size == 0:
            raise ValueError("amplitudes must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(amps.view(np.float64))):
            raise ValueError("amplitudes must be finite")
        total = math.fsum(np.abs(amps) ** 2)
        drift = abs(total - 1.0)
        if drift > NORM_TOL:
            if drift > RENORM_LIMIT:
                raise NormalizationError(
                    f"squared amplitudes sum to {total!r}, drift {drift:.3e} "
                    f"exceeds {RENORM_LIMIT:.0e}"
                )
            amps = amps / math.sqrt(total)
        object.__setattr__(self, "amplitudes", _frozen(amps))

    @property
    def n_cut(self) -> int:
        """Largest photon number carried by this state."""
        return self.amplitudes.size - 1


@dataclass(frozen=True)
class PhotonNumberDistribution:
    """Photon-number probabilities p_n over n = 0..n_cut.

    Entries must be non-negative and sum to one within ``NORM_TOL`` (with the
    same renormalize-or-reject policy as :class:`PureFockState`).
    """

    probabilities: np.ndarray

    def __post_init__(self):
        probs = np.array(self.probabilities, dtype=np.float64)
        if probs.ndim != 1 or probs.size == 0:
            raise ValueError("probabilities must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(probs)):
            raise ValueError("probabilities must be finite")
        if np.any(probs < 0.0):
            n_bad = int(np.argmax(probs < 0.0))
            raise ValueError(f"negative probability {probs[n_bad]!r} at n={n_bad}")
        total = math.fsum(probs)
        drift = abs(total - 1.0)
        if drift > NORM_TOL:
            if drift > RENORM_LIMIT:
                raise NormalizationError(
                    f"probabilities sum to {total!r}, drift {drift:.3e} "
                    f"exceeds {RENORM_LIMIT:.0e}"
                )
            probs = probs / total
        object.__setattr__(self, "probabilities", _frozen(probs))

    @property
    def n_cut(self) -> int:
        """Largest photon number carried by this distribution."""
        return self.probabilities.size - 1


def dephase(state: PureFockState) -> PhotonNumberDistribution:
    """Drop Fock-basis coherences: p_n = |c_n|^2.

    Normally-ordered photon correlators depend only on these populations, so
    a pure state and its dephased mixture drive multi-photon transitions at
    exactly the same rate.
    """
    return PhotonNumberDistribution(np.abs(state.amplitudes) ** 2)


def mean_photon_number(dist: PhotonNumberDistribution) -> float:
    """Mean photon number of a distribution, sum_n n * p_n."""
    n = np.arange(dist.probabilities.size, dtype=np.float64)
    return math.fsum(n * dist.probabilities)


def tail_mass(dist: PhotonNumberDistribution, n_max) -> float:
    """Probability mass at photon numbers strictly above ``n_max``.

    Returns 0.0 when the distribution does not extend past ``n_max``.  A
    state belongs to the photon-number-capped space (up to tolerance) exactly
    when this mass is negligible.
    """
    n_max = _as_index(n_max, "n_max")
    if n_max < 0:
        raise ValueError(f"n_max must be >= 0, got {n_max}")
    if dist.n_cut <= n_max:
        return 0.0
    return math.fsum(dist.probabilities[n_max + 1:])


def falling_factorial(n, m) -> float:
    """Falling factorial n * (n-1) * ... * (n-m+1) = n!/(n-m)! as a float.

    This is the eigenvalue of the normally-ordered m-photon ladder monomial
    on the Fock state |n>.  Returns 1.0 for m = 0 and 0.0 when m > n (fewer
    than m photons cannot feed an m-photon process).

    Small orders are evaluated as an exact integer product rounded once to
    float, so the result does not overflow for n up to 1e6 and beyond at the
    orders used here; very large orders fall back to log-gamma.
    """
    n = _as_index(n, "n")
    m = _as_index(m, "m")
    if n < 0 or m < 0:
        raise ValueError(f"falling_factorial requires n, m >= 0, got n={n}, m={m}")
    if m == 0:
        return 1.0
    if m > n:
        return 0.0
    if m <= _EXACT_ORDER_LIMIT:
        prod = 1
        for k in range(n, n - m, -1):
            prod *= k
        try:
            return float(prod)
        except OverflowError:
            return math.inf
    log_value = log_falling_factorial(n, m)
    if log_value > 709.0:  # exp() overflow threshold for float64
        return math.inf
    return math.exp(log_value)


def log_falling_factorial(n, m) -> float:
    """log(n!/(n-m)!) via log-gamma; -inf when m > n, 0.0 when m = 0."""
    n = _as_index(n, "n")
    m = _as_index(m, "m")
    if n < 0 or m < 0:
        raise ValueError(f"log_falling_factorial requires n, m >= 0, got n={n}, m={m}")
    if m == 0:
        return 0.0
    if m > n:
        return -math.inf
    return math.lgamma(n + 1) - math.lgamma(n - m + 1)


def falling_factorial_sequence(n_cut, m) -> np.ndarray:
    """Vector of falling factorials n!/(n-m)! for every n = 0..n_cut.

    The stepwise float product keeps the relative error below ~m ulp, which
    is ample for the m <= 6 orders the coherence sums use.  Entries with
    n < m are exactly zero because the factor (n - n) occurs in the product.
    """
    n_cut = _as_index(n_cut, "n_cut")
    m = _as_index(m, "m")
    if n_cut < 0 or m < 0:
        raise ValueError(f"falling_factorial_sequence requires n_cut, m >= 0")
    n = np.arange(n_cut + 1, dtype=np.float64)
    values = np.ones(n_cut + 1, dtype=np.float64)
    for k in range(m):
        values *= n - k
    return values
