"""Constructors for the single-mode field states under comparison.

Every state that the comparisons and sweeps need is built here: coherent and
thermal states, squeezed vacuum, Fock states, the two-point superposition of
vacuum and the top Fock level ("coin" state), its dephased mixture, and the
experimentally simple vacuum/coherent mixture that approximates it.

States with unbounded support (coherent, thermal, squeezed, the vacuum
/coherent mixture) are truncated at an explicit cutoff; the constructor
refuses cutoffs that leave more than ``tail_tol`` of probability mass beyond
the cutoff, and renormalizes what is kept.  :func:`build_state` picks the
cutoff automatically by doubling until the tail test passes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.stats import poisson

from .fock import (
    PhotonNumberDistribution,
    PureFockState,
    dephase,
    tail_mass,
)

# Default bound on the probability mass a truncation may discard.
TAIL_TOL = 1e-12

# Hard ceiling for the automatic cutoff search; reaching it means the
# requested state cannot be represented densely at the requested tolerance.
_MAX_AUTO_CUT = 1 << 21

_COIN_KINDS = frozenset({"coin", "coin_mixture", "coin_coherent_mixture"})

STATE_KINDS = (
    "coherent",
    "thermal",
    "squeezed_vacuum",
    "fock",
    "coin",
    "coin_mixture",
    "coin_coherent_mixture",
)


class CutoffTooSmallError(ValueError):
    """The requested cutoff leaves non-negligible probability mass behind."""


def _check_index(value, name: str) -> int:
    import operator

    try:
        return operator.index(value)
    except TypeError:
        raise TypeError(f"{name} must be an integer, got {value!r}") from None


def _check_nonneg(value, name: str) -> float:
    value = float(value)
    if not math.isfinite(value) or value < 0.0:
        raise ValueError(f"{name} must be finite and >= 0, got {value!r}")
    return value


def _tail_guard(tail: float, n_cut: int, tail_tol: float, what: str) -> None:
    if not tail < tail_tol:
        raise CutoffTooSmallError(
            f"{what}: mass {tail:.3e} beyond n_cut={n_cut} exceeds "
            f"tolerance {tail_tol:.0e}; increase the cutoff"
        )


# ---------------------------------------------------------------------------
# constructors
# ---------------------------------------------------------------------------

def _coherent_with_tail(n_av, n_cut, tail_tol):
    n_av = _check_nonneg(n_av, "n_av")
    n_cut = _check_index(n_cut, "n_cut")
    if n_cut < 0:
        raise ValueError(f"n_cut must be >= 0, got {n_cut}")
    tail = float(poisson.sf(n_cut, n_av))
    _tail_guard(tail, n_cut, tail_tol, f"coherent state n_av={n_av}")
    # sqrt of the Poisson pmf, evaluated in log space so that large n_av does
    # not underflow/overflow the amplitude recurrence.
    log_p = poisson.logpmf(np.arange(n_cut + 1), n_av)
    amps = np.exp(0.5 * log_p)
    amps /= math.sqrt(math.fsum(amps**2))
    return PureFockState(amps.astype(np.complex128)), tail


def coherent_state(n_av, n_cut, *, tail_tol: float = TAIL_TOL) -> PureFockState:
    """Coherent state with mean photon number ``n_av``.

    Amplitudes are the square roots of the Poisson(n_av) weights, with the
    global phase fixed to zero (real, non-negative amplitudes); the state is
    renormalized after truncation at ``n_cut``.

    Raises :class:`CutoffTooSmallError` when the Poisson tail beyond
    ``n_cut`` is not below ``tail_tol``.
    """
    state, _ = _coherent_with_tail(n_av, n_cut, tail_tol)
    return state


def _thermal_with_tail(n_av, n_cut, tail_tol):
    n_av = _check_nonneg(n_av, "n_av")
    n_cut = _check_index(n_cut, "n_cut")
    if n_cut < 0:
        raise ValueError(f"n_cut must be >= 0, got {n_cut}")
    q = n_av / (1.0 + n_av)
    tail = q ** (n_cut + 1)
    _tail_guard(tail, n_cut, tail_tol, f"thermal state n_av={n_av}")
    probs = (1.0 - q) * q ** np.arange(n_cut + 1, dtype=np.float64)
    probs /= math.fsum(probs)
    return PhotonNumberDistribution(probs), tail


def thermal_state(n_av, n_cut, *, tail_tol: float = TAIL_TOL) -> PhotonNumberDistribution:
    """Thermal (geometric) photon-number distribution with mean ``n_av``.

    p_n = n_av^n / (1 + n_av)^(n+1), truncated at ``n_cut`` and renormalized.
    The geometric tail beyond ``n_cut`` must be below ``tail_tol``.
    """
    dist, _ = _thermal_with_tail(n_av, n_cut, tail_tol)
    return dist


def _squeezed_with_tail(xi_magnitude, xi_phase, n_cut, tail_tol):
    r = _check_nonneg(xi_magnitude, "xi_magnitude")
    xi_phase = float(xi_phase)
    n_cut = _check_index(n_cut, "n_cut")
    if n_cut < 0:
        raise ValueError(f"n_cut must be >= 0, got {n_cut}")
    amps = np.zeros(n_cut + 1, dtype=np.complex128)
    pairs = n_cut // 2  # number of populated even levels above the vacuum
    t = math.tanh(r)
    c0 = 1.0 / math.sqrt(math.cosh(r))
    k = np.arange(pairs, dtype=np.float64)
    step = -t * complex(math.cos(xi_phase), math.sin(xi_phase))
    ratios = step * np.sqrt((2.0 * k + 1.0) / (2.0 * k + 2.0))
    amps[0] = c0
    if pairs:
        amps[2::2] = c0 * np.cumprod(ratios)
    kept = math.fsum(np.abs(amps) ** 2)
    tail = max(1.0 - kept, 0.0)
    _tail_guard(tail, n_cut, tail_tol, f"squeezed vacuum |xi|={r}")
    amps /= math.sqrt(kept)
    return PureFockState(amps), tail


def squeezed_vacuum(xi_magnitude, xi_phase, n_cut, *, tail_tol: float = TAIL_TOL) -> PureFockState:
    """Squeezed vacuum with squeezing parameter xi = r * exp(i * phase).

    Only even photon numbers are populated.  Amplitudes follow the stable
    two-step recurrence

        c_{2k+2} = -exp(i*phase) * tanh(r) * sqrt((2k+1)/(2k+2)) * c_{2k},

    with c_0 = 1/sqrt(cosh r), which avoids the (2k)! overflow of the closed
    form.  The mean photon number of the exact state is sinh(r)^2.
    """
    state, _ = _squeezed_with_tail(xi_magnitude, xi_phase, n_cut, tail_tol)
    return state


def coin_state(n_av, n_max, phase: float = 0.0) -> PureFockState:
    """Two-point superposition of vacuum and the top Fock level |n_max>.

    c_0 = sqrt((n_max - n_av)/n_max) and c_{n_max} = exp(i*phase) *
    sqrt(n_av/n_max); every other amplitude is zero.  The mean photon number
    is ``n_av`` by construction.  Among all states confined below ``n_max``
    with that mean, this population pattern maximizes every normally-ordered
    photon correlator.
    """
    n_av = _check_nonneg(n_av, "n_av")
    n_max = _check_index(n_max, "n_max")
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    if n_av > n_max:
        raise ValueError(f"n_av={n_av} exceeds n_max={n_max}")
    amps = np.zeros(n_max + 1, dtype=np.complex128)
    amps[0] = math.sqrt((n_max - n_av) / n_max)
    mag = math.sqrt(n_av / n_max)
    amps[n_max] = mag * complex(math.cos(phase), math.sin(phase))
    return PureFockState(amps)


def coin_mixture(n_av, n_max) -> PhotonNumberDistribution:
    """Dephased two-point mixture of |0><0| and |n_max><n_max|.

    Same populations as :func:`coin_state` for any phase, hence the same
    multi-photon absorption rates.
    """
    n_av = _check_nonneg(n_av, "n_av")
    n_max = _check_index(n_max, "n_max")
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    if n_av > n_max:
        raise ValueError(f"n_av={n_av} exceeds n_max={n_max}")
    probs = np.zeros(n_max + 1, dtype=np.float64)
    probs[0] = (n_max - n_av) / n_max
    probs[n_max] = n_av / n_max
    return PhotonNumberDistribution(probs)


def _coin_coherent_with_tail(n_av, n_max, n_cut, tail_tol):
    n_av = _check_nonneg(n_av, "n_av")
    n_max = _check_index(n_max, "n_max")
    n_cut = _check_index(n_cut, "n_cut")
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    if n_av > n_max:
        raise ValueError(f"n_av={n_av} exceeds n_max={n_max}")
    if n_cut < n_max:
        raise ValueError(f"n_cut={n_cut} must be >= n_max={n_max}")
    weight = n_av / n_max
    component_tail = float(poisson.sf(n_cut, n_max))
    tail = weight * component_tail
    _tail_guard(component_tail, n_cut, tail_tol,
                f"coherent component (mean {n_max}) of the vacuum/coherent mixture")
    pois = np.exp(poisson.logpmf(np.arange(n_cut + 1), n_max))
    pois /= math.fsum(pois)
    probs = weight * pois
    probs[0] += 1.0 - weight
    return PhotonNumberDistribution(probs), tail


def coin_coherent_mixture(n_av, n_max, n_cut, *, tail_tol: float = TAIL_TOL) -> PhotonNumberDistribution:
    """Classical mixture of the vacuum with a coherent state of mean ``n_max``.

    p = (1 - n_av/n_max) * delta_{n,0} + (n_av/n_max) * Poisson(n_max),
    truncated at ``n_cut``.  This mixture reproduces the two-point mixture's
    statistics for n_max >> 1 while being trivial to prepare.  Its Poisson
    component spills past ``n_max``, so the state does not strictly belong to
    the photon-number-capped space (see :func:`multiphoton.optimize.verify_state_bound`).
    """
    dist, _ = _coin_coherent_with_tail(n_av, n_max, n_cut, tail_tol)
    return dist


def fock_state(n, n_cut) -> PureFockState:
    """Fock state |n> embedded in a space truncated at ``n_cut``."""
    n = _check_index(n, "n")
    n_cut = _check_index(n_cut, "n_cut")
    if not 0 <= n <= n_cut:
        raise ValueError(f"need 0 <= n <= n_cut, got n={n}, n_cut={n_cut}")
    amps = np.zeros(n_cut + 1, dtype=np.complex128)
    amps[n] = 1.0
    return PureFockState(amps)


# ---------------------------------------------------------------------------
# declarative state specs and the config-driven builder
# ---------------------------------------------------------------------------

# kind -> (required parameter names, optional parameter names)
_PARAM_SPEC = {
    "coherent": (frozenset({"n_av"}), frozenset()),
    "thermal": (frozenset({"n_av"}), frozenset()),
    # squeezed vacuum takes exactly one of xi / n_av (checked separately)
    "squeezed_vacuum": (frozenset(), frozenset({"phase"})),
    "fock": (frozenset({"n"}), frozenset()),
    "coin": (frozenset({"n_av", "N_max"}), frozenset({"phase"})),
    "coin_mixture": (frozenset({"n_av", "N_max"}), frozenset()),
    "coin_coherent_mixture": (frozenset({"n_av", "N_max"}), frozenset()),
}


@dataclass(frozen=True)
class StateSpec:
    """Declarative description of a zoo state: kind plus named parameters.

    ``params`` holds exactly the parameters the kind requires (``n_av``,
    ``xi``, ``n``, ``N_max``, ``phase`` as applicable); ``label`` is the
    display string used in sweep output.  This is the unit serialized inside
    the CLI's JSON config.
    """

    kind: str
    params: dict
    label: str = ""

    def __post_init__(self):
        if not self.label:
            object.__setattr__(self, "label", self.kind)

    def validate(self) -> None:
        if self.kind not in _PARAM_SPEC:
            raise ValueError(
                f"unknown state kind {self.kind!r}; expected one of {', '.join(STATE_KINDS)}"
            )
        required, optional = _PARAM_SPEC[self.kind]
        names = set(self.params)
        if self.kind == "squeezed_vacuum":
            chosen = names & {"xi", "n_av"}
            if len(chosen) != 1:
                raise ValueError(
                    "squeezed_vacuum takes exactly one of the parameters 'xi' or 'n_av'"
                )
            names -= chosen
        missing = required - names
        unexpected = names - required - optional
        if missing or unexpected:
            parts = []
            if missing:
                parts.append(f"missing {sorted(missing)}")
            if unexpected:
                parts.append(f"unexpected {sorted(unexpected)}")
            raise ValueError(f"bad parameters for kind {self.kind!r}: {'; '.join(parts)}")
        for name, value in self.params.items():
            value = float(value)
            if not math.isfinite(value):
                raise ValueError(f"parameter {name!r} must be finite, got {value!r}")
            if name in {"n_av", "xi", "n"} and value < 0.0:
                raise ValueError(f"parameter {name!r} must be >= 0, got {value!r}")
            if name == "N_max" and value < 1:
                raise ValueError(f"parameter 'N_max' must be >= 1, got {value!r}")

    def with_params(self, **updates) -> "StateSpec":
        """Copy of this spec with the given parameters added/overridden."""
        params = dict(self.params)
        params.update(updates)
        return replace(self, params=params)

    @classmethod
    def from_dict(cls, data: dict) -> "StateSpec":
        """Build a spec from a flat JSON object: kind, optional label, params inline."""
        data = dict(data)
        try:
            kind = data.pop("kind")
        except KeyError:
            raise ValueError("state object needs a 'kind' field") from None
        label = data.pop("label", "")
        return cls(kind=str(kind), params=data, label=str(label))

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "label": self.label}
        out.update(self.params)
        return out


@dataclass(frozen=True)
class BuiltState:
    """A constructed distribution plus the bookkeeping the sweeps report.

    ``truncation_tail`` is the probability mass that the chosen cutoff
    discarded (before renormalization); ``tail_beyond_limit`` is the mass the
    built distribution itself carries above the ambient photon-number cap,
    and ``in_space`` flags whether that mass is below the tail tolerance.
    """

    distribution: PhotonNumberDistribution
    n_cut: int
    truncation_tail: float
    tail_beyond_limit: float
    in_space: bool


def _auto_cut_start(nbar: float) -> int:
    return max(8, math.ceil(nbar + 20.0 * math.sqrt(nbar + 1.0)))


def _grow_until_fits(make, start: int, what: str):
    """Double a cutoff until ``make(n_cut)`` stops raising CutoffTooSmallError."""
    n_cut = start
    while True:
        try:
            return make(n_cut), n_cut
        except CutoffTooSmallError:
            if n_cut >= _MAX_AUTO_CUT:
                raise
            n_cut = min(2 * n_cut, _MAX_AUTO_CUT)


def build_state(spec: StateSpec, n_max, *, tail_tol: float = TAIL_TOL) -> BuiltState:
    """Construct the distribution a :class:`StateSpec` describes.

    Pure states are dephased; unbounded states get their cutoff chosen
    automatically (starting from nbar + 20*sqrt(nbar+1) and doubling until
    the discarded tail drops below ``tail_tol``).  ``n_max`` is the ambient
    photon-number cap against which the result's residence is judged; states
    whose support genuinely extends past it (notably the vacuum/coherent
    mixture) come back flagged ``in_space=False``.
    """
    spec.validate()
    n_max = _check_index(n_max, "n_max")
    if n_max < 1:
        raise ValueError(f"n_max must be >= 1, got {n_max}")
    params = spec.params
    kind = spec.kind

    if kind == "coherent":
        n_av = float(params["n_av"])
        (state, tail), n_cut = _grow_until_fits(
            lambda nc: _coherent_with_tail(n_av, nc, tail_tol),
            _auto_cut_start(n_av),
        )
        dist = dephase(state)
    elif kind == "thermal":
        n_av = float(params["n_av"])
        (dist, tail), n_cut = _grow_until_fits(
            lambda nc: _thermal_with_tail(n_av, nc, tail_tol),
            _auto_cut_start(n_av),
        )
    elif kind == "squeezed_vacuum":
        if "xi" in params:
            r = float(params["xi"])
        else:
            r = math.asinh(math.sqrt(float(params["n_av"])))
        phase = float(params.get("phase", 0.0))
        nbar = math.sinh(r) ** 2
        (state, tail), n_cut = _grow_until_fits(
            lambda nc: _squeezed_with_tail(r, phase, nc, tail_tol),
            _auto_cut_start(nbar),
        )
        dist = dephase(state)
    elif kind == "fock":
        n = _check_index(params["n"], "n")
        dist = dephase(fock_state(n, n))
        tail, n_cut = 0.0, n
    elif kind == "coin":
        dist = dephase(coin_state(float(params["n_av"]), _check_index(params["N_max"], "N_max"),
                                  float(params.get("phase", 0.0))))
        tail, n_cut = 0.0, dist.n_cut
    elif kind == "coin_mixture":
        dist = coin_mixture(float(params["n_av"]), _check_index(params["N_max"], "N_max"))
        tail, n_cut = 0.0, dist.n_cut
    elif kind == "coin_coherent_mixture":
        n_av = float(params["n_av"])
        own_max = _check_index(params["N_max"], "N_max")
        (dist, tail), n_cut = _grow_until_fits(
            lambda nc: _coin_coherent_with_tail(n_av, own_max, nc, tail_tol),
            _auto_cut_start(own_max),
        )
    else:  # pragma: no cover - validate() already rejects unknown kinds
        raise ValueError(f"unknown state kind {kind!r}")

    beyond = tail_mass(dist, n_max)
    return BuiltState(
        distribution=dist,
        n_cut=n_cut,
        truncation_tail=tail,
        tail_beyond_limit=beyond,
        in_space=beyond < tail_tol,
    )
