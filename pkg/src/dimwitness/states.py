"""Two-photon state construction and validation.

Two representations are used:

* ``CorrelatedState`` stores only the D x D coefficient matrix c_kl of a
  perfectly correlated state rho = sum_kl c_kl |kk><ll|.  The flat index k
  labels the photon pair (|LG_{n,l}>_A, |LG_{n,-l}>_B); the OAM
  anti-correlation is absorbed into this pairing.
* ``GeneralTwoPhotonState`` stores the full D^2 x D^2 density matrix and is
  only allowed for small D (default cap 8), where brute-force work is
  feasible.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import CapacityError, ConfigError, IngestionError, InvalidStateError
from .modes import ModeIndex, ModeSet, generic_mode_set

__all__ = [
    "SMALL_D_CAP",
    "CorrelatedState",
    "GeneralTwoPhotonState",
    "DecompositionElement",
    "correlated_pure",
    "maximally_entangled",
    "max_witness_state",
    "max_witness_elements",
    "state_from_elements",
    "spdc_profile",
    "amplitudes_from_rates",
    "perturb_state",
]

SMALL_D_CAP = 8

_EIG_TOL = 1e-9
_TRACE_TOL = 1e-9


def _check_density(mat: np.ndarray, *, max_trace: float, name: str) -> None:
    if not np.allclose(mat, mat.conj().T, atol=1e-12):
        raise InvalidStateError(f"{name}: matrix is not Hermitian")
    eigs = np.linalg.eigvalsh(mat)
    if eigs.min() < -_EIG_TOL:
        raise InvalidStateError(f"{name}: negative eigenvalue {eigs.min():.3e}")
    tr = float(np.trace(mat).real)
    if not (0.0 < tr <= max_trace + _TRACE_TOL):
        raise InvalidStateError(f"{name}: trace {tr} outside (0, {max_trace}]")


@dataclass(frozen=True)
class CorrelatedState:
    """rho = sum_kl c_kl |kk><ll| with Hermitian PSD c and 0 < Tr(c) <= 1."""

    coeffs: np.ndarray
    mode_set: ModeSet

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=complex)
        object.__setattr__(self, "coeffs", c)
        if c.shape != (self.D, self.D):
            raise InvalidStateError(
                f"coefficient matrix shape {c.shape} does not match D={self.D}")

    @property
    def D(self) -> int:
        return self.mode_set.D

    def validate(self) -> None:
        _check_density(self.coeffs, max_trace=1.0, name="CorrelatedState")

    def embed(self, cap: int = SMALL_D_CAP) -> "GeneralTwoPhotonState":
        """Exact embedding into the full D^2 x D^2 representation."""
        D = self.D
        if D > cap:
            raise CapacityError(f"D={D} exceeds the small-D cap {cap}")
        rho = np.zeros((D * D, D * D), dtype=complex)
        diag = np.arange(D) * D + np.arange(D)
        rho[np.ix_(diag, diag)] = self.coeffs
        tr = np.trace(rho).real
        return GeneralTwoPhotonState(rho / tr, self.mode_set, cap=cap)

    def restricted(self, indices: Sequence[int]) -> "CorrelatedState":
        """State restricted (and renormalized) to a subset of flat indices."""
        idx = list(indices)
        c = self.coeffs[np.ix_(idx, idx)]
        tr = np.trace(c).real
        if tr <= 0:
            raise InvalidStateError("restriction has zero population")
        return CorrelatedState(c / tr, self.mode_set.subset(idx))


@dataclass(frozen=True)
class GeneralTwoPhotonState:
    """Full two-photon density matrix on the D x D mode space."""

    rho: np.ndarray
    mode_set: ModeSet
    cap: int = SMALL_D_CAP

    def __post_init__(self):
        rho = np.asarray(self.rho, dtype=complex)
        object.__setattr__(self, "rho", rho)
        D = self.D
        if D > self.cap:
            raise CapacityError(f"D={D} exceeds the small-D cap {self.cap}")
        if rho.shape != (D * D, D * D):
            raise InvalidStateError(
                f"density matrix shape {rho.shape} does not match D^2={D * D}")

    @property
    def D(self) -> int:
        return self.mode_set.D

    def validate(self) -> None:
        _check_density(self.rho, max_trace=1.0, name="GeneralTwoPhotonState")
        tr = float(np.trace(self.rho).real)
        if abs(tr - 1.0) > 1e-7:
            raise InvalidStateError(f"GeneralTwoPhotonState: trace {tr} != 1")


@dataclass(frozen=True)
class DecompositionElement:
    """One pure component |psi_alpha> = sum_{k in alpha} lambda_k |kk> of a
    correlated mixed state, with mixing weight p_alpha."""

    support: tuple[int, ...]
    weight: float
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=float)
        object.__setattr__(self, "amplitudes", amps)
        if len(self.support) != amps.size:
            raise InvalidStateError("support and amplitude lengths differ")
        if not (0.0 <= self.weight <= 1.0 + 1e-12):
            raise InvalidStateError(f"weight {self.weight} outside [0,1]")
        if abs(np.sum(amps**2) - 1.0) > 1e-9:
            raise InvalidStateError("element amplitudes are not normalized")


def correlated_pure(amplitudes, mode_set: ModeSet) -> CorrelatedState:
    """Rank-1 correlated state c_kl = a_k conj(a_l) / sum|a|^2."""
    a = np.asarray(amplitudes, dtype=complex).ravel()
    if a.size != mode_set.D:
        raise InvalidStateError(
            f"amplitude vector length {a.size} does not match D={mode_set.D}")
    norm2 = float(np.sum(np.abs(a) ** 2))
    if norm2 == 0.0:
        raise InvalidStateError("amplitude vector is identically zero")
    c = np.outer(a, a.conj()) / norm2
    return CorrelatedState(c, mode_set)


def maximally_entangled(D_or_modes) -> CorrelatedState:
    """(1/sqrt(D)) sum_k |kk>, i.e. correlated_pure of the all-ones vector."""
    mode_set = D_or_modes if isinstance(D_or_modes, ModeSet) else generic_mode_set(D_or_modes)
    return correlated_pure(np.ones(mode_set.D), mode_set)


def max_witness_state(D_or_modes, d: int) -> CorrelatedState:
    """Uniform mixture of the rank-d maximally entangled states over all
    C(D, d) index subsets; saturates the rank-d witness bound."""
    mode_set = D_or_modes if isinstance(D_or_modes, ModeSet) else generic_mode_set(D_or_modes)
    D = mode_set.D
    if not 1 <= d <= D:
        raise ConfigError(f"need 1 <= d <= D, got d={d}, D={D}")
    n_subsets = math.comb(D, d)
    c = np.zeros((D, D), dtype=complex)
    if n_subsets <= 100_000:
        for alpha in combinations(range(D), d):
            idx = np.asarray(alpha)
            c[np.ix_(idx, idx)] += 1.0 / (d * n_subsets)
    else:
        # closed form of the same sum, needed only at large D
        c[:] = (d - 1) / (D * (D - 1))
        np.fill_diagonal(c, 1.0 / D)
    return CorrelatedState(c, mode_set)


def max_witness_elements(D: int, d: int) -> list[DecompositionElement]:
    """The explicit convex decomposition behind :func:`max_witness_state`."""
    if not 1 <= d <= D:
        raise ConfigError(f"need 1 <= d <= D, got d={d}, D={D}")
    n_subsets = math.comb(D, d)
    amps = np.full(d, 1.0 / np.sqrt(d))
    return [DecompositionElement(alpha, 1.0 / n_subsets, amps)
            for alpha in combinations(range(D), d)]


def state_from_elements(elements: Sequence[DecompositionElement],
                        mode_set: ModeSet) -> CorrelatedState:
    """Assemble c = sum_alpha p_alpha lambda lambda^T from decomposition
    elements; weights must sum to one."""
    total = sum(e.weight for e in elements)
    if abs(total - 1.0) > 1e-9:
        raise InvalidStateError(f"element weights sum to {total}, expected 1")
    D = mode_set.D
    c = np.zeros((D, D), dtype=complex)
    for e in elements:
        idx = np.asarray(e.support)
        if idx.size and (idx.min() < 0 or idx.max() >= D):
            raise InvalidStateError("element support outside the mode set")
        c[np.ix_(idx, idx)] += e.weight * np.outer(e.amplitudes, e.amplitudes)
    return CorrelatedState(c, mode_set)


def spdc_profile(mode_set: ModeSet, lambda_l: float = 1.0,
                 lambda_n: float = 1.0) -> np.ndarray:
    """Smooth two-parameter amplitude profile a_{n,l} ~ exp(-|l|/(2 lambda_l)
    - n/(2 lambda_n)), normalized.  Infinite decay constants give the uniform
    (maximally entangled) profile."""
    if lambda_l <= 0 or lambda_n <= 0:
        raise ConfigError("profile decay constants must be positive")
    a = np.array([math.exp(-abs(m.l) / (2.0 * lambda_l) - m.n / (2.0 * lambda_n))
                  for m in mode_set.modes])
    return a / np.linalg.norm(a)


def amplitudes_from_rates(mode_set: ModeSet, rates: dict) -> np.ndarray:
    """Amplitudes a_k ~ sqrt(rate_k) from a per-mode coincidence-rate table
    keyed by (n, l)."""
    a = np.empty(mode_set.D)
    for k, m in enumerate(mode_set.modes):
        key = (m.n, m.l)
        if key not in rates:
            raise IngestionError(f"rate table is missing mode (n={m.n}, l={m.l})")
        rate = float(rates[key])
        if rate < 0:
            raise IngestionError(f"negative rate for mode (n={m.n}, l={m.l})")
        a[k] = math.sqrt(rate)
    if not np.any(a > 0):
        raise InvalidStateError("rate table is identically zero")
    return a / np.linalg.norm(a)


def perturb_state(state: CorrelatedState, strength: float,
                  rng: np.random.Generator,
                  cap: int = SMALL_D_CAP) -> GeneralTwoPhotonState:
    """Break the perfect mode correlation by random admixture.

    Adds a random Hermitian perturbation of magnitude O(strength) supported
    on the cross-correlated part of the two-photon space (|ij> with i != j),
    then projects back to the nearest PSD unit-trace matrix by eigenvalue
    clipping.  strength = 0 returns the exact embedding.
    """
    if strength < 0:
        raise ConfigError("perturbation strength must be >= 0")
    base = state.embed(cap=cap)
    if strength == 0.0:
        return base
    D = state.D
    dim = D * D
    cross = np.asarray([i * D + j for i in range(D) for j in range(D) if i != j])
    m = cross.size
    G = rng.standard_normal((m, m)) + 1j * rng.standard_normal((m, m))
    H = (G + G.conj().T) / 2.0
    H /= np.linalg.norm(H)
    rho = base.rho.copy()
    rho[np.ix_(cross, cross)] += strength * H
    # PSD repair: clip negative eigenvalues, renormalize the trace
    w, V = np.linalg.eigh((rho + rho.conj().T) / 2.0)
    w = np.clip(w, 0.0, None)
    rho = (V * w) @ V.conj().T
    rho /= np.trace(rho).real
    return GeneralTwoPhotonState(rho, state.mode_set, cap=cap)


# ---------------------------------------------------------------------------
# State files: JSON with mode set, representation tag and row-major complex
# matrix encoded as [re, im] pairs.

def _matrix_to_json(mat: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in mat]

def _matrix_from_json(data) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in data])


def save_state(state, path) -> None:
    if isinstance(state, CorrelatedState):
        tag, mat = "correlated", state.coeffs
    elif isinstance(state, GeneralTwoPhotonState):
        tag, mat = "general", state.rho
    else:
        raise ConfigError(f"cannot serialize object of type {type(state).__name__}")
    payload = {
        "modes": state.mode_set.to_json(),
        "representation": tag,
        "matrix": _matrix_to_json(mat),
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, sort_keys=True)
        fh.write("\n")


def load_state(path, cap: int = SMALL_D_CAP):
    with open(path) as fh:
        payload = json.load(fh)
    try:
        mode_set = ModeSet.from_json(payload["modes"])
        tag = payload["representation"]
        mat = _matrix_from_json(payload["matrix"])
    except (KeyError, TypeError, ValueError) as exc:
        raise IngestionError(f"malformed state file {path}: {exc}") from exc
    if tag == "correlated":
        state = CorrelatedState(mat, mode_set)
    elif tag == "general":
        state = GeneralTwoPhotonState(mat, mode_set, cap=cap)
    else:
        raise IngestionError(f"unknown state representation {tag!r}")
    state.validate()
    return state
