"""Brute-force ground truth at small D.

Everything here works from the explicit full D^2 x D^2 density matrix and
the literal definitions (project to each subspace, normalize, take the
operator trace), with no closed-form shortcuts.  It exists to check the
production paths and to put falsification pressure on the bounds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import CapacityError, InvalidStateError
from .measurement import _DOUBLE, _G_OP
from .states import (CorrelatedState, DecompositionElement,
                     GeneralTwoPhotonState, SMALL_D_CAP, max_witness_elements,
                     state_from_elements)
from .modes import generic_mode_set

__all__ = [
    "OracleConfig",
    "brute_force_witness",
    "schmidt_rank",
    "random_correlated_mixture",
    "random_rank_d_search",
    "f_total",
]


@dataclass(frozen=True)
class OracleConfig:
    d_cap: int = SMALL_D_CAP
    tol: float = 1e-9
    search_iters: int = 10_000


def _full_rho(state, d_cap: int) -> tuple[np.ndarray, int]:
    if isinstance(state, CorrelatedState):
        state = state.embed(cap=d_cap)
    elif not isinstance(state, GeneralTwoPhotonState):
        raise InvalidStateError(f"unsupported state type {type(state).__name__}")
    if state.D > d_cap:
        raise CapacityError(f"D={state.D} exceeds the oracle cap {d_cap}")
    return state.rho, state.D


def brute_force_witness(state, d_cap: int = SMALL_D_CAP) -> float:
    """Sum of g over all subspaces, from the explicit full density matrix.

    For each pair (k, l) the state is projected onto the span of
    {|kk>, |kl>, |lk>, |ll>}, normalized, and the correlation operator
    traced against it.  Zero-weight subspaces contribute 0.
    """
    rho, D = _full_rho(state, d_cap)
    total = 0.0
    for k in range(D):
        for l in range(k + 1, D):
            idx = [k * D + k, k * D + l, l * D + k, l * D + l]
            block = rho[np.ix_(idx, idx)]
            N = float(np.trace(block).real)
            if N <= 0.0:
                continue
            total += float(np.trace(_G_OP @ (block / N)).real)
    return total


def brute_force_sv_witness(state, d_cap: int = SMALL_D_CAP) -> float:
    """Sum of |<s_i x s_i>| visibilities over all subspaces (the measured W),
    same explicit projection path as :func:`brute_force_witness`."""
    rho, D = _full_rho(state, d_cap)
    total = 0.0
    for k in range(D):
        for l in range(k + 1, D):
            idx = [k * D + k, k * D + l, l * D + k, l * D + l]
            block = rho[np.ix_(idx, idx)]
            N = float(np.trace(block).real)
            if N <= 0.0:
                continue
            total += sum(abs(float(np.trace(op @ (block / N)).real))
                         for op in _DOUBLE.values())
    return total


def f_total(state, d_cap: int = SMALL_D_CAP) -> float:
    """Sum of the un-normalized correlations f_kl over all pairs."""
    rho, D = _full_rho(state, d_cap)
    total = 0.0
    for k in range(D):
        for l in range(k + 1, D):
            idx = [k * D + k, k * D + l, l * D + k, l * D + l]
            block = rho[np.ix_(idx, idx)]
            total += float(np.trace(_G_OP @ block).real)
    return total


def schmidt_rank(M: np.ndarray, tol: float = 1e-10) -> int:
    """Schmidt rank of |psi> = sum_ij M_ij |i>|j>: singular values above
    tol times the largest one."""
    M = np.asarray(M, dtype=complex)
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        raise InvalidStateError("zero amplitude matrix has no Schmidt rank")
    return int(np.count_nonzero(s > tol * s[0]))


def random_correlated_mixture(D: int, d: int, rng: np.random.Generator,
                              max_elements: int = 4) -> CorrelatedState:
    """Random mixture of rank <= d correlated pure states with non-negative
    real amplitudes (random supports, Dirichlet weights)."""
    n_el = int(rng.integers(1, max_elements + 1))
    weights = rng.dirichlet(np.ones(n_el))
    elements = []
    for w in weights:
        r = int(rng.integers(1, d + 1))
        support = tuple(sorted(rng.choice(D, size=r, replace=False).tolist()))
        amps = np.abs(rng.standard_normal(r)) + 1e-12
        amps /= np.linalg.norm(amps)
        elements.append(DecompositionElement(support, float(w), amps))
    return state_from_elements(elements, generic_mode_set(D))


def random_rank_d_search(D: int, d: int, iters: int, rng: np.random.Generator,
                         d_cap: int = SMALL_D_CAP,
                         seed_saturating: bool = False) -> float:
    """Max brute-force witness over random rank <= d correlated mixtures.

    With ``seed_saturating`` the known bound-saturating mixture is added to
    the pool, so the returned maximum also probes tightness.
    """
    if D > d_cap:
        raise CapacityError(f"D={D} exceeds the oracle cap {d_cap}")
    best = -np.inf
    if seed_saturating:
        sat = state_from_elements(max_witness_elements(D, d), generic_mode_set(D))
        best = brute_force_witness(sat, d_cap=d_cap)
    for _ in range(iters):
        state = random_correlated_mixture(D, d, rng)
        best = max(best, brute_force_witness(state, d_cap=d_cap))
    return float(best)
