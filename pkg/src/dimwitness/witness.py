"""The dimensionality witness and everything built on top of it.

W sums the three subspace visibilities over all D(D-1)/2 mode pairs; a
rank-d state can reach at most

    bound(D, d) = 3 D(D-1)/2 - D(D-d) = D d + D(D-3)/2,

so measuring above bound(D, d) certifies (d+1)-dimensional entanglement.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, IngestionError, IntegrityError
from .measurement import (BASES, CoincidenceDataset, VisibilityRecord,
                          _OUTCOME_VECS, estimate_visibilities, visibilities)
from .modes import ModeSet
from .oracle import brute_force_witness
from .states import CorrelatedState, GeneralTwoPhotonState, SMALL_D_CAP, perturb_state

__all__ = [
    "VisibilityTable",
    "WitnessReport",
    "table_from_state",
    "table_from_dataset",
    "witness_sum",
    "witness_correlated",
    "bound",
    "certified_dimension",
    "f_bound",
    "monte_carlo_ci",
    "per_mode_contribution",
    "greedy_subset",
    "exhaustive_best_subset",
    "robustness_study",
    "GreedyResult",
    "RobustnessResult",
]


@dataclass(frozen=True)
class VisibilityTable:
    """Visibility records for every pair (k, l), k < l, of a mode set."""

    mode_set: ModeSet
    records: dict

    def record(self, k: int, l: int) -> VisibilityRecord:
        if (k, l) not in self.records:
            raise IngestionError(f"visibility table is missing pair ({k}, {l})")
        return self.records[(k, l)]

    def check_complete(self) -> None:
        D = self.mode_set.D
        missing = [(k, l) for k in range(D) for l in range(k + 1, D)
                   if (k, l) not in self.records]
        if missing:
            raise IngestionError(f"visibility table is missing pairs {missing[:10]}"
                                 + (" ..." if len(missing) > 10 else ""))


def table_from_state(state) -> VisibilityTable:
    D = state.mode_set.D
    records = {(k, l): visibilities(state, k, l)
               for k in range(D) for l in range(k + 1, D)}
    return VisibilityTable(state.mode_set, records)


def table_from_dataset(dataset: CoincidenceDataset) -> VisibilityTable:
    D = dataset.mode_set.D
    records = {(k, l): estimate_visibilities(dataset, k, l)
               for k in range(D) for l in range(k + 1, D)}
    return VisibilityTable(dataset.mode_set, records)


def witness_sum(table: VisibilityTable, indices=None) -> float:
    """W over all pairs of the table, or over pairs within `indices` only.

    Summation runs in fixed index order so results are reproducible.
    """
    if indices is None:
        table.check_complete()
        idx = range(table.mode_set.D)
    else:
        idx = sorted(indices)
    total = 0.0
    for i, k in enumerate(idx):
        for l in list(idx)[i + 1:]:
            total += table.record(k, l).sv
    return total


def witness_correlated(coeffs: np.ndarray) -> float:
    """Vectorized W for the perfectly correlated class.

    On c_kl the subspace visibilities reduce to V_z = 1 and
    V_x = V_y = 2|Re c_kl| / (c_kk + c_ll); this closed form is checked
    against the brute-force path in the test suite.
    """
    pop = np.asarray(coeffs).real.diagonal()
    N = pop[:, None] + pop[None, :]
    num = np.abs(np.asarray(coeffs).real)
    iu = np.triu_indices(pop.size, k=1)
    n, v = N[iu], num[iu]
    live = n > 0
    return float(np.sum(1.0 + 4.0 * v[live] / n[live]))


def bound(D: int, d: int) -> int:
    """Witness threshold for rank-d states: 3 D(D-1)/2 - D(D-d)."""
    if not 1 <= d <= D:
        raise ConfigError(f"need 1 <= d <= D, got d={d}, D={D}")
    return 3 * D * (D - 1) // 2 - D * (D - d)


def certified_dimension(W: float, D: int) -> int:
    """Largest d with W strictly above bound(D, d-1); 1 when nothing is
    certified."""
    if D < 2 or not np.isfinite(W):
        raise ConfigError("need finite W and D >= 2")
    d_cert = 1
    for d in range(2, D + 1):
        if W > bound(D, d - 1):
            d_cert = d
    return d_cert


def f_bound(D: int, d: int) -> int:
    """Maximum of the un-normalized total correlation for rank-d states."""
    if not 1 <= d <= D:
        raise ConfigError(f"need 1 <= d <= D, got d={d}, D={D}")
    return 2 * d + D - 3


def _counts_arrays(dataset: CoincidenceDataset):
    D = dataset.mode_set.D
    pairs = [(k, l) for k in range(D) for l in range(k + 1, D)]
    counts = np.empty((len(pairs), len(BASES), 4))
    for p, (k, l) in enumerate(pairs):
        for b, basis in enumerate(BASES):
            counts[p, b] = dataset.basis_counts(k, l, basis)
    return pairs, counts


def _witness_from_counts(counts: np.ndarray) -> float:
    # counts: (n_pairs, 3 bases, 4 outcomes), basis order x, y, z
    tot = counts.sum(axis=2)
    num = np.abs(counts[..., 0] + counts[..., 3] - counts[..., 1] - counts[..., 2])
    with np.errstate(invalid="ignore", divide="ignore"):
        V = np.where(tot > 0, num / np.where(tot > 0, tot, 1.0), 0.0)
    z_dead = counts[:, BASES.index("z"), :].sum(axis=1) == 0
    V[z_dead] = 0.0
    return float(V.sum())


def monte_carlo_ci(dataset: CoincidenceDataset, n_resamples: int,
                   seed: int) -> tuple[float, float]:
    """Poisson parametric bootstrap of W.

    Every count is resampled as Poisson(observed count), W recomputed per
    resample; returns (mean, standard deviation).  Per-resample substreams
    are derived from (seed, index), so the result does not depend on
    execution order.
    """
    if n_resamples < 2:
        raise ConfigError("need at least 2 resamples")
    _, counts = _counts_arrays(dataset)
    ws = np.empty(n_resamples)
    for i in range(n_resamples):
        rng = np.random.default_rng(np.random.SeedSequence((seed, 2, i)))
        ws[i] = _witness_from_counts(rng.poisson(counts))
    return float(ws.mean()), float(ws.std(ddof=1))


def per_mode_contribution(table: VisibilityTable, indices=None) -> np.ndarray:
    """Mean summed visibility of each mode against all other modes."""
    idx = sorted(indices) if indices is not None else list(range(table.mode_set.D))
    if indices is None:
        table.check_complete()
    out = np.zeros(len(idx))
    for a, k in enumerate(idx):
        vals = [table.record(min(k, l), max(k, l)).sv for l in idx if l != k]
        out[a] = float(np.mean(vals)) if vals else 0.0
    return out


@dataclass(frozen=True)
class GreedyResult:
    trajectory: list          # (subset size D', certified d, W)
    subsets: list             # flat-index subset at each trajectory step
    best_subset: list
    best_d: int


def greedy_subset(table: VisibilityTable) -> GreedyResult:
    """Iteratively drop the weakest-contributing mode and track how the
    certified dimension evolves.

    At each step the mode with the lowest mean summed visibility against the
    remaining modes is removed, W recomputed on the surviving pairs, and the
    certified dimension evaluated at the reduced D'.  The best subset is the
    one with the highest certified d (larger subsets win ties).
    """
    table.check_complete()
    active = list(range(table.mode_set.D))
    trajectory, subsets = [], []
    while len(active) >= 2:
        W = witness_sum(table, active)
        d = certified_dimension(W, len(active))
        trajectory.append((len(active), d, W))
        subsets.append(list(active))
        if len(active) == 2:
            break
        contrib = per_mode_contribution(table, active)
        active.pop(int(np.argmin(contrib)))
    best_i = max(range(len(trajectory)),
                 key=lambda i: (trajectory[i][1], trajectory[i][0]))
    return GreedyResult(trajectory, subsets, subsets[best_i],
                        trajectory[best_i][1])


def exhaustive_best_subset(table: VisibilityTable, max_D: int = 12):
    """Exact best subset by full enumeration; feasible only for small D."""
    from itertools import combinations

    table.check_complete()
    D = table.mode_set.D
    if D > max_D:
        raise ConfigError(f"exhaustive subset search capped at D={max_D}")
    best, best_d = list(range(D)), 1
    for size in range(2, D + 1):
        for subset in combinations(range(D), size):
            d = certified_dimension(witness_sum(table, subset), size)
            if d > best_d or (d == best_d and size > len(best)):
                best, best_d = list(subset), d
    return best, best_d


# ---------------------------------------------------------------------------
# Robustness: perturbed states and perturbed (non-orthogonal) projections.

def _prob_with_vectors(state, va: np.ndarray, vb: np.ndarray) -> float:
    if isinstance(state, CorrelatedState):
        w = np.conj(va) * np.conj(vb)
        return max(float((w.conj() @ state.coeffs @ w).real), 0.0)
    vec = np.kron(va, vb)
    return max(float((vec.conj() @ state.rho @ vec).real), 0.0)


def _perturbed_frame(D: int, strength: float, leak_fraction: float,
                     rng: np.random.Generator) -> np.ndarray:
    """One imperfect mode-projection frame per photon.

    Column m is the vector actually projected on when mode m is addressed:
    a per-mode phase miscalibration of magnitude `strength` plus crosstalk
    into all other modes at `leak_fraction * strength`.  The columns are no
    longer orthogonal, modelling non-orthogonal projections; the errors are
    systematic, i.e. fixed for the whole measurement run.
    """
    theta = strength * rng.standard_normal(D)
    F = np.diag(np.exp(1j * theta)).astype(complex)
    if strength > 0.0 and leak_fraction > 0.0:
        G = rng.standard_normal((D, D)) + 1j * rng.standard_normal((D, D))
        G /= np.linalg.norm(G, axis=0)
        F = F + leak_fraction * strength * G
    return F / np.linalg.norm(F, axis=0)


def witness_with_perturbed_projectors(state, strength: float,
                                      rng: np.random.Generator,
                                      leak_fraction: float = 0.3) -> float:
    """W as measured with imperfect (non-orthogonal) projection frames.

    Each photon gets one perturbed frame for the whole run; all subspace
    superpositions are built from the perturbed mode vectors.
    """
    D = state.mode_set.D
    frames = [_perturbed_frame(D, strength, leak_fraction, rng)
              for _ in range(2)]
    total = 0.0
    for k in range(D):
        for l in range(k + 1, D):
            svs, z_tot = [], None
            for basis in BASES:
                vecs = {}
                for photon in (0, 1):
                    vk, vl = frames[photon][:, k], frames[photon][:, l]
                    if basis == "z":
                        plus, minus = vk, vl
                    elif basis == "x":
                        plus, minus = vk + vl, vk - vl
                    else:
                        plus, minus = vk + 1j * vl, vk - 1j * vl
                    vecs[photon] = [plus / np.linalg.norm(plus),
                                    minus / np.linalg.norm(minus)]
                p = np.array([_prob_with_vectors(state, vecs[0][s], vecs[1][t])
                              for s in (0, 1) for t in (0, 1)])
                tot = p.sum()
                svs.append(abs(p[0] + p[3] - p[1] - p[2]) / tot if tot > 0 else 0.0)
                if basis == "z":
                    z_tot = tot
            if z_tot and z_tot > 0:
                total += sum(svs)
    return total


@dataclass(frozen=True)
class RobustnessResult:
    kind: str
    baseline: float
    trials: list              # (strength, W)
    fraction_non_increasing: float


def robustness_study(state: CorrelatedState, kind: str, n_trials: int,
                     strength_max: float, seed: int,
                     cap: int = SMALL_D_CAP) -> RobustnessResult:
    """Monte-Carlo perturbation sweep of the witness.

    kind: "state" (non-perfect correlations), "projector" (non-orthogonal
    projections) or "both".  Strengths ramp linearly from 0 to strength_max;
    W is recomputed via the brute-force path for each trial.
    """
    if kind not in ("state", "projector", "both"):
        raise ConfigError(f"unknown robustness kind {kind!r}")
    if n_trials < 1:
        raise ConfigError("need at least one trial")
    baseline = brute_force_witness(state, d_cap=cap)
    strengths = np.linspace(0.0, strength_max, n_trials)
    trials = []
    for i, s in enumerate(strengths):
        rng = np.random.default_rng(np.random.SeedSequence((seed, 3, i)))
        if kind == "state":
            W = brute_force_witness(perturb_state(state, float(s), rng, cap=cap),
                                    d_cap=cap)
        elif kind == "projector":
            W = witness_with_perturbed_projectors(state, float(s), rng)
        else:
            pert = perturb_state(state, float(s), rng, cap=cap)
            W = witness_with_perturbed_projectors(pert, float(s), rng)
        trials.append((float(s), float(W)))
    frac = float(np.mean([w <= baseline + 1e-9 for _, w in trials]))
    return RobustnessResult(kind, baseline, trials, frac)


# ---------------------------------------------------------------------------
# Reports.

@dataclass
class WitnessReport:
    W: float
    D: int
    certified_d: int
    bounds: list                       # [(d, threshold), ...]
    per_mode: list
    sigma: float | None = None
    n_resamples: int | None = None
    subset_trajectory: list | None = None
    notes: list = field(default_factory=list)

    def to_json(self) -> dict:
        payload = {
            "W": self.W,
            "D": self.D,
            "sigma": self.sigma,
            "n_resamples": self.n_resamples,
            "certified_d": self.certified_d,
            "bounds": [[d, t] for d, t in self.bounds],
            "per_mode": list(map(float, self.per_mode)),
            "subset_trajectory": ([[dp, d] for dp, d, _ in self.subset_trajectory]
                                  if self.subset_trajectory is not None else None),
            "notes": self.notes,
        }
        return payload

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, sort_keys=True)
            fh.write("\n")


def build_report(table: VisibilityTable, dataset: CoincidenceDataset | None = None,
                 n_resamples: int = 0, seed: int | None = None,
                 with_subsets: bool = True) -> WitnessReport:
    """Full certification report from a visibility table.

    A W above the global cap 3 D(D-1)/2 is physically impossible and raises
    an integrity error rather than producing a report.
    """
    D = table.mode_set.D
    W = witness_sum(table)
    cap = 1.5 * D * (D - 1)
    if W > cap + 1e-6:
        raise IntegrityError(
            f"W={W} exceeds the global cap {cap}; the data is inconsistent")
    report = WitnessReport(
        W=W, D=D,
        certified_d=certified_dimension(W, D),
        bounds=[(d, bound(D, d)) for d in range(1, D + 1)],
        per_mode=list(per_mode_contribution(table)),
    )
    if n_resamples >= 2:
        if dataset is None:
            raise ConfigError("confidence intervals require the counts dataset")
        if seed is None:
            raise ConfigError("a seed is required for Monte-Carlo resampling")
        _, sigma = monte_carlo_ci(dataset, n_resamples, seed)
        report.sigma = sigma
        report.n_resamples = n_resamples
    if with_subsets:
        report.subset_trajectory = greedy_subset(table).trajectory
    return report
