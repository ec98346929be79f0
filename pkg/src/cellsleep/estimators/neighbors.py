"""Distance-based and random neighbor-selection load estimators.

Both families fill a sleeping SBS's unknown load from the loads of active
SBSs: the distance variant picks the N geographically nearest active
neighbors, the random variant draws N active neighbors uniformly without
replacement. Either set is then combined by a plain mean or by inverse
distance weighting

    w = d_max / d**n

with d_max the largest distance among the selected neighbors and n >= 1
the weighting exponent. d_max cancels in the normalized estimate; it only
scales the reported weights. Distances below ``distance_floor`` are clamped
so co-located stations cannot produce infinite weights.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from ..traffic import LoadSnapshot, SbsPlacement
from .result import EstimateResult, NeighborDetail


def positions_array(placements: Sequence[SbsPlacement], n_sbs: int) -> np.ndarray:
    """Stack placements into an (n_sbs, 2) coordinate array indexed by sbs_id."""
    if len(placements) != n_sbs:
        raise ValueError(f"need placements for all {n_sbs} SBSs, got {len(placements)}")
    pos = np.full((n_sbs, 2), np.nan)
    for p in placements:
        if not (0 <= p.sbs_id < n_sbs):
            raise ValueError(f"placement for unknown SBS id {p.sbs_id}")
        pos[p.sbs_id] = (p.x_m, p.y_m)
    if np.isnan(pos).any():
        missing = np.flatnonzero(np.isnan(pos[:, 0])).tolist()
        raise ValueError(f"missing placements for SBS ids {missing}")
    return pos


def _combine(loads: np.ndarray, dists: np.ndarray, exponent: int | None) -> tuple[float, np.ndarray]:
    """Estimate and normalized weights for one sleeper's neighbor set."""
    n = loads.shape[0]
    if exponent is None:
        return float(loads.mean()), np.full(n, 1.0 / n)
    weights = dists.max() / dists**exponent
    if np.all(weights == weights[0]):
        # Equal distances: weighting reduces to the plain mean exactly.
        return float(loads.mean()), np.full(n, 1.0 / n)
    normalized = weights / weights.sum()
    return float((loads * weights).sum() / weights.sum()), normalized


def _validate(snapshot: LoadSnapshot, neighbors: int, exponent: int | None) -> np.ndarray:
    if neighbors < 1:
        raise ValueError("neighbor count must be >= 1")
    if exponent is not None and (int(exponent) != exponent or exponent < 1):
        raise ValueError(f"weighting exponent must be a positive integer, got {exponent!r}")
    active = snapshot.active_ids
    if active.size == 0:
        raise ValueError("no active SBS to interpolate from")
    if neighbors > active.size:
        raise ValueError(f"requested {neighbors} neighbors but only {active.size} SBSs are active")
    return active


def distance_estimate(
    snapshot: LoadSnapshot,
    placements: Sequence[SbsPlacement],
    neighbors: int,
    weighting: int | None = None,
    *,
    distance_floor: float = 1.0,
) -> EstimateResult:
    """Estimate each sleeper from its N nearest active SBSs.

    Neighbors are ranked by Euclidean distance (ties broken by SBS id) and
    combined by plain mean or inverse distance weighting per ``weighting``.
    """
    active = _validate(snapshot, neighbors, weighting)
    pos = positions_array(placements, snapshot.n_sbs)
    sleepers = snapshot.sleeping_ids
    active_loads = snapshot.loads[active]

    estimates = np.empty(sleepers.size)
    detail = []
    for i, sleeper in enumerate(sleepers):
        d = np.sqrt(((pos[active] - pos[sleeper]) ** 2).sum(axis=1))
        order = np.argsort(d, kind="stable")[:neighbors]
        dists = np.maximum(d[order], distance_floor)
        estimates[i], weights = _combine(active_loads[order], dists, weighting)
        detail.append(
            NeighborDetail(
                sleeper_id=int(sleeper),
                neighbor_ids=tuple(int(a) for a in active[order]),
                weights=tuple(float(w) for w in weights),
            )
        )
    return EstimateResult(
        sleeper_ids=tuple(int(s) for s in sleepers),
        estimates=estimates,
        detail=tuple(detail),
    )


def random_estimate(
    snapshot: LoadSnapshot,
    placements: Sequence[SbsPlacement],
    neighbors: int,
    weighting: int | None = None,
    seed: int = 0,
    *,
    distance_floor: float = 1.0,
) -> EstimateResult:
    """Estimate each sleeper from N active SBSs drawn uniformly.

    Draw procedure (replayable): one PCG64 generator seeded with ``seed``;
    sleepers are processed in ascending SBS id and each takes the first N
    entries of ``rng.permutation(active_ids)`` with active ids sorted
    ascending. The drawn set is combined exactly as in the distance variant.
    """
    active = _validate(snapshot, neighbors, weighting)
    pos = positions_array(placements, snapshot.n_sbs)
    sleepers = snapshot.sleeping_ids
    rng = np.random.default_rng(seed)

    estimates = np.empty(sleepers.size)
    detail = []
    for i, sleeper in enumerate(sleepers):
        drawn = rng.permutation(active)[:neighbors]
        dists = np.maximum(
            np.sqrt(((pos[drawn] - pos[sleeper]) ** 2).sum(axis=1)), distance_floor
        )
        estimates[i], weights = _combine(snapshot.loads[drawn], dists, weighting)
        detail.append(
            NeighborDetail(
                sleeper_id=int(sleeper),
                neighbor_ids=tuple(int(a) for a in drawn),
                weights=tuple(float(w) for w in weights),
            )
        )
    return EstimateResult(
        sleeper_ids=tuple(int(s) for s in sleepers),
        estimates=estimates,
        detail=tuple(detail),
    )
