"""Switch-off state vectors, capacity checks and power minimization.

A switching state assigns each SBS either ON, or OFF together with an
offload target (the macro station or the HAPS). Offloaded traffic raises
the target tier's load by the SBS load times a per-tier conversion factor,
and a state is feasible only while both tiers stay at or below unit load.

Two optimizers are provided: an exhaustive search over all 2^s on/off
vectors (the oracle, capped by ``max_sbs``) and a greedy heuristic that
switches SBSs off in ascending-load order while that strictly lowers total
power. Both are deterministic, including tie-breaks: among equal-power
optima the exhaustive search returns the lexicographically smallest on/off
vector, preferring MBS over HAPS targets position by position.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .errors import InfeasibleNetworkError
from .power import NetworkPowerConfig, network_power

EXHAUSTIVE_SBS_CAP = 20
INNER_ENUM_CAP = 10  # OFF-set sizes up to this are assigned by exact enumeration
_CHUNK_BITS = 14


class OffloadTarget(Enum):
    MBS = "M"
    HAPS = "H"


@dataclass(frozen=True)
class OffloadScales:
    """Load conversion factors: one unit of SBS load costs this much tier load."""

    to_mbs: float = 0.05
    to_haps: float = 0.02

    def __post_init__(self) -> None:
        if self.to_mbs < 0 or self.to_haps < 0:
            raise ValueError("offload scales must be nonnegative")


@dataclass(frozen=True)
class StateVector:
    """Per-SBS on/off bits plus an offload target for every OFF SBS."""

    on_off: tuple[bool, ...]
    targets: tuple[OffloadTarget | None, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "on_off", tuple(bool(b) for b in self.on_off))
        object.__setattr__(self, "targets", tuple(self.targets))
        if len(self.on_off) != len(self.targets):
            raise ValueError("on_off and targets must have equal length")
        for j, (on, tgt) in enumerate(zip(self.on_off, self.targets)):
            if on and tgt is not None:
                raise ValueError(f"SBS {j} is ON but has an offload target")
            if not on and not isinstance(tgt, OffloadTarget):
                raise ValueError(f"SBS {j} is OFF but has no offload target")

    @classmethod
    def all_on(cls, n_sbs: int) -> "StateVector":
        return cls(on_off=(True,) * n_sbs, targets=(None,) * n_sbs)

    @property
    def n_sbs(self) -> int:
        return len(self.on_off)

    @property
    def n_off(self) -> int:
        return sum(1 for b in self.on_off if not b)

    def bitstring(self) -> str:
        return "".join("1" if b else "0" for b in self.on_off)

    def to_json_dict(self) -> dict:
        return {
            "on_off": self.bitstring(),
            "targets": "".join("-" if t is None else t.value for t in self.targets),
        }


@dataclass(frozen=True)
class CapacityState:
    """MBS/HAPS loads split into intrinsic and offloaded components."""

    base_mbs: float
    base_haps: float
    offloaded_mbs: float
    offloaded_haps: float

    @property
    def mbs_load(self) -> float:
        return self.base_mbs + self.offloaded_mbs

    @property
    def haps_load(self) -> float:
        return self.base_haps + self.offloaded_haps

    @property
    def feasible(self) -> bool:
        return self.mbs_load <= 1.0 and self.haps_load <= 1.0

    def to_json_dict(self) -> dict:
        return {
            "mbs_load": self.mbs_load,
            "haps_load": self.haps_load,
            "base_mbs": self.base_mbs,
            "base_haps": self.base_haps,
            "offloaded_mbs": self.offloaded_mbs,
            "offloaded_haps": self.offloaded_haps,
            "feasible": self.feasible,
        }


@dataclass(frozen=True)
class SwitchingSolution:
    state: StateVector
    power: float
    feasible: bool
    capacity: CapacityState
    optimizer: str

    def to_json_dict(self) -> dict:
        return {
            "state": self.state.to_json_dict(),
            "power_w": self.power,
            "feasible": self.feasible,
            "capacity": self.capacity.to_json_dict(),
            "optimizer": self.optimizer,
        }


def apply_offloads(
    base_mbs_load: float,
    base_haps_load: float,
    sbs_loads: Sequence[float],
    state: StateVector,
    scales: OffloadScales = OffloadScales(),
) -> CapacityState:
    """Accumulate the offloaded load of every OFF SBS onto its target tier.

    Infeasibility (a tier above unit load) is a flag on the returned state,
    not an error: optimizers evaluate and then skip infeasible states.
    """
    loads = np.asarray(sbs_loads, dtype=float)
    if loads.shape != (state.n_sbs,):
        raise ValueError(f"expected {state.n_sbs} SBS loads, got shape {loads.shape}")
    for name, value in (("base_mbs_load", base_mbs_load), ("base_haps_load", base_haps_load)):
        if not (0.0 <= value <= 1.0):
            raise ValueError(f"{name} must lie in [0, 1], got {value!r}")
    if loads.size and (np.isnan(loads).any() or loads.min() < 0.0 or loads.max() > 1.0):
        raise ValueError("SBS loads must lie in [0, 1]")
    off_mbs = 0.0
    off_haps = 0.0
    for load, on, tgt in zip(loads, state.on_off, state.targets):
        if on:
            continue
        if tgt is OffloadTarget.MBS:
            off_mbs += scales.to_mbs * float(load)
        else:
            off_haps += scales.to_haps * float(load)
    return CapacityState(
        base_mbs=float(base_mbs_load),
        base_haps=float(base_haps_load),
        offloaded_mbs=off_mbs,
        offloaded_haps=off_haps,
    )


def objective(
    state: StateVector,
    sbs_loads: Sequence[float],
    capacity: CapacityState,
    power_config: NetworkPowerConfig,
) -> float:
    """Total network power of a state, using post-offload tier loads."""
    return network_power(
        power_config,
        haps_load=capacity.haps_load,
        mbs_load=capacity.mbs_load,
        sbs_loads=sbs_loads,
        on_off=state.on_off,
    )


def decision_change_rate(state_actual: StateVector, state_estimated: StateVector) -> float:
    """Fraction of SBS on/off decisions that differ (offload targets ignored)."""
    if state_actual.n_sbs != state_estimated.n_sbs:
        raise ValueError("state vectors must cover the same number of SBSs")
    diff = sum(1 for a, b in zip(state_actual.on_off, state_estimated.on_off) if a != b)
    return diff / state_actual.n_sbs


def _solution(
    on_off: tuple[bool, ...],
    targets: tuple[OffloadTarget | None, ...],
    loads: np.ndarray,
    base_mbs: float,
    base_haps: float,
    power_config: NetworkPowerConfig,
    scales: OffloadScales,
    optimizer: str,
) -> SwitchingSolution:
    state = StateVector(on_off=on_off, targets=targets)
    capacity = apply_offloads(base_mbs, base_haps, loads, state, scales)
    power = objective(state, loads, capacity, power_config)
    return SwitchingSolution(
        state=state, power=power, feasible=capacity.feasible, capacity=capacity, optimizer=optimizer
    )


def _assign_offloads(
    off_ids: np.ndarray,
    loads: np.ndarray,
    cap_mbs: float,
    cap_haps: float,
    cost_mbs: np.ndarray,
    cost_haps: np.ndarray,
    use_mbs: np.ndarray,
    use_haps: np.ndarray,
) -> tuple[float, list[OffloadTarget]] | None:
    """Cheapest feasible target assignment for one OFF set, or None.

    Exact enumeration up to ``INNER_ENUM_CAP`` OFF SBSs (candidates visited
    in lexicographic MBS-before-HAPS order, strict improvement only, so the
    first optimum wins ties); greedy best-fit in descending-load order
    beyond that.
    """
    m = off_ids.size
    if m == 0:
        return 0.0, []
    if m <= INNER_ENUM_CAP:
        best: tuple[float, list[OffloadTarget]] | None = None
        for combo in itertools.product((OffloadTarget.MBS, OffloadTarget.HAPS), repeat=m):
            used_m = used_h = cost = 0.0
            for j, tgt in zip(off_ids, combo):
                if tgt is OffloadTarget.MBS:
                    used_m += use_mbs[j]
                    cost += cost_mbs[j]
                else:
                    used_h += use_haps[j]
                    cost += cost_haps[j]
            if used_m > cap_mbs or used_h > cap_haps:
                continue
            if best is None or cost < best[0]:
                best = (cost, list(combo))
        return best
    # Greedy best-fit, largest loads first so the tight ones are placed early.
    order = sorted(range(m), key=lambda i: (-loads[off_ids[i]], off_ids[i]))
    targets: list[OffloadTarget | None] = [None] * m
    used_m = used_h = cost = 0.0
    for i in order:
        j = off_ids[i]
        fits_m = used_m + use_mbs[j] <= cap_mbs
        fits_h = used_h + use_haps[j] <= cap_haps
        if fits_m and (not fits_h or cost_mbs[j] <= cost_haps[j]):
            targets[i] = OffloadTarget.MBS
            used_m += use_mbs[j]
            cost += cost_mbs[j]
        elif fits_h:
            targets[i] = OffloadTarget.HAPS
            used_h += use_haps[j]
            cost += cost_haps[j]
        else:
            return None
    return cost, [t for t in targets if t is not None]


def optimize_exhaustive(
    sbs_loads: Sequence[float],
    base_mbs_load: float,
    base_haps_load: float,
    power_config: NetworkPowerConfig,
    scales: OffloadScales = OffloadScales(),
    *,
    max_sbs: int = EXHAUSTIVE_SBS_CAP,
) -> SwitchingSolution:
    """Global minimum-power state by enumerating every on/off vector.

    For each vector the offload assignment is optimized separately (exact
    for small OFF sets, greedy best-fit beyond ``INNER_ENUM_CAP``). States
    are visited in ascending lexicographic order of the on/off vector and
    only strict power improvements replace the incumbent, which implements
    the documented tie-break.

    Raises:
        ValueError: if the instance exceeds ``max_sbs``.
        InfeasibleNetworkError: never for valid inputs (the all-ON state is
            feasible whenever base loads are), kept for defense in depth.
    """
    loads = np.asarray(sbs_loads, dtype=float)
    s = loads.shape[0]
    if s != power_config.n_sbs:
        raise ValueError(f"got {s} loads for {power_config.n_sbs} configured SBSs")
    if s > max_sbs:
        raise ValueError(f"exhaustive search capped at {max_sbs} SBSs, got {s}")
    if loads.size and (np.isnan(loads).any() or loads.min() < 0.0 or loads.max() > 1.0):
        raise ValueError("SBS loads must lie in [0, 1]")

    params = power_config.sbs
    active_term = np.array(
        [p.operational_power + p.amplifier_slope * l * p.transmit_power for p, l in zip(params, loads)]
    )
    sleep_term = np.array([p.sleep_power for p in params])
    cost_mbs = power_config.mbs.amplifier_slope * power_config.mbs.transmit_power * scales.to_mbs * loads
    cost_haps = power_config.haps.amplifier_slope * power_config.haps.transmit_power * scales.to_haps * loads
    use_mbs = scales.to_mbs * loads
    use_haps = scales.to_haps * loads
    cap_mbs = 1.0 - base_mbs_load
    cap_haps = 1.0 - base_haps_load
    prefer_mbs = cost_mbs <= cost_haps
    best_off_cost = np.where(prefer_mbs, cost_mbs, cost_haps)
    base_power = (
        power_config.haps.operational_power
        + power_config.haps.amplifier_slope * base_haps_load * power_config.haps.transmit_power
        + power_config.mbs.operational_power
        + power_config.mbs.amplifier_slope * base_mbs_load * power_config.mbs.transmit_power
    )

    shifts = np.arange(s - 1, -1, -1, dtype=np.uint64)  # bit i of the index is delta_{i+1}
    best_power = np.inf
    best_mask = -1
    best_targets: list[OffloadTarget] = []

    for start in range(0, 1 << s, 1 << _CHUNK_BITS):
        stop = min(start + (1 << _CHUNK_BITS), 1 << s)
        idx = np.arange(start, stop, dtype=np.uint64)
        on = ((idx[:, None] >> shifts[None, :]) & 1).astype(bool)
        off = ~on
        fixed = on @ active_term + off @ sleep_term
        # Per-SBS cheapest target, valid whenever it happens to fit capacity.
        greedy_m = off @ (use_mbs * prefer_mbs)
        greedy_h = off @ (use_haps * ~prefer_mbs)
        greedy_ok = (greedy_m <= cap_mbs) & (greedy_h <= cap_haps)
        chunk_power = base_power + fixed + off @ best_off_cost
        chunk_power[~greedy_ok] = np.inf

        for local in np.flatnonzero(~greedy_ok):
            off_ids = np.flatnonzero(off[local])
            assigned = _assign_offloads(
                off_ids, loads, cap_mbs, cap_haps, cost_mbs, cost_haps, use_mbs, use_haps
            )
            if assigned is not None:
                chunk_power[local] = base_power + fixed[local] + assigned[0]

        local_best = int(np.argmin(chunk_power))
        if chunk_power[local_best] < best_power:
            best_power = float(chunk_power[local_best])
            best_mask = start + local_best
            if greedy_ok[local_best]:
                off_ids = np.flatnonzero(off[local_best])
                best_targets = [
                    OffloadTarget.MBS if prefer_mbs[j] else OffloadTarget.HAPS for j in off_ids
                ]
            else:
                off_ids = np.flatnonzero(off[local_best])
                assigned = _assign_offloads(
                    off_ids, loads, cap_mbs, cap_haps, cost_mbs, cost_haps, use_mbs, use_haps
                )
                assert assigned is not None
                best_targets = list(assigned[1])

    if best_mask < 0:
        all_on = _solution(
            (True,) * s, (None,) * s, loads, base_mbs_load, base_haps_load,
            power_config, scales, "exhaustive",
        )
        if not all_on.feasible:
            return all_on
        raise InfeasibleNetworkError("exhaustive search found no feasible state")

    on_off = tuple(bool((best_mask >> int(sh)) & 1) for sh in shifts)
    targets: list[OffloadTarget | None] = [None] * s
    for j, tgt in zip(np.flatnonzero(~np.array(on_off)), best_targets):
        targets[j] = tgt
    return _solution(
        on_off, tuple(targets), loads, base_mbs_load, base_haps_load,
        power_config, scales, "exhaustive",
    )


def optimize_greedy(
    sbs_loads: Sequence[float],
    base_mbs_load: float,
    base_haps_load: float,
    power_config: NetworkPowerConfig,
    scales: OffloadScales = OffloadScales(),
) -> SwitchingSolution:
    """Scalable heuristic: switch SBSs off in ascending-load order.

    Starting from all-ON, each candidate is tentatively switched off onto
    its cheaper feasible target; the move is kept only while total power
    strictly decreases, and the scan stops at the first candidate that
    cannot improve (including one with no feasible target). The returned
    state is always feasible whenever the all-ON state is.
    """
    loads = np.asarray(sbs_loads, dtype=float)
    s = loads.shape[0]
    if s != power_config.n_sbs:
        raise ValueError(f"got {s} loads for {power_config.n_sbs} configured SBSs")
    if loads.size and (np.isnan(loads).any() or loads.min() < 0.0 or loads.max() > 1.0):
        raise ValueError("SBS loads must lie in [0, 1]")

    on_off = [True] * s
    targets: list[OffloadTarget | None] = [None] * s
    current = _solution(
        tuple(on_off), tuple(targets), loads, base_mbs_load, base_haps_load,
        power_config, scales, "greedy",
    )
    if not current.feasible:
        return current

    cost_mbs = power_config.mbs.amplifier_slope * power_config.mbs.transmit_power * scales.to_mbs * loads
    cost_haps = power_config.haps.amplifier_slope * power_config.haps.transmit_power * scales.to_haps * loads
    order = sorted(range(s), key=lambda j: (loads[j], j))
    for j in order:
        used_m = current.capacity.offloaded_mbs
        used_h = current.capacity.offloaded_haps
        fits_m = used_m + scales.to_mbs * loads[j] <= 1.0 - base_mbs_load
        fits_h = used_h + scales.to_haps * loads[j] <= 1.0 - base_haps_load
        if fits_m and (not fits_h or cost_mbs[j] <= cost_haps[j]):
            tgt = OffloadTarget.MBS
        elif fits_h:
            tgt = OffloadTarget.HAPS
        else:
            break
        on_off[j] = False
        targets[j] = tgt
        trial = _solution(
            tuple(on_off), tuple(targets), loads, base_mbs_load, base_haps_load,
            power_config, scales, "greedy",
        )
        if trial.power < current.power and trial.feasible:
            current = trial
        else:
            on_off[j] = True
            targets[j] = None
            break
    return current
