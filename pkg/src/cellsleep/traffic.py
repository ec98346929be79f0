"""Grid-cell traffic ingestion, normalization and synthetic generation.

Input data follows the Milan CDR layout: the city is a square grid of
235 m x 235 m cells, and each text row carries per-cell activity counters
(SMS in/out, calls in/out, internet) for one 10-minute interval. The
pipeline here turns those rows into per-SBS load series in [0, 1]:

    parse_cdr -> aggregate_activity -> normalize_loads -> daily_average

A seeded synthetic generator produces spatially correlated load series so
everything downstream can be exercised without the proprietary dataset.
All randomness goes through ``numpy.random.default_rng`` (PCG64), which is
portable and fully determined by the seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .errors import DataFormatError

GRID_PITCH_M = 235.0
MINUTES_PER_DAY = 1440

ACTIVITY_FIELDS = ("sms_in", "sms_out", "call_in", "call_out", "internet")


@dataclass(frozen=True)
class CdrRecord:
    """One grid-cell activity row; absent counters are stored as 0."""

    square_id: int
    interval_start: int  # epoch milliseconds
    sms_in: float = 0.0
    sms_out: float = 0.0
    call_in: float = 0.0
    call_out: float = 0.0
    internet: float = 0.0

    def activity(self) -> tuple[float, float, float, float, float]:
        return (self.sms_in, self.sms_out, self.call_in, self.call_out, self.internet)


@dataclass(frozen=True)
class SbsPlacement:
    """An SBS pinned to the center of one grid square."""

    sbs_id: int
    square_id: int
    x_m: float
    y_m: float


@dataclass(frozen=True)
class LoadSeries:
    """Per-SBS load factors over time, shape (n_sbs, n_slots), all in [0, 1]."""

    loads: np.ndarray
    slot_minutes: int
    slots_per_day: int

    def __post_init__(self) -> None:
        arr = np.asarray(self.loads, dtype=float)
        if arr.ndim != 2:
            raise ValueError(f"loads must be 2-D (n_sbs, n_slots), got shape {arr.shape}")
        if arr.size and (np.isnan(arr).any() or arr.min() < 0.0 or arr.max() > 1.0):
            raise ValueError("load values must lie in [0, 1]")
        if self.slots_per_day * self.slot_minutes != MINUTES_PER_DAY:
            raise ValueError(
                f"slots_per_day * slot_minutes must equal {MINUTES_PER_DAY}, got "
                f"{self.slots_per_day} * {self.slot_minutes}"
            )
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "loads", arr)

    @property
    def n_sbs(self) -> int:
        return self.loads.shape[0]

    @property
    def n_slots(self) -> int:
        return self.loads.shape[1]


@dataclass(frozen=True)
class LoadSnapshot:
    """Per-SBS loads at one slot with sleeping entries masked out.

    Sleeping (unknown) entries hold NaN so that accidentally consuming them
    as data fails loudly; estimators must only read entries whose
    ``known_mask`` is true.
    """

    loads: np.ndarray
    known_mask: np.ndarray

    def __post_init__(self) -> None:
        loads = np.asarray(self.loads, dtype=float).copy()
        mask = np.asarray(self.known_mask, dtype=bool).copy()
        if loads.shape != mask.shape or loads.ndim != 1:
            raise ValueError("loads and known_mask must be 1-D arrays of equal length")
        known = loads[mask]
        if known.size and (np.isnan(known).any() or known.min() < 0.0 or known.max() > 1.0):
            raise ValueError("known load values must lie in [0, 1]")
        loads[~mask] = np.nan
        loads.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "loads", loads)
        object.__setattr__(self, "known_mask", mask)

    @property
    def n_sbs(self) -> int:
        return self.loads.shape[0]

    @property
    def active_ids(self) -> np.ndarray:
        return np.flatnonzero(self.known_mask)

    @property
    def sleeping_ids(self) -> np.ndarray:
        return np.flatnonzero(~self.known_mask)


@dataclass
class ActivityMatrix:
    """Aggregated activity per (square, slot) plus ingestion bookkeeping."""

    values: np.ndarray  # (n_squares, n_slots)
    square_ids: tuple[int, ...]
    epoch_ms: int
    slot_minutes: int
    n_duplicate_records: int = 0
    n_missing_cells: int = 0


@dataclass
class ParseReport:
    """Line-level issues found while reading a CDR stream."""

    n_lines: int = 0
    n_records: int = 0
    malformed: list[tuple[int, str]] = field(default_factory=list)


def square_center(square_id: int, grid_side: int) -> tuple[float, float]:
    """Planar coordinates (meters) of a 1-based square id on a row-major grid."""
    if not (1 <= square_id <= grid_side * grid_side):
        raise ValueError(f"square_id {square_id} outside 1..{grid_side * grid_side}")
    idx = square_id - 1
    col = idx % grid_side
    row = idx // grid_side
    return ((col + 0.5) * GRID_PITCH_M, (row + 0.5) * GRID_PITCH_M)


def placements_for_squares(square_ids: Sequence[int], grid_side: int) -> tuple[SbsPlacement, ...]:
    """Assign SBS ids 0..n-1 to the given squares, one SBS per square."""
    if len(set(square_ids)) != len(square_ids):
        raise ValueError("each SBS must map to a distinct grid square")
    out = []
    for sbs_id, sq in enumerate(square_ids):
        x, y = square_center(int(sq), grid_side)
        out.append(SbsPlacement(sbs_id=sbs_id, square_id=int(sq), x_m=x, y_m=y))
    return tuple(out)


def parse_cdr(
    lines: Iterable[str], *, grid_squares: int = 10_000
) -> tuple[list[CdrRecord], ParseReport]:
    """Parse Milan-layout CDR text into records.

    Expected columns (tab- or comma-separated, header optional):
    square_id, interval_ms, country_code, sms_in, sms_out, call_in,
    call_out, internet. Everything after interval_ms may be absent or
    empty and is treated as zero; the country code is ignored. Malformed
    lines are skipped and reported with their line numbers.

    Raises:
        DataFormatError: on a square id outside 1..grid_squares.
    """
    records: list[CdrRecord] = []
    report = ParseReport()
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        report.n_lines += 1
        if not line:
            continue
        fields = line.split("\t") if "\t" in line else line.split(",")
        try:
            square = int(fields[0])
        except (ValueError, IndexError):
            if lineno == 1:  # optional header
                continue
            report.malformed.append((lineno, f"unparseable square_id {fields[0]!r}"))
            continue
        if not (1 <= square <= grid_squares):
            raise DataFormatError(
                f"line {lineno}: square_id {square} outside 1..{grid_squares}"
            )
        if len(fields) < 2:
            report.malformed.append((lineno, "missing interval column"))
            continue
        try:
            interval = int(float(fields[1]))
        except ValueError:
            report.malformed.append((lineno, f"unparseable interval {fields[1]!r}"))
            continue
        # fields[2] is the country code; activity counters start at index 3
        activity = [0.0] * len(ACTIVITY_FIELDS)
        bad = False
        for i in range(len(ACTIVITY_FIELDS)):
            j = 3 + i
            if j < len(fields) and fields[j].strip():
                try:
                    value = float(fields[j])
                except ValueError:
                    report.malformed.append((lineno, f"unparseable activity {fields[j]!r}"))
                    bad = True
                    break
                if value < 0.0:
                    report.malformed.append((lineno, f"negative activity {value}"))
                    bad = True
                    break
                activity[i] = value
        if bad:
            continue
        records.append(CdrRecord(square, interval, *activity))
        report.n_records += 1
    return records, report


def aggregate_activity(
    records: Sequence[CdrRecord],
    weights: Sequence[float] = (1.0, 1.0, 1.0, 1.0, 1.0),
    *,
    slot_minutes: int = 10,
    epoch_ms: int | None = None,
) -> ActivityMatrix:
    """Combine the five activity counters into one per-(square, slot) measure.

    The combined value is the weighted sum over counters; multiple records
    in the same (square, slot) add up (e.g. separate country-code rows).
    Slots are indexed from ``epoch_ms`` (defaults to the earliest interval
    seen); cells with no record stay zero and are counted as missing.
    """
    w = np.asarray(weights, dtype=float)
    if w.shape != (len(ACTIVITY_FIELDS),):
        raise ValueError(f"expected {len(ACTIVITY_FIELDS)} weights, got shape {w.shape}")
    if (w < 0.0).any() or w.sum() <= 0.0:
        raise ValueError("weights must be nonnegative with a positive sum")
    if not records:
        raise DataFormatError("no records to aggregate")

    if epoch_ms is None:
        epoch_ms = min(r.interval_start for r in records)
    slot_ms = slot_minutes * 60_000

    squares = sorted({r.square_id for r in records})
    row_of = {sq: i for i, sq in enumerate(squares)}
    slots = []
    for r in records:
        offset = r.interval_start - epoch_ms
        if offset < 0:
            raise DataFormatError(
                f"record at {r.interval_start} precedes the epoch {epoch_ms}"
            )
        slots.append(offset // slot_ms)
    n_slots = int(max(slots)) + 1

    values = np.zeros((len(squares), n_slots))
    seen: set[tuple[int, int]] = set()
    duplicates = 0
    for r, slot in zip(records, slots):
        key = (r.square_id, slot)
        if key in seen:
            duplicates += 1
        seen.add(key)
        values[row_of[r.square_id], slot] += float(np.dot(w, r.activity()))

    missing = len(squares) * n_slots - len(seen)
    return ActivityMatrix(
        values=values,
        square_ids=tuple(squares),
        epoch_ms=int(epoch_ms),
        slot_minutes=slot_minutes,
        n_duplicate_records=duplicates,
        n_missing_cells=missing,
    )


def normalize_loads(
    activity: np.ndarray,
    mode: str = "global_max",
    *,
    slot_minutes: int = 10,
) -> LoadSeries:
    """Scale an activity matrix (rows = SBSs) into load factors in [0, 1].

    ``global_max`` divides everything by the single largest value, keeping
    inter-SBS magnitudes comparable; ``per_sbs_max`` divides each row by its
    own maximum so every SBS peaks at 1.

    Raises:
        DataFormatError: if the required maximum is zero (normalization
            undefined) or any activity is negative.
    """
    arr = np.asarray(activity, dtype=float)
    if arr.ndim != 2 or arr.size == 0:
        raise ValueError(f"activity must be a non-empty 2-D matrix, got shape {arr.shape}")
    if arr.min() < 0.0:
        raise DataFormatError("activity values must be nonnegative")
    if mode == "global_max":
        peak = arr.max()
        if peak <= 0.0:
            raise DataFormatError("all-zero activity: global normalization undefined")
        loads = arr / peak
    elif mode == "per_sbs_max":
        peaks = arr.max(axis=1)
        dead = np.flatnonzero(peaks <= 0.0)
        if dead.size:
            raise DataFormatError(
                f"all-zero activity for SBS rows {dead.tolist()}: per-SBS "
                "normalization undefined"
            )
        loads = arr / peaks[:, None]
    else:
        raise ValueError(f"unknown normalization mode {mode!r}")
    return LoadSeries(
        loads=loads,
        slot_minutes=slot_minutes,
        slots_per_day=MINUTES_PER_DAY // slot_minutes,
    )


def daily_average(series: LoadSeries, days: int) -> LoadSeries:
    """Fold a multi-day series into one representative day by slot-wise mean."""
    spd = series.slots_per_day
    if days < 1:
        raise ValueError("days must be >= 1")
    if series.n_slots != days * spd:
        raise ValueError(
            f"series has {series.n_slots} slots, expected {days} days * {spd} slots"
        )
    folded = series.loads.reshape(series.n_sbs, days, spd).mean(axis=1)
    return LoadSeries(loads=folded, slot_minutes=series.slot_minutes, slots_per_day=spd)


def default_diurnal_profile(slots_per_day: int = 144) -> np.ndarray:
    """Smooth two-peak day shape (late morning and evening), values in (0, 1]."""
    t = np.arange(slots_per_day) / slots_per_day
    morning = np.exp(-((t - 0.45) ** 2) / (2 * 0.09**2))
    evening = np.exp(-((t - 0.85) ** 2) / (2 * 0.07**2))
    profile = 0.18 + 0.85 * (0.6 * morning + 0.8 * evening)
    return np.clip(profile, 0.0, 1.0)


def synthesize_traffic(
    seed: int,
    n_sbs: int,
    grid_side: int,
    correlation_length_m: float,
    diurnal_profile: np.ndarray | None = None,
    *,
    n_days: int = 1,
    n_bumps: int = 8,
    noise_std: float = 0.02,
    field_floor: float = 0.35,
) -> tuple[LoadSeries, tuple[SbsPlacement, ...]]:
    """Generate seeded, spatially correlated synthetic traffic.

    Construction: SBSs occupy distinct squares of a ``grid_side`` x
    ``grid_side`` grid (uniform draw without replacement). A smooth spatial
    intensity field is built as a superposition of ``n_bumps`` radial
    Gaussian bumps with length scale ``correlation_length_m`` and rescaled
    to [field_floor, 1]; each SBS's load is its field intensity times the
    diurnal profile, plus small Gaussian noise, clipped to [0, 1]. Nearby
    SBSs therefore carry similar loads and the expected load difference
    grows with distance. An infinite correlation length collapses the field
    to a single shared factor, leaving only noise differences.

    Deterministic for a given seed (PCG64 via numpy ``default_rng``).
    """
    if n_sbs < 1:
        raise ValueError("n_sbs must be >= 1")
    if n_sbs > grid_side * grid_side:
        raise ValueError(f"n_sbs {n_sbs} exceeds grid capacity {grid_side * grid_side}")
    if correlation_length_m <= 0:
        raise ValueError("correlation_length_m must be positive (may be inf)")
    if not (0.0 <= field_floor < 1.0):
        raise ValueError("field_floor must lie in [0, 1)")
    profile = (
        default_diurnal_profile() if diurnal_profile is None else np.asarray(diurnal_profile, float)
    )
    if profile.ndim != 1 or profile.size < 1:
        raise ValueError("diurnal_profile must be a 1-D sequence")
    if MINUTES_PER_DAY % profile.size != 0:
        raise ValueError(f"profile length {profile.size} must divide {MINUTES_PER_DAY} minutes")
    slots_per_day = profile.size
    slot_minutes = MINUTES_PER_DAY // slots_per_day

    rng = np.random.default_rng(seed)
    squares = rng.permutation(grid_side * grid_side)[:n_sbs] + 1
    placements = placements_for_squares([int(s) for s in squares], grid_side)
    pos = np.array([(p.x_m, p.y_m) for p in placements])

    extent = grid_side * GRID_PITCH_M
    centers = rng.uniform(0.0, extent, size=(n_bumps, 2))
    amps = rng.uniform(0.3, 1.0, size=n_bumps)
    d2 = ((pos[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    with np.errstate(over="ignore"):
        intensity = np.exp(-d2 / (2.0 * correlation_length_m**2)) @ amps
    span = intensity.max() - intensity.min()
    if span > 0:
        intensity = field_floor + (1.0 - field_floor) * (intensity - intensity.min()) / span
    else:
        intensity = np.ones(n_sbs)

    day_pattern = np.tile(profile, n_days)
    noise = rng.normal(0.0, noise_std, size=(n_sbs, n_days * slots_per_day))
    loads = np.clip(intensity[:, None] * day_pattern[None, :] + noise, 0.0, 1.0)
    series = LoadSeries(loads=loads, slot_minutes=slot_minutes, slots_per_day=slots_per_day)
    return series, placements


def mask_sleepers(
    loads: np.ndarray, sleeping_ids: Iterable[int]
) -> tuple[LoadSnapshot, np.ndarray]:
    """Hide the given SBSs' loads behind the unknown sentinel.

    Returns the masked snapshot together with an untouched copy of the full
    load vector, kept as ground truth for error computation.

    Raises:
        ValueError: on an id outside the vector, or if every SBS would be
            masked (estimators need at least one active neighbor).
    """
    actual = np.asarray(loads, dtype=float).copy()
    if actual.ndim != 1:
        raise ValueError("loads must be a 1-D per-SBS vector")
    n = actual.shape[0]
    ids = sorted({int(i) for i in sleeping_ids})
    for i in ids:
        if not (0 <= i < n):
            raise ValueError(f"unknown SBS id {i} (network has {n} SBSs)")
    if len(ids) >= n:
        raise ValueError("cannot mask every SBS: nothing left to interpolate from")
    mask = np.ones(n, dtype=bool)
    mask[ids] = False
    snapshot = LoadSnapshot(loads=actual, known_mask=mask)
    return snapshot, actual
