"""Monte Carlo replication of phases 1 and 2 of the error-rate study."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .model import (
    N_CATEGORIES,
    DecisionCategory,
    DecisionCountTable,
    RateVectorPair,
    SourceScenario,
    StudyDesign,
    is_structural_zero,
)
from .sampling import RngStream, SamplingError, draw_binomial, draw_multinomial, draw_subsets

# stream id of the single partition used when partitions are fixed across iterations
FIXED_PARTITION_STREAM = 2**64 - 1


class SimulationError(ValueError):
    pass


@dataclass(frozen=True)
class PacketDraw:
    returned_count: int
    valued_count: int
    print_ids: frozenset
    per_scenario_valued_counts: tuple[int, int]


def hdi_from_samples(samples, mass: float = 0.95) -> tuple:
    """Narrowest window holding ``ceil(mass * N)`` of the sorted samples.

    Ties go to the window with the smallest lower bound.

    >>> hdi_from_samples(range(1, 21))
    (1, 19)
    """
    x = np.sort(np.asarray(samples).ravel())
    if x.size == 0:
        raise SimulationError("hdi_from_samples needs at least one sample")
    if not 0 < mass <= 1:
        raise SimulationError("mass must lie in (0, 1]")
    m = math.ceil(mass * x.size - 1e-12)
    m = max(m, 1)
    widths = x[m - 1 :] - x[: x.size - m + 1]
    i = int(np.argmin(widths))
    lo, hi = x[i], x[i + m - 1]
    if np.issubdtype(x.dtype, np.integer):
        return int(lo), int(hi)
    return float(lo), float(hi)


def _stream(rng) -> RngStream | np.random.Generator:
    if isinstance(rng, (RngStream, np.random.Generator)):
        return rng
    return RngStream(rng)


def partition_prints(rng, design: StudyDesign = StudyDesign()) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split the print ids into the phase 1 set and the two phase 2 group sets."""
    rng = _stream(rng)
    gen = rng.generator if isinstance(rng, RngStream) else rng
    perm = gen.permutation(design.prints)
    n1 = design.phase1_prints_per_packet
    n2 = design.phase2_prints_per_packet
    p1 = np.sort(perm[:n1])
    p2a = np.sort(perm[n1 : n1 + n2])
    p2b = np.sort(perm[n1 + n2 : n1 + 2 * n2])
    return p1, p2a, p2b


def _simulate_packets(rng, design, rates_arr, pool, n_packets, return_prob, value_prob, keep_packets):
    per_packet = pool.size
    returned = draw_binomial(rng, np.full(n_packets, per_packet), float(return_prob))
    valued = draw_binomial(rng, returned, float(value_prob))
    chosen = draw_subsets(rng, pool, valued)
    present = design.is_source_present(pool)
    n_present = (chosen & present[None, :]).sum(axis=1)
    n_absent = valued - n_present
    d_sp = draw_multinomial(rng, n_present, rates_arr[SourceScenario.PRESENT])
    d_sa = draw_multinomial(rng, n_absent, rates_arr[SourceScenario.ABSENT])
    counts = np.stack([d_sp.sum(axis=0), d_sa.sum(axis=0)])
    packets = None
    if keep_packets:
        packets = [
            PacketDraw(int(r), int(v), frozenset(int(p) for p in pool[row]), (int(a), int(b)))
            for r, v, row, a, b in zip(returned, valued, chosen, n_present, n_absent)
        ]
    return counts, int(returned.sum()), int(valued.sum()), packets


def _check_pool(pool, size, name):
    pool = np.asarray(pool)
    if pool.size != size or np.unique(pool).size != size:
        raise SimulationError(f"{name} must hold {size} distinct print ids")
    return pool


def simulate_phase1(rng, design: StudyDesign, rates: RateVectorPair, p1, keep_packets: bool = False):
    """Phase 1: every returning examiner gets the same packet of ``p1`` prints.

    Returns a :class:`DecisionCountTable`; with ``keep_packets`` a
    ``(table, [PacketDraw, ...])`` pair.
    """
    rng = _stream(rng)
    p1 = _check_pool(p1, design.phase1_prints_per_packet, "P1")
    counts, ret, val, packets = _simulate_packets(
        rng,
        design,
        rates.as_array(),
        p1,
        design.phase1_packets,
        design.phase1_return_prob,
        design.phase1_value_prob,
        keep_packets,
    )
    table = DecisionCountTable(counts, (ret,), (val,))
    return (table, packets) if keep_packets else table


def simulate_phase2(rng, design: StudyDesign, rates: RateVectorPair, p2a, p2b, keep_packets: bool = False):
    """Phase 2: two groups of examiners, each with its own packet of prints."""
    rng = _stream(rng)
    n2 = design.phase2_prints_per_packet
    p2a = _check_pool(p2a, n2, "P2A")
    p2b = _check_pool(p2b, n2, "P2B")
    if np.intersect1d(p2a, p2b).size:
        raise SimulationError("P2A and P2B must be disjoint")
    rates_arr = rates.as_array()
    counts = np.zeros((2, N_CATEGORIES), dtype=np.int64)
    ret = val = 0
    packets = []
    for pool in (p2a, p2b):
        c, r, v, pk = _simulate_packets(
            rng,
            design,
            rates_arr,
            pool,
            design.phase2_packets_per_group,
            design.phase2_return_prob,
            design.phase2_value_prob,
            keep_packets,
        )
        counts += c
        ret += r
        val += v
        if keep_packets:
            packets.extend(pk)
    table = DecisionCountTable(counts, (ret,), (val,))
    return (table, packets) if keep_packets else table


def simulate_iteration(
    rng, design: StudyDesign, rates: RateVectorPair, partition=None
) -> DecisionCountTable:
    """One full replicate: partition (unless given), phase 1, phase 2.

    The result carries per-phase totals, ``valued_decisions == (phase1, phase2)``.
    """
    rng = _stream(rng)
    if partition is None:
        partition = partition_prints(rng, design)
    p1, p2a, p2b = partition
    return simulate_phase1(rng, design, rates, p1) + simulate_phase2(rng, design, rates, p2a, p2b)


@dataclass(frozen=True)
class CellSummary:
    mean: float
    lower: int
    upper: int

    def __contains__(self, value) -> bool:
        return self.lower <= value <= self.upper


# summary rows: "decisions", "erroneous_id" and one per category
ERRONEOUS_ID = "erroneous_id"
DECISIONS = "decisions"
ROWS = (DECISIONS,) + tuple(c.key for c in DecisionCategory) + (ERRONEOUS_ID,)
COLUMNS = ("present", "absent", "total")


def _cell_samples(counts: np.ndarray, row: str, col: str) -> np.ndarray | None:
    """Per-iteration values of one summary cell from an (N, 2, 6) count array."""
    if row == DECISIONS:
        per = counts.sum(axis=2)
    elif row == ERRONEOUS_ID:
        per = counts[:, :, DecisionCategory.WRONG_FINGER_ID] + counts[:, :, DecisionCategory.WRONG_PERSON_ID]
    else:
        cat = DecisionCategory.from_key(row)
        if col != "total" and is_structural_zero(SourceScenario[col.upper()], cat):
            return None
        per = counts[:, :, cat]
    if col == "total":
        return per.sum(axis=1)
    return per[:, SourceScenario[col.upper()]]


@dataclass(frozen=True)
class SimulationSummary:
    """Per-cell mean and 95% HDI over replicated studies.

    Index with ``summary[row, column]``; structurally impossible cells give
    ``None``.
    """

    cells: dict
    iterations: int
    label: str = ""
    seed: int | None = None
    per_iteration: tuple | None = None

    def __getitem__(self, key) -> CellSummary | None:
        row, col = key
        if isinstance(row, DecisionCategory):
            row = row.key
        if isinstance(col, SourceScenario):
            col = col.key
        return self.cells[row][col]

    @classmethod
    def from_tables(cls, tables: Sequence[DecisionCountTable], mass=0.95, keep=False, **kwargs):
        counts = np.stack([t.counts for t in tables])
        cells = {}
        for row in ROWS:
            cells[row] = {}
            for col in COLUMNS:
                s = _cell_samples(counts, row, col)
                if s is None:
                    cells[row][col] = None
                    continue
                lo, hi = hdi_from_samples(s, mass)
                cells[row][col] = CellSummary(float(s.mean()), lo, hi)
        return cls(cells, len(tables), per_iteration=tuple(tables) if keep else None, **kwargs)

    def iteration_counts(self) -> np.ndarray:
        if self.per_iteration is None:
            raise SimulationError("per-iteration tables were not kept")
        return np.stack([t.counts for t in self.per_iteration])


def iteration_streams(seed: int, n: int) -> Iterator[RngStream]:
    for i in range(n):
        yield RngStream(seed, i)


def run_study(
    seed: int,
    design: StudyDesign,
    rates: RateVectorPair,
    n_iterations: int = 1000,
    keep_per_iteration: bool = False,
    repartition: bool = True,
    workers: int | None = None,
    mass: float = 0.95,
) -> SimulationSummary:
    """Replicate the study ``n_iterations`` times and summarise every cell.

    Iteration ``i`` draws from stream ``(seed, i)``, so the result does not
    depend on ``workers``. With ``repartition=False`` one partition, drawn
    from a dedicated stream, is shared by all iterations.
    """
    if isinstance(n_iterations, bool) or not isinstance(n_iterations, int) or n_iterations < 1:
        raise SimulationError("n_iterations must be a positive integer")
    try:
        RngStream(seed)
    except SamplingError as exc:
        raise SimulationError(str(exc)) from None
    partition = None if repartition else partition_prints(RngStream(seed, FIXED_PARTITION_STREAM), design)

    def one(stream):
        return simulate_iteration(stream, design, rates, partition)

    streams = iteration_streams(seed, n_iterations)
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            tables = list(pool.map(one, streams))
    else:
        tables = [one(s) for s in streams]
    return SimulationSummary.from_tables(
        tables, mass=mass, keep=keep_per_iteration, label=rates.label, seed=seed
    )
