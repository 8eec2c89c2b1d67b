# Contracts/Oracle.py
# ======================================================================
# Grid oracle for the cloud's contract problem + the baseline schemes.
#
#   grid_search        joint enumeration of sorted round assignments
#                      (K = 1 by default) or coordinate descent (K ≥ 2)
#   coordinate_descent one entry at a time on the 1-D grid; moving an
#                      entry drags its neighbours so the block stays sorted
#   static_scheme      the oracle under β = 0 (one-stage static contract)
#   random_scheme      rounds drawn from the grid, closed-form rewards
#
# Candidates are compared on (total profit, U²); the first candidate met
# in lexicographic order of rounds wins exact ties.
# ======================================================================

from __future__ import annotations

import itertools
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from Contracts.ContractOps import build_contract, cloud_profit
from Contracts.ContractTypes import MarketState, ProfitBreakdown, TwoPeriodContract

log = logging.getLogger(__name__)

MODES = ("auto", "joint", "coordinate")


class OracleError(ValueError):
    """Invalid grid or an enumeration too large to run."""


@dataclass(frozen=True)
class OracleSettings:
    t_min: float = 0.0
    t_max: float = 200.0
    grid_points: int = 64
    mode: str = "auto"
    sweeps: int = 20
    integer_rounds: bool = False
    workers: int = 1
    max_candidates: int = 2_000_000

    def __post_init__(self) -> None:
        if self.mode not in MODES:
            raise OracleError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.sweeps < 1 or self.workers < 1:
            raise OracleError("sweeps and workers must be ≥ 1")
        round_grid(self.t_min, self.t_max, self.grid_points)


class OracleResult(NamedTuple):
    contract: TwoPeriodContract
    profit: ProfitBreakdown


def round_grid(t_min: float, t_max: float, grid_points: int,
               integer_rounds: bool = False) -> np.ndarray:
    if not 0 <= t_min < t_max:
        raise OracleError(f"need 0 ≤ t_min < t_max, got [{t_min}, {t_max}]")
    if grid_points < 2:
        raise OracleError(f"grid_points must be ≥ 2, got {grid_points}")
    grid = np.linspace(t_min, t_max, grid_points)
    return np.unique(np.floor(grid)) if integer_rounds else grid


DEFAULTS = OracleSettings()


def _score(profit: ProfitBreakdown) -> tuple[float, float]:
    return profit.total, profit.u2


def _better(a: tuple[float, float], b: tuple[float, float]) -> bool:
    return a[0] > b[0] or (a[0] == b[0] and a[1] > b[1])


def _evaluate(state: MarketState, t1, t2, integer_rounds: bool) -> OracleResult:
    contract = build_contract(t1, t2, state, integer_rounds=integer_rounds)
    return OracleResult(contract, cloud_profit(contract, state))


# ────────── joint enumeration ────────────────────────────────────────
def _candidates(grid: np.ndarray, k: int) -> Iterable[tuple[tuple[int, ...], ...]]:
    blocks = list(itertools.combinations_with_replacement(range(len(grid)), k))
    return itertools.product(blocks, repeat=k + 1)


def _candidate_count(grid: np.ndarray, k: int) -> int:
    return math.comb(len(grid) + k - 1, k) ** (k + 1)


def _scan_chunk(state: MarketState, grid: np.ndarray, start: int, stop: int,
                integer_rounds: bool):
    k = state.k_types
    best_index, best_score = -1, (-math.inf, -math.inf)
    chunk = itertools.islice(_candidates(grid, k), start, stop)
    for offset, blocks in enumerate(chunk):
        t1 = grid[list(blocks[0])]
        t2 = grid[np.array(blocks[1:])]
        score = _score(_evaluate(state, t1, t2, integer_rounds).profit)
        if best_index < 0 or _better(score, best_score):
            best_index, best_score = start + offset, score
    return best_index, best_score


def _joint_search(state: MarketState, grid: np.ndarray, workers: int,
                  integer_rounds: bool) -> OracleResult:
    k = state.k_types
    count = _candidate_count(grid, k)
    if workers > 1:
        bounds = np.linspace(0, count, workers + 1).astype(int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_scan_chunk, itertools.repeat(state), itertools.repeat(grid),
                                  bounds[:-1], bounds[1:], itertools.repeat(integer_rounds)))
    else:
        parts = [_scan_chunk(state, grid, 0, count, integer_rounds)]

    best_index, best_score = -1, (-math.inf, -math.inf)
    for index, score in parts:
        if index >= 0 and (best_index < 0 or _better(score, best_score)):
            best_index, best_score = index, score
    blocks = next(itertools.islice(_candidates(grid, k), best_index, None))
    log.debug("[Oracle] joint search: %d candidates, best #%d", count, best_index)
    return _evaluate(state, grid[list(blocks[0])], grid[np.array(blocks[1:])], integer_rounds)


# ────────── coordinate descent ───────────────────────────────────────
def _as_rounds(init) -> tuple[np.ndarray, np.ndarray]:
    if isinstance(init, TwoPeriodContract):
        return np.array(init.t1), np.array(init.t2)
    t1, t2 = init
    return np.sort(np.asarray(t1, dtype=np.float64)), \
        np.sort(np.asarray(t2, dtype=np.float64), axis=1)


def _push(block: np.ndarray, i: int, value: float) -> None:
    block[i] = value
    block[:i] = np.minimum(block[:i], value)
    block[i + 1:] = np.maximum(block[i + 1:], value)


def coordinate_descent(state: MarketState, init, sweeps: int = DEFAULTS.sweeps, *,
                       grid: np.ndarray | None = None,
                       integer_rounds: bool = False) -> OracleResult:
    """Cyclic 1-D grid search over every round entry; profit never decreases."""
    if grid is None:
        grid = round_grid(DEFAULTS.t_min, DEFAULTS.t_max, DEFAULTS.grid_points, integer_rounds)
    t1, t2 = _as_rounds(init)
    k = state.k_types
    best = _evaluate(state, t1, t2, integer_rounds)
    best_score = _score(best.profit)

    coords = [(None, i) for i in range(k)] + [(row, i) for row in range(k) for i in range(k)]
    for sweep in range(sweeps):
        improved = False
        for row, i in coords:
            for value in grid:
                c1, c2 = t1.copy(), t2.copy()
                _push(c1 if row is None else c2[row], i, float(value))
                cand = _evaluate(state, c1, c2, integer_rounds)
                score = _score(cand.profit)
                if _better(score, best_score):
                    t1, t2, best, best_score = c1, c2, cand, score
                    improved = True
        log.debug("[Oracle] sweep %d: total=%.6f", sweep, best_score[0])
        if not improved:
            break
    return best


# ────────── public entry point ───────────────────────────────────────
def grid_search(state: MarketState, t_min: float = DEFAULTS.t_min, t_max: float = DEFAULTS.t_max,
                grid_points: int = DEFAULTS.grid_points, *, mode: str = DEFAULTS.mode,
                init: Sequence | None = None, sweeps: int = DEFAULTS.sweeps,
                workers: int = DEFAULTS.workers, integer_rounds: bool = False,
                max_candidates: int = DEFAULTS.max_candidates) -> OracleResult:
    if mode not in MODES:
        raise OracleError(f"mode must be one of {MODES}, got {mode!r}")
    grid = round_grid(t_min, t_max, grid_points, integer_rounds)
    k = state.k_types
    if mode == "auto":
        mode = "joint" if k == 1 else "coordinate"

    if mode == "joint":
        count = _candidate_count(grid, k)
        if count > max_candidates:
            raise OracleError(
                f"joint grid has {count} candidates for K={k} (limit {max_candidates}); "
                "use coordinate mode or fewer grid points"
            )
        return _joint_search(state, grid, workers, integer_rounds)

    mid = float(grid[len(grid) // 2])
    starts = [(np.full(k, grid[0]), np.full((k, k), grid[0])),
              (np.full(k, mid), np.full((k, k), mid))]
    starts += list(init or [])
    best = None
    for start in starts:
        result = coordinate_descent(state, start, sweeps, grid=grid,
                                    integer_rounds=integer_rounds)
        if best is None or _better(_score(result.profit), _score(best.profit)):
            best = result
    return best


def solve_state(state: MarketState, settings: OracleSettings,
                init: Sequence | None = None) -> OracleResult:
    return grid_search(state, settings.t_min, settings.t_max, settings.grid_points,
                       mode=settings.mode, init=init, sweeps=settings.sweeps,
                       workers=settings.workers, integer_rounds=settings.integer_rounds,
                       max_candidates=settings.max_candidates)


# ────────── baselines ────────────────────────────────────────────────
def static_state(state: MarketState) -> MarketState:
    return replace(state, beta=0.0)


def static_scheme(state: MarketState, settings: OracleSettings = OracleSettings()) -> TwoPeriodContract:
    """Contract designed (and priced) as if the future were worth nothing."""
    return solve_state(static_state(state), settings).contract


def random_scheme(state: MarketState, rng: np.random.Generator,
                  settings: OracleSettings = OracleSettings()) -> TwoPeriodContract:
    grid = round_grid(settings.t_min, settings.t_max, settings.grid_points,
                      settings.integer_rounds)
    k = state.k_types
    t1 = rng.choice(grid, size=k)
    t2 = rng.choice(grid, size=(k, k))
    return build_contract(t1, t2, state, integer_rounds=settings.integer_rounds)


def scheme_profits(state: MarketState, rng: np.random.Generator,
                   settings: OracleSettings = OracleSettings()) -> dict[str, ProfitBreakdown]:
    """Profit of the dynamic oracle, static and random schemes on one state."""
    static = static_state(state)
    return {
        "dynamic": solve_state(state, settings).profit,
        "static": cloud_profit(static_scheme(state, settings), static),
        "random": cloud_profit(random_scheme(state, rng, settings), state),
    }
