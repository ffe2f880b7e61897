"""Perfect-knowledge load sharing benchmark.

Minimizes the noise-free total power of the true plant over the demand
plane ``m1 + m2 + m3 = M`` inside the flow box. The search is a dense grid
over ``(m1, m2)`` followed by pairwise coordinate refinement, which is
derivative-free and easy to audit in two dimensions.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .compressor import CompressorModel, head, resistance_pi
from .controller import InfeasibleDemand

GRID_STEP = 0.5
REFINE_TOL = 1e-4
_PAIR_MOVES = np.array([[1.0, -1.0, 0.0], [1.0, 0.0, -1.0], [0.0, 1.0, -1.0]])


@dataclass(frozen=True)
class LoadSharingProblem:
    plant: Sequence[CompressorModel]
    demand: float

    @property
    def bounds(self):
        lo = np.array([c.m_min for c in self.plant])
        hi = np.array([c.m_max for c in self.plant])
        return lo, hi

    def check(self):
        lo, hi = self.bounds
        if not lo.sum() - 1e-9 <= self.demand <= hi.sum() + 1e-9:
            raise InfeasibleDemand(
                f"demand {self.demand} outside [{lo.sum()}, {hi.sum()}]")


@dataclass(frozen=True)
class NlpResult:
    flows: np.ndarray
    power: float


def compressor_power(model: CompressorModel, m):
    """Noise-free plant power, vectorized over ``m``."""
    pi = resistance_pi(model, m)
    eta = model.efficiency.noise_free(m, pi)
    return head(model.gas, pi) * m / eta


def total_power(plant, flows) -> float:
    return float(sum(compressor_power(c, f) for c, f in zip(plant, flows)))


def _axis(lo, hi, step):
    pts = np.arange(lo, hi, step)
    return np.append(pts, hi)


def solve_nlp(problem: LoadSharingProblem, grid_step: float = GRID_STEP,
              tol: float = REFINE_TOL) -> NlpResult:
    problem.check()
    plant, M = problem.plant, float(problem.demand)
    lo, hi = problem.bounds

    g1 = _axis(lo[0], hi[0], grid_step)
    g2 = _axis(lo[1], hi[1], grid_step)
    m1, m2 = np.meshgrid(g1, g2, indexing="ij")
    m3 = M - m1 - m2
    ok = (m3 >= lo[2]) & (m3 <= hi[2])
    if not ok.any():
        # grid misses a thin feasible slice; start from the proportional split
        best = lo + (M - lo.sum()) / (hi.sum() - lo.sum()) * (hi - lo)
    else:
        W = (compressor_power(plant[0], m1) + compressor_power(plant[1], m2)
             + compressor_power(plant[2], np.where(ok, m3, lo[2])))
        W = np.where(ok, W, np.inf)
        # argmin returns the first minimum, i.e. lexicographically smallest (m1, m2)
        i = int(np.argmin(W))
        best = np.array([m1.flat[i], m2.flat[i], m3.flat[i]])

    best_W = total_power(plant, best)
    step = grid_step / 2
    while step >= tol:
        improved = False
        for move in _PAIR_MOVES:
            for sign in (1.0, -1.0):
                cand = best + sign * step * move
                if np.any(cand < lo) or np.any(cand > hi):
                    # slide to the bound rather than skipping the move
                    cand = _clip_pair(best, sign * move, step, lo, hi)
                    if cand is None:
                        continue
                w = total_power(plant, cand)
                if w < best_W:
                    best, best_W, improved = cand, w, True
        if not improved:
            step /= 2
    # remove drift from repeated additions so the demand holds to round-off
    best = np.clip(best, lo, hi)
    best[2] = min(max(M - best[0] - best[1], lo[2]), hi[2])
    return NlpResult(flows=best, power=total_power(plant, best))


def _clip_pair(x, move, step, lo, hi):
    """Largest feasible move along ``move`` up to ``step``; None if zero."""
    limit = step
    for j in range(3):
        if move[j] > 0:
            limit = min(limit, (hi[j] - x[j]) / move[j])
        elif move[j] < 0:
            limit = min(limit, (lo[j] - x[j]) / move[j])
    if limit <= 0:
        return None
    return x + limit * move
