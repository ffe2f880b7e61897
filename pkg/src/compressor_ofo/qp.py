"""Dense active-set solver for ``min 1/2 |w + g|^2  s.t.  G w <= h``.

The Hessian is the identity, so the problem is a Euclidean projection of
``-g`` onto a polytope. The dual active-set scheme of Goldfarb and Idnani
is used: start from the unconstrained minimizer, add the most violated
constraint, and drop constraints whose multiplier would turn negative.
A violated row that depends linearly on the active set first drops
active rows until its normal is independent, so the active normals always
stay linearly independent. With two opposing inequalities at most one of
the pair is ever active.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

FEAS_TOL = 1e-12
MAX_ITER = 200


class Infeasible(ValueError):
    """No point satisfies all constraints."""


@dataclass(frozen=True)
class QpProblem:
    g: np.ndarray
    G: np.ndarray
    h: np.ndarray

    def __post_init__(self):
        g = np.asarray(self.g, float).reshape(-1)
        G = np.asarray(self.G, float).reshape(-1, g.shape[0]) if np.size(self.G) else np.empty((0, g.shape[0]))
        h = np.asarray(self.h, float).reshape(-1)
        if g.shape[0] < 1:
            raise ValueError("need at least one decision variable")
        if G.shape[0] != h.shape[0]:
            raise ValueError(f"G has {G.shape[0]} rows, h has {h.shape[0]}")
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "h", h)


@dataclass(frozen=True)
class QpSolution:
    w: np.ndarray
    active_set: tuple
    multipliers: np.ndarray
    kkt_residual: float


def kkt_residual(problem: QpProblem, w, lam) -> float:
    """Max violation of stationarity, primal/dual feasibility and complementarity."""
    G, h, g = problem.G, problem.h, problem.g
    slack = G @ w - h
    parts = [
        np.abs(w + g + G.T @ lam).max(initial=0.0),
        np.maximum(slack, 0.0).max(initial=0.0),
        np.maximum(-lam, 0.0).max(initial=0.0),
        np.abs(lam * slack).max(initial=0.0),
    ]
    return float(max(parts))


def solve(problem: QpProblem) -> QpSolution:
    g, G, h = problem.g, problem.G, problem.h
    q = G.shape[0]
    # rows scaled to unit norm so tolerances are comparable across rows
    norms = np.linalg.norm(G, axis=1)
    norms[norms == 0] = 1.0
    N_all = G / norms[:, None]
    b_all = h / norms

    # violations below this are round-off; the scale follows the data
    tol = FEAS_TOL * max(1.0, np.abs(g).max(initial=0.0), np.abs(b_all).max(initial=0.0))
    w = -g.copy()
    active: list[int] = []
    u = np.zeros(0)  # multipliers of the active (scaled) rows

    for _ in range(MAX_ITER):
        viol = N_all @ w - b_all
        p = int(np.argmax(viol)) if q else -1
        if q == 0 or viol[p] <= tol:
            break
        if (N_all[p] == 0).all():
            raise Infeasible(f"constraint {p} reads 0 <= {h[p]}")
        u_p = 0.0
        while True:
            n_p = N_all[p]
            if active:
                N = N_all[active].T  # p x |A|
                NtN = N.T @ N
                r = np.linalg.solve(NtN, N.T @ n_p)
                z = n_p - N @ r
            else:
                r = np.zeros(0)
                z = n_p.copy()
            # dual step limit: an active multiplier reaching zero
            t1, drop = np.inf, -1
            for idx, rj in enumerate(r):
                if rj > 1e-14:
                    ratio = u[idx] / rj
                    if ratio < t1 - 1e-15:
                        t1, drop = ratio, idx
            zz = float(z @ z)
            s_p = float(n_p @ w - b_all[p])
            if zz <= 1e-24:
                if not np.isfinite(t1):
                    raise Infeasible(f"constraint {p} cannot be satisfied with the active set")
                u = u - t1 * r
                u_p += t1
                del active[drop]
                u = np.delete(u, drop)
                continue
            t2 = s_p / zz
            t = min(t1, t2)
            w = w - t * z
            u = u - t * r
            u_p += t
            if t2 <= t1:
                active.append(p)
                u = np.append(u, u_p)
                break
            del active[drop]
            u = np.delete(u, drop)
    else:
        raise RuntimeError("active-set iteration limit reached")

    lam = np.zeros(q)
    for idx, j in enumerate(active):
        lam[j] = max(u[idx], 0.0) / norms[j]
    return QpSolution(w=w, active_set=tuple(sorted(active)), multipliers=lam,
                      kkt_residual=kkt_residual(problem, w, lam))
