"""Independent reference implementations used only by the tests."""

import itertools

import numpy as np

from compressor_ofo.compressor import GasProperties, PolyCoeffs
from compressor_ofo.qp import QpProblem


def qp_enumeration(problem: QpProblem, tol=1e-9):
    """Projection of -g onto {G w <= h} by trying every active set."""
    g, G, h = problem.g, problem.G, problem.h
    best = None
    for r in range(G.shape[0] + 1):
        for S in itertools.combinations(range(G.shape[0]), r):
            S = list(S)
            if S:
                GS = G[S]
                lam = np.linalg.lstsq(GS @ GS.T, GS @ (-g) - h[S], rcond=None)[0]
                w = -g - GS.T @ lam
                if np.abs(GS @ w - h[S]).max() > tol:
                    continue
            else:
                w = -g
            if np.all(G @ w <= h + tol):
                f = float(np.sum((w + g) ** 2))
                if best is None or f < best[0] - 1e-14:
                    best = (f, w)
    return best[1]


def random_station_qp(rng, relax: bool):
    """Box rows, one pair of opposing demand-style rows, always feasible."""
    p = 3
    lo = rng.uniform(-2, 0, p)
    hi = lo + rng.uniform(0.1, 2, p)
    a = rng.standard_normal(p)
    c = a @ rng.uniform(lo, hi)
    G = np.vstack([np.eye(p), -np.eye(p), -a, a])
    h = np.concatenate([hi, -lo, [-c, c]])
    if relax:
        h[6] += rng.uniform(0, 0.5)
    return QpProblem(rng.standard_normal(p) * 3, G, h)


def power_derivative(c: PolyCoeffs, gas: GasProperties, rho1, rho2, m):
    """d/dm of head(pi(m)) * m / eta(m, pi(m)) along the resistance curve."""
    pi = rho1 * m + rho2
    phi = gas.phi
    C = gas.Z * gas.R * gas.T1 / (gas.M_W * phi)
    H = C * (pi ** phi - 1)
    dH = C * phi * pi ** (phi - 1) * rho1
    eta = c.a0 + c.a1 * m + c.a2 * pi + c.a3 * m * pi + c.a4 * m ** 2 + c.a5 * pi ** 2
    deta = (c.a1 + c.a2 * rho1 + c.a3 * (pi + m * rho1) + 2 * c.a4 * m
            + 2 * c.a5 * pi * rho1)
    return (dH * m + H) / eta - H * m * deta / eta ** 2
