"""Gaussian-process model of the efficiency error and its online adaptation.

The error ``delta = eta_measured - eta_model`` is modelled over the input
pair ``x = (m, pi)`` as a GP with constant prior mean ``beta`` and the
squared exponential covariance

    kappa(x, x') = theta_f2 * exp(-|x - x'|^2 / (2 * theta_l))

Note ``theta_l`` enters unsquared, so it carries squared-distance units.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy import linalg
from scipy.optimize import minimize

DUPLICATE_TOL = 1e-6
DELTA_MATCH_TOL = 1e-9
SIGMA_FLOOR = 1e-10
MAX_JITTER = 1e-4

# multi-start grid for the likelihood search
GRID_THETA_F2 = (1e-4, 1e-2, 1.0)
GRID_THETA_L = (10.0, 1e2, 1e4)
GRID_SIGMA_N2 = (1e-8, 1e-6, 1e-4)
N_LOCAL_STARTS = 3

_LOG_BOUNDS = (
    (math.log(1e-8), math.log(1e2)),      # theta_f2
    (math.log(1e-2), math.log(1e8)),      # theta_l
    (math.log(SIGMA_FLOOR), math.log(1.0)),  # sigma_n2
)
_LOG_2PI = math.log(2.0 * math.pi)


class FactorizationFailure(np.linalg.LinAlgError):
    """Covariance matrix not positive definite even after maximal jitter."""


class DegenerateData(ValueError):
    """All training inputs coincide; no length scale can be identified."""


@dataclass(frozen=True)
class GpHyperParams:
    beta: float = 0.0
    theta_f2: float = 1e-2
    theta_l: float = 1e2
    sigma_n2: float = 1e-6

    def __post_init__(self):
        if not self.theta_f2 > 0:
            raise ValueError(f"theta_f2 must be positive, got {self.theta_f2}")
        if not self.theta_l > 0:
            raise ValueError(f"theta_l must be positive, got {self.theta_l}")
        if not self.sigma_n2 >= SIGMA_FLOOR:
            raise ValueError(f"sigma_n2 must be >= {SIGMA_FLOOR}, got {self.sigma_n2}")


@dataclass(frozen=True)
class GpDataset:
    X: np.ndarray = field(default_factory=lambda: np.empty((0, 2)))
    D: np.ndarray = field(default_factory=lambda: np.empty(0))

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float).reshape(-1, 2)
        D = np.asarray(self.D, dtype=float).reshape(-1)
        if X.shape[0] != D.shape[0]:
            raise ValueError(f"X has {X.shape[0]} rows but D has {D.shape[0]}")
        X.setflags(write=False)
        D.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "D", D)

    @property
    def k(self) -> int:
        return self.D.shape[0]

    def __len__(self):
        return self.k

    def append(self, x, delta) -> "GpDataset":
        return GpDataset(np.vstack([self.X, np.reshape(x, (1, 2))]),
                         np.append(self.D, float(delta)))

    def contains_input(self, x, tol: float = DUPLICATE_TOL) -> bool:
        if self.k == 0:
            return False
        return bool(np.any(np.linalg.norm(self.X - np.asarray(x, float), axis=1) <= tol))

    def contains_delta(self, delta, tol: float = DELTA_MATCH_TOL) -> bool:
        return bool(np.any(np.abs(self.D - delta) <= tol))


@dataclass(frozen=True)
class ErrorObservation:
    """One efficiency measurement and the base-model value at the same point."""

    m: float
    pi: float
    eta_measured: float
    eta_model: float

    @property
    def delta(self) -> float:
        return self.eta_measured - self.eta_model

    @property
    def x(self) -> np.ndarray:
        return np.array([self.m, self.pi])


def kernel(hyper: GpHyperParams, x, x2) -> float:
    d = np.asarray(x, float) - np.asarray(x2, float)
    return hyper.theta_f2 * math.exp(-float(d @ d) / (2.0 * hyper.theta_l))


def _sqdist(A, B):
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    return ((A[:, None, :] - B[None, :, :]) ** 2).sum(axis=-1)


def kernel_matrix(hyper: GpHyperParams, A, B=None) -> np.ndarray:
    sq = _sqdist(A, A if B is None else B)
    return hyper.theta_f2 * np.exp(-sq / (2.0 * hyper.theta_l))


def _cholesky(Kn: np.ndarray):
    """Lower Cholesky factor with adaptive diagonal jitter.

    Returns ``(L, jitter)``; raises FactorizationFailure past MAX_JITTER.
    """
    jitter = 0.0
    eye = np.eye(Kn.shape[0])
    while True:
        try:
            L = linalg.cholesky(Kn + jitter * eye, lower=True, check_finite=False)
            if np.all(np.diag(L) > 0):
                return L, jitter
        except linalg.LinAlgError:
            pass
        jitter = SIGMA_FLOOR if jitter == 0.0 else 10.0 * jitter
        if jitter > MAX_JITTER * (1 + 1e-12):
            raise FactorizationFailure("covariance not positive definite after jitter")


def _solve(L, b):
    y = linalg.solve_triangular(L, b, lower=True, check_finite=False)
    return linalg.solve_triangular(L.T, y, lower=False, check_finite=False)


def neg_log_marginal_likelihood(data: GpDataset, hyper: GpHyperParams) -> float:
    """Negative log marginal likelihood of ``data.D`` under ``hyper``."""
    if data.k < 1:
        raise ValueError("likelihood needs at least one observation")
    Kn = kernel_matrix(hyper, data.X) + hyper.sigma_n2 * np.eye(data.k)
    L, _ = _cholesky(Kn)
    r = data.D - hyper.beta
    a = linalg.solve_triangular(L, r, lower=True, check_finite=False)
    return 0.5 * float(a @ a) + float(np.log(np.diag(L)).sum()) + 0.5 * data.k * _LOG_2PI


def gls_beta(data: GpDataset, hyper: GpHyperParams) -> float:
    """Generalized-least-squares prior mean for fixed covariance parameters."""
    Kn = kernel_matrix(hyper, data.X) + hyper.sigma_n2 * np.eye(data.k)
    L, _ = _cholesky(Kn)
    ones = np.ones(data.k)
    Ki1 = _solve(L, ones)
    return float(Ki1 @ data.D / (Ki1 @ ones))


class _Objective:
    """Profile likelihood over log (theta_f2, theta_l, sigma_n2), beta in closed form."""

    def __init__(self, X, D):
        self.D = D
        self.k = D.shape[0]
        self.half_sq = 0.5 * _sqdist(X, X)
        self.eye = np.eye(self.k)
        self.ones = np.ones(self.k)
        self.nfev = 0

    def evaluate(self, logp):
        self.nfev += 1
        f2, l, s2 = np.exp(logp)
        Kn = f2 * np.exp(-self.half_sq / l) + s2 * self.eye
        try:
            L, _ = _cholesky(Kn)
        except FactorizationFailure:
            return math.inf, 0.0
        Ki1 = _solve(L, self.ones)
        beta = float(Ki1 @ self.D / (Ki1 @ self.ones))
        a = linalg.solve_triangular(L, self.D - beta, lower=True, check_finite=False)
        nll = 0.5 * float(a @ a) + float(np.log(np.diag(L)).sum()) + 0.5 * self.k * _LOG_2PI
        return nll, beta

    def __call__(self, logp):
        nll, _ = self.evaluate(logp)
        return nll if math.isfinite(nll) else 1e300


def _canonical(data: GpDataset):
    order = np.lexsort((data.D, data.X[:, 1], data.X[:, 0]))
    return data.X[order], data.D[order]


def fit(data: GpDataset, warm_start: Optional[GpHyperParams] = None) -> GpHyperParams:
    """Maximum marginal likelihood hyperparameters.

    The 27-point log grid is scored first; Nelder-Mead then runs in log space
    from the best grid points (and from ``warm_start`` when given). ``beta``
    is the GLS mean at every trial point. Rows are sorted before fitting so
    the result does not depend on their order.
    """
    if data.k < 2:
        raise ValueError("fit needs at least two observations")
    if np.max(np.linalg.norm(data.X - data.X[0], axis=1)) <= DUPLICATE_TOL:
        raise DegenerateData("all training inputs coincide")
    X, D = _canonical(data)
    obj = _Objective(X, D)

    grid = [np.log(p) for p in itertools.product(GRID_THETA_F2, GRID_THETA_L, GRID_SIGMA_N2)]
    scores = [obj(p) for p in grid]
    order = sorted(range(len(grid)), key=lambda i: (scores[i], i))
    starts = [grid[i] for i in order[:N_LOCAL_STARTS]]
    if warm_start is not None:
        w = np.log([warm_start.theta_f2, warm_start.theta_l, warm_start.sigma_n2])
        starts.append(np.clip(w, [b[0] for b in _LOG_BOUNDS], [b[1] for b in _LOG_BOUNDS]))

    best_x, best_f = grid[order[0]], scores[order[0]]
    for x0 in starts:
        simplex = np.vstack([x0, x0 + np.eye(3)])
        res = minimize(obj, x0, method="Nelder-Mead", bounds=_LOG_BOUNDS,
                       options={"initial_simplex": simplex, "xatol": 1e-4,
                                "fatol": 1e-9, "maxfev": 600})
        if res.fun < best_f:
            best_x, best_f = res.x, float(res.fun)

    nll, beta = obj.evaluate(best_x)
    if not math.isfinite(nll):
        raise FactorizationFailure("no admissible hyperparameters found")
    f2, l, s2 = np.exp(best_x)
    return GpHyperParams(beta=beta, theta_f2=float(f2), theta_l=float(l),
                         sigma_n2=max(float(s2), SIGMA_FLOOR))


@dataclass(frozen=True)
class GpErrorModel:
    """Posterior predictor of the efficiency error.

    ``data`` is the full measurement history; ``train`` is the subset the
    current predictor was conditioned on. They differ only right after the
    first observation, which is stored without refitting.
    """

    data: GpDataset = field(default_factory=GpDataset)
    hyper: GpHyperParams = field(default_factory=lambda: GpHyperParams(beta=0.0))
    train: GpDataset = field(default_factory=GpDataset)
    chol: Optional[np.ndarray] = None
    alpha: Optional[np.ndarray] = None
    jitter: float = 0.0
    n_fits: int = 0

    @classmethod
    def conditioned(cls, data: GpDataset, hyper: GpHyperParams, n_fits: int = 0) -> "GpErrorModel":
        if data.k == 0:
            return cls(data=data, hyper=hyper, n_fits=n_fits)
        Kn = kernel_matrix(hyper, data.X) + hyper.sigma_n2 * np.eye(data.k)
        L, jitter = _cholesky(Kn)
        alpha = _solve(L, data.D - hyper.beta)
        return cls(data=data, hyper=hyper, train=data, chol=L, alpha=alpha,
                   jitter=jitter, n_fits=n_fits)

    @property
    def k(self) -> int:
        return self.data.k

    def predict_mean(self, x_new):
        x = np.asarray(x_new, float)
        if self.train.k == 0:
            out = np.full(x.reshape(-1, 2).shape[0], self.hyper.beta)
        else:
            out = self.hyper.beta + kernel_matrix(self.hyper, x.reshape(-1, 2), self.train.X) @ self.alpha
        return float(out[0]) if x.ndim == 1 else out

    def predict_var(self, x_new):
        x = np.asarray(x_new, float)
        xs = x.reshape(-1, 2)
        prior = np.full(xs.shape[0], self.hyper.theta_f2)
        if self.train.k == 0:
            out = prior
        else:
            Ks = kernel_matrix(self.hyper, xs, self.train.X)
            v = linalg.solve_triangular(self.chol, Ks.T, lower=True, check_finite=False)
            out = np.maximum(prior - (v * v).sum(axis=0), 0.0)
        return float(out[0]) if x.ndim == 1 else out


def adapt(model: GpErrorModel, obs: ErrorObservation, refit=fit) -> GpErrorModel:
    """One step of the online adaptation procedure.

    * empty history (or history holding only this observation): store the
      observation, keep the current predictor;
    * observation already present (input within DUPLICATE_TOL or error
      value within DELTA_MATCH_TOL): return ``model`` unchanged;
    * otherwise append, refit the hyperparameters on the whole history and
      condition a new predictor on it.
    """
    x, delta = obs.x, obs.delta
    data = model.data
    only_same_x = data.k == 0 or bool(
        np.all(np.linalg.norm(data.X - x, axis=1) <= DUPLICATE_TOL))
    only_same_d = data.k == 0 or bool(np.all(np.abs(data.D - delta) <= DELTA_MATCH_TOL))
    if only_same_x and only_same_d:
        return GpErrorModel(data=GpDataset(x.reshape(1, 2), [delta]), hyper=model.hyper,
                            train=model.train, chol=model.chol, alpha=model.alpha,
                            jitter=model.jitter, n_fits=model.n_fits)
    if data.contains_input(x) or data.contains_delta(delta):
        return model
    new_data = data.append(x, delta)
    warm = model.hyper if model.n_fits > 0 else None
    hyper = refit(new_data, warm_start=warm)
    return GpErrorModel.conditioned(new_data, hyper, n_fits=model.n_fits + 1)


def estimated_efficiency(base, model: GpErrorModel, m, pi):
    """Base-model efficiency plus the GP error estimate."""
    m_arr = np.asarray(m, float)
    pi_arr = np.broadcast_to(np.asarray(pi, float), m_arr.shape)
    x = np.stack([m_arr, pi_arr], axis=-1)
    return base(m, pi) + model.predict_mean(x)
