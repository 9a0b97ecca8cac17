"""Greedy joint-sparse recovery: SNIHT and its Huber-criterion variant.

Both solvers share one projected-gradient loop.  The robust variant
estimates the error scale jointly with the signal, winsorizes residuals
through the Huber score before forming the gradient, and picks the stepsize
by one fixed-point step of an iteratively reweighted line search.
"""

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .doa import find_k_peaks
from .loss import ConsistencyFactors, HuberLoss, LeastSquaresLoss
from .mmv import as_complex_matrix, hard_threshold, row_norms, row_support

# sigma0 = MEDIAN_SCALE * median|y_ij|; 1/sqrt(log 2) maps the Rayleigh median
# of |CN(0, s^2)| back to s
MEDIAN_SCALE = 1.201

INIT_MODES = ("topk", "peaks")


class DegenerateInputError(ValueError):
    pass


class NumericalError(ArithmeticError):
    def __init__(self, iteration, what):
        super().__init__(f"non-finite {what} at iteration {iteration}")
        self.iteration = iteration


@dataclass
class SolverConfig:
    """Parameters of a recovery run.

    `loss` overrides the Huber threshold derived from `q_quantile`.
    `sigma_floor` is relative to the initial scale estimate.  It must stay
    well above machine precision: on noiseless data the scale otherwise
    collapses once half the residuals vanish and the clipped remainder stalls.
    """

    K: int
    loss: Optional[object] = None
    q_quantile: float = 0.8
    max_iter: int = 500
    rel_tol: float = 1e-6
    sigma_floor: float = 1e-3
    init_support_mode: str = "topk"

    def __post_init__(self):
        if self.K < 0:
            raise ValueError(f"K must be nonnegative, got {self.K}")
        if self.max_iter < 1:
            raise ValueError(f"max_iter must be >= 1, got {self.max_iter}")
        if not self.rel_tol > 0:
            raise ValueError(f"rel_tol must be positive, got {self.rel_tol}")
        if not self.sigma_floor > 0:
            raise ValueError(f"sigma_floor must be positive, got {self.sigma_floor}")
        if self.init_support_mode not in INIT_MODES:
            raise ValueError(f"init_support_mode must be one of {INIT_MODES}")

    def huber_loss(self):
        return self.loss if self.loss is not None else HuberLoss.from_quantile(self.q_quantile)


@dataclass
class SolverState:
    S: np.ndarray
    sigma: float
    mu: float
    support: np.ndarray
    iter: int


@dataclass
class RecoveryResult:
    S_hat: np.ndarray
    sigma_hat: float
    support: np.ndarray
    iterations: int
    converged: bool
    objective_trace: np.ndarray = field(repr=False)


def _check_shapes(Y, A, S=None):
    if Y.shape[0] != A.shape[0]:
        raise ValueError(f"Y has {Y.shape[0]} rows but A has {A.shape[0]}")
    if S is not None and S.shape != (A.shape[1], Y.shape[1]):
        raise ValueError(f"S must have shape {(A.shape[1], Y.shape[1])}, got {S.shape}")


def objective_Q(S, sigma, Y, A, factors: ConsistencyFactors, loss):
    """Huber's joint criterion ``alpha*n*q*sigma + sigma * sum rho((Y - A S)/sigma)``."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    Y, A, S = np.asarray(Y), np.asarray(A), np.asarray(S)
    _check_shapes(Y, A, S)
    E = Y - A @ S
    return float(factors.alpha * E.size * sigma + np.sum(loss.rho(E / sigma)) * sigma)


def init_scale(Y):
    """Median-based starting scale, ``1.201 * median(|y_ij|)``."""
    sigma0 = MEDIAN_SCALE * float(np.median(np.abs(Y)))
    if not sigma0 > 0:
        raise DegenerateInputError("median |Y| is zero; cannot initialize the scale")
    return sigma0


def init_support(Y, A, sigma0, K, loss, mode="topk"):
    """Initial support from the row norms of ``A^H psi(Y / sigma0)``.

    ``"topk"`` keeps the K largest rows; ``"peaks"`` takes the K largest local
    maxima of the row-norm sequence, which suits angularly ordered
    dictionaries whose neighbouring atoms are highly coherent.
    """
    Y, A = np.asarray(Y), np.asarray(A)
    _check_shapes(Y, A)
    corr = A.conj().T @ loss.psi(Y / sigma0)
    if mode == "topk":
        return hard_threshold(corr, K)[1]
    if mode == "peaks":
        return find_k_peaks(row_norms(corr), K)
    raise ValueError(f"unknown init mode {mode!r}")


def scale_update(E, sigma_n, factors, loss, sigma_floor):
    """One fixed-point step of the scale estimating equation."""
    chi_mean = np.mean(np.abs(loss.psi(E / sigma_n)) ** 2)
    sigma = sigma_n * math.sqrt(chi_mean / factors.alpha)
    return max(sigma, sigma_floor)


def pseudo_residual(E, sigma, loss):
    """Winsorized residual ``psi(E / sigma) * sigma``."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return loss.psi(E / sigma) * sigma


def search_direction(A, G, support):
    """``A_Gamma @ G_(Gamma)``: the image of the support-restricted gradient."""
    return A[:, support] @ G[support]


def line_objective(mu, E, B, sigma, loss):
    """Loss of the residual after a step of length `mu` along `B`."""
    return float(np.sum(loss.rho((E - mu * B) / sigma)))


def stepsize_map(mu, E, B, sigma, loss):
    """Reweighted least-squares stepsize with weights frozen at `mu`.

    The line-search minimizer is the fixed point of this map.
    """
    W = loss.weight((E - mu * B) / sigma)
    den = float(np.sum(W * (B.real ** 2 + B.imag ** 2)))
    if den == 0:
        return 0.0
    return float(np.sum(W * (E * B.conj()).real)) / den


def stepsize_fixed_point(E, B, sigma, loss, mu0=0.0, tol=1e-12, max_iter=10_000):
    """Iterate `stepsize_map` to convergence; returns ``(mu, iterations)``."""
    mu = mu0
    for it in range(1, max_iter + 1):
        nxt = stepsize_map(mu, E, B, sigma, loss)
        if abs(nxt - mu) <= tol * max(1.0, abs(nxt)):
            return nxt, it
        mu = nxt
    return mu, max_iter


def compute_stepsize(E_n, A, G, support, mu_n, sigma, loss):
    """Stepsize for the gradient move restricted to `support`.

    Least squares uses the exact line-search minimizer
    ``||G_Gamma||^2 / ||A_Gamma G_Gamma||^2``.  For Huber one fixed-point step
    is taken from the previous stepsize `mu_n`.  Returns 0 when the direction
    vanishes.
    """
    support = np.asarray(support, dtype=np.int64)
    if support.size == 0:
        raise ValueError("stepsize requires a nonempty support")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    B = search_direction(A, G, support)
    nb = float(np.sum(B.real ** 2 + B.imag ** 2))
    if nb == 0:
        return 0.0
    if isinstance(loss, LeastSquaresLoss):
        Gs = G[support]
        return float(np.sum(Gs.real ** 2 + Gs.imag ** 2)) / nb
    return stepsize_map(mu_n, E_n, B, sigma, loss)


def _run(Y, A, K, loss, config, sigma0, estimate_scale, callback):
    Y = as_complex_matrix(Y, "Y")
    A = as_complex_matrix(A, "A")
    _check_shapes(Y, A)
    p, q = A.shape[1], Y.shape[1]
    if K > p:
        raise ValueError(f"K={K} exceeds the number of dictionary columns {p}")

    factors = loss.consistency()
    S = np.zeros((p, q), dtype=np.complex128)
    if K == 0:
        return RecoveryResult(S, sigma0, np.zeros(0, np.int64), 0, True, np.zeros(0))

    sigma, mu = sigma0, 0.0
    floor = config.sigma_floor * sigma0
    support = init_support(Y, A, sigma0, K, loss, config.init_support_mode)
    trace = [objective_Q(S, sigma, Y, A, factors, loss)]
    converged = False
    n = 0
    while n < config.max_iter:
        n += 1
        E = Y - A @ S
        if estimate_scale:
            sigma = scale_update(E, sigma, factors, loss, floor)
            if not math.isfinite(sigma):
                raise NumericalError(n, "scale")
        G = A.conj().T @ pseudo_residual(E, sigma, loss)
        halt = False
        if support.size == 0:
            mu, halt, converged = 0.0, True, True
        else:
            mu = compute_stepsize(E, A, G, support, mu, sigma, loss)
            if not math.isfinite(mu):
                raise NumericalError(n, "stepsize")
            if mu == 0:
                halt, converged = True, True
            elif mu < 0:
                mu, halt = 0.0, True

        S_new = S if halt else hard_threshold(S + mu * G, K)[0]
        if not np.all(np.isfinite(S_new)):
            raise NumericalError(n, "signal iterate")
        support_new = row_support(S_new)
        trace.append(objective_Q(S_new, sigma, Y, A, factors, loss))
        if not halt:
            step = np.linalg.norm(S_new - S)
            converged = (step <= config.rel_tol * np.linalg.norm(S)
                         and np.array_equal(support_new, support))
        S, support = S_new, support_new
        if callback is not None:
            callback(SolverState(S.copy(), sigma, mu, support.copy(), n))
        if halt or converged:
            break

    return RecoveryResult(S, sigma, support, n, bool(converged), np.asarray(trace))


def hub_sniht(Y, A, config: SolverConfig,
              callback: Optional[Callable[[SolverState], None]] = None):
    """Joint-sparse recovery under Huber's criterion with joint scale estimation.

    Parameters
    ----------
    Y : array_like, shape (n, q)
        Measurement matrix.
    A : array_like, shape (n, p)
        Dictionary.
    config : SolverConfig
        Sparsity level and tuning.  The Huber threshold comes from
        ``config.loss`` or, if unset, from ``config.q_quantile``.
    callback : callable, optional
        Called with a `SolverState` after every iteration.

    Returns
    -------
    RecoveryResult

    Raises
    ------
    DegenerateInputError
        If the median of ``|Y|`` is zero.
    NumericalError
        If an iterate becomes non-finite.
    """
    Y = as_complex_matrix(Y, "Y")
    loss = config.huber_loss()
    if config.K == 0:
        sigma0 = MEDIAN_SCALE * float(np.median(np.abs(Y)))
    else:
        sigma0 = init_scale(Y)
    return _run(Y, A, config.K, loss, config, sigma0, True, callback)


def sniht(Y, A, config: SolverConfig,
          callback: Optional[Callable[[SolverState], None]] = None):
    """Simultaneous normalized iterative hard thresholding (least squares).

    The scale is irrelevant for the least-squares criterion and stays at 1;
    ``sigma_hat`` of the result is therefore always 1.
    """
    return _run(Y, A, config.K, LeastSquaresLoss(), config, 1.0, False, callback)
