"""Dense cellular network with full cooperation.

Continuous part: the relay-radius energy density ``Q(x, y)``, its minimum over
the relay radius and the resulting minimal total energy. Discrete part: the
ring model, where ring ``i`` (1..N) sends to ring ``j < i`` (0 is the sink)
with probability ``p[i, j]``, and a projected-gradient search for the most
balanced per-ring energy.

A ring distribution is stored as an ``(N, N)`` array whose row ``i - 1`` holds
ring ``i``'s probabilities over targets ``j = 0 .. N - 1``; only ``j < i`` is
meaningful, so the array is lower triangular including the diagonal.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate, optimize

INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


@dataclass(frozen=True)
class DenseParams:
    radius: float = 1.0
    alpha: float = 4.0
    k: float = 1.0

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("radius must be positive")
        if not self.alpha > 1:
            raise ValueError("path-loss exponent must exceed 1")


@dataclass(frozen=True)
class RingModel:
    n: int
    width: float = 1.0

    def __post_init__(self):
        if self.n < 1 or self.width <= 0:
            raise ValueError("need n >= 1 rings of positive width")

    @property
    def radius(self) -> float:
        return self.n * self.width


def Q(x: float, y, alpha: float):
    """Transmit-plus-relay energy density for sender radius x via relay radius y."""
    y_arr = np.asarray(y, dtype=float)
    if x < 0 or np.any(y_arr < 0) or np.any(y_arr > x):
        raise ValueError(f"need 0 <= y <= x, got x={x}, y={y}")
    out = (x - y_arr) ** alpha + y_arr ** (alpha - 1) * x
    return float(out) if out.ndim == 0 else out


def golden_section(f, lo: float, hi: float, tol: float = 1e-10, max_iter: int = 200):
    """Minimise a unimodal ``f`` on ``[lo, hi]`` to bracket width ``tol``."""
    a, b = lo, hi
    c = b - INV_PHI * (b - a)
    d = a + INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + INV_PHI * (b - a)
            fd = f(d)
    return (c, fc) if fc <= fd else (d, fd)


def q_min(x: float, alpha: float, scan: int = 1024) -> tuple[float, float]:
    """Best relay radius ``y*`` in ``[0, x]`` and the minimal density ``q(x)``.

    A coarse scan picks the bracket (``Q`` need not be unimodal for every
    exponent), golden-section search narrows it, and when the derivative
    changes sign inside the bracket Brent's method polishes the stationary
    point (value comparisons alone stall near 1e-8 on a flat minimum).
    """
    if not x > 0:
        raise ValueError("x must be positive")
    grid = np.linspace(0.0, x, scan + 1)
    vals = (x - grid) ** alpha + grid ** (alpha - 1) * x
    k = int(np.argmin(vals))
    lo, hi = grid[max(k - 1, 0)], grid[min(k + 1, scan)]
    y, q = golden_section(lambda t: (x - t) ** alpha + t ** (alpha - 1) * x, lo, hi,
                          tol=1e-10 * max(1.0, x))

    def slope(t):
        return -alpha * (x - t) ** (alpha - 1) + (alpha - 1) * t ** (alpha - 2) * x

    if lo > 0 and slope(lo) < 0 < slope(hi):
        y = optimize.brentq(slope, lo, hi, xtol=1e-14 * max(1.0, x), rtol=1e-15)
        q = (x - y) ** alpha + y ** (alpha - 1) * x
    # the scan may have hit an endpoint exactly
    if vals[k] < q:
        y, q = float(grid[k]), float(vals[k])
    return float(y), float(q)


def minimal_total_energy(params: DenseParams) -> float:
    """``K`` times the integral of ``q(x)`` over ``[0, R]``, by adaptive quadrature."""
    val, _ = integrate.quad(lambda x: q_min(x, params.alpha)[1] if x > 0 else 0.0,
                            0.0, params.radius, epsabs=0.0, epsrel=1e-9, limit=200)
    return params.k * val


def minimal_total_energy_closed(params: DenseParams) -> float:
    """Same quantity from homogeneity, ``q(x) = q(1) x**alpha``."""
    q1 = q_min(1.0, params.alpha)[1]
    return params.k * q1 * params.radius ** (params.alpha + 1) / (params.alpha + 1)


# -- ring model ---------------------------------------------------------------

def _coefficients(n: int, alpha: float):
    """Transmit (``tx``) and relay (``relay``) cost per unit probability, in r**alpha units.

    ``tx[i-1, j] = (i - j)**alpha``; ``relay[k-1, j] = j**(alpha-1) * k`` is what
    ring ``j`` pays when ring ``k`` targets it (zero for the sink column).
    """
    i = np.arange(1, n + 1, dtype=float)[:, None]
    j = np.arange(n, dtype=float)[None, :]
    mask = j < i
    tx = np.where(mask, np.abs(i - j) ** alpha, 0.0)
    relay = np.where(mask & (j > 0), j ** (alpha - 1) * i, 0.0)
    return tx, relay


def delta_matrix(n: int, alpha: float) -> np.ndarray:
    """Total network cost of one unit of ring ``i`` traffic aimed at ring ``j``."""
    tx, relay = _coefficients(n, alpha)
    return tx + relay


def check_distribution(model: RingModel, p: np.ndarray, atol: float = 1e-8) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.shape != (model.n, model.n):
        raise ValueError(f"distribution must be {model.n}x{model.n}, got {p.shape}")
    if np.any(np.triu(p, 1) != 0):
        raise ValueError("ring i may only target rings j < i")
    if np.any(p < -atol) or np.any(np.abs(p.sum(axis=1) - 1) > atol):
        raise ValueError("rows must be probability vectors")
    return p


def _profile_units(p: np.ndarray, tx: np.ndarray, relay: np.ndarray) -> np.ndarray:
    own = (p * tx).sum(axis=1)
    helped = (p * relay).sum(axis=0)  # column j is ring j, i.e. row j - 1
    own[:-1] += helped[1:]
    return own


def ring_energy_profile(model: RingModel, p: np.ndarray, alpha: float) -> np.ndarray:
    """Per-ring energy ``E(i)``, transmission plus relaying, for ``i = 1..N``."""
    p = check_distribution(model, p)
    tx, relay = _coefficients(model.n, alpha)
    return model.width ** alpha * _profile_units(p, tx, relay)


def mean_and_variance(model: RingModel, p: np.ndarray, alpha: float) -> tuple[float, float]:
    p = check_distribution(model, p)
    scale = model.width ** alpha
    mean = scale / model.n * float((delta_matrix(model.n, alpha) * p).sum())
    e = ring_energy_profile(model, p, alpha)
    return mean, float(np.mean((e - mean) ** 2))


def uniform_distribution(n: int) -> np.ndarray:
    p = np.tril(np.ones((n, n)))
    return p / p.sum(axis=1, keepdims=True)


def min_total_assignment(model: RingModel, alpha: float) -> np.ndarray:
    """Each ring sends everything to the target with the smallest network cost."""
    d = delta_matrix(model.n, alpha)
    d = np.where(np.tril(np.ones_like(d)) > 0, d, np.inf)
    p = np.zeros_like(d)
    p[np.arange(model.n), np.argmin(d, axis=1)] = 1.0  # argmin returns the first (smallest j)
    return p


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of ``v`` onto the probability simplex (sort-based)."""
    return project_rows(np.tril(np.broadcast_to(v, (len(v), len(v)))))[-1]


def project_rows(p: np.ndarray) -> np.ndarray:
    """Project row ``i`` (entries ``0..i``) of a square array onto its simplex.

    Sort-based projection, vectorised over rows; entries above the diagonal
    are ignored on input and zero on output.
    """
    n = p.shape[0]
    valid = np.tril(np.ones((n, n), dtype=bool))
    u = -np.sort(np.where(valid, -p, np.inf), axis=1)  # descending, -inf padding
    u = np.where(np.isfinite(u), u, 0.0)
    css = np.cumsum(u, axis=1) - 1.0
    k = np.arange(1, n + 1)[None, :]
    cond = (u - css / k > 0) & (k <= np.arange(1, n + 1)[:, None])
    rho = n - 1 - np.argmax(cond[:, ::-1], axis=1)
    theta = css[np.arange(n), rho] / (rho + 1)
    return np.where(valid, np.maximum(p - theta[:, None], 0.0), 0.0)


@dataclass
class BalanceResult:
    p: np.ndarray
    variance: float
    mean: float
    iterations: int
    converged: bool
    grad_norm: float
    history: list


def balance_optimize(model: RingModel, alpha: float, max_iters: int = 50000,
                     tol: float = 1e-10, p0: np.ndarray | None = None) -> BalanceResult:
    """Minimise the variance of the per-ring energy over row-stochastic ``p``.

    Projected gradient descent with Nesterov momentum in its monotone form:
    a trial point is kept only when it does not raise the objective, so the
    recorded history never increases. Step ``1/L`` with ``L`` the gradient's
    Lipschitz constant, computed in units of ``width**alpha``. Warm start is
    the uniform distribution. Stops when the projected-gradient residual
    ``L * ||p - proj(p - grad / L)||`` falls below ``tol`` times the squared
    coefficient scale, or after ``max_iters`` (``converged`` is then False).
    """
    n = model.n
    tx, relay = _coefficients(n, alpha)
    mask = np.tril(np.ones((n, n))) > 0

    # dense map vec(p) -> E, only to bound the Lipschitz constant
    cells = np.flatnonzero(mask.ravel())
    ri, cj = np.divmod(cells, n)
    a = np.zeros((n, len(cells)))
    a[ri, np.arange(len(cells))] += tx.ravel()[cells]
    helped = cj > 0
    a[cj[helped] - 1, np.arange(len(cells))[helped]] += relay.ravel()[cells][helped]
    lip = max(2.0 / n * np.linalg.norm(a, 2) ** 2, 1e-300)

    def objective(p):
        e = _profile_units(p, tx, relay)
        return float(np.mean((e - e.mean()) ** 2)), e

    def gradient(p):
        e = _profile_units(p, tx, relay)
        res = e - e.mean()
        res_col = np.r_[0.0, res[:-1]]  # column j is charged to ring j
        return 2.0 / n * (res[:, None] * tx + res_col[None, :] * relay) * mask

    x = uniform_distribution(n) if p0 is None else project_rows(np.asarray(p0, dtype=float))
    f, _ = objective(x)
    history = [f]
    y, t = x.copy(), 1.0
    scale = max(float(tx.max()), 1.0) ** 2
    converged = False
    grad_norm = math.inf
    it = 0
    while it < max_iters:
        it += 1
        z = project_rows(y - gradient(y) / lip)
        fz, _ = objective(z)
        t_next = (1.0 + math.sqrt(1.0 + 4.0 * t * t)) / 2.0
        x_prev = x
        if fz <= f:
            x, f = z, fz
            history.append(f)
        y = x + (t / t_next) * (z - x) + ((t - 1.0) / t_next) * (x - x_prev)
        t = t_next
        if it % 10 == 0 or it == max_iters:
            grad_norm = float(np.linalg.norm(x - project_rows(x - gradient(x) / lip)) * lip)
            if grad_norm <= tol * scale:
                converged = True
                break
    w = model.width ** alpha
    x = np.where(x < 0, 0.0, x)
    e = _profile_units(x, tx, relay)
    return BalanceResult(p=x, variance=f * w * w, mean=float(e.mean()) * w, iterations=it,
                         converged=converged, grad_norm=grad_norm,
                         history=[h * w * w for h in history])
