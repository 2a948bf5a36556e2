"""Perturbed random walks and their functionals.

A perturbed random walk observes a zero-delayed nonnegative random walk
S_0 = 0, S_k = xi_1 + ... + xi_k through T_k = S_{k-1} + eta_k, where the
pairs (xi_k, eta_k) are i.i.d. copies of (xi, eta) with xi, eta >= 0 and
P{xi = 0} < 1.  No independence between xi and eta is assumed; a coupled
pair (eta = multiplier * xi) is available alongside the independent default.

The functionals below (renewal count, empty-box functional, busy-server
count, renewal shot noise, and the weighted-window statistic) all converge,
under regularly varying tails with indices 0 <= beta <= alpha < 1, to the
same limit law Z handled by :mod:`sievesim.limitlaw`.

Large arguments: the empty-box functional and the shot noise take the time
argument on log scale (``log_t``), since the interesting regime has
t = e^x with x in the thousands, far beyond float range.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .randkit import as_generator, sample_uniform01
from .stats import mc_accumulate

__all__ = [
    "ParetoLaw",
    "ExponentialLaw",
    "ConstantLaw",
    "LogDecayLaw",
    "PrwLaw",
    "WalkPath",
    "generate_path",
    "renewal_count",
    "renewal_function_estimate",
    "empty_box_functional",
    "busy_server_count",
    "renewal_shot_noise",
    "weighted_window_statistic",
    "tabulate_phi_log",
]

_INNER_EXP_CAP = 50.0  # exp(-exp(50)) underflows to exactly 0.0 long before this


def _double_exp(w):
    """exp(-exp(w)) without overflow warnings for large w."""
    return np.exp(-np.exp(np.minimum(w, _INNER_EXP_CAP)))


class MarginalLaw:
    """Nonnegative marginal with an exact tail evaluator.

    Subclasses provide ``sample`` and ``tail``; laws with a density also get
    ``phi_log(w) = E exp(-exp(w - X))``, the shot-noise transform on log scale.
    """

    def sample(self, rng, size=None):
        raise NotImplementedError

    def tail(self, x):
        raise NotImplementedError

    def phi_log(self, w: float) -> float:
        raise NotImplementedError(
            f"{type(self).__name__} has no transform evaluator; "
            "use tabulate_phi_log with a Monte Carlo table instead"
        )

    # quadrature support for phi_log, used by density-backed subclasses
    _support = (0.0, math.inf)

    def _density(self, y):
        raise NotImplementedError

    def _phi_log_quad(self, w: float) -> float:
        from scipy.integrate import quad

        lo, hi = self._support
        a = max(lo, w - 45.0)
        b = max(lo, w + 45.0)
        total = 0.0
        # below w-45 the integrand is exp(-e^{>45}) = 0 in doubles
        if b > a:
            val, _ = quad(
                lambda y: math.exp(-math.exp(min(w - y, _INNER_EXP_CAP))) * self._density(y),
                a,
                b,
                epsabs=1e-12,
                epsrel=1e-10,
                limit=400,
            )
            total += val
        # beyond w+45 the integrand equals the density to within e^{-45}
        total += float(self.tail(b))
        return total


class ParetoLaw(MarginalLaw):
    """P{X > x} = x^(-index) for x >= 1 (support starts at 1)."""

    _support = (1.0, math.inf)

    def __init__(self, index: float):
        if not index > 0.0:
            raise ValueError(f"Pareto index must be positive, got {index}")
        self.index = index

    def sample(self, rng, size=None):
        u = sample_uniform01(rng, size=size)
        return u ** (-1.0 / self.index)

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        out = np.ones_like(x)
        np.power(x, -self.index, out=out, where=x > 1.0)
        return out if out.ndim else float(out)

    def _density(self, y):
        return self.index * y ** (-self.index - 1.0) if y >= 1.0 else 0.0

    def phi_log(self, w: float) -> float:
        return self._phi_log_quad(w)


class ExponentialLaw(MarginalLaw):
    def __init__(self, mean: float = 1.0):
        if not mean > 0.0:
            raise ValueError(f"mean must be positive, got {mean}")
        self.mean = mean

    def sample(self, rng, size=None):
        return as_generator(rng).standard_exponential(size=size) * self.mean

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        out = np.exp(-np.maximum(x, 0.0) / self.mean)
        return out if out.ndim else float(out)

    def _density(self, y):
        return math.exp(-y / self.mean) / self.mean if y >= 0.0 else 0.0

    def phi_log(self, w: float) -> float:
        return self._phi_log_quad(w)


class ConstantLaw(MarginalLaw):
    def __init__(self, value: float):
        if not value >= 0.0:
            raise ValueError(f"constant must be nonnegative, got {value}")
        self.value = value

    def sample(self, rng, size=None):
        return self.value if size is None else np.full(size, self.value)

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x < self.value, 1.0, 0.0)
        return out if out.ndim else float(out)

    def phi_log(self, w: float) -> float:
        return float(_double_exp(w - self.value))


class LogDecayLaw(MarginalLaw):
    """P{X > x} = 1/(1 + log x) for x >= 1: a slowly varying tail (index 0).

    Convergence of anything built on this law is extremely slow; it exists
    to exercise the index-0 corner, not for default verification runs.
    Draws can overflow to inf (the law is that heavy); the functionals
    tolerate inf values.
    """

    _support = (1.0, math.inf)

    def sample(self, rng, size=None):
        u = sample_uniform01(rng, size=size)
        with np.errstate(over="ignore"):
            return np.exp(1.0 / u - 1.0)

    def tail(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore"):
            out = np.where(x > 1.0, 1.0 / (1.0 + np.log(np.maximum(x, 1.0))), 1.0)
        return out if out.ndim else float(out)

    def _density(self, y):
        return 1.0 / (y * (1.0 + math.log(y)) ** 2) if y >= 1.0 else 0.0

    def phi_log(self, w: float) -> float:
        return self._phi_log_quad(w)


@dataclass(frozen=True)
class PrwLaw:
    """Joint law of (xi, eta); independent components unless a coupling
    multiplier is set, in which case eta = multiplier * xi."""

    xi_law: MarginalLaw
    eta_law: MarginalLaw | None = None
    multiplier: float | None = None

    def __post_init__(self):
        if (self.eta_law is None) == (self.multiplier is None):
            raise ValueError("provide exactly one of eta_law (independent) or multiplier (coupled)")
        if self.multiplier is not None and not self.multiplier > 0.0:
            raise ValueError(f"coupling multiplier must be positive, got {self.multiplier}")
        if not float(np.asarray(self.xi_law.tail(0.0))) > 0.0:
            raise ValueError("xi must satisfy P{xi = 0} < 1")

    @staticmethod
    def independent(xi_law: MarginalLaw, eta_law: MarginalLaw) -> "PrwLaw":
        return PrwLaw(xi_law=xi_law, eta_law=eta_law)

    @staticmethod
    def coupled(xi_law: MarginalLaw, multiplier: float) -> "PrwLaw":
        return PrwLaw(xi_law=xi_law, multiplier=multiplier)

    def sample_pairs(self, rng, size):
        rng = as_generator(rng)
        xi = np.asarray(self.xi_law.sample(rng, size=size), dtype=float)
        if self.multiplier is not None:
            return xi, self.multiplier * xi
        eta = np.asarray(self.eta_law.sample(rng, size=size), dtype=float)
        return xi, eta

    def xi_tail(self, x):
        return self.xi_law.tail(x)

    def eta_tail(self, x):
        if self.multiplier is not None:
            return self.xi_law.tail(np.asarray(x, dtype=float) / self.multiplier)
        return self.eta_law.tail(x)

    def phi_log(self, w: float) -> float:
        """E exp(-exp(w - eta)); available when the eta marginal has one."""
        if self.multiplier is not None:
            raise NotImplementedError("coupled law: tabulate phi_log by Monte Carlo instead")
        return self.eta_law.phi_log(w)


@dataclass
class WalkPath:
    """Walk realization stored through its first crossing of the horizon.

    ``s_values`` holds S_0 = 0, ..., S_K with S_K > horizon; ``eta_values``
    holds eta_1, ..., eta_K, so T_k = s_values[k-1] + eta_values[k-1].
    """

    s_values: np.ndarray
    eta_values: np.ndarray
    horizon: float

    def t_values(self) -> np.ndarray:
        return self.s_values[:-1] + self.eta_values


def generate_path(law: PrwLaw, horizon: float, rng, max_steps: int = 50_000_000) -> WalkPath:
    """Draw pairs until the walk first exceeds ``horizon``."""
    if not (horizon >= 0.0 and math.isfinite(horizon)):
        raise ValueError(f"horizon must be finite nonnegative, got {horizon}")
    rng = as_generator(rng)
    s_chunks = [np.zeros(1)]
    eta_chunks = []
    total = 0.0
    drawn = 0
    block = 64
    while True:
        xi, eta = law.sample_pairs(rng, size=block)
        cum = total + np.cumsum(xi)
        crossed = cum > horizon
        if crossed.any():
            stop = int(np.argmax(crossed)) + 1
            s_chunks.append(cum[:stop])
            eta_chunks.append(eta[:stop])
            break
        s_chunks.append(cum)
        eta_chunks.append(eta)
        total = float(cum[-1])
        drawn += block
        if drawn > max_steps:
            raise RuntimeError("walk failed to cross the horizon within the step budget")
        block = min(2 * block, 65536)
    return WalkPath(
        s_values=np.concatenate(s_chunks),
        eta_values=np.concatenate(eta_chunks),
        horizon=horizon,
    )


def renewal_count(path: WalkPath, t: float) -> int:
    """#{k >= 0 : S_k <= t}; equals the first index whose walk value exceeds t."""
    if t > path.horizon:
        raise ValueError(f"t = {t} exceeds the stored horizon {path.horizon}")
    return int(np.searchsorted(path.s_values, t, side="right"))


def renewal_function_estimate(law: PrwLaw, t_grid, replicates: int, rng):
    """Monte Carlo renewal function: rows (t, U_hat(t), stderr)."""
    if replicates < 100:
        raise ValueError(f"need at least 100 replicates, got {replicates}")
    t_grid = np.sort(np.asarray(t_grid, dtype=float))
    rng = as_generator(rng)
    horizon = float(t_grid[-1])
    counts = np.empty((replicates, t_grid.size))
    for r in range(replicates):
        path = generate_path(law, horizon, rng)
        counts[r] = np.searchsorted(path.s_values, t_grid, side="right")
    rows = []
    for j, t in enumerate(t_grid):
        est = mc_accumulate(counts[:, j])
        rows.append((float(t), est.mean, est.stderr))
    return rows


def _resolve_log_t(t, log_t):
    if (t is None) == (log_t is None):
        raise ValueError("provide exactly one of t or log_t")
    if t is not None:
        if not t > 0.0:
            raise ValueError(f"t must be positive, got {t}")
        return math.log(t)
    return float(log_t)


def empty_box_functional(path: WalkPath, t: float | None = None, *,
                         log_t: float | None = None, margin: float = 40.0) -> float:
    """Empty-box functional: sum over k >= 1 of
    exp(-t*e^(-T_k)) - exp(-t*e^(-S_{k-1})).

    Terms with S_{k-1} > log t + margin are dropped; each is below
    exp(-margin), under float noise at the default margin.  The stored
    horizon must reach log t + margin.
    """
    x = _resolve_log_t(t, log_t)
    if path.horizon < x + margin:
        raise ValueError(
            f"path horizon {path.horizon} is short of log t + margin = {x + margin}"
        )
    s_prev = path.s_values[:-1]
    keep = s_prev <= x + margin
    s_prev = s_prev[keep]
    t_k = s_prev + path.eta_values[keep]
    return float((_double_exp(x - t_k) - _double_exp(x - s_prev)).sum())


def busy_server_count(path: WalkPath, t: float) -> int:
    """Busy-server count: #{k >= 0 : S_k <= t < S_k + eta_{k+1}}."""
    if t > path.horizon:
        raise ValueError(f"t = {t} exceeds the stored horizon {path.horizon}")
    s_prev = path.s_values[:-1]
    return int(np.count_nonzero((s_prev <= t) & (t < s_prev + path.eta_values)))


def renewal_shot_noise(path: WalkPath, t: float | None = None, phi=None, *,
                       log_t: float | None = None, phi_log=None,
                       margin: float = 40.0) -> float:
    """Renewal shot noise: sum over k >= 0 of phi(t*e^(-S_k)) - exp(-t*e^(-S_k)),
    with phi(u) = E exp(-u*e^(-eta)).

    Pass ``phi`` (argument u) for moderate t, or ``phi_log`` (argument log u)
    for the large-t regime; same horizon/truncation rule as empty_box_functional.
    """
    x = _resolve_log_t(t, log_t)
    if (phi is None) == (phi_log is None):
        raise ValueError("provide exactly one of phi or phi_log")
    if path.horizon < x + margin:
        raise ValueError(
            f"path horizon {path.horizon} is short of log t + margin = {x + margin}"
        )
    s = path.s_values[path.s_values <= x + margin]
    w = x - s
    if phi_log is not None:
        phi_vals = np.asarray([phi_log(float(wi)) for wi in w], dtype=float)
    else:
        phi_vals = np.asarray([phi(float(math.exp(min(wi, _INNER_EXP_CAP)))) for wi in w])
    return float((phi_vals - _double_exp(w)).sum())


def weighted_window_statistic(path: WalkPath, t: float, Q, F_bar) -> float:
    """Weighted renewal-window statistic:
    (F_bar(t)/Q(t)) * sum over {k : S_k <= t} of Q(t - S_k),
    for nonincreasing Q with Q(0) finite and F_bar the exact tail of xi."""
    if t > path.horizon:
        raise ValueError(f"t = {t} exceeds the stored horizon {path.horizon}")
    s = path.s_values[path.s_values <= t]
    q_vals = np.asarray(Q(t - s), dtype=float)
    return float(F_bar(t) / Q(t) * q_vals.sum())


def tabulate_phi_log(law, w_min: float, w_max: float, step: float = 0.02):
    """Precompute phi_log on a grid and return a clamped linear interpolant.

    ``law`` is anything with a ``phi_log`` method (a marginal or a PrwLaw).
    Bulk shot-noise evaluation calls the transform once per walk point, and
    the quadrature behind phi_log is too slow for that loop.
    """
    grid = np.arange(w_min, w_max + step, step)
    vals = np.asarray([law.phi_log(float(w)) for w in grid])

    def interp(w):
        return float(np.interp(w, grid, vals))

    return interp
