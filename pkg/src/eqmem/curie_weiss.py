"""Curie-Weiss classical memory.

``N`` Ising spins with all-to-all coupling, ``H = -J N X**2`` where ``X``
is the mean magnetization. Units: ``k_B = 1`` and every spin attempts a
flip at unit rate. A single flip moves ``x`` by ``2/N``.

Below ``T_c = 2J`` the per-spin free energy

    f(x) = -T h((1 + x)/2) - J x**2

has two minima at ``+-x*`` with ``x* = tanh(2 J x* / T)``, and the time to
cross between them grows like ``exp(N (f(0) - f(x*)) / T)``. Above
``T_c`` the only minimum is ``x = 0``. ``T == T_c`` counts as the
single-minimum regime.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import gammaln, logsumexp

from eqmem import kernels
from eqmem._rng import map_trials, trial_rng
from eqmem.errors import DomainError, UnreachableError

WELL_XTOL = 1e-10


@dataclass(frozen=True)
class CWParams:
    """Spin count ``N``, coupling ``J`` and temperature ``T`` (``k_B = 1``)."""

    N: int
    J: float
    T: float

    def __post_init__(self):
        if isinstance(self.N, bool) or int(self.N) != self.N or self.N < 1:
            raise DomainError(f"CWParams.N must be a positive integer, got {self.N!r}")
        if not self.J > 0:
            raise DomainError(f"CWParams.J must be > 0, got {self.J!r}")
        if not self.T > 0:
            raise DomainError(f"CWParams.T must be > 0, got {self.T!r}")
        object.__setattr__(self, "N", int(self.N))

    @property
    def T_c(self) -> float:
        return critical_temperature(self.J)

    def with_N(self, N: int) -> "CWParams":
        return CWParams(N, self.J, self.T)


@dataclass(frozen=True)
class MagnetizationMacrostate:
    """All microstates with ``m`` up spins out of ``N``."""

    N: int
    m: int

    def __post_init__(self):
        if not 0 <= self.m <= self.N:
            raise DomainError(f"m must lie in [0, {self.N}], got {self.m}")

    @property
    def x(self) -> float:
        return (2 * self.m - self.N) / self.N

    @classmethod
    def nearest(cls, N: int, x: float) -> "MagnetizationMacrostate":
        return cls(N, int(round(N * (1 + x) / 2)))


@dataclass
class LandscapeProfile:
    grid: np.ndarray
    energy: np.ndarray
    entropy: np.ndarray
    free_energy: np.ndarray
    minima: list[float]
    barrier_height: float


@dataclass
class BirthDeathChain:
    """Magnetization chain on ``m = 0..N`` with nearest-neighbour rates.

    ``log_weight[m] = ln C(N, m) - E(m) / T`` is the unnormalized log
    stationary weight; the rates satisfy detailed balance against it.
    """

    params: CWParams
    up_rate: np.ndarray
    down_rate: np.ndarray
    log_weight: np.ndarray

    @property
    def size(self) -> int:
        return len(self.up_rate)

    @property
    def stationary_weight(self) -> np.ndarray:
        # overflows for large N; use log_weight there
        return np.exp(self.log_weight)

    def stationary_distribution(self) -> np.ndarray:
        return np.exp(self.log_weight - logsumexp(self.log_weight))


@dataclass
class ExitTimeStats:
    samples: np.ndarray
    mean: float = field(init=False)
    std_error: float = field(init=False)
    trials: int = field(init=False)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        self.trials = len(self.samples)
        self.mean = float(np.mean(self.samples))
        if self.trials > 1:
            self.std_error = float(np.std(self.samples, ddof=1) / math.sqrt(self.trials))
        else:
            self.std_error = math.nan


class LifetimeRow(NamedTuple):
    N: int
    exact_mfpt: float
    mc_mean: float
    mc_stderr: float
    kramers: float


def binary_entropy(q):
    """Binary entropy in nats, with ``0 ln 0 = 0``. Accepts scalars or arrays."""
    q_arr = np.asarray(q, dtype=float)
    if np.any(~((q_arr >= 0) & (q_arr <= 1))):
        raise DomainError(f"binary_entropy needs 0 <= q <= 1, got {q!r}")
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -(np.where(q_arr > 0, q_arr * np.log(q_arr), 0.0)
              + np.where(q_arr < 1, (1 - q_arr) * np.log1p(-q_arr), 0.0))
    return float(h) if h.ndim == 0 else h


def _check_x(x):
    x_arr = np.asarray(x, dtype=float)
    if np.any(~(np.abs(x_arr) <= 1)):
        raise DomainError(f"magnetization must satisfy |x| <= 1, got {x!r}")
    return x_arr


def _scalar(a):
    return float(a) if np.ndim(a) == 0 else a


def energy(params: CWParams, x):
    x_arr = _check_x(x)
    return _scalar(-params.J * params.N * x_arr**2)


def entropy(params: CWParams, x):
    """``S(x) = N h((1 + x)/2)``, the log of the number of microstates to leading order."""
    x_arr = _check_x(x)
    return _scalar(params.N * binary_entropy((1 + x_arr) / 2))


def free_energy(params: CWParams, x):
    x_arr = _check_x(x)
    return _scalar(params.N * (-params.T * binary_entropy((1 + x_arr) / 2)
                               - params.J * x_arr**2))


def free_energy_curvature(params: CWParams, x: float) -> float:
    """``d^2F/dx^2 = N (T / (1 - x^2) - 2J)``."""
    if not abs(x) < 1:
        raise DomainError("curvature diverges at |x| = 1")
    return params.N * (params.T / (1 - x * x) - 2 * params.J)


def critical_temperature(J: float) -> float:
    if not J > 0:
        raise DomainError(f"J must be > 0, got {J!r}")
    return 2.0 * J


def is_double_well(J: float, T: float) -> bool:
    return T < critical_temperature(J)


def well_position(J: float, T: float) -> float:
    """Positive minimum ``x*`` of the free energy; ``0.0`` when ``T >= 2J``.

    Bisection on ``dF/dx = N (T artanh(x) - 2 J x)`` over ``(0, 1)``.
    """
    if not is_double_well(J, T):
        return 0.0

    def slope(x):
        return T * math.atanh(x) - 2 * J * x

    lo, hi = 1e-300, 1.0 - 1e-16
    while hi - lo > WELL_XTOL:
        mid = 0.5 * (lo + hi)
        if slope(mid) < 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def barrier_rate(J: float, T: float) -> float:
    """Per-spin barrier ``(f(0) - f(x*)) / T``; zero in the single-well regime."""
    if not is_double_well(J, T):
        return 0.0
    unit = CWParams(1, J, T)
    return (free_energy(unit, 0.0) - free_energy(unit, well_position(J, T))) / T


def landscape(params: CWParams, grid_points: int = 201) -> LandscapeProfile:
    """Energy, entropy and free energy on a uniform grid over ``[-1, 1]``.

    Minima are located from the stationarity condition rather than the
    grid, so a barrier narrower than the grid spacing is still reported.
    """
    if grid_points < 3 or grid_points % 2 == 0:
        raise DomainError(f"grid_points must be odd and >= 3, got {grid_points}")
    grid = np.linspace(-1.0, 1.0, grid_points)
    grid[grid_points // 2] = 0.0
    E = energy(params, grid)
    S = entropy(params, grid)
    F = E - params.T * S
    if is_double_well(params.J, params.T):
        xs = well_position(params.J, params.T)
        minima = [-xs, xs]
        barrier = free_energy(params, 0.0) - free_energy(params, xs)
    else:
        minima = [0.0]
        barrier = 0.0
    return LandscapeProfile(grid, E, S, F, minima, float(barrier))


def _macro_energy(params: CWParams, m: np.ndarray) -> np.ndarray:
    x = (2 * m - params.N) / params.N
    return -params.J * params.N * x**2


def build_chain(params: CWParams) -> BirthDeathChain:
    """Metropolis single-spin-flip dynamics lumped by up-spin count."""
    N, T = params.N, params.T
    m = np.arange(N + 1)
    E = _macro_energy(params, m)
    up = np.zeros(N + 1)
    down = np.zeros(N + 1)
    up[:-1] = (N - m[:-1]) * np.minimum(1.0, np.exp(-(E[1:] - E[:-1]) / T))
    down[1:] = m[1:] * np.minimum(1.0, np.exp(-(E[:-1] - E[1:]) / T))
    log_binom = gammaln(N + 1) - gammaln(m + 1) - gammaln(N - m + 1)
    return BirthDeathChain(params, up, down, log_binom - E / T)


def _check_states(chain: BirthDeathChain, *states: int):
    for s in states:
        if not 0 <= s < chain.size:
            raise DomainError(f"state {s} outside [0, {chain.size - 1}]")


def log_exact_mfpt(chain: BirthDeathChain, m_start: int, m_target: int) -> float:
    """Natural log of the exact mean first-passage time.

    For a downward passage the mean time to step from ``j`` to ``j - 1``
    for the first time is ``sum_{i >= j} pi_i / (down_j pi_j)``; the MFPT
    is the sum of these over the states between target and start (and
    symmetrically for upward passages). Evaluated with log-sum-exp.
    """
    _check_states(chain, m_start, m_target)
    if m_start == m_target:
        raise DomainError("m_start and m_target must differ")
    lw = chain.log_weight
    if m_start > m_target:
        js = np.arange(m_target + 1, m_start + 1)
        rates = chain.down_rate[js]
        tails = np.array([logsumexp(lw[j:]) for j in js])
    else:
        js = np.arange(m_start, m_target)
        rates = chain.up_rate[js]
        tails = np.array([logsumexp(lw[: j + 1]) for j in js])
    if np.any(rates <= 0):
        raise UnreachableError(f"state {m_target} unreachable from {m_start}")
    return float(logsumexp(tails - np.log(rates) - lw[js]))


def exact_mfpt(chain: BirthDeathChain, m_start: int, m_target: int) -> float:
    return math.exp(log_exact_mfpt(chain, m_start, m_target))


def well_state(chain: BirthDeathChain) -> int:
    """Most probable up-spin count among ``m >= N/2``."""
    N = chain.size - 1
    lo = (N + 1) // 2
    return lo + int(np.argmax(chain.log_weight[lo:]))


def lifetime_endpoints(chain: BirthDeathChain) -> tuple[int, int]:
    """Start and target states for the lifetime of a stored sign.

    With two separated wells this is well to opposite well. When the
    stationary weight peaks at the centre there is no opposite well; the
    run then starts fully polarized and ends on reaching the centre.
    """
    N = chain.size - 1
    m_w = well_state(chain)
    if m_w - (N - m_w) >= 2:
        return m_w, N - m_w
    return N, N // 2


def log_kramers_estimate(params: CWParams, D: float) -> float:
    if not D > 0:
        raise DomainError(f"diffusion constant must be > 0, got {D!r}")
    if not is_double_well(params.J, params.T):
        raise DomainError(
            f"Kramers estimate needs T < T_c = {params.T_c}; got T = {params.T}")
    xs = well_position(params.J, params.T)
    curv = abs(free_energy_curvature(params, xs) * free_energy_curvature(params, 0.0))
    barrier = free_energy(params, 0.0) - free_energy(params, xs)
    return (math.log(2 * math.pi * params.T / D) - 0.5 * math.log(curv)
            + barrier / params.T)


def kramers_estimate(params: CWParams, D: float) -> float:
    """Kramers mean escape time from the well at ``x*`` over the top at ``x = 0``.

    ``(2 pi T / D) |F''(x*) F''(0)|**-0.5 exp((F(0) - F(x*)) / T)``.
    """
    return math.exp(log_kramers_estimate(params, D))


def calibrate_diffusion(params: CWParams, log_tau: float) -> float:
    """Diffusion constant making the Kramers estimate equal ``exp(log_tau)``."""
    return math.exp(log_kramers_estimate(params, 1.0) - log_tau)


def simulate_exit(params: CWParams, m_start: int, m_absorb: int, trials: int,
                  seed: int, workers: int = 1) -> ExitTimeStats:
    """Gillespie exit times of the magnetization chain.

    Trial ``i`` uses the stream ``trial_rng(seed, i)``, so the samples do
    not depend on ``workers``.
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    chain = build_chain(params)
    _check_states(chain, m_start, m_absorb)
    if m_start != m_absorb:
        # raises if a zero rate cuts the path
        log_exact_mfpt(chain, m_start, m_absorb)
    up, down = chain.up_rate, chain.down_rate

    def one(i):
        t, _ = kernels.bd_exit_time(up, down, m_start, m_absorb, trial_rng(seed, i))
        return t

    return ExitTimeStats(np.array(map_trials(one, trials, workers)))


def lifetime_scaling_experiment(J: float, T: float, N_list: Sequence[int],
                                trials: int = 0, seed: int = 0,
                                workers: int = 1) -> list[LifetimeRow]:
    """Exact, simulated and Kramers lifetimes of a stored sign versus ``N``.

    The Kramers column is filled only below ``T_c``; its diffusion
    constant is fitted so that it matches the exact lifetime at the
    smallest ``N`` and is then held fixed. Monte Carlo columns are NaN when
    ``trials == 0``.
    """
    if any(N < 2 for N in N_list):
        raise DomainError("every N must be >= 2")
    Ns = [int(N) for N in N_list]
    log_taus = []
    mc = []
    for N in Ns:
        params = CWParams(N, J, T)
        chain = build_chain(params)
        start, target = lifetime_endpoints(chain)
        log_taus.append(log_exact_mfpt(chain, start, target))
        if trials > 0:
            stats = simulate_exit(params, start, target, trials, seed, workers)
            mc.append((stats.mean, stats.std_error))
        else:
            mc.append((math.nan, math.nan))

    kramers = [math.nan] * len(Ns)
    if is_double_well(J, T) and Ns:
        i_ref = int(np.argmin(Ns))
        D = calibrate_diffusion(CWParams(Ns[i_ref], J, T), log_taus[i_ref])
        kramers = [kramers_estimate(CWParams(N, J, T), D) for N in Ns]

    return [LifetimeRow(N, math.exp(lt), m, s, k)
            for N, lt, (m, s), k in zip(Ns, log_taus, mc, kramers)]
