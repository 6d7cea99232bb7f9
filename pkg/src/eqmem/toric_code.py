"""Kitaev's toric code on a k x k torus under thermal Pauli noise.

Qubits sit on the ``n = 2 k**2`` edges. Stabilizers are products of
Paulis: the star operator ``A_s`` (X on the four edges at vertex ``s``)
and the plaquette ``B_p`` (Z on the four edges bounding face ``p``).
``H = -sum A_s - sum B_p`` so every violated stabilizer costs 2, and
creating a pair of anyons costs 4.

Only X and Z errors are modelled, so the state is a pair of bit vectors.
Z errors create vertex defects (violated ``A_s``) and X errors create face
defects (violated ``B_p``); the two sectors evolve independently.

Indexing
--------
vertex ``(r, c)`` and face ``(r, c)`` both map to ``r * k + c``; face
``(r, c)`` has vertex ``(r, c)`` as its top-left corner. Horizontal edge
``h(r, c) = r * k + c`` joins ``(r, c)``-``(r, c+1)``; vertical edge
``v(r, c) = k**2 + r * k + c`` joins ``(r, c)``-``(r+1, c)``. All
coordinates wrap mod ``k``.

Homology cuts
-------------
Winding parities are intersection counts mod 2 with four fixed edge sets:
``{h(r, 0)}`` and ``{v(0, c)}`` for Z chains (loops running along rows and
along columns), ``{v(r, 0)}`` and ``{h(0, c)}`` for X chains on the dual
lattice.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import product
from typing import NamedTuple, Sequence

import numpy as np

from eqmem import kernels
from eqmem._rng import map_trials, trial_rng
from eqmem.errors import DomainError

Z, X = "z", "x"
ERROR_TYPES = (Z, X)
PAIR_ENERGY = 4.0


def _sector(error_type: str) -> int:
    try:
        return ERROR_TYPES.index(error_type)
    except ValueError:
        raise DomainError(f"error type must be 'z' or 'x', got {error_type!r}") from None


@dataclass(frozen=True, eq=False)
class ToricLattice:
    k: int
    edge_vertices: np.ndarray  # (n, 2)
    edge_faces: np.ndarray  # (n, 2)
    star: np.ndarray  # (k*k, 4) edges at each vertex
    boundary: np.ndarray  # (k*k, 4) edges around each face
    cut_primal: tuple[np.ndarray, np.ndarray]
    cut_dual: tuple[np.ndarray, np.ndarray]
    _kernel_tables: tuple = field(repr=False, default=())

    @property
    def n(self) -> int:
        return 2 * self.k * self.k

    @property
    def n_vertices(self) -> int:
        return self.k * self.k

    @property
    def n_faces(self) -> int:
        return self.k * self.k

    def h(self, r: int, c: int) -> int:
        k = self.k
        return (r % k) * k + (c % k)

    def v(self, r: int, c: int) -> int:
        k = self.k
        return k * k + (r % k) * k + (c % k)

    def kernel_tables(self):
        """Flattened ``(adj, inc, cutmask)`` arrays for ``kernels.toric_run``."""
        return self._kernel_tables


def build_lattice(k: int) -> ToricLattice:
    if int(k) != k or k < 2:
        raise DomainError(f"lattice size k must be an integer >= 2, got {k!r}")
    k = int(k)
    kk = k * k

    def vid(r, c):
        return (r % k) * k + (c % k)

    def h(r, c):
        return (r % k) * k + (c % k)

    def v(r, c):
        return kk + (r % k) * k + (c % k)

    n = 2 * kk
    edge_vertices = np.zeros((n, 2), dtype=np.int32)
    edge_faces = np.zeros((n, 2), dtype=np.int32)
    star = np.zeros((kk, 4), dtype=np.int32)
    boundary = np.zeros((kk, 4), dtype=np.int32)
    for r in range(k):
        for c in range(k):
            edge_vertices[h(r, c)] = (vid(r, c), vid(r, c + 1))
            edge_vertices[v(r, c)] = (vid(r, c), vid(r + 1, c))
            edge_faces[h(r, c)] = (vid(r, c), vid(r - 1, c))
            edge_faces[v(r, c)] = (vid(r, c), vid(r, c - 1))
            star[vid(r, c)] = (h(r, c), h(r, c - 1), v(r, c), v(r - 1, c))
            boundary[vid(r, c)] = (h(r, c), h(r + 1, c), v(r, c), v(r, c + 1))

    cut_primal = (np.array([h(r, 0) for r in range(k)]),
                  np.array([v(0, c) for c in range(k)]))
    cut_dual = (np.array([v(r, 0) for r in range(k)]),
                np.array([h(0, c) for c in range(k)]))

    cutmask = np.zeros(2 * n, dtype=np.uint8)
    cutmask[cut_primal[0]] |= 1
    cutmask[cut_primal[1]] |= 2
    cutmask[n + cut_dual[0]] |= 4
    cutmask[n + cut_dual[1]] |= 8
    adj = np.concatenate([edge_vertices, edge_faces]).ravel()
    inc = np.concatenate([star, boundary]).ravel()
    tables = tuple(np.ascontiguousarray(a) for a in (adj, inc, cutmask))
    return ToricLattice(k, edge_vertices, edge_faces, star, boundary,
                        cut_primal, cut_dual, tables)


def gf2_rank(matrix) -> int:
    """Rank over GF(2) of a 0/1 matrix, by elimination on bit-packed rows."""
    pivots: dict[int, int] = {}
    for row in np.asarray(matrix, dtype=np.uint8) & 1:
        value = int("".join(map(str, row)) or "0", 2)
        while value:
            top = value.bit_length() - 1
            if top not in pivots:
                pivots[top] = value
                break
            value ^= pivots[top]
    return len(pivots)


def stabilizer_generators(lattice: ToricLattice) -> np.ndarray:
    """All ``2 k**2`` generators as symplectic rows ``[x part | z part]``.

    Stars come first (support in the X half), then plaquettes (Z half).
    """
    n = lattice.n
    gens = np.zeros((lattice.n_vertices + lattice.n_faces, 2 * n), dtype=np.uint8)
    for s, edges in enumerate(lattice.star):
        gens[s, edges] ^= 1
    for p, edges in enumerate(lattice.boundary):
        gens[lattice.n_vertices + p, n + edges] ^= 1
    return gens


class StabilizerRank(NamedTuple):
    rank: int
    degeneracy: int
    stars_multiply_to_identity: bool
    plaquettes_multiply_to_identity: bool


def stabilizer_rank(lattice: ToricLattice) -> StabilizerRank:
    gens = stabilizer_generators(lattice)
    nv = lattice.n_vertices
    rank = gf2_rank(gens)
    star_sum = np.bitwise_xor.reduce(gens[:nv], axis=0)
    face_sum = np.bitwise_xor.reduce(gens[nv:], axis=0)
    return StabilizerRank(rank, 2 ** (lattice.n - rank),
                          not star_sum.any(), not face_sum.any())


@dataclass
class ErrorConfig:
    """Accumulated Pauli errors: bit ``e`` set means the error acted on edge ``e``."""

    x_errors: np.ndarray
    z_errors: np.ndarray

    @classmethod
    def vacuum(cls, lattice: ToricLattice) -> "ErrorConfig":
        return cls(np.zeros(lattice.n, dtype=np.uint8), np.zeros(lattice.n, dtype=np.uint8))

    def copy(self) -> "ErrorConfig":
        return ErrorConfig(self.x_errors.copy(), self.z_errors.copy())

    def bits(self, error_type: str) -> np.ndarray:
        return self.z_errors if _sector(error_type) == 0 else self.x_errors

    def flipped(self, edge: int, error_type: str) -> "ErrorConfig":
        new = self.copy()
        new.bits(error_type)[edge] ^= 1
        return new

    def apply(self, edges: Sequence[int], error_type: str) -> "ErrorConfig":
        new = self.copy()
        bits = new.bits(error_type)
        for e in edges:
            bits[e] ^= 1
        return new

    def __eq__(self, other):
        if not isinstance(other, ErrorConfig):
            return NotImplemented
        return (np.array_equal(self.x_errors, other.x_errors)
                and np.array_equal(self.z_errors, other.z_errors))


@dataclass(frozen=True)
class Syndrome:
    vertex_defects: frozenset
    face_defects: frozenset

    @property
    def empty(self) -> bool:
        return not self.vertex_defects and not self.face_defects

    def __len__(self):
        return len(self.vertex_defects) + len(self.face_defects)


def _defect_mask(incidence: np.ndarray, bits: np.ndarray) -> np.ndarray:
    return np.bitwise_xor.reduce(bits[incidence], axis=1).astype(bool)


def syndrome(lattice: ToricLattice, config: ErrorConfig) -> Syndrome:
    vd = _defect_mask(lattice.star, config.z_errors)
    fd = _defect_mask(lattice.boundary, config.x_errors)
    return Syndrome(frozenset(np.flatnonzero(vd).tolist()),
                    frozenset(np.flatnonzero(fd).tolist()))


def config_energy(lattice: ToricLattice, config: ErrorConfig) -> float:
    """Energy above the ground state: 2 per violated stabilizer."""
    return 2.0 * len(syndrome(lattice, config))


def _adjacent_defects(lattice, config, edge, sector) -> int:
    if sector == 0:
        stabs, incidence, bits = lattice.edge_vertices[edge], lattice.star, config.z_errors
    else:
        stabs, incidence, bits = lattice.edge_faces[edge], lattice.boundary, config.x_errors
    return int(sum(np.bitwise_xor.reduce(bits[incidence[s]]) for s in stabs))


def delta_energy(lattice: ToricLattice, config: ErrorConfig, edge: int,
                 error_type: str) -> float:
    """Energy change from flipping one error bit: +4 create, 0 hop, -4 annihilate."""
    if not 0 <= edge < lattice.n:
        raise DomainError(f"edge {edge} outside [0, {lattice.n})")
    d = _adjacent_defects(lattice, config, edge, _sector(error_type))
    return PAIR_ENERGY * (1 - d)


@dataclass(frozen=True)
class ThermalParams:
    beta: float
    attempt_rate: float = 1.0

    def __post_init__(self):
        if not self.beta > 0:
            raise DomainError(f"ThermalParams.beta must be > 0, got {self.beta!r}")
        if not self.attempt_rate > 0:
            raise DomainError(
                f"ThermalParams.attempt_rate must be > 0, got {self.attempt_rate!r}")

    @classmethod
    def from_creation_probability(cls, p: float, attempt_rate: float = 1.0):
        """Parameters with pair-creation acceptance ``exp(-4 beta) = p``."""
        if not 0 < p < 1:
            raise DomainError(f"creation probability must lie in (0, 1), got {p!r}")
        return cls(-math.log(p) / PAIR_ENERGY, attempt_rate)

    @property
    def p_create(self) -> float:
        return math.exp(-PAIR_ENERGY * self.beta)


def acceptance_probability(delta_e: float, beta: float) -> float:
    """Metropolis acceptance ``min(1, exp(-beta dE))``."""
    return 1.0 if delta_e <= 0 else math.exp(-beta * delta_e)


def flip_rate(lattice, config, edge, error_type, params: ThermalParams) -> float:
    return params.attempt_rate * acceptance_probability(
        delta_energy(lattice, config, edge, error_type), params.beta)


class Event(NamedTuple):
    dt: float
    edge: int
    error_type: str
    kind: str


def candidate_classes(lattice: ToricLattice, config: ErrorConfig) -> np.ndarray:
    """Adjacent-defect count (0, 1 or 2) of every candidate ``sector * n + edge``."""
    vd = _defect_mask(lattice.star, config.z_errors)
    fd = _defect_mask(lattice.boundary, config.x_errors)
    return np.concatenate([vd[lattice.edge_vertices].sum(axis=1),
                           fd[lattice.edge_faces].sum(axis=1)])


def step(lattice: ToricLattice, config: ErrorConfig, params: ThermalParams,
         rng: np.random.Generator) -> tuple[Event, ErrorConfig, float]:
    """One event of the continuous-time Metropolis dynamics.

    Every (edge, error type) pair is a candidate with rate
    ``attempt_rate * min(1, exp(-beta dE))``. The waiting time is
    exponential in the total rate and the event is chosen in proportion
    to its rate. Reference implementation, O(n) per call; the batch
    kernels in ``eqmem.kernels`` do the same in O(1).
    """
    n = lattice.n
    classes = candidate_classes(lattice, config)
    rates = params.attempt_rate * np.where(classes == 0, params.p_create, 1.0)
    cum = np.cumsum(rates)
    total = cum[-1]
    dt = -math.log(1.0 - rng.random()) / total
    idx = int(np.searchsorted(cum, rng.random() * total, side="right"))
    idx = min(idx, 2 * n - 1)
    sector, edge = divmod(idx, n)
    et = ERROR_TYPES[sector]
    kind = ("create", "hop", "annihilate")[classes[idx]]
    return Event(dt, edge, et, kind), config.flipped(edge, et), dt


class HomologyClass(NamedTuple):
    z_cycle1: int
    z_cycle2: int
    x_dual1: int
    x_dual2: int

    @property
    def trivial(self) -> bool:
        return not any(self)

    @classmethod
    def from_bits(cls, bits: int) -> "HomologyClass":
        return cls(*((bits >> i) & 1 for i in range(4)))


def homology_class(lattice: ToricLattice, config: ErrorConfig) -> HomologyClass:
    if not syndrome(lattice, config).empty:
        raise DomainError("homology class is defined only for closed error chains")
    z, x = config.z_errors, config.x_errors
    return HomologyClass(
        int(z[lattice.cut_primal[0]].sum() % 2),
        int(z[lattice.cut_primal[1]].sum() % 2),
        int(x[lattice.cut_dual[0]].sum() % 2),
        int(x[lattice.cut_dual[1]].sum() % 2),
    )


def anyon_density(lattice: ToricLattice, config: ErrorConfig) -> float:
    """Defects per stabilizer, ``(|vertex defects| + |face defects|) / (2 k**2)``."""
    return len(syndrome(lattice, config)) / lattice.n


class EquilibriumStats(NamedTuple):
    mean_energy: float
    defect_density: float


def equilibrium_oracle(k: int, beta: float) -> EquilibriumStats:
    """Exact Gibbs averages on the ``k = 2`` torus by enumerating every config.

    Each sector has ``2**8`` error configurations; they are enumerated
    separately and the defect counts added.
    """
    if k != 2:
        raise DomainError("equilibrium_oracle enumerates k = 2 only")
    if not beta >= 0:
        raise DomainError(f"beta must be >= 0, got {beta!r}")
    lattice = build_lattice(2)
    configs = np.array(list(product((0, 1), repeat=lattice.n)), dtype=np.uint8)
    mean_defects = 0.0
    for incidence in (lattice.star, lattice.boundary):
        counts = np.bitwise_xor.reduce(configs[:, incidence], axis=2).sum(axis=1)
        log_w = -beta * 2.0 * counts
        w = np.exp(log_w - log_w.max())
        mean_defects += float(np.dot(w, counts) / w.sum())
    return EquilibriumStats(2.0 * mean_defects, mean_defects / lattice.n)


class DensityEstimate(NamedTuple):
    mean: float
    std_error: float
    trials: int


def sample_defect_density(lattice: ToricLattice, params: ThermalParams, trials: int,
                          t_burn: float, t_run: float, seed: int,
                          workers: int = 1) -> DensityEstimate:
    """Long-run time-averaged defect density, one independent run per trial.

    Each run starts from vacuum, discards ``[0, t_burn)`` and averages the
    defect count over ``[t_burn, t_burn + t_run]``.
    """
    if trials < 2:
        raise DomainError("need at least two trials for an error estimate")
    if not (t_burn >= 0 and t_run > 0):
        raise DomainError("need t_burn >= 0 and t_run > 0")
    adj, inc, cutmask = lattice.kernel_tables()

    def one(i):
        *_, integral = kernels.toric_run(
            adj, inc, cutmask, lattice.n_vertices, params.p_create,
            params.attempt_rate, trial_rng(seed, i), 0, t_burn, t_burn + t_run, False)
        return integral / t_run / lattice.n

    values = np.array(map_trials(one, trials, workers))
    return DensityEstimate(float(values.mean()),
                           float(values.std(ddof=1) / math.sqrt(trials)), trials)


class LifetimeSample(NamedTuple):
    trial: int
    lifetime: float
    censored: bool
    events: int
    homology: HomologyClass


@dataclass
class LifetimeResult:
    k: int
    samples: list[LifetimeSample]

    @property
    def uncensored(self) -> np.ndarray:
        return np.array([s.lifetime for s in self.samples if not s.censored])

    @property
    def censored_count(self) -> int:
        return sum(s.censored for s in self.samples)

    @property
    def mean(self) -> float:
        """Mean over uncensored trials (NaN if none)."""
        u = self.uncensored
        return float(u.mean()) if len(u) else math.nan

    @property
    def std_error(self) -> float:
        u = self.uncensored
        return float(u.std(ddof=1) / math.sqrt(len(u))) if len(u) > 1 else math.nan

    @property
    def mean_lower_bound(self) -> float:
        """Mean over all trials with censored times as lower bounds."""
        return float(np.mean([s.lifetime for s in self.samples]))


def lifetime_run(lattice: ToricLattice, params: ThermalParams, rng: np.random.Generator,
                 max_events: int, trial: int = 0) -> LifetimeSample:
    adj, inc, cutmask = lattice.kernel_tables()
    t, events, stopped, hom, _ = kernels.toric_run(
        adj, inc, cutmask, lattice.n_vertices, params.p_create, params.attempt_rate,
        rng, max_events, 0.0, math.inf, True)
    return LifetimeSample(trial, t, not stopped, events, HomologyClass.from_bits(hom))


def lifetime_experiment(k: int, params: ThermalParams, trials: int, seed: int,
                        max_events: int = 10**6, workers: int = 1) -> LifetimeResult:
    """Logical-memory lifetimes from vacuum.

    A trial ends at the first instant with no defects whose error chains
    carry a nontrivial homology class. Trials that hit ``max_events``
    first are censored; their recorded time is a lower bound.
    """
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    if max_events < 1:
        raise DomainError("max_events must be >= 1")
    lattice = build_lattice(k)
    samples = map_trials(
        lambda i: lifetime_run(lattice, params, trial_rng(seed, i), max_events, i),
        trials, workers)
    return LifetimeResult(lattice.k, samples)


class EscapeEstimate(NamedTuple):
    L: float
    probability: float
    std_error: float
    trials: int


def escape_probability(L: float, trials: int, seed: int, workers: int = 1) -> EscapeEstimate:
    """Fraction of planar walks from a neighbour of the origin that reach
    distance ``L`` before stepping onto the origin."""
    if not L > 0:
        raise DomainError(f"radius must be > 0, got {L!r}")
    if trials < 1:
        raise DomainError(f"trials must be >= 1, got {trials}")
    r2 = float(L) ** 2
    hits = map_trials(lambda i: kernels.walk_escape(r2, trial_rng(seed, i))[0],
                      trials, workers)
    p = sum(hits) / trials
    return EscapeEstimate(L, p, math.sqrt(p * (1 - p) / trials), trials)


class EscapeFit(NamedTuple):
    power_exponent: float
    power_r2: float
    inverse_log_coefficient: float
    inverse_log_r2: float


def _r2(y, yhat):
    y = np.asarray(y)
    ss_tot = np.sum((y - y.mean()) ** 2)
    return float(1 - np.sum((y - yhat) ** 2) / ss_tot) if ss_tot > 0 else 1.0


def escape_scaling_fit(Ls: Sequence[float], probs: Sequence[float]) -> EscapeFit:
    """Compare ``p ~ L**a`` (log-log least squares) with ``p ~ c / ln L``.

    R² values are computed on ``log p`` for the power law and on ``p`` for
    the inverse-log model, each against its own fitted curve.
    """
    L = np.asarray(Ls, dtype=float)
    p = np.asarray(probs, dtype=float)
    if np.any(p <= 0) or np.any(L <= 1):
        raise DomainError("fits need p > 0 and L > 1")
    slope, icpt = np.polyfit(np.log(L), np.log(p), 1)
    power_r2 = _r2(np.log(p), slope * np.log(L) + icpt)
    basis = 1 / np.log(L)
    c = float(np.dot(basis, p) / np.dot(basis, basis))
    return EscapeFit(float(slope), power_r2, c, _r2(p, c * basis))
