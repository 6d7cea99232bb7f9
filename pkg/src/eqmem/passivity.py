"""Passivity, ergotropy and tensor powers of finite quantum systems.

A state is passive for ``H`` when no cyclic unitary process lowers its
energy: it commutes with ``H`` and no energy level is more populated than
a lower one. The work a cyclic process can extract (the ergotropy) is
``Tr(rho H)`` minus the energy of the passive rearrangement, which pairs
the largest eigenvalue of ``rho`` with the lowest energy and so on.

Passivity need not survive taking copies. ``tensor_power`` builds
``rho^{(x)n}`` with the summed Hamiltonian, and ``activation_order``
finds the first ``n`` at which a population inversion appears. Only
Gibbs states stay passive for every ``n``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations
from typing import NamedTuple, Optional, Union

import numpy as np
from scipy.special import logsumexp

from eqmem.errors import DomainError, ResourceError

ENERGY_RTOL = 1e-9
POPULATION_RTOL = 1e-9
DEFAULT_BUDGET = 10**6


def _group_levels(energies: np.ndarray, rtol: float) -> np.ndarray:
    """Level index of each slot for sorted ``energies``; close values share a level."""
    if len(energies) == 0:
        return np.zeros(0, dtype=np.int64)
    scale = float(np.max(np.abs(energies)))
    tol = rtol * scale if scale > 0 else 0.0
    breaks = np.diff(energies) > tol
    return np.concatenate([[0], np.cumsum(breaks)])


@dataclass(eq=False)
class EnergySpectrum:
    """Diagonal Hamiltonian: one energy per basis slot, sorted nondecreasing.

    Slots with equal energy (within ``ENERGY_RTOL`` of the largest
    magnitude) form one degenerate level; ``energies`` holds the level
    value for every slot. ``slot_labels`` optionally maps each slot back to
    a flat product-basis index (set by ``tensor_power``).
    """

    energies: np.ndarray
    level_of: np.ndarray
    slot_labels: Optional[np.ndarray] = None

    @classmethod
    def from_energies(cls, energies, rtol: float = ENERGY_RTOL) -> "EnergySpectrum":
        e = np.asarray(energies, dtype=float).ravel()
        if len(e) == 0:
            raise DomainError("spectrum needs at least one level")
        if not np.all(np.isfinite(e)):
            raise DomainError("energies must be finite")
        if np.any(np.diff(e) < 0):
            raise DomainError("energies must be sorted nondecreasing")
        level_of = _group_levels(e, rtol)
        first = np.concatenate([[0], np.flatnonzero(np.diff(level_of)) + 1])
        return cls(e[first][level_of], level_of)

    @property
    def dimension(self) -> int:
        return len(self.energies)

    @property
    def level_energies(self) -> np.ndarray:
        return self.energies[self._level_starts()]

    @property
    def degeneracies(self) -> np.ndarray:
        return np.diff(np.append(self._level_starts(), self.dimension))

    @property
    def levels(self) -> list[tuple[float, np.ndarray]]:
        """``(energy, slot indices)`` per level."""
        starts = np.append(self._level_starts(), self.dimension)
        return [(float(self.energies[a]), np.arange(a, b))
                for a, b in zip(starts[:-1], starts[1:])]

    def _level_starts(self) -> np.ndarray:
        return np.concatenate([[0], np.flatnonzero(np.diff(self.level_of)) + 1])

    def slot(self, index: int) -> tuple[int, int]:
        """``(level j, position mu within the level)`` of a slot."""
        j = int(self.level_of[index])
        return j, int(index - self._level_starts()[j])


@dataclass(eq=False)
class DiagonalState:
    """Populations ``lambda(j, mu)`` in the energy eigenbasis."""

    populations: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.populations, dtype=float).ravel()
        if np.any(p < 0):
            raise DomainError("populations must be nonnegative")
        # allow for rounding in long sums
        if abs(p.sum() - 1.0) > 1e-12 + len(p) * 1e-16:
            raise DomainError(f"populations must sum to 1, got {p.sum()!r}")
        self.populations = p


@dataclass(eq=False)
class GeneralState:
    """Density matrix written in the spectrum's energy eigenbasis."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DomainError("density matrix must be square")
        if not np.allclose(m, m.conj().T, atol=1e-12):
            raise DomainError("density matrix must be Hermitian")
        if abs(np.trace(m).real - 1.0) > 1e-12:
            raise DomainError("density matrix must have unit trace")
        if np.linalg.eigvalsh(m).min() < -1e-10:
            raise DomainError("density matrix must be positive semidefinite")
        self.matrix = m


State = Union[DiagonalState, GeneralState]


class InversionWitness(NamedTuple):
    """Slots ``lower``/``upper`` with ``energy_lower < energy_upper`` but
    ``population_lower < population_upper``."""

    lower: tuple[int, int]
    upper: tuple[int, int]
    energy_lower: float
    energy_upper: float
    population_lower: float
    population_upper: float
    lower_slot: int
    upper_slot: int

    def condition_product(self) -> float:
        """``(e_j - e_k)(lambda_j - lambda_k)``; positive means condition (ii) fails."""
        return ((self.energy_lower - self.energy_upper)
                * (self.population_lower - self.population_upper))


class CommutatorWitness(NamedTuple):
    """Nonzero coherence between two distinct energy levels."""

    level_a: int
    level_b: int
    block_norm: float


class PassivityVerdict(NamedTuple):
    passive: bool
    witness: Union[InversionWitness, CommutatorWitness, None] = None


def _check_dims(spectrum: EnergySpectrum, dim: int):
    if dim != spectrum.dimension:
        raise DomainError(
            f"state dimension {dim} does not match spectrum dimension {spectrum.dimension}")


def gibbs_state(spectrum: EnergySpectrum, beta: float) -> DiagonalState:
    if not beta > 0:
        raise DomainError(f"beta must be > 0, got {beta!r}")
    log_w = -beta * spectrum.energies
    return DiagonalState(np.exp(log_w - logsumexp(log_w)))


def _diagonal_populations(spectrum: EnergySpectrum, state: State, tol: float):
    """Populations in an eigenbasis of ``rho`` adapted to ``H``, or a commutator witness."""
    if isinstance(state, DiagonalState):
        _check_dims(spectrum, len(state.populations))
        return state.populations, None
    rho = state.matrix
    _check_dims(spectrum, rho.shape[0])
    levels = spectrum.levels
    scale = tol * max(np.linalg.norm(rho), 1.0)
    for a, (_, sa) in enumerate(levels):
        for b in range(a + 1, len(levels)):
            norm = float(np.linalg.norm(rho[np.ix_(sa, levels[b][1])]))
            if norm > scale:
                return None, CommutatorWitness(a, b, norm)
    pops = np.empty(spectrum.dimension)
    for _, slots in levels:
        # within a level, pick the basis that diagonalizes rho
        pops[slots] = np.linalg.eigvalsh(rho[np.ix_(slots, slots)])
    return np.clip(pops, 0.0, None), None


def _find_inversion(spectrum: EnergySpectrum, pops: np.ndarray,
                    rtol: float) -> Optional[InversionWitness]:
    starts = spectrum._level_starts()
    if len(starts) < 2:
        return None
    mins = np.minimum.reduceat(pops, starts)
    maxs = np.maximum.reduceat(pops, starts)
    higher_max = np.maximum.accumulate(maxs[::-1])[::-1][1:]
    bad = np.flatnonzero(higher_max > mins[:-1] * (1 + rtol))
    if len(bad) == 0:
        return None
    j = int(bad[0])
    stop = starts[j + 1] if j + 1 < len(starts) else spectrum.dimension
    lo = int(starts[j] + np.argmin(pops[starts[j]:stop]))
    hi = int(stop + np.argmax(pops[stop:]))
    return InversionWitness(
        spectrum.slot(lo), spectrum.slot(hi),
        float(spectrum.energies[lo]), float(spectrum.energies[hi]),
        float(pops[lo]), float(pops[hi]), lo, hi)


def is_passive(spectrum: EnergySpectrum, state: State, tol: float = 1e-10) -> PassivityVerdict:
    """Check commutation with ``H`` and the absence of population inversion.

    ``tol`` bounds the coherence between distinct levels relative to
    ``||rho||``. Populations are compared with relative tolerance
    ``POPULATION_RTOL`` so that rounding inside degenerate Gibbs levels is
    not mistaken for an inversion.
    """
    pops, commutator = _diagonal_populations(spectrum, state, tol)
    if commutator is not None:
        return PassivityVerdict(False, commutator)
    witness = _find_inversion(spectrum, pops, POPULATION_RTOL)
    return PassivityVerdict(witness is None, witness)


def _eigenpopulations(spectrum: EnergySpectrum, state: State):
    """Eigenvalues of ``rho`` and its diagonal in the energy basis."""
    if isinstance(state, DiagonalState):
        _check_dims(spectrum, len(state.populations))
        return state.populations, state.populations
    rho = state.matrix
    _check_dims(spectrum, rho.shape[0])
    return np.clip(np.linalg.eigvalsh(rho), 0.0, None), np.diag(rho).real


def ergotropy(spectrum: EnergySpectrum, state: State) -> float:
    """Maximal work extractable by a cyclic unitary process."""
    r, diag = _eigenpopulations(spectrum, state)
    if isinstance(state, DiagonalState) and _find_inversion(spectrum, r, 0.0) is None:
        # sorting only permutes slots within levels
        return 0.0
    # energies are sorted, so pair them with eigenvalues sorted descending;
    # differencing first makes already-passive states give exactly zero
    return max(float(np.dot(spectrum.energies, diag - np.sort(r)[::-1])), 0.0)


def ergotropy_bruteforce(spectrum: EnergySpectrum, state: State) -> float:
    """Ergotropy by minimizing over all ``d!`` eigenvalue-to-energy assignments."""
    r, diag = _eigenpopulations(spectrum, state)
    e = spectrum.energies
    mean_energy = float(np.dot(diag, e))
    best = min(float(np.dot(r[list(perm)], e)) for perm in permutations(range(len(r))))
    return mean_energy - best


def tensor_power(spectrum: EnergySpectrum, state: DiagonalState, n: int,
                 budget: int = DEFAULT_BUDGET) -> tuple[EnergySpectrum, DiagonalState]:
    """``n`` copies under ``H_1 + ... + H_n``, regrouped into degenerate levels.

    The returned spectrum's ``slot_labels`` give each slot's flat index in
    the row-major product basis (``np.unravel_index(label, (d,) * n)``
    recovers the single-copy slots).
    """
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    d = spectrum.dimension
    _check_dims(spectrum, len(state.populations))
    size = d ** int(n)
    if size > budget:
        raise ResourceError(f"tensor power has {d}^{n} = {size} slots, budget is {budget}")
    energies = np.zeros(1)
    pops = np.ones(1)
    for _ in range(int(n)):
        energies = (energies[:, None] + spectrum.energies[None, :]).ravel()
        pops = (pops[:, None] * state.populations[None, :]).ravel()
    order = np.argsort(energies, kind="stable")
    sorted_e = energies[order]
    level_of = _group_levels(sorted_e, ENERGY_RTOL)
    first = np.concatenate([[0], np.flatnonzero(np.diff(level_of)) + 1])
    out = EnergySpectrum(sorted_e[first][level_of], level_of, order)
    return out, DiagonalState(pops[order])


def is_n_passive(spectrum: EnergySpectrum, state: DiagonalState, n: int,
                 budget: int = DEFAULT_BUDGET) -> PassivityVerdict:
    return is_passive(*tensor_power(spectrum, state, n, budget))


class Activation(NamedTuple):
    """Smallest nonpassive copy number, or ``n is None`` if none up to ``n_max``."""

    n: Optional[int]
    verdict: PassivityVerdict
    n_max: int


def activation_order(spectrum: EnergySpectrum, state: DiagonalState, n_max: int,
                     budget: int = DEFAULT_BUDGET) -> Activation:
    if n_max < 1:
        raise DomainError(f"n_max must be >= 1, got {n_max}")
    verdict = PassivityVerdict(True)
    for n in range(1, n_max + 1):
        verdict = is_n_passive(spectrum, state, n, budget)
        if not verdict.passive:
            return Activation(n, verdict, n_max)
    return Activation(None, verdict, n_max)


def work_per_copy(spectrum: EnergySpectrum, state: DiagonalState, n: int,
                  budget: int = DEFAULT_BUDGET) -> float:
    return ergotropy(*tensor_power(spectrum, state, n, budget)) / n


def passive_rearrangement(spectrum: EnergySpectrum, state: DiagonalState) -> DiagonalState:
    """Populations sorted nonincreasing against the sorted energies."""
    _check_dims(spectrum, len(state.populations))
    return DiagonalState(np.sort(state.populations)[::-1].copy())


def effective_beta(spectrum: EnergySpectrum, state: DiagonalState) -> float:
    """Inverse temperature of a two-level passive state (``inf`` for a pure ground state)."""
    if spectrum.dimension != 2:
        raise DomainError("effective_beta is defined for two-level systems")
    p0, p1 = state.populations
    gap = spectrum.energies[1] - spectrum.energies[0]
    if p1 == 0:
        return math.inf
    return math.log(p0 / p1) / gap if gap > 0 else 0.0
