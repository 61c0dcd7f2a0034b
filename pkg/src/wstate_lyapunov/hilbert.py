"""Composite Hilbert spaces, embedded operators and excitation-sector reduction.

Basis convention: factors are stored in a fixed order and the *first* factor
varies fastest (little-endian).  The full-space index of a product state
``(n_0, n_1, ..., n_{m-1})`` is ``sum_i n_i * prod_{j<i} dim_j``.

Atomic level encoding in the main network: ``g=0, f=1, e=2``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

ATOM_LEVELS = ("g", "f", "e")
MAIN_ATOMS = ("atom1", "atom2", "atom3")
MAIN_MODES = ("a1", "a2", "b")

HERMITIAN_TOL = 1e-12
SECTOR_TOL = 1e-12


class SectorLeakage(ValueError):
    """Operator couples the reduced excitation sector to states outside it."""


@dataclass(frozen=True)
class Factor:
    """One tensor factor.

    ``levels`` names the basis states of an atomic factor; bosonic modes leave
    it empty and use Fock numbers.  ``excitation`` assigns each basis state its
    contribution to the conserved excitation number.
    """

    label: str
    dim: int
    levels: tuple[str, ...] = ()
    excitation: tuple[int, ...] = ()

    @property
    def is_mode(self) -> bool:
        return not self.levels

    def level_index(self, level: str | int) -> int:
        if self.is_mode:
            n = int(level)
            if not 0 <= n < self.dim:
                raise ValueError(f"photon number {n} outside cutoff of {self.label}")
            return n
        if isinstance(level, int):
            return level
        try:
            return self.levels.index(level)
        except ValueError:
            raise ValueError(f"unknown level {level!r} for {self.label}") from None


def atom_factor(label: str, levels: Sequence[str] = ATOM_LEVELS,
                excitation: Sequence[int] = (0, 1, 1)) -> Factor:
    return Factor(label, len(levels), tuple(levels), tuple(excitation))


def mode_factor(label: str, n_max: int) -> Factor:
    return Factor(label, n_max + 1, (), tuple(range(n_max + 1)))


@dataclass(frozen=True)
class SpaceDescriptor:
    factors: tuple[Factor, ...]
    sector_basis: tuple[int, ...] | None = None

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.dims))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(f.label for f in self.factors)

    @property
    def reduced(self) -> bool:
        return self.sector_basis is not None

    @property
    def dim(self) -> int:
        """Working dimension: sector size when reduced, else total_dim."""
        return len(self.sector_basis) if self.reduced else self.total_dim

    def factor(self, label: str) -> Factor:
        return self.factors[self.position(label)]

    def position(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"no factor named {label!r}") from None

    def index(self, *levels: str | int) -> int:
        """Full-space index of a product basis state (one entry per factor)."""
        if len(levels) != len(self.factors):
            raise ValueError(f"expected {len(self.factors)} labels, got {len(levels)}")
        idx, stride = 0, 1
        for fac, lev in zip(self.factors, levels):
            idx += fac.level_index(lev) * stride
            stride *= fac.dim
        return idx

    def digits(self, index: int) -> tuple[int, ...]:
        out = []
        for d in self.dims:
            out.append(index % d)
            index //= d
        return tuple(out)

    def excitation_of(self, index: int) -> int:
        return sum(f.excitation[n] for f, n in zip(self.factors, self.digits(index)))

    @cached_property
    def _sector_lookup(self) -> dict[int, int]:
        return {full: i for i, full in enumerate(self.sector_basis or ())}

    def ket(self, *levels: str | int) -> np.ndarray:
        """Basis vector in the working representation (reduced if applicable)."""
        full = self.index(*levels)
        v = np.zeros(self.dim, dtype=complex)
        if self.reduced:
            if full not in self._sector_lookup:
                raise SectorLeakage(f"basis state {levels} lies outside the sector")
            v[self._sector_lookup[full]] = 1.0
        else:
            v[full] = 1.0
        return v

    def full(self) -> "SpaceDescriptor":
        return SpaceDescriptor(self.factors)

    def with_sector(self, max_excitation: int = 1) -> "SpaceDescriptor":
        basis = tuple(i for i in range(self.total_dim)
                      if self.excitation_of(i) <= max_excitation)
        return SpaceDescriptor(self.factors, basis)

    # operators ---------------------------------------------------------

    def embed(self, label: str, local: np.ndarray) -> np.ndarray:
        """Full-space matrix of ``local`` acting on factor ``label``."""
        pos = self.position(label)
        out = np.ones((1, 1), dtype=complex)
        # first factor fastest => it is the *last* Kronecker operand
        for i in reversed(range(len(self.factors))):
            m = local if i == pos else np.eye(self.factors[i].dim)
            out = np.kron(out, m)
        return out

    def excitation_operator(self) -> np.ndarray:
        return np.diag([float(self.excitation_of(i)) for i in range(self.total_dim)]).astype(complex)

    def to_working(self, op: np.ndarray) -> np.ndarray:
        """Restrict a full-space matrix to the working representation."""
        if not self.reduced:
            return op
        return reduce_to_sector(op, self)

    def expand_state(self, rho: np.ndarray) -> np.ndarray:
        """Map a sector density matrix (or vector) back into the full space."""
        if not self.reduced:
            return rho
        idx = np.asarray(self.sector_basis)
        if rho.ndim == 1:
            out = np.zeros(self.total_dim, dtype=complex)
            out[idx] = rho
            return out
        out = np.zeros((self.total_dim, self.total_dim), dtype=complex)
        out[np.ix_(idx, idx)] = rho
        return out


@dataclass(frozen=True)
class EmbeddedOperator:
    matrix: np.ndarray = field(repr=False)
    space: SpaceDescriptor
    hermitian: bool = False

    def __post_init__(self):
        n = self.space.dim
        if self.matrix.shape != (n, n):
            raise ValueError(f"matrix shape {self.matrix.shape} does not match dimension {n}")
        if self.hermitian and not np.allclose(self.matrix, self.matrix.conj().T,
                                              atol=HERMITIAN_TOL, rtol=0):
            raise ValueError("operator flagged hermitian is not")

    def dag(self) -> "EmbeddedOperator":
        return EmbeddedOperator(self.matrix.conj().T, self.space, self.hermitian)

    def __matmul__(self, other):
        if isinstance(other, EmbeddedOperator):
            return EmbeddedOperator(self.matrix @ other.matrix, self.space)
        return self.matrix @ other

    def __add__(self, other: "EmbeddedOperator") -> "EmbeddedOperator":
        return EmbeddedOperator(self.matrix + other.matrix, self.space,
                                self.hermitian and other.hermitian)

    def __sub__(self, other: "EmbeddedOperator") -> "EmbeddedOperator":
        return EmbeddedOperator(self.matrix - other.matrix, self.space,
                                self.hermitian and other.hermitian)

    def __mul__(self, c) -> "EmbeddedOperator":
        return EmbeddedOperator(c * self.matrix, self.space,
                                self.hermitian and np.isrealobj(c))

    __rmul__ = __mul__


def build_space(n_max: int = 1, reduce: bool = True) -> SpaceDescriptor:
    """Main network space: (atom1, atom2, atom3, a1, a2, b)."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1 to hold the single-photon dark-state components")
    factors = tuple(atom_factor(a) for a in MAIN_ATOMS) + tuple(mode_factor(m, n_max) for m in MAIN_MODES)
    space = SpaceDescriptor(factors)
    return space.with_sector(1) if reduce else space


def _full_matrix(space: SpaceDescriptor, label: str, local: np.ndarray) -> np.ndarray:
    return space.full().embed(label, local)


def atomic_transition(space: SpaceDescriptor, atom: int | str, to_level: str,
                      from_level: str) -> EmbeddedOperator:
    """``|to><from|`` on one atom.  ``atom`` is 1-based or a factor label."""
    label = f"atom{atom}" if isinstance(atom, int) else atom
    fac = space.factor(label)
    local = np.zeros((fac.dim, fac.dim), dtype=complex)
    local[fac.level_index(to_level), fac.level_index(from_level)] = 1.0
    full = _full_matrix(space, label, local)
    return EmbeddedOperator(space.to_working(full), space, to_level == from_level)


def annihilation(space: SpaceDescriptor, mode: str) -> EmbeddedOperator:
    """Truncated ladder operator of ``mode``.

    In a reduced space the raw lowering operator is sector-preserving (it can
    only lower excitation), so it restricts cleanly.
    """
    fac = space.factor(mode)
    if not fac.is_mode:
        raise ValueError(f"{mode} is not a bosonic mode")
    local = np.diag(np.sqrt(np.arange(1, fac.dim)), 1).astype(complex)
    return EmbeddedOperator(space.to_working(_full_matrix(space, mode, local)), space)


def creation(space: SpaceDescriptor, mode: str) -> EmbeddedOperator:
    """Raising operator of ``mode``; raises SectorLeakage on a reduced space."""
    fac = space.factor(mode)
    local = np.diag(np.sqrt(np.arange(1, fac.dim)), -1).astype(complex)
    return EmbeddedOperator(space.to_working(_full_matrix(space, mode, local)), space)


def reduce_to_sector(op: EmbeddedOperator | np.ndarray, space: SpaceDescriptor,
                     tol: float = SECTOR_TOL) -> np.ndarray:
    """Restriction of a full-space operator to ``space.sector_basis``.

    Raises SectorLeakage when the operator maps sector states outside the
    sector by more than ``tol`` (relative to its norm).
    """
    if space.sector_basis is None:
        raise ValueError("space has no sector basis")
    m = op.matrix if isinstance(op, EmbeddedOperator) else np.asarray(op)
    if m.shape != (space.total_dim, space.total_dim):
        raise ValueError("reduce_to_sector expects a full-space operator")
    idx = np.asarray(space.sector_basis)
    outside = np.ones(space.total_dim, dtype=bool)
    outside[idx] = False
    scale = max(1.0, float(np.abs(m).max(initial=0.0)))
    leak = np.abs(m[np.ix_(outside, idx)]).max(initial=0.0)
    if leak > tol * scale:
        raise SectorLeakage(f"operator leaks out of the excitation sector (|entry| = {leak:.3g})")
    return m[np.ix_(idx, idx)]


def product_basis(space: SpaceDescriptor):
    """Iterate (index, level-tuple) over the full product basis."""
    names = [f.levels if not f.is_mode else tuple(range(f.dim)) for f in space.factors]
    for i in range(space.total_dim):
        yield i, tuple(n[d] for n, d in zip(names, space.digits(i)))


def enumerate_sector(space: SpaceDescriptor, max_excitation: int = 1) -> list[tuple]:
    """Brute-force enumeration of product states with excitation <= max_excitation."""
    counts = []
    for levels in itertools.product(*[range(f.dim) for f in space.factors]):
        n = sum(f.excitation[k] for f, k in zip(space.factors, levels))
        if n <= max_excitation:
            counts.append(levels)
    return counts
