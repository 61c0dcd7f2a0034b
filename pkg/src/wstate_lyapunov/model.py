"""Physical model of the cavity-fiber-cavity network.

Atom 1 sits in cavity ``a1``; atoms 2 and 3 share cavity ``a2``; the fiber
mode ``b`` couples symmetrically to both cavities.  All quantities are in
units of the atom-cavity coupling g.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import expm

from .hilbert import (MAIN_MODES, EmbeddedOperator, SpaceDescriptor,
                      build_space)

ATOM_CAVITY = {1: "a1", 2: "a2", 3: "a2"}


class DegenerateParams(ValueError):
    pass


@dataclass(frozen=True)
class ModelParams:
    g1: float = 1.0
    g2: float = 1.0
    g3: float = 1.0
    omega1: float = 0.1
    omega2: float = 0.1
    omega3: float = 0.1
    delta: float = 0.0
    nu: float = 1.0
    gamma_atom: float = 0.0
    gamma_mode: float = 0.0
    eta: float = 1.0

    def __post_init__(self):
        for name in ("g1", "g2", "g3", "omega1", "omega2", "omega3", "nu",
                     "gamma_atom", "gamma_mode"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0.0 <= self.eta <= 1.0:
            raise ValueError("eta must lie in [0, 1]")

    @classmethod
    def uniform(cls, g: float = 1.0, omega: float = 0.1, **kw) -> "ModelParams":
        return cls(g1=g, g2=g, g3=g, omega1=omega, omega2=omega, omega3=omega, **kw)

    @property
    def g(self) -> tuple[float, float, float]:
        return (self.g1, self.g2, self.g3)

    @property
    def omega(self) -> tuple[float, float, float]:
        return (self.omega1, self.omega2, self.omega3)

    def drive_off(self) -> "ModelParams":
        return replace(self, omega1=0.0, omega2=0.0, omega3=0.0)


@dataclass(frozen=True)
class DarkState:
    d1: float
    d2: float
    d3: float
    d4: float
    d5: float
    norm: float

    @property
    def coefficients(self) -> np.ndarray:
        return np.array([self.d1, self.d2, self.d3, self.d4, self.d5])


# full-space building blocks ------------------------------------------------

def _sigma(full: SpaceDescriptor, atom: int, to: str, frm: str) -> np.ndarray:
    fac = full.factor(f"atom{atom}")
    local = np.zeros((fac.dim, fac.dim), dtype=complex)
    local[fac.level_index(to), fac.level_index(frm)] = 1.0
    return full.embed(f"atom{atom}", local)


def _lower(full: SpaceDescriptor, mode: str) -> np.ndarray:
    dim = full.factor(mode).dim
    return full.embed(mode, np.diag(np.sqrt(np.arange(1, dim)), 1).astype(complex))


def _working(space: SpaceDescriptor, full_matrix: np.ndarray, hermitian=False) -> EmbeddedOperator:
    return EmbeddedOperator(space.to_working(full_matrix), space, hermitian)


def hamiltonian_interaction(space: SpaceDescriptor, params: ModelParams) -> EmbeddedOperator:
    """Interaction-picture Hamiltonian with the phase of the cavity-2 drives flipped."""
    full = space.full()
    up = np.zeros((full.total_dim, full.total_dim), dtype=complex)
    drive_sign = (1.0, -1.0, -1.0)
    for j in (1, 2, 3):
        up += params.g[j - 1] * _sigma(full, j, "e", "g") @ _lower(full, ATOM_CAVITY[j])
        up += drive_sign[j - 1] * params.omega[j - 1] * _sigma(full, j, "e", "f")
    b = _lower(full, "b")
    up += params.nu * b @ (_lower(full, "a1") + _lower(full, "a2")).conj().T
    h = up + up.conj().T
    h += params.delta * sum(_sigma(full, j, "e", "e") for j in (1, 2, 3))
    return _working(space, h, hermitian=True)


def control_hamiltonians(space: SpaceDescriptor) -> list[EmbeddedOperator]:
    full = space.full()
    out = []
    for k in (1, 2, 3):
        m = _sigma(full, k, "e", "f")
        out.append(_working(space, m + m.conj().T, hermitian=True))
    return out


def dark_state(params: ModelParams, space: SpaceDescriptor | None = None
               ) -> tuple[DarkState, np.ndarray]:
    """Zero-eigenvalue state reached from |f,g,g,0,0,0>.

    Returns the coefficients and the vector in ``space`` (main space with
    sector reduction if omitted).
    """
    g1, g2, g3 = params.g
    o1, o2, o3 = params.omega
    p = (g1 * o2 * o3, g2 * o1 * o3, g3 * o1 * o2, o1 * o2 * o3)
    nd = p[0] ** 2 + p[1] ** 2 + p[2] ** 2 + 2 * p[3] ** 2
    if nd <= 0:
        raise DegenerateParams("dark-state normalization vanishes")
    s = np.sqrt(nd)
    ds = DarkState(p[0] / s, p[1] / s, p[2] / s, -p[3] / s, p[3] / s, nd)
    space = space or build_space()
    vec = (ds.d1 * space.ket("f", "g", "g", 0, 0, 0)
           + ds.d2 * space.ket("g", "f", "g", 0, 0, 0)
           + ds.d3 * space.ket("g", "g", "f", 0, 0, 0)
           + ds.d4 * space.ket("g", "g", "g", 1, 0, 0)
           + ds.d5 * space.ket("g", "g", "g", 0, 1, 0))
    return ds, vec


def w_vector(space: SpaceDescriptor) -> np.ndarray:
    return (space.ket("f", "g", "g", 0, 0, 0) + space.ket("g", "f", "g", 0, 0, 0)
            + space.ket("g", "g", "f", 0, 0, 0)) / np.sqrt(3)


def target_state(space: SpaceDescriptor) -> np.ndarray:
    """Density matrix of the three-atom W state with all modes in vacuum."""
    w = w_vector(space)
    return np.outer(w, w.conj())


def dark_state_overlap(omega_over_g: float) -> float:
    """|<D|W>|^2 for equal couplings, from the closed-form coefficients."""
    return 3.0 / (3.0 + 2.0 * omega_over_g ** 2)


def collapse_ops_emission(space: SpaceDescriptor, params: ModelParams
                          ) -> list[tuple[EmbeddedOperator, float]]:
    full = space.full()
    return [(_working(space, _sigma(full, j, lvl, "e")), params.gamma_atom)
            for j in (1, 2, 3) for lvl in ("g", "f")]


def collapse_ops_modes(space: SpaceDescriptor, params: ModelParams
                       ) -> list[tuple[EmbeddedOperator, float]]:
    full = space.full()
    return [(_working(space, _lower(full, m)), params.gamma_mode) for m in MAIN_MODES]


def feedback_unitary(space: SpaceDescriptor) -> np.ndarray:
    """Full-space F = exp(i pi/2 (|f1><g1| + |g1><f1|))."""
    full = space.full()
    hf = (np.pi / 2) * (_sigma(full, 1, "f", "g") + _sigma(full, 1, "g", "f"))
    return expm(1j * hf)


def feedback_jumps(space: SpaceDescriptor, params: ModelParams
                   ) -> list[tuple[EmbeddedOperator, float]]:
    """Jump operators composed with the feedback unitary, F·c for each mode.

    F alone is not excitation-preserving, so the composition is formed in the
    full space before restriction.
    """
    full = space.full()
    f = feedback_unitary(space)
    return [(_working(space, f @ _lower(full, m)), params.gamma_mode) for m in MAIN_MODES]


def photon_number(space: SpaceDescriptor) -> EmbeddedOperator:
    full = space.full()
    n = sum(_lower(full, m).conj().T @ _lower(full, m) for m in MAIN_MODES)
    return _working(space, n, hermitian=True)


@dataclass
class NetworkModel:
    """All operators for one parameter set, in the working representation."""

    space: SpaceDescriptor
    params: ModelParams
    H: np.ndarray = field(repr=False)
    H_off: np.ndarray = field(repr=False)
    controls: list[np.ndarray] = field(repr=False)
    rho_target: np.ndarray = field(repr=False)
    emission: list[tuple[np.ndarray, float]] = field(repr=False)
    mode_decay: list[tuple[np.ndarray, float]] = field(repr=False)
    feedback: list[tuple[np.ndarray, float]] = field(repr=False)
    n_photon: np.ndarray = field(repr=False)

    @classmethod
    def build(cls, params: ModelParams, n_max: int = 1, reduce: bool = True) -> "NetworkModel":
        space = build_space(n_max, reduce)
        mats = lambda ops: [(op.matrix, rate) for op, rate in ops]  # noqa: E731
        return cls(
            space=space,
            params=params,
            H=hamiltonian_interaction(space, params).matrix,
            H_off=hamiltonian_interaction(space, params.drive_off()).matrix,
            controls=[h.matrix for h in control_hamiltonians(space)],
            rho_target=target_state(space),
            emission=mats(collapse_ops_emission(space, params)),
            mode_decay=mats(collapse_ops_modes(space, params)),
            feedback=mats(feedback_jumps(space, params)),
            n_photon=photon_number(space).matrix,
        )

    def initial_state(self) -> np.ndarray:
        v = self.space.ket("f", "g", "g", 0, 0, 0)
        return np.outer(v, v.conj())
