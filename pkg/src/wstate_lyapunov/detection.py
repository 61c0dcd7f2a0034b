"""Photon-detection heralding stage.

After the main dynamics reach steady state at ``t0`` every atom is driven
(Raman, large detuning) from |f> to an auxiliary ground level |g'>, emitting a
photon into its cavity (atom 1 -> b1, atoms 2 and 3 -> b2).  The symmetric
cavity mode leaks into a detector mode d; a click projects onto the
detector-occupied subspace.

The auxiliary excited level is already adiabatically eliminated, so each atom
carries only (g, f, g').
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .dynamics import EvolutionSpec, Generator, integrate, write_csv
from .control import ControlLaw
from .hilbert import SpaceDescriptor, atom_factor, mode_factor

DETECTION_LEVELS = ("g", "f", "gp")
DETECTION_COLUMNS = ("t", "fid_gprime_W", "herald_prob", "n_detector")
ATOM_AUX_CAVITY = {1: "b1", 2: "b2", 3: "b2"}


class NonResonantRaman(ValueError):
    pass


class NoClick(RuntimeError):
    """Heralding probability at or below ``p_min``."""

    def __init__(self, prob: float, p_min: float):
        super().__init__(f"no detector click: probability {prob:.3g} <= {p_min:.3g}")
        self.prob = prob


@dataclass(frozen=True)
class DetectionParams:
    omega_prime: float = 1.0
    g_prime: float = 1.0
    delta_l: float = 10.0
    delta_c: float = 10.0
    kappa_prime: float = 0.1
    t0: float = 100.0
    t_detect: float = 50.0
    dt: float = 0.01
    sample_every: int = 100
    p_min: float = 1e-6

    def __post_init__(self):
        if self.delta_l == 0 or self.delta_c == 0:
            raise ValueError("detunings must be nonzero")
        if self.kappa_prime < 0 or self.t_detect <= 0 or self.t0 < 0:
            raise ValueError("kappa_prime >= 0, t_detect > 0 and t0 >= 0 required")

    @property
    def raman_coupling(self) -> float:
        return 0.5 * self.g_prime * self.omega_prime * (1 / self.delta_l + 1 / self.delta_c)

    @property
    def stark_f(self) -> float:
        return self.omega_prime ** 2 / self.delta_l

    @property
    def stark_gp(self) -> float:
        return self.g_prime ** 2 / self.delta_c


def build_detection_space(reduce: bool = True) -> SpaceDescriptor:
    """(atom1, atom2, atom3, b1, b2, d); conserved count = #f + photons."""
    factors = tuple(atom_factor(f"atom{j}", DETECTION_LEVELS, (0, 1, 0)) for j in (1, 2, 3))
    factors += tuple(mode_factor(m, 1) for m in ("b1", "b2", "d"))
    space = SpaceDescriptor(factors)
    return space.with_sector(1) if reduce else space


def _sigma(full: SpaceDescriptor, atom: int, to: str, frm: str) -> np.ndarray:
    local = np.zeros((3, 3), dtype=complex)
    local[DETECTION_LEVELS.index(to), DETECTION_LEVELS.index(frm)] = 1.0
    return full.embed(f"atom{atom}", local)


def _lower(full: SpaceDescriptor, mode: str) -> np.ndarray:
    return full.embed(mode, np.array([[0, 1], [0, 0]], dtype=complex))


def effective_hamiltonian(space: SpaceDescriptor, params: DetectionParams) -> np.ndarray:
    if params.delta_l != params.delta_c:
        raise NonResonantRaman("delta_l must equal delta_c (time-independent Raman coupling)")
    full = space.full()
    h = np.zeros((full.total_dim, full.total_dim), dtype=complex)
    for j in (1, 2, 3):
        b = _lower(full, ATOM_AUX_CAVITY[j])
        h += params.stark_f * _sigma(full, j, "f", "f")
        h += params.stark_gp * _sigma(full, j, "gp", "gp") @ b.conj().T @ b
        hop = params.raman_coupling * _sigma(full, j, "f", "gp") @ b
        h += hop + hop.conj().T
    return space.to_working(h)


def detector_collapse(space: SpaceDescriptor) -> np.ndarray:
    """D = (b1 + b2) d^+ / sqrt(2)."""
    full = space.full()
    d = (_lower(full, "b1") + _lower(full, "b2")) @ _lower(full, "d").conj().T / np.sqrt(2)
    return space.to_working(d)


def number_operator(space: SpaceDescriptor, mode: str) -> np.ndarray:
    full = space.full()
    a = _lower(full, mode)
    return space.to_working(a.conj().T @ a)


def click_projector(space: SpaceDescriptor) -> np.ndarray:
    return number_operator(space, "d")


def gprime_w_projector(space: SpaceDescriptor) -> np.ndarray:
    """|W'><W'| on the atoms (|g'> in place of |f>) times identity on the modes."""
    full = space.full()
    w = np.zeros(27, dtype=complex)
    for j in range(3):
        digits = [0, 0, 0]
        digits[j] = DETECTION_LEVELS.index("gp")
        w[digits[0] + 3 * digits[1] + 9 * digits[2]] = 1 / np.sqrt(3)
    local = np.outer(w, w.conj())
    modes = np.eye(full.total_dim // 27)
    # atoms are the fastest-varying factors, so they are the last Kronecker operand
    return space.to_working(np.kron(modes, local))


def atomic_reduced(rho_full: np.ndarray, atom_dims=(3, 3, 3), mode_dims=None) -> np.ndarray:
    """Trace out every mode of a full-space density matrix (atoms first in order)."""
    na = int(np.prod(atom_dims))
    nm = rho_full.shape[0] // na
    # index = atom_index + na * mode_index
    r = rho_full.reshape(nm, na, nm, na)
    return np.einsum("iaib->ab", r)


def embed_steady_state(rho_main: np.ndarray, main_space: SpaceDescriptor,
                       det_space: SpaceDescriptor | None = None
                       ) -> tuple[np.ndarray, float]:
    """Atomic state of the main network placed into the detection space.

    Cavity/fiber modes are traced out and b1, b2, d start in vacuum.  Weight on
    the main-network excited level |e> has no counterpart here and is dropped;
    the state is renormalized and the discarded weight returned.
    """
    det_space = det_space or build_detection_space()
    atoms = atomic_reduced(main_space.expand_state(rho_main))
    # main levels (g, f, e) -> detection levels (g, f, g'); keep only g and f
    keep = [i for i in range(27) if 2 not in (i % 3, (i // 3) % 3, i // 9)]
    kept = np.zeros((27, 27), dtype=complex)
    kept[np.ix_(keep, keep)] = atoms[np.ix_(keep, keep)]
    total = np.trace(atoms).real
    retained = np.trace(kept).real
    discarded = total - retained
    kept /= retained
    vac = np.zeros((8, 8))
    vac[0, 0] = 1.0
    rho_det_full = np.kron(vac, kept)
    return det_space.to_working(rho_det_full), float(discarded)


def detection_generator(space: SpaceDescriptor, params: DetectionParams) -> Generator:
    H = effective_hamiltonian(space, params)
    return Generator(H, [], gprime_w_projector(space),
                     [(detector_collapse(space), params.kappa_prime)],
                     n_photon=number_operator(space, "d"))


@dataclass
class DetectionResult:
    t: np.ndarray
    fid_gprime_w: np.ndarray
    herald_prob: np.ndarray
    n_detector: np.ndarray
    rho_final: np.ndarray = field(repr=False)
    rho_heralded: np.ndarray | None = field(default=None, repr=False)
    discarded_weight: float = 0.0

    @property
    def post_herald_fidelity(self) -> float:
        return float(self.fid_gprime_w[-1])

    @property
    def final_herald_prob(self) -> float:
        return float(self.herald_prob[-1])

    def rows(self):
        return zip(self.t, self.fid_gprime_w, self.herald_prob, self.n_detector)

    def to_csv(self, path) -> None:
        write_csv(path, DETECTION_COLUMNS, self.rows())


def evolve_detection(rho_det: np.ndarray, params: DetectionParams,
                     space: SpaceDescriptor | None = None, t_start: float = 0.0):
    """Integrate the detection master equation for ``params.t_detect``.

    Returns the Trajectory (with stored states) of the detection run.
    """
    space = space or build_detection_space()
    gen = detection_generator(space, params)
    spec = EvolutionSpec(control_law=ControlLaw.off(), t_end=params.t_detect, dt=params.dt,
                         sample_every=params.sample_every)
    traj = integrate(spec, rho_det, generator=gen, store_states=True)
    traj.t = traj.t + t_start
    return traj


def project_on_detection(rho_det: np.ndarray, space: SpaceDescriptor | None = None,
                         p_min: float = 1e-6) -> tuple[np.ndarray, float]:
    """Lueders projection on a detector click: P rho P / Tr(P rho)."""
    space = space or build_detection_space()
    P = click_projector(space)
    prob = float(np.trace(P @ rho_det).real)
    if prob <= p_min:
        raise NoClick(prob, p_min)
    return P @ rho_det @ P / prob, prob


def idealized_herald(rho_main: np.ndarray, space: SpaceDescriptor,
                     p_min: float = 1e-6) -> tuple[np.ndarray, float]:
    """Project onto span{|fgg>, |gfg>, |ggf>} x vacuum and renormalize."""
    kets = [space.ket(*lv, 0, 0, 0) for lv in (("f", "g", "g"), ("g", "f", "g"), ("g", "g", "f"))]
    P = sum(np.outer(k, k.conj()) for k in kets)
    prob = float(np.trace(P @ rho_main).real)
    if prob <= p_min:
        raise NoClick(prob, p_min)
    return P @ rho_main @ P / prob, prob


def run_detection(rho_main: np.ndarray, main_space: SpaceDescriptor,
                  params: DetectionParams) -> DetectionResult:
    """Embed, evolve, and herald; per-sample columns are the click-conditioned values."""
    space = build_detection_space()
    rho0, discarded = embed_steady_state(rho_main, main_space, space)
    traj = evolve_detection(rho0, params, space, t_start=params.t0)
    P = click_projector(space)
    W = gprime_w_projector(space)
    fid, prob = [], []
    for rho in traj.states:
        p = float(np.trace(P @ rho).real)
        prob.append(p)
        fid.append(float(np.trace(W @ P @ rho @ P).real) / p if p > params.p_min else 0.0)
    heralded, _ = project_on_detection(traj.final_state, space, params.p_min)
    return DetectionResult(traj.t, np.array(fid), np.array(prob), traj.n_photon,
                           traj.final_state, heralded, discarded)
