"""Closed and open-system evolution under state-feedback Lyapunov control.

Density matrices are integrated with classical fixed-step RK4.  The control
fields are recomputed from the stage state at every RK4 stage.

Small working spaces (the 10-state excitation sector) are propagated as
vectorized density matrices against a precomputed Liouvillian; larger ones
fall back to matrix products.  Both backends are checked against the plain
``rhs_*`` functions below.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import sparse

from . import _kernels
from .control import ControlLaw
from .model import ModelParams, NetworkModel

log = logging.getLogger(__name__)

KINDS = ("closed", "emission", "mode_decay", "feedback")
TRAJECTORY_COLUMNS = ("t", "fidelity", "V", "f1", "f2", "f3", "trace_err", "min_eig", "n_photon")
LIOUVILLE_MAX_DIM = 24

Jump = tuple[np.ndarray, float]


class StateInvalid(RuntimeError):
    def __init__(self, t: float, trace_err: float, min_eig: float):
        super().__init__(f"invalid state at t={t:g}: trace error {trace_err:.3g}, "
                         f"min eigenvalue {min_eig:.3g} (reduce dt)")
        self.t = t
        self.trace_err = trace_err
        self.min_eig = min_eig


# plain right-hand sides ----------------------------------------------------

def commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def rhs_closed(rho: np.ndarray, H: np.ndarray, f: Sequence[float] = (),
               controls: Sequence[np.ndarray] = ()) -> np.ndarray:
    h = H + sum(fk * hk for fk, hk in zip(f, controls))
    return -1j * commutator(h, rho)


def dissipator(rho: np.ndarray, collapse: Sequence[Jump]) -> np.ndarray:
    out = np.zeros_like(rho, dtype=complex)
    for c, rate in collapse:
        cd = c.conj().T
        out += rate * (c @ rho @ cd - 0.5 * (rho @ cd @ c + cd @ c @ rho))
    return out


def rhs_lindblad(rho: np.ndarray, H: np.ndarray, collapse: Sequence[Jump]) -> np.ndarray:
    return -1j * commutator(H, rho) + dissipator(rho, collapse)


def feedback_dissipator(rho: np.ndarray, collapse: Sequence[Jump],
                        feedback_jumps: Sequence[Jump]) -> np.ndarray:
    """Jump term applies F after each detected loss; decay term is unchanged."""
    out = np.zeros_like(rho, dtype=complex)
    for (c, rate), (j, _) in zip(collapse, feedback_jumps):
        cd = c.conj().T
        out += rate * (j @ rho @ j.conj().T - 0.5 * (rho @ cd @ c + cd @ c @ rho))
    return out


def rhs_feedback(rho: np.ndarray, H: np.ndarray, collapse: Sequence[Jump],
                 feedback_jumps: Sequence[Jump], eta: float) -> np.ndarray:
    """``feedback_jumps`` are the collapse operators pre-multiplied by F."""
    return (-1j * commutator(H, rho)
            + eta * feedback_dissipator(rho, collapse, feedback_jumps)
            + (1 - eta) * dissipator(rho, collapse))


# generator -----------------------------------------------------------------

def _vec_functional(op: np.ndarray) -> np.ndarray:
    """Row vector c with c @ rho.ravel() == Tr(op @ rho)."""
    return op.T.reshape(-1)


class Generator:
    """Linear master-equation generator plus the functionals the laws need.

    ``jumps`` are weighted jump operators (J, w) contributing
    w (J rho J^+ - 1/2 {J^+ J, rho}).
    """

    def __init__(self, H: np.ndarray, controls: Sequence[np.ndarray], rho_target: np.ndarray,
                 jumps: Sequence[Jump] = (), H_off: np.ndarray | None = None,
                 n_photon: np.ndarray | None = None, backend: str | None = None):
        n = H.shape[0]
        self.dim = n
        self.H = H
        self.H_off = H if H_off is None else H_off
        self.controls = [np.asarray(h, dtype=complex) for h in controls]
        self.rho_target = rho_target
        self.jumps = [(np.asarray(j, dtype=complex), float(w)) for j, w in jumps if w != 0]
        self.n_photon = n_photon
        self.backend = backend or ("liouville" if n <= LIOUVILLE_MAX_DIM else "matrix")

        decay = sum((w * j.conj().T @ j for j, w in self.jumps), np.zeros((n, n), complex))
        self._decay = decay
        # functionals: T_k, dissipative overlap Tr(rho_T L(rho)), fidelity
        if len(self.controls) > 3:
            raise ValueError("at most three control Hamiltonians")
        self._T_rows = np.zeros((3, n * n), complex)
        for k, h in enumerate(self.controls):
            self._T_rows[k] = _vec_functional(-1j * commutator(rho_target, h))
        self._overlap_row = _vec_functional(self._adjoint_dissipator(rho_target))
        self._fid_row = _vec_functional(rho_target)
        if self.backend == "liouville":
            self._stack = self._build_stack(self.H, self.controls)
            self._stack_off = self._build_stack(self.H_off, [])
            self._csr = self._build_csr()
        elif self.backend != "matrix":
            raise ValueError(f"unknown backend {self.backend!r}")

    @classmethod
    def from_model(cls, model: NetworkModel, kind: str, **kw) -> "Generator":
        if kind not in KINDS:
            raise ValueError(f"unknown generator kind {kind!r}; expected one of {KINDS}")
        return cls(model.H, model.controls, model.rho_target,
                   jumps_for(model, kind), H_off=model.H_off,
                   n_photon=model.n_photon, **kw)

    def _adjoint_dissipator(self, x: np.ndarray) -> np.ndarray:
        out = -0.5 * (self._decay @ x + x @ self._decay)
        for j, w in self.jumps:
            out += w * j.conj().T @ x @ j
        return out

    def _superop(self, H: np.ndarray, with_jumps: bool) -> np.ndarray:
        n = self.dim
        eye = np.eye(n)
        heff = H - 0.5j * self._decay if with_jumps else H
        s = -1j * (np.kron(heff, eye) - np.kron(eye, heff.conj()))
        if with_jumps:
            for j, w in self.jumps:
                s += w * np.kron(j, j.conj())
        return s

    def _build_stack(self, H, controls) -> np.ndarray:
        n2 = self.dim ** 2
        blocks = [self._superop(H, True)]
        blocks += [self._superop(h, False) for h in controls]
        blocks += [np.zeros((n2, n2), complex)] * (3 - len(controls))
        rows = [self._T_rows, self._overlap_row[None], self._fid_row[None]]
        return np.vstack(blocks + rows)

    def _build_csr(self) -> tuple:
        n2 = self.dim ** 2

        def csr(m):
            c = sparse.csr_matrix(m)
            c.eliminate_zeros()
            return c.indptr.astype(np.int64), c.indices.astype(np.int64), c.data.astype(complex)

        rows = np.ascontiguousarray(self._stack[4 * n2:])
        return (*csr(self._stack[:n2]), *csr(self._stack_off[:n2]),
                *csr(self._stack[n2:4 * n2]), rows)

    def _matrix_kernel_args(self) -> tuple:
        """CSR operator blocks for the compiled matrix-form loop."""
        n = self.dim

        def csr(m):
            c = sparse.csr_matrix(m, dtype=complex)
            c.eliminate_zeros()
            return c.indptr.astype(np.int64), c.indices.astype(np.int64), c.data

        ctrl = [np.asarray(h) for h in self.controls]
        ctrl += [np.zeros((n, n), complex)] * (3 - len(ctrl))
        if self.jumps:
            jumps = csr(sparse.vstack([sparse.csr_matrix(j) for j, _ in self.jumps]))
        else:
            jumps = (np.zeros(1, np.int64), np.zeros(0, np.int64), np.zeros(0, complex))
        weights = np.array([w for _, w in self.jumps], dtype=float)
        frows = csr(np.vstack([self._T_rows, self._overlap_row[None], self._fid_row[None]]))
        return (csr(self.H - 0.5j * self._decay), csr(self.H_off - 0.5j * self._decay),
                csr(np.vstack(ctrl)), jumps, weights, frows)

    # public helpers on density matrices
    def derivative(self, rho: np.ndarray, f: Sequence[float] = (0.0, 0.0, 0.0),
                   off: bool = False) -> np.ndarray:
        H = self.H_off if off else self.H
        if not off:
            H = H + sum(fk * hk for fk, hk in zip(f, self.controls))
        heff = H - 0.5j * self._decay
        out = -1j * (heff @ rho - rho @ heff.conj().T)
        for j, w in self.jumps:
            out += w * j @ rho @ j.conj().T
        return out

    def sensitivities(self, rho: np.ndarray) -> np.ndarray:
        return (self._T_rows @ rho.reshape(-1)).real

    def dissipation_overlap(self, rho: np.ndarray) -> float:
        return float((self._overlap_row @ rho.reshape(-1)).real)

    def fidelity(self, rho: np.ndarray) -> float:
        return float((self._fid_row @ rho.reshape(-1)).real)

    def drift(self, rho: np.ndarray) -> float:
        """-Tr(-i rho_T [H, rho]): the uncontrolled part of dV/dt."""
        return float(-np.trace(-1j * self.rho_target @ commutator(self.H, rho)).real)

    def stepper(self, law: ControlLaw):
        """Return ``deriv(x, off, f=None) -> (dx, fidelity, fields)`` on flattened states.

        Passing ``f`` holds the fields instead of evaluating the law.
        """
        n2 = self.dim ** 2
        fields = law.fields
        zero = (0.0, 0.0, 0.0)
        if self.backend == "liouville":
            stack, stack_off = self._stack, self._stack_off
            i_rows = 4 * n2

            def deriv(x, off, f=None):
                y = (stack_off if off else stack) @ x
                fid = y[i_rows + 4].real
                if off:
                    return y[:n2], fid, zero
                if f is None:
                    T = y[i_rows:i_rows + 3].real
                    f = fields((T[0], T[1], T[2]), y[i_rows + 3].real)
                f1, f2, f3 = f
                dx = y[:n2] + f1 * y[n2:2 * n2] + f2 * y[2 * n2:3 * n2] + f3 * y[3 * n2:i_rows]
                return dx, fid, f
            return deriv

        n = self.dim
        rows = np.vstack([self._T_rows, self._overlap_row[None], self._fid_row[None]])
        # sparse operators; rho stays Hermitian, so rho A^+ = (A rho)^+
        csr = sparse.csr_matrix
        heff_on = csr(self.H - 0.5j * self._decay)
        heff_off = csr(self.H_off - 0.5j * self._decay)
        ctrl = [csr(h) for h in self.controls]
        jumps = [(csr(j), w) for j, w in self.jumps]

        def deriv(x, off, f=None):
            rho = x.reshape(n, n)
            y = rows @ x
            if off:
                a, f = heff_off @ rho, zero
            else:
                if f is None:
                    T = y[:3].real
                    f = fields((T[0], T[1], T[2]), y[3].real)
                a = heff_on @ rho
                for fk, hk in zip(f, ctrl):
                    if fk:
                        a += fk * (hk @ rho)
            out = -1j * (a - a.conj().T)
            for j, w in jumps:
                out += w * (j @ (j @ rho).conj().T)
            return out.reshape(-1), y[4].real, f
        return deriv


def jumps_for(model: NetworkModel, kind: str) -> list[Jump]:
    if kind == "closed":
        return []
    if kind == "emission":
        return list(model.emission)
    if kind == "mode_decay":
        return list(model.mode_decay)
    eta = model.params.eta
    return ([(j, eta * r) for j, r in model.feedback]
            + [(c, (1 - eta) * r) for c, r in model.mode_decay])


# evolution -----------------------------------------------------------------

@dataclass(frozen=True)
class EvolutionSpec:
    kind: str = "closed"
    params: ModelParams = field(default_factory=ModelParams)
    control_law: ControlLaw = field(default_factory=ControlLaw)
    t_end: float = 1000.0
    dt: float = 0.01
    sample_every: int = 100
    switch_off_at_peak: bool = False
    peak_margin: float = 1e-4
    peak_arm: float = 0.5
    field_update: str = "auto"
    n_max: int = 1
    reduce: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown generator kind {self.kind!r}; expected one of {KINDS}")
        if self.dt <= 0:
            raise ValueError("dt must be > 0")
        if self.t_end < self.dt:
            raise ValueError("t_end must be >= dt")
        if self.sample_every < 1:
            raise ValueError("sample_every must be >= 1")
        if self.field_update not in ("auto", "stage", "step"):
            raise ValueError("field_update must be 'auto', 'stage' or 'step'")

    @property
    def holds_fields(self) -> bool:
        """Whether fields are held over each RK4 step instead of re-evaluated per stage.

        ``auto`` holds them for the discontinuous (power/strength) laws, whose
        per-stage re-evaluation chatters and breaks positivity.
        """
        if self.field_update == "auto":
            return self.control_law.discontinuous
        return self.field_update == "step"

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass
class Trajectory:
    t: np.ndarray
    fidelity: np.ndarray
    f: np.ndarray
    T: np.ndarray
    trace_err: np.ndarray
    min_eig: np.ndarray
    n_photon: np.ndarray
    drift: np.ndarray
    overlap: np.ndarray
    final_state: np.ndarray = field(repr=False)
    switch_off_time: float | None = None
    states: list[np.ndarray] | None = field(default=None, repr=False)

    @property
    def V(self) -> np.ndarray:
        return 1.0 - self.fidelity

    @property
    def final_fidelity(self) -> float:
        return float(self.fidelity[-1])

    @property
    def peak_fidelity(self) -> float:
        return float(self.fidelity.max())

    @property
    def time_to_peak(self) -> float:
        return float(self.t[int(np.argmax(self.fidelity))])

    def time_to(self, level: float) -> float | None:
        hit = np.nonzero(self.fidelity >= level)[0]
        return float(self.t[hit[0]]) if hit.size else None

    def rows(self):
        for i in range(len(self.t)):
            yield (self.t[i], self.fidelity[i], 1.0 - self.fidelity[i], *self.f[i],
                   self.trace_err[i], self.min_eig[i], self.n_photon[i])

    def to_csv(self, path) -> None:
        write_csv(path, TRAJECTORY_COLUMNS, self.rows())


def write_csv(path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([f"{float(v):.12g}" for v in row])


def state_diagnostics(rho: np.ndarray) -> tuple[float, float]:
    """(|Tr rho - 1|, smallest eigenvalue of the Hermitian part)."""
    herm = 0.5 * (rho + rho.conj().T)
    return abs(np.trace(rho).real - 1.0), float(np.linalg.eigvalsh(herm)[0])


def integrate(spec: EvolutionSpec, rho0: np.ndarray | None = None,
              model: NetworkModel | None = None, generator: Generator | None = None,
              store_states: bool = False, tol: float = 1e-6,
              engine: str = "auto") -> Trajectory:
    """Fixed-step RK4 of the controlled master equation.

    The law is re-evaluated at every stage, or once per step when
    ``spec.holds_fields``.  A sample is taken every ``spec.sample_every``
    steps and at the end; a sample with trace error or negative eigenvalue
    beyond ``tol`` raises StateInvalid.

    ``engine="python"`` forces the numpy stepper (the reference path);
    ``"auto"``/``"compiled"`` use the numba loop of the generator's backend.
    """
    if generator is None:
        model = model or NetworkModel.build(spec.params, spec.n_max, spec.reduce)
        generator = Generator.from_model(model, spec.kind)
    if rho0 is None:
        if model is None:
            raise ValueError("rho0 is required when only a generator is given")
        rho0 = model.initial_state()
    gen, law = generator, spec.control_law
    n = gen.dim
    deriv = gen.stepper(law)
    dt = spec.dt
    x = np.array(rho0, dtype=complex).reshape(-1)

    cols: dict[str, list] = {k: [] for k in ("t", "fid", "f", "T", "tr", "eig", "nph", "drift", "ov")}
    states = [] if store_states else None
    off = False
    switch_time = None
    best = -np.inf

    def sample(step: int, x: np.ndarray):
        t = step * dt
        rho = x.reshape(n, n)
        tr_err, min_eig = state_diagnostics(rho)
        if tr_err > tol or min_eig < -tol:
            raise StateInvalid(t, tr_err, min_eig)
        T = gen.sensitivities(rho)
        ov = gen.dissipation_overlap(rho)
        f = (0.0, 0.0, 0.0) if off else law.fields(tuple(T), ov)
        cols["t"].append(t)
        cols["fid"].append(gen.fidelity(rho))
        cols["f"].append(f)
        cols["T"].append(T)
        cols["tr"].append(tr_err)
        cols["eig"].append(min_eig)
        cols["nph"].append(float(np.trace(gen.n_photon @ rho).real) if gen.n_photon is not None else 0.0)
        cols["drift"].append(gen.drift(rho))
        cols["ov"].append(ov)
        if states is not None:
            states.append(rho.copy())

    sample(0, x)
    n_steps = spec.n_steps
    hold = spec.holds_fields
    if engine not in ("auto", "python", "compiled"):
        raise ValueError(f"unknown engine {engine!r}")
    if engine != "python":
        code = _kernels.LAW_CODES[law.kind]
        p = _kernels.law_params(law)
        if gen.backend == "liouville":
            def advance(x, chunk, off, best, ops=gen._csr):
                return _kernels.advance(x, chunk, dt, off, best, spec.peak_margin, spec.peak_arm,
                                        spec.switch_off_at_peak, hold, *ops, code, p)
        else:
            def advance(x, chunk, off, best, ops=gen._matrix_kernel_args()):
                return _kernels.advance_matrix(x, n, chunk, dt, off, best, spec.peak_margin,
                                               spec.peak_arm, spec.switch_off_at_peak, hold,
                                               *ops, code, p)
        step = 0
        while step < n_steps:
            chunk = min(spec.sample_every - step % spec.sample_every, n_steps - step)
            x, off, best, sw = advance(x, chunk, off, best)
            if sw >= 0:
                switch_time = (step + sw) * dt
                log.info("fields switched off at t=%g (peak %.6f)", switch_time, best)
            step += chunk
            sample(step, x)
        n_steps = 0
    for step in range(1, n_steps + 1):
        k1, fid, f = deriv(x, off)
        if spec.switch_off_at_peak and not off:
            best = max(best, fid)
            if best >= spec.peak_arm and fid < best - spec.peak_margin:
                off = True
                switch_time = (step - 1) * dt
                log.info("fields switched off at t=%g (peak %.6f)", switch_time, best)
                k1, _, f = deriv(x, off)
        held = f if hold else None
        k2 = deriv(x + 0.5 * dt * k1, off, held)[0]
        k3 = deriv(x + 0.5 * dt * k2, off, held)[0]
        k4 = deriv(x + dt * k3, off, held)[0]
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if step % spec.sample_every == 0 or step == n_steps:
            sample(step, x)

    return Trajectory(
        t=np.array(cols["t"]), fidelity=np.array(cols["fid"]),
        f=np.array(cols["f"], dtype=float).reshape(-1, 3),
        T=np.array(cols["T"], dtype=float).reshape(len(cols["t"]), -1),
        trace_err=np.array(cols["tr"]), min_eig=np.array(cols["eig"]),
        n_photon=np.array(cols["nph"]), drift=np.array(cols["drift"]),
        overlap=np.array(cols["ov"]), final_state=x.reshape(n, n),
        switch_off_time=switch_time, states=states)
