"""Lyapunov control laws for V = 1 - Tr(rho_T rho).

Every law maps the sensitivities T_k = Tr(-i rho_T [H_k, rho]) (and, for the
compensating law, the dissipative overlap Tr(rho_T L(rho))) to three real
field amplitudes.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)

LAWS = ("proportional", "compensating", "power", "strength", "off")


class NonRealTk(ValueError):
    pass


@dataclass(frozen=True)
class ControlOutput:
    f: tuple[float, float, float]
    T: tuple[float, float, float]
    dissipation_overlap: float = 0.0
    fallback: bool = False
    clamped: bool = False


@dataclass(frozen=True)
class ControlLaw:
    """Tagged control strategy.

    ``kind`` is one of ``proportional``, ``compensating``, ``power``,
    ``strength`` or ``off``; only the parameters relevant to it are read.
    """

    kind: str = "proportional"
    K: float = 0.2
    W_max: float = 0.002
    S: float = 0.038
    epsilon_den: float = 1e-6
    f_cap: float = 10.0
    K_fb: float = 1.0
    epsilon_sign: float = 1e-10

    def __post_init__(self):
        if self.kind not in LAWS:
            raise ValueError(f"unknown control law {self.kind!r}; expected one of {LAWS}")
        for name in ("K", "W_max", "S", "epsilon_den", "f_cap", "K_fb", "epsilon_sign"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")

    @classmethod
    def proportional(cls, K: float = 0.2) -> "ControlLaw":
        return cls("proportional", K=K)

    @classmethod
    def compensating(cls, **kw) -> "ControlLaw":
        return cls("compensating", **kw)

    @classmethod
    def power_constrained(cls, W_max: float = 0.002) -> "ControlLaw":
        return cls("power", W_max=W_max)

    @classmethod
    def strength_constrained(cls, S: float = 0.038) -> "ControlLaw":
        return cls("strength", S=S)

    @classmethod
    def off(cls) -> "ControlLaw":
        return cls("off")

    @property
    def discontinuous(self) -> bool:
        return self.kind in ("power", "strength")

    @property
    def needs_overlap(self) -> bool:
        return self.kind == "compensating"

    def __call__(self, T: Sequence[float], overlap: float = 0.0) -> ControlOutput:
        T = tuple(float(t) for t in T)
        if self.kind == "compensating":
            f, fallback, clamped = compensating_fields(
                T, overlap, self.epsilon_den, self.f_cap, self.K_fb)
            return ControlOutput(f, T, overlap, fallback, clamped)
        return ControlOutput(self.fields(T, overlap), T, overlap)

    def fields(self, T: Sequence[float], overlap: float = 0.0) -> tuple[float, ...]:
        """Field amplitudes only; the integrator's hot path."""
        kind = self.kind
        if kind == "proportional":
            return law_proportional(T, self.K)
        if kind == "power":
            return law_power_constrained(T, self.W_max, self.epsilon_sign)
        if kind == "strength":
            return law_strength_constrained(T, self.S, self.epsilon_sign)
        if kind == "compensating":
            return compensating_fields(T, overlap, self.epsilon_den, self.f_cap, self.K_fb)[0]
        return (0.0, 0.0, 0.0)


def compute_T(rho: np.ndarray, rho_T: np.ndarray, controls: Sequence[np.ndarray],
              tol: float = 1e-10) -> np.ndarray:
    """Sensitivities Tr(-i rho_T [H_k, rho]); raises NonRealTk on a complex residue."""
    vals = np.array([np.trace(-1j * rho_T @ (h @ rho - rho @ h)) for h in controls])
    if np.abs(vals.imag).max(initial=0.0) > tol:
        raise NonRealTk(f"imaginary part {np.abs(vals.imag).max():.3g} in T_k")
    return vals.real


def law_proportional(T: Sequence[float], K: float) -> tuple[float, ...]:
    return tuple(K * t for t in T)


def law_power_constrained(T: Sequence[float], W_max: float,
                          eps: float = 1e-10) -> tuple[float, ...]:
    """Fields on the power shell sum f_k^2 = W_max, parallel to T."""
    norm = math.sqrt(sum(t * t for t in T))
    if norm <= eps:
        return tuple(0.0 for _ in T)
    scale = math.sqrt(W_max) / norm
    return tuple(scale * t for t in T)


def law_strength_constrained(T: Sequence[float], S: float,
                             eps: float = 1e-10) -> tuple[float, ...]:
    return tuple(0.0 if abs(t) <= eps else math.copysign(S, t) for t in T)


def compensating_fields(T: Sequence[float], overlap: float, epsilon_den: float = 1e-6,
                        f_cap: float = 10.0, K_fb: float = 1.0
                        ) -> tuple[tuple[float, float, float], bool, bool]:
    """f_1 cancels the dissipative part of dV/dt; f_2, f_3 equal T_2, T_3.

    Returns (fields, fallback_used, clamped).  Near T_1 = 0 the exact
    cancellation is ill-posed and f_1 falls back to K_fb * T_1.
    """
    t1, t2, t3 = T
    fallback = abs(t1) < epsilon_den
    f1 = K_fb * t1 if fallback else -overlap / t1
    clamped = abs(f1) > f_cap
    if clamped:
        f1 = math.copysign(f_cap, f1)
        log.debug("compensating field clamped at %g", f_cap)
    return (f1, t2, t3), fallback, clamped


def law_compensating(rho: np.ndarray, rho_T: np.ndarray, dissipator,
                     controls: Sequence[np.ndarray], law: ControlLaw | None = None
                     ) -> ControlOutput:
    """Matrix-level entry point: ``dissipator`` is a callable rho -> L(rho)."""
    law = law or ControlLaw.compensating()
    T = compute_T(rho, rho_T, controls)
    overlap = float(np.trace(rho_T @ dissipator(rho)).real)
    return law(T, overlap)
