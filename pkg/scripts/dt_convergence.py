"""Step-size study: final fidelity of each generator/law pair at dt, dt/2, dt/4.

Shows where fixed-step RK4 has converged and where it has not (the
compensating law beyond ~150/g, where T_1 -> 0 makes f_1 = -overlap/T_1
ill-conditioned).

    python scripts/dt_convergence.py [--t-end 150]
"""
import argparse

from wstate_lyapunov.control import ControlLaw
from wstate_lyapunov.dynamics import EvolutionSpec, integrate
from wstate_lyapunov.model import ModelParams

CASES = [
    ("closed", ModelParams(), ControlLaw.proportional()),
    ("closed", ModelParams(), ControlLaw.power_constrained()),
    ("closed", ModelParams(), ControlLaw.strength_constrained()),
    ("emission", ModelParams(gamma_atom=0.1), ControlLaw.compensating()),
    ("emission", ModelParams(gamma_atom=0.01), ControlLaw.compensating()),
    ("mode_decay", ModelParams(gamma_mode=0.1), ControlLaw.compensating()),
    ("feedback", ModelParams(gamma_mode=0.1), ControlLaw.proportional(0.5)),
]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--t-end", type=float, default=150.0)
    parser.add_argument("--dt", type=float, default=0.01)
    args = parser.parse_args()
    for kind, params, law in CASES:
        finals, worst = [], 0.0
        for k in range(3):
            dt = args.dt / 2 ** k
            spec = EvolutionSpec(kind=kind, params=params, control_law=law, t_end=args.t_end,
                                 dt=dt, sample_every=int(round(1 / dt)))
            traj = integrate(spec, tol=1.0)
            finals.append(traj.final_fidelity)
            worst = min(worst, traj.min_eig.min())
        diffs = [abs(a - b) for a, b in zip(finals, finals[1:])]
        print(f"{kind:<11}{law.kind:<13} final {finals[-1]:.6f}  "
              f"halving changes {diffs[0]:.1e}, {diffs[1]:.1e}  min eig {worst:.1e}")


if __name__ == "__main__":
    main()
