"""Peak fidelity of the feedback scenario versus the proportional gain K.

The feedback gain is not fixed by the model description; this scan is the basis for the
K used in configs/mode_decay_feedback.yaml.

    python scripts/feedback_gain_scan.py [--gains 0.1,0.2,0.5,1,2]
"""
import argparse

from wstate_lyapunov.control import ControlLaw
from wstate_lyapunov.dynamics import EvolutionSpec, integrate
from wstate_lyapunov.model import ModelParams


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--gains", default="0.1,0.2,0.5,1,2")
    parser.add_argument("--gamma", type=float, default=0.1)
    parser.add_argument("--t-end", type=float, default=300.0)
    args = parser.parse_args()
    etas = (1.0, 0.7, 0.4)
    print("K      " + "  ".join(f"eta={e:<5g}" for e in etas))
    for K in (float(k) for k in args.gains.split(",")):
        peaks = []
        for eta in etas:
            spec = EvolutionSpec(kind="feedback", params=ModelParams(gamma_mode=args.gamma, eta=eta),
                                 control_law=ControlLaw.proportional(K), t_end=args.t_end)
            peaks.append(integrate(spec).peak_fidelity)
        print(f"{K:<6g} " + "  ".join(f"{p:.4f}   " for p in peaks))


if __name__ == "__main__":
    main()
