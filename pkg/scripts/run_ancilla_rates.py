#!/usr/bin/env python3
"""First-click rate of the ancilla phase-lock circuit against the
adiabatic-elimination prediction 4 g^2/kappa, across kappa/g."""

import argparse

from bosetraj.ancilla import born_markov_rate_check


def parse_args():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--g-eff", type=float, default=1.0)
    p.add_argument("--kappas", default="5,20,50,200,500")
    p.add_argument("--n-traj", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    return p.parse_args()


def main():
    a = parse_args()
    kappas = [float(x) for x in a.kappas.split(",")]
    points = born_markov_rate_check(a.g_eff, kappas, n_traj=a.n_traj,
                                    seed=a.seed)
    print("kappa,fitted_rate,predicted_rate,relative_error,n_clicks")
    for pt in points:
        print(f"{pt.kappa},{pt.fitted_rate!r},{pt.predicted_rate!r},"
              f"{pt.relative_error!r},{pt.n_clicks}")


if __name__ == "__main__":
    main()
