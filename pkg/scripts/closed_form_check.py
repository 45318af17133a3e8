"""Compare the printed and exact coherence closed forms against the master equation.

For each (n, l) the coherence C(u) is computed three ways: from the printed
closed forms, from the exact forms, and from a Fock-space density matrix
evolved under the Lindblad equation.
"""
import argparse

from circlestates import coherence, oracle
from circlestates.phasespace import ReservoirParams
from circlestates.states import SuperpositionSpec, build_fock_vector

CASES = [(0, 2), (1, 2), (2, 2), (2, 0), (2, 1)]


def fock_coherence(spec, res, u, dim=90):
    rho0 = oracle.FockDensity.from_vector(build_fock_vector(spec, dim))
    rho = oracle.evolve_density(rho0, res, res.time_for_u(u))
    gap0 = oracle.purity(rho0) - oracle.diagonal_purity_fock(rho0)
    return (oracle.purity(rho) - oracle.diagonal_purity_fock(rho)) / gap0


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--u", type=float, default=0.2)
    ap.add_argument("--nbar", type=float, default=1.0)
    ap.add_argument("--beta", type=float, default=3.03)
    args = ap.parse_args(argv)
    res = ReservoirParams(nbar=args.nbar)
    print(f"{'n':>2} {'l':>2} {'printed':>10} {'exact':>10} {'fock':>10}")
    for n, ell in CASES:
        spec = SuperpositionSpec(n, 2 ** (ell + 1), args.beta)
        printed = coherence.coherence_measure(spec, res, u=args.u, form="printed").C
        exact = coherence.coherence_measure(spec, res, u=args.u).C
        print(f"{n:>2} {ell:>2} {printed:10.6f} {exact:10.6f} {fock_coherence(spec, res, args.u):10.6f}")


if __name__ == "__main__":
    main()
