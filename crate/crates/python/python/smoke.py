"""Smoke test for the krylov extension module: run after `pip install` of
this crate. Exits nonzero on the first failed check."""

import math

import krylov


def main():
    r = krylov.cg_solve([[1.0, 0.0], [0.0, 3.0]], [1.0, 1.0])
    assert r.iterations == 2 and r.converged
    assert abs(r.alphas[0] - 0.5) < 1e-12 and abs(r.betas[0] - 0.25) < 1e-12
    assert abs(r.x[0] - 1.0) < 1e-12 and abs(r.x[1] - 1.0 / 3.0) < 1e-12

    a = krylov.random_spd(10, 100.0, 3)
    b = krylov.random_vector(10, 3)
    assert krylov.equivalence_deviation(a, b) <= 1e-7
    ladder = dict(krylov.correspondence(a, b))
    assert set(ladder) == {"v", "p_bar", "alpha_bar", "sigma", "tau", "l", "delta"}
    assert max(ladder.values()) <= 1e-6

    eigs = sorted([1.0, 4.0, 9.0])
    q = krylov.kantorovich_factor(eigs[0], eigs[-1])
    rows = krylov.ratio_table(krylov.spd_from_spectrum(eigs, 7), krylov.random_vector(3, 7))
    assert all(row.ratio2 <= q + 1e-10 for row in rows)

    sqrt_ok, plain_ok, c12, c23, c13 = krylov.lemma_check(1.0, 2.0, 3.0)
    assert sqrt_ok and plain_ok and abs(c12 - 0.5) < 1e-15 and abs(c13 - 4.0 / 3.0) < 1e-15

    fem = krylov.fem_solve(15, 0.0, "sin-benchmark")
    assert fem.converged
    assert max(abs(u - math.sin(math.pi * x)) for x, u in zip(fem.nodes, fem.u)) < 1e-2
    assert krylov.fem_trace_deviation(31, 5.0) <= 1e-10
    errors = [e for _, e in krylov.fem_refinement(15, 3)]
    assert all(3.5 <= errors[i] / errors[i + 1] <= 4.5 for i in range(len(errors) - 1))

    for bad in (lambda: krylov.fem_solve(0), lambda: krylov.cg_solve([[1.0, 2.0], [2.0, 1.0]], [1.0, 1.0])):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    print("krylov smoke test passed")


if __name__ == "__main__":
    main()
