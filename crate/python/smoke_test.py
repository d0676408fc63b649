"""Smoke test for the edes_wave extension module.

Build and install it first, for example with
`maturin build -o dist` in crates/python followed by `pip install dist/*.whl`.
"""

import math

import edes_wave as ew


def close(a, b, tol):
    assert abs(a - b) <= tol * (1.0 + abs(b)), f"{a} vs {b}"


def main():
    close(ew.phi(8.0), 6.0, 1e-15)
    close(ew.kernel(2.0, 1.0, 0.5), 2.0 * (4.0 + 1.0 - 0.25), 1e-14)

    # constant data: ψ = φ0 / t and ψ = φ1
    p = ew.Problem(3, phi0=ew.SmoothData.constant(3, 1.0))
    close(p.solve([0.3, -0.2, 0.1], 2.0), 0.5, 1e-12)
    p = ew.Problem(1, phi1=ew.SmoothData.constant(1, 4.0))
    close(p.solve([1.0], 3.0), 4.0, 1e-12)

    # f = c: ψ = c t² / 6
    p = ew.Problem(2, source=ew.SourceFunction.constant(2, 1.5))
    close(p.solve([0.0, 0.0], 2.0), 1.5 * 4.0 / 6.0, 1e-9)

    g = ew.SmoothData.gaussian([0.0, 0.0, 0.0], width=1.0)
    close(g.value([1.0, 0.0, 0.0]), math.exp(-1.0), 1e-15)
    v, dv = ew.free_wave(g, [0.5, 0.0, 0.0], 0.0)
    close(v, g.value([0.5, 0.0, 0.0]), 1e-15)
    assert dv == 0.0

    # linearity
    h = ew.SmoothData.gaussian([0.5, 0.0, 0.0], width=0.7, amplitude=-0.5)
    x = [0.2, 0.1, -0.3]
    a = ew.Problem(3, phi1=g + 2.0 * h).solve(x, 0.7)
    b = ew.Problem(3, phi1=g).solve(x, 0.7) + 2.0 * ew.Problem(3, phi1=h).solve(x, 0.7)
    close(a, b, 1e-9)

    values = ew.Problem(3, phi1=g).solve_many([x, [0.0, 0.0, 0.0]], 0.7)
    assert len(values) == 2 and all(math.isfinite(v) for v in values)

    # leapfrog against the representation formula in one dimension
    d1 = ew.SmoothData.gaussian([0.0])
    p = ew.Problem(1, phi1=d1)
    n, h1 = 1000, 0.02
    fd = p.finite_difference(n, h1, 1.0, t0=0.05)
    exact = p.solve_on_grid(n, h1, 1.0)
    num = math.sqrt(sum((u - e) ** 2 for u, e in zip(fd, exact)))
    den = math.sqrt(sum(e * e for e in exact))
    assert num / den < 1e-3, num / den

    # singular source: t ψ → τ(t) f0 = 0 in the log case
    f = ew.SourceFunction.log_singular(ew.SmoothData.constant(1, 1.0))
    dev, _ = ew.Problem(1, source=f).initial_condition_deviations([0.0], [1e-2, 1e-4, 1e-6])
    assert dev[-1] < dev[0] and dev[-1] < 1e-4, dev

    try:
        ew.Problem(4)
    except ValueError:
        pass
    else:
        raise AssertionError("dimension 4 accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
