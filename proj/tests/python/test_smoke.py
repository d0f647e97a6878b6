"""Smoke tests for the _fkmc python module.

Runnable directly (python3 test_smoke.py, as ctest does) or under pytest.
Needs PYTHONPATH to include <build>/python.
"""

import math
import os
import sys
import tempfile

import fkmc

SPEC = """
dimension = 1
T = 1.0
D.1.1 = "0.5"
phi = "exp(-x1^2/2)/sqrt(2*3.141592653589793)"
sample_box = [-8, 8]
"""


def test_expression_parse_eval_diff():
    e = fkmc.Expression.parse("2*x1 + exp(-t)", 1)
    assert e.eval([3.0], 0.0) == 7.0
    d = fkmc.Expression.parse("x1^2", 1).differentiate("x1")
    assert d.eval([1.5]) == 3.0
    try:
        fkmc.Expression.parse("x2", 1)
    except ValueError:
        pass
    else:
        raise AssertionError("expected a ParseError")


def test_problem_roundtrip():
    p = fkmc.Problem.parse(SPEC)
    p.validate()
    assert p.dimension == 1
    assert p.horizon == 1.0
    assert p.drift([0.3]) == [0.0]
    assert abs(p.diffusion_factor([0.0])[0][0] - 1.0) < 1e-15


def test_solve_point_normalization():
    p = fkmc.Problem.parse('dimension = 1\nT = 1.0\nD.1.1 = "0.5"\nphi = "1"\nsample_box = [-4, 4]\n')
    est = fkmc.solve_point(p, [0.0], n=1000, dt=0.1, seed=3)
    assert est.value == 1.0
    assert est.se == 0.0


def test_gaussian_benchmark():
    p = fkmc.Problem.parse(SPEC)
    est = fkmc.solve_point(p, [0.0], n=20000, dt=0.01, seed=1, workers=2)
    oracle = fkmc.gaussian_oracle(0.5, 1.0, 0.0, 1.0)
    assert abs(oracle - 1.0 / math.sqrt(4 * math.pi)) < 1e-15
    assert abs(est.value - oracle) <= 3.5 * est.se
    assert est.n_faulted == 0


def test_endpoint_reuse():
    p = fkmc.Problem.parse(SPEC)
    seeds = dict(n=2000, dt=0.05, seed=11)
    direct = fkmc.solve_point(p, [0.0], **seeds)
    eps = fkmc.trace_endpoints(p, [0.0], **seeds)
    phi = fkmc.Expression.parse("exp(-x1^2/2)/sqrt(2*3.141592653589793)", 1)
    replay = fkmc.evaluate_with_endpoints(eps, phi)
    assert replay.value == direct.value
    assert replay.se == direct.se

    with tempfile.TemporaryDirectory() as d:
        path = os.path.join(d, "cache.fkec")
        eps.save(path)
        loaded = fkmc.EndpointSet.load(path)
        again = fkmc.evaluate_with_endpoints(loaded, phi)
        assert again.value == direct.value


def test_quadratic_variation():
    rep = fkmc.quadratic_variation_experiment(tau=1.0, n=100, m=500, seed=9)
    assert rep["verdict"] is True
    assert len(rep["rows"]) == 2


def test_forward_and_fd():
    p = fkmc.Problem.parse(SPEC)
    binned = fkmc.solve_forward(p, -8, 8, -5, 5, bins=20, n=50000, dt=0.05, seed=21)
    assert binned.bins == 20
    center = binned.estimate[10]
    assert abs(center - 0.282) < 0.05

    grid = fkmc.fd_solve(p, [(-8.0, 8.0)], [401], 200)
    assert abs(grid.value([0.0]) - 1.0 / math.sqrt(4 * math.pi)) < 1e-3


def main():
    tests = [(name, fn) for name, fn in sorted(globals().items()) if name.startswith("test_")]
    for name, fn in tests:
        fn()
        print(f"ok {name}")
    print(f"{len(tests)} python smoke tests passed")


if __name__ == "__main__":
    sys.exit(main())
