"""Smoke test for the henon_py extension.

Build and install it first:
    pip install --no-build-isolation -e crates/henon-py
"""

import math

import henon_py as hp


def main():
    lam = hp.doubling_scaling()
    assert abs(lam + 0.3995) < 0.002, lam

    cs = hp.superstable_parameters(8)
    delta = (cs[-2] - cs[-3]) / (cs[-1] - cs[-2])
    assert abs(delta / 4.669 - 1) < 0.01, delta

    m = hp.HenonMap.planar(1.4, 0.01)
    x, y = m([0.1, 0.2])
    assert math.isclose(x, 1.4 - 0.01 - 0.01 * 0.2)
    assert math.isclose(m.jac_det([0.3, -0.1]), 0.01)
    assert hp.HenonMap.from_json(m.to_json()).dims == 2

    c, tower = hp.tune(0.01, 5)
    assert tower.depth == 5 and tower.stopped is None
    levels = tower.summary()
    assert levels[-1]["eps_norm"] < levels[0]["eps_norm"]
    cantor = tower.hierarchy()
    assert len(cantor.sample(4)) == 16
    avg = cantor.average_jacobian(4)
    assert abs(avg["value"] / 0.01 - 1) < 1e-6, avg

    try:
        hp.HenonMap.planar(1.4, -1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative b accepted")

    toy = hp.HenonMap.toy(c, 0.01, 1e-5, 1e-3)
    surface = hp.invariant_surface(toy)
    assert surface.defect < 1e-8, surface.defect
    print(f"ok: lambda={lam:.6f} delta={delta:.4f} c={c:.10f} surface_defect={surface.defect:.2e}")


if __name__ == "__main__":
    main()
