#!/usr/bin/env python3
"""Smoke test for the willmore_py extension module.

Builds nothing itself; expects the cdylib to exist:

    cargo build --release -p willmore-py
    python3 python/smoke_test.py
"""

import math
import pathlib
import shutil
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def locate_cdylib():
    for profile in ("release", "debug"):
        cand = ROOT / "target" / profile / "libwillmore_py.so"
        if cand.exists():
            return cand
    sys.exit("libwillmore_py.so not found; run `cargo build --release -p willmore-py` first")


def main():
    lib = locate_cdylib()
    stage = tempfile.mkdtemp(prefix="willmore_py_")
    shutil.copy(lib, pathlib.Path(stage) / "willmore_py.so")
    sys.path.insert(0, stage)
    import willmore_py as wf

    print(f"willmore_py {wf.__version__} from {lib}")

    # surface energies and their derivatives
    iso = wf.SurfaceEnergy.isotropic()
    assert abs(iso.gamma(0.0, 0.0) - 1.0) < 1e-15
    assert abs(iso.gamma(1.0, 0.0) - math.sqrt(2.0)) < 1e-15
    g1, g2 = iso.grad(1.0, 0.0)
    assert abs(g1 - 1.0 / math.sqrt(2.0)) < 1e-15 and abs(g2) < 1e-15

    qf = wf.SurfaceEnergy.quadratic_form(2.0, 0.0, 1.0)
    assert abs(qf.gamma(1.0, 1.0) - 2.0) < 1e-15
    (e11, e12), (e21, e22) = qf.hessian(0.0, 0.0)
    assert (e11, e12, e21, e22) == (2.0, 0.0, 0.0, 1.0)

    try:
        wf.SurfaceEnergy.quadratic_form(1.0, 2.0, 1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("indefinite matrix must be rejected")

    # finite-difference cross-check of the gradient
    abs_e = wf.SurfaceEnergy.regularized_abs(0.1)
    h = 1e-6
    fd = (abs_e.gamma(0.3 + h, -0.7) - abs_e.gamma(0.3 - h, -0.7)) / (2 * h)
    assert abs(abs_e.grad(0.3, -0.7)[0] - fd) < 1e-6

    # Wulff shape of the isotropic energy is the unit circle
    pts = iso.wulff_boundary(64)
    assert len(pts) == 64
    assert all(abs(math.hypot(x, y) - 1.0) < 1e-9 for x, y in pts)

    # manufactured solution
    zeta = wf.ZetaParams(r=4.0, n=2, sigma=1.0)
    assert abs(zeta.value(0.0, 0.0, 0.0) - 1.0) < 1e-15
    assert abs(zeta.value(4.0, 1.0, 0.2)) < 1e-15
    assert abs(zeta.dt(0.0, 0.0, 0.5) + math.pi) < 1e-12
    assert abs(zeta.forcing(iso, 0.0, 0.0, 0.5, 1e-3) + math.pi) < 1e-8

    # EOC formula
    assert abs(wf.eoc(4.0, 1.0, 1.0, 0.5) - 2.0) < 1e-14

    # discrete Willmore energy of a dome sampled on a grid
    grid = wf.Grid(-1.0, 1.0, -1.0, 1.0, 16, 16)
    values = []
    for j in range(grid.n2 + 1):
        for i in range(grid.n1 + 1):
            x, y = grid.node(i, j)
            values.append(0.1 * (1.0 - x * x) * (1.0 - y * y))
    energy = wf.willmore_energy_of(grid, iso, values)
    assert energy > 0.0

    # config-driven drivers end to end
    out = pathlib.Path(stage) / "out"
    config = pathlib.Path(stage) / "run.conf"
    config.write_text(
        f"""
[domain]
x_min = -4.0
x_max = 4.0
y_min = -4.0
y_max = 4.0

[grid]
n1 = 8
n2 = 8

[anisotropy]
kind = isotropic

[bc]
kind = dirichlet
dirichlet_preset = mms_zeta

[initial]
preset = mms_zeta

[time]
t_end = 1e-5
tolerance = 1e-7
dt_init = 1e-7
dt_max = 1e-5
snapshot_count = 2

[output]
directory = {out}
"""
    )
    steps = wf.run_evolve(config)
    assert steps >= 1
    assert (out / "energy.csv").exists()
    assert len(list(out.glob("snapshot_*.csv"))) == 3

    wulff_csv = wf.run_wulff(config)
    assert pathlib.Path(wulff_csv).exists()

    print("smoke test passed")


if __name__ == "__main__":
    main()
