import math
import os
import pathlib

import pytest

import pme

CONFIGS = pathlib.Path(os.environ.get("PME_CONFIGS", pathlib.Path(__file__).resolve().parents[2] / "configs"))


def hat():
    return pme.State1D([0.0, 1.0, 2.0], [1.0])


def test_two_cell_explicit_step():
    cfg = pme.SchemeConfig()
    cfg.kind = pme.SchemeKind.explicit
    cfg.tau = 1e-3
    state, rep = pme.step(hat(), pme.PmeModel(2.0), cfg)
    assert rep.lam[0] == pytest.approx(2.0, abs=1e-12)
    assert rep.v == pytest.approx([-4.0, 0.0, 4.0], abs=1e-12)
    assert rep.drho[0] == pytest.approx(-4.0, abs=1e-12)
    assert state.rho[0] == pytest.approx(1.0 - 4e-3)
    assert state.knots[2] == pytest.approx(2.004)


def test_barenblatt_run_moves_the_boundary():
    p = pme.BarenblattParams(2.0, 1, 1.0)
    r = pme.barenblatt_support_radius(1.0, p)
    assert r == pytest.approx(math.sqrt(12.0))
    s0 = pme.interpolate_1d(pme.uniform_mesh(-r, r, 24), lambda x: pme.barenblatt([x], 1.0, p))
    cfg = pme.SchemeConfig()
    cfg.tau = 1e-2
    cfg.T = 2.0
    final, record = pme.run(s0, pme.PmeModel(2.0), cfg, t0=1.0, record_every=10)
    assert not record["stopped_early"]
    assert record["steps"] == 100
    assert final.knots[-1] == pytest.approx(math.sqrt(12.0) * 2 ** (1 / 3), rel=0.03)
    energies = [row["energy"] for row in record["rows"]]
    assert all(b <= a for a, b in zip(energies, energies[1:]))


def test_disk_step_2d():
    mesh = pme.disk_mesh(1.0, 3)
    assert mesh.num_vertices == 1 + 3 * 3 * 4
    assert mesh.num_cells == 6 * 9
    s = pme.interpolate_2d(mesh, lambda x, y: max(0.0, 1.0 - x * x - y * y))
    cfg = pme.SchemeConfig2D()
    cfg.tau = 1e-3
    nxt, rep = pme.step_2d(s, pme.PmeModel(2.0, 2), cfg)
    assert not rep["tangled"]
    assert rep["energy_rate"] == pytest.approx(-2.0 * rep["dissipation"], rel=1e-10)
    assert pme.total_mass(nxt) > 0.0


def test_invalid_model_raises():
    with pytest.raises(ValueError):
        pme.PmeModel(1.0)


def test_convergence_order():
    assert pme.convergence_order([4e-2, 1e-2], [10, 20]) == pytest.approx([2.0])


def test_command_runs_a_shipped_config(tmp_path):
    rc, log, err = pme.command("waiting-time", CONFIGS / "waiting1d.ini", str(tmp_path))
    assert rc == 0, err
    assert (tmp_path / "diag.csv").exists()
    assert (tmp_path / "summary.json").exists()


def test_command_reports_config_errors(tmp_path):
    bad = tmp_path / "bad.ini"
    bad.write_text("[problem]\nwhat = 1\n")
    rc, _, err = pme.command("run", bad, str(tmp_path / "out"))
    assert rc == 2
    assert "bad.ini:2" in err
    assert not (tmp_path / "out").exists()
