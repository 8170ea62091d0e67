import csv
import json

import numpy as np
import pytest
import yaml

from bccva import RunConfig, SweepSpec
from bccva.cli import main, profile_header
from bccva.runner import ROW_FIELDS, run, run_grid
from bccva.simulation import simulate_paths

from conftest import CONFIGS, load_config


def _read(path):
    return path.read_bytes()


def test_run_writes_outputs_and_is_repeatable(tmp_path, capsys):
    cfg = str(CONFIGS / "hm_payer.yaml")
    for name in ("a", "b"):
        assert main(["run", "--config", cfg, "--paths", "600", "--seed", "5", "--out", str(tmp_path / name)]) == 0
    assert "PAYER" in capsys.readouterr().err
    for f in ("report.json", "profiles.csv"):
        assert _read(tmp_path / "a" / f) == _read(tmp_path / "b" / f)
    assert (tmp_path / "a" / "profiles.png").stat().st_size > 0
    meta = json.loads((tmp_path / "a" / "run_meta.json").read_text())
    assert meta["seed"] == 5 and meta["paths"] == 600 and meta["grid_size"] > 500 and "wall_time_s" in meta
    with open(tmp_path / "a" / "profiles.csv") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == profile_header()
    assert all(len(r) == len(rows[0]) for r in rows)
    report = json.loads((tmp_path / "a" / "report.json").read_text())
    assert report["swap"]["direction"] == "payer"
    assert report["results"][0]["bccva"]["se_bp"] > 0


def test_grid_cli(tmp_path):
    out = tmp_path / "g"
    code = main(["grid", "--config", str(CONFIGS / "hm_payer.yaml"), "--paths", "400",
                 "--sweep", "rho_G=-0.5:0.5:0.5", "--out", str(out), "--no-plots"])
    assert code == 0
    with open(out / "grid.csv") as fh:
        rows = list(csv.DictReader(fh))
    assert tuple(rows[0]) == ROW_FIELDS
    assert len(rows) == 6 and {r["rehypothecation"] for r in rows} == {"true", "false"}


def test_exit_codes(tmp_path, capsys):
    bad = tmp_path / "bad.yaml"
    d = yaml.safe_load((CONFIGS / "hm_payer.yaml").read_text())
    d["recovery"]["rec_C"] = 1.5
    bad.write_text(yaml.safe_dump(d))
    assert main(["run", "--config", str(bad), "--out", str(tmp_path / "x")]) == 2
    assert "recovery.rec_C" in capsys.readouterr().err
    code = main(["grid", "--config", str(CONFIGS / "hm_payer.yaml"), "--paths", "50", "--no-plots",
                 "--sweep", "rho_bar=0.0,0.99", "--out", str(tmp_path / "y")])
    assert code == 3
    assert "rho_bar=0.99" in capsys.readouterr().err
    assert main(["run", "--config", str(tmp_path / "missing.yaml")]) == 2


def test_perfect_config_gives_zero():
    res = run(load_config("hm_payer_perfect.yaml", paths=2000), profiles=False)
    rep = res.reports[0]
    assert abs(rep.bccva.value) <= 3 * rep.bccva.se + 1e-12


def test_uncollateralized_config_is_bcva():
    cfg = load_config("hm_payer_uncollateralized.yaml", paths=2000)
    rep = run(cfg, profiles=False).reports[0]
    assert "uncollateralized_bcva" in rep.special_cases
    paths = simulate_paths(cfg.model(), cfg.grid(), cfg.simulation.seed, np.arange(2000))
    cpty, inv, idx, disc = paths.default_info()
    e = paths.eps[np.arange(2000), idx]
    rec = cfg.recovery
    ccva = np.where(cpty, disc * rec.lgd_C * np.maximum(e, 0), 0).mean()
    cdva = -np.where(inv, disc * rec.lgd_I * np.minimum(e, 0), 0).mean()
    assert rep.ccva.value == pytest.approx(ccva, rel=1e-12)
    assert rep.cdva.value == pytest.approx(cdva, rel=1e-12)


def test_grid_cells_order_invariant():
    cfg = load_config("hm_payer.yaml", paths=300, chunk_size=100)
    fwd = run_grid(cfg, SweepSpec("nu_C", (0.1, 0.3)), rehyp="on")
    back = run_grid(cfg, SweepSpec("nu_C", (0.3, 0.1)), rehyp="on")
    assert fwd.rows[0] == back.rows[1] and fwd.rows[1] == back.rows[0]


def test_delta_sweep_reuses_paths():
    cfg = load_config("hm_payer.yaml", paths=300)
    g = run_grid(cfg, SweepSpec("delta", (1 / 52, 0.5)), rehyp="on")
    # the same path set drives every cell, so default counts coincide
    a, b = g.report(1 / 52, True), g.report(0.5, True)
    assert np.array_equal(a.contributions["ccva_lgd"] > 0, a.contributions["ccva_lgd"] > 0)
    assert a.n_paths == b.n_paths == 300


def test_worker_count_does_not_change_results():
    cfg = load_config("hm_payer.yaml", paths=600, chunk_size=150)
    one = run(cfg, workers=1)
    two = run(cfg, workers=2)
    assert json.dumps(one.to_dict()) == json.dumps(two.to_dict())
    for k in one.profiles:
        np.testing.assert_array_equal(one.profiles[k], two.profiles[k])


def test_paired_ccva_increases_with_delta():
    cfg = load_config("hm_payer.yaml", paths=3000)
    g = run_grid(cfg, SweepSpec("delta", (1 / 52, 1 / 12, 0.25, 0.5)), rehyp="on")
    ccva = [g.report(v, True).ccva.value for v in g.sweep.values]
    assert all(b > a for a, b in zip(ccva, ccva[1:]))


def test_spread_vol_effect_smaller_than_correlation_effect():
    cfg = load_config("hm_payer.yaml", paths=8000)
    rho = run_grid(cfg, SweepSpec("rho_bar", (-0.6, 0.6)), rehyp="off")
    nu = run_grid(cfg, SweepSpec("nu_C", (0.1, 0.3)), rehyp="off")
    d_rho = rho.report(0.6, False).bccva.value - rho.report(-0.6, False).bccva.value
    d_nu = nu.report(0.3, False).bccva.value - nu.report(0.1, False).bccva.value
    assert abs(d_nu) < abs(d_rho)


def test_receiver_bccva_increases_with_rate_spread_correlation():
    from bccva.pricer import mean_se, path_bccva

    cfg = load_config("hm_receiver.yaml", paths=8000)
    g = run_grid(cfg, SweepSpec("rho_bar", (-0.6, 0.0, 0.6)), rehyp="off")
    values = [path_bccva(g.report(v, False).contributions) for v in (-0.6, 0.0, 0.6)]
    for lo, hi in zip(values, values[1:]):
        step = mean_se(hi - lo)
        assert step.value > -3 * step.se
    total = mean_se(values[-1] - values[0])
    assert total.value > 3 * total.se
