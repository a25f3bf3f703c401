import math

import numpy as np
import pytest

from backhaul import config as cf
from backhaul import experiments as ex
from backhaul.errors import ConfigError, DomainWarning, ParameterError
from backhaul.output import emit_outputs, render_svg


def small(kind, **kw):
    cfg = cf.default_config(kind)
    cfg.workers = 1
    cfg.geometry.grid_dim = 9
    for k, v in kw.items():
        setattr(cfg, k, v)
    return cfg


def test_fig_reuse_small_schema_and_coincidence(tmp_path):
    cfg = small("fig_reuse", trials=[6])
    cfg.channel.psi = [8]
    res = ex.run_fig_reuse(cfg)
    main = res.tables[""]
    assert main.header == ["pattern", "p", "mean_rate", "std_rate", "trials"]
    p1 = [r for r in main.rows if r[1] == 1]
    assert len(p1) == 3 and len({r[2] for r in p1}) == 1
    assert list(res.counts) == [6] * len(res.points)
    files = emit_outputs(res, tmp_path, ("csv", "svg"))
    assert (tmp_path / "fig_reuse_2014.csv").read_text().splitlines()[0] == "pattern,p,mean_rate,std_rate,trials"
    assert (tmp_path / "fig_reuse_2014.svg") in files


def test_rate_pdf_small_warns_and_quantiles_monotone():
    cfg = small("rate_pdf", trials=[12, 5])
    cfg.channel.psi = [4, 8]
    with pytest.warns(DomainWarning):
        res = ex.run_rate_pdf(cfg)
    for pt in res.points:
        q = pt.quantiles()
        assert np.all(np.diff(q) >= 0)
    assert list(res.counts) == [12, 5]
    hist = res.tables["hist"]
    for psi in (4, 8):
        assert sum(r[3] for r in hist.rows if r[0] == psi) == dict(zip((4, 8), (12, 5)))[psi]


def test_sub_config_reproduces_samples():
    a = small("rate_pdf", trials=[4, 4])
    a.channel.psi = [4, 8]
    b = small("rate_pdf", trials=[4])
    b.channel.psi = [8]
    with pytest.warns(DomainWarning):
        ra, rb = ex.run_rate_pdf(a), ex.run_rate_pdf(b)
    assert np.array_equal(ra.point(psi=8).samples, rb.point(psi=8).samples)


def test_worker_count_does_not_change_results():
    cfg = small("fig_reuse", trials=[3])
    cfg.channel.psi = [4]
    cfg.reuse.p, cfg.reuse.patterns = [1, 4], ["random"]
    serial = ex.run_fig_reuse(cfg)
    cfg.workers = 2
    parallel = ex.run_fig_reuse(cfg)
    assert serial.tables[""].rows == parallel.tables[""].rows


def test_cutset_sweep_small():
    cfg = small("cutset_sweep", trials=[3])
    res = ex.run_cutset_sweep(cfg)
    main = res.tables[""]
    ex_col, had, strip = (main.column(k) for k in ("exact", "hadamard", "strip"))
    for e, h, s in zip(ex_col, had, strip):
        if e is not None:
            assert e <= h <= s
    ratios = [r[5] for r in res.tables["ratio"].rows]
    assert max(ratios) / min(ratios) <= 10


def test_cutset_sweep_cap_skips_with_notice():
    cfg = small("cutset_sweep", trials=[2])
    cfg.bounds.realization_n, cfg.bounds.realization_psi, cfg.bounds.max_size = [64], [4], 100
    res = ex.run_cutset_sweep(cfg)
    assert res.notices and "skipped" in res.notices[0]


def test_cutset_sweep_out_of_domain_formula_blank():
    cfg = small("cutset_sweep", trials=[1])
    cfg.bounds.alpha = 4.5
    res = ex.run_cutset_sweep(cfg)
    assert any("alpha > 2*(2 + log_n(psi))" in n for n in res.notices)


def test_strategy_compare_small():
    cfg = small("strategy_compare")
    cfg.routing.n_grid, cfg.routing.link_trials, cfg.routing.pairings = [16, 64], 2, 2
    cfg.routing.psi_sweep = [8, 16]
    res = ex.run_strategy_compare(cfg)
    rows = res.tables[""].rows
    assert [r[1] for r in rows] == [4, 8]
    assert all(r[4] > 0 and r[6] > 0 for r in rows)
    dcs = [r[5] for r in rows]
    assert dcs[1] / dcs[0] == pytest.approx(2 ** (2 / cfg.routing.long_hop_alpha))


def test_highway_census_small():
    cfg = small("highway_census", trials=[4])
    cfg.routing.n_grid, cfg.routing.pairings = [100], 2
    res = ex.run_highway_census(cfg)
    assert res.tables[""].header == ["seed", "n", "horizontal", "vertical", "failed_slabs"]
    assert len(res.tables[""].rows) == 4
    assert res.tables["load"].rows[0][2] <= 2 * 9


def test_gateway_boundary_and_grid():
    cfg = small("gateway_boundary")
    cfg.gateway.n = [64, 256]
    res = ex.run_gateway_scenarios(cfg)
    for n, pt in zip((64, 256), res.points):
        assert pt.samples.sum() == pytest.approx((1 - cfg.gateway.rho) * n)
        assert pt.label["gateways"] == round(math.sqrt(n))
    grid = small("gateway_grid", trials=[2])
    grid.gateway.n, grid.gateway.beta, grid.routing.pairings = [256], [0.0, 0.5, 1.0], 1
    res = ex.run_gateway_scenarios(grid)
    rows = res.tables[""].rows
    assert rows[0][2:5] == [1, 256, 16]
    assert rows[1][2:5] == [16, 16, 4]
    assert rows[2][2:5] == [256, 1, 1] and rows[2][5] is None


def test_boundary_gateways_on_perimeter():
    gates = ex.boundary_gateways(8, 8)
    i, j = np.divmod(gates, 8)
    assert len(set(gates)) == 8
    assert np.all((i == 0) | (i == 7) | (j == 0) | (j == 7))


def test_invalid_config_rejected_before_running():
    cfg = small("gateway_boundary")
    cfg.gateway.rho = 1.2
    with pytest.raises(ConfigError):
        ex.run_gateway_scenarios(cfg)


def test_emit_outputs_errors(tmp_path):
    empty = ex.SweepResult("x", 1, "n", [], {"": ex.Table(["a"])})
    with pytest.raises(ParameterError):
        emit_outputs(empty, tmp_path)
    assert not list(tmp_path.iterdir())
    blocker = tmp_path / "file"
    blocker.write_text("")
    ok = ex.SweepResult("x", 1, "n", [ex.SweepPoint({}, np.ones(1))], {"": ex.Table(["a"], [[1]])})
    with pytest.raises(OSError):
        emit_outputs(ok, blocker / "sub")


def test_emit_is_byte_stable(tmp_path):
    cfg = small("cutset_sweep", trials=[2])
    a = emit_outputs(ex.run_cutset_sweep(cfg), tmp_path / "a", ("csv", "svg"), cf.dumps(cfg))
    b = emit_outputs(ex.run_cutset_sweep(cfg), tmp_path / "b", ("csv", "svg"), cf.dumps(cfg))
    assert [p.name for p in a] == [p.name for p in b]
    for pa, pb in zip(a, b):
        assert pa.read_bytes() == pb.read_bytes()


def test_svg_renders_hist_and_line():
    line = render_svg({"type": "line", "title": "t", "xlabel": "x", "ylabel": "y",
                       "series": {"a": [(1, 2.0), (2, 3.0)]}})
    assert line.startswith("<svg") and "polyline" in line
    hist = render_svg({"type": "hist", "title": "t", "xlabel": "x", "ylabel": "y",
                       "series": {"a": {"edges": [0, 1, 2], "density": [0.5, 0.5], "markers": {"m": 1.0}}}})
    assert "stroke-dasharray" in hist
