import subprocess
import sys

from backhaul import cli
from backhaul import config as cf


def _write(tmp_path, cfg, name="s.cfg"):
    return str(cf.save(cfg, tmp_path / name))


def small_cutset():
    cfg = cf.default_config("cutset_sweep")
    cfg.trials, cfg.workers = [2], 1
    return cfg


def test_list_and_validate(tmp_path, capsys):
    assert cli.main(["list-scenarios"]) == 0
    out = capsys.readouterr().out
    assert all(k in out for k in cf.KINDS)
    assert cli.main(["validate", _write(tmp_path, small_cutset())]) == 0


def test_config_error_exit_code(tmp_path):
    bad = tmp_path / "bad.cfg"
    bad.write_text("gateway.rho = 2\nscenario.kind = gateway_boundary\n")
    assert cli.main(["validate", str(bad)]) == 2
    assert cli.main(["run", str(bad)]) == 2
    assert cli.main(["validate", str(tmp_path / "missing.cfg")]) == 2


def test_numerical_error_exit_code(monkeypatch, tmp_path):
    from backhaul.errors import NumericalError

    def boom(cfg):
        raise NumericalError("not PD")

    monkeypatch.setattr(cli, "run_scenario", boom)
    assert cli.main(["run", _write(tmp_path, small_cutset())]) == 3


def test_run_writes_files_and_env_override(tmp_path, monkeypatch, capsys):
    path = _write(tmp_path, small_cutset())
    monkeypatch.setenv(cf.OUTPUT_DIR_ENV, str(tmp_path / "env_out"))
    assert cli.main(["run", path]) == 0
    assert (tmp_path / "env_out" / "cutset_sweep_2014.csv").exists()
    assert (tmp_path / "env_out" / "cutset_sweep_2014.meta.json").exists()


def test_seed_report(tmp_path, capsys):
    cfg = cf.default_config("rate_pdf")
    assert cli.main(["seed-report", _write(tmp_path, cfg)]) == 0
    out = capsys.readouterr().out
    assert "psi=64" in out and "psi=256" in out


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "backhaul", "list-scenarios"], capture_output=True, text=True)
    assert out.returncode == 0 and "rate_pdf" in out.stdout
