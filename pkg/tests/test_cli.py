import csv
import io

import numpy as np
import pytest

from fwmhom.cli import main
from fwmhom.config import ConfigError, load_config
from fwmhom.dipfit import DipData, dip_model
from fwmhom.fock import BeamSplitter


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.reader(io.StringIO(text)))


def test_visibility_defaults(capsys):
    code, out, _ = run(capsys, "visibility")
    assert code == 0
    table = dict(rows(out)[1:])
    assert float(table["v_max"]) == pytest.approx(0.970170, abs=1e-6)
    assert float(table["v_multipair"]) == pytest.approx(0.925561, abs=1e-6)


def test_visibility_zero_n_bar(capsys):
    _, out, _ = run(capsys, "visibility", "--set", "source.n_bar=0")
    table = dict(rows(out)[1:])
    assert float(table["v_raw"]) == pytest.approx(float(table["v_max"]), abs=1e-9)


def test_rates(capsys):
    _, out, _ = run(capsys, "rates")
    header, coupled, raw = rows(out)
    assert float(coupled[header.index("counts_per_60s")]) == pytest.approx(4.443, abs=1e-3)
    _, out, _ = run(
        capsys, "rates", "--set", "pump.rep_rate=1.64e8", "--set", "source.n_bar=0.1",
        "--set", "detectors.eta_s=0.1", "--set", "detectors.eta_i=0.1",
    )
    header, _, raw = rows(out)
    assert float(raw[header.index("rate_per_s")]) == pytest.approx(0.164, rel=1e-9)


def test_energy_check_exit_codes(capsys):
    assert run(capsys, "energy-check", "708", "583", "900")[0] == 0
    code, out, _ = run(capsys, "energy-check", "708", "583", "800")
    assert code == 1
    assert rows(out)[1][0] == "fail"


def test_dip_is_seed_deterministic(capsys, tmp_path):
    args = ["dip", "--set", "scan.delay_steps=5", "--set", "run.pulses=20000",
            "--set", "detectors.eta_s=0.5", "--set", "detectors.eta_i=0.5", "--seed", "7"]
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    assert main(args + ["--out", str(a)]) == 0
    assert main(args + ["--out", str(b)]) == 0
    assert main(args[:-1] + ["8", "--out", str(c)]) == 0
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes() != c.read_bytes()


def test_montecarlo_reports_visibility(capsys):
    code, out, err = run(capsys, "montecarlo", "--set", "run.pulses=50000",
                         "--set", "detectors.eta_s=0.5", "--set", "detectors.eta_i=0.5")
    assert code == 0
    assert len(rows(out)) == 3
    assert "visibility raw" in err


def test_invalid_inputs_exit_2(capsys, tmp_path):
    assert run(capsys, "visibility", "--set", "filters.sigma_ratio=0")[0] == 2
    assert run(capsys, "visibility", "--set", "nosuch.key=1")[0] == 2
    assert run(capsys, "visibility", "--config", str(tmp_path / "missing.ini"))[0] == 2
    bad = tmp_path / "bad.ini"
    bad.write_text("[source]\nn_bar = 0.1\ncolour = blue\n")
    code, _, err = run(capsys, "visibility", "--config", str(bad))
    assert code == 2
    assert "bad.ini:3" in err


def test_config_file_overrides(tmp_path):
    path = tmp_path / "run.ini"
    path.write_text("[source]\nn_bar = 0.01\n[coupler]\nt = 0.54\nr = 0.46\n")
    rc = load_config(path, ["source.statistics=poisson"])
    cfg = rc.experiment()
    assert cfg.source_a.n_bar == 0.01
    assert cfg.source_a.statistics.value == "poisson"
    assert cfg.coupler.transmittance == pytest.approx(0.54)
    with pytest.raises(ConfigError):
        load_config(None, ["source.n_bar"])


def test_show_config_round_trips(capsys, tmp_path):
    _, out, _ = run(capsys, "show-config")
    path = tmp_path / "default.ini"
    path.write_text(out)
    assert load_config(path).values == load_config().values


def test_fit_writes_result_and_residuals(capsys, tmp_path):
    bs = BeamSplitter.from_coefficients(0.54, 0.46)
    delays = np.linspace(-3e-12, 3e-12, 25)
    data = DipData(delays, dip_model(delays, 400.0, 0.88, 5e-13, 0.0, bs))
    path = tmp_path / "scan.csv"
    data.to_csv(path)
    code, out, _ = run(capsys, "fit", str(path))
    assert code == 0
    header, values = rows(out)
    assert float(values[header.index("visibility")]) == pytest.approx(0.88, abs=1e-6)
    assert (tmp_path / "scan.residuals.csv").exists()


def test_fit_bad_file(capsys, tmp_path):
    path = tmp_path / "short.csv"
    path.write_text("0,1\n1,2\n")
    assert run(capsys, "fit", str(path))[0] == 2
