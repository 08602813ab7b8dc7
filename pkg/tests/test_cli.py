import csv
import glob
import os
import re

import pytest

from lbm_taylor.algebra import QSqrt3
from lbm_taylor.cli import main
from lbm_taylor.config import ConfigError, config_hash, load_config, parse_config, parse_scalar, serialize
from lbm_taylor.schemes import make_model
from lbm_taylor.taylor import expand

CONFIGS = os.path.join(os.path.dirname(__file__), os.pardir, "configs")
CATALOG = sorted(glob.glob(os.path.join(CONFIGS, "*.cfg")))


def _cfg(name):
    return os.path.join(CONFIGS, name)


def _read_csv(path):
    with open(path, encoding="utf-8") as fh:
        first = fh.readline()
        rows = list(csv.reader(fh))
    return first, rows[0], rows[1:]


def test_catalog_has_one_config_per_subcommand_family():
    prefixes = {os.path.basename(p).split("_")[0] for p in CATALOG}
    assert {"expand", "tune", "dispersion", "simulate", "eigen"} <= prefixes


@pytest.mark.parametrize("path", CATALOG, ids=os.path.basename)
def test_config_round_trip(path):
    cfg = load_config(path)
    again = parse_config(serialize(cfg))
    assert again == cfg
    assert config_hash(again) == config_hash(cfg)
    assert serialize(again) == serialize(cfg)


def test_all_problems_are_listed_together():
    with pytest.raises(ConfigError) as info:
        parse_config("model = thermal-d2q5\ns1 = 1.2\nsigma1 = 1/3\nbogus = 4\nscalar = float\n")
    problems = info.value.problems
    assert len(problems) == 2
    assert any("bogus" in p for p in problems) and any("not both" in p for p in problems)


def test_scalar_expressions():
    assert parse_scalar("1/sqrt(12)") == QSqrt3.sqrt3() / 6
    assert parse_scalar("3 - sqrt3") == 3 - QSqrt3.sqrt3()
    with pytest.raises(ValueError):
        parse_scalar("sqrt(2)")


def test_tune_trt_emits_exact_sigma3(tmp_path, capsys):
    assert main(["tune", "--config", _cfg("tune_d2q5_trt.cfg"), "--out", str(tmp_path)]) == 0
    text = (tmp_path / "tune.cfg").read_text()
    assert re.search(r"^sigma3 = ", text, re.M)
    sigma3 = parse_scalar(re.search(r"^sigma3 = (.*)$", text, re.M).group(1))
    assert sigma3 == QSqrt3.sqrt3() / 3
    _, header, rows = _read_csv(tmp_path / "tune_residuals.csv")
    assert header == ["check", "term", "value_exact", "value_float"]
    assert rows and all(r[2] == "0" for r in rows)


def test_expand_csv_matches_engine(tmp_path):
    assert main(["expand", "--config", _cfg("expand_d2q5_thermal.cfg"), "--out", str(tmp_path)]) == 0
    first, header, rows = _read_csv(tmp_path / "expand.csv")
    cfg = load_config(_cfg("expand_d2q5_thermal.cfg"))
    assert first.strip() == f"# config-hash: {config_hash(cfg)}"
    assert header[:4] == ["conserved_i", "source_j", "gamma", "dt_power"]
    e = expand(*make_model("thermal-d2q5", cfg.exact_rates(), dict(cfg.params)), 4)
    got = {r[2]: (int(r[4]), int(r[5])) for r in rows}
    for g, block in e.A.items():
        c = block[0][0]
        if c != 0:
            key = next(k for k in got if k.endswith(_monomial(g)) or k == _monomial(g))
            assert got[key] == (c.numerator, c.denominator)


def _monomial(g):
    from lbm_taylor.taylor import symbol_of
    return symbol_of(g)


def test_simulate_is_deterministic_and_conservative(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["simulate", "--config", _cfg("simulate_periodic_d2q9.cfg"), "--out", str(a)]) == 0
    assert main(["simulate", "--config", _cfg("simulate_periodic_d2q9.cfg"), "--out", str(b)]) == 0
    assert (a / "fields.csv").read_bytes() == (b / "fields.csv").read_bytes()
    _, header, rows = _read_csv(a / "fields.csv")
    assert header == ["step", "x", "y", "rho", "jx", "jy"]
    totals = {}
    for r in rows:
        totals[int(r[0])] = totals.get(int(r[0]), 0.0) + float(r[3])
    assert sorted(totals) == [0, 50, 100, 150, 200]
    assert max(totals.values()) - min(totals.values()) <= 1e-10 * abs(totals[0])
    c = tmp_path / "c"
    assert main(["simulate", "--config", _cfg("simulate_periodic_d2q9.cfg"), "--out", str(c), "--seed", "8"]) == 0
    assert (c / "fields.csv").read_bytes() != (a / "fields.csv").read_bytes()


def test_dispersion_reports_second_order_slopes(tmp_path, capsys):
    assert main(["dispersion", "--config", _cfg("dispersion_d2q5_usual.cfg"), "--out", str(tmp_path)]) == 0
    _, header, rows = _read_csv(tmp_path / "dispersion_order.csv")
    assert header == ["angle", "slope"] and len(rows) == 3
    assert all(abs(float(r[1]) - 2) <= 0.3 for r in rows)
    assert "error slope" in capsys.readouterr().out


def test_periodic_eigen_matches_one_point(tmp_path):
    assert main(["eigen", "--config", _cfg("eigen_periodic_d2q5.cfg"), "--out", str(tmp_path)]) == 0
    _, header, rows = _read_csv(tmp_path / "eigen.csv")
    assert header[-1] == "relative_error"
    assert min(abs(float(r[-1])) for r in rows) <= 1e-8


def test_exit_codes(tmp_path, capsys):
    assert main(["expand", "--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.cfg"
    bad.write_text("model = thermal-d2q5\nwhatever = 1\nradius = -\n")
    assert main(["expand", "--config", str(bad), "--out", str(tmp_path)]) == 2
    err = capsys.readouterr().err
    assert "whatever" in err and "radius" in err
    assert main(["expand", "--config", _cfg("expand_d2q5_thermal.cfg"), "--out", str(tmp_path),
                 "--threads", "0"]) == 2
    # a numerical failure is a runtime error, not a configuration error
    zero = tmp_path / "zero.cfg"
    zero.write_text("model = thermal-d2q5\ns1 = 1\ns3 = 1\ns4 = 1\nalpha = 1\ntuning = general\nscalar = rational\n")
    assert main(["tune", "--config", str(zero), "--out", str(tmp_path)]) == 1
    with pytest.raises(SystemExit):
        main(["bogus", "--config", "x"])
