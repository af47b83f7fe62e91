import csv
import json
import math
import subprocess
import sys

import pytest
import yaml

from qdarwin.cli import (
    build_config,
    decoherence_fits,
    decoherence_rows,
    fmt,
    load_config,
    main,
    monotonicity_warnings,
    parse_real,
)
from qdarwin.errors import ConfigError

SMALL = {
    "sweep": {"t": [0.0, "pi/16", "pi/8", "pi/4"], "n": [2, 4], "fragment_sizes": [1, 2],
              "delta": [0.1], "angles_deg": [0, 45, 90], "ensembles": 3},
    "search": {"restarts": 1},
    "verify": {"n": [2], "t": [0.0, "pi/4"], "draws": 2},
}


def write_config(tmp_path, data, name="cfg.yaml"):
    p = tmp_path / name
    p.write_text(yaml.safe_dump(data))
    return p


def read(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_parse_real_forms():
    assert parse_real("pi/8", "x") == pytest.approx(math.pi / 8)
    assert parse_real("3*pi/16", "x") == pytest.approx(3 * math.pi / 16)
    assert parse_real("pi", "x") == pytest.approx(math.pi)
    assert parse_real(0.25, "x") == 0.25
    with pytest.raises(ConfigError):
        parse_real("tau", "x")
    with pytest.raises(ConfigError):
        parse_real(True, "x")


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError):
        build_config({"sweep": {"times": [0.1]}})
    with pytest.raises(ConfigError):
        build_config({"colour": "blue"})
    with pytest.raises(ConfigError):
        build_config({"sweep": {"t": []}})
    with pytest.raises(ConfigError):
        build_config({"sweep": {"delta": [1.0]}})
    with pytest.raises(ConfigError):
        build_config({"search": {"strategy": "annealing"}})


def test_cli_overrides(tmp_path):
    cfg = load_config(write_config(tmp_path, SMALL), seed=9, out=tmp_path / "o")
    assert cfg.seed == 9 and cfg.search.seed == 9
    assert cfg.output_dir == tmp_path / "o"


def test_config_error_exit_code(tmp_path):
    bad = write_config(tmp_path, {"bogus": 1})
    assert main(["scan-decoherence", "--config", str(bad), "--out", str(tmp_path)]) == 2
    assert main(["scan-decoherence", "--config", str(tmp_path / "missing.yaml")]) == 2
    (tmp_path / "broken.yaml").write_text("sweep: [unclosed")
    assert main(["verify", "--config", str(tmp_path / "broken.yaml")]) == 2


def test_csv_number_format():
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(3) == "3"
    assert fmt(True) == "1"


def test_decoherence_scan_values(tmp_path):
    cfg = load_config(write_config(tmp_path, SMALL), out=tmp_path / "o")
    assert main(["scan-decoherence", "--config", str(write_config(tmp_path, SMALL)),
                 "--out", str(tmp_path / "o")]) == 0
    rows = read(tmp_path / "o" / "decoherence.csv")
    plus = [r for r in rows if r["model"] == "plus"]
    for r in plus:
        if float(r["t"]) == 0:
            assert float(r["abs_gamma"]) == pytest.approx(1.0, abs=1e-14)
    r = next(r for r in plus if r["N"] == "4" and float(r["t"]) == pytest.approx(math.pi / 8))
    assert float(r["abs_gamma"]) == pytest.approx(0.25, abs=1e-14)
    assert set(rows[0]) == {"model", "ensemble", "N", "t", "g", "abs_gamma", "log_abs_gamma"}
    fits = read(tmp_path / "o" / "decoherence_fit.csv")
    assert {f["fit"] for f in fits} == {"log_vs_N"}  # one short time only: no t^2 fit
    assert cfg.ensembles == 3


def test_gaussian_fit_on_dense_time_grid():
    cfg = build_config({"sweep": {"t": [0.02 * k for k in range(11)], "n": [4, 8],
                                  "ensembles": 30, "short_time": 0.2}})
    fits = decoherence_fits(decoherence_rows(cfg), cfg.short_time)
    t2 = [f for f in fits if f[0] == "log_vs_t2"]
    assert len(t2) == 2 and all(f[4] > 0.99 and f[2] < 0 for f in t2)


def run_all(tmp_path, out, threads=1):
    cfg = write_config(tmp_path, SMALL)
    codes = [main([verb, "--config", str(cfg), "--out", str(out), "--threads", str(threads)])
             for verb in ("scan-decoherence", "scan-partial-info", "scan-redundancy", "verify")]
    return codes


def test_outputs_are_byte_identical_and_thread_independent(tmp_path):
    assert run_all(tmp_path, tmp_path / "a") == [0, 0, 0, 0]
    assert run_all(tmp_path, tmp_path / "b") == [0, 0, 0, 0]
    assert run_all(tmp_path, tmp_path / "c", threads=3) == [0, 0, 0, 0]
    names = ["decoherence.csv", "decoherence_fit.csv", "partial_info.csv",
             "partial_info_angles.csv", "redundancy.csv", "verify.jsonl", "verify.txt"]
    for n in names:
        a = (tmp_path / "a" / n).read_bytes()
        assert a == (tmp_path / "b" / n).read_bytes()
        assert a == (tmp_path / "c" / n).read_bytes()
    red = read(tmp_path / "a" / "redundancy.csv")
    last = [r for r in red if r["N"] == "4" and float(r["t"]) == pytest.approx(math.pi / 4)]
    assert last[0]["r_delta"] == "4"
    recs = [json.loads(l) for l in (tmp_path / "a" / "verify.jsonl").read_text().splitlines()]
    assert all(r["passed"] for r in recs)
    assert "RESULT: PASS" in (tmp_path / "a" / "verify.txt").read_text()
    assert main(["plot", "--out", str(tmp_path / "a")]) == 0
    for png in ("decoherence.png", "partial_info.png", "redundancy.png", "redundancy_vs_angle.png"):
        assert (tmp_path / "a" / png).stat().st_size > 1000


def test_partial_info_angle_table(tmp_path):
    out = tmp_path / "o"
    assert main(["scan-partial-info", "--config", str(write_config(tmp_path, SMALL)),
                 "--out", str(out)]) == 0
    rows = read(out / "partial_info_angles.csv")
    strong = [r for r in rows if r["N"] == "4" and float(r["t"]) == pytest.approx(math.pi / 4)]
    by_angle = {float(r["angle_deg"]): int(r["r_delta"]) for r in strong}
    assert by_angle == {0.0: 4, 45.0: 1, 90.0: 1}
    part = read(out / "partial_info.csv")
    assert all(float(r["i_hat"]) <= float(r["h_a"]) + 1e-9 for r in part)


def test_monotonicity_warning():
    rows = [(4, 0.1, 1.0, 0.1, "s", "m", 0.5, 2, 0, 0), (4, 0.2, 1.0, 0.1, "s", "m", 0.6, 1, 0, 0)]
    assert len(monotonicity_warnings(rows, 1.0)) == 1
    assert monotonicity_warnings(rows[:1], 1.0) == []


def test_module_entry_point(tmp_path):
    out = subprocess.run([sys.executable, "-m", "qdarwin", "scan-decoherence", "--config",
                          str(write_config(tmp_path, {"nope": 0}))], capture_output=True, text=True)
    assert out.returncode == 2 and "unknown configuration key" in out.stderr
