import csv
import json
from pathlib import Path

import pytest

from genshift.cli import ENV_CONFIG, EXIT_CHECK, EXIT_OK, EXIT_USAGE, ConfigError, load_config, main, resolve_function

KERNEL = Path(__file__).resolve().parents[1] / "configs" / "kernel.ini"


def _config(tmp: Path, body: str, name="run.ini") -> Path:
    path = tmp / name
    path.write_text(f"[run]\nkernel = {KERNEL}\noutput = out\n{body}", encoding="utf-8")
    return path


def _rows(path: Path):
    lines = path.read_text(encoding="utf-8").splitlines()
    return lines[0], list(csv.reader(lines[1:]))


@pytest.fixture(scope="module")
def stamped(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("cli")
    cfg = _config(tmp, "p = inf\nalpha = 1\nfunctions = abs_x_pow_1 const_2.5\nn_max = 12\n")
    assert main(["selftest", "--config", str(cfg)]) == EXIT_OK
    return cfg


def test_selftest_writes_stamp(stamped):
    data = json.loads((stamped.parent / "out" / "selftest.json").read_text())
    assert data["pass"] is True
    assert data["selftest"]["max_err_identity"] <= 1e-8
    assert data["probe"]["pass"] is True
    assert data["fingerprint"] == load_config(stamped).kernel.fingerprint


def test_curves_output_and_determinism(stamped, tmp_path):
    out = stamped.parent / "out" / "curves"
    assert main(["curves", "--config", str(stamped)]) == EXIT_OK
    first = {p.name: p.read_bytes() for p in out.iterdir()}
    assert main(["curves", "--config", str(stamped)]) == EXIT_OK
    assert {p.name: p.read_bytes() for p in out.iterdir()} == first

    fp = load_config(stamped).kernel.fingerprint
    head, rows = _rows(out / "abs_x_pow_1.En.csv")
    assert head == f"# kernel={fp}"
    assert rows[1] == ["n", "E_n"]
    assert len(rows) - 2 == load_config(stamped).n_values.size
    head, rows = _rows(out / "const_2.5.omega.csv")
    assert head == f"# kernel={fp}"
    assert rows[1] == ["delta", "omega"]
    assert all(float(r[1]) == 0.0 for r in rows[2:])
    _, rows = _rows(out / "const_2.5.En.csv")
    assert all(float(r[1]) <= 1e-12 for r in rows[2:])
    _, rows = _rows(out / "failures.csv")
    assert rows == [["f", "quantity", "at", "error"]]


def test_missing_stamp_refused(tmp_path):
    cfg = _config(tmp_path, "functions = abs_x_pow_1\nn_max = 8\n")
    assert main(["curves", "--config", str(cfg)]) == EXIT_USAGE


def test_stamp_for_other_kernel_refused(stamped, tmp_path):
    kernel = tmp_path / "k.ini"
    kernel.write_text(KERNEL.read_text().replace("idx_y = 0, 4", "idx_y = 1, 4"))
    cfg = tmp_path / "run.ini"
    out = stamped.parent / "out"
    cfg.write_text(f"[run]\nkernel = {kernel}\noutput = {out}\nfunctions = abs_x_pow_1\nn_max = 8\n")
    assert main(["curves", "--config", str(cfg)]) == EXIT_USAGE


def test_failing_kernel_selftest(tmp_path):
    kernel = tmp_path / "k.ini"
    kernel.write_text(KERNEL.read_text().replace("sigma_exponent = 1", "sigma_exponent = 2"))
    cfg = tmp_path / "run.ini"
    cfg.write_text(f"[run]\nkernel = {kernel}\noutput = out\nfunctions = abs_x_pow_1\n")
    assert main(["selftest", "--config", str(cfg)]) == EXIT_CHECK
    data = json.loads((tmp_path / "out" / "selftest.json").read_text())
    assert data["pass"] is False and "skipped" in data["probe"]["status"]


def test_verify_inadmissible_weight(tmp_path):
    cfg = _config(tmp_path, "p = 2\nalpha = 0.1\nfunctions = abs_x_pow_1\nn_max = 12\n")
    assert main(["verify", "--force", "--config", str(cfg)]) == EXIT_OK
    _, rows = _rows(tmp_path / "out" / "verify_summary.csv")
    assert rows[0] == ["f", "check", "w", "status", "lambda_E", "lambda_H"]
    assert rows[1][:2] == ["*", "multiplier"] and rows[1][3] == "pass"
    assert {r[3] for r in rows[2:]} == {"inadmissible"}


def test_env_var_supplies_config(stamped, monkeypatch):
    monkeypatch.setenv(ENV_CONFIG, str(stamped))
    assert main(["curves"]) == EXIT_OK


@pytest.mark.parametrize(
    "body",
    ["n_max = 999\n", "p = 0.5\n", "functions = nope\n", "deltas = geom 1 0.1\n", "alpha = x\n", "jobs = 0\n"],
)
def test_bad_config_values(tmp_path, body):
    cfg = _config(tmp_path, body)
    with pytest.raises(ConfigError):
        load_config(cfg)
    assert main(["selftest", "--config", str(cfg)]) == EXIT_USAGE


def test_usage_errors(tmp_path):
    assert main(["bogus"]) == EXIT_USAGE
    assert main(["selftest", "--config", str(tmp_path / "missing.ini")]) == EXIT_USAGE
    assert main(["selftest", "--resolution", "0"]) == EXIT_USAGE


def test_resolve_function_labels():
    assert resolve_function("const_-1").label == "const_-1"
    assert resolve_function("exp").label == "exp"
    with pytest.raises(ConfigError):
        resolve_function("const_abc")
