import json
import os

import numpy as np
import pytest

from smallmax.cli import main
from smallmax.config import ConfigError, load, validate
from smallmax.experiment import CSV_COLUMNS


def _write(tmp_path, text, name="cfg.toml"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


CERT_CFG = """
[experiment]
name = "certs"
seed = 11
mode = "certify"

[instance]
family = "F"
k = 1
s = -1

[sweep]
lambda = [1.0]
mu = [0.4, 0.9]
rho = [2.0, 4.0]
D = [0.5]

[assert]
surrogate_stationary = true
true_violation = true
"""


class TestConfig:
    def test_unknown_section_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load(_write(tmp_path, "[nope]\nx = 1\n"))

    def test_unknown_key_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load(_write(tmp_path, "[experiment]\nname='a'\nseed=1\nbogus=2\n"))

    def test_missing_seed_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load(_write(tmp_path, "[experiment]\nname='a'\n"))

    def test_empty_sweep_rejected(self, tmp_path):
        with pytest.raises(ConfigError):
            load(_write(tmp_path,
                        "[experiment]\nname='a'\nseed=1\n[sweep]\nmu=[]\n"))

    def test_type_coercion_and_checks(self):
        cfg = validate({"experiment": {"name": "x", "seed": 3},
                        "instance": {"lambda": 1}})
        assert isinstance(cfg["instance"]["lambda"], float)
        with pytest.raises(ConfigError):
            validate({"experiment": {"name": "x", "seed": 3},
                      "instance": {"lambda": "one"}})

    def test_parse_error_reported(self, tmp_path):
        with pytest.raises(ConfigError):
            load(_write(tmp_path, "not toml ==="))

    def test_hash_stability(self, tmp_path):
        path = _write(tmp_path, CERT_CFG)
        _, h1 = load(path)
        _, h2 = load(path)
        assert h1 == h2 and len(h1) == 16


class TestCliRuns:
    def test_certify_sweep_and_exit_code(self, tmp_path):
        cfg = _write(tmp_path, CERT_CFG)
        out = tmp_path / "out"
        assert main(["certify", cfg, "--out-dir", str(out)]) == 0
        csv = (out / "certs.csv").read_text().splitlines()
        assert csv[0] == ",".join(CSV_COLUMNS)
        assert len(csv) == 1 + 4  # header + 2x2 sweep
        detail = json.loads((out / "certs_run0000.json").read_text())
        assert "proposition" in detail

    def test_byte_identical_reruns(self, tmp_path):
        cfg = _write(tmp_path, CERT_CFG)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        assert main(["certify", cfg, "--out-dir", str(out1)]) == 0
        assert main(["certify", cfg, "--out-dir", str(out2)]) == 0
        assert (out1 / "certs.csv").read_bytes() == (out2 / "certs.csv").read_bytes()

    def test_seed_override_changes_rows(self, tmp_path):
        cfg = _write(tmp_path, CERT_CFG)
        out1, out2 = tmp_path / "a", tmp_path / "b"
        main(["certify", cfg, "--out-dir", str(out1)])
        main(["certify", cfg, "--out-dir", str(out2), "--seed", "99"])
        assert (out1 / "certs.csv").read_text() != (out2 / "certs.csv").read_text()

    def test_mode_mismatch_is_config_error(self, tmp_path):
        cfg = _write(tmp_path, CERT_CFG)
        assert main(["run", cfg]) == 2

    def test_config_error_exit_code(self, tmp_path):
        cfg = _write(tmp_path, "[experiment]\nname='a'\nseed=1\nbogus=1\n")
        assert main(["run", cfg]) == 2

    def test_assertion_failure_exit_code(self, tmp_path):
        text = CERT_CFG.replace("true_violation = true",
                                "true_violation = false")
        cfg = _write(tmp_path, text)
        assert main(["certify", cfg, "--out-dir", str(tmp_path / "o")]) == 1

    def test_run_mode_with_solver(self, tmp_path):
        text = """
[experiment]
name = "run1"
seed = 3
mode = "run"

[instance]
family = "F"
k = 0
s = 0
lambda = 1.0
mu = 1.0
rho = 20.0
D = 0.002
x_lo = -1.0
x_hi = 1.0

[solver]
algorithm = "alg1"
x0 = 0.9
y_hat = 0.0005
epsilon = 0.2

[assert]
certified = true
"""
        cfg = _write(tmp_path, text)
        out = tmp_path / "out"
        assert main(["run", cfg, "--out-dir", str(out)]) == 0
        trace = (out / "run1_run0000_trace.csv").read_text().splitlines()
        assert trace[0] == "t,eps_t,phi_hat,cumulative_oracle_calls"
        assert len(trace) > 10

    def test_check_diameter_mode(self, tmp_path):
        text = """
[experiment]
name = "diam"
seed = 1
mode = "check-diameter"

[instance]
family = "F"
k = 1
s = -1
lambda = 1.0
mu = 0.5
rho = 2.0
D = 0.0001

[sweep]
eps = [0.5, 0.1]

[assert]
admissible = true
"""
        cfg = _write(tmp_path, text)
        assert main(["check-diameter", cfg, "--out-dir", str(tmp_path / "o")]) == 0

    def test_krylov_bench_mode(self, tmp_path):
        text = """
[experiment]
name = "kb"
seed = 5
mode = "krylov-bench"

[sweep]
eps = [1, 2, 3]

[krylov]
d = 16
R = 1.0
delta = 1e-3
q_fail = 0.1
norm_bound = 1.0

[assert]
min_pass_fraction = 0.9
"""
        cfg = _write(tmp_path, text)
        out = tmp_path / "o"
        assert main(["krylov-bench", cfg, "--out-dir", str(out)]) == 0
        rows = (out / "kb.csv").read_text().splitlines()
        assert len(rows) == 4

    def test_env_var_out_dir(self, tmp_path, monkeypatch):
        cfg = _write(tmp_path, CERT_CFG)
        envdir = tmp_path / "envout"
        monkeypatch.setenv("SMALLMAX_OUT_DIR", str(envdir))
        assert main(["certify", cfg]) == 0
        assert (envdir / "certs.csv").exists()

    def test_jobs_parallel_identical_csv(self, tmp_path):
        cfg = _write(tmp_path, CERT_CFG)
        out1, out2 = tmp_path / "s", tmp_path / "p"
        main(["certify", cfg, "--out-dir", str(out1)])
        main(["certify", cfg, "--out-dir", str(out2), "--jobs", "2"])
        assert (out1 / "certs.csv").read_bytes() == (out2 / "certs.csv").read_bytes()
