import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from risfbl import __version__, cli
from risfbl.config import ConfigError, ScenarioConfig, load, loads
from risfbl.curves import CurveOutput, rate_vs_n, snr_cdf


def read_csv(text):
    body = [ln for ln in text.splitlines() if not ln.startswith("#")]
    meta = dict(ln[2:].split(": ", 1) for ln in text.splitlines() if ln.startswith("# "))
    rows = list(csv.reader(io.StringIO("\n".join(body))))
    return rows[0], np.array(rows[1:], dtype=float), meta


class TestConfig:
    def test_defaults(self):
        sc = ScenarioConfig()
        assert sc.n_elements == 1024 and sc.direct_link is False and sc.seed == 1
        assert sc.budget.rho == pytest.approx(2.5119e14, rel=1e-4)

    def test_noise_figure_switch(self):
        sc = ScenarioConfig(apply_noise_figure=True)
        assert sc.budget.rho == pytest.approx(ScenarioConfig().budget.rho / 10**0.3, rel=1e-12)

    def test_round_trip(self):
        sc = ScenarioConfig(n_elements=64, quant_bits=2, direct_link=True, ris_pos=(20.0, 10.0),
                            epsilon=1e-5, seed=99, apply_noise_figure=True)
        assert loads(sc.dumps()) == sc

    @settings(max_examples=50, deadline=None)
    @given(st.integers(1, 5000), st.one_of(st.none(), st.integers(1, 6)), st.booleans(),
           st.floats(5.0, 95.0), st.integers(0, 2**63), st.floats(0.0, 1.0))
    def test_round_trip_property(self, n, bits, direct, d, seed, amp):
        sc = ScenarioConfig(n_elements=n, quant_bits=bits, direct_link=direct, seed=seed,
                            amplitude=amp).with_ris_at(d)
        back = loads(sc.dumps())
        assert back == sc and back.digest() == sc.digest()

    def test_partial_file_takes_defaults(self):
        sc = loads("[ris]\nn_elements = 256\n[fbl]\npayload_bits_L = 40\n")
        assert sc.n_elements == 256 and sc.payload_bits_L == 40 and sc.seed == 1

    @pytest.mark.parametrize("text", [
        "[bogus]\nx = 1\n",
        "[ris]\nelements = 4\n",
        "[ris]\nn_elements = zero\n",
        "[ris]\nn_elements = 0\n",
        "[ris]\ndirect_link = maybe\n",
        "[geometry]\nap_pos = 1, 2, 3\n",
        "[fbl]\nepsilon = 2\n",
        "[fbl]\nblocklength_r = 50\n",
        "[simulation]\nsamples = -1\n",
        "not an ini file",
    ])
    def test_rejects(self, text):
        with pytest.raises(ConfigError):
            loads(text)

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError):
            load(tmp_path / "nope.ini")

    def test_digest_sensitivity(self):
        sc = ScenarioConfig()
        assert sc.digest() == ScenarioConfig().digest()
        assert sc.digest() != sc.replace(seed=2).digest()
        assert sc.digest("a") != sc.digest("b")

    def test_replace_unknown_field(self):
        with pytest.raises(ConfigError):
            ScenarioConfig().replace(bogus=1)


class TestCurveOutput:
    def test_csv_format(self):
        out = CurveOutput(["a", "b"], ["m", "dB"], [[1.0, 0.1], [2.0, 1 / 3]], {"seed": 4})
        text = out.to_csv()
        lines = text.splitlines()
        assert lines[0] == "a,b"
        assert lines[2] == "2,0.33333333333333331"
        assert "# units: m,dB" in lines and "# seed: 4" in lines

    def test_shape_checks(self):
        with pytest.raises(ValueError):
            CurveOutput(["a", "a"], ["", ""], [[1, 2]])
        with pytest.raises(ValueError):
            CurveOutput(["a"], ["", ""], [[1]])

    def test_snr_cdf_columns(self):
        out = snr_cdf(ScenarioConfig(n_elements=64, samples=500), modes=["perfect", 2], points=20)
        assert out.columns == ["snr_db", "analytic_gamma_cdf", "empirical_cdf_perfect", "empirical_cdf_b2"]
        for name in out.columns[1:]:
            col = out.column(name)
            assert np.all(np.diff(col) >= 0) and np.all((col >= 0) & (col <= 1))
        # 2-bit phases never beat perfect phases on the same draws
        assert np.all(out.column("empirical_cdf_b2") >= out.column("empirical_cdf_perfect"))

    def test_rate_vs_n_rejects_bad_list(self):
        with pytest.raises(ConfigError):
            rate_vs_n(ScenarioConfig(), n_list=[64, 16])


class TestCli:
    def run(self, capsys, *argv):
        code = cli.main(list(argv))
        return code, capsys.readouterr()

    def test_snr_cdf_reproducible(self, capsys, tmp_path):
        args = ["snr-cdf", "--samples", "400", "--n-elements", "64", "--points", "15"]
        code, first = self.run(capsys, *args)
        assert code == 0
        _, second = self.run(capsys, *args)
        assert first.out == second.out
        header, rows, meta = read_csv(first.out)
        assert header[:2] == ["snr_db", "analytic_gamma_cdf"] and rows.shape == (15, 6)
        assert meta["seed"] == "1" and meta["samples"] == "400"
        assert meta["tool_version"] == __version__ and len(meta["scenario_hash"]) == 64
        _, third = self.run(capsys, *args, "--seed", "2")
        assert read_csv(third.out)[2]["scenario_hash"] != meta["scenario_hash"]

    def test_out_file(self, capsys, tmp_path):
        path = tmp_path / "cdf.csv"
        code, cap = self.run(capsys, "snr-cdf", "--samples", "100", "--n-elements", "16",
                             "--points", "5", "--out", str(path))
        assert code == 0 and cap.out == ""
        assert path.read_text().startswith("snr_db,")

    def test_rate_vs_n(self, capsys):
        code, cap = self.run(capsys, "rate-vs-n", "--samples", "300", "--n-list", "1024,4096",
                             "--modes", "perfect,1,2")
        assert code == 0
        header, rows, _ = read_csv(cap.out)
        col = {h: rows[:, i] for i, h in enumerate(header)}
        assert list(col["N"]) == [1024, 4096]
        assert np.all(col["avg_rate_exact"] >= col["avg_rate_lb"])
        assert np.all(np.diff(col["avg_rate_exact"]) > 0)
        # where rates are positive, 2-bit sits between 1-bit and perfect phases
        assert np.all(col["mc_rate_b1"] < col["mc_rate_b2"])
        assert np.all(col["mc_rate_b2"] < col["mc_rate_perfect"])
        np.testing.assert_allclose(col["fbl_gap"], col["shannon_r1"] - col["avg_rate_exact"])

    def test_rate_vs_d(self, capsys):
        code, cap = self.run(capsys, "rate-vs-d", "--samples", "200", "--d-grid", "5,50,95",
                             "--modes", "2")
        assert code == 0
        header, rows, _ = read_csv(cap.out)
        col = {h: rows[:, i] for i, h in enumerate(header)}
        assert list(col["d"]) == [5, 50, 95]
        assert np.all(col["direct_avg_rate_exact"] > col["blocked_avg_rate_exact"])
        # U shape: the rate dips where the RIS is farthest from both ends
        for name in ("direct_avg_rate_exact", "direct_mc_rate_b2", "blocked_avg_rate_exact",
                     "blocked_mc_rate_b2"):
            assert col[name][1] < min(col[name][[0, 2]]), name

    @pytest.mark.parametrize("argv", [
        ["snr-cdf", "--modes", "ideal"],
        ["rate-vs-n", "--n-list", "64,16"],
        ["rate-vs-d", "--d-grid", "0,50"],
        ["snr-cdf", "--samples", "0"],
        ["snr-cdf", "--n-elements", "x"],
        ["frobnicate"],
    ])
    def test_config_errors_exit_2(self, capsys, argv):
        with pytest.raises(SystemExit) as exc:
            code = cli.main(argv)
            raise SystemExit(code)
        assert exc.value.code == 2

    def test_bad_config_file(self, capsys, tmp_path):
        path = tmp_path / "bad.ini"
        path.write_text("[ris]\nn_elements = -4\n")
        code, cap = self.run(capsys, "snr-cdf", "--config", str(path))
        assert code == 2 and "configuration error" in cap.err

    def test_config_file_and_override(self, capsys, tmp_path):
        path = tmp_path / "s.ini"
        path.write_text(ScenarioConfig(n_elements=16, samples=123).dumps())
        code, cap = self.run(capsys, "snr-cdf", "--config", str(path), "--points", "5")
        assert code == 0 and read_csv(cap.out)[2]["samples"] == "123"
        code, cap = self.run(capsys, "snr-cdf", "--config", str(path), "--points", "5",
                             "--samples", "50")
        assert read_csv(cap.out)[2]["samples"] == "50"

    def test_entry_point(self):
        res = subprocess.run([sys.executable, "-m", "risfbl.cli", "--version"],
                             capture_output=True, text=True)
        assert res.returncode == 0 and __version__ in res.stdout


@pytest.mark.slow
class TestValidateCommand:
    def test_report_and_negative_control(self, capsys, tmp_path):
        out = tmp_path / "report.json"
        code = cli.main(["validate", "--samples", "3000", "--out", str(out)])
        lines = capsys.readouterr().out.splitlines()
        report = json.loads(out.read_text())
        assert code == 0 and report["passed"] is True
        assert len(lines) == 9 and all(ln.startswith("PASS") for ln in lines)
        code = cli.main(["validate", "--samples", "3000", "--tamper-alpha", "2", "--out",
                         str(tmp_path / "bad.json")])
        lines = capsys.readouterr().out.splitlines()
        assert code == 1
        assert [ln.split()[1] for ln in lines if ln.startswith("FAIL")] == ["gamma_conformance"]
