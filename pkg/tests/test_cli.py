import io
import json
import math

import numpy as np
import pytest

from nsbf.cli import main

PI = math.pi


def run_cli(args):
    buf = io.StringIO()
    import contextlib

    with contextlib.redirect_stdout(buf):
        rc = main(args)
    return rc, buf.getvalue()


def data_rows(text):
    lines = [l for l in text.splitlines() if l and not l.startswith("#")]
    return lines[0].split(","), [l.split(",") for l in lines[1:]]


FAST = ["--M", "102", "--N", "4"]


class TestSolveCommand:
    def test_free_particle_value(self):
        rc, out = run_cli(
            ["solve", "--potential", "0", "--omega", "2",
             "--x", str(PI / 2), "--M", "600", "--N", "8"]
        )
        assert rc == 0
        header, rows = data_rows(out)
        assert header == ["omega", "x", "re_u", "im_u", "envelope"]
        re_u, im_u = float(rows[0][2]), float(rows[0][3])
        assert re_u == pytest.approx(-1.0, abs=1e-14)
        assert im_u == pytest.approx(0.0, abs=1e-14)

    def test_constant_potential_closed_form(self):
        rc, out = run_cli(
            ["solve", "--potential", "1", "--omega", "50",
             "--x", str(PI), "--N", "25"]
        )
        assert rc == 0
        _, rows = data_rows(out)
        wp = math.sqrt(50.0**2 - 1.0)
        x = float(rows[0][1])
        exact = math.cos(wp * x) + 1j * 50.0 * math.sin(wp * x) / wp
        got = float(rows[0][2]) + 1j * float(rows[0][3])
        assert abs(got - exact) < 1e-10

    def test_zero_omega_improved_is_exit_3(self):
        rc, _ = run_cli(
            ["solve", "--potential", "0", "--omega", "0", "--x", "1",
             "--representation", "improved", *FAST]
        )
        assert rc == 3

    def test_zero_omega_auto_falls_back(self):
        rc, out = run_cli(
            ["solve", "--potential", "1", "--omega", "0", "--x", "1", *FAST]
        )
        assert rc == 0
        _, rows = data_rows(out)
        x = float(rows[0][1])
        assert float(rows[0][2]) == pytest.approx(math.cosh(x), rel=1e-8)

    def test_malformed_potential_exit_2(self):
        rc, _ = run_cli(["solve", "--potential", "exp(", "--omega", "1",
                         "--x", "1", *FAST])
        assert rc == 2

    def test_missing_potential_exit_2(self):
        rc, _ = run_cli(["solve", "--omega", "1", "--x", "1"])
        assert rc == 2


class TestEigsCommand:
    def test_free_particle_squares(self):
        rc, out = run_cli(
            ["eigs", "--potential", "0", "--count", "5", "--M", "600",
             "--N", "8"]
        )
        assert rc == 0
        _, rows = data_rows(out)
        lams = [float(r[1]) for r in rows]
        assert lams == pytest.approx([1.0, 4.0, 9.0, 16.0, 25.0], abs=1e-11)

    def test_constant_potential(self):
        rc, out = run_cli(
            ["eigs", "--potential", "1", "--count", "3", "--M", "600",
             "--N", "15"]
        )
        assert rc == 0
        _, rows = data_rows(out)
        lams = [float(r[1]) for r in rows]
        assert lams == pytest.approx([2.0, 5.0, 10.0], abs=1e-10)

    def test_asymptotic_column_present_only_for_pi(self):
        rc, out = run_cli(
            ["eigs", "--potential", "0", "--count", "2", "--M", "600",
             "--N", "8"]
        )
        header, _ = data_rows(out)
        assert "asymptotic" in header
        rc, out = run_cli(
            ["eigs", "--potential", "0", "--b", "2.0", "--count", "2",
             "--M", "600", "--N", "8"]
        )
        header, _ = data_rows(out)
        assert "asymptotic" not in header

    def test_range_exhaustion_exit_4(self):
        rc, _ = run_cli(
            ["eigs", "--potential", "0", "--count", "10", "--omega-lo",
             "0.5", "--omega-hi", "3.0", "--M", "600", "--N", "8"]
        )
        assert rc == 4


class TestCoeffsCommand:
    def test_row_count_rule(self):
        # alpha rows 0..N+2, beta rows 0..N
        rc, out = run_cli(
            ["coeffs", "--potential", "exp(x)", *FAST, "--format", "json"]
        )
        assert rc == 0
        doc = json.loads(out)
        assert doc["metadata"]["alpha_rows"] == 7
        assert doc["metadata"]["beta_rows"] == 5
        assert "eps1_at_b" in doc["metadata"]
        blanks = [r for r in doc["rows"] if r[2] == ""]
        assert len(blanks) == 2 * 103  # two alpha-only rows

    def test_zero_potential_all_zero(self):
        rc, out = run_cli(["coeffs", "--potential", "0", *FAST])
        assert rc == 0
        _, rows = data_rows(out)
        for r in rows:
            assert float(r[4]) == 0.0
            if r[2]:
                assert float(r[2]) == 0.0


class TestConfigHandling:
    def test_config_file_with_flag_override(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({
            "schema": 1, "potential": "0", "M": 102, "N": 4,
            "omega": ["3"], "x": [1.0],
        }))
        rc, out = run_cli(["solve", "--config", str(cfg), "--omega", "2"])
        assert rc == 0
        _, rows = data_rows(out)
        assert rows[0][0] == "2"  # flag wins over config

    def test_bad_schema_exit_2(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"schema": 2, "potential": "0"}))
        rc, _ = run_cli(["solve", "--config", str(cfg), "--omega", "1",
                         "--x", "1"])
        assert rc == 2

    def test_unknown_field_exit_2(self, tmp_path):
        cfg = tmp_path / "run.json"
        cfg.write_text(json.dumps({"schema": 1, "potential": "0",
                                   "bogus": 1}))
        rc, _ = run_cli(["solve", "--config", str(cfg), "--omega", "1",
                         "--x", "1"])
        assert rc == 2

    def test_deterministic_data_rows(self):
        args = ["solve", "--potential", "exp(x)", "--omega", "2.5",
                "--x", "1.0", "--x", "2.0", *FAST]
        _, out1 = run_cli(args)
        _, out2 = run_cli(args)
        assert data_rows(out1) == data_rows(out2)


class TestTabulatedPotential:
    def _write_table(self, path, n, b=PI, complex_part=False):
        xs = np.linspace(0.0, b, n)
        with open(path, "w") as fh:
            fh.write("# tabulated-potential v1\n")
            for x in xs:
                if complex_part:
                    fh.write(f"{x:.17g} {math.exp(x):.17g} 0.1\n")
                else:
                    fh.write(f"{x:.17g} {math.exp(x):.17g}\n")

    def test_matching_grid(self, tmp_path):
        path = tmp_path / "pot.txt"
        self._write_table(path, 103)
        rc, out = run_cli(
            ["eigs", "--potential-file", str(path), "--count", "1", *FAST]
        )
        assert rc == 0
        assert "# resampled" not in out
        _, rows = data_rows(out)
        # plumbing check at deliberately coarse N=4; accuracy is covered
        # by the expression-potential suites
        assert float(rows[0][1]) == pytest.approx(4.8967, abs=0.05)

    def test_resampled_grid_flagged(self, tmp_path):
        path = tmp_path / "pot.txt"
        self._write_table(path, 401)
        rc, out = run_cli(
            ["eigs", "--potential-file", str(path), "--count", "1", *FAST]
        )
        assert rc == 0
        assert "# resampled: true" in out

    def test_missing_header_exit_2(self, tmp_path):
        path = tmp_path / "pot.txt"
        path.write_text("0 1\n1 2\n")
        rc, _ = run_cli(
            ["eigs", "--potential-file", str(path), "--count", "1", *FAST]
        )
        assert rc == 2

    def test_complex_tabulated_eigs_rejected(self, tmp_path):
        path = tmp_path / "pot.txt"
        self._write_table(path, 103, complex_part=True)
        rc, _ = run_cli(
            ["eigs", "--potential-file", str(path), "--count", "1", *FAST]
        )
        assert rc == 2

    def test_complex_tabulated_solve_works(self, tmp_path):
        path = tmp_path / "pot.txt"
        self._write_table(path, 103, complex_part=True)
        rc, out = run_cli(
            ["solve", "--potential-file", str(path), "--omega", "5",
             "--x", "1.0", *FAST]
        )
        assert rc == 0
        _, rows = data_rows(out)
        assert float(rows[0][3]) != 0.0


class TestBenchCommand:
    def test_zero_potential_roundoff_errors(self):
        rc, out = run_cli(
            ["bench", "--potential", "0", "--count", "5", "--M", "600",
             "--N", "8"]
        )
        assert rc == 0
        header, rows = data_rows(out)
        err_cols = [i for i, c in enumerate(header) if c.startswith("err_")]
        for r in rows:
            for i in err_cols:
                assert float(r[i]) <= 1e-10

    def test_reference_file(self, tmp_path):
        ref = tmp_path / "ref.csv"
        ref.write_text("".join(f"{n},{n*n}\n" for n in range(1, 6)))
        rc, out = run_cli(
            ["bench", "--potential", "0", "--count", "5", "--M", "600",
             "--N", "8", "--reference", str(ref)]
        )
        assert rc == 0
        assert "summary" in out
