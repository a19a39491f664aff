import csv
import io
import subprocess
import sys

import pytest

from tlps import cli


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


class TestCurve:
    def test_family_curve(self, capsys):
        code, out, _ = run(capsys, "curve", "--family", "10,2.5,1.2", "--lambda", "0.5", "--rho", "10/11")
        assert code == 0
        assert out.splitlines()[0] == "theta,t_linear,t_series,upper_bound,delta"
        r = rows(out)
        assert len(r) == 241
        assert float(r[0]["theta"]) == 0.0
        ps = (20 / 11) / (1 / 11)
        assert float(r[0]["t_linear"]) == pytest.approx(ps, rel=1e-10)
        best = min(r, key=lambda x: float(x["t_linear"]))
        assert abs(float(best["theta"]) - 5) <= 1
        assert (ps - float(best["t_linear"])) / ps == pytest.approx(0.3298, abs=5e-3)
        assert all(float(x["delta"]) >= -1e-12 for x in r)

    def test_twophase_column(self, capsys):
        code, out, _ = run(capsys, "curve", "--method", "twophase", "--theta-max", "10", "--theta-steps", "11")
        assert code == 0
        for x in rows(out):
            assert float(x["t_twophase"]) == pytest.approx(float(x["t_linear"]), rel=1e-10)

    def test_twelve_digits(self, capsys):
        _, out, _ = run(capsys, "curve", "--theta-max", "5", "--theta-steps", "3")
        value = rows(out)[1]["t_linear"]
        assert len(value.replace(".", "").lstrip("0")) <= 12

    def test_out_file(self, tmp_path, capsys):
        path = tmp_path / "c.csv"
        code, out, _ = run(capsys, "curve", "--theta-steps", "4", "--out", str(path))
        assert code == 0 and out == ""
        raw = path.read_bytes()
        assert raw.startswith(b"theta,") and b"\r\n" not in raw


class TestTable1:
    def test_single_row(self, capsys):
        code, out, _ = run(capsys, "table1", "--ns", "10")
        assert code == 0
        (r,) = rows(out)
        assert int(r["n"]) == 10
        assert float(r["max_gain_pct"]) == pytest.approx(32.98, abs=0.5)
        assert float(r["d_half"]) == pytest.approx(7.20, rel=5e-3)

    def test_monotone_d(self, capsys):
        _, out, _ = run(capsys, "table1", "--ns", "10,50,100", "--theta-steps", "61")
        d = [float(r["d_half"]) for r in rows(out)]
        assert d[0] < d[1] < d[2]

    def test_bad_ns(self, capsys):
        code, _, err = run(capsys, "table1", "--ns", "ten")
        assert code == 2 and "--ns" in err


class TestTwoPhase:
    def test_defaults(self, capsys):
        code, out, _ = run(capsys, "twophase", "--rho-sweep", "0.1:0.95:10")
        assert code == 0
        r = rows(out)
        vals = {x["quantity"]: float(x["value"]) for x in r if x["x"] == ""}
        assert vals["theta_approx"] == pytest.approx(4.45259, abs=1e-5)
        assert vals["t_ps"] == pytest.approx(20.0)
        assert vals["c1"] == pytest.approx(9.0)
        assert vals["limit"] == pytest.approx(11.0)
        g = [float(x["value"]) for x in r if x["quantity"] == "g_sweep"]
        g2 = [float(x["value"]) for x in r if x["quantity"] == "g2_sweep"]
        assert all(a < b for a, b in zip(g, g[1:]))
        assert all(b <= a + 1e-12 for a, b in zip(g, g2))

    def test_needs_two_phases(self, capsys):
        code, _, err = run(capsys, "twophase", "--family", "10,2.5,1.2", "--lambda", "0.5", "--rho", "10/11")
        assert code == 2 and "two phases" in err


class TestSimulate:
    def test_mm1_defaults(self, capsys):
        code, out, _ = run(capsys, "simulate", "--theta", "1")
        assert code == 0
        last = rows(out)[-1]
        assert last["replication"] == "all"
        assert float(last["analytic"]) == pytest.approx(2.0)
        assert last["inside_ci"] == "true"

    def test_repeatable_bytes(self, tmp_path, capsys):
        args = ["simulate", "--phases", "10/11:1,1/11:1/10", "--rho", "0.7", "--jobs", "3000",
                "--warmup", "300", "--reps", "3", "--seed", "4"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert cli.main(args + ["--out", str(a)]) == 0
        assert cli.main(args + ["--out", str(b), "--workers", "2"]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_trace(self, tmp_path, capsys):
        path = tmp_path / "t.csv"
        code, _, _ = run(capsys, "simulate", "--jobs", "100", "--warmup", "0", "--reps", "2", "--trace", str(path))
        assert code == 0
        assert path.read_text().splitlines()[0] == "time,event_type,job_id,queue_level,attained_service"

    def test_unstable(self, capsys):
        code, _, err = run(capsys, "simulate", "--phases", "1:1", "--lambda", "1.5")
        assert code == 4 and "unstable" in err


class TestModelFlags:
    @pytest.mark.parametrize(
        "argv, needle",
        [
            (["curve", "--phases", "0.5:1,0.4:2"], "weights"),
            (["curve", "--phases", "banana"], "--phases"),
            (["curve", "--family", "10,2.5"], "--family"),
            (["curve", "--phases", "1:1", "--family", "10,2.5,1.2"], "not both"),
            (["curve", "--phases", "1:1", "--lambda", "0.5", "--rho", "0.7"], "--rho"),
            (["curve", "--phases", "1:1", "--mean", "3"], "--mean"),
            (["curve", "--theta-min", "5", "--theta-max", "1"], "--theta"),
        ],
    )
    def test_invalid(self, capsys, argv, needle):
        code, _, err = run(capsys, *argv)
        assert code == 2
        assert needle in err

    def test_family_needs_two(self, capsys):
        code, _, err = run(capsys, "curve", "--family", "10,2.5,1.2", "--rho", "0.5")
        assert code == 2 and "need two" in err

    def test_family_mean_and_rho(self, capsys):
        code, out, _ = run(capsys, "curve", "--family", "10,2.5,1.2", "--mean", "20/11", "--rho", "10/11",
                           "--theta-steps", "2", "--theta-max", "5")
        assert code == 0
        assert float(rows(out)[0]["t_linear"]) == pytest.approx(20.0)

    def test_unstable_family(self, capsys):
        code, _, _ = run(capsys, "curve", "--family", "10,2.5,1.2", "--lambda", "0.5", "--rho", "1.2")
        assert code == 4

    def test_argparse_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            cli.main(["curve", "--method", "nope"])
        assert exc.value.code == 2


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "tlps", "twophase", "--theta-steps", "2"],
        capture_output=True, text=True, check=True,
    )
    assert proc.stdout.startswith("quantity,x,value\n")
