import csv
import io
import json
import math

import pytest

from quasiperiodic.cli import EXIT_NUMERIC, EXIT_USAGE, butterfly_fractions, main
from quasiperiodic import cli


def run(capsys, *args):
    code = main(list(args))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    lines = [l for l in text.splitlines() if not l.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


def test_convergents(capsys):
    code, out, _ = run(capsys, "convergents", "--alpha", "golden", "--depth", "5")
    assert code == 0
    assert out.startswith("# quasiperiodic v1 convergents")
    assert [(r["p"], r["q"]) for r in rows(out)] == [("1", "1"), ("1", "2"), ("2", "3"), ("3", "5"), ("5", "8")]


def test_measure_closed_form(capsys):
    code, out, _ = run(capsys, "measure", "--potential", "am:2", "--alpha", "1/2")
    assert code == 0
    assert float(rows(out)[0]["measure"]) == pytest.approx(4 * math.sqrt(5), abs=4e-9)


def test_spectrum_band_schema(capsys):
    code, out, _ = run(capsys, "spectrum", "--potential", "am:1", "--alpha", "1/2", "--theta", "0")
    assert code == 0
    rs = rows(out)
    assert list(rs[0]) == ["p", "q", "theta_tag", "a", "b"]
    got = [float(r[k]) for r in rs for k in ("a", "b")]
    assert got == pytest.approx([-2 * math.sqrt(2), -2, 2, 2 * math.sqrt(2)], abs=2e-9)


def test_json_output(capsys):
    code, out, _ = run(capsys, "measure", "--alpha", "golden", "--depth", "4", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["schema"] == "quasiperiodic/v1"
    assert (doc["data"]["p"], doc["data"]["q"]) == (3, 5)


def test_usage_errors(capsys):
    for args in (["measure", "--tol", "-1", "--alpha", "1/2"],
                 ["measure", "--alpha", "3/2"],
                 ["measure", "--alpha", "golden"],
                 ["measure", "--potential", "no-such-file.json", "--alpha", "1/2"]):
        code, _, err = run(capsys, *args)
        assert code == EXIT_USAGE
        assert json.loads(err.strip().splitlines()[-1])["error"] == "usage"
    with pytest.raises(SystemExit) as exc:
        main(["measure", "--bogus"])
    assert exc.value.code == 2


def test_numeric_failure_exit_code(capsys, monkeypatch):
    from quasiperiodic import bands

    def boom(*a, **k):
        raise bands.BandComputationError("refinement budget exhausted", q=3)

    monkeypatch.setattr(bands, "union_spectrum", boom)
    code, out, err = run(capsys, "butterfly", "--qmax", "3", "--jobs", "1")
    assert code == EXIT_NUMERIC
    assert out.startswith("# quasiperiodic v1 butterfly")
    assert json.loads(err)["error"] == "numeric"


def test_output_dir_override(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(tmp_path))
    code, out, _ = run(capsys, "convergents", "--alpha", "silver", "--depth", "3", "--output", "c.csv")
    assert code == 0 and out == ""
    assert rows((tmp_path / "c.csv").read_text())[-1]["q"] == "12"


def test_probe_commands(capsys):
    code, out, _ = run(capsys, "probe-lemma2", "--energies", "0", "--k", "20", "--eps", "0.2")
    assert code == 0 and rows(out)[0]["passed"] == "true"
    code, out, _ = run(capsys, "probe-lemma1", "--energies", "0", "--k-min", "6", "--k-max", "8")
    assert code == 0 and "(fitted)" in out
    code, out, _ = run(capsys, "probe-continuity", "--depth", "8", "--first", "5")
    assert code == 0 and len(rows(out)) == 3
    code, out, _ = run(capsys, "upper-bound", "--n", "9", "10")
    assert code == 0 and len(rows(out)) == 2
    code, out, _ = run(capsys, "convergence", "--depth", "5")
    assert code == 0 and rows(out)[0]["measure"].startswith("11.99999")
    code, out, _ = run(capsys, "lyapunov", "--energies", "0", "--schedule", "50,100", "--theta-grid", "64")
    assert code == 0 and float(rows(out)[0]["gamma"]) > 0.6


def _phi(q):
    return sum(1 for p in range(1, q + 1) if math.gcd(p, q) == 1)


def test_butterfly_reproducible_count_and_symmetry(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["butterfly", "--potential", "am:1", "--qmax", "30", "--tol", "1e-7", "--output", str(a)]) == 0
    assert main(["butterfly", "--potential", "am:1", "--qmax", "30", "--tol", "1e-7", "--jobs", "1",
                 "--output", str(b)]) == 0
    assert a.read_bytes() == b.read_bytes()
    rs = rows(a.read_text())
    fracs = butterfly_fractions(30)
    assert len(fracs) == sum(_phi(q) for q in range(1, 31))
    per = {}
    for r in rs:
        per.setdefault((int(r["p"]), int(r["q"])), []).append((float(r["a"]), float(r["b"])))
    assert set(per) == set(fracs)
    assert len(rs) == sum(len(v) for v in per.values())
    for (p, q), ivs in per.items():
        assert len(ivs) <= q
        reflected = sorted((-y, -x) for x, y in ivs)
        for (x, y), (u, v) in zip(ivs, reflected):
            assert abs(x - u) <= 2e-7 and abs(y - v) <= 2e-7
