import csv
import io
import json
import math
import subprocess
import sys

import pytest

from faithful_transmission.cli import main

FIXED_U = [[{"re": 0.6, "im": 0.0}, {"re": 0.0, "im": -0.8}], [{"re": 0.0, "im": -0.8}, {"re": 0.6, "im": 0.0}]]
IDENTITY_U = [[{"re": 1, "im": 0}, {"re": 0, "im": 0}], [{"re": 0, "im": 0}, {"re": 1, "im": 0}]]


def write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return str(p)


def ideal(**run):
    return {
        "input": {"alpha_re": 0.6, "beta_re": 0.0, "beta_im": 0.8},
        "noise": {"kind": "haar", "seed": 3},
        "decoder": {"variant": "frequency_dual_fs", "eta": 1.0},
        "run": {"trials": 30, **run},
    }


def fixed(matrix, **decoder):
    return {
        "input": {"alpha_re": 0.6, "beta_re": 0.8},
        "noise": {"kind": "fixed", "parameters": {"matrix": matrix}},
        "decoder": decoder,
        "run": {"trials": 1},
    }


def test_run_ideal(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["run", write(tmp_path, ideal(oracle_check=True)), "--output", str(out)]) == 0
    rep = json.loads(out.read_text())
    assert abs(rep["success_probability"]["mean"] - 0.5) < 1e-12
    assert rep["oracle_max_deviation"] < 1e-12
    line = capsys.readouterr().out.strip()
    assert "success=" in line and "fidelity=" in line and "oracle_dev=" in line


def test_run_uses_output_from_config(tmp_path):
    dest = tmp_path / "from_cfg.json"
    assert main(["run", write(tmp_path, ideal(output=str(dest)))]) == 0
    assert "output" not in json.loads(dest.read_text())["config"]["run"]


def test_report_round_trips(tmp_path):
    out = tmp_path / "r.json"
    main(["run", write(tmp_path, ideal()), "--output", str(out)])
    text = out.read_text()
    assert json.dumps(json.loads(text), indent=2, sort_keys=True) + "\n" == text


def test_eta_out_of_range_is_config_error(tmp_path, capsys):
    doc = ideal()
    doc["decoder"]["eta"] = 1.5
    assert main(["run", write(tmp_path, doc)]) == 2
    assert "decoder.eta" in capsys.readouterr().err


@pytest.mark.parametrize("mutate,field", [
    (lambda d: d["run"].update(bogus=1), "run"),
    (lambda d: d["noise"].update(kind="depolarizing"), "noise.kind"),
    (lambda d: d.update(ensemble=[{"weight": 1, "alpha_re": 1, "beta_re": 0}]), "input"),
    (lambda d: d["input"].update(beta_re=0.5), "input"),
])
def test_config_errors(tmp_path, capsys, mutate, field):
    doc = ideal()
    mutate(doc)
    assert main(["run", write(tmp_path, doc)]) == 2
    assert field in capsys.readouterr().err


def test_malformed_json_reports_location(tmp_path, capsys):
    p = tmp_path / "bad.json"
    p.write_text('{"noise": {"kind": "haar",}}')
    assert main(["run", str(p)]) == 2
    assert "line 1" in capsys.readouterr().err


def test_trace_post_pbs2_has_16_rows(tmp_path, capsys):
    assert main(["trace", write(tmp_path, fixed(FIXED_U)), "--stage", "post-pbs2"]) == 0
    rows = capsys.readouterr().out.splitlines()
    assert len(rows) == 16
    assert rows == sorted(rows)


def test_trace_identity_final_kept_rows(tmp_path, capsys):
    assert main(["trace", write(tmp_path, fixed(IDENTITY_U))]) == 0
    rows = capsys.readouterr().out.splitlines()
    kept = [r for r in rows if ("out_3x" in r and "out_3y" in r)]
    assert len(kept) == 2
    r2 = 1 / math.sqrt(2)
    amps = sorted(float(r.split()[-2]) for r in kept)
    assert amps == pytest.approx(sorted([0.6 * r2, 0.8 * r2]), abs=1e-12)


def test_trace_pre_decoder_without_hwp0_equals_post_pbs2(tmp_path, capsys):
    cfg = write(tmp_path, fixed(FIXED_U, with_hwp0=False))
    main(["trace", cfg, "--stage", "post-pbs2"])
    a = capsys.readouterr().out
    main(["trace", cfg, "--stage", "pre-decoder"])
    assert capsys.readouterr().out == a


def test_trace_rejects_unknown_stage(tmp_path, capsys):
    with pytest.raises(SystemExit) as exc:
        main(["trace", write(tmp_path, fixed(FIXED_U)), "--stage", "after-fbs"])
    assert exc.value.code == 2
    assert "post-pbs2" in capsys.readouterr().err


def test_trace_rejects_haar(tmp_path, capsys):
    assert main(["trace", write(tmp_path, ideal())]) == 2


def _sweep(tmp_path, variant, values):
    doc = ideal(sweep={"parameter": "eta", "values": values})
    doc["decoder"]["variant"] = variant
    out = tmp_path / "s.csv"
    code = main(["sweep", write(tmp_path, doc), "--output", str(out)])
    return code, out


@pytest.mark.parametrize("variant,expected", [
    ("frequency_dual_fs", [0.03125, 0.125, 0.28125, 0.5]),
    ("frequency_single_fs", [0.125, 0.25, 0.375, 0.5]),
])
def test_sweep_csv(tmp_path, variant, expected):
    code, out = _sweep(tmp_path, variant, [0.25, 0.5, 0.75, 1.0])
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out.read_text())))
    assert list(rows[0]) == ["parameter", "success_mean", "success_stderr", "fidelity_mean"]
    assert [float(r["parameter"]) for r in rows] == [0.25, 0.5, 0.75, 1.0]
    assert [float(r["success_mean"]) for r in rows] == pytest.approx(expected, abs=1e-12)


def test_sweep_empty_values(tmp_path):
    code, _ = _sweep(tmp_path, "frequency_dual_fs", [])
    assert code == 2


def test_run_rejects_sweep_config(tmp_path):
    assert main(["run", write(tmp_path, ideal(sweep={"parameter": "eta", "values": [0.5]}))]) == 2


def test_jobs_do_not_change_report(tmp_path):
    cfg = write(tmp_path, ideal())
    outs = []
    for jobs in ("1", "3"):
        out = tmp_path / f"r{jobs}.json"
        assert main(["run", cfg, "--output", str(out), "--jobs", jobs]) == 0
        outs.append(out.read_bytes())
    assert outs[0] == outs[1]


def test_validate_passes(capsys):
    assert main(["validate"]) == 0
    out = capsys.readouterr().out
    assert "FAIL" not in out
    assert "stage tables" in out and "x100" in out
    assert "ideal success = 1/2 x1000 Haar" in out


def test_console_script_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "faithful_transmission.cli", "trace",
                          write(tmp_path, fixed(FIXED_U))], capture_output=True, text=True)
    assert res.returncode == 0 and res.stdout
