import csv
import io
import json
import subprocess
import sys

import numpy as np
import pytest

from tunneltimes.cli import (
    EXIT_NUMERICAL,
    EXIT_USAGE,
    PACKET_COLUMNS,
    SWEEP_COLUMNS,
    WAVEFUNCTION_COLUMNS,
    main,
)
from tunneltimes.dwell import tau_buttiker, tau_free, tau_tr_dwell
from tunneltimes.scattering import BarrierSpec

BARRIER = ["--V0", "0.1", "--a", "0", "--b", "15", "--mass", "0.067"]
DWELL_KEYS = [
    "E_eV", "V0_eV", "d_nm", "mass_me", "T", "R", "tau_free_fs", "tau_tr_fs",
    "tau_ref_fs", "tau_buttiker_fs", "regime", "empty_subensemble_flag",
]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def table(text):
    return list(csv.reader(io.StringIO(text)))


# --- dwell ------------------------------------------------------------------------


def test_dwell_document(capsys):
    code, out, _ = run(capsys, "dwell", "--E", "0.09", *BARRIER)
    assert code == 0
    doc = json.loads(out)
    assert list(doc) == DWELL_KEYS
    assert doc["tau_tr_fs"] == pytest.approx(109.4, abs=0.05)
    # quoted as 17.57; the oracle value is 17.5648
    assert doc["tau_buttiker_fs"] == pytest.approx(17.57, abs=0.01)
    assert doc["regime"] == "under_barrier"
    assert doc["empty_subensemble_flag"] is False


def test_dwell_degenerate_point(capsys):
    code, out, _ = run(capsys, "dwell", "--E", "0.1", *BARRIER)
    doc = json.loads(out)
    assert code == 0 and doc["regime"] == "degenerate"
    assert all(np.isfinite(doc[k]) for k in ("tau_tr_fs", "tau_ref_fs", "tau_buttiker_fs"))


def test_dwell_free_case(capsys):
    code, out, _ = run(capsys, "dwell", "--E", "0.05", "--V0", "0", "--a", "0", "--b", "15", "--mass", "0.067")
    doc = json.loads(out)
    assert code == 0
    assert doc["T"] == pytest.approx(1.0, abs=1e-15)
    for key in ("tau_tr_fs", "tau_buttiker_fs"):
        assert doc[key] == pytest.approx(doc["tau_free_fs"], rel=1e-14)
    # nothing is reflected; the reflected time is the limit of an empty subensemble
    assert doc["empty_subensemble_flag"] is True


@pytest.mark.parametrize("argv", [
    ["dwell", "--E", "0.09", "--V0", "0.1", "--a", "0", "--b", "15"],
    ["dwell", "--E", "abc", *BARRIER],
    ["dwell", "--E", "-0.1", *BARRIER],
    ["dwell", "--E", "0.09", "--V0", "0.1", "--a", "10", "--b", "5", "--mass", "0.067"],
    ["sweep", "--param", "energy", "--from", "0.2", "--to", "0.1", "--steps", "5", *BARRIER],
    ["sweep", "--param", "energy", "--from", "0.1", "--to", "0.2", "--steps", "1", *BARRIER],
    ["sweep", "--param", "energy", "--from", "0.1", "--to", "0.2", "--steps", "3", "--columns", "T,bogus", *BARRIER],
    ["wavefunction", "--E", "0.09", *BARRIER],
])
def test_usage_errors(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        raise SystemExit(main(argv))
    assert exc.value.code == EXIT_USAGE
    assert "error" in capsys.readouterr().err


def test_config_file_and_precedence(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# barrier\nV0 = 0.1\na = 0\nb = 15  # nm\nmass = 0.067\nE = 0.05\n")
    _, from_cfg, _ = run(capsys, "dwell", "--config", str(cfg))
    _, direct, _ = run(capsys, "dwell", "--E", "0.05", *BARRIER)
    assert from_cfg == direct
    _, override, _ = run(capsys, "dwell", "--config", str(cfg), "--E", "0.09")
    assert json.loads(override)["E_eV"] == 0.09


@pytest.mark.parametrize("text", ["E = 0.05\ncolour = red\n", "E = 0.05\nE = 0.06\n", "E 0.05\n", "E = nan\n"])
def test_bad_config(tmp_path, capsys, text):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text(text)
    assert main(["dwell", "--config", str(cfg), *BARRIER]) == EXIT_USAGE


def test_config_range_aliases(tmp_path, capsys):
    cfg = tmp_path / "sweep.cfg"
    cfg.write_text("param = energy\nfrom = 0.05\nto = 0.2\nsteps = 4\n")
    code, out, _ = run(capsys, "sweep", "--config", str(cfg), *BARRIER)
    assert code == 0
    rows = table(out)
    assert float(rows[1][0]) == 0.05 and float(rows[-1][0]) == 0.2


# --- sweep ------------------------------------------------------------------------


def test_sweep_header_and_rows(capsys):
    code, out, _ = run(capsys, "sweep", "--param", "energy", "--from", "0.05", "--to", "0.2", "--steps", "2", *BARRIER)
    rows = table(out)
    assert code == 0
    assert ",".join(rows[0]) == "param,E_eV,d_nm,T,R,tau_free_fs,tau_tr_fs,tau_ref_fs,tau_buttiker_fs,ratio_tr_free,ratio_buttiker_free"
    assert tuple(rows[0]) == SWEEP_COLUMNS
    assert len(rows) == 3


def test_sweep_column_selection(capsys):
    _, out, _ = run(capsys, "sweep", "--param", "energy", "--from", "0.05", "--to", "0.2", "--steps", "3",
                    "--columns", "tau_tr_fs,E_eV", *BARRIER)
    assert table(out)[0] == ["E_eV", "tau_tr_fs"]


def test_figure4_transmission_time_increases(capsys):
    code, out, _ = run(capsys, "sweep", "--figure", "4")
    rows = table(out)
    col = rows[0].index("tau_tr_fs")
    tau = np.array([float(r[col]) for r in rows[1:]])
    assert code == 0 and len(tau) == 300
    assert np.all(np.diff(tau) > 0)


def test_figure2_ratios_match_dwell_module(capsys):
    _, out, _ = run(capsys, "sweep", "--figure", "2")
    rows = table(out)
    head = rows[0]
    b = BarrierSpec(0.1, 0.0, 15.0, 0.067)
    for r in rows[1::37]:
        e = float(r[head.index("E_eV")])
        tf = tau_free(0.067, e, 15.0)
        assert float(r[head.index("ratio_tr_free")]) == pytest.approx(tau_tr_dwell(e, b) / tf, rel=1e-14)
        assert float(r[head.index("ratio_buttiker_free")]) == pytest.approx(tau_buttiker(e, b) / tf, rel=1e-14)


def test_flags_override_figure_preset(capsys):
    _, out, _ = run(capsys, "sweep", "--figure", "2", "--steps", "5")
    assert len(table(out)) == 6


def test_sweep_output_file(tmp_path, capsys):
    path = tmp_path / "out.csv"
    code, out, _ = run(capsys, "sweep", "--figure", "1", "-o", str(path))
    assert code == 0 and out == ""
    assert path.read_text().startswith("param,E_eV")


# --- wavefunction -----------------------------------------------------------------


def test_wavefunction_table(capsys):
    code, out, _ = run(capsys, "wavefunction", "--E", "0.09", "--samples", "301", "--xmin", "-20", "--xmax", "40", *BARRIER)
    rows = table(out)
    assert code == 0
    assert tuple(rows[0]) == WAVEFUNCTION_COLUMNS
    data = np.array(rows[1:], dtype=float)
    x = data[:, 0]
    col = {name: data[:, i] for i, name in enumerate(rows[0])}
    assert np.all(col["abs2_ref"][x >= 7.5] == 0)
    flux = col["flux_tr"]
    assert np.max(np.abs(flux - flux[0])) <= 1e-10 * abs(flux[0])
    assert np.max(np.abs(col["flux_ref"])) <= 1e-12


# --- packet -----------------------------------------------------------------------


def test_free_packet_summary(tmp_path, capsys):
    summary = tmp_path / "summary.json"
    code, out, _ = run(capsys, "packet", "--x0", "0", "--halfwidth", "10", "--E0", "0.05", "--V0", "0",
                       "--a", "100", "--b", "115", "--mass", "0.067", "--tmax", "500", "--summary", str(summary))
    assert code == 0
    rows = table(out)
    assert tuple(rows[0]) == PACKET_COLUMNS
    doc = json.loads(summary.read_text())
    tf = tau_free(0.067, 0.05, 15.0)
    for key in ("exact_time_fs", "asymptotic_time_fs", "tau_free_fs"):
        assert doc[key] == pytest.approx(tf, rel=1e-6)
    assert doc["max_H_drift"] <= 1e-6
    assert doc["truncated_weight"] < 1e-3


def test_packet_insufficient_span(capsys):
    code, _, err = run(capsys, "packet", "--figure", "5", "--tmax", "200")
    assert code == EXIT_NUMERICAL
    assert "numerical failure" in err


def test_non_transmitted_component_has_no_times(tmp_path, capsys):
    summary = tmp_path / "s.json"
    code, _, _ = run(capsys, "packet", "--x0", "0", "--halfwidth", "10", "--E0", "0.05", "--V0", "0.05",
                     "--a", "100", "--b", "110", "--mass", "0.067", "--tmax", "100", "--tstep", "10",
                     "--component", "full", "--summary", str(summary))
    doc = json.loads(summary.read_text())
    assert code == 0 and doc["exact_time_fs"] is None and doc["component"] == "full"
    assert doc["max_H_drift"] <= 1e-6


def test_dwell_is_deterministic(capsys):
    _, first, _ = run(capsys, "sweep", "--figure", "3")
    _, second, _ = run(capsys, "sweep", "--figure", "3")
    assert first == second


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "tunneltimes", "dwell", "--E", "0.09", *BARRIER],
                         capture_output=True, text=True, check=True).stdout
    assert json.loads(out)["tau_tr_fs"] == pytest.approx(109.42391470300878, rel=1e-13)
