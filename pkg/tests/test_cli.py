import json
import math
import xml.etree.ElementTree as ET

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from diracdot import cli, emit, scans
from diracdot.config import Direction, convert_units, parse_config, parse_seeds, read_config_file
from diracdot.core import DotParams, StateKind
from diracdot.errors import DomainError, IoError, TrackLost, UnmatchedResonance, UsageError

import roundtrip

SPECTRUM_ARGS = ["spectrum", "--mu", "2", "--ell", "2", "--v-min", "-14", "--v-max", "-0.1"]


# ---------------------------------------------------------------------------
# configuration


def test_spectrum_example_is_valid():
    cfg = parse_config(SPECTRUM_ARGS)
    assert cfg.command == "spectrum" and cfg.mu == 2.0 and cfg.ell == 2
    assert cfg.grids["v_min"] == -14.0 and cfg.grids["v_max"] == -0.1
    assert cfg.grids["v_steps"] == 279
    assert cfg.output.path is None and cfg.output.format == "csv"


def test_flags_override_config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# massive run\nmu = 2\nell = 2\nv = -4   # depth\n", encoding="utf-8")
    cfg = parse_config(["delay", "--config", str(path), "--mu", "0"])
    assert cfg.mu == 0.0 and cfg.params.massless
    assert cfg.ell == 2 and cfg.v == -4.0
    assert cfg.grids["eps_min"] > 0


def test_config_file_argument_and_output_suffix(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(f"mu = 2\nv = -3\noutput = {tmp_path / 'out.json'}\n", encoding="utf-8")
    cfg = parse_config(["delay"], config_file=str(path))
    assert cfg.output.format == "json" and cfg.mu == 2.0


def test_eps_min_below_mass_is_rejected():
    with pytest.raises(UsageError, match="eps_min"):
        parse_config(["delay", "--mu", "2", "--eps-min", "1"])


def test_unknown_config_key_is_named(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("mu = 2\ncolour = red\n", encoding="utf-8")
    with pytest.raises(UsageError, match="colour"):
        read_config_file(str(path))
    with pytest.raises(UsageError, match="colour"):
        parse_config(["capture", "--config", str(path)])


def test_config_errors():
    with pytest.raises(UsageError, match="--bogus|unrecognized"):
        parse_config(["capture", "--mu", "2", "--bogus"])
    with pytest.raises(UsageError):
        parse_config(["capture"])
    with pytest.raises(UsageError):
        parse_config(["spectrum", "--mu", "2", "--v-min", "-1", "--v-max", "-2"])
    with pytest.raises(UsageError):
        parse_config(["spectrum", "--mu", "2", "--v-min", "-3", "--v-max", "1"])
    with pytest.raises(UsageError):
        parse_config(["capture", "--mu", "2", "--ell", "-1"])
    with pytest.raises(UsageError):
        parse_config(["delay", "--mu", "2"])
    with pytest.raises(UsageError):
        parse_config(["capture", "--mu", "2", "--format", "xml"])
    with pytest.raises(IoError):
        parse_config(["capture", "--config", "/nonexistent/run.cfg"])


def test_parse_seeds():
    assert parse_seeds("2.9-0.6i, 1+2i,3") == [2.9 - 0.6j, 1 + 2j, 3 + 0j]
    with pytest.raises(UsageError):
        parse_seeds("abc")
    with pytest.raises(UsageError):
        parse_seeds(",")


# ---------------------------------------------------------------------------
# unit conversion

positive = st.floats(1e-3, 1e3)
value = st.floats(-1e3, 1e3)


@settings(max_examples=100, deadline=None)
@given(E=value, V0=value, m=st.floats(0, 1e3), R=positive, vF=positive, hbar=positive)
def test_convert_round_trip(E, V0, m, R, vF, hbar):
    constants = {"R": R, "vF": vF, "hbar": hbar}
    nat = convert_units(Direction.TO_NATURAL, {"E": E, "V0": V0, "m": m}, constants)
    back = convert_units(Direction.FROM_NATURAL, nat, constants)
    for key, x in (("E", E), ("V0", V0), ("m", m)):
        assert back[key] == pytest.approx(x, rel=1e-12, abs=1e-300)


def test_convert_identity_and_linearity():
    unit = {"R": 1.0, "vF": 1.0, "hbar": 1.0}
    values = {"E": 1.5, "V0": -3.25, "m": 2.0}
    assert convert_units("ToNatural", values, unit) == {"eps": 1.5, "v": -3.25, "mu": 2.0}
    one = convert_units("ToNatural", values, {"R": 0.7, "vF": 1.3, "hbar": 0.4})
    two = convert_units("ToNatural", values, {"R": 1.4, "vF": 1.3, "hbar": 0.4})
    for key in one:
        assert two[key] == pytest.approx(2 * one[key], rel=1e-14)


def test_convert_mass_from_constants_and_errors():
    out = convert_units("ToNatural", {"E": 1.0}, {"R": 2.0, "vF": 1.0, "hbar": 1.0, "m": 3.0})
    assert out == {"eps": 2.0, "mu": 6.0}
    with pytest.raises(DomainError):
        convert_units("ToNatural", {"E": 1.0}, {"R": 0.0, "vF": 1.0, "hbar": 1.0})
    with pytest.raises(DomainError):
        convert_units("ToNatural", {"E": 1.0}, {"R": 1.0, "vF": 1.0})
    with pytest.raises(DomainError):
        convert_units("FromNatural", {"E": 1.0}, {"R": 1.0, "vF": 1.0, "hbar": 1.0})
    with pytest.raises(DomainError):
        convert_units("FromNatural", {"mu": -1.0}, {"R": 1.0, "vF": 1.0, "hbar": 1.0})


# ---------------------------------------------------------------------------
# serialization


@pytest.fixture(scope="module")
def results():
    p = DotParams(2.0, -2.75, 0)
    curve = scans.delay_scan(2.0, 0, -2.75, 2.001, 9.0, 400)
    found = scans.resonances_for_curve(p, curve)
    return {
        "spectrum": scans.bound_spectrum(2.0, 2, -6.0, -2.0, 41),
        "capture": scans.capture_depths(2.0, 2, 3),
        "resonances": scans.find_resonances(DotParams(2.0, -1.0, 2)),
        "trajectory": scans.track_resonance(2.0, 2, scans.depth_grid(-2.5, -3.0), 2.1495381899954653 - 0.015282756000943523j),
        "delay": curve,
        "consistency": scans.consistency_report(2.0, 0, -2.75, found, curve),
        "spinor": scans.spinor_profile(DotParams(2.0, -4.0, 2), None, StateKind.BOUND, np.linspace(0.1, 3.0, 30)),
        "convert": convert_units("ToNatural", {"E": 1.0 / 3, "V0": -2.0 / 7, "m": math.pi}, {"R": 1.1, "vF": 0.9, "hbar": 1.0}),
    }


@pytest.mark.parametrize("name", ["spectrum", "capture", "resonances", "trajectory", "delay", "consistency", "spinor", "convert"])
def test_csv_round_trip(results, name):
    roundtrip.check(results[name])


def test_csv_schemas(results):
    assert emit.table(results["delay"])[0] == ["eps", "raw_phase", "unwrapped_phase", "delay"]
    assert emit.table(results["trajectory"])[0] == ["v", "eps_R", "eps_I", "residual", "classification"]
    text = emit.to_csv(results["trajectory"])
    assert text.splitlines()[0] == "v,eps_R,eps_I,residual,classification"


def test_csv_uses_fifteen_digits():
    assert emit.fmt(1 / 3) == "0.333333333333333"
    assert emit.fmt(None) == "" and emit.fmt(3) == "3"


def test_json_mirrors_field_names(results):
    data = json.loads(emit.to_json(results["trajectory"]))
    assert {"mu", "ell", "points", "capture_events", "classifications", "lost", "message"} <= set(data)
    point = data["points"][0]
    assert {"param_value", "root", "residual", "step_accepted", "substeps"} <= set(point)
    assert set(point["root"]) == {"re", "im"}
    curve = json.loads(emit.to_json(results["delay"]))
    assert len(curve["energies"]) == len(results["delay"].energies)
    assert json.loads(emit.to_json(results["spectrum"]))["critical_depths"]


def _polylines(svg):
    root = ET.fromstring(svg)
    return root, [e for e in root.iter() if e.tag.endswith("polyline")]


def test_svg_spectrum_has_one_polyline_per_branch(results):
    levels = results["spectrum"]
    root, lines = _polylines(emit.to_svg(levels))
    assert root.tag.endswith("svg")
    assert len(lines) == len(levels.branches)
    dots = [e for e in root.iter() if e.tag.endswith("circle")]
    assert len(dots) == len(levels.critical_depths) + len(levels.supercritical_depths)
    text = "".join(root.itertext())
    assert "ε" in text and "v" in text


def test_svg_other_results(results):
    for name in ("delay", "trajectory", "consistency", "spinor"):
        _, lines = _polylines(emit.to_svg(results[name]))
        assert lines, name
    _, lines = _polylines(emit.to_svg([results["trajectory"], results["trajectory"]]))
    assert len(lines) == 2


def test_emit_to_file_and_errors(results, tmp_path):
    out = tmp_path / "delay.csv"
    assert emit.emit(results["delay"], "csv", out) == [str(out)]
    header, rows = emit.read_csv(out)
    assert header[0] == "eps" and len(rows) == len(results["delay"].energies)
    with pytest.raises(IoError):
        emit.emit(results["delay"], "csv", tmp_path / "missing" / "x.csv")
    with pytest.raises(IoError):
        emit.read_csv(tmp_path / "missing.csv")
    with pytest.raises(UsageError):
        emit.table(object())
    paths = emit.emit([results["trajectory"]] * 2, "csv", tmp_path / "track.csv")
    assert [p.rsplit("/", 1)[-1] for p in paths] == ["track_1.csv", "track_2.csv"]


# ---------------------------------------------------------------------------
# command line and exit codes


def test_cli_capture_writes_csv(tmp_path, capsys):
    out = tmp_path / "capture.csv"
    assert cli.run(["capture", "--mu", "2", "--ell", "2", "--output", str(out)]) == 0
    header, rows = emit.read_csv(out)
    assert header == ["kind", "v", "p_inner", "residual"]
    crit = [r[1] for r in rows if r[0] == "Critical"]
    assert [scans.two_decimals(v) for v in crit[:3]] == [-2.75, -5.86, -8.99]
    assert "critical depth 1: v = -2.75" in capsys.readouterr().err.lower()


def test_cli_stdout_json_and_convert(capsys):
    assert cli.run(["-q", "convert", "--to", "natural", "--E", "2", "--R", "3", "--format", "json"]) == 0
    assert json.loads(capsys.readouterr().out) == {"eps": 6.0}
    assert cli.run(["-q", "spinor", "--mu", "2", "--ell", "2", "--v", "-4", "--rho-steps", "5"]) == 0
    assert capsys.readouterr().out.startswith("rho,region,")


def test_exit_codes(tmp_path, monkeypatch, capsys):
    assert cli.run(["delay", "--mu", "2", "--v", "-2", "--eps-min", "1"]) == UsageError.exit_code == 2
    assert "UsageError" in capsys.readouterr().err
    bad = str(tmp_path / "missing" / "out.csv")
    assert cli.run(["-q", "capture", "--mu", "2", "--ell", "2", "--output", bad]) == IoError.exit_code == 3
    code = cli.run(["-q", "resonances", "--mu", "2", "--ell", "2", "--v-min", "-1.2", "--v-max", "-1",
                    "--seeds", "40+40i", "--output", str(tmp_path / "lost.csv")])
    assert code == TrackLost.exit_code == 8

    monkeypatch.setattr(scans, "delay_maxima", lambda curve: np.array([], dtype=int))
    code = cli.run(["-q", "consistency", "--mu", "2", "--ell", "0", "--v", "-2.75", "--eps-max", "9",
                    "--seeds", "4.47-1.16i", "--output", str(tmp_path / "c.csv")])
    assert code == UnmatchedResonance.exit_code == 9


def test_cli_resonance_track(tmp_path, capsys):
    out = tmp_path / "track.csv"
    code = cli.run(["resonances", "--mu", "2", "--ell", "2", "--v-min", "-3", "--v-max", "-2.5",
                    "--seeds", "2.1495381899954653-0.015282756000943523i", "--output", str(out)])
    assert code == 0
    header, rows = emit.read_csv(out)
    assert rows[0][0] == -2.5
    err = capsys.readouterr().err
    assert "Critical capture: v = -2.75" in err
