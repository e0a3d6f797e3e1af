"""Tests for run configuration files, strict CSV tables and run manifests."""

import json
import math
from pathlib import Path

import numpy as np
import pytest

from sqzlab.artifacts import (
    RunManifest,
    parse_config,
    read_manifest,
    read_spectrum_trace,
    read_table,
    reference_config,
    write_manifest,
    write_spectrum_trace,
    write_table,
)
from sqzlab.artifacts.config_file import apply_overrides, load_config
from sqzlab.artifacts.traces import atomic_write_text, dumps, format_cell
from sqzlab.errors import (
    ColumnMismatchError,
    ConfigSchemaError,
    InconsistentDataError,
    TraceFormatError,
)
from sqzlab.models import SpectrumTrace, TraceUnit


def _reference_text(**cavity: object) -> str:
    document = reference_config()
    document["cavity"].update(cavity)
    return json.dumps(document, indent=2)


def test_reference_config_is_valid() -> None:
    """Test the reference device document and its derived objects."""
    config = parse_config(_reference_text())
    cavity = config.cavity_params()
    assert cavity.escape_efficiency == pytest.approx(1 - 550 / 950)
    assert config.loss_chain(cavity).total_efficiency == pytest.approx(0.2211, abs=1e-4)
    assert config.pump_ratio(cavity) == pytest.approx(0.310, abs=1e-3)


def test_missing_key_reports_path_and_line() -> None:
    """Test that a missing required key names its dotted path and enclosing line."""
    document = reference_config()
    del document["cavity"]["q_total"]
    with pytest.raises(ConfigSchemaError) as excinfo:
        parse_config(json.dumps(document, indent=2))
    assert excinfo.value.key_path == "cavity.q_total"
    assert excinfo.value.line == 2
    assert "missing required key 'q_total'" in str(excinfo.value)


def test_unknown_key_is_rejected() -> None:
    """Test strict schemas at every level."""
    with pytest.raises(ConfigSchemaError, match="unknown key 'colour'") as excinfo:
        parse_config(_reference_text(colour="blue"))
    assert excinfo.value.line == 6


def test_invalid_json_reports_line() -> None:
    """Test JSON syntax errors."""
    with pytest.raises(ConfigSchemaError, match="invalid JSON") as excinfo:
        parse_config('{\n  "cavity": }\n')
    assert excinfo.value.line == 2
    with pytest.raises(ConfigSchemaError, match="JSON object"):
        parse_config("[1, 2]")


def test_overrides_are_applied_before_validation() -> None:
    """Test dotted overrides with JSON values and their malformed forms."""
    config = parse_config(
        _reference_text(),
        ["simulation.segment_length=1024", 'loss.extra_factors={"splice": 0.9}'],
    )
    assert config.simulation.segment_length == 1024
    assert config.loss.extra_factors == {"splice": 0.9}
    with pytest.raises(ConfigSchemaError, match="key.path=value"):
        apply_overrides({}, ["simulation.seed"])
    with pytest.raises(ConfigSchemaError, match="non-object"):
        apply_overrides({"cavity": 3}, ["cavity.q_total=1"])


def test_load_config_missing_file(tmp_path: Path) -> None:
    """Test that an unreadable file is a configuration error."""
    with pytest.raises(ConfigSchemaError, match="cannot read"):
        load_config(tmp_path / "absent.json")


def test_sim_config_defaults_resolve_against_cavity() -> None:
    """Test the default step, run length, record count and seed precedence."""
    config = parse_config(_reference_text(), ["simulation.segment_length=512"])
    cavity = config.cavity_params()
    sim = config.sim_config(cavity)
    assert sim.dt == pytest.approx(0.01 * 2 * math.pi / cavity.total_rate)
    assert sim.duration == pytest.approx(100 * 512 * sim.dt)
    assert sim.records == 10
    assert sim.lo_power == pytest.approx(1.3e-3)
    assert config.sim_config(cavity, seed=7).seed == 7
    seeded = parse_config(_reference_text(), ["simulation.seed=11"])
    assert seeded.sim_config(cavity).seed == 11
    assert seeded.sim_config(cavity, seed=7).seed == 7
    averaged = parse_config(_reference_text(), ["simulation.records=40"])
    assert averaged.sim_config(cavity).records == 40
    with pytest.raises(ConfigSchemaError):
        parse_config(_reference_text(), ["simulation.records=0"])


def test_table_keeps_metadata_and_empty_cells(tmp_path: Path) -> None:
    """Test metadata rows, empty cells as NaN and locale-free numbers."""
    path = write_table(
        tmp_path / "table.csv",
        ["freq_hz", "fwhm_hz"],
        [(1e6, None), (2.5e6, 0.125)],
        {"pump_ratio": 0.31, "label": "cold"},
    )
    text = path.read_text(encoding="utf-8")
    assert text.splitlines()[:3] == ['# label="cold"', "# pump_ratio=0.31", "freq_hz,fwhm_hz"]
    assert "1000000,\n" in text

    table = read_table(path, ["freq_hz", "fwhm_hz"])
    assert table.metadata == {"label": "cold", "pump_ratio": 0.31}
    assert len(table) == 2
    assert math.isnan(table["fwhm_hz"][0])
    assert table["fwhm_hz"][1] == 0.125


def test_table_rejects_malformed_files(tmp_path: Path) -> None:
    """Test header, line-ending, number and cell-count violations."""
    good = write_table(tmp_path / "good.csv", ["a", "b"], [(1.0, 2.0)])
    with pytest.raises(ColumnMismatchError, match="column mismatch"):
        read_table(good, ["b", "a"])

    crlf = tmp_path / "crlf.csv"
    crlf.write_bytes(b"a,b\r\n1,2\r\n")
    with pytest.raises(TraceFormatError, match="CR line endings"):
        read_table(crlf)

    comma = tmp_path / "comma.csv"
    comma.write_text('a,b\n"1,5",2\n', encoding="utf-8")
    with pytest.raises(TraceFormatError, match="'.'-decimal") as excinfo:
        read_table(comma)
    assert excinfo.value.line == 2

    short = tmp_path / "short.csv"
    short.write_text("a,b\n1\n", encoding="utf-8")
    with pytest.raises(TraceFormatError, match="expected 2 cells, found 1"):
        read_table(short)

    with pytest.raises(ValueError, match="cells"):
        write_table(tmp_path / "bad.csv", ["a", "b"], [(1.0,)])


def test_spectrum_trace_file_carries_unit(tmp_path: Path) -> None:
    """Test that the unit row selects the header on reading."""
    trace = SpectrumTrace([1e6, 2e6], [-1.0, 2.0], TraceUnit.SHOT_NORMALIZED_DB, {"seed": 3})
    path = write_spectrum_trace(tmp_path / "spectrum.csv", trace)
    assert "freq_hz,psd_db_rel_shot" in path.read_text(encoding="utf-8")
    loaded = read_spectrum_trace(path)
    assert loaded.unit is TraceUnit.SHOT_NORMALIZED_DB
    assert loaded.metadata == {"seed": 3}
    np.testing.assert_array_equal(loaded.values, trace.values)

    bare = tmp_path / "bare.csv"
    bare.write_text("freq_hz,psd\n1,2\n", encoding="utf-8")
    assert read_spectrum_trace(bare).unit is TraceUnit.RAW_PSD
    odd = tmp_path / "odd.csv"
    odd.write_text("freq,level\n1,2\n", encoding="utf-8")
    with pytest.raises(ColumnMismatchError):
        read_spectrum_trace(odd)


def test_atomic_write_leaves_no_temporaries(tmp_path: Path) -> None:
    """Test that only the target file remains after a write."""
    atomic_write_text(tmp_path / "out" / "result.json", dumps({"b": 1, "a": np.float64(0.5)}))
    assert [p.name for p in (tmp_path / "out").iterdir()] == ["result.json"]
    assert (tmp_path / "out" / "result.json").read_text() == '{\n  "a": 0.5,\n  "b": 1\n}\n'


def test_format_cell() -> None:
    """Test the locale-free cell formatting."""
    assert format_cell(None) == ""
    assert format_cell(True) == "1"
    assert format_cell(np.int64(3)) == "3"
    assert format_cell(0.1) == "0.10000000000000001"
    assert format_cell(-math.inf) == "-inf"


def test_manifest_detects_changed_inputs(tmp_path: Path) -> None:
    """Test input digests, output digests and the manifest file round trip."""
    source = tmp_path / "trace.csv"
    source.write_text("a\n1\n", encoding="utf-8")
    output = tmp_path / "run" / "fit.json"
    atomic_write_text(output, "{}\n")

    manifest = RunManifest.for_inputs("fit", [source], seed=5).with_outputs(
        {"fit": output}, tmp_path / "run"
    )
    assert manifest.outputs == {"fit": "fit.json"}
    manifest.check_inputs()
    path = write_manifest(manifest, tmp_path / "run")
    loaded = read_manifest(path)
    assert loaded == manifest
    assert loaded.differing_outputs(manifest) == []

    source.write_text("a\n2\n", encoding="utf-8")
    with pytest.raises(InconsistentDataError, match="changed"):
        loaded.check_inputs()
    source.unlink()
    with pytest.raises(InconsistentDataError, match="missing"):
        loaded.check_inputs()

    changed = manifest.model_copy(update={"output_digests": {"fit": "0" * 64}})
    assert manifest.differing_outputs(changed) == ["fit"]


def test_read_manifest_rejects_bad_documents(tmp_path: Path) -> None:
    """Test manifest schema validation."""
    path = tmp_path / "manifest.json"
    path.write_text('{"options": {}}', encoding="utf-8")
    with pytest.raises(ConfigSchemaError, match="command"):
        read_manifest(path)
