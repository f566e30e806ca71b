import json

import pytest

from annealab_plots import figspec
from annealab_plots.figspec import FigureSpec, SpecError, load_specs, schema_text


def test_unknown_kind_is_rejected_by_name(spec_file):
    path = spec_file({"kind": "pie-chart", "inputs": "*.csv"})
    with pytest.raises(SpecError, match="pie-chart"):
        load_specs(path)


def test_unknown_field_is_named(spec_file):
    path = spec_file({"kind": "gaps", "inputs": "*.csv", "colour": "red"})
    with pytest.raises(SpecError, match="colour"):
        load_specs(path)


def test_inputs_is_required(spec_file):
    with pytest.raises(SpecError, match="inputs"):
        load_specs(spec_file({"kind": "gaps"}))


def test_axis_limits_must_be_numeric_pairs(spec_file):
    path = spec_file({"kind": "gaps", "inputs": "*.csv", "xlim": [0, "a"]})
    with pytest.raises(SpecError, match="xlim"):
        load_specs(path)


def test_smooth_window_validation(spec_file):
    with pytest.raises(SpecError, match="smooth_window"):
        load_specs(spec_file({"kind": "qa-vs-sqa", "inputs": "*.csv",
                              "smooth_window": 0}))
    with pytest.raises(SpecError, match="smooth_window"):
        load_specs(spec_file({"kind": "qa-vs-sqa", "inputs": "*.csv",
                              "smooth_window": True}))


def test_defaults_and_out_name(spec_file):
    spec, = load_specs(spec_file({"kind": "overlaps", "inputs": "*.csv"}))
    assert spec.smooth_window == figspec.DEFAULT_SMOOTH_WINDOW
    assert spec.out_name == "overlaps.png"
    assert spec.dpi == 150 and not spec.logy


def test_relative_glob_resolves_against_spec_dir(tmp_path):
    sub = tmp_path / "deep"
    sub.mkdir()
    path = sub / "s.json"
    path.write_text(json.dumps({"kind": "gaps", "inputs": "data/*.csv"}))
    spec, = load_specs(str(path))
    assert spec.inputs == str(sub / "data" / "*.csv")


def test_figures_list_and_duplicate_out_names(spec_file):
    path = spec_file({"figures": [
        {"kind": "gaps", "inputs": "a*.csv"},
        {"kind": "gaps", "inputs": "b*.csv"},
    ]})
    with pytest.raises(SpecError, match="same output"):
        load_specs(path)
    path = spec_file({"figures": [
        {"kind": "gaps", "inputs": "a*.csv", "out": "one.png"},
        {"kind": "gaps", "inputs": "b*.csv", "out": "two.png"},
    ]})
    assert [s.out_name for s in load_specs(path)] == ["one.png", "two.png"]


def test_missing_file_and_bad_json(tmp_path):
    with pytest.raises(SpecError, match="not found"):
        load_specs(str(tmp_path / "absent.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{nope")
    with pytest.raises(SpecError, match="JSON"):
        load_specs(str(bad))


def test_schema_text_mentions_every_kind():
    text = schema_text()
    for kind in figspec.KINDS:
        assert kind in text


def test_spec_is_frozen():
    spec = FigureSpec(kind="gaps", inputs="*.csv")
    with pytest.raises(AttributeError):
        spec.dpi = 300
