import json

import pytest

from neurogab import compile, decode_words
from neurogab.compiler import Variant
from neurogab.engine import TraceLog
from neurogab.formats import (
    FormatError,
    RunManifest,
    format_h,
    format_results,
    format_words,
    load_h,
    load_layout,
    parse_h,
    parse_results,
    parse_words,
    read_trace,
    save_layout,
    write_trace,
)
from neurogab.gab import DecoderParams


def test_h_round_trip(H):
    assert parse_h(format_h(H)) == H
    assert load_h("@example8") == H


def test_shipped_example_file(H):
    from importlib.resources import files
    assert parse_h((files("neurogab") / "data" / "example8.h").read_text()) == H


@pytest.mark.parametrize("text,line", [
    ("4 8 2\n", 1),
    ("4 8 2 4\n01001011\n10010110\n", 3),
    ("4 8 2 4\n01001011\n1001x110\n00110101\n11101000\n", 3),
    ("4 8 2 4\n01001011\n10010111\n00110101\n11101000\n", 3),
    ("2 2 1 1\n10\n01\n", 1),
])
def test_h_errors_have_line_numbers(text, line):
    with pytest.raises(FormatError) as info:
        parse_h(text, "h.txt")
    assert info.value.line == line
    assert str(info.value).startswith(f"h.txt:{line}:")


def test_h_irregular_column():
    with pytest.raises(FormatError, match="column"):
        parse_h("2 4 1 2\n1100\n1100\n")


def test_missing_file():
    with pytest.raises(FormatError):
        load_h("/nonexistent/h.txt")


@pytest.mark.parametrize("variant", list(Variant))
def test_layout_round_trip(tmp_path, H, variant):
    layout = compile(H, DecoderParams(7), variant)
    path = tmp_path / "layout.json"
    save_layout(layout, path)
    back = load_layout(path)
    assert back == layout
    assert back.iteration_threshold == layout.iteration_threshold
    save_layout(back, tmp_path / "again.json")
    assert path.read_bytes() == (tmp_path / "again.json").read_bytes()


def test_layout_explicit_fields(tmp_path, layouts):
    path = tmp_path / "l.json"
    save_layout(layouts[Variant.XOR_INTEGRATED], path)
    data = json.loads(path.read_text().split("\n", 1)[1])
    neuron = data["grid"]["cores"][0]["neurons"][0]
    assert set(neuron) == {"label", "op_select", "weights", "threshold", "leak",
                           "reset_potential", "destination", "fan_in"}


def test_layout_bad_json(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("# neurogab\n{\n  \"format\": 1,\n  oops\n}\n")
    with pytest.raises(FormatError) as info:
        load_layout(p)
    assert info.value.line == 4
    p.write_text("{\"format\": 1}")
    with pytest.raises(FormatError, match="params"):
        load_layout(p)


def test_words():
    assert parse_words("# c\n10001100\n\n01001011\n", 8) == ["10001100", "01001011"]
    with pytest.raises(FormatError) as info:
        parse_words("10001100\n1000110\n", 8)
    assert info.value.line == 2
    with pytest.raises(FormatError):
        parse_words("10a\n")
    assert parse_words(format_words([(1, 0, 1)])) == ["101"]


def test_trace_round_trip(tmp_path, layouts):
    run = decode_words(layouts[Variant.XOR_INTEGRATED], ["10001100", "11111111"])
    path = tmp_path / "t.csv"
    write_trace(run.trace, path)
    lines = path.read_text().splitlines()
    assert lines[1] == "tick,core_x,core_y,neuron_index,label"
    assert any(",host,host," in ln for ln in lines)
    back = read_trace(path)
    assert back.total_spike_count == run.trace.total_spike_count
    assert back.host_tick.tolist() == run.trace.host_tick.tolist()
    assert back.per_tick_counts() == run.trace.per_tick_counts()


def test_empty_trace(tmp_path):
    path = tmp_path / "e.csv"
    write_trace(TraceLog.empty(), path)
    assert read_trace(path).total_spike_count == 0


def test_results_format(layouts):
    run = decode_words(layouts[Variant.XOR_INTEGRATED], ["10001100"])
    rows = parse_results(format_results(run.results))
    assert rows == [{"word": "10001100", "x_prime": "10001101", "status": "converged",
                     "output_tick": "9"}]


def test_manifest(tmp_path):
    (tmp_path / "w.txt").write_text("10001100\n")
    m = RunManifest(h_file="@example8", schedule_file="w.txt", max_iter=5, extra={"note": 1})
    m.save(tmp_path / "m.json")
    back = RunManifest.load(tmp_path / "m.json")
    assert back.schedule_file == str(tmp_path / "w.txt")
    assert back.extra == {"note": 1}
    assert back.validate().N == 8
    bad = RunManifest(h_file=str(tmp_path / "missing.h"))
    with pytest.raises(FormatError):
        bad.validate()
