"""CSV formatting contract: pinned cell spellings, emit/parse inverses."""

import math

import pytest

from hvarray.csvio import CsvTrace, emit, parse, read_file, write_file
from hvarray.errors import ConfigurationError


def test_cell_formats_are_pinned():
    trace = CsvTrace(
        ("a", "b", "c", "d", "e"),
        ((0.2, 7, True, None, "note"), (-1.5e-9, 0, False, None, "")),
    )
    text = emit(trace)
    assert text == (
        "a,b,c,d,e\n"
        "2.000000000e-01,7,1,,note\n"
        "-1.500000000e-09,0,0,,\n"
    )


def test_inf_round_trips():
    trace = CsvTrace(("r",), ((math.inf,), (-math.inf,)))
    text = emit(trace)
    assert text == "r\ninf\n-inf\n"
    back = parse(text)
    assert back.rows == ((math.inf,), (-math.inf,))


def test_emit_parse_emit_is_byte_identity():
    trace = CsvTrace(
        ("t_ns", "i_pad_A", "flag", "note"),
        (
            (0.0, 2.0082762730708863e-08, 0, None),
            (45.0, 1.6384e-02, 1, "compliance"),
            (90.0, math.inf, 0, None),
        ),
    )
    once = emit(trace)
    assert emit(parse(once)) == once


def test_parse_types():
    trace = parse("a,b,c,d\n3,2.5e+00,text,\n")
    row = trace.rows[0]
    assert row[0] == 3 and isinstance(row[0], int)
    assert row[1] == 2.5 and isinstance(row[1], float)
    assert row[2] == "text"
    assert row[3] is None


def test_column_lookup():
    trace = CsvTrace(("x", "y"), ((1, 2), (3, 4)))
    assert trace.column("y") == (2, 4)
    with pytest.raises(ConfigurationError):
        trace.column("z")


def test_row_width_validated():
    with pytest.raises(ConfigurationError, match="row 1"):
        CsvTrace(("x", "y"), ((1, 2), (3,)))


def test_parse_rejects_empty():
    with pytest.raises(ConfigurationError):
        parse("")


def test_file_round_trip(tmp_path):
    trace = CsvTrace(("v", "i"), ((0.2, 2e-8), (1.0, None)))
    path = str(tmp_path / "trace.csv")
    write_file(path, trace)
    assert read_file(path) == trace
    # exact bytes on disk, no platform newline translation
    with open(path, "rb") as fh:
        assert fh.read() == b"v,i\n2.000000000e-01,2.000000000e-08\n1.000000000e+00,\n"
