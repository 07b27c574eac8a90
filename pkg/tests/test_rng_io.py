import json
import math

import numpy as np

from fpld import _io
from fpld.rng import stream, streams


def test_stream_replays():
    a = stream(7, "noise", 3).standard_normal(5)
    b = stream(7, "noise", 3).standard_normal(5)
    assert np.array_equal(a, b)


def test_streams_differ_by_tag_and_index():
    base = stream(7, "noise", 0).random(4)
    assert not np.array_equal(base, stream(7, "chain", 0).random(4))
    assert not np.array_equal(base, stream(7, "noise", 1).random(4))
    assert not np.array_equal(base, stream(8, "noise", 0).random(4))


def test_streams_list_matches_individual():
    gens = streams(5, "t", 3, start=2)
    for i, g in enumerate(gens):
        assert np.array_equal(g.random(3), stream(5, "t", 2 + i).random(3))


def test_large_seed_accepted():
    stream(2**64 - 1, "x").random()


def test_fmt_round_trips_17_digits():
    x = 0.1 + 0.2
    assert float(_io.fmt(x)) == x
    assert _io.fmt(None) == ""
    assert _io.fmt(True) == "true"
    assert _io.fmt(np.int64(3)) == "3"
    assert _io.fmt(math.inf) == "inf"


def test_json_text_handles_numpy_and_nonfinite():
    text = _io.json_text({"b": np.array([1.0, 2.0]), "a": math.inf})
    data = json.loads(text)
    assert data == {"a": "inf", "b": [1.0, 2.0]}
    assert text.index('"a"') < text.index('"b"')


def test_csv_text_layout():
    assert _io.csv_text(["x", "y"], [(1, 0.5)]) == "x,y\n1,0.5\n"
