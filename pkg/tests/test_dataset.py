import csv
import io
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from bi3.dataset import (NOMINAL, NUMERIC, Dataset, FeatureSchema, canonicalize, load_file, load_report,
                         parse_csv, parse_keel, to_csv)
from bi3.errors import ParseError, PreconditionError
from bi3.suites import keel_path
from conftest import needs_keel

SMALL_KEEL = """@relation toy
@attribute a real [0.0, 10.0]
@attribute b integer [1, 4]
@attribute class {positive, negative}
@inputs a, b
@outputs class
@data
1.0, 2, negative
2.5, 3, positive
3.0, 1, negative
"""


def test_keel_small_header():
    ds = parse_keel(SMALL_KEEL)
    assert (ds.n, ds.d) == (3, 2)
    assert ds.name == "toy"
    assert ds.class_names == ("positive", "negative")
    assert ds.y.tolist() == [-1, 1, -1]
    assert [c.kind for c in ds.schema.columns] == [NUMERIC, NUMERIC]


def test_keel_accepts_stream():
    assert parse_keel(io.StringIO(SMALL_KEEL)).n == 3


def test_keel_arity_error_names_line():
    bad = SMALL_KEEL.replace("3.0, 1, negative", "3.0, negative")
    with pytest.raises(ParseError) as err:
        parse_keel(bad)
    assert err.value.line == 10
    assert "line 10" in str(err.value)


def test_keel_unknown_nominal_value():
    text = SMALL_KEEL.replace("@attribute b integer [1, 4]", "@attribute b {x, y}").replace(", 2,", ", z,")
    with pytest.raises(ParseError, match="unknown nominal value 'z'"):
        parse_keel(text)


def test_keel_malformed_header():
    with pytest.raises(ParseError) as err:
        parse_keel(SMALL_KEEL.replace("@attribute b integer [1, 4]", "@attribute b"))
    assert err.value.line == 3
    with pytest.raises(ParseError, match="unknown attribute type"):
        parse_keel(SMALL_KEEL.replace("integer [1, 4]", "blob"))
    with pytest.raises(ParseError, match="missing @data"):
        parse_keel(SMALL_KEEL.split("@data")[0])


def test_keel_output_not_last_and_nominal_inputs():
    text = """@relation r
@attribute class {yes, no}
@attribute color {red, blue}
@attribute w real [0, 1]
@inputs color, w
@outputs class
@data
no, red, 0.5
yes, blue, 0.1
no, blue, 0.2
"""
    ds = parse_keel(text)
    assert ds.schema.names == ["color", "w"]
    assert ds.schema.columns[0].kind == NOMINAL
    assert ds.schema.columns[0].categories == ("red", "blue")
    assert ds.X[:, 0].tolist() == [0, 1, 1]
    assert ds.class_names == ("yes", "no")


def test_keel_missing_rows_dropped():
    text = SMALL_KEEL.replace("3.0, 1, negative", "3.0, 1, negative\n?, 1, negative\n4.0, <null>, positive")
    ds = parse_keel(text)
    assert ds.n == 3
    assert ds.info.rows_read == 5
    assert ds.info.rows_dropped_missing == 2


def test_keel_without_inputs_outputs_uses_last_attribute():
    text = "\n".join(l for l in SMALL_KEEL.splitlines() if not l.startswith(("@inputs", "@outputs")))
    assert parse_keel(text).y.tolist() == [-1, 1, -1]


@needs_keel
def test_keel_iris0():
    ds = load_file(keel_path("iris0"))
    s = ds.stats
    assert (ds.n, ds.d, s.n_pos, s.n_neg, s.ratio) == (150, 4, 50, 100, 2.0)


@needs_keel
def test_keel_abalone19_ratio():
    assert round(load_file(keel_path("abalone19")).stats.ratio, 2) == 129.44


def test_csv_frequency_rule():
    ds = parse_csv("x,label\n1,a\n2,a\n3,a\n4,b\n")
    assert ds.class_names == ("b", "a")
    assert (ds.stats.n_pos, ds.stats.n_neg) == (1, 3)


def test_csv_mixed_column_is_nominal():
    ds = parse_csv("f,g,label\n1.5,1,a\nx,2,b\n1.5,3,a\n")
    assert ds.schema.columns[0].kind == NOMINAL
    assert ds.schema.columns[0].categories == ("1.5", "x")
    assert ds.schema.columns[1].kind == NUMERIC


def test_csv_errors():
    with pytest.raises(ParseError, match="empty"):
        parse_csv("")
    with pytest.raises(ParseError, match="line 3"):
        parse_csv("a,b\n1,x\n2\n")
    with pytest.raises(ParseError, match="not found"):
        parse_csv("a,b\n1,x\n2,y\n", label_column="c")
    with pytest.raises(ParseError, match="two classes"):
        parse_csv("a,b\n1,x\n2,x\n")


def test_csv_label_by_name_quoting_and_no_header():
    ds = parse_csv('lab,v\n"a, b",1\nc,2\nc,3\n', label_column="lab")
    assert ds.class_names == ("a, b", "c")
    ds2 = parse_csv("x,1\ny,2\ny,3\n", label_column=0, header=False)
    assert ds2.class_names == ("x", "y")
    assert ds2.X[:, 0].tolist() == [1, 2, 3]


def test_canonicalize_counts_and_tie():
    y = np.array([1] * 70 + [-1] * 30)
    ds = Dataset(np.zeros((100, 1)), y, FeatureSchema.numeric(1), ("neg", "pos"))
    out, stats = canonicalize(ds)
    assert (stats.n_pos, stats.n_neg) == (30, 70)
    assert out.class_names == ("pos", "neg")
    assert stats.ratio == pytest.approx(70 / 30)

    tie = Dataset(np.zeros((4, 1)), [1, 1, -1, -1], FeatureSchema.numeric(1), ("b", "a"))
    out, stats = canonicalize(tie)
    assert out.class_names[0] == "a" and stats.ratio == 1.0
    assert out.y.tolist() == [-1, -1, 1, 1]


def test_dataset_invariants():
    with pytest.raises(PreconditionError):
        Dataset(np.zeros((1, 1)), [1], FeatureSchema.numeric(1))
    with pytest.raises(PreconditionError):
        Dataset(np.zeros((3, 1)), [1, 1, 1], FeatureSchema.numeric(1))
    with pytest.raises(ValueError):
        FeatureSchema(())
    ds = Dataset(np.zeros((2, 1)), [1, -1], FeatureSchema.numeric(1))
    with pytest.raises(ValueError):
        ds.X[0, 0] = 1.0


def test_load_report_shape(tmp_path):
    p = tmp_path / "d.csv"
    p.write_text("a,b,label\n1,?,x\n2,3,y\n4,5,y\n6,7,x\n")
    rep = load_report(load_file(p))
    assert rep["rows_read"] == 4 and rep["rows_dropped_missing"] == 1
    assert rep["columns"] == [{"name": "a", "kind": "numeric"}, {"name": "b", "kind": "numeric"}]
    json.dumps(rep)


labels = st.sampled_from(["p", "q"])
words = st.sampled_from(["red", "green", "blue", "a b", 'q"t', "x,y"])
floats = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@st.composite
def csv_texts(draw):
    n = draw(st.integers(2, 25))
    rows = draw(st.lists(st.tuples(floats, words, labels), min_size=n, max_size=n))
    if len({r[2] for r in rows}) < 2:
        rows[0] = (rows[0][0], rows[0][1], "q" if rows[0][2] == "p" else "p")
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["num", "cat", "label"])
    w.writerows([repr(a), b, c] for a, b, c in rows)
    return buf.getvalue()


@given(csv_texts())
def test_csv_round_trip(text):
    ds = parse_csv(text)
    again = parse_csv(to_csv(ds))
    assert ds.equals(again)
    assert again.schema == ds.schema


@given(csv_texts())
def test_canonicalize_idempotent(text):
    ds = parse_csv(text)
    once, s1 = canonicalize(ds)
    twice, s2 = canonicalize(once)
    assert once.equals(twice) and s1 == s2
    assert s1.n_pos <= s1.n_neg and s1.ratio >= 1


@needs_keel
@pytest.mark.parametrize("name", ["haberman", "car-good", "cleveland-0_vs_4", "kddcup-land_vs_satan"])
def test_keel_round_trip_through_csv(name):
    ds = load_file(keel_path(name))
    nominal = [c.name for c in ds.schema.columns if c.kind == NOMINAL]
    assert ds.equals(parse_csv(to_csv(ds), nominal_columns=nominal))
