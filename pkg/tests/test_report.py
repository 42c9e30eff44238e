import json
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from sspi.core import DyadicProbability, ModelError
from sspi.report import RunReport, element_csv, exact_entry, exact_str, parse_exact


@given(st.fractions())
def test_exact_round_trip(x):
    assert parse_exact(exact_str(x)) == x


@given(st.integers(0, 10**9), st.integers(0, 60))
def test_dyadic_strings(num, e):
    d = DyadicProbability(num, e)
    assert exact_str(d) == f"{num}/2^{e}"
    assert parse_exact(exact_str(d)) == d.fraction


def test_formats():
    assert exact_str(Fraction(9, 2)) == "9/2^1"
    assert exact_str(Fraction(10, 9)) == "10/9"
    assert exact_str(5) == "5/2^0"
    assert exact_entry(Fraction(3, 4)) == {"exact": "3/2^2", "decimal": 0.75}
    assert exact_entry(None) == {"exact": None, "decimal": None}


def test_parse_rejects():
    with pytest.raises(ModelError):
        parse_exact("1/x")


def test_report_header_and_json():
    r = RunReport("exact", {"k": 2}, seed=3)
    r.results["m"] = exact_entry(Fraction(1, 3))
    r.fail("boom")
    doc = json.loads(r.to_json())
    assert doc["tool"] == "sspi" and doc["version"] and doc["python"]
    assert doc["parameters"] == {"k": 2} and doc["seed"] == 3
    assert doc["passed"] is False and doc["failures"] == ["boom"]
    assert parse_exact(doc["results"]["m"]["exact"]) == Fraction(1, 3)


def test_csv():
    text = element_csv([{"a": 1, "b": "x"}, {"a": 2, "b": "y"}])
    assert text == "a,b\n1,x\n2,y\n"
    assert element_csv([]) == ""
