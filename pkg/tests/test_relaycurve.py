import pytest
from hypothesis import given
from hypothesis import strategies as st

from protcoord.netmodel import RelaySpec
from protcoord.relaycurve import (CURVE_FAMILIES, CurveConstants,
                                  curve_family, operate_time)


def relay(a=1.0, b=0.0, c=1.0, tds=1.0, pickup=100.0):
    return RelaySpec("r", "br", "from_to", pickup, tds,
                     CurveConstants(a, b, c))


def test_trivial_inverse_curve():
    # a=1, b=0, c=1, tds=1, M=2 -> 1/(2-1) = 1 s
    d = operate_time(relay(), 200.0)
    assert d.trips
    assert d.time_s == pytest.approx(1.0, abs=1e-15)
    assert d.multiple_m == pytest.approx(2.0)


def test_below_pickup_is_no_trip():
    d = operate_time(relay(), 90.0)
    assert not d.trips
    assert d.time_s is None
    assert d.multiple_m == pytest.approx(0.9)


def test_exactly_at_pickup_is_no_trip():
    assert operate_time(relay(), 100.0).time_s is None


def test_iec_si_against_arbitrary_precision_value():
    # frozen from a 50-digit mpmath evaluation of the closed form at
    # tds=0.4, M=2.8066 with the standard-inverse constants
    r = relay(a=0.14, b=0.0, c=0.02, tds=0.4, pickup=1.0)
    d = operate_time(r, 2.8066)
    assert d.time_s == pytest.approx(2.685343530196877, rel=1e-12)


def test_negative_current_rejected():
    with pytest.raises(ValueError):
        operate_time(relay(), -1.0)


def test_family_lookup_is_total():
    for name in CURVE_FAMILIES:
        cv = curve_family(name)
        assert cv.a > 0 and cv.c > 0 and cv.b >= 0
    si = curve_family("iec_standard_inverse")
    assert (si.a, si.b, si.c) == (0.14, 0.0, 0.02)
    ei = curve_family("iec_extremely_inverse")
    assert (ei.a, ei.b, ei.c) == (80.0, 0.0, 2.0)


def test_family_custom_needs_explicit_constants():
    with pytest.raises(ValueError, match="custom"):
        curve_family("custom")


def test_family_unknown_name():
    with pytest.raises(ValueError):
        curve_family("iec_inverse_standard")


curve_a = st.floats(min_value=1e-4, max_value=100.0)
curve_b = st.floats(min_value=0.0, max_value=1.0)
curve_c = st.floats(min_value=0.02, max_value=2.0)
tds_st = st.floats(min_value=0.05, max_value=10.0)


@given(a=curve_a, b=curve_b, c=curve_c, tds=tds_st,
       m=st.floats(min_value=1.01, max_value=50.0),
       up=st.floats(min_value=1.01, max_value=10.0))
def test_time_strictly_decreases_with_current(a, b, c, tds, m, up):
    r = relay(a, b, c, tds, pickup=100.0)
    t1 = operate_time(r, 100.0 * m).time_s
    t2 = operate_time(r, 100.0 * m * up).time_s
    assert t2 < t1


@given(a=curve_a, b=curve_b, c=curve_c, tds=tds_st)
def test_time_diverges_at_pickup(a, b, c, tds):
    r = relay(a, b, c, tds, pickup=100.0)
    near = operate_time(r, 100.0 * (1.0 + 1e-9)).time_s
    at_two = operate_time(r, 200.0).time_s
    assert near > 1e3 * at_two


@given(a=curve_a, b=curve_b, c=curve_c, tds=tds_st,
       m=st.floats(min_value=1.001, max_value=100.0))
def test_time_is_exactly_linear_in_tds(a, b, c, tds, m):
    r1 = relay(a, b, c, tds, pickup=1.0)
    r2 = relay(a, b, c, 2.0 * tds, pickup=1.0)
    assert operate_time(r2, m).time_s == 2.0 * operate_time(r1, m).time_s


@given(a=curve_a, b=curve_b, c=curve_c,
       m=st.floats(min_value=0.0, max_value=1.0))
def test_no_trip_iff_at_or_below_pickup(a, b, c, m):
    r = relay(a, b, c, pickup=100.0)
    assert operate_time(r, 100.0 * m).time_s is None
