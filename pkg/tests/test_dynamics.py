import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from optrta.dynamics import ACC, AIR, DUBINS, Quantizer, derivative, integrate, wrap_angle
from optrta.errors import IntegrationError, PreconditionError


def dubins_circle_error(dt, steps):
    out = integrate(DUBINS, [0.0, 0.0, 0.0, 1.0], [1.0, 0.0], dt, steps)
    t = dt * steps
    exact = np.array([math.sin(t), 1.0 - math.cos(t)])
    return float(np.max(np.abs(out[:2] - exact))), out


def test_derivative_examples():
    assert derivative(ACC, [0.0, 5.0], [2.0]).tolist() == [5.0, 2.0]
    assert derivative(DUBINS, [0, 0, 0, 1.0], [0.0, 0.0]).tolist() == [1.0, 0.0, 0.0, 0.0]
    assert derivative(AIR, [0, 0, 100.0, 0, 0, 50.0], [0, 0, 0]).tolist() == [50.0, 0, 0, 0, 0, 0]


def test_acc_closed_form():
    out = integrate(ACC, [0.0, 5.0], [2.0], 0.01, 100)
    assert np.max(np.abs(out - [6.0, 7.0])) <= 1e-12


@given(st.floats(-5, 5), st.floats(0, 20), st.floats(-3, 3), st.integers(1, 300))
def test_acc_matches_polynomial(x0, v0, a, steps):
    dt = 0.01
    t = dt * steps
    out = integrate(ACC, [x0, v0], [a], dt, steps)
    assert abs(out[0] - (x0 + v0 * t + 0.5 * a * t * t)) <= 1e-10
    assert abs(out[1] - (v0 + a * t)) <= 1e-10


def test_dubins_circle_at_pi():
    steps = round(math.pi / 1e-3)
    err, out = dubins_circle_error(math.pi / steps, steps)
    assert err <= 1e-6
    assert abs(abs(out[2]) - math.pi) < 1e-9 and abs(out[3] - 1.0) < 1e-15


def test_rk4_fourth_order():
    e1, _ = dubins_circle_error(0.02, 160)
    e2, _ = dubins_circle_error(0.01, 320)
    assert e1 / e2 >= 8.0


@given(st.floats(-1, 1), st.floats(-2, 2), st.floats(1, 30), st.floats(-math.pi, math.pi))
def test_air_level_flight_reduces_to_dubins(omega, a, v, psi):
    d = integrate(DUBINS, [1.0, 2.0, psi, v], [omega, a], 0.01, 100)
    q = integrate(AIR, [1.0, 2.0, 50.0, psi, 0.0, v], [omega, 0.0, a], 0.01, 100)
    assert np.max(np.abs(q[[0, 1, 3, 5]] - d)) <= 1e-12
    assert q[2] == 50.0 and q[4] == 0.0


def test_angles_are_wrapped():
    out = integrate(DUBINS, [0.0, 0.0, 3.0, 1.0], [1.0, 0.0], 0.01, 100)
    assert -math.pi < out[2] <= math.pi
    assert wrap_angle(3 * math.pi) == pytest.approx(math.pi)
    assert wrap_angle(-math.pi) == pytest.approx(math.pi)


def test_integration_errors():
    with pytest.raises(PreconditionError):
        integrate(ACC, [0.0], [1.0], 0.1, 1)
    with pytest.raises(PreconditionError):
        integrate(ACC, [0.0, 1.0], [1.0, 2.0], 0.1, 1)
    with pytest.raises(PreconditionError):
        integrate(ACC, [0.0, 1.0], [1.0], 0.0, 1)
    with pytest.raises(PreconditionError):
        integrate(7, [0.0, 1.0], [1.0], 0.1, 1)
    with pytest.raises(IntegrationError):
        integrate(ACC, [0.0, 1.0], [1e308], 1.0, 10)


def test_quantizer_examples():
    q = Quantizer([0.0], [10.0], [10])
    assert q.quantize([2.3]) == 2
    assert q.dequantize(2).tolist() == [2.5]
    assert q.quantize([-5.0]) == 0
    assert q.quantize([50.0]) == 9
    assert Quantizer([0, 0], [10, 10], [10, 10]).quantize([2.3, 7.8]) == 27


def test_quantizer_validation():
    with pytest.raises(PreconditionError):
        Quantizer([0.0], [0.0], [3])
    with pytest.raises(PreconditionError):
        Quantizer([0.0], [1.0], [0])
    with pytest.raises(PreconditionError):
        Quantizer([0.0, 1.0], [1.0], [2])
    with pytest.raises(PreconditionError):
        Quantizer([0.0], [1.0], [2]).quantize([0.1, 0.2])


boxes = st.lists(st.tuples(st.floats(-50, 50), st.floats(0.1, 50), st.integers(1, 12)), min_size=1, max_size=4)


@given(boxes, st.data())
def test_quantizer_properties(spec, data):
    lo = [a for a, _, _ in spec]
    hi = [a + w for a, w, _ in spec]
    cells = [c for _, _, c in spec]
    q = Quantizer(lo, hi, cells)
    x = [data.draw(st.floats(-200, 200)) for _ in spec]
    idx = q.quantize(x)
    assert 0 <= idx < q.size
    # the scalar path agrees with the vectorised cell coordinates
    assert idx == int(np.dot(q.cell_coords(x), q.strides))
    # a cell centre maps back to its own cell
    assert q.quantize(q.dequantize(idx)) == idx
    assert Quantizer.from_dict(q.to_dict()) == q
