import io

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from heatsym.errors import DomainError
from heatsym.io import (CsvFormatError, read_solution, read_table, solution_to_string,
                        write_rows, write_solution, write_time_mesh)
from heatsym.meshes import Layer, uniform_time

finite = st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False)


@given(arrays(float, (3, 4), elements=finite), st.booleans())
def test_roundtrip_exact(vals, mass):
    x = np.cumsum(np.abs(vals[0]) + 1.0)
    layers = []
    for j in range(2):
        extra = dict(s=x - x[0], rho=np.abs(vals[2]) + 1) if mass else {}
        layers.append(Layer(0.1 * j, x + j, vals[1] + j, **extra))
    back = read_solution(io.StringIO(solution_to_string(layers)))
    for a, b in zip(layers, back):
        assert a.t == b.t
        assert np.array_equal(a.x, b.x) and np.array_equal(a.u, b.u)
        if mass:
            assert np.array_equal(a.s, b.s) and np.array_equal(a.rho, b.rho)
        else:
            assert b.s is None


def test_header_layout(tmp_path):
    p = tmp_path / "sol.csv"
    write_solution(p, [Layer(0.0, np.array([0.0, 1.0]), np.array([2.0, 3.0]))])
    lines = p.read_text().splitlines()
    assert lines[0] == "t,x_0,u_0,x_1,u_1"
    assert lines[1] == "0,0,2,1,3"


@pytest.mark.parametrize("text", [
    "",
    "time,x_0,u_0\n0,1,2\n",
    "t,x_0,v_0\n0,1,2\n",
    "t,x_0,u_0\n0,1\n",
    "t,x_0,u_0\n0,a,2\n",
    "t,x_0,u_0\n",
])
def test_malformed(text):
    with pytest.raises(CsvFormatError):
        read_solution(io.StringIO(text))


def test_inconsistent_layers_rejected():
    a = Layer(0.0, np.array([0.0, 1.0]), np.ones(2))
    b = Layer(1.0, np.array([0.0, 1.0, 2.0]), np.ones(3))
    with pytest.raises(DomainError):
        solution_to_string([a, b])
    with pytest.raises(DomainError):
        solution_to_string([])


def test_tables():
    buf = io.StringIO()
    write_time_mesh(buf, uniform_time(1.0, 2))
    assert buf.getvalue().splitlines() == ["index,t", "0,0", "1,0.5", "2,1"]
    buf = io.StringIO()
    write_rows(buf, ("h", "order"), [(0.1, float("nan")), (0.05, 2.0)])
    assert buf.getvalue().splitlines() == ["h,order", "0.10000000000000001,nan", "0.050000000000000003,2"]


def test_read_table():
    arr = read_table(io.StringIO("x,u\n0,1\n1,2\n"))
    assert arr.tolist() == [[0, 1], [1, 2]]
    assert read_table(io.StringIO("0,1\n1,2\n")).shape == (2, 2)
    with pytest.raises(CsvFormatError):
        read_table(io.StringIO("x,u\n1,1\n0,2\n"))
    with pytest.raises(CsvFormatError):
        read_table(io.StringIO("x,u\n0,1\n"))
