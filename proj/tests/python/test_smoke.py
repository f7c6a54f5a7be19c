import json
import math

import pytest

import hopflax as hl


@pytest.fixture(scope="module")
def neg_abs():
    return hl.make_problem("0.5*p^2", "-abs(x)", horizon=1.0)


def test_closed_form_value(neg_abs):
    # minimum attained on |y - x| = t, value -|x| - t/2 inside the cone
    assert hl.value(neg_abs, 1.0, [0.0]) == pytest.approx(-0.5, abs=1e-9)
    assert hl.value(neg_abs, 0.5, [2.0]) == pytest.approx(-2.25, abs=1e-9)


def test_minimizer_pair(neg_abs):
    value, points, boundary = hl.minimizers(neg_abs, 1.0, [0.0])
    assert not boundary
    assert value == pytest.approx(-0.5, abs=1e-9)
    assert len(points) == 2
    assert points[0][0] == pytest.approx(-1.0, abs=1e-4)
    assert points[1][0] == pytest.approx(1.0, abs=1e-4)


def test_gradient_off_axis(neg_abs):
    p_t, p = hl.gradient(neg_abs, 0.5, [2.0])
    assert p[0] == pytest.approx(-1.0, abs=1e-6)
    assert p_t == pytest.approx(-0.5, abs=1e-6)


def test_gradient_raises_on_kink(neg_abs):
    with pytest.raises(hl.NondifferentiableError):
        hl.gradient(neg_abs, 1.0, [0.0])


def test_conjugate_is_half_square(neg_abs):
    v, arg = hl.conjugate_value(neg_abs, 1.25)
    assert v == pytest.approx(0.78125, abs=1e-12)
    assert arg == pytest.approx(1.25, abs=1e-9)


def test_preimage_types(neg_abs):
    rows = hl.preimage(neg_abs, 1.0, [0.0])
    ys = sorted(y for (y, _, _) in rows)
    assert len(ys) == 3
    assert ys[0] == pytest.approx(-1.0, abs=1e-4)
    assert ys[1] == pytest.approx(0.0, abs=1e-4)
    assert ys[2] == pytest.approx(1.0, abs=1e-4)
    by_y = {round(y): t1 for (y, _, t1) in rows}
    assert by_y[-1] and by_y[1] and not by_y[0]


def test_classify(neg_abs):
    assert hl.classify_curve(neg_abs, 1.0, [1.0], [-1.0]) == "I"
    assert hl.classify_curve(neg_abs, 1.0, [0.0], [0.0]) == "II"


def test_verify_region(neg_abs):
    ok, worst_sub, worst_super, residual = hl.verify(neg_abs, planes=4, nodes=33)
    assert ok
    assert residual <= 1e-8


def test_solve_grid_json(neg_abs):
    doc = json.loads(hl.solve_grid_json(neg_abs, [0.5, 1.0], [-1.0, 0.0, 1.0]))
    assert doc["dim"] == 1
    u = doc["values"]
    assert len(u) == 6
    assert u[1] == pytest.approx(-0.25, abs=1e-9)  # t=0.5, x=0


def test_hypothesis_rejection():
    with pytest.raises(hl.HypothesisError):
        hl.make_problem("-p^2", "-abs(x)")


def test_problem_file_roundtrip(tmp_path):
    text = """
[problem]
name = smoke
dim = 1
hamiltonian = 0.5*p^2
sigma = -abs(x)
horizon = 1
"""
    pf = hl.parse_problem(text, "smoke.prob")
    assert pf.problem.dim == 1
    assert pf.problem.horizon == pytest.approx(1.0)
    path = tmp_path / "smoke.prob"
    path.write_text(text)
    pf2 = hl.load_problem(str(path))
    assert pf2.problem.name == "smoke"


def test_roundtrip_terminal():
    prob = hl.make_problem("0.5*p^2", "x", horizon=1.0, window=(-2.0, 2.0),
                           terminal=True)
    holds, bf_holds, dev, sup_err, strip_full = hl.roundtrip(prob, grid_nodes=2049)
    assert holds and bf_holds
    assert dev <= 1e-6
    assert sup_err <= 1e-6
