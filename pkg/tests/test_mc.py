import numpy as np
import pytest

from sdesym.mc import (
    AllPathsInvalid, Grid, closed_form_check_ex5, coarsen, ex5_system, export_csv, export_npz,
    rms_decreasing, simulate, summary, wiener_increments,
)
from sdesym.model import load_model


def test_grid_over_rejects_non_dividing_step():
    assert Grid.over(1.0, 0.25).steps == 4
    with pytest.raises(ValueError):
        Grid.over(1.0, 0.3)


def test_increments_are_per_path_streams():
    a = wiener_increments(7, 4, 16, 1, 0.1)
    b = wiener_increments(7, 9, 16, 1, 0.1)
    np.testing.assert_array_equal(a, b[:4])
    assert not np.array_equal(a, wiener_increments(8, 4, 16, 1, 0.1))


def test_coarsen_sums_blocks():
    dw = np.arange(16.0).reshape(1, 8, 2)
    c = coarsen(dw, 2)
    assert c.shape == (1, 2, 2)
    np.testing.assert_array_equal(c[0, 0], dw[0, :4].sum(axis=0))
    np.testing.assert_array_equal(c.sum(axis=1), dw.sum(axis=1))


def test_seed_reproducibility():
    s = ex5_system(1.0, 0.5)
    g = Grid.over(1.0, 2.0**-6)
    a = simulate(s, [1.0], g, 8, seed=3)
    b = simulate(s, [1.0], g, 8, seed=3)
    np.testing.assert_array_equal(a.states, b.states)


def test_euler_step_by_hand():
    s = ex5_system(2.0, 3.0)
    g = Grid(0.0, 0.5, 1)
    dw = np.array([[[0.2]]])
    b = simulate(s, [1.0], g, 1, increments=dw)
    assert b.states[0, 1, 0] == pytest.approx(1.0 + 2.0 * 0.5 + 3.0 * 0.2)


def test_invalid_paths_are_frozen_and_counted():
    m = load_model("[system]\nvars = x\nnoises = w\nf.x = 0\nsigma.x.w = sqrt(x)\n")
    g = Grid(0.0, 1.0, 2)
    dw = np.array([[[-5.0], [0.0]], [[0.1], [0.1]]])
    b = simulate(m.system, [1.0], g, 2, increments=dw)
    assert b.excluded == 1 and b.valid.tolist() == [False, True]
    assert summary(b)["valid"] == 1


def test_clip_keeps_paths():
    m = load_model("[system]\nvars = x\nnoises = w\nf.x = 0\nsigma.x.w = sqrt(x)\n")
    dw = np.array([[[-5.0], [0.0]]])
    b = simulate(m.system, [1.0], Grid(0.0, 1.0, 2), 1, increments=dw, clip=True)
    assert b.valid.all() and b.clipped.sum() == 1


def test_all_invalid_raises():
    m = load_model("[system]\nvars = x\nnoises = w\nf.x = 0\nsigma.x.w = log(x)\n")
    with pytest.raises(AllPathsInvalid):
        simulate(m.system, [-1.0], Grid(0.0, 1.0, 1), 2, seed=1)


def test_unbound_parameter_rejected():
    m = load_model("[system]\nvars = x\nnoises = w\nparam a = range(0.2, 2)\nf.x = a*x\nsigma.x.w = 1\n")
    with pytest.raises(ValueError):
        simulate(m.system, [1.0], Grid(0.0, 0.5, 2), 1)
    simulate(m.system, [1.0], Grid(0.0, 0.5, 2), 1, params={"a": 1.0})


def test_csv_export_is_byte_identical(tmp_path):
    s = ex5_system(1.0, 1.0)
    g = Grid.over(1.0, 0.125)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    export_csv(simulate(s, [1.0], g, 3, seed=5), p1)
    export_csv(simulate(s, [1.0], g, 3, seed=5), p2)
    assert p1.read_bytes() == p2.read_bytes()
    assert p1.read_text().splitlines()[0] == "path,step,t,x,w"


def test_npz_export(tmp_path):
    b = simulate(ex5_system(1.0, 1.0), [1.0], Grid.over(1.0, 0.25), 2, seed=5)
    export_npz(b, tmp_path / "a.npz")
    data = np.load(tmp_path / "a.npz")
    np.testing.assert_array_equal(data["states"], b.states)


def test_closed_form_converges_at_first_order():
    out = closed_form_check_ex5(grid=Grid.over(1.0, 2.0**-6), paths=256)
    assert all(r > 1.5 for r in out["ratios"])


def test_rms_decreasing():
    assert rms_decreasing([0.4, 0.2, 0.1])
    assert not rms_decreasing([0.1, 0.2])
    assert rms_decreasing([3e-15, 5e-15, 1e-14])
