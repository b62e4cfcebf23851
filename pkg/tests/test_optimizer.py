import csv
import math

import numpy as np
import pytest

from stericzipper.assembly import PipelineConfig, build_core, designated_pairs
from stericzipper.energy import VDW, LJParams, PairList, lj_pairlist
from stericzipper.exceptions import AtomNotFoundError, ObjectiveError
from stericzipper.optimizer import (
    AnnealConfig,
    Objective,
    anneal,
    central_difference,
    discrete_gradient_descent,
    make_contact_objective,
    multistart,
    write_trace_csv,
)

from conftest import point_structure

R_MIN = 2.0 ** (1.0 / 6.0)


def sphere():
    return Objective(2, lambda x: float(x @ x))


def lj_two_atom(origin=(0.0, 0.0, 0.0)):
    """One free atom against a fixed atom at ``origin``."""
    o = np.asarray(origin, dtype=float)

    def f(x):
        r = np.linalg.norm(x - o)
        sr6 = 1.0 / r**6
        return 4.0 * (sr6 * sr6 - sr6)

    return Objective(3, f)


def test_config_validation():
    for bad in (
        {"cooling_factor": 1.0},
        {"cooling_factor": 0.0},
        {"initial_temperature": -1.0},
        {"steps_per_temperature": 0},
        {"step_size": 0.0},
        {"block_size": 0},
    ):
        with pytest.raises(ValueError):
            AnnealConfig(**bad)
    with pytest.raises(ValueError):
        AnnealConfig.from_dict({"cooling": 0.9})
    assert AnnealConfig.from_dict({"seed": 5}).seed == 5


def test_sphere():
    res = anneal(sphere(), [3.0, 4.0], AnnealConfig(seed=1))
    assert res.best_value < 1e-8
    assert np.linalg.norm(res.best_point) < 1e-4


def test_single_pair_from_ten():
    res = anneal(lj_two_atom(), [10.0, 0.0, 0.0], AnnealConfig(seed=2))
    assert res.best_value == pytest.approx(-1.0, abs=1e-6)
    assert np.linalg.norm(res.best_point) == pytest.approx(R_MIN, abs=1e-4)


def test_best_value_matches_point():
    obj = lj_two_atom()
    res = anneal(obj, [3.0, 1.0, 0.0], AnnealConfig(seed=3))
    assert abs(res.best_value - obj.evaluate(res.best_point)) <= 1e-12


def test_trace_monotone_and_deterministic():
    obj = lj_two_atom()
    a = anneal(obj, [4.0, 0.0, 0.0], AnnealConfig(seed=9))
    b = anneal(obj, [4.0, 0.0, 0.0], AnnealConfig(seed=9))
    assert a.trace == b.trace
    assert np.array_equal(a.best_point, b.best_point)
    best = [row[2] for row in a.trace]
    assert all(y <= x for x, y in zip(best, best[1:]))
    c = anneal(obj, [4.0, 0.0, 0.0], AnnealConfig(seed=10))
    assert c.trace != a.trace


def test_block_moves():
    obj = Objective(4, lambda x: float(np.sum((x - [1, 2, 3, 4]) ** 2)))
    res = anneal(obj, np.zeros(4), AnnealConfig(seed=0, block_size=2))
    np.testing.assert_allclose(res.best_point, [1, 2, 3, 4], atol=1e-4)


def test_nonfinite_candidates_rejected():
    def f(x):
        if x[0] < 0.5:
            return math.nan
        return float((x[0] - 1.0) ** 2 + x[1] ** 2)

    res = anneal(Objective(2, f), [2.0, 1.0], AnnealConfig(seed=4, step_size=1.0))
    assert res.rejected_nonfinite > 0
    assert math.isfinite(res.best_value)
    assert res.best_value < 1e-8


def test_start_errors():
    with pytest.raises(ObjectiveError):
        anneal(Objective(1, lambda x: math.inf), [0.0])
    with pytest.raises(ValueError):
        anneal(sphere(), [1.0, 2.0, 3.0])
    with np.errstate(all="ignore"), pytest.raises(ObjectiveError):
        discrete_gradient_descent(lj_two_atom(), [0.0, 0.0, 0.0])


def test_zero_dimension():
    res = anneal(Objective(0, lambda x: 7.0), [])
    assert res.best_value == 7.0
    assert res.iterations == 0


def test_trace_csv(tmp_path):
    res = anneal(sphere(), [1.0, 1.0], AnnealConfig(seed=0))
    path = tmp_path / "trace.csv"
    write_trace_csv(res, path)
    rows = list(csv.reader(path.open()))
    assert rows[0] == ["iteration", "temperature", "best_value"]
    assert len(rows) == len(res.trace) + 1
    assert float(rows[-1][2]) == res.trace[-1][2]


def test_multistart_picks_lowest():
    # two wells; the one at x = 3 is deeper
    f = lambda x: float(min((x[0] + 3) ** 2 + 1.0, (x[0] - 3) ** 2))
    obj = Objective(1, f)
    best, runs = multistart(obj, [[-3.0], [3.0]], AnnealConfig(seed=0, step_size=0.1, initial_temperature=1e-6))
    assert len(runs) == 2
    assert best.best_value == min(r.best_value for r in runs)


# ------------------------------------------------------------------ descent


def test_descent_quadratic():
    obj = Objective(2, lambda x: float((x[0] - 1) ** 2 + (x[1] + 2) ** 2))
    res = discrete_gradient_descent(obj, [0.0, 0.0])
    np.testing.assert_allclose(res.best_point, [1.0, -2.0], atol=1e-6)


def test_descent_stationary_start():
    res = discrete_gradient_descent(lj_two_atom(), [R_MIN, 0.0, 0.0])
    assert res.iterations == 0
    assert res.best_value == pytest.approx(-1.0, abs=1e-15)
    assert res.values == [res.best_value]


def test_descent_lj_from_two():
    res = discrete_gradient_descent(lj_two_atom(), [2.0, 0.0, 0.0], max_steps=5000)
    assert res.best_value == pytest.approx(-1.0, abs=1e-8)
    assert all(b < a for a, b in zip(res.values, res.values[1:]))


def test_descent_analytic_gradient_used():
    calls = []

    def grad(x):
        calls.append(1)
        return 2 * x

    obj = Objective(2, lambda x: float(x @ x), grad)
    res = discrete_gradient_descent(obj, [1.0, -1.0])
    assert calls
    assert res.best_value < 1e-12


def test_descent_projection():
    obj = Objective(1, lambda x: float((x[0] - 5.0) ** 2))
    res = discrete_gradient_descent(obj, [0.0], project=lambda x: np.minimum(x, 1.0))
    assert res.best_point[0] == pytest.approx(1.0)


def test_central_difference():
    obj = Objective(2, lambda x: float(x[0] ** 3 + 2 * x[1]))
    np.testing.assert_allclose(central_difference(obj, np.array([1.0, 0.0]), 1e-5), [3.0, 2.0], rtol=1e-8)


# ------------------------------------------------------------------ contact objective


def test_contact_objective_default_setup(template):
    cfg = PipelineConfig()
    core = build_core(template, "AAAAGA", cfg)
    pl = designated_pairs(core, cfg.contact)
    obj = make_contact_objective(core, cfg.contact.fixed, cfg.contact.free, pl)
    assert obj.dimension == 6
    assert obj.evaluate(obj.start) == pytest.approx(lj_pairlist(core.coordinates(), LJParams(), pl), rel=1e-14)
    assert obj.gradient(obj.start).shape == (6,)


def test_contact_objective_gradient_matches_fd(template):
    cfg = PipelineConfig()
    core = build_core(template, "AAAAGA", cfg)
    pl = designated_pairs(core, cfg.contact)
    obj = make_contact_objective(core, cfg.contact.fixed, cfg.contact.free, pl)
    x = obj.start * 0.8
    np.testing.assert_allclose(obj.gradient(x), central_difference(obj, x, 1e-5), rtol=1e-6, atol=1e-12)


def test_contact_objective_zero_free():
    s = point_structure([[0, 0, 0], [1.5, 0, 0]])
    obj = make_contact_objective(s, ["A.1.CA", "A.2.CA"], [], PairList(((0, 1, VDW),)))
    assert obj.dimension == 0
    assert obj.evaluate(np.zeros(0)) == pytest.approx(4 * (1.5**-12 - 1.5**-6))


def test_contact_objective_errors():
    s = point_structure([[0, 0, 0], [1.5, 0, 0], [3, 0, 0]])
    with pytest.raises(AtomNotFoundError):
        make_contact_objective(s, ["A.1.CA"], ["A.9.CA"], PairList())
    with pytest.raises(ValueError):
        make_contact_objective(s, ["A.1.CA"], ["A.2.CA"], PairList(((0, 2, VDW),)))
    with pytest.raises(ValueError):
        make_contact_objective(s, ["A.1.CA"], ["A.1.CA"], PairList())


def test_six_variable_problem_each_pair_at_minimum(template):
    cfg = PipelineConfig()
    core = build_core(template, "GAAAAG", cfg)
    pl = designated_pairs(core, cfg.contact)
    obj = make_contact_objective(core, cfg.contact.fixed, cfg.contact.free, pl)
    fixed = core.coordinates()[list(obj.fixed_indices)]
    res = anneal(obj, obj.start, cfg.anneal)
    assert res.best_value == pytest.approx(-2.0, abs=1e-6)
    d = np.linalg.norm(res.best_point.reshape(2, 3) - fixed, axis=1)
    np.testing.assert_allclose(d, R_MIN, atol=1e-3)
