import math

import pytest

petc = pytest.importorskip("petc")


def test_timing_values():
    assert petc.max_sampling_period(0.4941, 4.4302) == pytest.approx(0.3314, abs=1e-3)
    assert petc.inter_sample_time(5.0, 20.0, 0.31) == pytest.approx(0.04, abs=1e-3)
    assert petc.trigger_coefficient(0.6, 0.1) == pytest.approx(1.0067, abs=1e-4)
    lam = petc.solve_lambda(0.4941, 4.4302, 0.1)
    assert petc.inter_sample_time(0.4941, 4.4302, lam) == pytest.approx(0.1, abs=1e-9)
    assert petc.integrate_phi(1.0, 1.0, 0.5, 1.0 / 3.0) == pytest.approx(0.5, abs=1e-6)


def test_errors_map_to_python():
    with pytest.raises(petc.DomainError):
        petc.max_sampling_period(-1.0, 1.0)
    with pytest.raises(petc.PetcError):
        petc.trigger_coefficient(0.99, 1.0)
    with pytest.raises(petc.ConfigurationError):
        petc.design_state("{not json")


def test_select_and_check():
    d = petc.select_parameters(5.0, 20.0, 1.2)
    ok, msg = petc.check_design(d)
    assert ok, msg
    assert d["h"] == pytest.approx(petc.max_sampling_period(5.0, 20.0) / 2)
    d["h"] = 1.0
    ok, msg = petc.check_design(d)
    assert not ok and msg


def test_published_certificate():
    r = petc.verify_published_example2()
    assert r["verdict"] == "pass"
    assert r["assignment"]["sigma2"] > 0


def test_design_state_builtin():
    d = petc.design_state("example2", "builtin")
    assert d["lmi"] == "thm3"
    assert d["verify"]["verdict"] == "pass"
    assert d["trigger_coefficient"] > 0


def test_design_state_linear_plant():
    plant = {"A": [[0, 1], [0, 0]], "B": [[0], [1]], "Ew": [[0], [1]]}
    d = petc.design_state(plant, alpha=0.5)
    assert d["lmi"] == "cor1"


def test_monte_carlo_and_simulation():
    rows = petc.monte_carlo("example1", [0.1, 0.2], runs=5, seed=3)
    assert [r["h"] for r in rows] == [0.1, 0.2]
    assert all(0.0 <= r["f_avg"] <= 1.0 for r in rows)
    s = petc.simulate_state("example2", t_end=5.0, w_bound=0.0)
    assert s["x"].shape[1] == 2
    assert math.hypot(*s["x"][-1]) < 0.05
    assert s["jump_violations"] == 0 and s["flow_violations"] == 0
    assert "example1" in petc.builtin_names()
