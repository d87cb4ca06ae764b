import math

import numpy as np
import pytest

import dircalc


def test_two_point_space():
    s = dircalc.space_from_json(
        '{"version": 1, "h": 1.0, "vertices": [{"id": 0, "mu": 1.0}, {"id": 1, "mu": 1.0}],'
        ' "edges": [{"u": 0, "v": 1, "w": 1.0, "len": 1.0}]}'
    )
    f = np.array([1.0, -1.0])
    assert np.allclose(dircalc.apply_generator(s, f), [2.0, -2.0])
    assert dircalc.energy(s, f, f) == pytest.approx(4.0)
    spec = dircalc.decompose(s)
    assert np.allclose(spec.eigenvalues, [0.0, 2.0])


def test_torus_spectrum_and_heat_conservation():
    s = dircalc.generate("torus_grid", d=1, n=4)
    spec = dircalc.decompose(s)
    h = s.mesh
    assert np.allclose(spec.eigenvalues * h * h, [0.0, 2.0, 2.0, 4.0])
    one = np.ones(s.size)
    assert np.allclose(dircalc.heat(spec, 0.3, one), one, atol=1e-12)


def test_calderon_reproduces_mean_free_part():
    s = dircalc.generate("torus_grid", d=2, n=6)
    spec = dircalc.decompose(s)
    f = np.random.default_rng(0).normal(size=s.size)
    rec = dircalc.calderon_reconstruct(spec, 2.0, f)
    mean = np.dot(s.measure, f) / s.measure.sum()
    assert np.allclose(rec, f - mean, atol=1e-10)


def test_probe_and_suite_reports():
    s = dircalc.generate("torus_grid", d=2, n=6)
    spec = dircalc.decompose(s)
    r = dircalc.run_probe(s, spec, "Gp", {"p": 2})
    assert r["fit"]["constant"] == pytest.approx(1.0 / math.sqrt(2.0 * math.e), abs=1e-9)
    with pytest.raises(dircalc.ValidationError):
        dircalc.run_probe(s, spec, "nope")
    rep = dircalc.run_suite([s], suite="algebra", samples=4, alpha=0.5, p=2.0, refine=False)
    assert rep["suite"] == "algebra"
    assert rep["cells"][0]["summary"]["count"] == 4


def test_gamma_q_matches_closed_form():
    assert dircalc.gamma_q(1.0, 2.0) == pytest.approx(math.exp(-2.0), rel=1e-14)
