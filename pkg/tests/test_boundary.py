"""Boundary matrices: presets, the residual contract, serialization."""

import json

import numpy as np
import pytest
from numpy.testing import assert_allclose

from fermibox import boundary as fb

RNG = np.random.default_rng(715)


def random_unitary(rng):
    z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    q, r = np.linalg.qr(z)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def test_residual_frozen_example():
    # U = I with data (1, 1, 1, 0): left - right = (2i, 0), norm exactly 2
    assert fb.boundary_residual(np.eye(2), (1, 1, 1, 0)) == 2.0


def test_nonunitary_reports_deviation():
    with pytest.raises(fb.NonUnitaryError) as exc:
        fb.make_boundary([[1, 0], [0, 2]])
    assert exc.value.deviation == pytest.approx(3.0, abs=1e-14)


def test_all_presets_unitary():
    cases = [
        ("periodic",), ("dirichlet",), ("neumann",), ("zaremba",),
        ("pseudo_periodic", 0.7), ("robin", 1.1), ("delta", 2.5),
        ("delta", -3.0), ("dirichlet_robin", 0.9),
    ]
    for name, *params in cases:
        bc = fb.make_preset(name, *params)
        assert fb.unitarity_deviation(bc.matrix) < 1e-14
        assert bc.label == name
        assert bc.params == tuple(params)


def test_preset_degenerations():
    assert_allclose(fb.make_preset("delta", 0.0).matrix, fb.SIGMA1, atol=1e-15)
    assert_allclose(fb.make_preset("robin", np.pi).matrix, -np.eye(2), atol=1e-15)
    assert_allclose(
        fb.make_preset("pseudo_periodic", 0.0).matrix,
        fb.make_preset("periodic").matrix,
        atol=1e-15,
    )


def test_preset_param_continuity():
    # small parameter change moves the matrix by O(delta), no branch jumps
    for name in ("pseudo_periodic", "robin", "delta", "dirichlet_robin"):
        for base in (-1.3, 0.4, 2.0):
            m0 = fb.make_preset(name, base).matrix
            m1 = fb.make_preset(name, base + 1e-7).matrix
            assert np.abs(m1 - m0).max() < 1e-6


def test_preset_argument_errors():
    with pytest.raises(ValueError):
        fb.make_preset("robin")
    with pytest.raises(ValueError):
        fb.make_preset("dirichlet", 1.0)
    with pytest.raises(ValueError):
        fb.make_preset("squircle")
    with pytest.raises(ValueError):
        fb.make_preset("delta", np.nan)


class TestResidualPhysics:
    """Each preset accepts exactly its advertised boundary data."""

    def _vals(self, n=4):
        return RNG.normal(size=n) + 1j * RNG.normal(size=n)

    def test_dirichlet(self):
        bc = fb.make_preset("dirichlet")
        _, _, d1, d2 = self._vals()
        assert fb.boundary_residual(bc, (0, 0, d1, d2)) < 1e-12
        assert fb.boundary_residual(bc, (1, 0, d1, d2)) > 0.1

    def test_neumann(self):
        bc = fb.make_preset("neumann")
        v1, v2, _, _ = self._vals()
        assert fb.boundary_residual(bc, (v1, v2, 0, 0)) < 1e-12

    def test_zaremba_dirichlet_at_zero_neumann_at_top(self):
        bc = fb.make_preset("zaremba")
        v, _, _, d = self._vals()
        data = fb.BoundaryData(psi_minus=v, psi_plus=0, dpsi_minus=0, dpsi_plus=d)
        assert fb.boundary_residual(bc, data) < 1e-12
        flipped = fb.BoundaryData(psi_minus=0, psi_plus=v, dpsi_minus=d, dpsi_plus=0)
        assert fb.boundary_residual(bc, flipped) > 0.1

    def test_periodic(self):
        bc = fb.make_preset("periodic")
        v, d, _, _ = self._vals()
        assert fb.boundary_residual(bc, (v, v, d, d)) < 1e-12

    def test_pseudo_periodic_bloch_phase(self):
        alpha = 0.83
        bc = fb.make_preset("pseudo_periodic", alpha)
        v, d, _, _ = self._vals()
        ph = np.exp(-1j * alpha)
        assert fb.boundary_residual(bc, (ph * v, v, ph * d, d)) < 1e-12

    @pytest.mark.parametrize("alpha", [0.3, 1.2, 2.4])
    def test_robin_inward_coefficient(self, alpha):
        bc = fb.make_preset("robin", alpha)
        t = np.tan(alpha / 2)
        v1, v2, _, _ = self._vals()
        data = fb.BoundaryData(
            psi_minus=v1, psi_plus=v2, dpsi_minus=-t * v1, dpsi_plus=t * v2
        )
        assert fb.boundary_residual(bc, data) < 1e-11

    @pytest.mark.parametrize("c", [0.5, 1.0, -2.0, 7.0])
    def test_delta_junction(self, c):
        # continuous value at the junction, derivative jumps by c * value
        bc = fb.make_preset("delta", c)
        v, d, _, _ = self._vals()
        data = fb.BoundaryData(
            psi_minus=v, psi_plus=v, dpsi_minus=d, dpsi_plus=d + c * v
        )
        assert fb.boundary_residual(bc, data) < 1e-11

    def test_dirichlet_robin_split(self):
        alpha = 1.1
        bc = fb.make_preset("dirichlet_robin", alpha)
        v, d, _, _ = self._vals()
        data = fb.BoundaryData(
            psi_minus=v, psi_plus=0, dpsi_minus=-np.tan(alpha / 2) * v, dpsi_plus=d
        )
        assert fb.boundary_residual(bc, data) < 1e-11


def test_residual_scales_linearly():
    bc = fb.make_preset("dirichlet")
    base = fb.boundary_residual(bc, (1.0, 0.5, 0.0, 0.0))
    double = fb.boundary_residual(bc, (2.0, 1.0, 0.0, 0.0))
    assert double == pytest.approx(2 * base, rel=1e-12)


def test_json_round_trip():
    rng = np.random.default_rng(99)
    for _ in range(5):
        bc = fb.make_boundary(random_unitary(rng), label="custom", params=())
        text = fb.to_json(bc)
        obj = json.loads(text)
        assert set(obj) == {"label", "params", "entries"}
        back = fb.from_json(text)
        assert_allclose(back.matrix, bc.matrix, atol=1e-15)
    bc = fb.make_preset("robin", 0.25)
    back = fb.from_json(fb.to_json(bc))
    assert back.label == "robin"
    assert back.params == (0.25,)


def test_from_json_rejects_bad_entries():
    with pytest.raises(ValueError):
        fb.from_json({"label": "x", "params": [], "entries": [[1, 0], [0, 0]]})
    bad = {"label": "x", "params": [],
           "entries": [[1, 0], [0, 0], [0, 0], [2, 0]]}
    with pytest.raises(fb.NonUnitaryError):
        fb.from_json(bad)


def test_matrix_is_read_only():
    bc = fb.make_preset("neumann")
    with pytest.raises(ValueError):
        bc.matrix[0, 0] = 5.0
