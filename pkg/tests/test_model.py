import math

import numpy as np
import pytest

from nanoemit.errors import GeometryError
from nanoemit.greens import CouplingSet
from nanoemit.model import (
    Drive,
    Emitter,
    Ensemble,
    GaussianEnvelope,
    RectangularEnvelope,
    Scenario,
    make_linear_array,
    make_square_array,
    make_square_prefix,
    validate_scenario,
)

DIPOLE = (0.0, 0.0, 4.0)
E0 = 1878.7
ORIGIN = (0.0, 0.0, 0.0)


class TestSquareArray:
    def test_three_by_three(self):
        ens = make_square_array(3, 1.0, ORIGIN, DIPOLE, E0)
        assert ens.n == 9
        pos = ens.positions
        assert pos[:, 0].min() == -1.0 and pos[:, 0].max() == 1.0
        assert pos[:, 1].min() == -1.0 and pos[:, 1].max() == 1.0
        assert np.all(pos[:, 2] == 0.0)
        assert all(e.transition_energy == E0 for e in ens.emitters)

    def test_single_site_lattice(self):
        ens = make_square_array(1, 1.0, ORIGIN, DIPOLE, E0)
        assert ens.n == 1
        assert np.allclose(ens.positions[0], ORIGIN)

    def test_two_by_two_coordinates(self):
        ens = make_square_array(2, 0.5, ORIGIN, DIPOLE, E0)
        got = sorted(map(tuple, np.round(ens.positions, 12)))
        expected = sorted(
            [(-0.25, -0.25, 0.0), (0.25, -0.25, 0.0), (-0.25, 0.25, 0.0), (0.25, 0.25, 0.0)]
        )
        assert got == expected

    def test_counts_always_square(self):
        for n_side in range(1, 6):
            assert make_square_array(n_side, 0.7, ORIGIN, DIPOLE, E0).n == n_side**2

    def test_translation_equivariance(self, rng):
        for _ in range(20):
            shift = rng.normal(size=3)
            base = make_square_array(3, 1.3, ORIGIN, DIPOLE, E0)
            moved = make_square_array(3, 1.3, tuple(shift), DIPOLE, E0)
            assert np.allclose(moved.positions, base.positions + shift, atol=1e-12)

    def test_rejects_bad_spacing(self):
        with pytest.raises(GeometryError):
            make_square_array(3, 0.0, ORIGIN, DIPOLE, E0)
        with pytest.raises(GeometryError):
            make_square_array(3, -1.0, ORIGIN, DIPOLE, E0)

    def test_prefix_subsets(self):
        # first `count` sites of the smallest enclosing lattice
        for count in range(1, 10):
            n_side = math.ceil(math.sqrt(count))
            full = make_square_array(n_side, 1.0, ORIGIN, DIPOLE, E0)
            ens = make_square_prefix(count, 1.0, ORIGIN, DIPOLE, E0)
            assert ens.n == count
            assert np.allclose(ens.positions, full.positions[:count])


class TestLinearArray:
    def test_basic_positions(self):
        ens = make_linear_array(9, 1.0, ORIGIN, (1.0, 0.0, 0.0), DIPOLE, E0)
        assert ens.n == 9
        assert np.allclose(ens.positions[:, 0], np.arange(9.0))
        assert ens.positions[:, 0].max() - ens.positions[:, 0].min() == 8.0

    def test_single(self):
        ens = make_linear_array(1, 1.0, ORIGIN, (1.0, 0.0, 0.0), DIPOLE, E0)
        assert ens.n == 1

    def test_offset_start(self):
        ens = make_linear_array(3, 2.0, (1.0, 0.0, 0.0), (1.0, 0.0, 0.0), DIPOLE, E0)
        assert np.allclose(ens.positions[:, 0], [1.0, 3.0, 5.0])

    def test_counts(self):
        for n in range(1, 8):
            assert make_linear_array(n, 0.3, ORIGIN, (0.0, 1.0, 0.0), DIPOLE, E0).n == n

    def test_translation_equivariance(self, rng):
        for _ in range(20):
            shift = rng.normal(size=3)
            base = make_linear_array(5, 0.8, ORIGIN, (0.0, 0.0, 1.0), DIPOLE, E0)
            moved = make_linear_array(5, 0.8, tuple(shift), (0.0, 0.0, 1.0), DIPOLE, E0)
            assert np.allclose(moved.positions, base.positions + shift, atol=1e-12)

    def test_rejects_non_unit_direction(self):
        with pytest.raises(GeometryError):
            make_linear_array(3, 1.0, ORIGIN, (1.0, 1.0, 0.0), DIPOLE, E0)


class TestTypes:
    def test_emitter_invariants(self):
        with pytest.raises(ValueError):
            Emitter(ORIGIN, (0.0, 0.0, 0.0), E0)
        with pytest.raises(ValueError):
            Emitter(ORIGIN, DIPOLE, -5.0)

    def test_ensemble_distinct_positions(self):
        e = Emitter(ORIGIN, DIPOLE, E0)
        with pytest.raises(ValueError):
            Ensemble((e, Emitter(ORIGIN, DIPOLE, E0)))

    def test_envelopes(self):
        rect = RectangularEnvelope(0.0, 22.0)
        assert rect(10.0) == 1.0 and rect(25.0) == 0.0
        with pytest.raises(ValueError):
            RectangularEnvelope(5.0, 5.0)
        gauss = GaussianEnvelope(30.0, 22.0)
        assert gauss(30.0) == 1.0
        assert abs(gauss(30.0 + 11.0) - 0.5) < 1e-12
        with pytest.raises(ValueError):
            GaussianEnvelope(30.0, 0.0)


class TestValidateScenario:
    def _scenario(self, n=9, **kwargs):
        ens = make_square_array(int(np.sqrt(n)), 1.0, ORIGIN, DIPOLE, E0)
        defaults = dict(
            ensemble=ens,
            couplings=CouplingSet(
                omega=np.zeros((n, n)),
                gamma=np.eye(n) * 7.0,
                k_factors=np.ones((n, n), complex),
            ),
            drive=Drive(E0, (0.0,) * n),
            t_final=100.0,
            solver="mf2",
        )
        defaults.update(kwargs)
        return Scenario(**defaults)

    def test_well_formed(self):
        assert validate_scenario(self._scenario()) == []

    def test_non_psd_gamma_flagged(self):
        n = 9
        gamma = np.eye(n) * 7.0
        gamma[0, 1] = gamma[1, 0] = 10.0  # makes a negative eigenvalue
        sc = self._scenario(
            couplings=CouplingSet(
                omega=np.zeros((n, n)), gamma=gamma, k_factors=np.ones((n, n), complex)
            )
        )
        problems = validate_scenario(sc)
        assert any("not PSD" in p for p in problems)

    def test_amplitude_length_mismatch(self):
        sc = self._scenario(drive=Drive(E0, (0.0,) * 8))
        problems = validate_scenario(sc)
        assert any("amplitude count" in p for p in problems)

    def test_exact_guard(self):
        ens = make_square_array(4, 1.0, ORIGIN, DIPOLE, E0)  # N = 16
        n = 16
        sc = Scenario(
            ensemble=ens,
            couplings=CouplingSet(
                omega=np.zeros((n, n)),
                gamma=np.eye(n),
                k_factors=np.ones((n, n), complex),
            ),
            drive=Drive(E0, (0.0,) * n),
            t_final=10.0,
            solver="exact",
        )
        problems = validate_scenario(sc)
        assert any("exact solver" in p for p in problems)
