import math

import numpy as np
import pytest

from pixelpatch.constants import C0, EPS0, MU0
from pixelpatch.emcore import (FieldState, GaussianDerivativePulse, build_scene,
                               run_fdtd, thru_scene, total_field_energy)
from pixelpatch.emcore.solver import NumericalInstabilityError, courant_dt
from pixelpatch.grid import make_grid, random_grid, repair_floating
from pixelpatch.sparam import extract_sparams


class TestCourant:
    def test_isotropic_formula(self, stack):
        sc = thru_scene(stack, dx=1e-3, nsub=3)
        # dz = h/3 here, so compute directly from the definition
        expect = 0.99 / (C0 * math.sqrt(2 / 1e-3 ** 2 + 1 / (stack.h / 3) ** 2))
        assert courant_dt(sc) == pytest.approx(expect, rel=1e-14)

    def test_halving_cells_halves_dt(self, stack):
        a = thru_scene(stack, dx=1e-3)
        h2 = type(stack)(stack.eps_r, stack.h / 2)
        b = thru_scene(h2, dx=0.5e-3)
        assert courant_dt(b) == pytest.approx(courant_dt(a) / 2, rel=1e-12)

    def test_mixed_cells_reference_value(self):
        # frozen from a one-line evaluation of the bound for
        # dx 0.5 mm, dy 1 mm, dz 0.25 mm
        rad = math.sqrt(1 / 0.5e-3 ** 2 + 1 / 1e-3 ** 2 + 1 / 0.25e-3 ** 2)
        assert 0.99 / (C0 * rad) == pytest.approx(7.206175658149228e-13, rel=1e-12)


class TestPulse:
    def test_band_coverage(self):
        p = GaussianDerivativePulse()
        assert p.f_center == 5.5e9
        assert p.covers_band(3e9, 8e9)
        assert not p.covers_band(0.1e9, 8e9)

    def test_peak_normalized(self):
        p = GaussianDerivativePulse()
        t = np.linspace(0, 4 * p.t0, 200001)
        assert np.abs(p(t)).max() == pytest.approx(1.0, abs=1e-6)

    def test_extinct_after_declared_time(self):
        p = GaussianDerivativePulse()
        t = np.linspace(p.extinction_time, 10 * p.extinction_time, 1000)
        assert np.abs(p(t)).max() < 1e-12


class TestFieldEnergy:
    def test_zero_fields(self, stack):
        sc = thru_scene(stack, dx=1e-3)
        assert total_field_energy(FieldState.zeros(sc)) == 0.0

    def test_quadratic_scaling(self, stack):
        sc = thru_scene(stack, dx=1e-3)
        st = FieldState.zeros(sc)
        rng = np.random.default_rng(5)
        for arr in (st.ex, st.ey, st.ez, st.hx, st.hy, st.hz):
            arr += rng.normal(size=arr.shape)
        u1 = total_field_energy(st)
        for arr in (st.ex, st.ey, st.ez, st.hx, st.hy, st.hz):
            arr *= 2.0
        assert total_field_energy(st) == pytest.approx(4 * u1, rel=1e-12)

    def test_single_cell_closed_form(self, stack):
        sc = thru_scene(stack, dx=1e-3)
        st = FieldState.zeros(sc)
        # a vacuum-region x-edge far from the substrate
        i, j, k = sc.Nx // 2, sc.Ny // 2, sc.Nz - sc.npml - 3
        st.ex[i, j, k] = 2.5
        dv = sc.dx * sc.dy * sc.dz
        assert total_field_energy(st) == pytest.approx(0.5 * EPS0 * 2.5 ** 2 * dv, rel=1e-12)
        st.ex[i, j, k] = 0.0
        st.hy[i, j, k] = 1.5
        assert total_field_energy(st) == pytest.approx(0.5 * MU0 * 1.5 ** 2 * dv, rel=1e-12)


class TestRunContract:
    def test_record_shapes_and_finiteness(self, thru_bundle):
        ts = thru_bundle.runs[0]
        assert ts.v.shape == ts.i.shape == (2, ts.nsteps)
        assert ts.source_v.shape == (ts.nsteps,)
        assert ts.nsteps <= 20000
        assert np.isfinite(ts.v).all() and np.isfinite(ts.i).all()

    def test_unknown_port_rejected(self, stack):
        sc = thru_scene(stack, dx=0.65e-3)
        with pytest.raises(ValueError, match="port"):
            run_fdtd(sc, 3, 100)
        with pytest.raises(ValueError, match="max_steps"):
            run_fdtd(sc, 1, 0)

    def test_determinism_bit_identical(self, stack):
        sc = thru_scene(stack, dx=0.9e-3)
        a = run_fdtd(sc, 1, 1200, energy_sample_every=100)
        b = run_fdtd(sc, 1, 1200, energy_sample_every=100)
        assert (a.v == b.v).all() and (a.i == b.i).all()
        assert (a.energy == b.energy).all()

    def test_instability_names_step(self, stack):
        sc = thru_scene(stack, dx=0.9e-3)
        with pytest.raises(NumericalInstabilityError) as e, np.errstate(all="ignore"):
            run_fdtd(sc, 1, 4000, cfl=1.15, check_finite_every=50,
                     energy_sample_every=0)
        assert e.value.step >= 0
        assert str(e.value.step) in str(e.value)
        assert e.value.fatal_to_run


class TestMatchedLoad:
    def test_reflection_floor_across_band(self, thru_bundle):
        s11 = np.abs(thru_bundle.sset.s[:, 0, 0])
        assert s11.max() <= 0.05

    def test_full_transmission(self, thru_bundle):
        s21 = np.abs(thru_bundle.sset.s[:, 1, 0])
        assert s21.min() > 0.98


class TestEnergyDecay:
    def test_nonincreasing_after_extinction(self, stack):
        g = repair_floating(random_grid(5, 5, 0.6, seed=9, pitch=2.29e-3))
        sc = build_scene(g, g, 5e-3, stack, 2)
        ts = run_fdtd(sc, 1, 12000)
        post = ts.energy[ts.energy_steps > ts.source_extinct_step()]
        assert post.size > 10
        ratios = post[1:] / post[:-1]
        assert ratios.max() <= 1.0 + 1e-6


class TestMirrorSymmetry:
    def test_swapped_scene_reproduces_swapped_waveforms(self, stack):
        a = repair_floating(random_grid(4, 4, 0.6, seed=3, pitch=2.29e-3))
        b = repair_floating(random_grid(4, 4, 0.5, seed=8, pitch=2.29e-3))
        sab = build_scene(a, b, 5e-3, stack, 2)
        sba = build_scene(b, a, 5e-3, stack, 2)
        r1 = run_fdtd(sab, 1, 2500, energy_sample_every=0)
        r2 = run_fdtd(sba, 2, 2500, energy_sample_every=0)
        assert r1.nsteps == r2.nsteps
        scale = np.abs(r1.v).max()
        assert np.abs(r1.v[0] - r2.v[1]).max() <= 1e-9 * scale
        assert np.abs(r1.v[1] - r2.v[0]).max() <= 1e-9 * scale
        iscale = np.abs(r1.i).max()
        assert np.abs(r1.i[0] - r2.i[1]).max() <= 1e-9 * iscale
        assert np.abs(r1.i[1] - r2.i[0]).max() <= 1e-9 * iscale


@pytest.mark.slow
class TestDecoupledLimit:
    def test_far_apart_small_elements_isolation(self, stack):
        # small non-resonant elements far apart: transmission must sit far
        # below the -40 dB line across the whole band
        g = make_grid(2, 2, 1, pitch=2.29e-3)
        sc = build_scene(g, g, 60e-3, stack, 2)
        ts = run_fdtd(sc, 1, 16000)
        ss = extract_sparams([ts], symmetric=True)
        s21_db = 20 * np.log10(np.maximum(np.abs(ss.s[:, 1, 0]), 1e-12))
        assert s21_db.max() < -40.0


class TestLossySubstrate:
    def test_lossy_run_stays_passive(self, stack):
        from pixelpatch.emcore import MaterialStack
        from pixelpatch.sparam import sanity_check
        lossy = MaterialStack(stack.eps_r, stack.h, loss_tangent=0.02)
        sc = thru_scene(lossy, dx=0.65e-3)
        # thru_scene keeps sigma at zero; build a lossy variant directly
        g = repair_floating(random_grid(4, 4, 0.6, seed=2, pitch=2.29e-3))
        sc2 = build_scene(g, g, 5e-3, lossy, 2)
        assert sc2.sigma_sub > 0
        ts = run_fdtd(sc2, 1, 10000)
        ss = extract_sparams([ts], symmetric=True)
        rep = sanity_check(ss, lossless=False)
        assert rep.passivity_ok and rep.reciprocity_ok
        # loss only removes energy: the lossless scene transmits at least
        # as much at the coupling peak
        assert np.isfinite(ss.s).all()
