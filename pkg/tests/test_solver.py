import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from coaperture.blockage import BlockageMask, MaskPrimitive, apply_mask
from coaperture.errors import NoPowerError, SamplingError
from coaperture.feed import FeedPattern
from coaperture.metrics import first_null
from coaperture.solver import (PatternCut, PatternMap, aperture_field, directivity,
                               disc_aperture, far_field_cut, far_field_map, far_field_uv,
                               pattern_integrate_directivity, read_cut_csv,
                               uniform_directivity_dbi, wavelength_mm, write_cut_csv)

from conftest import FREQ, LAMBDA, airy_db

# frozen from an independent quadrature of the cos-q illumination on the
# baseline Cassegrain (equivalent focal length 950 mm)
TAPER_ORACLE_DB = {-12.0: -0.63690, -18.0: -1.27047}


@pytest.fixture(scope="module")
def disc():
    return disc_aperture(500.0, FREQ)


@pytest.fixture(scope="module")
def disc_cut(disc):
    return far_field_cut(disc, 0.0, -2.0, 2.0, 2001)


def test_wavelength():
    assert wavelength_mm(94.0) == pytest.approx(3.18928, abs=1e-5)


def test_uniform_feed_aperture_is_spreading_factor_with_flat_phase(baseline):
    fld = aperture_field(baseline, FeedPattern.cos_q(0.0), FREQ, grid_n=512)
    X, Y = fld.coordinates()
    inside = fld.rim_mask()
    r = np.hypot(X, Y)[inside]
    a = fld.co[inside]
    expected = 1.0 / (1.0 + (r / (2.0 * baseline.equivalent_focal_length)) ** 2)
    ratio = np.abs(a) / expected
    assert np.ptp(ratio) / ratio.mean() < 1e-9
    ph = np.angle(a * np.conj(a[np.argmin(r)]))
    assert np.max(np.abs(ph)) < 1e-6


def test_outside_rim_is_exactly_zero(baseline):
    fld = aperture_field(baseline, FeedPattern.from_edge_taper(-12, 15), FREQ, grid_n=512)
    out = ~fld.rim_mask()
    assert not np.any(fld.co[out]) and not np.any(fld.cx[out])


@pytest.mark.parametrize("pol", ["linear_x", "linear_y"])
def test_symmetric_cassegrain_has_no_cross_pol(baseline, pol):
    feed = FeedPattern.from_edge_taper(-12.0, baseline.feed_half_angle_deg, polarization=pol)
    fld = aperture_field(baseline, feed, FREQ, grid_n=512)
    assert np.max(np.abs(fld.cx)) <= 1e-12
    assert np.max(np.abs(fld.co)) > 0.1


def _brute_offset_ratio(system, x, y):
    """|cx/co| for a balanced x-polarised feed, one ray at a time."""
    F = system.main.focal_length
    focus = np.array([0.0, 0.0, F])
    b = np.asarray(system.feed_axis, float)
    xf = np.array([1.0, 0, 0]) - b[0] * b
    xf /= np.linalg.norm(xf)
    yf = np.cross(b, xf)
    out = []
    for xi, yi in zip(x, y):
        p = np.array([xi, yi, (xi * xi + yi * yi) / (4 * F)])
        s = (p - focus) / np.linalg.norm(p - focus)
        th = math.acos(s @ b)
        ph = math.atan2(s @ yf, s @ xf)
        # Ludwig-3 co-polar unit vector
        e = ((math.cos(th) * math.cos(ph) ** 2 + math.sin(ph) ** 2) * xf
             + (math.cos(th) - 1) * math.sin(ph) * math.cos(ph) * yf
             - math.sin(th) * math.cos(ph) * b)
        n = np.array([-xi / (2 * F), -yi / (2 * F), 1.0])
        n /= np.linalg.norm(n)
        er = 2 * (n @ e) * n - e
        out.append(abs(er[1]) / abs(er[0]))
    return np.array(out)


def test_offset_cross_pol_matches_brute_force(offset_system):
    feed = FeedPattern.from_edge_taper(-12.0, offset_system.feed_half_angle_deg)
    fld = aperture_field(offset_system, feed, FREQ, grid_n=512)
    X, Y = fld.coordinates()
    idx = np.flatnonzero(fld.rim_mask())
    pick = np.random.default_rng(3).choice(idx, 1000, replace=False)
    iy, ix = np.unravel_index(pick, X.shape)
    solver = np.abs(fld.cx[iy, ix]) / np.abs(fld.co[iy, ix])
    brute = _brute_offset_ratio(offset_system, X[iy, ix], Y[iy, ix])
    assert np.max(np.abs(solver - brute)) < 1e-9
    assert np.max(np.abs(fld.cx)) > 0
    assert brute.max() > 0.01


def test_airy_pattern(disc_cut):
    assert disc_cut.co_db.max() == 0.0
    assert disc_cut.co_db[1000] == 0.0
    assert first_null(disc_cut) == pytest.approx(0.44575083, abs=0.004)
    ref = airy_db(disc_cut.theta_deg)
    sel = ref >= -40
    assert np.max(np.abs(disc_cut.co_db[sel] - ref[sel])) < 0.2


def test_symmetric_cut(disc_cut):
    assert np.allclose(disc_cut.co_db, disc_cut.co_db[::-1], rtol=0, atol=1e-9)


def test_plane_reciprocity(disc, disc_cut):
    other = far_field_cut(disc, 90.0, -2.0, 2.0, 2001)
    assert np.max(np.abs(other.co_db - disc_cut.co_db)) < 1e-9


def test_plane_reciprocity_symmetric_scenario(scenario_runs):
    e, h = scenario_runs["backfed_b"].cuts
    assert np.max(np.abs(e.co_db - h.co_db)) < 1e-9


def test_uniform_directivity(disc):
    d = directivity(disc)
    assert d.directivity_dbi == pytest.approx(53.84854055, abs=0.05)
    assert uniform_directivity_dbi(500, FREQ) == pytest.approx(53.84854055, abs=1e-6)
    assert d.realized_gain_dbi == d.directivity_dbi


@settings(max_examples=25)
@given(st.integers(0, 2 ** 32 - 1), st.floats(0.01, 2.0))
def test_nonuniform_amplitude_loses_directivity(seed, spread):
    ref = disc_aperture(500.0, 20.0, grid_n=128, cell_size=4.0)
    rng = np.random.default_rng(seed)
    amp = np.exp(spread * rng.standard_normal(ref.co.shape))
    fld = disc_aperture(500.0, 20.0, grid_n=128, cell_size=4.0)
    object.__setattr__(fld, "co", ref.co * amp)
    assert directivity(fld).directivity_dbi < directivity(ref).directivity_dbi


@pytest.mark.parametrize("edge_db", sorted(TAPER_ORACLE_DB))
def test_taper_efficiency_matches_quadrature(baseline, edge_db):
    feed = FeedPattern.from_edge_taper(edge_db, baseline.feed_half_angle_deg)
    fld = aperture_field(baseline, feed, FREQ)
    deficit = directivity(fld).directivity_dbi - uniform_directivity_dbi(500.0, FREQ)
    assert deficit == pytest.approx(TAPER_ORACLE_DB[edge_db], abs=0.05)
    assert fld.loss_budget.taper_db == pytest.approx(TAPER_ORACLE_DB[edge_db], abs=0.05)


def test_realized_gain_books_losses(baseline):
    feed = FeedPattern.from_edge_taper(-12, baseline.feed_half_angle_deg)
    mask = BlockageMask((MaskPrimitive.disc(30.0),)).with_film_loss(0.3)
    fld = aperture_field(baseline, feed, FREQ, mask=mask, grid_n=512)
    lb = fld.loss_budget
    assert lb.spillover_db < 0 and lb.mask_db < 0
    d = directivity(fld)
    assert d.realized_gain_dbi == pytest.approx(
        d.directivity_dbi + lb.mask_db + lb.spillover_db - 0.3)


@pytest.mark.slow
@pytest.mark.parametrize("inner", [0.0, 100.0])
def test_pattern_integration_agrees_with_aperture_formula(inner):
    fld = disc_aperture(500.0, FREQ, grid_n=512, inner_diameter=inner)
    pm = far_field_map(fld, theta_max_deg=6.0)
    assert pattern_integrate_directivity(pm) == pytest.approx(
        directivity(fld).directivity_dbi, abs=0.2)


def test_isotropic_pattern_is_zero_dbi():
    th = np.linspace(0, 180, 721)
    ph = np.arange(36) * 10.0
    pm = PatternMap(th, ph, np.ones((th.size, ph.size)))
    assert pattern_integrate_directivity(pm) == pytest.approx(0.0, abs=1e-4)


def test_undersampled_beam_rejected():
    fld = disc_aperture(500.0, FREQ, grid_n=512)
    with pytest.raises(SamplingError):
        pattern_integrate_directivity(far_field_map(fld, theta_max_deg=2.0, samples_per_beam=4))


def test_uneven_phi_rejected():
    th = np.linspace(0, 180, 721)
    pm = PatternMap(th, np.array([0.0, 10, 30, 200]), np.ones((th.size, 4)))
    with pytest.raises(SamplingError):
        pattern_integrate_directivity(pm)


def test_parseval():
    fld = disc_aperture(500.0, FREQ, grid_n=512)
    L = fld.grid_n * fld.cell_size
    du = fld.wavelength / (2.0 * L)
    u = np.arange(-1.0, 1.0 + du / 2, du)
    co, cx = far_field_uv(fld, u, u)
    U, V = np.meshgrid(u, u)
    vis = U ** 2 + V ** 2 <= 1.0
    far = np.sum((np.abs(co) ** 2 + np.abs(cx) ** 2)[vis]) * du * du
    assert far / (fld.wavelength ** 2 * fld.power()) == pytest.approx(1.0, abs=5e-3)


@pytest.mark.parametrize("b, sll_oracle", [(0.1, -16.8698), (0.2, -15.1784), (0.3, -13.2319)])
def test_blocked_aperture_oracle(b, sll_oracle):
    from coaperture.metrics import first_sll
    fld = disc_aperture(500.0, FREQ, inner_diameter=500.0 * b)
    cut = far_field_cut(fld, 0.0, -2.0, 2.0, 2001)
    ref = airy_db(cut.theta_deg, b=b)
    sel = ref >= -35
    assert np.max(np.abs(cut.co_db[sel] - ref[sel])) < 0.2
    assert first_sll(cut) == pytest.approx(sll_oracle, abs=0.1)


def test_wavelength_scaling():
    a = disc_aperture(500.0, 94.0, grid_n=512)
    b = disc_aperture(250.0, 188.0, grid_n=512)
    ca = far_field_cut(a, 0.0, -1.5, 1.5, 601)
    cb = far_field_cut(b, 0.0, -1.5, 1.5, 601)
    sel = ca.co_db > -60
    assert np.max(np.abs(ca.co_db[sel] - cb.co_db[sel])) < 1e-6
    assert directivity(a).directivity_dbi == pytest.approx(directivity(b).directivity_dbi)


@pytest.mark.parametrize("f", [0.5, 301.0])
def test_frequency_out_of_band(baseline, f):
    with pytest.raises(SamplingError):
        aperture_field(baseline, FeedPattern.cos_q(10), f, grid_n=512)


def test_grid_too_coarse(baseline):
    with pytest.raises(SamplingError):
        aperture_field(baseline, FeedPattern.cos_q(10), FREQ, grid_n=256)


def test_empty_field_has_no_power():
    fld = apply_mask(BlockageMask((MaskPrimitive.disc(400.0),)),
                     disc_aperture(500.0, FREQ, grid_n=512))
    with pytest.raises(NoPowerError):
        directivity(fld)
    with pytest.raises(NoPowerError):
        far_field_cut(fld, 0.0, -1, 1, 11)


@pytest.mark.parametrize("bad", [dict(n_points=2), dict(theta_min=-91.0), dict(theta_max=-3.0)])
def test_cut_arguments(bad):
    fld = disc_aperture(500.0, 20.0, grid_n=128, cell_size=4.0)
    kw = dict(phi_plane=0.0, theta_min=-2.0, theta_max=2.0, n_points=11) | bad
    with pytest.raises(ValueError):
        far_field_cut(fld, **kw)


def test_cut_validation():
    with pytest.raises(ValueError):
        PatternCut(0.0, np.array([0.0, 0.0, 1.0]), np.zeros(3), np.zeros(3), 0.0)
    with pytest.raises(ValueError):
        PatternCut(0.0, np.array([0.0, 1.0]), np.zeros(3), np.zeros(3), 0.0)


def test_cut_csv_round_trip(tmp_path, disc_cut):
    p = tmp_path / "cut.csv"
    write_cut_csv(disc_cut, p, footer=["config_sha256=abc"])
    text = p.read_text().splitlines()
    assert text[0].startswith("# gain_dbi=") and text[3] == "theta_deg,co_db,cx_db"
    assert text[-1] == "# config_sha256=abc"
    back = read_cut_csv(p)
    assert back.phi_plane == 0.0 and back.frequency_ghz == pytest.approx(FREQ)
    assert np.allclose(back.theta_deg, disc_cut.theta_deg, atol=5e-7)
    assert np.allclose(back.co_db, disc_cut.co_db, atol=5e-7)
    assert back.peak_gain_dbi == pytest.approx(disc_cut.peak_gain_dbi, abs=1e-6)


def test_lambda_constant():
    assert LAMBDA == pytest.approx(wavelength_mm(FREQ))
