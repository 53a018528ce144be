import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from noetherlab import spectral_sim as ss


@pytest.mark.parametrize("kw", [dict(d=4, N=64, box=10.0), dict(d=1, N=100, box=10.0),
                                dict(d=2, N=2, box=10.0), dict(d=1, N=64, box=-1.0),
                                dict(d=1, N=64, box=10.0, steps=-1)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        ss.LatticeConfig(**kw)


@pytest.mark.parametrize("d, N, box", [(1, 256, 60.0), (2, 64, 48.0), (3, 32, 40.0)])
def test_packet_norm_and_parseval(d, N, box):
    cfg = ss.LatticeConfig(d, N, box)
    w = box / 16
    st_ = ss.init_packet(cfg, [0.0] * d, w, [0.3] * d, amplitude=1.5)
    q = ss.total_charges(st_).Q
    assert q == pytest.approx(1.5 ** 2 * (2 * math.pi * w * w) ** (d / 2), rel=1e-10)
    assert st_.norm2() == pytest.approx(q, rel=1e-12)


def test_centred_packet_has_real_positive_spectrum():
    cfg = ss.LatticeConfig(1, 128, 40.0)
    c = ss.init_packet(cfg, [0.0], 2.0, [0.0]).coeffs
    big = np.abs(c) > 1e-10 * np.abs(c).max()
    assert np.all(np.abs(c.imag[big]) < 1e-14 * np.abs(c).max())
    assert np.all(c.real[big] > 0)


def test_field_round_trip():
    cfg = ss.LatticeConfig(2, 32, 20.0)
    rng = np.random.default_rng(1)
    phi = rng.normal(size=cfg.shape) + 1j * rng.normal(size=cfg.shape)
    assert np.allclose(ss.SpectralState.from_field(cfg, phi).field(), phi)


def test_well_placed_packet_has_negligible_leakage():
    cfg = ss.LatticeConfig(1, 128, 64.0)
    st_ = ss.init_packet(cfg, [0.0], cfg.box / 16, [0.5])
    assert ss.leakage(st_) < 1e-12


def test_packet_near_the_edge_leaks():
    cfg = ss.LatticeConfig(1, 128, 64.0)
    assert ss.leakage(ss.init_packet(cfg, [28.0], 3.0, [0.0])) > 1e-6


@pytest.mark.parametrize("width, carrier, fragment", [
    (0.5, [0.0], "unresolved"), (20.0, [0.0], "too wide"), (2.0, [5.5], "cutoff"),
])
def test_bad_packets_are_rejected(width, carrier, fragment):
    cfg = ss.LatticeConfig(1, 64, 40.0)   # h = 0.625, cutoff ~ 5.03
    with pytest.raises(ss.PacketError, match=fragment):
        ss.init_packet(cfg, [0.0], width, carrier)


def test_single_mode_phase_advance():
    cfg = ss.LatticeConfig(2, 16, 10.0, m=1.3, dt=0.07)
    st_ = ss.plane_wave(cfg, (2, -3), 0.5 + 0.2j)
    out = ss.evolve(st_, 11)
    k2 = (2 * math.pi / 10) ** 2 * (4 + 9)
    want = (0.5 + 0.2j) * np.exp(-1j * math.sqrt(k2 + 1.3 ** 2) * 0.77)
    assert out.coeffs[2, -3] == pytest.approx(want, abs=1e-15)
    assert out.t == pytest.approx(0.77)


@given(st.integers(0, 2 ** 31), st.integers(1, 500))
@settings(max_examples=20, deadline=None)
def test_evolution_is_unitary(seed, steps):
    cfg = ss.LatticeConfig(1, 64, 30.0, dt=0.1)
    rng = np.random.default_rng(seed)
    st_ = ss.SpectralState(cfg, rng.normal(size=64) + 1j * rng.normal(size=64))
    assert ss.evolve(st_, steps).norm2() == pytest.approx(st_.norm2(), rel=1e-13)


def test_plane_wave_charges():
    cfg = ss.LatticeConfig(2, 16, 8.0, m=0.8)
    st_ = ss.plane_wave(cfg, (1, 2), 0.3)
    rec = ss.total_charges(st_)
    k = 2 * math.pi / 8 * np.array([1, 2])
    Q = 0.09 * 64
    assert rec.Q == pytest.approx(Q)
    assert rec.P == pytest.approx(tuple(Q * k))
    assert rec.E_tot == pytest.approx(Q * math.sqrt(k @ k + 0.64))


def test_two_mode_current_integrates_to_velocities():
    cfg = ss.LatticeConfig(1, 32, 12.0)
    c = np.zeros(32, complex)
    c[2], c[-5] = 0.7, 0.4j
    st_ = ss.SpectralState(cfg, c)
    _, total = ss.current_density(st_)
    k = cfg.axis_k()
    E = cfg.energy()
    want = 12.0 * (0.49 * k[2] / E[2] + 0.16 * k[-5] / E[-5])
    assert total[0] == pytest.approx(want, rel=1e-12)


def test_continuity_for_a_packet():
    cfg = ss.LatticeConfig(2, 32, 24.0)
    st_ = ss.evolve(ss.init_packet(cfg, [1.0, -2.0], 2.0, [0.5, -0.3]), 7)
    assert ss.continuity_defect(st_) < 1e-12
    assert max(ss.emt_continuity_defect(st_)) < 1e-12


def test_emt_time_row_integrates_to_energy_and_momentum():
    cfg = ss.LatticeConfig(1, 128, 40.0)
    st_ = ss.init_packet(cfg, [0.0], 2.0, [0.6])
    rows, _ = ss.emt_rows(st_)
    rec = ss.total_charges(st_)
    assert rows[0].sum() * cfg.dV == pytest.approx(rec.E_tot, rel=1e-12)
    # lower index: T_1^0 integrates to -P^1
    assert rows[1].sum() * cfg.dV == pytest.approx(-rec.P[0], rel=1e-12)


def test_series_current_converges_below_the_mass_shell():
    kcut = math.sqrt(0.5)
    cfg = ss.LatticeConfig(1, 128, 2 * math.pi * 6 / kcut, dt=0.05)
    st_ = ss.init_packet(cfg, [0.0], 2.5, [0.3], band_limit=kcut * (1 + 1e-12))
    jc, _ = ss.current_density(st_)
    js, _ = ss.current_density(st_, "series", 40)
    assert np.linalg.norm(js - jc) < 1e-10 * np.linalg.norm(jc)


def test_series_current_warns_outside_the_domain():
    cfg = ss.LatticeConfig(1, 32, 5.0)   # first mode has k ~ 1.26 > m
    with pytest.warns(ss.SeriesDivergenceWarning):
        ss.current_density(ss.plane_wave(cfg, (1,)), "series", 4)
    with pytest.raises(ValueError):
        ss.current_density(ss.plane_wave(cfg, (1,)), "bogus")


def test_group_velocity():
    cfg = ss.LatticeConfig(1, 512, 200.0, dt=0.5)
    k0 = 0.8
    st_ = ss.init_packet(cfg, [-40.0], 6.0, [k0])
    x = cfg.axis_x()

    def centroid(s):
        rho = np.abs(s.field()) ** 2
        return float((x * rho).sum() / rho.sum())

    out = ss.evolve(st_, 120)
    v = (centroid(out) - centroid(st_)) / out.t
    assert v == pytest.approx(k0 / math.sqrt(k0 * k0 + 1), rel=0.01)


def test_angular_momentum_of_a_vortex():
    cfg = ss.LatticeConfig(2, 64, 32.0)
    x, y = cfg.x()
    phi = (x + 1j * y) * np.exp(-(x * x + y * y) / 8)
    st_ = ss.SpectralState.from_field(cfg, phi)
    rec = ss.total_charges(st_)
    assert rec.M[(1, 2)] == pytest.approx(rec.Q, rel=1e-10)


def test_angular_momentum_of_a_moving_packet():
    cfg = ss.LatticeConfig(2, 64, 48.0)
    st_ = ss.init_packet(cfg, [-5.0, 3.0], 2.0, [1.0, 0.0])
    rec = ss.total_charges(st_)
    # x p_y - y p_x for a classical particle at (-5, 3) with momentum (1, 0)
    assert rec.M[(1, 2)] == pytest.approx(-3.0 * rec.Q, rel=1e-10)


def test_angular_momentum_is_conserved_for_a_centred_packet():
    cfg = ss.LatticeConfig(2, 64, 40.0, dt=0.1)
    drift, leak, recs = ss.angular_momentum_drift(ss.init_packet(cfg, [0.0, 0.0], 2.0, [0.0, 0.0]), 50)
    assert drift < 1e-13
    assert leak < 1e-10
    assert len(recs) == 51


def test_boundary_contact_is_reported():
    cfg = ss.LatticeConfig(2, 64, 40.0, dt=0.5)
    st_ = ss.init_packet(cfg, [10.0, 0.0], 2.0, [2.0, 0.0])
    with pytest.raises(ss.BoundaryContactError):
        ss.angular_momentum_drift(st_, 100, record_every=5)


@pytest.mark.parametrize("d, N", [(1, 128), (2, 32)])
def test_discrete_symmetries(d, N):
    cfg = ss.LatticeConfig(d, N, 30.0)
    st_ = ss.evolve(ss.init_packet(cfg, [1.0] * d, 2.0, [0.7] * d), 3)
    assert ss.symmetry_test(st_, "P") < 1e-13
    assert ss.symmetry_test(st_, "T") < 1e-13
    # conjugation maps positive to negative frequencies: not a symmetry
    assert ss.symmetry_test(st_, "C") > 1.0
    with pytest.raises(ValueError):
        ss.symmetry_test(st_, "CPT")


def test_run_records_every_interval():
    cfg = ss.LatticeConfig(1, 64, 30.0, dt=0.1)
    recs = ss.run(ss.init_packet(cfg, [0.0], 2.0, [0.2]), 10, record_every=4, with_continuity=True)
    assert [round(r.t, 10) for r in recs] == [0.0, 0.4, 0.8, 1.0]
    assert all(r.continuity_defect < 1e-12 for r in recs)
    assert max(abs(r.Q - recs[0].Q) for r in recs) < 1e-12 * recs[0].Q


def test_bilinear_size_gate():
    cfg = ss.LatticeConfig(3, 64, 40.0)
    with pytest.raises(ValueError, match="limited"):
        ss.current_density(ss.plane_wave(cfg, (1, 0, 0)))
