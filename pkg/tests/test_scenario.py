"""Config parsing, experiment execution, certificate verification against
trajectories, and gain sweeps.  Simulation tests run on coarse grids and
short horizons; the full-resolution reference experiment lives in
test_acceptance.py."""

import math
from dataclasses import replace

import numpy as np
import pytest

from sgec.admissibility import decay_certificate
from sgec.core import PhysicalParams
from sgec.scenario import (ConfigError, band_times, gamma_sweep, load_config,
                           run, verify_certificate)

# coarse, fast variant of the reference closed-loop experiment
FAST = {"gamma": "1", "n": "100", "T": "2", "sample_dt": "0.1"}


def fast_config(**extra):
    over = dict(FAST)
    over.update({k: str(v) for k, v in extra.items()})
    return load_config("paper-5.2", over)


# ---------------------------------------------------------------- load_config

def test_empty_document_defaults():
    cfg = load_config("")
    assert cfg.n == 1000
    assert cfg.integrator.rtol == 1e-6
    assert cfg.sample_dt == 0.01
    assert cfg.mode == "unforced"
    assert cfg.params.k == 0.12
    assert cfg.params.beta == 0.02
    assert cfg.obs.alpha == 20.0
    assert cfg.h_star == 10.0
    assert cfg.T == 50.0
    assert cfg.z0 == "paper"
    assert cfg.z1 == "zero"


def test_preset_reference_experiment():
    cfg = load_config("paper-5.2", {"gamma": "1"})
    assert cfg.mode == "closed-loop"
    assert cfg.gamma == 1.0
    assert (cfg.params.k, cfg.params.beta) == (0.12, 0.02)
    assert cfg.obs.alpha == 20.0
    assert cfg.h_star == 10.0
    assert (cfg.n, cfg.T, cfg.sample_dt) == (1000, 50.0, 0.01)
    assert cfg.z0 == "paper"
    assert cfg.obs.zhat0 == "zero" and cfg.obs.zhat1 == "zero"


def test_preset_requires_gamma():
    with pytest.raises(ConfigError, match="gamma"):
        load_config("paper-5.2")


def test_document_parse_with_comments():
    text = """
    # experiment setup
    k = 0.5
    beta = 0.05   # nonlinearity
    mode = unforced

    n = 64
    """
    cfg = load_config(text)
    assert cfg.params.k == 0.5
    assert cfg.params.beta == 0.05
    assert cfg.n == 64


def test_unknown_key_names_line():
    with pytest.raises(ConfigError, match=r"(?s)line 3.*whatever"):
        load_config("k = 0.5\nbeta = 0.05\nwhatever = 3\n")


def test_negative_alpha_is_parse_error():
    with pytest.raises(ConfigError, match="alpha"):
        load_config("alpha = -1\n")


def test_value_validation_errors():
    for text in ("k = 0\n", "beta = -0.1\n", "n = 10.5\n", "n = 2\n",
                 "T = 0\n", "sample_dt = 0\n", "psi = cubic\n",
                 "mode = sideways\n", "gamma = 0\nmode = closed-loop\n",
                 "rtol = 0\n", "z0 = gauss\n", "snapshots = 1,99\n",
                 "T = 1\nsample_dt = 2\n"):
        with pytest.raises(ConfigError):
            load_config(text)


def test_overrides_apply_after_document():
    cfg = load_config("n = 100\n", {"n": "200", "mode": "plant-only"})
    assert cfg.n == 200
    assert cfg.mode == "plant-only"
    with pytest.raises(ConfigError, match="override"):
        load_config("", {"n": "abc"})


def test_snapshot_parsing():
    cfg = load_config("T = 10\nsnapshots = 0, 2.5, 10\n")
    assert cfg.snapshots == (0.0, 2.5, 10.0)
    assert load_config("").snapshots == ()


def test_integrator_dt_init_respects_grid_scale():
    cfg = load_config("n = 1000\nk = 0.12\n")
    assert cfg.integrator.dt_init <= 0.001 / math.sqrt(0.12) + 1e-15
    coarse = load_config("n = 10\nk = 0.12\n")
    assert coarse.integrator.dt_init == pytest.approx(1e-3)


def test_tolerance_keys_flow_through():
    cfg = load_config("rtol = 1e-8\natol = 1e-12\n")
    assert cfg.integrator.rtol == 1e-8
    assert cfg.integrator.atol == 1e-12


# ------------------------------------------------------------------------ run

def test_zero_start_stays_at_equilibrium():
    cfg = load_config("", {"z0": "zero", "z1": "zero", "mode": "closed-loop",
                           "gamma": "1", "n": "50", "T": "1",
                           "sample_dt": "0.25"})
    rec = run(cfg)
    for series in (rec.H, rec.H_hat, rec.E, rec.u, rec.y):
        np.testing.assert_array_equal(series, 0.0)


def test_record_shape_and_sampling_grid():
    rec = run(fast_config())
    n_expect = 21  # T / sample_dt + 1
    for series in (rec.t, rec.H, rec.H_hat, rec.E, rec.u, rec.y):
        assert len(series) == n_expect
    assert rec.t[0] == 0.0
    assert rec.t[-1] == pytest.approx(2.0, abs=1e-9)
    np.testing.assert_allclose(np.diff(rec.t), 0.1, atol=1e-9)
    assert rec.mode == "closed-loop"
    assert rec.gamma == 1.0
    assert rec.alpha == 20.0
    assert not rec.uncertified
    assert rec.params.k == 0.12
    assert rec.stats["n_accepted"] > 0


def test_run_populates_final_state():
    rec = run(fast_config())
    assert rec.final is not None
    assert rec.final.t == pytest.approx(2.0, abs=1e-9)
    assert rec.final.plant.z.size == 99
    assert np.all(np.isfinite(rec.final.observer.v))


def test_energies_start_where_expected():
    rec = run(fast_config())
    # initial profile carries positive energy; zero-initialized observer none
    assert rec.H[0] > 25.0
    assert rec.H_hat[0] == 0.0
    assert rec.E[0] > 25.0
    assert rec.u[0] == 0.0  # y(0) = 0 since z1 = zero
    assert rec.y[0] == 0.0


def test_unforced_ignores_observer_gain():
    a = run(load_config("", {"n": "80", "T": "1", "sample_dt": "0.25",
                             "alpha": "5"}))
    b = run(load_config("", {"n": "80", "T": "1", "sample_dt": "0.25",
                             "alpha": "500"}))
    np.testing.assert_array_equal(a.H, b.H)
    np.testing.assert_array_equal(a.u, np.zeros(5))


def test_unforced_conserves_energy_coarse():
    # defect guard: a wrong ghost or stencil sign produces drift ~1e-2;
    # the tight quantitative bound is checked at full resolution in
    # test_acceptance.py
    rec = run(load_config("", {"n": "200", "T": "5", "sample_dt": "0.5",
                               "rtol": "1e-8", "atol": "1e-11"}))
    drift = np.max(np.abs(rec.H - rec.H[0])) / rec.H[0]
    assert drift < 1e-4


def test_plant_only_mode():
    rec = run(load_config("", {"mode": "plant-only", "n": "80", "T": "1",
                               "sample_dt": "0.25"}))
    np.testing.assert_array_equal(rec.H_hat, 0.0)
    np.testing.assert_array_equal(rec.E, 0.0)
    np.testing.assert_array_equal(rec.u, 0.0)
    assert rec.H[0] > 0.0


def test_snapshots_recorded_at_requested_times():
    rec = run(fast_config(snapshots="0,1,2"))
    assert set(rec.snapshots) == {0.0, 1.0, 2.0}
    snap = rec.snapshots[1.0]
    assert snap["x"].size == 101   # both boundary nodes included
    assert snap["x"][0] == 0.0 and snap["x"][-1] == 1.0
    assert snap["z"][0] == 0.0     # pinned end
    assert snap["z_hat"].size == 101
    # initial snapshot reproduces the initial profile
    z0 = rec.snapshots[0.0]["z"]
    assert z0[50] == pytest.approx(10.0, abs=1e-3)  # 5(1-cos(2pi/2)) at x=0.5
    np.testing.assert_array_equal(rec.snapshots[0.0]["z_hat"][1:-1], 0.0)


def test_closed_loop_requires_admissible_params():
    cfg = fast_config(beta=0.1)
    with pytest.raises(ValueError, match="admissibility"):
        run(cfg)
    rec = run(cfg, unsafe=True)
    assert rec.uncertified


def test_inadmissible_unforced_runs_without_gate():
    rec = run(load_config("", {"beta": "0.1", "n": "50", "T": "0.5",
                               "sample_dt": "0.25"}))
    assert not rec.uncertified


def test_run_determinism():
    r1 = run(fast_config())
    r2 = run(fast_config())
    np.testing.assert_array_equal(r1.H, r2.H)
    np.testing.assert_array_equal(r1.u, r2.u)
    assert r1.stats == r2.stats


# --------------------------------------------------------- verify_certificate

def _fast_cert(rec, slack_params=None):
    p = slack_params or PhysicalParams(k=0.12, beta=0.02)
    return decay_certificate(p, 0.095, 20.0, float(rec.E[0]),
                             h_star=10.0, h0=float(rec.H[0]))


def test_verify_certificate_passes_on_loop_run():
    rec = run(fast_config())
    chk = verify_certificate(rec, _fast_cert(rec))
    assert chk.passed
    assert chk.ok_decay and chk.ok_mismatch and chk.ok_energy
    assert 0.0 < chk.margin_decay <= 1.0
    assert 0.0 <= chk.margin_mismatch <= 1.0
    assert 0.0 < chk.margin_energy <= 1.0
    assert chk.slack == 1.05


def test_verify_certificate_zero_error_start():
    # observer initialized to the plant: E(0) = 0 and must stay at the floor
    rec = run(fast_config(zhat0="paper", zhat1="zero"))
    assert rec.E[0] == 0.0
    assert float(np.max(rec.E)) <= 1e-10 * float(rec.H[0])
    chk = verify_certificate(rec, _fast_cert(rec))
    assert chk.passed
    assert chk.floor == pytest.approx(1e-10 * float(rec.H[0]))


def test_verify_certificate_refuses_wrong_mode():
    rec = run(load_config("", {"n": "50", "T": "0.5", "sample_dt": "0.25"}))
    cert = decay_certificate(PhysicalParams(k=0.12, beta=0.02), 0.095, 20.0,
                             1.0, h_star=10.0, h0=1.0)
    with pytest.raises(ValueError, match="closed-loop"):
        verify_certificate(rec, cert)


def test_verify_certificate_refuses_mismatched_params():
    rec = run(fast_config())
    wrong = decay_certificate(PhysicalParams(k=0.13, beta=0.02), 0.1, 14.0,
                              float(rec.E[0]), h_star=10.0, h0=float(rec.H[0]))
    with pytest.raises(ValueError, match="mismatch"):
        verify_certificate(rec, wrong)


def _truncated(rec, n):
    import copy
    out = copy.copy(rec)
    out.t, out.H, out.H_hat = rec.t[:n], rec.H[:n], rec.H_hat[:n]
    out.E, out.u, out.y = rec.E[:n], rec.u[:n], rec.y[:n]
    return out


def test_verify_certificate_refuses_short_record():
    rec = run(fast_config())
    cert = _fast_cert(rec)
    with pytest.raises(ValueError, match="3 samples"):
        verify_certificate(_truncated(rec, 2), cert)


def test_verify_certificate_detects_violations_independently():
    # uniform scaling of E cancels against the E(0)-proportional bound, so
    # each mutation below changes the shape the relevant check looks at
    rec = run(fast_config())
    cert = _fast_cert(rec)

    spike = _truncated(rec, len(rec.t))
    spike.E = rec.E.copy()
    spike.E[-1] *= 100.0 * cert.m_const
    chk = verify_certificate(spike, cert)
    assert not chk.ok_decay and chk.margin_decay > 1.0
    assert chk.ok_mismatch and chk.ok_energy  # larger E only loosens (b)
    assert not chk.passed

    drifted = _truncated(rec, len(rec.t))
    drifted.H_hat = rec.H_hat + 4000.0  # exceeds c_corr*sqrt(E) ~ 3000
    chk = verify_certificate(drifted, cert)
    assert not chk.ok_mismatch and chk.margin_mismatch > 1.0
    assert chk.ok_decay and chk.ok_energy

    hot = _truncated(rec, len(rec.t))
    hot.H = rec.H + 1.2 * cert.h_max   # shift both: mismatch unchanged
    hot.H_hat = rec.H_hat + 1.2 * cert.h_max
    chk = verify_certificate(hot, cert)
    assert not chk.ok_energy and chk.margin_energy > 1.0
    assert chk.ok_decay and chk.ok_mismatch


# ------------------------------------------------------------------ sweeps

def test_band_times_synthetic():
    t = np.array([0.0, 1.0, 2.0, 3.0, 4.0])
    h = np.array([20.0, 10.2, 12.0, 10.1, 10.0])
    entry, settle = band_times(t, h, 10.0)
    assert entry == 1.0     # first sample inside the 5% band
    assert settle == 3.0    # in the band for good from t=3
    entry2, settle2 = band_times(t, np.full(5, 50.0), 10.0)
    assert math.isnan(entry2) and math.isnan(settle2)
    # ends outside: no settle time
    entry3, settle3 = band_times(t, np.array([10.0, 10.0, 99.0, 10.0, 99.0]),
                                 10.0)
    assert entry3 == 0.0 and math.isnan(settle3)
    # inside throughout
    entry4, settle4 = band_times(t, np.full(5, 10.0), 10.0)
    assert entry4 == 0.0 and settle4 == 0.0


def test_gamma_sweep_single_matches_direct_run():
    base = fast_config()
    rows = gamma_sweep(base, [1.0])
    assert len(rows) == 1
    row = rows[0]
    rec = run(base)
    assert row.gamma == 1.0
    assert row.error is None
    assert row.h_err_final == pytest.approx(abs(rec.H[-1] - 10.0), rel=1e-12)
    assert row.e_ratio == pytest.approx(rec.E[-1] / rec.E[0], rel=1e-12)


def test_gamma_sweep_preserves_order_and_records():
    base = fast_config()
    rows, records = gamma_sweep(base, [2.0, 0.5], keep_records=True)
    assert [r.gamma for r in rows] == [2.0, 0.5]
    assert set(records) == {2.0, 0.5}
    assert len(records[0.5].t) == 21
    assert records[2.0].gamma == 2.0


def test_gamma_sweep_validation():
    base = fast_config()
    with pytest.raises(ValueError):
        gamma_sweep(base, [])
    with pytest.raises(ValueError):
        gamma_sweep(base, [1.0, 0.0])
    with pytest.raises(ValueError):
        gamma_sweep(base, [-2.0])
    with pytest.raises(ValueError):
        gamma_sweep(base, [math.inf])


def test_gamma_sweep_captures_run_failures():
    base = fast_config(beta=0.1)  # inadmissible: every run is refused
    rows = gamma_sweep(base, [0.5, 1.0])
    assert all(r.error is not None for r in rows)
    assert all(math.isnan(r.h_err_final) for r in rows)
    assert "admissibility" in rows[0].error


def test_gamma_sweep_determinism():
    base = fast_config()
    r1 = gamma_sweep(base, [0.5, 1.0])
    r2 = gamma_sweep(base, [0.5, 1.0])
    for a, b in zip(r1, r2):
        assert a.h_err_final == b.h_err_final
        assert a.e_ratio == b.e_ratio
