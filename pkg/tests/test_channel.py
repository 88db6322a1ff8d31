"""Channel model unit and property tests."""

import json
import math

import numpy as np
import numpy.testing as npt
import pytest

from shortpacket import channel as ch

# frozen from tests/oracle_sto_filter.py (sympy, 20 digits)
G_HALF_B03 = 0.40073382387116005
G_MINUS_HALF_B03 = -0.40073382387116005
G_2P25_B03 = 0.011048625845892767
G_EDGE_B02 = 0.1
G_M6P875_B03 = 0.00038730637545381835


def test_snr_to_noise_var():
    assert ch.snr_to_noise_var(0.0) == pytest.approx(1.0)
    assert ch.snr_to_noise_var(10.0) == pytest.approx(0.1)
    assert ch.snr_to_noise_var(-3.0) == pytest.approx(10 ** 0.3)


def test_filter_zero_offset_is_pure_delay():
    taps = ch.sto_filter_taps(0.0)
    assert taps.shape == (16,)
    assert taps[8] == 1.0
    npt.assert_allclose(np.delete(taps, 8), 0.0, atol=1e-15)
    # symmetric about the main tap
    for j in range(1, 8):
        assert taps[8 - j] == pytest.approx(taps[8 + j], abs=1e-15)


def test_filter_spot_values():
    taps = ch.sto_filter_taps(0.5, beta=0.3)
    assert taps[8] == pytest.approx(G_HALF_B03, abs=1e-12)
    assert taps[7] == pytest.approx(G_MINUS_HALF_B03, abs=1e-12)
    taps = ch.sto_filter_taps(0.25, beta=0.3)
    assert taps[10] == pytest.approx(G_2P25_B03, abs=1e-12)
    taps = ch.sto_filter_taps(0.125, beta=0.3)
    assert taps[1] == pytest.approx(G_M6P875_B03, abs=1e-12)


def test_filter_edge_branch():
    # t = 2.5 equals T/(2 beta) for beta = 0.2 and must take the dedicated
    # branch, whose value differs from the surrounding expression
    taps = ch.sto_filter_taps(0.5, beta=0.2)
    assert taps[10] == pytest.approx(G_EDGE_B02, abs=1e-12)
    mid = math.cos(0.2 * 2.5) / (math.pi * 2.5) * math.sin(math.pi * 2.5) / (math.pi * 2.5)
    assert abs(taps[10] - mid) > 0.05


def test_filter_validation():
    for beta in (0.0, -0.1, 1.5):
        with pytest.raises(ValueError):
            ch.sto_filter_taps(0.0, beta=beta)
    for tau in (-0.01, 1.0, 2.0):
        with pytest.raises(ValueError):
            ch.sto_filter_taps(tau)


def test_realization_distributions():
    n = 64
    taps = np.empty((4000, 5))
    offs = np.empty(4000, dtype=int)
    stos = np.empty(4000)
    for i in range(4000):
        r = ch.draw_realization(n, 0.1, seed=90000 + i)
        taps[i] = r.taps
        offs[i] = r.tau_off
        stos[i] = r.tau_sto
    # per-tap std matches the fixed weighting within MC tolerance
    npt.assert_allclose(taps.std(axis=0), ch.TAP_WEIGHTS, rtol=0.08)
    npt.assert_allclose(taps.mean(axis=0), 0.0, atol=0.05)
    assert offs.min() == 0 and offs.max() == n - ch.CHANNEL_MEMORY - 1
    assert np.all((0 <= offs) & (offs < n - ch.CHANNEL_MEMORY))
    assert np.all((0.0 <= stos) & (stos < 1.0))
    # offsets roughly uniform over the 59 candidates
    counts = np.bincount(offs, minlength=n - ch.CHANNEL_MEMORY)
    assert counts.min() > 0.4 * counts.mean()


def test_identity_channel_is_one_symbol_delay():
    n = 64
    rng = np.random.default_rng(7)
    x = np.exp(2j * np.pi * rng.random(n))
    real = ch.ChannelRealization(taps=np.array([1.0, 0, 0, 0, 0]),
                                 tau_off=13, tau_sto=0.0, sigma2=0.0, seed=1)
    win = ch.propagate(x, real)
    assert win.samples.shape == (2 * n,)
    npt.assert_allclose(win.samples[14:14 + n], x, atol=1e-12)
    rest = np.concatenate([win.samples[:14], win.samples[14 + n:]])
    npt.assert_allclose(rest, 0.0, atol=1e-12)
    assert win.truth.has_message and win.truth.tau_off == 13


@pytest.mark.parametrize("n", [40, 48, 56, 64, 96])
def test_window_length_exactly_2n(n):
    real = ch.draw_realization(n, 0.5, seed=3)
    x = np.ones(n, dtype=complex)
    assert ch.propagate(x, real).samples.shape == (2 * n,)


def test_propagate_matches_direct_sum():
    # independent reference: y[i] = sum_m x[m] * hg[7 + i - tau_off - m]
    n = 40
    rng = np.random.default_rng(21)
    x = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) / np.sqrt(2)
    real = ch.ChannelRealization(taps=ch.TAP_WEIGHTS * rng.standard_normal(5),
                                 tau_off=11, tau_sto=0.37, sigma2=0.0, seed=5)
    win = ch.propagate(x, real)
    g = ch.sto_filter_taps(real.tau_sto)
    hg = np.zeros(20)
    for a in range(5):
        for b in range(16):
            hg[a + b] += real.taps[a] * g[b]
    ref = np.zeros(2 * n, dtype=complex)
    for i in range(2 * n):
        for m in range(n):
            k = 7 + i - real.tau_off - m
            if 0 <= k < 20:
                ref[i] += x[m] * hg[k]
    npt.assert_allclose(win.samples, ref, atol=1e-12)


def test_noise_statistics():
    n = 64
    sigma2 = 0.4
    acc = []
    for s in range(200):
        win = ch.none_window(n, sigma2, seed=1000 + s)
        acc.append(win.samples)
    z = np.concatenate(acc)
    assert not z.real.var() == 0
    assert z.real.var() == pytest.approx(sigma2 / 2, rel=0.05)
    assert z.imag.var() == pytest.approx(sigma2 / 2, rel=0.05)
    assert abs(np.mean(z)) < 0.01
    assert ch.none_window(n, sigma2, seed=5).truth.has_message is False


def test_windows_reproducible_bit_for_bit():
    n = 64
    real = ch.draw_realization(n, 0.2, seed=42)
    x = np.ones(n, dtype=complex) / np.sqrt(2) * (1 + 1j)
    a = ch.propagate(x, real).samples
    b = ch.propagate(x, real).samples
    assert np.array_equal(a, b)
    real2 = ch.draw_realization(n, 0.2, seed=43)
    c = ch.propagate(x, real2).samples
    assert not np.array_equal(a, c)


def test_effective_taps_zero_offset():
    real = ch.ChannelRealization(taps=np.array([0.3, -0.1, 0.7, 0.2, -0.4]),
                                 tau_off=0, tau_sto=0.0, sigma2=0.0, seed=0)
    e = ch.effective_taps(real)
    assert e.shape == (6,)
    npt.assert_allclose(e, [0.0, 0.3, -0.1, 0.7, 0.2, -0.4], atol=1e-14)


def test_effective_taps_predict_propagation():
    # the 6-tap window must reproduce the noiseless observation of the frame
    # up to the tiny out-of-window leakage
    n = 64
    rng = np.random.default_rng(11)
    x = (1 - 2 * rng.integers(0, 2, n) + 1j * (1 - 2 * rng.integers(0, 2, n))) / np.sqrt(2)
    real = ch.ChannelRealization(taps=ch.TAP_WEIGHTS * rng.standard_normal(5),
                                 tau_off=9, tau_sto=0.41, sigma2=0.0, seed=2)
    win = ch.propagate(x, real)
    e = ch.effective_taps(real)
    pred = np.convolve(x, e)[:n]
    obs = win.samples[real.tau_off:real.tau_off + n]
    err = np.abs(pred - obs) ** 2
    assert err.mean() < 5e-3 * np.abs(obs).mean() ** 2


def test_propagate_validation():
    n = 64
    x = np.ones(n, dtype=complex)
    bad = ch.ChannelRealization(taps=np.ones(5), tau_off=n - ch.CHANNEL_MEMORY,
                                tau_sto=0.0, sigma2=0.0, seed=0)
    with pytest.raises(ValueError):
        ch.propagate(x, bad)
    with pytest.raises(ValueError):
        ch.propagate(np.ones((2, n)), ch.draw_realization(n, 0.1, 1))
    with pytest.raises(ValueError):
        ch.draw_realization(ch.CHANNEL_MEMORY, 0.1, 1)
    with pytest.raises(ValueError):
        ch.draw_realization(64, -1.0, 1)


def test_golden_roundtrip(tmp_path):
    path = tmp_path / "golden.jsonl"
    ch.export_golden(path, count=10, n=64, sigma2=0.25, seed=777)
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln]
    assert len(lines) == 10
    for ln in lines:
        rec = json.loads(ln)
        assert set(rec) == {"seed", "taps", "tau_off", "tau_sto", "sigma2", "x", "y"}
        assert len(rec["taps"]) == 5
        assert len(rec["x"]) == 64 and len(rec["y"]) == 128
    recs = list(ch.load_golden(path))
    assert len(recs) == 10
    seen = set()
    for rec in recs:
        replayed = ch.replay_golden(rec)
        assert np.max(np.abs(replayed - rec["y"])) < 1e-9
        seen.add(rec["seed"])
    assert len(seen) == 10


def test_batch_twin_matches_scalar():
    n = 64
    B = 8
    sigma2 = 0.3
    rng = np.random.default_rng(99)
    X = (rng.standard_normal((B, n)) + 1j * rng.standard_normal((B, n))) / np.sqrt(2)
    reals = [ch.draw_realization(n, sigma2, seed=500 + i) for i in range(B)]
    noise_unit = np.empty((B, 2 * n), dtype=complex)
    for i, r in enumerate(reals):
        w = np.random.default_rng(np.random.SeedSequence([r.seed, 1])).standard_normal((2, 2 * n))
        noise_unit[i] = w[0] + 1j * w[1]
    got = ch._propagate_batch(
        X,
        np.stack([r.taps for r in reals]),
        np.array([r.tau_off for r in reals]),
        np.array([r.tau_sto for r in reals]),
        noise_unit,
        sigma2,
    )
    for i, r in enumerate(reals):
        ref = ch.propagate(X[i], r).samples
        npt.assert_allclose(got[i], ref, atol=1e-12)
