import numpy as np
import pytest

from ddfsim.channel import (
    SystemParams,
    alamouti_combine,
    alamouti_relay_signal,
    combined_gain_vector,
    destination_receive,
    draw_channel,
    relay_receive,
)


def test_params_linear_snr_and_offset():
    p = SystemParams(M=4, T=8, R=2.0, rho_db=10.0)
    assert p.rho == pytest.approx(10.0)
    # default relay advantage is 3 dB
    assert p.rho_prime == pytest.approx(10.0 * 10 ** 0.3)
    assert p.energy == pytest.approx(p.rho)
    assert p.sigma_w2 == 1.0
    assert p.block_len == 32
    assert p.bits_per_block == pytest.approx(64.0)


def test_params_relay_noise_variance_constant_in_snr():
    lo = SystemParams(M=2, T=1, R=1.0, rho_db=0.0)
    hi = SystemParams(M=2, T=1, R=1.0, rho_db=30.0)
    assert lo.sigma_v2 == pytest.approx(hi.sigma_v2)
    assert lo.sigma_v2 == pytest.approx(10 ** -0.3)
    off = SystemParams(M=2, T=1, R=1.0, rho_db=0.0, rho_prime_offset_db=0.0)
    assert off.sigma_v2 == pytest.approx(1.0)
    # the relay-side SNR equals rho' in both conventions
    assert hi.rho_prime * 1.0 == pytest.approx(hi.rho / hi.sigma_v2)


def test_params_validation():
    with pytest.raises(ValueError):
        SystemParams(M=0, T=1, R=1.0, rho_db=0.0)
    with pytest.raises(ValueError):
        SystemParams(M=1, T=0, R=1.0, rho_db=0.0)
    with pytest.raises(ValueError):
        SystemParams(M=1, T=1, R=0.0, rho_db=0.0)


def test_draw_channel_unit_variance():
    p = SystemParams(M=2, T=1, R=1.0, rho_db=0.0)
    rng = np.random.default_rng(1)
    draws = np.array(
        [[c.h, c.g1, c.g2] for c in (draw_channel(p, rng) for _ in range(20000))]
    )
    pw = np.mean(np.abs(draws) ** 2, axis=0)
    assert np.allclose(pw, 1.0, atol=0.05)
    assert np.all(np.abs(np.mean(draws, axis=0)) < 0.02)


def test_relay_receive_prefix_and_noise_level():
    p = SystemParams(M=4, T=2, R=1.0, rho_db=10.0)
    rng = np.random.default_rng(2)
    ch = draw_channel(p, rng)
    x = np.ones(p.block_len, np.complex128)
    resid = []
    for _ in range(2000):
        y = relay_receive(x, 3, p.T, ch, rng)
        assert y.shape == (6,)
        resid.append(y - ch.h * x[:6])
    var = np.mean(np.abs(np.concatenate(resid)) ** 2)
    assert var == pytest.approx(p.sigma_v2, rel=0.05)
    with pytest.raises(ValueError):
        relay_receive(x, 5, p.T, ch, rng)


def test_alamouti_relay_signal_structure():
    x = np.arange(1, 7) + 1j * np.arange(6)
    out = alamouti_relay_signal(x, 1, 2)  # listen 2 symbols, 4 remain
    assert np.all(out[:2] == 0)
    assert out[2] == np.conj(x[3])
    assert out[3] == -np.conj(x[2])
    assert out[4] == np.conj(x[5])
    assert out[5] == -np.conj(x[4])
    # odd phase-2 length leaves the trailing symbol silent
    out = alamouti_relay_signal(x[:5], 1, 2)
    assert np.all(out[:2] == 0) and out[4] == 0
    # m = M: relay never transmits
    out = alamouti_relay_signal(x, 3, 2)
    assert np.all(out == 0)


def test_destination_receive_rejects_nonsilent_prefix():
    p = SystemParams(M=2, T=2, R=1.0, rho_db=0.0)
    rng = np.random.default_rng(3)
    ch = draw_channel(p, rng)
    x = np.ones(4, np.complex128)
    bad = np.ones(4, np.complex128)
    with pytest.raises(ValueError):
        destination_receive(x, bad, 1, 2, ch, rng)


def test_alamouti_combine_is_equivalent_single_input_model():
    """Combined pairs must equal gamma * x plus noise of unchanged variance,
    with phase-1 symbols untouched."""
    p = SystemParams(M=2, T=2, R=1.0, rho_db=10.0)
    rng = np.random.default_rng(4)
    resid = []
    for _ in range(4000):
        ch = draw_channel(p, rng)
        x = (rng.standard_normal(4) + 1j * rng.standard_normal(4)) / np.sqrt(2)
        x_r = alamouti_relay_signal(x, 1, 2)
        w = (rng.standard_normal(4) + 1j * rng.standard_normal(4)) / np.sqrt(2)
        y = ch.g1 * x + ch.g2 * x_r + w
        yc = alamouti_combine(y, 1, 2, ch)
        gains = combined_gain_vector(1, ch, p)
        # noiseless check on the pass-through prefix
        assert yc[0] == y[0] and yc[1] == y[1]
        resid.append(yc - gains * x)
    resid = np.concatenate(resid)
    assert np.mean(np.abs(resid) ** 2) == pytest.approx(1.0, rel=0.05)
    # pseudo-covariance of the combined noise stays zero (circularity)
    assert abs(np.mean(resid**2)) < 0.05


def test_alamouti_combine_noiseless_exact():
    p = SystemParams(M=2, T=1, R=2.0, rho_db=0.0)
    rng = np.random.default_rng(5)
    ch = draw_channel(p, rng)
    x = np.array([1 + 2j, -3 + 0.5j])
    x_r = alamouti_relay_signal(x, 1, 1)
    y = ch.g1 * x + ch.g2 * x_r
    yc = alamouti_combine(y, 1, 1, ch)
    # single phase-2 symbol: no pair fits, x_r stays zero and y passes through
    assert np.all(x_r == 0)
    assert np.allclose(yc, y)


def test_combined_gain_vector_layout():
    p = SystemParams(M=3, T=1, R=1.0, rho_db=0.0)
    rng = np.random.default_rng(6)
    ch = draw_channel(p, rng)
    g = combined_gain_vector(1, ch, p)
    gamma = np.sqrt(abs(ch.g1) ** 2 + abs(ch.g2) ** 2)
    assert g[0] == ch.g1
    assert g[1] == pytest.approx(gamma) and g[2] == pytest.approx(gamma)
    g = combined_gain_vector(2, ch, p)  # one phase-2 symbol, unpaired
    assert g[1] == ch.g1 and g[2] == ch.g1
    g = combined_gain_vector(3, ch, p)
    assert np.all(g == ch.g1)
