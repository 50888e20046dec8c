import numpy as np
import pytest

from oracles import brute_force_closest, brute_force_list

from ddfsim.lattice import CosetCodebook, QamCodebook, complex_to_real_matrix
from ddfsim.lattice_decoder import (
    decode_coset,
    decode_qam,
    decode_qam_candidates,
    mmse_gdfe_filters,
    scalar_gain_matrix,
    sphere_candidates,
    sphere_closest,
)


def test_gdfe_filter_identities():
    rng = np.random.default_rng(0)
    for snr in (1.0, 10.0, 1e4):
        H = rng.standard_normal((6, 4))
        f = mmse_gdfe_filters(H, snr)
        B = f.B
        assert np.allclose(B.T @ B, H.T @ H + np.eye(4) / snr, atol=1e-10)
        assert np.all(np.diag(B) > 0)
        assert np.allclose(np.tril(B, -1), 0)
        # F = B^-T H^T, equivalently B^T F = H^T
        assert np.allclose(B.T @ f.F, H.T, atol=1e-10)
        # the exact feedforward identity F H = B - B^-T / snr
        assert np.allclose(
            f.F @ H, B - np.linalg.inv(B.T) / snr, atol=1e-9
        )


def test_gdfe_handles_rank_deficient_model():
    # fewer observations than unknowns: the ridge term keeps B invertible
    rng = np.random.default_rng(1)
    H = rng.standard_normal((2, 6))
    f = mmse_gdfe_filters(H, 100.0)
    assert f.B.shape == (6, 6)
    assert np.all(np.diag(f.B) > 0)


def test_scalar_gain_matrix_structure():
    gains = np.array([1 + 2j, -0.5j])
    Hr = scalar_gain_matrix(gains, n_symbols=3)
    assert Hr.shape == (4, 6)
    expect = complex_to_real_matrix(np.array([[1 + 2j, 0, 0], [0, -0.5j, 0]]))
    assert np.allclose(Hr, expect)


def test_sphere_closest_matches_brute_force_boxed():
    rng = np.random.default_rng(2)
    for trial in range(300):
        n = int(rng.integers(2, 7))
        A = rng.standard_normal((n, n))
        y = 3.0 * rng.standard_normal(n)
        res = sphere_closest(A, y, lo=0, hi=3)
        zb, db = brute_force_closest(A, y, 0, 3)
        assert res.complete
        assert res.dist == pytest.approx(db, abs=1e-9)
        assert np.array_equal(res.z, zb)


def test_sphere_candidates_match_brute_force_list():
    rng = np.random.default_rng(3)
    for trial in range(100):
        n = int(rng.integers(2, 5))
        k = int(rng.integers(2, 9))
        A = rng.standard_normal((n, n))
        y = 2.0 * rng.standard_normal(n)
        res = sphere_candidates(A, y, k, lo=0, hi=2)
        zb, db = brute_force_list(A, y, 0, 2, k)
        assert res.complete
        assert res.dists.shape[0] == min(k, 3**n)
        assert np.allclose(np.sort(res.dists), db[: len(res.dists)], atol=1e-9)
        # the best candidate agrees exactly
        i = int(np.argmin(res.dists))
        assert np.array_equal(res.Z[i], zb[0])


def test_sphere_closest_unbounded_well_conditioned():
    """Unbounded search against a wide boxed brute force on near-orthogonal
    bases, where the optimum provably lies inside the box."""
    rng = np.random.default_rng(4)
    for _ in range(50):
        n = 3
        Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
        A = Q @ np.diag(rng.uniform(0.8, 1.2, n))
        z0 = rng.integers(-2, 3, n)
        y = A @ z0 + 0.1 * rng.standard_normal(n)
        res = sphere_closest(A, y)
        zb, db = brute_force_closest(A, y, -4, 4)
        assert res.complete
        assert res.dist == pytest.approx(db, abs=1e-9)
        assert np.array_equal(res.z, zb)


def test_decode_qam_noiseless_round_trip():
    rng = np.random.default_rng(5)
    for snr in (10.0, 1e4):
        cb = QamCodebook(Q=2, n=2, energy=snr)
        for w in range(cb.num_messages):
            gains = (rng.standard_normal(2) + 1j * rng.standard_normal(2)) / np.sqrt(2)
            y = gains * cb.encode(w)
            res = decode_qam(y, gains, cb, snr)
            assert res.complete and res.message == w


def test_decode_qam_candidates_contains_truth_first():
    rng = np.random.default_rng(6)
    cb = QamCodebook(Q=2, n=2, energy=50.0)
    for w in (0, 7, 15):
        gains = (rng.standard_normal(2) + 1j * rng.standard_normal(2)) / np.sqrt(2)
        y = gains * cb.encode(w)
        res = decode_qam_candidates(y, gains, cb, 50.0, nwant=5)
        assert res.complete
        best = res.messages[int(np.argmin(res.dists))]
        assert best == w


def test_decode_coset_noiseless_round_trip():
    # Ridge term ||x||^2/snr biases the metric; the exact round trip is
    # only guaranteed once that bias is small next to codeword separation.
    rng = np.random.default_rng(7)
    for snr in (1e3, 1e6):
        cb = CosetCodebook(Q=2, n=2, energy=snr)
        for w in range(cb.num_messages):
            u = cb.draw_dither(rng)
            gains = (rng.standard_normal(2) + 1j * rng.standard_normal(2)) / np.sqrt(2)
            y = gains * cb.encode(w, u)
            res = decode_coset(y, gains, cb, snr, u)
            assert res.complete and res.message == w


def test_decode_coset_candidate_list_covers_winner():
    rng = np.random.default_rng(8)
    cb = CosetCodebook(Q=2, n=2, energy=20.0)
    u = cb.draw_dither(rng)
    gains = (rng.standard_normal(2) + 1j * rng.standard_normal(2)) / np.sqrt(2)
    y = gains * cb.encode(3, u) + 0.05 * (
        rng.standard_normal(2) + 1j * rng.standard_normal(2)
    )
    res = decode_coset(y, gains, cb, 20.0, u, nwant=8)
    assert res.complete
    assert len(res.cand_messages) == 8
    assert np.all(np.diff(np.sort(res.cand_dists)) >= -1e-12)
    assert res.message == res.cand_messages[int(np.argmin(res.cand_dists))]
    assert res.dist == pytest.approx(float(np.min(res.cand_dists)), abs=1e-12)


def test_decode_coset_underdetermined_prefix():
    """One observed symbol of a two-symbol codeword: the ridge-regularized
    search must stay bounded and complete; recovery is usually but not
    always possible (undetected errors are the price of prefix decoding)."""
    rng = np.random.default_rng(0)
    snr = 100.0
    cb = CosetCodebook(Q=2, n=2, energy=snr)
    good = 0
    for w in range(cb.num_messages):
        u = cb.draw_dither(rng)
        h = (rng.standard_normal() + 1j * rng.standard_normal()) / np.sqrt(2)
        y = h * cb.encode(w, u)[:1]
        res = decode_coset(y, np.array([h]), cb, snr, u)
        assert res.complete
        assert 0 <= res.message < cb.num_messages
        good += res.message == w
    assert good >= 14
