import numpy as np
import pytest

from ddfsim.lattice import (
    CosetCodebook,
    QamCodebook,
    build_rotation,
    complex_to_real_matrix,
    complex_to_real_vector,
    digits_of,
    index_of,
    mod_lattice,
    real_to_complex_vector,
)


@pytest.mark.parametrize("n", [1, 2, 4, 8])
def test_rotation_unitary(n):
    G = build_rotation(n)
    assert np.allclose(G @ G.conj().T, np.eye(n), atol=1e-12)


@pytest.mark.parametrize("n", [2, 4])
def test_rotation_full_diversity(n):
    """No coordinate of G d vanishes for any nonzero QAM difference d,
    so every pair of rotated codewords differs in every symbol."""
    G = build_rotation(n)
    diffs = np.array([-2, 0, 2])
    grids = np.meshgrid(*([diffs] * (2 * n)), indexing="ij")
    d = np.stack([g.ravel() for g in grids], axis=1).astype(float)
    d = d[np.any(d != 0, axis=1)]
    dc = d[:, 0::2] + 1j * d[:, 1::2]
    vals = dc @ G.T
    assert np.min(np.abs(vals)) > 1e-9


def test_real_expansion_is_homomorphism():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    x = rng.standard_normal(3) + 1j * rng.standard_normal(3)
    lhs = complex_to_real_matrix(A) @ complex_to_real_vector(x)
    assert np.allclose(lhs, complex_to_real_vector(A @ x))
    assert np.allclose(real_to_complex_vector(complex_to_real_vector(x)), x)
    # unitary complex -> orthogonal real
    G = build_rotation(4)
    Gr = complex_to_real_matrix(G)
    assert np.allclose(Gr @ Gr.T, np.eye(8), atol=1e-12)


def test_digit_round_trip():
    for idx in (0, 1, 37, 255):
        d = digits_of(idx, 4, 4)
        assert index_of(d, 4) == idx
    with pytest.raises(ValueError):
        digits_of(256, 4, 4)


def test_mod_lattice_voronoi_property():
    rng = np.random.default_rng(1)
    gen = rng.standard_normal((4, 4))
    for _ in range(50):
        y = 5.0 * rng.standard_normal(4)
        w = mod_lattice(y, gen)
        # difference is a lattice point
        z = np.linalg.solve(gen, y - w)
        assert np.allclose(z, np.round(z), atol=1e-8)
        # no lattice shift shortens it (local check over small shifts)
        for dz in np.ndindex(3, 3, 3, 3):
            shift = gen @ (np.array(dz) - 1)
            assert np.dot(w, w) <= np.dot(w + shift, w + shift) + 1e-9


def test_qam_codebook_counts_rate_energy():
    cb = QamCodebook(Q=2, n=4, energy=5.0)
    assert cb.num_messages == 256
    assert cb.rate_bpcu == pytest.approx(2.0)
    pts = cb.points
    assert pts.shape == (256, 4)
    # unitary rotation keeps every codeword at exactly n E total energy for
    # Q = 2 (all info digits have squared magnitude Q^2-1 = 3... per pair)
    per_symbol = np.mean(np.abs(pts) ** 2, axis=1)
    assert np.allclose(per_symbol, 5.0, atol=1e-9)
    # encode agrees with the enumerated table
    for w in (0, 17, 255):
        assert np.allclose(cb.encode(w), pts[w])


def test_qam_codebook_energy_average_q4():
    cb = QamCodebook(Q=4, n=2, energy=2.0)
    pts = cb.points
    assert pts.shape == (256, 2)
    avg = np.mean(np.abs(pts) ** 2)
    assert avg == pytest.approx(2.0, rel=1e-9)


def test_qam_info_vector_layout():
    cb = QamCodebook(Q=2, n=2, energy=1.0)
    b = cb.info_vector(0)
    assert np.allclose(b, np.array([-1 - 1j, -1 - 1j]))
    b = cb.info_vector(1)  # least significant digit flips Re of symbol 0
    assert np.allclose(b, np.array([1 - 1j, -1 - 1j]))


def test_coset_membership_identity():
    """encode(w, u) + u lands in the coset of the message digits: solving
    back through the codeword lattice basis gives digits(w) mod Q."""
    cb = CosetCodebook(Q=2, n=3, energy=4.0)
    rng = np.random.default_rng(2)
    for w in (0, 9, 63):
        u = cb.draw_dither(rng)
        x = cb.encode(w, u)
        z = np.linalg.solve(cb.real_generator, complex_to_real_vector(x) + u)
        zi = np.round(z)
        assert np.allclose(z, zi, atol=1e-8)
        assert np.array_equal(np.mod(zi, cb.Q).astype(int), cb.digits(w))
        assert cb.message_of_digits(zi.astype(int)) == w


def test_coset_energy_matches_target():
    """Dithered transmit points are uniform over the shaping Voronoi region,
    so the mean per-symbol energy equals the configured value."""
    cb = CosetCodebook(Q=2, n=2, energy=3.0)
    rng = np.random.default_rng(3)
    acc = 0.0
    trials = 3000
    for _ in range(trials):
        w = int(rng.integers(cb.num_messages))
        u = cb.draw_dither(rng)
        x = cb.encode(w, u)
        acc += np.mean(np.abs(x) ** 2)
    assert acc / trials == pytest.approx(3.0, rel=0.05)


def test_coset_dither_in_voronoi_and_deterministic():
    cb = CosetCodebook(Q=2, n=2, energy=1.0)
    u1 = cb.draw_dither(np.random.default_rng(7))
    u2 = cb.draw_dither(np.random.default_rng(7))
    assert np.array_equal(u1, u2)
    # Voronoi membership: no shaping-lattice shift is shorter
    S = cb.shaping_generator
    for dz in np.ndindex(3, 3, 3, 3):
        shift = S @ (np.array(dz) - 1)
        assert np.dot(u1, u1) <= np.dot(u1 + shift, u1 + shift) + 1e-9


def test_coset_partition_distinct_messages():
    """Distinct messages land in distinct cosets: their representatives
    never differ by a shaping-lattice point."""
    cb = CosetCodebook(Q=2, n=1, energy=1.0)
    reps = [cb.coset_representative(w) for w in range(cb.num_messages)]
    S = cb.shaping_generator
    for i in range(len(reps)):
        for j in range(i + 1, len(reps)):
            z = np.linalg.solve(S, reps[i] - reps[j])
            assert not np.allclose(z, np.round(z), atol=1e-8)
