import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from wmlab.transforms import (
    band_energy,
    dct8x8,
    fft2,
    haar_dwt2,
    haar_idwt2,
    idct8x8,
    ifft2,
    radial_bands,
    svd_block,
)


# ---------------------------------------------------------------------------
# FFT vs a naive O(N^2 M^2) DFT written from the definition


def _naive_dft2(x):
    h, w = x.shape
    out = np.zeros((h, w), dtype=np.complex128)
    for u in range(h):
        for v in range(w):
            acc = 0.0 + 0.0j
            for m in range(h):
                for n in range(w):
                    acc += x[m, n] * np.exp(-2j * np.pi * (u * m / h + v * n / w))
            out[u, v] = acc
    return out


@pytest.mark.parametrize("shape", [(4, 4), (5, 3), (16, 12)])
def test_fft2_matches_naive_dft(shape):
    rng = np.random.default_rng(hash(shape) % 2**32)
    x = rng.normal(size=shape)
    got = fft2(x)
    want = _naive_dft2(x)
    assert np.max(np.abs(got - want)) / np.linalg.norm(want) < 1e-9


def test_fft2_dc_bin_is_plain_sum():
    rng = np.random.default_rng(2)
    x = rng.normal(size=(6, 7))
    assert fft2(x)[0, 0] == pytest.approx(x.sum(), rel=1e-12)


@pytest.mark.parametrize("shape", [(8, 8), (16, 12), (5, 9)])
def test_ifft2_inverts_fft2(shape):
    rng = np.random.default_rng(3)
    x = rng.normal(size=shape)
    back = ifft2(fft2(x))
    assert np.max(np.abs(back - x)) < 1e-9
    assert np.max(np.abs(back.imag)) < 1e-9


def test_parseval():
    rng = np.random.default_rng(4)
    x = rng.normal(size=(16, 16))
    f = fft2(x)
    assert np.sum(np.abs(f) ** 2) / x.size == pytest.approx(np.sum(x * x), rel=1e-12)


def test_real_input_gives_conjugate_symmetric_spectrum():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(8, 10))
    f = fft2(x)
    h, w = x.shape
    for i in range(h):
        for j in range(w):
            assert f[i, j] == pytest.approx(np.conj(f[(-i) % h, (-j) % w]), abs=1e-9)


# ---------------------------------------------------------------------------
# radial bands


def _band_of_bin_reference(si, sj, r2max, k):
    """Smallest band b whose outer radius covers the bin (integer math)."""
    d2 = si * si + sj * sj
    for b in range(1, k + 1):
        if k * k * d2 <= b * b * r2max:
            return b
    raise AssertionError("bin outside all bands")


@pytest.mark.parametrize("shape,k", [((64, 64), 5), ((16, 12), 5), ((9, 9), 3)])
def test_band_assignment_matches_reference(shape, k):
    h, w = shape
    bm = radial_bands(h, w, k)
    freqs_h = [i if i <= (h - 1) // 2 else i - h for i in range(h)]
    freqs_w = [j if j <= (w - 1) // 2 else j - w for j in range(w)]
    r2max = max(si * si for si in freqs_h) + max(sj * sj for sj in freqs_w)
    for i in range(h):
        for j in range(w):
            want = _band_of_bin_reference(freqs_h[i], freqs_w[j], r2max, k)
            assert bm.bands[i, j] == want, (i, j)


def test_bands_partition_dc_and_corner():
    bm = radial_bands(64, 64, 5)
    assert bm.bands[0, 0] == 1  # DC
    assert bm.bands[32, 32] == 5  # maximum-radius bin (-32, -32)
    assert bm.bands.min() == 1 and bm.bands.max() == 5
    assert sum(bm.counts()) == 64 * 64
    assert all(c > 0 for c in bm.counts())


def test_band_boundary_bin_is_exact():
    # at 64x64 the outer radius of band 1 is sqrt(2048)/5 = 9.0509..; bin
    # (9, 0) with 25*81 = 2025 <= 2048 is still band 1, while (9, 1) with
    # 25*82 = 2050 > 2048 is the first band-2 bin on that arc
    bm = radial_bands(64, 64, 5)
    assert bm.bands[9, 0] == 1
    assert bm.bands[9, 1] == 2


def test_band_energy_sums_to_total_power():
    rng = np.random.default_rng(6)
    x = rng.normal(size=(16, 16))
    f = fft2(x)
    bm = radial_bands(16, 16, 5)
    prof = band_energy(f, bm)
    assert sum(prof.energies) == pytest.approx(np.sum(np.abs(f) ** 2), rel=1e-12)
    assert prof.k == 5


def test_band_energy_of_pure_tone_lands_in_its_band():
    h = w = 32
    x = np.cos(2 * np.pi * 2 * np.arange(w) / w)[None, :] * np.ones((h, 1))
    f = fft2(x)
    bm = radial_bands(h, w, 5)
    prof = band_energy(f, bm)
    # frequency (0, 2): d2=4, r2max=512 -> band 1
    assert prof.energies[0] == pytest.approx(np.sum(np.abs(f) ** 2), rel=1e-9)


def test_band_map_validation():
    with pytest.raises(ValueError):
        radial_bands(0, 4)
    with pytest.raises(ValueError):
        radial_bands(4, 4, 0)
    bm = radial_bands(8, 8, 5)
    with pytest.raises(ValueError):
        bm.mask(6)
    with pytest.raises(ValueError):
        band_energy(np.zeros((4, 4)), bm)


# ---------------------------------------------------------------------------
# 8x8 DCT against the direct cosine-sum definition


def _naive_dct8(block):
    out = np.zeros((8, 8))
    for u in range(8):
        for v in range(8):
            cu = np.sqrt(0.125) if u == 0 else np.sqrt(0.25)
            cv = np.sqrt(0.125) if v == 0 else np.sqrt(0.25)
            acc = 0.0
            for x in range(8):
                for y in range(8):
                    acc += (block[x, y]
                            * np.cos((2 * x + 1) * u * np.pi / 16)
                            * np.cos((2 * y + 1) * v * np.pi / 16))
            out[u, v] = cu * cv * acc
    return out


def test_dct8x8_matches_definition():
    rng = np.random.default_rng(7)
    block = rng.normal(size=(8, 8)) * 50
    assert np.max(np.abs(dct8x8(block) - _naive_dct8(block))) < 1e-9


def test_dct8x8_constant_block_is_pure_dc():
    coeffs = dct8x8(np.full((8, 8), 12.0))
    assert coeffs[0, 0] == pytest.approx(8 * 12.0, rel=1e-12)
    coeffs[0, 0] = 0.0
    assert np.max(np.abs(coeffs)) < 1e-12


def test_dct_round_trip_and_energy():
    rng = np.random.default_rng(8)
    block = rng.normal(size=(8, 8)) * 100
    coeffs = dct8x8(block)
    assert np.max(np.abs(idct8x8(coeffs) - block)) < 1e-9
    assert np.sum(coeffs**2) == pytest.approx(np.sum(block**2), rel=1e-12)
    with pytest.raises(ValueError):
        dct8x8(np.zeros((4, 4)))


# ---------------------------------------------------------------------------
# Haar


def test_haar_hand_example():
    plane = np.array([[1.0, 2.0],
                      [3.0, 4.0]])
    ll, lh, hl, hh = haar_dwt2(plane)
    assert ll[0, 0] == pytest.approx(5.0)   # (1+2+3+4)/2
    assert lh[0, 0] == pytest.approx(-1.0)  # (1-2+3-4)/2
    assert hl[0, 0] == pytest.approx(-2.0)  # (1+2-3-4)/2
    assert hh[0, 0] == pytest.approx(0.0)


def test_haar_constant_patch_rule():
    plane = np.full((6, 4), 7.0)
    ll, lh, hl, hh = haar_dwt2(plane)
    assert np.allclose(ll, 14.0)
    for det in (lh, hl, hh):
        assert np.max(np.abs(det)) == 0.0


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**16))
def test_haar_round_trip_and_energy(seed):
    rng = np.random.default_rng(seed)
    plane = rng.normal(size=(8, 12)) * 30
    subbands = haar_dwt2(plane)
    back = haar_idwt2(*subbands)
    assert np.max(np.abs(back - plane)) < 1e-10
    assert sum(np.sum(s * s) for s in subbands) == pytest.approx(
        np.sum(plane * plane), rel=1e-12)


def test_haar_rejects_odd_dims():
    with pytest.raises(ValueError):
        haar_dwt2(np.zeros((5, 4)))


# ---------------------------------------------------------------------------
# SVD against a one-sided Jacobi oracle


def _jacobi_singular_values(a, sweeps=60):
    """One-sided Jacobi: rotate column pairs until orthogonal."""
    a = a.astype(np.float64).copy()
    n = a.shape[1]
    for _ in range(sweeps):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[:, p] @ a[:, q]
                app = a[:, p] @ a[:, p]
                aqq = a[:, q] @ a[:, q]
                off = max(off, abs(apq))
                if abs(apq) < 1e-15:
                    continue
                tau = (aqq - app) / (2 * apq)
                t = np.sign(tau) / (abs(tau) + np.sqrt(1 + tau * tau))
                c = 1 / np.sqrt(1 + t * t)
                s = c * t
                ap = a[:, p].copy()
                a[:, p] = c * ap - s * a[:, q]
                a[:, q] = s * ap + c * a[:, q]
        if off < 1e-14:
            break
    return np.sort(np.linalg.norm(a, axis=0))[::-1]


def test_svd_block_matches_jacobi_oracle():
    rng = np.random.default_rng(9)
    for _ in range(20):
        block = rng.normal(size=(4, 4)) * 10
        _, s, _ = svd_block(block)
        want = _jacobi_singular_values(block)
        assert np.max(np.abs(s - want)) < 1e-9


def test_svd_block_reconstructs_and_orders():
    rng = np.random.default_rng(10)
    block = rng.normal(size=(4, 4)) * 25
    u, s, v = svd_block(block)
    assert np.max(np.abs(u @ np.diag(s) @ v.T - block)) < 1e-10
    assert np.all(s[:-1] >= s[1:]) and np.all(s >= 0)
    assert np.allclose(u.T @ u, np.eye(4), atol=1e-12)
    assert np.allclose(v.T @ v, np.eye(4), atol=1e-12)
    with pytest.raises(ValueError):
        svd_block(np.zeros(4))
