import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import dft_2d_codebook, quantized_osc_patterns
from oschybrid.channel import ArrayGeometry
from oschybrid.codebook import (Codebook, QuantizerSpec, build_osc, correlation,
                                generic_array_vector, load_codebook, quantize_phases,
                                save_codebook)


def _as_row_set(rows, decimals=12):
    return {tuple(np.round(np.concatenate([r.real, r.imag]), decimals) + 0.0) for r in rows}


@pytest.mark.parametrize("ny,nz", [(1, 4), (2, 2), (4, 4), (8, 8), (2, 8)])
def test_rho1_unquantized_equals_2d_dft(ny, nz):
    cb = build_osc(ArrayGeometry(ny, nz), 1)
    ref = dft_2d_codebook(ny, nz)
    assert len(cb) == ny * nz
    # entry-for-entry in the same enumeration order
    np.testing.assert_allclose(cb.vectors, ref, atol=1e-12)
    G = cb.vectors.conj() @ cb.vectors.T
    np.testing.assert_allclose(G, np.eye(ny * nz), atol=1e-12)


def test_ula_rho2_one_bit_has_five_entries():
    cb = build_osc(ArrayGeometry(1, 4), 2, QuantizerSpec(1))
    assert len(cb) == 5
    assert len(cb) == len(quantized_osc_patterns(1, 4, 2, 1))


@pytest.mark.parametrize("ny,nz,rho,bits", [
    (2, 2, 2, 1), (4, 4, 2, 2), (4, 4, 8, 2), (8, 8, 2, 3), (1, 8, 4, 2), (4, 2, 3, 3),
])
def test_quantized_osc_matches_exact_enumeration(ny, nz, rho, bits):
    q = QuantizerSpec(bits)
    cb = build_osc(ArrayGeometry(ny, nz), rho, q)
    patterns = quantized_osc_patterns(ny, nz, rho, bits)
    assert len(cb) == len(patterns)
    expected = np.exp(2j * np.pi * np.array(patterns) / q.levels) / np.sqrt(ny * nz)
    np.testing.assert_allclose(cb.vectors, expected, atol=1e-15)


@pytest.mark.parametrize("ny,nz,rho,bits,count", [
    (8, 8, 1, 3, 64), (8, 8, 2, 3, 256), (8, 8, 8, 3, 4096),
    (4, 4, 1, 2, 16), (4, 4, 2, 2, 64), (4, 4, 8, 2, 896),
])
def test_codebook_sizes_frozen(ny, nz, rho, bits, count):
    assert len(build_osc(ArrayGeometry(ny, nz), rho, QuantizerSpec(bits))) == count


@pytest.mark.parametrize("phase,expected", [
    (0.3 * np.pi, 0.0), (0.7 * np.pi, np.pi), (1.9 * np.pi, 0.0), (0.5 * np.pi, 0.0),
    (1.5 * np.pi, 0.0),
])
def test_one_bit_quantizer_examples(phase, expected):
    v = np.exp(1j * np.array([phase]))
    out = quantize_phases(v, QuantizerSpec(1))
    np.testing.assert_allclose(out, np.exp(1j * expected), atol=1e-15)


def test_halfway_ties_go_to_smaller_phase():
    q = QuantizerSpec(2)  # levels at multiples of pi/2
    v = np.exp(1j * np.array([np.pi / 4, 3 * np.pi / 4, 5 * np.pi / 4]))
    out = quantize_phases(v, q) * np.sqrt(3)
    np.testing.assert_allclose(out, np.exp(1j * np.array([0, np.pi / 2, np.pi])), atol=1e-15)
    # 7pi/4 sits between 3pi/2 and 2pi == 0; the smaller phase value is 0
    np.testing.assert_allclose(quantize_phases(np.exp(1j * np.array([7 * np.pi / 4])), q), 1.0,
                               atol=1e-15)


@given(st.lists(st.floats(-10, 10, allow_nan=False), min_size=1, max_size=16),
       st.integers(1, 5))
@settings(max_examples=100, deadline=None)
def test_quantization_idempotent_and_on_alphabet(phases, bits):
    q = QuantizerSpec(bits)
    v = np.exp(1j * np.array(phases)) / np.sqrt(len(phases))
    once = quantize_phases(v, q)
    np.testing.assert_allclose(quantize_phases(once, q), once, atol=1e-15)
    np.testing.assert_allclose(np.abs(once), 1 / np.sqrt(len(phases)), atol=1e-15)
    steps = np.mod(np.angle(once), 2 * np.pi) / (2 * np.pi / q.levels)
    np.testing.assert_allclose(steps, np.round(steps), atol=1e-9)
    # circular distance to the chosen level never exceeds half a step
    d = np.abs(np.angle(once * np.conj(v)))
    assert np.all(d <= np.pi / q.levels + 1e-9)


@pytest.mark.parametrize("geom", [ArrayGeometry(4, 4), ArrayGeometry(2, 8)])
@pytest.mark.parametrize("bits", [0, 2, 3])
def test_rho1_entries_are_contained_in_rho2(geom, bits):
    q = QuantizerSpec(bits) if bits else None
    small = _as_row_set(build_osc(geom, 1, q).vectors)
    big = _as_row_set(build_osc(geom, 2, q).vectors)
    assert small <= big


@pytest.mark.parametrize("rho", [1, 2, 3, 8])
def test_entries_unit_norm_constant_modulus_unique(rho):
    g = ArrayGeometry(4, 4)
    cb = build_osc(g, rho, QuantizerSpec(2))
    np.testing.assert_allclose(np.linalg.norm(cb.vectors, axis=1), 1, atol=1e-14)
    np.testing.assert_allclose(np.abs(cb.vectors), 0.25, atol=1e-15)
    assert len(_as_row_set(cb.vectors, 9)) == len(cb)


def test_unquantized_entries_match_generic_vector():
    g = ArrayGeometry(3, 2)
    cb = build_osc(g, 2)
    for v, (wy, wz) in zip(cb.vectors, cb.frequencies):
        np.testing.assert_allclose(v, generic_array_vector(g, wy, wz), atol=1e-15)


def test_more_bits_do_not_shrink_codebook():
    g = ArrayGeometry(4, 4)
    sizes = [len(build_osc(g, 4, QuantizerSpec(b))) for b in (1, 2, 3, 4)]
    assert sizes == sorted(sizes)
    assert sizes[-1] <= len(build_osc(g, 4))


def test_rho_validation():
    with pytest.raises(ValueError):
        build_osc(ArrayGeometry(2, 2), 0)
    with pytest.raises(ValueError):
        QuantizerSpec(0)


def test_vectors_are_read_only():
    cb = build_osc(ArrayGeometry(2, 2), 1)
    with pytest.raises(ValueError):
        cb.vectors[0, 0] = 0


def test_correlation_examples():
    g = ArrayGeometry(4, 1)
    a = generic_array_vector(g, 0.0, 0.0)
    b = generic_array_vector(g, np.pi / 2, 0.0)
    assert correlation(a, a) == pytest.approx(1.0)
    assert correlation(a, b) == pytest.approx(0.0, abs=1e-15)
    c = generic_array_vector(g, np.pi / 4, 0.0)
    # Dirichlet kernel |sum e^{j n pi/4}| / 4
    expected = abs(np.sum(np.exp(1j * np.arange(4) * np.pi / 4))) / 4
    assert correlation(a, c) == pytest.approx(expected, abs=1e-15)
    assert correlation(a * (1 + 1e-15), a) <= 1.0


@pytest.mark.parametrize("bits", [0, 2])
def test_save_load_round_trip_exact(tmp_path, bits):
    cb = build_osc(ArrayGeometry(4, 2, 0.4), 3, QuantizerSpec(bits) if bits else None)
    path = tmp_path / "cb.csv"
    save_codebook(path, cb)
    back = load_codebook(path)
    assert isinstance(back, Codebook)
    assert back.geometry == cb.geometry and back.rho == 3 and back.bits == bits
    assert np.array_equal(back.vectors, cb.vectors)
    assert not (tmp_path / "cb.csv.tmp").exists()


def test_load_rejects_truncated_file(tmp_path):
    cb = build_osc(ArrayGeometry(2, 2), 1)
    path = tmp_path / "cb.csv"
    save_codebook(path, cb)
    lines = path.read_text().splitlines()
    path.write_text("\n".join(lines[:-1]) + "\n")
    with pytest.raises(ValueError):
        load_codebook(path)
