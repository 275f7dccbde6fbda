"""Hologram synthesis against a per-element brute-force field sum."""

import math
import warnings

import numpy as np
import pytest

from holoris.errors import DegenerateInterference, FileFormatError
from holoris.geometry import (
    AngularLocation,
    ArrayGeometry,
    default_geometry,
    element_positions,
    spatial_frequencies,
)
from holoris.wavefield import (
    DetectorModel,
    Hologram,
    Source,
    complex_field_at_array,
    read_hologram_csv,
    synthesize_hologram,
    write_hologram_csv,
)

GEOM = default_geometry()


def brute_force_intensity(sources, geom):
    """Independent oracle: sum complex element fields source by source.

    Far-field source: A * exp(i(phase + m*omega_z + n*omega_x)) with
    0-based element indices; near-field: spherical wave
    A * exp(i(phase - k0*r)) / max(r/r_ref, 1) evaluated per element.
    """
    k0 = 2.0 * math.pi / geom.wavelength_m
    pos = element_positions(geom)
    total = np.zeros(geom.shape, dtype=complex)
    for src in sources:
        if src.kind == "far_field":
            w = spatial_frequencies(src.angles, geom)
            m = np.arange(geom.n_z)[:, None]
            n = np.arange(geom.n_x)[None, :]
            field = src.amplitude * np.exp(
                1j * (src.phase_rad + m * w.omega_z + n * w.omega_x)
            )
        else:
            r = np.linalg.norm(pos - src.position, axis=2)
            r_ref = float(np.linalg.norm(src.position))
            field = (
                src.amplitude
                * np.exp(1j * (src.phase_rad - k0 * r))
                / np.maximum(r / r_ref, 1.0)
            )
        total += field
    return np.abs(total) ** 2


def test_two_wave_interference_matches_brute_force():
    rng = np.random.default_rng(11)
    for _ in range(20):
        sources = [
            Source.far_field(
                AngularLocation(rng.uniform(-60, 60), rng.uniform(-60, 60)),
                amplitude=rng.uniform(0.2, 2.0),
                phase_rad=rng.uniform(-math.pi, math.pi),
            )
            for _ in range(2)
        ]
        holo = synthesize_hologram(sources, GEOM)[0]
        assert np.allclose(holo.values, brute_force_intensity(sources, GEOM),
                           rtol=1e-12, atol=1e-12)


def test_near_field_matches_brute_force():
    sources = [
        Source.far_field(AngularLocation(0.0, -20.0)),
        Source.near_field(position=(0.4, 2.5, -0.3), amplitude=1.3, phase_rad=0.7),
    ]
    holo = synthesize_hologram(sources, GEOM)[0]
    assert np.allclose(holo.values, brute_force_intensity(sources, GEOM),
                       rtol=1e-12, atol=1e-12)


def test_equal_broadside_pair_is_constant_four():
    src = Source.far_field(AngularLocation(0.0, 0.0))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateInterference)
        holo = synthesize_hologram([src, src], GEOM)[0]
    assert np.allclose(holo.values, 4.0)
    # a pi phase offset cancels the pair element by element
    anti = Source.far_field(AngularLocation(0.0, 0.0), phase_rad=math.pi)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateInterference)
        holo = synthesize_hologram([src, anti], GEOM)[0]
    assert np.allclose(holo.values, 0.0, atol=1e-25)


def test_single_source_carries_no_fringes():
    with pytest.warns(DegenerateInterference):
        holo = synthesize_hologram([Source.far_field(AngularLocation(17.0, -42.0))], GEOM)[0]
    assert np.allclose(holo.values, 1.0)


def test_degenerate_pair_warns():
    src = Source.far_field(AngularLocation(10.0, 10.0))
    with pytest.warns(DegenerateInterference):
        synthesize_hologram([src, src], GEOM)


def test_fringe_frequency_lands_on_expected_bin():
    """A bin-aligned pair concentrates off-DC energy on the difference bin."""
    bs = AngularLocation(0.0, 0.0)
    k = 4  # omega_x difference of 2*pi*k/32
    w_ue = 2.0 * math.pi * k / 32
    sin_phi = w_ue / (2.0 * math.pi * GEOM.d_x_m / GEOM.wavelength_m)
    ue = AngularLocation(0.0, math.degrees(math.asin(sin_phi)))
    holo = synthesize_hologram([Source.far_field(bs), Source.far_field(ue)], GEOM)[0]
    spec = np.fft.fft2(holo.values)
    mags = np.abs(spec)
    mags[0, 0] = 0.0
    assert np.unravel_index(np.argmax(mags), mags.shape) == (0, k)


def test_detector_floor_ceiling_and_agc():
    bs = Source.far_field(AngularLocation(0.0, 0.0))
    ue = Source.far_field(AngularLocation(5.0, 25.0))
    det = DetectorModel(floor=1.0, ceiling=3.0)
    holo = synthesize_hologram([bs, ue], GEOM, detector=det)[0]
    assert holo.values.min() >= 1.0 and holo.values.max() <= 3.0
    # AGC rescales onto [0, ceiling] without moving the intensity argmax
    raw = synthesize_hologram([bs, ue], GEOM)[0]
    agc = synthesize_hologram(
        [bs, ue], GEOM, detector=DetectorModel(ceiling=100.0, agc_enabled=True)
    )[0]
    assert agc.values.max() == pytest.approx(100.0)
    assert np.argmax(agc.values) == np.argmax(raw.values)


def test_noise_is_seed_deterministic():
    det = DetectorModel(noise_std=0.5)
    srcs = [Source.far_field(AngularLocation(0.0, 0.0)),
            Source.far_field(AngularLocation(3.0, 33.0))]
    a = synthesize_hologram(srcs, GEOM, detector=det, seed=123)[0]
    b = synthesize_hologram(srcs, GEOM, detector=det, seed=123)[0]
    c = synthesize_hologram(srcs, GEOM, detector=det, seed=124)[0]
    assert np.array_equal(a.values, b.values)
    assert not np.array_equal(a.values, c.values)


def test_frequency_tags_do_not_interfere():
    """Each tag's hologram equals the hologram of that tag's sources alone."""
    pair0 = [Source.far_field(AngularLocation(0.0, 0.0), frequency_tag=0),
             Source.far_field(AngularLocation(10.0, 20.0), frequency_tag=0)]
    pair1 = [Source.far_field(AngularLocation(0.0, 0.0), frequency_tag=1),
             Source.far_field(AngularLocation(-8.0, -31.0), frequency_tag=1)]
    holos = synthesize_hologram(pair0 + pair1, GEOM)
    assert [h.frequency_tag for h in holos] == [0, 1]
    alone0 = synthesize_hologram(pair0, GEOM)[0]
    assert np.array_equal(holos[0].values, alone0.values)


def test_distant_spherical_wave_approaches_plane_wave():
    """At 100 m the near-field hologram is a small perturbation of the far one."""
    ue = AngularLocation(6.0, 14.0)
    far = synthesize_hologram(
        [Source.far_field(AngularLocation(0.0, 0.0)), Source.far_field(ue)], GEOM
    )[0]
    near = synthesize_hologram(
        [Source.far_field(AngularLocation(0.0, 0.0)),
         Source.near_field(position=tuple(100.0 * v for v in
                                          (math.cos(math.radians(6)) * math.sin(math.radians(14)),
                                           math.cos(math.radians(6)) * math.cos(math.radians(14)),
                                           -math.sin(math.radians(6)))))],
        GEOM,
    )[0]
    # fringe structure matches: same dominant off-DC bin
    fa = np.abs(np.fft.fft2(far.values - far.values.mean()))
    na = np.abs(np.fft.fft2(near.values - near.values.mean()))
    assert np.unravel_index(np.argmax(fa), fa.shape) == np.unravel_index(np.argmax(na), na.shape)


def test_hologram_csv_round_trip_is_bit_exact(tmp_path):
    det = DetectorModel(noise_std=0.3)
    holo = synthesize_hologram(
        [Source.far_field(AngularLocation(0.0, 0.0)),
         Source.far_field(AngularLocation(4.0, 18.0))],
        GEOM, detector=det, seed=9,
    )[0]
    path = tmp_path / "holo.csv"
    write_hologram_csv(path, holo)
    back = read_hologram_csv(path)
    assert np.array_equal(back.values, holo.values)
    assert back.geometry == holo.geometry
    assert back.frequency_tag == holo.frequency_tag


def test_hologram_csv_rejects_corruption(tmp_path):
    holo = synthesize_hologram(
        [Source.far_field(AngularLocation(0.0, 0.0)),
         Source.far_field(AngularLocation(0.0, 30.0))], GEOM
    )[0]
    path = tmp_path / "holo.csv"
    write_hologram_csv(path, holo)
    lines = path.read_text().splitlines()

    bad = tmp_path / "bad_magic.csv"
    bad.write_text("\n".join(["# not-a-hologram v1"] + lines[1:]) + "\n")
    with pytest.raises(FileFormatError) as exc:
        read_hologram_csv(bad)
    assert exc.value.line_number == 1

    # truncate one data row
    data_start = next(i for i, l in enumerate(lines) if not l.startswith("#"))
    broken = lines[:]
    broken[data_start] = ",".join(broken[data_start].split(",")[:-1])
    bad2 = tmp_path / "bad_row.csv"
    bad2.write_text("\n".join(broken) + "\n")
    with pytest.raises(FileFormatError) as exc:
        read_hologram_csv(bad2)
    assert exc.value.line_number == data_start + 1

    broken = lines[:]
    broken[data_start] = broken[data_start].replace(
        broken[data_start].split(",")[0], "not_a_number", 1
    )
    bad3 = tmp_path / "bad_float.csv"
    bad3.write_text("\n".join(broken) + "\n")
    with pytest.raises(FileFormatError):
        read_hologram_csv(bad3)


def test_hologram_shape_validation():
    with pytest.raises(ValueError):
        Hologram(values=np.zeros((4, 4)), geometry=GEOM)


def test_field_amplitude_attenuates_beyond_reference_range():
    """Spherical spreading follows 1/max(r/r_ref, 1) element by element."""
    src = Source.near_field(position=(0.0, 1.0, 0.0))
    field = complex_field_at_array(src, GEOM)
    r = np.linalg.norm(element_positions(GEOM) - np.asarray(src.position), axis=2)
    expected = 1.0 / np.maximum(r / 1.0, 1.0)
    assert np.allclose(np.abs(field), expected, rtol=1e-12)
    assert expected.max() < 1.0  # even grid: no element sits at the foot point
    assert expected.min() < expected.max()
