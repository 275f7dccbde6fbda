"""Coherent field synthesis and the power-detector hologram model.

Each detector reports intensity |sum of incident fields|^2.  Two coherent
sources sharing a frequency tag produce an interference hologram whose
fringe frequency is the difference of their spatial frequencies; sources on
different tags are separated ideally and never mix.

Spherical waves follow the exp(i*(phase - k0*r)) convention.  The far-field
limit of a near-field source therefore matches the plane-wave form used by
``spatial_frequencies``, which keeps hologram fringes, localization, and
beamforming mutually consistent.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateInterference, FileFormatError
from .geometry import (
    AngularLocation,
    ArrayGeometry,
    element_positions,
    spatial_frequencies,
)

_HOLOGRAM_MAGIC = "# holoris-hologram v1"


@dataclass(frozen=True)
class Source:
    """One coherent emitter illuminating the panel.

    kind is "far_field" (direction only) or "near_field" (3D position with
    y > 0, meters).  Sources interfere only with sources sharing their
    frequency_tag.
    """

    kind: str
    angles: AngularLocation | None = None
    position: np.ndarray | None = None
    amplitude: float = 1.0
    phase_rad: float = 0.0
    frequency_tag: int = 0

    def __post_init__(self):
        if self.kind not in ("far_field", "near_field"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.kind == "far_field" and self.angles is None:
            raise ValueError("far_field source requires angles")
        if self.kind == "near_field":
            if self.position is None:
                raise ValueError("near_field source requires a position")
            pos = np.asarray(self.position, dtype=float)
            if pos.shape != (3,):
                raise ValueError("position must be a 3-vector")
            if pos[1] <= 0:
                raise ValueError("source must lie in front of the panel (y > 0)")
            object.__setattr__(self, "position", pos)
        if self.amplitude < 0:
            raise ValueError("amplitude must be non-negative")
        if self.frequency_tag < 0:
            raise ValueError("frequency_tag must be non-negative")

    @staticmethod
    def far_field(
        angles: AngularLocation,
        amplitude: float = 1.0,
        phase_rad: float = 0.0,
        frequency_tag: int = 0,
    ) -> "Source":
        return Source(
            kind="far_field",
            angles=angles,
            amplitude=amplitude,
            phase_rad=phase_rad,
            frequency_tag=frequency_tag,
        )

    @staticmethod
    def near_field(
        position,
        amplitude: float = 1.0,
        phase_rad: float = 0.0,
        frequency_tag: int = 0,
    ) -> "Source":
        return Source(
            kind="near_field",
            position=np.asarray(position, dtype=float),
            amplitude=amplitude,
            phase_rad=phase_rad,
            frequency_tag=frequency_tag,
        )


@dataclass(frozen=True)
class DetectorModel:
    """Power-detector imperfections applied to ideal intensities.

    noise_std: std of additive Gaussian noise on intensity.
    floor/ceiling: reporting range; sub-floor values clamp to floor,
        values above ceiling saturate.
    agc_enabled: rescale each captured hologram so its maximum maps to
        ceiling, preserving relative intensity magnitudes (requires a
        finite ceiling).
    phase_jitter_std: std (radians) of a per-capture global phase offset
        applied to one source of each tag, modeling imperfect carrier
        synchronization between sources.
    """

    noise_std: float = 0.0
    floor: float = 0.0
    ceiling: float = math.inf
    agc_enabled: bool = False
    phase_jitter_std: float = 0.0

    def __post_init__(self):
        if self.noise_std < 0:
            raise ValueError("noise_std must be non-negative")
        if self.floor < 0:
            raise ValueError("floor must be non-negative")
        if not self.ceiling > self.floor:
            raise ValueError("ceiling must exceed floor")
        if self.agc_enabled and not math.isfinite(self.ceiling):
            raise ValueError("agc_enabled requires a finite ceiling")
        if self.phase_jitter_std < 0:
            raise ValueError("phase_jitter_std must be non-negative")

    @staticmethod
    def ideal() -> "DetectorModel":
        return DetectorModel()


@dataclass(frozen=True)
class Hologram:
    """Captured intensity matrix for one frequency tag."""

    values: np.ndarray
    geometry: ArrayGeometry
    frequency_tag: int = 0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.geometry.shape:
            raise ValueError(
                f"values shape {values.shape} does not match geometry "
                f"{self.geometry.shape}"
            )
        if np.any(values < 0):
            raise ValueError("hologram intensities must be non-negative")
        object.__setattr__(self, "values", values)


def complex_field_at_array(source: Source, geom: ArrayGeometry) -> np.ndarray:
    """Complex field of one source at every element, shape (n_z, n_x).

    far_field: amplitude * exp(i*(phase + m*omega_z + n*omega_x)) with the
    spatial frequencies of the source direction (m, n zero-based here; the
    index origin only shifts a global phase).

    near_field: amplitude * exp(i*(phase - k0*r_mn)) / max(r_mn/r_ref, 1)
    with r_mn the element distance and r_ref the distance to the panel
    center, so spherical spreading is normalized to the center distance and
    never amplifies.
    """
    if source.kind == "far_field":
        freqs = spatial_frequencies(source.angles, geom)
        m = np.arange(geom.n_z)[:, np.newaxis]
        n = np.arange(geom.n_x)[np.newaxis, :]
        phase = source.phase_rad + m * freqs.omega_z + n * freqs.omega_x
        return source.amplitude * np.exp(1j * phase)
    pos = element_positions(geom)
    r = np.linalg.norm(pos - source.position[np.newaxis, np.newaxis, :], axis=2)
    r_ref = float(np.linalg.norm(source.position))
    spreading = np.maximum(r / r_ref, 1.0)
    return (
        source.amplitude
        * np.exp(1j * (source.phase_rad - geom.wavenumber * r))
        / spreading
    )


def _tag_signature(source: Source, geom: ArrayGeometry):
    if source.kind == "far_field":
        f = spatial_frequencies(source.angles, geom)
        return ("far_field", f.omega_z, f.omega_x)
    return ("near_field", *source.position.tolist())


def synthesize_hologram(
    sources,
    geom: ArrayGeometry,
    detector: DetectorModel | None = None,
    seed: int = 0,
) -> list[Hologram]:
    """Capture one hologram per distinct frequency tag.

    For each tag the coherent sum of its sources is squared into intensity,
    then the detector model is applied: Gaussian noise, clamping to
    [floor, ceiling], and optionally AGC rescaling the matrix maximum to the
    ceiling.  When phase_jitter_std > 0 a single Gaussian phase offset is
    added to the last source of the tag before summation.

    Emits a DegenerateInterference warning for any tag whose sources all
    share one spatial signature (the hologram then carries no fringes).
    Identical inputs and seed yield bit-identical holograms.

    Returns holograms sorted by tag.
    """
    if detector is None:
        detector = DetectorModel.ideal()
    sources = list(sources)
    if not sources:
        raise ValueError("at least one source is required")
    rng = np.random.default_rng(seed)
    holograms = []
    for tag in sorted({s.frequency_tag for s in sources}):
        tag_sources = [s for s in sources if s.frequency_tag == tag]
        signatures = {_tag_signature(s, geom) for s in tag_sources}
        if len(signatures) == 1:
            warnings.warn(
                f"tag {tag}: all sources share one spatial signature; "
                "hologram carries no interference fringes",
                DegenerateInterference,
                stacklevel=2,
            )
        jitter = 0.0
        if detector.phase_jitter_std > 0:
            jitter = detector.phase_jitter_std * rng.standard_normal()
        total = np.zeros(geom.shape, dtype=complex)
        for i, s in enumerate(tag_sources):
            fld = complex_field_at_array(s, geom)
            if i == len(tag_sources) - 1 and jitter != 0.0:
                fld = fld * np.exp(1j * jitter)
            total += fld
        intensity = np.abs(total) ** 2
        if detector.noise_std > 0:
            intensity = intensity + detector.noise_std * rng.standard_normal(geom.shape)
        intensity = np.clip(intensity, detector.floor, detector.ceiling)
        if detector.agc_enabled:
            peak = intensity.max()
            if peak > 0:
                intensity = intensity * (detector.ceiling / peak)
        holograms.append(Hologram(values=intensity, geometry=geom, frequency_tag=tag))
    return holograms


def write_hologram_csv(path, holo: Hologram) -> None:
    """Write a hologram in the v1 interchange format.

    Header lines pin the capture geometry; data lines are n_z rows of n_x
    comma-separated intensities in shortest round-trip decimal form, row
    index along z.
    """
    geom = holo.geometry
    lines = [
        _HOLOGRAM_MAGIC,
        f"# f_c_hz={geom.f_c_hz}",
        f"# d_x_m={float(geom.d_x_m)!r}",
        f"# d_z_m={float(geom.d_z_m)!r}",
        f"# n_x={geom.n_x}",
        f"# n_z={geom.n_z}",
        f"# frequency_tag={holo.frequency_tag}",
    ]
    for row in holo.values:
        lines.append(",".join(repr(float(v)) for v in row))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _parse_header(line: str, key: str, lineno: int) -> str:
    prefix = f"# {key}="
    if not line.startswith(prefix):
        raise FileFormatError(f"expected header {prefix!r}, got {line!r}", lineno)
    return line[len(prefix):]


def read_hologram_csv(path) -> Hologram:
    """Parse a v1 hologram file; FileFormatError carries the line number."""
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0] != _HOLOGRAM_MAGIC:
        raise FileFormatError(f"missing magic header {_HOLOGRAM_MAGIC!r}", 1)
    try:
        f_c_hz = int(_parse_header(lines[1], "f_c_hz", 2))
        d_x_m = float(_parse_header(lines[2], "d_x_m", 3))
        d_z_m = float(_parse_header(lines[3], "d_z_m", 4))
        n_x = int(_parse_header(lines[4], "n_x", 5))
        n_z = int(_parse_header(lines[5], "n_z", 6))
        tag = int(_parse_header(lines[6], "frequency_tag", 7))
    except IndexError:
        raise FileFormatError("truncated header", len(lines)) from None
    except ValueError as exc:
        raise FileFormatError(str(exc), None) from None
    data_lines = lines[7:]
    if len(data_lines) != n_z:
        raise FileFormatError(
            f"expected {n_z} data rows, found {len(data_lines)}", len(lines)
        )
    values = np.empty((n_z, n_x))
    for i, line in enumerate(data_lines):
        lineno = 8 + i
        parts = line.split(",")
        if len(parts) != n_x:
            raise FileFormatError(
                f"expected {n_x} comma-separated values, found {len(parts)}", lineno
            )
        try:
            row = [float(p) for p in parts]
        except ValueError as exc:
            raise FileFormatError(str(exc), lineno) from None
        if any(v < 0 for v in row):
            raise FileFormatError("negative intensity", lineno)
        values[i] = row
    geom = ArrayGeometry(n_z=n_z, n_x=n_x, d_z_m=d_z_m, d_x_m=d_x_m, f_c_hz=f_c_hz)
    return Hologram(values=values, geometry=geom, frequency_tag=tag)
