"""Angular localization from one interference hologram.

The hologram of a reference wave at known angles plus one unknown wave is

    I(m, n) = A + C*exp(i*(m*dz + n*dx)) + conj(C)*exp(-i*(m*dz + n*dx))

with (dz, dx) the difference of the two spatial-frequency pairs.  Its 2D
DFT concentrates into a DC term and one conjugate pair of peaks; the peak
bin recovers the fringe frequency up to sign, and adding/subtracting it
from the known reference frequencies yields two twin direction candidates.
A disambiguation policy (ground-truth oracle, an admissible angular sector,
or none) selects one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    AllCandidatesInfeasible,
    InfeasibleFrequency,
    NoPeak,
    SectorAmbiguous,
    SectorEmpty,
)
from .geometry import (
    AngularLocation,
    SpatialFrequencyPair,
    angles_from_frequencies,
    angular_distance_deg,
    spatial_frequencies,
)
from .wavefield import Hologram

# Bins whose magnitude is within this relative margin of the maximum are
# treated as tied, so conjugate-symmetric near-ties resolve to the
# lexicographically smallest bin instead of floating-point noise.
_TIE_RTOL = 1e-12


@dataclass(frozen=True)
class Spectrum:
    """Unnormalized 2D DFT of a hologram (optionally zero padded)."""

    values: np.ndarray
    zero_pad_factor: int = 1


@dataclass(frozen=True)
class SpectralPeaks:
    """DC amplitude and the off-DC peak of a hologram spectrum."""

    dc_amplitude: complex
    pair_amplitude: complex
    pair_location: SpatialFrequencyPair
    peak_bin: tuple[int, int]


@dataclass(frozen=True)
class OraclePolicy:
    """Pick the candidate closer to a supplied ground truth."""

    truth: AngularLocation


@dataclass(frozen=True)
class SectorPolicy:
    """Pick the unique candidate inside an admissible angular sector.

    Either range may be None, meaning that axis is unrestricted.  Bounds
    are inclusive degrees (lo, hi).
    """

    theta_range_deg: tuple[float, float] | None = None
    phi_range_deg: tuple[float, float] | None = None

    def contains(self, loc: AngularLocation) -> bool:
        if self.theta_range_deg is not None:
            lo, hi = self.theta_range_deg
            if not (lo <= loc.theta_deg <= hi):
                return False
        if self.phi_range_deg is not None:
            lo, hi = self.phi_range_deg
            if not (lo <= loc.phi_deg <= hi):
                return False
        return True


@dataclass(frozen=True)
class LocalizationResult:
    """Twin candidates, the policy choice, and peak diagnostics.

    candidate_1 is the plus combination regulate(omega_bs + omega_peak),
    candidate_2 the minus combination; either is None when it violates the
    propagating-wave bound.  peak_bin is 1-based (i_z, i_x).
    """

    candidate_1: AngularLocation | None
    candidate_2: AngularLocation | None
    chosen: AngularLocation | None
    peak_bin: tuple[int, int]
    peak_to_median_ratio: float


def regulate(x: float) -> float:
    """Wrap a frequency into [-pi, pi]: x - 2*pi*round(x/(2*pi)).

    Half-integer multiples round away from zero, so regulate(3*pi/2) is
    -pi/2 and regulate(-pi) is +pi.
    """
    q = x / (2.0 * math.pi)
    r = math.copysign(math.floor(abs(q) + 0.5), q)
    return x - 2.0 * math.pi * r


def fft2(holo: Hologram, zero_pad_factor: int = 1, remove_mean: bool = False) -> Spectrum:
    """Two cascaded 1D FFTs (rows along z, then columns along x).

    zero_pad_factor >= 1 pads each axis to factor*N before transforming,
    refining the frequency grid without changing the underlying spectrum.

    remove_mean subtracts the sample mean first.  On the unpadded grid this
    only zeroes the DC bin (a constant transforms to DC exactly); on padded
    grids it also removes the rectangular-window skirt the constant term
    would otherwise smear over the refined bins, where it can out-peak a
    weak fringe.  Peak search goes through localize, which enables it.
    """
    if zero_pad_factor < 1:
        raise ValueError("zero_pad_factor must be a positive integer")
    n_z, n_x = holo.values.shape
    if n_z < 2 or n_x < 2:
        raise ValueError("spectral analysis needs at least a 2x2 hologram")
    values = holo.values - holo.values.mean() if remove_mean else holo.values
    stage = np.fft.fft(values, n=zero_pad_factor * n_z, axis=0)
    values = np.fft.fft(stage, n=zero_pad_factor * n_x, axis=1)
    return Spectrum(values=values, zero_pad_factor=zero_pad_factor)


def _guard_complement(shape: tuple[int, int], dc_guard: int) -> np.ndarray:
    """True outside the (2g+1)^2 torus neighborhood of the DC bin."""
    m_z, m_x = shape
    mask = np.ones(shape, dtype=bool)
    g = dc_guard
    rows = np.arange(-g, g + 1) % m_z
    cols = np.arange(-g, g + 1) % m_x
    mask[np.ix_(rows, cols)] = False
    return mask


def _search_mask(shape: tuple[int, int], dc_guard: int) -> np.ndarray:
    mask = _guard_complement(shape, dc_guard)
    mask[shape[0] // 2 + 1:, :] = False
    return mask


def _ratio(mags: np.ndarray, dc_guard: int) -> tuple[float, float]:
    """(peak magnitude over the search region, peak/median diagnostic)."""
    mask = _search_mask(mags.shape, dc_guard)
    if not mask.any():
        raise NoPeak("search region is empty")
    peak_mag = float(np.where(mask, mags, -1.0).max())
    median = float(np.median(mags[_guard_complement(mags.shape, dc_guard)]))
    if median > 0:
        return peak_mag, peak_mag / median
    return peak_mag, (math.inf if peak_mag > 0 else 0.0)


def find_peak(
    spec: Spectrum,
    dc_guard: int = 0,
    significance_threshold: float = 6.0,
    min_magnitude: float = 0.0,
) -> tuple[int, int]:
    """Locate the dominant off-DC bin; returns 1-based (i_z, i_x).

    The search excludes a (2*dc_guard+1)^2 torus neighborhood of DC (the
    DC bin itself always), restricts rows to the lower half-spectrum
    k <= M_z/2, and breaks magnitude ties by the lexicographically
    smallest (k, l).  Raises NoPeak when the best bin is <= min_magnitude
    (so rounding residue of a nominally constant hologram never counts as
    a fringe) or falls below significance_threshold times the median
    magnitude outside the DC guard.
    """
    mags = np.abs(spec.values)
    peak_mag, ratio = _ratio(mags, dc_guard)
    if peak_mag <= max(min_magnitude, 0.0):
        raise NoPeak("no off-DC energy in the spectrum")
    if ratio < significance_threshold:
        raise NoPeak(
            f"peak/median ratio {ratio:.3g} below significance threshold "
            f"{significance_threshold:g}"
        )
    allowed = np.where(_search_mask(mags.shape, dc_guard), mags, -1.0)
    tied = np.argwhere(allowed >= peak_mag * (1.0 - _TIE_RTOL))
    k, l = min(map(tuple, tied))
    return (int(k) + 1, int(l) + 1)


def peak_to_median_ratio(spec: Spectrum, dc_guard: int = 0) -> float:
    """Diagnostic ratio used by the significance test in find_peak."""
    return _ratio(np.abs(spec.values), dc_guard)[1]


def extract_peaks(spec: Spectrum, dc_guard: int = 0) -> SpectralPeaks:
    """DC and dominant-pair amplitudes with the pair's regulated frequencies."""
    i_z, i_x = find_peak(spec, dc_guard=dc_guard)
    m_z, m_x = spec.values.shape
    omega_z = regulate(2.0 * math.pi * (i_z - 1) / m_z)
    omega_x = regulate(2.0 * math.pi * (i_x - 1) / m_x)
    return SpectralPeaks(
        dc_amplitude=complex(spec.values[0, 0]),
        pair_amplitude=complex(spec.values[i_z - 1, i_x - 1]),
        pair_location=SpatialFrequencyPair(omega_z=omega_z, omega_x=omega_x),
        peak_bin=(i_z, i_x),
    )


def candidate_frequencies(
    bs_freqs: SpatialFrequencyPair,
    peak_bin: tuple[int, int],
    padded_shape: tuple[int, int],
) -> tuple[SpatialFrequencyPair, SpatialFrequencyPair]:
    """Twin frequency candidates regulate(omega_bs +/- omega_peak) per axis."""
    m_z, m_x = padded_shape
    w_z = 2.0 * math.pi * (peak_bin[0] - 1) / m_z
    w_x = 2.0 * math.pi * (peak_bin[1] - 1) / m_x
    plus = SpatialFrequencyPair(
        omega_z=regulate(bs_freqs.omega_z + w_z),
        omega_x=regulate(bs_freqs.omega_x + w_x),
    )
    minus = SpatialFrequencyPair(
        omega_z=regulate(bs_freqs.omega_z - w_z),
        omega_x=regulate(bs_freqs.omega_x - w_x),
    )
    return plus, minus


def disambiguate(
    candidate_1: AngularLocation | None,
    candidate_2: AngularLocation | None,
    policy: OraclePolicy | SectorPolicy | None,
) -> AngularLocation | None:
    """Apply a twin-image disambiguation policy to the surviving candidates.

    oracle: the candidate with the smaller wrapped angular distance to the
    truth (candidate_1 on ties).  sector: the unique candidate inside the
    sector, raising SectorEmpty/SectorAmbiguous when zero or both qualify.
    None: no choice is made.
    """
    present = [c for c in (candidate_1, candidate_2) if c is not None]
    if policy is None:
        return None
    if isinstance(policy, OraclePolicy):
        return min(present, key=lambda c: angular_distance_deg(c, policy.truth))
    if isinstance(policy, SectorPolicy):
        inside = [c for c in present if policy.contains(c)]
        if not inside:
            raise SectorEmpty("no candidate inside the admissible sector")
        if len(inside) > 1:
            raise SectorAmbiguous(
                "both candidates inside the admissible sector; widen knowledge "
                "of the terminal or narrow the sector"
            )
        return inside[0]
    raise TypeError(f"unknown disambiguation policy {policy!r}")


def localize(
    holo: Hologram,
    bs: AngularLocation,
    zero_pad_factor: int = 1,
    disambiguation: OraclePolicy | SectorPolicy | None = None,
    dc_guard: int = 0,
    significance_threshold: float = 6.0,
) -> LocalizationResult:
    """Estimate the unknown direction interfering with a known reference.

    Transforms the hologram, finds the dominant off-DC bin, forms the twin
    frequency candidates, discards any that violate the propagating-wave
    bound, converts the rest to angles, and applies the disambiguation
    policy.  Raises NoPeak (no significant fringe energy) or
    AllCandidatesInfeasible (both candidates evanescent).
    """
    geom = holo.geometry
    bs_freqs = spatial_frequencies(bs, geom)
    spec = fft2(holo, zero_pad_factor=zero_pad_factor, remove_mean=True)
    # Fringe contrast below ~1e-9 of the total captured power is rounding
    # residue (a constant hologram is constant only to the last ulp), not
    # an interference pattern.
    fringe_floor = 1e-9 * float(np.abs(holo.values).sum())
    peak_bin = find_peak(
        spec,
        dc_guard=dc_guard,
        significance_threshold=significance_threshold,
        min_magnitude=fringe_floor,
    )
    ratio = peak_to_median_ratio(spec, dc_guard=dc_guard)
    plus, minus = candidate_frequencies(bs_freqs, peak_bin, spec.values.shape)
    candidates: list[AngularLocation | None] = []
    for freqs in (plus, minus):
        try:
            candidates.append(angles_from_frequencies(freqs, geom))
        except InfeasibleFrequency:
            candidates.append(None)
    candidate_1, candidate_2 = candidates
    if candidate_1 is None and candidate_2 is None:
        raise AllCandidatesInfeasible(
            "both twin candidates fall outside the propagating-wave region"
        )
    chosen = disambiguate(candidate_1, candidate_2, disambiguation)
    return LocalizationResult(
        candidate_1=candidate_1,
        candidate_2=candidate_2,
        chosen=chosen,
        peak_bin=peak_bin,
        peak_to_median_ratio=ratio,
    )


def ml_refine(
    holo: Hologram,
    bs: AngularLocation,
    coarse: AngularLocation,
    search_halfwidth_deg: float = 5.0,
    grid_step_deg: float = 0.1,
) -> AngularLocation:
    """Grid-search refinement of a coarse estimate.

    For every direction on a (2*halfwidth/step + 1)^2 grid centered on the
    coarse estimate, the fringe model A + B*cos(Phi) + C*sin(Phi) with
    Phi(m, n) = m*dz + n*dx is fitted to the hologram by linear least
    squares (amplitude and phase concentrated out), and the direction with
    the smallest residual wins.  The grid always contains the coarse point
    itself, so refinement never loses to the coarse estimate on-model.
    """
    if search_halfwidth_deg <= 0 or grid_step_deg <= 0:
        raise ValueError("search_halfwidth_deg and grid_step_deg must be positive")
    geom = holo.geometry
    bs_freqs = spatial_frequencies(bs, geom)
    half_steps = int(round(search_halfwidth_deg / grid_step_deg))
    offsets = grid_step_deg * (np.arange(2 * half_steps + 1) - half_steps)
    thetas = coarse.theta_deg + offsets
    phis = coarse.phi_deg + offsets
    thetas = thetas[np.abs(thetas) < 90.0]
    phis = phis[np.abs(phis) < 90.0]

    I = holo.values
    n_z, n_x = I.shape
    m = np.arange(n_z)
    n = np.arange(n_x)
    total = float(I.sum())
    n_el = n_z * n_x

    lam = geom.wavelength_m
    factor_x = 2.0 * math.pi * geom.d_x_m / lam
    factor_z = 2.0 * math.pi * geom.d_z_m / lam
    th_rad = np.radians(thetas)
    ph_rad = np.radians(phis)
    # Fringe frequencies for every grid direction relative to the reference.
    dz = (-factor_z * np.sin(th_rad)) - bs_freqs.omega_z
    dx_grid = (
        factor_x * np.cos(th_rad)[:, np.newaxis] * np.sin(ph_rad)[np.newaxis, :]
        - bs_freqs.omega_x
    )

    def geom_sum(w, count):
        # sum_{j=0}^{count-1} exp(-i*w*j), stable at w == 0
        idx = np.arange(count)
        return np.exp(-1j * np.outer(w, idx)).sum(axis=1)

    best = None
    e_z = np.exp(-1j * np.outer(dz, m))  # (T, n_z)
    for a, dzv in enumerate(dz):
        dxv = dx_grid[a]  # (P,)
        e_x = np.exp(-1j * np.outer(n, dxv))  # (n_x, P)
        t = e_z[a] @ I @ e_x  # (P,) projection of I on exp(-i*Phi)
        s1 = geom_sum(np.array([dzv]), n_z)[0] * geom_sum(dxv, n_x)  # sum exp(-iPhi)
        s2 = geom_sum(np.array([2 * dzv]), n_z)[0] * geom_sum(2 * dxv, n_x)
        # Normal equations for basis [1, cos(Phi), sin(Phi)]
        sc = s1.real
        ss = -s1.imag
        scc = 0.5 * (n_el + s2.real)
        sss = 0.5 * (n_el - s2.real)
        scs = -0.5 * s2.imag
        b0 = np.full_like(sc, total)
        b1 = t.real
        b2 = -t.imag
        G = np.empty((len(dxv), 3, 3))
        G[:, 0, 0] = n_el
        G[:, 0, 1] = G[:, 1, 0] = sc
        G[:, 0, 2] = G[:, 2, 0] = ss
        G[:, 1, 1] = scc
        G[:, 1, 2] = G[:, 2, 1] = scs
        G[:, 2, 2] = sss
        G += 1e-9 * n_el * np.eye(3)[np.newaxis, :, :]
        b = np.stack([b0, b1, b2], axis=1)
        coef = np.linalg.solve(G, b[:, :, np.newaxis])[:, :, 0]
        explained = np.einsum("pi,pi->p", coef, b)
        p = int(np.argmax(explained))
        if best is None or explained[p] > best[0]:
            best = (float(explained[p]), float(thetas[a]), float(phis[p]))
    return AngularLocation(theta_deg=best[1], phi_deg=best[2])


def multiuser_localize(
    holograms,
    bs: AngularLocation,
    zero_pad_factor: int = 1,
    disambiguation: OraclePolicy | SectorPolicy | None = None,
    dc_guard: int = 0,
    significance_threshold: float = 6.0,
) -> dict:
    """Localize one user per frequency tag, isolating per-tag failures.

    holograms: mapping tag -> Hologram or a sequence of Holograms.  Returns
    a dict mapping each tag to its LocalizationResult, or to the raised
    localization error for tags that fail; one degenerate tag never
    affects the others.
    """
    if isinstance(holograms, dict):
        items = sorted(holograms.items())
    else:
        items = sorted((h.frequency_tag, h) for h in holograms)
    out = {}
    for tag, holo in items:
        try:
            out[tag] = localize(
                holo,
                bs,
                zero_pad_factor=zero_pad_factor,
                disambiguation=disambiguation,
                dc_guard=dc_guard,
                significance_threshold=significance_threshold,
            )
        except (NoPeak, AllCandidatesInfeasible, SectorEmpty, SectorAmbiguous) as exc:
            out[tag] = exc
    return out


def _fmt_angle(loc: AngularLocation | None, axis: str) -> str:
    if loc is None:
        return "none"
    return repr(float(getattr(loc, axis)))


def format_report(result: LocalizationResult) -> str:
    """Flat key=value record of a localization result."""
    lines = []
    for name, cand in (
        ("candidate_1", result.candidate_1),
        ("candidate_2", result.candidate_2),
        ("chosen", result.chosen),
    ):
        lines.append(f"{name}_theta_deg={_fmt_angle(cand, 'theta_deg')}")
        lines.append(f"{name}_phi_deg={_fmt_angle(cand, 'phi_deg')}")
    lines.append(f"peak_bin_z={result.peak_bin[0]}")
    lines.append(f"peak_bin_x={result.peak_bin[1]}")
    lines.append(f"peak_to_median_ratio={repr(float(result.peak_to_median_ratio))}")
    return "\n".join(lines) + "\n"


def parse_report(text: str) -> dict:
    """Parse a key=value localization report back into a dict.

    Angle and ratio values come back as float or None; peak bins as int.
    """
    out = {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        key, _, value = line.partition("=")
        if not _:
            raise ValueError(f"malformed report line {raw!r}")
        if value == "none":
            out[key] = None
        elif key.startswith("peak_bin"):
            out[key] = int(value)
        else:
            out[key] = float(value)
    return out
