"""OFDM resource grids, Gold-sequence preambles and frame assembly/detection.

Conventions that the rest of the package relies on:

* The DFT is unitary in both directions (``norm="ortho"``), so a resource
  grid and the useful portion of its time-domain signal carry identical
  energy.  No extra scaling constants appear anywhere downstream.
* The occupied subcarriers sit centred on DC.  Subcarrier ``n`` of a grid
  maps to physical FFT bin ``(n - subcarriers//2) mod fft_size`` (after
  ``ifftshift``), which matters when reasoning about the per-subcarrier
  phase ramp caused by a timing offset inside the cyclic prefix.
* Preambles are bipolar (+1/-1) Gold sequences transmitted as raw time
  samples ahead of the first OFDM symbol; frame detection is a normalized
  cross-correlation peak search.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

# Seed for the fixed QPSK pilot symbol shared by transmitter and receiver.
PILOT_SEED = 17

# Preferred pairs of m-sequence feedback taps (polynomial exponents) for the
# Gold families offered here.  Degree 7 is the default preamble; the family
# cross-correlation is three-valued with bound 2**((m+1)/2) + 1.
_PREFERRED_PAIRS: dict[int, tuple[tuple[int, ...], tuple[int, ...]]] = {
    5: ((5, 2), (5, 4, 3, 2)),
    7: ((7, 3), (7, 3, 2, 1)),
    9: ((9, 4), (9, 6, 4, 3)),
    11: ((11, 2), (11, 8, 5, 2)),
}


@dataclass(frozen=True)
class GridConfig:
    """Static dimensions of one OFDM slot.

    ``sample_rate`` is derived as ``fft_size * subcarrier_spacing`` so the
    numerology stays internally consistent (256 x 15 kHz = 3.84 MS/s for the
    defaults).
    """

    subcarriers: int = 256
    symbols_per_slot: int = 14
    subcarrier_spacing: float = 15e3
    fft_size: int = 256
    cp_len: int = 16

    def __post_init__(self):
        if self.subcarriers < 1 or self.symbols_per_slot < 1:
            raise ValueError("grid dimensions must be positive")
        if self.fft_size < self.subcarriers:
            raise ValueError("fft_size must be >= subcarriers")
        if self.cp_len < 0 or self.cp_len >= self.fft_size:
            raise ValueError("cp_len must lie in [0, fft_size)")
        if self.subcarrier_spacing <= 0:
            raise ValueError("subcarrier_spacing must be positive")

    @property
    def sample_rate(self) -> float:
        return self.fft_size * self.subcarrier_spacing

    @property
    def symbol_len(self) -> int:
        """Samples per OFDM symbol including the cyclic prefix."""
        return self.fft_size + self.cp_len

    @property
    def slot_len(self) -> int:
        return self.symbols_per_slot * self.symbol_len

    @property
    def res_per_slot(self) -> int:
        """Resource elements per slot (symbols x subcarriers)."""
        return self.symbols_per_slot * self.subcarriers


@dataclass
class ResourceGrid:
    """Complex symbols laid out as (symbols, subcarriers)."""

    data: np.ndarray

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.complex128)
        if self.data.ndim != 2:
            raise ValueError("resource grid must be 2-D")
        if not np.all(np.isfinite(self.data.view(np.float64))):
            raise ValueError("resource grid entries must be finite")


@dataclass
class TimeSignal:
    """Complex baseband samples at a fixed sample rate."""

    samples: np.ndarray
    sample_rate: float

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        if self.samples.ndim != 1:
            raise ValueError("time signal must be 1-D")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")


@dataclass
class FrameSpec:
    """Layout of one uplink frame: preamble, one pilot symbol, payload slots."""

    preamble: np.ndarray
    pilot_values: np.ndarray
    payload_slot_count: int
    pilot_symbol_index: int = 0

    def __post_init__(self):
        self.preamble = np.asarray(self.preamble, dtype=np.float64)
        self.pilot_values = np.asarray(self.pilot_values, dtype=np.complex128)
        if self.preamble.ndim != 1 or self.preamble.size == 0:
            raise ValueError("preamble must be a nonempty 1-D array")
        if not np.all(np.abs(self.preamble) == 1.0):
            raise ValueError("preamble must be bipolar (+1/-1)")
        if not np.allclose(np.abs(self.pilot_values), 1.0, atol=1e-12):
            raise ValueError("pilot values must be unit modulus")
        if self.payload_slot_count < 0:
            raise ValueError("payload_slot_count must be >= 0")
        if self.pilot_symbol_index != 0:
            raise ValueError("only a single leading pilot symbol is supported")


def _msequence(degree: int, taps: tuple[int, ...]) -> np.ndarray:
    """Maximal-length sequence from a Fibonacci LFSR, all-ones start state.

    ``taps`` are the exponents of the feedback polynomial
    x^m + x^t1 + ... + 1; the output has period 2**m - 1.
    """
    n = 2**degree - 1
    state = [1] * degree
    bits = np.empty(n, dtype=np.uint8)
    for i in range(n):
        bits[i] = state[-1]
        fb = 0
        for t in taps:
            fb ^= state[t - 1]
        state = [fb] + state[:-1]
    return bits


def gold_sequence(degree: int, index: int, length: int) -> np.ndarray:
    """Return one bipolar Gold sequence of the given family.

    ``index`` selects a family member: 0 and 1 are the two preferred
    m-sequences, and index k >= 2 is their XOR with the second sequence
    cyclically shifted by k - 2.  The family therefore holds
    2**degree + 1 sequences with three-valued cross-correlation.
    """
    if degree not in _PREFERRED_PAIRS:
        raise ValueError(
            f"unsupported degree {degree}; choose one of {sorted(_PREFERRED_PAIRS)}"
        )
    n = 2**degree - 1
    if not 0 < length <= n:
        raise ValueError(f"length must lie in [1, {n}], got {length}")
    if not 0 <= index <= 2**degree:
        raise ValueError(f"index must lie in [0, {2**degree}], got {index}")
    taps_u, taps_v = _PREFERRED_PAIRS[degree]
    u = _msequence(degree, taps_u)
    v = _msequence(degree, taps_v)
    if index == 0:
        bits = u
    elif index == 1:
        bits = v
    else:
        bits = u ^ np.roll(v, -(index - 2))
    return (1.0 - 2.0 * bits[:length]).astype(np.float64)


def make_pilot_values(subcarriers: int, seed: int = PILOT_SEED) -> np.ndarray:
    """Fixed unit-modulus QPSK pilot symbol known to both link ends."""
    rng = np.random.default_rng(seed)
    quadrant = rng.integers(0, 4, size=subcarriers)
    return np.exp(1j * (np.pi / 4 + np.pi / 2 * quadrant))


def _occupied_slice(cfg: GridConfig) -> slice:
    lo = (cfg.fft_size - cfg.subcarriers) // 2
    return slice(lo, lo + cfg.subcarriers)


def subcarrier_bins(cfg: GridConfig) -> np.ndarray:
    """Physical FFT bin index for each subcarrier (after ifftshift)."""
    occ = _occupied_slice(cfg)
    centered = np.arange(occ.start, occ.stop)
    return (centered - cfg.fft_size // 2) % cfg.fft_size


def ofdm_modulate(grid: ResourceGrid, cfg: GridConfig) -> TimeSignal:
    """Unitary IFFT per symbol plus cyclic prefix, symbols concatenated."""
    data = grid.data
    if data.shape != (cfg.symbols_per_slot, cfg.subcarriers):
        raise ValueError(
            f"grid shape {data.shape} does not match config "
            f"({cfg.symbols_per_slot}, {cfg.subcarriers})"
        )
    spectrum = np.zeros((data.shape[0], cfg.fft_size), dtype=np.complex128)
    spectrum[:, _occupied_slice(cfg)] = data
    time = np.fft.ifft(np.fft.ifftshift(spectrum, axes=1), axis=1, norm="ortho")
    with_cp = np.concatenate([time[:, cfg.fft_size - cfg.cp_len:], time], axis=1)
    return TimeSignal(with_cp.reshape(-1), cfg.sample_rate)


def ofdm_demodulate(signal: TimeSignal, cfg: GridConfig, start: int = 0) -> ResourceGrid:
    """Strip cyclic prefixes and FFT back to a (symbols, subcarriers) grid."""
    need = cfg.symbols_per_slot * cfg.symbol_len
    if start < 0 or start + need > signal.samples.size:
        raise ValueError(
            f"demodulation window [{start}, {start + need}) exceeds signal "
            f"of {signal.samples.size} samples"
        )
    seg = signal.samples[start:start + need].reshape(cfg.symbols_per_slot, cfg.symbol_len)
    useful = seg[:, cfg.cp_len:]
    spectrum = np.fft.fftshift(np.fft.fft(useful, axis=1, norm="ortho"), axes=1)
    return ResourceGrid(spectrum[:, _occupied_slice(cfg)])


def compose_frame(
    preamble_samples: np.ndarray,
    pilot_row: np.ndarray,
    payload_grids: list[ResourceGrid],
    cfg: GridConfig,
) -> TimeSignal:
    """Concatenate an arbitrary preamble burst, one pilot symbol and payload.

    This is the shared frame builder: :func:`assemble_frame` uses it for
    clean transmit frames, and the uplink simulation uses it directly when
    the pilot row or payload has already been scaled or faded.
    """
    pilot_row = np.asarray(pilot_row, dtype=np.complex128)
    if pilot_row.shape != (cfg.subcarriers,):
        raise ValueError("pilot row must hold one value per subcarrier")
    pilot_cfg = dataclasses.replace(cfg, symbols_per_slot=1)
    parts = [np.asarray(preamble_samples, dtype=np.complex128)]
    parts.append(ofdm_modulate(ResourceGrid(pilot_row[None, :]), pilot_cfg).samples)
    for g in payload_grids:
        parts.append(ofdm_modulate(g, cfg).samples)
    return TimeSignal(np.concatenate(parts), cfg.sample_rate)


def assemble_frame(
    frame_spec: FrameSpec,
    payload: list[ResourceGrid],
    cfg: GridConfig,
    reference_amplitude: float = 1.0,
) -> TimeSignal:
    """Build one transmit frame: preamble, pilot symbol, payload slots.

    ``reference_amplitude`` scales the preamble and pilot symbol only (the
    payload is assumed to carry its own power scaling already); the default
    of 1.0 leaves the reference parts at unit amplitude.  Total length is
    ``len(preamble) + (1 + payload_slot_count * symbols_per_slot) *
    (fft_size + cp_len)`` samples.
    """
    if len(payload) != frame_spec.payload_slot_count:
        raise ValueError(
            f"payload holds {len(payload)} slots, frame expects "
            f"{frame_spec.payload_slot_count}"
        )
    if frame_spec.pilot_values.shape != (cfg.subcarriers,):
        raise ValueError("pilot values must hold one value per subcarrier")
    return compose_frame(
        frame_spec.preamble.astype(np.complex128) * reference_amplitude,
        frame_spec.pilot_values * reference_amplitude,
        payload,
        cfg,
    )


def detect_frame(signal: TimeSignal, preamble: np.ndarray) -> tuple[int, float]:
    """Correlation-based frame start detection.

    Returns ``(offset, peak_metric)`` where ``offset`` maximizes the squared
    correlation *normalized by the windowed signal energy* and
    ``peak_metric`` is that normalized value (1.0 for a perfect noise-free
    match, near 0 for pure noise).  Normalizing before the argmax matters
    when several users share the medium: a raw-correlation argmax can be
    captured by the cross-correlation sidelobe of a much stronger user's
    preamble, while the normalized metric at such a lag is crushed by the
    strong user's window energy.  By Cauchy-Schwarz the metric never
    exceeds 1, and windows only partially overlapping the preamble are
    bounded by their overlap fraction, so empty stretches cannot win
    either.  A value above roughly 0.3 indicates a genuine preamble at
    usable SNR.
    """
    p = np.asarray(preamble, dtype=np.complex128)
    s = signal.samples
    if s.size < p.size:
        raise ValueError("signal shorter than preamble")
    corr = np.correlate(s, p, mode="valid")
    power = np.abs(s) ** 2
    csum = np.concatenate([[0.0], np.cumsum(power)])
    window_energy = csum[p.size:] - csum[:-p.size]
    denom = window_energy * np.sum(np.abs(p) ** 2)
    ratio = np.divide(
        np.abs(corr) ** 2, denom,
        out=np.zeros(corr.size), where=denom > 0.0,
    )
    offset = int(np.argmax(ratio))
    return offset, min(float(ratio[offset]), 1.0)
