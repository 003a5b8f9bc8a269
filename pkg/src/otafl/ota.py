"""End-to-end analog-aggregation rounds and experiment loops.

One uplink round, as simulated here:

1.  Every client trains locally and forms a delta update against the
    current global model.
2.  Clients agree (over an error-free control channel) on a common pair of
    I/Q peak scales so the analog sum can be descaled without bias.
3.  A sounding pass carries known pilots through each client's channel.
    The receiver locks its frame timing to the earliest detected preamble
    and estimates every client's *effective* channel at that common
    reference -- the estimate then absorbs both the fading gain and the
    per-client timing phase ramp, so channel inversion pre-compensates
    residual sample offsets that fall inside the cyclic prefix.
4.  Updates are mapped to payload grids, divided by the estimates, scaled
    by the shared power-control factor alpha and transmitted
    simultaneously; the multiple-access channel sums them in the air.
5.  The receiver detects the superposed frame, demodulates the payload,
    descales by M * alpha and the shared peak scales, and applies the
    recovered average update to the global model.

Each client prepends its own Gold preamble in a dedicated time slot of the
preamble region (staggered, like sounding reference signals), keeping the
normalized detection metric meaningful per client.  Pilot subcarriers are
either interleaved combs (one superposed sounding frame, suited to
frequency-flat channels) or full-band per-client sounding frames
(one frame per client, required when the channel decorrelates across
subcarriers).
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import fl
from .accounting import (
    DEFAULT_SPECTRAL_EFFICIENCY,
    EnergyModel,
    SpectralProfile,
    digital_slots,
    format_from_grid,
    round_energy,
)
from .channel import ChannelModel, LinkBudget, decorrelate, realize_channel, superpose
from .csi import ChannelEstimate, interpolate, ls_estimate, nmse, quantize_estimate
from .grid import (
    GridConfig,
    ResourceGrid,
    TimeSignal,
    detect_frame,
    gold_sequence,
    make_pilot_values,
    ofdm_demodulate,
    ofdm_modulate,
    subcarrier_bins,
)
from .precode import DEFAULT_FLOOR_REL, channel_invert, compute_alpha, inversion_floor
from .sync import SyncConfig, draw_offsets, draw_phase_offsets
from .weightcodec import map_to_grids, pack_complex, scale_updates, slot_plan, unmap_from_grids

CSI_MODES = ("estimated", "perfect")
PILOT_ALLOCATIONS = ("fdm_comb", "tdm_full")
SCALE_MODES = ("common", "per_client")
MODES = ("ota", "digital_fp32", "digital_int8")

DETECT_THRESHOLD = 0.3

# Stream tags for deterministic seed derivation.
_TAG_INIT = 11
_TAG_DATA = 12
_TAG_TRAIN = 13
_TAG_CHANNEL = 14
_TAG_DECORR = 15
_TAG_SYNC = 16
_TAG_PHASE = 17
_TAG_NOISE_SOUND = 18
_TAG_NOISE_PAYLOAD = 19


def derive_seed(*parts: int) -> np.random.SeedSequence:
    """Stable child seed for a (master, round, ue, purpose) tuple."""
    return np.random.SeedSequence(list(parts))


def data_seeds(master_seed: int, ue: int):
    """(shared, per-client) dataset seeds; fixed per master seed, not per round."""
    return derive_seed(master_seed, _TAG_DATA), derive_seed(master_seed, ue, _TAG_DATA)


@dataclass(frozen=True)
class PhyConfig:
    """Everything the physical layer needs for one experiment."""

    grid: GridConfig = GridConfig()
    channel: ChannelModel = ChannelModel()
    budget: LinkBudget = LinkBudget()
    sync: SyncConfig = SyncConfig()
    peak_power: float = 1.0
    margin: float = 0.9
    floor_rel: float = DEFAULT_FLOOR_REL
    csi_mode: str = "estimated"
    pilot_allocation: str = "fdm_comb"
    scale_mode: str = "common"
    uplink_snr_db: float | None = 20.0
    decorrelation: float = 0.0
    feedback_quant_bits: int = 0
    preamble_degree: int = 7
    detect_threshold: float = DETECT_THRESHOLD

    def __post_init__(self):
        if self.csi_mode not in CSI_MODES:
            raise ValueError(f"unknown csi_mode {self.csi_mode!r}")
        if self.pilot_allocation not in PILOT_ALLOCATIONS:
            raise ValueError(f"unknown pilot_allocation {self.pilot_allocation!r}")
        if self.scale_mode not in SCALE_MODES:
            raise ValueError(f"unknown scale_mode {self.scale_mode!r}")
        if self.peak_power <= 0 or not 0 < self.margin <= 1 or self.floor_rel < 0:
            raise ValueError("peak_power, margin, floor_rel out of range")
        if not 0 <= self.decorrelation <= 1:
            raise ValueError("decorrelation must lie in [0, 1]")

    @property
    def preamble_len(self) -> int:
        return 2**self.preamble_degree - 1

    @property
    def preamble_slot_len(self) -> int:
        """Preamble plus a guard gap, so one user's late arrival does not
        leak into the next user's correlation window and distort its
        normalized detection metric (ruinous under near-far power spreads)."""
        return self.preamble_len + self.grid.cp_len

    def preamble_region_len(self, num_ues: int) -> int:
        return num_ues * self.preamble_slot_len

    @property
    def reference_amplitude(self) -> float:
        """Amplitude of preamble/pilot parts: stays inside the power budget."""
        return self.margin * np.sqrt(self.peak_power)


@dataclass
class AggregateReport:
    """Everything observable about one analog aggregation."""

    recovered: np.ndarray
    exact_avg: np.ndarray
    alpha: float
    slots: int
    aborted: bool
    abort_reason: str
    agg_nmse_db: float
    offsets: np.ndarray
    peak_metrics: np.ndarray
    max_re_power: np.ndarray
    shared_scales: tuple[float, float]


@dataclass
class RoundTrace:
    """Per-round record emitted by experiments."""

    round_index: int
    mode: str
    agg_nmse_db: float
    loss_per_ue: np.ndarray
    global_loss: float
    alpha: float
    slots_used: int
    energy_j: float
    aborted: bool = False


@dataclass
class ExperimentResult:
    mode: str
    traces: list[RoundTrace]
    final_theta: np.ndarray

    @property
    def total_slots(self) -> int:
        return sum(t.slots_used for t in self.traces)

    @property
    def total_energy_j(self) -> float:
        return sum(t.energy_j for t in self.traces)

    @property
    def all_aborted(self) -> bool:
        return all(t.aborted for t in self.traces)


def _map_ues(fn, items):
    """Apply ``fn`` per UE, optionally on a small thread pool.

    The worker count comes from the OTAFL_THREADS environment variable and
    never changes results: every item is independent and seeded, and the
    output order is fixed.
    """
    workers = int(os.environ.get("OTAFL_THREADS", "1"))
    if workers <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def _target_noise_variance(clean: TimeSignal, snr_db: float | None,
                           info_start: int = 0) -> float:
    """Receiver noise variance for a target received SNR.

    The SNR is pinned to the mean power of the information-bearing part of
    the noise-free superposition -- the pilot symbol for sounding events,
    the payload slots for data events -- starting at ``info_start``.
    Pegging to the whole event would let the strong constant-amplitude
    preamble dominate the reference power, so a payload attenuated by
    power control would see a far worse SNR than the knob claims.
    """
    if snr_db is None:
        return 0.0
    seg = clean.samples[info_start:]
    if seg.size == 0:
        seg = clean.samples
    power = float(np.mean(np.abs(seg) ** 2))
    return power / 10.0 ** (snr_db / 10.0)


def _add_noise(clean: TimeSignal, variance: float, seed) -> TimeSignal:
    if variance <= 0:
        return clean
    rng = np.random.default_rng(seed)
    n = (rng.standard_normal(clean.samples.size) + 1j * rng.standard_normal(clean.samples.size))
    return TimeSignal(clean.samples + np.sqrt(variance / 2.0) * n, clean.sample_rate)


def _ue_signal(
    ue: int,
    num_ues: int,
    phy: PhyConfig,
    gains: np.ndarray,
    phase: float,
    pilot_mask: np.ndarray,
    payload_grids: list[ResourceGrid],
    pilot_symbols: int = 1,
) -> TimeSignal:
    """Post-channel transmit frame of one UE (before delay and noise).

    Fading is applied per subcarrier in the frequency domain; the preamble
    burst, which is a raw time-domain sequence, is scaled by the channel's
    RMS gain instead (a scalar stand-in that preserves detection power).
    Sounding frames repeat the pilot row over ``pilot_symbols`` OFDM
    symbols so the receiver can average down the estimation noise; payload
    frames carry a single pilot symbol.
    """
    cfg = phy.grid
    lp = phy.preamble_len
    slot = phy.preamble_slot_len
    rot = np.exp(1j * phase)
    preamble_region = np.zeros(phy.preamble_region_len(num_ues), dtype=np.complex128)
    p = gold_sequence(phy.preamble_degree, ue, lp)
    amp = phy.reference_amplitude
    preamble_region[ue * slot:ue * slot + lp] = amp * _rms_gain_arr(gains) * p * rot
    pilot_row = amp * make_pilot_values(cfg.subcarriers) * pilot_mask * gains * rot
    pilot_cfg = replace(cfg, symbols_per_slot=pilot_symbols)
    pilot_grid = ResourceGrid(np.broadcast_to(pilot_row, (pilot_symbols, cfg.subcarriers)).copy())
    parts = [preamble_region, ofdm_modulate(pilot_grid, pilot_cfg).samples]
    for g in payload_grids:
        parts.append(ofdm_modulate(ResourceGrid(g.data * gains[None, :] * rot), cfg).samples)
    return TimeSignal(np.concatenate(parts), cfg.sample_rate)


def _rms_gain_arr(gains: np.ndarray) -> float:
    return float(np.sqrt(np.mean(np.abs(gains) ** 2)))


def _detect_all(
    rx: TimeSignal,
    num_ues: int,
    phy: PhyConfig,
    only_ue: int | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Per-UE preamble detection against a common frame timeline.

    Each UE's preamble lives in its own slot of the preamble region, so the
    position argmax minus the slot start is that UE's arrival offset.
    """
    ues = range(num_ues) if only_ue is None else [only_ue]
    offsets = np.zeros(num_ues, dtype=np.int64)
    metrics = np.zeros(num_ues)
    slot = phy.preamble_slot_len
    for ue in ues:
        p = gold_sequence(phy.preamble_degree, ue, phy.preamble_len)
        raw, metric = detect_frame(rx, p)
        offsets[ue] = max(0, raw - ue * slot)
        metrics[ue] = metric
    return offsets, metrics


def _pilot_positions(ue: int, num_ues: int, cfg: GridConfig, allocation: str) -> np.ndarray:
    if allocation == "tdm_full":
        return np.arange(cfg.subcarriers)
    return np.arange(ue, cfg.subcarriers, num_ues)


def _phase_ramp(cfg: GridConfig, delay: int) -> np.ndarray:
    """Per-subcarrier rotation caused by sampling ``delay`` samples early."""
    bins = subcarrier_bins(cfg)
    return np.exp(-2j * np.pi * bins * delay / cfg.fft_size)


def ota_aggregate(
    deltas: list[np.ndarray],
    phy: PhyConfig,
    master_seed: int = 0,
    round_index: int = 0,
) -> AggregateReport:
    """Carry client updates through the full analog uplink once.

    Returns the recovered average update together with the exact digital
    average, power-control and detection diagnostics.  A detection metric
    below ``phy.detect_threshold`` for any client aborts the round: the
    recovered update is zero and the caller leaves the global model
    unchanged.
    """
    num_ues = len(deltas)
    cfg = phy.grid
    if num_ues < 1:
        raise ValueError("need at least one UE")
    if num_ues > 2**phy.preamble_degree + 1:
        raise ValueError("more UEs than Gold sequences in the preamble family")
    if phy.pilot_allocation == "fdm_comb" and num_ues > cfg.subcarriers:
        raise ValueError("comb pilots need num_ues <= subcarriers")
    param_count = deltas[0].size
    for d in deltas:
        if d.shape != (param_count,):
            raise ValueError("all deltas must be equal-length vectors")
    plan = slot_plan(param_count, cfg)
    exact_avg = fl.average_deltas(deltas)

    def _report(recovered, alpha, aborted, reason, offsets, metrics, powers, scales):
        if float(np.sum(np.abs(exact_avg) ** 2)) == 0.0:
            agg = -300.0 if np.array_equal(recovered, exact_avg) else 0.0
        else:
            agg = nmse(recovered, exact_avg)
        return AggregateReport(
            recovered, exact_avg, alpha, plan.slots, aborted, reason,
            agg, offsets, metrics, powers, scales,
        )

    # --- common scale negotiation (error-free control channel) -----------
    if phy.scale_mode == "common":
        peaks = np.array([
            [np.max(np.abs(d[0::2])) if d[0::2].size else 0.0,
             np.max(np.abs(d[1::2])) if d[1::2].size else 0.0]
            for d in deltas
        ])
        shared = (
            float(peaks[:, 0].max()) or 1.0,
            float(peaks[:, 1].max()) or 1.0,
        )
        scaled = [scale_updates(d, shared) for d in deltas]
        descale = shared
    else:
        scaled = [scale_updates(d) for d in deltas]
        # receiver cannot undo per-client scales after the analog sum; it
        # descales with their mean, which reproduces the bias of that variant
        descale = (
            float(np.mean([s.scale_i for s in scaled])),
            float(np.mean([s.scale_q for s in scaled])),
        )

    zeros = np.zeros(param_count)
    no_metrics = np.zeros(num_ues)
    if all(float(np.max(np.abs(d))) == 0.0 for d in deltas):
        # nothing to send: skip the air interface, deliver the exact zero
        return _report(zeros.copy(), 0.0, False, "", np.zeros(num_ues, dtype=np.int64),
                       no_metrics, no_metrics.copy(), descale)

    # --- channel realizations and timing offsets -------------------------
    realizations = []
    payload_realizations = []
    for ue in range(num_ues):
        r = realize_channel(
            phy.channel, phy.budget, cfg.subcarriers,
            derive_seed(master_seed, round_index, ue, _TAG_CHANNEL), ue,
        )
        realizations.append(r)
        if phy.decorrelation > 0:
            payload_realizations.append(decorrelate(
                r, phy.channel, phy.budget, phy.decorrelation,
                derive_seed(master_seed, round_index, ue, _TAG_DECORR),
            ))
        else:
            payload_realizations.append(r)
    offsets = draw_offsets(
        phy.sync, num_ues, cfg.sample_rate,
        seed=derive_seed(master_seed, round_index, _TAG_SYNC),
    )
    phases = draw_phase_offsets(
        phy.sync, num_ues, seed=derive_seed(master_seed, round_index, _TAG_PHASE)
    )

    # --- sounding pass: effective-channel estimates at a common reference -
    masks = []
    for ue in range(num_ues):
        mask = np.zeros(cfg.subcarriers)
        mask[_pilot_positions(ue, num_ues, cfg, phy.pilot_allocation)] = 1.0
        masks.append(mask)

    if phy.csi_mode == "perfect":
        ref = int(offsets.min())
        estimates = []
        for ue in range(num_ues):
            ramp = _phase_ramp(cfg, int(offsets[ue]) - ref)
            eff = payload_realizations[ue].gains * ramp * np.exp(1j * phases[ue])
            full = np.broadcast_to(eff, (cfg.symbols_per_slot, cfg.subcarriers)).copy()
            estimates.append(ChannelEstimate(eff.copy(), full, ue, np.arange(cfg.subcarriers)))
    else:
        n_pilot = cfg.symbols_per_slot
        sounding = [
            _ue_signal(ue, num_ues, phy, realizations[ue].gains, phases[ue],
                       masks[ue], [], pilot_symbols=n_pilot)
            for ue in range(num_ues)
        ]
        pilot_vals = make_pilot_values(cfg.subcarriers)
        amp = phy.reference_amplitude
        if phy.pilot_allocation == "fdm_comb":
            clean = superpose([(s, int(d)) for s, d in zip(sounding, offsets)], 0.0, 0)
            var = _target_noise_variance(clean, phy.uplink_snr_db,
                                         phy.preamble_region_len(num_ues))
            rx = _add_noise(clean, var, derive_seed(master_seed, round_index, _TAG_NOISE_SOUND))
            s_offsets, s_metrics = _detect_all(rx, num_ues, phy)
            if np.any(s_metrics < phy.detect_threshold):
                return _report(zeros.copy(), 0.0, True, "sounding detection failed",
                               s_offsets, s_metrics, no_metrics.copy(), descale)
            ref = int(s_offsets.min())
            rows = [_demod_pilot_block(rx, cfg, ref, num_ues, phy, n_pilot)] * num_ues
        else:
            rows = []
            s_offsets = np.zeros(num_ues, dtype=np.int64)
            s_metrics = np.zeros(num_ues)
            rxs = []
            for ue in range(num_ues):
                clean = superpose([(sounding[ue], int(offsets[ue]))], 0.0, 0)
                var = _target_noise_variance(clean, phy.uplink_snr_db,
                                             phy.preamble_region_len(num_ues))
                rxs.append(_add_noise(
                    clean, var,
                    derive_seed(master_seed, round_index, ue, _TAG_NOISE_SOUND),
                ))
                o, m = _detect_all(rxs[ue], num_ues, phy, only_ue=ue)
                s_offsets[ue] = o[ue]
                s_metrics[ue] = m[ue]
            if np.any(s_metrics < phy.detect_threshold):
                return _report(zeros.copy(), 0.0, True, "sounding detection failed",
                               s_offsets, s_metrics, no_metrics.copy(), descale)
            ref = int(s_offsets.min())
            rows = [
                _demod_pilot_block(rxs[ue], cfg, ref, num_ues, phy, n_pilot)
                for ue in range(num_ues)
            ]
        estimates = []
        for ue in range(num_ues):
            pos = _pilot_positions(ue, num_ues, cfg, phy.pilot_allocation)
            raw = ls_estimate(rows[ue][pos], amp * pilot_vals[pos])
            est = interpolate(raw, pos, cfg, ue)
            estimates.append(quantize_estimate(est, phy.feedback_quant_bits))

    # --- precode, shared power control ------------------------------------
    payload = [map_to_grids(pack_complex(s.values), plan, cfg) for s in scaled]
    precoded = [
        channel_invert(payload[ue], estimates[ue], inversion_floor(estimates[ue], phy.floor_rel))
        for ue in range(num_ues)
    ]
    alpha = compute_alpha(precoded, phy.peak_power, phy.margin)
    tx_grids = [[ResourceGrid(alpha * g.data) for g in grids] for grids in precoded]
    max_re_power = np.array([
        max(
            max((float(np.max(np.abs(g.data) ** 2)) for g in grids), default=0.0),
            phy.reference_amplitude**2,
        )
        for grids in tx_grids
    ])

    # --- simultaneous payload transmission --------------------------------
    signals = [
        _ue_signal(ue, num_ues, phy, payload_realizations[ue].gains, phases[ue],
                   masks[ue], tx_grids[ue])
        for ue in range(num_ues)
    ]
    clean = superpose([(s, int(d)) for s, d in zip(signals, offsets)], 0.0, 0)
    var = _target_noise_variance(
        clean, phy.uplink_snr_db,
        phy.preamble_region_len(num_ues) + cfg.symbol_len,
    )
    rx = _add_noise(clean, var, derive_seed(master_seed, round_index, _TAG_NOISE_PAYLOAD))
    p_offsets, p_metrics = _detect_all(rx, num_ues, phy)
    if np.any(p_metrics < phy.detect_threshold):
        return _report(zeros.copy(), 0.0, True, "payload detection failed",
                       p_offsets, p_metrics, max_re_power, descale)
    start = int(p_offsets.min())
    frame_body = (1 + plan.slots * cfg.symbols_per_slot) * cfg.symbol_len
    latest = rx.samples.size - (phy.preamble_region_len(num_ues) + frame_body)
    start = max(0, min(start, latest))

    # --- demodulate, descale, compare -------------------------------------
    rx_grids = []
    base = start + phy.preamble_region_len(num_ues) + cfg.symbol_len
    for s in range(plan.slots):
        g = ofdm_demodulate(rx, cfg, base + s * cfg.slot_len)
        rx_grids.append(ResourceGrid(g.data / (num_ues * alpha)))
    recovered = unmap_from_grids(rx_grids, plan, descale, cfg)
    return _report(recovered, alpha, False, "", p_offsets, p_metrics, max_re_power, descale)


def _demod_pilot_block(rx: TimeSignal, cfg: GridConfig, ref: int, num_ues: int,
                       phy: PhyConfig, pilot_symbols: int) -> np.ndarray:
    """Demodulate the sounding pilot symbols and average them.

    All symbols repeat the same pilot row, so the mean keeps the channel
    response while shrinking the noise variance by the symbol count.
    """
    pilot_cfg = replace(cfg, symbols_per_slot=pilot_symbols)
    start = ref + phy.preamble_region_len(num_ues)
    latest = rx.samples.size - pilot_symbols * cfg.symbol_len
    start = max(0, min(start, latest))
    return ofdm_demodulate(rx, pilot_cfg, start).data.mean(axis=0)


# ---------------------------------------------------------------------------
# experiment loops


def initial_state(tasks: list[fl.Task], master_seed: int) -> fl.RoundState:
    """Fresh global model shared by every aggregation mode at this seed."""
    counts = {t.param_count for t in tasks}
    if len(counts) != 1:
        raise ValueError("all tasks must share one parameter count")
    theta0 = fl.init_params(
        tasks[0], seed=int(derive_seed(master_seed, _TAG_INIT).generate_state(1)[0])
    )
    return fl.RoundState(theta0, 0)


def train_configs(
    template: fl.TrainConfig, num_ues: int, master_seed: int, round_index: int
) -> list[fl.TrainConfig]:
    """Per-UE training configs with seeds derived from (master, round, ue).

    The derivation never involves the aggregation mode, so digital and
    analog runs at one master seed train on identical minibatch orders.
    """
    return [
        replace(
            template,
            seed=int(derive_seed(master_seed, round_index, ue, _TAG_TRAIN).generate_state(1)[0]),
        )
        for ue in range(num_ues)
    ]


def round_updates(
    state: fl.RoundState,
    tasks: list[fl.Task],
    template: fl.TrainConfig,
    master_seed: int,
) -> list[np.ndarray]:
    """Local training for one round; returns the per-UE delta updates."""
    cfgs = train_configs(template, len(tasks), master_seed, state.round_index)
    locals_ = _map_ues(
        lambda ue: fl.local_train(state.theta, tasks[ue], cfgs[ue]),
        list(range(len(tasks))),
    )
    return [fl.compute_delta(loc, state.theta) for loc in locals_]


def _int8_dequantize(delta: np.ndarray) -> np.ndarray:
    """Symmetric per-tensor int8: scale = max|delta| / 127."""
    peak = float(np.max(np.abs(delta)))
    if peak == 0.0:
        return np.zeros_like(delta)
    scale = peak / 127.0
    q = np.clip(np.round(delta / scale), -127, 127)
    return q * scale


def run_ota_round(
    state: fl.RoundState,
    tasks: list[fl.Task],
    train_cfgs: list[fl.TrainConfig],
    phy: PhyConfig,
    master_seed: int,
    energy_model: EnergyModel = EnergyModel(),
) -> tuple[fl.RoundState, RoundTrace]:
    """One full analog round: train, aggregate over the air, apply."""
    num_ues = len(tasks)
    locals_ = _map_ues(
        lambda ue: fl.local_train(state.theta, tasks[ue], train_cfgs[ue]),
        list(range(num_ues)),
    )
    deltas = [fl.compute_delta(loc, state.theta) for loc in locals_]
    report = ota_aggregate(deltas, phy, master_seed, state.round_index)
    if report.aborted:
        new_theta = state.theta.copy()
    else:
        new_theta = fl.apply_global(state.theta, report.recovered)
    loss_per_ue = np.array([fl.evaluate_loss(new_theta, t) for t in tasks])
    trace = RoundTrace(
        round_index=state.round_index,
        mode="ota",
        agg_nmse_db=report.agg_nmse_db,
        loss_per_ue=loss_per_ue,
        global_loss=float(np.mean(loss_per_ue)),
        alpha=report.alpha,
        slots_used=report.slots,
        energy_j=round_energy(num_ues, report.slots, energy_model),
        aborted=report.aborted,
    )
    return fl.RoundState(new_theta, state.round_index + 1), trace


def run_digital_round(
    state: fl.RoundState,
    tasks: list[fl.Task],
    train_cfgs: list[fl.TrainConfig],
    mode: str,
    profile: SpectralProfile,
    fmt,
    energy_model: EnergyModel = EnergyModel(),
) -> tuple[fl.RoundState, RoundTrace]:
    """Digital FedAvg baseline round (fp32 exact or int8-quantized uploads)."""
    if mode not in ("digital_fp32", "digital_int8"):
        raise ValueError(f"not a digital mode: {mode!r}")
    num_ues = len(tasks)
    locals_ = _map_ues(
        lambda ue: fl.local_train(state.theta, tasks[ue], train_cfgs[ue]),
        list(range(num_ues)),
    )
    deltas = [fl.compute_delta(loc, state.theta) for loc in locals_]
    exact = fl.average_deltas(deltas)
    if mode == "digital_int8":
        sent = fl.average_deltas([_int8_dequantize(d) for d in deltas])
        bits = 8
    else:
        sent = exact
        bits = 32
    agg_db = -300.0 if mode == "digital_fp32" else (
        nmse(sent, exact) if float(np.sum(np.abs(exact) ** 2)) > 0 else -300.0
    )
    new_theta = fl.apply_global(state.theta, sent)
    loss_per_ue = np.array([fl.evaluate_loss(new_theta, t) for t in tasks])
    param_count = state.theta.size
    slots = digital_slots(param_count, bits, profile, fmt)
    energy = (energy_model.fixed_overhead + slots) * energy_model.slot_energy_j
    trace = RoundTrace(
        round_index=state.round_index,
        mode=mode,
        agg_nmse_db=agg_db,
        loss_per_ue=loss_per_ue,
        global_loss=float(np.mean(loss_per_ue)),
        alpha=0.0,
        slots_used=slots,
        energy_j=energy,
        aborted=False,
    )
    return fl.RoundState(new_theta, state.round_index + 1), trace


def run_experiment(
    mode: str,
    rounds: int,
    tasks: list[fl.Task],
    train_template: fl.TrainConfig,
    phy: PhyConfig,
    master_seed: int,
    profile: SpectralProfile | None = None,
    energy_model: EnergyModel = EnergyModel(),
) -> ExperimentResult:
    """Run ``rounds`` federated rounds in one aggregation mode.

    Training seeds are derived from (master seed, round, ue) only, so the
    local models -- and therefore the updates entering aggregation -- are
    identical across modes with the same master seed.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; choose from {MODES}")
    if rounds < 1:
        raise ValueError("rounds must be >= 1")
    num_ues = len(tasks)
    if num_ues < 1:
        raise ValueError("need at least one task")
    if profile is None:
        profile = SpectralProfile.uniform(DEFAULT_SPECTRAL_EFFICIENCY, num_ues)
    fmt = format_from_grid(
        phy.grid.symbols_per_slot, phy.grid.subcarriers, phy.grid.subcarrier_spacing
    )
    state = initial_state(tasks, master_seed)
    traces: list[RoundTrace] = []
    for r in range(rounds):
        cfgs = train_configs(train_template, num_ues, master_seed, r)
        if mode == "ota":
            state, trace = run_ota_round(state, tasks, cfgs, phy, master_seed, energy_model)
        else:
            state, trace = run_digital_round(state, tasks, cfgs, mode, profile, fmt, energy_model)
        traces.append(trace)
    return ExperimentResult(mode, traces, state.theta)
