"""SISO-OFDM link simulation: framing, channel, equalizers, SER.

Block-pilot subframes (a few whole pilot symbols followed by payload
symbols), unitary FFT scaling, linear-convolution channel with AWGN.  The
equalizer zoo: per-subcarrier ZF with perfect channel knowledge, LS / MMSE
channel estimation with MMSE equalization, and the ESN that learns the
time-domain inverse from the pilot span.
"""

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .channel import sample_cn
from .errors import IndexOutOfRange, ShapeMismatch, SpectralNull
from .esn import StateTrajectory, run_states, train_readout

CONSTELLATION_BITS = {"qpsk": 2, "qam16": 4, "qam64": 6}


@dataclass
class OfdmConfig:
    fft_size: int = 256
    cp_len: int = 40
    n_pilot_syms: int = 4
    n_data_syms: int = 13
    constellation: str = "qam16"

    def __post_init__(self):
        if self.fft_size < 2 or self.fft_size & (self.fft_size - 1):
            raise ValueError(f"fft_size must be a power of two, got {self.fft_size}")
        if self.constellation not in CONSTELLATION_BITS:
            raise ValueError(f"unknown constellation {self.constellation!r}")
        if self.cp_len < 0 or self.n_pilot_syms < 1 or self.n_data_syms < 1:
            raise ValueError("cp_len >= 0 and at least one pilot/data symbol required")

    @property
    def bits_per_symbol(self):
        return CONSTELLATION_BITS[self.constellation]

    @property
    def symbol_len(self):
        return self.fft_size + self.cp_len

    @property
    def n_syms(self):
        return self.n_pilot_syms + self.n_data_syms


@dataclass
class Subframe:
    """One transmitted subframe: grids, ground truth and the waveform."""

    pilot_grid: np.ndarray
    data_grid: np.ndarray
    symbol_indices: np.ndarray   # fft_size x n_syms ground truth
    tx_time: np.ndarray


@dataclass
class SerResult:
    ebn0_db: float
    ser: float
    n_symbols: int
    n_errors: int
    method: str
    seed: int


def _gray_decode(g):
    g = np.asarray(g).copy()
    for shift in (1, 2, 4):  # prefix xor; exact for codes below 2^8
        g ^= g >> shift
    return g


def _gray_encode(b):
    b = np.asarray(b)
    return b ^ (b >> 1)


@lru_cache(maxsize=None)
def constellation_points(name):
    """Gray-mapped square constellation, unit average symbol energy."""
    bits = CONSTELLATION_BITS[name]
    half = bits // 2
    m_axis = 1 << half
    idx = np.arange(1 << bits)
    lvl_i = _gray_decode(idx >> half)
    lvl_q = _gray_decode(idx & (m_axis - 1))
    amp = lambda lvl: 2.0 * lvl - (m_axis - 1)
    pts = amp(lvl_i) + 1j * amp(lvl_q)
    return pts / np.sqrt(2.0 * (m_axis * m_axis - 1) / 3.0)


def modulate(indices, constellation):
    indices = np.asarray(indices)
    pts = constellation_points(constellation)
    if indices.size and (indices.min() < 0 or indices.max() >= len(pts)):
        raise IndexOutOfRange(f"symbol index outside [0, {len(pts)})")
    return pts[indices]


def demap(values, constellation):
    """Nearest-constellation-point hard decision, exact per-axis quantizer."""
    bits = CONSTELLATION_BITS[constellation]
    half = bits // 2
    m_axis = 1 << half
    scale = np.sqrt(2.0 * (m_axis * m_axis - 1) / 3.0)
    values = np.asarray(values, dtype=complex) * scale

    def axis_level(x):
        lvl = np.round((x + (m_axis - 1)) / 2.0).astype(int)
        return np.clip(lvl, 0, m_axis - 1)

    return (_gray_encode(axis_level(values.real)) << half) | _gray_encode(
        axis_level(values.imag)
    )


def build_subframe(cfg, rng):
    """Random subframe: uniform indices, unitary IFFT, CP prepend."""
    indices = rng.integers(0, 1 << cfg.bits_per_symbol, size=(cfg.fft_size, cfg.n_syms))
    grid = modulate(indices, cfg.constellation)
    time_syms = np.fft.ifft(grid, axis=0) * np.sqrt(cfg.fft_size)
    with_cp = np.concatenate([time_syms[-cfg.cp_len :, :], time_syms], axis=0) \
        if cfg.cp_len else time_syms
    tx = with_cp.T.reshape(-1)
    return Subframe(
        pilot_grid=grid[:, : cfg.n_pilot_syms],
        data_grid=grid[:, cfg.n_pilot_syms :],
        symbol_indices=indices,
        tx_time=tx,
    )


def apply_channel(tx, realization, noise_var, rng):
    """Linear convolution with the taps plus circular complex AWGN."""
    if noise_var < 0:
        raise ValueError("noise_var must be nonnegative")
    rx = np.convolve(tx, realization.taps)[: len(tx)]
    if noise_var > 0.0:
        rx = rx + sample_cn(rng, len(rx), var=noise_var)
    return rx


def ebn0_to_noise_var(ebn0_db, constellation, es_per_sample=1.0, charge_cp=False, cfg=None):
    """Per-sample noise variance for a target Eb/N0.

    ``noise_var = Es / (bits * 10^(ebn0/10))`` with Es the measured average
    transmit sample power.  CP overhead is not charged to Eb unless
    ``charge_cp`` is set (then the energy of the prefix is attributed to the
    payload bits, raising the noise floor by (fft+cp)/fft).
    """
    bits = CONSTELLATION_BITS[constellation]
    factor = 1.0
    if charge_cp:
        if cfg is None:
            raise ValueError("charge_cp requires the OFDM config")
        factor = cfg.symbol_len / cfg.fft_size
    return factor * es_per_sample / (bits * 10.0 ** (ebn0_db / 10.0))


def rx_grid(rx_time, cfg, first_symbol, n_symbols):
    """CP removal + unitary FFT for a run of OFDM symbols."""
    out = np.empty((cfg.fft_size, n_symbols), dtype=complex)
    for s in range(n_symbols):
        start = (first_symbol + s) * cfg.symbol_len + cfg.cp_len
        out[:, s] = np.fft.fft(rx_time[start : start + cfg.fft_size]) / np.sqrt(
            cfg.fft_size
        )
    return out


def zf_perfect_csi(grid, realization, cfg):
    """Zero-forcing with perfect channel knowledge, per subcarrier."""
    response = np.fft.fft(realization.taps, n=cfg.fft_size)
    mags = np.abs(response)
    worst = int(np.argmin(mags))
    if mags[worst] <= 1e-9:
        raise SpectralNull(f"spectral null at subcarrier {worst}", index=worst)
    return demap(grid / response[:, None], cfg.constellation)


def ls_estimate(rx_pilot_grid, pilot_grid):
    """LS channel estimate: mean of Y/X over the pilot symbols."""
    return np.mean(rx_pilot_grid / pilot_grid, axis=1)


def mmse_estimate(rx_pilot_grid, pilot_grid, noise_var):
    """Wiener-shrunk LS estimate.

    The per-subcarrier signal variance is estimated empirically from the
    spread of the per-symbol LS estimates across the pilot block; with a
    single pilot symbol or no noise the shrink factor degenerates to 1.
    """
    per_sym = rx_pilot_grid / pilot_grid
    h_ls = per_sym.mean(axis=1)
    n_pilot = pilot_grid.shape[1]
    if noise_var <= 0.0 or n_pilot < 2:
        return h_ls
    sigma_h2 = np.mean(np.abs(per_sym - h_ls[:, None]) ** 2, axis=1)
    est_noise = noise_var / (n_pilot * np.mean(np.abs(pilot_grid) ** 2, axis=1))
    denom = sigma_h2 + est_noise
    shrink = np.where(denom > 0, sigma_h2 / np.where(denom > 0, denom, 1.0), 1.0)
    return h_ls * shrink


def mmse_equalize(grid, h_hat, noise_var, cfg):
    """Per-subcarrier MMSE equalizer followed by hard decisions."""
    soft = h_hat.conj()[:, None] * grid / (np.abs(h_hat[:, None]) ** 2 + noise_var)
    return demap(soft, cfg.constellation)


def esn_equalize(model, subframe, rx_time, cfg, washout=None, ridge=None):
    """Train the readout on the pilot span and detect the payload.

    The reservoir runs once over the whole received waveform; the readout is
    fitted to reproduce the transmitted pilot waveform (after washout), then
    applied to the data span, whose symbols are FFT-demapped.  Returns
    ``(index_grid, trained_model)``.
    """
    if washout is None:
        washout = cfg.cp_len
    pilot_len = cfg.n_pilot_syms * cfg.symbol_len
    washout = min(washout, pilot_len - 1)
    traj = run_states(model, rx_time)
    pilot_traj = StateTrajectory(states=traj.states[:, :pilot_len], washout=washout)
    trained = train_readout(model, pilot_traj, subframe.tx_time[:pilot_len], ridge=ridge)
    xhat = (trained.w_out @ traj.states)[0]
    data = rx_grid(xhat, cfg, cfg.n_pilot_syms, cfg.n_data_syms)
    return demap(data, cfg.constellation), trained


def measure_ser(estimated, truth, ebn0_db=float("nan"), method="", seed=0):
    """Fraction of mismatched symbol indices over a payload grid."""
    estimated = np.asarray(estimated)
    truth = np.asarray(truth)
    if estimated.shape != truth.shape:
        raise ShapeMismatch(f"grid shapes differ: {estimated.shape} vs {truth.shape}")
    n_symbols = estimated.size
    n_errors = int(np.count_nonzero(estimated != truth))
    return SerResult(
        ebn0_db=float(ebn0_db),
        ser=n_errors / n_symbols,
        n_symbols=n_symbols,
        n_errors=n_errors,
        method=method,
        seed=int(seed),
    )
