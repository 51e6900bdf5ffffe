"""Command-line harness: weight derivation, SER sweeps, rank checks, plots.

Subcommands
-----------
derive-weights : channel statistics -> basis -> rational fits -> weight file
run-ser        : paired-seed SER sweep over the five receive methods -> CSV
verify-rank    : Monte-Carlo eigen-spectrum of the stacked channel inverse
plot           : render SER CSVs as a self-contained SVG

Every run writes a manifest (config hash, timings, warning counts).  All
randomness descends from one base seed, so identical config + seed give
byte-identical CSV and weight files.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

import argparse
import copy
import hashlib
import json
import logging
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # python 3.10
    import tomli as tomllib

from . import __version__
from .basis import empirical_covariance, epsilon_rank, optimum_basis, stack_real_imag
from .channel import (
    ChannelStatistics,
    RngStream,
    channel_inverse_freq,
    is_minimum_phase,
    sample_exp_pdp,
    sample_gaussian,
    sample_tdl,
)
from .errors import ConfigError, EsneqError, SchemaError, SpectralNull
from .esn import init_optimum, init_random
from .ofdm import (
    OfdmConfig,
    apply_channel,
    build_subframe,
    ebn0_to_noise_var,
    esn_equalize,
    ls_estimate,
    measure_ser,
    mmse_equalize,
    mmse_estimate,
    rx_grid,
    zf_perfect_csi,
)
from .ratfit import (
    fit_rational,
    partial_fractions,
    pole_residue_from_dict,
    pole_residue_to_dict,
    save_weight_entries,
    stabilize_poles,
)

log = logging.getLogger("esneq")

METHODS = ("esn-optimum", "esn-random", "zf-perfect", "ls-mmse", "mmse-mmse")
CSV_HEADER = "method,ebn0_db,seed,n_symbols,n_errors,ser"

DEFAULT_CONFIG = {
    "channel": {
        "family": "exp_pdp",      # exp_pdp | tdl
        "n_taps": 10,
        "profile": "",            # path or builtin name (cdl-d, cdl-e)
        "min_phase_only": True,
        "fixed_draw": False,      # one channel realization shared by all trials
    },
    "basis": {
        "n_freq": 128,
        "n_obs": 4000,
        "m": 10,
        "centered": False,
    },
    "fit": {
        "k": 10,
        "k_prime": 9,
        "rho_max": 0.999,
    },
    "esn": {
        "spectral_radius": 0.4,
        "sparsity": 0.6,
        "ridge": -1.0,            # < 0 -> package default ridge floor
        "washout": -1,            # < 0 -> cyclic prefix length
        "activation": "split_tanh",
    },
    "ofdm": {
        "fft_size": 256,
        "cp_len": 40,
        "n_pilot_syms": 4,
        "n_data_syms": 13,
        "constellation": "qam16",
    },
    "sweep": {
        "ebn0_db": [0.0, 2.5, 5.0, 7.5, 10.0, 12.5, 15.0, 17.5, 20.0, 22.5, 25.0],
        "trials": 50,
        "base_seed": 20230901,
    },
    "rank": {
        "n_taps": 3,
        "sigma0": 0.05,
        "n_freq": 64,
        "n_obs": 20000,
        "mean_kind": "flat",      # flat | geometric | two_tap | explicit
        "mean_scale": 2.5,
        "mean_decay": 1.5,
        "mean_delta": 0.55,
        "mean_taps": [],          # explicit [re, im] pairs when mean_kind == explicit
        "eps_points": 13,
    },
}


# ---------------------------------------------------------------------------
# configuration plumbing


def _merge(base, override, prefix=""):
    out = copy.deepcopy(base)
    for key, value in override.items():
        path = f"{prefix}{key}"
        if key not in base:
            raise ConfigError(f"unknown config key {path!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{path!r} must be a table")
            out[key] = _merge(base[key], value, prefix=path + ".")
        else:
            out[key] = value
    return out


def _parse_set(expr):
    if "=" not in expr:
        raise ConfigError(f"--set needs KEY=VALUE, got {expr!r}")
    key, raw = expr.split("=", 1)
    try:
        value = tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        value = raw  # bare string
    tree = value
    for part in reversed(key.strip().split(".")):
        tree = {part: tree}
    return tree


def load_config(path=None, sets=(), seed=None):
    """Defaults, optionally overlaid with a TOML file and --set overrides."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path:
        try:
            with open(path, "rb") as fh:
                cfg = _merge(cfg, tomllib.load(fh))
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {path}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"bad TOML in {path}: {exc}") from exc
    for expr in sets:
        cfg = _merge(cfg, _parse_set(expr))
    if seed is not None:
        cfg["sweep"]["base_seed"] = int(seed)
    _validate(cfg)
    return cfg


def _validate(cfg):
    sweep = cfg["sweep"]
    if not sweep["ebn0_db"]:
        raise ConfigError("sweep.ebn0_db must be non-empty")
    if list(sweep["ebn0_db"]) != sorted(sweep["ebn0_db"]):
        raise ConfigError("sweep.ebn0_db must be sorted ascending")
    if sweep["trials"] < 1:
        raise ConfigError("sweep.trials must be positive")
    for key in ("n_taps",):
        if cfg["channel"][key] < 1:
            raise ConfigError(f"channel.{key} must be positive")
    if cfg["channel"]["family"] not in ("exp_pdp", "tdl"):
        raise ConfigError(f"unknown channel.family {cfg['channel']['family']!r}")
    if cfg["basis"]["m"] < 1 or cfg["basis"]["m"] > cfg["basis"]["n_freq"]:
        raise ConfigError("basis.m must be in [1, basis.n_freq]")
    if cfg["fit"]["k_prime"] >= cfg["fit"]["k"]:
        raise ConfigError("fit.k_prime must be < fit.k")
    if cfg["esn"]["activation"] not in ("linear", "split_tanh"):
        raise ConfigError(f"unknown esn.activation {cfg['esn']['activation']!r}")
    try:
        _ofdm_config(cfg)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def config_hash(cfg):
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _ofdm_config(cfg):
    o = cfg["ofdm"]
    return OfdmConfig(
        fft_size=int(o["fft_size"]),
        cp_len=int(o["cp_len"]),
        n_pilot_syms=int(o["n_pilot_syms"]),
        n_data_syms=int(o["n_data_syms"]),
        constellation=str(o["constellation"]),
    )


# ---------------------------------------------------------------------------
# channel construction


def load_profile(name_or_path):
    """TDL profile from a TOML file or a packaged stand-in name."""
    path = Path(name_or_path)
    if not path.suffix:
        path = Path(__file__).parent / "profiles" / f"{name_or_path}.toml"
    try:
        with open(path, "rb") as fh:
            doc = tomllib.load(fh)
    except FileNotFoundError as exc:
        raise ConfigError(f"profile not found: {name_or_path}") from exc
    for key in ("name", "delays_taps", "powers_db", "k_factors_db"):
        if key not in doc:
            raise ConfigError(f"profile {name_or_path} missing key {key!r}")
    delays = np.asarray(doc["delays_taps"], dtype=int)
    powers = 10.0 ** (np.asarray(doc["powers_db"], dtype=float) / 10.0)
    k_lin = 10.0 ** (np.asarray(doc["k_factors_db"], dtype=float) / 10.0)
    return ChannelStatistics(
        family="tdl",
        n_taps=int(delays.max()) + 1,
        powers=powers,
        k_factors=k_lin,
        delays=delays,
        name=str(doc["name"]),
    )


def make_sampler(chcfg):
    """Returns (draw(rng) -> ChannelRealization, n_taps)."""
    if chcfg["family"] == "exp_pdp":
        n_taps = int(chcfg["n_taps"])
        return (lambda rng: sample_exp_pdp(n_taps, rng)), n_taps
    stats = load_profile(chcfg["profile"] or "cdl-d")
    return (lambda rng: sample_tdl(stats, rng)), stats.n_taps


def draw_channel(sampler, rng, min_phase_only, n_freq_checks, warn):
    """One accepted channel draw; rejects non-minimum-phase draws (when asked)
    and draws whose response carries a spectral null at any needed grid."""
    for _ in range(100000):
        h = sampler(rng)
        if min_phase_only and not is_minimum_phase(h):
            warn["min_phase_rejections"] = warn.get("min_phase_rejections", 0) + 1
            continue
        try:
            for n in n_freq_checks:
                channel_inverse_freq(h, n)
        except SpectralNull:
            warn["spectral_null_redraws"] = warn.get("spectral_null_redraws", 0) + 1
            continue
        return h
    raise EsneqError("channel rejection sampling did not terminate")


# ---------------------------------------------------------------------------
# derive-weights


def derive_entries(cfg, warn=None):
    """Full weight-derivation pipeline; returns (entries, basis)."""
    warn = warn if warn is not None else {}
    rng = RngStream(int(cfg["sweep"]["base_seed"])).child(0xD0)
    sampler, _ = make_sampler(cfg["channel"])
    n_freq = int(cfg["basis"]["n_freq"])
    n_obs = int(cfg["basis"]["n_obs"])
    stacked = np.empty((n_obs, 2 * n_freq))
    for i in range(n_obs):
        h = draw_channel(
            sampler, rng, bool(cfg["channel"]["min_phase_only"]), [n_freq], warn
        )
        stacked[i] = stack_real_imag(channel_inverse_freq(h, n_freq))
    cov = empirical_covariance(stacked, centered=bool(cfg["basis"]["centered"]))
    basis_set = optimum_basis(cov, int(cfg["basis"]["m"]))

    entries = []
    k, k_prime = int(cfg["fit"]["k"]), int(cfg["fit"]["k_prime"])
    rho_max = float(cfg["fit"]["rho_max"])
    for m in range(basis_set.m):
        ra = fit_rational(basis_set.f[:, m], k, k_prime)
        if ra.ridge_fallback:
            warn["ridge_fallbacks"] = warn.get("ridge_fallbacks", 0) + 1
        prs = stabilize_poles(partial_fractions(ra), rho_max=rho_max)
        n_clamped = int(prs.stabilized.sum())
        if n_clamped:
            warn["pole_clamps"] = warn.get("pole_clamps", 0) + n_clamped
        entries.append(
            pole_residue_to_dict(
                prs, k, k_prime, ra.c, ra.d, ra.fit_error, ra.ridge_fallback
            )
        )
    return entries, basis_set


def model_from_entries(entries, rho_max, activation):
    sets = [pole_residue_from_dict(e) for e in entries]
    return init_optimum(sets, rho_max=rho_max, activation=activation)


def cmd_derive_weights(cfg, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    warn, stages = {}, {}
    t0 = time.perf_counter()
    entries, basis_set = derive_entries(cfg, warn)
    stages["derive"] = time.perf_counter() - t0

    from .basis import save_basis

    save_basis(out / "basis.json", basis_set)
    weight_path = out / "weights.json"
    save_weight_entries(
        weight_path,
        entries,
        meta={
            "config_hash": config_hash(cfg),
            "n_freq": int(cfg["basis"]["n_freq"]),
            "m": int(cfg["basis"]["m"]),
            "activation": cfg["esn"]["activation"],
            "init_kind": "optimum",
            "version": __version__,
        },
    )
    with open(out / "fit_errors.csv", "w", encoding="utf-8") as fh:
        fh.write("m,k,k_prime,fit_error,n_clamped\n")
        for m, entry in enumerate(entries):
            fh.write(
                f"{m},{entry['k']},{entry['k_prime']},"
                f"{entry['fit_error']:.12g},{sum(entry['stabilized'])}\n"
            )
    n_nodes = sum(len(e["poles"]) for e in entries)
    log.info("wrote %s (%d neurons)", weight_path, n_nodes)
    print(f"weights: {weight_path} n_nodes={n_nodes}")
    _write_manifest(out, cfg, "derive-weights", stages, warn)
    return weight_path


# ---------------------------------------------------------------------------
# run-ser


def _trial_rows(cfg, ofdm_cfg, model_opt, ebn0, trial, warn):
    sweep = cfg["sweep"]
    # Key the stream by the Eb/N0 value (centi-dB), not its position in the
    # sweep, so identical points share realizations across grid layouts.
    point_key = int(round(ebn0 * 100.0))
    base = RngStream(int(sweep["base_seed"])).child(1, point_key, trial)
    seed_id = int(sweep["base_seed"]) * 10 ** 8 + point_key * 10 ** 4 + trial

    sampler, n_taps = make_sampler(cfg["channel"])
    if cfg["channel"]["fixed_draw"]:
        # one realization for the whole sweep (block-fading study mode)
        channel_rng = RngStream(int(sweep["base_seed"])).child(2)
    else:
        channel_rng = base.child(0)
    h = draw_channel(
        sampler,
        channel_rng,
        bool(cfg["channel"]["min_phase_only"]),
        [ofdm_cfg.fft_size],
        warn,
    )
    subframe = build_subframe(ofdm_cfg, base.child(1))
    es = float(np.mean(np.abs(subframe.tx_time) ** 2))
    noise_var = ebn0_to_noise_var(ebn0, ofdm_cfg.constellation, es_per_sample=es)
    rx = apply_channel(subframe.tx_time, h, noise_var, base.child(2))

    pilot_rx = rx_grid(rx, ofdm_cfg, 0, ofdm_cfg.n_pilot_syms)
    data_rx = rx_grid(rx, ofdm_cfg, ofdm_cfg.n_pilot_syms, ofdm_cfg.n_data_syms)
    truth = subframe.symbol_indices[:, ofdm_cfg.n_pilot_syms :]

    esncfg = cfg["esn"]
    ridge = None if esncfg["ridge"] < 0 else float(esncfg["ridge"])
    washout = None if esncfg["washout"] < 0 else int(esncfg["washout"])

    decisions = {}
    decisions["zf-perfect"] = zf_perfect_csi(data_rx, h, ofdm_cfg)
    h_ls = ls_estimate(pilot_rx, subframe.pilot_grid)
    decisions["ls-mmse"] = mmse_equalize(data_rx, h_ls, noise_var, ofdm_cfg)
    h_mmse = mmse_estimate(pilot_rx, subframe.pilot_grid, noise_var)
    decisions["mmse-mmse"] = mmse_equalize(data_rx, h_mmse, noise_var, ofdm_cfg)
    if model_opt is not None:
        decisions["esn-optimum"], _ = esn_equalize(
            model_opt, subframe, rx, ofdm_cfg, washout=washout, ridge=ridge
        )
        n_nodes = model_opt.n_nodes
    else:
        n_nodes = int(cfg["basis"]["m"]) * int(cfg["fit"]["k"])
    model_rand = init_random(
        n_nodes,
        1,
        1,
        float(esncfg["spectral_radius"]),
        float(esncfg["sparsity"]),
        base.child(3),
    )
    model_rand.activation = esncfg["activation"]
    decisions["esn-random"], _ = esn_equalize(
        model_rand, subframe, rx, ofdm_cfg, washout=washout, ridge=ridge
    )

    rows = []
    for method in METHODS:
        if method not in decisions:
            continue
        res = measure_ser(decisions[method], truth, ebn0, method, seed_id)
        rows.append(
            f"{res.method},{res.ebn0_db:.12g},{res.seed},"
            f"{res.n_symbols},{res.n_errors},{res.ser:.12g}"
        )
    return rows


def _trial_worker(payload):
    cfg, entries, ebn0, trial = payload
    warn = {}
    ofdm_cfg = _ofdm_config(cfg)
    model = (
        model_from_entries(entries, float(cfg["fit"]["rho_max"]), cfg["esn"]["activation"])
        if entries is not None
        else None
    )
    rows = _trial_rows(cfg, ofdm_cfg, model, ebn0, trial, warn)
    return (ebn0, trial), rows, warn


def run_ser(cfg, entries=None, workers=1):
    """All SER rows for a sweep; deterministic ordering regardless of workers."""
    ofdm_cfg = _ofdm_config(cfg)
    warn = {}
    tasks = [
        (float(ebn0), t)
        for ebn0 in cfg["sweep"]["ebn0_db"]
        for t in range(int(cfg["sweep"]["trials"]))
    ]
    results = {}
    if workers > 1:
        payloads = [(cfg, entries, ebn0, t) for ebn0, t in tasks]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for key, rows, wtrial in pool.map(_trial_worker, payloads, chunksize=4):
                results[key] = rows
                for k, v in wtrial.items():
                    warn[k] = warn.get(k, 0) + v
    else:
        model = (
            model_from_entries(
                entries, float(cfg["fit"]["rho_max"]), cfg["esn"]["activation"]
            )
            if entries is not None
            else None
        )
        for ebn0, t in tasks:
            results[(ebn0, t)] = _trial_rows(cfg, ofdm_cfg, model, ebn0, t, warn)
    rows = []
    for ebn0, t in tasks:
        rows.extend(results[(ebn0, t)])
    return rows, warn


def cmd_run_ser(cfg, out_dir, weights_path=None, workers=1, plot=False):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    entries = None
    if weights_path:
        from .ratfit import load_weight_entries

        entries, _meta = load_weight_entries(weights_path)
    stages = {}
    t0 = time.perf_counter()
    rows, warn = run_ser(cfg, entries, workers=workers)
    stages["sweep"] = time.perf_counter() - t0
    csv_path = out / "ser.csv"
    with open(csv_path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(CSV_HEADER + "\n")
        for row in rows:
            fh.write(row + "\n")
    print(f"ser rows: {len(rows)} -> {csv_path}")
    if plot:
        svg_path = out / "ser.svg"
        svg_path.write_text(render_ser_svg(read_ser_csv(csv_path)), encoding="utf-8")
        print(f"plot: {svg_path}")
    _write_manifest(out, cfg, "run-ser", stages, warn)
    return csv_path


# ---------------------------------------------------------------------------
# verify-rank


def rank_means(rank_cfg):
    n_taps = int(rank_cfg["n_taps"])
    kind = rank_cfg["mean_kind"]
    scale = float(rank_cfg["mean_scale"])
    means = np.zeros(n_taps, dtype=complex)
    if kind == "flat":
        means[0] = scale
    elif kind == "geometric":
        means[:] = scale * np.exp(-float(rank_cfg["mean_decay"]) * np.arange(n_taps))
    elif kind == "two_tap":
        means[0] = scale
        if n_taps > 1:
            means[1] = scale * float(rank_cfg["mean_delta"])
    elif kind == "explicit":
        taps = rank_cfg["mean_taps"]
        if len(taps) != n_taps:
            raise ConfigError("rank.mean_taps length must equal rank.n_taps")
        means[:] = [complex(re, im) for re, im in taps]
    else:
        raise ConfigError(f"unknown rank.mean_kind {kind!r}")
    return means


def verify_rank(cfg):
    """Eigen-spectrum of the real-stacked channel-inverse covariance.

    Returns (eigenvalues descending, predicted 4(L+1), eps grid, ranks).
    """
    rank_cfg = cfg["rank"]
    n_taps = int(rank_cfg["n_taps"])
    sigma0 = float(rank_cfg["sigma0"])
    n_freq = int(rank_cfg["n_freq"])
    n_obs = int(rank_cfg["n_obs"])
    means = rank_means(rank_cfg)
    variances = np.full(n_taps, sigma0 ** 2)
    rng = RngStream(int(cfg["sweep"]["base_seed"])).child(0xA1)
    stacked = np.empty((n_obs, 2 * n_freq))
    for i in range(n_obs):
        h = sample_gaussian(means, variances, rng)
        stacked[i] = stack_real_imag(channel_inverse_freq(h, n_freq))
    cov = empirical_covariance(stacked, centered=True)
    eigenvalues = np.linalg.eigvalsh(cov.sigma)[::-1]
    predicted = 4 * (n_taps + 1)
    top = float(eigenvalues[0])
    eps_grid = top * np.geomspace(sigma0 ** 6, sigma0 ** 2, int(rank_cfg["eps_points"]))
    ranks = [epsilon_rank(eigenvalues, eps) for eps in eps_grid]
    return eigenvalues, predicted, eps_grid, ranks


def cmd_verify_rank(cfg, out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stages = {}
    t0 = time.perf_counter()
    eigenvalues, predicted, eps_grid, ranks = verify_rank(cfg)
    stages["verify_rank"] = time.perf_counter() - t0
    with open(out / "spectrum.csv", "w", encoding="utf-8") as fh:
        fh.write("index,eigenvalue\n")
        for i, ev in enumerate(eigenvalues, start=1):
            fh.write(f"{i},{ev:.12g}\n")
    with open(out / "rank_report.csv", "w", encoding="utf-8") as fh:
        fh.write("eps,rank\n")
        for eps, rank in zip(eps_grid, ranks):
            fh.write(f"{eps:.12g},{rank}\n")
    ratio = float(eigenvalues[predicted - 1] / eigenvalues[predicted]) \
        if predicted < len(eigenvalues) else float("inf")
    print(f"predicted eps-rank 4(L+1) = {predicted}")
    print(f"spectrum drop at predicted index: {ratio:.1f}x")
    _write_manifest(out, cfg, "verify-rank", stages, {})
    return predicted, ratio


# ---------------------------------------------------------------------------
# plot


def read_ser_csv(path):
    """Aggregate a trial-level SER CSV into per-method curves."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip()
        if header != CSV_HEADER:
            raise SchemaError(f"unexpected CSV header in {path}: {header!r}")
        totals = {}
        for line in fh:
            line = line.strip()
            if not line:
                continue
            parts = line.split(",")
            if len(parts) != 6:
                raise SchemaError(f"malformed row in {path}: {line!r}")
            method, ebn0, _seed, n_sym, n_err, _ser = parts
            key = (method, float(ebn0))
            sym, err = totals.get(key, (0, 0))
            totals[key] = (sym + int(n_sym), err + int(n_err))
    series = {}
    for (method, ebn0), (sym, err) in sorted(totals.items()):
        series.setdefault(method, []).append((ebn0, err / sym))
    if not series:
        raise SchemaError(f"no data rows in {path}")
    return series


_SVG_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def render_ser_svg(series, title="Symbol error rate"):
    """Self-contained SVG: log-y SER curves vs Eb/N0 (no external renderer).

    Zero-SER points are clamped to the bottom decade of the axis.
    """
    if not series or all(len(pts) == 0 for pts in series.values()):
        raise SchemaError("nothing to plot")
    width, height = 640, 460
    left, right, top, bottom = 70, 20, 36, 56
    xs = sorted({x for pts in series.values() for x, _ in pts})
    positive = [y for pts in series.values() for _, y in pts if y > 0]
    y_max = 1.0
    y_min = min(positive) / 2 if positive else 1e-4
    lo_dec = int(np.floor(np.log10(y_min)))
    x_lo, x_hi = min(xs), max(xs)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0

    def px(x):
        return left + (x - x_lo) / (x_hi - x_lo) * (width - left - right)

    def py(y):
        y = max(y, 10.0 ** lo_dec)
        frac = (np.log10(y) - lo_dec) / (0.0 - lo_dec)
        return (height - bottom) - frac * (height - bottom - top)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width / 2:.2f}" y="20" text-anchor="middle" font-size="14">{title}</text>',
    ]
    for dec in range(lo_dec, 1):
        y = py(10.0 ** dec)
        parts.append(
            f'<line x1="{left}" y1="{y:.2f}" x2="{width - right}" y2="{y:.2f}" '
            f'stroke="#dddddd"/>'
        )
        parts.append(
            f'<text x="{left - 6}" y="{y + 4:.2f}" text-anchor="end">1e{dec}</text>'
        )
    for x in xs:
        parts.append(
            f'<line x1="{px(x):.2f}" y1="{top}" x2="{px(x):.2f}" y2="{height - bottom}" '
            f'stroke="#eeeeee"/>'
        )
        parts.append(
            f'<text x="{px(x):.2f}" y="{height - bottom + 16}" text-anchor="middle">{x:g}</text>'
        )
    parts.append(
        f'<rect x="{left}" y="{top}" width="{width - left - right}" '
        f'height="{height - top - bottom}" fill="none" stroke="#333333"/>'
    )
    parts.append(
        f'<text x="{(left + width - right) / 2:.2f}" y="{height - 14}" '
        f'text-anchor="middle">Eb/N0 [dB]</text>'
    )
    parts.append(
        f'<text x="16" y="{(top + height - bottom) / 2:.2f}" text-anchor="middle" '
        f'transform="rotate(-90 16 {(top + height - bottom) / 2:.2f})">SER</text>'
    )
    for i, (method, pts) in enumerate(sorted(series.items())):
        color = _SVG_COLORS[i % len(_SVG_COLORS)]
        coords = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in pts)
        parts.append(
            f'<polyline points="{coords}" fill="none" stroke="{color}" stroke-width="1.5"/>'
        )
        for x, y in pts:
            parts.append(
                f'<circle cx="{px(x):.2f}" cy="{py(y):.2f}" r="3" fill="{color}"/>'
            )
        ly = top + 14 + 16 * i
        parts.append(
            f'<line x1="{width - right - 150}" y1="{ly}" x2="{width - right - 126}" '
            f'y2="{ly}" stroke="{color}" stroke-width="1.5"/>'
        )
        parts.append(f'<text x="{width - right - 120}" y="{ly + 4}">{method}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_plot(csv_paths, out_path):
    series = {}
    for path in csv_paths:
        for method, pts in read_ser_csv(path).items():
            series.setdefault(method, []).extend(pts)
    for method in series:
        series[method] = sorted(series[method])
    out_path = Path(out_path)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_text(render_ser_svg(series), encoding="utf-8")
    print(f"plot: {out_path}")
    return out_path


# ---------------------------------------------------------------------------
# manifest + entry point


def _write_manifest(out_dir, cfg, command, stages, warn):
    manifest = {
        "command": command,
        "config_hash": config_hash(cfg),
        "version": __version__,
        "wall_clock_s": round(sum(stages.values()), 3),
        "stages": {k: round(v, 3) for k, v in stages.items()},
        "warnings": dict(sorted(warn.items())),
    }
    with open(Path(out_dir) / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="esneq", description="ESN channel equalization experiments"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="TOML experiment config")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE")
        p.add_argument("--seed", type=int, default=None, help="override base seed")
        p.add_argument("--out", default="out", help="output directory")

    p = sub.add_parser("derive-weights", help="synthesize ESN weights from channel statistics")
    common(p)

    p = sub.add_parser("run-ser", help="paired-seed SER sweep")
    common(p)
    p.add_argument("--weights", default=None, help="weight file for esn-optimum")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--plot", action="store_true", help="also render ser.svg")

    p = sub.add_parser("verify-rank", help="empirical epsilon-rank of the inverse covariance")
    common(p)

    p = sub.add_parser("plot", help="render SER CSVs to SVG")
    p.add_argument("csv", nargs="+")
    p.add_argument("--out", default="ser.svg")
    return parser


def main(argv=None):
    level = os.environ.get("RC_EQ_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "plot":
            cmd_plot(args.csv, args.out)
            return 0
        cfg = load_config(args.config, args.set, args.seed)
        if args.command == "derive-weights":
            cmd_derive_weights(cfg, args.out)
        elif args.command == "run-ser":
            cmd_run_ser(cfg, args.out, args.weights, args.workers, args.plot)
        elif args.command == "verify-rank":
            cmd_verify_rank(cfg, args.out)
        return 0
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except EsneqError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
