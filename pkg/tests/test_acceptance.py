"""Acceptance suite: one test per release criterion.

Each test prints a `[PASS]/[FAIL] criterion-N` line (bypassing pytest's
capture so the lines always reach the console) and then asserts.  The SER
sweeps run at desk scale: fft 256, cyclic prefix 40, 4 pilot + 13 data
symbols, 50 paired-seed trials per Eb/N0 point.
"""

import numpy as np
import pytest

from esneq.basis import empirical_covariance, optimum_basis, stack_real_imag
from esneq.channel import ChannelRealization, RngStream, channel_inverse_freq, sample_exp_pdp, sample_min_phase
from esneq.cli import (
    derive_entries,
    load_config,
    main,
    model_from_entries,
    run_ser,
    verify_rank,
)
from esneq.esn import init_optimum, run_states
from esneq.ofdm import (
    OfdmConfig,
    apply_channel,
    build_subframe,
    esn_equalize,
    ls_estimate,
    measure_ser,
    mmse_equalize,
    mmse_estimate,
    rx_grid,
    zf_perfect_csi,
)
from esneq.ratfit import PoleResidueSet, expand_pole_residue, fit_rational, partial_fractions

BASE_SEED = 20230917

DESK = [
    "channel.n_taps=10",
    "basis.n_freq=128",
    "basis.n_obs=4000",
    "basis.m=10",
    "fit.k=10",
    "fit.k_prime=9",
    "ofdm.fft_size=256",
    "ofdm.cp_len=40",
    "ofdm.n_pilot_syms=4",
    "ofdm.n_data_syms=13",
]


def report(log, criterion, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}: {detail}"
    log.append(line)
    print(line, flush=True)


def aggregate(rows):
    """CSV rows -> {(method, ebn0): aggregated SER}."""
    totals = {}
    for row in rows:
        method, ebn0, _seed, n_sym, n_err, _ser = row.split(",")
        key = (method, float(ebn0))
        sym, err = totals.get(key, (0, 0))
        totals[key] = (sym + int(n_sym), err + int(n_err))
    return {key: err / sym for key, (sym, err) in totals.items()}


@pytest.fixture(scope="module")
def exp_pdp_entries():
    """Weights derived once from the exponential-PDP desk configuration."""
    cfg = load_config(None, DESK, seed=BASE_SEED)
    entries, _basis = derive_entries(cfg)
    assert sum(len(e["poles"]) for e in entries) == 100
    return entries


def test_criterion_1_rank_plateau(criterion_log):
    """Covariance spectrum drops >= 100x right after index 4(L+1)."""
    ensembles = {
        2: ["rank.mean_kind=flat", "rank.mean_scale=2.5"],
        3: ["rank.mean_kind=two_tap", "rank.mean_scale=6.0", "rank.mean_delta=0.55"],
        4: ["rank.mean_kind=flat", "rank.mean_scale=5.0"],
    }
    ratios = {}
    for n_taps, sets in ensembles.items():
        cfg = load_config(
            None,
            sets + [f"rank.n_taps={n_taps}", "rank.sigma0=0.05",
                    "rank.n_freq=64", "rank.n_obs=20000"],
            seed=BASE_SEED,
        )
        eigenvalues, predicted, _eps, _ranks = verify_rank(cfg)
        assert predicted == 4 * (n_taps + 1)
        ratios[n_taps] = eigenvalues[predicted - 1] / eigenvalues[predicted]
    ok = all(r >= 100.0 for r in ratios.values())
    detail = " ".join(f"L={l}: {r:.0f}x" for l, r in sorted(ratios.items()))
    report(criterion_log, "criterion-1 rank-plateau", ok, detail)
    assert ok, detail


def test_criterion_2_rational_round_trip(criterion_log):
    """100 planted pole/residue systems survive expand -> fit -> decompose."""
    rng = np.random.default_rng(BASE_SEED)
    worst_pole, worst_residue = 0.0, 0.0
    n_grid = 128
    for _ in range(100):
        k = int(rng.integers(1, 11))
        while True:
            poles = rng.uniform(0.1, 0.8, k) * np.exp(2j * np.pi * rng.random(k))
            if k == 1 or min(
                abs(a - b) for i, a in enumerate(poles) for b in poles[i + 1 :]
            ) >= 0.05:
                break
        residues = rng.uniform(0.3, 1.0, k) * np.exp(2j * np.pi * rng.random(k))
        planted = PoleResidueSet(poles=poles, residues=residues)
        ra_exact = expand_pole_residue(planted)
        omega = 2 * np.pi * np.arange(n_grid) / n_grid
        from esneq.ratfit import eval_rational

        samples = eval_rational(ra_exact, omega)
        recovered = partial_fractions(fit_rational(samples, k=k, k_prime=k - 1))
        for p, q in zip(planted.poles, planted.residues):
            j = int(np.argmin(np.abs(recovered.poles - p)))
            worst_pole = max(worst_pole, abs(recovered.poles[j] - p))
            worst_residue = max(worst_residue, abs(recovered.residues[j] - q))
    ok = worst_pole <= 1e-6 and worst_residue <= 1e-5
    report(
        criterion_log, "criterion-2 rational-round-trip", ok,
        f"max pole err {worst_pole:.2e}, max residue err {worst_residue:.2e}",
    )
    assert ok


def test_criterion_3_iir_equivalence(exp_pdp_entries, criterion_log):
    """Per-neuron 512-sample frequency probes match q/(1 - p e^{-jw})."""
    rng = np.random.default_rng(BASE_SEED + 3)
    models = []
    for m_sets, k in ((1, 1), (1, 4), (3, 10)):
        sets = []
        for _ in range(m_sets):
            poles = rng.uniform(0.1, 0.8, k) * np.exp(2j * np.pi * rng.random(k))
            residues = rng.uniform(0.3, 1.0, k) * np.exp(2j * np.pi * rng.random(k))
            sets.append(PoleResidueSet(poles=poles, residues=residues))
        models.append(init_optimum(sets))
    probe_omegas = 2 * np.pi * (np.arange(16) + 0.5) / 16
    worst = 0.0
    t_probe = 512
    n_steps = np.arange(t_probe)
    for model in models:
        poles = np.diagonal(model.w_res)
        residues = model.w_in[:, 0]
        for omega in probe_omegas:
            u = np.exp(1j * omega * n_steps)
            states = run_states(model, u).states
            measured = states[:, -1] / u[-1]
            want = residues / (1.0 - poles * np.exp(-1j * omega))
            worst = max(worst, np.abs(measured - want).max())
    ok = worst <= 1e-4
    report(criterion_log, "criterion-3 iir-equivalence", ok, f"max response err {worst:.2e}")
    assert ok


def test_criterion_4_noiseless_exactness(exp_pdp_entries, criterion_log):
    """Flat channel: SER 0 for all methods; min-phase draw: ESN <= 1e-3."""
    cfg_obj = OfdmConfig(fft_size=256, cp_len=40, n_pilot_syms=4,
                         n_data_syms=13, constellation="qam16")
    rng = RngStream(BASE_SEED).child(4)
    model_opt = model_from_entries(exp_pdp_entries, 0.999, "linear")

    def all_method_sers(h):
        sf = build_subframe(cfg_obj, rng.child(1))
        rx = apply_channel(sf.tx_time, h, 0.0, rng.child(2))
        pilot_rx = rx_grid(rx, cfg_obj, 0, cfg_obj.n_pilot_syms)
        data_rx = rx_grid(rx, cfg_obj, cfg_obj.n_pilot_syms, cfg_obj.n_data_syms)
        truth = sf.symbol_indices[:, cfg_obj.n_pilot_syms:]
        from esneq.esn import init_random

        model_rand = init_random(100, 1, 1, 0.4, 0.6, rng.child(3))
        sers = {}
        sers["zf-perfect"] = measure_ser(zf_perfect_csi(data_rx, h, cfg_obj), truth).ser
        h_ls = ls_estimate(pilot_rx, sf.pilot_grid)
        sers["ls-mmse"] = measure_ser(mmse_equalize(data_rx, h_ls, 0.0, cfg_obj), truth).ser
        h_mm = mmse_estimate(pilot_rx, sf.pilot_grid, 0.0)
        sers["mmse-mmse"] = measure_ser(mmse_equalize(data_rx, h_mm, 0.0, cfg_obj), truth).ser
        est, _ = esn_equalize(model_opt, sf, rx, cfg_obj)
        sers["esn-optimum"] = measure_ser(est, truth).ser
        est, _ = esn_equalize(model_rand, sf, rx, cfg_obj)
        sers["esn-random"] = measure_ser(est, truth).ser
        return sers

    flat = all_method_sers(ChannelRealization(np.array([1.0 + 0j])))
    flat_ok = all(s == 0.0 for s in flat.values())

    h, _ = sample_min_phase(lambda r: sample_exp_pdp(10, r), rng.child(9))
    faded = all_method_sers(h)
    esn_ok = faded["esn-optimum"] <= 1e-3
    ok = flat_ok and esn_ok
    report(
        criterion_log, "criterion-4 noiseless-exactness", ok,
        f"flat {dict(sorted(flat.items()))}, exp-PDP esn-optimum {faded['esn-optimum']:.2e}",
    )
    assert ok


def test_criterion_5_qam16_ordering(exp_pdp_entries, criterion_log):
    """16-QAM exp-PDP: optimum < random above 10 dB; within 5x of ZF at 25."""
    cfg = load_config(
        None,
        DESK + ["ofdm.constellation=qam16", "sweep.trials=50",
                "sweep.ebn0_db=[10.0, 15.0, 20.0, 25.0]"],
        seed=BASE_SEED,
    )
    rows, _warn = run_ser(cfg, exp_pdp_entries)
    ser = aggregate(rows)
    points = [10.0, 15.0, 20.0, 25.0]
    ordering_ok = all(
        ser[("esn-optimum", e)] < ser[("esn-random", e)] for e in points
    )
    zf_ok = ser[("esn-optimum", 25.0)] <= 5.0 * ser[("zf-perfect", 25.0)]
    detail = "; ".join(
        f"{e:g}dB opt {ser[('esn-optimum', e)]:.2e} rand {ser[('esn-random', e)]:.2e}"
        for e in points
    ) + f"; zf@25 {ser[('zf-perfect', 25.0)]:.2e}"
    ok = ordering_ok and zf_ok
    report(criterion_log, "criterion-5 qam16-ordering", ok, detail)
    assert ok, detail


def test_criterion_6_qam64_error_floor(exp_pdp_entries, criterion_log):
    """64-QAM exp-PDP: random floors (>= 0.5x across 10 dB), optimum does not."""
    cfg = load_config(
        None,
        DESK + ["ofdm.constellation=qam64", "sweep.trials=50",
                "sweep.ebn0_db=[15.0, 25.0]"],
        seed=BASE_SEED,
    )
    rows, _warn = run_ser(cfg, exp_pdp_entries)
    ser = aggregate(rows)
    rand15, rand25 = ser[("esn-random", 15.0)], ser[("esn-random", 25.0)]
    opt15, opt25 = ser[("esn-optimum", 15.0)], ser[("esn-optimum", 25.0)]
    floor_ok = rand25 >= 0.5 * rand15
    no_floor_ok = opt25 <= 0.2 * opt15
    detail = (
        f"rand 15dB {rand15:.3e} -> 25dB {rand25:.3e} (need >= {0.5 * rand15:.3e}); "
        f"opt 15dB {opt15:.3e} -> 25dB {opt25:.3e} (need <= {0.2 * opt15:.3e})"
    )
    ok = floor_ok and no_floor_ok
    report(criterion_log, "criterion-6 qam64-error-floor", ok, detail)
    assert ok, detail


@pytest.mark.parametrize("profile,n_taps", [("cdl-d", 14), ("cdl-e", 15)])
def test_criterion_7_cdl_profiles(profile, n_taps, criterion_log):
    """Stand-in CDL profiles run end-to-end; optimum <= random above 10 dB."""
    sets = [
        f"channel.family=tdl", f"channel.profile={profile}",
        f"channel.n_taps={n_taps}", f"basis.m={n_taps}",
        "basis.n_freq=128", "basis.n_obs=2500",
        "fit.k=10", "fit.k_prime=9",
        "ofdm.fft_size=256", "ofdm.cp_len=40",
        "ofdm.n_pilot_syms=4", "ofdm.n_data_syms=13",
        "ofdm.constellation=qpsk",
        "sweep.trials=20", "sweep.ebn0_db=[10.0, 17.5, 25.0]",
    ]
    cfg = load_config(None, sets, seed=BASE_SEED)
    entries, _basis = derive_entries(cfg)
    n_nodes = sum(len(e["poles"]) for e in entries)
    assert n_nodes == n_taps * 10
    rows, _warn = run_ser(cfg, entries)
    ser = aggregate(rows)
    points = [10.0, 17.5, 25.0]
    ok = all(ser[("esn-optimum", e)] <= ser[("esn-random", e)] for e in points)
    detail = f"n_nodes {n_nodes}; " + "; ".join(
        f"{e:g}dB opt {ser[('esn-optimum', e)]:.2e} rand {ser[('esn-random', e)]:.2e}"
        for e in points
    )
    report(criterion_log, f"criterion-7 cdl({profile})", ok, detail)
    assert ok, detail


def test_criterion_8_pca_optimality(criterion_log):
    """PCA basis beats 50 random orthonormal bases on a frozen sample set."""
    n_freq, m, n_set = 128, 10, 500
    rng = RngStream(BASE_SEED).child(8)
    inverses = []
    for _ in range(n_set):
        h, _ = sample_min_phase(lambda r: sample_exp_pdp(10, r), rng)
        inverses.append(channel_inverse_freq(h, n_freq))
    inverses = np.array(inverses)
    stacked = np.array([stack_real_imag(v) for v in inverses])
    basis = optimum_basis(empirical_covariance(stacked, centered=False), m)

    def avg_err(f):
        proj = (inverses @ f.conj()) @ f.T
        return float(np.mean(np.sum(np.abs(inverses - proj) ** 2, axis=1)))

    pca_err = avg_err(basis.f)
    gen = np.random.default_rng(BASE_SEED + 8)
    random_errs = []
    for _ in range(50):
        raw = gen.standard_normal((n_freq, m)) + 1j * gen.standard_normal((n_freq, m))
        q, _ = np.linalg.qr(raw)
        random_errs.append(avg_err(q))
    random_errs = np.array(random_errs)
    within_min = pca_err <= 1.01 * random_errs.min()
    beats_95 = np.mean(pca_err < random_errs) >= 0.95
    ok = within_min and beats_95
    report(
        criterion_log, "criterion-8 pca-optimality", ok,
        f"pca {pca_err:.3e}, random min {random_errs.min():.3e}, "
        f"beaten {int(np.sum(pca_err < random_errs))}/50",
    )
    assert ok


def test_criterion_9_csv_determinism(tmp_path, criterion_log):
    """Identical config + seed produce byte-identical run-ser CSV."""
    args = [
        "run-ser", "--seed", "20230917",
        "--set", "sweep.ebn0_db=[5.0]", "--set", "sweep.trials=2",
        "--set", "channel.n_taps=4",
        "--set", "ofdm.fft_size=64", "--set", "ofdm.cp_len=12",
        "--set", "ofdm.n_pilot_syms=2", "--set", "ofdm.n_data_syms=2",
    ]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    a = (tmp_path / "a" / "ser.csv").read_bytes()
    b = (tmp_path / "b" / "ser.csv").read_bytes()
    ok = a == b and len(a) > 0
    report(criterion_log, "criterion-9 determinism", ok, f"{len(a)} bytes, identical={a == b}")
    assert ok
