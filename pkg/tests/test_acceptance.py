"""End-to-end acceptance suite.

Eight criteria covering the convergence certificates of the reweighting
loop, oracle dominance, the reference-scale Monte Carlo trends, trace
reproducibility and conic-layer correctness. One printed pass/fail line
per criterion (visible with -s or in the captured output).
"""

import numpy as np
import pytest

from gsbf import conic, diagnostics, harness
from gsbf.diagnostics import CertificateParams, rate_certificate
from gsbf.netmodel import (
    BeamformingSolution,
    ChannelRealization,
    NetworkConfig,
    generate_channels,
    generate_topology,
    sinr_per_user,
    validate,
)
from gsbf.oracle import oracle_min_power
from gsbf.pipeline import (
    AlgorithmParams,
    InstanceInfeasible,
    prox_irw,
    rho_weights,
    run_cb,
    run_mixed_l12,
    run_three_stage,
)

PARAMS = AlgorithmParams()


def report(num, desc, passed):
    print(f"\n[{'PASS' if passed else 'FAIL'}] criterion {num}: {desc}")
    assert passed, f"criterion {num} failed: {desc}"


# --- shared corpora (module scope; built once) -----------------------------

@pytest.fixture(scope="module")
def corpus50():
    """50 feasible seeded stage-1 runs: 4 BSs, 2 antennas, 6 users, 4 dB."""
    cfg = NetworkConfig.broadcast(4, 6, 2, gamma=10 ** 0.4)
    cert = CertificateParams(kappa=float(rho_weights(cfg).max()),
                             p=PARAMS.p, beta=PARAMS.beta)
    traces = []
    seed = 0
    while len(traces) < 50:
        topo = generate_topology(seed, cfg)
        ch = generate_channels(seed, topo, cfg)
        try:
            _, trace = prox_irw(ch, cfg, PARAMS)
            traces.append(trace)
        except InstanceInfeasible:
            pass  # QoS unreachable for this realization; draw the next seed
        seed += 1
    return traces, cert


@pytest.fixture(scope="module")
def small20():
    """20 feasible seeded 2x2x2 instances with oracle + all heuristics."""
    cfg = NetworkConfig.broadcast(2, 2, 2, gamma=1.0)
    out = []
    seed = 0
    while len(out) < 20:
        topo = generate_topology(seed, cfg)
        ch = generate_channels(seed, topo, cfg)
        try:
            oracle = oracle_min_power(ch, cfg)
            runs = {"logsum": run_three_stage(ch, cfg),
                    "mixed_l12": run_mixed_l12(ch, cfg),
                    "cb": run_cb(ch, cfg)}
            out.append((cfg, ch, oracle, runs))
        except InstanceInfeasible:
            pass
        seed += 1
    return out


@pytest.fixture(scope="module")
def reference_runs():
    """Paired Monte Carlo sweep on the reference setup: 8 two-antenna BSs,
    15 users, normalized channels, 20 trials at 0/4/8 dB targets."""
    cfg = harness.parse_config("")
    records, traces = harness.run_trials(cfg)
    return cfg, records, traces


def mean_over_ok(records, db, method, col):
    vals = [getattr(r, col) for r in records
            if r.sinr_db == db and r.method == method and r.status == "ok"]
    return (float(np.mean(vals)), len(vals)) if vals else (np.nan, 0)


# --- criteria ---------------------------------------------------------------

def test_criterion_1_descent(corpus50):
    traces, _ = corpus50
    ok = True
    for trace in traces:
        omega = np.array(trace.omega)
        tol = 1e-7 * np.maximum(1.0, np.abs(omega[:-1]))
        ok &= bool(np.all(omega[1:] <= omega[:-1] + tol))
    report(1, "objective descent on all 50 stage-1 runs", ok)


def test_criterion_2_sufficient_decrease(corpus50):
    traces, cert = corpus50
    ok = True
    for trace in traces:
        dg = np.array(trace.delta_g)
        disp = np.array(trace.displacement)
        ok &= bool(np.all(dg >= 0.5 * cert.beta * disp ** 2 - 1e-7))
    report(2, "model reduction >= (beta/2)*displacement^2 on all 50 runs", ok)


def test_criterion_3_ergodic_rate(corpus50):
    traces, cert = corpus50
    ok = True
    for trace in traces:
        rc = rate_certificate(trace, cert)
        ok &= rc.holds and bool(np.all(np.diff(rc.running_min_sq) <= 0))
    report(3, "1/t rate envelope and monotone running min on all 50 runs", ok)


def test_criterion_4_oracle_validity(small20):
    ok = True
    for cfg, ch, oracle, runs in small20:
        for run in runs.values():
            ok &= oracle.best_total_w <= run.power.total_w + 1e-5
            ok &= validate(run.refined, run.selection, ch, cfg,
                           sinr_tol=1e-5, power_tol=1e-7).ok
        ok &= validate(oracle.best_solution(), oracle.selection, ch, cfg,
                       sinr_tol=1e-5, power_tol=1e-7).ok
    report(4, "oracle lower-bounds all heuristics; all solutions validate", ok)


def test_criterion_5_task_count_trend(reference_runs):
    cfg, records, _ = reference_runs
    full = cfg.network.num_bs * cfg.network.num_users
    ok = all(r.task_count == full for r in records
             if r.method == "cb" and r.status == "ok")
    detail = []
    for db in cfg.sinr_sweep_db:
        ls, n_ls = mean_over_ok(records, db, "logsum", "task_count")
        ml, n_ml = mean_over_ok(records, db, "mixed_l12", "task_count")
        if n_ls and n_ml:
            ok &= ls <= ml
            detail.append(f"{db:g} dB: logsum {ls:.2f} <= mixed {ml:.2f}")
        else:
            # no feasible realization at this target; comparison is vacuous
            detail.append(f"{db:g} dB: 0 feasible trials (vacuous)")
    report(5, "CB keeps all tasks; mean logsum task count <= mixed l1,2 "
              f"({'; '.join(detail)})", ok)


def test_criterion_6_power_trends(reference_runs):
    cfg, records, _ = reference_runs
    ok = True
    detail = []
    for db in cfg.sinr_sweep_db:
        totals = {m: mean_over_ok(records, db, m, "total_w")
                  for m in ("logsum", "mixed_l12", "cb")}
        trans = {m: mean_over_ok(records, db, m, "transmit_w")
                 for m in ("logsum", "mixed_l12", "cb")}
        if not all(n for _, n in totals.values()):
            detail.append(f"{db:g} dB: 0 feasible trials (vacuous)")
            continue
        ok &= totals["cb"][0] >= totals["logsum"][0]
        ok &= totals["cb"][0] >= totals["mixed_l12"][0]
        ok &= trans["cb"][0] <= trans["logsum"][0]
        ok &= trans["cb"][0] <= trans["mixed_l12"][0]
        if db >= 4.0:
            ok &= totals["logsum"][0] <= totals["mixed_l12"][0]
        detail.append(f"{db:g} dB: total cb {totals['cb'][0]:.2f} / "
                      f"logsum {totals['logsum'][0]:.2f} / "
                      f"mixed {totals['mixed_l12'][0]:.2f}")
    report(6, "CB max total / min transmit; logsum beats mixed at >= 4 dB "
              f"({'; '.join(detail)})", ok)


def test_criterion_7_trace_reproducibility(reference_runs):
    cfg, _, traces = reference_runs
    seed, db = cfg.base_seed, cfg.sinr_sweep_db[0]
    trace = traces[(seed, db, "logsum")]
    omega = np.array(trace.omega)
    ok = bool(np.all(np.diff(omega) <= 1e-12 * np.maximum(1, np.abs(omega[:-1]))))
    ok &= trace.iterations <= cfg.algorithm.iter_max
    # independent rerun of the same seeded instance must serialize identically
    topo = generate_topology(seed, cfg.network)
    ch = generate_channels(seed, topo, cfg.network)
    _, rerun = prox_irw(ch, cfg.network.with_gamma_db(db), cfg.algorithm)
    ok &= harness.format_trace_csv(rerun) == harness.format_trace_csv(trace)
    report(7, "stage-1 trace nonincreasing, within iter_max, "
              "byte-identical CSV on rerun", ok)


def test_criterion_8_conic_spot_checks():
    # (a) single-link closed form: ||v||^2 = gamma*sigma^2/|h|^2
    cfg = NetworkConfig.broadcast(1, 1, 1, gamma=2.0, eta=0.25, p_max=100.0)
    h = np.array([[[1.3 + 0.4j]]])
    ch = ChannelRealization(h=h)
    res = conic.solve(conic.build_refinement(frozenset(), ch, cfg))
    expected = 2.0 * 1.0 / abs(h[0, 0, 0]) ** 2 / 0.25
    ok_a = abs(res.objective - expected) <= 1e-6

    # (b) complex <-> real embedding round trip
    rng = np.random.default_rng(8)
    layout = conic.make_layout(NetworkConfig.broadcast(3, 4, 2, gamma=1.0))
    v = rng.standard_normal((3, 4, 2)) + 1j * rng.standard_normal((3, 4, 2))
    ok_b = bool(np.max(np.abs(layout.extract(layout.embed(v)) - v)) <= 1e-14)

    # (c) indicator-set vs aggregated SINR on 100 random supports
    cfg2 = NetworkConfig.broadcast(2, 2, 2, gamma=1.0)
    topo = generate_topology(0, cfg2)
    ch2 = generate_channels(0, topo, cfg2)
    ok_c = True
    for _ in range(100):
        v = rng.standard_normal((2, 2, 2)) + 1j * rng.standard_normal((2, 2, 2))
        v[rng.integers(2), rng.integers(2)] = 0.0
        sol = BeamformingSolution(v=v)
        agg = sinr_per_user(sol, ch2, cfg2)
        ind = _indicator_sinr(v, ch2.h, sol.support, cfg2.noise_power)
        ok_c &= bool(np.all(np.abs(agg - ind) <= 1e-10 * np.maximum(1, ind)))

    report(8, "single-link closed form, embedding round trip, "
              "SINR form equivalence", ok_a and ok_b and ok_c)


def _indicator_sinr(v, h, support, noise):
    """SINR from the indicator-set definition, summing only selected tasks."""
    n_bs, kk, _ = h.shape
    out = np.zeros(kk)
    for k in range(kk):
        sig = sum(h[n, k].conj() @ v[n, k] for n in range(n_bs)
                  if (n, k) in support)
        interf = sum(
            abs(sum(h[n, k].conj() @ v[n, l] for n in range(n_bs)
                    if (n, l) in support)) ** 2
            for l in range(kk) if l != k)
        out[k] = abs(sig) ** 2 / (interf + noise[k])
    return out
