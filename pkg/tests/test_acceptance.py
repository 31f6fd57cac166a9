"""Acceptance suite: one PASS/FAIL line per criterion.

Run with ``pytest tests/test_acceptance.py -s`` or ``python3 tests/test_acceptance.py``.
"""
import time

import numpy as np
import pytest
from scipy.stats import unitary_group

from tritter.budget import MEASURED, OPTIMIZED, projection
from tritter.circuit import CircuitUnitary, ideal_tritter
from tritter.cli import random_case, run
from tritter.demux import (
    active_efficiency,
    active_passive_ratio,
    conversion_rate_active,
    conversion_rate_passive,
    ideal_scheme_3arm,
)
from tritter.detection import DetectorTree, estimate_distribution, simulate_counts
from tritter.interference import (
    OutputDistribution,
    PhotonEnsemble,
    SourceModel,
    distribution,
    gram_from_pairwise,
    mixture_distribution,
    oracle_distribution,
)
from tritter.reconstruct import fidelity, reconstruct_unitary, simulate_measurements, visibility_matrix

BUNCHING = [(3, 0, 0), (0, 3, 0), (0, 0, 3)]
COLLISION = [(2, 1, 0), (2, 0, 1), (1, 2, 0), (0, 2, 1), (1, 0, 2), (0, 1, 2)]


def report(number, title, ok, detail, elapsed, limit):
    within = elapsed < limit
    status = "PASS" if ok and within else "FAIL"
    print(f"\n[{status}] criterion {number}: {title} | {detail} | {elapsed:.2f} s (limit {limit:g} s)")
    assert ok, detail
    assert within, f"took {elapsed:.2f} s, limit {limit} s"


class Timer:
    def __enter__(self):
        self.t = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t


def test_criterion_1_indistinguishable():
    with Timer() as t:
        d = distribution(ideal_tritter(), PhotonEnsemble.indistinguishable((0, 1, 2)))
    err = max([abs(d[(1, 1, 1)] - 1 / 3)] + [abs(d[b] - 2 / 9) for b in BUNCHING])
    coll = max(d[c] for c in COLLISION)
    report(1, "ideal tritter, indistinguishable", err <= 1e-10 and coll < 1e-12,
           f"max error {err:.1e}, max collision {coll:.1e}", t.elapsed, 1)


def test_criterion_2_distinguishable():
    with Timer() as t:
        d = distribution(ideal_tritter(), PhotonEnsemble.distinguishable((0, 1, 2)))
    err = max([abs(d[(1, 1, 1)] - 2 / 9)] + [abs(d[b] - 1 / 27) for b in BUNCHING]
              + [abs(d[c] - 1 / 9) for c in COLLISION])
    report(2, "ideal tritter, distinguishable", err <= 1e-10, f"max error {err:.1e}", t.elapsed, 1)


def test_criterion_3_oracle_equivalence():
    rng = np.random.default_rng(3)
    worst, cases = 0.0, 0
    with Timer() as t:
        for _ in range(150):
            U, ens = random_case(rng, max_photons=4, max_modes=4)
            worst = max(worst, float(np.max(np.abs(distribution(U, ens).probs - oracle_distribution(U, ens).probs))))
            cases += 1
    report(3, "permutation sum vs internal-state oracle", worst <= 1e-10 and cases >= 100,
           f"{cases} cases, worst bin difference {worst:.1e}", t.elapsed, 60)


def test_criterion_4_experiment_model():
    with Timer() as t:
        g = gram_from_pairwise({(0, 1): 0.90, (1, 2): 0.90, (0, 2): 0.88})
        d = mixture_distribution(ideal_tritter(), SourceModel(p1_qd=0.07, g2=0.071), g)
    p111, bunch, coll = d[(1, 1, 1)], d.mean_of_type((3, 0, 0)), d.mean_of_type((2, 1, 0))
    ok = abs(p111 - 0.229) <= 0.03 and abs(bunch - 0.157) <= 0.03 and abs(coll - 0.050) <= 0.02
    report(4, "experiment model aggregates", ok,
           f"P111 {p111:.4f}, mean bunching {bunch:.4f}, mean collision {coll:.4f}", t.elapsed, 5)


def test_criterion_5_demux():
    with Timer() as t:
        s = ideal_scheme_3arm()
        ca, cp, r = conversion_rate_active(s), conversion_rate_passive(s.duty_cycles()), active_passive_ratio(s)
        eta = active_efficiency(6.6, 8.0)
    ok = abs(ca - 0.25) <= 1e-6 and abs(cp - 0.03125) <= 1e-6 and abs(r - 8) <= 1e-4 and abs(eta - 0.80) <= 1e-12
    report(5, "demultiplexer rates", ok, f"C_active {ca:.8f}, C_passive {cp:.8f}, r {r:.6f}, eta_a {eta:.6f}",
           t.elapsed, 1)


def test_criterion_6_reconstruction():
    rng = np.random.default_rng(6)
    tri = ideal_tritter()
    v_tri = visibility_matrix(tri)
    with Timer() as t:
        clean = []
        for _ in range(100):
            U = CircuitUnitary(unitary_group.rvs(3, random_state=rng))
            rec = reconstruct_unitary(simulate_measurements(U))
            clean.append(fidelity(visibility_matrix(rec.unitary), visibility_matrix(U)))
        noisy = [fidelity(visibility_matrix(reconstruct_unitary(simulate_measurements(tri, 0.01, seed=s)).unitary),
                          v_tri) for s in range(100)]
    p05 = float(np.percentile(noisy, 5))
    report(6, "reconstruction round trip", min(clean) >= 0.999 and p05 >= 0.95,
           f"noiseless min F {min(clean):.12f}, sigma=0.01 5th percentile F {p05:.4f}", t.elapsed, 60)


@pytest.mark.slow
def test_criterion_7_detection_closed_loop():
    rng = np.random.default_rng(2024)
    tree = DetectorTree()
    with Timer() as t:
        worst, misses = 0.0, 0
        for i in range(20):
            p = rng.dirichlet(np.ones(10))
            counts = simulate_counts(OutputDistribution(3, 3, p), tree, n_events=10 ** 6, seed=1000 + i)
            est = estimate_distribution(counts, tree, n_bootstrap=1000, seed=i)
            z = np.abs(est.distribution.probs - p) / est.std
            worst = max(worst, float(z.max()))
            misses += int(np.sum(z > 3))
        g = gram_from_pairwise({(0, 1): 0.90, (1, 2): 0.90, (0, 2): 0.88})
        model = mixture_distribution(ideal_tritter(), SourceModel(p1_qd=0.07, g2=0.071), g)
        small = estimate_distribution(simulate_counts(model, tree, seed=7, target_triples=3078), tree,
                                      n_bootstrap=1000, seed=7)
        se = float(small.std[[p.counts for p in small.distribution.patterns].index((1, 1, 1))])
    ok = misses == 0 and 0.011 / 2 <= se <= 0.011 * 2
    report(7, "detection closed loop", ok,
           f"bins beyond 3 SE: {misses}/200 (max z {worst:.2f}); SE(111) at 3078 triples {se:.4f}", t.elapsed, 300)


def test_criterion_8_budget():
    with Timer() as t:
        m = projection(MEASURED)
        o3 = projection(OPTIMIZED)
        o10 = projection(OPTIMIZED.with_n(10))
    r1 = (m.source_detected / m.source_generated) / (105 / 3800)
    r2 = (m.chip_generated / m.source_generated) / (19 / 3800)
    r3 = (m.chip_detected / m.chip_generated) / (0.5 / 19)
    ok = (all(abs(r - 1) <= 0.05 for r in (r1, r2, r3))
          and 4.0e6 / 2 <= o3.chip_detected <= 4.0e6 * 2 and 40 / 3 <= o10.chip_detected <= 40 * 3)
    report(8, "rate budget", ok,
           f"ratios {r1:.3f} {r2:.3f} {r3:.3f}; 3-photon {o3.chip_detected:.3g} Hz; 10-photon {o10.chip_detected:.3g} Hz",
           t.elapsed, 1)


def test_criterion_9_determinism(tmp_path):
    cfg = tmp_path / "run.toml"
    cfg.write_text("seed = 42\n[detection]\nn_events = 100000\nn_bootstrap = 50\n"
                   "[reconstruct]\nnoise = 0.01\nn_trials = 5\n[oracle_check]\nn_cases = 10\n"
                   "[demux]\ncontrast = 0.9\nexport_waveforms = true\n")
    same, files = True, 0
    with Timer() as t:
        for command in ("simulate", "demux", "reconstruct", "budget", "oracle-check"):
            outs = []
            for k in range(2):
                d = tmp_path / f"{command}-{k}"
                d.mkdir()
                assert run([command, "--config", str(cfg), "--out", str(d)]) == 0
                outs.append({p.name: p.read_bytes() for p in sorted(d.iterdir())})
            same &= outs[0] == outs[1]
            files += len(outs[0])
    report(9, "byte-identical reruns", same and files > 0, f"{files} output files compared", t.elapsed, 120)


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-s", "-q"]))
