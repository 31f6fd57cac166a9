"""Command-line front end.

    tritter simulate|demux|reconstruct|budget|oracle-check [--config run.toml] [--seed N] [--out DIR] [--format csv|json]
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np
from pydantic import ValidationError
from scipy.stats import unitary_group

from . import budget as bud
from . import demux as dmx
from .circuit import (
    CircuitUnitary, PhaseCalibration, TritterLayout, build_tritter, compose, coupler_unitary,
    ideal_tritter, phase_from_voltage, phase_unitary,
)
from .config import RunConfig, load_config
from .detection import DetectorTree, estimate_distribution, simulate_counts
from .interference import (
    GramMatrix, PhotonEnsemble, SourceModel, distribution, gram_from_pairwise, mixture_distribution,
    oracle_distribution,
)
from .io import atomic_write, dumps_csv, dumps_json, pattern_str, read_csv
from .reconstruct import (
    FringeData, IntensityData, fidelity, normalized_fidelity, reconstruct_unitary, simulate_measurements,
    visibility_matrix,
)

log = logging.getLogger("tritter")

NS = 1e-9


# -- builders ---------------------------------------------------------------

def build_circuit(cfg) -> CircuitUnitary:
    c = cfg.circuit
    cal = PhaseCalibration(tuple(c.calibration.voltages), tuple(c.calibration.phases)) if c.calibration else None
    if c.kind == "ideal":
        return ideal_tritter(c.modes)
    if c.kind == "identity":
        return CircuitUnitary(np.eye(c.modes), label="identity")
    if c.kind == "tritter":
        if c.voltage is not None:
            phi = phase_from_voltage(cal, c.voltage)
        else:
            phi = np.pi / 2 if c.phi is None else c.phi
        return build_tritter(TritterLayout(c.r1, c.r2, phi))
    if c.kind == "matrix":
        re = np.asarray(c.matrix_real, dtype=float)
        im = np.zeros_like(re) if c.matrix_imag is None else np.asarray(c.matrix_imag, dtype=float)
        return CircuitUnitary(re + 1j * im, label="configured matrix")
    parts = []
    for el in c.elements:
        if el.type == "coupler":
            parts.append(coupler_unitary(el.reflectivity, el.modes[0], el.modes[1], c.modes))
        else:
            phi = el.phase if el.phase is not None else phase_from_voltage(cal, el.voltage)
            parts.append(phase_unitary(phi, el.mode, c.modes))
    return compose(parts)


def build_source(cfg, m: int) -> tuple[SourceModel, GramMatrix]:
    s = cfg.source
    src = SourceModel(p1_qd=s.p1_qd, g2=s.g2, m_near=s.m_near, m_far=s.m_far)
    if s.pairwise is not None:
        gram = gram_from_pairwise({(int(i), int(j)): float(v) for i, j, v in s.pairwise}, n=m)
    else:
        gram = src.gram(m)
    return src, gram


def build_trees(cfg, m: int) -> tuple[DetectorTree, ...]:
    d = cfg.detection
    return (DetectorTree(tuple(d.split_probs), d.eta, d.dark_rate, d.window_ns * NS),) * m


# -- commands ---------------------------------------------------------------

def _distribution_table(cols: dict) -> tuple[list[str], list[tuple]]:
    names = list(cols)
    first = cols[names[0]]
    rows = [(pattern_str(p.counts), *[cols[k].probs[i] for k in names]) for i, p in enumerate(first.patterns)]
    return ["pattern", *names], rows


def _summary(d) -> dict:
    m = d.m
    out = {"P_" + pattern_str(p.counts).replace(" ", ""): float(q) for p, q in d}
    if d.n == 3 and m == 3:
        out["mean_no_collision"] = d.mean_of_type((1, 1, 1))
        out["mean_bunching"] = d.mean_of_type((3, 0, 0))
        out["mean_collision"] = d.mean_of_type((2, 1, 0))
    return out


def cmd_simulate(cfg: RunConfig, seed: int, fmt: str) -> dict[str, str]:
    U = build_circuit(cfg)
    m = U.m
    modes = tuple(cfg.simulate.input_modes) if cfg.simulate.input_modes is not None else tuple(range(m))
    src, gram = build_source(cfg, len(modes))
    cols = {}
    if modes == tuple(range(m)):
        cols["model"] = mixture_distribution(U, src, gram)
    cols["pure_qd"] = distribution(U, PhotonEnsemble(modes, gram))
    cols["indistinguishable"] = distribution(U, PhotonEnsemble(modes, GramMatrix.indistinguishable(len(modes)),
                                                               labels=tuple(f"q{k}" for k in range(len(modes)))))
    cols["distinguishable"] = distribution(U, PhotonEnsemble.distinguishable(modes))
    header, rows = _distribution_table(cols)
    summary = {
        "circuit": U.label, "input_modes": list(modes), "seed": seed,
        "source": {"p1_qd": src.p1_qd, "g2": src.g2, "p1_laser": src.p1_laser, "p0": src.p0},
        "gram_real": np.real(gram.S), "distributions": {k: _summary(v) for k, v in cols.items()},
    }
    files = {}
    if fmt == "csv":
        files["distribution.csv"] = dumps_csv(header, rows)
    else:
        files["distribution.json"] = dumps_json({"columns": header, "rows": [list(r) for r in rows]})

    det = cfg.detection
    if det.n_events > 0 or det.target_triples:
        trees = build_trees(cfg, m)
        counts = simulate_counts(cols["model"], trees, n_events=max(det.n_events, 1), seed=seed,
                                 target_triples=det.target_triples)
        est = estimate_distribution(counts, trees, n_bootstrap=det.n_bootstrap, seed=seed)
        files["counts.csv"] = counts.to_csv()
        files["estimate.json"] = dumps_json(est.to_dict())
        summary["detection"] = {"n_generated": counts.n_generated, "n_triples": counts.total}
    files["summary.json"] = dumps_json(summary)
    return files


def _scheme_from_config(d, ideal: bool = False):
    kw = dict(contrast=1.0 if ideal else d.contrast, rise_time=0.0 if ideal else d.rise_time_ns * NS,
              dt=d.dt_ns * NS)
    period = d.period_ns * NS
    if d.scheme == "ideal-3arm":
        return dmx.ideal_scheme_3arm(period, **kw)
    if d.scheme == "cascaded-binary":
        return dmx.cascaded_binary_scheme(d.n_arms, period, **kw)
    if d.scheme == "equal-slot":
        return dmx.equal_slot_scheme(d.n_arms, period, **kw)
    waves = tuple(dmx.RoutingWaveform.from_csv(p, period=period) for p in d.waveform_csv)
    return dmx.DemuxScheme(waves, label="measured waveforms")


def cmd_demux(cfg: RunConfig, seed: int, fmt: str) -> dict[str, str]:
    d = cfg.demux
    scheme = _scheme_from_config(d)
    # switched off, a generated scheme splits statically with its nominal duty cycles
    nominal = scheme if d.scheme == "waveforms" else _scheme_from_config(d, ideal=True)
    passive_probs = nominal.duty_cycles()
    c_passive = dmx.conversion_rate_passive(passive_probs)
    c_active = c_passive if d.passive else dmx.conversion_rate_active(scheme)
    ratio = c_active / c_passive
    if d.r_ideal is not None:
        r_ideal = d.r_ideal
    elif d.scheme == "waveforms":
        r_ideal = ratio
    else:
        r_ideal = dmx.active_passive_ratio(nominal)
    r_exp = d.r_exp if d.r_exp is not None else ratio
    result = {
        "scheme": scheme.label, "n_arms": scheme.n_arms, "period_ns": scheme.period / NS,
        "passive": d.passive, "static_probabilities": passive_probs,
        "C_active": c_active, "C_passive": c_passive, "ratio": ratio,
        "r_exp": r_exp, "r_ideal": r_ideal,
        "eta_active": dmx.active_efficiency(r_exp, r_ideal) if r_ideal > 1 else None,
    }
    files = {"rates.json": dumps_json(result)}
    if d.export_waveforms:
        t = scheme.waveforms[0].times / NS
        header = ["time_ns"] + [f"arm{k + 1}" for k in range(scheme.n_arms)]
        rows = zip(t, *[w.samples for w in scheme.waveforms])
        files["waveforms.csv"] = dumps_csv(header, rows)
    return files


def _load_measurements(rc) -> tuple[IntensityData, FringeData]:
    _, rows = read_csv(rc.intensities_csv)
    m = 1 + max(max(int(r[0]), int(r[1])) for r in rows)
    I = np.full((m, m), np.nan)
    for r in rows:
        I[int(r[0]), int(r[1])] = float(r[2])
    _, frows = read_csv(rc.fringes_csv)
    amp = np.zeros((m, m, m))
    ph = np.zeros((m, m, m))
    seen = set()
    for r in frows:
        i, j, k = int(r[0]), int(r[1]), int(r[2])
        amp[i, j, k], ph[i, j, k] = float(r[3]), float(r[4])
        seen.add((i, j, k))
    need = {(0, j, k) for j in range(1, m) for k in range(m)}
    if np.isnan(I).any() or not need <= seen:
        raise ValueError("incomplete measurement data: every (input, output) intensity and every "
                         "fringe of input pairs (0, j) are required")
    return IntensityData(I), FringeData(amp, ph)


def cmd_reconstruct(cfg: RunConfig, seed: int, fmt: str) -> dict[str, str]:
    rc = cfg.reconstruct
    if rc.data == "synthetic" or rc.reference == "circuit":
        U = build_circuit(cfg)
    reference = ideal_tritter(3) if rc.reference == "ideal-tritter" else U
    v_ref = visibility_matrix(reference)
    fids, norm_fids, residuals = [], [], []
    first = None
    trials = rc.n_trials if rc.data == "synthetic" else 1
    for t in range(trials):
        if rc.data == "synthetic":
            data = simulate_measurements(U, rc.noise, seed=seed + t, n_phase_steps=rc.n_phase_steps)
        else:
            data = _load_measurements(rc)
        rec = reconstruct_unitary(data, tol=rc.tol)
        v = visibility_matrix(rec.unitary)
        fids.append(fidelity(v, v_ref))
        norm_fids.append(normalized_fidelity(v, v_ref))
        residuals.append(rec.residual)
        if first is None:
            first = (rec, v)
    rec, v = first
    u = rec.unitary.matrix
    mat_rows = [(j, k, u[j, k].real, u[j, k].imag) for j in range(u.shape[0]) for k in range(u.shape[1])]
    vis_rows = [(f"{i} {j}", f"{k} {l}", v.values[a, b], v_ref.values[a, b])
                for a, (i, j) in enumerate(v.input_pairs) for b, (k, l) in enumerate(v.output_pairs)]
    report = {
        "reference": rc.reference, "data": rc.data, "noise": rc.noise, "n_trials": trials, "seed": seed,
        "fidelity": fids[0], "normalized_fidelity": norm_fids[0], "residual": residuals[0],
        "consistent": rec.consistent,
        "fidelity_trials": {
            "min": min(fids), "p05": float(np.percentile(fids, 5)), "median": float(np.median(fids)),
            "mean": float(np.mean(fids)),
        },
    }
    files = {"fidelity.json": dumps_json(report)}
    if fmt == "csv":
        files["unitary.csv"] = dumps_csv(["row", "col", "real", "imag"], mat_rows)
        files["visibility.csv"] = dumps_csv(["inputs", "outputs", "reconstructed", "reference"], vis_rows)
    else:
        files["unitary.json"] = dumps_json({"real": u.real, "imag": u.imag})
        files["visibility.json"] = dumps_json({"reconstructed": v.values, "reference": v_ref.values,
                                               "pairs": [list(p) for p in v.input_pairs]})
    return files


def cmd_budget(cfg: RunConfig, seed: int, fmt: str) -> dict[str, str]:
    tables = []
    for pc in cfg.budget.pipeline:
        base = bud.BudgetPipeline(
            pc.rep_rate_hz, pc.fibered_brightness, pc.demux_transmission, pc.chip_transmission,
            pc.det_efficiency, n=pc.n[0], demux_conversion=pc.demux_conversion,
            measured_source_rate=pc.measured_source_rate_hz, demux_scheme=pc.demux_scheme, label=pc.label,
        )
        for n in pc.n:
            tables.append(bud.projection(base if n == base.n else base.with_n(n)))
    if fmt == "csv":
        return {"budget.csv": bud.tables_to_csv(tables)}
    return {"budget.json": dumps_json([t.as_dict() for t in tables])}


def random_gram(n: int, rng) -> np.ndarray:
    x = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    x *= rng.uniform(0, 1, size=(n, 1)) ** 2  # spread overlaps between the limits
    s = x @ x.conj().T + 1e-3 * np.eye(n)
    d = np.sqrt(np.real(np.diag(s)))
    return s / np.outer(d, d)


def random_case(rng, max_photons: int, max_modes: int):
    n = int(rng.integers(1, max_photons + 1))
    m = int(rng.integers(1, max_modes + 1))
    U = CircuitUnitary(unitary_group.rvs(m, random_state=rng) if m > 1 else np.exp(1j * rng.uniform(0, 6)) * np.eye(1),
                       label="haar")
    modes = tuple(int(k) for k in rng.integers(0, m, size=n))
    return U, PhotonEnsemble(modes, GramMatrix(random_gram(n, rng)))


def cmd_oracle_check(cfg: RunConfig, seed: int, fmt: str) -> dict[str, str]:
    oc = cfg.oracle_check
    rng = np.random.default_rng(seed)
    worst, cases = 0.0, []
    for c in range(oc.n_cases):
        U, ens = random_case(rng, oc.max_photons, oc.max_modes)
        dev = float(np.max(np.abs(distribution(U, ens).probs - oracle_distribution(U, ens).probs)))
        worst = max(worst, dev)
        cases.append({"case": c, "n": ens.n, "m": U.m, "input_modes": list(ens.modes), "max_abs_diff": dev})
    report = {"n_cases": oc.n_cases, "tol": oc.tol, "max_abs_diff": worst, "passed": worst <= oc.tol,
              "seed": seed}
    files = {"oracle_check.json": dumps_json(report)}
    if fmt == "csv":
        files["oracle_cases.csv"] = dumps_csv(["case", "n", "m", "input_modes", "max_abs_diff"],
                                              [(c["case"], c["n"], c["m"], pattern_str(c["input_modes"]),
                                                c["max_abs_diff"]) for c in cases])
    else:
        files["oracle_cases.json"] = dumps_json(cases)
    if worst > oc.tol:
        # results are still written, the exit status flags the failure
        files["__failed__"] = f"oracle mismatch {worst:.3e} > {oc.tol:.1e}"
    return files


COMMANDS = {
    "simulate": cmd_simulate,
    "demux": cmd_demux,
    "reconstruct": cmd_reconstruct,
    "budget": cmd_budget,
    "oracle-check": cmd_oracle_check,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tritter", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", type=Path, default=None, help="TOML run configuration")
        p.add_argument("--seed", type=int, default=None, help="overrides the config seed (u64)")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        seed = cfg.seed if args.seed is None else args.seed
        if not 0 <= seed < 2 ** 64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        files = COMMANDS[args.command](cfg, seed, args.format)
    except (ValidationError, ValueError, OSError, np.linalg.LinAlgError) as exc:
        print(f"tritter {args.command}: error: {exc}", file=sys.stderr)
        return 2
    failure = files.pop("__failed__", None)
    for name, text in files.items():
        atomic_write(args.out / name, text)
        log.info("wrote %s", args.out / name)
    if failure:
        print(f"tritter {args.command}: check failed: {failure}", file=sys.stderr)
        return 1
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
