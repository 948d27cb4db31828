"""Command-line scenario runner.

    spinquad <subcommand> --config FILE [--seed N] [--out DIR] [--threads N]

Subcommands: scheme, tomography, husimi, benchmark, oracle-check,
folded-search.  Each run writes its artifacts plus ``manifest.json`` (config
hash, seed, library versions, artifact hashes) into the output directory.
Exit codes: 0 ok, 2 configuration error, 3 numerical invariant failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import platform
import sys
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from . import benchmark as bm
from . import fock, schemes, tomography
from .config import ConfigError, Scenario, load
from .core import LIGHT, SPIN, InvariantError, apply_map
from .interactions import P_PHASE, X_PHASE, HomodyneSetting, PassSpec, fr_pass, thermal_state

log = logging.getLogger("spinquad")

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 2, 3

COMMANDS = ("scheme", "tomography", "husimi", "benchmark", "oracle-check", "folded-search")

READOUTS = {
    "s_y": HomodyneSetting(LIGHT, X_PHASE),
    "s_z": HomodyneSetting(LIGHT, P_PHASE),
    "j_y": HomodyneSetting(SPIN, X_PHASE),
    "j_z": HomodyneSetting(SPIN, P_PHASE),
}

TEMPLATES = {
    "unfolded": schemes.UNFOLDED_SWAP_TEMPLATE,
    "folded_swap": schemes.FOLDED_SWAP_TEMPLATE,
    "folded_swap_z": schemes.FOLDED_SWAP_TEMPLATE_Z_ONLY,
    "folded_swap_no_waveplate": schemes.FOLDED_SWAP_TEMPLATE_NO_WAVEPLATE,
    "folded_two_pass": schemes.FOLDED_TWO_PASS_TEMPLATE,
}


def _json(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def versions() -> dict:
    try:
        pkg = metadata.version("artifact")
    except metadata.PackageNotFoundError:
        pkg = "unknown"
    return {"spinquad": pkg, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": platform.python_version()}


def _alpha(sc: Scenario) -> complex:
    return complex(sc["state.alpha_re"], sc["state.alpha_im"])


def spin_state(sc: Scenario, allow_fock: bool = False):
    """Spin preparation from the ``state.*`` keys."""
    kind = sc["state.kind"]
    if kind == "fock1":
        if not allow_fock:
            raise ConfigError("state.kind = fock1 is only supported by the tomography subcommand",
                              sc.lines.get("state.kind"))
        return fock.single_mode(fock.fock_ket(sc["state.cutoff"], 1))
    if kind == "vacuum":
        return schemes.spin_coherent(0.0)
    if kind == "coherent":
        return schemes.spin_coherent(_alpha(sc))
    if kind == "squeezed":
        return schemes.spin_squeezed(sc["state.r"], _alpha(sc))
    return thermal_state(schemes.SPIN_ONLY, SPIN, sc["state.variance"])


def _scheme_config(sc: Scenario) -> schemes.SchemeConfig:
    name = sc["scheme.name"]
    kappa = sc["scheme.kappa"]
    if name == "custom":
        if not sc["scheme.steps"]:
            raise ConfigError("scheme.name = custom needs scheme.steps", sc.lines.get("scheme.name"))
        try:
            steps = tuple(schemes.parse_step(t) for t in sc["scheme.steps"])
        except ValueError as exc:
            raise ConfigError(str(exc), sc.lines.get("scheme.steps")) from None
    else:
        couplings = {"single_pass": "Z", "two_pass": "ZY", "three_pass": "ZYZ"}[name]
        steps = tuple(PassSpec(c, 1, kappa) for c in couplings)
    settings = []
    for m in sc["scheme.measure"]:
        if m not in READOUTS:
            raise ConfigError(f"unknown readout {m!r}; choose from {', '.join(READOUTS)}",
                              sc.lines.get("scheme.measure"))
        settings.append(READOUTS[m])
    probe = schemes.Probe(sc["scheme.probe"], r=sc["scheme.probe_r"], variance=sc["scheme.probe_variance"])
    plan = schemes.MeasurementPlan(tuple(settings), sc["scheme.shots"], tuple(sc["scheme.angles"]))
    return schemes.SchemeConfig(steps, probe, plan, name)


# -- subcommands: each returns {filename: text} -------------------------------

def cmd_scheme(sc: Scenario, threads: int) -> dict[str, str]:
    cfg = _scheme_config(sc)
    samples = schemes.run_scheme(cfg, spin_state(sc), sc.seed, threads)
    m = cfg.map()
    summary = {"steps": [schemes.describe(s) for s in cfg.steps], "matrix": m.matrix.tolist(),
               "swap_class": schemes.is_swap_class(m.matrix),
               "readouts": list(sc["scheme.measure"]),
               "sample_mean": samples.outcomes.mean(axis=0).tolist(),
               "sample_var": samples.outcomes.var(axis=0, ddof=1).tolist() if len(samples) > 1 else None}
    return {"samples.csv": samples.to_csv(), "scheme.json": _json(summary)}


def cmd_tomography(sc: Scenario, threads: int) -> dict[str, str]:
    spin = spin_state(sc, allow_fock=True)
    n = sc["tomography.angles"]
    angles = np.pi * np.arange(n) / n
    samples = schemes.tomography_scan(spin, angles, sc["tomography.shots"], sc.seed, threads)
    sino = tomography.build_sinogram(samples, sc["tomography.bins"])
    grid = tomography.GridSpec(sc["tomography.grid_extent"], sc["tomography.grid_n"])
    w = tomography.fbp_reconstruct(sino, grid, sc["tomography.cutoff"])
    summary = {"W_origin": float(tomography.fbp_points(sino, np.zeros(1), np.zeros(1), sc["tomography.cutoff"])[0]),
               "total": w.total(), "angles": n, "shots_per_angle": sc["tomography.shots"],
               "cutoff": sc["tomography.cutoff"], "backend": samples.metadata["backend"]}
    if "edge_population" in samples.metadata:
        summary["edge_population"] = samples.metadata["edge_population"]
    kind = sc["state.kind"]
    if kind != "thermal":
        ref = tomography.analytic_reference(kind, "W", grid, _alpha(sc), sc["state.r"])
        l1, mx = tomography.grid_error(w, ref)
        summary["reference_L1"], summary["reference_max_abs"] = l1, mx
    return {"samples.csv": samples.to_csv(), "wigner.csv": w.to_csv(), "wigner.dat": w.to_gnuplot(),
            "summary.json": _json(summary)}


def cmd_husimi(sc: Scenario, threads: int) -> dict[str, str]:
    spin = spin_state(sc)
    samples = schemes.husimi_acquisition(spin, sc["husimi.shots"], sc.seed, threads)
    grid = tomography.GridSpec(sc["husimi.grid_extent"], sc["husimi.grid_n"])
    bw = sc["husimi.bandwidth"] or None
    q = tomography.husimi_estimate(samples, grid, bw)
    px, pp = q.peak()
    summary = {"peak": [px, pp], "total": q.total(), "shots": len(samples),
               "bandwidth": tomography.reference_bandwidth(tomography.spin_frame_pairs(samples)).tolist()
               if bw is None else [bw, bw]}
    if sc["state.kind"] != "thermal":
        ref = tomography.analytic_reference(sc["state.kind"], "Q", grid, _alpha(sc), sc["state.r"])
        l1, mx = tomography.grid_error(q, ref)
        summary["reference_L1"], summary["reference_max_abs"] = l1, mx
    return {"samples.csv": samples.to_csv(), "husimi.csv": q.to_csv(), "husimi.dat": q.to_gnuplot(),
            "summary.json": _json(summary)}


def _channel(sc: Scenario):
    kind, val = sc["benchmark.channel"], sc["benchmark.channel_param"]
    if kind == "identity":
        return bm.GaussianChannel.identity()
    if kind == "swap":
        return bm.GaussianChannel.from_map(schemes.three_pass_swap_map(), post_rotation=-schemes.SWAP_ROTATION)
    if kind == "attenuator":
        return bm.GaussianChannel.attenuator(val)
    if kind == "noise":
        return bm.GaussianChannel.additive_noise(val)
    if kind == "measure_prepare":
        return bm.MeasureAndPrepare(val)
    return bm.MeasureAndPrepare.optimal(sc["benchmark.eta"], sc["benchmark.lambda"])


def cmd_benchmark(sc: Scenario, threads: int) -> dict[str, str]:
    params = bm.BenchmarkParams(eta=sc["benchmark.eta"], lam=sc["benchmark.lambda"], phi=sc["benchmark.phi"],
                                samples=sc["benchmark.samples"], seed=sc.seed)
    verdict = bm.criterion_report(_channel(sc), params, threads)
    return {"verdict.json": verdict.to_json() + "\n"}


class OracleMismatch(InvariantError):
    pass


def oracle_moments(alpha: complex, d: int, kappa: float = 1.0) -> dict:
    """Moments after one Z pass on a coherent spin and vacuum light, both backends."""
    g = apply_map(schemes.joint_state(schemes.spin_coherent(alpha)), fr_pass(PassSpec("Z", 1, kappa)))
    ket = fock.gate_exponential(d, "Z", kappa) @ np.kron(fock.fock_ket(d, 0), fock.coherent_ket(d, alpha))
    fm, fc = fock.ket_moments(ket, (d, d))
    edge = fock.edge_population(fock.TruncatedFockState.from_ket(ket, (d, d)))
    return {"alpha": [alpha.real, alpha.imag],
            "mean_diff": float(np.abs(fm - g.mean).max()),
            "cov_diff": float(np.abs(fc - g.cov).max()),
            "edge_population": edge}


def cmd_oracle_check(sc: Scenario, threads: int) -> dict[str, str]:
    d, tol = sc["oracle.cutoff"], sc["oracle.tolerance"]
    alphas = [complex(a) * ph for a in sc["oracle.alphas"] for ph in (1, 1j)]
    rows = [oracle_moments(a, d) for a in alphas]
    worst = max(max(r["mean_diff"], r["cov_diff"]) for r in rows)
    report = {"cutoff": d, "tolerance": tol, "cases": rows, "max_diff": worst, "pass": worst <= tol}
    files = {"oracle.json": _json(report)}
    if worst > tol:
        raise OracleMismatch(f"engine and Fock oracle differ by {worst:.3e} > {tol:g}", files)
    return files


def cmd_folded_search(sc: Scenario, threads: int) -> dict[str, str]:
    name = sc["search.template"]
    target = schemes.three_pass_swap_map() if sc["search.target"] == "swap" else schemes.two_pass_transducer_map()
    result = schemes.folded_scheme_search(target, TEMPLATES[name])
    return {"folded_search.json": _json({"template": name, "target": sc["search.target"], **result.to_dict()})}


HANDLERS = {
    "scheme": cmd_scheme,
    "tomography": cmd_tomography,
    "husimi": cmd_husimi,
    "benchmark": cmd_benchmark,
    "oracle-check": cmd_oracle_check,
    "folded-search": cmd_folded_search,
}


def manifest(command: str, sc: Scenario, files: dict[str, str]) -> str:
    return _json({
        "command": command,
        "scenario": sc.name,
        "config_sha256": sc.digest,
        "seed": sc.seed,
        "versions": versions(),
        "artifacts": {k: hashlib.sha256(v.encode()).hexdigest() for k, v in sorted(files.items())},
    })


def write_artifacts(out: Path, command: str, sc: Scenario, files: dict[str, str]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for name, text in files.items():
        (out / name).write_text(text)
    (out / "manifest.json").write_text(manifest(command, sc, files))


def run(command: str, config: str | Path, seed: int | None = None, out: str | Path | None = None,
        threads: int = 1) -> int:
    try:
        sc = load(config)
        if seed is not None:
            sc.values["scenario.seed"] = int(seed)
        out_dir = Path(out if out is not None else sc["output.dir"])
        files = HANDLERS[command](sc, max(1, threads))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (InvariantError, tomography.GridTooSmall) as exc:
        partial = exc.args[1] if len(exc.args) > 1 and isinstance(exc.args[1], dict) else {}
        if partial:
            write_artifacts(out_dir, command, sc, partial)
        print(f"invariant failure: {exc.args[0]}", file=sys.stderr)
        return EXIT_INVARIANT
    except ValueError as exc:
        # parameter validation in the library (e.g. lambda <= 0) is a scenario problem
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    write_artifacts(out_dir, command, sc, files)
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="spinquad", description="Spin-light quadrature scenario runner")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", required=True, help="scenario file")
    parser.add_argument("--seed", type=int, default=None, help="override scenario.seed")
    parser.add_argument("--out", default=None, help="output directory (overrides output.dir)")
    parser.add_argument("--threads", type=int, default=1, help="worker threads; results do not depend on it")
    parser.add_argument("-v", "--verbose", action="store_true")
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    return run(args.command, args.config, args.seed, args.out, args.threads)


if __name__ == "__main__":
    sys.exit(main())
