"""Command-line harness: experiment orchestration and machine-readable artifacts.

Subcommands: simulate, conjugate, spectrum, encode, potentials, pressure,
green-kubo, ldp.  Every run writes its artifacts plus a manifest
(run_manifest.json) carrying the config hash, seed, package versions, and wall
time.  CSV artifacts are comma-separated with '.' decimals, a header row, and
LF line endings.  Exit codes: 0 ok, 1 runtime module error, 2 invalid config.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .catmap import CatMap
from .config import ConfigError, ExperimentConfig, load_config
from .conjugation import ExpansionOrder, OrbitExpansion, conjugate, conjugacy_residual
from .coupling import coupling_by_name
from .decimation import BlockLayout, DecimatedSystem, perron_frobenius
from .dynamics import apply_S_eps
from .lattice import LatticeGeometry
from .orbitio import OrbitHeader, write_orbit
from .partition import build_cat_partition, write_partition_artifact
from .polymer import cluster_log_partition, polymer_activities, pressure_truncated
from .potentials import assemble_srb_potentials, decay_report
from .srb import (generating_function, green_kubo_check, interval_probability_check,
                  rate_function, rng_from_seed, window_rates)
from .symbolic import SymbolicCoding
from .unstable import FrameExpansion, lambda_expansion, unstable_frame_qr


def _write_csv(path: Path, header: list, rows):
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(f"{x:.12g}" if isinstance(x, float) else str(x)
                              for x in row) + "\n")


def _geometry(cfg: ExperimentConfig):
    geom = LatticeGeometry(cfg["model.d"], cfg["model.N"])
    coup = coupling_by_name(cfg["model.coupling"], cfg["model.d"])
    return geom, coup


def cmd_simulate(cfg, out: Path):
    geom, coup = _geometry(cfg)
    eps = cfg["model.eps"]
    rng = rng_from_seed(cfg["estimator.seed"])
    psi = rng.uniform(0, 2 * np.pi, (geom.nsites, 2))
    T = cfg["estimator.T"]
    frames = np.empty((T, geom.nsites, 2))
    for t in range(T):
        frames[t] = psi
        psi = apply_S_eps(geom, coup, psi, eps)
    path = out / "orbit.srbl"
    write_orbit(path, OrbitHeader(geom.d, geom.N, eps, coup.name), frames)
    return {"orbit": str(path), "frames": T}


def cmd_conjugate(cfg, out: Path):
    geom, coup = _geometry(cfg)
    rng = rng_from_seed(cfg["estimator.seed"])
    eps_list = cfg["model.eps_list"]
    K_max = cfg["expansion.K"]
    P = cfg["expansion.P_max"]
    n_states = 20
    rows = []
    for K in range(1, K_max + 1):
        maxima = []
        for eps in eps_list:
            res = [conjugacy_residual(geom, coup, rng.uniform(0, 2 * np.pi,
                                                              (geom.nsites, 2)),
                                      eps, K, P) for _ in range(n_states)]
            maxima.append(max(res))
            rows.append([K, float(eps), float(max(res)), float(np.mean(res)), np.nan])
        slope = float(np.polyfit(np.log(eps_list), np.log(maxima), 1)[0])
        for r in rows:
            if r[0] == K and np.isnan(r[4]):
                r[4] = slope
    _write_csv(out / "conjugacy_residuals.csv",
               ["K", "eps", "max_residual", "mean_residual", "slope"], rows)
    return {"table": str(out / "conjugacy_residuals.csv")}


def cmd_spectrum(cfg, out: Path):
    geom, coup = _geometry(cfg)
    K, P = cfg["expansion.K"], cfg["expansion.P_max"]
    rng = rng_from_seed(cfg["estimator.seed"])
    psi0 = rng.uniform(0, 2 * np.pi, (geom.nsites, 2))
    rows = []
    window = 400
    trans = 100
    for eps in cfg["model.eps_list"]:
        fr = FrameExpansion(geom, coup, psi0, ExpansionOrder(K, P), window=(0, window))
        chi = np.array([conjugate(geom, coup, psi0, eps, K, expansion=fr.ex, t=t)
                        for t in range(window + 1)])
        growth, _, diags = unstable_frame_qr(geom, coup, chi, eps, n_transient=trans)
        lam_p = np.array([lambda_expansion(geom, coup, psi0, eps, K, frame=fr, t=t)
                          for t in range(trans, window)])
        for site in range(geom.nsites):
            lp = float(lam_p[:, site].mean())
            lq = float(diags[:, site].mean())
            rows.append([float(eps), K, site, lp, lq, abs(lp - lq)])
    _write_csv(out / "spectrum.csv",
               ["eps", "K", "site", "Lambda_pert", "Lambda_qr", "abs_diff"], rows)
    return {"table": str(out / "spectrum.csv")}


def cmd_encode(cfg, out: Path):
    cod = SymbolicCoding()
    write_partition_artifact(cod.part, out / "partition.txt")
    rng = rng_from_seed(cfg["estimator.seed"])
    m = cfg["symbolic.m"]
    p = rng.uniform(0, 2 * np.pi, 2)
    sym = cod.encode(p, m, margin=cfg["symbolic.margin"])
    rows = [[int(t - m), int(s)] for t, s in enumerate(sym)]
    _write_csv(out / "encode.csv", ["t", "symbol"], rows)
    q = cod.decode(sym)
    return {"partition": str(out / "partition.txt"), "point": p.tolist(),
            "decode_roundtrip": q.tolist()}


def cmd_potentials(cfg, out: Path):
    _, coup = _geometry(cfg)
    cod = SymbolicCoding()
    fam = assemble_srb_potentials(cod, coup, cfg["model.eps"], cfg["expansion.K"],
                                  j_max=cfg["expansion.j_max"],
                                  t_cap=cfg["expansion.t_cap"],
                                  prune_tol=cfg["expansion.prune_tol"])
    fam.estimate_sup_norms(rng_from_seed(cfg["estimator.seed"]),
                           nsamples=cfg["gibbs.sup_samples"])
    with open(out / "potentials.jsonl", "w", newline="\n") as fh:
        for e in fam.entries.values():
            fh.write(json.dumps({
                "cells": sorted([list(s) + [t] for s, t in e.support]),
                "n_X": e.geometry.n_segments,
                "d_c": e.geometry.d_c,
                "sup_norm": e.sup_norm,
                "order": sorted(e.orders),
            }) + "\n")
    rep = decay_report(fam, floor=cfg["gibbs.norm_floor"])
    summary = {"entries": len(fam.entries), "tail_bound": fam.tail_bound,
               "all_zero": rep.all_zero, "kappa": rep.kappa,
               "kappa_segments": rep.kappa_segments, "nu": rep.nu,
               "r_squared": rep.r_squared}
    with open(out / "decay_report.json", "w") as fh:
        json.dump(summary, fh, indent=1)
    return summary


def cmd_pressure(cfg, out: Path):
    part = build_cat_partition()
    h0 = cfg["gibbs.h0"]
    pf = perron_frobenius(part.C, part.a, h0)
    layout = BlockLayout(a=part.a, h0=h0, ell=cfg["gibbs.ell"], ncols=1)
    sysd = DecimatedSystem(pf, layout)
    sysd.add_I_terms()
    ps = polymer_activities(sysd, molecule_cap=cfg["gibbs.molecule_cap"])
    P, tail = pressure_truncated(ps, n_max=cfg["gibbs.cluster_cap"])
    summary = {"log_l_over_a": float(np.log(pf.l) / part.a), "P": P,
               "tail_estimate": tail, "n_polymers": len(ps.gammas),
               "alpha": pf.alpha, "max_I": float(np.abs(pf.I).max())}
    with open(out / "pressure.json", "w") as fh:
        json.dump(summary, fh, indent=1)
    return summary


def cmd_green_kubo(cfg, out: Path):
    geom, coup = _geometry(cfg)
    res = green_kubo_check(geom, coup, cfg["model.eps_list"],
                           T=cfg["estimator.T"], burn_in=cfg["estimator.burn_in"],
                           seed=cfg["estimator.seed"])
    summary = {"inputs": {"d": geom.d, "N": geom.N, "T": cfg["estimator.T"],
                          "eps_list": list(map(float, cfg["model.eps_list"])),
                          "seed": cfg["estimator.seed"]}}
    summary.update(res.summary())
    summary["c1_consistent_with_zero"] = bool(abs(res.c1) <= 3 * res.c1_err)
    summary["c2_within_15pct_of_reference"] = bool(
        abs(res.c2 - res.c2_reference) <= 0.15 * abs(res.c2_reference))
    summary["c2_within_15pct_of_lattice_value"] = bool(
        abs(res.c2 - res.c2_lattice) <= 0.15 * abs(res.c2_lattice))
    with open(out / "green_kubo.json", "w") as fh:
        json.dump(summary, fh, indent=1)
    return summary


def cmd_ldp(cfg, out: Path):
    geom, coup = _geometry(cfg)
    eps = cfg["model.eps"]
    sites = cfg["estimator.V0"] or None
    T0 = cfg["estimator.T0"]
    etas = window_rates(geom, coup, eps, T0=T0, n_windows=cfg["estimator.n_windows"],
                        sites=sites, seed=cfg["estimator.seed"],
                        burn_in=cfg["estimator.burn_in"])
    size = (len(sites) if sites else geom.nsites) * T0
    gf = generating_function(etas, size,
                             np.linspace(-1, 1, cfg["estimator.zeta_points"]))
    est = rate_function(gf)
    lo, hi = float(etas.mean() + etas.std()), float(etas.mean() + 3 * etas.std())
    try:
        emp, pred, count = interval_probability_check(etas, size, lo, hi, est)
        interval = {"a": lo, "b": hi, "empirical": emp, "prediction": pred,
                    "count": count}
    except Exception as exc:  # rare events at small window counts
        interval = {"error": type(exc).__name__}
    summary = {
        "inputs": {"d": geom.d, "N": geom.N, "eps": eps, "T0": T0,
                   "n_windows": cfg["estimator.n_windows"],
                   "seed": cfg["estimator.seed"]},
        "size": size, "eta_plus": est.eta_plus, "eta_mean": float(etas.mean()),
        "zetas": gf.zetas.tolist(), "P": gf.P.tolist(), "P_err": gf.P_err.tolist(),
        "ess_min": float(gf.ess.min()),
        "F_min": float(est.F.min()), "F_argmin": float(est.etas[np.argmin(est.F)]),
        "interval_check": interval,
    }
    with open(out / "ldp.json", "w") as fh:
        json.dump(summary, fh, indent=1)
    return summary


_COMMANDS = {
    "simulate": cmd_simulate,
    "conjugate": cmd_conjugate,
    "spectrum": cmd_spectrum,
    "encode": cmd_encode,
    "potentials": cmd_potentials,
    "pressure": cmd_pressure,
    "green-kubo": cmd_green_kubo,
    "ldp": cmd_ldp,
}


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="catlattice",
                                 description="coupled cat-map lattice experiments")
    ap.add_argument("command", choices=sorted(_COMMANDS))
    ap.add_argument("--config", default=None, help="INI config file")
    ap.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE")
    ap.add_argument("--out", default=None, help="output directory")
    ap.add_argument("--seed", type=int, default=None)
    ap.add_argument("--threads", type=int, default=1)
    args = ap.parse_args(argv)
    t0 = time.time()
    try:
        overrides = list(args.set)
        if args.seed is not None:
            overrides.append(f"estimator.seed={args.seed}")
        cfg = load_config(args.config, overrides)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out or cfg["output.dir"])
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": args.command,
        "config_hash": cfg.digest(),
        "seed": cfg["estimator.seed"],
        "versions": {"catlattice": __version__, "numpy": np.__version__,
                     "python": sys.version.split()[0]},
    }
    try:
        result = _COMMANDS[args.command](cfg, out)
        manifest["status"] = "ok"
        manifest["result"] = result
    except Exception as exc:
        manifest["status"] = "error"
        manifest["error"] = type(exc).__name__
        manifest["message"] = str(exc)
        manifest["wall_time_s"] = time.time() - t0
        with open(out / "run_manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=1, default=str)
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    manifest["wall_time_s"] = time.time() - t0
    with open(out / "run_manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=1, default=str)
    print(json.dumps(manifest["result"], indent=1, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
