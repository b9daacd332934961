"""Command-line front end for batch scans.

Every subcommand reads its options from ``--config FILE`` (section named
after the subcommand) and then from flags, which take precedence.  Grid
jobs are split into row tasks whose layout does not depend on the worker
count, so the output is identical for any ``--workers``.  Finished tasks
are appended to ``<output>.manifest.jsonl``; rerunning with ``--resume``
skips them.

Exit codes: 0 success, 1 configuration error, 2 some cells failed, 3 fatal.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import json
import logging
import math
import os
import re
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass, field

import numpy as np

EXIT_OK, EXIT_CONFIG, EXIT_PARTIAL, EXIT_FATAL = 0, 1, 2, 3

log = logging.getLogger("spinspin")


class ConfigError(Exception):
    pass


def fmt(x) -> str:
    """17 significant digits (lossless for doubles)."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return f"{float(x):.17g}"
    return str(x)


# --- config ---------------------------------------------------------------------

def read_config(path: str, section: str) -> dict:
    """Flat ``key = value`` pairs of ``section``; errors name the offending line."""
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    try:
        parser.read_string(text, source=path)
    except configparser.Error as exc:
        raise ConfigError(str(exc).replace("\n", " ")) from exc
    if not parser.has_section(section):
        return {}
    lines = _key_lines(text)
    return {k: (v, lines.get((section, k))) for k, v in parser.items(section)}


def _key_lines(text):
    out, sec = {}, None
    for no, line in enumerate(text.splitlines(), start=1):
        s = line.strip()
        m = re.match(r"\[(.+)\]$", s)
        if m:
            sec = m.group(1).strip()
            continue
        m = re.match(r"([^=:#;\s][^=:]*?)\s*[=:]", s)
        if m and sec is not None:
            out[(sec, m.group(1).strip().lower())] = no
    return out


def parse_axis(text: str, name: str):
    """``min,max,steps[,log]`` -> array."""
    parts = [p.strip() for p in str(text).split(",")]
    if len(parts) not in (3, 4):
        raise ConfigError(f"{name}: expected min,max,steps[,log], got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from exc
    if n < 1:
        raise ConfigError(f"{name}: steps must be >= 1")
    scale = parts[3].lower() if len(parts) == 4 else "lin"
    if scale == "log":
        if lo <= 0 or hi <= 0:
            raise ConfigError(f"{name}: log axis needs positive bounds")
        return np.logspace(math.log10(lo), math.log10(hi), n)
    if scale not in ("lin", "linear"):
        raise ConfigError(f"{name}: unknown scale {parts[3]!r}")
    return np.linspace(lo, hi, n) if n > 1 else np.array([lo])


def parse_floats(text, name):
    try:
        return [float(x) for x in str(text).replace(";", ",").split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"{name}: {exc}") from exc


# --- options --------------------------------------------------------------------

PARAM_OPTS = {
    "e": (float, 0.0), "C1": (float, 0.5), "lambda1": (float, 0.0), "lambda2": (float, 0.0),
    "sigma1": (float, 0.0), "qhat1": (float, 0.0), "qhat2": (float, 0.0), "a": (float, None),
}
RES_OPTS = {"order": (str, "3:2"), "flavor": (str, "balanced"), "type": (str, "0"),
            "alpha": (float, 0.0), "kind": (str, None)}
TOL_OPTS = {"abs_tol": (float, 1e-12), "rel_tol": (float, 1e-12)}

COMMANDS = {
    "kepler-solve": {"e": (str, "0.5"), "t": (str, "0,1,2,3")},
    "resonance-find": {**PARAM_OPTS, **RES_OPTS, **TOL_OPTS, "guess": (str, None),
                       "monodromy": (int, 1)},
    "resonance-enumerate": {**PARAM_OPTS, **RES_OPTS, "gamma_min": (float, None),
                            "gamma_max": (float, None), "gamma_steps": (int, 2000)},
    "stability-scan": {"e_axis": (str, "0,0.5,16"), "lambda_axis": (str, "-1,1,16"),
                       "order": (str, "3:2"), "type": (str, "0"), "path": (str, "spin-orbit"),
                       "gamma_steps": (int, 400), "gamma_min": (float, None), "gamma_max": (float, None),
                       "qhat": (float, 0.0), "sigma": (float, 0.0), "tol_parabolic": (float, 1e-6),
                       "abs_tol": (float, 1e-10), "rel_tol": (float, 1e-10)},
    "poincare": {**PARAM_OPTS, "kind": (str, "spin-spin"), "theta1": (float, 0.0),
                 "theta2": (float, 0.0), "dtheta1": (float, 1.0), "dtheta2": (float, 1.0),
                 "k_max": (int, 1000), "half_turn": (int, 0), "abs_tol": (float, 1e-10),
                 "rel_tol": (float, 1e-10)},
    "compare": {**PARAM_OPTS, "order": (str, "1:1,3:2"), "type": (str, "0,0"),
                "horizon": (float, 100.0), "samples_per_rev": (int, 32), "trunc": (str, "V2V4"),
                **TOL_OPTS},
    "compare-grid": {"lambda_axis": (str, "1e-9,1,32,log"), "sigma_axis": (str, "1e-4,0.05,32,log"),
                     "e": (float, 0.0), "qhat": (float, 0.0), "order": (str, "1:1,3:2"),
                     "type": (str, "0,0"), "horizon": (float, 2.0), "samples_per_rev": (int, 256),
                     "trunc": (str, "V2V4"), **TOL_OPTS},
    "floquet-table": {"e": (float, 0.0), "lambda": (float, 0.05), "qhat": (float, 0.01),
                      "sigma": (float, 1e-3), "a": (float, None), "order": (str, "1:1,3:2"),
                      "type": (str, "0,0"), "trunc": (str, "V2V4"), **TOL_OPTS},
    "diophantine-check": {"b": (str, "0,0"), "A": (str, "1,0;0,1"), "poly": (str, "1,0,-2,-2"),
                          "K": (int, 50), "root": (int, None)},
    "sync-sweep": {**PARAM_OPTS, "sigma_axis": (str, "0.001,0.5,8"), "theta1": (float, 0.0),
                   "theta2": (float, 0.0), "dtheta1": (float, 0.92), "dtheta2": (float, 1.05),
                   "k_max": (int, 1000), "abs_tol": (float, 1e-10), "rel_tol": (float, 1e-10)},
}

DEFAULT_OUTPUT = {
    "kepler-solve": "kepler.csv", "resonance-find": "resonance.json",
    "resonance-enumerate": "solutions.csv", "stability-scan": "stability.csv",
    "poincare": "poincare.csv", "compare": "compare.csv", "compare-grid": "compare_grid.csv",
    "floquet-table": "floquet.csv", "diophantine-check": "diophantine.json",
    "sync-sweep": "sync.csv",
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="spinspin", description="Spin-orbit / spin-spin resonance scans.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, opts in COMMANDS.items():
        sp = sub.add_parser(name)
        sp.add_argument("--config")
        sp.add_argument("--section", help="config section (default: the subcommand name)")
        sp.add_argument("-o", "--output")
        sp.add_argument("--workers", type=int, default=None)
        sp.add_argument("--resume", action="store_true")
        sp.add_argument("--log")
        for key, (typ, _) in opts.items():
            sp.add_argument("--" + key.replace("_", "-"), dest=key, type=typ, default=None)
    return p


def resolve(args) -> dict:
    """Defaults, then config file values, then explicit flags."""
    opts = COMMANDS[args.command]
    values = {k: d for k, (_, d) in opts.items()}
    if args.config:
        section = args.section or args.command
        lower = {k.lower(): k for k in opts}
        for key, (raw, line) in read_config(args.config, section).items():
            k = lower.get(key.replace("-", "_").lower())
            where = f"{args.config}:{line}" if line else args.config
            if k is None:
                raise ConfigError(f"{where}: unknown key {key!r} for {args.command}")
            typ = opts[k][0]
            try:
                values[k] = typ(raw)
            except ValueError as exc:
                raise ConfigError(f"{where}: bad value for {key}: {raw!r}") from exc
    for k in opts:
        v = getattr(args, k, None)
        if v is not None:
            values[k] = v
    return values


# --- shared helpers -------------------------------------------------------------

def _params(v):
    from .params import DimensionlessParams, ParameterError
    try:
        return DimensionlessParams(e=v["e"], C1=v["C1"], lambda1=v["lambda1"], lambda2=v["lambda2"],
                                   sigma1=v["sigma1"], qhat1=v["qhat1"], qhat2=v["qhat2"], a=v["a"])
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc


def _spec(v):
    from .resonance import ResonanceError, ResonanceSpec
    try:
        return ResonanceSpec.parse(v["order"], v.get("flavor", "balanced"), v.get("type", "0"),
                                   v.get("alpha", 0.0))
    except (ResonanceError, ValueError) as exc:
        raise ConfigError(f"resonance: {exc}") from exc


def _cfg(v):
    from .integrator import IntegratorConfig
    return IntegratorConfig(abs_tol=v["abs_tol"], rel_tol=v["rel_tol"])


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for r in rows:
            w.writerow([fmt(x) for x in r])


def _write_json(path, obj):
    def conv(o):
        if isinstance(o, (np.floating,)):
            return float(o)
        if isinstance(o, (np.integer,)):
            return int(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        if isinstance(o, complex):
            return [o.real, o.imag]
        raise TypeError(type(o))
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, default=conv)
        fh.write("\n")


# --- grid execution ---------------------------------------------------------------

@dataclass
class ScanJob:
    kind: str
    tasks: list                     # picklable task payloads, canonical order
    header: list
    output: str
    workers: int = 1
    resume: bool = False
    results: dict = field(default_factory=dict)


def _run_task(kind, payload):
    return TASKS[kind](payload)


def run_job(job: ScanJob) -> int:
    """Run the row tasks (in parallel when ``workers > 1``) and write rows in canonical order."""
    manifest = job.output + ".manifest.jsonl"
    done = {}
    if job.resume and os.path.exists(manifest):
        with open(manifest) as fh:
            for line in fh:
                try:
                    rec = json.loads(line)
                except json.JSONDecodeError:
                    continue            # torn last line after an interrupt
                done[rec["task"]] = rec
        log.info("resume: %d of %d tasks already done", len(done), len(job.tasks))
    elif os.path.exists(manifest):
        os.remove(manifest)
    todo = [i for i in range(len(job.tasks)) if i not in done]
    failed = 0
    with open(manifest, "a") as man:
        def record(i, rows, err):
            rec = {"task": i, "rows": rows, "error": err}
            done[i] = rec
            man.write(json.dumps(rec) + "\n")
            man.flush()
            if err:
                log.error("task %d failed: %s", i, err)
            else:
                log.info("task %d done (%d/%d)", i, len(done), len(job.tasks))
        if job.workers <= 1 or len(todo) <= 1:
            for i in todo:
                try:
                    record(i, _run_task(job.kind, job.tasks[i]), None)
                except Exception as exc:  # per-task failure: keep going
                    record(i, None, f"{type(exc).__name__}: {exc}")
        else:
            with ProcessPoolExecutor(max_workers=job.workers) as pool:
                futs = {pool.submit(_run_task, job.kind, job.tasks[i]): i for i in todo}
                for fut in as_completed(futs):
                    i = futs[fut]
                    try:
                        record(i, fut.result(), None)
                    except Exception as exc:
                        record(i, None, f"{type(exc).__name__}: {exc}")
    rows = []
    for i in range(len(job.tasks)):
        rec = done[i]
        if rec["error"]:
            failed += 1
            continue
        for r in rec["rows"]:
            if "error" in r:
                failed += 1
            rows.append(r)
    _write_csv(job.output, job.header, ([r.get(h, "") for h in job.header] for r in rows))
    return EXIT_PARTIAL if failed else EXIT_OK


# task functions: payload dict -> list of row dicts (JSON-serializable)

def _task_stability_row(t):
    from .integrator import IntegratorConfig
    from .stability import StabilityClass, _CODE, spin_orbit_diagram, spin_spin_diagram
    cfg = IntegratorConfig(abs_tol=t["abs_tol"], rel_tol=t["rel_tol"])
    es = np.array([t["e"]])
    lams = np.array(t["lams"])
    if t["path"] == "spin-orbit":
        gammas = np.linspace(t["gamma_min"], t["gamma_max"], t["gamma_steps"])
        d = spin_orbit_diagram(es, lams, t["m"], t["beta1"], gammas, cfg=cfg,
                               tol_parabolic=t["tol_parabolic"])
    else:
        d = spin_spin_diagram(es, lams, t["m"], (t["beta1"], t["beta2"]), sigma1=t["sigma"],
                              qhat=t["qhat"], cfg=cfg, tol_parabolic=t["tol_parabolic"])
    names = {c: s.value for c, s in _CODE.items()}
    names[-1] = "none"
    return [{"e": t["e"], "lambda": float(l), "count": int(d.count[0, j]),
             "class": names[int(d.cls[0, j])], "v0": float(d.v0[0, j]), "trace": float(d.trace[0, j])}
            for j, l in enumerate(lams)]


def _task_compare_row(t):
    from .compare import scan_comparison_grid
    from .integrator import IntegratorConfig
    from .resonance import ResonanceSpec
    spec = ResonanceSpec.parse(t["order"], "balanced", t["type"])
    g = scan_comparison_grid(np.array(t["lams"]), np.array([t["sigma"]]), spec, e=t["e"],
                             qhat=t["qhat"], horizon=t["horizon"], samples_per_rev=t["samples_per_rev"],
                             trunc=t["trunc"], cfg=IntegratorConfig(abs_tol=t["abs_tol"], rel_tol=t["rel_tol"]))
    out = []
    for lam, s, st, lde, lda, tc in g.rows():
        row = {"lambda": lam, "sigma": s, "status": st, "log10_max_abs_delta_e": lde,
               "log10_max_abs_delta_a": lda, "collision_time": tc}
        if st == "failed":
            row["error"] = "no resonance"
        out.append(row)
    return out


def _task_sync(t):
    from .dynamics import SpinState
    from .integrator import IntegratorConfig
    from .params import DimensionlessParams
    from .poincare import sync_sweep
    p = DimensionlessParams(**t["params"])
    init = SpinState.from_velocities(t["theta1"], t["theta2"], t["dtheta1"], t["dtheta2"], p.C1)
    recs = sync_sweep(p, [t["sigma"]], init, t["k_max"],
                      cfg=IntegratorConfig(abs_tol=t["abs_tol"], rel_tol=t["rel_tol"]))
    r = recs[0]
    return [{"sigma": r.sigma, "min1": r.extent1[0], "max1": r.extent1[1], "min2": r.extent2[0],
             "max2": r.extent2[1], "band1_min": r.band1[0], "band1_max": r.band1[1],
             "band2_min": r.band2[0], "band2_max": r.band2[1], "band_overlap": r.overlap}]


TASKS = {"stability-scan": _task_stability_row, "compare-grid": _task_compare_row,
         "sync-sweep": _task_sync}


# --- commands ----------------------------------------------------------------------

def cmd_kepler_solve(v, out, **_):
    from .kepler import kepler_residual, solve_kepler, true_anomaly
    es = parse_floats(v["e"], "e")
    ts = parse_floats(v["t"], "t")
    rows = []
    for e in es:
        if not 0.0 <= e < 1.0:
            raise ConfigError(f"e={e} outside [0, 1)")
        for t in ts:
            u = float(solve_kepler(e, t))
            rows.append((e, t, u, float(true_anomaly(e, u)), float(kepler_residual(e, t, u))))
    _write_csv(out, ["e", "t", "u", "f", "residual"], rows)
    return EXIT_OK


def _solution_record(sol, mono=None):
    rec = {"spec": sol.spec.label(), "params": sol.params.to_mapping(), "kind": sol.kind.value,
           "v0": list(sol.v0), "residual": sol.residual, "converged": sol.converged,
           "iterations": sol.iterations, "flag": sol.flag}
    if mono is not None:
        rec["monodromy"] = {"dim": mono.dim, "trace": mono.trace, "class": mono.cls.value,
                            "max_modulus": mono.max_modulus,
                            "multipliers": [[m.real, m.imag] for m in mono.multipliers]}
    return rec


def cmd_resonance_find(v, out, **_):
    from .resonance import shoot
    from .stability import monodromy
    p, spec = _params(v), _spec(v)
    guess = parse_floats(v["guess"], "guess") if v["guess"] else None
    sol = shoot(p, spec, guess, kind=v["kind"], cfg=_cfg(v))
    mono = monodromy(None, None, sol, cfg=_cfg(v)) if (v["monodromy"] and sol.converged) else None
    _write_json(out, _solution_record(sol, mono))
    return EXIT_OK if sol.converged else EXIT_PARTIAL


def cmd_resonance_enumerate(v, out, **_):
    from .resonance import default_gamma_range, enumerate_solutions
    from .stability import monodromy
    p, spec = _params(v), _spec(v)
    lo, hi = default_gamma_range(spec.m1)
    rng = (v["gamma_min"] if v["gamma_min"] is not None else lo,
           v["gamma_max"] if v["gamma_max"] is not None else hi)
    sols = enumerate_solutions(p, spec, rng, v["gamma_steps"], kind=v["kind"])
    rows = []
    for s in sols:
        m = monodromy(None, None, s)
        rows.append((s.v0[0], s.residual, int(s.converged), m.trace, m.cls.value))
    _write_csv(out, ["v0", "residual", "converged", "trace", "class"], rows)
    return EXIT_OK


def _stability_job(v, out, workers, resume):
    spec = _spec({"order": v["order"], "type": v["type"]})
    if v["path"] not in ("spin-orbit", "spin-spin"):
        raise ConfigError("path must be spin-orbit or spin-spin")
    es = parse_axis(v["e_axis"], "e_axis")
    lams = parse_axis(v["lambda_axis"], "lambda_axis")
    m = spec.m1
    lo, hi = m / 2.0 - 3.0, m / 2.0 + 3.0
    betas = spec.betas + (0.0,) * (2 - len(spec.betas))
    base = {"lams": lams.tolist(), "m": m, "beta1": betas[0], "beta2": betas[1] if spec.bodies == 2 else betas[0],
            "path": v["path"], "gamma_steps": v["gamma_steps"],
            "gamma_min": v["gamma_min"] if v["gamma_min"] is not None else lo,
            "gamma_max": v["gamma_max"] if v["gamma_max"] is not None else hi,
            "sigma": v["sigma"], "qhat": v["qhat"], "tol_parabolic": v["tol_parabolic"],
            "abs_tol": v["abs_tol"], "rel_tol": v["rel_tol"]}
    tasks = [dict(base, e=float(e)) for e in es]
    return ScanJob("stability-scan", tasks, ["e", "lambda", "count", "class", "v0", "trace"],
                   out, workers, resume)


def cmd_stability_scan(v, out, workers=1, resume=False):
    return run_job(_stability_job(v, out, workers, resume))


def cmd_poincare(v, out, **_):
    from .dynamics import SpinState
    from .integrator import IntegratorConfig
    from .poincare import poincare_map, write_map_csv
    p = _params(v)
    init = SpinState.from_velocities(v["theta1"], v["theta2"], v["dtheta1"], v["dtheta2"], p.C1)
    orbits = poincare_map(p, v["kind"], init, v["k_max"], half_turn=bool(v["half_turn"]),
                          cfg=IntegratorConfig(abs_tol=v["abs_tol"], rel_tol=v["rel_tol"]))
    write_map_csv(out, orbits)
    return EXIT_PARTIAL if orbits[0].truncated else EXIT_OK


def cmd_compare(v, out, **_):
    from .compare import run_comparison
    p = _params(v)
    spec = _spec({"order": v["order"], "type": v["type"]})
    run = run_comparison(p, spec, v["horizon"], _cfg(v), samples_per_rev=v["samples_per_rev"],
                         trunc=v["trunc"])
    run.write_csv(out)
    summary = {"collision": run.collision, "max_abs_delta_a": float(np.max(np.abs(run.delta_a))),
               "max_abs_delta_e": float(np.max(np.abs(run.delta_e))), "v0": list(run.solution.v0),
               "a": run.physical.a, "collision_radius": None}
    from .params import collision_radius
    summary["collision_radius"] = collision_radius(run.physical)
    _write_json(out + ".json", summary)
    return EXIT_OK


def _compare_job(v, out, workers, resume):
    lams = parse_axis(v["lambda_axis"], "lambda_axis")
    sigmas = parse_axis(v["sigma_axis"], "sigma_axis")
    _spec({"order": v["order"], "type": v["type"]})
    base = {k: v[k] for k in ("e", "qhat", "order", "type", "horizon", "samples_per_rev", "trunc",
                              "abs_tol", "rel_tol")}
    base["lams"] = lams.tolist()
    from .compare import GRID_COLUMNS
    return ScanJob("compare-grid", [dict(base, sigma=float(s)) for s in sigmas], list(GRID_COLUMNS),
                   out, workers, resume)


def cmd_compare_grid(v, out, workers=1, resume=False):
    return run_job(_compare_job(v, out, workers, resume))


def cmd_floquet_table(v, out, **_):
    from .compare import floquet_of_comparison
    from .params import DimensionlessParams, ParameterError
    try:
        p = DimensionlessParams.equal_bodies(v["e"], v["lambda"], v["qhat"], v["sigma"], v["a"])
    except ParameterError as exc:
        raise ConfigError(str(exc)) from exc
    spec = _spec({"order": v["order"], "type": v["type"]})
    ft = floquet_of_comparison(p, spec, trunc=v["trunc"], cfg=_cfg(v))
    rows = []
    for block, mul in (("zeta_spin", ft.spin.multipliers), ("zeta_kepler", ft.kepler),
                       ("z", ft.full.multipliers)):
        for m in sorted(mul, key=lambda c: (np.angle(c), abs(c))):
            rows.append((block, float(np.angle(m)), float(abs(m)), m.real, m.imag))
    _write_csv(out, ["block", "argument", "modulus", "real", "imag"], rows)
    return EXIT_OK


def cmd_diophantine(v, out, **_):
    from .resonance import DiophantineError, diophantine_omega
    b = parse_floats(v["b"], "b")
    A = [parse_floats(row, "A") for row in str(v["A"]).split(";")]
    poly = parse_floats(v["poly"], "poly")
    if len(b) != 2 or len(A) != 2 or any(len(r) != 2 for r in A):
        raise ConfigError("b must have 2 entries and A must be 2x2 (rows separated by ';')")
    try:
        res = diophantine_omega(b, A, poly, v["K"], v["root"])
    except DiophantineError as exc:
        _write_json(out, {"accepted": False, "reason": str(exc)})
        return EXIT_PARTIAL
    _write_json(out, {"accepted": not res.resonant, "omega": res.omega, "alpha": res.alpha,
                      "certificate": res.certificate, "witness": list(res.witness), "K": res.K})
    return EXIT_OK


def _sync_job(v, out, workers, resume):
    p = _params(v)
    sig = parse_axis(v["sigma_axis"], "sigma_axis")
    base = {k: v[k] for k in ("theta1", "theta2", "dtheta1", "dtheta2", "k_max", "abs_tol", "rel_tol")}
    base["params"] = p.to_mapping()
    header = ["sigma", "min1", "max1", "min2", "max2", "band1_min", "band1_max", "band2_min",
              "band2_max", "band_overlap"]
    return ScanJob("sync-sweep", [dict(base, sigma=float(s)) for s in sig], header, out, workers, resume)


def cmd_sync_sweep(v, out, workers=1, resume=False):
    return run_job(_sync_job(v, out, workers, resume))


HANDLERS = {
    "kepler-solve": cmd_kepler_solve, "resonance-find": cmd_resonance_find,
    "resonance-enumerate": cmd_resonance_enumerate, "stability-scan": cmd_stability_scan,
    "poincare": cmd_poincare, "compare": cmd_compare, "compare-grid": cmd_compare_grid,
    "floquet-table": cmd_floquet_table, "diophantine-check": cmd_diophantine,
    "sync-sweep": cmd_sync_sweep,
}


def _setup_logging(path):
    log.handlers.clear()
    log.setLevel(logging.INFO)
    log.propagate = False
    h = logging.FileHandler(path, mode="a")
    h.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
    log.addHandler(h)
    return h


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        values = resolve(args)
    except ConfigError as exc:
        print(f"spinspin: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = args.output or DEFAULT_OUTPUT[args.command]
    workers = args.workers if args.workers is not None else (os.cpu_count() or 1)
    if workers < 1:
        print("spinspin: config error: --workers must be >= 1", file=sys.stderr)
        return EXIT_CONFIG
    handler = _setup_logging(args.log or out + ".log")
    log.info("start %s -> %s (workers=%d)", args.command, out, workers)
    import warnings
    from .params import DegenerateShapeWarning
    warnings.simplefilter("ignore", DegenerateShapeWarning)
    try:
        code = HANDLERS[args.command](values, out, workers=workers, resume=args.resume)
    except ConfigError as exc:
        print(f"spinspin: config error: {exc}", file=sys.stderr)
        log.error("config error: %s", exc)
        code = EXIT_CONFIG
    except KeyboardInterrupt:
        log.error("interrupted; completed tasks kept in the manifest")
        code = EXIT_FATAL
    except Exception as exc:
        log.error("fatal: %s\n%s", exc, traceback.format_exc())
        print(f"spinspin: fatal: {type(exc).__name__}: {exc}", file=sys.stderr)
        code = EXIT_FATAL
    log.info("exit %d", code)
    handler.close()
    log.removeHandler(handler)
    return code


if __name__ == "__main__":
    sys.exit(main())
