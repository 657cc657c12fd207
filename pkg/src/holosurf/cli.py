"""Batch experiment runner: JSON config in, CSV/JSON artifacts out."""

from __future__ import annotations

import hashlib
import json
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click
import numpy as np

from . import __version__

ENV_PREFIX = "HOLOSURF"

DEFAULTS = {
    "build-lattice": {"L": 8, "defects": []},
    "braid-check": {"L": 18, "d": 8, "moves": None},
    "rate-curve": {"ds": [7, 11, 15, 19], "cbJs": [8.0, 12.0], "ms": [10.0**e for e in range(0, 13)], "p": 1e-3},
    "estimate": {"M": 1e14, "delta": 0.1, "p": 1e-3, "cbJ": 12.0, "m_grid": [1e8]},
    "oracle-verify": {"T": 8 * math.pi, "order": 4, "dt": 0.01, "Ts": [math.pi * 2**k for k in range(5)]},
    "montecarlo": {"experiment": "memory", "L": 3, "p": 1e-3, "d": 16, "code": "steane", "chunk": 10000},
    "replay": {"L": 8, "kind": "Z", "hole": [4, 9], "partner": [4, 1], "d": 8, "log": None},
}

MC_HEADERS = {
    "memory": ["chunk", "trials", "failures"],
    "movement": ["chunk", "trials", "missed", "row_missed", "false_alarms"],
    "contact": ["chunk", "trials", "wrong", "ties"],
    "distillation": ["chunk", "trials", "accepted", "output_errors"],
}


class ConfigError(click.ClickException):
    pass


def load_config(command: str, path: str | None, overrides: dict) -> dict:
    cfg = dict(DEFAULTS[command])
    if path:
        try:
            user = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        if not isinstance(user, dict):
            raise ConfigError("config must be a JSON object")
        unknown = set(user) - set(cfg) - {"seed", "trials", "workers"}
        if unknown:
            raise ConfigError(f"unknown config keys for {command}: {sorted(unknown)}")
        cfg.update(user)
    cfg.update({k: v for k, v in overrides.items() if v is not None})
    cfg.setdefault("seed", 0)
    return cfg


def config_hash(cfg: dict) -> str:
    blob = json.dumps({k: v for k, v in cfg.items() if k != "workers"}, sort_keys=True, default=str)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def header_lines(command: str, cfg: dict) -> list[str]:
    shown = {k: v for k, v in cfg.items() if k != "workers"}
    return [
        f"holosurf {__version__} {command} config_hash={config_hash(cfg)}",
        "config=" + json.dumps(shown, sort_keys=True, default=str),
    ]


def json_artifact(command: str, cfg: dict, body: dict) -> str:
    shown = {k: v for k, v in cfg.items() if k != "workers"}
    doc = {"tool": "holosurf", "version": __version__, "command": command, "config_hash": config_hash(cfg), "config": shown}
    doc.update(body)
    return json.dumps(doc, indent=2, sort_keys=True, default=str) + "\n"


def csv_artifact(command: str, cfg: dict, header: list[str], rows: list[list]) -> str:
    lines = [f"# {h}" for h in header_lines(command, cfg)]
    lines.append(",".join(header))
    lines += [",".join(str(v) for v in r) for r in rows]
    return "\n".join(lines) + "\n"


def emit(out: str | None, name: str, text: str) -> None:
    if out:
        d = Path(out)
        d.mkdir(parents=True, exist_ok=True)
        (d / name).write_text(text)
        click.echo(str(d / name))
    else:
        click.echo(text, nl=False)


def trial_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-based stream: chunk ``index`` is reproducible on its own."""
    return np.random.default_rng([seed, index])


def common_options(f):
    f = click.option("--out", type=click.Path(file_okay=False), envvar=f"{ENV_PREFIX}_OUT", help="Output directory.")(f)
    f = click.option("--workers", type=int, default=1, envvar=f"{ENV_PREFIX}_WORKERS", show_default=True)(f)
    f = click.option("--trials", type=int, envvar=f"{ENV_PREFIX}_TRIALS")(f)
    f = click.option("--seed", type=int, envvar=f"{ENV_PREFIX}_SEED")(f)
    f = click.option("--config", "config_path", type=click.Path(dir_okay=False), envvar=f"{ENV_PREFIX}_CONFIG")(f)
    return f


@click.group()
@click.version_option(__version__)
def main():
    """Adiabatic surface-code simulator: experiments and checks."""


# -- geometry ------------------------------------------------------------------

@main.command("build-lattice")
@common_options
def build_lattice(config_path, seed, trials, workers, out):
    """Dump a lattice with optional double-cut defects as JSON."""
    from . import lattice as lt
    from .tableau import check_invariants, from_lattice

    cfg = load_config("build-lattice", config_path, {"seed": seed})
    lat = lt.build(int(cfg["L"]))
    for spec in cfg["defects"]:
        try:
            lt.create_double_cut(lat, spec["kind"], tuple(spec["pos1"]), tuple(spec["pos2"]), name=spec.get("name"))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad defect spec {spec}: {exc}") from exc
    tab = from_lattice(lat)
    check_invariants(tab)
    body = {"lattice": json.loads(lat.to_json()), "active_generators": len(tab.generators)}
    emit(out, "lattice.json", json_artifact("build-lattice", cfg, body))


@main.command("braid-check")
@common_options
def braid_check(config_path, seed, trials, workers, out):
    """Braid the control around the target and verify the four logical mappings."""
    from .scenarios import braid_report, braid_setup

    cfg = load_config("braid-check", config_path, {"seed": seed})
    sc = braid_setup(int(cfg["L"]), int(cfg["d"]))
    moves = [tuple(m) for m in cfg["moves"]] if cfg["moves"] else None
    report = braid_report(sc, moves)
    emit(out, "braid.json", json_artifact("braid-check", cfg, report))
    if not report["ok"]:
        sys.exit(1)


# -- closed forms --------------------------------------------------------------

@main.command("rate-curve")
@common_options
def rate_curve(config_path, seed, trials, workers, out):
    """Logical error rate per m steps over a (d, cbJ, m) grid, as CSV."""
    from .analysis import rate_grid

    cfg = load_config("rate-curve", config_path, {"seed": seed})
    rows = rate_grid(cfg["ds"], cfg["cbJs"], cfg["ms"], float(cfg["p"]))
    body = [[d, f"{c:g}", f"{m:g}", f"{pl:.6e}"] for d, c, m, pl in rows]
    emit(out, "rate_curve.csv", csv_artifact("rate-curve", cfg, ["d", "cbJ", "m", "P_L"], body))


@main.command("estimate")
@common_options
def estimate(config_path, seed, trials, workers, out):
    """Smallest distance meeting the failure budget, as JSON."""
    from .analysis import InfeasibleError, ResourceQuery, estimate_resources

    cfg = load_config("estimate", config_path, {"seed": seed})
    try:
        rq = ResourceQuery(float(cfg["M"]), float(cfg["delta"]), float(cfg["p"]), float(cfg["cbJ"]), tuple(cfg["m_grid"]))
        res = estimate_resources(rq)
    except (ValueError, InfeasibleError) as exc:
        raise ConfigError(str(exc)) from exc
    body = {"d": res.d, "m": res.m, "n_tot": res.n_tot, "P_L": res.P_L, "budget": res.budget}
    emit(out, "estimate.json", json_artifact("estimate", cfg, body))


# -- oracle ----------------------------------------------------------------------

@main.command("oracle-verify")
@common_options
def oracle_verify(config_path, seed, trials, workers, out):
    """Dense checks of state evolution, error propagation and parallel steps."""
    from . import oracle as orc
    from .pauli import PauliOp

    cfg = load_config("oracle-verify", config_path, {"seed": seed})
    stab = orc.stabilizer_chain()
    psi0 = orc.ground_state(stab, seed=int(cfg["seed"]))
    sched = orc.SchedulePolicy(float(cfg["T"]), int(cfg["order"]), float(cfg["dt"]))
    two = orc.DenseSystem(stab.n, stab.terms, [[PauliOp.parse("X0")], [PauliOp.parse("X3")]])
    par = orc.DenseSystem(stab.n, stab.terms, [[PauliOp.parse("X0"), PauliOp.parse("X3")]])
    err = (1, PauliOp.parse("Z1"))
    checks = {
        "state_evolution": orc.fidelity(orc.clifford_prediction(stab, psi0), orc.integrate(stab, sched, psi0)),
        "error_propagation": orc.fidelity(orc.error_prediction(two, psi0, err), orc.integrate(two, sched, psi0, err)),
        "parallel_steps": orc.fidelity(orc.clifford_prediction(two, psi0), orc.integrate(par, sched, psi0)),
    }
    thresholds = {"state_evolution": 1 - 1e-3, "error_propagation": 1 - 1e-2, "parallel_steps": 1 - 1e-3}
    curve = orc.adiabatic_error_curve(stab, psi0, [float(t) for t in cfg["Ts"]], [int(cfg["order"])], float(cfg["dt"]))
    ok = all(checks[k] >= thresholds[k] for k in checks)
    body = {"fidelities": checks, "thresholds": thresholds, "ok": ok}
    emit(out, "oracle.json", json_artifact("oracle-verify", cfg, body))
    csv_text = orc.curve_to_csv(curve)
    lines = [f"# {h}" for h in header_lines("oracle-verify", cfg)]
    emit(out, "adiabatic_curve.csv", "\n".join(lines) + "\n" + csv_text)
    if not ok:
        sys.exit(1)


# -- Monte Carlo -------------------------------------------------------------------

def _mc_chunk(args) -> list:
    cfg, index, n = args
    rng = trial_rng(int(cfg["seed"]), index)
    exp = cfg["experiment"]
    if exp == "memory":
        from .decoder import memory_experiment

        return [index, n, memory_experiment(int(cfg["L"]), float(cfg["p"]), n, rng)]
    if exp == "movement":
        from .decoder import movement_misdetection_mc

        r = movement_misdetection_mc(int(cfg["d"]), float(cfg["p"]), n, rng)
        return [index, n, r["missed"], round(r["P_row_miss"] * n), round(r["P_false"] * n)]
    if exp == "contact":
        from .decoder import contact_misread_mc

        r = contact_misread_mc(int(cfg["d"]), float(cfg["p"]), n, rng)
        return [index, n, r["wrong"], r["ties"]]
    from .protocols import RM15, STEANE, decode_z_errors

    code = {"steane": STEANE, "rm15": RM15}[cfg["code"]]
    flips = rng.random((n, code.n)) < float(cfg["p"])
    acc = err = 0
    for row in flips:
        a, o = decode_z_errors(code, row.astype(np.uint8))
        acc += a
        err += a and o
    return [index, n, acc, err]


@main.command("montecarlo")
@common_options
def montecarlo(config_path, seed, trials, workers, out):
    """Memory, movement-vote, contact-vote or distillation trials, one CSV row per chunk."""
    cfg = load_config("montecarlo", config_path, {"seed": seed, "trials": trials})
    exp = cfg.get("experiment")
    if exp not in MC_HEADERS:
        raise ConfigError(f"experiment must be one of {sorted(MC_HEADERS)}")
    if exp == "distillation" and cfg["code"] not in ("steane", "rm15"):
        raise ConfigError("code must be 'steane' or 'rm15'")
    total = int(cfg.get("trials") or 0)
    if total < 0:
        raise ConfigError("trials must be non-negative")
    chunk = int(cfg["chunk"])
    jobs = [(cfg, i, min(chunk, total - start)) for i, start in enumerate(range(0, total, chunk))]
    if workers and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_mc_chunk, jobs))
    else:
        rows = [_mc_chunk(j) for j in jobs]
    emit(out, f"montecarlo_{exp}.csv", csv_artifact("montecarlo", cfg, MC_HEADERS[exp], rows))


# -- replay -------------------------------------------------------------------------

@main.command("replay")
@click.argument("log_path", required=False, type=click.Path(dir_okay=False))
@common_options
def replay(log_path, config_path, seed, trials, workers, out):
    """Propagate a logged error sequence through a hole enlargement."""
    from . import lattice as lt
    from .deformation import enlarge_hole, execute
    from .noise import effective_error, events_from_csv, propagate
    from .pauli import PauliOp
    from .tableau import from_lattice

    cfg = load_config("replay", config_path, {"seed": seed, "log": log_path})
    if not cfg["log"]:
        raise ConfigError("an error log is required (argument or 'log' config key)")
    try:
        events = events_from_csv(Path(cfg["log"]).read_text())
    except (OSError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    lat = lt.build(int(cfg["L"]))
    dq = lt.create_double_cut(lat, cfg["kind"], tuple(cfg["hole"]), tuple(cfg["partner"]), name="a")
    tab = from_lattice(lat)
    execute(tab, enlarge_hole(lat, dq, int(cfg["d"])), lat)
    n_steps = len(tab.history)
    rows = []
    for e in events:
        if not 0 <= e.step <= n_steps or not 0 <= e.qubit < lat.n_qubits:
            raise ConfigError(f"event {e} lies outside the schedule or lattice")
        moved = propagate(PauliOp.single(e.qubit, e.axis), tab.history, e.step)
        rows.append([e.step, e.qubit, e.axis, e.gap_class, str(moved), str(effective_error(tab, moved))])
    header = ["step", "qubit", "axis", "gap_class", "propagated", "effective"]
    emit(out, "replay.csv", csv_artifact("replay", cfg, header, rows))


if __name__ == "__main__":
    main()
