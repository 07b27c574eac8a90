"""Command-line entry point: ``fpld <subcommand> --config cfg.json``.

Every subcommand reads a versioned JSON config, validates it against a
schema (unknown keys are rejected), writes CSV/JSON files into ``--out`` and
prints a JSON summary on stdout. Output depends only on the config and
``--seed``.

Exit codes: 0 success, 2 config error, 3 numerical failure, 4 a checked
inequality was violated.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path
from typing import Callable

import jsonschema
import numpy as np

from . import _io, boolean, criteria, hermite, potential, priors, sparsereg
from . import mcmc
from .rng import stream

log = logging.getLogger("fpld")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VIOLATION = 0, 2, 3, 4


class ConfigError(Exception):
    pass


class Violation(Exception):
    """A checked inequality failed; carries the summary to print."""

    def __init__(self, summary):
        super().__init__("check failed")
        self.summary = summary


# ---------------------------------------------------------------------------
# schemas

_NUM = {"type": "number"}
_POS_INT = {"type": "integer", "minimum": 1}
_NUM_LIST = {"type": "array", "items": _NUM}


def _obj(props: dict, required=()) -> dict:
    return {
        "type": "object",
        "properties": props,
        "required": list(required),
        "additionalProperties": False,
    }


def _root(props: dict, required=()) -> dict:
    return _obj({"schema_version": {"const": 1}, "seed": {"type": "integer", "minimum": 0}, **props},
                ["schema_version", *required])


_PRIOR = {"type": "object", "required": ["kind"]}  # fields are checked by prior_from_dict

_SPACE = {
    "oneOf": [
        _obj({"kind": {"const": "subset_sphere"}, "n": _POS_INT, "k": _POS_INT}, ["kind", "n", "k"]),
        _obj({"kind": {"const": "rademacher_tensor"}, "n": _POS_INT, "p": _POS_INT}, ["kind", "n", "p"]),
    ]
}

SCHEMAS = {
    "overlap": _root(
        {
            "prior": _PRIOR,
            "mode": {"enum": ["exact", "empirical"]},
            "n_samples": {"type": "integer", "minimum": 0},
            "D_grid": _NUM_LIST,
        },
        ["prior"],
    ),
    "criteria": _root(
        {
            "prior": _PRIOR,
            "mode": {"enum": ["exact", "empirical"]},
            "n_samples": {"type": "integer", "minimum": 0},
            "criteria": {"type": "array", "items": {"enum": ["LD", "FP", "LO", "CHI2"]}},
            "D_grid": _NUM_LIST,
            "lambda_grid": _NUM_LIST,
            "equivalence": _obj({"D": {"type": "array", "items": _POS_INT}, "lambda": _NUM_LIST,
                                 "M": _NUM}, ["D", "lambda"]),
        },
        ["prior"],
    ),
    "potential": _root(
        {
            "cases": {
                "type": "array",
                "minItems": 1,
                "items": _obj({"lambda": _NUM, "rho": _NUM}, ["lambda", "rho"]),
            },
            "grid_size": {"type": "integer", "minimum": 201},
        },
        ["cases"],
    ),
    "mcmc": _root(
        {
            "space": _SPACE,
            "lambda": _NUM,
            "beta": _NUM,
            "u_index": {"type": "integer", "minimum": 0},
            "barrier": _obj({"D": _NUM, "eps": _NUM, "n_seeds": _POS_INT}, ["D", "eps", "n_seeds"]),
            "hitting": _obj(
                {
                    "D": _NUM, "eps": _NUM, "delta": _NUM, "delta_loc": _NUM,
                    "trials": _POS_INT, "t_budget": _POS_INT,
                    "init": {"enum": ["nu|A", "worst"]},
                    "checkpoints": {"type": "array", "items": _POS_INT},
                },
                ["eps", "delta_loc", "trials", "t_budget"],
            ),
            "trace": _obj({"delta_loc": _NUM, "steps": _POS_INT, "start": {"type": "integer", "minimum": 0}},
                          ["delta_loc", "steps"]),
        },
        ["space", "lambda", "beta"],
    ),
    "sparsereg": _root(
        {
            "n": _POS_INT,
            "theta": _NUM,
            "R": _NUM,
            "sigma2": _NUM,
            "detect_trials": {"type": "integer", "minimum": 0},
            "recover_trials": {"type": "integer", "minimum": 0},
            "write_instance": {"type": "boolean"},
            "phase_map": _obj({"n": _POS_INT, "thetas": _NUM_LIST, "Rs": _NUM_LIST, "trials": _POS_INT},
                              ["thetas", "Rs", "trials"]),
        },
        ["n", "theta", "R"],
    ),
    "boolean": _root(
        {
            "n": _POS_INT,
            "alpha": _NUM,
            "eps": _NUM,
            "bias": _NUM,
            "D_grid": _NUM_LIST,
        },
        ["n", "D_grid"],
    ),
    "oracle": _root(
        {
            "pairs": _POS_INT,
            "max_dim": {"type": "integer", "minimum": 1, "maximum": hermite.MAX_DIM},
            "max_degree": {"type": "integer", "minimum": 0, "maximum": hermite.MAX_INNER_DEGREE},
            "tolerance": _NUM,
        }
    ),
}


# ---------------------------------------------------------------------------
# subcommands: each takes (config, seed, threads) and returns
# (summary, {filename: text}).


def _overlap_dist(cfg: dict, seed: int) -> priors.OverlapDistribution:
    prior = priors.prior_from_dict(cfg["prior"])
    mode = cfg.get("mode", "exact")
    return priors.overlap_distribution(prior, mode, cfg.get("n_samples", 0), seed)


def cmd_overlap(cfg, seed, threads):
    dist = _overlap_dist(cfg, seed)
    rows = []
    for D in sorted(cfg.get("D_grid", [])):
        d = priors.delta_of_D(dist, D).delta
        rows.append((D, d, priors.tail_prob(dist, d)))
    files = {
        "overlap.csv": dist.to_csv(),
        "delta.csv": _io.csv_text(["D", "delta", "tail_prob"], rows),
    }
    summary = {
        "mode": dist.mode,
        "atoms": None if not dist.is_exact else len(dist.support),
        "samples": None if dist.is_exact else len(dist.samples),
        "max_norm_sq": dist.max_norm_sq,
        "mean": priors.moment(dist, 1),
        "delta_rows": len(rows),
    }
    return summary, files


def cmd_criteria(cfg, seed, threads):
    dist = _overlap_dist(cfg, seed)
    names = cfg.get("criteria", ["LD", "FP", "CHI2"])
    D_grid, lam_grid = cfg.get("D_grid", [1, 2, 4]), cfg.get("lambda_grid", [0.5, 1.0])
    points = []
    for name in names:
        grid = D_grid if name != "LD" else [int(d) for d in D_grid if float(d).is_integer()]
        points.extend(criteria.curve_scan(dist, name, grid, lam_grid).points)
    files = {"curve.csv": criteria.CriterionCurve(points).to_csv()}
    summary = {"points": len(points), "criteria": names}
    eq = cfg.get("equivalence")
    if eq:
        reports = [
            criteria.equiv_easy_check(dist, D, lam, eq.get("M"))
            for D in sorted(eq["D"]) for lam in sorted(eq["lambda"])
        ]
        files["equivalence.json"] = _io.json_text(reports)
        summary["equivalence_checked"] = len(reports)
        summary["equivalence_violations"] = sum(r.status == "violated" for r in reports)
        if summary["equivalence_violations"]:
            raise Violation((summary, files))
    return summary, files


def cmd_potential(cfg, seed, threads):
    files, cases = {}, []
    for i, case in enumerate(cfg["cases"]):
        params = potential.WignerParams(case["lambda"], case["rho"])
        curve = potential.landscape(params, cfg.get("grid_size", 401))
        files[f"potential_{i}.csv"] = curve.to_csv()
        cases.append(curve.summary())
    files["landscape.json"] = _io.json_text(cases)
    return {"cases": cases}, files


def _space(spec: dict) -> mcmc.StateSpace:
    if spec["kind"] == "subset_sphere":
        return mcmc.SubsetSphere(spec["n"], spec["k"])
    return mcmc.RademacherTensor(spec["n"], spec["p"])


def cmd_mcmc(cfg, seed, threads):
    space = _space(cfg["space"])
    u_index, lam, beta = cfg.get("u_index", 0), cfg["lambda"], cfg["beta"]
    if u_index >= space.size:
        raise ValueError("u_index out of range")
    files, summary, failed = {}, {"space": repr(space)}, False
    if "barrier" in cfg:
        b = cfg["barrier"]
        exp = mcmc.barrier_experiment(space, u_index, lam, beta, b["D"], b["eps"], b["n_seeds"], seed)
        files["barrier.json"] = _io.json_text(exp)
        summary["barrier"] = {"fraction": exp.fraction, "allowed": exp.allowed, "passes": exp.passes}
        failed |= not exp.passes
    system = mcmc.GibbsSystem.draw(space, u_index, lam, beta, seed)
    if "hitting" in cfg:
        h = cfg["hitting"]
        if "delta" in h:
            reg = mcmc.regions_at(system, h["delta"], h["eps"])
        else:
            reg = mcmc.regions(system, h.get("D", 2.0), h["eps"])
        rep = mcmc.hitting_experiment(
            system, h["delta_loc"], reg, h["trials"], h["t_budget"], h.get("init", "nu|A"), seed,
            h.get("checkpoints", mcmc.lab.DEFAULT_CHECKPOINTS),
        )
        files["hitting.json"] = _io.json_text(rep)
        summary["hitting"] = {"holds": rep.holds, "empirical": rep.empirical}
        failed |= not rep.holds and rep.init == "nu|A"
    if "trace" in cfg:
        t = cfg["trace"]
        trace = mcmc.run_chain(system, t["delta_loc"], t["steps"], t.get("start", u_index), seed)
        files["trace.csv"] = trace.to_csv()
        summary["trace_steps"] = t["steps"]
    if failed:
        raise Violation((summary, files))
    return summary, files


def cmd_sparsereg(cfg, seed, threads):
    theta, R = cfg["theta"], cfg["R"]
    params = sparsereg.params_from_scaling(cfg["n"], theta, R, cfg.get("sigma2"))
    files = {}
    summary = {
        "params": params, "realized_theta": params.realized_theta, "realized_R": params.realized_R,
        "r_ld": sparsereg.r_ld(theta),
    }
    n_det = cfg.get("detect_trials", 20)
    if n_det:
        power = sparsereg.detection_trials(params, True, theta, R, n_det, seed, threads)
        null = sparsereg.detection_trials(params, False, theta, R, n_det, seed, threads)
        det = {"power": power.rate, "fpr": null.rate, "mean_T_planted": power.mean_T,
               "mean_T_null": null.mean_T, "example": power.reports[0], "trials": n_det}
        files["detect.json"] = _io.json_text(det)
        summary["detect"] = {"power": power.rate, "fpr": null.rate}
    n_rec = cfg.get("recover_trials", 0)
    if n_rec:
        reps = sparsereg.recovery_trials(params, theta, R, n_rec, seed, threads)
        errs = [r.errors for r in reps]
        rec = {"c": reps[0].c, "tau": reps[0].tau, "mean_errors": float(np.mean(errs)), "errors": errs}
        files["recover.json"] = _io.json_text(rec)
        summary["recover"] = {"mean_errors": rec["mean_errors"], "k": params.k}
    if cfg.get("write_instance"):
        inst = sparsereg.sample(params, True, seed)
        _OUT.mkdir(parents=True, exist_ok=True)
        sparsereg.write_instance(_OUT / "instance.bin", inst)
        files["instance.bin.json"] = (_OUT / "instance.bin.json").read_text()
    if "phase_map" in cfg:
        pm = cfg["phase_map"]
        rows = sparsereg.phase_map(pm.get("n", cfg["n"]), pm["thetas"], pm["Rs"], pm["trials"], seed, threads)
        files["phase_map.csv"] = sparsereg.phase_map_csv(rows)
        summary["phase_cells"] = len(rows)
    return summary, files


def cmd_boolean(cfg, seed, threads):
    n = cfg["n"]
    if "alpha" in cfg:
        prior = boolean.counterexample_prior(n, cfg["alpha"])
    else:
        if "eps" not in cfg or "bias" not in cfg:
            raise ValueError("boolean config needs alpha, or eps and bias")
        prior = priors.BiasedBoolean(n, cfg["eps"], cfg["bias"])
    files = {"boolean_sweep.csv": boolean.boolean_sweep(prior, cfg["D_grid"])}
    summary = {"n": n, "eps": prior.eps, "bias": prior.bias,
               "ld1_minus_1": boolean.ld_boolean(prior, 1) - 1.0}
    return summary, files


def cmd_oracle(cfg, seed, threads):
    rng = stream(seed, "oracle")
    pairs, max_dim = cfg.get("pairs", 200), cfg.get("max_dim", 3)
    max_deg, tol = cfg.get("max_degree", 6), cfg.get("tolerance", 1e-8)
    worst_full = worst_exact = 0.0
    for _ in range(pairs):
        d = int(rng.integers(1, max_dim + 1))
        D = int(rng.integers(0, max_deg + 1))
        a, b = rng.uniform(-1.5, 1.5, d), rng.uniform(-1.5, 1.5, d)
        ip = float(a @ b)
        worst_full = max(worst_full, abs(hermite.projected_inner(a, b, D) - criteria.exp_trunc(ip, D)))
        worst_exact = max(
            worst_exact, abs(hermite.projected_inner_exact_degree(a, b, D) - ip**D / math.factorial(D))
        )
    report = {"pairs": pairs, "max_error_truncated": worst_full, "max_error_exact_degree": worst_exact,
              "tolerance": tol, "passes": max(worst_full, worst_exact) <= tol}
    files = {"oracle.json": _io.json_text(report)}
    if not report["passes"]:
        raise Violation((report, files))
    return report, files


COMMANDS: dict[str, Callable] = {
    "overlap": cmd_overlap,
    "criteria": cmd_criteria,
    "potential": cmd_potential,
    "mcmc": cmd_mcmc,
    "sparsereg": cmd_sparsereg,
    "boolean": cmd_boolean,
    "oracle": cmd_oracle,
}

_OUT = Path(".")


def _load_config(path: str | None, name: str) -> dict:
    if path is None:
        cfg = {"schema_version": 1}
    else:
        try:
            cfg = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        jsonschema.validate(cfg, SCHEMAS[name])
    except jsonschema.ValidationError as exc:
        raise ConfigError(f"config violates schema: {exc.message}") from exc
    if "prior" in cfg:
        try:
            priors.prior_from_dict(cfg["prior"])
        except (ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"bad prior: {exc}") from exc
    return cfg


def _write(out: Path, files: dict[str, str]) -> None:
    out.mkdir(parents=True, exist_ok=True)
    for name in sorted(files):
        (out / name).write_text(files[name], encoding="utf-8")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fpld", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--seed", type=int, help="global seed (overrides the config)")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--dry-run", action="store_true", help="validate the config and exit")
    return parser


def main(argv: list[str] | None = None) -> int:
    global _OUT
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = _load_config(args.config, args.command)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.seed is not None and not (0 <= args.seed < 2**64):
        print("error: --seed must be an unsigned 64-bit integer", file=sys.stderr)
        return EXIT_CONFIG
    if args.dry_run:
        print(_io.json_text({"command": args.command, "valid": True}), end="")
        return EXIT_OK
    seed = args.seed if args.seed is not None else cfg.get("seed", 0)
    _OUT = Path(args.out)
    code = EXIT_OK
    try:
        summary, files = COMMANDS[args.command](cfg, seed, max(1, args.threads))
    except Violation as v:
        summary, files = v.summary
        code = EXIT_VIOLATION
    except (ValueError, KeyError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, FloatingPointError, hermite.QuadratureError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _write(_OUT, files)
    print(_io.json_text({"command": args.command, "seed": seed, "summary": summary,
                         "files": sorted(files)}), end="")
    return code


if __name__ == "__main__":
    sys.exit(main())
