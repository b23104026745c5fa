"""Command-line front end.

Subcommands
-----------
estimate   fit laws from a CSV and report one record per assumption set
simulate   run a containment / coverage study on a TOML world spec
oracle     dump the exact truth of a world spec
lp-dump    print the cross-world LP for a CSV or a world spec
sample     write a synthetic CSV drawn from a world spec

Config and IO errors exit with status 2 and a JSON error document on stderr.
The worker-thread count for bootstrap replicates is read from
``PDEBOUNDS_THREADS``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .bounds import Assumption, effect_decomposition, monotonicity_weights
from .covariates import StratifiedLaws, adjusted_decomposition
from .errors import ConfigError, PdeBoundsError
from .inference import bootstrap_many, estimate_fitted, fit_for, regime_estimator
from .lp import build_cross_world_lp
from .oracle_sim import WorldSpec, enumerate_truth, sample_dataset
from .probmodel import ColumnRoles, MediationLaw, ZeroCellPolicy, read_csv_dataset, write_csv_dataset

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

SCHEMA_VERSION = 1
EXIT_OK, EXIT_ESTIMATION, EXIT_CONFIG = 0, 1, 2
THREADS_ENV = "PDEBOUNDS_THREADS"

# Regimes whose assumptions are implied by each world class, for containment checks.
_VALID_FOR = {
    "npsem_ie": {Assumption.SWIG_IGNORE_R, Assumption.SWIG_WITH_R, Assumption.NPSEM_IE_LP,
                 Assumption.NPSEM_IE_BINARY_R},
    "swig": {Assumption.SWIG_WITH_R},
    "other": {Assumption.SWIG_WITH_R},
}


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class BootstrapConfig:
    B: int = 0
    level: float = 0.95
    seed: int = 0


@dataclass
class RunConfig:
    """Everything ``estimate`` needs; built from TOML and/or flags."""

    input: str
    roles: ColumnRoles
    baseline: str
    comparison: str
    levels: dict = field(default_factory=dict)
    y_values: dict | None = None
    assumptions: list | None = None
    bootstrap: BootstrapConfig = field(default_factory=BootstrapConfig)
    deterministic_g: list | None = None
    policy: ZeroCellPolicy = ZeroCellPolicy.ERROR
    output: str | None = None
    format: str = "json"
    keep_replicates: bool = False

    def validate(self):
        for role in ("a", "m", "y"):
            if not getattr(self.roles, role):
                raise ConfigError(f"role {role.upper()} needs a column")
        cols = [self.roles.a, self.roles.m, self.roles.y, *self.roles.r, *self.roles.c]
        dup = {c for c in cols if cols.count(c) > 1}
        if dup:
            raise ConfigError(f"column(s) assigned to more than one role: {sorted(dup)}")
        if self.baseline == self.comparison:
            raise ConfigError("baseline and comparison exposure levels must differ")
        if self.format not in ("json", "csv"):
            raise ConfigError(f"unknown output format {self.format!r}")
        if self.bootstrap.B < 0 or not 0 < self.bootstrap.level < 1:
            raise ConfigError("bootstrap needs B >= 0 and 0 < level < 1")
        if self.assumptions is not None:
            self.assumptions = [_parse_assumption(a) for a in self.assumptions]
        return self


def _parse_assumption(name) -> Assumption:
    try:
        return Assumption(name)
    except ValueError:
        raise ConfigError(f"unknown assumption set {name!r}; choose from "
                          f"{[a.value for a in Assumption]}") from None


def load_toml(path) -> dict:
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed TOML in {path}: {exc}") from None


def _as_list(v):
    if v is None:
        return []
    return [v] if isinstance(v, str) else list(v)


def run_config_from(args) -> RunConfig:
    doc = load_toml(args.config) if args.config else {}
    roles = doc.get("roles", {})
    pick = (lambda flag, *keys, default=None:
            flag if flag is not None else _dig(doc, keys, default))
    input_path = pick(args.input, "input")
    if input_path is None:
        raise ConfigError("no input CSV given (--input or config 'input')")
    if args.config and not Path(input_path).is_absolute():
        candidate = Path(args.config).parent / input_path
        input_path = str(candidate) if candidate.exists() else input_path
    cfg = RunConfig(
        input=input_path,
        roles=ColumnRoles(a=pick(args.a, "roles", "A"), m=pick(args.m, "roles", "M"), y=pick(args.y, "roles", "Y"),
                          r=_as_list(args.r if args.r else roles.get("R")),
                          c=_as_list(args.c if args.c else roles.get("C")),
                          weight=pick(args.weight, "roles", "weight")),
        baseline=_required_label(pick(args.baseline, "exposure", "baseline"), "baseline"),
        comparison=_required_label(pick(args.comparison, "exposure", "comparison"), "comparison"),
        levels={k: [str(x) for x in v] for k, v in doc.get("levels", {}).items()},
        y_values={str(k): float(v) for k, v in doc["y_values"].items()} if "y_values" in doc else None,
        assumptions=args.assumptions or doc.get("assumptions"),
        bootstrap=BootstrapConfig(B=int(pick(args.B, "bootstrap", "B", default=0)),
                                  level=float(pick(args.level, "bootstrap", "level", default=0.95)),
                                  seed=int(pick(args.seed, "bootstrap", "seed", default=0))),
        deterministic_g=[int(v) for v in args.g] if args.g else doc.get("deterministic_g"),
        policy=ZeroCellPolicy(pick(args.policy, "policy", default="error")),
        output=pick(args.output, "output"),
        format=pick(args.format, "format", default="json"),
        keep_replicates=bool(args.keep_replicates or doc.get("keep_replicates", False)),
    )
    return cfg.validate()


def _required_label(value, which):
    if value is None:
        raise ConfigError(f"exposure {which} level must be declared")
    return str(value)


def _dig(doc, keys, default):
    for k in keys:
        if not isinstance(doc, dict) or k not in doc:
            return default
        doc = doc[k]
    return doc


def _threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None


# ---------------------------------------------------------------------------
# estimation
# ---------------------------------------------------------------------------

def _is_binary_product(codec) -> bool:
    comps = codec.components or (codec,)
    return codec.size > 1 and all(c.size == 2 for c in comps)


def applicable_assumptions(p: int, r_codec, g=None) -> list:
    """Default regimes that make sense for a confounder with ``p`` levels."""
    out = [Assumption.SWIG_IGNORE_R, Assumption.SWIG_WITH_R, Assumption.NPSEM_IE_IGNORE_R, Assumption.NPSEM_IE_LP]
    if p == 2:
        out.append(Assumption.NPSEM_IE_BINARY_R)
    if _is_binary_product(r_codec):
        out.append(Assumption.MONOTONICITY)
    out += [Assumption.NO_MR_INTERACTION, Assumption.INDEPENDENT_CROSS_WORLD_R]
    if g is not None:
        out.append(Assumption.DETERMINISTIC_CROSS_WORLD_R)
    return out


def decompose(fitted, gamma0):
    if isinstance(fitted, StratifiedLaws):
        return adjusted_decomposition(fitted, gamma0)
    return effect_decomposition(fitted, gamma0)


def _record(assumption, fitted, g):
    try:
        est = estimate_fitted(assumption, fitted, g)
    except PdeBoundsError as exc:
        return {"assumptions": assumption.value, "status": "error", "error": type(exc).__name__,
                "message": str(exc)}, None
    rec = decompose(fitted, est).to_record()
    rec["status"] = "ok"
    return rec, est


def run_estimate(cfg: RunConfig) -> dict:
    """Results document with one record per requested assumption set."""
    try:
        data = read_csv_dataset(cfg.input, cfg.roles, cfg.baseline, cfg.comparison, cfg.y_values, cfg.levels)
    except OSError as exc:
        raise ConfigError(f"cannot read {cfg.input}: {exc.strerror or exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    fitted = fit_for(data, cfg.policy)
    g = cfg.deterministic_g
    regimes = cfg.assumptions or applicable_assumptions(data.r_codec.size, data.r_codec, g)
    records = []
    for a in regimes:
        rec, _ = _record(a, fitted, g)
        records.append(rec)
    ok = [a for a, rec in zip(regimes, records) if rec["status"] == "ok"]
    if cfg.bootstrap.B > 0 and ok:
        boots = _bootstrap_regimes(data, ok, g, cfg)
        for a, rec in zip(regimes, records):
            if a in boots:
                rec["bootstrap"] = boots[a]
    law = fitted.marginalized if isinstance(fitted, StratifiedLaws) else fitted
    return {
        "schema_version": SCHEMA_VERSION,
        "command": "estimate",
        "input": {"n": data.n, "total_weight": data.total_weight, "p": law.p, "n_m": law.n_m,
                  "y_values": law.y_values.tolist(), "n_strata": data.c_codec.size,
                  "baseline": cfg.baseline, "comparison": cfg.comparison},
        "headline": "nie",
        "records": records,
    }


def _bootstrap_regimes(data, regimes, g, cfg):
    ests = {a: regime_estimator(a, g, cfg.policy) for a in regimes}
    n_jobs = _threads()
    try:
        res = bootstrap_many(data, ests, cfg.bootstrap.B, cfg.bootstrap.level, cfg.bootstrap.seed,
                             n_jobs=n_jobs)
    except PdeBoundsError:
        res = {}
        for a in regimes:
            try:
                res.update(bootstrap_many(data, {a: ests[a]}, cfg.bootstrap.B, cfg.bootstrap.level,
                                          cfg.bootstrap.seed, n_jobs=n_jobs))
            except PdeBoundsError as exc:
                res[a] = exc
    out = {}
    for a, r in res.items():
        if isinstance(r, Exception):
            out[a] = {"status": "error", "error": type(r).__name__, "message": str(r)}
        else:
            out[a] = {"status": "ok", **r.to_record(cfg.keep_replicates)}
    return out


CSV_FIELDS = ["assumptions", "status", "lower", "upper", "point_identified", "total_effect", "nie_lower",
              "nie_upper", "pde_lower", "pde_upper", "ci_lower", "ci_upper"]


def records_to_csv(doc) -> str:
    buf = io.StringIO()
    out = csv.DictWriter(buf, CSV_FIELDS, extrasaction="ignore", lineterminator="\n")
    out.writeheader()
    for rec in doc["records"]:
        row = dict(rec)
        boot = rec.get("bootstrap") or {}
        row["ci_lower"], row["ci_upper"] = boot.get("ci_lower"), boot.get("ci_upper")
        out.writerow({k: _fmt(row.get(k)) for k in CSV_FIELDS})
    return buf.getvalue()


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


# ---------------------------------------------------------------------------
# simulation
# ---------------------------------------------------------------------------

def world_class(spec: WorldSpec) -> str:
    if spec.is_npsem_ie():
        return "npsem_ie"
    return "swig" if spec.is_swig() else "other"


def valid_assumptions(spec: WorldSpec, truth, g=None) -> set:
    """Regimes whose assumptions hold in ``spec``.

    Beyond the class-level rules, an independent-error world without
    covariates also validates a cross-world R regime when the enumerated
    joint of (R(a), R(a*)) equals the joint that regime imposes.
    """
    valid = set(_VALID_FOR[world_class(spec)])
    if world_class(spec) != "npsem_ie" or spec.n_c > 1:
        return valid
    joint = truth.cross_world_r
    law = truth.law
    if np.allclose(joint, np.outer(law.r_given_a[1], law.r_given_a[0]), atol=1e-12):
        valid.add(Assumption.INDEPENDENT_CROSS_WORLD_R)
    try:
        if np.allclose(joint, monotonicity_weights(law), atol=1e-12):
            valid.add(Assumption.MONOTONICITY)
    except (ValueError, PdeBoundsError):
        pass
    if g is not None and len(g) == law.p:
        implied = np.zeros_like(joint)
        implied[np.asarray(g), np.arange(law.p)] = law.r_given_a[0]
        if np.allclose(joint, implied, atol=1e-12):
            valid.add(Assumption.DETERMINISTIC_CROSS_WORLD_R)
    return valid


def run_simulate(spec: WorldSpec, study: dict) -> dict:
    """Containment and coverage study on one world.

    ``study`` keys: ``n`` (int or ``"population"``), ``repetitions``,
    ``assumptions``, ``seed``, ``B``, ``level``, ``g``.
    """
    truth = enumerate_truth(spec)
    cls = world_class(spec)
    g = study.get("g")
    valid = valid_assumptions(spec, truth, g)
    fitted_pop = truth.strata if spec.n_c > 1 else truth.law
    regimes = [_parse_assumption(a) for a in study.get("assumptions", [])] or \
        applicable_assumptions(truth.law.p, spec.codecs()["R"], g)
    n = study.get("n", "population")
    reps = int(study.get("repetitions", 1))
    seed = int(study.get("seed", 0))
    B = int(study.get("B", 0))
    level = float(study.get("level", 0.95))
    if n != "population" and (not isinstance(n, int) or n < 1):
        raise ConfigError("study 'n' must be a positive integer or \"population\"")
    if reps < 1 or B < 0:
        raise ConfigError("study needs repetitions >= 1 and B >= 0")

    pop = {}
    for a in regimes:
        try:
            pop[a] = estimate_fitted(a, fitted_pop, g)
        except PdeBoundsError as exc:
            pop[a] = exc
    rows = {}
    for a in regimes:
        est = pop[a]
        rows[a] = {"assumptions": a.value,
                   "valid_for_world": a in valid,
                   "population": None if isinstance(est, Exception) else [est.lower, est.upper],
                   "population_error": type(est).__name__ if isinstance(est, Exception) else None}

    if n == "population":
        for a in regimes:
            est = pop[a]
            rows[a]["containment_rate"] = None if isinstance(est, Exception) else \
                float(est.contains(truth.gamma0, 1e-9))
            rows[a]["runs"] = 1
    else:
        ests = {a: regime_estimator(a, g) for a in regimes if not isinstance(pop[a], Exception)}
        n_jobs = _threads()
        hit = {a: 0 for a in ests}
        cover = {a: 0 for a in ests}
        done = {a: 0 for a in ests}
        boot_done = {a: 0 for a in ests}
        for k in range(reps):
            data = sample_dataset(spec, n, seed=[seed, k], truth=truth)
            fitted = _safe(lambda: fit_for(data))
            for a in ests:
                est = None if isinstance(fitted, Exception) else _safe(lambda: estimate_fitted(a, fitted, g))
                if est is None or isinstance(est, Exception):
                    continue
                done[a] += 1
                hit[a] += est.contains(truth.gamma0, 1e-9)
            if B > 0:
                try:
                    res = bootstrap_many(data, ests, B, level, seed=(seed, k), n_jobs=n_jobs)
                except PdeBoundsError:
                    res = {}
                for a, r in res.items():
                    boot_done[a] += 1
                    cover[a] += r.covers(pop[a].lower, pop[a].upper)
        for a in regimes:
            if a not in ests:
                continue
            rows[a]["runs"] = done[a]
            rows[a]["failed_runs"] = reps - done[a]
            rows[a]["containment_rate"] = hit[a] / done[a] if done[a] else None
            if B > 0:
                rows[a]["bootstrap_runs"] = boot_done[a]
                rows[a]["ci_coverage"] = cover[a] / boot_done[a] if boot_done[a] else None
    return {
        "schema_version": SCHEMA_VERSION,
        "command": "simulate",
        "world": {"name": spec.name, "class": cls, "gamma0": truth.gamma0, "nie": truth.nie, "pde": truth.pde,
                  "total_effect": truth.te},
        "study": {"n": n, "repetitions": reps, "seed": seed, "B": B, "level": level},
        "results": [rows[a] for a in regimes],
    }


def _safe(fn):
    try:
        return fn()
    except PdeBoundsError as exc:
        return exc


def run_oracle(spec: WorldSpec) -> dict:
    truth = enumerate_truth(spec)
    return {"schema_version": SCHEMA_VERSION, "command": "oracle", "world": spec.name,
            "class": world_class(spec), **truth.to_record()}


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_data_args(p):
    p.add_argument("--config", help="TOML run config; flags override its entries")
    p.add_argument("--input", help="CSV file")
    p.add_argument("--a", help="exposure column")
    p.add_argument("--m", help="mediator column")
    p.add_argument("--y", help="outcome column")
    p.add_argument("--r", action="append", help="confounder column (repeatable)")
    p.add_argument("--c", action="append", help="baseline covariate column (repeatable)")
    p.add_argument("--weight", help="record weight column")
    p.add_argument("--baseline", help="exposure label of a*")
    p.add_argument("--comparison", help="exposure label of a")
    p.add_argument("--policy", choices=[v.value for v in ZeroCellPolicy])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pdebounds", description="Bounds on the pure direct effect.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("estimate", help="estimate from a CSV")
    _add_data_args(p)
    p.add_argument("--assumptions", nargs="+", help="assumption sets to run (default: all applicable)")
    p.add_argument("--g", nargs="+", help="deterministic map g(r*) as a list of R level indices")
    p.add_argument("--B", type=int, help="bootstrap replicates (0 disables)")
    p.add_argument("--level", type=float, help="bootstrap CI level")
    p.add_argument("--seed", type=int, help="bootstrap master seed")
    p.add_argument("--output", help="write here instead of stdout")
    p.add_argument("--format", choices=["json", "csv"])
    p.add_argument("--keep-replicates", action="store_true", help="include replicate endpoints")

    p = sub.add_parser("simulate", help="containment / coverage study on a world spec")
    p.add_argument("spec", help="world spec TOML")
    p.add_argument("--study", help="study TOML (n, repetitions, assumptions, seed, B, level)")
    p.add_argument("--n", help="sample size, or 'population'")
    p.add_argument("--repetitions", type=int)
    p.add_argument("--assumptions", nargs="+")
    p.add_argument("--seed", type=int)
    p.add_argument("--B", type=int)
    p.add_argument("--level", type=float)
    p.add_argument("--output")

    p = sub.add_parser("oracle", help="exact truth of a world spec")
    p.add_argument("spec")
    p.add_argument("--output")

    p = sub.add_parser("lp-dump", help="print the cross-world LP")
    p.add_argument("--spec", help="use the population law of this world spec")
    _add_data_args(p)
    p.add_argument("--output")

    p = sub.add_parser("sample", help="write a synthetic CSV drawn from a world spec")
    p.add_argument("spec")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    return parser


def _load_spec(path) -> WorldSpec:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror or exc}") from None
    return WorldSpec.from_toml(text)


def _study_from(args) -> dict:
    study = load_toml(args.study) if args.study else {}
    for key in ("repetitions", "seed", "B", "level"):
        v = getattr(args, key)
        if v is not None:
            study[key] = v
    if args.assumptions:
        study["assumptions"] = args.assumptions
    if args.n is not None:
        try:
            study["n"] = args.n if args.n == "population" else int(args.n)
        except ValueError:
            raise ConfigError(f"--n must be an integer or 'population', got {args.n!r}") from None
    return study


def _emit(text: str, output):
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, allow_nan=False, default=_json_default) + "\n"


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def _data_law(args):
    cfg_args = argparse.Namespace(**{**vars(args), "assumptions": None, "g": None, "B": None, "level": None,
                                     "seed": None, "format": None, "keep_replicates": False,
                                     "output": None})
    cfg = run_config_from(cfg_args)
    try:
        data = read_csv_dataset(cfg.input, cfg.roles, cfg.baseline, cfg.comparison, cfg.y_values, cfg.levels)
    except OSError as exc:
        raise ConfigError(f"cannot read {cfg.input}: {exc.strerror or exc}") from None
    fitted = fit_for(data, cfg.policy, adjust=False)
    return fitted


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "estimate":
            cfg = run_config_from(args)
            doc = run_estimate(cfg)
            _emit(records_to_csv(doc) if cfg.format == "csv" else _dumps(doc), cfg.output)
        elif args.command == "simulate":
            doc = run_simulate(_load_spec(args.spec), _study_from(args))
            _emit(_dumps(doc), args.output)
        elif args.command == "oracle":
            _emit(_dumps(run_oracle(_load_spec(args.spec))), args.output)
        elif args.command == "lp-dump":
            law: MediationLaw = enumerate_truth(_load_spec(args.spec)).law if args.spec else _data_law(args)
            _emit(build_cross_world_lp(law).to_text(), args.output)
        elif args.command == "sample":
            spec = _load_spec(args.spec)
            if args.n < 1:
                raise ConfigError("--n must be at least 1")
            write_csv_dataset(sample_dataset(spec, args.n, args.seed), args.output)
    except ConfigError as exc:
        return _fail(exc, EXIT_CONFIG)
    except PdeBoundsError as exc:
        return _fail(exc, EXIT_ESTIMATION)
    return EXIT_OK


def _fail(exc, code) -> int:
    sys.stderr.write(json.dumps({"schema_version": SCHEMA_VERSION, "error": type(exc).__name__,
                                 "message": str(exc), "exit_code": code}, sort_keys=True) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
