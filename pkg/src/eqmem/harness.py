"""Experiment configuration, dispatch and result files.

A config is a line-oriented ``key=value`` file describing one experiment::

    [cw-lifetime]
    N=20,40,80
    J=1.0
    T=1.0
    trials=1000
    seed=42

The ``[kind]`` header may be replaced by a ``kind=...`` line. Blank lines
and lines starting with ``#`` are ignored. Every parameter is validated
before any work starts.

Results are written as a CSV table (comma separated, LF line endings,
floats with 17 significant digits) plus a ``<csv>.meta`` sidecar of
``key=value`` lines. The CSV depends only on the config, the seed and the
package version, never on ``workers``.
"""
from __future__ import annotations

import csv
import io
import math
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from eqmem import __version__, kernels
from eqmem import curie_weiss as cw
from eqmem import passivity as pv
from eqmem import toric_code as tc
from eqmem._rng import SEED_MASK
from eqmem.errors import ConfigError, DomainError, ResourceError

KINDS = ("cw-landscape", "cw-lifetime", "toric-lifetime", "toric-equilibrium",
         "passivity-check", "walk-escape")


def _int(text: str) -> int:
    return int(text.strip(), 10)


def _float(text: str) -> float:
    value = float(text.strip())
    if math.isnan(value):
        raise ValueError("nan")
    return value


def _list(conv: Callable[[str], Any]) -> Callable[[str], list]:
    def parse(text: str) -> list:
        items = [t for t in text.split(",")]
        if not items or any(not t.strip() for t in items):
            raise ValueError("empty list item")
        return [conv(t) for t in items]
    parse.__name__ = f"list of {conv.__name__.strip('_')}"
    return parse


def _str(text: str) -> str:
    return text.strip()


_int.__name__ = "integer"
_float.__name__ = "float"
_str.__name__ = "string"

REQUIRED = object()

COMMON = {
    "seed": (_int, 0),
    "trials": (_int, None),
    "workers": (_int, 1),
    "out": (_str, None),
}

SCHEMAS: dict[str, dict[str, tuple]] = {
    "cw-landscape": {"N": (_int, REQUIRED), "J": (_float, REQUIRED),
                     "T": (_float, REQUIRED), "grid_points": (_int, 201)},
    "cw-lifetime": {"N": (_list(_int), REQUIRED), "J": (_float, REQUIRED),
                    "T": (_float, REQUIRED)},
    "toric-lifetime": {"k": (_int, REQUIRED), "beta": (_float, None),
                       "p_create": (_float, None), "attempt_rate": (_float, 1.0),
                       "max_events": (_int, 10**6)},
    "toric-equilibrium": {"k": (_int, 2), "beta": (_list(_float), None),
                          "p_create": (_list(_float), None),
                          "attempt_rate": (_float, 1.0),
                          "t_burn": (_float, 50.0), "t_run": (_float, 1000.0)},
    "passivity-check": {"energies": (_list(_float), REQUIRED),
                        "populations": (_list(_float), None),
                        "beta": (_float, None), "n_max": (_int, 6),
                        "budget": (_int, pv.DEFAULT_BUDGET)},
    "walk-escape": {"L": (_list(_float), REQUIRED)},
}

DEFAULT_TRIALS = {"cw-lifetime": 0, "toric-lifetime": 100, "toric-equilibrium": 100,
                  "walk-escape": 10000}


@dataclass
class ExperimentConfig:
    kind: str
    params: dict[str, Any]
    seed: int = 0
    trials: int = 0
    workers: int = 1
    out: str | None = None

    def echo(self) -> list[tuple[str, str]]:
        items = [("kind", self.kind)]
        items += [(k, _format_value(v)) for k, v in sorted(self.params.items())
                  if v is not None]
        items += [("seed", str(self.seed)), ("trials", str(self.trials))]
        return items


@dataclass
class RunRecord:
    config: ExperimentConfig
    header: list[str]
    rows: list[tuple]
    duration: float
    version: str = __version__
    backend: str = kernels.BACKEND
    censored_count: int | None = None
    summary: dict[str, Any] = field(default_factory=dict)


def parse_config(text: str) -> ExperimentConfig:
    """Parse and validate an experiment config.

    Raises
    ------
    ConfigError
        Malformed lines, duplicate or unknown keys, type mismatches and
        precondition violations. Messages carry line numbers where a line
        is to blame.
    ResourceError
        A requested size exceeds its budget.
    """
    raw: dict[str, tuple[str, int]] = {}
    section = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if stripped.startswith("[") and stripped.endswith("]"):
            if section is not None:
                raise ConfigError(f"line {lineno}: only one [kind] section per config")
            section = (stripped[1:-1].strip(), lineno)
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key=value, got {stripped!r}")
        key, value = (s.strip() for s in stripped.split("=", 1))
        if not key:
            raise ConfigError(f"line {lineno}: empty key")
        if key in raw:
            raise ConfigError(
                f"duplicate key {key!r} on lines {raw[key][1]} and {lineno}")
        raw[key] = (value, lineno)

    if section is not None and "kind" in raw and raw["kind"][0] != section[0]:
        raise ConfigError(
            f"line {raw['kind'][1]}: kind {raw['kind'][0]!r} contradicts "
            f"section [{section[0]}] on line {section[1]}")
    kind = raw.pop("kind", (section[0] if section else None, None))[0]
    if kind is None:
        raise ConfigError("missing required key 'kind'")
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}; expected one of {', '.join(KINDS)}")

    schema = {**COMMON, **SCHEMAS[kind]}
    values: dict[str, Any] = {}
    for key, (value, lineno) in raw.items():
        if key not in schema:
            raise ConfigError(f"line {lineno}: unknown key {key!r} for kind {kind}")
        conv = schema[key][0]
        try:
            values[key] = conv(value)
        except ValueError:
            raise ConfigError(
                f"line {lineno}: {key}={value!r} is not a valid {conv.__name__}") from None
    for key, (_, default) in schema.items():
        if key not in values:
            if default is REQUIRED:
                raise ConfigError(f"missing required key {key!r} for kind {kind}")
            values[key] = default

    trials = values.pop("trials")
    config = ExperimentConfig(
        kind=kind,
        seed=values.pop("seed"),
        trials=DEFAULT_TRIALS.get(kind, 0) if trials is None else trials,
        workers=values.pop("workers"),
        out=values.pop("out"),
        params=values,
    )
    validate(config)
    return config


def _require(cond: bool, message: str):
    if not cond:
        raise ConfigError(message)


def _toric_params(p: dict) -> list[tc.ThermalParams]:
    beta, p_create = p["beta"], p["p_create"]
    _require((beta is None) != (p_create is None),
             "exactly one of 'beta' and 'p_create' is required")
    if beta is not None:
        betas = beta if isinstance(beta, list) else [beta]
        return [tc.ThermalParams(b, p["attempt_rate"]) for b in betas]
    ps = p_create if isinstance(p_create, list) else [p_create]
    return [tc.ThermalParams.from_creation_probability(q, p["attempt_rate"]) for q in ps]


def _passivity_inputs(p: dict) -> tuple[pv.EnergySpectrum, pv.DiagonalState]:
    spectrum = pv.EnergySpectrum.from_energies(p["energies"])
    _require((p["populations"] is None) != (p["beta"] is None),
             "exactly one of 'populations' and 'beta' is required")
    if p["beta"] is not None:
        return spectrum, pv.gibbs_state(spectrum, p["beta"])
    _require(len(p["populations"]) == spectrum.dimension,
             "populations and energies must have the same length")
    return spectrum, pv.DiagonalState(p["populations"])


def validate(config: ExperimentConfig) -> None:
    """Check every precondition of the target operation; no side effects."""
    p = config.params
    _require(0 <= config.seed <= SEED_MASK, "seed must be an unsigned 64-bit integer")
    _require(config.trials >= 0, "trials must be >= 0")
    _require(config.workers >= 1, "workers must be >= 1")
    try:
        if config.kind == "cw-landscape":
            cw.CWParams(p["N"], p["J"], p["T"])
            _require(p["grid_points"] >= 3 and p["grid_points"] % 2 == 1,
                     "grid_points must be odd and >= 3")
        elif config.kind == "cw-lifetime":
            for N in p["N"]:
                cw.CWParams(N, p["J"], p["T"])
                _require(N >= 2, f"CWParams.N must be >= 2 for lifetimes, got {N}")
        elif config.kind == "toric-lifetime":
            _require(p["k"] >= 2, f"ToricLattice.k must be >= 2, got {p['k']}")
            _toric_params(p)
            _require(config.trials >= 1, "trials must be >= 1")
            _require(p["max_events"] >= 1, "max_events must be >= 1")
        elif config.kind == "toric-equilibrium":
            _require(p["k"] >= 2, f"ToricLattice.k must be >= 2, got {p['k']}")
            _toric_params(p)
            _require(config.trials >= 2, "trials must be >= 2")
            _require(p["t_burn"] >= 0 and p["t_run"] > 0, "need t_burn >= 0 and t_run > 0")
        elif config.kind == "passivity-check":
            spectrum, _ = _passivity_inputs(p)
            _require(p["n_max"] >= 1, "n_max must be >= 1")
            size = spectrum.dimension ** p["n_max"]
            if size > p["budget"]:
                raise ResourceError(
                    f"n_max={p['n_max']}: tensor power needs {size} slots, "
                    f"budget is {p['budget']}")
        elif config.kind == "walk-escape":
            _require(all(L > 0 for L in p["L"]), "every L must be > 0")
            _require(config.trials >= 1, "trials must be >= 1")
    except DomainError as exc:
        raise ConfigError(str(exc)) from None


def _run_cw_landscape(c: ExperimentConfig) -> RunRecord:
    p = c.params
    params = cw.CWParams(p["N"], p["J"], p["T"])
    prof = cw.landscape(params, p["grid_points"])
    rows = list(zip(prof.grid, prof.energy, prof.entropy, prof.free_energy))
    summary = {"T_c": cw.critical_temperature(params.J),
               "minima": prof.minima, "barrier_height": prof.barrier_height}
    return RunRecord(c, ["x", "E", "S", "F"], rows, 0.0, summary=summary)


def _run_cw_lifetime(c: ExperimentConfig) -> RunRecord:
    p = c.params
    rows = cw.lifetime_scaling_experiment(p["J"], p["T"], p["N"], c.trials, c.seed,
                                          c.workers)
    summary = {"T_c": cw.critical_temperature(p["J"]),
               "barrier_rate": cw.barrier_rate(p["J"], p["T"])}
    return RunRecord(c, list(cw.LifetimeRow._fields), [tuple(r) for r in rows], 0.0,
                     summary=summary)


def _run_toric_lifetime(c: ExperimentConfig) -> RunRecord:
    p = c.params
    params = _toric_params(p)[0]
    res = tc.lifetime_experiment(p["k"], params, c.trials, c.seed, p["max_events"],
                                 c.workers)
    rows = [(s.trial, s.lifetime, s.censored) for s in res.samples]
    censored = res.censored_count
    summary = {
        "beta": params.beta, "p_create": params.p_create,
        "uncensored": c.trials - censored,
        "mean_lifetime_uncensored": res.mean,
        "stderr_uncensored": res.std_error,
        "mean_lifetime_all": res.mean_lower_bound,
        "mean_lifetime_all_is_lower_bound": censored > 0,
    }
    return RunRecord(c, ["trial", "lifetime", "censored"], rows, 0.0,
                     censored_count=censored, summary=summary)


def _run_toric_equilibrium(c: ExperimentConfig) -> RunRecord:
    p = c.params
    lattice = tc.build_lattice(p["k"])
    rows = []
    for params in _toric_params(p):
        est = tc.sample_defect_density(lattice, params, c.trials, p["t_burn"],
                                       p["t_run"], c.seed, c.workers)
        exact = (tc.equilibrium_oracle(2, params.beta).defect_density
                 if p["k"] == 2 else math.nan)
        rows.append((params.beta, params.p_create, est.mean, est.std_error, exact))
    return RunRecord(c, ["beta", "p_create", "sim_density", "sim_stderr", "exact_density"],
                     rows, 0.0)


def _run_passivity(c: ExperimentConfig) -> RunRecord:
    p = c.params
    spectrum, state = _passivity_inputs(p)
    rows = []
    first = None
    for n in range(1, p["n_max"] + 1):
        big_spec, big_state = pv.tensor_power(spectrum, state, n, p["budget"])
        verdict = pv.is_passive(big_spec, big_state)
        rows.append((n, verdict.passive, pv.ergotropy(big_spec, big_state) / n))
        if first is None and not verdict.passive:
            first = (n, verdict.witness)
    summary = {"activation_order": "none" if first is None else first[0]}
    if first is not None:
        summary["witness"] = repr(first[1])
    return RunRecord(c, ["n", "passive", "ergotropy_per_copy"], rows, 0.0, summary=summary)


def _run_walk_escape(c: ExperimentConfig) -> RunRecord:
    rows = []
    for L in c.params["L"]:
        est = tc.escape_probability(L, c.trials, c.seed, c.workers)
        rows.append((L, est.probability, est.std_error))
    summary = {}
    usable = [(L, q) for L, q, _ in rows if L > 1 and q > 0]
    if len(usable) >= 2:
        fit = tc.escape_scaling_fit(*zip(*usable))
        summary = dict(fit._asdict())
    return RunRecord(c, ["L", "escape_probability", "stderr"], rows, 0.0, summary=summary)


RUNNERS = {
    "cw-landscape": _run_cw_landscape,
    "cw-lifetime": _run_cw_lifetime,
    "toric-lifetime": _run_toric_lifetime,
    "toric-equilibrium": _run_toric_equilibrium,
    "passivity-check": _run_passivity,
    "walk-escape": _run_walk_escape,
}


def run(config: ExperimentConfig) -> RunRecord:
    validate(config)
    start = time.perf_counter()
    record = RUNNERS[config.kind](config)
    record.duration = time.perf_counter() - start
    return record


def _format_value(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    if isinstance(value, (list, tuple)):
        return ",".join(_format_value(v) for v in value)
    if hasattr(value, "item"):  # numpy scalar
        return _format_value(value.item())
    return str(value)


def format_csv(record: RunRecord) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(record.header)
    for row in record.rows:
        writer.writerow([_format_value(v) for v in row])
    return buf.getvalue()


def format_metadata(record: RunRecord) -> str:
    lines = [f"{k}={v}" for k, v in record.config.echo()]
    lines += [f"version={record.version}", f"backend={record.backend}",
              f"workers={record.config.workers}",
              f"duration_seconds={_format_value(record.duration)}"]
    if record.censored_count is not None:
        lines.append(f"censored_count={record.censored_count}")
    lines += [f"{k}={_format_value(v)}" for k, v in record.summary.items()]
    return "\n".join(lines) + "\n"


def emit_plotdata(record: RunRecord, path) -> tuple[Path, Path]:
    """Write the CSV table and its ``.meta`` sidecar; returns both paths."""
    csv_path = Path(path)
    meta_path = csv_path.with_name(csv_path.name + ".meta")
    csv_text = format_csv(record)
    meta_text = format_metadata(record)
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        fh.write(csv_text)
    with open(meta_path, "w", newline="", encoding="utf-8") as fh:
        fh.write(meta_text)
    return csv_path, meta_path
