"""Run configuration: JSON parsing, schema validation and conversion to the model dataclasses."""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import jsonschema
import numpy as np

from .collapse import CollapseConfig, build_config, triangle_from_distances
from .ensemble import EnsembleSpec
from .geometry import Plane, Torus, VortexState
from .integrator import IntegratorSpec, StoppingRule
from .kernel import KernelSpec
from .noise import NoiseSpec
from .schemas import CONFIG_SCHEMA


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending JSON path."""


def json_path(parts) -> str:
    out = "$"
    for p in parts:
        out += f"[{p}]" if isinstance(p, int) else f".{p}"
    return out


def _error_path(err: jsonschema.ValidationError) -> str:
    parts = list(err.absolute_path)
    if err.validator == "required":
        # "'epsilon' is a required property": point at the missing key itself
        missing = err.message.split("'")[1] if "'" in err.message else None
        if missing:
            parts.append(missing)
    elif err.validator == "additionalProperties":
        extra = sorted(set(err.instance) - set(err.schema.get("properties", {})))
        if extra:
            parts.append(extra[0])
    return json_path(parts)


def validate_document(doc, schema: dict = CONFIG_SCHEMA) -> None:
    """Raise ConfigError listing every schema violation, each prefixed with its path."""
    errs = sorted(jsonschema.Draft202012Validator(schema).iter_errors(doc), key=lambda e: list(map(str, e.absolute_path)))
    if errs:
        raise ConfigError("; ".join(f"{_error_path(e)}: {e.message}" for e in errs))


def parse_json(text: str, source: str = "<config>"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"{source}: malformed JSON at line {e.lineno}, column {e.colno}: {e.msg}") from None


@dataclass(frozen=True)
class RunConfig:
    raw: dict
    domain: object
    kernel: KernelSpec
    noise: NoiseSpec
    integrator: IntegratorSpec
    stopping: StoppingRule
    mode: str = "deterministic"
    seed: int = 0
    vortices: VortexState | None = None
    collapse: dict | None = None
    ensemble: dict | None = None
    output_dir: str = "out"
    cadence: int = 1

    def collapse_config(self) -> CollapseConfig:
        """Plane collapse configuration from the collapse section."""
        c = self.collapse
        if c is None:
            raise ConfigError("$.collapse: section required")
        if ("distances" in c) == ("positions" in c):
            raise ConfigError("$.collapse: give exactly one of distances or positions")
        if "distances" in c:
            p = triangle_from_distances(*c["distances"])
        else:
            p = np.asarray(c["positions"], dtype=np.float64)
        return build_config(p, self.kernel.epsilon, c.get("xi2", 1.0), self.kernel.c_eps, c.get("orient", "given"))

    def ensemble_spec(self, seed: int | None = None) -> EnsembleSpec:
        e = self.ensemble
        if e is None:
            raise ConfigError("$.ensemble: section required")
        kw = dict(n_samples=e["n_samples"], master_seed=e.get("seed", self.seed) if seed is None else seed)
        for src, dst in (("T", "horizon_T"), ("init", "init"), ("n_vortices", "n_vortices"), ("workers", "workers"), ("batch_size", "batch_size")):
            if src in e:
                kw[dst] = e[src]
        if "delta_grid" in e:
            kw["delta_grid"] = tuple(e["delta_grid"])
        if "intensities" in e:
            kw["intensities"] = tuple(e["intensities"])
            kw.setdefault("n_vortices", len(e["intensities"]))
        if "reject_factor" in e:
            kw["reject_factor"] = e["reject_factor"]
        if kw.get("init") == "fixed":
            if self.vortices is None:
                raise ConfigError("$.ensemble.init: fixed init needs a vortices section")
            kw["fixed_state"] = self.vortices
        try:
            return EnsembleSpec(**kw)
        except ValueError as err:
            raise ConfigError(f"$.ensemble: {err}") from None


def _section_spec(path: str, fn):
    try:
        return fn()
    except (ValueError, TypeError) as err:
        raise ConfigError(f"{path}: {err}") from None


def from_dict(doc: dict) -> RunConfig:
    validate_document(doc)
    domain = Torus if doc.get("domain", "plane") == "torus" else Plane
    k = doc["kernel"]
    kernel = _section_spec(
        "$.kernel",
        lambda: KernelSpec(
            epsilon=float(k["epsilon"]),
            c_eps=float(k.get("c_eps", 1.0)),
            delta=k.get("delta"),
            lattice_M=k.get("lattice_M", 20),
            method=k.get("method", "direct"),
            fourier_cutoff=k.get("fourier_cutoff", 64),
        ),
    )
    n = doc.get("noise", {})
    noise = _section_spec(
        "$.noise",
        lambda: NoiseSpec(
            gamma=float(n.get("gamma", 4.0)),
            k_max=n.get("k_max", 8),
            global_scale=float(n.get("scale", 1.0)),
            mode_scales=tuple((tuple(m["k"]), m["c"]) for m in n.get("mode_scales", [])),
            enabled=n.get("enabled", True),
        ),
    )
    out = doc.get("output", {})
    cadence = out.get("cadence", 1)
    i = doc.get("integrator", {})
    integ = _section_spec(
        "$.integrator",
        lambda: IntegratorSpec(
            scheme_det=i.get("scheme", "rk45"),
            scheme_sto=i.get("scheme_sto", "euler_maruyama"),
            dt=i.get("dt", 1e-3),
            adaptive_tol=i.get("tol", 1e-10),
            t_end=i.get("T", 1.0),
            dt_min=i.get("dt_min", 1e-12),
            cfl=i.get("cfl"),
            cadence=cadence,
        ),
    )
    s = doc.get("stopping", {})
    stopping = _section_spec("$.stopping", lambda: StoppingRule(s.get("delta_stop", 1e-3), s.get("enabled", True)))
    mode = i.get("mode", "deterministic")
    if mode == "stochastic" and kernel.delta is None:
        raise ConfigError("$.kernel.delta: stochastic mode requires a regularization radius")
    vort = None
    if "vortices" in doc:
        v = doc["vortices"]
        if len(v["positions"]) != len(v["intensities"]):
            raise ConfigError("$.vortices.intensities: length must match positions")
        vort = _section_spec("$.vortices", lambda: VortexState(np.asarray(v["positions"], float), np.asarray(v["intensities"], float), domain))
    ens = doc.get("ensemble")
    if ens is not None:
        grid = ens.get("delta_grid", [0.1, 0.05, 0.02, 0.01])
        if any(not (0.0 < d < 1.0) for d in grid):
            raise ConfigError("$.ensemble.delta_grid: entries must lie in (0, 1)")
        if any(b >= a for a, b in zip(grid, grid[1:])):
            raise ConfigError("$.ensemble.delta_grid: must be strictly decreasing")
        if ens["n_samples"] < 1:
            raise ConfigError("$.ensemble.n_samples: must be >= 1")
    if "collapse" in doc and "vortices" in doc:
        raise ConfigError("$.collapse: give either a vortices or a collapse section, not both")
    return RunConfig(
        raw=doc,
        domain=domain,
        kernel=kernel,
        noise=noise,
        integrator=integ,
        stopping=stopping,
        mode=mode,
        seed=doc.get("seed", 0),
        vortices=vort,
        collapse=doc.get("collapse"),
        ensemble=ens,
        output_dir=out.get("dir", "out"),
        cadence=cadence,
    )


def load_config(path) -> RunConfig:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read config {p}: {err.strerror}") from None
    doc = parse_json(text, str(p))
    return from_dict(doc)

