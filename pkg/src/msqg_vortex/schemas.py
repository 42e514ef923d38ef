"""JSON schemas for run configs and the reports the CLI writes."""
from __future__ import annotations

NUM = {"type": "number"}
POS = {"type": "number", "exclusiveMinimum": 0}
INT = {"type": "integer"}
POINT = {"type": "array", "items": NUM, "minItems": 2, "maxItems": 2}
NULLABLE_NUM = {"type": ["number", "null"]}


def _obj(props: dict, required: tuple = ()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


CONFIG_SCHEMA = _obj(
    {
        "domain": {"enum": ["plane", "torus"]},
        "seed": INT,
        "kernel": _obj(
            {
                "epsilon": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
                "c_eps": POS,
                "delta": {"anyOf": [{"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1}, {"type": "null"}]},
                "lattice_M": {"type": "integer", "minimum": 1},
                "method": {"enum": ["direct", "fourier"]},
                "fourier_cutoff": {"type": "integer", "minimum": 1},
            },
            ("epsilon",),
        ),
        "noise": _obj(
            {
                "gamma": {"type": "number", "exclusiveMinimum": 3},
                "k_max": {"type": "integer", "minimum": 1},
                "scale": {"type": "number", "minimum": 0},
                "enabled": {"type": "boolean"},
                "mode_scales": {
                    "type": "array",
                    "items": _obj({"k": {"type": "array", "items": INT, "minItems": 2, "maxItems": 2}, "c": POS}, ("k", "c")),
                },
            }
        ),
        "integrator": _obj(
            {
                "mode": {"enum": ["deterministic", "stochastic"]},
                "scheme": {"enum": ["rk45", "rk4", "heun", "euler"]},
                "scheme_sto": {"enum": ["euler_maruyama", "strat_heun"]},
                "dt": POS,
                "tol": POS,
                "T": POS,
                "dt_min": POS,
                "cfl": {"anyOf": [POS, {"type": "null"}]},
            }
        ),
        "stopping": _obj({"delta_stop": POS, "enabled": {"type": "boolean"}}),
        "vortices": _obj(
            {
                "positions": {"type": "array", "items": POINT, "minItems": 1},
                "intensities": {"type": "array", "items": NUM, "minItems": 1},
            },
            ("positions", "intensities"),
        ),
        "collapse": _obj(
            {
                "distances": {"type": "array", "items": POS, "minItems": 3, "maxItems": 3},
                "positions": {"type": "array", "items": POINT, "minItems": 3, "maxItems": 3},
                "xi2": NUM,
                "lambda": POS,
                "orient": {"enum": ["given", "auto"]},
            }
        ),
        "ensemble": _obj(
            {
                "n_samples": INT,
                "seed": INT,
                "delta_grid": {"type": "array", "items": NUM, "minItems": 1},
                "T": POS,
                "init": {"enum": ["uniform", "fixed"]},
                "intensities": {"type": "array", "items": NUM, "minItems": 1},
                "n_vortices": {"type": "integer", "minimum": 1},
                "reject_factor": {"anyOf": [{"type": "number", "minimum": 0}, {"type": "null"}]},
                "workers": {"type": "integer", "minimum": 1},
                "batch_size": {"type": "integer", "minimum": 1},
            },
            ("n_samples",),
        ),
        "output": _obj({"dir": {"type": "string"}, "cadence": {"type": "integer", "minimum": 1}}),
    },
    ("kernel",),
)

# reports: closed at the top level, permissive inside echoed sub-documents
RUNTIME = {"type": "object"}

SIMULATE_REPORT_SCHEMA = _obj(
    {
        "command": {"const": "simulate"},
        "mode": {"enum": ["deterministic", "stochastic"]},
        "domain": {"enum": ["plane", "torus"]},
        "n_vortices": INT,
        "stop_reason": {"enum": ["reached_t", "hit_delta_stop", "singularity"]},
        "stop_time": NUM,
        "n_steps": INT,
        "message": {"type": "string"},
        "exit_code": INT,
        "csv": {"type": "string"},
        "columns": {"type": "array", "items": {"type": "string"}},
        "config": {"type": "object"},
        "runtime": RUNTIME,
    },
    ("command", "stop_reason", "stop_time", "exit_code", "columns"),
)

_SCALED = _obj(
    {
        "lambda": POS,
        "factor": POS,
        "positions": {"type": "array", "items": POINT},
        "distances": {"type": "array", "items": NUM},
        "t_star": NULLABLE_NUM,
        "fits_quarter_box": {"type": "boolean"},
        "min_lambda_to_fit": POS,
    },
    ("lambda", "positions", "t_star", "fits_quarter_box"),
)

COLLAPSE_REPORT_SCHEMA = _obj(
    {
        "command": {"const": "collapse"},
        "epsilon": NUM,
        "c_eps": NUM,
        "xi": {"type": "array", "items": NUM, "minItems": 3, "maxItems": 3},
        "positions": {"type": "array", "items": POINT},
        "distances": {"type": "array", "items": NUM},
        "area_A": NUM,
        "c_coeffs": {"type": "array", "items": NUM},
        "collapses": {"type": "boolean"},
        "t_star": NULLABLE_NUM,
        "center_of_vorticity": POINT,
        "scaled": {"anyOf": [_SCALED, {"type": "null"}]},
        "simulation": {"anyOf": [{"type": "object"}, {"type": "null"}]},
        "runtime": RUNTIME,
    },
    ("command", "xi", "c_coeffs", "collapses", "t_star"),
)

ENSEMBLE_REPORT_SCHEMA = _obj(
    {
        "command": {"const": "ensemble"},
        "note": {"type": "string"},
        "epsilon": NUM,
        "kernel_delta": POS,
        "master_seed": INT,
        "horizon_T": POS,
        "init": {"enum": ["uniform", "fixed"]},
        "reject_factor": NULLABLE_NUM,
        "stats": _obj(
            {
                "delta_grid": {"type": "array", "items": NUM},
                "n_samples": INT,
                "hits": {"type": "array", "items": INT},
                "p_hat": {"type": "array", "items": NUM},
                "wilson_95": {"type": "array", "items": {"type": "array", "items": NUM, "minItems": 2, "maxItems": 2}},
                "stop_times": {"type": "array", "items": NUM},
                "running_min": {"type": "array", "items": NUM},
            },
            ("delta_grid", "n_samples", "hits", "p_hat", "wilson_95"),
        ),
        "fit": {
            "anyOf": [
                _obj({"slope": NUM, "stderr": NUM, "consistent": {"type": "boolean"}, "z": NUM, "n_points": INT}),
                _obj({"error": {"type": "string"}}, ("error",)),
            ]
        },
        "runtime": RUNTIME,
    },
    ("command", "stats", "fit", "runtime"),
)

REPORT_SCHEMAS = {
    "simulate": SIMULATE_REPORT_SCHEMA,
    "collapse": COLLAPSE_REPORT_SCHEMA,
    "ensemble": ENSEMBLE_REPORT_SCHEMA,
}
