"""JSON Schemas (draft 2020-12) for the documents each CLI subcommand prints.

Plain dictionaries so the package itself needs no validator; the test suite
checks every subcommand against them with ``jsonschema``.
"""

NUM = {"type": "number"}
NUM_OR_NULL = {"type": ["number", "null"]}
STAT = {
    "type": "object",
    "required": ["value", "se"],
    "properties": {"value": NUM_OR_NULL, "se": NUM_OR_NULL},
}

_FIT = {
    "type": "object",
    "required": ["mu", "sigma", "cost", "method", "warnings", "iterations"],
    "properties": {
        "mu": NUM,
        "sigma": NUM,
        "cost": NUM_OR_NULL,
        "method": {"type": "string"},
        "warnings": {"type": "array", "items": {"type": "string"}},
        "iterations": {"type": "integer"},
    },
}

ESTIMATE = {
    "type": "object",
    "required": ["family", "n", "estimates", "warning"],
    "properties": {
        "family": {"type": "string"},
        "n": {"type": "integer", "minimum": 1},
        "estimates": {
            "type": "object",
            "minProperties": 1,
            "properties": {"w": _FIT, "mle": _FIT},
            "additionalProperties": False,
        },
        "warning": {"type": "boolean"},
    },
}

COST = {
    "type": "object",
    "required": ["family", "n", "mu", "sigma"],
    "anyOf": [{"required": ["cost"]}, {"required": ["cost_interval"]}],
    "properties": {
        "family": {"type": "string"},
        "n": {"type": "integer"},
        "mu": NUM,
        "sigma": NUM,
        "cost": NUM,
        "cost_interval": NUM,
    },
}

DISTANCE = {
    "type": "object",
    "required": ["mode", "w2_squared"],
    "properties": {
        "mode": {"enum": ["models", "samples"]},
        "w2_squared": NUM,
        "n": {"type": "integer"},
        "family1": {"type": "string"},
        "family2": {"type": "string"},
        "closed_form": NUM_OR_NULL,
    },
}

_MATRIX2 = {"type": "array", "minItems": 2, "maxItems": 2,
            "items": {"type": "array", "minItems": 2, "maxItems": 2, "items": NUM}}

METRIC = {
    "type": "object",
    "required": ["family", "points", "max_deviation", "max_ratio_deviation"],
    "properties": {
        "family": {"type": "string"},
        "points": {
            "type": "array",
            "minItems": 1,
            "items": {
                "type": "object",
                "required": ["mu", "sigma", "g", "deviation", "quadrature_error_estimate", "ratios"],
                "properties": {
                    "mu": NUM,
                    "sigma": {"type": "number", "exclusiveMinimum": 0},
                    "g": _MATRIX2,
                    "deviation": NUM,
                    "quadrature_error_estimate": NUM,
                    "ratios": {
                        "type": "array",
                        "items": {
                            "type": "object",
                            "required": ["step", "direction", "ratio"],
                            "properties": {"step": NUM, "ratio": NUM,
                                           "direction": {"type": "array", "items": NUM}},
                        },
                    },
                },
            },
        },
        "max_deviation": NUM,
        "max_ratio_deviation": {"type": "object", "additionalProperties": NUM},
    },
}

_SUMMARY_KEYS = [
    f"{p}_{s}" for p in ("mu", "sigma")
    for s in ("mean", "bias", "variance", "n_variance", "n_variance_scaled")
] + ["n_covariance", "n_covariance_scaled"]

_SUMMARY = {
    "type": "object",
    "required": ["trials_used", *_SUMMARY_KEYS],
    "properties": {
        "trials_used": {"type": "integer"},
        **{k: STAT for k in _SUMMARY_KEYS},
        "sigma_discrepancy_z": {"type": "object", "required": ["value"],
                                "properties": {"value": NUM_OR_NULL}},
    },
}

SIMULATE = {
    "type": "object",
    "required": ["config", "backend", "estimators", "theoretical", "failures"],
    "properties": {
        "config": {
            "type": "object",
            "required": ["family", "true_mu", "true_sigma", "n", "trials", "master_seed", "estimators"],
        },
        "backend": {"enum": ["numba", "numpy"]},
        "estimators": {"type": "object", "additionalProperties": _SUMMARY},
        "theoretical": {
            "type": "object",
            "required": ["mu_n_variance_scaled", "sigma_n_variance_scaled",
                         "sigma_n_variance_scaled_influence", "fourth_moment"],
            "additionalProperties": NUM_OR_NULL,
        },
        "failures": {"type": "object", "additionalProperties": {"type": "integer", "minimum": 0}},
    },
}

_SERIES = {"type": "array", "items": NUM_OR_NULL}

SWEEP = {
    "type": "object",
    "required": ["config", "n_values", "estimators", "checks"],
    "properties": {
        "config": {"type": "object"},
        "n_values": {"type": "array", "items": {"type": "integer"}, "minItems": 2},
        "estimators": {
            "type": "object",
            "additionalProperties": {
                "type": "object",
                "required": ["mu_variance", "sigma_variance", "sigma_bias", "sigma_bias_se",
                             "mu_slope", "sigma_slope"],
                "properties": {
                    "mu_variance": _SERIES,
                    "sigma_variance": _SERIES,
                    "sigma_bias": _SERIES,
                    "sigma_bias_se": _SERIES,
                    "mu_slope": NUM_OR_NULL,
                    "sigma_slope": NUM_OR_NULL,
                },
            },
        },
        "checks": {"type": "object", "additionalProperties": {"type": "boolean"}},
    },
}

SCHEMAS = {
    "estimate": ESTIMATE,
    "cost": COST,
    "distance": DISTANCE,
    "metric": METRIC,
    "simulate": SIMULATE,
    "sweep": SWEEP,
}
