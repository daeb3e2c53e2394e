"""Signed log-sqrt transform, per-variable standardization and tendencies.

The forward map is y = sign(x) * log(sqrt(|x|) + 1). It is continuous, odd
and strictly increasing, and spreads out the near-zero values that dominate
the tendency distributions. Standardization is a per-variable z-score fitted
in transformed space on the training split only.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .datasets import RAW, STANDARDIZED, SampleBatch
from .errors import (
    EmptyDatasetError,
    InvalidValueError,
    OverflowValueError,
    SchemaHashMismatchError,
    SpaceTagError,
)
from .schema import OutputForm, VariableSchema

# (exp(y) - 1)^2 overflows f64 just above y = 354.9; reject beyond this.
INVERSE_OVERFLOW_LIMIT = 354.8

# Columns with transformed-space std below this are treated as constant and
# get std 1 so they standardize to 0.
DEGENERATE_STD = 1e-12

TRANSFORM_SPEC_VERSION = 1


def signed_log_sqrt(x):
    """Forward transform; accepts scalars or arrays, preserves shape."""
    arr = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvalidValueError("signed_log_sqrt requires finite input")
    out = np.sign(arr) * np.log1p(np.sqrt(np.abs(arr)))
    return float(out) if np.isscalar(x) or arr.ndim == 0 else out


def inverse_signed_log_sqrt(y):
    """Exact inverse: sign(y) * (exp(|y|) - 1)^2."""
    arr = np.asarray(y, dtype=np.float64)
    if not np.all(np.isfinite(arr)):
        raise InvalidValueError("inverse_signed_log_sqrt requires finite input")
    if np.any(np.abs(arr) > INVERSE_OVERFLOW_LIMIT):
        raise OverflowValueError(
            f"|y| > {INVERSE_OVERFLOW_LIMIT} overflows the back-transform"
        )
    out = np.sign(arr) * np.square(np.expm1(np.abs(arr)))
    return float(out) if np.isscalar(y) or arr.ndim == 0 else out


@dataclass
class TransformSpec:
    """Fitted per-variable statistics, computed in transformed space.

    Serialized stats are ordered inputs first then outputs; the 24 variables
    that are both input and output appear twice because their input column
    (absolute value) and output column (tendency) have different statistics.
    """

    input_means: np.ndarray
    input_stds: np.ndarray
    output_means: np.ndarray
    output_stds: np.ndarray
    schema_hash: int

    def stats_for(self, role: str):
        if role == "input":
            return self.input_means, self.input_stds
        if role == "output":
            return self.output_means, self.output_stds
        raise ValueError(f"role must be 'input' or 'output', got {role!r}")

    def to_json(self, schema: VariableSchema) -> str:
        stats = []
        for role in ("input", "output"):
            means, stds = self.stats_for(role)
            for name, m, s in zip(schema.names_for(role), means, stds):
                stats.append({"name": name, "mean": float(m), "std": float(s)})
        doc = {
            "version": TRANSFORM_SPEC_VERSION,
            "schema_hash": f"{self.schema_hash:016x}",
            "stats": stats,
        }
        return json.dumps(doc, ensure_ascii=False)

    @classmethod
    def from_json(cls, text: str, schema: VariableSchema) -> "TransformSpec":
        doc = json.loads(text)
        if doc.get("version") != TRANSFORM_SPEC_VERSION:
            raise InvalidValueError(
                f"unsupported transform spec version {doc.get('version')}"
            )
        schema_hash = int(doc["schema_hash"], 16)
        n_in = schema.count_inputs()
        stats = doc["stats"]
        if len(stats) != n_in + schema.count_outputs():
            raise InvalidValueError("transform spec has wrong number of entries")
        means = np.array([s["mean"] for s in stats])
        stds = np.array([s["std"] for s in stats])
        names = [s["name"] for s in stats]
        if tuple(names) != schema.input_names + schema.output_names:
            raise SchemaHashMismatchError("transform spec names do not match schema")
        return cls(means[:n_in], stds[:n_in], means[n_in:], stds[n_in:], schema_hash)


def compute_tendencies(before: SampleBatch, after: SampleBatch,
                       schema: VariableSchema) -> SampleBatch:
    """Raw output targets: after - before per variable, water kept absolute."""
    if before.space != RAW or after.space != RAW:
        raise SpaceTagError("tendencies are computed in raw space")
    if before.n_rows != after.n_rows:
        raise ValueError("row count mismatch between before and after batches")
    out = after.data.copy()
    for j, name in enumerate(schema.output_names):
        if schema.lookup(name).output_form is OutputForm.TENDENCY:
            out[:, j] -= before.column(name)
    return SampleBatch(schema.output_names, out, RAW)


def add_tendencies(before: SampleBatch, targets: SampleBatch,
                   schema: VariableSchema) -> SampleBatch:
    """Reconstruct full after-step values from inputs and raw targets."""
    if before.space != RAW or targets.space != RAW:
        raise SpaceTagError("full values are reconstructed in raw space")
    out = targets.data.copy()
    for j, name in enumerate(schema.output_names):
        if schema.lookup(name).output_form is OutputForm.TENDENCY:
            out[:, j] += before.column(name)
    return SampleBatch(schema.output_names, out, RAW)


def _fit_columns(raw: np.ndarray):
    transformed = np.sign(raw) * np.log1p(np.sqrt(np.abs(raw)))
    # f64 accumulators, population (1/N) std.
    means = transformed.mean(axis=0)
    stds = transformed.std(axis=0)
    stds = np.where(stds < DEGENERATE_STD, 1.0, stds)
    return means, stds


def fit_transform_spec(inputs: SampleBatch, targets: SampleBatch,
                       schema: VariableSchema) -> TransformSpec:
    """Fit per-variable transformed-space statistics on the training split."""
    if inputs.space != RAW or targets.space != RAW:
        raise SpaceTagError("statistics are fitted on raw-space batches")
    if inputs.n_rows == 0:
        raise EmptyDatasetError("cannot fit statistics on an empty batch")
    in_means, in_stds = _fit_columns(inputs.data)
    out_means, out_stds = _fit_columns(targets.data)
    return TransformSpec(in_means, in_stds, out_means, out_stds,
                         schema.schema_hash)


def _check_spec(spec: TransformSpec, schema: VariableSchema) -> None:
    if spec.schema_hash != schema.schema_hash:
        raise SchemaHashMismatchError(
            "transform spec was fitted against a different schema"
        )


def apply_pipeline(batch: SampleBatch, spec: TransformSpec,
                   schema: VariableSchema, role: str) -> SampleBatch:
    """raw -> standardized: z = (signed_log_sqrt(x) - mean) / std."""
    _check_spec(spec, schema)
    if batch.space != RAW:
        raise SpaceTagError(f"apply_pipeline expects raw batch, got {batch.space}")
    if batch.names != schema.names_for(role):
        raise SchemaHashMismatchError("batch columns do not match the role's schema")
    means, stds = spec.stats_for(role)
    z = (np.sign(batch.data) * np.log1p(np.sqrt(np.abs(batch.data))) - means) / stds
    return SampleBatch(batch.names, z, STANDARDIZED)


def invert_pipeline(batch: SampleBatch, spec: TransformSpec,
                    schema: VariableSchema, role: str) -> SampleBatch:
    """standardized -> raw, exact inverse of apply_pipeline."""
    _check_spec(spec, schema)
    if batch.space != STANDARDIZED:
        raise SpaceTagError(
            f"invert_pipeline expects standardized batch, got {batch.space}"
        )
    means, stds = spec.stats_for(role)
    y = batch.data * stds + means
    if np.any(np.abs(y) > INVERSE_OVERFLOW_LIMIT):
        raise OverflowValueError("back-transform would overflow f64")
    x = np.sign(y) * np.square(np.expm1(np.abs(y)))
    return SampleBatch(batch.names, x, RAW)
