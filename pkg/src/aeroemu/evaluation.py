"""Per-variable metrics, mass diagnostics and scatter-plot export.

R² and NRMSE are reported in standardized space (R² is invariant under the
affine standardization, so it equals the transformed-space score; the
standardized RMSE equals RMSE / train std, i.e. the NRMSE). Tendency and
full-value R² are computed after back-transforming to original units.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .datasets import STANDARDIZED, SampleBatch
from .errors import SchemaHashMismatchError
from .network import NetworkParams, forward
from .schema import VariableSchema, VarKind
from .transforms import (
    TransformSpec,
    add_tendencies,
    apply_pipeline,
    compute_tendencies,
    invert_pipeline,
)

UNDEFINED_R2 = float("-inf")

# Species whose output mass columns feed the mass-bias diagnostic.
MASS_SPECIES = ("H2SO4", "SO4", "BC", "OC", "DU")


def r_squared(pred, truth) -> float:
    """1 - SS_res / SS_tot; -inf sentinel when truth is constant and missed."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ValueError("pred and truth must have equal length")
    if pred.size < 2:
        raise ValueError("need at least 2 points")
    ss_res = float(np.sum(np.square(truth - pred)))
    ss_tot = float(np.sum(np.square(truth - truth.mean())))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else UNDEFINED_R2
    return 1.0 - ss_res / ss_tot


def nrmse(pred, truth, std_truth: float) -> float:
    """RMSE normalized by the training-split std of the truth variable."""
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ValueError("pred and truth must have equal length")
    if pred.size < 2:
        raise ValueError("need at least 2 points")
    return float(np.sqrt(np.mean(np.square(pred - truth)))) / std_truth


@dataclass
class VariableScore:
    name: str
    r2_transformed: float
    nrmse: float
    r2_raw_tendency: float
    r2_full_value: float


@dataclass
class MassBiasStats:
    species: str
    mean: float
    median: float
    fraction_positive: float


@dataclass
class EvalReport:
    per_variable: list
    mean_r2_transformed: float
    mean_nrmse: float
    mass_bias: list

    def to_json(self) -> str:
        def num(v):
            return None if not math.isfinite(v) else v

        doc = {
            "aggregate": {
                "mean_r2_transformed": num(self.mean_r2_transformed),
                "mean_nrmse": num(self.mean_nrmse),
            },
            "per_variable": [
                {
                    "name": s.name,
                    "r2_transformed": num(s.r2_transformed),
                    "nrmse": num(s.nrmse),
                    "r2_raw_tendency": num(s.r2_raw_tendency),
                    "r2_full_value": num(s.r2_full_value),
                }
                for s in self.per_variable
            ],
            "mass_bias": [
                {
                    "species": m.species,
                    "mean": m.mean,
                    "median": m.median,
                    "fraction_positive": m.fraction_positive,
                }
                for m in self.mass_bias
            ],
        }
        return json.dumps(doc, indent=2)

    def format_table(self) -> str:
        def fmt(v):
            return "undef" if not math.isfinite(v) else f"{v:8.4f}"

        lines = [
            f"{'Variable':<20} {'R²':>8} {'NRMSE':>8} {'R² tend':>8} {'R² full':>8}",
            "-" * 56,
        ]
        for s in self.per_variable:
            lines.append(
                f"{s.name:<20} {fmt(s.r2_transformed):>8} {fmt(s.nrmse):>8}"
                f" {fmt(s.r2_raw_tendency):>8} {fmt(s.r2_full_value):>8}"
            )
        lines.append("-" * 56)
        lines.append(
            f"{'mean':<20} {fmt(self.mean_r2_transformed):>8} {fmt(self.mean_nrmse):>8}"
        )
        lines.append("")
        lines.append(f"{'Species':<8} {'mean bias':>12} {'median':>12} {'frac > 0':>9}")
        for m in self.mass_bias:
            lines.append(
                f"{m.species:<8} {m.mean:>12.4e} {m.median:>12.4e}"
                f" {m.fraction_positive:>9.3f}"
            )
        return "\n".join(lines)


def mass_fix(full_values: SampleBatch):
    """Clamp negative masses/concentrations/water to zero.

    Returns (fixed batch, per-variable clamp counts). Idempotent; never
    touches nonnegative entries.
    """
    fixed = full_values.data.copy()
    counts = {}
    for j, name in enumerate(full_values.names):
        neg = fixed[:, j] < 0
        counts[name] = int(neg.sum())
        fixed[neg, j] = 0.0
    return SampleBatch(full_values.names, fixed, full_values.space), counts


def mass_bias(pred_tend: SampleBatch, truth_tend: SampleBatch,
              schema: VariableSchema):
    """Per-species stats of predicted-minus-true summed mass tendency.

    Rows with a delta of exactly zero count as half positive, so a perfect
    prediction reports fraction_positive 0.5.
    """
    stats = []
    for species in MASS_SPECIES:
        cols = [
            j for j, name in enumerate(schema.output_names)
            if schema.lookup(name).kind is VarKind.SPECIES_MASS
            and schema.lookup(name).species == species
        ]
        delta = pred_tend.data[:, cols].sum(axis=1) - truth_tend.data[:, cols].sum(axis=1)
        frac_pos = (np.count_nonzero(delta > 0) + 0.5 * np.count_nonzero(delta == 0))
        stats.append(MassBiasStats(
            species,
            float(delta.mean()),
            float(np.median(delta)),
            float(frac_pos / delta.size),
        ))
    return stats


def evaluate_predictions(pred_std: SampleBatch, inputs: SampleBatch,
                         truth_after: SampleBatch, spec: TransformSpec,
                         schema: VariableSchema) -> EvalReport:
    """Score standardized predictions against raw truth, all three spaces."""
    truth_tend = compute_tendencies(inputs, truth_after, schema)
    truth_std = apply_pipeline(truth_tend, spec, schema, "output")
    pred_tend = invert_pipeline(pred_std, spec, schema, "output")
    pred_full = add_tendencies(inputs, pred_tend, schema)
    truth_full = add_tendencies(inputs, truth_tend, schema)

    scores = []
    for j, name in enumerate(schema.output_names):
        scores.append(VariableScore(
            name,
            r_squared(pred_std.data[:, j], truth_std.data[:, j]),
            nrmse(pred_std.data[:, j], truth_std.data[:, j], 1.0),
            r_squared(pred_tend.data[:, j], truth_tend.data[:, j]),
            r_squared(pred_full.data[:, j], truth_full.data[:, j]),
        ))
    defined = [s.r2_transformed for s in scores if math.isfinite(s.r2_transformed)]
    mean_r2 = float(np.mean(defined)) if defined else UNDEFINED_R2
    mean_nrmse = float(np.mean([s.nrmse for s in scores]))
    return EvalReport(scores, mean_r2, mean_nrmse,
                      mass_bias(pred_tend, truth_tend, schema))


def evaluate(net: NetworkParams, spec: TransformSpec, inputs: SampleBatch,
             truth_after: SampleBatch, schema: VariableSchema) -> EvalReport:
    """Run the emulator on raw inputs and score it against the raw truth."""
    if spec.schema_hash != schema.schema_hash:
        raise SchemaHashMismatchError("transform spec does not match schema")
    if inputs.n_rows != truth_after.n_rows:
        raise ValueError("row count mismatch between inputs and truth")
    x_std = apply_pipeline(inputs, spec, schema, "input")
    pred = forward(net, x_std.data).astype(np.float64)
    pred_std = SampleBatch(schema.output_names, pred, STANDARDIZED)
    return evaluate_predictions(pred_std, inputs, truth_after, spec, schema)


def export_scatter(pred, truth, variable: str, path, svg_path=None,
                   max_points: int = 50_000, seed: int = 0) -> None:
    """Write (truth, pred) pairs as CSV, optionally with an SVG scatter.

    Vectors are transformed-space values. Batches larger than `max_points`
    are subsampled deterministically from `seed`.
    """
    pred = np.asarray(pred, dtype=np.float64)
    truth = np.asarray(truth, dtype=np.float64)
    if pred.shape != truth.shape:
        raise ValueError("pred and truth must have equal length")
    if pred.size > max_points:
        idx = np.sort(np.random.default_rng(seed).choice(
            pred.size, max_points, replace=False))
        pred, truth = pred[idx], truth[idx]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("truth,pred\n")
        for t, p in zip(truth, pred):
            fh.write(f"{t!r},{p!r}\n")
    if svg_path is not None:
        _write_scatter_svg(truth, pred, variable, svg_path)


def _write_scatter_svg(truth, pred, variable, path, size=480, margin=40):
    lo = float(min(truth.min(), pred.min()))
    hi = float(max(truth.max(), pred.max()))
    if hi == lo:
        hi = lo + 1.0
    span = hi - lo
    inner = size - 2 * margin

    def sx(v):
        return margin + (v - lo) / span * inner

    def sy(v):
        return size - margin - (v - lo) / span * inner

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">',
        f'<rect width="{size}" height="{size}" fill="white"/>',
        f'<line x1="{sx(lo):.1f}" y1="{sy(lo):.1f}" x2="{sx(hi):.1f}" y2="{sy(hi):.1f}"'
        ' stroke="red" stroke-width="1"/>',
        f'<text x="{size/2:.0f}" y="20" text-anchor="middle" font-size="14">'
        f'{variable}</text>',
    ]
    for t, p in zip(truth, pred):
        parts.append(
            f'<circle cx="{sx(t):.1f}" cy="{sy(p):.1f}" r="1.5"'
            ' fill="steelblue" fill-opacity="0.5"/>'
        )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts))
