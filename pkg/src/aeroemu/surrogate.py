"""Deterministic toy surrogate of one aerosol microphysics step.

Not a physical model: it is a cheap, closed-form ground truth that mimics
the pathologies of the real data (heavy-tailed tendencies, exact zeros,
both signs) while staying smooth enough to be learnable. One step covers
450 s.

Process forms, applied per row in this order:

  condensation  moves a humidity/temperature-dependent fraction of the
                H2SO4 mass onto the soluble SO4 modes, split by their
                number concentrations; inactive when "Forest fraction"
                is below the zero-inflation gate.
  nucleation    moves part of the remaining H2SO4 into the SO4 ns mode and
                creates ns number; active only above relative humidity 0.45
                (exact zeros below the threshold).
  coagulation   quadratic self-decay of all mode numbers plus mass transfer
                along per-species small-to-large mode chains; inactive when
                "Cloud cover" is below the gate.
  water uptake  sets the 4 water columns algebraically from the post-step
                soluble masses and humidity.

All gates are functions of input columns, so the mapping stays a
deterministic function of the inputs. Per-species summed mass is conserved
by construction; H2SO4 and SO4 are conserved jointly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import RAW, SampleBatch
from .errors import EmptyDatasetError, InvalidInputError, SpaceTagError
from .schema import VariableSchema, builtin_schema

STEP_SECONDS = 450.0
NUCLEATION_RH_THRESHOLD = 0.45
NUCLEATION_NUMBER_PER_MASS = 10.0

# Mass transfer chains for coagulation, small mode -> large mode.
_COAG_CHAINS = {
    "SO4": ("ns", "ks", "as", "cs"),
    "BC": ("ki", "ks", "as", "cs"),
    "OC": ("ki", "ks", "as", "cs"),
    "DU-soluble": ("as", "cs"),
    "DU-insoluble": ("ai", "ci"),
}

# Hygroscopicity-like weights for the water uptake sum.
_WATER_WEIGHTS = {"SO4": 1.0, "BC": 0.5, "OC": 0.3, "DU": 0.1, "SS": 0.8}


@dataclass
class SurrogateConfig:
    seed: int = 0
    n_samples: int = 10_000
    nucleation: float = 1.0
    coagulation: float = 1.0
    condensation: float = 1.0
    water_uptake: float = 1.0
    zero_inflation: float = 0.3

    def __post_init__(self):
        if not 0.0 <= self.zero_inflation <= 1.0:
            raise ValueError("zero_inflation must lie in [0, 1]")
        for name in ("nucleation", "coagulation", "condensation", "water_uptake"):
            v = getattr(self, name)
            if not np.isfinite(v) or v < 0:
                raise ValueError(f"process strength {name} must be finite and >= 0")


def generate_inputs(config: SurrogateConfig,
                    schema: VariableSchema | None = None) -> SampleBatch:
    """Draw a reproducible raw input batch (34 columns)."""
    if config.n_samples < 1:
        raise EmptyDatasetError("n_samples must be >= 1")
    schema = schema or builtin_schema()
    rng = np.random.default_rng(config.seed)
    n = config.n_samples
    cols = {}
    cols["Pressure"] = 10.0 ** rng.uniform(1.0, np.log10(105_000.0), n)
    cols["Temperature"] = rng.uniform(180.0, 310.0, n)
    cols["Rel. Humidity"] = rng.uniform(0.0, 1.0, n)
    cols["Ionization rate"] = rng.uniform(0.0, 1.0, n)
    cols["Cloud cover"] = rng.uniform(0.0, 1.0, n)
    cols["Boundary layer"] = rng.uniform(0.0, 1.0, n)
    cols["Forest fraction"] = rng.uniform(0.0, 1.0, n)
    cols["H2SO4 prod. rate"] = _zero_inflated_loguniform(rng, n, config.zero_inflation)
    for name in schema.input_names[8:]:
        # Masses and number concentrations: 7 orders of magnitude plus a
        # point mass at exactly zero.
        cols[name] = _zero_inflated_loguniform(rng, n, config.zero_inflation)
    data = np.column_stack([cols[name] for name in schema.input_names])
    return SampleBatch(schema.input_names, data, RAW)


def _zero_inflated_loguniform(rng, n, p_zero, lo=-4.0, hi=3.0):
    values = 10.0 ** rng.uniform(lo, hi, n)
    values[rng.uniform(0.0, 1.0, n) < p_zero] = 0.0
    return values


def reference_step(inputs: SampleBatch, config: SurrogateConfig,
                   schema: VariableSchema | None = None) -> SampleBatch:
    """Compute the after-step values for the 28 output columns."""
    schema = schema or builtin_schema()
    if inputs.space != RAW:
        raise SpaceTagError("reference_step expects a raw input batch")
    c = {name: inputs.column(name).copy() for name in schema.input_names}
    for name in schema.input_names[8:]:
        if np.any(c[name] < 0):
            raise InvalidInputError(f"negative values in column {name!r}")

    rh = c["Rel. Humidity"]
    temp = c["Temperature"]
    cond_active = c["Forest fraction"] >= config.zero_inflation
    coag_active = c["Cloud cover"] >= config.zero_inflation

    h2so4 = c["H2SO4 mass"].copy()
    masses = {
        name: c[name].copy()
        for name in schema.input_names
        if name.endswith("mass") and name != "H2SO4 mass"
    }
    conc = {m: c[f"{m} concentration"].copy()
            for m in ("ns", "ks", "as", "cs", "ki", "ai", "ci")}

    # Condensation: H2SO4 -> soluble SO4 modes, split by number weights.
    sol = np.stack([conc[m] for m in ("ns", "ks", "as", "cs")])
    sol_total = sol.sum(axis=0)
    rate = config.condensation * (0.2 + 0.8 * rh) * (temp / 300.0)
    frac = -np.expm1(-rate)
    frac = np.where(cond_active & (sol_total > 0), frac, 0.0)
    cond_mass = frac * h2so4
    h2so4 -= cond_mass
    with np.errstate(invalid="ignore", divide="ignore"):
        weights = np.where(sol_total > 0, sol / np.where(sol_total > 0, sol_total, 1.0), 0.0)
    for i, m in enumerate(("ns", "ks", "as", "cs")):
        masses[f"SO4 {m} mass"] += cond_mass * weights[i]

    # Nucleation: remaining H2SO4 -> fresh ns particles above the RH threshold.
    nuc_active = rh >= NUCLEATION_RH_THRESHOLD
    nuc_rate = config.nucleation * (rh - NUCLEATION_RH_THRESHOLD) * (0.3 + c["Ionization rate"])
    nuc_frac = np.where(nuc_active, -np.expm1(-nuc_rate), 0.0)
    nuc_mass = nuc_frac * h2so4
    h2so4 -= nuc_mass
    masses["SO4 ns mass"] += nuc_mass
    conc["ns"] = conc["ns"] + NUCLEATION_NUMBER_PER_MASS * nuc_mass

    # Coagulation: quadratic number self-decay ...
    pre_conc = {m: v.copy() for m, v in conc.items()}
    for m in conc:
        decay = np.where(coag_active, 1e-3 * config.coagulation * pre_conc[m], 0.0)
        conc[m] = conc[m] / (1.0 + decay)
    # ... and mass transfer along the small-to-large chains, driven by the
    # acceptor mode's pre-step number.
    for key, chain in _COAG_CHAINS.items():
        species = key.split("-")[0]
        for donor, acceptor in zip(chain[:-1], chain[1:]):
            q = -np.expm1(-2e-3 * config.coagulation * pre_conc[acceptor])
            q = np.where(coag_active, q, 0.0)
            moved = q * masses[f"{species} {donor} mass"]
            masses[f"{species} {donor} mass"] -= moved
            masses[f"{species} {acceptor} mass"] += moved

    # Water uptake: algebraic in post-step soluble masses and humidity.
    water = {}
    for m in ("ns", "ks", "as", "cs"):
        total = np.zeros_like(rh)
        for species, weight in _WATER_WEIGHTS.items():
            name = f"{species} {m} mass"
            if name in masses:
                total = total + weight * masses[name]
        water[m] = config.water_uptake * 1e-3 * rh * rh * total

    out_cols = []
    for name in schema.output_names:
        if name == "H2SO4 mass":
            out_cols.append(h2so4)
        elif name.endswith("mass"):
            out_cols.append(masses[name])
        elif name.endswith("concentration"):
            out_cols.append(conc[name.split()[0]])
        else:
            out_cols.append(water[name.split()[0]])
    return SampleBatch(schema.output_names, np.column_stack(out_cols), RAW)
