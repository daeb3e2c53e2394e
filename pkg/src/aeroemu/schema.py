"""Fixed registry of the 34 input and 28 output variables.

The registry is the single source of column naming and ordering for every
file format and batch in the package. Mode codes: ns/ks/as/cs are the
nucleation, aitken, accumulation and coarse soluble size modes; ki/ai/ci
their insoluble counterparts.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from typing import Optional

from .errors import MissingColumnError, OrderMismatchError, UnknownColumnError


class VarKind(enum.Enum):
    ATMOSPHERIC_STATE = "atmospheric_state"
    SPECIES_MASS = "species_mass"
    MODE_CONCENTRATION = "mode_concentration"
    MODE_WATER = "mode_water"


class OutputForm(enum.Enum):
    TENDENCY = "tendency"
    ABSOLUTE = "absolute"


SPECIES = ("SO4", "BC", "OC", "DU", "SS", "H2SO4")
MODES = ("ns", "ks", "as", "cs", "ki", "ai", "ci")
SOLUBLE_MODES = ("ns", "ks", "as", "cs")


@dataclass(frozen=True)
class VariableDef:
    name: str
    unit: str
    is_input: bool
    is_output: bool
    kind: VarKind
    species: Optional[str] = None
    mode: Optional[str] = None
    output_form: Optional[OutputForm] = None

    def __post_init__(self):
        if self.species is not None and self.species not in SPECIES:
            raise ValueError(f"unknown species {self.species!r}")
        if self.mode is not None and self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}")
        if self.is_output and self.output_form is None:
            raise ValueError(f"output variable {self.name!r} needs an output_form")


def _build_registry() -> tuple[VariableDef, ...]:
    V = VariableDef
    defs = [
        V("Pressure", "Pa", True, False, VarKind.ATMOSPHERIC_STATE),
        V("Temperature", "K", True, False, VarKind.ATMOSPHERIC_STATE),
        V("Rel. Humidity", "-", True, False, VarKind.ATMOSPHERIC_STATE),
        V("Ionization rate", "-", True, False, VarKind.ATMOSPHERIC_STATE),
        V("Cloud cover", "-", True, False, VarKind.ATMOSPHERIC_STATE),
        V("Boundary layer", "-", True, False, VarKind.ATMOSPHERIC_STATE),
        V("Forest fraction", "-", True, False, VarKind.ATMOSPHERIC_STATE),
        V("H2SO4 prod. rate", "cm⁻³ s⁻¹", True, False, VarKind.ATMOSPHERIC_STATE),
        # Sea salt only changes in a fraction of a percent of steps, so it is
        # carried as input only.
        V("SS as mass", "µg m⁻³", True, False, VarKind.SPECIES_MASS, "SS", "as"),
        V("SS cs mass", "µg m⁻³", True, False, VarKind.SPECIES_MASS, "SS", "cs"),
        V("H2SO4 mass", "µg m⁻³", True, True, VarKind.SPECIES_MASS, "H2SO4", None,
          OutputForm.TENDENCY),
    ]
    for mode in ("ns", "ks", "as", "cs"):
        defs.append(V(f"SO4 {mode} mass", "molec. m⁻³", True, True,
                      VarKind.SPECIES_MASS, "SO4", mode, OutputForm.TENDENCY))
    for species in ("BC", "OC"):
        for mode in ("ks", "as", "cs", "ki"):
            defs.append(V(f"{species} {mode} mass", "µg m⁻³", True, True,
                          VarKind.SPECIES_MASS, species, mode, OutputForm.TENDENCY))
    for mode in ("as", "cs", "ai", "ci"):
        defs.append(V(f"DU {mode} mass", "µg m⁻³", True, True,
                      VarKind.SPECIES_MASS, "DU", mode, OutputForm.TENDENCY))
    for mode in MODES:
        defs.append(V(f"{mode} concentration", "cm⁻³", True, True,
                      VarKind.MODE_CONCENTRATION, None, mode, OutputForm.TENDENCY))
    for mode in SOLUBLE_MODES:
        defs.append(V(f"{mode} water", "kg m⁻³", False, True,
                      VarKind.MODE_WATER, None, mode, OutputForm.ABSOLUTE))
    return tuple(defs)


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a hash."""
    h = 0xCBF29CE484222325
    for byte in data:
        h ^= byte
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def hash_names(names) -> int:
    """FNV-1a over the concatenated UTF-8 column names."""
    return fnv1a64("".join(names).encode("utf-8"))


class VariableSchema:
    """Immutable variable registry; safe to share across threads."""

    def __init__(self, variables: tuple[VariableDef, ...]):
        self.variables = tuple(variables)
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable names in schema")
        self._by_name = {v.name: v for v in self.variables}
        self.input_names = tuple(v.name for v in self.variables if v.is_input)
        self.output_names = tuple(v.name for v in self.variables if v.is_output)

    def __eq__(self, other):
        return isinstance(other, VariableSchema) and self.variables == other.variables

    def __hash__(self):
        return hash(self.variables)

    def count_inputs(self) -> int:
        return len(self.input_names)

    def count_outputs(self) -> int:
        return len(self.output_names)

    def lookup(self, name: str) -> VariableDef:
        return self._by_name[name]

    def names_for(self, role: str) -> tuple[str, ...]:
        if role == "input":
            return self.input_names
        if role == "output":
            return self.output_names
        raise ValueError(f"role must be 'input' or 'output', got {role!r}")

    @property
    def schema_hash(self) -> int:
        """Hash binding both column lists, used by TransformSpec/checkpoints."""
        return hash_names(self.input_names + self.output_names)

    def role_hash(self, role: str) -> int:
        """Hash of one role's column list, used by dataset file headers."""
        return hash_names(self.names_for(role))

    def to_json(self) -> str:
        doc = [
            {
                "name": v.name,
                "unit": v.unit,
                "input": v.is_input,
                "output": v.is_output,
                "kind": v.kind.value,
                "species": v.species,
                "mode": v.mode,
                "output_form": v.output_form.value if v.output_form else None,
            }
            for v in self.variables
        ]
        return json.dumps(doc, ensure_ascii=False, indent=2)


_BUILTIN = VariableSchema(_build_registry())


def builtin_schema() -> VariableSchema:
    """The fixed production registry: 34 inputs, 28 outputs."""
    return _BUILTIN


def validate_columns(schema: VariableSchema, header, role: str) -> None:
    """Check that `header` is exactly the schema's column list for `role`.

    Raises MissingColumnError, UnknownColumnError or OrderMismatchError
    naming the first offender; returns None when the header is valid.
    """
    expected = schema.names_for(role)
    got = list(header)
    expected_set = set(expected)
    got_set = set(got)
    for name in expected:
        if name not in got_set:
            raise MissingColumnError(name)
    for name in got:
        if name not in expected_set:
            raise UnknownColumnError(name)
    for found, want in zip(got, expected):
        if found != want:
            raise OrderMismatchError(found, want)
