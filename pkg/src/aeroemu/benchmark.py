"""Runtime comparison between the reference step and the emulator path.

The emulator side is timed end to end (transform, forward pass, back
transform) for fairness. Timings use the monotonic wall clock and the
reported numbers are medians over repetitions; raw per-repetition timings
are kept so variance stays inspectable.

The reference here is the package's synthetic surrogate, not the Fortran
aerosol model the published runtime table measured against, so absolute
speed-ups are not comparable to published figures. The emitted table says
so explicitly.
"""

from __future__ import annotations

import json
import statistics
import time
from dataclasses import dataclass, field

from .datasets import SampleBatch
from .network import NetworkParams, forward
from .schema import VariableSchema
from .surrogate import SurrogateConfig, generate_inputs, reference_step
from .transforms import TransformSpec, apply_pipeline, invert_pipeline

DISCLAIMER = (
    "reference is the built-in synthetic surrogate, not the original "
    "Fortran microphysics model; speed-ups are not comparable to published "
    "numbers"
)


@dataclass
class BenchConfig:
    n_samples: int = 20_000
    repetitions: int = 5
    warmup: int = 2
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.repetitions < 3:
            raise ValueError("repetitions must be >= 3")


@dataclass
class BenchResult:
    reference_seconds: float
    emulator_seconds: float
    speedup: float
    n_samples: int
    repetitions: int
    reference_timings: list = field(default_factory=list)
    emulator_timings: list = field(default_factory=list)

    def format_table(self) -> str:
        lines = [
            f"# {DISCLAIMER}",
            f"{'model':<16} {'time (s)':>12} {'speed-up':>10}",
            f"{'reference':<16} {self.reference_seconds:>12.4f} {'-':>10}",
            f"{'emulator':<16} {self.emulator_seconds:>12.4f} {self.speedup:>10.2f}",
        ]
        return "\n".join(lines)

    def to_json(self) -> str:
        return json.dumps({
            "disclaimer": DISCLAIMER,
            "n_samples": self.n_samples,
            "repetitions": self.repetitions,
            "reference_seconds": self.reference_seconds,
            "emulator_seconds": self.emulator_seconds,
            "speedup": self.speedup,
            "reference_timings": self.reference_timings,
            "emulator_timings": self.emulator_timings,
        }, indent=2)


def time_callable(fn, repetitions: int, warmup: int) -> list:
    """Monotonic wall-clock timings of fn(), warmup runs excluded."""
    for _ in range(warmup):
        fn()
    timings = []
    for _ in range(repetitions):
        start = time.perf_counter()
        fn()
        timings.append(time.perf_counter() - start)
    return timings


def bench_callables(reference_fn, emulator_fn, n_samples: int,
                    repetitions: int, warmup: int) -> BenchResult:
    ref = time_callable(reference_fn, repetitions, warmup)
    emu = time_callable(emulator_fn, repetitions, warmup)
    ref_med = statistics.median(ref)
    emu_med = statistics.median(emu)
    return BenchResult(ref_med, emu_med, ref_med / emu_med, n_samples,
                       repetitions, ref, emu)


def run_bench(net: NetworkParams, spec: TransformSpec, schema: VariableSchema,
              config: BenchConfig,
              surrogate_config: SurrogateConfig | None = None) -> BenchResult:
    """Time the surrogate step against the full emulator path on one batch."""
    surrogate_config = surrogate_config or SurrogateConfig(
        seed=config.seed, n_samples=config.n_samples)
    inputs = generate_inputs(surrogate_config, schema)

    def reference_fn():
        reference_step(inputs, surrogate_config, schema)

    def emulator_fn():
        x = apply_pipeline(inputs, spec, schema, "input")
        pred = forward(net, x.data)
        std = SampleBatch(schema.output_names, pred, "standardized")
        invert_pipeline(std, spec, schema, "output")

    return bench_callables(reference_fn, emulator_fn, config.n_samples,
                           config.repetitions, config.warmup)
