"""Protocol runners, device models and seed accounting."""

from __future__ import annotations

from .amplification import (
    brandao_threshold,
    gallego_bias_bound,
    gallego_block_count,
    ghz_wins,
    majority,
    mermin5_valid,
    rounds_needed,
    run_bouda_block_amplification,
    run_brandao_amplification,
    run_gallego_amplification,
    run_single_device_protocol,
    single_device_inputs,
)
from .config import ProtocolConfig
from .devices import (
    VV_LABELS,
    BehaviorDevice,
    DeterministicDevice,
    DeviceError,
    HonestQuantumDevice,
    MemoryProgramDevice,
    as_device,
    vv_strategy,
)
from .expansion import (
    SCHEDULES,
    quadratic_input_frequencies,
    run_concatenated_expansion,
    run_quadratic_expansion,
    run_vv_exponential,
    run_vv_quantum_secure,
)
from .seeds import FiniteBits, SeedExhausted, SeedSource, SourceBits, UniformBits
from .trees import (
    R_HONEST,
    SingleDeviceBounds,
    repeat_attack_device,
    repeat_attack_leaf_count,
    repeat_attack_source,
    single_device_bounds,
    tree_max_leaves,
    tree_max_repeat_leaves,
    tree_rate,
)
from .verdict import Verdict

__all__ = [
    "BehaviorDevice",
    "DeterministicDevice",
    "DeviceError",
    "FiniteBits",
    "HonestQuantumDevice",
    "MemoryProgramDevice",
    "ProtocolConfig",
    "R_HONEST",
    "SCHEDULES",
    "SeedExhausted",
    "SeedSource",
    "SingleDeviceBounds",
    "SourceBits",
    "UniformBits",
    "VV_LABELS",
    "Verdict",
    "as_device",
    "brandao_threshold",
    "gallego_bias_bound",
    "gallego_block_count",
    "ghz_wins",
    "majority",
    "mermin5_valid",
    "quadratic_input_frequencies",
    "repeat_attack_device",
    "repeat_attack_leaf_count",
    "repeat_attack_source",
    "rounds_needed",
    "run_bouda_block_amplification",
    "run_brandao_amplification",
    "run_concatenated_expansion",
    "run_gallego_amplification",
    "run_quadratic_expansion",
    "run_single_device_protocol",
    "run_vv_exponential",
    "run_vv_quantum_secure",
    "single_device_bounds",
    "single_device_inputs",
    "tree_max_leaves",
    "tree_max_repeat_leaves",
    "tree_rate",
    "vv_strategy",
]
