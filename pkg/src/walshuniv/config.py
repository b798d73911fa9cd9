"""Run configuration: budgets, seed, output directory.

All randomness (sampled subsets, sampled identity points) flows from the
single seed; reports are bit-identical across runs with the same config.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field


@dataclass
class RunConfig:
    j_max: int = 22                    # dense-grid bit budget
    index_bit_cap: int = 20000         # max cut level a schedule may use
    enum_level_budget: int = 2         # enumeration: max dyadic level
    enum_count_budget: int = 4096      # enumeration: max index scanned
    atom_piece_budget: int = 1 << 18   # max cells when materializing atoms
    toy_count_cap: int = 1 << 14       # max intervals per toy round
    dense_check_max_level: int = 14    # dense cross-checks below this level
    seed: int = 0
    outdir: str = "out"

    def resolved_outdir(self) -> str:
        return os.environ.get("WALSHUNIV_OUTDIR", self.outdir)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        with open(path) as fh:
            data = json.load(fh)
        return cls(**data)

    def save(self, path: str) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_json())
