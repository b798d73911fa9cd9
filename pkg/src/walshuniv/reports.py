"""Verification reports: named checks with exact values, serialized to JSON
and CSV deterministically (sorted keys, no timestamps, no floats beyond the
documented decimal renderings)."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import List, Optional


@dataclass
class Check:
    name: str
    passed: Optional[bool]      # None = informational only
    method: str                 # exact | majorant | enclosure | structural
    claimed: str = ""           # the bound, as an exact string
    computed: str = ""          # the value (or enclosure), exact string
    detail: str = ""

    def row(self):
        status = "pass" if self.passed else ("FAIL" if self.passed is False else "info")
        return f"[{status}] {self.name}: computed={self.computed}" + \
            (f" claimed<{self.claimed}" if self.claimed else "") + \
            (f" ({self.method})" if self.method else "")


@dataclass
class Report:
    title: str
    mode: str
    checks: List[Check] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def add(self, *args, **kwargs) -> Check:
        c = Check(*args, **kwargs)
        self.checks.append(c)
        return c

    @property
    def passed(self) -> bool:
        return all(c.passed is not False for c in self.checks)

    def to_dict(self) -> dict:
        return {"title": self.title, "mode": self.mode,
                "passed": self.passed, "meta": self.meta,
                "checks": [asdict(c) for c in self.checks]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def summary(self) -> str:
        lines = [f"== {self.title} (mode={self.mode}) =="]
        lines.extend(c.row() for c in self.checks)
        lines.append(f"=> {'PASS' if self.passed else 'FAIL'}")
        return "\n".join(lines)


def write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def csv_text(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(header)
    w.writerows(rows)
    return buf.getvalue()
