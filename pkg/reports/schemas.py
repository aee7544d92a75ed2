"""
Report Schemas - Pydantic models for every report, vector and run configuration
Each report serializes to the JSON documents written by the command line
"""

from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, computed_field, field_validator

from prefix.core import OperatorCounts, parse_topology


TOOL_NAME = "prefix-adder-kit"
TOOL_VERSION = "1.0.0"


class VerifyMode(str, Enum):
    EXHAUSTIVE = "exhaustive"
    RANDOM = "random"
    SUITE = "suite"


class OutputFormat(str, Enum):
    JSON = "json"
    TEXT = "text"


class TestVector(BaseModel):
    __test__ = False  # not a pytest class

    test: int = 0
    a: int = Field(ge=0)
    b: int = Field(ge=0)
    cin: bool = False
    expected_sum: int = Field(ge=0)
    expected_cout: bool = False
    time_label_ns: int = Field(default=0, ge=0)
    description: str = ""


class Mismatch(BaseModel):
    a: int
    b: int
    cin: bool
    got_sum: int
    got_cout: bool
    expected_sum: int
    expected_cout: bool


class VerificationReport(BaseModel):
    topology: str
    width: int
    mode: VerifyMode
    vectors_run: int = 0
    seed: Optional[int] = None  # absent for exhaustive runs
    mismatch_count: int = 0
    mismatches: List[Mismatch] = []

    @computed_field
    @property
    def passed(self) -> bool:
        return self.mismatch_count == 0


class TestbenchRow(BaseModel):
    __test__ = False

    vector: TestVector
    sum: int
    cout: bool
    passed: bool


class CostReport(BaseModel):
    topology: str
    width: int
    depth_levels: int
    operator_counts: OperatorCounts
    gate_counts: Dict[str, int]
    max_fanout: int
    weighted_delay: float
    area: float


class ComparisonTable(BaseModel):
    width: int
    delay_model: Dict[str, float] = {}
    area_weights: Dict[str, float] = {}
    rows: List[CostReport] = []

    def to_text(self) -> str:
        """Aligned plain-text table, one row per topology in ranking order"""
        headers = ["Sr. No.", "Adder Type", "Delay", "Bit Width", "Depth", "Operators", "Max Fanout", "Area"]
        body = [
            [
                str(index),
                row.topology,
                f"{row.weighted_delay:.2f}",
                str(row.width),
                str(row.depth_levels),
                str(row.operator_counts.operators),
                str(row.max_fanout),
                f"{row.area:.2f}",
            ]
            for index, row in enumerate(self.rows, start=1)
        ]
        widths = [max(len(cell) for cell in column) for column in zip(headers, *body)]

        def line(cells: List[str]) -> str:
            # Adder Type is left-aligned, numbers right-aligned
            parts = [cell.ljust(w) if i == 1 else cell.rjust(w) for i, (cell, w) in enumerate(zip(cells, widths))]
            return "  ".join(parts).rstrip()

        rule = "  ".join("-" * w for w in widths)
        return "\n".join([line(headers), rule] + [line(cells) for cells in body]) + "\n"


class PathStep(BaseModel):
    gate: str
    kind: str
    output: str
    delay: float
    arrival: float


class PathReport(BaseModel):
    start: str  # input port net
    end: str    # output port net
    steps: List[PathStep] = []
    delay: float = 0.0

    @property
    def gates(self) -> List[str]:
        return [step.gate for step in self.steps]


class ToggleReport(BaseModel):
    vectors: int
    per_gate: Dict[str, int] = {}
    per_stage: Dict[str, int] = {}
    total: int = 0


class SimSummary(BaseModel):
    topology: str
    width: int
    source: str  # paper-testbench, random or a suite name
    vectors_run: int
    mismatch_count: int = 0
    mismatches: List[Mismatch] = []
    seed: Optional[int] = None
    vcd: Optional[str] = None
    toggles: Optional[ToggleReport] = None

    @computed_field
    @property
    def passed(self) -> bool:
        return self.mismatch_count == 0


class RunConfig(BaseModel):
    command: str
    topology: Optional[str] = None
    width: Optional[int] = Field(default=None, ge=1)
    seed: Optional[int] = Field(default=None, ge=0, lt=2**64)
    count: Optional[int] = Field(default=None, ge=1)
    model_overrides: Dict[str, float] = {}
    out_dir: str = "out"
    format: OutputFormat = OutputFormat.TEXT
    options: Dict[str, Any] = {}

    @field_validator("topology")
    @classmethod
    def _known_topology(cls, value: Optional[str]) -> Optional[str]:
        if value is None:
            return value
        return parse_topology(value).value

    @field_validator("model_overrides")
    @classmethod
    def _non_negative_weights(cls, value: Dict[str, float]) -> Dict[str, float]:
        for name, weight in value.items():
            if weight < 0:
                raise ValueError(f"weight {name} must be >= 0, got {weight}")
        return value


class ReportEnvelope(BaseModel):
    tool: str = TOOL_NAME
    version: str = TOOL_VERSION
    command: str
    config: Dict[str, Any]
    seed: Optional[int] = None
    report: Any
