"""
Verification - Exhaustive, random and suite-driven checks of a network against the oracle
"""

import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterator, List, Tuple, Union

import numpy as np

from evaluation.functional import evaluate, evaluate_batch, oracle_add, oracle_add_batch
from prefix.core import PrefixNetwork
from prefix.errors import InvalidArgumentError
from reports.schemas import Mismatch, TestbenchRow, TestVector, VerificationReport, VerifyMode


logger = logging.getLogger(__name__)

SCENARIOS_DIR = Path(__file__).resolve().parent.parent / "scenarios"
PAPER_SUITE = "paper_table1"
PAPER_WIDTH = 32

EXHAUSTIVE_MAX_WIDTH = 12
CHUNK_SIZE = 1 << 18
MAX_LISTED_MISMATCHES = 100


class _MismatchLog:
    """Counts every mismatch and keeps the smallest ones by (a, b, cin)"""

    def __init__(self, limit: int = MAX_LISTED_MISMATCHES):
        self.limit = limit
        self.count = 0
        self.listed: List[Mismatch] = []

    def add_batch(self, net: PrefixNetwork, a, b, cin, strict: bool) -> None:
        """Evaluate a batch and record disagreements with the oracle"""
        got_sum, got_cout = evaluate_batch(net, a, b, cin, strict=strict)
        want_sum, want_cout = oracle_add_batch(a, b, cin, net.width)
        bad = np.flatnonzero((got_sum != want_sum) | (got_cout != want_cout))
        if bad.size == 0:
            return
        self.count += int(bad.size)
        cin = np.broadcast_to(np.asarray(cin, dtype=bool), np.shape(a))
        bad = bad[np.lexsort((cin[bad], b[bad], a[bad]))]
        for i in bad[: self.limit]:
            self.listed.append(Mismatch(
                a=int(a[i]), b=int(b[i]), cin=bool(cin[i]),
                got_sum=int(got_sum[i]), got_cout=bool(got_cout[i]),
                expected_sum=int(want_sum[i]), expected_cout=bool(want_cout[i]),
            ))
        self.listed.sort(key=lambda m: (m.a, m.b, m.cin))
        del self.listed[self.limit:]


def _word_mask(width: int) -> np.uint64:
    return np.uint64((1 << width) - 1)


def verify_exhaustive(net: PrefixNetwork, strict: bool = True) -> VerificationReport:
    """Every (a, b, cin) triple, enumerated in (a, b, cin) order"""
    width = net.width
    if width > EXHAUSTIVE_MAX_WIDTH:
        raise InvalidArgumentError(
            f"Exhaustive verification is limited to width {EXHAUSTIVE_MAX_WIDTH} "
            f"(2^{2 * width + 1} vectors requested); use verify_random instead"
        )
    total = 1 << (2 * width + 1)
    log = _MismatchLog()
    mask = _word_mask(width)
    for start in range(0, total, CHUNK_SIZE):
        index = np.arange(start, min(start + CHUNK_SIZE, total), dtype=np.uint64)
        a = index >> np.uint64(width + 1)
        b = (index >> np.uint64(1)) & mask
        cin = (index & np.uint64(1)).astype(bool)
        log.add_batch(net, a, b, cin, strict)

    logger.info(f"Exhaustive {net.topology.value}/{width}: {total} vectors, {log.count} mismatches")
    return VerificationReport(
        topology=net.topology.value, width=width, mode=VerifyMode.EXHAUSTIVE,
        vectors_run=total, seed=None, mismatch_count=log.count, mismatches=log.listed,
    )


def boundary_values(width: int) -> List[int]:
    """Zero, one, the MSB alone and all ones"""
    return sorted({0, 1, (1 << width) - 1, 1 << (width - 1)})


def random_vectors(width: int, count: int, seed: int,
                   chunk_size: int = CHUNK_SIZE) -> Iterator[Tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Seeded PCG64 stream of (a, b, cin) arrays, `chunk_size` vectors at a time"""
    if count < 1:
        raise InvalidArgumentError(f"Vector count must be >= 1, got {count}")
    if not 0 <= seed < 2**64:
        raise InvalidArgumentError(f"Seed must be an unsigned 64-bit value, got {seed}")
    if width > 64:
        raise InvalidArgumentError(f"Random vectors support widths up to 64, got {width}")
    return _pcg64_chunks(width, count, seed, chunk_size)


def _pcg64_chunks(width: int, count: int, seed: int, chunk_size: int):
    stream = np.random.PCG64(seed)
    mask = _word_mask(width)
    for start in range(0, count, chunk_size):
        size = min(chunk_size, count - start)
        a = stream.random_raw(size) & mask
        b = stream.random_raw(size) & mask
        cin = (stream.random_raw(size) & np.uint64(1)).astype(bool)
        yield a, b, cin


def verify_random(net: PrefixNetwork, count: int, seed: int, strict: bool = True) -> VerificationReport:
    """Boundary vectors followed by `count` seeded PCG64 vectors"""
    width = net.width
    stream = random_vectors(width, count, seed)
    log = _MismatchLog()

    edges = boundary_values(width)
    pairs = [(a, b, cin) for a in edges for b in edges for cin in (False, True)]
    log.add_batch(
        net,
        np.array([p[0] for p in pairs], dtype=np.uint64),
        np.array([p[1] for p in pairs], dtype=np.uint64),
        np.array([p[2] for p in pairs], dtype=bool),
        strict,
    )
    for a, b, cin in stream:
        log.add_batch(net, a, b, cin, strict)

    vectors_run = len(pairs) + count
    logger.info(f"Random {net.topology.value}/{width} seed {seed}: {vectors_run} vectors, {log.count} mismatches")
    return VerificationReport(
        topology=net.topology.value, width=width, mode=VerifyMode.RANDOM,
        vectors_run=vectors_run, seed=seed, mismatch_count=log.count, mismatches=log.listed,
    )


def _suite_path(name_or_path: Union[str, Path]) -> Path:
    path = Path(name_or_path)
    if path.suffix == ".json" or path.exists():
        return path
    return SCENARIOS_DIR / f"{name_or_path}.json"


def _read_suite(path: Path) -> Dict[str, Any]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise InvalidArgumentError(f"Cannot read vector suite {path}: {e}")


def list_vector_suites() -> List[Dict[str, Any]]:
    """Suites shipped under scenarios/"""
    suites = []
    for file_path in sorted(SCENARIOS_DIR.glob("*.json")):
        try:
            data = _read_suite(file_path)
            suites.append({
                "name": file_path.stem,
                "title": data.get("title", file_path.stem),
                "description": data.get("description", ""),
                "width": data.get("width"),
                "vectors": len(data.get("vectors", [])),
            })
        except InvalidArgumentError as e:
            logger.error(f"Error loading vector suite {file_path}: {e}")
    return suites


def load_vector_suite(name_or_path: Union[str, Path]) -> List[TestVector]:
    """Load a suite by name (scenarios/<name>.json) or by file path"""
    path = _suite_path(name_or_path)
    if not path.exists():
        available = ", ".join(s["name"] for s in list_vector_suites())
        raise InvalidArgumentError(f"Vector suite '{name_or_path}' not found. Available suites: {available}")
    data = _read_suite(path)
    vectors = [TestVector.model_validate(row) for row in data.get("vectors", [])]
    logger.debug(f"Loaded {len(vectors)} vectors from {path}")
    return vectors


def scaled_paper_vectors(width: int) -> List[TestVector]:
    """The 32-bit testbench rows mapped onto another width.

    The all-ones operand becomes 2^w-1, the MSB-only operand becomes 2^(w-1),
    other literals reduce modulo 2^w; expectations are recomputed.
    """
    if width < 1:
        raise InvalidArgumentError(f"Width must be >= 1, got {width}")

    def scale(value: int) -> int:
        if value == (1 << PAPER_WIDTH) - 1:
            return (1 << width) - 1
        if value == 1 << (PAPER_WIDTH - 1):
            return 1 << (width - 1)
        return value % (1 << width)

    scaled = []
    for vector in load_vector_suite(PAPER_SUITE):
        a, b = scale(vector.a), scale(vector.b)
        expected = oracle_add(a, b, vector.cin, width)
        scaled.append(vector.model_copy(update={
            "a": a, "b": b,
            "expected_sum": expected.sum_value, "expected_cout": expected.carry_out,
        }))
    return scaled


def _check_range(net: PrefixNetwork, vectors: List[TestVector]) -> None:
    if not vectors:
        raise InvalidArgumentError("Vector list is empty")
    for vector in vectors:
        if max(vector.a, vector.b, vector.expected_sum) >> net.width:
            raise InvalidArgumentError(f"Vector {vector.test} does not fit in {net.width} bits")


def run_testbench(net: PrefixNetwork, vectors: List[TestVector], strict: bool = True) -> List[TestbenchRow]:
    """Apply vectors in order and check each against its expected columns"""
    _check_range(net, vectors)
    rows = []
    for vector in vectors:
        result = evaluate(net, vector.a, vector.b, vector.cin, strict=strict)
        passed = result.sum_value == vector.expected_sum and result.carry_out == vector.expected_cout
        if not passed:
            logger.warning(f"Vector {vector.test} @ {vector.time_label_ns} ns failed: "
                           f"got {result.sum_value}/{int(result.carry_out)}, "
                           f"expected {vector.expected_sum}/{int(vector.expected_cout)}")
        rows.append(TestbenchRow(vector=vector, sum=result.sum_value, cout=result.carry_out, passed=passed))
    return rows


def run_paper_testbench(net: PrefixNetwork, strict: bool = True) -> List[TestbenchRow]:
    """The seven-row 32-bit testbench with its time labels"""
    if net.width != PAPER_WIDTH:
        raise InvalidArgumentError(f"The seven-row testbench needs width {PAPER_WIDTH}, got {net.width}")
    rows = run_testbench(net, load_vector_suite(PAPER_SUITE), strict=strict)
    logger.info(f"Testbench: {sum(r.passed for r in rows)}/{len(rows)} rows passed")
    return rows


def verify_vectors(net: PrefixNetwork, vectors: List[TestVector], strict: bool = True) -> VerificationReport:
    """Suite verification: the oracle decides, the suite's expected columns are checked too"""
    rows = run_testbench(net, vectors, strict=strict)
    mismatches = []
    for row in rows:
        want = oracle_add(row.vector.a, row.vector.b, row.vector.cin, net.width)
        if not row.passed or row.sum != want.sum_value or row.cout != want.carry_out:
            mismatches.append(Mismatch(
                a=row.vector.a, b=row.vector.b, cin=row.vector.cin,
                got_sum=row.sum, got_cout=row.cout,
                expected_sum=row.vector.expected_sum, expected_cout=row.vector.expected_cout,
            ))
    mismatches.sort(key=lambda m: (m.a, m.b, m.cin))
    return VerificationReport(
        topology=net.topology.value, width=net.width, mode=VerifyMode.SUITE,
        vectors_run=len(rows), seed=None, mismatch_count=len(mismatches),
        mismatches=mismatches[:MAX_LISTED_MISMATCHES],
    )
