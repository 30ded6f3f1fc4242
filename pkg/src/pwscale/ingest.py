"""Reading trial-level pairwise comparison data into count matrices."""

from __future__ import annotations

import csv
import io
import logging
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Dict, Iterable, List, Optional, Sequence, TextIO, Tuple, Union

import numpy as np

log = logging.getLogger(__name__)

REQUIRED_COLUMNS = ("observer", "session", "scene", "condition_1", "condition_2", "selection")


class FormatError(ValueError):
    """Malformed input file (missing columns, bad values)."""


class Selection(IntEnum):
    FIRST = 1
    SECOND = 2


@dataclass(frozen=True)
class Trial:
    observer: str
    session: str
    content: str
    condition_a: str
    condition_b: str
    selection: Selection

    def __post_init__(self):
        if self.condition_a == self.condition_b:
            raise ValueError(f"a condition cannot be compared with itself: {self.condition_a!r}")

    @property
    def winner(self) -> str:
        return self.condition_a if self.selection is Selection.FIRST else self.condition_b

    @property
    def loser(self) -> str:
        return self.condition_b if self.selection is Selection.FIRST else self.condition_a


@dataclass(frozen=True)
class ConditionSet:
    """Ordered condition labels; position 0 is the reference scored at 0."""

    labels: Tuple[str, ...]

    def __post_init__(self):
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("condition labels must be unique")

    def __len__(self):
        return len(self.labels)

    def index(self, label: str) -> int:
        return self.labels.index(label)

    def with_reference(self, label: str) -> "ConditionSet":
        if label not in self.labels:
            raise ValueError(f"reference condition {label!r} does not occur in the data")
        rest = tuple(lab for lab in self.labels if lab != label)
        return ConditionSet((label,) + rest)


@dataclass
class TrialTable:
    trials: List[Trial]
    conditions: ConditionSet

    def __post_init__(self):
        known = set(self.conditions.labels)
        for t in self.trials:
            if t.condition_a not in known or t.condition_b not in known:
                raise ValueError(f"trial refers to an unknown condition: {t}")

    @property
    def observers(self) -> List[str]:
        return list(dict.fromkeys(t.observer for t in self.trials))

    @property
    def contents(self) -> List[str]:
        return list(dict.fromkeys(t.content for t in self.trials))


def _normalize(name: str) -> str:
    return name.strip().lower()


def parse_trials(source: Union[TextIO, str], reference_label: Optional[str] = None) -> TrialTable:
    """Parse CSV comparison data.

    ``source`` is an open text stream or a string holding the CSV text. The
    header must contain the columns in ``REQUIRED_COLUMNS`` (matched
    case-insensitively); other columns are ignored.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError("input is empty; a header row is required") from None
    names = [_normalize(h) for h in header]
    col = {}
    for required in REQUIRED_COLUMNS:
        if required not in names:
            raise FormatError(f"missing required column {required!r}")
        col[required] = names.index(required)
    extra = [h for h in header if _normalize(h) not in REQUIRED_COLUMNS]
    if extra:
        log.warning("ignoring extra columns: %s", ", ".join(extra))

    trials = []
    labels: Dict[str, None] = {}
    for rownum, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) < len(header):
            raise FormatError(f"row {rownum}: expected {len(header)} fields, got {len(row)}")
        get = lambda key: row[col[key]].strip()  # noqa: E731
        sel = get("selection")
        if sel not in ("1", "2"):
            raise FormatError(f"row {rownum}: selection must be 1 or 2, got {sel!r}")
        a, b = get("condition_1"), get("condition_2")
        if a == b:
            raise FormatError(f"row {rownum}: condition_1 and condition_2 are both {a!r}")
        trials.append(Trial(get("observer"), get("session"), get("scene"), a, b, Selection(int(sel))))
        labels.setdefault(a)
        labels.setdefault(b)

    conditions = ConditionSet(tuple(labels))
    if reference_label is not None:
        conditions = conditions.with_reference(reference_label)
    return TrialTable(trials, conditions)


def read_trials(path, reference_label: Optional[str] = None) -> TrialTable:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_trials(fh, reference_label)


def write_trials(table: TrialTable, out: TextIO) -> None:
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["Observer", "Session", "Scene", "Condition_1", "Condition_2", "Selection"])
    for t in table.trials:
        writer.writerow([t.observer, t.session, t.content, t.condition_a, t.condition_b, int(t.selection)])


def _count(trials: Iterable[Trial], conditions: ConditionSet) -> np.ndarray:
    n = len(conditions)
    pos = {lab: k for k, lab in enumerate(conditions.labels)}
    C = np.zeros((n, n), dtype=np.int64)
    for t in trials:
        C[pos[t.winner], pos[t.loser]] += 1
    return C


def build_observer_matrices(table: TrialTable, group_by_content: bool = False) -> Dict[tuple, np.ndarray]:
    """One count matrix per observer, or per (observer, content) pair.

    Keys are ``(observer,)`` or ``(observer, content)`` tuples, in order of
    first appearance in the table.
    """
    groups: Dict[tuple, List[Trial]] = {}
    for t in table.trials:
        key = (t.observer, t.content) if group_by_content else (t.observer,)
        groups.setdefault(key, []).append(t)
    return {key: _count(ts, table.conditions) for key, ts in groups.items()}


def pool_matrices(matrices: Iterable[np.ndarray], n: Optional[int] = None) -> np.ndarray:
    """Element-wise sum of count matrices.

    ``n`` gives the dimension to use when ``matrices`` is empty.
    """
    matrices = [np.asarray(m) for m in matrices]
    if not matrices:
        if n is None:
            raise ValueError("cannot infer the dimension of an empty collection; pass n")
        return np.zeros((n, n), dtype=np.int64)
    shape = matrices[0].shape
    for m in matrices:
        if m.shape != shape or (n is not None and m.shape != (n, n)):
            raise ValueError(f"count matrix dimensions differ: {m.shape} vs {shape}")
    return np.sum(matrices, axis=0)


def stack_observers(matrices: Dict[tuple, np.ndarray]) -> Tuple[List[tuple], np.ndarray]:
    """Keys and a ``(m, n, n)`` array, the layout used by stats and outliers."""
    keys = list(matrices)
    return keys, np.stack([matrices[k] for k in keys]) if keys else np.zeros((0, 0, 0))


def split_by_content(table: TrialTable) -> Dict[str, TrialTable]:
    out: Dict[str, List[Trial]] = {}
    for t in table.trials:
        out.setdefault(t.content, []).append(t)
    return {k: TrialTable(v, table.conditions) for k, v in out.items()}


def observer_labels(keys: Sequence[tuple]) -> List[str]:
    return ["/".join(k) for k in keys]
