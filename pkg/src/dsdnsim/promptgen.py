"""Byte-exact construction of the classification prompt from a port window
plus ten benign exemplars.

The template grammar is normative: golden-file tests pin it byte for byte,
and the threshold backend parses the new-status line back out of it. Keep LF
line endings and plain base-10 integers.
"""
from __future__ import annotations

import hashlib
import random
import re
from dataclasses import dataclass

from dsdnsim.features import PortWindow

EXEMPLAR_COUNT = 10

# Stock benign exemplar set: (rx_packets, rx_bytes, tx_packets, tx_bytes),
# all labeled 0.
DEFAULT_EXEMPLARS: tuple[tuple[int, int, int, int], ...] = (
    (1314, 1923532, 1314, 86736),
    (1031, 1508646, 1030, 67980),
    (4329, 6337922, 4326, 285524),
    (2224, 3257592, 2223, 146726),
    (4690, 6864356, 4686, 309292),
    (834, 1201256, 2, 273),
    (1510, 2177420, 1, 1512),
    (2343, 3378606, 1, 1512),
    (2972, 4285624, 0, 0),
    (3276, 4723992, 1, 1512),
)

TASK_LINE = (
    "[Task]: Detect whether the interface status over the last ten seconds "
    "represents a flood-based DDoS attack (1) or Normal traffic (0). Analyze "
    "the labeled examples provided, then classify the new interface status "
    "accordingly."
)
LABELED_HEADER = "[Labeled interface status]:"
NEW_HEADER = "[New interface status]:"
INSTRUCTION_LINE = (
    "[Instruction]: Only answer with one number: 0 if Normal, or 1 if DDoS. "
    "Do not explain."
)

_STATUS_RE = re.compile(
    r"- \(Received (\d+) packets with (\d+) bytes "
    r"and sent (\d+) packets with (\d+) bytes\)"
)


@dataclass(frozen=True)
class ExemplarSet:
    """Exactly ten benign (rx_packets, rx_bytes, tx_packets, tx_bytes) rows."""

    rows: tuple[tuple[int, int, int, int], ...]

    def __post_init__(self) -> None:
        if len(self.rows) != EXEMPLAR_COUNT:
            raise ValueError(f"exemplar set needs exactly {EXEMPLAR_COUNT} rows, got {len(self.rows)}")
        for row in self.rows:
            if len(row) != 4 or any(v < 0 for v in row):
                raise ValueError(f"bad exemplar row: {row!r}")


@dataclass(frozen=True)
class PromptText:
    text: str
    source_window: PortWindow


def _status(rx_p: int, rx_b: int, tx_p: int, tx_b: int) -> str:
    return f"- (Received {rx_p} packets with {rx_b} bytes and sent {tx_p} packets with {tx_b} bytes)"


def build_prompt(window: PortWindow, exemplars: ExemplarSet) -> PromptText:
    lines = [TASK_LINE, LABELED_HEADER]
    lines += [f"{_status(*row)} => 0" for row in exemplars.rows]
    lines.append(NEW_HEADER)
    lines.append(
        f"{_status(window.rx_packets, window.rx_bytes, window.tx_packets, window.tx_bytes)} => ???"
    )
    lines.append(INSTRUCTION_LINE)
    return PromptText(text="\n".join(lines), source_window=window)


def parse_new_status(text: str) -> tuple[int, int, int, int]:
    """Recover the four new-status integers from a prompt. This is the same
    interface an LLM sees, so rule-based backends read it instead of peeking
    at the window object."""
    try:
        tail = text.split(NEW_HEADER, 1)[1]
    except IndexError:
        raise ValueError("prompt has no new-status section") from None
    m = _STATUS_RE.search(tail)
    if m is None:
        raise ValueError("prompt new-status line does not match the template")
    return tuple(int(g) for g in m.groups())  # type: ignore[return-value]


def prompt_hash(text: str) -> str:
    """Content hash of the normalized (LF) prompt text."""
    normalized = text.replace("\r\n", "\n").replace("\r", "\n")
    return hashlib.sha256(normalized.encode("utf-8")).hexdigest()


def default_exemplars() -> ExemplarSet:
    return ExemplarSet(DEFAULT_EXEMPLARS)


def sample_exemplars(windows: list[PortWindow], seed: int) -> ExemplarSet:
    """Draw ten benign windows from a calibration run, seeded."""
    if len(windows) < EXEMPLAR_COUNT:
        raise ValueError(f"need at least {EXEMPLAR_COUNT} benign windows, got {len(windows)}")
    picked = random.Random(seed).sample(windows, EXEMPLAR_COUNT)
    return ExemplarSet(tuple((w.rx_packets, w.rx_bytes, w.tx_packets, w.tx_bytes) for w in picked))


def load_exemplars(spec: object = "builtin") -> ExemplarSet:
    """Resolve an exemplar config: "builtin" or an explicit list of ten
    [rx_packets, rx_bytes, tx_packets, tx_bytes] rows."""
    if spec in (None, "builtin"):
        return default_exemplars()
    if isinstance(spec, (list, tuple)):
        return ExemplarSet(tuple(tuple(int(v) for v in row) for row in spec))
    raise ValueError(f"unsupported exemplar spec: {spec!r}")
