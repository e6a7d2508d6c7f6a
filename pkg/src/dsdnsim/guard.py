"""Per-port detection/mitigation state machine: block a flagged source port,
keep observing it (ingress counters still rise while blocked), and re-enable
after sustained benign observation.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

from dsdnsim.features import PortWindow
from dsdnsim.topo import NodeId

PHASE_MONITORING = "monitoring"
PHASE_BLOCKED = "blocked"

RECOVERY_INACTIVITY = "inactivity"  # N consecutive benign-classified windows
RECOVERY_FIXED = "fixed"  # blind timer of N * window_len seconds

DEFAULT_RECOVERY_WINDOWS = 3
HISTORY_LIMIT = 64

INSTALL_DROP = "install_drop"
REMOVE_DROP = "remove_drop"


@dataclass(frozen=True)
class GuardAction:
    kind: str
    switch: NodeId
    port_no: int
    host: NodeId
    t: float


@dataclass
class PortGuardState:
    switch: NodeId
    port_no: int
    host: NodeId
    phase: str = PHASE_MONITORING
    blocked_since_s: float | None = None
    benign_streak: int = 0
    history: deque = field(default_factory=lambda: deque(maxlen=HISTORY_LIMIT))


def on_window(
    state: PortGuardState,
    window: PortWindow,
    verdict_label: int | None,
    now: float,
    recovery_windows: int = DEFAULT_RECOVERY_WINDOWS,
    recovery_mode: str = RECOVERY_INACTIVITY,
) -> list[GuardAction]:
    """Advance one port's state machine by one classified window.

    A missing verdict (backend failure) leaves the state untouched; the gap
    is visible in the history. Returns the mitigation actions to execute.
    """
    state.history.append((window, verdict_label))
    actions: list[GuardAction] = []

    if verdict_label is None and recovery_mode != RECOVERY_FIXED:
        return actions

    if state.phase == PHASE_MONITORING:
        if verdict_label == 1:
            state.phase = PHASE_BLOCKED
            state.blocked_since_s = now
            state.benign_streak = 0
            actions.append(GuardAction(INSTALL_DROP, state.switch, state.port_no, state.host, now))
        return actions

    # blocked
    if recovery_mode == RECOVERY_FIXED:
        if state.blocked_since_s is not None and now - state.blocked_since_s >= recovery_windows * window.window_len_s:
            _unblock(state, actions, now)
        return actions

    if verdict_label == 1:
        state.benign_streak = 0
    else:
        state.benign_streak += 1
        if state.benign_streak >= recovery_windows:
            _unblock(state, actions, now)
    return actions


def _unblock(state: PortGuardState, actions: list[GuardAction], now: float) -> None:
    state.phase = PHASE_MONITORING
    state.blocked_since_s = None
    state.benign_streak = 0
    actions.append(GuardAction(REMOVE_DROP, state.switch, state.port_no, state.host, now))
