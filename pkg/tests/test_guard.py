from dsdnsim.features import PortWindow
from dsdnsim.guard import (
    INSTALL_DROP,
    PHASE_BLOCKED,
    PHASE_MONITORING,
    RECOVERY_FIXED,
    REMOVE_DROP,
    PortGuardState,
    on_window,
)
from dsdnsim.topo import host, switch


def window(start):
    return PortWindow(switch(1), 1, start, 10.0, 0, 0, 0, 0)


def state():
    return PortGuardState(switch(1), 1, host(1))


def walk(s, verdicts, t0=10.0, **kw):
    """Feed one verdict per window boundary; return the action stream."""
    out = []
    for i, v in enumerate(verdicts):
        t = t0 + 10.0 * i
        out += [(a.kind, a.t) for a in on_window(s, window(t - 10.0), v, t, **kw)]
    return out


def test_attack_blocks_within_same_tick():
    s = state()
    actions = on_window(s, window(60.0), 1, 70.0)
    assert [(a.kind, a.t) for a in actions] == [(INSTALL_DROP, 70.0)]
    assert s.phase == PHASE_BLOCKED
    assert s.blocked_since_s == 70.0


def test_benign_monitoring_is_noop():
    s = state()
    assert on_window(s, window(0.0), 0, 10.0) == []
    assert s.phase == PHASE_MONITORING
    assert s.benign_streak == 0


def test_three_benign_windows_unblock_exactly():
    s = state()
    actions = walk(s, [1, 0, 0, 0], t0=70.0)
    assert actions == [(INSTALL_DROP, 70.0), (REMOVE_DROP, 100.0)]
    assert s.phase == PHASE_MONITORING
    assert s.benign_streak == 0


def test_attack_mid_recovery_resets_counter():
    # blocked, benign, benign, attack, benign: the reset keeps the port
    # blocked well past the last attack window.
    s = state()
    actions = walk(s, [1, 0, 0, 1, 0, 0, 0], t0=70.0)
    assert actions == [(INSTALL_DROP, 70.0), (REMOVE_DROP, 130.0)]


def test_blocked_attack_keeps_counter_zero():
    s = state()
    walk(s, [1, 1, 1], t0=70.0)
    assert s.phase == PHASE_BLOCKED
    assert s.benign_streak == 0


def test_absent_verdict_keeps_state():
    s = state()
    walk(s, [1], t0=70.0)
    before = (s.phase, s.benign_streak, s.blocked_since_s)
    assert on_window(s, window(70.0), None, 80.0) == []
    assert (s.phase, s.benign_streak, s.blocked_since_s) == before
    # the gap is visible in the audit history
    assert s.history[-1][1] is None


def test_monitoring_invariant_streak_zero():
    s = state()
    walk(s, [0, 0, 1, 0, 0, 0, 0])
    assert s.phase == PHASE_MONITORING
    assert s.benign_streak == 0


def test_retrigger_after_recovery():
    s = state()
    actions = walk(s, [1, 0, 0, 0, 0, 1], t0=70.0)
    assert actions == [
        (INSTALL_DROP, 70.0),
        (REMOVE_DROP, 100.0),
        (INSTALL_DROP, 120.0),
    ]


def test_fixed_timer_recovery_ignores_verdicts():
    s = state()
    actions = walk(s, [1, 1, 1, 1], t0=70.0, recovery_mode=RECOVERY_FIXED)
    # blocked at 70, released once 30 s elapsed regardless of verdicts
    assert actions == [(INSTALL_DROP, 70.0), (REMOVE_DROP, 100.0)]


def test_history_is_bounded():
    s = state()
    walk(s, [0] * 100)
    assert len(s.history) == 64
