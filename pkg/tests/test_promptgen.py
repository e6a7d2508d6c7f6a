import pytest

from dsdnsim.features import PortWindow
from dsdnsim.promptgen import (
    DEFAULT_EXEMPLARS,
    ExemplarSet,
    build_prompt,
    default_exemplars,
    load_exemplars,
    parse_new_status,
    prompt_hash,
    sample_exemplars,
)
from dsdnsim.topo import switch

GOLDEN_PROMPT = """[Task]: Detect whether the interface status over the last ten seconds represents a flood-based DDoS attack (1) or Normal traffic (0). Analyze the labeled examples provided, then classify the new interface status accordingly.
[Labeled interface status]:
- (Received 1314 packets with 1923532 bytes and sent 1314 packets with 86736 bytes) => 0
- (Received 1031 packets with 1508646 bytes and sent 1030 packets with 67980 bytes) => 0
- (Received 4329 packets with 6337922 bytes and sent 4326 packets with 285524 bytes) => 0
- (Received 2224 packets with 3257592 bytes and sent 2223 packets with 146726 bytes) => 0
- (Received 4690 packets with 6864356 bytes and sent 4686 packets with 309292 bytes) => 0
- (Received 834 packets with 1201256 bytes and sent 2 packets with 273 bytes) => 0
- (Received 1510 packets with 2177420 bytes and sent 1 packets with 1512 bytes) => 0
- (Received 2343 packets with 3378606 bytes and sent 1 packets with 1512 bytes) => 0
- (Received 2972 packets with 4285624 bytes and sent 0 packets with 0 bytes) => 0
- (Received 3276 packets with 4723992 bytes and sent 1 packets with 1512 bytes) => 0
[New interface status]:
- (Received 1361 packets with 1953154 bytes and sent 9 packets with 2268 bytes) => ???
[Instruction]: Only answer with one number: 0 if Normal, or 1 if DDoS. Do not explain."""


def window(rx_p=1361, rx_b=1953154, tx_p=9, tx_b=2268, start=0.0):
    return PortWindow(switch(1), 1, start, 10.0, rx_p, rx_b, tx_p, tx_b)


def test_golden_prompt_byte_exact():
    prompt = build_prompt(window(), default_exemplars())
    assert prompt.text == GOLDEN_PROMPT
    assert "\r" not in prompt.text


def test_zero_window_formatting():
    prompt = build_prompt(window(0, 0, 0, 0), default_exemplars())
    assert "- (Received 0 packets with 0 bytes and sent 0 packets with 0 bytes) => ???" in prompt.text


def test_prompts_differ_only_in_new_status_line():
    ex = default_exemplars()
    a = build_prompt(window(), ex).text.splitlines()
    b = build_prompt(window(7, 8, 9, 10), ex).text.splitlines()
    assert len(a) == len(b)
    diff = [i for i, (la, lb) in enumerate(zip(a, b)) if la != lb]
    assert len(diff) == 1
    assert a[diff[0]].startswith("- (Received") and a[diff[0]].endswith("=> ???")


def test_new_status_round_trip():
    for values in [(1361, 1953154, 9, 2268), (0, 0, 0, 0), (10**12, 1, 2, 3)]:
        prompt = build_prompt(window(*values), default_exemplars())
        assert parse_new_status(prompt.text) == values


def test_exemplar_cardinality_enforced():
    with pytest.raises(ValueError, match="exactly 10"):
        ExemplarSet(DEFAULT_EXEMPLARS[:9])


def test_default_exemplars_first_row():
    assert default_exemplars().rows[0] == (1314, 1923532, 1314, 86736)


def test_sample_exemplars_deterministic_and_strict():
    windows = [window(i, i, i, i, start=10.0 * i) for i in range(20)]
    a = sample_exemplars(windows, seed=5)
    b = sample_exemplars(windows, seed=5)
    assert a == b
    with pytest.raises(ValueError, match="at least 10"):
        sample_exemplars(windows[:9], seed=5)


def test_load_exemplars_specs():
    assert load_exemplars("builtin") == default_exemplars()
    explicit = load_exemplars([list(r) for r in DEFAULT_EXEMPLARS])
    assert explicit == default_exemplars()
    with pytest.raises(ValueError):
        load_exemplars({"bogus": 1})


def test_prompt_hash_normalizes_line_endings():
    text = build_prompt(window(), default_exemplars()).text
    assert prompt_hash(text) == prompt_hash(text.replace("\n", "\r\n"))
    assert len(prompt_hash(text)) == 64
