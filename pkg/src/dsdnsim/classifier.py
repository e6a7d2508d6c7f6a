"""Pluggable binary classification backends consuming prompt text and
returning 0/1 verdicts, with a normative output-parsing and failure policy.

All backends must be safe for concurrent classify() calls. Failures surface
as BackendUnavailable (infrastructure) or ParseFailure (non-conforming
output); the guard treats both as "no verdict".
"""
from __future__ import annotations

import csv
import logging
import os
import string
import time
from dataclasses import dataclass

import requests

from dsdnsim.promptgen import PromptText, parse_new_status, prompt_hash

logger = logging.getLogger(__name__)

LABEL_NORMAL = 0
LABEL_DDOS = 1

DEFAULT_THETA_PPS = 1000.0
DEFAULT_THETA_BYTES_PER_S = 5_000_000.0


class ParseFailure(Exception):
    """Backend output did not reduce to a single 0/1 answer."""


class BackendUnavailable(Exception):
    """Backend could not produce any output (network, credentials, ...)."""


@dataclass(frozen=True)
class Verdict:
    label: int
    backend_id: str
    latency_s: float
    raw_response: str


def parse_response(raw: str) -> int:
    """Reduce a model response to 0 or 1.

    Accepts exactly "0"/"1" after whitespace stripping, or a leading 0/1
    followed only by punctuation/whitespace (models occasionally decorate).
    Anything else is a ParseFailure.
    """
    s = raw.strip()
    if s in ("0", "1"):
        return int(s)
    if s and s[0] in "01":
        rest = s[1:]
        if rest and all(c in string.punctuation or c.isspace() for c in rest):
            return int(s[0])
    raise ParseFailure(f"unparsable verdict: {raw!r}")


class ThresholdOracleBackend:
    """Rule-based stand-in: flags a window whose received packet or byte rate
    clears a threshold.

    Reads the four integers back out of the prompt's new-status line, so it
    exercises the same interface as a language model. Pure function of the
    prompt text, which makes end-to-end runs fully deterministic.
    """

    backend_id = "threshold_oracle"

    def __init__(
        self,
        theta_pps: float = DEFAULT_THETA_PPS,
        theta_bytes_per_s: float = DEFAULT_THETA_BYTES_PER_S,
        window_len_s: float = 10.0,
    ) -> None:
        self.theta_pps = theta_pps
        self.theta_bytes_per_s = theta_bytes_per_s
        self.window_len_s = window_len_s

    def classify(self, prompt: PromptText) -> Verdict:
        rx_packets, rx_bytes, _, _ = parse_new_status(prompt.text)
        flagged = (
            rx_packets > self.theta_pps * self.window_len_s
            or rx_bytes > self.theta_bytes_per_s * self.window_len_s
        )
        label = LABEL_DDOS if flagged else LABEL_NORMAL
        return Verdict(label, self.backend_id, 0.0, str(label))


class ConstantBackend:
    """Degenerate backend answering the same label for every prompt."""

    def __init__(self, label: int) -> None:
        if label not in (0, 1):
            raise ValueError("constant label must be 0 or 1")
        self.label = label
        self.backend_id = f"constant_{label}"

    def classify(self, prompt: PromptText) -> Verdict:
        return Verdict(self.label, self.backend_id, 0.0, str(self.label))


class ReplayBackend:
    """Look up recorded verdicts by prompt hash from a CSV of
    (prompt_hash, label) rows."""

    backend_id = "replay"

    def __init__(self, path: str) -> None:
        self.verdicts: dict[str, int] = {}
        with open(path, newline="") as f:
            for row in csv.reader(f):
                if not row or row[0] == "prompt_hash":
                    continue
                self.verdicts[row[0]] = int(row[1])

    def classify(self, prompt: PromptText) -> Verdict:
        key = prompt_hash(prompt.text)
        if key not in self.verdicts:
            raise ParseFailure(f"no recorded verdict for prompt {key[:12]}")
        return Verdict(self.verdicts[key], self.backend_id, 0.0, str(self.verdicts[key]))


class HttpChatBackend:
    """Chat-completion HTTP backend: single user message, temperature 0 by
    default, API key taken from a named environment variable (never logged)."""

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key_env: str = "",
        timeout_s: float = 30.0,
        max_retries: int = 3,
        temperature: float = 0.0,
        backoff_s: float = 0.5,
    ) -> None:
        self.endpoint = endpoint
        self.model = model
        self.api_key_env = api_key_env
        self.timeout_s = timeout_s
        self.max_retries = max_retries
        self.temperature = temperature
        self.backoff_s = backoff_s
        self.backend_id = model

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        if self.api_key_env:
            key = os.environ.get(self.api_key_env)
            if not key:
                raise BackendUnavailable(f"environment variable {self.api_key_env} is not set")
            headers["Authorization"] = f"Bearer {key}"
        return headers

    def classify(self, prompt: PromptText) -> Verdict:
        body = {
            "model": self.model,
            "messages": [{"role": "user", "content": prompt.text}],
            "temperature": self.temperature,
        }
        headers = self._headers()
        start = time.monotonic()
        last_error: Exception | None = None
        for attempt in range(self.max_retries + 1):
            try:
                resp = requests.post(self.endpoint, json=body, headers=headers, timeout=self.timeout_s)
                if resp.status_code >= 500:
                    raise requests.RequestException(f"server error {resp.status_code}")
                if resp.status_code != 200:
                    raise BackendUnavailable(f"HTTP {resp.status_code} from {self.endpoint}")
                content = resp.json()["choices"][0]["message"]["content"]
                label = parse_response(content)
                return Verdict(label, self.backend_id, time.monotonic() - start, content)
            except (requests.RequestException, KeyError, ValueError) as e:
                last_error = e
                if attempt < self.max_retries:
                    time.sleep(self.backoff_s * (2**attempt))
        raise BackendUnavailable(f"backend exhausted {self.max_retries} retries: {last_error}")


def make_backend(cfg: dict, window_len_s: float = 10.0):
    """Build a backend from its config mapping (see README for the schema)."""
    kind = cfg.get("kind", "threshold_oracle")
    if kind == "threshold_oracle":
        return ThresholdOracleBackend(
            theta_pps=float(cfg.get("theta_pps", DEFAULT_THETA_PPS)),
            theta_bytes_per_s=float(cfg.get("theta_bytes_per_s", DEFAULT_THETA_BYTES_PER_S)),
            window_len_s=window_len_s,
        )
    if kind == "constant":
        return ConstantBackend(int(cfg.get("label", 1)))
    if kind == "replay":
        return ReplayBackend(cfg["path"])
    if kind == "llm_http":
        return HttpChatBackend(
            endpoint=cfg["endpoint"],
            model=cfg.get("model", "deepseek-chat"),
            api_key_env=cfg.get("api_key_env", ""),
            timeout_s=float(cfg.get("timeout_s", 30.0)),
            max_retries=int(cfg.get("max_retries", 3)),
            temperature=float(cfg.get("temperature", 0.0)),
        )
    raise ValueError(f"unknown backend kind: {kind!r}")
