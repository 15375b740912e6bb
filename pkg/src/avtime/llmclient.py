"""Minimal HTTP client for the optional LLM endpoints.

One wire contract serves both the paraphrasing pass and the judge: a JSON
POST of ``{"prompt": str}``; paraphrase endpoints answer ``{"text": str}``
and judge endpoints answer ``{"score": int}``.  The bearer token is read
from the ``AVTIME_LLM_TOKEN`` environment variable unless given
explicitly.  Instances hold no mutable state and are safe to share across
worker threads.
"""

from __future__ import annotations

import os

import requests

TOKEN_ENV_VAR = "AVTIME_LLM_TOKEN"


class LlmClientError(RuntimeError):
    """Transport failure or a malformed endpoint response."""


class HttpLlmClient:
    def __init__(self, endpoint: str, auth_token: str | None = None, timeout: float = 30.0):
        self.endpoint = endpoint
        self.auth_token = auth_token if auth_token is not None else os.environ.get(TOKEN_ENV_VAR)
        self.timeout = timeout

    def _post(self, prompt: str) -> dict:
        headers = {"Content-Type": "application/json"}
        if self.auth_token:
            headers["Authorization"] = f"Bearer {self.auth_token}"
        try:
            response = requests.post(
                self.endpoint, json={"prompt": prompt}, headers=headers, timeout=self.timeout
            )
            response.raise_for_status()
            payload = response.json()
        except requests.RequestException as exc:
            raise LlmClientError(f"request to {self.endpoint} failed: {exc}") from exc
        except ValueError as exc:
            raise LlmClientError(f"{self.endpoint} returned non-JSON body") from exc
        if not isinstance(payload, dict):
            raise LlmClientError(f"{self.endpoint} returned non-object JSON")
        return payload

    def complete(self, prompt: str) -> str:
        """Text completion for the paraphrasing pass."""
        payload = self._post(prompt)
        if "text" not in payload or not isinstance(payload["text"], str):
            raise LlmClientError("response is missing a string 'text' field")
        return payload["text"]

    def score(self, prompt: str) -> int:
        """Integer judge score in [0, 5]."""
        payload = self._post(prompt)
        value = payload.get("score")
        if not isinstance(value, int) or isinstance(value, bool) or not 0 <= value <= 5:
            raise LlmClientError(f"judge returned invalid score {value!r}")
        return value
