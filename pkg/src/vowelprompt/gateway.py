"""Async client for OpenAI-compatible chat-completion endpoints.

Runs emitted prompt datasets against an external model server with bounded
concurrency, writing one inference record per prompt in input order. Reruns
resume: ids already present in the output file are skipped. Transient HTTP
failures (429 and 5xx) retry with exponential backoff and jitter; other
failures become per-record errors without aborting the run.

The API key comes from the VOWELPROMPT_API_KEY environment variable and is
never written to logs or output files.
"""

from __future__ import annotations

import asyncio
import json
import os
import random
import time
from dataclasses import dataclass
from pathlib import Path

import httpx

from .errors import ConfigError, GatewayError

API_KEY_ENV_VAR = "VOWELPROMPT_API_KEY"
_RETRYABLE = frozenset({429, 500, 502, 503, 504})


@dataclass(frozen=True)
class GatewayConfig:
    base_url: str
    model_name: str
    api_key: str
    max_concurrency: int = 4
    timeout: float = 60.0
    max_retries: int = 3
    temperature: float = 0.0
    # Base delay for the exponential backoff; tests shrink it.
    retry_base_delay: float = 1.0

    def __post_init__(self) -> None:
        if not self.base_url.startswith(("http://", "https://")):
            raise ConfigError(f"gateway base_url {self.base_url!r} is not an HTTP(S) URL")
        if not self.model_name:
            raise ConfigError("gateway model_name must be non-empty")
        if self.max_concurrency < 1:
            raise ConfigError(f"max_concurrency must be >= 1, got {self.max_concurrency}")
        if not 0 <= self.max_retries <= 10:
            raise ConfigError(f"max_retries must be in [0, 10], got {self.max_retries}")
        if self.temperature < 0:
            raise ConfigError(f"temperature must be >= 0, got {self.temperature}")
        if self.timeout <= 0:
            raise ConfigError(f"timeout must be positive, got {self.timeout}")
        if self.retry_base_delay < 0:
            raise ConfigError(f"retry_base_delay must be >= 0, got {self.retry_base_delay}")


@dataclass(frozen=True)
class InferenceRecord:
    """One prompt's outcome; exactly one of output_text / error is set."""

    utterance_id: str
    request_prompt: str
    output_text: str | None
    latency: float
    attempt_count: int
    error: str | None


def load_api_key() -> str:
    key = os.environ.get(API_KEY_ENV_VAR, "")
    if not key:
        raise ConfigError(f"environment variable {API_KEY_ENV_VAR} is not set")
    return key


def _completions_url(base_url: str) -> str:
    return base_url.rstrip("/") + "/chat/completions"


def _extract_text(payload: dict) -> str:
    try:
        text = payload["choices"][0]["message"]["content"]
    except (KeyError, IndexError, TypeError):
        raise GatewayError("response is missing choices[0].message.content", status=200)
    if not isinstance(text, str):
        raise GatewayError("response message content is not a string", status=200)
    return text


async def _chat_with_retries(
    client: httpx.AsyncClient, cfg: GatewayConfig, prompt: str
) -> tuple[str, int]:
    """POST one chat completion; returns (text, attempts used)."""
    body = {
        "model": cfg.model_name,
        "messages": [{"role": "user", "content": prompt}],
        "temperature": cfg.temperature,
    }
    headers = {"Authorization": f"Bearer {cfg.api_key}"}
    url = _completions_url(cfg.base_url)

    last_status: int | None = None
    for attempt in range(cfg.max_retries + 1):
        if attempt:
            delay = cfg.retry_base_delay * 2.0 ** (attempt - 1)
            await asyncio.sleep(delay * (0.5 + random.random()))
        try:
            response = await client.post(url, json=body, headers=headers)
        except httpx.TimeoutException:
            raise GatewayError(
                f"request timed out after {cfg.timeout} s", status=None
            ) from None
        except httpx.HTTPError as exc:
            raise GatewayError(f"transport failure: {exc}", status=None) from None

        last_status = response.status_code
        if response.status_code == 200:
            try:
                payload = response.json()
            except ValueError:
                raise GatewayError("response body is not valid JSON", status=200) from None
            return _extract_text(payload), attempt + 1
        if response.status_code not in _RETRYABLE:
            raise GatewayError(
                f"request failed with HTTP {response.status_code}",
                status=response.status_code,
            )

    raise GatewayError(
        f"retries exhausted after {cfg.max_retries + 1} attempts "
        f"(last HTTP {last_status})",
        status=last_status,
    )


def chat_complete(cfg: GatewayConfig, prompt: str) -> str:
    """Single synchronous completion; see _chat_with_retries for semantics."""
    if not cfg.api_key:
        raise ConfigError("gateway api_key is empty")

    async def _run() -> str:
        async with httpx.AsyncClient(timeout=cfg.timeout) as client:
            text, _ = await _chat_with_retries(client, cfg, prompt)
            return text

    return asyncio.run(_run())


def _record_to_json(rec: InferenceRecord) -> str:
    return json.dumps(
        {
            "id": rec.utterance_id,
            "prompt": rec.request_prompt,
            "output_text": rec.output_text,
            "latency": rec.latency,
            "attempt_count": rec.attempt_count,
            "error": rec.error,
        },
        ensure_ascii=False,
    )


def _existing_ids(out: Path) -> set[str]:
    if not out.exists():
        return set()
    ids: set[str] = set()
    with open(out, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                raise GatewayError(
                    f"existing output {out} line {lineno} is not valid JSON; "
                    "refusing to resume over a corrupt file",
                    status=None,
                ) from None
            if "id" in obj:
                ids.add(obj["id"])
    return ids


async def _run_dataset_async(
    cfg: GatewayConfig, records: list[dict], out: Path
) -> tuple[int, int]:
    semaphore = asyncio.Semaphore(cfg.max_concurrency)
    results: dict[int, InferenceRecord] = {}
    n_ok = n_err = 0

    async def worker(index: int, rec: dict, client: httpx.AsyncClient) -> int:
        async with semaphore:
            start = time.monotonic()
            try:
                text, attempts = await _chat_with_retries(client, cfg, rec["prompt"])
                result = InferenceRecord(
                    utterance_id=rec["id"],
                    request_prompt=rec["prompt"],
                    output_text=text,
                    latency=time.monotonic() - start,
                    attempt_count=attempts,
                    error=None,
                )
            except GatewayError as exc:
                result = InferenceRecord(
                    utterance_id=rec["id"],
                    request_prompt=rec["prompt"],
                    output_text=None,
                    latency=time.monotonic() - start,
                    attempt_count=cfg.max_retries + 1,
                    error=str(exc),
                )
            results[index] = result
            return index

    with open(out, "a", encoding="utf-8") as fh:
        write_ptr = 0

        def flush() -> None:
            nonlocal write_ptr, n_ok, n_err
            while write_ptr in results:
                rec = results.pop(write_ptr)
                fh.write(_record_to_json(rec) + "\n")
                if rec.error is None:
                    n_ok += 1
                else:
                    n_err += 1
                write_ptr += 1
            fh.flush()

        async with httpx.AsyncClient(timeout=cfg.timeout) as client:
            tasks = [
                asyncio.create_task(worker(i, rec, client))
                for i, rec in enumerate(records)
            ]
            for done in asyncio.as_completed(tasks):
                await done
                flush()
    return n_ok, n_err


def run_dataset(cfg: GatewayConfig, prompts_path: str | Path, out_path: str | Path) -> tuple[int, int]:
    """Run every prompt in a dataset file; returns (n_ok, n_err) for new work.

    Output order equals input order. Ids already present in the output file
    (successes and recorded errors alike) are skipped, so rerunning a
    completed file issues zero requests.
    """
    if not cfg.api_key:
        raise ConfigError("gateway api_key is empty")
    out = Path(out_path)
    done = _existing_ids(out)

    pending: list[dict] = []
    with open(prompts_path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError:
                raise GatewayError(
                    f"prompts file {prompts_path} line {lineno} is not valid JSON",
                    status=None,
                ) from None
            if not isinstance(obj, dict) or "id" not in obj or "prompt" not in obj:
                raise GatewayError(
                    f"prompts file {prompts_path} line {lineno} needs 'id' and 'prompt'",
                    status=None,
                )
            if obj["id"] not in done:
                pending.append(obj)

    if not pending:
        return (0, 0)
    return asyncio.run(_run_dataset_async(cfg, pending, out))
