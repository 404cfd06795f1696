"""Prompt rendering, chat-completions calls, and response parsing.

Prompts follow the few-shot layout used for dataset translation and
classification: a fixed instruction, bulleted shots (translation shots use
`` // `` between source and target; classification shots end in their 0/1
token), and the query text. Requests go to an OpenAI-compatible
``/chat/completions`` endpoint as one system message (the instruction) plus
one user message (shots + query).

Model answers are reduced to a label by the truncation rule: strip leading
whitespace and keep the first character; anything other than '0' or '1'
counts as a refusal, which is recorded rather than dropped here (alignment
applies the drop policy downstream).
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path
from typing import Sequence

import requests

from .corpus import Corpus, Example
from .predictions import Prediction

REFUSED = "refused"

TASKS = ("translate", "classify")


class TransportError(RuntimeError):
    """Endpoint unreachable or still failing after all retries."""

    def __init__(self, message: str, status: int | None = None):
        super().__init__(message)
        self.status = status


class ProtocolError(RuntimeError):
    """Endpoint answered, but not with a parseable chat completion."""


@dataclass(frozen=True)
class PromptTemplate:
    task: str
    instruction: str
    few_shots: tuple[tuple[str, str], ...]
    delimiter: str = " // "

    def __post_init__(self):
        if self.task not in TASKS:
            raise ValueError(f"task must be one of {TASKS}, got {self.task!r}")
        object.__setattr__(
            self, "few_shots", tuple((str(a), str(b)) for a, b in self.few_shots)
        )


def load_template(path: str | Path) -> PromptTemplate:
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    return PromptTemplate(
        task=data["task"],
        instruction=data["instruction"],
        few_shots=tuple((s[0], s[1]) for s in data["few_shots"]),
        delimiter=data.get("delimiter", " // "),
    )


def default_template(task: str) -> PromptTemplate:
    """Packaged prompt fixtures: the translation and classification shots."""
    if task not in TASKS:
        raise ValueError(f"task must be one of {TASKS}, got {task!r}")
    name = "translation.json" if task == "translate" else "classification.json"
    ref = resources.files("sarcens") / "prompts" / name
    with resources.as_file(ref) as path:
        return load_template(path)


def _translation_body(text: str, template: PromptTemplate) -> str:
    lines = [f"- {src}{template.delimiter}{tgt}" for src, tgt in template.few_shots]
    lines.append((text + template.delimiter).rstrip())
    return "\n".join(lines)


def _classification_body(text: str, template: PromptTemplate) -> str:
    lines = [f"- {shot} {label}" for shot, label in template.few_shots]
    lines.append(text)
    return "\n".join(lines)


def render_translation_prompt(text: str, template: PromptTemplate) -> str:
    """Full translation prompt text: instruction, shots, then the query."""
    if template.task != "translate":
        raise ValueError(f"expected a translate template, got task {template.task!r}")
    if not template.few_shots:
        raise ValueError("translation template needs at least one few-shot example")
    return template.instruction + "\n" + _translation_body(text, template)


def render_classification_prompt(text: str, template: PromptTemplate) -> str:
    """Full classification prompt text; shots must cover both classes."""
    if template.task != "classify":
        raise ValueError(f"expected a classify template, got task {template.task!r}")
    labels = {label for _, label in template.few_shots}
    if not {"0", "1"} <= labels:
        raise ValueError(
            f"classification shots must include both a 0 and a 1 example, got labels {sorted(labels)}"
        )
    return template.instruction + "\n" + _classification_body(text, template)


def render_prompt(text: str, template: PromptTemplate) -> str:
    if template.task == "translate":
        return render_translation_prompt(text, template)
    return render_classification_prompt(text, template)


def to_messages(text: str, template: PromptTemplate) -> list[dict]:
    """Chat mapping: one system message (instruction) + one user message."""
    render_prompt(text, template)  # run the same validation
    body = (
        _translation_body(text, template)
        if template.task == "translate"
        else _classification_body(text, template)
    )
    return [
        {"role": "system", "content": template.instruction},
        {"role": "user", "content": body},
    ]


@dataclass(frozen=True)
class ParsedLabel:
    value: int | str  # 0, 1, or REFUSED
    raw_text: str

    @property
    def is_refused(self) -> bool:
        return self.value == REFUSED


def parse_label(raw: str) -> ParsedLabel:
    """Truncation rule: first non-whitespace character decides, else refusal."""
    stripped = raw.lstrip()
    if stripped[:1] == "1":
        return ParsedLabel(value=1, raw_text=raw)
    if stripped[:1] == "0":
        return ParsedLabel(value=0, raw_text=raw)
    return ParsedLabel(value=REFUSED, raw_text=raw)


@dataclass(frozen=True)
class LlmConfig:
    base_url: str = ""
    model_name: str = ""
    temperature: float = 0.0
    max_output_tokens: int = 256
    max_retries: int = 3
    request_timeout: float = 30.0
    concurrency_limit: int = 4
    api_key_env: str = "OPENAI_API_KEY"
    retry_backoff: float = 0.5

    def __post_init__(self):
        if self.temperature < 0:
            raise ValueError(f"temperature must be >= 0, got {self.temperature}")
        if self.concurrency_limit < 1:
            raise ValueError(f"concurrency_limit must be >= 1, got {self.concurrency_limit}")
        if self.max_retries < 0:
            raise ValueError(f"max_retries must be >= 0, got {self.max_retries}")

    @property
    def api_key(self) -> str | None:
        return os.environ.get(self.api_key_env)


def prompt_hash(prompt: str) -> str:
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


def template_fingerprint(template: PromptTemplate) -> str:
    """Stable hash of a template, for recording which shots a run used."""
    payload = json.dumps(
        {
            "task": template.task,
            "instruction": template.instruction,
            "few_shots": list(template.few_shots),
            "delimiter": template.delimiter,
        },
        ensure_ascii=False,
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode("utf-8")).hexdigest()


class ResponseCache:
    """Append-only JSONL cache keyed by (model_name, prompt hash).

    Reopening replays the log, so interrupted runs resume where they left
    off. Writes are serialized; the API key never touches this file.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._entries: dict[str, str] = {}
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    if not line.strip():
                        continue
                    entry = json.loads(line)
                    self._entries[entry["key"]] = entry["response"]
        else:
            self.path.parent.mkdir(parents=True, exist_ok=True)

    @staticmethod
    def key_for(model_name: str, prompt: str) -> str:
        return f"{model_name}:{prompt_hash(prompt)}"

    def get(self, model_name: str, prompt: str) -> str | None:
        with self._lock:
            return self._entries.get(self.key_for(model_name, prompt))

    def put(self, model_name: str, prompt: str, response: str) -> None:
        entry = {
            "key": self.key_for(model_name, prompt),
            "model": model_name,
            "prompt_hash": prompt_hash(prompt),
            "response": response,
            "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        }
        with self._lock:
            self._entries[entry["key"]] = entry["response"]
            with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
                fh.write(json.dumps(entry, ensure_ascii=False))
                fh.write("\n")

    def __len__(self) -> int:
        return len(self._entries)


class LlmClient:
    """Thread-safe chat-completions client with retry and a concurrency cap."""

    RETRYABLE_STATUSES = frozenset({429, 500, 502, 503, 504})

    def __init__(self, config: LlmConfig):
        self.config = config
        self._semaphore = threading.Semaphore(config.concurrency_limit)
        self._session = requests.Session()

    def complete(self, prompt: str | Sequence[dict]) -> str:
        """Send one completion request and return the assistant message text.

        ``prompt`` is either a plain string (sent as a single user message)
        or a prepared messages list. Transport failures, 429s, and 5xx
        responses are retried with exponential backoff up to max_retries.
        """
        if isinstance(prompt, str):
            messages = [{"role": "user", "content": prompt}]
        else:
            messages = list(prompt)
        body = {
            "model": self.config.model_name,
            "messages": messages,
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_output_tokens,
        }
        headers = {"Content-Type": "application/json"}
        api_key = self.config.api_key
        if api_key:
            headers["Authorization"] = f"Bearer {api_key}"
        url = self.config.base_url.rstrip("/") + "/chat/completions"

        last_error: Exception | None = None
        last_status: int | None = None
        with self._semaphore:
            for attempt in range(self.config.max_retries + 1):
                if attempt:
                    time.sleep(self.config.retry_backoff * 2 ** (attempt - 1))
                try:
                    response = self._session.post(
                        url, json=body, headers=headers, timeout=self.config.request_timeout
                    )
                except requests.RequestException as exc:
                    last_error, last_status = exc, None
                    continue
                if response.status_code in self.RETRYABLE_STATUSES:
                    last_error = None
                    last_status = response.status_code
                    continue
                if response.status_code != 200:
                    raise TransportError(
                        f"chat completion failed with HTTP {response.status_code}: "
                        f"{response.text[:200]}",
                        status=response.status_code,
                    )
                return self._extract_content(response)
        detail = f"HTTP {last_status}" if last_status is not None else repr(last_error)
        raise TransportError(
            f"chat completion failed after {self.config.max_retries + 1} attempts ({detail})",
            status=last_status,
        )

    @staticmethod
    def _extract_content(response) -> str:
        try:
            data = response.json()
        except ValueError as exc:
            raise ProtocolError(f"endpoint returned a non-JSON body: {exc}") from exc
        try:
            content = data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"response missing choices[0].message.content: {data!r}") from exc
        if not isinstance(content, str):
            raise ProtocolError(f"message content is not a string: {content!r}")
        return content


@dataclass(frozen=True)
class BatchSummary:
    requested: int
    completed: int
    from_cache: int
    failures: tuple[str, ...] = ()
    refusals: tuple[str, ...] = ()


@dataclass(frozen=True)
class TranslateResult:
    corpus: Corpus
    summary: BatchSummary


@dataclass(frozen=True)
class ClassifyResult:
    predictions: tuple[Prediction, ...]
    summary: BatchSummary


def _run_batch(
    examples: Sequence[Example],
    prompts: Sequence[str],
    messages: Sequence[list[dict]],
    config: LlmConfig,
    cache: ResponseCache,
) -> tuple[list[str | None], int, list[str]]:
    """Answer one prompt per example, via cache where possible.

    Returns per-example raw responses (None where all retries failed), the
    cache-hit count, and the failed example ids in corpus order.
    """
    client = LlmClient(config)
    responses: list[str | None] = [None] * len(examples)
    errors: dict[int, Exception] = {}
    from_cache = 0
    todo: list[int] = []
    for i, prompt in enumerate(prompts):
        cached = cache.get(config.model_name, prompt)
        if cached is not None:
            responses[i] = cached
            from_cache += 1
        else:
            todo.append(i)

    def worker(i: int) -> None:
        try:
            raw = client.complete(messages[i])
        except (TransportError, ProtocolError) as exc:
            errors[i] = exc
            return
        cache.put(config.model_name, prompts[i], raw)
        responses[i] = raw

    if todo:
        with ThreadPoolExecutor(max_workers=config.concurrency_limit) as pool:
            list(pool.map(worker, todo))

    failures = [examples[i].id for i in sorted(errors)]
    return responses, from_cache, failures


def translate_corpus(
    corpus: Corpus,
    template: PromptTemplate,
    config: LlmConfig,
    cache_path: str | Path,
) -> TranslateResult:
    """Fill text_target for every example via the translation prompt.

    Responses are cached by (model, prompt hash); reruns resume from the
    cache. Examples whose requests still fail after retries keep a null
    text_target and are listed in the summary.
    """
    examples = list(corpus.examples)
    prompts = [render_translation_prompt(ex.text_source, template) for ex in examples]
    msgs = [to_messages(ex.text_source, template) for ex in examples]
    cache = ResponseCache(cache_path)
    responses, from_cache, failures = _run_batch(examples, prompts, msgs, config, cache)

    translated = tuple(
        ex if raw is None else replace(ex, text_target=raw)
        for ex, raw in zip(examples, responses)
    )
    meta = dict(corpus.metadata)
    meta["translation_model"] = config.model_name
    meta["translation_template_sha256"] = template_fingerprint(template)
    summary = BatchSummary(
        requested=len(examples),
        completed=sum(1 for r in responses if r is not None),
        from_cache=from_cache,
        failures=tuple(failures),
    )
    return TranslateResult(corpus=Corpus(translated, meta), summary=summary)


def classify_corpus(
    corpus: Corpus,
    template: PromptTemplate,
    config: LlmConfig,
    model_id: str,
    cache_path: str | Path,
    text_field: str = "text_target",
) -> ClassifyResult:
    """One prediction per example from the parsed 0/1 token (or a refusal).

    Classifies ``text_target`` when present (the translate-train path),
    falling back to ``text_source``. Cached and resumable like
    :func:`translate_corpus`; failed requests yield no record and are
    listed in the summary.
    """
    examples = list(corpus.examples)
    texts = [
        (ex.text_target if text_field == "text_target" and ex.text_target else ex.text_source)
        for ex in examples
    ]
    prompts = [render_classification_prompt(text, template) for text in texts]
    msgs = [to_messages(text, template) for text in texts]
    cache = ResponseCache(cache_path)
    responses, from_cache, failures = _run_batch(examples, prompts, msgs, config, cache)

    records: list[Prediction] = []
    refusals: list[str] = []
    for ex, raw in zip(examples, responses):
        if raw is None:
            continue
        parsed = parse_label(raw)
        if parsed.is_refused:
            refusals.append(ex.id)
            records.append(
                Prediction(model_id=model_id, example_id=ex.id, p_sarcastic=None, status="refused")
            )
        else:
            records.append(
                Prediction(
                    model_id=model_id,
                    example_id=ex.id,
                    p_sarcastic=float(parsed.value),
                    status="ok",
                )
            )
    summary = BatchSummary(
        requested=len(examples),
        completed=len(records),
        from_cache=from_cache,
        failures=tuple(failures),
        refusals=tuple(refusals),
    )
    return ClassifyResult(predictions=tuple(records), summary=summary)
