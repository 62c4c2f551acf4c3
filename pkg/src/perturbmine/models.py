"""Pluggable text classifiers exposing batched class-probability queries.

Anything with a ``score(texts) -> list of probability vectors`` method and
a ``label_names`` sequence can be attacked; the concrete scorers here are a
multinomial naive Bayes over surface tokens, a variant over phonetic codes
(so sound-alike rewrites cannot move it), and a client for remote scorers
speaking a small JSON-over-HTTP protocol.
"""

from __future__ import annotations

import json
import math
import os
import socket
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.exceptions import NotFittedError

from .attack import AttackConfig, attack
from .corpus import tokenize
from .errors import (
    DegenerateData,
    EmptyAfterFold,
    FormatError,
    IoFailure,
    MalformedResponse,
    NotCorrectlyPredicted,
    TimeoutFailure,
    TransportFailure,
)
from .phonetic import encode


class Scorer(Protocol):
    """Black-box classifier interface the attack loop relies on."""

    label_names: Sequence[str]

    def score(self, texts: Sequence[str]) -> list[list[float]]: ...


@dataclass
class LabeledDataset:
    """Texts with string labels, loadable from ``label<TAB>text`` files."""

    examples: list[tuple[str, str]] = field(default_factory=list)

    @property
    def texts(self) -> list[str]:
        return [text for text, _ in self.examples]

    @property
    def labels(self) -> list[str]:
        return [label for _, label in self.examples]

    def label_set(self) -> set[str]:
        return {label for _, label in self.examples}

    def __len__(self) -> int:
        return len(self.examples)

    @classmethod
    def from_tsv(cls, path: str | Path) -> "LabeledDataset":
        path = Path(path)
        try:
            lines = path.read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise IoFailure(f"cannot read dataset {path}: {exc}") from exc
        examples = []
        for lineno, line in enumerate(lines, start=1):
            if not line:
                continue
            label, sep, text = line.partition("\t")
            if not sep:
                raise FormatError(f"{path}:{lineno}: expected label<TAB>text")
            examples.append((text, label))
        return cls(examples=examples)


def _check_texts(texts) -> list[str]:
    if isinstance(texts, str):
        raise TypeError("expected a sequence of texts, got a single string")
    texts = list(texts)
    for t in texts:
        if not isinstance(t, str):
            raise TypeError(f"texts must be strings, got {type(t).__name__}")
    return texts


class NaiveBayesTextScorer(BaseEstimator):
    """Multinomial naive Bayes over unigram counts, add-one smoothed.

    Deterministic given the data: labels are kept sorted and probability is
    computed in log space, with one reserved vocabulary slot so unseen
    tokens still contribute the smoothed likelihood.
    """

    def __init__(self, case_sensitive: bool = False, smoothing: float = 1.0):
        self.case_sensitive = case_sensitive
        self.smoothing = smoothing

    def _features(self, text: str) -> list[str]:
        tokens = tokenize(text)
        if self.case_sensitive:
            return tokens
        return [token.casefold() for token in tokens]

    def fit(self, texts: Sequence[str], labels: Sequence[str]) -> "NaiveBayesTextScorer":
        if self.smoothing <= 0:
            raise ValueError(f"smoothing must be > 0, got {self.smoothing}")
        texts = _check_texts(texts)
        labels = [str(label) for label in labels]
        if len(texts) != len(labels):
            raise ValueError(f"{len(texts)} texts but {len(labels)} labels")
        classes = sorted(set(labels))
        if len(classes) < 2:
            raise DegenerateData(f"need at least 2 labels, got {len(classes)}")

        token_counts: dict[str, dict[str, int]] = {c: {} for c in classes}
        class_totals = {c: 0 for c in classes}
        class_docs = {c: 0 for c in classes}
        vocabulary: set[str] = set()
        for text, label in zip(texts, labels):
            class_docs[label] += 1
            counts = token_counts[label]
            for token in self._features(text):
                counts[token] = counts.get(token, 0) + 1
                class_totals[label] += 1
                vocabulary.add(token)

        self.classes_ = classes
        self.token_counts_ = token_counts
        self.class_totals_ = class_totals
        self.class_docs_ = class_docs
        self.vocab_size_ = len(vocabulary)
        self.n_docs_ = len(texts)
        return self

    def _check_fitted(self) -> None:
        if not hasattr(self, "classes_"):
            raise NotFittedError("scorer is not trained; call fit() or load()")

    @property
    def label_names(self) -> tuple[str, ...]:
        self._check_fitted()
        return tuple(self.classes_)

    def _log_joint(self, tokens: list[str]) -> list[float]:
        alpha = self.smoothing
        denominator_extra = alpha * (self.vocab_size_ + 1)
        out = []
        for label in self.classes_:
            counts = self.token_counts_[label]
            log_denom = math.log(self.class_totals_[label] + denominator_extra)
            total = math.log(self.class_docs_[label] / self.n_docs_)
            for token in tokens:
                total += math.log(counts.get(token, 0) + alpha) - log_denom
            out.append(total)
        return out

    def _proba_rows(self, texts: Sequence[str]) -> list[list[float]]:
        self._check_fitted()
        texts = _check_texts(texts)
        rows = []
        for text in texts:
            joint = self._log_joint(self._features(text))
            peak = max(joint)
            weights = [math.exp(v - peak) for v in joint]
            norm = sum(weights)
            rows.append([w / norm for w in weights])
        return rows

    def predict_proba(self, texts: Sequence[str]) -> np.ndarray:
        return np.asarray(self._proba_rows(texts), dtype=float)

    def score(self, texts: Sequence[str]) -> list[list[float]]:
        return self._proba_rows(texts)

    def predict(self, texts: Sequence[str]) -> list[str]:
        probabilities = self.predict_proba(texts)
        return [self.classes_[int(row.argmax())] for row in probabilities]

    def _state(self) -> dict:
        return {
            "format": "perturbmine-model",
            "kind": self._kind,
            "params": self.get_params(),
            "classes": self.classes_,
            "class_docs": self.class_docs_,
            "class_totals": self.class_totals_,
            "token_counts": self.token_counts_,
            "vocab_size": self.vocab_size_,
            "n_docs": self.n_docs_,
        }

    _kind = "surface"

    def save(self, path: str | Path) -> None:
        self._check_fitted()
        path = Path(path)
        tmp = path.with_name(f"{path.name}.tmp.{os.getpid()}")
        try:
            tmp.write_text(json.dumps(self._state(), ensure_ascii=False), encoding="utf-8")
            os.replace(tmp, path)
        except OSError as exc:
            raise IoFailure(f"cannot write model {path}: {exc}") from exc


class SoundInvariantScorer(NaiveBayesTextScorer):
    """Naive Bayes over level-``level`` phonetic codes instead of tokens.

    Tokens sharing a code are one feature, so replacing a word with any
    same-code variant leaves the probabilities exactly unchanged. Tokens
    that cannot be encoded are dropped.
    """

    _kind = "phonetic"

    def __init__(self, level: int = 1, smoothing: float = 1.0):
        self.level = level
        super().__init__(case_sensitive=False, smoothing=smoothing)

    def _features(self, text: str) -> list[str]:
        codes = []
        for token in tokenize(text):
            try:
                codes.append(encode(token, self.level).code)
            except EmptyAfterFold:
                continue
        return codes


def load_scorer(path: str | Path):
    """Load a scorer written by ``save`` on either local scorer class."""
    path = Path(path)
    try:
        state = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise IoFailure(f"cannot read model {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(state, dict) or state.get("format") != "perturbmine-model":
        raise FormatError(f"{path}: not a perturbmine model file")
    kind = state.get("kind")
    if kind == "surface":
        scorer = NaiveBayesTextScorer(**state["params"])
    elif kind == "phonetic":
        scorer = SoundInvariantScorer(**state["params"])
    else:
        raise FormatError(f"{path}: unknown model kind {kind!r}")
    try:
        scorer.classes_ = list(state["classes"])
        scorer.class_docs_ = {str(k): int(v) for k, v in state["class_docs"].items()}
        scorer.class_totals_ = {str(k): int(v) for k, v in state["class_totals"].items()}
        scorer.token_counts_ = {
            str(label): {str(t): int(c) for t, c in counts.items()}
            for label, counts in state["token_counts"].items()
        }
        scorer.vocab_size_ = int(state["vocab_size"])
        scorer.n_docs_ = int(state["n_docs"])
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise FormatError(f"{path}: incomplete model state: {exc}") from exc
    return scorer


class RemoteScorer:
    """Client for scorers behind ``POST {"texts": [...]}`` endpoints.

    Batches are split into ``batch_size`` chunks, requests are retried on
    transport failures, and every response is validated: one probability
    vector per text, in order, non-negative, summing to 1 within 1e-6.
    """

    def __init__(
        self,
        endpoint: str,
        timeout: float = 10.0,
        retries: int = 2,
        batch_size: int = 128,
        label_names: Sequence[str] | None = None,
    ):
        if batch_size < 1:
            raise ValueError(f"batch_size must be >= 1, got {batch_size}")
        self.endpoint = endpoint
        self.timeout = timeout
        self.retries = retries
        self.batch_size = batch_size
        self.label_names = tuple(label_names) if label_names is not None else None

    def _post(self, texts: list[str]) -> bytes:
        payload = json.dumps({"texts": texts}).encode("utf-8")
        request = urllib.request.Request(
            self.endpoint, data=payload, headers={"Content-Type": "application/json"}
        )
        last: Exception | None = None
        for _ in range(self.retries + 1):
            try:
                with urllib.request.urlopen(request, timeout=self.timeout) as response:
                    return response.read()
            except urllib.error.HTTPError as exc:
                if 500 <= exc.code < 600:
                    last = exc
                    continue
                raise TransportFailure(f"{self.endpoint} answered HTTP {exc.code}") from exc
            except (socket.timeout, TimeoutError) as exc:
                last = exc
                continue
            except urllib.error.URLError as exc:
                if isinstance(exc.reason, (socket.timeout, TimeoutError)):
                    last = exc
                    continue
                last = exc
                continue
        if isinstance(last, (socket.timeout, TimeoutError)) or (
            isinstance(last, urllib.error.URLError)
            and isinstance(getattr(last, "reason", None), (socket.timeout, TimeoutError))
        ):
            raise TimeoutFailure(f"{self.endpoint} did not answer within {self.timeout}s") from last
        raise TransportFailure(f"{self.endpoint} is unreachable: {last}") from last

    def _score_chunk(self, texts: list[str]) -> list[list[float]]:
        body = self._post(texts)
        try:
            payload = json.loads(body)
        except json.JSONDecodeError as exc:
            raise MalformedResponse(f"{self.endpoint}: response is not JSON") from exc
        if not isinstance(payload, dict) or "probabilities" not in payload:
            raise MalformedResponse(f"{self.endpoint}: missing 'probabilities' key")
        vectors = payload["probabilities"]
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise MalformedResponse(
                f"{self.endpoint}: expected {len(texts)} probability vectors"
            )
        width = None
        out = []
        for vector in vectors:
            if not isinstance(vector, list) or not vector:
                raise MalformedResponse(f"{self.endpoint}: bad probability vector {vector!r}")
            if width is None:
                width = len(vector)
            elif len(vector) != width:
                raise MalformedResponse(f"{self.endpoint}: ragged probability vectors")
            values = []
            for value in vector:
                if not isinstance(value, (int, float)) or value < -1e-9:
                    raise MalformedResponse(f"{self.endpoint}: bad probability {value!r}")
                values.append(float(value))
            if abs(sum(values) - 1.0) > 1e-6:
                raise MalformedResponse(
                    f"{self.endpoint}: probabilities sum to {sum(values)!r}"
                )
            out.append(values)
        return out

    def score(self, texts: Sequence[str]) -> list[list[float]]:
        texts = _check_texts(texts)
        out: list[list[float]] = []
        for start in range(0, len(texts), self.batch_size):
            out.extend(self._score_chunk(texts[start : start + self.batch_size]))
        return out


class _ScorerHTTPServer(ThreadingHTTPServer):
    daemon_threads = True

    def __init__(self, address, handler, scorer):
        super().__init__(address, handler)
        self.scorer = scorer


class _ScorerRequestHandler(BaseHTTPRequestHandler):
    def _reply(self, status: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def do_POST(self) -> None:  # noqa: N802 (http.server API)
        length = int(self.headers.get("Content-Length", 0))
        raw = self.rfile.read(length)
        try:
            payload = json.loads(raw)
            texts = payload["texts"]
            if not isinstance(texts, list) or any(not isinstance(t, str) for t in texts):
                raise ValueError("texts must be a list of strings")
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            self._reply(400, {"error": f"bad request: {exc}"})
            return
        try:
            probabilities = self.server.scorer.score(texts)
        except Exception as exc:  # surface scorer bugs as a server error
            self._reply(500, {"error": str(exc)})
            return
        self._reply(200, {"probabilities": probabilities})

    def log_message(self, *args) -> None:
        pass


def serve_scorer(scorer, host: str = "127.0.0.1", port: int = 0) -> _ScorerHTTPServer:
    """Bind an HTTP server exposing ``scorer`` over the wire protocol.

    The caller drives it (``serve_forever`` in a thread, ``shutdown`` to
    stop). ``server_address`` holds the actual port when 0 was requested.
    """
    return _ScorerHTTPServer((host, port), _ScorerRequestHandler, scorer)


def augment_adversarial(
    data: LabeledDataset,
    index,
    scorer,
    config: AttackConfig,
    ratio: float = 1.0,
) -> LabeledDataset:
    """Append self-attack perturbations of ``data`` with their original labels.

    Examples are attacked in dataset order until ``floor(ratio * len(data))``
    successes are collected; failures and already-mispredicted examples
    contribute nothing. The originals are always retained.
    """
    if ratio < 0:
        raise ValueError(f"ratio must be >= 0, got {ratio}")
    limit = math.floor(ratio * len(data))
    added: list[tuple[str, str]] = []
    for text, label in data.examples:
        if len(added) >= limit:
            break
        try:
            outcome = attack(scorer, text, label, config, index)
        except NotCorrectlyPredicted:
            continue
        if outcome.success:
            added.append((outcome.perturbed, label))
    return LabeledDataset(examples=list(data.examples) + added)
