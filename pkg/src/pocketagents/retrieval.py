"""Top-K tool retrieval and recall@K curves for the RAG comparison."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Callable, Iterable, Protocol, Sequence

import numpy as np

from .catalog import AgentKind, ToolDefinition

_WORD_RE = re.compile(r"\w+")


class KOutOfRange(ValueError):
    pass


class Retriever(Protocol):
    def rank(
        self, query: str, candidates: Sequence[ToolDefinition]
    ) -> list[tuple[ToolDefinition, float]]: ...


def _order(scored: Iterable[tuple[ToolDefinition, float]]) -> list[tuple[ToolDefinition, float]]:
    # total order: score descending, ties broken by tool name
    return sorted(scored, key=lambda pair: (-pair[1], pair[0].name))


class LexicalRetriever:
    """Token-overlap scoring between the query and each definition text."""

    def rank(
        self, query: str, candidates: Sequence[ToolDefinition]
    ) -> list[tuple[ToolDefinition, float]]:
        q = {t.casefold() for t in _WORD_RE.findall(query)}
        scored = []
        for tool in candidates:
            d = {t.casefold() for t in _WORD_RE.findall(tool.definition_text())}
            scored.append((tool, float(len(q & d))))
        return _order(scored)


class EmbeddingRetriever:
    """Dense retrieval over any text-embedding function (e.g. the sidecar)."""

    def __init__(self, embed: Callable[[str], np.ndarray]):
        self._embed = embed

    def rank(
        self, query: str, candidates: Sequence[ToolDefinition]
    ) -> list[tuple[ToolDefinition, float]]:
        qv = np.asarray(self._embed(query), dtype=float)
        qn = np.linalg.norm(qv)
        scored = []
        for tool in candidates:
            dv = np.asarray(self._embed(tool.definition_text()), dtype=float)
            denom = qn * np.linalg.norm(dv)
            score = float(qv @ dv / denom) if denom else 0.0
            scored.append((tool, score))
        return _order(scored)


def retrieve_topk(
    query: str, candidates: Sequence[ToolDefinition], k: int, retriever: Retriever
) -> list[ToolDefinition]:
    if not 1 <= k <= len(candidates):
        raise KOutOfRange(f"K={k} outside 1..{len(candidates)}")
    return [tool for tool, _ in retriever.rank(query, candidates)[:k]]


@dataclass(frozen=True)
class RecallPoint:
    k: int
    recall: float


@dataclass(frozen=True)
class RecallCurve:
    agent: AgentKind
    points: tuple[RecallPoint, ...]
    query_count: int
    skipped_empty_gold: int = 0

    def recall_at(self, k: int) -> float:
        for p in self.points:
            if p.k == k:
                return p.recall
        raise KeyError(k)

    def to_json(self) -> dict:
        return {
            "agent": self.agent.value,
            "query_count": self.query_count,
            "skipped_empty_gold": self.skipped_empty_gold,
            "points": [{"k": p.k, "recall": p.recall} for p in self.points],
        }

    def format_table(self) -> str:
        lines = [f"{self.agent.label} (queries={self.query_count})", f"{'K':>4}  recall"]
        for p in self.points:
            lines.append(f"{p.k:>4}  {p.recall:.4f}")
        return "\n".join(lines)


def recall_at_k(
    gold_tool_sets: Sequence[tuple[str, frozenset[str]]],
    candidates: Sequence[ToolDefinition],
    k: int,
    retriever: Retriever,
) -> tuple[float, int]:
    """Macro-averaged recall@K over (query, gold tool names) pairs.

    Returns (mean recall, number of queries skipped for empty gold).
    """
    recalls = []
    skipped = 0
    for query, gold in gold_tool_sets:
        if not gold:
            skipped += 1
            continue
        top = {t.name for t in retrieve_topk(query, candidates, k, retriever)}
        recalls.append(len(gold & top) / len(gold))
    mean = sum(recalls) / len(recalls) if recalls else 0.0
    return mean, skipped


def recall_curve(
    gold_tool_sets: Sequence[tuple[str, frozenset[str]]],
    candidates: Sequence[ToolDefinition],
    agent: AgentKind,
    retriever: Retriever,
    ks: Iterable[int] | None = None,
) -> RecallCurve:
    ks = list(ks) if ks is not None else list(range(1, len(candidates) + 1))
    points = []
    skipped = 0
    for k in ks:
        mean, skipped = recall_at_k(gold_tool_sets, candidates, k, retriever)
        points.append(RecallPoint(k=k, recall=mean))
    scored_count = sum(1 for _, gold in gold_tool_sets if gold)
    return RecallCurve(
        agent=agent, points=tuple(points), query_count=scored_count, skipped_empty_gold=skipped
    )
