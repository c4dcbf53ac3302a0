"""Dynamic prompt construction and the compressed-toolbox layout.

A prompt is assembled from an agent instruction, an optional tool section,
and the shared message history. The tool section has three modes:

  * full-text:   every definition inlined verbatim
  * retrieved:   only the top-K retrieved definitions inlined
  * compressed:  the text is dropped; each tool becomes one embedding slot
                 at the head of the prompt

Compressed slots all carry position index 0; the first real prompt token
starts at 1. Slots may attend only to themselves, every prompt token may
attend to every slot, and the prompt region itself stays causal. Slot
embeddings are frozen inputs: the layout marks them non-trainable.
"""

from __future__ import annotations

import hashlib
import re
import threading
from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .catalog import AgentKind, DYNAMIC_TOOL_AGENTS, ToolCatalog, ToolDefinition
from .history import MessageHistory


class MissingTools(ValueError):
    """A dynamic-toolbox agent was rendered without its tool list."""


class ProviderUnavailable(RuntimeError):
    """The configured embedding provider cannot serve requests."""


class Tokenizer(Protocol):
    def tokens(self, text: str) -> list[str]: ...

    def count(self, text: str) -> int: ...


class SimpleTokenizer:
    """Deterministic whitespace-plus-punctuation tokenizer.

    A token is a maximal ``\\w+`` run or a single non-space punctuation
    character. Identifiers like ``get_maps_places`` stay one token.
    """

    _TOKEN_RE = re.compile(r"\w+|[^\w\s]")

    def tokens(self, text: str) -> list[str]:
        return self._TOKEN_RE.findall(text)

    def count(self, text: str) -> int:
        return len(self.tokens(text))


@dataclass(frozen=True)
class PromptMode:
    kind: str  # "full_text" | "retrieved" | "compressed"
    k: int | None = None


FULL_TEXT = PromptMode("full_text")
COMPRESSED = PromptMode("compressed")


def retrieved(k: int) -> PromptMode:
    if k < 1:
        raise ValueError("retrieved mode needs K >= 1")
    return PromptMode("retrieved", k)


DEFAULT_INSTRUCTIONS: dict[AgentKind, str] = {
    AgentKind.HIGH_ORDER_REASONING: (
        "Now your task is to select the next expert agent to invoke based on the "
        "message history. Choose one of: Device Information Agent, User Perception "
        "Agent, Personal Context Agent, External Knowledge Agent, Task Completion "
        "Agent. Respond with the agent name in brackets."
    ),
    AgentKind.DEVICE_INFORMATION: (
        "Now your task is to generate accurate and helpful API calls to retrieve "
        "device information based on the message history."
    ),
    AgentKind.USER_PERCEPTION: "",
    AgentKind.PERSONAL_CONTEXT: (
        "Now your task is to generate accurate and helpful API calls to retrieve "
        "personal context based on the message history."
    ),
    AgentKind.EXTERNAL_KNOWLEDGE: (
        "Now your task is to generate accurate and helpful API calls to retrieve "
        "relevant facts or public information based on the message history."
    ),
    AgentKind.TASK_COMPLETION: (
        "Now your task is to generate accurate and personalized textual response "
        "and task completion API calls for user based on the message history."
    ),
}

TOOL_HEADER = "Here are available API calls:"
HISTORY_HEADER = "Here is the message history:"


@dataclass(frozen=True)
class PromptSpec:
    """Inputs to the template formatting function for one agent turn."""

    agent: AgentKind
    history: MessageHistory
    tools: Sequence[ToolDefinition] | None = None
    mode: PromptMode = FULL_TEXT
    instruction: str | None = None  # None picks the agent default
    include_instruction: bool = True
    examples: str | None = None  # optional trailing block, e.g. few-shot cue


@dataclass(frozen=True)
class PromptLayout:
    """Token-level layout: slots, positions, attention rules, and counts."""

    function_slots: tuple[tuple[str, int], ...]
    prompt_token_count: int
    counts: dict[str, int]
    slots_trainable: bool = False  # slot embeddings are frozen inputs

    @property
    def slot_count(self) -> int:
        return len(self.function_slots)

    @property
    def total_positions(self) -> int:
        return self.slot_count + self.prompt_token_count

    def position_indices(self) -> list[int]:
        """All slots share index 0; prompt tokens count up from 1."""
        return [0] * self.slot_count + list(range(1, self.prompt_token_count + 1))

    def attention_allowed(self, query: int, key: int) -> bool:
        """Single-cell attention rule over the combined slot+prompt sequence."""
        s = self.slot_count
        if query < s:
            return key == query
        if key < s:
            return True
        return key <= query

    def attention_mask(self) -> np.ndarray:
        """Dense boolean mask, mask[q, k] == query q may attend to key k."""
        s, n = self.slot_count, self.prompt_token_count
        size = s + n
        mask = np.zeros((size, size), dtype=bool)
        if s:
            idx = np.arange(s)
            mask[idx, idx] = True
            mask[s:, :s] = True
        if n:
            mask[s:, s:] = np.tril(np.ones((n, n), dtype=bool))
        return mask


@dataclass(frozen=True)
class RenderedPrompt:
    text: str
    messages: tuple[dict[str, str], ...]  # chat-style (system, user) pair
    layout: PromptLayout

    @property
    def system_text(self) -> str:
        return self.messages[0]["content"] if len(self.messages) > 1 else ""

    @property
    def user_text(self) -> str:
        return self.messages[-1]["content"]


def build_layout(
    tools: Sequence[ToolDefinition] | None,
    rendered_prompt: str,
    tokenizer: Tokenizer,
    history_text: str = "",
) -> PromptLayout:
    """Compute the slot/position/attention layout for an already-rendered prompt."""
    slots = tuple((t.name, i) for i, t in enumerate(tools or ()))
    total = tokenizer.count(rendered_prompt)
    history_tokens = tokenizer.count(history_text)
    return PromptLayout(
        function_slots=slots,
        prompt_token_count=total,
        counts={
            "static_tokens": total - history_tokens,
            "history_tokens": history_tokens,
            "function_slots": len(slots),
        },
    )


def render_prompt(spec: PromptSpec, tokenizer: Tokenizer | None = None) -> RenderedPrompt:
    """Assemble the prompt text, the chat messages, and the layout."""
    tokenizer = tokenizer or SimpleTokenizer()
    tools = spec.tools
    if tools is None and spec.agent in DYNAMIC_TOOL_AGENTS:
        raise MissingTools(f"{spec.agent.label} prompts need the device toolset")

    system_parts: list[str] = []
    if spec.include_instruction:
        instruction = spec.instruction if spec.instruction is not None else DEFAULT_INSTRUCTIONS[spec.agent]
        if instruction:
            system_parts.append(instruction)
    slot_tools: Sequence[ToolDefinition] = ()
    if tools:
        if spec.mode.kind == "compressed":
            slot_tools = tools
        else:
            if spec.mode.kind == "retrieved" and len(tools) > (spec.mode.k or 0):
                raise ValueError(f"retrieved mode K={spec.mode.k} got {len(tools)} tools")
            defs = "\n".join(t.definition_text() for t in tools)
            system_parts.append(f"{TOOL_HEADER}\n{defs}")

    history_text = spec.history.render()
    user_parts = [f"{HISTORY_HEADER}\n\n{history_text}"]
    if spec.examples:
        user_parts.append(spec.examples)

    system_text = "\n\n".join(system_parts)
    user_text = "\n\n".join(user_parts)
    text = f"{system_text}\n\n{user_text}" if system_text else user_text
    if system_text:
        messages = (
            {"role": "system", "content": system_text},
            {"role": "user", "content": user_text},
        )
    else:
        messages = ({"role": "user", "content": user_text},)
    layout = build_layout(slot_tools, text, tokenizer, history_text=history_text)
    return RenderedPrompt(text=text, messages=messages, layout=layout)


# ---------------------------------------------------------------------------
# Compression accounting

@dataclass(frozen=True)
class AgentCompressionRow:
    agent: AgentKind
    tool_count: int
    full_text_tool_tokens: int
    compressed_slots: int
    static_full_text_tokens: int
    static_compressed_tokens: int

    @property
    def tool_token_reduction(self) -> float:
        """Relative shrink of the tool section: 1 - slots/raw."""
        if self.full_text_tool_tokens == 0:
            return 0.0
        return 1.0 - self.compressed_slots / self.full_text_tool_tokens

    def to_json(self) -> dict:
        return {
            "agent": self.agent.value,
            "tool_count": self.tool_count,
            "full_text_tool_tokens": self.full_text_tool_tokens,
            "compressed_slots": self.compressed_slots,
            "tool_token_reduction": self.tool_token_reduction,
            "static_full_text_tokens": self.static_full_text_tokens,
            "static_compressed_tokens": self.static_compressed_tokens,
        }


@dataclass(frozen=True)
class CompressionReport:
    rows: tuple[AgentCompressionRow, ...]

    def row(self, agent: AgentKind) -> AgentCompressionRow:
        for r in self.rows:
            if r.agent is agent:
                return r
        raise KeyError(agent)

    def to_json(self) -> dict:
        return {"format_version": 1, "rows": [r.to_json() for r in self.rows]}

    def format_table(self) -> str:
        header = f"{'Agent':<30}{'Tool Tokens':>12}{'Slots':>8}{'Reduction':>11}"
        lines = [header, "-" * len(header)]
        for r in self.rows:
            lines.append(
                f"{r.agent.label:<30}{r.full_text_tool_tokens:>12}"
                f"{r.compressed_slots:>8}{-100 * r.tool_token_reduction:>10.2f}%"
            )
        return "\n".join(lines)


def token_report(catalog: ToolCatalog, tokenizer: Tokenizer | None = None) -> CompressionReport:
    """Per-agent static token accounting, full-text vs compressed.

    Static counts exclude the message history; the tool-token reduction is
    1 - slots/raw over the agent's tool section alone.
    """
    tokenizer = tokenizer or SimpleTokenizer()
    rows = []
    for agent in AgentKind:
        tools = catalog.owned_by(agent)
        if not tools:
            continue
        raw = sum(tokenizer.count(t.definition_text()) for t in tools)
        instruction_tokens = tokenizer.count(DEFAULT_INSTRUCTIONS[agent])
        header_tokens = tokenizer.count(TOOL_HEADER)
        rows.append(
            AgentCompressionRow(
                agent=agent,
                tool_count=len(tools),
                full_text_tool_tokens=raw,
                compressed_slots=len(tools),
                static_full_text_tokens=instruction_tokens + header_tokens + raw,
                static_compressed_tokens=instruction_tokens + len(tools),
            )
        )
    return CompressionReport(rows=tuple(rows))


# ---------------------------------------------------------------------------
# Function-definition embeddings (one vector per tool, the slot content)

class FunctionEmbeddingProvider(Protocol):
    @property
    def provider_id(self) -> str: ...

    def embed(self, text: str) -> np.ndarray: ...


class HashEmbeddingProvider:
    """Seeded hash projection: definition text -> deterministic unit vector.

    Model-free stand-in for a real last-token encoder; byte-stable across
    platforms and runs.
    """

    def __init__(self, dim: int = 64, seed: int = 0):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        self.dim = dim
        self.seed = seed

    @property
    def provider_id(self) -> str:
        return f"hash-{self.dim}-{self.seed}"

    def embed(self, text: str) -> np.ndarray:
        out = np.empty(self.dim, dtype=np.float64)
        filled = 0
        block = 0
        data = text.encode("utf-8")
        while filled < self.dim:
            digest = hashlib.blake2b(
                data, digest_size=64, salt=f"{self.seed}:{block}"[:16].encode()
            ).digest()
            vals = np.frombuffer(digest, dtype=">u8").astype(np.float64)
            vals = vals / 2.0**63 - 1.0  # [-1, 1)
            take = min(len(vals), self.dim - filled)
            out[filled : filled + take] = vals[:take]
            filled += take
            block += 1
        norm = float(np.linalg.norm(out))
        return out / norm if norm else out


_EMBED_CACHE: dict[tuple[str, str], np.ndarray] = {}
_EMBED_LOCK = threading.Lock()


def embed_function(definition_text: str, provider: FunctionEmbeddingProvider) -> np.ndarray:
    """Cached provider lookup keyed by (provider id, definition text)."""
    key = (provider.provider_id, definition_text)
    with _EMBED_LOCK:
        cached = _EMBED_CACHE.get(key)
    if cached is not None:
        return cached
    vector = provider.embed(definition_text)
    with _EMBED_LOCK:
        _EMBED_CACHE.setdefault(key, vector)
    return vector
