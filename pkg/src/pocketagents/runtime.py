"""The hierarchical episode loop and the model backends that drive it.

Each step the orchestrator names an expert, the expert emits a call list,
the simulator executes it, and the results join the shared history. The
episode ends when the task completion agent emits its plan, when the step
budget runs out (truncated), or when the backend fails twice (aborted).

Backends only ever see rendered chat messages; device state is reachable
solely through the simulator's execute_call.
"""

from __future__ import annotations

import os
import re
import threading
import time
from dataclasses import dataclass
from typing import Mapping, Protocol, Sequence

import requests

from .calls import FunctionCall, ParseError, parse_call_list, serialize_call_list
from .catalog import AgentKind, DYNAMIC_TOOL_AGENTS, ToolCatalog, default_catalog
from .dataset import (
    Trajectory,
    TrajectoryStep,
    expert_turn_content,
    parse_task_completion,
    tc_block,
)
from .device import DeviceState, execute_call, render_result
from .history import MessageHistory, Turn
from .prompts import FULL_TEXT, PromptMode, PromptSpec, render_prompt
from .retrieval import LexicalRetriever, retrieve_topk


class BackendTransportError(RuntimeError):
    """Any failure to obtain a completion from a backend."""


class BackendTimeout(BackendTransportError):
    pass


class BackendHttpError(BackendTransportError):
    def __init__(self, status: int, body: str):
        super().__init__(f"backend returned HTTP {status}: {body[:200]}")
        self.status = status


class MalformedBackendResponse(BackendTransportError):
    pass


class UnrecognizedAgentName(ValueError):
    pass


class OutOfScriptError(RuntimeError):
    pass


class AgentBackend(Protocol):
    def complete(self, agent: AgentKind, messages: Sequence[Mapping[str, str]]) -> str: ...


# ---------------------------------------------------------------------------
# Agent-name parsing

def _aliases(baseline_mode: bool) -> dict[str, AgentKind]:
    table: dict[str, AgentKind] = {}
    for kind in AgentKind:
        label = kind.label
        camel = "".join(part.capitalize() for part in kind.value.split("_"))
        for alias in (label, label.removesuffix(" Agent"), kind.value, kind.value.replace("_", " "), camel):
            table[alias.casefold()] = kind
    if baseline_mode:
        # the flat-roster names map onto the core roles
        baseline = {
            "Information Agent": AgentKind.DEVICE_INFORMATION,
            "Perception Agent": AgentKind.USER_PERCEPTION,
            "Personal Context Retrieval Agent": AgentKind.PERSONAL_CONTEXT,
            "Tool Calling Agent": AgentKind.EXTERNAL_KNOWLEDGE,
            "Answer Agent": AgentKind.TASK_COMPLETION,
            "Reflection Agent": AgentKind.TASK_COMPLETION,
            "Response Submit Agent": AgentKind.TASK_COMPLETION,
        }
        for name, kind in baseline.items():
            table[name.casefold()] = kind
            table[name.removesuffix(" Agent").casefold()] = kind
    return table


_BRACKET_RE = re.compile(r"\[([^\[\]]+)\]")


def parse_agent_name(text: str, baseline_mode: bool = False) -> AgentKind:
    """Map a completion to an AgentKind.

    Accepts the bracketed form anywhere in the text (first recognizable
    bracket wins) and bare names; raises UnrecognizedAgentName otherwise.
    """
    table = _aliases(baseline_mode)
    stripped = text.strip()
    direct = stripped[1:-1] if stripped.startswith("[") and stripped.endswith("]") else stripped
    kind = table.get(direct.strip().casefold())
    if kind is not None:
        return kind
    for match in _BRACKET_RE.finditer(text):
        kind = table.get(match.group(1).strip().casefold())
        if kind is not None:
            return kind
    raise UnrecognizedAgentName(f"no agent recognizable in completion {text!r}")


# ---------------------------------------------------------------------------
# Episode loop

@dataclass(frozen=True)
class EpisodeConfig:
    max_steps: int = 20
    mode: PromptMode = FULL_TEXT
    include_instruction: bool = True
    baseline_mode: bool = False
    catalog: ToolCatalog | None = None
    examples: Mapping[AgentKind, str] | None = None  # optional trailing blocks

    def __post_init__(self):
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")

    def resolved_catalog(self) -> ToolCatalog:
        return self.catalog or default_catalog()


def _expert_tools(agent: AgentKind, catalog: ToolCatalog, state: DeviceState, config: "EpisodeConfig", query: str):
    if agent not in DYNAMIC_TOOL_AGENTS:
        return None
    tools = tuple(t for t in catalog.owned_by(agent) if t.name in state.installed_tools)
    if config.mode.kind == "retrieved" and tools:
        k = min(config.mode.k or len(tools), len(tools))
        tools = tuple(retrieve_topk(query, tools, k, LexicalRetriever()))
    return tools


def _render(agent: AgentKind, history: MessageHistory, config: EpisodeConfig, tools=None):
    examples = config.examples.get(agent) if config.examples else None
    return render_prompt(
        PromptSpec(
            agent=agent,
            history=history,
            tools=tools,
            mode=config.mode,
            include_instruction=config.include_instruction,
            examples=examples,
        )
    )


def select_next_agent(
    backend: AgentBackend, history: MessageHistory, config: EpisodeConfig | None = None
) -> AgentKind:
    """Ask the orchestrator which expert acts next; one retry, then raise."""
    config = config or EpisodeConfig()
    last_error: Exception | None = None
    for _ in range(2):
        rendered = _render(AgentKind.HIGH_ORDER_REASONING, history, config)
        completion = backend.complete(AgentKind.HIGH_ORDER_REASONING, rendered.messages)
        try:
            agent = parse_agent_name(completion, config.baseline_mode)
            if agent is AgentKind.HIGH_ORDER_REASONING:
                raise UnrecognizedAgentName("the orchestrator cannot select itself")
            return agent
        except UnrecognizedAgentName as exc:
            last_error = exc
    raise UnrecognizedAgentName(f"orchestrator failed twice: {last_error}")


def _expert_completion(
    backend: AgentBackend,
    agent: AgentKind,
    history: MessageHistory,
    config: EpisodeConfig,
    state: DeviceState,
    catalog: ToolCatalog,
) -> tuple[str, list[FunctionCall]]:
    """Query the expert and parse its output; one retry, then raise ParseError."""
    tools = _expert_tools(agent, catalog, state, config, history.query)
    last_error: Exception | None = None
    for _ in range(2):
        rendered = _render(agent, history, config, tools)
        completion = backend.complete(agent, rendered.messages)
        try:
            if agent is AgentKind.TASK_COMPLETION:
                response, calls = parse_task_completion(completion)
            else:
                response, calls = "", parse_call_list(completion.strip())
            return response, calls
        except ParseError as exc:
            last_error = exc
    raise last_error  # type: ignore[misc]


def run_episode(
    backend: AgentBackend,
    state: DeviceState,
    query: str,
    config: EpisodeConfig | None = None,
    query_id: str = "q0",
) -> Trajectory:
    """Run one episode to completion, truncation, or abort.

    The caller owns the state's effects log; clone_for_episode() gives a
    fresh one. All executed calls, including the final plan, land there.
    """
    config = config or EpisodeConfig()
    catalog = config.resolved_catalog()
    history = MessageHistory([Turn.user(query)])
    trajectory = Trajectory(
        query_id=query_id,
        query=query,
        device_state_ref=state.state_id,
        steps=[],
        status="truncated",
    )
    for _ in range(config.max_steps):
        try:
            agent = select_next_agent(backend, history, config)
        except (UnrecognizedAgentName, BackendTransportError, OutOfScriptError) as exc:
            trajectory.status = "aborted"
            trajectory.abort_reason = str(exc)
            return trajectory
        history.append(Turn.agent(AgentKind.HIGH_ORDER_REASONING, f"[{agent.label}]"))

        if agent is AgentKind.USER_PERCEPTION:
            # single zero-arg tool: no model call needed
            response, calls = "", [FunctionCall("get_intent")]
        else:
            try:
                response, calls = _expert_completion(backend, agent, history, config, state, catalog)
            except (ParseError, BackendTransportError, OutOfScriptError) as exc:
                trajectory.status = "aborted"
                trajectory.abort_reason = f"{agent.label}: {exc}"
                return trajectory

        results = tuple(execute_call(state, call, catalog) for call in calls)
        step = TrajectoryStep(agent=agent, calls=tuple(calls), results=results)
        trajectory.steps.append(step)
        if agent is AgentKind.TASK_COMPLETION:
            trajectory.status = "completed"
            trajectory.final_plan = list(calls)
            trajectory.final_response = response
            history.append(Turn.agent(agent, tc_block(response, calls, catalog)))
            return trajectory
        history.append(Turn.agent(agent, serialize_call_list(calls, catalog)))
        for result in results:
            history.append(Turn.execution(render_result(result)))
    return trajectory


# ---------------------------------------------------------------------------
# Backends

_USER_LINE_RE = re.compile(r"\[User\]: (.*)")


class ScriptedOracle:
    """Replays gold trajectories verbatim: the orchestrator choice and the
    expert emission for each step, keyed by the user query found in the
    rendered prompt. Deterministic; raises OutOfScriptError past the end.
    """

    def __init__(self, trajectories: Sequence[Trajectory], catalog: ToolCatalog | None = None):
        catalog = catalog or default_catalog()
        self._scripts: dict[str, list[tuple[AgentKind, str]]] = {}
        self._cursors: dict[str, int] = {}
        self._lock = threading.Lock()
        for t in trajectories:
            script: list[tuple[AgentKind, str]] = []
            for step in t.steps:
                script.append((AgentKind.HIGH_ORDER_REASONING, f"[{step.agent.label}]"))
                if step.agent is not AgentKind.USER_PERCEPTION:
                    script.append((step.agent, expert_turn_content(step, t.final_response, catalog)))
            if t.query in self._scripts:
                raise ValueError(f"duplicate query text in oracle dataset: {t.query!r}")
            self._scripts[t.query] = script

    @staticmethod
    def _query_of(messages: Sequence[Mapping[str, str]]) -> str:
        for message in messages:
            match = _USER_LINE_RE.search(message.get("content", ""))
            if match:
                return match.group(1)
        raise OutOfScriptError("no [User] line found in the rendered prompt")

    def complete(self, agent: AgentKind, messages: Sequence[Mapping[str, str]]) -> str:
        query = self._query_of(messages)
        script = self._scripts.get(query)
        if script is None:
            raise OutOfScriptError(f"no script for query {query!r}")
        with self._lock:
            cursor = self._cursors.get(query, 0)
            if cursor >= len(script):
                raise OutOfScriptError(f"script for {query!r} exhausted at action {cursor}")
            expected_agent, completion = script[cursor]
            if expected_agent is not agent:
                raise OutOfScriptError(
                    f"script expected {expected_agent.label} at action {cursor}, got {agent.label}"
                )
            self._cursors[query] = cursor + 1
        return completion

    def reset(self) -> None:
        with self._lock:
            self._cursors.clear()


def scripted_oracle(trajectories: Sequence[Trajectory], catalog: ToolCatalog | None = None) -> ScriptedOracle:
    return ScriptedOracle(trajectories, catalog)


DEFAULT_AUTH_ENV = "POCKETAGENTS_BACKEND_TOKEN"


class HttpBackend:
    """Chat-style HTTP backend compatible with chat-completions servers.

    Posts {model?, messages, temperature, seed?, max_tokens?} and reads the
    completion from choices[0].message.content (or a flat "completion"
    field). Timeouts and connection errors are retried; HTTP statuses and
    malformed bodies are reported distinctly.
    """

    def __init__(
        self,
        endpoint: str,
        model: str | None = None,
        temperature: float = 0.0,
        seed: int | None = None,
        max_tokens: int | None = None,
        timeout: float = 30.0,
        retries: int = 2,
        backoff: float = 0.0,
        auth_env: str = DEFAULT_AUTH_ENV,
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint
        self.model = model
        self.temperature = temperature
        self.seed = seed
        self.max_tokens = max_tokens
        self.timeout = timeout
        self.retries = retries
        self.backoff = backoff
        self.auth_env = auth_env
        self._session = session or requests.Session()

    def _headers(self) -> dict[str, str]:
        headers = {"Content-Type": "application/json"}
        token = os.environ.get(self.auth_env)
        if token:
            headers["Authorization"] = f"Bearer {token}"
        return headers

    def complete(self, agent: AgentKind, messages: Sequence[Mapping[str, str]]) -> str:
        body: dict = {"messages": [dict(m) for m in messages], "temperature": self.temperature}
        if self.model:
            body["model"] = self.model
        if self.seed is not None:
            body["seed"] = self.seed
        if self.max_tokens is not None:
            body["max_tokens"] = self.max_tokens
        attempts = self.retries + 1
        last_exc: BackendTransportError | None = None
        for attempt in range(attempts):
            try:
                response = self._session.post(
                    self.endpoint, json=body, timeout=self.timeout, headers=self._headers()
                )
            except requests.Timeout:
                last_exc = BackendTimeout(f"backend timed out after {self.timeout}s")
            except requests.RequestException as exc:
                last_exc = BackendTransportError(f"transport failure: {exc}")
            else:
                if response.status_code != 200:
                    raise BackendHttpError(response.status_code, response.text)
                try:
                    doc = response.json()
                except ValueError as exc:
                    raise MalformedBackendResponse(f"body is not JSON: {exc}") from None
                try:
                    if "choices" in doc:
                        return doc["choices"][0]["message"]["content"]
                    return doc["completion"]
                except (KeyError, IndexError, TypeError):
                    raise MalformedBackendResponse(
                        f"no completion found in response keys {sorted(doc)}"
                    ) from None
            if attempt + 1 < attempts and self.backoff:
                time.sleep(self.backoff * (attempt + 1))
        assert last_exc is not None
        raise last_exc


def http_backend(endpoint: str, **kwargs) -> HttpBackend:
    return HttpBackend(endpoint, **kwargs)
