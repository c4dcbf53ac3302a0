"""Trajectory datasets: JSONL persistence, history reconstruction, flattening
into prompt-completion pairs, and schema validation.

One dataset line is one query's full gold annotation: the device-state
reference, the ordered expert steps with their execution results, the final
task-completion plan, and the textual response.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .calls import FunctionCall, parse_call, parse_call_list, serialize_call, serialize_call_list
from .catalog import AgentKind, DYNAMIC_TOOL_AGENTS, ToolCatalog, default_catalog
from .device import DeviceState, ExecutionResult, Record, render_result
from .history import MessageHistory, Turn
from .prompts import FULL_TEXT, PromptMode, PromptSpec, render_prompt
from .retrieval import LexicalRetriever, retrieve_topk

TC_RESPONSE_HEADER = "Textual Response:"
TC_CALLS_HEADER = "Task Completion API Calls:"

TRAJECTORY_STATUSES = ("completed", "truncated", "aborted")


@dataclass(frozen=True)
class TrajectoryStep:
    agent: AgentKind
    calls: tuple[FunctionCall, ...]
    results: tuple[ExecutionResult, ...]


@dataclass
class Trajectory:
    query_id: str
    query: str
    device_state_ref: str
    steps: list[TrajectoryStep]
    final_plan: list[FunctionCall] = field(default_factory=list)
    final_response: str = ""
    status: str = "completed"
    split: str | None = None
    abort_reason: str | None = None

    def gold_tools(self, agent: AgentKind) -> frozenset[str]:
        """Names of every function this agent invoked in the gold steps."""
        names = set()
        for step in self.steps:
            if step.agent is agent:
                names.update(c.name for c in step.calls)
        return frozenset(names)

    def to_json(self) -> dict:
        doc: dict[str, Any] = {
            "format_version": 1,
            "query_id": self.query_id,
            "query": self.query,
            "device_state_ref": self.device_state_ref,
            "status": self.status,
        }
        if self.split is not None:
            doc["split"] = self.split
        if self.abort_reason is not None:
            doc["abort_reason"] = self.abort_reason
        doc["steps"] = [
            {
                "agent": step.agent.value,
                "calls": [serialize_call(c) for c in step.calls],
                "results": [r.to_json() for r in step.results],
            }
            for step in self.steps
        ]
        doc["final_plan"] = [serialize_call(c) for c in self.final_plan]
        doc["final_response"] = self.final_response
        return doc


def _result_from_json(doc: Mapping[str, Any]) -> ExecutionResult:
    call = parse_call(doc["call"])
    if "records" in doc:
        records = []
        for r in doc["records"]:
            ts = r.get("timestamp")
            records.append(
                Record(
                    id=r["id"],
                    app=r.get("app", ""),
                    fields=dict(r.get("fields", {})),
                    timestamp=datetime.fromisoformat(ts) if ts else None,
                )
            )
        return ExecutionResult(doc["status"], records, call)
    return ExecutionResult(doc["status"], doc.get("text", ""), call)


def trajectory_from_json(doc: Mapping[str, Any]) -> Trajectory:
    steps = []
    for step_doc in doc.get("steps", ()):
        steps.append(
            TrajectoryStep(
                agent=AgentKind(step_doc["agent"]),
                calls=tuple(parse_call(c) for c in step_doc.get("calls", ())),
                results=tuple(_result_from_json(r) for r in step_doc.get("results", ())),
            )
        )
    return Trajectory(
        query_id=doc["query_id"],
        query=doc["query"],
        device_state_ref=doc.get("device_state_ref", ""),
        steps=steps,
        final_plan=[parse_call(c) for c in doc.get("final_plan", ())],
        final_response=doc.get("final_response", ""),
        status=doc.get("status", "completed"),
        split=doc.get("split"),
        abort_reason=doc.get("abort_reason"),
    )


def load_trajectories(path: str | Path) -> list[Trajectory]:
    trajectories = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}:{line_no}: not valid JSON: {exc}") from None
        trajectories.append(trajectory_from_json(doc))
    return trajectories


def save_trajectories(trajectories: Iterable[Trajectory], path: str | Path) -> None:
    lines = [json.dumps(t.to_json(), ensure_ascii=False) for t in trajectories]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# History reconstruction (the exact turn sequence an episode produces)

def quoted_call_list(calls: Sequence[FunctionCall], catalog: ToolCatalog | None = None) -> str:
    """The double-quoted list form used inside task-completion blocks."""
    quoted = []
    for call in calls:
        text = serialize_call(call, catalog)
        quoted.append('"' + text.replace("\\", "\\\\").replace('"', '\\"') + '"')
    return "[" + ", ".join(quoted) + "]"


def tc_block(response: str, calls: Sequence[FunctionCall], catalog: ToolCatalog | None = None) -> str:
    """The task-completion agent's two-part completion."""
    return f"{TC_RESPONSE_HEADER}\n{response}\n\n{TC_CALLS_HEADER}\n{quoted_call_list(calls, catalog)}"


def parse_task_completion(text: str) -> tuple[str, list[FunctionCall]]:
    """Split a task-completion completion into (response text, plan).

    Without the calls header the whole text must itself be a call list.
    Raises ParseError when the plan section does not parse.
    """
    if TC_CALLS_HEADER in text:
        before, _, after = text.partition(TC_CALLS_HEADER)
        response = before
        if TC_RESPONSE_HEADER in before:
            response = before.partition(TC_RESPONSE_HEADER)[2]
        return response.strip(), parse_call_list(after.strip())
    return "", parse_call_list(text.strip())


def expert_turn_content(step: TrajectoryStep, final_response: str, catalog: ToolCatalog | None = None) -> str:
    if step.agent is AgentKind.TASK_COMPLETION:
        return tc_block(final_response, step.calls, catalog)
    return serialize_call_list(step.calls, catalog)


def trajectory_to_history(trajectory: Trajectory, catalog: ToolCatalog | None = None) -> MessageHistory:
    """Rebuild the full message history an episode following this trajectory
    produces: user turn, then per step the orchestrator turn, the expert turn,
    and one execution-result turn per call (none after task completion).
    """
    catalog = catalog or default_catalog()
    history = MessageHistory([Turn.user(trajectory.query)])
    for step in trajectory.steps:
        history.append(Turn.agent(AgentKind.HIGH_ORDER_REASONING, f"[{step.agent.label}]"))
        history.append(Turn.agent(step.agent, expert_turn_content(step, trajectory.final_response, catalog)))
        if step.agent is not AgentKind.TASK_COMPLETION:
            for result in step.results:
                history.append(Turn.execution(render_result(result)))
    return history


# ---------------------------------------------------------------------------
# Flattening into prompt-completion pairs

@dataclass(frozen=True)
class PromptCompletionPair:
    query_id: str
    step_index: int
    agent: AgentKind  # the agent being trained to produce the completion
    prompt: str
    completion: str

    def to_json(self) -> dict:
        return {
            "query_id": self.query_id,
            "step_index": self.step_index,
            "agent": self.agent.value,
            "prompt": self.prompt,
            "completion": self.completion,
        }


def model_action_count(trajectory: Trajectory) -> int:
    """Number of model predictions in the trajectory: one orchestrator choice
    per step plus one expert emission per step, except that the user
    perception agent acts without the model.
    """
    count = 0
    for step in trajectory.steps:
        count += 1  # orchestrator names the expert
        if step.agent is not AgentKind.USER_PERCEPTION:
            count += 1
    return count


def _expert_tools(
    agent: AgentKind,
    catalog: ToolCatalog,
    state: DeviceState | None,
    mode: PromptMode,
    query: str,
):
    if agent not in DYNAMIC_TOOL_AGENTS:
        return None
    tools = catalog.owned_by(agent)
    if state is not None:
        tools = tuple(t for t in tools if t.name in state.installed_tools)
    if mode.kind == "retrieved" and tools:
        k = min(mode.k or len(tools), len(tools))
        tools = tuple(retrieve_topk(query, tools, k, LexicalRetriever()))
    return tools


def flatten(
    trajectories: Sequence[Trajectory],
    catalog: ToolCatalog | None = None,
    states: Mapping[str, DeviceState] | None = None,
    mode: PromptMode = FULL_TEXT,
    include_instruction: bool = True,
) -> list[PromptCompletionPair]:
    """Unroll trajectories into one pair per model action, in step order."""
    catalog = catalog or default_catalog()
    pairs = []
    for trajectory in trajectories:
        state = states.get(trajectory.device_state_ref) if states else None
        history = MessageHistory([Turn.user(trajectory.query)])
        index = 0
        for step in trajectory.steps:
            rendered = render_prompt(
                PromptSpec(
                    agent=AgentKind.HIGH_ORDER_REASONING,
                    history=history,
                    mode=mode,
                    include_instruction=include_instruction,
                )
            )
            pairs.append(
                PromptCompletionPair(
                    query_id=trajectory.query_id,
                    step_index=index,
                    agent=AgentKind.HIGH_ORDER_REASONING,
                    prompt=rendered.text,
                    completion=f"[{step.agent.label}]",
                )
            )
            index += 1
            history.append(Turn.agent(AgentKind.HIGH_ORDER_REASONING, f"[{step.agent.label}]"))
            content = expert_turn_content(step, trajectory.final_response, catalog)
            if step.agent is not AgentKind.USER_PERCEPTION:
                rendered = render_prompt(
                    PromptSpec(
                        agent=step.agent,
                        history=history,
                        tools=_expert_tools(step.agent, catalog, state, mode, trajectory.query),
                        mode=mode,
                        include_instruction=include_instruction,
                    )
                )
                pairs.append(
                    PromptCompletionPair(
                        query_id=trajectory.query_id,
                        step_index=index,
                        agent=step.agent,
                        prompt=rendered.text,
                        completion=content,
                    )
                )
                index += 1
            history.append(Turn.agent(step.agent, content))
            if step.agent is not AgentKind.TASK_COMPLETION:
                for result in step.results:
                    history.append(Turn.execution(render_result(result)))
    return pairs


def save_pairs(pairs: Iterable[PromptCompletionPair], path: str | Path, header: dict | None = None) -> None:
    lines = []
    if header is not None:
        lines.append(json.dumps({"format_version": 1, "kind": "prompt_completion_pairs"} | header, ensure_ascii=False))
    lines.extend(json.dumps(p.to_json(), ensure_ascii=False) for p in pairs)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Validation

RELEASED_TOTAL = 3410
RELEASED_TRAIN = 2728
RELEASED_TEST = 682
RELEASED_PAIRS = 35444
RELEASED_MEAN_PAIRS = 10.39
RELEASED_MEAN_TOLERANCE = 0.01


@dataclass
class DatasetReport:
    violations: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    counts: dict[str, Any] = field(default_factory=dict)

    @property
    def clean(self) -> bool:
        return not self.violations

    def to_json(self) -> dict:
        return {
            "format_version": 1,
            "clean": self.clean,
            "violations": self.violations,
            "warnings": self.warnings,
            "counts": self.counts,
        }


def validate_dataset(
    trajectories: Sequence[Trajectory],
    catalog: ToolCatalog | None = None,
    states: Mapping[str, DeviceState] | None = None,
    released: bool = False,
) -> DatasetReport:
    """Schema and invariant checks; unknown gold tool names are flagged as
    warnings (hallucination-style fixtures are allowed to keep them).
    """
    catalog = catalog or default_catalog()
    report = DatasetReport()
    seen_ids: set[str] = set()
    pair_total = 0
    split_counts = {"train": 0, "test": 0, None: 0}
    for t in trajectories:
        where = t.query_id or "<missing id>"
        if t.query_id in seen_ids:
            report.violations.append(f"{where}: duplicate query id")
        seen_ids.add(t.query_id)
        if not t.query.strip():
            report.violations.append(f"{where}: first turn must be the user query; query is empty")
        if t.status not in TRAJECTORY_STATUSES:
            report.violations.append(f"{where}: unknown status {t.status!r}")
        if t.split not in ("train", "test", None):
            report.violations.append(f"{where}: unknown split {t.split!r}")
        else:
            split_counts[t.split] += 1
        if not t.steps:
            report.violations.append(f"{where}: trajectory has no steps")
        elif t.status == "completed":
            if t.steps[-1].agent is not AgentKind.TASK_COMPLETION:
                report.violations.append(f"{where}: last step must be the task completion agent")
            gold_plan = [serialize_call(c) for c in t.steps[-1].calls]
            if [serialize_call(c) for c in t.final_plan] != gold_plan:
                report.violations.append(f"{where}: final_plan differs from the last step's calls")
        for i, step in enumerate(t.steps):
            if step.agent is AgentKind.HIGH_ORDER_REASONING:
                report.violations.append(f"{where}: step {i} cannot be the orchestrator")
            if len(step.results) != len(step.calls):
                report.violations.append(
                    f"{where}: step {i} has {len(step.calls)} calls but {len(step.results)} results"
                )
            for call in step.calls:
                if call.name not in catalog:
                    report.warnings.append(f"{where}: step {i} uses unknown function {call.name!r}")
        if states is not None and t.device_state_ref not in states:
            report.violations.append(f"{where}: unknown device state {t.device_state_ref!r}")
        pair_total += model_action_count(t)

    report.counts = {
        "queries": len(trajectories),
        "train": split_counts["train"],
        "test": split_counts["test"],
        "pairs": pair_total,
        "mean_pairs_per_query": pair_total / len(trajectories) if trajectories else 0.0,
    }
    if released:
        c = report.counts
        if c["queries"] != RELEASED_TOTAL:
            report.violations.append(f"released dataset must have {RELEASED_TOTAL} queries, found {c['queries']}")
        if c["train"] != RELEASED_TRAIN or c["test"] != RELEASED_TEST:
            report.violations.append(
                f"released split must be {RELEASED_TRAIN}/{RELEASED_TEST}, found {c['train']}/{c['test']}"
            )
        if c["pairs"] != RELEASED_PAIRS:
            report.violations.append(f"released dataset must flatten to {RELEASED_PAIRS} pairs, found {c['pairs']}")
        if abs(c["mean_pairs_per_query"] - RELEASED_MEAN_PAIRS) > RELEASED_MEAN_TOLERANCE:
            report.violations.append(
                f"released dataset mean pairs/query must be {RELEASED_MEAN_PAIRS} "
                f"± {RELEASED_MEAN_TOLERANCE}, found {c['mean_pairs_per_query']:.4f}"
            )
    return report
