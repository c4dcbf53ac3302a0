"""pocketagents: a desk-scale harness for hierarchical on-device assistant
agents — simulated phone state, an episode runtime with pluggable model
backends, prompt-compression accounting, a retrieval baseline, and
plan-level F1 evaluation.
"""

__version__ = "0.1.0"

from .calls import FunctionCall, ParseError, parse_call_list, serialize_call_list, validate_calls
from .catalog import AgentKind, ToolCatalog, ToolDefinition, default_catalog, load_catalog
from .device import DeviceState, ExecutionResult, execute_call, load_device_states
from .history import MessageHistory, Turn
from .metrics import compare_plans, delex_f1, evaluate_corpus, plan_f1, tool_f1
from .prompts import COMPRESSED, FULL_TEXT, PromptSpec, render_prompt, token_report
from .retrieval import LexicalRetriever, recall_at_k, recall_curve, retrieve_topk
from .runtime import EpisodeConfig, HttpBackend, ScriptedOracle, run_episode, select_next_agent

__all__ = [
    "AgentKind",
    "COMPRESSED",
    "DeviceState",
    "EpisodeConfig",
    "ExecutionResult",
    "FULL_TEXT",
    "FunctionCall",
    "HttpBackend",
    "LexicalRetriever",
    "MessageHistory",
    "ParseError",
    "PromptSpec",
    "ScriptedOracle",
    "ToolCatalog",
    "ToolDefinition",
    "Turn",
    "compare_plans",
    "default_catalog",
    "delex_f1",
    "evaluate_corpus",
    "execute_call",
    "load_catalog",
    "load_device_states",
    "parse_call_list",
    "plan_f1",
    "recall_at_k",
    "recall_curve",
    "render_prompt",
    "retrieve_topk",
    "run_episode",
    "select_next_agent",
    "serialize_call_list",
    "token_report",
    "tool_f1",
    "validate_calls",
]
