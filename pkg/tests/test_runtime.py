import json
import threading
import time
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from pocketagents.calls import FunctionCall, serialize_call_list
from pocketagents.catalog import AgentKind
from pocketagents.dataset import trajectory_to_history
from pocketagents.history import MessageHistory, Turn
from pocketagents.runtime import (
    BackendHttpError,
    BackendTimeout,
    BackendTransportError,
    EpisodeConfig,
    HttpBackend,
    MalformedBackendResponse,
    OutOfScriptError,
    ScriptedOracle,
    UnrecognizedAgentName,
    parse_agent_name,
    run_episode,
    select_next_agent,
)

# --- agent-name parsing ---------------------------------------------------------

def test_parse_bracketed_label():
    assert parse_agent_name("[Device Information Agent]") is AgentKind.DEVICE_INFORMATION


def test_parse_bare_camel_case():
    assert parse_agent_name("TaskCompletion") is AgentKind.TASK_COMPLETION


def test_parse_bare_label_and_value():
    assert parse_agent_name("Personal Context Agent") is AgentKind.PERSONAL_CONTEXT
    assert parse_agent_name("external_knowledge") is AgentKind.EXTERNAL_KNOWLEDGE


def test_parse_scans_brackets_in_noise():
    text = "Thinking it over... the right choice is [User Perception Agent] here."
    assert parse_agent_name(text) is AgentKind.USER_PERCEPTION


def test_parse_unknown_name_raises():
    with pytest.raises(UnrecognizedAgentName):
        parse_agent_name("Frobnicator Agent")


def test_baseline_aliases_gated_behind_flag():
    with pytest.raises(UnrecognizedAgentName):
        parse_agent_name("[Answer Agent]")
    assert parse_agent_name("[Answer Agent]", baseline_mode=True) is AgentKind.TASK_COMPLETION
    assert parse_agent_name("[Response Submit Agent]", baseline_mode=True) is AgentKind.TASK_COMPLETION
    assert parse_agent_name("[Information Agent]", baseline_mode=True) is AgentKind.DEVICE_INFORMATION
    assert parse_agent_name("[Tool Calling Agent]", baseline_mode=True) is AgentKind.EXTERNAL_KNOWLEDGE


# --- orchestrator selection ------------------------------------------------------

class SequenceBackend:
    """Returns canned completions in order; records every request."""

    def __init__(self, completions):
        self.completions = list(completions)
        self.requests = []

    def complete(self, agent, messages):
        self.requests.append((agent, tuple(messages)))
        if not self.completions:
            raise OutOfScriptError("backend exhausted")
        return self.completions.pop(0)


def _history():
    return MessageHistory([Turn.user("Hello.")])


def test_select_next_agent_parses_bracket_form():
    backend = SequenceBackend(["[Device Information Agent]"])
    assert select_next_agent(backend, _history()) is AgentKind.DEVICE_INFORMATION


def test_select_next_agent_retries_once_then_raises():
    backend = SequenceBackend(["gibberish", "[Task Completion Agent]"])
    assert select_next_agent(backend, _history()) is AgentKind.TASK_COMPLETION
    backend = SequenceBackend(["gibberish", "more gibberish"])
    with pytest.raises(UnrecognizedAgentName):
        select_next_agent(backend, _history())
    assert len(backend.requests) == 2


def test_orchestrator_cannot_select_itself():
    backend = SequenceBackend(["[High Order Reasoning Agent]", "[High Order Reasoning Agent]"])
    with pytest.raises(UnrecognizedAgentName):
        select_next_agent(backend, _history())


# --- episodes ---------------------------------------------------------------------

def test_barcelona_replay_is_exact(barcelona, catalog):
    state, gold = barcelona
    oracle = ScriptedOracle([gold], catalog)
    config = EpisodeConfig(catalog=catalog)
    predicted = run_episode(oracle, state.clone_for_episode(), gold.query, config, gold.query_id)
    assert predicted.status == "completed"
    assert [s.agent for s in predicted.steps] == [
        AgentKind.DEVICE_INFORMATION,
        AgentKind.PERSONAL_CONTEXT,
        AgentKind.EXTERNAL_KNOWLEDGE,
        AgentKind.TASK_COMPLETION,
    ]
    assert [c.name for c in predicted.final_plan] == [
        "create_calendar_event",
        "send_imessage_message",
    ]
    assert predicted.to_json() == gold.to_json()
    assert (
        trajectory_to_history(predicted, catalog).render()
        == trajectory_to_history(gold, catalog).render()
    )


def test_minimal_episode_empty_plan(barcelona, catalog):
    state, _ = barcelona
    backend = SequenceBackend(["[Task Completion Agent]", "Textual Response:\nNothing to do.\n\nTask Completion API Calls:\n[]"])
    trajectory = run_episode(backend, state.clone_for_episode(), "Do nothing.", EpisodeConfig(catalog=catalog))
    assert trajectory.status == "completed"
    assert trajectory.steps[0].agent is AgentKind.TASK_COMPLETION
    assert trajectory.final_plan == []
    assert trajectory.final_response == "Nothing to do."


def test_looping_backend_truncates(barcelona, catalog):
    state, _ = barcelona

    class Loop:
        def complete(self, agent, messages):
            if agent is AgentKind.HIGH_ORDER_REASONING:
                return "[Device Information Agent]"
            return "[get_time_information()]"

    config = EpisodeConfig(max_steps=20, catalog=catalog)
    trajectory = run_episode(Loop(), state.clone_for_episode(), "Loop forever.", config)
    assert trajectory.status == "truncated"
    assert len(trajectory.steps) == 20
    assert trajectory.final_plan == []


def test_user_perception_bypasses_backend(barcelona, catalog):
    state, _ = barcelona
    backend = SequenceBackend(
        ["[User Perception Agent]", "[Task Completion Agent]",
         "Textual Response:\nOk.\n\nTask Completion API Calls:\n[]"]
    )
    trajectory = run_episode(backend, state.clone_for_episode(), "What do I want?", EpisodeConfig(catalog=catalog))
    assert trajectory.status == "completed"
    assert trajectory.steps[0].agent is AgentKind.USER_PERCEPTION
    assert trajectory.steps[0].calls == (FunctionCall("get_intent"),)
    # the backend never saw a user-perception prompt
    assert [agent for agent, _ in backend.requests] == [
        AgentKind.HIGH_ORDER_REASONING,
        AgentKind.HIGH_ORDER_REASONING,
        AgentKind.TASK_COMPLETION,
    ]


def test_unparseable_expert_output_aborts_after_retry(barcelona, catalog):
    state, _ = barcelona
    backend = SequenceBackend(
        ["[External Knowledge Agent]", "not a call list", "still not a call list"]
    )
    trajectory = run_episode(backend, state.clone_for_episode(), "Search something.", EpisodeConfig(catalog=catalog))
    assert trajectory.status == "aborted"
    assert "External Knowledge Agent" in trajectory.abort_reason


def test_history_prompts_are_prefix_monotone(barcelona, catalog):
    state, gold = barcelona
    oracle = ScriptedOracle([gold], catalog)
    recorder = SequenceBackend([])
    recorder.completions = None  # unused

    class Recording:
        def __init__(self, inner):
            self.inner = inner
            self.histories = []

        def complete(self, agent, messages):
            content = messages[-1]["content"]
            section = content.split("Here is the message history:\n\n", 1)[1]
            self.histories.append(section)
            return self.inner.complete(agent, messages)

    recording = Recording(oracle)
    run_episode(recording, state.clone_for_episode(), gold.query, EpisodeConfig(catalog=catalog), gold.query_id)
    for earlier, later in zip(recording.histories, recording.histories[1:]):
        assert later.startswith(earlier)


def test_device_state_reached_only_through_execute_call(barcelona, catalog, monkeypatch):
    state, gold = barcelona
    import pocketagents.runtime as runtime_module

    executed = []
    real = runtime_module.execute_call

    def spy(st, call, cat=None):
        executed.append(call)
        return real(st, call, cat)

    monkeypatch.setattr(runtime_module, "execute_call", spy)
    oracle = ScriptedOracle([gold], catalog)
    predicted = run_episode(oracle, state.clone_for_episode(), gold.query, EpisodeConfig(catalog=catalog), gold.query_id)
    emitted = [c for step in predicted.steps for c in step.calls]
    assert executed == emitted


def test_retrieved_mode_prompts_carry_only_k_tools(barcelona, catalog):
    from pocketagents.prompts import retrieved

    state, gold = barcelona
    oracle = ScriptedOracle([gold], catalog)

    class Recording:
        def __init__(self, inner):
            self.inner = inner
            self.prompts = []

        def complete(self, agent, messages):
            self.prompts.append((agent, messages[0]["content"]))
            return self.inner.complete(agent, messages)

    recording = Recording(oracle)
    config = EpisodeConfig(catalog=catalog, mode=retrieved(5))
    trajectory = run_episode(recording, state.clone_for_episode(), gold.query, config, gold.query_id)
    assert trajectory.status == "completed"
    assert trajectory.to_json() == gold.to_json()  # replay unaffected by prompt mode
    pc_prompts = [text for agent, text in recording.prompts if agent is AgentKind.PERSONAL_CONTEXT]
    assert pc_prompts
    definition_count = pc_prompts[0].count("): ")
    assert definition_count == 5  # only the top-K retrieved definitions inlined


def test_out_of_script_error(barcelona, catalog):
    state, gold = barcelona
    oracle = ScriptedOracle([gold], catalog)
    config = EpisodeConfig(catalog=catalog)
    run_episode(oracle, state.clone_for_episode(), gold.query, config, gold.query_id)
    # the script is spent; asking again walks off the end
    with pytest.raises(OutOfScriptError):
        oracle.complete(
            AgentKind.HIGH_ORDER_REASONING,
            ({"role": "user", "content": f"Here is the message history:\n\n[User]: {gold.query}"},),
        )


def test_oracle_requires_known_query():
    oracle = ScriptedOracle([])
    with pytest.raises(OutOfScriptError):
        oracle.complete(
            AgentKind.HIGH_ORDER_REASONING,
            ({"role": "user", "content": "Here is the message history:\n\n[User]: unknown query"},),
        )


# --- HTTP backend ------------------------------------------------------------------

class _Handler(BaseHTTPRequestHandler):
    behavior = "echo"
    delay = 0.0

    def do_POST(self):
        if self.delay:
            time.sleep(self.delay)
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length) or b"{}")
        if self.behavior == "echo":
            last_user = [m for m in body["messages"] if m["role"] == "user"][-1]["content"]
            completion = last_user.splitlines()[-1]
            payload = json.dumps(
                {"choices": [{"message": {"role": "assistant", "content": completion}}]}
            ).encode()
            self.send_response(200)
        elif self.behavior == "flat":
            payload = json.dumps({"completion": "flat style"}).encode()
            self.send_response(200)
        elif self.behavior == "error":
            payload = b"boom"
            self.send_response(500)
        else:  # malformed
            payload = b"this is not json"
            self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(payload)))
        self.end_headers()
        self.wfile.write(payload)

    def log_message(self, *args):
        pass


@pytest.fixture()
def http_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _Handler.behavior = "echo"
    _Handler.delay = 0.0
    yield f"http://127.0.0.1:{server.server_port}/generate"
    server.shutdown()


def _messages(text):
    return ({"role": "user", "content": text},)


def test_http_backend_passes_completion_through(http_server):
    backend = HttpBackend(http_server, timeout=5)
    completion = backend.complete(AgentKind.TASK_COMPLETION, _messages("line one\n[get_intent()]"))
    assert completion == "[get_intent()]"


def test_http_backend_flat_completion_field(http_server):
    _Handler.behavior = "flat"
    backend = HttpBackend(http_server, timeout=5)
    assert backend.complete(AgentKind.TASK_COMPLETION, _messages("x")) == "flat style"


def test_http_backend_non_200(http_server):
    _Handler.behavior = "error"
    backend = HttpBackend(http_server, timeout=5, retries=0)
    with pytest.raises(BackendHttpError) as err:
        backend.complete(AgentKind.TASK_COMPLETION, _messages("x"))
    assert err.value.status == 500


def test_http_backend_malformed_body(http_server):
    _Handler.behavior = "malformed"
    backend = HttpBackend(http_server, timeout=5)
    with pytest.raises(MalformedBackendResponse):
        backend.complete(AgentKind.TASK_COMPLETION, _messages("x"))


def test_http_backend_timeout_retries_exhaust(http_server):
    _Handler.delay = 0.8
    backend = HttpBackend(http_server, timeout=0.15, retries=2)
    started = time.perf_counter()
    with pytest.raises(BackendTimeout):
        backend.complete(AgentKind.TASK_COMPLETION, _messages("x"))
    # three attempts were made before giving up
    assert time.perf_counter() - started >= 0.45


def test_http_backend_connection_refused():
    backend = HttpBackend("http://127.0.0.1:9/generate", timeout=0.2, retries=0)
    with pytest.raises(BackendTransportError):
        backend.complete(AgentKind.TASK_COMPLETION, _messages("x"))


def test_echo_server_completes_one_step_episode(http_server, barcelona, catalog):
    """The echo contract: cue lines at the end of the prompt round-trip into
    parseable completions, closing an episode in one step."""
    state, _ = barcelona
    backend = HttpBackend(http_server, timeout=5)
    config = EpisodeConfig(
        catalog=catalog,
        examples={
            AgentKind.HIGH_ORDER_REASONING: "[Task Completion Agent]",
            AgentKind.TASK_COMPLETION: '["create_notes(content=\'echo run\')"]',
        },
    )
    trajectory = run_episode(backend, state.clone_for_episode(), "Echo test.", config)
    assert trajectory.status == "completed"
    assert len(trajectory.steps) == 1
    assert trajectory.final_plan == [FunctionCall("create_notes", {"content": "echo run"})]
