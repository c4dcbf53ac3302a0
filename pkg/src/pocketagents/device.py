"""Simulated device state and deterministic execution of expert-agent calls.

Read tools (``get_*``, ``search_*``) are pure lookups over per-app record
stores and device info. Task-completion tools never mutate app stores; they
append to the per-episode effects log and return an acknowledgment. All
failures are reported in-band as error results so an episode can continue.
"""

from __future__ import annotations

import calendar
import json
import re
from dataclasses import dataclass, field
from datetime import date, datetime, timedelta
from pathlib import Path
from typing import Any, Iterable, Mapping

from .calls import FunctionCall, serialize_call
from .catalog import AgentKind, ToolCatalog, default_catalog

Scalar = Any  # record field values: str | int | float | bool

ERR_UNKNOWN_TOOL = "UnknownTool"
ERR_NOT_INSTALLED = "ToolNotInstalled"
ERR_BAD_ARGUMENT = "BadArgument"

NO_RESULT_TEXT = "No results found."

_WORD_RE = re.compile(r"\w+")


class StateValidationError(ValueError):
    """Raised when a device-state document violates its schema."""


class UnparseableTimeRange(ValueError):
    pass


@dataclass(frozen=True)
class Record:
    """One item in an app store; `fields` is what execution results expose."""

    id: str
    app: str
    fields: dict[str, Scalar]
    timestamp: datetime | None = None

    def to_json(self) -> dict:
        doc: dict[str, Any] = {"id": self.id, "fields": self.fields}
        if self.timestamp is not None:
            doc["timestamp"] = self.timestamp.isoformat()
        return doc


@dataclass(frozen=True)
class WorldKnowledgeEntry:
    pattern: str
    result: str


@dataclass(frozen=True)
class DeviceInfo:
    location: dict[str, Scalar]
    clock: datetime
    screen: str = ""
    intent: str = ""


@dataclass
class DeviceState:
    """One user's simulated phone. App stores are immutable by convention
    during an episode; only the effects log grows.
    """

    state_id: str
    device_info: DeviceInfo
    app_stores: dict[str, list[Record]] = field(default_factory=dict)
    installed_tools: frozenset[str] = frozenset()
    world_knowledge: list[WorldKnowledgeEntry] = field(default_factory=list)
    effects: list[FunctionCall] = field(default_factory=list)

    def clone_for_episode(self) -> "DeviceState":
        """Same immutable content, fresh effects log."""
        return DeviceState(
            state_id=self.state_id,
            device_info=self.device_info,
            app_stores=self.app_stores,
            installed_tools=self.installed_tools,
            world_knowledge=self.world_knowledge,
            effects=[],
        )

    def to_json(self) -> dict:
        return {
            "format_version": 1,
            "state_id": self.state_id,
            "device_info": {
                "location": self.device_info.location,
                "clock": self.device_info.clock.isoformat(),
                "screen": self.device_info.screen,
                "intent": self.device_info.intent,
            },
            "app_stores": {
                store: [r.to_json() for r in records]
                for store, records in self.app_stores.items()
            },
            "installed_tools": sorted(self.installed_tools),
            "world_knowledge": [
                {"pattern": e.pattern, "result": e.result} for e in self.world_knowledge
            ],
        }


@dataclass(frozen=True)
class ExecutionResult:
    """Outcome of one call: record payload, text payload, or diagnostic."""

    status: str  # "ok" | "error"
    payload: Any  # list[Record] for record results, str otherwise
    source_call: FunctionCall

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def records(self) -> list[Record]:
        return self.payload if isinstance(self.payload, list) else []

    def to_json(self) -> dict:
        doc: dict[str, Any] = {"status": self.status, "call": serialize_call(self.source_call)}
        if isinstance(self.payload, list):
            doc["records"] = [r.to_json() | {"app": r.app} for r in self.payload]
        else:
            doc["text"] = self.payload
        return doc


def render_result(result: ExecutionResult) -> str:
    """History-turn text: a bracketed JSON record list, raw text, or error."""
    if not result.ok:
        return f"[Error: {result.payload}]"
    if isinstance(result.payload, list):
        body = ", ".join(json.dumps(r.fields, ensure_ascii=False) for r in result.payload)
        return f"[{body}]"
    return f"[{result.payload}]"


# Store lookup plan for every read tool that scans an app store.
@dataclass(frozen=True)
class _StoreQuery:
    store: str
    keyword_param: str | None = None
    time_param: str | None = None


_STORE_QUERIES: dict[str, _StoreQuery] = {
    "get_settings_cellular": _StoreQuery("settings_cellular"),
    "get_settings_notifications": _StoreQuery("settings_notifications", "keyword"),
    "get_health_records": _StoreQuery("health_records"),
    "get_health_medications": _StoreQuery("health_medications"),
    "get_fitness_summary": _StoreQuery("fitness"),
    "get_safari_history": _StoreQuery("safari_history", "keyword"),
    "get_news_history": _StoreQuery("news_history", "keyword"),
    "get_podcasts_history": _StoreQuery("podcasts_history", "keyword"),
    "get_notes_content": _StoreQuery("notes", "keyword"),
    "get_reminders_content": _StoreQuery("reminders", "keyword", "time_range"),
    "get_calendar_event": _StoreQuery("calendar", "theme", "time_range"),
    "get_mail_event": _StoreQuery("mail", "theme", "time_range"),
    "get_imessage_history": _StoreQuery("messages", "keyword"),
    "get_music_playlist": _StoreQuery("music", "keyword"),
    "get_voice_recording": _StoreQuery("voice_memos", "keyword"),
    "get_books_library": _StoreQuery("books"),
    "get_contacts_information": _StoreQuery("contacts", "keyword"),
    "get_appstore_history": _StoreQuery("appstore"),
    "get_maps_places": _StoreQuery("maps", "keyword"),
    "get_amazon_information": _StoreQuery("amazon_account"),
    "get_amazon_orders": _StoreQuery("amazon_orders", "keyword"),
    "get_instagram_information": _StoreQuery("instagram_account"),
    "get_instagram_post": _StoreQuery("instagram_posts", "keyword"),
}

#: Store names a device-state file may use (anything else is a schema error).
KNOWN_STORES = frozenset(q.store for q in _STORE_QUERIES.values())


def keyword_match(record: Record, keyword: str) -> bool:
    """Case-folded substring match over every string field of the record."""
    needle = keyword.casefold()
    for value in record.fields.values():
        if isinstance(value, str) and needle in value.casefold():
            return True
    return False


#: Relative phrases resolve_time_range accepts (weeks start on Monday).
RELATIVE_PHRASES = (
    "today",
    "yesterday",
    "tomorrow",
    "this week",
    "next week",
    "this month",
    "next month",
    "this year",
    "next year",
)


def _day(d: date) -> tuple[datetime, datetime]:
    start = datetime(d.year, d.month, d.day)
    return start, start + timedelta(days=1)


def _week(d: date) -> tuple[datetime, datetime]:
    monday = d - timedelta(days=d.weekday())
    start = datetime(monday.year, monday.month, monday.day)
    return start, start + timedelta(days=7)


def _month(year: int, month: int) -> tuple[datetime, datetime]:
    start = datetime(year, month, 1)
    days = calendar.monthrange(year, month)[1]
    return start, start + timedelta(days=days)


def resolve_time_range(expr: str, clock: datetime) -> tuple[datetime, datetime]:
    """Resolve an ISO ``start/end`` interval or one of RELATIVE_PHRASES to a
    half-open [start, end) interval anchored at the device clock.
    """
    text = expr.strip()
    phrase = text.casefold()
    today = clock.date()
    if phrase == "today":
        return _day(today)
    if phrase == "yesterday":
        return _day(today - timedelta(days=1))
    if phrase == "tomorrow":
        return _day(today + timedelta(days=1))
    if phrase == "this week":
        return _week(today)
    if phrase == "next week":
        return _week(today + timedelta(days=7 - today.weekday()))
    if phrase == "this month":
        return _month(today.year, today.month)
    if phrase == "next month":
        year, month = (today.year + 1, 1) if today.month == 12 else (today.year, today.month + 1)
        return _month(year, month)
    if phrase == "this year":
        return datetime(today.year, 1, 1), datetime(today.year + 1, 1, 1)
    if phrase == "next year":
        return datetime(today.year + 1, 1, 1), datetime(today.year + 2, 1, 1)
    if "/" in text:
        lo, _, hi = text.partition("/")
        try:
            return datetime.fromisoformat(lo.strip()), datetime.fromisoformat(hi.strip())
        except ValueError as exc:
            raise UnparseableTimeRange(f"bad ISO interval {expr!r}: {exc}") from None
    raise UnparseableTimeRange(
        f"unsupported time range {expr!r}; use ISO 'start/end' or one of {', '.join(RELATIVE_PHRASES)}"
    )


def _overlap_score(query: str, pattern: str) -> int:
    q = {t.casefold() for t in _WORD_RE.findall(query)}
    p = {t.casefold() for t in _WORD_RE.findall(pattern)}
    return len(q & p)


def answer_search(state: DeviceState, query: str) -> ExecutionResult:
    """Return the canned world-knowledge entry with the highest token overlap
    (ties keep the earliest entry); NO_RESULT_TEXT when nothing overlaps.
    """
    call = FunctionCall("search_safari", {"query": query})
    best: WorldKnowledgeEntry | None = None
    best_score = 0
    for entry in state.world_knowledge:
        score = _overlap_score(query, entry.pattern)
        if score > best_score:
            best, best_score = entry, score
    if best is None:
        return ExecutionResult("ok", NO_RESULT_TEXT, call)
    return ExecutionResult("ok", best.result, call)


def _error(call: FunctionCall, code: str, detail: str) -> ExecutionResult:
    return ExecutionResult("error", f"{code}: {detail}", call)


def _string_arg(call: FunctionCall, name: str) -> str | None:
    if name not in call.args:
        return None
    return str(call.args[name])


def execute_call(
    state: DeviceState, call: FunctionCall, catalog: ToolCatalog | None = None
) -> ExecutionResult:
    """Execute one call against the state; never raises for tool-level faults."""
    catalog = catalog or default_catalog()
    tool = catalog.get(call.name)
    if tool is None:
        return _error(call, ERR_UNKNOWN_TOOL, f"no such function {call.name!r}")
    if call.name not in state.installed_tools:
        return _error(call, ERR_NOT_INSTALLED, f"{call.name!r} is not installed on this device")
    unknown = [k for k in call.args if tool.param(k) is None]
    if unknown:
        return _error(call, ERR_BAD_ARGUMENT, f"unknown parameter(s) {', '.join(sorted(unknown))}")

    if tool.owner is AgentKind.TASK_COMPLETION:
        state.effects.append(call)
        return ExecutionResult("ok", f"Acknowledged {call.name}.", call)

    info = state.device_info
    if call.name == "get_location_information":
        return ExecutionResult("ok", [Record("device-location", "device", info.location)], call)
    if call.name == "get_time_information":
        fields = {"current_time": info.clock.isoformat()}
        return ExecutionResult("ok", [Record("device-time", "device", fields)], call)
    if call.name == "get_screen_information":
        return ExecutionResult("ok", [Record("device-screen", "device", {"screen_content": info.screen})], call)
    if call.name == "get_intent":
        return ExecutionResult("ok", [Record("device-intent", "device", {"intent": info.intent})], call)
    if call.name == "search_safari":
        query = _string_arg(call, "query")
        if query is None:
            return _error(call, ERR_BAD_ARGUMENT, "missing required parameter 'query'")
        return answer_search(state, query)

    plan = _STORE_QUERIES.get(call.name)
    if plan is None:  # catalog tool without read semantics; nothing to fetch
        return _error(call, ERR_UNKNOWN_TOOL, f"no execution semantics for {call.name!r}")
    records = list(state.app_stores.get(plan.store, ()))
    keyword = _string_arg(call, plan.keyword_param) if plan.keyword_param else None
    if keyword:
        records = [r for r in records if keyword_match(r, keyword)]
    range_expr = _string_arg(call, plan.time_param) if plan.time_param else None
    if range_expr:
        try:
            start, end = resolve_time_range(range_expr, info.clock)
        except UnparseableTimeRange as exc:
            return _error(call, ERR_BAD_ARGUMENT, str(exc))
        records = [r for r in records if r.timestamp is not None and start <= r.timestamp < end]
    return ExecutionResult("ok", records, call)


# ---------------------------------------------------------------------------
# Device-state files: one JSON document per line, one line per user state.

def state_from_json(doc: Mapping[str, Any], catalog: ToolCatalog | None = None) -> DeviceState:
    catalog = catalog or default_catalog()
    try:
        info_doc = doc["device_info"]
        clock = datetime.fromisoformat(info_doc["clock"])
        info = DeviceInfo(
            location=dict(info_doc.get("location", {})),
            clock=clock,
            screen=info_doc.get("screen", ""),
            intent=info_doc.get("intent", ""),
        )
        state_id = doc["state_id"]
    except (KeyError, TypeError, ValueError) as exc:
        raise StateValidationError(f"bad device-state document: {exc}") from None

    stores: dict[str, list[Record]] = {}
    for store, entries in doc.get("app_stores", {}).items():
        if store not in KNOWN_STORES:
            raise StateValidationError(f"{state_id}: unknown app store {store!r}")
        records = []
        seen_ids = set()
        for entry in entries:
            rid = entry["id"]
            if rid in seen_ids:
                raise StateValidationError(f"{state_id}/{store}: duplicate record id {rid!r}")
            seen_ids.add(rid)
            ts = entry.get("timestamp")
            try:
                timestamp = datetime.fromisoformat(ts) if ts else None
            except ValueError:
                raise StateValidationError(
                    f"{state_id}/{store}/{rid}: bad timestamp {ts!r}"
                ) from None
            records.append(Record(rid, store, dict(entry.get("fields", {})), timestamp))
        stores[store] = records

    installed = frozenset(doc.get("installed_tools", ()))
    missing = installed - catalog.names
    if missing:
        raise StateValidationError(
            f"{state_id}: installed tools not in catalog: {', '.join(sorted(missing))}"
        )
    knowledge = [
        WorldKnowledgeEntry(e["pattern"], e["result"]) for e in doc.get("world_knowledge", ())
    ]
    return DeviceState(
        state_id=state_id,
        device_info=info,
        app_stores=stores,
        installed_tools=installed,
        world_knowledge=knowledge,
    )


def load_device_states(path: str | Path, catalog: ToolCatalog | None = None) -> dict[str, DeviceState]:
    """Load a JSONL device-state file into a map keyed by state id."""
    states: dict[str, DeviceState] = {}
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
        except json.JSONDecodeError as exc:
            raise StateValidationError(f"{path}:{line_no}: not valid JSON: {exc}") from None
        state = state_from_json(doc, catalog)
        if state.state_id in states:
            raise StateValidationError(f"{path}:{line_no}: duplicate state id {state.state_id!r}")
        states[state.state_id] = state
    return states


def save_device_states(states: Iterable[DeviceState], path: str | Path) -> None:
    lines = [json.dumps(s.to_json(), ensure_ascii=False) for s in states]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
