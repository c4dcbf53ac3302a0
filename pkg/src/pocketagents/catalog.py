"""Tool catalog: agent roster, value domains, tool definitions, and catalog loading.

The catalog is the single source of truth for which functions exist, which
agent owns each of them, and what their parameters look like. It is immutable
after load and safe to share across threads.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping


class AgentKind(enum.Enum):
    """The closed set of agent roles.

    Baseline-only roles (Answer / Reflection / Response Submit) are aliases
    handled by the runtime's baseline mode; they are not members here.
    """

    HIGH_ORDER_REASONING = "high_order_reasoning"
    DEVICE_INFORMATION = "device_information"
    USER_PERCEPTION = "user_perception"
    PERSONAL_CONTEXT = "personal_context"
    EXTERNAL_KNOWLEDGE = "external_knowledge"
    TASK_COMPLETION = "task_completion"

    @property
    def label(self) -> str:
        """Display name used in message histories, e.g. 'Personal Context Agent'."""
        return _LABELS[self]


_LABELS = {
    AgentKind.HIGH_ORDER_REASONING: "High Order Reasoning Agent",
    AgentKind.DEVICE_INFORMATION: "Device Information Agent",
    AgentKind.USER_PERCEPTION: "User Perception Agent",
    AgentKind.PERSONAL_CONTEXT: "Personal Context Agent",
    AgentKind.EXTERNAL_KNOWLEDGE: "External Knowledge Agent",
    AgentKind.TASK_COMPLETION: "Task Completion Agent",
}

EXPERT_AGENTS = (
    AgentKind.DEVICE_INFORMATION,
    AgentKind.USER_PERCEPTION,
    AgentKind.PERSONAL_CONTEXT,
    AgentKind.EXTERNAL_KNOWLEDGE,
    AgentKind.TASK_COMPLETION,
)

#: Agents whose toolset varies per device and therefore must appear in the prompt.
DYNAMIC_TOOL_AGENTS = (AgentKind.PERSONAL_CONTEXT, AgentKind.TASK_COMPLETION)

DOMAIN_KINDS = ("open-string", "enum", "timestamp", "time-range", "number")


class CatalogError(ValueError):
    """Base class for catalog load/validation failures."""


class EmptyCatalog(CatalogError):
    pass


class DuplicateToolName(CatalogError):
    pass


class UnknownOwner(CatalogError):
    pass


class MalformedParamSpec(CatalogError):
    pass


@dataclass(frozen=True)
class ValueDomain:
    """Domain of an argument value: one of DOMAIN_KINDS, with values for enums."""

    kind: str
    values: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind not in DOMAIN_KINDS:
            raise MalformedParamSpec(f"unknown value domain kind: {self.kind!r}")
        if self.kind == "enum" and not self.values:
            raise MalformedParamSpec("enum domain must list at least one value")
        if self.kind != "enum" and self.values:
            raise MalformedParamSpec(f"{self.kind} domain does not take values")

    def to_json(self) -> dict:
        doc: dict[str, Any] = {"kind": self.kind}
        if self.kind == "enum":
            doc["values"] = list(self.values)
        return doc

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "ValueDomain":
        if not isinstance(doc, Mapping) or "kind" not in doc:
            raise MalformedParamSpec(f"bad domain document: {doc!r}")
        return cls(kind=doc["kind"], values=tuple(doc.get("values", ())))


OPEN_STRING = ValueDomain("open-string")
TIMESTAMP = ValueDomain("timestamp")
TIME_RANGE = ValueDomain("time-range")
NUMBER = ValueDomain("number")


@dataclass(frozen=True)
class ParamSpec:
    name: str
    domain: ValueDomain = OPEN_STRING
    required: bool = True

    def to_json(self) -> dict:
        return {"name": self.name, "domain": self.domain.to_json(), "required": self.required}

    @classmethod
    def from_json(cls, doc: Mapping[str, Any]) -> "ParamSpec":
        if not isinstance(doc, Mapping) or "name" not in doc:
            raise MalformedParamSpec(f"bad param document: {doc!r}")
        return cls(
            name=doc["name"],
            domain=ValueDomain.from_json(doc.get("domain", {"kind": "open-string"})),
            required=bool(doc.get("required", True)),
        )


@dataclass(frozen=True)
class ToolDefinition:
    """One callable function: name, owning agent, description, ordered params."""

    name: str
    owner: AgentKind
    description: str
    params: tuple[ParamSpec, ...] = ()

    def __post_init__(self):
        seen = set()
        for p in self.params:
            if p.name in seen:
                raise MalformedParamSpec(f"{self.name}: duplicate param {p.name!r}")
            seen.add(p.name)

    @property
    def param_names(self) -> tuple[str, ...]:
        return tuple(p.name for p in self.params)

    def param(self, name: str) -> ParamSpec | None:
        for p in self.params:
            if p.name == name:
                return p
        return None

    def definition_text(self) -> str:
        """Render as a one-line definition: ``name(p1, p2): description``."""
        args = ", ".join(self.param_names)
        return f"{self.name}({args}): {self.description}"

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "owner": self.owner.value,
            "description": self.description,
            "params": [p.to_json() for p in self.params],
        }


class ToolCatalog:
    """Immutable collection of tools, indexed by name and partitioned by owner."""

    def __init__(self, tools: Iterable[ToolDefinition]):
        tools = list(tools)
        if not tools:
            raise EmptyCatalog("catalog contains no tools")
        self._tools: tuple[ToolDefinition, ...] = tuple(tools)
        self._by_name: dict[str, ToolDefinition] = {}
        self._by_owner: dict[AgentKind, list[ToolDefinition]] = {k: [] for k in AgentKind}
        for tool in tools:
            if tool.name in self._by_name:
                raise DuplicateToolName(f"duplicate tool name: {tool.name!r}")
            self._by_name[tool.name] = tool
            self._by_owner[tool.owner].append(tool)

    def __len__(self) -> int:
        return len(self._tools)

    def __iter__(self):
        return iter(self._tools)

    def __contains__(self, name: str) -> bool:
        return name in self._by_name

    @property
    def tools(self) -> tuple[ToolDefinition, ...]:
        return self._tools

    @property
    def names(self) -> frozenset[str]:
        return frozenset(self._by_name)

    def get(self, name: str) -> ToolDefinition | None:
        return self._by_name.get(name)

    def owned_by(self, owner: AgentKind) -> tuple[ToolDefinition, ...]:
        return tuple(self._by_owner[owner])

    def to_json(self) -> dict:
        return {"format_version": 1, "tools": [t.to_json() for t in self._tools]}


def load_catalog(source: str | Path | Mapping[str, Any]) -> ToolCatalog:
    """Load a catalog from a JSON file path, a JSON string, or a parsed document.

    Raises EmptyCatalog, DuplicateToolName, UnknownOwner or MalformedParamSpec
    on bad input; json.JSONDecodeError on unparseable text.
    """
    if isinstance(source, Path):
        doc = json.loads(source.read_text(encoding="utf-8"))
    elif isinstance(source, str):
        path = Path(source)
        if path.exists():
            doc = json.loads(path.read_text(encoding="utf-8"))
        else:
            doc = json.loads(source)
    else:
        doc = source
    if not isinstance(doc, Mapping) or "tools" not in doc:
        raise CatalogError("catalog document must be an object with a 'tools' list")
    tools = []
    for entry in doc["tools"]:
        try:
            owner = AgentKind(entry.get("owner"))
        except ValueError:
            raise UnknownOwner(f"unknown owner {entry.get('owner')!r} for tool {entry.get('name')!r}")
        params = tuple(ParamSpec.from_json(p) for p in entry.get("params", ()))
        tools.append(
            ToolDefinition(
                name=entry["name"],
                owner=owner,
                description=entry.get("description", ""),
                params=params,
            )
        )
    return ToolCatalog(tools)


_DEFAULT_CATALOG: ToolCatalog | None = None


def default_catalog() -> ToolCatalog:
    """The bundled device toolset (cached; catalogs are immutable)."""
    global _DEFAULT_CATALOG
    if _DEFAULT_CATALOG is None:
        _DEFAULT_CATALOG = load_catalog(Path(__file__).parent / "data" / "default_catalog.json")
    return _DEFAULT_CATALOG
