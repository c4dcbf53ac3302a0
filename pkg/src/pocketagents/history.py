"""Message history: the ordered speaker-tagged turns shared by all agents.

Rendering uses the bracketed speaker form, one blank line between turns:

    [User]: Can you ...

    [High Order Reasoning Agent]: [Device Information Agent]

    [Device Information Agent]: [get_location_information()]

    [Execution Result]: [{"city": "Dublin", ...}]

Rendering is injective as long as turn contents do not themselves embed the
``\\n\\n[`` turn-separator pattern; harness-produced contents never do.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .catalog import AgentKind

USER_SPEAKER = "User"
EXECUTION_SPEAKER = "Execution Result"

TURN_SEPARATOR = "\n\n"


@dataclass(frozen=True)
class Turn:
    """One utterance: speaker display label plus raw content text."""

    speaker: str
    content: str

    @classmethod
    def user(cls, content: str) -> "Turn":
        return cls(USER_SPEAKER, content)

    @classmethod
    def agent(cls, kind: AgentKind, content: str) -> "Turn":
        return cls(kind.label, content)

    @classmethod
    def execution(cls, content: str) -> "Turn":
        return cls(EXECUTION_SPEAKER, content)

    @property
    def is_user(self) -> bool:
        return self.speaker == USER_SPEAKER

    @property
    def is_execution(self) -> bool:
        return self.speaker == EXECUTION_SPEAKER

    def render(self) -> str:
        return f"[{self.speaker}]: {self.content}"


@dataclass
class MessageHistory:
    """Append-only turn list; the first turn must be the user query."""

    turns: list[Turn] = field(default_factory=list)

    def __post_init__(self):
        if self.turns and not self.turns[0].is_user:
            raise ValueError("history must start with a User turn")

    def __len__(self) -> int:
        return len(self.turns)

    def append(self, turn: Turn) -> None:
        if not self.turns and not turn.is_user:
            raise ValueError("history must start with a User turn")
        self.turns.append(turn)

    def copy(self) -> "MessageHistory":
        return MessageHistory(list(self.turns))

    def render(self) -> str:
        return TURN_SEPARATOR.join(t.render() for t in self.turns)

    @property
    def query(self) -> str:
        if not self.turns:
            raise ValueError("empty history has no query")
        return self.turns[0].content
