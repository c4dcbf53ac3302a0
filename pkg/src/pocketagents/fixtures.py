"""Deterministic fixture generation: device states, gold trajectories, the
adversarial retrieval set, and similarity fixture pairs.

Everything flows from one integer seed; regenerating with the same seed is
byte-identical. The bundled copies under data/fixtures/ were produced by
``python -m pocketagents.fixtures`` with the default seed.
"""

from __future__ import annotations

import calendar
import json
import random
import sys
from datetime import datetime, timedelta
from pathlib import Path
from typing import Sequence

from .calls import FunctionCall
from .catalog import AgentKind, ToolCatalog, default_catalog
from .dataset import Trajectory, TrajectoryStep, save_trajectories
from .device import DeviceInfo, DeviceState, Record, WorldKnowledgeEntry, execute_call, save_device_states

DEFAULT_SEED = 7

_PEOPLE = [
    ("Alice Johnson", "555-123-4567", "Travel Buddy"),
    ("Marco Rossi", "555-204-9913", "Gym Partner"),
    ("Priya Sharma", "555-887-2310", "Book Club Friend"),
    ("Tom Becker", "555-318-7745", "Coworker"),
    ("Sara Lindqvist", "555-440-1122", "Sister"),
    ("Liam O'Brien", "555-909-3321", "Neighbor"),
    ("Nadia Haddad", "555-772-8854", "Cousin"),
    ("Jonas Weber", "555-611-2045", "Old Roommate"),
]

_CITY_PAIRS = [
    ("Dublin", "Barcelona"),
    ("Lisbon", "Rome"),
    ("Oslo", "Prague"),
    ("Madrid", "Vienna"),
    ("Porto", "Berlin"),
    ("Hamburg", "Milan"),
    ("Valencia", "Athens"),
]

_NOTE_TOPICS = [
    ("garden plan", "water the tomato beds"),
    ("sourdough starter", "feed the sourdough starter"),
    ("tax documents", "scan the receipts folder"),
    ("marathon training", "book the physio session"),
    ("balcony repair", "email the landlord the photos"),
]

_SONGS = [
    ("river", "River Stones"),
    ("summer", "Endless Summer Nights"),
    ("midnight", "Midnight Tram"),
    ("ocean", "Ocean Letters"),
    ("ember", "Ember and Ash"),
]

_ITEMS = [
    ("espresso grinder", "Wednesday"),
    ("trail shoes", "Friday"),
    ("desk lamp", "Monday"),
    ("noise-cancelling headset", "Thursday"),
    ("cast iron pan", "Tuesday"),
]

_PODCASTS = [
    ("history", "Fallen Empires"),
    ("science", "Lab Notes Weekly"),
    ("design", "Grid and Margin"),
    ("finance", "Ledger Lines"),
]

_MEETING_THEMES = [
    ("budget", "Budget Review"),
    ("roadmap", "Roadmap Sync"),
    ("hiring", "Hiring Panel"),
    ("offsite", "Offsite Planning"),
]

_ACTIVITIES = ["cycling", "swimming", "rowing", "bouldering"]


def _ordinal(day: int) -> str:
    if 11 <= day % 100 <= 13:
        return f"{day}th"
    return f"{day}{'th st nd rd th th th th th th'.split()[day % 10]}"


def _ampm(hour: int, minute: int = 0) -> str:
    suffix = "AM" if hour < 12 else "PM"
    h12 = hour % 12 or 12
    return f"{h12}:{minute:02d} {suffix}"


def _contact_record(rid: str, person: tuple[str, str, str]) -> Record:
    name, phone, relationship = person
    first, _, last = name.partition(" ")
    return Record(
        id=rid,
        app="contacts",
        fields={
            "person_id": rid.split("-")[-1],
            "name": name,
            "phone_number": phone,
            "relationship": relationship,
            "email": f"{first.lower()}.{last.lower().replace(chr(39), '')}@example.com",
            "is_self": "False",
        },
    )


def _build_trajectory(
    query_id: str,
    query: str,
    state: DeviceState,
    script: Sequence[tuple[AgentKind, Sequence[FunctionCall]]],
    final_response: str,
    catalog: ToolCatalog,
    split: str | None,
) -> Trajectory:
    """Execute the scripted calls to freeze their results into a gold record."""
    assert "\n" not in query, "fixture queries must be single-line"
    scratch = state.clone_for_episode()
    steps = []
    for agent, calls in script:
        results = tuple(execute_call(scratch, call, catalog) for call in calls)
        steps.append(TrajectoryStep(agent=agent, calls=tuple(calls), results=results))
    assert steps and steps[-1].agent is AgentKind.TASK_COMPLETION
    return Trajectory(
        query_id=query_id,
        query=query,
        device_state_ref=state.state_id,
        steps=steps,
        final_plan=list(steps[-1].calls),
        final_response=final_response,
        status="completed",
        split=split,
    )


# ---------------------------------------------------------------------------
# The worked travel example

BARCELONA_FLIGHTS = (
    "Cheapest flights from Dublin to Barcelona in January 2024:\n"
    "- Tuesday, January 7th: €29.99, Departure at 7:00 AM, Arrival at 10:30 AM.\n"
    "- Thursday, January 16th: €32.50, Departure at 6:45 AM, Arrival at 10:15 AM.\n"
    "- Friday, January 10th: €31.00, Departure at 8:00 AM, Arrival at 11:30 AM."
)

BARCELONA_RESPONSE = (
    "Sure! Here are some of the cheapest flight options to Barcelona next month from various sources:\n"
    "From Ryanair:\n"
    "1. Tuesday, January 7th at 7:00 AM, arriving at 10:30 AM - €29.99.\n"
    "2. Thursday, January 16th at 6:45 AM, arriving at 10:15 AM - €32.50.\n"
    "3. Friday, January 10th at 8:00 AM, arriving at 11:30 AM - €31.00.\n"
    "I will add the cheapest flight, which departs on January 7th at 7:00 AM and costs €29.99, "
    "to your calendar and notify your travel buddy."
)


def barcelona_fixture(catalog: ToolCatalog | None = None) -> tuple[DeviceState, Trajectory]:
    catalog = catalog or default_catalog()
    state = DeviceState(
        state_id="state-barcelona",
        device_info=DeviceInfo(
            location={
                "latitude": 53.3478,
                "longitude": -6.2597,
                "city": "Dublin",
                "country": "Ireland",
                "postal_code": "D01 V902",
                "formatted_address": "Ryanair Head Office, Airside Business Park, Swords, Co. Dublin, Ireland",
            },
            clock=datetime(2023, 12, 15, 9, 30),
        ),
        app_stores={
            "contacts": [
                _contact_record("c-003", ("Alice Johnson", "555-123-4567", "Travel Buddy"))
            ]
        },
        installed_tools=frozenset(catalog.names),
        world_knowledge=[
            WorldKnowledgeEntry(
                pattern="Cheapest flights from Dublin to Barcelona January 2024",
                result=BARCELONA_FLIGHTS,
            )
        ],
    )
    query = (
        "Can you show me the cheapest flight options to Barcelona next month and add it to "
        "my calendar? Also, let my travel buddy know about our trip plan."
    )
    script = [
        (AgentKind.DEVICE_INFORMATION, [FunctionCall("get_location_information")]),
        (
            AgentKind.PERSONAL_CONTEXT,
            [FunctionCall("get_contacts_information", {"keyword": "travel buddy"})],
        ),
        (
            AgentKind.EXTERNAL_KNOWLEDGE,
            [FunctionCall("search_safari", {"query": "Cheapest flights from Dublin to Barcelona January 2024"})],
        ),
        (
            AgentKind.TASK_COMPLETION,
            [
                FunctionCall(
                    "create_calendar_event",
                    {
                        "time": "2024-01-07T07:00:00",
                        "event_title": "Flight to Barcelona - Departure from Dublin at 7:00 AM",
                    },
                ),
                FunctionCall(
                    "send_imessage_message",
                    {
                        "receiver": "555-123-4567",
                        "content": "We have a flight to Barcelona on January 7th at 7:00 AM. Please be ready!",
                    },
                ),
            ],
        ),
    ]
    trajectory = _build_trajectory(
        "q-barcelona", query, state, script, BARCELONA_RESPONSE, catalog, split=None
    )
    return state, trajectory


# ---------------------------------------------------------------------------
# The synthetic 50-query set

def _template_flight(rng, i, clock, catalog, state_id):
    origin, dest = rng.choice(_CITY_PAIRS)
    person = rng.choice(_PEOPLE)
    rel = person[2]
    nm_year, nm_month = (clock.year + 1, 1) if clock.month == 12 else (clock.year, clock.month + 1)
    month_name = calendar.month_name[nm_month]
    options = []
    for day in rng.sample(range(2, 27), 3):
        hour = rng.choice([6, 7, 8, 9])
        minute = rng.choice([0, 15, 30, 45])
        price = round(rng.uniform(24, 60), 2)
        dep = datetime(nm_year, nm_month, day, hour, minute)
        arr = dep + timedelta(hours=3, minutes=30)
        options.append((price, dep, arr))
    cheapest = min(options, key=lambda o: o[0])
    lines = [f"Cheapest flights from {origin} to {dest} in {month_name} {nm_year}:"]
    for price, dep, arr in options:
        lines.append(
            f"- {calendar.day_name[dep.weekday()]}, {month_name} {_ordinal(dep.day)}: "
            f"€{price:.2f}, Departure at {_ampm(dep.hour, dep.minute)}, Arrival at {_ampm(arr.hour, arr.minute)}."
        )
    listing = "\n".join(lines)
    dep = cheapest[1]
    dep_label = _ampm(dep.hour, dep.minute)
    query = (
        f"Can you find the cheapest flight options to {dest} next month and add the best one to "
        f"my calendar? Also, let my {rel.lower()} know about our trip plan."
    )
    state = DeviceState(
        state_id=state_id,
        device_info=DeviceInfo(
            location={"city": origin, "country": "—"},
            clock=clock,
        ),
        app_stores={"contacts": [_contact_record(f"c-{i:03d}", person)]},
        installed_tools=frozenset(catalog.names),
        world_knowledge=[
            WorldKnowledgeEntry(
                pattern=f"Cheapest flights from {origin} to {dest} {month_name} {nm_year}",
                result=listing,
            )
        ],
    )
    script = [
        (AgentKind.DEVICE_INFORMATION, [FunctionCall("get_location_information")]),
        (AgentKind.PERSONAL_CONTEXT, [FunctionCall("get_contacts_information", {"keyword": rel.lower()})]),
        (
            AgentKind.EXTERNAL_KNOWLEDGE,
            [FunctionCall("search_safari", {"query": f"Cheapest flights from {origin} to {dest} {month_name} {nm_year}"})],
        ),
        (
            AgentKind.TASK_COMPLETION,
            [
                FunctionCall(
                    "create_calendar_event",
                    {
                        "time": dep.isoformat(),
                        "event_title": f"Flight to {dest} - Departure from {origin} at {dep_label}",
                    },
                ),
                FunctionCall(
                    "send_imessage_message",
                    {
                        "receiver": person[1],
                        "content": f"We have a flight to {dest} on {month_name} {_ordinal(dep.day)} at {dep_label}. Please be ready!",
                    },
                ),
            ],
        ),
    ]
    response = (
        f"Here are the cheapest flights to {dest} next month. The best option departs {origin} on "
        f"{month_name} {_ordinal(dep.day)} at {dep_label} for €{cheapest[0]:.2f}. I have added it to "
        f"your calendar and notified your {rel.lower()}."
    )
    return query, state, script, response


def _template_note_reminder(rng, i, clock, catalog, state_id):
    topic, action = rng.choice(_NOTE_TOPICS)
    hour = rng.choice([8, 9, 17, 18])
    tomorrow = (clock + timedelta(days=1)).replace(hour=hour, minute=0, second=0, microsecond=0)
    query = f"I kept a note about the {topic}. Set a reminder to {action} tomorrow at {_ampm(hour)}."
    state = DeviceState(
        state_id=state_id,
        device_info=DeviceInfo(location={"city": "Home"}, clock=clock),
        app_stores={
            "notes": [
                Record(
                    id=f"n-{i:03d}",
                    app="notes",
                    fields={"title": f"Notes on the {topic}", "body": f"Remember: {action}."},
                )
            ]
        },
        installed_tools=frozenset(catalog.names),
    )
    script = [
        (AgentKind.PERSONAL_CONTEXT, [FunctionCall("get_notes_content", {"keyword": topic})]),
        (
            AgentKind.TASK_COMPLETION,
            [FunctionCall("create_reminders", {"time": tomorrow.isoformat(), "content": action.capitalize()})],
        ),
    ]
    response = f"Done. I set a reminder for tomorrow at {_ampm(hour)}: {action}."
    return query, state, script, response


def _template_music(rng, i, clock, catalog, state_id):
    word, title = rng.choice(_SONGS)
    query = f"Put on that song about the {word} from my playlist."
    state = DeviceState(
        state_id=state_id,
        device_info=DeviceInfo(location={"city": "Home"}, clock=clock),
        app_stores={
            "music": [
                Record(id=f"m-{i:03d}", app="music", fields={"title": title, "artist": "The Paper Lanterns"})
            ]
        },
        installed_tools=frozenset(catalog.names),
    )
    script = [
        (AgentKind.PERSONAL_CONTEXT, [FunctionCall("get_music_playlist", {"keyword": word})]),
        (AgentKind.TASK_COMPLETION, [FunctionCall("play_music", {"title": title})]),
    ]
    response = f"Now playing {title}."
    return query, state, script, response


def _template_amazon_mail(rng, i, clock, catalog, state_id):
    item, weekday = rng.choice(_ITEMS)
    person = rng.choice(_PEOPLE)
    name, _, rel = person
    first = name.split()[0]
    email = _contact_record("c-x", person).fields["email"]
    query = f"Check my Amazon order for the {item} and email {first} that it arrives on {weekday}."
    state = DeviceState(
        state_id=state_id,
        device_info=DeviceInfo(location={"city": "Home"}, clock=clock),
        app_stores={
            "amazon_orders": [
                Record(
                    id=f"o-{i:03d}",
                    app="amazon_orders",
                    fields={"item": item, "status": "shipped", "arrives": weekday},
                )
            ],
            "contacts": [_contact_record(f"c-{i:03d}", person)],
        },
        installed_tools=frozenset(catalog.names),
    )
    script = [
        (AgentKind.PERSONAL_CONTEXT, [FunctionCall("get_amazon_orders", {"keyword": item})]),
        (AgentKind.PERSONAL_CONTEXT, [FunctionCall("get_contacts_information", {"keyword": first})]),
        (
            AgentKind.TASK_COMPLETION,
            [
                FunctionCall(
                    "send_mail",
                    {"receiver": email, "content": f"The {item} arrives on {weekday}."},
                ),
                FunctionCall("show_amazon_item", {"name": item}),
            ],
        ),
    ]
    response = f"Your {item} arrives on {weekday}; I emailed {first} and opened the order page."
    return query, state, script, response


def _template_podcast(rng, i, clock, catalog, state_id):
    genre, show = rng.choice(_PODCASTS)
    hour = rng.choice([20, 21])
    tonight = clock.replace(hour=hour, minute=0, second=0, microsecond=0)
    query = f"Queue up the next episode of that {genre} podcast I follow and remind me tonight at {_ampm(hour)}."
    state = DeviceState(
        state_id=state_id,
        device_info=DeviceInfo(
            location={"city": "Home"},
            clock=clock,
            intent=f"The user wants to continue the {genre} podcast series they have been following.",
        ),
        app_stores={
            "podcasts_history": [
                Record(
                    id=f"p-{i:03d}",
                    app="podcasts_history",
                    fields={"show": show, "topic": genre, "last_episode": "Episode 12"},
                )
            ]
        },
        installed_tools=frozenset(catalog.names),
    )
    script = [
        (AgentKind.USER_PERCEPTION, [FunctionCall("get_intent")]),
        (AgentKind.PERSONAL_CONTEXT, [FunctionCall("get_podcasts_history", {"keyword": genre})]),
        (
            AgentKind.TASK_COMPLETION,
            [
                FunctionCall("play_podcasts", {"title": show}),
                FunctionCall(
                    "create_reminders",
                    {"time": tonight.isoformat(), "content": f"Listen to {show}"},
                ),
            ],
        ),
    ]
    response = f"Queued {show} and set a reminder for tonight at {_ampm(hour)}."
    return query, state, script, response


def _template_cancel_meeting(rng, i, clock, catalog, state_id):
    theme, title = rng.choice(_MEETING_THEMES)
    from .device import resolve_time_range

    start, _ = resolve_time_range("next week", clock)
    event_time = start + timedelta(days=rng.randrange(5), hours=rng.choice([9, 10, 14]))
    query = f"What's on my screen right now? Cancel the {theme} meeting next week and jot down why."
    screen = f"A draft message explaining that the {title} meeting must move."
    state = DeviceState(
        state_id=state_id,
        device_info=DeviceInfo(location={"city": "Office"}, clock=clock, screen=screen),
        app_stores={
            "calendar": [
                Record(
                    id=f"e-{i:03d}",
                    app="calendar",
                    fields={"event_title": title, "theme": theme, "time": event_time.isoformat()},
                    timestamp=event_time,
                )
            ]
        },
        installed_tools=frozenset(catalog.names),
    )
    script = [
        (AgentKind.DEVICE_INFORMATION, [FunctionCall("get_screen_information")]),
        (
            AgentKind.PERSONAL_CONTEXT,
            [FunctionCall("get_calendar_event", {"theme": theme, "time_range": "next week"})],
        ),
        (
            AgentKind.TASK_COMPLETION,
            [
                FunctionCall("cancel_calendar_event", {"event_title": title}),
                FunctionCall("create_notes", {"content": f"Cancelled {title}: {screen}"}),
            ],
        ),
    ]
    response = f"Cancelled {title} and saved a note with the reason."
    return query, state, script, response


def _template_fitness_post(rng, i, clock, catalog, state_id):
    activity = rng.choice(_ACTIVITIES)
    km = rng.randrange(18, 60)
    query = f"Share my {activity} progress from this week with my followers."
    state = DeviceState(
        state_id=state_id,
        device_info=DeviceInfo(location={"city": "Home"}, clock=clock),
        app_stores={
            "fitness": [
                Record(
                    id=f"f-{i:03d}",
                    app="fitness",
                    fields={"activity": activity, "weekly_total_km": km},
                )
            ]
        },
        installed_tools=frozenset(catalog.names),
    )
    script = [
        (AgentKind.PERSONAL_CONTEXT, [FunctionCall("get_fitness_summary")]),
        (
            AgentKind.TASK_COMPLETION,
            [FunctionCall("create_instagram_post", {"content": f"{km} km of {activity} this week!"})],
        ),
    ]
    response = f"Posted your {activity} total of {km} km."
    return query, state, script, response


def _template_running_late(rng, i, clock, catalog, state_id):
    person = rng.choice(_PEOPLE)
    name, phone, rel = person
    minutes = rng.choice([10, 15, 20, 25])
    query = f"What time is it? Call my {rel.lower()} and send a message that I'm running {minutes} minutes late."
    state = DeviceState(
        state_id=state_id,
        device_info=DeviceInfo(location={"city": "Downtown"}, clock=clock),
        app_stores={"contacts": [_contact_record(f"c-{i:03d}", person)]},
        installed_tools=frozenset(catalog.names),
    )
    script = [
        (AgentKind.DEVICE_INFORMATION, [FunctionCall("get_time_information")]),
        (AgentKind.PERSONAL_CONTEXT, [FunctionCall("get_contacts_information", {"keyword": rel.lower()})]),
        (
            AgentKind.TASK_COMPLETION,
            [
                FunctionCall("call_contacts", {"person": name}),
                FunctionCall(
                    "send_imessage_message",
                    {"receiver": phone, "content": f"Running {minutes} minutes late, sorry!"},
                ),
            ],
        ),
    ]
    response = f"It is {_ampm(clock.hour, clock.minute)}. Calling {name} and sending the message now."
    return query, state, script, response


_TEMPLATES = [
    _template_flight,
    _template_note_reminder,
    _template_music,
    _template_amazon_mail,
    _template_podcast,
    _template_cancel_meeting,
    _template_fitness_post,
    _template_running_late,
]


def synthetic_fixtures(
    seed: int = DEFAULT_SEED, count: int = 50, catalog: ToolCatalog | None = None
) -> tuple[list[DeviceState], list[Trajectory]]:
    """Seeded gold dataset: unique single-line queries, executed results."""
    catalog = catalog or default_catalog()
    rng = random.Random(seed)
    states, trajectories = [], []
    seen_queries: set[str] = set()
    train_cutoff = int(count * 0.8)
    i = 0
    attempts = 0
    while i < count:
        attempts += 1
        if attempts > count * 40:
            raise RuntimeError("fixture pools too small for requested count")
        template = _TEMPLATES[(i + attempts) % len(_TEMPLATES)] if attempts > count * 20 else rng.choice(_TEMPLATES)
        clock = datetime(2024, 3, 1, 8, 0) + timedelta(
            days=rng.randrange(180), hours=rng.randrange(10), minutes=15 * rng.randrange(4)
        )
        state_id = f"state-{i + 1:04d}"
        query, state, script, response = template(rng, i + 1, clock, catalog, state_id)
        if query in seen_queries:
            continue
        seen_queries.add(query)
        split = "train" if i < train_cutoff else "test"
        trajectories.append(
            _build_trajectory(f"q-{i + 1:04d}", query, state, script, response, catalog, split)
        )
        states.append(state)
        i += 1
    return states, trajectories


# ---------------------------------------------------------------------------
# The adversarial retrieval set: compositional plans, lexical bait

# Oblique phrasing that avoids the gold tool's own description vocabulary.
_OBLIQUE = {
    "create_notes": lambda v: (f"jot down “{v}”", FunctionCall("create_notes", {"content": v})),
    "create_reminders": lambda v: (
        f"give me a nudge at 6 PM about {v}",
        FunctionCall("create_reminders", {"time": "2024-05-02T18:00:00", "content": v}),
    ),
    "create_calendar_event": lambda v: (
        f"put {v} on my schedule for Friday morning",
        FunctionCall("create_calendar_event", {"time": "2024-05-03T09:00:00", "event_title": v}),
    ),
    "send_mail": lambda v: (
        f"drop a line to the landlord's inbox about {v}",
        FunctionCall("send_mail", {"receiver": "landlord@example.com", "content": v}),
    ),
    "send_imessage_message": lambda v: (
        f"ping my flatmate that {v}",
        FunctionCall("send_imessage_message", {"receiver": "555-101-2020", "content": v}),
    ),
    "play_music": lambda v: (
        f"queue up the track {v}",
        FunctionCall("play_music", {"title": v}),
    ),
    "call_contacts": lambda v: (
        f"get {v} on the line",
        FunctionCall("call_contacts", {"person": v}),
    ),
    "show_maps_place": lambda v: (
        f"pull up where {v} is",
        FunctionCall("show_maps_place", {"name": v}),
    ),
}

# Tokens lifted from other tools' definitions; injecting them rewards the
# wrong tools under lexical retrieval.
_BAIT = {
    "play_podcasts": "the podcast backlog",
    "download_appstore_app": "the app download queue",
    "create_instagram_post": "the Instagram post drafts",
    "show_amazon_item": "the Amazon page",
    "cancel_calendar_event": "the cancel list for calendar events",
    "send_mail": "the email pile",
    "create_reminders": "the reminder backlog",
    "play_music": "the music queue",
    "create_notes": "the note stack",
}

_ADV_VALUES = [
    "the delivery window",
    "the quarterly numbers",
    "the bike service",
    "Rosa's retirement lunch",
    "the ferry tickets",
    "the roof inspection",
    "the chess club final",
    "the seed order",
    "the visa paperwork",
    "the studio rehearsal",
]


def adversarial_fixtures(
    seed: int = DEFAULT_SEED, count: int = 100, catalog: ToolCatalog | None = None
) -> tuple[list[DeviceState], list[Trajectory]]:
    catalog = catalog or default_catalog()
    rng = random.Random(seed + 1)
    state = DeviceState(
        state_id="state-adv",
        device_info=DeviceInfo(location={"city": "Home"}, clock=datetime(2024, 5, 1, 8, 0)),
        installed_tools=frozenset(catalog.names),
    )
    gold_names = sorted(_OBLIQUE)
    trajectories = []
    seen = set()
    for i in range(count):
        while True:
            golds = rng.sample(gold_names, rng.choice([2, 2, 3]))
            values = rng.sample(_ADV_VALUES, len(golds))
            baits = rng.sample([b for b in sorted(_BAIT) if b not in golds], 3)
            phrases, calls = [], []
            for name, value in zip(golds, values):
                phrase, call = _OBLIQUE[name](value)
                phrases.append(phrase)
                calls.append(call)
            bait_text = ", ".join(_BAIT[b] for b in baits)
            query = (
                f"Please {phrases[0]}, then {', and '.join(phrases[1:])}. "
                f"Leave {bait_text} alone for now."
            )
            if query not in seen:
                seen.add(query)
                break
        script = [(AgentKind.TASK_COMPLETION, calls)]
        trajectories.append(
            _build_trajectory(
                f"a-{i + 1:04d}",
                query,
                state,
                script,
                "All set.",
                catalog,
                split="test",
            )
        )
    return [state], trajectories


# ---------------------------------------------------------------------------
# Similarity fixture pairs (exact-match value strings from the gold plans)

def similarity_pairs(trajectories: Sequence[Trajectory]) -> list[dict]:
    values = []
    seen = set()
    for t in trajectories:
        for call in t.final_plan:
            for v in call.args.values():
                if isinstance(v, str) and v not in seen:
                    seen.add(v)
                    values.append(v)
    return [{"a": v, "b": v, "exact": True} for v in sorted(values)]


# ---------------------------------------------------------------------------
# File emission

def write_fixtures(out_dir: str | Path, seed: int = DEFAULT_SEED) -> dict[str, Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    catalog = default_catalog()

    b_state, b_traj = barcelona_fixture(catalog)
    states, trajectories = synthetic_fixtures(seed, catalog=catalog)
    adv_states, adv_trajectories = adversarial_fixtures(seed, catalog=catalog)

    paths = {
        "barcelona_states": out / "barcelona_states.jsonl",
        "barcelona": out / "barcelona.jsonl",
        "device_states": out / "device_states.jsonl",
        "dataset": out / "dataset.jsonl",
        "adversarial_states": out / "adversarial_states.jsonl",
        "adversarial": out / "adversarial.jsonl",
        "similarity_pairs": out / "similarity_pairs.json",
    }
    save_device_states([b_state], paths["barcelona_states"])
    save_trajectories([b_traj], paths["barcelona"])
    save_device_states(states, paths["device_states"])
    save_trajectories(trajectories, paths["dataset"])
    save_device_states(adv_states, paths["adversarial_states"])
    save_trajectories(adv_trajectories, paths["adversarial"])
    pairs = similarity_pairs(trajectories + [b_traj])
    paths["similarity_pairs"].write_text(
        json.dumps({"format_version": 1, "pairs": pairs}, ensure_ascii=False, indent=2) + "\n",
        encoding="utf-8",
    )
    return paths


def bundled_fixture_dir() -> Path:
    return Path(__file__).parent / "data" / "fixtures"


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else str(bundled_fixture_dir())
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else DEFAULT_SEED
    written = write_fixtures(target, seed)
    for name, path in written.items():
        print(f"{name}: {path}")
