import json

import pytest

from pocketagents.catalog import (
    AgentKind,
    DuplicateToolName,
    EmptyCatalog,
    MalformedParamSpec,
    ParamSpec,
    ToolDefinition,
    UnknownOwner,
    ValueDomain,
    load_catalog,
)


def test_default_catalog_partition_sizes(catalog):
    assert len(catalog.owned_by(AgentKind.PERSONAL_CONTEXT)) == 23
    assert len(catalog.owned_by(AgentKind.TASK_COMPLETION)) == 13
    assert len(catalog.owned_by(AgentKind.DEVICE_INFORMATION)) == 3
    assert len(catalog.owned_by(AgentKind.USER_PERCEPTION)) == 1
    assert len(catalog.owned_by(AgentKind.EXTERNAL_KNOWLEDGE)) == 1
    assert len(catalog) == 41


def test_partition_is_exact(catalog):
    by_owner = [t.name for kind in AgentKind for t in catalog.owned_by(kind)]
    assert sorted(by_owner) == sorted(t.name for t in catalog)
    assert len(by_owner) == len(set(by_owner))


def test_every_tool_resolves_by_name(catalog):
    for tool in catalog:
        assert catalog.get(tool.name) is tool
        assert tool.name in catalog


def test_definition_text_format(catalog):
    tool = catalog.get("get_reminders_content")
    assert tool.definition_text() == (
        "get_reminders_content(keyword, time_range): Retrieve reminders containing "
        "a specific keyword or/and within a specific time range."
    )
    assert catalog.get("get_intent").definition_text().startswith("get_intent(): ")


def test_retrieval_params_default_optional(catalog):
    assert not catalog.get("get_contacts_information").param("keyword").required
    assert not catalog.get("get_calendar_event").param("theme").required
    assert not catalog.get("get_calendar_event").param("time_range").required
    assert catalog.get("create_reminders").param("time").required
    assert catalog.get("search_safari").param("query").required


def test_empty_catalog_rejected():
    with pytest.raises(EmptyCatalog):
        load_catalog({"tools": []})


def test_duplicate_tool_name_rejected():
    doc = {
        "tools": [
            {"name": "f", "owner": "task_completion", "description": "x", "params": []},
            {"name": "f", "owner": "task_completion", "description": "y", "params": []},
        ]
    }
    with pytest.raises(DuplicateToolName):
        load_catalog(doc)


def test_unknown_owner_rejected():
    doc = {"tools": [{"name": "f", "owner": "wizard", "description": "x", "params": []}]}
    with pytest.raises(UnknownOwner):
        load_catalog(doc)


def test_malformed_param_rejected():
    doc = {
        "tools": [
            {
                "name": "f",
                "owner": "task_completion",
                "description": "x",
                "params": [{"name": "a", "domain": {"kind": "mystery"}}],
            }
        ]
    }
    with pytest.raises(MalformedParamSpec):
        load_catalog(doc)


def test_enum_domain_must_be_nonempty():
    with pytest.raises(MalformedParamSpec):
        ValueDomain("enum", ())


def test_duplicate_param_names_rejected():
    with pytest.raises(MalformedParamSpec):
        ToolDefinition(
            name="f",
            owner=AgentKind.TASK_COMPLETION,
            description="x",
            params=(ParamSpec("a"), ParamSpec("a")),
        )


def test_catalog_round_trips_through_json(catalog, tmp_path):
    path = tmp_path / "catalog.json"
    path.write_text(json.dumps(catalog.to_json()), encoding="utf-8")
    again = load_catalog(path)
    assert [t.name for t in again] == [t.name for t in catalog]
    assert again.to_json() == catalog.to_json()
