import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pocketagents.calls import (
    FunctionCall,
    ISSUE_MISSING_REQUIRED,
    ISSUE_UNKNOWN_FUNCTION,
    ParseError,
    parse_call_list,
    serialize_call,
    serialize_call_list,
    validate_calls,
)


def test_bracket_semicolon_form():
    calls = parse_call_list('[get_maps_places(keyword="Apple"); get_imessage_history(keyword="Pear")]')
    assert calls == [
        FunctionCall("get_maps_places", {"keyword": "Apple"}),
        FunctionCall("get_imessage_history", {"keyword": "Pear"}),
    ]


def test_empty_list():
    assert parse_call_list("[]") == []


def test_quoted_string_list_form():
    text = (
        '["create_calendar_event(time=\'2024-01-07T07:00:00\', '
        "event_title='Flight to Barcelona - Departure from Dublin at 7:00 AM')\"]"
    )
    calls = parse_call_list(text)
    assert len(calls) == 1
    assert calls[0].name == "create_calendar_event"
    assert calls[0].args == {
        "time": "2024-01-07T07:00:00",
        "event_title": "Flight to Barcelona - Departure from Dublin at 7:00 AM",
    }


def test_single_quoted_string_list_form():
    assert parse_call_list("['get_location_information()']") == [
        FunctionCall("get_location_information")
    ]


def test_bare_single_call():
    assert parse_call_list("search_safari(query='flights')") == [
        FunctionCall("search_safari", {"query": "flights"})
    ]


def test_comma_separated_bare_calls():
    assert parse_call_list("[f(), g(a=1)]") == [FunctionCall("f"), FunctionCall("g", {"a": 1})]


def test_numbers_and_escapes():
    calls = parse_call_list(r"[f(a=-2, b=3.5, c='it\'s', d=1e3)]")
    assert calls[0].args == {"a": -2, "b": 3.5, "c": "it's", "d": 1000.0}
    assert isinstance(calls[0].args["a"], int)


def test_parse_error_carries_offset_and_hint():
    with pytest.raises(ParseError) as err:
        parse_call_list("[f(a=]")
    assert err.value.offset == 5
    assert "value" in err.value.expected


def test_duplicate_parameter_rejected():
    with pytest.raises(ParseError) as err:
        parse_call_list("f(a=1, a=2)")
    assert "duplicate" in str(err.value)


def test_trailing_garbage_rejected():
    with pytest.raises(ParseError):
        parse_call_list("[f()] and more")


def test_mixed_forms_rejected():
    with pytest.raises(ParseError):
        parse_call_list('[f(); "g()"]')


_IDENT = st.from_regex(r"[a-z_][a-z0-9_]{0,10}", fullmatch=True)
_VALUE = st.one_of(
    st.text(min_size=0, max_size=25),
    st.integers(min_value=-10**6, max_value=10**6),
    st.floats(allow_nan=False, allow_infinity=False, width=32),
)
_CALL = st.builds(
    FunctionCall,
    name=_IDENT,
    args=st.dictionaries(_IDENT, _VALUE, max_size=4),
)


@given(st.lists(_CALL, max_size=5))
def test_round_trip(calls):
    assert parse_call_list(serialize_call_list(calls)) == calls


@given(st.text(max_size=60))
@settings(max_examples=300)
def test_parser_totality(text):
    try:
        result = parse_call_list(text)
    except ParseError:
        return
    assert isinstance(result, list)


def test_serialize_uses_declaration_order(catalog):
    call = FunctionCall("create_reminders", {"content": "x", "time": "2024-01-01T09:00:00"})
    assert serialize_call(call, catalog) == "create_reminders(time='2024-01-01T09:00:00', content='x')"
    # unknown params go last, textual order preserved
    call = FunctionCall("create_reminders", {"zz": 1, "time": "t"})
    assert serialize_call(call, catalog) == "create_reminders(time='t', zz=1)"


def test_validate_clean_call(catalog):
    calls = parse_call_list("[create_reminders(time='2024-01-01T09:00:00', content='x')]")
    assert validate_calls(calls, catalog).clean


def test_validate_flags_unknown_name(catalog):
    report = validate_calls([FunctionCall("send_message", {"receiver": "a"})], catalog)
    kinds = [i.kind for i in report.issues]
    assert kinds == [ISSUE_UNKNOWN_FUNCTION]


def test_validate_flags_missing_required(catalog):
    report = validate_calls([FunctionCall("create_reminders", {"content": "x"})], catalog)
    assert [i.kind for i in report.issues] == [ISSUE_MISSING_REQUIRED]
    assert "time" in report.issues[0].detail


def test_validate_flags_enum_value():
    from pocketagents.catalog import AgentKind, ParamSpec, ToolCatalog, ToolDefinition, ValueDomain

    tool = ToolDefinition(
        name="set_mode",
        owner=AgentKind.TASK_COMPLETION,
        description="Set the mode.",
        params=(ParamSpec("mode", ValueDomain("enum", ("on", "off"))),),
    )
    catalog = ToolCatalog([tool])
    report = validate_calls([FunctionCall("set_mode", {"mode": "sideways"})], catalog)
    assert [i.kind for i in report.issues] == ["enum-value-out-of-domain"]
    assert validate_calls([FunctionCall("set_mode", {"mode": "on"})], catalog).clean


def test_validate_never_mutates(catalog):
    calls = [FunctionCall("send_message", {"receiver": "a"})]
    before = [FunctionCall(c.name, dict(c.args)) for c in calls]
    validate_calls(calls, catalog)
    assert calls == before
