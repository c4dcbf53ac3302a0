import random

import pytest

from pocketagents.catalog import AgentKind
from pocketagents.retrieval import (
    EmbeddingRetriever,
    KOutOfRange,
    LexicalRetriever,
    recall_at_k,
    recall_curve,
    retrieve_topk,
)


@pytest.fixture(scope="module")
def tc_tools(catalog):
    return catalog.owned_by(AgentKind.TASK_COMPLETION)


@pytest.fixture(scope="module")
def catalog():
    from pocketagents.catalog import default_catalog

    return default_catalog()


def test_topk_returns_k_items(tc_tools):
    top = retrieve_topk("send a message to my friend", tc_tools, 5, LexicalRetriever())
    assert len(top) == 5
    assert len({t.name for t in top}) == 5


def test_k_out_of_range(tc_tools):
    with pytest.raises(KOutOfRange):
        retrieve_topk("q", tc_tools, 0, LexicalRetriever())
    with pytest.raises(KOutOfRange):
        retrieve_topk("q", tc_tools, len(tc_tools) + 1, LexicalRetriever())


def test_k_equals_catalog_returns_everything(tc_tools):
    top = retrieve_topk("anything", tc_tools, len(tc_tools), LexicalRetriever())
    assert {t.name for t in top} == {t.name for t in tc_tools}


def test_k1_with_top_ranked_gold(tc_tools):
    # a query quoting one definition's vocabulary should rank it first
    top = retrieve_topk(
        "Play a podcast with the specified title", tc_tools, 1, LexicalRetriever()
    )
    assert top[0].name == "play_podcasts"
    mean, _ = recall_at_k(
        [("Play a podcast with the specified title", frozenset({"play_podcasts"}))],
        tc_tools,
        1,
        LexicalRetriever(),
    )
    assert mean == 1.0


def test_ties_break_lexicographically(tc_tools):
    ranked = LexicalRetriever().rank("zzz qqq xxx", tc_tools)  # zero overlap everywhere
    names = [t.name for t, _ in ranked]
    assert names == sorted(names)


def test_recall_half_when_one_of_two_found(tc_tools):
    gold = frozenset({"create_calendar_event", "send_imessage_message"})

    class FixedRetriever:
        def rank(self, query, candidates):
            order = [
                "send_mail",
                "send_imessage_message",
                "download_appstore_app",
                "play_podcasts",
                "create_reminders",
            ]
            ranked = sorted(
                candidates,
                key=lambda t: order.index(t.name) if t.name in order else 99,
            )
            return [(t, float(len(candidates) - i)) for i, t in enumerate(ranked)]

    mean, skipped = recall_at_k([("q", gold)], tc_tools, 5, FixedRetriever())
    assert mean == 0.5 and skipped == 0


def test_recall_all_found(tc_tools):
    gold = frozenset({t.name for t in tc_tools[:3]})
    mean, _ = recall_at_k([("q", gold)], tc_tools, len(tc_tools), LexicalRetriever())
    assert mean == 1.0


def test_empty_gold_skipped(tc_tools):
    mean, skipped = recall_at_k(
        [("q", frozenset()), ("r", frozenset({"play_music"}))],
        tc_tools,
        len(tc_tools),
        LexicalRetriever(),
    )
    assert skipped == 1 and mean == 1.0


def test_curve_monotone_on_random_sets(tc_tools):
    rng = random.Random(11)
    names = [t.name for t in tc_tools]
    gold_sets = [
        (f"query {i} {rng.choice(names)}", frozenset(rng.sample(names, rng.choice([1, 2, 3]))))
        for i in range(40)
    ]
    curve = recall_curve(gold_sets, tc_tools, AgentKind.TASK_COMPLETION, LexicalRetriever())
    recalls = [p.recall for p in curve.points]
    assert all(a <= b + 1e-12 for a, b in zip(recalls, recalls[1:]))
    assert recalls[-1] == 1.0  # saturation: gold is always inside the catalog


def test_retriever_swap_keeps_shape_invariants(tc_tools):
    from pocketagents.prompts import HashEmbeddingProvider

    provider = HashEmbeddingProvider(dim=32)
    dense = EmbeddingRetriever(provider.embed)
    rng = random.Random(3)
    names = [t.name for t in tc_tools]
    gold_sets = [
        (f"query {i}", frozenset(rng.sample(names, 2))) for i in range(10)
    ]
    curve = recall_curve(gold_sets, tc_tools, AgentKind.TASK_COMPLETION, dense)
    recalls = [p.recall for p in curve.points]
    assert all(a <= b + 1e-12 for a, b in zip(recalls, recalls[1:]))
    assert recalls[-1] == 1.0


def test_curve_json_and_table(adversarial_dataset, tc_tools):
    gold_sets = [
        (t.query, t.gold_tools(AgentKind.TASK_COMPLETION)) for t in adversarial_dataset[:10]
    ]
    curve = recall_curve(gold_sets, tc_tools, AgentKind.TASK_COMPLETION, LexicalRetriever(), ks=[1, 5, 13])
    doc = curve.to_json()
    assert doc["agent"] == "task_completion"
    assert [p["k"] for p in doc["points"]] == [1, 5, 13]
    assert "recall" in curve.format_table()
