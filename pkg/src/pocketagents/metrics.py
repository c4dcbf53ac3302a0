"""Plan-level evaluation: Tool F1, Delexicalized Plan F1, and Plan F1.

All three scores compare a predicted call list against a gold call list via
a maximum one-to-one matching, at three successively stricter match levels:

  tool   — function names equal
  delex  — names equal, predicted params introduce nothing outside the gold
           param set (no hallucinated parameters), and every required gold
           param is present; parameter order never matters
  full   — delex plus value agreement on every shared param: exact for
           enum/number/timestamp domains, similarity above the threshold
           for open-string domains

With match count m, F1 = 2m / (|gold| + |pred|), which equals the harmonic
mean of precision and recall. Matching is exact (bitmask assignment) while
either plan is small; beyond that a deterministic greedy-by-score pass is
used. Duplicate calls are honored: multiset semantics, one-to-one pairing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from typing import Protocol, Sequence

from .calls import FunctionCall
from .catalog import ToolCatalog, default_catalog

DEFAULT_THRESHOLD = 0.7

#: Exact assignment whenever the smaller plan has at most this many calls.
EXACT_MATCHING_LIMIT = 10

LEVEL_TOOL = "tool"
LEVEL_DELEX = "delex"
LEVEL_FULL = "full"


class SimilarityProvider(Protocol):
    def similarity(self, a: str, b: str) -> float: ...


@lru_cache(maxsize=65536)
def _trigrams(text: str) -> frozenset[str]:
    padded = f"  {text.casefold()}  "
    return frozenset(padded[i : i + 3] for i in range(len(padded) - 2))


class TrigramSimilarity:
    """Dice overlap of character trigrams; deterministic and model-free."""

    def similarity(self, a: str, b: str) -> float:
        if a == b:
            return 1.0
        ta, tb = _trigrams(a), _trigrams(b)
        if not ta and not tb:
            return 1.0
        denom = len(ta) + len(tb)
        return 2 * len(ta & tb) / denom if denom else 0.0


def tool_match(gold: FunctionCall, pred: FunctionCall) -> bool:
    return gold.name == pred.name


def delex_match(gold: FunctionCall, pred: FunctionCall, catalog: ToolCatalog | None = None) -> bool:
    """Names equal, pred params within gold params, required gold params kept.

    Required-ness comes from the catalog; params (or whole tools) the catalog
    does not know are treated as required, so unknown tools demand identical
    param sets.
    """
    if gold.name != pred.name:
        return False
    gold_params = set(gold.args)
    pred_params = set(pred.args)
    if not pred_params <= gold_params:
        return False
    catalog = catalog or default_catalog()
    tool = catalog.get(gold.name)
    if tool is None:
        required = gold_params
    else:
        required = {
            name
            for name in gold_params
            if (spec := tool.param(name)) is None or spec.required
        }
    return required <= pred_params


def _value_matches(
    domain_kind: str,
    gold_value,
    pred_value,
    provider: SimilarityProvider,
    threshold: float,
) -> bool:
    if domain_kind == "open-string":
        if gold_value == pred_value:
            return True
        return provider.similarity(str(gold_value), str(pred_value)) > threshold
    if domain_kind == "number":
        return (
            isinstance(gold_value, (int, float))
            and isinstance(pred_value, (int, float))
            and gold_value == pred_value
        )
    # enum / timestamp / time-range: exact equality, no leniency
    return gold_value == pred_value


def full_match(
    gold: FunctionCall,
    pred: FunctionCall,
    provider: SimilarityProvider,
    threshold: float = DEFAULT_THRESHOLD,
    catalog: ToolCatalog | None = None,
) -> bool:
    catalog = catalog or default_catalog()
    if not delex_match(gold, pred, catalog):
        return False
    tool = catalog.get(gold.name)
    for name, pred_value in pred.args.items():  # shared params == pred's params
        spec = tool.param(name) if tool is not None else None
        kind = spec.domain.kind if spec is not None else "open-string"
        if not _value_matches(kind, gold.args[name], pred_value, provider, threshold):
            return False
    return True


def match_level(
    gold: FunctionCall,
    pred: FunctionCall,
    provider: SimilarityProvider,
    threshold: float = DEFAULT_THRESHOLD,
    catalog: ToolCatalog | None = None,
) -> str | None:
    """Strongest level the pair satisfies; full implies delex implies tool."""
    if not tool_match(gold, pred):
        return None
    if not delex_match(gold, pred, catalog):
        return LEVEL_TOOL
    if not full_match(gold, pred, provider, threshold, catalog):
        return LEVEL_DELEX
    return LEVEL_FULL


# ---------------------------------------------------------------------------
# Maximum one-to-one matching over a boolean edge matrix

def _exact_assignment(edges: list[list[bool]]) -> list[tuple[int, int]]:
    """Maximum matching by bitmask DP over the smaller side; exact."""
    n_rows = len(edges)
    n_cols = len(edges[0]) if edges else 0
    transposed = n_cols < n_rows
    if transposed:
        edges = [[edges[r][c] for r in range(n_rows)] for c in range(n_cols)]
        n_rows, n_cols = n_cols, n_rows

    # rows are now the smaller side; recurse over columns with a row bitmask
    @lru_cache(maxsize=None)
    def best(col: int, used: int) -> tuple[int, tuple[tuple[int, int], ...]]:
        if col == n_cols:
            return 0, ()
        count, pairs = best(col + 1, used)
        for row in range(n_rows):
            if used & (1 << row) or not edges[row][col]:
                continue
            sub_count, sub_pairs = best(col + 1, used | (1 << row))
            if sub_count + 1 > count:
                count, pairs = sub_count + 1, ((row, col),) + sub_pairs
        return count, pairs

    _, pairs = best(0, 0)
    best.cache_clear()
    return [(c, r) if transposed else (r, c) for r, c in pairs]


def _greedy_assignment(
    edges: list[list[bool]], scores: list[list[float]]
) -> list[tuple[int, int]]:
    """Deterministic greedy fallback for oversized plans: highest score first,
    ties by (row, col) index.
    """
    candidates = [
        (-scores[r][c], r, c)
        for r in range(len(edges))
        for c in range(len(edges[0]) if edges else 0)
        if edges[r][c]
    ]
    candidates.sort()
    used_rows: set[int] = set()
    used_cols: set[int] = set()
    pairs = []
    for _, r, c in candidates:
        if r in used_rows or c in used_cols:
            continue
        used_rows.add(r)
        used_cols.add(c)
        pairs.append((r, c))
    return pairs


def max_matching(
    edges: list[list[bool]], scores: list[list[float]] | None = None
) -> list[tuple[int, int]]:
    """(row, col) pairs of a maximum (or greedy, when huge) one-to-one matching."""
    n_rows = len(edges)
    n_cols = len(edges[0]) if edges else 0
    if min(n_rows, n_cols) <= EXACT_MATCHING_LIMIT:
        return _exact_assignment(edges)
    if scores is None:
        scores = [[1.0 if e else 0.0 for e in row] for row in edges]
    return _greedy_assignment(edges, scores)


def f1_from_counts(matches: int, gold_size: int, pred_size: int) -> float:
    """2m/(|gold|+|pred|); the empty-vs-empty comparison scores 1.0."""
    if gold_size == 0 and pred_size == 0:
        return 1.0
    return 2 * matches / (gold_size + pred_size)


@dataclass(frozen=True)
class PlanComparison:
    """Full evidence for one (gold, pred) plan comparison."""

    gold: tuple[FunctionCall, ...]
    pred: tuple[FunctionCall, ...]
    tool_pairs: tuple[tuple[int, int], ...]  # (pred index, gold index)
    delex_pairs: tuple[tuple[int, int], ...]
    full_pairs: tuple[tuple[int, int], ...]

    @property
    def tool_f1(self) -> float:
        return f1_from_counts(len(self.tool_pairs), len(self.gold), len(self.pred))

    @property
    def delex_f1(self) -> float:
        return f1_from_counts(len(self.delex_pairs), len(self.gold), len(self.pred))

    @property
    def plan_f1(self) -> float:
        return f1_from_counts(len(self.full_pairs), len(self.gold), len(self.pred))

    @property
    def unmatched_pred(self) -> tuple[int, ...]:
        matched = {p for p, _ in self.full_pairs}
        return tuple(i for i in range(len(self.pred)) if i not in matched)

    @property
    def unmatched_gold(self) -> tuple[int, ...]:
        matched = {g for _, g in self.full_pairs}
        return tuple(i for i in range(len(self.gold)) if i not in matched)

    def scores(self) -> tuple[float, float, float]:
        return self.tool_f1, self.delex_f1, self.plan_f1


def compare_plans(
    gold: Sequence[FunctionCall],
    pred: Sequence[FunctionCall],
    provider: SimilarityProvider | None = None,
    threshold: float = DEFAULT_THRESHOLD,
    catalog: ToolCatalog | None = None,
) -> PlanComparison:
    provider = provider or TrigramSimilarity()
    catalog = catalog or default_catalog()
    n_p, n_g = len(pred), len(gold)

    tool_edges = [[tool_match(gold[g], pred[p]) for g in range(n_g)] for p in range(n_p)]
    delex_edges = [[tool_edges[p][g] and delex_match(gold[g], pred[p], catalog) for g in range(n_g)] for p in range(n_p)]
    full_edges = [
        [delex_edges[p][g] and full_match(gold[g], pred[p], provider, threshold, catalog) for g in range(n_g)]
        for p in range(n_p)
    ]

    def value_score(p: int, g: int) -> float:
        sims = [
            provider.similarity(str(gold[g].args[k]), str(pred[p].args[k]))
            for k in pred[p].args
            if k in gold[g].args
        ]
        return sum(sims) / len(sims) if sims else 1.0

    full_scores = [
        [value_score(p, g) if full_edges[p][g] else 0.0 for g in range(n_g)] for p in range(n_p)
    ]
    return PlanComparison(
        gold=tuple(gold),
        pred=tuple(pred),
        tool_pairs=tuple(max_matching(tool_edges)),
        delex_pairs=tuple(max_matching(delex_edges)),
        full_pairs=tuple(max_matching(full_edges, full_scores)),
    )


def tool_f1(gold: Sequence[FunctionCall], pred: Sequence[FunctionCall]) -> float:
    edges = [[tool_match(g, p) for g in gold] for p in pred]
    return f1_from_counts(len(max_matching(edges)), len(gold), len(pred))


def delex_f1(
    gold: Sequence[FunctionCall],
    pred: Sequence[FunctionCall],
    catalog: ToolCatalog | None = None,
) -> float:
    edges = [[delex_match(g, p, catalog) for g in gold] for p in pred]
    return f1_from_counts(len(max_matching(edges)), len(gold), len(pred))


def plan_f1(
    gold: Sequence[FunctionCall],
    pred: Sequence[FunctionCall],
    provider: SimilarityProvider | None = None,
    threshold: float = DEFAULT_THRESHOLD,
    catalog: ToolCatalog | None = None,
) -> float:
    return compare_plans(gold, pred, provider, threshold, catalog).plan_f1


# ---------------------------------------------------------------------------
# Corpus-level reports

class QueryIdMismatch(ValueError):
    def __init__(self, missing_pred: Sequence[str], missing_gold: Sequence[str]):
        self.missing_pred = tuple(missing_pred)
        self.missing_gold = tuple(missing_gold)
        super().__init__(
            f"query ids do not align: missing from predictions {list(missing_pred)}, "
            f"unknown to gold {list(missing_gold)}"
        )


@dataclass(frozen=True)
class QueryScore:
    query_id: str
    tool_f1: float
    delex_f1: float
    plan_f1: float
    matched_full: int
    gold_size: int
    pred_size: int

    def to_json(self) -> dict:
        return {
            "query_id": self.query_id,
            "tool_f1": self.tool_f1,
            "delex_f1": self.delex_f1,
            "plan_f1": self.plan_f1,
            "matched_full": self.matched_full,
            "gold_size": self.gold_size,
            "pred_size": self.pred_size,
        }


@dataclass
class EvalReport:
    scores: list[QueryScore]
    averaging: str = "macro"
    threshold: float = DEFAULT_THRESHOLD
    warnings: list[str] = field(default_factory=list)

    def _mean(self, metric: str) -> float:
        if not self.scores:
            return 0.0
        return sum(getattr(s, metric) for s in self.scores) / len(self.scores)

    @property
    def corpus(self) -> tuple[float, float, float]:
        return self._mean("tool_f1"), self._mean("delex_f1"), self._mean("plan_f1")

    def to_json(self) -> dict:
        tool, delex, plan = self.corpus
        return {
            "format_version": 1,
            "averaging": self.averaging,
            "threshold": self.threshold,
            "query_count": len(self.scores),
            "corpus": {"tool_f1": tool, "delex_f1": delex, "plan_f1": plan},
            "per_query": [s.to_json() for s in self.scores],
            "warnings": self.warnings,
        }

    def format_table(self) -> str:
        tool, delex, plan = self.corpus
        width = 30
        lines = [
            f"{'Metric':<{width}}{'Value':>8}",
            "-" * (width + 8),
            f"{'Tool F1 / %':<{width}}{100 * tool:>8.2f}",
            f"{'Delexicalized Plan F1 / %':<{width}}{100 * delex:>8.2f}",
            f"{'Plan F1 / %':<{width}}{100 * plan:>8.2f}",
        ]
        return "\n".join(lines)


def evaluate_corpus(
    pairs: Sequence[tuple[str, Sequence[FunctionCall], Sequence[FunctionCall]]],
    provider: SimilarityProvider | None = None,
    threshold: float = DEFAULT_THRESHOLD,
    catalog: ToolCatalog | None = None,
    averaging: str = "macro",
) -> EvalReport:
    """Score (query_id, gold plan, predicted plan) triples.

    Macro averaging (the default) means each query contributes equally;
    micro pools match counts across the corpus before computing F1.
    """
    if averaging not in ("macro", "micro"):
        raise ValueError(f"averaging must be macro or micro, got {averaging!r}")
    provider = provider or TrigramSimilarity()
    catalog = catalog or default_catalog()
    scores = []
    for query_id, gold, pred in pairs:
        cmp = compare_plans(gold, pred, provider, threshold, catalog)
        tool, delex, plan = cmp.scores()
        scores.append(
            QueryScore(
                query_id=query_id,
                tool_f1=tool,
                delex_f1=delex,
                plan_f1=plan,
                matched_full=len(cmp.full_pairs),
                gold_size=len(gold),
                pred_size=len(pred),
            )
        )
    report = EvalReport(scores=scores, averaging=averaging, threshold=threshold)
    if averaging == "micro":
        # recompute corpus means by pooling counts; per-query rows stay macro
        report = _micro_report(pairs, provider, threshold, catalog, scores)
    return report


class _MicroReport(EvalReport):
    def __init__(self, scores, threshold, corpus_triple):
        super().__init__(scores=scores, averaging="micro", threshold=threshold)
        self._triple = corpus_triple

    @property
    def corpus(self) -> tuple[float, float, float]:
        return self._triple


def _micro_report(pairs, provider, threshold, catalog, scores) -> EvalReport:
    totals = {"tool": 0, "delex": 0, "full": 0}
    size = 0
    for _, gold, pred in pairs:
        cmp = compare_plans(gold, pred, provider, threshold, catalog)
        totals["tool"] += len(cmp.tool_pairs)
        totals["delex"] += len(cmp.delex_pairs)
        totals["full"] += len(cmp.full_pairs)
        size += len(gold) + len(pred)
    if size == 0:
        triple = (1.0, 1.0, 1.0)
    else:
        triple = (2 * totals["tool"] / size, 2 * totals["delex"] / size, 2 * totals["full"] / size)
    return _MicroReport(scores, threshold, triple)
