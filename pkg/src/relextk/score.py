"""Prediction scoring for directed relation labels.

Three regimes:

* way18 -- every directed label is its own class (18 classes);
* way9-directed -- one class per relation type; a true positive needs
  type AND direction to match, but precision/recall denominators count
  any-direction occurrences of the type;
* way9-undirected -- type match suffices.

Other is a class in the confusion matrix and contributes false
positives/negatives to real classes, but is never averaged ("9+1":
trained and tested, excluded from F1 aggregation).  Zero denominators
score 0, never NaN.  Macro averages skip classes absent from both gold
and predictions unless include_empty_classes is set.

``oracle_score`` is a deliberately naive re-implementation kept free of
shared code with ``score``; agreement between the two within 1e-9 is a
standing test.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .corpus import Corpus, LabelError, RelationLabel, RelationType

OTHER = "Other"


class Way(Enum):
    WAY18 = "way18"
    WAY9_DIRECTED = "way9-directed"
    WAY9_UNDIRECTED = "way9-undirected"


@dataclass(frozen=True)
class Regime:
    way: Way
    averaging: str = "macro"
    include_empty_classes: bool = False

    def __post_init__(self):
        if self.averaging not in ("macro", "micro"):
            raise ValueError(f"averaging must be macro or micro, got {self.averaging!r}")

    def class_names(self) -> list[str]:
        """Scored classes (Other excluded), in canonical order."""
        if self.way == Way.WAY18:
            return [f"{t.value}({d})" for t in RelationType
                    for d in ("e1,e2", "e2,e1")]
        return [t.value for t in RelationType]


@dataclass(frozen=True)
class PredictionSet:
    """Aligned (id, gold, predicted) label triples."""

    rows: tuple[tuple[int, RelationLabel, RelationLabel], ...]

    def __post_init__(self):
        if not self.rows:
            raise ValueError("prediction set is empty")
        ids = [r[0] for r in self.rows]
        if len(set(ids)) != len(ids):
            dupes = sorted({i for i in ids if ids.count(i) > 1})
            raise ValueError(f"duplicate prediction ids: {dupes}")

    def __len__(self) -> int:
        return len(self.rows)


@dataclass(frozen=True)
class ClassScore:
    tp: int
    gold_count: int
    pred_count: int
    precision: float
    recall: float
    f1: float


@dataclass
class ScoreReport:
    regime: Regime
    per_class: dict[str, ClassScore]
    micro_precision: float
    micro_recall: float
    micro_f1: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    confusion: dict[str, dict[str, int]]
    warnings: list[str] = field(default_factory=list)

    @property
    def f1(self) -> float:
        """Headline score per the regime's averaging choice."""
        return self.macro_f1 if self.regime.averaging == "macro" else self.micro_f1

    def to_dict(self) -> dict:
        return {
            "regime": {"way": self.regime.way.value,
                       "averaging": self.regime.averaging,
                       "include_empty_classes": self.regime.include_empty_classes},
            "per_class": {
                name: {"tp": cs.tp, "gold": cs.gold_count, "predicted": cs.pred_count,
                       "precision": cs.precision, "recall": cs.recall, "f1": cs.f1}
                for name, cs in self.per_class.items()
            },
            "micro": {"precision": self.micro_precision, "recall": self.micro_recall,
                      "f1": self.micro_f1},
            "macro": {"precision": self.macro_precision, "recall": self.macro_recall,
                      "f1": self.macro_f1},
            "confusion": self.confusion,
            "warnings": list(self.warnings),
        }

    def table(self) -> str:
        """Aligned plain-text table of per-class and aggregate scores."""
        width = max(len(name) for name in list(self.per_class) + ["macro", "micro"])
        lines = [f"{'class':<{width}}  {'P':>7} {'R':>7} {'F1':>7} {'gold':>6} {'pred':>6}"]
        for name, cs in self.per_class.items():
            lines.append(f"{name:<{width}}  {cs.precision:7.4f} {cs.recall:7.4f} "
                         f"{cs.f1:7.4f} {cs.gold_count:6d} {cs.pred_count:6d}")
        lines.append(f"{'micro':<{width}}  {self.micro_precision:7.4f} "
                     f"{self.micro_recall:7.4f} {self.micro_f1:7.4f}")
        lines.append(f"{'macro':<{width}}  {self.macro_precision:7.4f} "
                     f"{self.macro_recall:7.4f} {self.macro_f1:7.4f}")
        for w in self.warnings:
            lines.append(f"warning: {w}")
        return "\n".join(lines)


def _prf(tp: int, pred_count: int, gold_count: int) -> tuple[float, float, float]:
    p = tp / pred_count if pred_count else 0.0
    r = tp / gold_count if gold_count else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


def _project(label: RelationLabel, way: Way) -> str:
    """Label's class key in this regime (Other stays Other)."""
    if label.is_other:
        return OTHER
    if way == Way.WAY18:
        return str(label)
    return label.rtype.value


def _is_tp(gold: RelationLabel, pred: RelationLabel, cls: str, way: Way) -> bool:
    if way == Way.WAY18:
        return str(gold) == cls and str(pred) == cls
    if gold.is_other or pred.is_other:
        return False
    if gold.rtype.value != cls or pred.rtype.value != cls:
        return False
    if way == Way.WAY9_DIRECTED:
        return gold.direction == pred.direction
    return True


def score(preds: PredictionSet, regime: Regime) -> ScoreReport:
    """Score predictions against gold labels under the given regime."""
    names = regime.class_names()
    per_class: dict[str, ClassScore] = {}
    for cls in names:
        tp = sum(1 for _, g, p in preds.rows if _is_tp(g, p, cls, regime.way))
        pred_count = sum(1 for _, _, p in preds.rows
                         if _project(p, regime.way) == cls)
        gold_count = sum(1 for _, g, _ in preds.rows
                         if _project(g, regime.way) == cls)
        p, r, f1 = _prf(tp, pred_count, gold_count)
        per_class[cls] = ClassScore(tp, gold_count, pred_count, p, r, f1)

    tp_sum = sum(cs.tp for cs in per_class.values())
    pred_sum = sum(cs.pred_count for cs in per_class.values())
    gold_sum = sum(cs.gold_count for cs in per_class.values())
    micro_p, micro_r, micro_f1 = _prf(tp_sum, pred_sum, gold_sum)

    warnings: list[str] = []
    if regime.include_empty_classes:
        averaged = list(per_class.values())
    else:
        averaged = [cs for cs in per_class.values()
                    if cs.gold_count or cs.pred_count]
    if averaged:
        macro_p = sum(cs.precision for cs in averaged) / len(averaged)
        macro_r = sum(cs.recall for cs in averaged) / len(averaged)
        macro_f1 = sum(cs.f1 for cs in averaged) / len(averaged)
    else:
        macro_p = macro_r = macro_f1 = 0.0
        warnings.append("empty class set: no non-Other labels in gold or predictions")

    matrix_names = names + [OTHER]
    confusion = {g: {p: 0 for p in matrix_names} for g in matrix_names}
    for _, g, p in preds.rows:
        confusion[_project(g, regime.way)][_project(p, regime.way)] += 1

    return ScoreReport(regime=regime, per_class=per_class,
                       micro_precision=micro_p, micro_recall=micro_r,
                       micro_f1=micro_f1, macro_precision=macro_p,
                       macro_recall=macro_r, macro_f1=macro_f1,
                       confusion=confusion, warnings=warnings)


def oracle_score(preds: PredictionSet, regime: Regime) -> ScoreReport:
    """Independent verification path for ``score``.

    Works purely on canonical label strings: materializes the full
    19x19 string-level confusion matrix, then derives every count and
    metric from it by the textbook formulas.
    """
    full: dict[tuple[str, str], int] = {}
    for _, g, p in preds.rows:
        key = (str(g), str(p))
        full[key] = full.get(key, 0) + 1

    def type_of(label_str: str) -> str:
        return label_str.split("(")[0] if label_str != OTHER else OTHER

    def key_of(label_str: str) -> str:
        if regime.way == Way.WAY18:
            return label_str
        return type_of(label_str)

    def pair_is_tp(g: str, p: str, cls: str) -> bool:
        if g == OTHER or p == OTHER:
            return False
        if regime.way == Way.WAY18:
            return g == cls and p == cls
        if regime.way == Way.WAY9_DIRECTED:
            # Same type + same direction means the full strings coincide.
            return type_of(g) == cls and g == p
        return type_of(g) == cls and type_of(p) == cls

    names = regime.class_names()
    per_class: dict[str, ClassScore] = {}
    for cls in names:
        tp = sum(n for (g, p), n in full.items() if pair_is_tp(g, p, cls))
        pred_count = sum(n for (_, p), n in full.items() if key_of(p) == cls)
        gold_count = sum(n for (g, _), n in full.items() if key_of(g) == cls)
        precision = tp / pred_count if pred_count > 0 else 0.0
        recall = tp / gold_count if gold_count > 0 else 0.0
        if precision + recall > 0:
            f1 = 2 * precision * recall / (precision + recall)
        else:
            f1 = 0.0
        per_class[cls] = ClassScore(tp, gold_count, pred_count,
                                    precision, recall, f1)

    tp_sum = sum(cs.tp for cs in per_class.values())
    fp_sum = sum(cs.pred_count - cs.tp for cs in per_class.values())
    fn_sum = sum(cs.gold_count - cs.tp for cs in per_class.values())
    micro_p = tp_sum / (tp_sum + fp_sum) if tp_sum + fp_sum > 0 else 0.0
    micro_r = tp_sum / (tp_sum + fn_sum) if tp_sum + fn_sum > 0 else 0.0
    micro_f1 = (2 * micro_p * micro_r / (micro_p + micro_r)
                if micro_p + micro_r > 0 else 0.0)

    if regime.include_empty_classes:
        eligible = names
    else:
        eligible = [c for c in names
                    if per_class[c].gold_count > 0 or per_class[c].pred_count > 0]
    warnings: list[str] = []
    if eligible:
        macro_p = sum(per_class[c].precision for c in eligible) / len(eligible)
        macro_r = sum(per_class[c].recall for c in eligible) / len(eligible)
        macro_f1 = sum(per_class[c].f1 for c in eligible) / len(eligible)
    else:
        macro_p = macro_r = macro_f1 = 0.0
        warnings.append("empty class set: no non-Other labels in gold or predictions")

    matrix_names = names + [OTHER]
    confusion = {g: {p: 0 for p in matrix_names} for g in matrix_names}
    for (g, p), n in full.items():
        confusion[key_of(g)][key_of(p)] += n

    return ScoreReport(regime=regime, per_class=per_class,
                       micro_precision=micro_p, micro_recall=micro_r,
                       micro_f1=micro_f1, macro_precision=macro_p,
                       macro_recall=macro_r, macro_f1=macro_f1,
                       confusion=confusion, warnings=warnings)


def per_relation_report(preds: PredictionSet) -> list[tuple[str, ClassScore]]:
    """Diagnostic table: way9-directed F1 per relation type, plus an
    Other row where Other is scored as an ordinary class."""
    report = score(preds, Regime(Way.WAY9_DIRECTED))
    rows = list(report.per_class.items())
    other_tp = sum(1 for _, g, p in preds.rows if g.is_other and p.is_other)
    other_pred = sum(1 for _, _, p in preds.rows if p.is_other)
    other_gold = sum(1 for _, g, _ in preds.rows if g.is_other)
    p, r, f1 = _prf(other_tp, other_pred, other_gold)
    rows.append((OTHER, ClassScore(other_tp, other_gold, other_pred, p, r, f1)))
    return rows


def format_relation_table(rows: list[tuple[str, ClassScore]]) -> str:
    width = max(len(name) for name, _ in rows)
    lines = [f"{'relation':<{width}}  {'F1':>7}"]
    for name, cs in rows:
        lines.append(f"{name:<{width}}  {cs.f1:7.4f}")
    return "\n".join(lines)


def load_predictions_jsonl(path: str | Path) -> PredictionSet:
    """One {id, gold, pred} object per line, canonical label strings."""
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                rows.append((int(rec["id"]),
                             RelationLabel.parse(rec["gold"]),
                             RelationLabel.parse(rec["pred"])))
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise LabelError(f"{path}:{lineno}: bad prediction record ({exc})") from exc
            except LabelError as exc:
                raise LabelError(f"{path}:{lineno}: {exc}") from exc
    return PredictionSet(tuple(rows))


def load_predictions_tsv(path: str | Path, gold: Corpus) -> PredictionSet:
    """Two-column ``id<TAB>label`` predictions paired with a gold corpus."""
    gold_labels = {s.id: s.label for s in gold}
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.rstrip("\n").rstrip("\r")
            if not line.strip():
                continue
            if "\t" not in line:
                raise LabelError(f"{path}:{lineno}: expected id<TAB>label")
            id_str, label_str = line.split("\t", 1)
            try:
                sid = int(id_str)
            except ValueError as exc:
                raise LabelError(f"{path}:{lineno}: non-numeric id {id_str!r}") from exc
            if sid not in gold_labels:
                raise LabelError(f"{path}:{lineno}: id {sid} not in gold corpus")
            try:
                pred = RelationLabel.parse(label_str.strip())
            except LabelError as exc:
                raise LabelError(f"{path}:{lineno}: sentence {sid}: {exc}") from exc
            rows.append((sid, gold_labels[sid], pred))
    return PredictionSet(tuple(rows))
