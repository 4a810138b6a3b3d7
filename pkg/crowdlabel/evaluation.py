"""Standard and ambiguity-weighted evaluation, McNemar's test and fold plans."""
import logging
import math
from typing import Dict, Iterable, List, Mapping, NamedTuple, Optional, Sequence, Tuple

from statsmodels.stats.contingency_tables import mcnemar as sm_mcnemar

from .base_logger import get_logger
from .exceptions import ConfigError, CoverageError, DataError
from .host import counter_rng, pmap
from .models import PredictionRecord, Record
from .scoring import crowd_labels


class ConfusionCounts(Record):
    tp: int = 0
    fp: int = 0
    tn: int = 0
    fn: int = 0

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def __add__(self, other: "ConfusionCounts") -> "ConfusionCounts":
        return ConfusionCounts(
            tp=self.tp + other.tp,
            fp=self.fp + other.fp,
            tn=self.tn + other.tn,
            fn=self.fn + other.fn,
        )


class PRF(NamedTuple):
    precision: float
    recall: float
    f1: float
    degenerate: Tuple[str, ...]


class WeightedSums(NamedTuple):
    """Weighted tp, fp and fn mass: sum srs*tp, sum (1-srs)*fp, sum srs*fn."""

    tp: float
    fp: float
    fn: float


class MetricsReport(Record):
    counts: ConfusionCounts
    precision: float
    recall: float
    f1: float
    accuracy: float
    weighted_precision: Optional[float] = None
    weighted_recall: Optional[float] = None
    weighted_f1: Optional[float] = None
    weighted_tp: Optional[float] = None
    weighted_fp: Optional[float] = None
    weighted_fn: Optional[float] = None
    degenerate: Tuple[str, ...] = ()


def _ratio(num: float, den: float, name: str, flags: List[str]) -> float:
    if den == 0:
        flags.append(name)
        return 0.0
    return num / den


def _prf(tp: float, fp: float, fn: float, prefix: str = "") -> PRF:
    flags: List[str] = []
    p = _ratio(tp, tp + fp, f"{prefix}precision", flags)
    r = _ratio(tp, tp + fn, f"{prefix}recall", flags)
    f1 = _ratio(2 * p * r, p + r, f"{prefix}f1", flags)
    return PRF(precision=p, recall=r, f1=f1, degenerate=tuple(flags))


def confusion(predicted: Mapping[str, bool], gold: Mapping[str, bool]) -> ConfusionCounts:
    """
    Confusion counts over the gold sentences. Every gold sentence needs a
    prediction; extra predictions are ignored.
    """
    missing = sorted(sid for sid in gold if sid not in predicted)
    if missing:
        raise CoverageError("No prediction for gold sentence(s)", missing)
    tp = fp = tn = fn = 0
    for sid in sorted(gold):
        if predicted[sid]:
            if gold[sid]:
                tp += 1
            else:
                fp += 1
        elif gold[sid]:
            fn += 1
        else:
            tn += 1
    return ConfusionCounts(tp=tp, fp=fp, tn=tn, fn=fn)


def metrics(counts: ConfusionCounts) -> PRF:
    """P = tp/(tp+fp), R = tp/(tp+fn), F1 their harmonic mean; 0 and flagged on 0/0."""
    return _prf(counts.tp, counts.fp, counts.fn)


def weighted_sums(
    predicted: Mapping[str, bool], gold: Mapping[str, bool], srs: Mapping[str, float]
) -> WeightedSums:
    missing = sorted(sid for sid in gold if sid not in srs)
    if missing:
        raise CoverageError("No sentence-relation score for gold sentence(s)", missing)
    confusion(predicted, gold)
    tp, fp, fn = [], [], []
    for sid in sorted(gold):
        if predicted[sid] and gold[sid]:
            tp.append(srs[sid])
        elif predicted[sid]:
            fp.append(1 - srs[sid])
        elif gold[sid]:
            fn.append(srs[sid])
    return WeightedSums(tp=math.fsum(tp), fp=math.fsum(fp), fn=math.fsum(fn))


def weighted_metrics(
    predicted: Mapping[str, bool], gold: Mapping[str, bool], srs: Mapping[str, float]
) -> PRF:
    """
    P' = sum srs*tp / sum (srs*tp + (1-srs)*fp)
    R' = sum srs*tp / sum (srs*tp + srs*fn)
    F1' = 2P'R'/(P'+R')
    """
    sums = weighted_sums(predicted, gold, srs)
    return _prf(sums.tp, sums.fp, sums.fn, prefix="weighted_")


def _report(counts: ConfusionCounts, sums: Optional[WeightedSums]) -> MetricsReport:
    standard = metrics(counts)
    flags = list(standard.degenerate)
    accuracy = _ratio(counts.tp + counts.tn, counts.total, "accuracy", flags)
    weighted: Dict[str, Optional[float]] = {}
    if sums is not None:
        prf = _prf(sums.tp, sums.fp, sums.fn, prefix="weighted_")
        flags.extend(prf.degenerate)
        weighted = {
            "weighted_precision": prf.precision,
            "weighted_recall": prf.recall,
            "weighted_f1": prf.f1,
            "weighted_tp": sums.tp,
            "weighted_fp": sums.fp,
            "weighted_fn": sums.fn,
        }
    return MetricsReport(
        counts=counts,
        precision=standard.precision,
        recall=standard.recall,
        f1=standard.f1,
        accuracy=accuracy,
        degenerate=tuple(flags),
        **weighted,
    )


def annotation_quality(
    candidate: Mapping[str, bool],
    gold: Mapping[str, bool],
    srs: Optional[Mapping[str, float]] = None,
) -> MetricsReport:
    """Standard and, when srs is given, weighted metrics of any labelling against gold."""
    counts = confusion(candidate, gold)
    sums = weighted_sums(candidate, gold, srs) if srs is not None else None
    return _report(counts, sums)


def micro_average(reports: Sequence[MetricsReport]) -> MetricsReport:
    """Pool raw counts (and weighted sums when every report has them) and recompute."""
    if not reports:
        raise DataError("micro_average needs at least one report")
    counts = ConfusionCounts()
    for report in reports:
        counts = counts + report.counts
    sums = None
    if all(r.weighted_tp is not None for r in reports):
        sums = WeightedSums(
            tp=math.fsum(r.weighted_tp or 0.0 for r in reports),
            fp=math.fsum(r.weighted_fp or 0.0 for r in reports),
            fn=math.fsum(r.weighted_fn or 0.0 for r in reports),
        )
    return _report(counts, sums)


class SweepPoint(NamedTuple):
    threshold: float
    report: MetricsReport


def threshold_sweep(
    scores: Mapping[str, float],
    gold: Mapping[str, bool],
    srs: Mapping[str, float],
    grid: Sequence[float],
    threads: Optional[int] = 1,
) -> List[SweepPoint]:
    """Annotation quality of the crowd labels at each threshold of the grid."""
    for t in grid:
        if not 0 <= t <= 1:
            raise ConfigError(f"Threshold grid values must lie in [0, 1], got {t}")
    missing = sorted(sid for sid in gold if sid not in scores)
    if missing:
        raise CoverageError("No crowd score for gold sentence(s)", missing)
    subset = {sid: scores[sid] for sid in gold}
    return pmap(
        lambda t: SweepPoint(t, annotation_quality(crowd_labels(subset, t), gold, srs)),
        sorted(grid),
        threads,
    )


# significance


class McNemarResult(Record):
    b: int
    c: int
    # None for the exact binomial test, which has no chi-square statistic
    chi_square: Optional[float]
    p_value: float
    correction: bool
    exact: bool = False
    degenerate: bool = False


def paired_correctness(
    system_a: Mapping[str, bool], system_b: Mapping[str, bool], gold: Mapping[str, bool]
) -> List[Tuple[bool, bool]]:
    """Per gold sentence (id order): whether each system labelled it correctly."""
    missing = sorted(
        sid for sid in gold if sid not in system_a or sid not in system_b
    )
    if missing:
        raise CoverageError("Both systems must label every gold sentence", missing)
    return [
        (system_a[sid] == gold[sid], system_b[sid] == gold[sid]) for sid in sorted(gold)
    ]


def chi2_sf_1dof(chi_square: float) -> float:
    """Upper tail of the 1-dof chi-square: P(X > x) = erfc(sqrt(x / 2))."""
    return math.erfc(math.sqrt(chi_square / 2))


def mcnemar(
    pairs: Iterable[Tuple[bool, bool]], correction: bool = True, exact: bool = False
) -> McNemarResult:
    """
    McNemar's test on paired correctness. b counts items only the first system
    got right, c items only the second got right. With no discordant pairs the
    result is chi_square 0, p 1 and flagged degenerate. Exact runs report the
    binomial p-value and no chi-square.
    """
    table = [[0, 0], [0, 0]]
    for a_correct, b_correct in pairs:
        table[0 if a_correct else 1][0 if b_correct else 1] += 1
    b, c = table[0][1], table[1][0]
    if b + c == 0:
        return McNemarResult(
            b=b,
            c=c,
            chi_square=None if exact else 0.0,
            p_value=1.0,
            correction=correction,
            exact=exact,
            degenerate=True,
        )
    result = sm_mcnemar(table, exact=exact, correction=correction)
    statistic: Optional[float]
    if exact:
        statistic = None
        p_value = float(result.pvalue)
    else:
        statistic = float(result.statistic)
        p_value = chi2_sf_1dof(statistic)
    return McNemarResult(
        b=b,
        c=c,
        chi_square=statistic,
        p_value=min(1.0, p_value),
        correction=correction,
        exact=exact,
    )


# cross-validation


class SplitPlan(Record):
    k: int
    seed: int
    folds: Dict[str, int]
    always_train: Tuple[str, ...] = ()
    stratified: bool = False

    def fold_ids(self, fold: int) -> List[str]:
        return sorted(sid for sid, f in self.folds.items() if f == fold)

    def fold_sizes(self) -> List[int]:
        return [len(self.fold_ids(f)) for f in range(self.k)]


def make_splits(
    expert_ids: Iterable[str],
    all_ids: Iterable[str] = (),
    k: int = 5,
    seed: int = 0,
    stratify_by: Optional[Mapping[str, bool]] = None,
) -> SplitPlan:
    """
    Seeded partition of the expert-annotated sentences into k folds. Every other
    sentence goes to always_train. With stratify_by, positives and negatives are
    dealt out separately so each fold gets a share of both.
    """
    subset = sorted(set(expert_ids))
    if not subset:
        raise DataError("Cannot split an empty expert-annotated subset")
    if k < 1:
        raise ConfigError(f"Fold count must be at least 1, got {k}")
    if k > len(subset):
        raise ConfigError(
            f"Fold count {k} exceeds the {len(subset)} expert-annotated sentence(s)"
        )

    if stratify_by is None:
        strata = [("all", subset)]
    else:
        strata = [
            ("positive", [sid for sid in subset if stratify_by.get(sid, False)]),
            ("negative", [sid for sid in subset if not stratify_by.get(sid, False)]),
        ]
    folds: Dict[str, int] = {}
    position = 0
    for name, members in strata:
        order = counter_rng("splits", seed, name).permutation(len(members))
        for i in order:
            folds[members[int(i)]] = position % k
            position += 1

    in_subset = set(subset)
    always_train = tuple(sorted({sid for sid in all_ids if sid not in in_subset}))
    return SplitPlan(
        k=k,
        seed=seed,
        folds={sid: folds[sid] for sid in sorted(folds)},
        always_train=always_train,
        stratified=stratify_by is not None,
    )


class FoldReport(NamedTuple):
    fold: int
    report: MetricsReport


class FoldMean(Record):
    folds: int
    precision: float
    recall: float
    f1: float
    accuracy: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float


class PredictionEvaluation(NamedTuple):
    relation: str
    folds: List[FoldReport]
    mean: FoldMean
    pooled: MetricsReport


def prediction_labels(
    predictions: Iterable[PredictionRecord], relation: str
) -> Dict[str, bool]:
    labels: Dict[str, bool] = {}
    for p in predictions:
        if p.relation != relation:
            continue
        if p.sentence_id in labels:
            raise DataError(f"Two predictions for ({p.sentence_id}, {relation})")
        labels[p.sentence_id] = p.positive
    return labels


def fold_mean(reports: Sequence[MetricsReport]) -> FoldMean:
    def mean(name: str) -> float:
        return math.fsum(float(getattr(r, name) or 0.0) for r in reports) / len(reports)

    return FoldMean(
        folds=len(reports),
        precision=mean("precision"),
        recall=mean("recall"),
        f1=mean("f1"),
        accuracy=mean("accuracy"),
        weighted_precision=mean("weighted_precision"),
        weighted_recall=mean("weighted_recall"),
        weighted_f1=mean("weighted_f1"),
    )


def evaluate_predictions(
    predictions: Iterable[PredictionRecord],
    relation: str,
    gold: Mapping[str, bool],
    srs: Mapping[str, float],
    plan: Optional[SplitPlan] = None,
    threads: Optional[int] = 1,
    logger: Optional[logging.Logger] = None,
) -> PredictionEvaluation:
    """
    Metrics of a prediction file on each test fold of the plan, their mean, and
    the pooled counts. Without a plan every gold sentence forms one fold.
    Sentences outside the gold set (for instance dropped as unresolved) are
    skipped.
    """
    logger = get_logger(logger)
    labels = prediction_labels(predictions, relation)
    if plan is None:
        test_folds = [sorted(gold)]
    else:
        test_folds = [
            [sid for sid in plan.fold_ids(f) if sid in gold] for f in range(plan.k)
        ]
    tested = {sid for fold in test_folds for sid in fold}
    missing = sorted(sid for sid in tested if sid not in labels)
    if missing:
        raise CoverageError(f"Predictions for '{relation}' are missing", missing)

    def _evaluate(fold: int) -> FoldReport:
        ids = test_folds[fold]
        fold_gold = {sid: gold[sid] for sid in ids}
        return FoldReport(fold, annotation_quality(labels, fold_gold, srs))

    reports = pmap(_evaluate, range(len(test_folds)), threads)
    for fr in reports:
        logger.info(f"Fold {fr.fold}: F1 {fr.report.f1:.4f} on {fr.report.counts.total}")
    return PredictionEvaluation(
        relation=relation,
        folds=reports,
        mean=fold_mean([fr.report for fr in reports]),
        pooled=micro_average([fr.report for fr in reports]),
    )


class LearningPoint(NamedTuple):
    training_size: int
    mean: FoldMean
    pooled: MetricsReport


def learning_curve(
    tagged: Iterable[Tuple[int, Sequence[PredictionRecord]]],
    relation: str,
    gold: Mapping[str, bool],
    srs: Mapping[str, float],
    plan: Optional[SplitPlan] = None,
    threads: Optional[int] = 1,
) -> List[LearningPoint]:
    """One point per prediction file, tagged with the size of its training set."""
    by_size: Dict[int, Sequence[PredictionRecord]] = {}
    for size, predictions in tagged:
        if size in by_size:
            raise DataError(f"Two prediction files tagged with training size {size}")
        by_size[size] = predictions
    points = []
    for size in sorted(by_size):
        result = evaluate_predictions(by_size[size], relation, gold, srs, plan, threads)
        points.append(LearningPoint(size, result.mean, result.pooled))
    return points
