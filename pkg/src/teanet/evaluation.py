"""Binary classification metrics and leave-one-subject-out evaluation.

The positive class is "stressed" (label 1).  Metrics whose denominator is
zero come back as NaN and are named in the report's ``flags``.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from teanet.augmentation import balance
from teanet.errors import ConfigError, DataError
from teanet.model import build_teanet
from teanet.training import fit, stack_segments

log = logging.getLogger(__name__)

METRIC_FIELDS = ("accuracy", "specificity", "sensitivity", "f1", "auc", "kappa")
AGGREGATIONS = ("pooled", "mean")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise DataError(f"confusion counts must be non-negative: {self}")

    @property
    def total(self):
        return self.tp + self.fp + self.tn + self.fn

    @classmethod
    def from_predictions(cls, predicted, labels):
        predicted = np.asarray(predicted).astype(bool)
        labels = np.asarray(labels).astype(bool)
        return cls(tp=int(np.sum(predicted & labels)), fp=int(np.sum(predicted & ~labels)),
                   tn=int(np.sum(~predicted & ~labels)), fn=int(np.sum(~predicted & labels)))

    def __add__(self, other):
        return ConfusionMatrix(self.tp + other.tp, self.fp + other.fp,
                               self.tn + other.tn, self.fn + other.fn)


@dataclass
class MetricsReport:
    accuracy: float
    sensitivity: float
    specificity: float
    f1: float
    kappa: float
    auc: float = math.nan
    confusion: ConfusionMatrix = None
    flags: tuple = ()

    def as_row(self):
        return [getattr(self, name) for name in METRIC_FIELDS]


def _ratio(num, den, name, flags):
    if den == 0:
        flags.append(name)
        return math.nan
    return num / den


def compute_metrics(cm, f1_class=1):
    """Accuracy, sensitivity, specificity, F1 and Cohen's kappa from a confusion matrix.

    ``f1_class`` picks the class F1 is computed for (1 = stressed).
    """
    n = cm.total
    if n == 0:
        raise DataError("cannot compute metrics on an empty confusion matrix")
    if f1_class not in (0, 1):
        raise ConfigError(f"f1_class must be 0 or 1, got {f1_class}")
    flags = []
    acc = (cm.tp + cm.tn) / n
    sens = _ratio(cm.tp, cm.tp + cm.fn, "sensitivity", flags)
    spec = _ratio(cm.tn, cm.tn + cm.fp, "specificity", flags)
    if f1_class == 1:
        hit, miss_a, miss_b = cm.tp, cm.fp, cm.fn
    else:
        hit, miss_a, miss_b = cm.tn, cm.fn, cm.fp
    f1 = _ratio(2 * hit, 2 * hit + miss_a + miss_b, "f1", flags)
    p_e = ((cm.tp + cm.fp) * (cm.tp + cm.fn) + (cm.tn + cm.fn) * (cm.tn + cm.fp)) / (n * n)
    kappa = _ratio(acc - p_e, 1.0 - p_e, "kappa", flags)
    return MetricsReport(acc, sens, spec, f1, kappa, confusion=cm, flags=tuple(flags))


def roc_curve(scores, labels):
    """False/true positive rates at every distinct threshold, starting from (0, 0)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels).astype(bool)
    order = np.argsort(-scores, kind="mergesort")
    s, y = scores[order], labels[order]
    # last index of each block of tied scores
    cut = np.r_[np.nonzero(np.diff(s))[0], len(s) - 1]
    tps = np.cumsum(y)[cut]
    fps = (cut + 1) - tps
    pos, neg = labels.sum(), (~labels).sum()
    return np.r_[0.0, fps / neg], np.r_[0.0, tps / pos]


def auc(scores, labels):
    """Trapezoidal area under the ROC curve; ties count half."""
    labels = np.asarray(labels)
    if len(np.unique(labels)) != 2:
        raise DataError("AUC needs samples of both classes")
    fpr, tpr = roc_curve(scores, labels)
    return float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))


def score_report(probs, labels, threshold=0.5, f1_class=1):
    """Metrics (including AUC) from stressed-class probabilities."""
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels)
    cm = ConfusionMatrix.from_predictions(probs >= threshold, labels)
    report = compute_metrics(cm, f1_class)
    try:
        report.auc = auc(probs, labels)
    except DataError:
        report.flags = report.flags + ("auc",)
    return report


@dataclass
class EvalConfig:
    augment: bool = True
    f1_class: int = 1
    aggregate: str = "pooled"
    threshold: float = 0.5
    fs: float = 64.0

    def __post_init__(self):
        if self.aggregate not in AGGREGATIONS:
            raise ConfigError(f"aggregate must be one of {AGGREGATIONS}, got {self.aggregate!r}")
        if self.f1_class not in (0, 1):
            raise ConfigError(f"f1_class must be 0 or 1, got {self.f1_class}")


@dataclass
class FoldResult:
    subject: str
    train_subjects: tuple
    augmentation_subjects: tuple
    train_size: int
    step: int
    scores: np.ndarray
    labels: np.ndarray
    metrics: MetricsReport
    loss_trace: list = field(default_factory=list)

    @property
    def flagged(self):
        return bool(self.metrics.flags)


@dataclass
class LosoResult:
    folds: list
    aggregate: MetricsReport
    method: str = "pooled"


def subject_order(segments):
    return list(dict.fromkeys(s.subject for s in segments))


def loso_plan(subjects):
    """``(train_ids, test_id)`` per fold, one fold per subject in the given order."""
    subjects = list(subjects)
    if len(set(subjects)) != len(subjects):
        raise DataError("subject ids must be unique")
    if len(subjects) < 2:
        raise DataError(f"LOSO needs at least 2 subjects, got {len(subjects)}")
    return [(tuple(s for s in subjects if s != test), test) for test in subjects]


def run_fold(fold_index, segments, train_ids, test_id, model_config, train_config, eval_config):
    train = [s for s in segments if s.subject in train_ids]
    test = [s for s in segments if s.subject == test_id]
    if not test:
        raise DataError(f"subject {test_id} has no segments")
    aug_subjects, step = (), 0
    if eval_config.augment:
        aug_subjects = tuple(dict.fromkeys(s.subject for s in train))
        train, plan = balance(train, eval_config.fs)
        step = plan.step
    if any(s.subject == test_id for s in train):
        raise AssertionError(f"test subject {test_id} leaked into training data")
    model = build_teanet(model_config, fold=fold_index)
    model, trace = fit(model, train, train_config, fold=fold_index)
    x, y = stack_segments(test)
    scores = model.predict_proba(x)[:, 1]
    metrics = score_report(scores, y, eval_config.threshold, eval_config.f1_class)
    log.info("fold %s: acc %.4f kappa %.4f", test_id, metrics.accuracy, metrics.kappa)
    return FoldResult(test_id, tuple(train_ids), aug_subjects, len(train), step,
                      scores, y, metrics, trace)


def aggregate(folds, eval_config):
    if eval_config.aggregate == "pooled":
        scores = np.concatenate([f.scores for f in folds])
        labels = np.concatenate([f.labels for f in folds])
        return score_report(scores, labels, eval_config.threshold, eval_config.f1_class)
    rows = np.array([f.metrics.as_row() for f in folds], dtype=np.float64)
    with np.errstate(all="ignore"):
        means = [float(np.nanmean(c)) if np.any(np.isfinite(c)) else math.nan for c in rows.T]
    cm = folds[0].metrics.confusion
    for f in folds[1:]:
        cm = cm + f.metrics.confusion
    values = dict(zip(METRIC_FIELDS, means))
    flags = tuple(k for k, v in values.items() if math.isnan(v))
    return MetricsReport(values["accuracy"], values["sensitivity"], values["specificity"],
                         values["f1"], values["kappa"], values["auc"], cm, flags)


def loso_run(segments, model_config, train_config, eval_config=None, progress=None):
    """Leave-one-subject-out: per fold augment the training part, train, test the held-out subject."""
    eval_config = EvalConfig() if eval_config is None else eval_config
    folds = []
    for i, (train_ids, test_id) in enumerate(loso_plan(subject_order(segments))):
        fold = run_fold(i, segments, train_ids, test_id, model_config, train_config,
                        eval_config)
        folds.append(fold)
        if progress is not None:
            progress(fold)
    return LosoResult(folds, aggregate(folds, eval_config), eval_config.aggregate)


def _fmt(v):
    return "nan" if v is None or (isinstance(v, float) and math.isnan(v)) else f"{v:.4f}"


def format_report(result, header=None):
    """Tab-separated per-fold rows plus the aggregate row, 4 decimals, fixed column order."""
    lines = [f"# {h}" for h in (header or [])]
    lines.append("subject\tn\tacc\tspe\tsen\tf1\tauc\tkappa\tflags")

    def row(name, n, m):
        vals = "\t".join(_fmt(v) for v in (m.accuracy, m.specificity, m.sensitivity,
                                           m.f1, m.auc, m.kappa))
        return f"{name}\t{n}\t{vals}\t{','.join(m.flags) or '-'}"

    for f in result.folds:
        lines.append(row(f.subject, len(f.labels), f.metrics))
    total = sum(len(f.labels) for f in result.folds)
    lines.append(row(result.method, total, result.aggregate))
    return "\n".join(lines) + "\n"
