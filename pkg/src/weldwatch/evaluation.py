"""Threshold-independent evaluation: ROC, AUC, DET, EER, category breakdowns.

Defects are the positive class. AUC carries the midrank (half-credit)
tie convention, which makes the ROC integral well-defined on discrete
scores and gives the exact complement identity auc(s) + auc(-s) = 1.
Two independent float implementations (rank statistic and trapezoid
over the ROC staircase) are kept side by side; auc_exact returns the
underlying rational for identity-level assertions.
"""

import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .dataset import DEFECT_CATEGORIES, GOOD_CATEGORY
from .errors import DataError


def _as_score_label_arrays(scores, labels):
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise DataError(
            f"scores and labels must be matching 1-D arrays, got "
            f"{scores.shape} and {labels.shape}"
        )
    n_pos = int(labels.sum())
    if n_pos == 0 or n_pos == labels.size:
        raise DataError("AUC needs both classes present")
    return scores, labels


def auc(scores, labels):
    """AUC via the Mann-Whitney rank statistic with midranks."""
    scores, labels = _as_score_label_arrays(scores, labels)
    values, inverse, counts = np.unique(
        scores, return_inverse=True, return_counts=True
    )
    upper = np.cumsum(counts)
    lower = upper - counts
    midrank_per_value = 0.5 * (lower + upper + 1)
    ranks = midrank_per_value[inverse]
    n_pos = int(labels.sum())
    n_neg = labels.size - n_pos
    rank_sum = ranks[labels].sum()
    return float((rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def auc_trapezoid(scores, labels):
    """AUC as the trapezoid integral of the ROC staircase.

    Independent of auc(); the two must agree to 1e-12 and the test
    suite holds them to it.
    """
    curve = roc_curve(scores, labels)
    return float(np.trapezoid(curve.tpr, curve.fpr))


def auc_exact(scores, labels):
    """AUC as an exact rational: (2*wins + ties) / (2*n_pos*n_neg).

    Float division cannot guarantee identities like
    auc(s) + auc(-s) == 1; the Fraction form can.
    """
    scores, labels = _as_score_label_arrays(scores, labels)
    goods = np.sort(scores[~labels])
    defects = scores[labels]
    wins = int(np.searchsorted(goods, defects, side="left").sum())
    through = int(np.searchsorted(goods, defects, side="right").sum())
    ties = through - wins
    n_pos, n_neg = defects.size, goods.size
    return Fraction(2 * wins + ties, 2 * n_pos * n_neg)


@dataclass
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray


@dataclass
class DetCurve:
    fpr: np.ndarray
    fnr: np.ndarray
    thresholds: np.ndarray


def roc_curve(scores, labels):
    """ROC staircase from (0,0) to (1,1), one point per distinct score.

    Point k gives the rates of the classifier "defect iff score >=
    thresholds[k]"; the leading point is (0,0) at threshold +inf.
    """
    scores, labels = _as_score_label_arrays(scores, labels)
    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    y = labels[order]
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    last_of_group = np.nonzero(np.diff(s))[0]
    idx = np.concatenate([last_of_group, [s.size - 1]])
    tp = np.cumsum(y)[idx]
    fp = np.cumsum(~y)[idx]
    fpr = np.concatenate([[0.0], fp / n_neg])
    tpr = np.concatenate([[0.0], tp / n_pos])
    thresholds = np.concatenate([[np.inf], s[idx]])
    return RocCurve(fpr=fpr, tpr=tpr, thresholds=thresholds)


def det_curve(scores, labels):
    """DET points: (FPR, FNR) with FNR = 1 - TPR along the ROC sweep."""
    curve = roc_curve(scores, labels)
    return DetCurve(fpr=curve.fpr, fnr=1.0 - curve.tpr,
                    thresholds=curve.thresholds)


@dataclass
class EerResult:
    """Equal error rate with the DET points bracketing the crossing."""

    rate: float
    lower: tuple
    upper: tuple


def eer(scores, labels):
    """Rate where FPR = FNR, linearly interpolated between the two
    adjacent DET points that bracket the crossing."""
    det = det_curve(scores, labels)
    diff = det.fnr - det.fpr
    crossing = int(np.argmax(diff <= 0.0))
    if diff[crossing] == 0.0:
        point = (float(det.fpr[crossing]), float(det.fnr[crossing]))
        return EerResult(rate=point[0], lower=point, upper=point)
    f0, n0 = det.fpr[crossing - 1], det.fnr[crossing - 1]
    f1, n1 = det.fpr[crossing], det.fnr[crossing]
    t = (n0 - f0) / ((f1 - f0) - (n1 - n0))
    rate = f0 + t * (f1 - f0)
    return EerResult(
        rate=float(rate),
        lower=(float(f0), float(n0)),
        upper=(float(f1), float(n1)),
    )


def per_category_auc(scores, labels, categories, expected_categories=None):
    """AUC per defect category: goods vs that category's defects only.

    "All" pools every defect against the goods. Categories are reported
    in vocabulary order; an expected category with no defect samples is
    skipped with a warning.
    """
    scores, labels = _as_score_label_arrays(scores, labels)
    categories = np.asarray(list(categories), dtype=object)
    if categories.shape != scores.shape:
        raise DataError("categories must align with scores")
    goods = ~labels
    present = set(categories[labels])
    if expected_categories is None:
        wanted = [c for c in DEFECT_CATEGORIES if c in present]
        extras = sorted(present - set(DEFECT_CATEGORIES))
        wanted.extend(extras)
    else:
        wanted = []
        for c in expected_categories:
            if c == GOOD_CATEGORY:
                continue
            if c not in present:
                warnings.warn(f"category {c!r} has no defect samples; skipped",
                              stacklevel=2)
                continue
            wanted.append(c)
    out = {}
    for c in wanted:
        mask = goods | (categories == c)
        out[c] = auc(scores[mask], labels[mask])
    out["All"] = auc(scores, labels)
    return out


@dataclass
class Split:
    train: list
    val: list
    test: list


def largest_remainder(total, weights):
    """Apportion total into integer parts proportional to weights.

    Floor quotas first, then hand out the remainder by largest
    fractional part; ties go to the earlier position.
    """
    weights = np.asarray(weights, dtype=np.float64)
    quotas = total * weights / weights.sum()
    base = np.floor(quotas).astype(np.int64)
    remainder = int(total - base.sum())
    fractions = quotas - base
    order = np.argsort(-fractions, kind="stable")
    for i in order[:remainder]:
        base[i] += 1
    return [int(v) for v in base]


def apply_split(samples, seed, good_ratios=(576, 122, 121)):
    """Partition samples: train is goods only; defects go half to val
    and half to test (odd count: the extra one to test); goods are
    apportioned across train/val/test by good_ratios via largest
    remainder. The shuffle is seeded and reproducible."""
    samples = list(samples)
    goods = [s for s in samples if not s.is_defect]
    defects = [s for s in samples if s.is_defect]
    if len(goods) < 2 or len(defects) < 2:
        raise DataError(
            f"split needs at least 2 goods and 2 defects, got "
            f"{len(goods)} goods and {len(defects)} defects"
        )
    rng = np.random.default_rng(seed)
    goods = [goods[i] for i in rng.permutation(len(goods))]
    defects = [defects[i] for i in rng.permutation(len(defects))]
    n_train, n_val, n_test = largest_remainder(len(goods), good_ratios)
    train = goods[:n_train]
    val = goods[n_train : n_train + n_val]
    test = goods[n_train + n_val :]
    n_val_def = len(defects) // 2
    val = val + defects[:n_val_def]
    test = test + defects[n_val_def:]
    return Split(train=train, val=val, test=test)
