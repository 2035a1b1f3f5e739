"""Linear plausibility model, selection, and the analysis statistics.

Fitting is ordinary least squares via the normal equations. The answer for
an example is the argmax of the linear score over its candidates. P-values
come from an in-house Student-t CDF built on a continued-fraction
regularized incomplete beta, so no statistics package is required at
runtime; tests check it against an independent quadrature oracle.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ValidationError
from .model import (
    FEATURE_NAMES,
    CqaExample,
    IbeFeatureVector,
    LinearModel,
    RegressionEntry,
    RegressionReport,
    significance_marker,
)

logger = logging.getLogger(__name__)

RIDGE_EPSILON = 1e-8


# --- Student-t machinery ----------------------------------------------------

def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Lentz's continued fraction for the incomplete beta integral."""
    max_iterations = 300
    eps = 3e-16
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, max_iterations + 1):
        m2 = 2 * m
        numerator = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + numerator * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + numerator / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        numerator = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + numerator * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + numerator / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise ValidationError(f"incomplete beta did not converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and x in [0, 1]."""
    if a <= 0 or b <= 0:
        raise ValidationError("incomplete beta needs a, b > 0")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    log_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    # use the branch where the continued fraction converges fastest
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def t_two_sided_p(t_statistic: float, dof: int) -> float:
    """Two-sided p-value for a Student-t statistic."""
    if dof < 1:
        raise ValidationError(f"degrees of freedom must be >= 1, got {dof}")
    if math.isinf(t_statistic):
        return 0.0
    x = dof / (dof + t_statistic * t_statistic)
    return regularized_incomplete_beta(dof / 2.0, 0.5, x)


# --- fitting and selection ---------------------------------------------------

def _feature_value(features: IbeFeatureVector | Mapping[str, float], name: str) -> float:
    if isinstance(features, IbeFeatureVector):
        return features.value(name)
    if name not in features:
        raise ValidationError(f"feature vector missing {name!r}")
    return float(features[name])


def _design_matrix(
    rows: Sequence[IbeFeatureVector | Mapping[str, float]], subset: Sequence[str]
) -> np.ndarray:
    return np.array(
        [[1.0] + [_feature_value(row, name) for name in subset] for row in rows],
        dtype=np.float64,
    )


def fit_linear(
    rows: Sequence[IbeFeatureVector | Mapping[str, float]],
    labels: Sequence[int],
    feature_subset: Sequence[str] | None = None,
    standardize: bool = False,
    training_fingerprint: str = "",
) -> LinearModel:
    """Ordinary least squares over the chosen features.

    Rank deficiency falls back to a tiny ridge (1e-8) and is flagged on the
    returned model, as is a constant label column.
    """
    subset = tuple(feature_subset if feature_subset is not None else FEATURE_NAMES)
    if not subset:
        raise ValidationError("feature subset must be nonempty")
    for name in subset:
        if name not in FEATURE_NAMES:
            raise ValidationError(f"unknown feature {name!r}")
    if len(rows) != len(labels):
        raise ValidationError(f"{len(rows)} rows vs {len(labels)} labels")
    if len(rows) < len(subset) + 1:
        raise ValidationError(
            f"need at least {len(subset) + 1} rows to fit {len(subset)} features, got {len(rows)}"
        )

    flags: list[str] = []
    x = _design_matrix(rows, subset)
    y = np.asarray(labels, dtype=np.float64)

    means: dict[str, float] = {}
    stds: dict[str, float] = {}
    if standardize:
        for j, name in enumerate(subset, start=1):
            mu = float(np.mean(x[:, j]))
            sigma = float(np.std(x[:, j]))
            if sigma == 0.0:
                flags.append(f"zero_variance:{name}")
                sigma = 1.0
            means[name] = mu
            stds[name] = sigma
            x[:, j] = (x[:, j] - mu) / sigma

    if float(np.var(y)) == 0.0:
        flags.append("constant_labels")

    gram = x.T @ x
    moment = x.T @ y
    if np.linalg.matrix_rank(gram) < gram.shape[0]:
        flags.append("rank_deficient")
        gram = gram + RIDGE_EPSILON * np.eye(gram.shape[0])
    beta = np.linalg.solve(gram, moment)

    return LinearModel(
        weights={name: float(beta[j + 1]) for j, name in enumerate(subset)},
        intercept=float(beta[0]),
        feature_order=subset,
        standardize_means=means,
        standardize_stds=stds,
        training_fingerprint=training_fingerprint,
        flags=tuple(flags),
    )


def score(model: LinearModel, features: IbeFeatureVector | Mapping[str, float]) -> float:
    """Linear score: intercept plus the weighted feature sum (unclamped)."""
    total = model.intercept
    for name in model.feature_order:
        value = _feature_value(features, name)
        if model.standardize_stds:
            value = (value - model.standardize_means[name]) / model.standardize_stds[name]
        total += model.weights[name] * value
    return total


def select(
    model: LinearModel, candidates: Sequence[IbeFeatureVector | Mapping[str, float]]
) -> int:
    """Index of the maximal-score candidate; ties break to the lowest index."""
    if len(candidates) < 2:
        raise ValidationError(f"selection needs >= 2 candidates, got {len(candidates)}")
    scores = [score(model, c) for c in candidates]
    best = 0
    for i in range(1, len(scores)):
        if scores[i] > scores[best]:
            best = i
    return best


def save_model(model: LinearModel, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(model.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def load_model(path: str | Path) -> LinearModel:
    return LinearModel.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# --- analysis statistics -----------------------------------------------------

def univariate_regression(
    feature_values: Sequence[float], labels: Sequence[float]
) -> RegressionEntry:
    """Simple OLS of labels on one feature: slope, SE, t, two-sided p, stars."""
    n = len(feature_values)
    if n != len(labels):
        raise ValidationError(f"{n} values vs {len(labels)} labels")
    if n < 3:
        raise ValidationError(f"univariate regression needs n >= 3, got {n}")
    x = np.asarray(feature_values, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    sxx = float(np.sum((x - x.mean()) ** 2))
    if sxx == 0.0:
        raise ValidationError("feature has zero variance")
    slope = float(np.sum((x - x.mean()) * (y - y.mean())) / sxx)
    intercept = float(y.mean() - slope * x.mean())
    residuals = y - (intercept + slope * x)
    sse = float(np.sum(residuals**2))
    sigma2 = sse / (n - 2)
    std_error = math.sqrt(sigma2 / sxx)
    if std_error == 0.0:
        t_stat = math.inf if slope >= 0 else -math.inf
    else:
        t_stat = slope / std_error
    p_value = t_two_sided_p(t_stat, n - 2)
    return RegressionEntry(
        coefficient=slope,
        std_error=std_error,
        t_statistic=t_stat,
        p_value=p_value,
        marker=significance_marker(p_value),
    )


def regression_report(
    rows: Sequence[IbeFeatureVector],
    labels: Sequence[int],
    standardize: bool = True,
) -> RegressionReport:
    """Univariate regression per feature; z-scored by default so the
    coefficients are comparable across features. Zero-variance features are
    omitted with a warning."""
    entries: dict[str, RegressionEntry] = {}
    y = [float(v) for v in labels]
    for name in FEATURE_NAMES:
        values = [row.value(name) for row in rows]
        spread = float(np.std(np.asarray(values)))
        if spread == 0.0:
            logger.warning("feature %s has zero variance; omitted from regression report", name)
            continue
        if standardize:
            mu = float(np.mean(np.asarray(values)))
            values = [(v - mu) / spread for v in values]
        entries[name] = univariate_regression(values, y)
    return RegressionReport(entries=entries, n_rows=len(rows), standardized=standardize)


def accuracy(selections: Sequence[int], golds: Sequence[int]) -> float:
    if len(selections) != len(golds):
        raise ValidationError(f"{len(selections)} selections vs {len(golds)} golds")
    if not selections:
        raise ValidationError("accuracy undefined on empty input")
    return sum(1 for s, g in zip(selections, golds) if s == g) / len(selections)


@dataclass(frozen=True)
class AblationRow:
    label: str
    features: tuple[str, ...]
    accuracy: float


def _intercept_only() -> LinearModel:
    return LinearModel(weights={}, intercept=0.5, feature_order=())


def cumulative_subsets() -> list[tuple[str, tuple[str, ...]]]:
    """Random baseline, then features added one at a time in criterion order."""
    table: list[tuple[str, tuple[str, ...]]] = [("random", ())]
    for i, name in enumerate(FEATURE_NAMES):
        table.append((f"+{name}", FEATURE_NAMES[: i + 1]))
    return table


def ablation(
    train_rows: Sequence[IbeFeatureVector],
    train_labels: Sequence[int],
    test_rows: Sequence[Sequence[IbeFeatureVector]],
    test_golds: Sequence[int],
    subsets: Sequence[tuple[str, tuple[str, ...]]] | None = None,
) -> list[AblationRow]:
    """Accuracy per feature subset: single-feature rows, then the requested
    (default cumulative) subsets. An empty subset scores every candidate
    identically, so selection degrades to the deterministic tie rule."""
    if len(test_rows) != len(test_golds):
        raise ValidationError(f"{len(test_rows)} test examples vs {len(test_golds)} golds")
    plan: list[tuple[str, tuple[str, ...]]] = [(name, (name,)) for name in FEATURE_NAMES]
    plan.extend(subsets if subsets is not None else cumulative_subsets())
    out = []
    for label, subset in plan:
        model = _intercept_only() if not subset else fit_linear(train_rows, train_labels, subset)
        selections = [select(model, candidates) for candidates in test_rows]
        out.append(AblationRow(label=label, features=subset, accuracy=accuracy(selections, test_golds)))
    return out


def _average_ranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        mean_rank = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = mean_rank
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> tuple[float, float]:
    """Rank correlation with average ranks for ties; p via t-approximation."""
    n = len(x)
    if n != len(y):
        raise ValidationError(f"{n} vs {len(y)} values")
    if n < 3:
        raise ValidationError(f"spearman needs n >= 3, got {n}")
    rx = np.asarray(_average_ranks(x))
    ry = np.asarray(_average_ranks(y))
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    denom = math.sqrt(float(np.sum(dx**2)) * float(np.sum(dy**2)))
    if denom == 0.0:
        raise ValidationError("spearman undefined for constant input")
    rho = float(np.sum(dx * dy) / denom)
    rho = max(-1.0, min(1.0, rho))
    if abs(rho) == 1.0:
        return rho, 0.0
    t_stat = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    return rho, t_two_sided_p(t_stat, n - 2)


def cohens_kappa(a: Sequence[object], b: Sequence[object]) -> float:
    """Chance-corrected agreement (p_o - p_e) / (1 - p_e) between two raters."""
    if len(a) != len(b):
        raise ValidationError(f"{len(a)} vs {len(b)} annotations")
    if not a:
        raise ValidationError("kappa undefined on empty input")
    n = len(a)
    observed = sum(1 for u, v in zip(a, b) if u == v) / n
    labels = sorted({*a, *b}, key=repr)
    expected = 0.0
    for label in labels:
        expected += (sum(1 for u in a if u == label) / n) * (sum(1 for v in b if v == label) / n)
    if expected == 1.0:
        # both raters constant and identical: perfect, but flag the degeneracy
        logger.warning("kappa degenerate: chance agreement is 1; returning 1.0")
        return 1.0
    return (observed - expected) / (1.0 - expected)


def directionality_breakdown(
    examples: Sequence[CqaExample], selections: Sequence[int]
) -> dict[str, float]:
    """Accuracy restricted to cause questions and to effect questions.

    Directions with no examples are omitted (with a log note) rather than
    reported as 0.
    """
    if len(examples) != len(selections):
        raise ValidationError(f"{len(examples)} examples vs {len(selections)} selections")
    out: dict[str, float] = {}
    for direction in ("cause", "effect"):
        pairs = [
            (sel, ex.gold_index)
            for ex, sel in zip(examples, selections)
            if ex.direction.value == direction
        ]
        if not pairs:
            logger.info("no %s-direction examples; omitting from breakdown", direction)
            continue
        out[direction] = accuracy([p[0] for p in pairs], [p[1] for p in pairs])
    return out
