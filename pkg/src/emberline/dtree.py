"""Gain-ratio decision tree over numeric features, with rule extraction.

Purpose-built for mining trip/no-trip patterns out of sweep tables: binary
labels, numeric (or 0/1-encoded boolean) features, axis-aligned thresholds
at midpoints between distinct observed values, information-gain-ratio split
scoring, and no pruning — the stopping knobs (depth, leaf size, purity) are
the complexity control.  Everything is deterministic: ties break on the
lexicographically smaller feature name, then on the lower threshold.

``extract_rules`` flattens pure-enough leaves into conjunctive conditions
ordered by support, which is the form the detectability analysis wants
("calm wind and heavy loading and a sizeable rise => trip").
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import DomainError

_MIN_GAIN = 1e-12


def entropy(p: float) -> float:
    """Binary entropy in bits of a class fraction ``p``."""
    if p <= 0.0 or p >= 1.0:
        return 0.0
    return -p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p)


def _entropy_vec(p: np.ndarray) -> np.ndarray:
    out = np.zeros_like(p)
    inner = (p > 0.0) & (p < 1.0)
    q = p[inner]
    out[inner] = -q * np.log2(q) - (1.0 - q) * np.log2(1.0 - q)
    return out


@dataclass
class TreeNode:
    """One node; leaves have ``feature is None``."""

    n: int
    n_pos: int
    depth: int
    feature: str | None = None
    threshold: float = math.nan
    left: "TreeNode | None" = None  # feature <= threshold
    right: "TreeNode | None" = None  # feature > threshold

    @property
    def is_leaf(self) -> bool:
        return self.feature is None

    @property
    def label(self) -> int:
        """Majority class; exact ties go to the positive class."""
        return 1 if 2 * self.n_pos >= self.n else 0

    @property
    def purity(self) -> float:
        frac_pos = self.n_pos / self.n
        return frac_pos if self.label == 1 else 1.0 - frac_pos


@dataclass
class DecisionTree:
    root: TreeNode
    feature_names: tuple[str, ...]
    boolean_features: frozenset[str] = field(default_factory=frozenset)

    @property
    def n_nodes(self) -> int:
        def count(node: TreeNode) -> int:
            if node.is_leaf:
                return 1
            return 1 + count(node.left) + count(node.right)

        return count(self.root)

    @property
    def depth(self) -> int:
        def deep(node: TreeNode) -> int:
            if node.is_leaf:
                return node.depth
            return max(deep(node.left), deep(node.right))

        return deep(self.root)

    def predict(self, features: dict[str, np.ndarray]) -> np.ndarray:
        cols = {name: np.asarray(features[name], dtype=float) for name in self.feature_names}
        n = len(next(iter(cols.values()))) if cols else 0
        out = np.zeros(n, dtype=np.int64)

        def walk(node: TreeNode, mask: np.ndarray) -> None:
            if not mask.any():
                return
            if node.is_leaf:
                out[mask] = node.label
                return
            go_left = cols[node.feature] <= node.threshold
            walk(node.left, mask & go_left)
            walk(node.right, mask & ~go_left)

        walk(self.root, np.ones(n, dtype=bool))
        return out

    def to_text(self) -> str:
        lines: list[str] = []

        def fmt_cond(name: str, is_left: bool, thr: float) -> str:
            if name in self.boolean_features:
                return f"not {name}" if is_left else name
            op = "<=" if is_left else ">"
            return f"{name} {op} {thr:.6g}"

        def emit(node: TreeNode, prefix: str) -> None:
            if node.is_leaf:
                lines.append(
                    f"{prefix}=> {node.label}  (n={node.n}, purity={node.purity:.3f})"
                )
                return
            lines.append(f"{prefix}{fmt_cond(node.feature, True, node.threshold)}")
            emit(node.left, prefix + "    ")
            lines.append(f"{prefix}{fmt_cond(node.feature, False, node.threshold)}")
            emit(node.right, prefix + "    ")

        emit(self.root, "")
        return "\n".join(lines)


def _best_split_for_feature(
    x: np.ndarray, y: np.ndarray, h_parent: float, min_leaf: int
) -> tuple[float, float] | None:
    """Best (gain_ratio, threshold) for one feature, or None."""
    n = len(x)
    order = np.argsort(x, kind="stable")
    xs = x[order]
    ys = y[order]
    boundaries = np.nonzero(xs[:-1] < xs[1:])[0]
    if len(boundaries) == 0:
        return None
    n_left = boundaries + 1
    pos_left = np.cumsum(ys)[boundaries]
    keep = (n_left >= min_leaf) & (n - n_left >= min_leaf)
    if not keep.any():
        return None
    n_left = n_left[keep]
    pos_left = pos_left[keep]
    boundaries = boundaries[keep]
    n_right = n - n_left
    pos_right = ys.sum() - pos_left

    f_left = n_left / n
    f_right = n_right / n
    h_children = f_left * _entropy_vec(pos_left / n_left) + f_right * _entropy_vec(pos_right / n_right)
    gain = h_parent - h_children
    split_info = -(f_left * np.log2(f_left) + f_right * np.log2(f_right))
    ratio = np.where(split_info > 0.0, gain / np.where(split_info > 0.0, split_info, 1.0), 0.0)

    best = float(ratio.max())
    if best <= _MIN_GAIN:
        return None
    at = np.nonzero(ratio == best)[0]
    # Lowest threshold among equal-ratio candidates.
    i = at[0]
    thr = 0.5 * (xs[boundaries[i]] + xs[boundaries[i] + 1])
    return best, float(thr)


def fit_tree(
    features: dict[str, np.ndarray],
    labels: np.ndarray,
    *,
    max_depth: int = 8,
    min_leaf: int = 5,
    purity_stop: float = 0.99,
) -> DecisionTree:
    """Grow a tree on 0/1 labels.

    ``features`` maps column name to a 1-D numeric array; all columns must
    be NaN-free and equal length.  Columns whose values are all 0/1 are
    remembered as boolean for nicer rule rendering.
    """
    if not features:
        raise DomainError("need at least one feature column")
    names = tuple(sorted(features))
    y = np.asarray(labels, dtype=float)
    if not np.isin(y, (0.0, 1.0)).all():
        raise DomainError("labels must be 0/1")
    cols: dict[str, np.ndarray] = {}
    for name in names:
        col = np.asarray(features[name], dtype=float)
        if col.shape != y.shape:
            raise DomainError(f"feature {name!r} length {col.shape} != labels {y.shape}")
        if np.isnan(col).any():
            raise DomainError(f"feature {name!r} contains NaN; drop or impute first")
        cols[name] = col
    if min_leaf < 1:
        raise DomainError("min_leaf must be >= 1")
    if not 0.5 < purity_stop <= 1.0:
        raise DomainError("purity_stop must be in (0.5, 1.0]")

    boolean = frozenset(
        name for name, col in cols.items() if np.isin(col, (0.0, 1.0)).all()
    )

    def grow(mask: np.ndarray, depth: int) -> TreeNode:
        n = int(mask.sum())
        n_pos = int(y[mask].sum())
        node = TreeNode(n=n, n_pos=n_pos, depth=depth)
        if depth >= max_depth or n < 2 * min_leaf or node.purity >= purity_stop:
            return node
        h_parent = entropy(n_pos / n)
        best: tuple[float, str, float] | None = None
        ym = y[mask]
        for name in names:
            found = _best_split_for_feature(cols[name][mask], ym, h_parent, min_leaf)
            if found is None:
                continue
            ratio, thr = found
            if best is None or ratio > best[0]:
                best = (ratio, name, thr)
            # Equal ratio: names iterate in sorted order, so the earlier
            # (lexicographically smaller) feature already holds the slot.
        if best is None:
            return node
        _, name, thr = best
        go_left = mask & (cols[name] <= thr)
        go_right = mask & (cols[name] > thr)
        node.feature = name
        node.threshold = thr
        node.left = grow(go_left, depth + 1)
        node.right = grow(go_right, depth + 1)
        return node

    root = grow(np.ones_like(y, dtype=bool), 0)
    return DecisionTree(root=root, feature_names=names, boolean_features=boolean)


@dataclass(frozen=True)
class Condition:
    """One conjunct: feature <= / > threshold."""

    feature: str
    greater: bool
    threshold: float

    def render(self, boolean_features: frozenset[str] = frozenset()) -> str:
        if self.feature in boolean_features:
            return self.feature if self.greater else f"not {self.feature}"
        op = ">" if self.greater else "<="
        return f"{self.feature} {op} {self.threshold:.6g}"


@dataclass(frozen=True)
class Rule:
    """A conjunctive path to a pure-enough leaf."""

    conditions: tuple[Condition, ...]
    label: int
    support: int
    purity: float

    def render(self, boolean_features: frozenset[str] = frozenset()) -> str:
        if not self.conditions:
            body = "always"
        else:
            body = " and ".join(c.render(boolean_features) for c in self.conditions)
        return f"if {body} then {self.label}  [n={self.support}, purity={self.purity:.3f}]"


def _simplify(conds: list[Condition]) -> tuple[Condition, ...]:
    """Collapse repeated conditions on one feature to the tightest bounds."""
    upper: dict[str, float] = {}
    lower: dict[str, float] = {}
    order: list[str] = []
    for c in conds:
        if c.feature not in order:
            order.append(c.feature)
        if c.greater:
            if c.feature not in lower or c.threshold > lower[c.feature]:
                lower[c.feature] = c.threshold
        else:
            if c.feature not in upper or c.threshold < upper[c.feature]:
                upper[c.feature] = c.threshold
    out: list[Condition] = []
    for name in order:
        if name in lower:
            out.append(Condition(name, True, lower[name]))
        if name in upper:
            out.append(Condition(name, False, upper[name]))
    return tuple(out)


def extract_rules(
    tree: DecisionTree,
    *,
    min_purity: float = 0.90,
    min_support: int = 1,
    label: int | None = 1,
) -> list[Rule]:
    """Flatten leaves into rules, most-supported first.

    ``label`` restricts extraction to one class (default: positive trips);
    pass None for both.  Purity and support are the leaf's own statistics.
    """
    rules: list[Rule] = []

    def walk(node: TreeNode, path: list[Condition]) -> None:
        if node.is_leaf:
            if node.purity >= min_purity and node.n >= min_support and (
                label is None or node.label == label
            ):
                rules.append(
                    Rule(
                        conditions=_simplify(path),
                        label=node.label,
                        support=node.n,
                        purity=node.purity,
                    )
                )
            return
        walk(node.left, path + [Condition(node.feature, False, node.threshold)])
        walk(node.right, path + [Condition(node.feature, True, node.threshold)])

    walk(tree.root, [])
    rules.sort(key=lambda r: (-r.support, r.render()))
    return rules
