"""Importance weights from expert pairwise-comparison votes.

Raters pick the more important feature from a pair. Directed win tallies
become a positive reciprocal preference-ratio matrix; the principal
eigenvector of that matrix, normalized to sum to one, is the weight set.
Weights for a feature subset come from re-running the eigen extraction on
the row/column submatrix. A transitivity audit counts preference 3-cycles
in individual and pooled majority relations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import NumericalError, ValidationError

RECIPROCITY_RTOL = 1e-12
POWER_TOL = 1e-12
POWER_MAX_ITER = 10_000


@dataclass(frozen=True)
class PairwiseVote:
    """One answer: rater chose `chosen` out of {feature_a, feature_b}."""

    rater_id: str
    feature_a: str
    feature_b: str
    chosen: str

    def __post_init__(self):
        if self.feature_a == self.feature_b:
            raise ValidationError(
                f"vote by {self.rater_id!r} compares {self.feature_a!r} with itself"
            )
        if self.chosen not in (self.feature_a, self.feature_b):
            raise ValidationError(
                f"vote by {self.rater_id!r}: chosen {self.chosen!r} is not in the pair "
                f"({self.feature_a!r}, {self.feature_b!r})"
            )


@dataclass(frozen=True)
class ContingencyMatrix:
    """Positive reciprocal matrix of pairwise preference ratios."""

    features: tuple[str, ...]
    entries: np.ndarray
    smoothing: float = 0.0

    def __post_init__(self):
        n = len(self.features)
        e = self.entries
        if e.shape != (n, n):
            raise ValidationError(f"entries shape {e.shape} does not match {n} features")
        if not np.all(np.isfinite(e)) or np.any(e <= 0):
            raise ValidationError("contingency entries must be finite and strictly positive")
        if np.any(np.diag(e) != 1.0):
            raise ValidationError("contingency diagonal must be exactly 1")
        if not np.allclose(e * e.T, 1.0, rtol=RECIPROCITY_RTOL, atol=0.0):
            raise ValidationError("reciprocity violated: entries[i][j] * entries[j][i] != 1")

    def index_of(self, feature_id: str) -> int:
        try:
            return self.features.index(feature_id)
        except ValueError:
            raise ValidationError(f"unknown feature id {feature_id!r}") from None

    def restrict(self, keep: Iterable[str]) -> "ContingencyMatrix":
        """Row/column submatrix over `keep`, preserving matrix order."""
        keep = set(keep)
        unknown = keep - set(self.features)
        if unknown:
            raise ValidationError(f"unknown feature ids in subset: {sorted(unknown)}")
        idx = [i for i, f in enumerate(self.features) if f in keep]
        if len(idx) < 2:
            raise ValidationError("subset must keep at least 2 features")
        sub = self.entries[np.ix_(idx, idx)].copy()
        return ContingencyMatrix(
            features=tuple(self.features[i] for i in idx),
            entries=sub,
            smoothing=self.smoothing,
        )


@dataclass(frozen=True)
class WeightSet:
    """Feature weights in (0, 1) summing to one, with provenance."""

    weights: dict[str, float]
    source: str = "full"

    def __post_init__(self):
        vals = np.array(list(self.weights.values()), dtype=float)
        if np.any(vals <= 0):
            raise ValidationError("all weights must be strictly positive")
        if abs(vals.sum() - 1.0) > 1e-12:
            raise ValidationError(f"weights sum to {vals.sum()!r}, expected 1")

    def vector(self, order: Sequence[str]) -> np.ndarray:
        return np.array([self.weights[f] for f in order], dtype=float)

    def renormalized(self, keep: Iterable[str], source: str | None = None) -> "WeightSet":
        """Rescale the kept weights so they sum to one again."""
        keep = set(keep)
        unknown = keep - set(self.weights)
        if unknown:
            raise ValidationError(f"unknown feature ids in subset: {sorted(unknown)}")
        if len(keep) < 2:
            raise ValidationError("subset must keep at least 2 features")
        total = sum(w for f, w in self.weights.items() if f in keep)
        sub = {f: w / total for f, w in self.weights.items() if f in keep}
        return WeightSet(weights=sub, source=source or f"subset-of:{self.source}")


@dataclass(frozen=True)
class TransitivityReport:
    """Preference 3-cycle counts per rater and over the pooled relation."""

    intra_rater: dict[str, int]
    inter_rater_violations: int
    triples_evaluated: int
    violation_fraction: float = field(default=0.0)

    def __post_init__(self):
        if self.triples_evaluated > 0:
            expected = self.inter_rater_violations / self.triples_evaluated
            if abs(self.violation_fraction - expected) > 1e-15:
                raise ValidationError("violation_fraction inconsistent with counts")


def enumerate_pairs(features: Sequence[str]) -> list[tuple[str, str]]:
    """All unordered feature pairs (f_i, f_j), i < j, in catalog order."""
    if not features:
        raise ValidationError("feature list is empty")
    seen = set()
    for f in features:
        if f in seen:
            raise ValidationError(f"duplicate feature id {f!r}")
        seen.add(f)
    return list(itertools.combinations(features, 2))


def _validate_votes(votes: Iterable[PairwiseVote], features: Sequence[str]) -> None:
    known = set(features)
    for v in votes:
        for fid in (v.feature_a, v.feature_b):
            if fid not in known:
                raise ValidationError(f"vote references unknown feature id {fid!r}")


def _tally(votes: Iterable[PairwiseVote], features: Sequence[str]) -> np.ndarray:
    """wins[i, j] = number of votes choosing feature i over feature j."""
    pos = {f: i for i, f in enumerate(features)}
    wins = np.zeros((len(features), len(features)), dtype=float)
    for v in votes:
        loser = v.feature_b if v.chosen == v.feature_a else v.feature_a
        wins[pos[v.chosen], pos[loser]] += 1.0
    return wins


def build_contingency_matrix(
    votes: Sequence[PairwiseVote],
    features: Sequence[str],
    smoothing: float = 1.0,
    uncompared: str = "neutral",
) -> ContingencyMatrix:
    """Turn directed win tallies into a preference-ratio matrix.

    entries[i][j] = (wins_ij + smoothing) / (wins_ji + smoothing); the lower
    triangle is stored as the exact inverse of the upper so reciprocity holds
    by construction. Pairs never compared get a neutral ratio of 1.0 when
    `uncompared="neutral"` (the default); `uncompared="error"` fails fast and
    lists them. A pair seen in only one direction with smoothing=0 has an
    undefined ratio and is always an error.
    """
    enumerate_pairs(features)  # id uniqueness
    _validate_votes(votes, features)
    if smoothing < 0:
        raise ValidationError(f"smoothing must be non-negative, got {smoothing}")
    if uncompared not in ("neutral", "error"):
        raise ValidationError(f"uncompared mode must be 'neutral' or 'error', got {uncompared!r}")

    wins = _tally(votes, features)
    n = len(features)
    entries = np.ones((n, n), dtype=float)

    unseen: list[tuple[str, str]] = []
    undefined: list[tuple[str, str]] = []
    for i in range(n):
        for j in range(i + 1, n):
            num = wins[i, j] + smoothing
            den = wins[j, i] + smoothing
            if num == 0 and den == 0:
                unseen.append((features[i], features[j]))
                continue  # stays at the neutral 1.0
            if den == 0 or num == 0:
                undefined.append((features[i], features[j]))
                continue
            ratio = num / den
            entries[i, j] = ratio
            entries[j, i] = 1.0 / ratio

    if undefined:
        raise ValidationError(
            "zero-denominator preference ratio for pairs "
            f"{undefined}; use smoothing > 0 for unanimous pairs"
        )
    if unseen and uncompared == "error":
        raise ValidationError(f"uncomparable pairs (no votes either way): {unseen}")

    return ContingencyMatrix(features=tuple(features), entries=entries, smoothing=smoothing)


def principal_weights(
    matrix: ContingencyMatrix,
    tol: float = POWER_TOL,
    max_iter: int = POWER_MAX_ITER,
) -> WeightSet:
    """Weights from the dominant eigenvector of the ratio matrix.

    Power iteration from the uniform vector; every positive matrix has a
    positive dominant eigenvector, so the iterates stay positive and the
    result is sign-free. Each iterate is scaled to sum to one, which makes
    the converged vector the normalized weight set directly. Deterministic:
    fixed start, fixed feature order.
    """
    m = matrix.entries
    n = m.shape[0]
    v = np.full(n, 1.0 / n)
    for _ in range(max_iter):
        w = m @ v
        w /= w.sum()
        delta = np.max(np.abs(w - v))
        v = w
        if delta < tol:
            break
    else:
        raise NumericalError(
            f"power iteration did not converge in {max_iter} iterations "
            f"(last residual {delta:.3e})"
        )
    return WeightSet(weights=dict(zip(matrix.features, v.tolist())), source="full")


def subset_weights(matrix: ContingencyMatrix, keep: Iterable[str]) -> WeightSet:
    """Weights recomputed on the submatrix restricted to `keep`."""
    sub = matrix.restrict(keep)
    ws = principal_weights(sub)
    return WeightSet(weights=ws.weights, source="subset-of:full")


def _majority(wins: np.ndarray) -> np.ndarray:
    """prefers[i, j] = True where i beats j strictly more often; ties are no preference."""
    return wins > wins.T


def _count_cycles(prefers: np.ndarray, decided: np.ndarray) -> tuple[int, int]:
    """(cycles, triples with all three pairs decided) over unordered triples."""
    n = prefers.shape[0]
    cycles = 0
    evaluated = 0
    for i, j, k in itertools.combinations(range(n), 3):
        if not (decided[i, j] and decided[j, k] and decided[i, k]):
            continue
        evaluated += 1
        if (prefers[i, j] and prefers[j, k] and prefers[k, i]) or (
            prefers[j, i] and prefers[k, j] and prefers[i, k]
        ):
            cycles += 1
    return cycles, evaluated


def transitivity_report(
    votes: Sequence[PairwiseVote], features: Sequence[str]
) -> TransitivityReport:
    """Count preference 3-cycles (A>B, B>C, C>A) in majority relations.

    Intra-rater: each rater's own majority preferences. Inter-rater: the
    pooled majority over all votes. Triples with a missing or tied pair are
    skipped and not counted in triples_evaluated.
    """
    _validate_votes(votes, features)

    by_rater: dict[str, list[PairwiseVote]] = {}
    for v in votes:
        by_rater.setdefault(v.rater_id, []).append(v)

    intra: dict[str, int] = {}
    for rater in sorted(by_rater):
        wins = _tally(by_rater[rater], features)
        decided = (wins != wins.T)
        cycles, _ = _count_cycles(_majority(wins), decided)
        intra[rater] = cycles

    pooled = _tally(votes, features)
    decided = (pooled != pooled.T)
    inter, evaluated = _count_cycles(_majority(pooled), decided)
    fraction = inter / evaluated if evaluated > 0 else 0.0
    return TransitivityReport(
        intra_rater=intra,
        inter_rater_violations=inter,
        triples_evaluated=evaluated,
        violation_fraction=fraction,
    )


# ---------------------------------------------------------------------------
# File formats


def read_votes(path: str | Path) -> list[PairwiseVote]:
    """Parse a vote file: header rater_id,feature_a,feature_b,chosen."""
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ValidationError(f"{path}: empty vote file")
    header = [c.strip() for c in lines[0].split(",")]
    if header != ["rater_id", "feature_a", "feature_b", "chosen"]:
        raise ValidationError(
            f"{path}:1: expected header 'rater_id,feature_a,feature_b,chosen', got {lines[0]!r}"
        )
    votes = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = [c.strip() for c in line.split(",")]
        if len(parts) != 4:
            raise ValidationError(f"{path}:{lineno}: expected 4 fields, got {len(parts)}")
        try:
            votes.append(PairwiseVote(*parts))
        except ValidationError as exc:
            raise ValidationError(f"{path}:{lineno}: {exc}") from exc
    return votes


def write_votes(votes: Iterable[PairwiseVote], path: str | Path) -> None:
    rows = ["rater_id,feature_a,feature_b,chosen"]
    rows += [f"{v.rater_id},{v.feature_a},{v.feature_b},{v.chosen}" for v in votes]
    Path(path).write_text("\n".join(rows) + "\n", encoding="utf-8")


def read_weights(path: str | Path) -> WeightSet:
    """Parse a weight file: '# key: value' comment header, then feature_id,weight lines."""
    path = Path(path)
    source = "file"
    weights: dict[str, float] = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line.lstrip("#").strip()
            if body.startswith("source:"):
                source = body.split(":", 1)[1].strip()
            continue
        parts = line.split(",")
        if len(parts) != 2:
            raise ValidationError(f"{path}:{lineno}: expected 'feature_id,weight'")
        fid, raw = parts[0].strip(), parts[1].strip()
        if fid in weights:
            raise ValidationError(f"{path}:{lineno}: duplicate feature id {fid!r}")
        try:
            weights[fid] = float(raw)
        except ValueError:
            raise ValidationError(f"{path}:{lineno}: bad weight {raw!r}") from None
    return WeightSet(weights=weights, source=source)


def write_weights(
    ws: WeightSet, path: str | Path, smoothing: float | None = None
) -> None:
    """Write weights losslessly (repr round-trips float64 exactly)."""
    lines = [f"# source: {ws.source}"]
    if smoothing is not None:
        lines.append(f"# smoothing: {smoothing!r}")
    lines += [f"{fid},{float(w)!r}" for fid, w in ws.weights.items()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_matrix(matrix: ContingencyMatrix, path: str | Path) -> None:
    """Persist a contingency matrix (features, smoothing, full entries)."""
    import json

    doc = {
        "features": list(matrix.features),
        "smoothing": matrix.smoothing,
        "entries": [[float(x) for x in row] for row in matrix.entries],
    }
    Path(path).write_text(json.dumps(doc, indent=1), encoding="utf-8")


def read_matrix(path: str | Path) -> ContingencyMatrix:
    import json

    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    return ContingencyMatrix(
        features=tuple(doc["features"]),
        entries=np.array(doc["entries"], dtype=float),
        smoothing=float(doc.get("smoothing", 0.0)),
    )
