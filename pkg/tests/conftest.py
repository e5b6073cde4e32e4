import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from robotability.ahp import PairwiseVote


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def make_votes(spec):
    """Votes from a compact spec: [(rater, winner, loser, times), ...]."""
    votes = []
    for rater, winner, loser, times in spec:
        for _ in range(times):
            votes.append(PairwiseVote(rater, winner, loser, winner))
    return votes


def random_votes(rng, features, n_votes, n_raters=5, planted=None):
    """Random vote set; optionally Bradley-Terry sampled from planted weights."""
    import itertools

    pairs = list(itertools.combinations(features, 2))
    out = []
    for _ in range(n_votes):
        a, b = pairs[rng.integers(0, len(pairs))]
        rater = f"r{rng.integers(0, n_raters)}"
        if planted is None:
            chosen = a if rng.uniform() < 0.5 else b
        else:
            wa, wb = planted[a], planted[b]
            chosen = a if rng.uniform() < wa / (wa + wb) else b
        out.append(PairwiseVote(rater, a, b, chosen))
    return out
