"""Soft-voting combiner: average two members' class probabilities, argmax.

The combiner is generic over any two classifiers satisfying the probability
contract; an exact 0.5/0.5 tie resolves to Toxic (in moderation the
conservative error is flagging).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Label
from .errors import EmptyAfterEncoding, OutOfRange

TIE_RULE_VERSION = "toxic-wins-1"


@dataclass(frozen=True)
class VotePair:
    toxic_prob: float
    nontoxic_prob: float

    def as_tuple(self) -> tuple[float, float]:
        return (self.toxic_prob, self.nontoxic_prob)


def joint_probability(p_model_a: float, p_model_b: float) -> float:
    """Arithmetic mean of two per-class probabilities."""
    for p in (p_model_a, p_model_b):
        if not 0.0 <= p <= 1.0:
            raise OutOfRange(f"probability {p} outside [0, 1]")
    return (p_model_a + p_model_b) / 2.0


def _member_pair(model, x) -> tuple[float, float]:
    try:
        return model.predict_proba(x)
    except EmptyAfterEncoding:
        return (0.5, 0.5)


def soft_vote_predict(model_a, model_b, x) -> tuple[Label, VotePair]:
    """Averaged-probability vote over one input both members accept."""
    pa_toxic, pa_non = _member_pair(model_a, x)
    pb_toxic, pb_non = _member_pair(model_b, x)
    pair = VotePair(
        joint_probability(pa_toxic, pb_toxic),
        joint_probability(pa_non, pb_non),
    )
    label = Label.TOXIC if pair.toxic_prob >= pair.nontoxic_prob else Label.NONTOXIC
    return label, pair


class SoftVotingEnsemble:
    """Two-member soft-voting classifier exposing the uniform contract."""

    family = "ensemble"

    def __init__(self, model_a, model_b):
        self.model_a = model_a
        self.model_b = model_b

    def predict_proba(self, x) -> tuple[float, float]:
        _, pair = soft_vote_predict(self.model_a, self.model_b, x)
        return pair.as_tuple()

    def classify(self, x) -> tuple[Label, VotePair]:
        return soft_vote_predict(self.model_a, self.model_b, x)

    def predict_proba_batch(self, xs) -> np.ndarray:
        return np.array([self.predict_proba(x) for x in xs])
