"""Generalization scopes: one model for the whole corpus (GM), per content (CM), per trace (CRM)."""
from __future__ import annotations

from collections import OrderedDict
import logging
from typing import Sequence

from ..errors import ConfigurationError, InsufficientDataError
from ..trace import FrameTrace
from .dataset import PredictorConfig
from .model import SCOPES, PredictorModel, fit_model

log = logging.getLogger(__name__)


def group_traces(corpus: Sequence[FrameTrace], scope: str) -> "OrderedDict[str, list[FrameTrace]]":
    if scope not in SCOPES:
        raise ConfigurationError(f"scope must be one of {SCOPES}, got {scope!r}")
    groups: OrderedDict = OrderedDict()
    for i, tr in enumerate(corpus):
        if scope == "GM":
            key = "*"
        elif scope == "CM":
            if not tr.meta.content_label:
                raise ConfigurationError(f"CM scope needs content labels (trace {i} has none)")
            key = tr.meta.content_label
        else:
            key = tr.meta.source_id or f"trace-{i}"
        groups.setdefault(key, []).append(tr)
    return groups


def fit_scoped(corpus: Sequence[FrameTrace], scope: str, config: PredictorConfig) -> list[PredictorModel]:
    """Fit one normalized model per scope group, in first-appearance order.

    Groups whose traces are all too short are skipped with a logged diagnostic.
    """
    corpus = list(corpus)
    if not corpus:
        raise ConfigurationError("empty corpus")
    models = []
    for key, traces in group_traces(corpus, scope).items():
        usable = [tr for tr in traces if len(tr) >= config.min_length]
        if not usable:
            log.warning("scope %s group %r has no trace long enough (need %d frames); skipped",
                        scope, key, config.min_length)
            continue
        models.append(fit_model(usable, config, normalized=True, scope=scope))
    if not models:
        raise InsufficientDataError(f"no {scope} group had enough data to fit")
    return models


def model_for(models: Sequence[PredictorModel], trace: FrameTrace, corpus: Sequence[FrameTrace] | None = None):
    """The scoped model responsible for ``trace``: matched by source id via ``trained_on``."""
    sid = trace.meta.source_id
    for m in models:
        if sid and sid in m.trained_on:
            return m
    if len(models) == 1 and models[0].scope == "GM":
        return models[0]
    raise ConfigurationError(f"no model was trained on trace {sid!r}")
