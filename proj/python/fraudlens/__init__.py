"""Lockstep fraud analytics: synthetic data, card features, flags, graphs and ranking.

Structured results (heatmaps, dashboards, egonets) come back as dicts decoded
from the same JSON the HTTP service serves.
"""

import json

from ._core import (
    Dataset,
    FraudlensError,
    average_precision,
    core_numbers,
    detect,
    extract_features,
    feature_names,
    features_csv,
    forward_select,
    isolation_forest_scores,
    precision_at_k,
    serve,
    synthesize,
)
from ._core import Session as _Session
from ._core import heatmap_json as _heatmap_json

__all__ = [
    "Dataset",
    "FraudlensError",
    "Session",
    "average_precision",
    "core_numbers",
    "detect",
    "extract_features",
    "feature_names",
    "features_csv",
    "forward_select",
    "heatmap",
    "isolation_forest_scores",
    "precision_at_k",
    "serve",
    "synthesize",
]


def heatmap(dataset, x, y, bins=64):
    """Card-count grid of feature x against y on log10(1 + v) axes."""
    return json.loads(_heatmap_json(dataset, x, y, bins))


class Session:
    """In-process twin of the HTTP service for one dataset."""

    def __init__(self, dataset, params_text=""):
        self._session = _Session(dataset, params_text)

    @property
    def core(self):
        return self._session

    def request(self, method, path, query=None, body=None):
        """Returns (status, decoded JSON body)."""
        text = "" if body is None else json.dumps(body)
        status, payload = self._session.handle(method, path, query or {}, text)
        return status, json.loads(payload)

    def get(self, path, **query):
        return self.request("GET", path, {k: str(v) for k, v in query.items()})

    def post(self, path, body):
        return self.request("POST", path, body=body)
