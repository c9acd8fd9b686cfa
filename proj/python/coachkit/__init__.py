"""Python access to the coaching engine and its HTTP API surface."""

import json

from ._core import CoachError, LocalApi as _LocalApi
from ._core import parse_structured as _parse_structured
from ._core import run_fixture
from ._core import seed_models as _seed_models
from ._core import validate_model as _validate_model

__all__ = ["CoachError", "Client", "parse_structured", "run_fixture", "seed_models", "validate_model"]


def seed_models():
    """Return (project_model, risk_model) as dicts."""
    project, risk = _seed_models()
    return json.loads(project), json.loads(risk)


def validate_model(kind, doc):
    """Validate a model dict; returns the normalized model or raises CoachError."""
    return json.loads(_validate_model(kind, json.dumps(doc)))


def parse_structured(task, raw):
    """Recover a task's structured output from raw model text: (value, stage)."""
    value, stage = _parse_structured(task, raw)
    return json.loads(value), stage


class Client:
    """In-process client for the /v1 routes.

    tokens maps bearer token -> (user_id, role).
    """

    def __init__(self, backend, tokens, store_root="", reproducible=True):
        self._api = _LocalApi(backend, store_root, tokens, reproducible)

    def request(self, method, path, token="", body=None, query=None, headers=None):
        text = "" if body is None else json.dumps(body)
        status, out = self._api.handle(method, path, token, text, query or {}, headers or {})
        return status, json.loads(out)
