import os
import pathlib

import pytest

import coachkit

FIXTURES = pathlib.Path(os.environ.get("COACH_FIXTURE_DIR", pathlib.Path(__file__).parents[1] / "fixtures"))
MOCK = "mock:" + str(FIXTURES / "mock_tables.json")
TOKENS = {"tok-m": ("mentor-1", "mentor"), "tok-n": ("ana", "novice")}


def test_seed_models_round_trip():
    project, risk = coachkit.seed_models()
    assert [a["name"] for a in project["areas"]][-1] == "Emotions"
    assert len(risk["risks"]) == 11
    assert coachkit.validate_model("risk", risk) == risk


def test_invalid_model_lists_fields():
    _, risk = coachkit.seed_models()
    risk["risks"][1]["id"] = risk["risks"][0]["id"]
    with pytest.raises(coachkit.CoachError) as err:
        coachkit.validate_model("risk", risk)
    assert err.value.reason == "validation"
    assert any(path.endswith("risks[1].id") for path, _ in err.value.fields)


def test_parse_structured_strips_fences():
    value, stage = coachkit.parse_structured("QuestionPersonalization", '```json\n{"question": "Why?"}\n```')
    assert value == {"question": "Why?"}
    assert stage == "fences_stripped"


def test_fixture_run_matches_goldens():
    fair = FIXTURES / "artist_fair"
    out = coachkit.run_fixture(str(fair / "transcript.json"), "scripted:" + str(fair / "script.json"))
    for name in ("agenda.json", "mentor_dashboard.txt", "novice_dashboard.json"):
        assert out[name] == (fair / "golden" / name).read_text(encoding="utf-8")


def test_client_routes_and_role_wall():
    c = coachkit.Client(MOCK, TOKENS)
    status, body = c.request("POST", "/v1/sessions", token="tok-n")
    assert status == 201
    sid = body["session"]["id"]
    status, body = c.request("POST", f"/v1/sessions/{sid}/messages", token="tok-n",
                             body={"text": "The problem is bands lose track of payments."})
    assert status == 200
    assert body["messages"][0]["speaker"] == "novice"
    assert c.request("GET", "/v1/audit", token="tok-n")[0] == 403
    assert c.request("GET", "/v1/risk-model")[0] == 401
    status, body = c.request("PATCH", "/v1/risk-model/risks/testing", token="tok-m", body={"name": "Testing"},
                             headers={"If-Match": "99"})
    assert status == 409
    assert body["error"]["reason"] == "version_conflict"
