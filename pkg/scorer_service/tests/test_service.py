import pytest
from fastapi.testclient import TestClient

from semantic_scorer.service import create_app


@pytest.fixture
def client():
    with TestClient(create_app()) as client:
        yield client


def similarity(client, pairs):
    return client.post("/v1/similarity", json={"pairs": pairs})


class TestHealth:
    def test_healthy_after_startup(self, client):
        response = client.get("/healthz")
        assert response.status_code == 200
        body = response.json()
        assert body["status"] == "ok"
        assert body["model_id"] == "hash-context-v1"

    def test_503_before_model_loaded(self):
        # Without entering the client context the startup hook never runs,
        # which is exactly the not-yet-loaded state.
        client = TestClient(create_app())
        assert client.get("/healthz").status_code == 503

    def test_503_when_model_unloadable(self):
        with TestClient(create_app(model_id="no-such-model")) as client:
            response = client.get("/healthz")
            assert response.status_code == 503
            assert "no-such-model" in response.json()["detail"]


class TestSimilarity:
    def test_identical_pair_scores_high(self, client):
        response = similarity(client, [{"reference": "t t t", "candidate": "t t t"}])
        assert response.status_code == 200
        assert response.json()["scores"][0] >= 0.99

    def test_batch_of_64_ordered(self, client):
        pairs = []
        for i in range(64):
            if i % 2 == 0:
                pairs.append({"reference": f"same text {i}", "candidate": f"same text {i}"})
            else:
                pairs.append({"reference": "aaaa bbbb", "candidate": "zzzz qqqq"})
        response = similarity(client, pairs)
        assert response.status_code == 200
        scores = response.json()["scores"]
        assert len(scores) == 64
        for i, score in enumerate(scores):
            if i % 2 == 0:
                assert score >= 0.99
            else:
                assert score < 0.5

    def test_unrelated_below_identical(self, client):
        response = similarity(
            client,
            [
                {"reference": "2+2=4", "candidate": "the cat sleeps"},
                {"reference": "2+2=4", "candidate": "2+2=4"},
            ],
        )
        unrelated, identical = response.json()["scores"]
        assert unrelated < identical

    def test_repeated_requests_bit_identical(self, client):
        pairs = [
            {"reference": "convert feet to inches", "candidate": "divide by six"},
            {"reference": "count the pieces", "candidate": "count the pieces"},
        ]
        first = similarity(client, pairs).json()
        second = similarity(client, pairs).json()
        assert first == second

    def test_response_provenance(self, client):
        body = similarity(client, [{"reference": "a", "candidate": "b"}]).json()
        assert body["model_id"] == "hash-context-v1"
        assert body["score_variant"] == "f1"
        assert body["rescaled"] is False

    def test_scores_in_unit_interval(self, client):
        pairs = [
            {"reference": "alpha beta", "candidate": "gamma delta"},
            {"reference": "one", "candidate": "one two three"},
        ]
        for score in similarity(client, pairs).json()["scores"]:
            assert 0.0 <= score <= 1.0


class TestErrors:
    def test_oversize_batch_413(self):
        with TestClient(create_app(max_batch=8)) as client:
            pairs = [{"reference": "a", "candidate": "b"}] * 9
            response = similarity(client, pairs)
            assert response.status_code == 413

    def test_empty_pairs_rejected(self, client):
        assert similarity(client, []).status_code == 422

    def test_empty_text_rejected(self, client):
        response = similarity(client, [{"reference": "", "candidate": "b"}])
        assert response.status_code == 422

    def test_malformed_body_rejected(self, client):
        response = client.post("/v1/similarity", json={"texts": ["a", "b"]})
        assert response.status_code == 422

    def test_similarity_503_before_load(self):
        client = TestClient(create_app())
        response = similarity(client, [{"reference": "a", "candidate": "b"}])
        assert response.status_code == 503
