import json
import math

import pytest

from concisebench.errors import ConfigurationError
from concisebench.gateway import MockBackend, mock_fixture_load, prompt_digest
from concisebench.metrics import UNBOUNDED, MetricConfig
from concisebench.prompts import PromptSpec, build_prompt
from concisebench.runner import (
    RunConfig,
    RunRecord,
    execute_run,
    mode_sort_key,
    parse_mode,
    read_run_log,
    score_run,
)
from sample_answers import TRACY_QUESTION

EXPECTED_ROW_LABELS = [
    "H-∞",
    "H-100",
    "H-80",
    "H-40",
    "SCA-100",
    "SCA-80",
    "SCA-40",
    "CCA-100",
    "CCA-80",
    "CCA-40",
]


def write_mini_dataset(tmp_path, n_items=3):
    path = tmp_path / "mini.jsonl"
    with open(path, "w", encoding="utf-8") as handle:
        for i in range(n_items):
            handle.write(
                json.dumps(
                    {"question": f"What is {i} plus {i}?", "answer": f"#### {2 * i}"}
                )
                + "\n"
            )
    return path


def write_fixture_for(tmp_path, dataset_path, modes, answer_for):
    """Mock fixture covering every (item, mode) prompt of a run."""
    from concisebench.datasets import load_dataset

    items = load_dataset(dataset_path, "gsm8k")
    responses = {}
    for spec in modes:
        for item in items:
            prompt = build_prompt(item.question, spec)
            responses[prompt] = answer_for(item, spec)
    path = tmp_path / "fixture.json"
    path.write_text(
        json.dumps({"latency_per_word": 0.1, "responses": responses}), encoding="utf-8"
    )
    return path


def make_config(tmp_path, dataset_path, fixture_path, modes, **overrides):
    defaults = dict(
        dataset_path=str(dataset_path),
        dataset_source="gsm8k",
        modes=tuple(modes),
        endpoint="mock",
        fixture=str(fixture_path),
        model="mock-model",
        cache_dir=str(tmp_path / "cache"),
        output_dir=str(tmp_path / "runs"),
    )
    defaults.update(overrides)
    return RunConfig(**defaults)


def make_record(item_id, mode, correct, word_count, answer_text="x", **overrides):
    defaults = dict(
        item_id=item_id,
        mode=mode,
        prompt="p",
        answer_text=answer_text,
        ground_truth=1.0,
        correct=correct,
        word_count=word_count,
        step_count=1,
        latency_s=0.1,
        backend="mock",
        dataset_source="gsm8k",
        model="m",
        cache_key="k",
        timestamp="t",
    )
    defaults.update(overrides)
    return RunRecord(**defaults)


class TestModeParsing:
    def test_shorthand_strings(self):
        assert parse_mode("base").label == "base"
        assert parse_mode("cot").label == "cot"
        assert parse_mode("ccot-45").label == "ccot-45"
        assert parse_mode("ccot@30").label == "ccot-30"

    def test_object_form(self):
        spec = parse_mode({"mode": "ccot", "length_limit": 60})
        assert spec.label == "ccot-60"

    def test_bad_entries(self):
        with pytest.raises(ConfigurationError):
            parse_mode("ccot")
        with pytest.raises(ConfigurationError):
            parse_mode({"mode": "ccot", "length_limit": 10, "oops": 1})

    def test_mode_ordering(self):
        labels = ["ccot-100", "cot", "ccot-15", "base", "ccot-45"]
        assert sorted(labels, key=mode_sort_key) == [
            "base",
            "cot",
            "ccot-15",
            "ccot-45",
            "ccot-100",
        ]


class TestRunConfig:
    def test_round_trip_from_file(self, tmp_path):
        dataset = write_mini_dataset(tmp_path)
        config_path = tmp_path / "config.json"
        config_path.write_text(
            json.dumps(
                {
                    "dataset": {"path": str(dataset), "source": "gsm8k", "limit": 2, "seed": 3},
                    "modes": ["base", {"mode": "ccot", "length_limit": 45}],
                    "endpoint": "mock",
                    "model": "m",
                    "decoding": {"max_new_tokens": 128, "temperature": 0.0},
                    "concurrency": 2,
                }
            ),
            encoding="utf-8",
        )
        config = RunConfig.from_file(config_path)
        assert config.limit == 2
        assert [s.label for s in config.modes] == ["base", "ccot-45"]
        assert config.max_new_tokens == 128

    def test_env_overrides(self, tmp_path, monkeypatch):
        dataset = write_mini_dataset(tmp_path)
        config_path = tmp_path / "config.json"
        config_path.write_text(
            json.dumps(
                {"dataset": {"path": str(dataset), "source": "gsm8k"}, "modes": ["base"]}
            ),
            encoding="utf-8",
        )
        monkeypatch.setenv("CONCISEBENCH_ENDPOINT", "http://override:8080")
        monkeypatch.setenv("CONCISEBENCH_API_TOKEN", "tok")
        config = RunConfig.from_file(config_path)
        assert config.endpoint == "http://override:8080"
        assert config.auth_token == "tok"

    def test_requires_modes(self, tmp_path):
        with pytest.raises(ConfigurationError):
            RunConfig(dataset_path="x", dataset_source="gsm8k", modes=())

    def test_duplicate_mode_labels(self):
        with pytest.raises(ConfigurationError):
            RunConfig(
                dataset_path="x",
                dataset_source="gsm8k",
                modes=(PromptSpec(mode="cot"), PromptSpec(mode="cot")),
            )

    def test_digest_stable(self, tmp_path):
        dataset = write_mini_dataset(tmp_path)
        kwargs = dict(
            dataset_path=str(dataset), dataset_source="gsm8k", modes=(PromptSpec(mode="cot"),)
        )
        assert RunConfig(**kwargs).digest() == RunConfig(**kwargs).digest()


class TestExecuteRun:
    MODES = (PromptSpec(mode="cot"), PromptSpec(mode="ccot", length_limit=45))

    def answer_for(self, item, spec):
        return f"Simple sum. The answer is {int(item.ground_truth)}."

    def test_cardinality(self, tmp_path):
        dataset = write_mini_dataset(tmp_path, 3)
        fixture = write_fixture_for(tmp_path, dataset, self.MODES, self.answer_for)
        config = make_config(tmp_path, dataset, fixture, self.MODES)
        result = execute_run(config)
        assert result.records_written == 6
        records = read_run_log(result.log_path)
        assert len(records) == 6
        assert all(r.correct for r in records)
        assert {r.mode for r in records} == {"cot", "ccot-45"}

    def test_rerun_hits_cache_only(self, tmp_path):
        dataset = write_mini_dataset(tmp_path, 3)
        fixture = write_fixture_for(tmp_path, dataset, self.MODES, self.answer_for)
        config = make_config(tmp_path, dataset, fixture, self.MODES)
        first = execute_run(config)
        assert first.gateway_calls == 6

        second_config = make_config(
            tmp_path, dataset, fixture, self.MODES, output_dir=str(tmp_path / "runs2")
        )
        second = execute_run(second_config)
        assert second.gateway_calls == 0
        assert second.cache_hits == 6

        first_records = read_run_log(first.log_path)
        second_records = read_run_log(second.log_path)
        # Identical content modulo timestamps and cache provenance.
        strip = lambda r: {
            k: v for k, v in r.to_dict().items() if k not in ("timestamp", "cache_hit")
        }
        key = lambda r: (r["item_id"], r["mode"])
        assert sorted(map(strip, first_records), key=key) == sorted(
            map(strip, second_records), key=key
        )

    def test_resume_skips_logged_pairs(self, tmp_path):
        dataset = write_mini_dataset(tmp_path, 3)
        fixture = write_fixture_for(tmp_path, dataset, self.MODES, self.answer_for)
        config = make_config(tmp_path, dataset, fixture, self.MODES)
        result = execute_run(config)

        # Truncate the log to simulate an interrupted run.
        lines = result.log_path.read_text(encoding="utf-8").splitlines()
        result.log_path.write_text("\n".join(lines[:2]) + "\n", encoding="utf-8")
        resumed = execute_run(config)
        assert resumed.records_skipped == 2
        assert resumed.records_written == 4
        assert len(read_run_log(result.log_path)) == 6

    def test_missing_fixture_entry_graded_incorrect(self, tmp_path):
        dataset = write_mini_dataset(tmp_path, 3)

        def partial(item, spec):
            return self.answer_for(item, spec)

        fixture = write_fixture_for(tmp_path, dataset, self.MODES, partial)
        data = json.loads(fixture.read_text(encoding="utf-8"))
        removed_prompt = build_prompt(
            "What is 0 plus 0?", PromptSpec(mode="ccot", length_limit=45)
        )
        del data["responses"][removed_prompt]
        fixture.write_text(json.dumps(data), encoding="utf-8")

        config = make_config(tmp_path, dataset, fixture, self.MODES)
        result = execute_run(config)
        records = read_run_log(result.log_path)
        fallback = [r for r in records if r.answer_text == "UNMAPPED"]
        assert len(fallback) == 1
        assert not fallback[0].correct
        assert sum(r.correct for r in records) == 5

    def test_concurrent_run_matches_serial(self, tmp_path):
        dataset = write_mini_dataset(tmp_path, 4)
        fixture = write_fixture_for(tmp_path, dataset, self.MODES, self.answer_for)
        serial = execute_run(make_config(tmp_path, dataset, fixture, self.MODES))
        concurrent = execute_run(
            make_config(
                tmp_path,
                dataset,
                fixture,
                self.MODES,
                concurrency=4,
                output_dir=str(tmp_path / "runs-par"),
                cache_dir=str(tmp_path / "cache-par"),
            )
        )
        strip = lambda r: {
            k: v for k, v in r.to_dict().items() if k not in ("timestamp",)
        }
        key = lambda r: (r["item_id"], r["mode"])
        assert sorted(map(strip, read_run_log(serial.log_path)), key=key) == sorted(
            map(strip, read_run_log(concurrent.log_path)), key=key
        )

    def test_gateway_failures_become_failed_records(self, tmp_path):
        dataset = write_mini_dataset(tmp_path, 2)
        config = make_config(
            tmp_path,
            dataset,
            None,
            (PromptSpec(mode="cot"),),
            endpoint="http://127.0.0.1:1",
            fixture=None,
        )
        result = execute_run(config)
        assert result.failures == 2
        records = read_run_log(result.log_path)
        assert all(r.failed and not r.correct for r in records)
        assert all("connection" in r.error.lower() for r in records)
        # Failed records leave the metric table without data by default.
        table = score_run(records)
        assert table.cells["H-∞"]["cot"] is None

    def test_config_error_aborts_before_any_request(self, tmp_path):
        config = make_config(
            tmp_path, tmp_path / "missing.jsonl", None, (PromptSpec(mode="cot"),), fixture=None
        )
        with pytest.raises(FileNotFoundError):
            execute_run(config)
        assert not (tmp_path / "runs").exists()

    def test_mock_word_and_step_counts_recorded(self, tmp_path):
        dataset = write_mini_dataset(tmp_path, 1)
        fixture = write_fixture_for(
            tmp_path, dataset, self.MODES, lambda item, spec: "One. Two. The answer is 0."
        )
        config = make_config(tmp_path, dataset, fixture, self.MODES)
        records = read_run_log(execute_run(config).log_path)
        assert records[0].word_count == 6
        assert records[0].step_count == 3
        assert records[0].latency_s == pytest.approx(0.6, abs=1e-9)


class TestScoreRun:
    def test_default_grid_row_labels(self):
        records = [make_record("i1", "cot", True, 10)]
        table = score_run(records)
        assert list(table.rows) == EXPECTED_ROW_LABELS

    def test_all_correct_short_answers_score_100(self):
        records = [make_record(f"i{i}", "cot", True, 10) for i in range(4)]
        table = score_run(records)
        for row in table.rows:
            assert table.cells[row]["cot"] == pytest.approx(1.0, abs=1e-12)

    def test_hand_built_log_matches_hand_values(self):
        records = [
            make_record("i1", "cot", True, 10),
            make_record("i2", "cot", True, 50),
            make_record("i3", "cot", False, 30),
        ]
        table = score_run(records)
        assert table.cells["H-∞"]["cot"] == pytest.approx(2 / 3, abs=1e-12)
        assert table.cells["H-40"]["cot"] == pytest.approx(1 / 3, abs=1e-12)
        assert table.cells["SCA-40"]["cot"] == pytest.approx(
            (1 + math.exp(-1)) / 3, abs=1e-12
        )
        # Population sigma of (10, 50, 30) is ~16.3, within beta = 40.
        assert table.cells["CCA-40"]["cot"] == table.cells["SCA-40"]["cot"]

    def test_failures_excluded_by_default(self):
        records = [
            make_record("i1", "cot", True, 10),
            make_record("i2", "cot", False, 0, error="boom"),
        ]
        table = score_run(records)
        assert table.cells["H-∞"]["cot"] == pytest.approx(1.0, abs=1e-12)
        strict = score_run(records, failures_as_wrong=True)
        assert strict.cells["H-∞"]["cot"] == pytest.approx(0.5, abs=1e-12)

    def test_mode_without_successes_is_no_data(self):
        records = [
            make_record("i1", "cot", True, 10),
            make_record("i1", "base", False, 0, error="boom"),
        ]
        table = score_run(records)
        assert table.cells["H-∞"]["base"] is None

    def test_custom_grid(self):
        records = [make_record("i1", "cot", True, 10)]
        grid = [MetricConfig(k=UNBOUNDED), MetricConfig(k=20)]
        table = score_run(records, grid=grid)
        assert list(table.rows) == ["H-∞", "H-20", "SCA-20", "CCA-20"]

    def test_grid_must_share_tolerances(self):
        records = [make_record("i1", "cot", True, 10)]
        grid = [MetricConfig(k=20, alpha=10), MetricConfig(k=40, alpha=5)]
        with pytest.raises(ConfigurationError):
            score_run(records, grid=grid)

    def test_from_log_file(self, tmp_path):
        records = [make_record("i1", "cot", True, 10)]
        path = tmp_path / "log.jsonl"
        with open(path, "w", encoding="utf-8") as handle:
            for record in records:
                handle.write(json.dumps(record.to_dict()) + "\n")
        table = score_run(path)
        assert table.cells["H-∞"]["cot"] == 1.0

    def test_table_round_trip(self):
        records = [make_record("i1", "cot", True, 10)]
        table = score_run(records)
        from concisebench.runner import MetricTable

        assert MetricTable.from_dict(json.loads(json.dumps(table.to_dict()))) == table
