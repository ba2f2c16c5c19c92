# SPDX-License-Identifier: Apache-2.0

from pathlib import Path

import pytest

import llmke

FIXTURES = Path(__file__).resolve().parents[2] / "fixtures" / "mini"


def test_parse_and_render():
    assert llmke.parse_object_list('Sure: ["Paris", "Lyon"]') == (["Paris", "Lyon"], False)
    assert llmke.parse_object_list("no list here") == ([], True)
    assert llmke.render_object_list([]) == '[""]'


def test_row_scores_conventions():
    assert llmke.row_scores([], []) == (1.0, 1.0, 1.0)
    assert llmke.row_scores(["Q1"], []) == (0.0, 0.0, 0.0)
    p, r, f1 = llmke.row_scores(["Q4"], ["Q4", "Q5", "Q6", "Q7"])
    assert (p, r) == (1.0, 0.25)
    assert f1 == pytest.approx(0.4)


def test_shipped_data():
    assert len(llmke.relations()) == 21
    assert len(llmke.templates_checksum()) == 64


def test_replay_run_and_evaluate(tmp_path):
    out = tmp_path / "run"
    result = llmke.run(
        input=FIXTURES / "input.jsonl",
        train=FIXTURES / "train.jsonl",
        truth=FIXTURES / "truth.jsonl",
        fixture_dir=FIXTURES,
        output_dir=out,
        setting="context",
        parallelism=2,
    )
    assert result["rows"] > 0
    f1 = result["report"]["overall"]["f1"]
    assert 0.0 <= f1 <= 1.0

    report = llmke.evaluate(out / "predictions.jsonl", FIXTURES / "truth.jsonl")
    assert report["overall"]["f1"] == pytest.approx(f1)
    assert llmke.compare(report, report).splitlines()[-1].startswith("Average")

    findings = llmke.audit(out / "predictions.jsonl", FIXTURES / "wikidata_truth.jsonl", fixture_dir=FIXTURES)
    assert len(findings) == result["rows"]
    assert {f["classification"] for f in findings} <= {"aligned", "model_gap", "kb_gap_candidate"}


def test_replay_miss_raises(tmp_path):
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(llmke.MissingFixtureError):
        llmke.run(
            input=FIXTURES / "input.jsonl",
            train=FIXTURES / "train.jsonl",
            fixture_dir=empty,
            output_dir=tmp_path / "out",
            parallelism=1,
        )


def test_bad_config_raises():
    with pytest.raises(llmke.ConfigError):
        llmke.evaluate("x", "y", mode="bogus")
