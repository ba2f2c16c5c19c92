# SPDX-License-Identifier: Apache-2.0
"""Knowledge-base construction by probing chat models."""

import json
import os
from pathlib import Path

_packaged_data = Path(__file__).with_name("data")
if "LLMKE_DATA_DIR" not in os.environ and _packaged_data.is_dir():
    os.environ["LLMKE_DATA_DIR"] = str(_packaged_data)

from . import _llmke  # noqa: E402
from ._llmke import (  # noqa: E402,F401
    ConfigError,
    DataError,
    Error,
    MissingFixtureError,
    TransportError,
    parse_object_list,
    relations,
    render_object_list,
    row_scores,
    templates_checksum,
)

__all__ = [
    "ConfigError", "DataError", "Error", "MissingFixtureError", "TransportError",
    "audit", "compare", "default_config", "evaluate", "parse_object_list", "relations",
    "render_object_list", "row_scores", "run", "templates_checksum",
]


def default_config():
    return json.loads(_llmke.config_defaults())


def run(config=None, **overrides):
    """Run the pipeline. Keys follow the manifest config; paths may be Path objects."""
    merged = default_config()
    merged.update(config or {})
    merged.update(overrides)
    merged = {k: str(v) if isinstance(v, os.PathLike) else v for k, v in merged.items()}
    result = _llmke.run(json.dumps(merged))
    report = result["report"]
    return {
        "rows": result["rows"],
        "manifest": json.loads(result["manifest"]),
        "report": json.loads(report) if report is not None else None,
    }


def evaluate(predictions, truth, mode="ids", data_dir=""):
    return json.loads(_llmke.evaluate(str(predictions), str(truth), mode, str(data_dir)))


def audit(predictions, truth_store, fixture_dir="", aligned_below=0.25, kb_gap_at_least=0.75, data_dir=""):
    text = _llmke.audit(str(predictions), str(truth_store), str(fixture_dir), aligned_below, kb_gap_at_least,
                        str(data_dir))
    return [json.loads(line) for line in text.splitlines() if line.strip()]


def compare(report_a, report_b, label_a="a", label_b="b"):
    def text(report):
        return report if isinstance(report, str) else json.dumps(report)
    return _llmke.compare(text(report_a), text(report_b), label_a, label_b)
