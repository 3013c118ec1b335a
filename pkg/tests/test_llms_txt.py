from __future__ import annotations

import re
from pathlib import Path

import yaml


def test_llms_links_resolve() -> None:
    """Every relative link in llms.txt should point at a file in the repo."""

    root = Path(__file__).resolve().parents[1]
    content = (root / "llms.txt").read_text(encoding="utf-8")

    links = re.findall(r"\]\(([^)]+)\)", content)
    assert links, "llms.txt should link to the docs"
    for link in links:
        assert (root / link).exists(), f"llms.txt link {link} does not exist"


def test_llms_policy_example_is_yaml_mapping() -> None:
    root = Path(__file__).resolve().parents[1]
    content = (root / "llms.txt").read_text(encoding="utf-8")

    match = re.search(r"\[Numerics policy]\(([^)]+\.yaml)\)", content)
    assert match, "llms.txt must link to the packaged numerics policy"
    data = yaml.safe_load((root / match.group(1)).read_text(encoding="utf-8"))
    assert isinstance(data, dict)
    assert "numerics" in data
