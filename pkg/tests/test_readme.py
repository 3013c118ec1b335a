from pathlib import Path

import lingrowth.cli as cli


def _readme() -> str:
    readme = Path(__file__).resolve().parents[1] / "README.md"
    return readme.read_text(encoding="utf-8")


def test_readme_documents_every_command() -> None:
    """Each CLI command should appear in the usage block."""

    content = _readme()
    for command in cli.COMMANDS:
        assert f"lingrowth {command}" in content


def test_readme_lists_exit_codes() -> None:
    content = _readme()
    for code in (cli.EXIT_OK, cli.EXIT_INVALID, cli.EXIT_IDENTITY_FAILURE, cli.EXIT_IO):
        assert f"`{code}`" in content


def test_readme_includes_status_and_numerics_doc() -> None:
    content = _readme()

    assert "Status: Alpha" in content
    assert "docs/numerics.md" in content
    assert "LINGROWTH_NUMERICS_FILE" in content


def test_readme_includes_architecture_section_with_diagram() -> None:
    """README should document architecture with bullets and a diagram."""

    lines = _readme().splitlines()

    section_start: int | None = None
    for index, line in enumerate(lines):
        if line.strip().lower() == "## architecture":
            section_start = index + 1
            break

    assert section_start is not None, "Missing architecture section in README.md"

    bullet_count = 0
    has_diagram = False
    for line in lines[section_start:]:
        if line.startswith("## "):
            break
        stripped = line.strip()
        if stripped.startswith("- "):
            bullet_count += 1
        if "```mermaid" in stripped.lower():
            has_diagram = True

    assert bullet_count >= 3, "Architecture section should list at least three bullets"
    assert has_diagram, "Architecture section should include a mermaid diagram"
