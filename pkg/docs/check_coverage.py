#!/usr/bin/env python3
"""
Validate consistency between test-feature-map.yaml, pytest markers and the docs.

Checks:
  1. Every test file carries exactly the feature markers the YAML map gives it
  2. Every feature marker used in a test file is declared in the YAML map
  3. Every feature group has at least one test function
  4. Every feature group has a `{#name}` heading in FEATURES.md
  5. Every module of the package belongs to some feature group

Run: uv run python docs/check_coverage.py
"""

from __future__ import annotations

import ast
import re
import sys
from collections import Counter
from pathlib import Path

import yaml

ROOT = Path(__file__).resolve().parent.parent
YAML_PATH = ROOT / "docs" / "test-feature-map.yaml"
FEATURES_PATH = ROOT / "docs" / "FEATURES.md"
TESTS_DIR = ROOT / "tests"
PACKAGE_DIR = ROOT / "polysfem"

_ANCHOR_RE = re.compile(r"^##\s.*\{#([\w-]+)\}\s*$", re.MULTILINE)


def load_groups() -> dict[str, dict]:
    """Feature groups keyed by marker name, cross-cutting included."""
    with YAML_PATH.open(encoding="utf-8") as stream:
        data = yaml.safe_load(stream)
    groups = dict(data.get("features", {}))
    if "cross_cutting" in data:
        groups["cross_cutting"] = data["cross_cutting"]
    return groups


def _feature_names(node: ast.expr) -> list[str]:
    """Names from pytest.mark.feature(...) calls, alone or inside a list."""
    if isinstance(node, ast.List):
        return [name for elt in node.elts for name in _feature_names(elt)]
    if not isinstance(node, ast.Call):
        return []
    func = node.func
    if (
        isinstance(func, ast.Attribute)
        and func.attr == "feature"
        and isinstance(func.value, ast.Attribute)
        and func.value.attr == "mark"
    ):
        return [
            arg.value
            for arg in node.args
            if isinstance(arg, ast.Constant) and isinstance(arg.value, str)
        ]
    return []


def scan_test_file(path: Path) -> Counter[str]:
    """Count test functions per feature; module-level pytestmark applies to all."""
    tree = ast.parse(path.read_text(encoding="utf-8"), filename=str(path))
    module_features: set[str] = set()
    for node in tree.body:
        if (
            isinstance(node, ast.Assign)
            and len(node.targets) == 1
            and isinstance(node.targets[0], ast.Name)
            and node.targets[0].id == "pytestmark"
        ):
            module_features.update(_feature_names(node.value))

    counts: Counter[str] = Counter()
    for node in tree.body:
        if isinstance(node, ast.FunctionDef) and node.name.startswith("test_"):
            features = set(module_features)
            for decorator in node.decorator_list:
                features.update(_feature_names(decorator))
            counts.update(features)
    return counts


def main() -> int:
    groups = load_groups()
    errors: list[str] = []

    mapped: dict[str, set[str]] = {}
    for key, group in groups.items():
        for test_file in group.get("tests", []):
            mapped.setdefault(test_file, set()).add(key)

    totals: Counter[str] = Counter()
    test_files = sorted(TESTS_DIR.glob("test_*.py"))
    existing = {f"tests/{path.name}" for path in test_files}
    for path in test_files:
        rel = f"tests/{path.name}"
        counts = scan_test_file(path)
        totals.update(counts)
        markers = set(counts)
        undeclared = markers - set(groups)
        if undeclared:
            errors.append(f"{rel} uses undeclared features {sorted(undeclared)}")
        expected = mapped.get(rel, set())
        if markers != expected:
            errors.append(f"{rel} markers={sorted(markers)} yaml={sorted(expected)}")

    for rel in sorted(set(mapped) - existing):
        errors.append(f"YAML references non-existent file: {rel}")

    for key in groups:
        if totals[key] == 0:
            errors.append(f"Feature '{key}' has no tests")

    anchors = set(_ANCHOR_RE.findall(FEATURES_PATH.read_text(encoding="utf-8")))
    for key in groups:
        anchor = "cross-cutting-tests" if key == "cross_cutting" else key
        if anchor not in anchors:
            errors.append(f"Feature '{key}' has no {{#{anchor}}} heading in FEATURES.md")

    owned = {module for group in groups.values() for module in group.get("modules", [])}
    for path in sorted(PACKAGE_DIR.glob("*.py")):
        rel = f"polysfem/{path.name}"
        if rel not in owned:
            errors.append(f"Module {rel} belongs to no feature group")
    for rel in sorted(owned):
        if not (ROOT / rel).exists():
            errors.append(f"YAML references non-existent module: {rel}")

    print("=" * 60)
    print("Feature Coverage Validation Report")
    print("=" * 60)
    print("\nFeature Test Counts:")
    print("-" * 40)
    for key in sorted(groups):
        print(f"  {groups[key].get('name', key):<30s} {totals[key]:>4d}")
    print("-" * 40)
    print(f"  {'Total':<30s} {sum(totals.values()):>4d}")

    if errors:
        print(f"\nErrors ({len(errors)}):")
        for error in errors:
            print(f"  [ERROR] {error}")
    else:
        print("\nAll checks passed!")

    print(f"\nStatus: {'FAIL' if errors else 'OK'}")
    return 1 if errors else 0


if __name__ == "__main__":
    sys.exit(main())
