import random
import shutil
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"


def write_repo(root: Path, files: dict[str, str]) -> Path:
    for rel, text in files.items():
        p = root / rel
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text, encoding="utf-8")
    return root


def synthetic_files(n_files: int = 20, seed: int = 0) -> dict[str, str]:
    """A small but connected repository: imports, calls, inheritance with overrides."""
    rng = random.Random(seed)
    files = {"pkg/__init__.py": ""}
    for i in range(n_files - 1):
        lines = []
        deps = sorted(rng.sample(range(i), k=min(i, rng.randint(1, 3)))) if i else []
        for j in deps:
            lines.append(f"from pkg.mod_{j} import Model{j}, helper_{j}, LIMIT_{j}")
        lines += ["", "", f"LIMIT_{i} = {rng.randint(1, 99)}", "", ""]
        base = f"Model{deps[-1]}" if deps and rng.random() < 0.6 else ""
        lines.append(f"class Model{i}({base}):" if base else f"class Model{i}:")
        lines += [
            "    def __init__(self, size):",
            f"        self.size = size",
            f"        self.items = []",
            "",
            "    def run(self, value):",
            f"        total = value + LIMIT_{i}",
        ]
        for j in deps:
            lines.append(f"        total += helper_{j}(total)")
        lines += ["        self.items.append(total)", "        return total", ""]
        lines += [
            "    def reset(self):",
            "        self.items = []",
            "",
            "",
            f"def helper_{i}(x):",
            f"    if x > LIMIT_{i}:",
            "        return x - 1",
        ]
        for j in deps:
            lines.append(f"    x = Model{j}(x).run(x) + LIMIT_{j}")
        lines += ["    return x * 2", ""]
        files[f"pkg/mod_{i}.py"] = "\n".join(lines)
    return files


@pytest.fixture
def two_module_repo(tmp_path):
    return Path(shutil.copytree(FIXTURES / "two_module_repo", tmp_path / "two_module_repo"))


@pytest.fixture
def login_repo(tmp_path):
    return Path(shutil.copytree(FIXTURES / "login_repo", tmp_path / "login_repo"))


@pytest.fixture
def synthetic_repo(tmp_path):
    return write_repo(tmp_path / "synthetic", synthetic_files())


# acceptance reporting ------------------------------------------------------

ACCEPTANCE_RESULTS: dict[str, tuple[bool, str]] = {}


class _Criterion:
    def __init__(self, key: str):
        self.key = key
        self.detail = ""

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            ACCEPTANCE_RESULTS[self.key] = (True, self.detail)
        else:
            ACCEPTANCE_RESULTS[self.key] = (False, f"{exc_type.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}")
        return False


@pytest.fixture
def criterion():
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE_RESULTS, key=lambda k: int(k.split()[0])):
        ok, detail = ACCEPTANCE_RESULTS[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}  {detail}".rstrip())
