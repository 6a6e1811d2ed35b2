"""Completion metrics: code exact match / edit similarity and identifier match."""

from __future__ import annotations

import json
import keyword
import os
import re
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

from .similarity import edit_similarity

KEYWORD_PROFILES = {
    "python": frozenset(keyword.kwlist) | frozenset(getattr(keyword, "softkwlist", ())),
}

_IDENT_RE = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")

METRIC_FIELDS = ("code_em", "code_es", "id_em", "id_p", "id_r", "id_f1")


class DatasetError(ValueError):
    pass


def code_em(pred: str, gt: str) -> int:
    return int(pred.strip() == gt.strip())


def code_es(pred: str, gt: str) -> float:
    return edit_similarity(pred.strip(), gt.strip())


def extract_identifiers(code: str, language: str = "python") -> list[str]:
    keywords = KEYWORD_PROFILES[language]
    return [tok for tok in _IDENT_RE.findall(code) if tok not in keywords]


def identifier_metrics(pred: str, gt: str, language: str = "python") -> tuple[int, float, float, float]:
    """(em, precision, recall, f1) over identifier multisets.

    Precision is 0 when the prediction has no identifiers, recall 0 when the
    reference has none; two identifier-free strings match perfectly.
    """
    p_ids = extract_identifiers(pred, language)
    g_ids = extract_identifiers(gt, language)
    em = int(p_ids == g_ids)
    if not p_ids and not g_ids:
        return em, 1.0, 1.0, 1.0
    common = sum((Counter(p_ids) & Counter(g_ids)).values())
    p = common / len(p_ids) if p_ids else 0.0
    r = common / len(g_ids) if g_ids else 0.0
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return em, p, r, f1


@dataclass(frozen=True)
class EvalExample:
    task_id: str
    repo_root: str
    file_path: str
    cursor_line: int
    prefix_text: str
    groundtruth: str

    @classmethod
    def from_dict(cls, rec: Mapping, base_dir: str | os.PathLike | None = None) -> "EvalExample":
        missing = [k for k in ("task_id", "repo_root", "file_path", "cursor_line", "prefix_text", "groundtruth") if k not in rec]
        if missing:
            raise DatasetError(f"example missing fields: {', '.join(missing)}")
        root = str(rec["repo_root"])
        if base_dir is not None and not os.path.isabs(root):
            root = os.path.normpath(os.path.join(base_dir, root))
        if not str(rec["groundtruth"]):
            raise DatasetError(f"{rec['task_id']}: empty groundtruth")
        return cls(str(rec["task_id"]), root, str(rec["file_path"]), int(rec["cursor_line"]),
                   str(rec["prefix_text"]), str(rec["groundtruth"]))


@dataclass(frozen=True)
class ExampleScore:
    task_id: str
    code_em: float
    code_es: float
    id_em: float
    id_p: float
    id_r: float
    id_f1: float
    n_ac: int = 0
    n_rc: int = 0


def score_example(task_id: str, pred: str, gt: str, n_ac: int = 0, n_rc: int = 0) -> ExampleScore:
    em, p, r, f1 = identifier_metrics(pred, gt)
    return ExampleScore(task_id, code_em(pred, gt), code_es(pred, gt), em, p, r, f1, n_ac, n_rc)


@dataclass
class MetricsReport:
    code_em: float = 0.0
    code_es: float = 0.0
    id_em: float = 0.0
    id_p: float = 0.0
    id_r: float = 0.0
    id_f1: float = 0.0
    n_ac: float = 0.0
    n_rc: float = 0.0
    n_examples: int = 0
    missing: list[str] = field(default_factory=list)
    per_example: list[ExampleScore] = field(default_factory=list)

    def to_dict(self, scaled: bool = True) -> dict:
        k = 100.0 if scaled else 1.0
        return {
            **{m: round(getattr(self, m) * k, 4) for m in METRIC_FIELDS},
            "n_ac": round(self.n_ac, 4),
            "n_rc": round(self.n_rc, 4),
            "n_examples": self.n_examples,
            "missing": list(self.missing),
            "per_example": [asdict(e) for e in self.per_example],
        }

    def table(self) -> str:
        """Plain-text table: Code EM/ES, Identifier EM/P/R/F1, AC/RC counts."""
        header = ("Code EM", "Code ES", "Id EM", "Id P", "Id R", "Id F1", "AC", "RC")
        values = [f"{getattr(self, m) * 100:.2f}" for m in METRIC_FIELDS] + [f"{self.n_ac:.2f}", f"{self.n_rc:.2f}"]
        widths = [max(len(h), len(v)) for h, v in zip(header, values)]
        row = lambda cells: "  ".join(c.rjust(w) for c, w in zip(cells, widths))
        return "\n".join([row(header), row(["-" * w for w in widths]), row(values)]) + "\n"


def aggregate(scores: Sequence[ExampleScore], missing: Iterable[str] = ()) -> MetricsReport:
    report = MetricsReport(missing=sorted(missing), per_example=list(scores), n_examples=len(scores))
    if not scores:
        return report
    n = len(scores)
    for m in (*METRIC_FIELDS, "n_ac", "n_rc"):
        setattr(report, m, sum(getattr(s, m) for s in scores) / n)
    return report


# ---------------------------------------------------------------------------
# Files
# ---------------------------------------------------------------------------


def load_dataset(path: str | os.PathLike) -> list[EvalExample]:
    """JSONL dataset; relative ``repo_root`` values resolve against the file's directory."""
    base = Path(path).parent
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            out.append(EvalExample.from_dict(json.loads(line), base))
        except (json.JSONDecodeError, DatasetError, ValueError) as exc:
            raise DatasetError(f"{path}:{lineno}: {exc}") from None
    return out


def load_completions(path: str | os.PathLike) -> dict[str, str]:
    preds = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        if not line.strip():
            continue
        try:
            rec = json.loads(line)
            preds[str(rec["task_id"])] = str(rec["prediction"])
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise DatasetError(f"{path}:{lineno}: bad completion record: {exc}") from None
    return preds


def run_eval(dataset: Sequence[EvalExample], config=None, completions: Mapping[str, str] | str | os.PathLike = None,
             with_retrieval: bool = True) -> MetricsReport:
    """Score supplied completions; optionally count the contexts the pipeline would select.

    Examples without a prediction are listed in ``report.missing`` and left
    out of the means.
    """
    from .pipeline import PipelineConfig, RepoIndexCache, build_context

    if completions is None:
        raise DatasetError("no completions given")
    if not isinstance(completions, Mapping):
        completions = load_completions(completions)
    config = config or PipelineConfig()
    cache = RepoIndexCache(config)

    scores, missing = [], []
    for ex in dataset:
        if ex.task_id not in completions:
            missing.append(ex.task_id)
            continue
        n_ac = n_rc = 0
        if with_retrieval:
            index = cache.get(ex.repo_root)
            ctx = build_context(index, ex.file_path, ex.cursor_line, config, edited_text=ex.prefix_text)
            n_ac, n_rc = ctx.tdc.n_analogy, ctx.tdc.n_rationale
        scores.append(score_example(ex.task_id, completions[ex.task_id], ex.groundtruth, n_ac, n_rc))
    return aggregate(scores, missing)
