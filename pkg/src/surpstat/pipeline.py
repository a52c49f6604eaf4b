"""End-to-end runs: corpus in, scored surprisals, LMM stats, report out.

A run scores every configured backend over every experiment, fits one
random-intercept model per (model, experiment) cell on the two contrast
conditions, corrects all p-values in one family, and renders the report
as structured JSON, a plain-text ANOVA table, and per-experiment figures.
Everything is deterministic: no timestamps, stable ordering, stable float
formatting.
"""

from __future__ import annotations

import csv
import json
import math
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from . import plots
from .corpus import Condition, StimulusItem, experiments_in, parse_corpus
from .errors import (
    ConfigError,
    DuplicateItem,
    EmptyGroup,
    PipelineError,
    SurpstatError,
)
from .external_scores import load_score_file, to_word_surprisals
from .inference import bh_adjust
from .mixedmodel import AnovaResult, FitConfig, ModelSpec, select_random_effects, type3_anova
from .ngram import NGramBackend, tokenize_text, train
from .scoring import WordSurprisal, score_corpus

TABLE_COLUMNS = (
    "experiment_id",
    "frame_id",
    "condition",
    "critical_word",
    "model_id",
    "surprisal_bits",
    "n_subtokens",
)

DEFAULT_CONTRAST = ("Related", "Unrelated")
DEFAULT_INTERCEPTS = ("frame_id", "critical_word")

_KNOWN_KEYS = {
    "corpora",
    "backends",
    "experiments",
    "contrast",
    "fdr_scope",
    "out_dir",
    "random_intercepts",
    "include_right_context",
    "infinite",
    "fit",
    "surprisal_table",
}


@dataclass(frozen=True)
class RunConfig:
    corpora: Tuple[Tuple[str, str], ...]  # (path, format) pairs
    backends: Tuple[Mapping, ...]
    experiments: Optional[Tuple[str, ...]] = None
    contrast: Tuple[str, str] = DEFAULT_CONTRAST
    fdr_scope: str = "run"
    out_dir: Optional[str] = None
    random_intercepts: Tuple[str, ...] = DEFAULT_INTERCEPTS
    include_right_context: bool = False
    infinite_policy: str = "drop"  # or "cap"
    cap_bits: Optional[float] = None
    fit_config: FitConfig = field(default_factory=FitConfig)
    surprisal_table: Optional[str] = None

    @classmethod
    def from_mapping(cls, raw: Mapping, base_dir: Optional[str] = None) -> "RunConfig":
        unknown = set(raw) - _KNOWN_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")

        def resolve(p: str) -> str:
            path = Path(p)
            if base_dir is not None and not path.is_absolute():
                path = Path(base_dir) / path
            return str(path)

        corpora = []
        for entry in raw.get("corpora", []):
            if isinstance(entry, str):
                path, fmt = entry, None
            elif isinstance(entry, Mapping):
                path, fmt = entry.get("path"), entry.get("format")
            else:
                raise ConfigError(f"bad corpus entry: {entry!r}")
            if not path:
                raise ConfigError("corpus entry has no path")
            if fmt is None:
                fmt = "structured" if str(path).endswith(".json") else "delimited"
            if fmt not in ("delimited", "structured"):
                raise ConfigError(f"unknown corpus format {fmt!r}")
            corpora.append((resolve(path), fmt))
        if not corpora:
            raise ConfigError("config needs at least one corpus")

        backends = []
        for decl in raw.get("backends", []):
            if not isinstance(decl, Mapping):
                raise ConfigError(f"bad backend entry: {decl!r}")
            kind = decl.get("type")
            if kind == "ngram":
                for key in ("model_id", "train_text", "order", "discount"):
                    if key not in decl:
                        raise ConfigError(f"ngram backend missing {key!r}")
                backends.append(
                    {
                        "type": "ngram",
                        "model_id": str(decl["model_id"]),
                        "train_text": resolve(decl["train_text"]),
                        "order": int(decl["order"]),
                        "discount": float(decl["discount"]),
                    }
                )
            elif kind == "external":
                if "path" not in decl:
                    raise ConfigError("external backend missing 'path'")
                backends.append({"type": "external", "path": resolve(decl["path"])})
            else:
                raise ConfigError(f"unknown backend type {kind!r}")
        if not backends:
            raise ConfigError("config needs at least one backend")

        contrast = tuple(str(c) for c in raw.get("contrast", DEFAULT_CONTRAST))
        if len(contrast) != 2 or contrast[0] == contrast[1]:
            raise ConfigError(f"contrast must be two distinct conditions: {contrast}")

        fdr_scope = raw.get("fdr_scope", "run")
        if fdr_scope not in ("run", "experiment"):
            raise ConfigError(f"unknown fdr_scope {fdr_scope!r}")

        infinite = raw.get("infinite", {})
        if not isinstance(infinite, Mapping):
            raise ConfigError("'infinite' must be an object")
        policy = infinite.get("policy", "drop")
        cap_bits = infinite.get("cap_bits")
        if policy not in ("drop", "cap"):
            raise ConfigError(f"unknown infinite policy {policy!r}")
        if policy == "cap":
            if cap_bits is None or not math.isfinite(float(cap_bits)) or float(cap_bits) <= 0:
                raise ConfigError("cap policy requires finite cap_bits > 0")
            cap_bits = float(cap_bits)

        fit_raw = raw.get("fit", {})
        if not isinstance(fit_raw, Mapping):
            raise ConfigError("'fit' must be an object")
        fit_fields = {
            "singular_threshold",
            "deviance_tol",
            "param_tol",
            "fd_step",
            "max_iter",
        }
        bad = set(fit_raw) - fit_fields
        if bad:
            raise ConfigError(f"unknown fit keys: {sorted(bad)}")
        fit_config = FitConfig(**fit_raw)

        experiments = raw.get("experiments")
        if experiments is not None:
            experiments = tuple(str(e) for e in experiments)

        table = raw.get("surprisal_table")
        return cls(
            corpora=tuple(corpora),
            backends=tuple(backends),
            experiments=experiments,
            contrast=(contrast[0], contrast[1]),
            fdr_scope=fdr_scope,
            out_dir=resolve(raw["out_dir"]) if raw.get("out_dir") else None,
            random_intercepts=tuple(
                str(g) for g in raw.get("random_intercepts", DEFAULT_INTERCEPTS)
            ),
            include_right_context=bool(raw.get("include_right_context", False)),
            infinite_policy=policy,
            cap_bits=cap_bits,
            fit_config=fit_config,
            surprisal_table=resolve(table) if table else None,
        )

    @classmethod
    def from_file(cls, path: str) -> "RunConfig":
        with open(path, "r", encoding="utf-8") as fp:
            try:
                raw = json.load(fp)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{path}: invalid JSON ({exc.msg}, line {exc.lineno})")
        if not isinstance(raw, Mapping):
            raise ConfigError(f"{path}: config root must be an object")
        return cls.from_mapping(raw, base_dir=str(Path(path).parent))


@dataclass(frozen=True)
class SummaryStat:
    mean: float
    se: Optional[float]  # absent for a single observation
    n: int


def condition_summary(groups: Mapping[str, Sequence[float]]) -> Dict[str, SummaryStat]:
    """Mean and standard error of the mean per condition group.

    SE uses the n-1 sample standard deviation; a single-observation group
    reports SE as absent (None).
    """
    out = {}
    for cond, values in groups.items():
        vals = [float(v) for v in values]
        if not vals:
            raise EmptyGroup(f"condition {cond!r} has no observations")
        n = len(vals)
        mean = float(np.mean(vals))
        se = float(np.std(vals, ddof=1) / math.sqrt(n)) if n > 1 else None
        out[cond] = SummaryStat(mean=mean, se=se, n=n)
    return out


@dataclass
class ReportRow:
    model_id: str
    experiment_id: str
    condition_stats: Dict[str, SummaryStat]
    anova: AnovaResult
    selected_random_intercepts: Tuple[str, ...]
    converged: bool
    singular: bool
    n_obs_used: int
    warnings: Dict[str, int]


@dataclass
class RunReport:
    contrast: Tuple[str, str]
    fdr_scope: str
    rows: List[ReportRow]

    def to_json_dict(self) -> dict:
        def stat(s: SummaryStat) -> dict:
            return {"mean": s.mean, "se": s.se, "n": s.n}

        return {
            "contrast": list(self.contrast),
            "fdr_scope": self.fdr_scope,
            "rows": [
                {
                    "model_id": r.model_id,
                    "experiment_id": r.experiment_id,
                    "condition_stats": {
                        c: stat(s) for c, s in sorted(r.condition_stats.items())
                    },
                    "anova": {
                        "F": r.anova.F,
                        "ndf": r.anova.ndf,
                        "ddf": r.anova.ddf,
                        "p_raw": r.anova.p_raw,
                        "p_corrected": r.anova.p_corrected,
                    },
                    "selected_random_intercepts": list(r.selected_random_intercepts),
                    "converged": r.converged,
                    "singular": r.singular,
                    "n_obs_used": r.n_obs_used,
                    "warnings": dict(sorted(r.warnings.items())),
                }
                for r in self.rows
            ],
        }

    @classmethod
    def from_json_dict(cls, payload: Mapping) -> "RunReport":
        rows = []
        for r in payload["rows"]:
            stats = {
                c: SummaryStat(mean=s["mean"], se=s["se"], n=s["n"])
                for c, s in r["condition_stats"].items()
            }
            a = r["anova"]
            rows.append(
                ReportRow(
                    model_id=r["model_id"],
                    experiment_id=r["experiment_id"],
                    condition_stats=stats,
                    anova=AnovaResult(
                        F=a["F"],
                        ndf=a["ndf"],
                        ddf=a["ddf"],
                        p_raw=a["p_raw"],
                        p_corrected=a.get("p_corrected"),
                    ),
                    selected_random_intercepts=tuple(r["selected_random_intercepts"]),
                    converged=r["converged"],
                    singular=r["singular"],
                    n_obs_used=r["n_obs_used"],
                    warnings=dict(r["warnings"]),
                )
            )
        contrast = payload["contrast"]
        return cls(
            contrast=(contrast[0], contrast[1]),
            fdr_scope=payload["fdr_scope"],
            rows=rows,
        )


# ---------------------------------------------------------------- formatting

def format_f(f_value: float) -> str:
    """Test-statistic display: '<0.1', two decimals below 10, else one."""
    if f_value < 0.1:
        return "<0.1"
    if f_value < 10.0:
        return f"{f_value:.2f}"
    return f"{f_value:.1f}"


def format_ddf(ddf: float) -> str:
    return str(int(round(ddf)))


def format_p(p: float) -> str:
    """p display: '<0.0001' below 1e-4, else four decimals."""
    if p < 1e-4:
        return "<0.0001"
    return f"{p:.4f}"


def render_text(report: RunReport) -> str:
    """Plain-text ANOVA table, one section per experiment."""
    lines = [
        "ANOVA of condition effect (Type III, Satterthwaite ddf)",
        f"Contrast: {report.contrast[0]} vs {report.contrast[1]};"
        f" FDR correction scope: {report.fdr_scope}",
    ]
    by_exp: Dict[str, List[ReportRow]] = {}
    exp_order: List[str] = []
    for row in report.rows:
        if row.experiment_id not in by_exp:
            exp_order.append(row.experiment_id)
        by_exp.setdefault(row.experiment_id, []).append(row)
    for exp in exp_order:
        lines.append("")
        lines.append(f"Experiment: {exp}")
        lines.append(f"  {'Model':<24}{'Test Statistic':<26}Corrected p")
        for row in by_exp[exp]:
            a = row.anova
            stat = f"F({a.ndf},{format_ddf(a.ddf)}) = {format_f(a.F)}"
            p = format_p(a.p_corrected if a.p_corrected is not None else a.p_raw)
            marks = []
            if row.singular:
                marks.append("singular fit")
            if not row.converged:
                marks.append("did not converge")
            suffix = f"   [{'; '.join(marks)}]" if marks else ""
            lines.append(f"  {row.model_id:<24}{stat:<26}{p}{suffix}")
    return "\n".join(lines) + "\n"


# ----------------------------------------------------------- surprisal table

def write_surprisal_table(fp, rows: Sequence[Mapping]) -> None:
    """TSV interchange: one row per scored (item, model)."""
    writer = csv.DictWriter(
        fp, fieldnames=TABLE_COLUMNS, delimiter="\t", lineterminator="\n"
    )
    writer.writeheader()
    for row in rows:
        out = dict(row)
        out["surprisal_bits"] = repr(float(row["surprisal_bits"]))
        writer.writerow(out)


def read_surprisal_table(fp) -> List[dict]:
    reader = csv.DictReader(fp, delimiter="\t")
    missing = set(TABLE_COLUMNS) - set(reader.fieldnames or ())
    if missing:
        raise ConfigError(f"surprisal table missing columns: {sorted(missing)}")
    rows = []
    for raw in reader:
        Condition.parse(raw["condition"])  # validate the label
        row = dict(raw)
        row["surprisal_bits"] = float(raw["surprisal_bits"])
        row["n_subtokens"] = int(raw["n_subtokens"])
        rows.append(row)
    return rows


# ------------------------------------------------------------------- running

def _load_corpora(config: RunConfig) -> List[StimulusItem]:
    items: List[StimulusItem] = []
    seen = set()
    for path, fmt in config.corpora:
        with open(path, "rb") as fp:
            for item in parse_corpus(fp.read(), format=fmt):
                key = (item.experiment_id, item.frame_id, item.condition.value)
                if key in seen:
                    raise DuplicateItem(key)
                seen.add(key)
                items.append(item)
    return items


class _ExternalSource:
    """Backend-shaped provider of surprisals parsed from a score file."""

    def __init__(self, model_id: str, surprisals: Sequence[WordSurprisal]):
        self.model_id = model_id
        self._by_ref = {s.item_ref: s for s in surprisals}

    def lookup(self, items: Sequence[StimulusItem]):
        found, missing = [], 0
        for item in items:
            s = self._by_ref.get(item.ref)
            if s is None:
                missing += 1
            else:
                found.append(s)
        return found, missing


def _build_sources(config: RunConfig, items: Sequence[StimulusItem]):
    """Instantiate configured backends in declaration order.

    Returns (model_id, scorer) pairs where scorer maps an item subset to
    (list of WordSurprisal, missing-score count).
    """
    sources = []
    for decl in config.backends:
        if decl["type"] == "ngram":
            with open(decl["train_text"], "r", encoding="utf-8") as fp:
                tokens = tokenize_text(fp.read())
            model = train(tokens, order=decl["order"], discount=decl["discount"])
            backend = NGramBackend(model, model_id=decl["model_id"])

            def scorer(subset, backend=backend):
                run = score_corpus(
                    backend,
                    subset,
                    include_right_context=config.include_right_context,
                    policy="fail_fast",
                )
                return run.surprisals, 0

            sources.append((decl["model_id"], scorer))
        else:
            with open(decl["path"], "rb") as fp:
                _, records = load_score_file(fp.read(), corpus=items)
            surprisals = to_word_surprisals(records)
            model_order = []
            for record in records:
                if record.model_id not in model_order:
                    model_order.append(record.model_id)
            for model_id in model_order:
                source = _ExternalSource(
                    model_id, [s for s in surprisals if s.model_id == model_id]
                )
                sources.append((model_id, source.lookup))
    return sources


def _score_to_table(config: RunConfig, items: Sequence[StimulusItem], jobs: int = 1):
    """Score all (backend, experiment) cells into surprisal-table rows."""
    experiments = (
        list(config.experiments)
        if config.experiments is not None
        else experiments_in(items)
    )
    known = set(experiments_in(items))
    for exp in experiments:
        if exp not in known:
            raise ConfigError(f"experiment {exp!r} not present in the corpus")

    sources = _build_sources(config, items)
    by_exp = {
        exp: [item for item in items if item.experiment_id == exp]
        for exp in experiments
    }
    cells = [(model_id, scorer, exp) for model_id, scorer in sources for exp in experiments]

    def run_cell(cell):
        model_id, scorer, exp = cell
        try:
            surprisals, missing = scorer(by_exp[exp])
        except SurpstatError as exc:
            raise PipelineError(
                exc,
                model_id=model_id,
                experiment_id=exp,
                item_ref=getattr(exc, "item_ref", None),
            )
        return surprisals, missing

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(run_cell, cells))
    else:
        results = [run_cell(cell) for cell in cells]

    word_by_ref = {item.ref: item.critical_word for item in items}
    table_rows = []
    missing_by_cell = {}
    for (model_id, _, exp), (surprisals, missing) in zip(cells, results):
        missing_by_cell[(model_id, exp)] = missing
        for s in surprisals:
            table_rows.append(
                {
                    "experiment_id": s.item_ref.experiment_id,
                    "frame_id": s.item_ref.frame_id,
                    "condition": s.item_ref.condition.value,
                    "critical_word": word_by_ref[s.item_ref],
                    "model_id": model_id,
                    "surprisal_bits": s.surprisal_bits,
                    "n_subtokens": s.n_subtokens,
                }
            )
    return table_rows, missing_by_cell


def stats_from_table(
    table_rows: Sequence[Mapping],
    config: RunConfig,
    missing_by_cell: Optional[Mapping] = None,
    jobs: int = 1,
) -> RunReport:
    """Fit the per-cell models and assemble the corrected report.

    Only the two contrast conditions enter each fit; other conditions
    appear in the summary statistics alone.  Infinite surprisals are
    dropped (or capped at config.cap_bits) before any statistic.
    """
    cells: List[Tuple[str, str]] = []
    rows_by_cell: Dict[Tuple[str, str], List[Mapping]] = {}
    for row in table_rows:
        key = (str(row["model_id"]), str(row["experiment_id"]))
        if key not in rows_by_cell:
            cells.append(key)
            rows_by_cell[key] = []
        rows_by_cell[key].append(row)

    def fit_cell(key: Tuple[str, str]) -> ReportRow:
        model_id, exp = key
        rows = rows_by_cell[key]
        warnings = {"infinite_dropped": 0, "infinite_capped": 0, "missing_scores": 0}
        if missing_by_cell:
            warnings["missing_scores"] = int(missing_by_cell.get(key, 0))

        usable = []
        for row in rows:
            bits = float(row["surprisal_bits"])
            if math.isinf(bits):
                if config.infinite_policy == "cap":
                    warnings["infinite_capped"] += 1
                    row = dict(row)
                    row["surprisal_bits"] = config.cap_bits
                    usable.append(row)
                else:
                    warnings["infinite_dropped"] += 1
            else:
                usable.append(row)

        groups: Dict[str, List[float]] = {}
        for row in usable:
            groups.setdefault(str(row["condition"]), []).append(
                float(row["surprisal_bits"])
            )
        stats = condition_summary(groups)

        contrast_rows = [r for r in usable if str(r["condition"]) in config.contrast]
        data = {
            "surprisal_bits": [float(r["surprisal_bits"]) for r in contrast_rows],
            "condition": [str(r["condition"]) for r in contrast_rows],
        }
        for g in config.random_intercepts:
            data[g] = [str(r[g]) for r in contrast_rows]

        maximal = ModelSpec(
            response="surprisal_bits",
            fixed="condition",
            random_intercepts=config.random_intercepts,
            fixed_levels=config.contrast,
        )
        try:
            selected, fit = select_random_effects(data, maximal, config.fit_config)
            anova = type3_anova(fit)
        except SurpstatError as exc:
            raise PipelineError(exc, model_id=model_id, experiment_id=exp)
        return ReportRow(
            model_id=model_id,
            experiment_id=exp,
            condition_stats=stats,
            anova=anova,
            selected_random_intercepts=selected.random_intercepts,
            converged=fit.converged,
            singular=fit.singular,
            n_obs_used=len(contrast_rows),
            warnings=warnings,
        )

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            report_rows = list(pool.map(fit_cell, cells))
    else:
        report_rows = [fit_cell(key) for key in cells]

    if config.fdr_scope == "run":
        families = {None: list(range(len(report_rows)))}
    else:
        families = {}
        for i, row in enumerate(report_rows):
            families.setdefault(row.experiment_id, []).append(i)
    for indices in families.values():
        adjusted = bh_adjust([report_rows[i].anova.p_raw for i in indices])
        for i, p_adj in zip(indices, adjusted):
            report_rows[i].anova = report_rows[i].anova.with_correction(p_adj)

    return RunReport(
        contrast=config.contrast, fdr_scope=config.fdr_scope, rows=report_rows
    )


def run(config: RunConfig, jobs: int = 1) -> RunReport:
    """Score, fit, and correct: the whole pipeline on one config."""
    items = _load_corpora(config)
    table_rows, missing = _score_to_table(config, items, jobs=jobs)
    return stats_from_table(table_rows, config, missing_by_cell=missing, jobs=jobs)


def _safe_name(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]", "_", name)


def emit_report(
    report: RunReport,
    out_dir: str,
    formats: Sequence[str] = ("json", "text", "plots"),
) -> List[str]:
    """Write the report files; returns the paths written."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: List[str] = []

    if "json" in formats:
        path = out / "report.json"
        payload = json.dumps(report.to_json_dict(), sort_keys=True, indent=2)
        path.write_text(payload + "\n", encoding="utf-8")
        written.append(str(path))

    if "text" in formats:
        path = out / "anova.txt"
        path.write_text(render_text(report), encoding="utf-8")
        written.append(str(path))

    if "plots" in formats:
        by_exp: Dict[str, List[ReportRow]] = {}
        exp_order: List[str] = []
        for row in report.rows:
            if row.experiment_id not in by_exp:
                exp_order.append(row.experiment_id)
            by_exp.setdefault(row.experiment_id, []).append(row)
        for exp in exp_order:
            path = out / f"means_{_safe_name(exp)}.svg"
            summaries = [(r.model_id, r.condition_stats) for r in by_exp[exp]]
            plots.condition_bar_plot(summaries, str(path), title=exp)
            written.append(str(path))

    return written
