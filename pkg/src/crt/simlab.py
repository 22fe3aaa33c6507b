"""Simulation laboratory: power grids, per-decile validity studies, and result IO.

A study fixes covariates and potential outcomes per cell, re-randomizes the
observed assignment R times, and runs every configured test procedure on each
randomization.  All random work flows through substreams derived from the
master seed and structural indices, so results are identical for any worker
count.
"""

from __future__ import annotations

import logging
import sys
from dataclasses import dataclass, fields

import numpy as np
from joblib import Parallel, delayed

from .balance import TierSpec, covariance_inverse, mahalanobis
from .bounds import BoundsConfig, build_tier_criterion
from .cem import CoarseningSpec, cem_prune, coarsen
from .data import observe
from .dgp import DGPSpec, generate, transformed_covariates
from .engine import _mc_pvalue
from .errors import CRTError, SchemaError
from .rng import substream
from .samplers import CompleteSampler, ConditionalSampler, WithinStrataSampler
from .statistics import StatisticSpec, StratumLabels

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)

# substream namespaces
_DATASET, _ASSIGNMENT, _TEST = 0, 1, 2

POWER_COLUMNS = (
    "model,beta,tau,design,procedure,param_T,param_pa,param_G,statistic,R,M,reject_rate,mc_se"
)
DECILE_COLUMNS = "model,beta,procedure,decile,R,reject_rate,mc_se,binning"


@dataclass(frozen=True)
class ProcedureSpec:
    """One test procedure in a study: sampler family, statistic, and parameters.

    Config files may spell the bound-selection keys as ``pa``, ``D``,
    ``per_tier_pa`` and ``cutpoints``, and the coarsening keys as a ``cem``
    table with ``mode`` and ``G``; see read_config.
    """

    name: str
    sampler: str = "complete"  # complete | conditional | cem
    statistic: str = "sd"  # sd | int
    tiers: int = 1
    acceptance: float = 0.1
    bounds_procedure: str = "neighborhood"
    reference_draws: int | None = None  # None: use the study default
    per_tier_acceptance: tuple | None = None
    cutpoints: tuple | None = None
    groups: int = 2
    cem_mode: str = "quantile"

    def __post_init__(self):
        if self.sampler not in ("complete", "conditional", "cem"):
            raise ValueError(f"unknown sampler {self.sampler!r}")
        if self.statistic not in ("sd", "int"):
            raise ValueError(f"study statistics are 'sd' or 'int', got {self.statistic!r}")
        if self.sampler == "cem" and self.statistic != "sd":
            raise ValueError("coarsened-matching tests use the mean-difference statistic")
        if self.per_tier_acceptance is not None:
            object.__setattr__(
                self, "per_tier_acceptance", tuple(float(a) for a in self.per_tier_acceptance)
            )
        if self.cutpoints is not None:
            object.__setattr__(self, "cutpoints", tuple(float(c) for c in self.cutpoints))

    def param_columns(self):
        t = self.tiers if self.sampler == "conditional" else ""
        pa = self.acceptance if self.sampler == "conditional" else ""
        g = (
            (self.groups if self.cem_mode == "quantile" else "auto")
            if self.sampler == "cem"
            else ""
        )
        return t, pa, g


@dataclass(frozen=True)
class StudyConfig:
    """Grid and execution settings for the power and validity studies."""

    models: tuple = ("main_linear",)
    betas: tuple = (0.0, 1.5, 3.0)
    taus: tuple = tuple(round(0.1 * k, 10) for k in range(11))
    designs: tuple = ((50, 50),)
    procedures: tuple = ()
    replications: int = 500
    draws: int = 500
    reference_draws: int = 1000
    alpha: float = 0.05
    seed: int = 0
    n_jobs: int = 1
    n_assignments: int = 10_000
    binning: str = "raw"

    def __post_init__(self):
        if self.replications < 1:
            raise ValueError("need at least one replication")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0, 1), got {self.alpha}")
        if self.binning not in ("raw", "transformed"):
            raise ValueError(f"binning must be 'raw' or 'transformed', got {self.binning!r}")
        if not self.procedures:
            raise ValueError("need at least one procedure")
        names = [p.name for p in self.procedures]
        if len(set(names)) != len(names):
            raise ValueError("procedure names must be unique")


@dataclass(frozen=True)
class PowerRow:
    model: str
    beta: float
    tau: float
    design: str
    procedure: str
    param_T: object
    param_pa: object
    param_G: object
    statistic: str
    R: int
    M: int
    reject_rate: float
    mc_se: float


@dataclass(frozen=True)
class DecileRow:
    model: str
    beta: float
    procedure: str
    decile: int
    R: int
    reject_rate: float
    mc_se: float
    binning: str


@dataclass(frozen=True)
class PowerTable:
    rows: tuple


@dataclass(frozen=True)
class DecileTable:
    rows: tuple


# ---------------------------------------------------------------------------
# Running one procedure on one randomization.
# ---------------------------------------------------------------------------


def _prepare_dataset_context(X, procedures):
    """Precompute per-dataset state: coarsenings for cem procedures."""
    ctx = {}
    for proc in procedures:
        if proc.sampler == "cem" and proc.name not in ctx:
            spec = CoarseningSpec(mode=proc.cem_mode, groups=proc.groups)
            ctx[proc.name] = coarsen(X, spec.cutpoints_for(X))
    return ctx

def _run_procedure(proc: ProcedureSpec, X, w, y, draws, reference_draws, ctx, rng) -> float:
    """p-value of one configured test on one observed randomization."""
    stat = StatisticSpec(kind=proc.statistic)
    n = X.shape[0]
    n_t = int(w.sum())
    if proc.sampler == "complete":
        sampler = CompleteSampler(n, n_t)
        return _mc_pvalue(X, w, y, stat, sampler, draws, rng).p_value
    if proc.sampler == "conditional":
        tiers = TierSpec.contiguous(X.shape[1], proc.tiers)
        config = BoundsConfig(
            procedure=proc.bounds_procedure,
            reference_draws=proc.reference_draws or reference_draws,
            acceptance=proc.acceptance,
            per_tier_acceptance=proc.per_tier_acceptance,
            cutpoints=proc.cutpoints,
        )
        criterion = build_tier_criterion(X, w, tiers, config, rng)
        sampler = ConditionalSampler(X, criterion)
        return _mc_pvalue(X, w, y, stat, sampler, draws, rng).p_value
    # coarsened matching: prune, then permute within retained strata
    labels = ctx[proc.name]
    retained = cem_prune(labels, w)
    _, dense = np.unique(labels.c[retained], return_inverse=True)
    kept = StratumLabels(c=dense + 1)
    sampler = WithinStrataSampler.from_observed(kept, w[retained])
    return _mc_pvalue(X[retained], w[retained], y[retained], stat, sampler, draws, rng).p_value


def _replication(X, po, procedures, draws, reference_draws, ctx, seed, cell_key, r, n_treated):
    """One replication: draw the observed assignment, run every procedure."""
    design_sampler = CompleteSampler(X.shape[0], n_treated)
    w = design_sampler.draw(substream(seed, _ASSIGNMENT, *cell_key[:3], r))
    y = observe(po, w)
    out = np.full(len(procedures), np.nan)
    for j, proc in enumerate(procedures):
        rng = substream(seed, _TEST, *cell_key, r, j)
        try:
            out[j] = _run_procedure(proc, X, w, y, draws, reference_draws, ctx, rng)
        except CRTError as exc:
            logger.debug("procedure %s failed on replication %d: %s", proc.name, r, exc)
    return out


def _replication_chunk(args, rep_range, n_treated):
    return np.vstack([_replication(*args, r, n_treated) for r in rep_range])


def _assignment_chunk(args, W_chunk, rep_range):
    """Validity-study worker: run every procedure on each given assignment."""
    X, po, procedures, draws, reference_draws, ctx, seed = args
    out = np.full((W_chunk.shape[0], len(procedures)), np.nan)
    for i, r in enumerate(rep_range):
        w = W_chunk[i]
        y = observe(po, w)
        for j, proc in enumerate(procedures):
            rng = substream(seed, _TEST, 0, 0, 0, 0, r, j)
            try:
                out[i, j] = _run_procedure(proc, X, w, y, draws, reference_draws, ctx, rng)
            except CRTError as exc:
                logger.debug("procedure %s failed on assignment %d: %s", proc.name, r, exc)
    return out


def _chunk_ranges(total: int, n_jobs: int):
    n_chunks = max(1, min(total, 4 * max(n_jobs, 1)))
    edges = np.linspace(0, total, n_chunks + 1).astype(int)
    return [range(a, b) for a, b in zip(edges, edges[1:]) if b > a]


def _design_label(n_treated, n_control) -> str:
    return f"{n_treated}/{n_control}"


def run_power_study(config: StudyConfig) -> PowerTable:
    """Rejection rates over re-randomizations for every (model, beta, tau, design, procedure).

    Each cell fixes one dataset; the observed assignment sequence is shared
    across effect sizes and procedures so comparisons use common
    randomizations.  A procedure is dropped from a cell (with a warning)
    when more than 1% of its replications fail.
    """
    rows = []
    runner = Parallel(n_jobs=config.n_jobs) if config.n_jobs != 1 else None
    for mi, model in enumerate(config.models):
        for bi, beta in enumerate(config.betas):
            for di, (n_treated, n_control) in enumerate(config.designs):
                for ti, tau in enumerate(config.taus):
                    spec = DGPSpec(model=model, beta=beta, tau=tau, n=n_treated + n_control)
                    X, po = generate(spec, substream(config.seed, _DATASET, mi, bi, di))
                    ctx = _prepare_dataset_context(X, config.procedures)
                    cell_key = (mi, bi, di, ti)
                    args = (
                        X,
                        po,
                        config.procedures,
                        config.draws,
                        config.reference_draws,
                        ctx,
                        config.seed,
                        cell_key,
                    )
                    if runner is None:
                        results = [
                            _replication(*args, r, n_treated)
                            for r in range(config.replications)
                        ]
                        pvals = np.vstack(results)
                    else:
                        chunks = runner(
                            delayed(_replication_chunk)(args, rep_range, n_treated)
                            for rep_range in _chunk_ranges(config.replications, config.n_jobs)
                        )
                        pvals = np.vstack(chunks)
                    rows.extend(
                        _summarize_cell(config, model, beta, tau, n_treated, n_control, pvals)
                    )
    return PowerTable(rows=tuple(rows))


def _summarize_cell(config, model, beta, tau, n_treated, n_control, pvals):
    out = []
    for j, proc in enumerate(config.procedures):
        col = pvals[:, j]
        failed = int(np.isnan(col).sum())
        if failed > 0.01 * config.replications:
            logger.warning(
                "cell (%s, beta=%s, tau=%s, %s): %d/%d replications failed; dropping",
                model,
                beta,
                tau,
                proc.name,
                failed,
                config.replications,
            )
            continue
        used = col[~np.isnan(col)]
        rate = float((used <= config.alpha).mean())
        t, pa, g = proc.param_columns()
        out.append(
            PowerRow(
                model=model,
                beta=beta,
                tau=tau,
                design=_design_label(n_treated, n_control),
                procedure=proc.name,
                param_T=t,
                param_pa=pa,
                param_G=g,
                statistic=proc.statistic,
                R=used.shape[0],
                M=config.draws,
                reject_rate=rate,
                mc_se=float(np.sqrt(rate * (1.0 - rate) / used.shape[0])),
            )
        )
    return out


def run_conditional_validity_study(config: StudyConfig) -> DecileTable:
    """Per-decile rejection rates across assignments binned by observed covariate balance.

    Requires a sharp-null grid (every tau equal to 0).  Assignments are
    ranked by the full-covariate Mahalanobis distance of the binning
    covariates (raw, or the outcome-relevant transforms for the misspecified
    models) and split into ten equal groups.
    """
    if any(t != 0.0 for t in config.taus):
        raise ValueError("the validity study requires tau = 0 (sharp null true)")
    if len(config.models) != 1 or len(config.betas) != 1 or len(config.designs) != 1:
        raise ValueError("the validity study runs one (model, beta, design) at a time")
    model, beta = config.models[0], config.betas[0]
    n_treated, n_control = config.designs[0]
    n = n_treated + n_control
    spec = DGPSpec(model=model, beta=beta, tau=0.0, n=n)
    X, po = generate(spec, substream(config.seed, _DATASET, 0, 0, 0))
    ctx = _prepare_dataset_context(X, config.procedures)

    B = X if config.binning == "raw" else transformed_covariates(model, X)
    inv = covariance_inverse(B)
    design_sampler = CompleteSampler(n, n_treated)
    W_all = np.vstack(
        [
            design_sampler.draw(substream(config.seed, _ASSIGNMENT, 0, 0, 0, r))
            for r in range(config.n_assignments)
        ]
    )
    distances = np.array([mahalanobis(B, w, inv) for w in W_all])
    ranks = np.argsort(np.argsort(distances, kind="stable"), kind="stable")
    deciles = np.minimum(ranks * 10 // config.n_assignments, 9)

    args = (X, po, config.procedures, config.draws, config.reference_draws, ctx, config.seed)
    if config.n_jobs != 1:
        chunks = Parallel(n_jobs=config.n_jobs)(
            delayed(_assignment_chunk)(args, W_all[rep_range.start : rep_range.stop], rep_range)
            for rep_range in _chunk_ranges(config.n_assignments, config.n_jobs)
        )
        pvals = np.vstack(chunks)
    else:
        pvals = _assignment_chunk(args, W_all, range(config.n_assignments))

    rows = []
    for j, proc in enumerate(config.procedures):
        col = pvals[:, j]
        failed = int(np.isnan(col).sum())
        if failed > 0.01 * config.n_assignments:
            logger.warning(
                "validity study: procedure %s failed on %d/%d assignments; dropping",
                proc.name,
                failed,
                config.n_assignments,
            )
            continue
        for d in range(10):
            mask = (deciles == d) & ~np.isnan(col)
            if not mask.any():
                continue
            rate = float((col[mask] <= config.alpha).mean())
            rows.append(
                DecileRow(
                    model=model,
                    beta=beta,
                    procedure=proc.name,
                    decile=d + 1,
                    R=int(mask.sum()),
                    reject_rate=rate,
                    mc_se=float(np.sqrt(rate * (1.0 - rate) / mask.sum())),
                    binning=config.binning,
                )
            )
    return DecileTable(rows=tuple(rows))


# ---------------------------------------------------------------------------
# Persistence: fixed-schema CSVs and TOML-style config files.
# ---------------------------------------------------------------------------


def _format_value(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_results(table, path) -> None:
    """Write a PowerTable or DecileTable to CSV with its fixed column order."""
    if isinstance(table, PowerTable):
        header = POWER_COLUMNS
    elif isinstance(table, DecileTable):
        header = DECILE_COLUMNS
    else:
        raise TypeError(f"expected PowerTable or DecileTable, got {type(table).__name__}")
    names = header.split(",")
    with open(path, "w", newline="") as fh:
        fh.write(header + "\n")
        for row in table.rows:
            fh.write(",".join(_format_value(getattr(row, name)) for name in names) + "\n")


def _parse_param(text: str):
    if text == "":
        return ""
    try:
        return int(text)
    except ValueError:
        try:
            return float(text)
        except ValueError:
            return text


def read_power_csv(path) -> PowerTable:
    rows = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != POWER_COLUMNS:
            raise SchemaError(f"{path}: expected header {POWER_COLUMNS!r}, got {header!r}")
        for line in fh:
            f = line.rstrip("\n").split(",")
            if len(f) != 13:
                raise SchemaError(f"{path}: expected 13 fields, got {len(f)}")
            rows.append(
                PowerRow(
                    model=f[0],
                    beta=float(f[1]),
                    tau=float(f[2]),
                    design=f[3],
                    procedure=f[4],
                    param_T=_parse_param(f[5]),
                    param_pa=_parse_param(f[6]),
                    param_G=_parse_param(f[7]),
                    statistic=f[8],
                    R=int(f[9]),
                    M=int(f[10]),
                    reject_rate=float(f[11]),
                    mc_se=float(f[12]),
                )
            )
    return PowerTable(rows=tuple(rows))


def read_decile_csv(path) -> DecileTable:
    rows = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != DECILE_COLUMNS:
            raise SchemaError(f"{path}: expected header {DECILE_COLUMNS!r}, got {header!r}")
        for line in fh:
            f = line.rstrip("\n").split(",")
            if len(f) != 8:
                raise SchemaError(f"{path}: expected 8 fields, got {len(f)}")
            rows.append(
                DecileRow(
                    model=f[0],
                    beta=float(f[1]),
                    procedure=f[2],
                    decile=int(f[3]),
                    R=int(f[4]),
                    reject_rate=float(f[5]),
                    mc_se=float(f[6]),
                    binning=f[7],
                )
            )
    return DecileTable(rows=tuple(rows))


_REQUIRED_KEYS = (
    "models",
    "betas",
    "taus",
    "designs",
    "replications",
    "draws",
    "alpha",
    "seed",
    "procedures",
)

_PROCEDURE_KEYS = {f.name for f in fields(ProcedureSpec)}
_CONFIG_KEYS = {f.name for f in fields(StudyConfig)}

# spelling used in config files -> dataclass field
_PROCEDURE_ALIASES = {
    "pa": "acceptance",
    "D": "reference_draws",
    "per_tier_pa": "per_tier_acceptance",
    "procedure": "bounds_procedure",
}


def _normalize_procedure_entry(entry: dict, where: str) -> dict:
    out = {}
    for key, value in entry.items():
        if key == "cem":
            if not isinstance(value, dict) or set(value) - {"mode", "G"}:
                raise SchemaError(f"{where}: cem table takes keys 'mode' and 'G'")
            if "mode" in value:
                out["cem_mode"] = value["mode"]
            if "G" in value:
                out["groups"] = int(value["G"])
            continue
        field_name = _PROCEDURE_ALIASES.get(key, key)
        if field_name not in _PROCEDURE_KEYS:
            raise SchemaError(f"{where}: unknown key {key!r}")
        if field_name in out:
            raise SchemaError(f"{where}: key {key!r} duplicates {field_name!r}")
        out[field_name] = value
    if "cutpoints" in out and out["cutpoints"] is not None:
        cp = [np.inf if c in ("inf", "+inf") else float(c) for c in out["cutpoints"]]
        out["cutpoints"] = tuple(cp)
    return out


def read_config(path) -> StudyConfig:
    """Parse a study config (TOML key-value text; see README for the schema)."""
    with open(path, "rb") as fh:
        try:
            raw = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise SchemaError(f"{path}: {exc}") from None
    for key in _REQUIRED_KEYS:
        if key not in raw:
            raise SchemaError(f"{path}: config is missing required key {key!r}")
    unknown = set(raw) - _CONFIG_KEYS
    if unknown:
        raise SchemaError(f"{path}: unknown config key(s) {sorted(unknown)}")
    procedures = []
    for i, entry in enumerate(raw["procedures"]):
        if "name" not in entry:
            raise SchemaError(f"{path}: procedure {i + 1} is missing required key 'name'")
        where = f"{path}: procedure {entry['name']!r}"
        normalized = _normalize_procedure_entry(entry, where)
        try:
            procedures.append(ProcedureSpec(**normalized))
        except (TypeError, ValueError) as exc:
            raise SchemaError(f"{where}: {exc}") from None
    kwargs = {
        "models": tuple(raw["models"]),
        "betas": tuple(float(b) for b in raw["betas"]),
        "taus": tuple(float(t) for t in raw["taus"]),
        "designs": tuple((int(a), int(b)) for a, b in raw["designs"]),
        "procedures": tuple(procedures),
        "replications": int(raw["replications"]),
        "draws": int(raw["draws"]),
        "alpha": float(raw["alpha"]),
        "seed": int(raw["seed"]),
    }
    for opt in ("reference_draws", "n_jobs", "n_assignments"):
        if opt in raw:
            kwargs[opt] = int(raw[opt])
    if "binning" in raw:
        kwargs["binning"] = str(raw["binning"])
    try:
        return StudyConfig(**kwargs)
    except ValueError as exc:
        raise SchemaError(f"{path}: {exc}") from None
