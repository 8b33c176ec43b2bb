"""Experiment configs, report rows and CSV/JSON emission."""

from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import oracle
from .channel import mc_risk
from .model import (
    FAMILIES,
    GaussianLocation,
    ModelSpec,
    ProductBernoulli,
    SparseBernoulli,
    SystemConfig,
    theta_sum_bound,
)
from .privacy import (
    UnboundedInformation,
    bernoulli_mi_bound,
    bernoulli_mi_exact,
    calibrate_sigma_pri,
    gaussian_mi_bound,
    gaussian_mi_exact,
    robust_cmi_bound,
)
from .risk import minimax_branch, minimax_risk, robust_risk, scheme_worst_case
from .schemes import optimal_scheme, robustify

CSV_VERSION = "v1"
COLUMNS = [
    "model", "n", "d", "m", "P", "sigma0_sq", "epsilon", "sigma_pri_sq", "branch",
    "risk_closed", "risk_mc", "risk_mc_stderr", "mi_bound", "mi_exact", "cmi_bound",
    "trials", "seed",
]
DEFAULT_EPSILONS = [0.01, 0.05, 0.1, 0.5, 1.0]
DEFAULT_SWEEP_N = [64, 128, 256, 512, 1024]
DEFAULT_TRIALS = 100_000

DIGITAL_FOOTER = [
    "digital reference (not simulated): gaussian d^2 sigma^2/(n eps); bernoulli d^2/(n eps); "
    "sparse m^2 log d/(n eps) with (n eps >= d log d)",
    "over-the-air reference: gaussian d^2 sigma^2/(n^2 eps); bernoulli d^2/(n^2 eps^2) as tabulated, "
    "d^2/(n^2 eps) from the robust-risk formula; sparse m d/(n^2 eps)",
]


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class VerdictFailure(RuntimeError):
    """A run finished but one of its consistency checks failed."""


@dataclass
class ExperimentConfig:
    model: ModelSpec
    system: SystemConfig
    scheme: str = "optimal"  # "optimal" or "robust"
    epsilons: list[float] = field(default_factory=list)
    sweep_n: list[int] = field(default_factory=list)
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    out: str | None = None
    fmt: str = "csv"
    workers: int = 1

    def __post_init__(self):
        if self.scheme not in ("optimal", "robust"):
            raise ConfigError("scheme.family", f"expected 'optimal' or 'robust', got {self.scheme!r}")
        if self.scheme == "robust" and not self.epsilons:
            self.epsilons = list(DEFAULT_EPSILONS)
        for eps in self.epsilons:
            if not (isinstance(eps, (int, float)) and eps > 0 and math.isfinite(eps)):
                raise ConfigError("run.epsilons", f"epsilon must be positive, got {eps!r}")
        for n in self.sweep_n:
            if not (isinstance(n, int) and n >= 1):
                raise ConfigError("run.sweep_n", f"user counts must be integers >= 1, got {n!r}")
        if self.trials < 0:
            raise ConfigError("run.trials", "must be nonnegative")
        if self.fmt not in ("csv", "json"):
            raise ConfigError("output.format", f"expected csv or json, got {self.fmt!r}")
        if isinstance(self.model, SparseBernoulli) and self.model.m > self.system.d:
            raise ConfigError("m", f"m={self.model.m} exceeds d={self.system.d}")


def _model_from(raw: dict) -> ModelSpec:
    family = raw.get("family")
    if family not in FAMILIES:
        raise ConfigError("model.family", f"expected one of {FAMILIES}, got {family!r}")
    try:
        if family == "gaussian":
            return GaussianLocation(float(raw.get("sigma_sq", 1.0)), float(raw.get("B", 1.0)))
        if family == "sparse":
            if "m" not in raw:
                raise ConfigError("m", "sparse model needs m")
            return SparseBernoulli(raw["m"])
    except ConfigError:
        raise
    except (TypeError, ValueError) as exc:
        name = "m" if family == "sparse" else "model"
        raise ConfigError(name, str(exc)) from exc
    return ProductBernoulli()


def config_from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    model = _model_from(raw.get("model") or {})
    sysraw = raw.get("system") or {}
    for key in ("n", "d"):
        if key not in sysraw:
            raise ConfigError(f"system.{key}", "missing")
    try:
        system = SystemConfig(
            n=sysraw["n"], d=sysraw["d"], P=float(sysraw.get("P", 1.0)),
            sigma0_sq=float(sysraw.get("sigma0_sq", 1.0)), s=sysraw.get("s"),
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError("system", str(exc)) from exc
    scheme = raw.get("scheme") or {}
    run = raw.get("run") or {}
    output = raw.get("output") or {}
    epsilons = list(run.get("epsilons") or [])
    if "epsilon" in scheme:
        epsilons = [scheme["epsilon"]] + [e for e in epsilons if e != scheme["epsilon"]]
    seed = run.get("seed", 0)
    system = replace(system, master_seed=int(seed))
    return ExperimentConfig(
        model=model,
        system=system,
        scheme=scheme.get("family", "robust" if epsilons else "optimal"),
        epsilons=epsilons,
        sweep_n=list(run.get("sweep_n") or []),
        trials=int(run.get("trials", DEFAULT_TRIALS)),
        seed=int(seed),
        out=output.get("path"),
        fmt=output.get("format", "csv"),
        workers=int(run.get("workers", 1)),
    )


def load_config(path) -> ExperimentConfig:
    """Read a JSON experiment config, fill defaults and validate.

    Raises :class:`ConfigError` (with line/column for syntax errors) or OSError.
    """
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"line {exc.lineno} column {exc.colno}", exc.msg) from exc
    return config_from_dict(raw)


# -- rows ---------------------------------------------------------------------------

def model_label(model: ModelSpec) -> str:
    if isinstance(model, GaussianLocation):
        return f"gaussian:sigma_sq={model.sigma_sq!r}:B={model.B!r}"
    return model.family


def parse_model_label(label: str, m=None) -> ModelSpec:
    if label.startswith("gaussian"):
        values = dict(re.findall(r"(\w+)=([^:]+)", label))
        return GaussianLocation(float(values["sigma_sq"]), float(values["B"]))
    if label == "sparse":
        return SparseBernoulli(int(m))
    return ProductBernoulli()


def _base_row(cfg: ExperimentConfig, system: SystemConfig, epsilon=None) -> dict:
    row = dict.fromkeys(COLUMNS)
    row.update(
        model=model_label(cfg.model), n=system.n, d=system.d,
        m=cfg.model.m if isinstance(cfg.model, SparseBernoulli) else None,
        P=system.P, sigma0_sq=system.sigma0_sq, epsilon=epsilon,
        sigma_pri_sq=0.0 if epsilon is None else calibrate_sigma_pri(system, epsilon),
        trials=cfg.trials, seed=cfg.seed,
    )
    return row


def _systems(cfg: ExperimentConfig) -> list[SystemConfig]:
    ns = cfg.sweep_n or [cfg.system.n]
    return [replace(cfg.system, n=n) for n in ns]


def _epsilons(cfg: ExperimentConfig) -> list:
    return list(cfg.epsilons) if cfg.scheme == "robust" else [None]


def run_risk(cfg: ExperimentConfig) -> list[dict]:
    """Closed-form risk and a Monte Carlo check at the worst-case parameter, per (n, epsilon)."""
    rows = []
    for system in _systems(cfg):
        for eps in _epsilons(cfg):
            row = _base_row(cfg, system, eps)
            if eps is None:
                scheme = optimal_scheme(cfg.model, system)
                row["risk_closed"] = minimax_risk(cfg.model, system)
                row["branch"] = minimax_branch(cfg.model, system)
            else:
                scheme = robustify(cfg.model, system, eps)
                row["risk_closed"] = robust_risk(cfg.model, system, eps)
                row["branch"] = minimax_branch(cfg.model, system.effective(row["sigma_pri_sq"]))
            theta, _ = scheme_worst_case(scheme, cfg.model)
            row["worst_theta"] = [float(t) for t in theta]
            if cfg.trials >= 2:
                est = mc_risk(cfg.model, theta, scheme, cfg.trials, cfg.seed, cfg.workers)
                row["risk_mc"], row["risk_mc_stderr"] = est.mean, est.stderr
            rows.append(row)
    return rows


def risk_failures(rows: list[dict], k: float = 3.0) -> list[dict]:
    return [r for r in rows if r["risk_mc"] is not None
            and abs(r["risk_mc"] - r["risk_closed"]) > k * r["risk_mc_stderr"]]


def _bernoulli_mi_sup(n: int, d: int, t_max: float) -> float:
    # sup over constant-coordinate parameters theta_j = c on a 0.01 grid
    grid = [c / 100 for c in range(101) if d * c / 100 <= t_max + 1e-12]
    return d * max(bernoulli_mi_exact(n, c) for c in grid)


def run_privacy(cfg: ExperimentConfig) -> list[dict]:
    """Leakage bounds and exact values; raises VerdictFailure if an ordering breaks."""
    rows = []
    for system in _systems(cfg):
        for eps in _epsilons(cfg):
            row = _base_row(cfg, system, eps)
            if isinstance(cfg.model, GaussianLocation):
                try:
                    row["mi_bound"] = gaussian_mi_bound(system, cfg.model)
                    row["mi_exact"] = gaussian_mi_exact(system, cfg.model)
                except UnboundedInformation:
                    row["mi_bound"] = row["mi_exact"] = math.inf
            else:
                row["mi_bound"] = bernoulli_mi_bound(system)
                row["mi_exact"] = _bernoulli_mi_sup(system.n, system.d,
                                                    theta_sum_bound(cfg.model, system.d))
            try:
                row["cmi_bound"] = robust_cmi_bound(system, row["sigma_pri_sq"])
            except UnboundedInformation:
                row["cmi_bound"] = math.inf
            rows.append(row)
    for row in rows:
        if row["mi_exact"] > row["mi_bound"] * (1 + 1e-12):
            raise VerdictFailure(f"exact MI above its bound at n={row['n']}")
        if row["epsilon"] is not None and row["cmi_bound"] > row["epsilon"] * (1 + 1e-12):
            raise VerdictFailure(f"CMI bound above epsilon at n={row['n']}")
    return rows


def run_calibrate(cfg: ExperimentConfig) -> list[dict]:
    rows = []
    for system in _systems(cfg):
        for eps in cfg.epsilons or DEFAULT_EPSILONS:
            row = _base_row(cfg, system, eps)
            row["cmi_bound"] = robust_cmi_bound(system, row["sigma_pri_sq"]) \
                if row["sigma_pri_sq"] > 0 or system.sigma0_sq > 0 else math.inf
            row["branch"] = minimax_branch(cfg.model, system.effective(row["sigma_pri_sq"]))
            rows.append(row)
    return rows


def run_verify(alpha_scale: float = 1.0, seed: int = 0) -> list[dict]:
    rows = []
    for v in oracle.run_suite(alpha_scale=alpha_scale, seed=seed):
        rows.append({"check": v.name, "passed": v.passed, "gap": v.gap,
                     "tolerance": v.tolerance, "note": v.note})
    return rows


@dataclass
class ScalingReport:
    rows: list[dict]
    slope: float
    excess_slope: float
    reference_exponent: float
    footer: list[str]


def loglog_slope(ns, values) -> float:
    if len(ns) < 4:
        raise ValueError("slope fit needs at least 4 points")
    return float(np.polyfit(np.log(ns), np.log(values), 1)[0])


def _privacy_free_risk(model: ModelSpec, system: SystemConfig) -> float:
    # risk floor with a noiseless channel and no local noise
    return minimax_risk(model, replace(system, sigma0_sq=0.0))


def run_scaling(cfg: ExperimentConfig) -> ScalingReport:
    """Robust risk versus n at the first configured epsilon, with its log-log slope.

    ``excess_slope`` fits only the part of the risk above the noiseless
    floor, i.e. the privacy- and channel-induced term.
    """
    ns = cfg.sweep_n or DEFAULT_SWEEP_N
    if len(ns) < 4:
        raise ConfigError("run.sweep_n", "scaling needs at least 4 user counts")
    eps = (cfg.epsilons or DEFAULT_EPSILONS)[0]
    sweep_cfg = replace(cfg, sweep_n=list(ns), epsilons=[eps], scheme="robust")
    rows = run_risk(sweep_cfg) if cfg.trials >= 2 else _closed_rows(sweep_cfg)
    risks = [r["risk_closed"] for r in rows]
    excess = [r["risk_closed"] - _privacy_free_risk(cfg.model, replace(cfg.system, n=r["n"]))
              for r in rows]
    footer = [f"epsilon={eps!r}", *DIGITAL_FOOTER]
    return ScalingReport(rows, loglog_slope(ns, risks), loglog_slope(ns, excess), -2.0, footer)


def _closed_rows(cfg: ExperimentConfig) -> list[dict]:
    return run_risk(replace(cfg, trials=0))


def recompute_closed_form(row: dict) -> float:
    """Re-derive a row's risk_closed from the parameters it carries."""
    model = parse_model_label(row["model"], row["m"])
    system = SystemConfig(int(row["n"]), int(row["d"]), float(row["P"]), float(row["sigma0_sq"]))
    eps = row["epsilon"]
    if eps in (None, ""):
        return minimax_risk(model, system)
    return robust_risk(model, system, float(eps))


# -- emission -----------------------------------------------------------------------

def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def render(rows: list[dict], fmt: str, footer: list[str] | None = None,
           summary: dict | None = None, columns: list[str] | None = None) -> str:
    columns = columns or COLUMNS
    if fmt == "json":
        payload = [{c: r.get(c) for c in (columns + (["worst_theta"] if "worst_theta" in r else []))}
                   for r in rows]
        if summary is not None or footer:
            payload = {"version": CSV_VERSION, "rows": payload, **(summary or {}), "footer": footer or []}
        return json.dumps(payload, indent=2, allow_nan=True) + "\n"
    buf = io.StringIO()
    buf.write(f"# otaest {CSV_VERSION}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for r in rows:
        writer.writerow([_cell(r.get(c)) for c in columns])
    for key, value in (summary or {}).items():
        buf.write(f"# {key}={_cell(value)}\n")
    for line in footer or []:
        buf.write(f"# {line}\n")
    return buf.getvalue()


def read_csv_rows(text: str) -> list[dict]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    out = []
    for r in csv.DictReader(lines):
        out.append({k: (None if v == "" else v) for k, v in r.items()})
    return out


def scaling_summary(report: ScalingReport) -> dict:
    return {"slope": report.slope, "excess_slope": report.excess_slope,
            "reference_exponent": report.reference_exponent}

