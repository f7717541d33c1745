"""End-to-end Monte Carlo comparison of the five estimation setups.

For every (gamma, budget) cell the harness replays D independent replicates.
Each replicate draws fresh non-relevant MAFs, then materializes three samples
from one observation stream, in this fixed order: the i.i.d. sample of size
C, the planned stratified sample of size s_str(C, w, alpha) computed with the
true case rate, and a stratified sample of size C whose case rate is
estimated on the fly from its own raw draws.  Five subset selections run per
replicate (i.i.d. with unknown / known case rate, planned stratified with
known rate, budget-size stratified with estimated / known rate) and a
replicate scores 1 for a variant exactly when the selected subset equals the
true relevant set.  The per-cell average of those flags is the true model
rate (TMR) written to the report CSV.

Everything is a pure function of (config, base seed): replicate substreams
are derived as hash(seed, gamma index, budget index, replicate), so cells can
be reproduced in isolation and reruns are byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from functools import lru_cache
from pathlib import Path

from .datagen import SeededStream, derive_seed, model_with_drawn_mafs, sample_many
from .estimator import ClassTooSmallError, IidSample, select_relevant
from .exact import PenaltySpec
from .planner import CostParams, s_str
from .stratify import build_stratified, estimate_prevalence

REPORT_COLUMNS = ("variant", "gamma", "C", "w", "p_mode", "N_used", "TMR", "D", "seed")


class ConfigError(ValueError):
    """Invalid experiment configuration."""


class MethodVariant(Enum):
    IMDR_UNKNOWN_P = "iMDR-unknown-p"
    IMDR_KNOWN_P = "iMDR-known-p"
    SMDR_PLANNED_N_KNOWN_P = "sMDR-planned-N-known-p"
    SMDR_SIZEC_ESTIMATED_P = "sMDR-sizeC-estimated-p"
    SMDR_SIZEC_KNOWN_P = "sMDR-sizeC-known-p"


_P_MODE = {
    MethodVariant.IMDR_UNKNOWN_P: "unknown",
    MethodVariant.IMDR_KNOWN_P: "known",
    MethodVariant.SMDR_PLANNED_N_KNOWN_P: "known",
    MethodVariant.SMDR_SIZEC_ESTIMATED_P: "estimated",
    MethodVariant.SMDR_SIZEC_KNOWN_P: "known",
}


@dataclass(frozen=True)
class ExperimentConfig:
    """Levels and fixed parameters of one comparison experiment.

    Field names double as the JSON schema of config files.  ``w_levels``
    must contain 0; its largest entry drives the planned-size variant.
    """

    n: int = 100
    K: int = 5
    r: int = 3
    relevant: tuple[int, ...] = (2, 3, 5)
    a: float = 0.5
    gamma_levels: tuple[float, ...] = (0.05, 0.1, 0.2)
    C_levels: tuple[int, ...] = (100, 200, 300, 400, 500)
    w_levels: tuple[float, ...] = (0.0, 0.1)
    alpha: float = 0.05
    D: int = 100
    base_seed: int = 0
    psi_mode: str = "natural"
    psi_minus: float | None = None
    psi_plus: float | None = None
    max_draws: int = 10**9

    def __post_init__(self):
        object.__setattr__(self, "relevant", tuple(int(i) for i in self.relevant))
        object.__setattr__(self, "gamma_levels", tuple(float(g) for g in self.gamma_levels))
        object.__setattr__(self, "C_levels", tuple(int(c) for c in self.C_levels))
        object.__setattr__(self, "w_levels", tuple(float(w) for w in self.w_levels))
        if not 1 <= self.r < self.n:
            raise ConfigError(f"need 1 <= r < n, got r={self.r}, n={self.n}")
        if len(self.relevant) != self.r:
            raise ConfigError(f"relevant must have r={self.r} entries, got {self.relevant}")
        if list(self.relevant) != sorted(set(self.relevant)):
            raise ConfigError("relevant indices must be sorted and duplicate-free")
        if self.relevant[0] < 1 or self.relevant[-1] > self.n:
            raise ConfigError("relevant indices must lie in 1..n")
        if not 0.0 < self.a < 1.0:
            raise ConfigError("a must lie in (0, 1)")
        if not (self.gamma_levels and self.C_levels and self.w_levels):
            raise ConfigError("gamma_levels, C_levels and w_levels must be nonempty")
        for g in self.gamma_levels:
            if not 0.0 < g <= 1.0:
                raise ConfigError(f"gamma levels must lie in (0, 1], got {g}")
        for c in self.C_levels:
            if c < 2:
                raise ConfigError(f"budget levels must be >= 2, got {c}")
        for w in self.w_levels:
            if w < 0.0:
                raise ConfigError(f"w levels must be nonnegative, got {w}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError("alpha must lie in (0, 1)")
        if self.D < 1:
            raise ConfigError("D must be a positive integer")
        if self.K < 2:
            raise ConfigError("K must be at least 2")
        if self.psi_mode not in ("natural", "explicit"):
            raise ConfigError(f"psi_mode must be natural or explicit, got {self.psi_mode!r}")
        if self.psi_mode == "explicit" and not (self.psi_minus and self.psi_plus):
            raise ConfigError("explicit psi_mode needs psi_minus and psi_plus")

    @property
    def planning_w(self) -> float:
        return max(self.w_levels)

    def penalty(self) -> PenaltySpec | None:
        if self.psi_mode == "natural":
            return None
        return PenaltySpec.explicit(self.psi_minus, self.psi_plus)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    def digest(self) -> str:
        return hashlib.sha256(
            json.dumps(self.to_dict(), sort_keys=True).encode()
        ).hexdigest()


def table1_config() -> ExperimentConfig:
    """Full-scale preset: a long batch job (161700 subsets per selection)."""
    return ExperimentConfig()


def desk_config() -> ExperimentConfig:
    """Small preset that reproduces the qualitative comparison in minutes."""
    return ExperimentConfig(
        n=20,
        K=5,
        r=2,
        relevant=(2, 5),
        gamma_levels=(0.1, 0.2, 0.4),
        C_levels=(100, 200, 300),
        D=50,
    )


PRESETS = {"table1": table1_config, "desk": desk_config}


def load_config(path) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return ExperimentConfig.from_dict(data)


@lru_cache(maxsize=4096)
def _planned_size(c_budget: int, w: float, a: float, alpha: float, p: float) -> int:
    return s_str(CostParams(c=c_budget, w=w, a=a, alpha=alpha), p)


@dataclass
class ReplicateResult:
    flags: dict
    n_planned: int
    p_hat: float
    failures: dict = field(default_factory=dict)


def run_replicate(
    config: ExperimentConfig, gamma: float, c_budget: int, replicate: int
) -> ReplicateResult:
    """One replicate of one (gamma, budget) cell; pure in (config, indices)."""
    try:
        gi = config.gamma_levels.index(gamma)
        ci = config.C_levels.index(c_budget)
    except ValueError:
        raise ConfigError(
            f"(gamma={gamma}, C={c_budget}) is not a level pair of this config"
        ) from None
    maf_stream = SeededStream(derive_seed(config.base_seed, gi, ci, replicate, 0))
    obs_stream = SeededStream(derive_seed(config.base_seed, gi, ci, replicate, 1))
    model = model_with_drawn_mafs(config.n, config.relevant, gamma, maf_stream)
    p = model.response_rate()
    n_planned = _planned_size(c_budget, config.planning_w, config.a, config.alpha, p)
    psi = config.penalty()

    xs, ys = sample_many(model, obs_stream, c_budget)
    iid_sample = IidSample(x=xs, y=ys)
    zeta_planned = build_stratified(
        model, obs_stream, n_planned, config.a, config.max_draws
    )
    zeta_budget = build_stratified(
        model, obs_stream, c_budget, config.a, config.max_draws
    )
    p_hat = estimate_prevalence(zeta_budget)

    runs = {
        MethodVariant.IMDR_UNKNOWN_P: (iid_sample, None),
        MethodVariant.IMDR_KNOWN_P: (iid_sample, p),
        MethodVariant.SMDR_PLANNED_N_KNOWN_P: (zeta_planned, p),
        MethodVariant.SMDR_SIZEC_ESTIMATED_P: (zeta_budget, p_hat),
        MethodVariant.SMDR_SIZEC_KNOWN_P: (zeta_budget, p),
    }
    truth = tuple(config.relevant)
    flags = {}
    failures = {}
    for variant, (sample, prevalence) in runs.items():
        try:
            selected, _ = select_relevant(sample, config.K, config.r, prevalence, psi)
            flags[variant] = selected == truth
        except ClassTooSmallError as exc:
            flags[variant] = False
            failures[variant] = str(exc)
    return ReplicateResult(
        flags=flags, n_planned=n_planned, p_hat=p_hat.p_hat, failures=failures
    )


@dataclass(frozen=True)
class TMRRow:
    variant: MethodVariant
    gamma: float
    c_budget: int
    w: float
    p_mode: str
    n_used: int
    tmr: float
    d_replicates: int
    seed: int


@dataclass
class TMRReport:
    rows: list

    def by_cell(self) -> dict:
        """(variant, gamma, C) -> TMR, for quick lookups in analyses."""
        return {(row.variant, row.gamma, row.c_budget): row.tmr for row in self.rows}


def _fmt(value: float) -> str:
    return format(value, ".6g")


def _row_to_csv(row: TMRRow) -> list[str]:
    return [
        row.variant.value,
        _fmt(row.gamma),
        str(row.c_budget),
        _fmt(row.w),
        row.p_mode,
        str(row.n_used),
        _fmt(row.tmr),
        str(row.d_replicates),
        str(row.seed),
    ]


def read_report_csv(path) -> TMRReport:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != REPORT_COLUMNS:
            raise ValueError(f"unexpected report columns: {reader.fieldnames}")
        for record in reader:
            rows.append(
                TMRRow(
                    variant=MethodVariant(record["variant"]),
                    gamma=float(record["gamma"]),
                    c_budget=int(record["C"]),
                    w=float(record["w"]),
                    p_mode=record["p_mode"],
                    n_used=int(record["N_used"]),
                    tmr=float(record["TMR"]),
                    d_replicates=int(record["D"]),
                    seed=int(record["seed"]),
                )
            )
    return TMRReport(rows=rows)


def _cell_rows(config: ExperimentConfig, gamma: float, c_budget: int) -> list[TMRRow]:
    counts = {variant: 0 for variant in MethodVariant}
    n_planned = None
    failure_notes = []
    for d in range(config.D):
        result = run_replicate(config, gamma, c_budget, d)
        n_planned = result.n_planned
        for variant, ok in result.flags.items():
            counts[variant] += int(ok)
        for variant, note in result.failures.items():
            failure_notes.append(f"replicate {d} {variant.value}: {note}")
    if failure_notes:
        print(
            f"warning: {len(failure_notes)} failed selections in cell "
            f"(gamma={gamma}, C={c_budget}); scored 0",
            file=sys.stderr,
        )
    rows = []
    for variant in MethodVariant:
        if variant is MethodVariant.SMDR_PLANNED_N_KNOWN_P:
            w, n_used = config.planning_w, n_planned
        else:
            w, n_used = 0.0, c_budget
        rows.append(
            TMRRow(
                variant=variant,
                gamma=gamma,
                c_budget=c_budget,
                w=w,
                p_mode=_P_MODE[variant],
                n_used=n_used,
                tmr=counts[variant] / config.D,
                d_replicates=config.D,
                seed=config.base_seed,
            )
        )
    return rows


def run_experiment(config: ExperimentConfig, out_path) -> TMRReport:
    """Run all cells, streaming rows to ``out_path`` with resume support.

    Rows for a (gamma, C) cell are flushed as soon as the cell completes and
    the cell is recorded in a ``<out>.resume.json`` marker, so an interrupted
    run can be resumed with the same config and seed; finished cells are not
    recomputed.  A completed run removes the marker.
    """
    out_path = Path(out_path)
    marker_path = out_path.with_name(out_path.name + ".resume.json")
    digest = config.digest()
    done: set[tuple[int, int]] = set()
    if marker_path.exists() and out_path.exists():
        try:
            marker = json.loads(marker_path.read_text())
        except json.JSONDecodeError:
            marker = {}
        if marker.get("digest") == digest:
            done = {tuple(cell) for cell in marker.get("done", [])}
    mode = "a" if done else "w"
    with open(out_path, mode, newline="\n") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        if not done:
            writer.writerow(REPORT_COLUMNS)
            fh.flush()
        for gi, gamma in enumerate(config.gamma_levels):
            for ci, c_budget in enumerate(config.C_levels):
                if (gi, ci) in done:
                    continue
                for row in _cell_rows(config, gamma, c_budget):
                    writer.writerow(_row_to_csv(row))
                fh.flush()
                done.add((gi, ci))
                marker_path.write_text(
                    json.dumps({"digest": digest, "done": sorted(done)})
                )
    marker_path.unlink(missing_ok=True)
    return read_report_csv(out_path)
