"""Scenario generators and size / power / accuracy experiments.

Noise has AR(1) covariance ``Sigma[j, l] = rho**|j-l|`` in three flavours:
Gaussian, multivariate t with 6 degrees of freedom, and the scale mixture
``0.8 N(0, Sigma) + 0.2 N(0, 9 Sigma)``. A mean shift ``delta`` with
``delta_j = sqrt(Delta / k)`` on the first ``k`` coordinates is added to every
row after ``tau``.

Every replicate draws from its own generator seeded by ``(seed, replicate)``,
so results do not depend on execution order or on the number of workers.
"""

from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .data import DataMatrix, Method, ScanConfig
from .errors import SpatialCPError
from .fv import FVTable
from .inference import ChangepointScan

T_DOF = 6
MIX_WEIGHT = 0.8
MIX_SCALE = 3.0


class Scenario(str, enum.Enum):
    NORMAL = "NORMAL"
    STUDENT_T6 = "STUDENT_T6"
    MIXTURE = "MIXTURE"

    @property
    def roman(self) -> str:
        return {"NORMAL": "I", "STUDENT_T6": "II", "MIXTURE": "III"}[self.value]

    @classmethod
    def parse(cls, text: str) -> Scenario:
        key = text.strip().upper()
        aliases = {"I": cls.NORMAL, "1": cls.NORMAL, "II": cls.STUDENT_T6, "2": cls.STUDENT_T6,
                   "T": cls.STUDENT_T6, "T6": cls.STUDENT_T6, "III": cls.MIXTURE, "3": cls.MIXTURE}
        return aliases[key] if key in aliases else cls(key)


@dataclass(frozen=True)
class ScenarioSpec:
    scenario: Scenario = Scenario.NORMAL
    n: int = 200
    p: int = 100
    rho: float = 0.5
    tau: int | None = None
    Delta: float = 0.0
    k_sparsity: int | None = None
    seed: int = 0
    t_scale_is_covariance: bool = True

    def __post_init__(self) -> None:
        if self.k_sparsity is not None and not 1 <= self.k_sparsity <= self.p:
            raise ValueError("k_sparsity must lie in 1..p")
        if self.Delta < 0:
            raise ValueError("Delta must be nonnegative")
        if self.tau is not None and not 0 <= self.tau <= self.n:
            raise ValueError("tau must lie in 0..n")

    @property
    def delta(self) -> np.ndarray:
        k = self.k_sparsity or self.p
        d = np.zeros(self.p)
        d[:k] = math.sqrt(self.Delta / k)
        return d


def ar1_noise(rng: np.random.Generator, n: int, p: int, rho: float) -> np.ndarray:
    """Rows with covariance ``rho**|j-l|`` via ``w_j = rho w_{j-1} + sqrt(1-rho^2) z_j``."""
    z = rng.standard_normal((n, p))
    c = math.sqrt(1.0 - rho * rho)
    for j in range(1, p):
        z[:, j] = rho * z[:, j - 1] + c * z[:, j]
    return z


def noise(spec: ScenarioSpec, rng: np.random.Generator) -> np.ndarray:
    eps = ar1_noise(rng, spec.n, spec.p, spec.rho)
    if spec.scenario is Scenario.STUDENT_T6:
        scale = (T_DOF - 2) / T_DOF if spec.t_scale_is_covariance else 1.0
        w = rng.chisquare(T_DOF, size=spec.n)
        eps *= np.sqrt(scale * T_DOF / w)[:, None]
    elif spec.scenario is Scenario.MIXTURE:
        wide = rng.random(spec.n) >= MIX_WEIGHT
        eps[wide] *= MIX_SCALE
    return eps


def generate(spec: ScenarioSpec, rng: np.random.Generator | None = None) -> DataMatrix:
    """One sample from ``spec``; the location before the change is zero."""
    rng = rng if rng is not None else np.random.default_rng(spec.seed)
    x = noise(spec, rng)
    if spec.tau is not None and spec.Delta > 0:
        x[spec.tau:] += spec.delta
    return DataMatrix(x)


def replicate_rng(seed: int, rep: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, rep]))


@dataclass(frozen=True)
class ReportRow:
    method: Method
    scenario: Scenario
    n: int
    p: int
    Delta: float
    k: int | None
    tau_frac: float | None
    value: float
    reps: int
    seed: int
    failures: int = 0
    kind: str = "rate"

    @property
    def se(self) -> float:
        if self.kind == "rate":
            return binomial_se(self.value, self.reps)
        return float("nan")


def binomial_se(rate: float, reps: int) -> float:
    return math.sqrt(rate * (1.0 - rate) / reps) if reps > 0 else float("nan")


CSV_FIELDS = ["method", "scenario", "n", "p", "Delta", "k", "tau_frac", "rate", "se", "reps", "seed",
              "failures", "kind"]


@dataclass
class ExperimentReport:
    """Rows of per-method rejection rates or mean scaled localization errors."""

    rows: list[ReportRow] = field(default_factory=list)

    def get(self, method: Method | str, **where) -> ReportRow:
        method = Method(method)
        hits = [r for r in self.rows if r.method is method
                and all(getattr(r, key) == val for key, val in where.items())]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} rows match {method.value} {where}")
        return hits[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_FIELDS)
        for r in self.rows:
            w.writerow([r.method.value, r.scenario.roman, r.n, r.p, repr(r.Delta),
                        "" if r.k is None else r.k,
                        "" if r.tau_frac is None else repr(r.tau_frac),
                        repr(r.value), repr(r.se), r.reps, r.seed, r.failures, r.kind])
        return buf.getvalue()

    def to_text(self) -> str:
        """Methods across, one line per setting, values in percent for rates."""
        methods = list(dict.fromkeys(r.method for r in self.rows))
        settings = list(dict.fromkeys((r.scenario, r.n, r.p, r.Delta, r.k, r.tau_frac) for r in self.rows))
        head = f"{'setting':<34}" + "".join(f"{m.label:>11}" for m in methods)
        lines = [head, "-" * len(head)]
        for s in settings:
            scen, n, p, D, k, tf = s
            label = f"{scen.roman:<4}({n},{p})"
            if D:
                label += f" D={D:g} k={k} t={tf:g}"
            cells = []
            for m in methods:
                hit = [r for r in self.rows if r.method is m and
                       (r.scenario, r.n, r.p, r.Delta, r.k, r.tau_frac) == s]
                if not hit:
                    cells.append(f"{'':>11}")
                elif hit[0].kind == "rate":
                    cells.append(f"{100 * hit[0].value:>11.1f}")
                else:
                    cells.append(f"{hit[0].value:>11.4f}")
            lines.append(f"{label:<34}" + "".join(cells))
        return "\n".join(lines)


def _one_replicate(spec: ScenarioSpec, rep: int, methods: Sequence[Method], cfg: ScanConfig,
                   fv: FVTable | None) -> dict[Method, tuple[float, int | None]]:
    data = generate(spec, replicate_rng(spec.seed, rep))
    scan = ChangepointScan(data, cfg, fv=fv)
    out = {}
    for m in methods:
        try:
            o = scan.outcome(m)
            out[m] = (o.p_value, o.k_argmax)
        except SpatialCPError:
            out[m] = (float("nan"), None)
    return out


def _run(spec: ScenarioSpec, methods: Sequence[Method], reps: int, cfg: ScanConfig,
         fv: FVTable | None, n_jobs: int) -> list[dict[Method, tuple[float, int | None]]]:
    if reps < 1:
        raise ValueError("reps must be at least 1")
    if n_jobs == 1:
        return [_one_replicate(spec, r, methods, cfg, fv) for r in range(reps)]
    from joblib import Parallel, delayed

    return Parallel(n_jobs=n_jobs)(delayed(_one_replicate)(spec, r, methods, cfg, fv) for r in range(reps))


def _rate_row(results, method, spec, alpha, kind="rate") -> ReportRow:
    pv = np.array([r[method][0] for r in results])
    ok = ~np.isnan(pv)
    rate = float(np.mean(pv[ok] < alpha)) if ok.any() else float("nan")
    tf = None if spec.tau is None else spec.tau / spec.n
    return ReportRow(method, spec.scenario, spec.n, spec.p, spec.Delta, spec.k_sparsity, tf, rate,
                     int(ok.sum()), spec.seed, int((~ok).sum()), kind)


def _methods(methods: Iterable[Method | str] | None) -> list[Method]:
    return [Method(m) for m in methods] if methods is not None else list(Method)


def run_size_experiment(spec: ScenarioSpec, methods: Iterable[Method | str] | None = None, reps: int = 500,
                        alpha: float = 0.05, cfg: ScanConfig | None = None, fv: FVTable | None = None,
                        n_jobs: int = 1) -> ExperimentReport:
    """Empirical rejection rates under the no-change null."""
    cfg = cfg or ScanConfig()
    methods = _methods(methods)
    null = replace(spec, tau=None, Delta=0.0)
    results = _run(null, methods, reps, cfg, fv, n_jobs)
    return ExperimentReport([_rate_row(results, m, null, alpha) for m in methods])


def run_power_experiment(spec: ScenarioSpec, deltas: Sequence[float], sparsities: Sequence[int],
                         methods: Iterable[Method | str] | None = None, reps: int = 200,
                         alpha: float = 0.05, cfg: ScanConfig | None = None, fv: FVTable | None = None,
                         n_jobs: int = 1) -> ExperimentReport:
    """Rejection rates over a grid of signal strengths and sparsity levels at ``spec.tau``."""
    cfg = cfg or ScanConfig()
    methods = _methods(methods)
    report = ExperimentReport()
    for k in sparsities:
        for D in deltas:
            s = replace(spec, Delta=float(D), k_sparsity=int(k))
            results = _run(s, methods, reps, cfg, fv, n_jobs)
            report.rows.extend(_rate_row(results, m, s, alpha) for m in methods)
    return report


def run_accuracy_experiment(spec: ScenarioSpec, methods: Iterable[Method | str] | None = None,
                            reps: int = 200, cfg: ScanConfig | None = None, fv: FVTable | None = None,
                            n_jobs: int = 1) -> ExperimentReport:
    """Mean of ``|tau_hat - tau| / n`` per method; requires ``spec.tau``."""
    if spec.tau is None:
        raise ValueError("accuracy experiments need a changepoint")
    cfg = cfg or ScanConfig()
    methods = _methods(methods)
    results = _run(spec, methods, reps, cfg, fv, n_jobs)
    rows = []
    for m in methods:
        errs = [abs(r[m][1] - spec.tau) / spec.n for r in results if r[m][1] is not None]
        value = float(np.mean(errs)) if errs else float("nan")
        rows.append(ReportRow(m, spec.scenario, spec.n, spec.p, spec.Delta, spec.k_sparsity,
                              spec.tau / spec.n, value, len(errs), spec.seed, reps - len(errs), "error"))
    return ExperimentReport(rows)
