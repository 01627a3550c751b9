"""Experiment orchestration: geometry -> assembly -> eigensolve -> bounds -> report."""
from __future__ import annotations

import csv
import io
import json
import time
import warnings
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import scipy.optimize as so

from . import bounds as B
from .assembly import DomainSpec, build_forms, eigenfunction_functionals
from .catalogue import build
from .config import ExperimentConfig, TRANSLATOR_THEOREMS
from .eigensolve import smallest_eigenpairs
from .errors import ConfigError, NotATranslator, RankDeficiencyWarning, VariantMismatch
from .geometry import DriftSpec, identity_suite, interior_samples, random_polynomial_probe, translator_residual

SCHEMA_VERSION = "1.0"
GS_ORTH_TOL = 1e-8
FUNCTIONAL_RTOL = 1e-6
IDENTITY_SEED = 20240917


def make_domain(cfg: ExperimentConfig, imm) -> DomainSpec:
    whole = DomainSpec.whole(imm)
    if cfg.domain.box is None:
        return whole
    dom = DomainSpec(tuple(tuple(map(float, ab)) for ab in cfg.domain.box), whole.bc)
    try:
        dom.validate(imm)
    except ValueError as exc:
        raise ConfigError(f"domain: {exc}") from None
    return dom


@dataclass
class RunReport:
    config: dict
    spectrum: dict
    constants: dict
    bounds: list
    rejections: list
    identities: dict
    translator_residual: float | None
    general_formula: dict | None
    functionals: dict
    timings: dict | None
    passed: bool
    failures: list = field(default_factory=list)
    schema_version: str = SCHEMA_VERSION

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=_jsonable) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunReport":
        return cls(**json.loads(text))

    def bounds_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["theorem", "n", "lhs", "rhs", "margin", "passed"])
        for r in self.bounds:
            w.writerow([r["theorem"], r["n"], repr(r["lhs"]), repr(r["rhs"]), repr(r["margin"]), r["passed"]])
        return buf.getvalue()

    def spectrum_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "eigenvalue", "residual"])
        for i, (lam, res) in enumerate(zip(self.spectrum["eigenvalues"], self.spectrum["residuals"]), 1):
            w.writerow([i, repr(lam), repr(res)])
        return buf.getvalue()

    def table(self) -> str:
        lines = [f"{'check':<12}{'LHS':>16}{'RHS':>16}{'margin':>16}  result"]
        for r in self.bounds:
            lines.append(f"{r['theorem']:<12}{r['lhs']:>16.8g}{r['rhs']:>16.8g}{r['margin']:>16.8g}  "
                         f"{'pass' if r['passed'] else 'FAIL'}")
        for r in self.rejections:
            lines.append(f"{r['theorem']:<12}{'rejected: ' + r['reason']}")
        if self.general_formula is not None:
            g = self.general_formula
            lines.append(f"{'general':<12}{'':>16}{'':>16}{g['worst_margin']:>16.8g}  "
                         f"{'pass' if g['passed'] else 'FAIL'}")
        lines.append(f"identities worst violation {max(self.identities.values(), default=0.0):.3g}")
        for f in self.failures:
            lines.append(f"failure: {f}")
        lines.append("PASS" if self.passed else "FAIL")
        return "\n".join(lines)


def _jsonable(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer, np.bool_)):
        return o.item()
    raise TypeError(f"not serialisable: {type(o)}")


def run(cfg: ExperimentConfig) -> RunReport:
    clock = {}
    t0 = time.perf_counter()

    def lap(key):
        nonlocal t0
        t = time.perf_counter()
        clock[key] = t - t0
        t0 = t

    imm = build(cfg.geometry.name, cfg.geometry.params)
    drift = DriftSpec(np.asarray(cfg.drift.nu, dtype=float), unit_flag=cfg.drift.unit)
    dom = make_domain(cfg, imm)
    n = imm.intrinsic_dim
    failures = []

    rng = np.random.default_rng(IDENTITY_SEED)
    samples = interior_samples(dom.box, cfg.checks.identity_samples, rng)
    probes = [random_polynomial_probe(rng, n) for _ in range(3)]
    ident = identity_suite(imm, drift, samples, probes).as_dict()
    ident.pop("sample_count")
    if max(ident.values()) > cfg.checks.identity_tol:
        failures.append("identity suite")
    lap("geometry")

    forms = build_forms(imm, drift, cfg.mesh.elements, dom, cfg.mesh.quad_order)
    lap("assembly")
    spec = smallest_eigenpairs(forms, cfg.solve.k, cfg.solve.tol)
    lap("eigensolve")

    res = [cfg.checks.sample_refinement * e for e in cfg.mesh.elements]
    grid = B.sample_grid(dom, res, forms.mesh)
    consts = B.constants(imm, drift, dom, grid, resolution=res)
    tres = translator_residual(imm, drift, grid) if drift.unit_flag else None

    reports, rejections = [], []
    for thm in cfg.checks.theorems:
        try:
            if thm in TRANSLATOR_THEOREMS:
                fn = {"thm5.1": B.thm51_check, "cor5.1": B.cor51_check,
                      "cor5.2": B.cor52_check, "cor5.3": B.cor53_check}[thm]
                reports.append(fn(spec, n, tres, cfg.checks.translator_gate).as_dict())
            elif thm.startswith("cor6"):
                variant = {v: k for k, v in B.VARIANTS.items()}[thm]
                reports.append(B.cor6x_check(spec, consts, n, variant).as_dict())
            else:
                fn = {"thm1.1": B.thm11_check, "cor1.1": B.cor11_check,
                      "cor1.2": B.cor12_check, "cor1.3": B.cor13_check}[thm]
                reports.append(fn(spec, consts).as_dict())
        except (NotATranslator, VariantMismatch) as exc:
            rejections.append({"theorem": thm, "reason": str(exc), "error": type(exc).__name__})
    for r in reports:
        if not r["passed"]:
            failures.append(f"{r['theorem']} margin {r['margin']:.3g}")
    for r in rejections:
        failures.append(f"{r['theorem']} rejected ({r['error']})")

    gf = None
    lam1 = float(spec.eigenvalues[0])
    dirichlet, phi_hat = eigenfunction_functionals(forms, spec.eigenvectors[:, 0])
    root = np.sqrt(lam1)
    functionals = {
        "dirichlet": dirichlet,
        "dirichlet_bound": root,
        "phi_hat": phi_hat,
        "phi_hat_bound": -n * root,
        "passed": bool(dirichlet <= root * (1 + FUNCTIONAL_RTOL) and phi_hat >= -n * root * (1 + FUNCTIONAL_RTOL)),
    }
    if not functionals["passed"]:
        failures.append("proof-step functionals")
    if cfg.checks.general_formula:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RankDeficiencyWarning)
            trial = B.gram_schmidt_trial_functions(forms, spec)
        g = B.general_formula_check(forms, spec, trial, consts=consts)
        gf = g.as_dict()
        gf.update(rank=trial.rank, grad_sum_residual=trial.grad_sum_residual,
                  lnu_sum_residual=trial.lnu_sum_residual,
                  warnings=[str(w.message) for w in caught])
        if not g.passed:
            failures.append("general formula")
        if trial.orthogonality_residual > GS_ORTH_TOL:
            failures.append("Gram-Schmidt orthogonality")
    lap("bounds")

    return RunReport(
        config=cfg.as_dict(),
        spectrum={
            "eigenvalues": spec.eigenvalues.tolist(),
            "residuals": spec.residuals.tolist(),
            "method": spec.meta["method"],
            "dofs": spec.meta["dofs"],
            "tol": spec.tol,
        },
        constants=consts.as_dict(),
        bounds=reports,
        rejections=rejections,
        identities=ident,
        translator_residual=tres,
        general_formula=gf,
        functionals=functionals,
        timings=None if cfg.output.deterministic else clock,
        passed=not failures,
        failures=failures,
    )


def write_report(report: RunReport, out_dir, stem: str) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [out / f"{stem}.json", out / f"{stem}_bounds.csv", out / f"{stem}_spectrum.csv"]
    for p, text in zip(paths, (report.to_json(), report.bounds_csv(), report.spectrum_csv())):
        p.write_text(text)
    return paths


# ---------------------------------------------------------------------------
# convergence studies

CONVERGED = "converged"


def observed_order(values, sizes, atol_rel: float = 1e-13):
    """Order ``p`` with ``(a - b)/(b - c) = (h_a^p - h_b^p)/(h_b^p - h_c^p)`` on the last three levels.

    Returns the ``"converged"`` sentinel when the differences sit at roundoff
    level, and ``None`` when the sequence is not monotone (no order defined).
    """
    a, b, c = map(float, values[-3:])
    ha, hb, hc = map(float, sizes[-3:])
    scale = max(abs(a), abs(b), abs(c), 1e-300)
    d1, d2 = a - b, b - c
    if abs(d1) <= atol_rel * scale and abs(d2) <= atol_rel * scale:
        return CONVERGED
    if d2 == 0 or d1 / d2 <= 0:
        return None
    target = d1 / d2
    f = lambda p: (ha**p - hb**p) / (hb**p - hc**p) - target
    try:
        return float(so.brentq(f, 0.05, 20.0))
    except ValueError:
        return None


@dataclass
class ConvergenceTable:
    levels: list
    eigenvalues: list  # per level
    orders: list  # per eigen-index, float or sentinel or None
    limits: list  # Richardson estimates per eigen-index
    monotone: bool
    schema_version: str = SCHEMA_VERSION

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=_jsonable) + "\n"

    def csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        k = len(self.eigenvalues[0])
        w.writerow(["elements"] + [f"lambda_{i + 1}" for i in range(k)])
        for lv, lam in zip(self.levels, self.eigenvalues):
            w.writerow([lv] + [repr(x) for x in lam])
        w.writerow(["limit"] + [repr(x) for x in self.limits])
        w.writerow(["order"] + [o if isinstance(o, str) else repr(o) for o in self.orders])
        return buf.getvalue()

    def table(self) -> str:
        k = len(self.eigenvalues[0])
        head = f"{'elements':>10}" + "".join(f"{'Lambda_' + str(i + 1):>20}" for i in range(k))
        rows = [head]
        for lv, lam in zip(self.levels, self.eigenvalues):
            rows.append(f"{lv:>10}" + "".join(f"{x:>20.12g}" for x in lam))
        rows.append(f"{'limit':>10}" + "".join(f"{x:>20.12g}" for x in self.limits))
        rows.append(f"{'order':>10}" + "".join(
            f"{o:>20}" if not isinstance(o, float) else f"{o:>20.3f}" for o in self.orders))
        rows.append("monotone" if self.monotone else "NOT monotone")
        return "\n".join(rows)


def _check_levels(levels):
    levels = [int(x) for x in levels]
    if len(levels) < 3:
        raise ConfigError("a convergence study needs at least 3 levels")
    for a, b in zip(levels, levels[1:]):
        if not (b > a and b % a == 0):
            raise ConfigError(f"levels must be nested (each a multiple of the previous): {levels}")
    return levels


def converge(cfg: ExperimentConfig, levels, mono_rtol: float = 1e-9) -> ConvergenceTable:
    """Solve on nested meshes; level ``l`` scales every coordinate so the first has ``l`` elements."""
    levels = _check_levels(levels)
    imm = build(cfg.geometry.name, cfg.geometry.params)
    drift = DriftSpec(np.asarray(cfg.drift.nu, dtype=float), unit_flag=cfg.drift.unit)
    dom = make_domain(cfg, imm)
    base = cfg.mesh.elements
    lams = []
    for lv in levels:
        el = [max(1, round(lv * e / base[0])) for e in base]
        forms = build_forms(imm, drift, el, dom, cfg.mesh.quad_order)
        lams.append(smallest_eigenpairs(forms, cfg.solve.k, cfg.solve.tol).eigenvalues)
    lams = np.array(lams)
    sizes = 1.0 / np.array(levels, dtype=float)
    orders, limits = [], []
    for i in range(lams.shape[1]):
        p = observed_order(lams[:, i], sizes)
        orders.append(p)
        if isinstance(p, float):
            r = (sizes[-2] / sizes[-1]) ** p
            limits.append(float(lams[-1, i] + (lams[-1, i] - lams[-2, i]) / (r - 1)))
        else:
            limits.append(float(lams[-1, i]))
    monotone = bool(np.all(lams[1:] <= lams[:-1] * (1 + mono_rtol)))
    return ConvergenceTable(levels, lams.tolist(), orders, limits, monotone)


def convergence_plot(table: ConvergenceTable, path) -> Path:
    """Log-log SVG of ``|Lambda_i(h) - limit_i|`` against ``h``."""
    import matplotlib

    matplotlib.use("svg")
    import matplotlib.pyplot as plt

    h = 1.0 / np.array(table.levels, dtype=float)
    lam = np.array(table.eigenvalues)
    fig, ax = plt.subplots(figsize=(5, 4))
    for i, lim in enumerate(table.limits):
        err = np.abs(lam[:, i] - lim)
        mask = err > 0
        if mask.any():
            ax.loglog(h[mask], err[mask], "o-", label=f"Lambda_{i + 1}")
    ax.set_xlabel("h (relative mesh size)")
    ax.set_ylabel("|Lambda - limit|")
    ax.legend()
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
