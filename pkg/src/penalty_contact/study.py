"""Convergence studies: mesh refinement with eps = c h^theta, and eps -> 0 on a fixed mesh."""
from __future__ import annotations

import io
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .cases import ProblemCase, get_case
from .elasticity import interpolate_nodal
from .errors import ContactError, InvalidArgumentError
from .mesh import contact_trace_mesh
from .norms import (
    FractionalNormOperator,
    TraceFunction,
    contact_residual_norms,
    dual_bound_check,
    h1_error,
    l2_projection,
)
from .penalty import PenaltyConfig, solve_penalty
from .vi import multiplier_as_trace_function, solve_vi

log = logging.getLogger(__name__)

CSV_COLUMNS = ("level", "h", "epsilon", "h1_error", "energy_error", "l2_residual",
               "wres_l2", "wres_neg", "neg_norm_nu", "newton_iters", "eoc_h1")
MODES = ("h_study", "eps_study", "patch")
MAX_LEVEL = 9


class StudyError(ContactError):
    """A solver failed inside a study; ``level`` identifies where."""

    def __init__(self, message, level):
        super().__init__(message)
        self.level = level


@dataclass
class StudyConfig:
    case: str
    levels: tuple = (3, 6)
    theta: float = 1.0
    eps_scale: float = 1.0
    ref_offset: int = 2
    nu: float = 0.5
    out: Optional[str] = None
    mode: str = "h_study"
    eps_steps: int = 8
    newton_tol: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        lo, hi = self.levels
        if self.mode not in MODES:
            raise InvalidArgumentError(f"mode must be one of {MODES}")
        if not 1 <= lo <= hi:
            raise InvalidArgumentError(f"bad level range {lo}..{hi}")
        if self.theta < 0:
            raise InvalidArgumentError("theta must be nonnegative")
        if self.eps_scale <= 0:
            raise InvalidArgumentError("eps scale must be positive")
        if not 0 < self.nu <= 1:
            raise InvalidArgumentError("nu must lie in (0, 1]")
        if self.mode == "h_study":
            if self.ref_offset < 2:
                raise InvalidArgumentError("reference offset must be at least 2")
            if hi + self.ref_offset > MAX_LEVEL:
                raise InvalidArgumentError(f"reference level {hi + self.ref_offset} exceeds {MAX_LEVEL}")
        if self.mode == "eps_study" and self.eps_steps < 1:
            raise InvalidArgumentError("eps_steps must be at least 1")

    @property
    def reference_level(self) -> Optional[int]:
        return self.levels[1] + self.ref_offset if self.mode == "h_study" else None


@dataclass
class ConvergenceRecord:
    level: int
    h: float
    epsilon: float
    h1_error: float
    energy_error: float
    l2_residual: float
    wres_l2: float
    wres_neg: float
    neg_norm_nu: float
    newton_iters: int
    eoc_h1: float = math.nan
    # diagnostics kept out of the CSV contract
    l2_error: float = math.nan
    max_penetration: float = math.nan
    dual_bound_ratio: float = math.nan
    half_ratio: float = math.nan
    extra: dict = field(default_factory=dict)


def compute_eoc(errors: Sequence[float], hs: Sequence[float]):
    """Per-step orders ``log(e_i/e_{i+1}) / log(h_i/h_{i+1})`` and the least-squares slope."""
    e = np.asarray(errors, dtype=float)
    h = np.asarray(hs, dtype=float)
    if e.shape != h.shape or e.ndim != 1 or len(e) < 2:
        raise InvalidArgumentError("need two equally long sequences of length >= 2")
    if np.any(e <= 0) or np.any(h <= 0):
        raise InvalidArgumentError("errors and mesh sizes must be positive")
    steps = np.log(e[:-1] / e[1:]) / np.log(h[:-1] / h[1:])
    slope = np.polyfit(np.log(h), np.log(e), 1)[0]
    return [float(v) for v in steps], float(slope)


def _row(level, h, eps, err, trace, sigma_ref, u_n, nu, iters, op=None):
    op = op or FractionalNormOperator(trace)
    un = TraceFunction(trace, u_n)
    l2r, neg = contact_residual_norms(trace, sigma_ref, un, eps, nu, op)
    r = TraceFunction(trace, sigma_ref.values + np.maximum(u_n, 0.0) / eps)
    bound = dual_bound_check(trace, r, err.h1, h, nu, op)
    return ConvergenceRecord(
        level=level, h=h, epsilon=eps, h1_error=err.h1, energy_error=err.energy,
        l2_residual=l2r, wres_l2=h ** 0.5 * l2r, wres_neg=h ** (0.5 - nu) * neg,
        neg_norm_nu=neg, newton_iters=iters, l2_error=err.l2,
        max_penetration=float(np.max(np.maximum(u_n, 0.0))),
        dual_bound_ratio=bound.ratio, half_ratio=bound.half_ratio,
    )


def _fill_eoc(records, key="h"):
    for prev, cur in zip(records, records[1:]):
        if prev.h1_error > 0 and cur.h1_error > 0:
            x0, x1 = getattr(prev, key), getattr(cur, key)
            cur.eoc_h1 = math.log(prev.h1_error / cur.h1_error) / math.log(x0 / x1)
    return records


def _penalty(m, case, eps, cfg, level):
    try:
        return solve_penalty(m, case, PenaltyConfig(eps, newton_tol=cfg.newton_tol))
    except ContactError as exc:
        raise StudyError(f"penalty solve failed at level {level}: {exc}", level) from exc


def _vi(m, case, level):
    try:
        return solve_vi(m, case)
    except ContactError as exc:
        raise StudyError(f"active-set solve failed at level {level}: {exc}", level) from exc


def run_h_study(cfg: StudyConfig, case: Optional[ProblemCase] = None) -> list:
    """Refinement study with ``eps = eps_scale * h**theta``.

    Errors are measured against the active-set solution ``ref_offset`` levels
    above the finest study level; for the patch case, against the closed-form
    penalized state on the same mesh instead.
    """
    case = case or get_case(cfg.case)
    if cfg.mode == "patch" or case.exact is not None:
        return _run_patch(cfg, case)
    ref_level = cfg.levels[1] + cfg.ref_offset
    log.info("reference: active-set solve at level %d", ref_level)
    mr = case.mesh(ref_level)
    ref = _vi(mr, case, ref_level)
    ref_density = multiplier_as_trace_function(ref, contact_trace_mesh(mr))
    records = []
    for level in range(cfg.levels[0], cfg.levels[1] + 1):
        m = case.mesh(level)
        trace = contact_trace_mesh(m)
        eps = cfg.eps_scale * m.h ** cfg.theta
        st = _penalty(m, case, eps, cfg, level)
        err = h1_error(mr, ref.U, m, st.U, case.material)
        sigma = TraceFunction(trace, -l2_projection(trace, ref_density).values)
        rec = _row(level, m.h, eps, err, trace, sigma, st.u_n, cfg.nu, st.iterations)
        records.append(rec)
        log.info("level %d  h=%.4g  eps=%.4g  H1 err=%.4e  newton=%d",
                 level, m.h, eps, rec.h1_error, rec.newton_iters)
    return _fill_eoc(records)


def _run_patch(cfg: StudyConfig, case: ProblemCase) -> list:
    records = []
    p = case.params.get("pressure", 1.0)
    for level in range(cfg.levels[0], cfg.levels[1] + 1):
        m = case.mesh(level)
        trace = contact_trace_mesh(m)
        eps = cfg.eps_scale * m.h ** cfg.theta
        st = _penalty(m, case, eps, cfg, level)
        exact = interpolate_nodal(m, case.exact_for(eps))
        err = h1_error(m, exact, m, st.U, case.material)
        sigma = TraceFunction(trace, np.full(trace.num_nodes, -p))
        records.append(_row(level, m.h, eps, err, trace, sigma, st.u_n, cfg.nu, st.iterations))
    return _fill_eoc(records)


def run_eps_study(cfg: StudyConfig, case: Optional[ProblemCase] = None) -> list:
    """Fixed mesh (finest configured level); ``eps = eps_scale * 2**-k``, k = 0..eps_steps.

    Errors compare the penalty solution with the active-set solution on the
    same mesh; ``eoc_h1`` is the order with respect to eps.
    """
    case = case or get_case(cfg.case)
    level = cfg.levels[1]
    m = case.mesh(level)
    trace = contact_trace_mesh(m)
    op = FractionalNormOperator(trace)
    vi = _vi(m, case, level)
    sigma = TraceFunction(trace, -multiplier_as_trace_function(vi, trace).values)
    records = []
    for k in range(cfg.eps_steps + 1):
        eps = cfg.eps_scale * 2.0 ** (-k)
        st = _penalty(m, case, eps, cfg, level)
        err = h1_error(m, vi.U, m, st.U, case.material)
        records.append(_row(level, m.h, eps, err, trace, sigma, st.u_n, cfg.nu, st.iterations, op))
        log.info("eps=%.4g  H1 diff=%.4e  newton=%d", eps, err.h1, st.iterations)
    return _fill_eoc(records, key="epsilon")


def run_study(cfg: StudyConfig) -> list:
    if cfg.mode == "eps_study":
        return run_eps_study(cfg)
    return run_h_study(cfg)


def _fmt(v) -> str:
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return f"{float(v):.10g}"


def format_report(records, fmt: str = "csv", header: Optional[dict] = None) -> str:
    if not records:
        raise InvalidArgumentError("no records to report")
    rows = [[_fmt(getattr(r, c)) for c in CSV_COLUMNS] for r in records]
    if fmt == "csv":
        lines = [",".join(CSV_COLUMNS)] + [",".join(r) for r in rows]
        return "\n".join(lines) + "\n"
    if fmt in ("md", "markdown"):
        buf = io.StringIO()
        for k, v in (header or {}).items():
            buf.write(f"- {k}: {v}\n")
        if header:
            buf.write("\n")
        buf.write("| " + " | ".join(CSV_COLUMNS) + " |\n")
        buf.write("|" + "---|" * len(CSV_COLUMNS) + "\n")
        for r in rows:
            buf.write("| " + " | ".join(r) + " |\n")
        return buf.getvalue()
    raise InvalidArgumentError(f"unknown report format {fmt!r}")


def emit_report(records, fmt: str, path, header: Optional[dict] = None) -> Path:
    text = format_report(records, fmt, header)
    path = Path(path)
    path.write_text(text)
    return path


def report_header(cfg: StudyConfig, case: ProblemCase) -> dict:
    head = {"case": case.name, "description": case.description, "mode": cfg.mode,
            "levels": f"{cfg.levels[0]}..{cfg.levels[1]}", "nu": cfg.nu, "seed": cfg.seed}
    if cfg.mode == "eps_study":
        head["epsilon"] = f"{cfg.eps_scale:g} * 2^-k, k = 0..{cfg.eps_steps}"
        head["reference"] = f"active-set solution on the same mesh (level {cfg.levels[1]})"
    else:
        head["epsilon"] = f"{cfg.eps_scale:g} * h^{cfg.theta:g}"
        if case.exact is not None:
            head["reference"] = "closed-form penalized state"
        else:
            head["reference"] = f"active-set solution at level {cfg.reference_level} (overkill)"
    return head
