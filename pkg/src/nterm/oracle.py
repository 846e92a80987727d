"""Brute-force maximizers of the n-term tail error over weighted lp balls.

Two independent engines certify the analytic bounds:

* ``structure_oracle`` optimizes over sequences of the form
  (b, ..., b, c, 0, ...) with m leading entries b >= c and one overflow
  entry c, which is the shape a worst-case element must take.  For each m
  the one-dimensional problem in b is solved by a coarse grid scan followed
  by golden-section refinement (the inner problem is not provably unimodal,
  so the grid guards against local maxima).
* ``random_search_oracle`` samples random nonincreasing sequences scaled to
  the unit sphere; every sample is a valid lower bound.

Both engines are bitwise reproducible given a seed and configuration.  The
scan over m is partitioned into fixed-size chunks; set ``NTERM_THREADS``
to spread chunks over a thread pool (results are merged in chunk order, so
the answer does not depend on scheduling).
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .bounds import (
    STATUS_ATTAINED,
    STATUS_LIMIT,
    BoundResult,
    CumulativeWeightTable,
    build_table,
    class_bounds,
    default_m_max,
)
from .sequences import CoefficientSequence, sigma_n_exact, weighted_lp_norm
from .weights import WeightModel

__all__ = [
    "OracleConfig",
    "CertificationReport",
    "structure_oracle",
    "random_search_oracle",
    "certify",
]

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_INV_PHI_SQ = (3.0 - math.sqrt(5.0)) / 2.0
_CHUNK = 8192
_BATCH = 32768


@dataclass(frozen=True)
class OracleConfig:
    """Shared oracle configuration; ``m_max=None`` means max(1024, 64n)."""

    m_max: int | None = None
    grid_points: int = 512
    refine_tol: float = 1e-12
    iters: int = 20000
    seed: int = 0
    max_support: int = 64

    def __post_init__(self):
        if self.grid_points < 16:
            raise ValueError(f"grid_points must be >= 16, got {self.grid_points}")
        if not self.refine_tol > 0:
            raise ValueError(f"refine_tol must be > 0, got {self.refine_tol}")
        if self.iters < 1:
            raise ValueError(f"iters must be >= 1, got {self.iters}")
        if self.max_support < 1:
            raise ValueError(f"max_support must be >= 1, got {self.max_support}")


def _thread_count() -> int:
    try:
        return max(1, int(os.environ.get("NTERM_THREADS", "1")))
    except ValueError:
        return 1


def _resolve_m_max(cfg: OracleConfig, n: int, w: WeightModel) -> int:
    m_max = cfg.m_max if cfg.m_max is not None else default_m_max(n)
    known = w.known_length
    if known is not None:
        m_max = min(m_max, known - 1)  # the scan also reads w_{m+1}
    if m_max < n + 1:
        raise ValueError(f"m_max must be >= n + 1, got {m_max} < {n + 1}")
    return int(m_max)


def _scan_chunk(p, n, s_grid, s_sq, v_grid, marr, winv, rho, refine_tol):
    """Best (value, m, s) over one chunk of head lengths m."""
    coef = marr - n

    def h_at(s):
        vv = np.clip(1.0 - s ** p, 0.0, None) ** (1.0 / p)
        ct = np.minimum(s, rho * vv)
        return coef * s * s + ct * ct

    cterm = np.minimum(s_grid[None, :], rho[:, None] * v_grid[None, :])
    h = coef[:, None] * s_sq[None, :] + cterm * cterm
    j = np.argmax(h, axis=1)
    rows = np.arange(marr.size)
    h_best = h[rows, j]
    s_best = s_grid[j]

    a = s_grid[np.maximum(j - 1, 0)]
    b = s_grid[np.minimum(j + 1, s_grid.size - 1)]
    width = float(np.max(b - a))
    if width > refine_tol:
        iters = min(200, int(math.ceil(
            math.log(refine_tol / width) / math.log(_INV_PHI))))
        h_w = b - a
        c = a + _INV_PHI_SQ * h_w
        d = a + _INV_PHI * h_w
        yc = h_at(c)
        yd = h_at(d)
        for _ in range(iters):
            cond = yc > yd
            a = np.where(cond, a, c)
            h_w = h_w * _INV_PHI
            c = a + _INV_PHI_SQ * h_w
            d = a + _INV_PHI * h_w
            probe = np.where(cond, c, d)
            yp = h_at(probe)
            yc, yd = np.where(cond, yp, yd), np.where(cond, yc, yp)
        s_ref = np.where(yc > yd, c, d)
        y_ref = np.maximum(yc, yd)
        better = y_ref > h_best
        h_best = np.where(better, y_ref, h_best)
        s_best = np.where(better, s_ref, s_best)

    f = winv * winv * h_best
    i = int(np.argmax(f))
    return float(f[i]), int(marr[i]), float(s_best[i])


def structure_oracle(
    w: WeightModel,
    p: float,
    n: int,
    cfg: OracleConfig,
    *,
    table: CumulativeWeightTable | None = None,
) -> tuple[float, CoefficientSequence]:
    """Maximize the squared tail error over the structured witness family.

    Returns the best squared value together with the witness sequence; the
    value is recomputed from the witness through ``sigma_n_exact``, so the
    pair is always self-consistent.
    """
    if not 0 < p < math.inf:
        raise ValueError(f"p must be finite and positive, got {p}")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    n = int(n)
    m_max = _resolve_m_max(cfg, n, w)
    if table is None or table.length < m_max or table.p != p:
        table = build_table(w, p, m_max)
    wvals = w.values(m_max + 1)

    s_grid = np.linspace(0.0, 1.0, cfg.grid_points)
    s_sq = s_grid * s_grid
    v_grid = np.clip(1.0 - s_grid ** p, 0.0, None) ** (1.0 / p)

    m_lo = max(n, 1)
    chunks = []
    for start in range(m_lo, m_max + 1, _CHUNK):
        stop = min(start + _CHUNK - 1, m_max)
        marr = np.arange(start, stop + 1, dtype=np.float64)
        winv = np.sqrt(table.inv_sq_slice(start, stop))
        rho = 1.0 / (winv * wvals[start:stop + 1])  # W_m / w_{m+1}
        chunks.append((marr, winv, rho))

    def run(chunk):
        marr, winv, rho = chunk
        return _scan_chunk(
            p, n, s_grid, s_sq, v_grid, marr, winv, rho, cfg.refine_tol)

    threads = _thread_count()
    if threads > 1 and len(chunks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            candidates = list(pool.map(run, chunks))
    else:
        candidates = [run(chunk) for chunk in chunks]

    best_f, best_m, best_s = candidates[0]
    for f, m, s in candidates[1:]:
        if f > best_f:
            best_f, best_m, best_s = f, m, s

    w_inv_star = math.sqrt(table.inv_sq(best_m))
    b = best_s * w_inv_star
    v = max(0.0, 1.0 - best_s ** p) ** (1.0 / p)
    c = min(b, v / float(wvals[best_m]))
    entries = np.full(best_m + 1, b)
    entries[-1] = c
    if c == 0.0:
        entries = entries[:-1]
    witness = CoefficientSequence(entries)
    value_sq = sigma_n_exact(witness, n) ** 2
    return float(value_sq), witness


def random_search_oracle(
    w: WeightModel,
    p: float,
    n: int,
    cfg: OracleConfig,
) -> tuple[float, CoefficientSequence]:
    """Best sigma_n**2 over seeded random unit-sphere samples.

    Samples are nonincreasing mixtures of sorted exponential and uniform
    draws with random support, rescaled to unit weighted lp norm; each one
    is a valid lower bound on the class error.
    """
    if not p > 0:
        raise ValueError(f"p must be positive, got {p}")
    if n < 0:
        raise ValueError(f"n must be >= 0, got {n}")
    n = int(n)
    support = cfg.max_support
    known = w.known_length
    if known is not None:
        support = min(support, known)
    wrow = w.values(support)

    rng = np.random.default_rng(cfg.seed)
    best_val = -1.0
    best_row: np.ndarray | None = None
    remaining = cfg.iters
    while remaining > 0:
        batch = min(_BATCH, remaining)
        remaining -= batch
        k = rng.integers(1, support + 1, size=batch)
        use_exp = rng.random(batch) < 0.5
        u = rng.random((batch, support))
        vals = np.where(use_exp[:, None], -np.log1p(-u), u)
        vals *= np.arange(support)[None, :] < k[:, None]
        vals = np.sort(vals, axis=1)[:, ::-1]

        t = vals * wrow[None, :]
        if math.isinf(p):
            norms = t.max(axis=1)
        elif p == 1.0:
            norms = t.sum(axis=1)
        elif p == 2.0:
            norms = np.sqrt((t * t).sum(axis=1))
        else:
            norms = (t ** p).sum(axis=1) ** (1.0 / p)
        good = norms > 0
        vals[good] /= norms[good, None]

        sq = vals * vals
        sig = sq.sum(axis=1)
        if n > 0:
            sig -= sq[:, :min(n, support)].sum(axis=1)
        sig[~good] = -1.0
        i = int(np.argmax(sig))
        if sig[i] > best_val:
            best_val = float(sig[i])
            best_row = vals[i].copy()

    if best_row is None:
        witness = CoefficientSequence(np.zeros(0))
    else:
        nz = np.nonzero(best_row)[0]
        witness = CoefficientSequence(
            best_row[:nz[-1] + 1] if nz.size else np.zeros(0))
    value_sq = sigma_n_exact(witness, n) ** 2
    return float(value_sq), witness


@dataclass(frozen=True)
class CertificationReport:
    """Cross-check of the bound scan against both oracles.

    For non-finite classifications the containment checks compare against
    the finite scanned suprema (``scan_*``), which are what a finite-support
    witness can actually reach.
    """

    weights: str
    p: float
    n: int
    m_max: int
    seed: int
    iters: int
    tol: float
    bound_status: str
    lower_sq: float
    upper_sq: float
    scan_lower_sq: float
    scan_upper_sq: float
    limit_estimate: float | None
    structure_sq: float
    random_sq: float
    checks: tuple[tuple[str, bool], ...]
    passed: bool

    def as_dict(self) -> dict:
        return {
            "weights": self.weights,
            "p": self.p,
            "n": self.n,
            "m_max": self.m_max,
            "seed": self.seed,
            "iters": self.iters,
            "tol": self.tol,
            "bound_status": self.bound_status,
            "lower_sq": self.lower_sq,
            "upper_sq": self.upper_sq,
            "scan_lower_sq": self.scan_lower_sq,
            "scan_upper_sq": self.scan_upper_sq,
            "limit_estimate": self.limit_estimate,
            "structure_sq": self.structure_sq,
            "random_sq": self.random_sq,
            "checks": {name: ok for name, ok in self.checks},
            "passed": self.passed,
        }


def certify(
    w: WeightModel,
    p: float,
    n: int,
    cfg: OracleConfig | None = None,
    *,
    tol: float = 1e-9,
) -> CertificationReport:
    """Run bounds, structure oracle, and random oracle; check containment.

    Check failures set the report's ``passed`` flag instead of raising, so
    harnesses can collect every combination before deciding.
    """
    if cfg is None:
        cfg = OracleConfig()
    m_max = _resolve_m_max(cfg, n, w)
    cfg = replace(cfg, m_max=m_max)

    bounds_result: BoundResult = class_bounds(w, p, n, m_max=m_max)
    structure_sq, _ = structure_oracle(w, p, n, cfg)
    random_sq, _ = random_search_oracle(w, p, n, cfg)

    upper_ref = bounds_result.upper_sq
    if bounds_result.status not in (STATUS_ATTAINED, STATUS_LIMIT):
        upper_ref = bounds_result.scan_upper_sq
    checks = (
        ("structure_ge_scan_lower",
         structure_sq >= bounds_result.scan_lower_sq - tol),
        ("structure_le_upper", structure_sq <= upper_ref + tol),
        ("random_le_structure", random_sq <= structure_sq + tol),
    )
    return CertificationReport(
        weights=w.spec_string(),
        p=float(p),
        n=int(n),
        m_max=m_max,
        seed=cfg.seed,
        iters=cfg.iters,
        tol=tol,
        bound_status=bounds_result.status,
        lower_sq=bounds_result.lower_sq,
        upper_sq=bounds_result.upper_sq,
        scan_lower_sq=bounds_result.scan_lower_sq,
        scan_upper_sq=bounds_result.scan_upper_sq,
        limit_estimate=bounds_result.limit_estimate,
        structure_sq=structure_sq,
        random_sq=random_sq,
        checks=checks,
        passed=all(ok for _, ok in checks),
    )
