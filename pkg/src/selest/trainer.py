"""Weight training for the uniform mixture model.

The MSE-to-uniform objective reduces to ``w' Q w`` with
``Q_ij = |G_i & G_j| / (|G_i| |G_j|)`` and the observed selectivities to the
linear system ``A w = s`` with ``A_ij = |B_i & G_j| / |G_j|``. Moving the
equalities into a penalty ``lambda * ||A w - s||^2`` and dropping ``w >= 0``
leaves an unconstrained quadratic whose minimizer solves

    (Q + lambda A'A) w = lambda A' s.

The projected-gradient solver keeps ``w >= 0`` and iterates instead; it is
here to compare against.
"""

from __future__ import annotations

import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np
import scipy.linalg

from .geometry import (
    Box,
    boxes_to_arrays,
    overlap_volumes,
    pairwise_overlap_volumes,
    region_overlap_volumes,
)
from .model import MixtureModel, ObservedQuery
from .subpop import SubpopConfig, generate


class TrainingError(ValueError):
    pass


class NumericalError(ArithmeticError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    lam: float = 1e6
    ridge: float = 1e-8
    solver: str = "analytic"
    pg_max_iters: int = 10_000
    pg_tol: float = 1e-8
    include_domain_assertion: bool = True
    anchor_domain_support: bool = True

    def __post_init__(self):
        if not self.lam > 0:
            raise TrainingError("lambda must be positive")
        if self.ridge < 0:
            raise TrainingError("ridge must be non-negative")
        if self.solver not in ("analytic", "projected_gradient"):
            raise TrainingError(f"unknown solver {self.solver!r}")


@dataclass
class TrainingSystem:
    Q: np.ndarray
    A: np.ndarray
    s: np.ndarray
    lam: float = 1e6

    @property
    def m(self) -> int:
        return self.Q.shape[0]

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def objective(self, w: np.ndarray) -> float:
        r = self.A @ w - self.s
        return float(w @ self.Q @ w + self.lam * r @ r)

    def gradient(self, w: np.ndarray) -> np.ndarray:
        return 2.0 * self.Q @ w + 2.0 * self.lam * self.A.T @ (self.A @ w - self.s)


@dataclass
class Solution:
    weights: np.ndarray
    residual: float
    seconds: float
    iterations: int = 0
    converged: bool = True
    extra: dict = field(default_factory=dict)


def assemble(
    queries: Sequence[ObservedQuery],
    supports: Sequence[Box],
    cfg: TrainConfig = TrainConfig(),
    domain: Box | None = None,
) -> TrainingSystem:
    """Build ``Q``, ``A`` and ``s``; appends the row ``(domain, 1)`` when configured."""
    if not supports:
        raise TrainingError("no supports")
    lo, hi = boxes_to_arrays(supports)
    vol = np.prod(hi - lo, axis=1)
    bad = np.flatnonzero(~(vol > 0))
    if bad.size:
        raise TrainingError(f"support {bad[0]} has zero volume")

    inter = pairwise_overlap_volumes(lo, hi, lo, hi)
    Q = inter / np.outer(vol, vol)
    # mirror the upper triangle so Q is exactly symmetric
    iu = np.triu_indices(len(vol), 1)
    Q[(iu[1], iu[0])] = Q[iu]
    Q[np.diag_indices_from(Q)] = 1.0 / vol

    rows, s = [], []
    for q in queries:
        rows.append(region_overlap_volumes(q.predicate, lo, hi) / vol)
        s.append(q.selectivity)
    if cfg.include_domain_assertion:
        if domain is None:
            raise TrainingError("the domain assertion needs the domain box")
        rows.append(overlap_volumes(lo, hi, domain) / vol)
        s.append(1.0)
    if not rows:
        raise TrainingError("no assertions to train on")
    A = np.clip(np.array(rows), 0.0, 1.0)
    return TrainingSystem(Q, A, np.array(s, dtype=float), cfg.lam)


def solve_analytic(sys: TrainingSystem, cfg: TrainConfig = TrainConfig()) -> Solution:
    """Direct solve of ``(Q + lam A'A + ridge diag(Q)) w = lam A' s``."""
    t0 = time.perf_counter()
    M = sys.Q + sys.lam * (sys.A.T @ sys.A)
    rhs = sys.lam * (sys.A.T @ sys.s)
    if cfg.ridge > 0:
        # load the diagonal in proportion to Q's own diagonal: scaling by the trace
        # would let one tiny support swamp the rest, scaling by M's diagonal lets lambda in
        M[np.diag_indices_from(M)] += cfg.ridge * np.diag(sys.Q)
    try:
        w = scipy.linalg.cho_solve(scipy.linalg.cho_factor(M, check_finite=False), rhs, check_finite=False)
    except np.linalg.LinAlgError:
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", scipy.linalg.LinAlgWarning)
                w = scipy.linalg.solve(M, rhs, assume_a="sym", check_finite=False)
        except (np.linalg.LinAlgError, scipy.linalg.LinAlgWarning) as e:
            raise NumericalError(f"singular training system ({e}); increase the ridge") from None
    if not np.all(np.isfinite(w)):
        raise NumericalError("training system produced non-finite weights; increase the ridge")
    seconds = time.perf_counter() - t0
    res = float(np.max(np.abs(sys.A @ w - sys.s)))
    return Solution(w, res, seconds)


def _power_iteration(matvec, m: int, iters: int = 300, tol: float = 1e-7) -> float:
    v = np.ones(m) / np.sqrt(m)
    est = 0.0
    for _ in range(iters):
        u = matvec(v)
        norm = np.linalg.norm(u)
        if norm == 0:
            return 0.0
        v = u / norm
        if abs(norm - est) <= tol * norm:
            est = norm
            break
        est = norm
    return est


def solve_projected_gradient(sys: TrainingSystem, cfg: TrainConfig = TrainConfig()) -> Solution:
    """Minimize ``w'Qw + lam ||Aw - s||^2`` over ``w >= 0`` by projected gradient.

    Steps are ``1/L`` with ``L`` a power-iteration estimate of the largest
    eigenvalue of ``2Q + 2 lam A'A`` (padded by 1% against underestimation),
    with Nesterov momentum and adaptive restart.
    """
    t0 = time.perf_counter()
    Q, A, s, lam = sys.Q, sys.A, sys.s, sys.lam

    def hess(v):
        return 2.0 * (Q @ v) + 2.0 * lam * (A.T @ (A @ v))

    L = 1.01 * _power_iteration(hess, sys.m)
    w = np.zeros(sys.m)
    f = sys.objective(w)
    if L == 0 or not np.any(s):
        return Solution(w, float(np.max(np.abs(A @ w - s))), time.perf_counter() - t0, 1, True)

    y, theta = w.copy(), 1.0
    converged = False
    it = 0
    for it in range(1, cfg.pg_max_iters + 1):
        w_new = np.maximum(y - sys.gradient(y) / L, 0.0)
        f_new = sys.objective(w_new)
        if f_new > f:
            # restart momentum when the objective goes up
            y, theta = w.copy(), 1.0
            continue
        theta_new = (1.0 + np.sqrt(1.0 + 4.0 * theta * theta)) / 2.0
        y = w_new + ((theta - 1.0) / theta_new) * (w_new - w)
        change = abs(f - f_new) / max(abs(f_new), 1e-300)
        w, f, theta = w_new, f_new, theta_new
        if change <= cfg.pg_tol:
            converged = True
            break
    seconds = time.perf_counter() - t0
    res = float(np.max(np.abs(A @ w - s)))
    return Solution(w, res, seconds, it, converged, {"lipschitz": L})


def solve(sys: TrainingSystem, cfg: TrainConfig = TrainConfig()) -> Solution:
    if cfg.solver == "projected_gradient":
        return solve_projected_gradient(sys, cfg)
    return solve_analytic(sys, cfg)


def make_supports(
    queries: Sequence[ObservedQuery],
    domain: Box,
    cfg: TrainConfig = TrainConfig(),
    subpop_cfg: SubpopConfig = SubpopConfig(),
) -> list[Box]:
    """Generated supports, led by the domain box itself when anchoring is on.

    With the anchor, the generator is asked for ``m - 1`` boxes so the model
    still has ``m`` parameters in total.
    """
    if not cfg.anchor_domain_support:
        return generate(queries, subpop_cfg, domain)
    m = subpop_cfg.m_for(len(queries))
    if m <= 1:
        return [domain]
    sub = SubpopConfig(
        points_per_predicate=subpop_cfg.points_per_predicate,
        m_override=m - 1,
        neighbor_count=subpop_cfg.neighbor_count,
        seed=subpop_cfg.seed,
        method=subpop_cfg.method,
        kmeans_max_iters=subpop_cfg.kmeans_max_iters,
    )
    return [domain] + generate(queries, sub, domain)


def fit(
    queries: Sequence[ObservedQuery],
    domain: Box,
    cfg: TrainConfig = TrainConfig(),
    subpop_cfg: SubpopConfig = SubpopConfig(),
) -> tuple[MixtureModel, Solution]:
    if not queries:
        raise TrainingError("training needs at least one observed query")
    supports = make_supports(queries, domain, cfg, subpop_cfg)
    sys = assemble(queries, supports, cfg, domain)
    sol = solve(sys, cfg)
    return MixtureModel(domain, tuple(supports), sol.weights), sol


def train(
    queries: Sequence[ObservedQuery],
    domain: Box,
    cfg: TrainConfig = TrainConfig(),
    subpop_cfg: SubpopConfig = SubpopConfig(),
) -> MixtureModel:
    return fit(queries, domain, cfg, subpop_cfg)[0]


def dump_system(sys: TrainingSystem, path: str | Path) -> None:
    """Write Q, A and s as three ``rows cols`` headed blocks of row-major decimals."""
    with open(path, "w") as fh:
        for mat in (sys.Q, sys.A, sys.s[:, None]):
            fh.write("%d %d\n" % mat.shape)
            for row in mat:
                fh.write(" ".join(repr(float(v)) for v in row) + "\n")


def load_system(path: str | Path, lam: float = 1e6) -> TrainingSystem:
    blocks = []
    with open(path) as fh:
        lines = [ln for ln in fh.read().splitlines() if ln.strip()]
    i = 0
    while i < len(lines):
        r, c = (int(v) for v in lines[i].split())
        mat = np.array([[float(v) for v in ln.split()] for ln in lines[i + 1:i + 1 + r]]).reshape(r, c)
        blocks.append(mat)
        i += 1 + r
    Q, A, s = blocks
    return TrainingSystem(Q, A, s[:, 0], lam)
