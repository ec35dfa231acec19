"""Working-set ADMM solver for the slide-loss linear SVM.

The training problem is

    min_{w,b,u}  ||w||^2/2 + C * sum_i loss(u_i)   s.t.  u + Aw + by = 1,

with A the matrix of label-signed samples. Each sweep selects a working set
from thresholds of the closed-form prox, applies the u/w/b block updates, and
takes a damped multiplier step restricted to the working set. Convergence is
declared from four residuals derived from the stationarity conditions.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .data import Dataset
from .loss import (
    SlideParams,
    prox_slide_vector,
    prox_thresholds,
    slide_loss_sum,
)
from . import model as model_mod

__all__ = [
    "TrainConfig",
    "WorkingSet",
    "AdmmState",
    "Residuals",
    "TrainDiagnostics",
    "StationarityReport",
    "compute_z",
    "select_working_set",
    "update_u",
    "update_w",
    "solve_w_system",
    "update_b",
    "update_lambda",
    "residuals",
    "train",
    "check_proximal_stationarity",
]

ETA_MAX = (1.0 + math.sqrt(5.0)) / 2.0


@dataclass(frozen=True)
class TrainConfig:
    """Solver hyperparameters.

    C trades margin against loss, delta is the augmented-Lagrangian penalty,
    eta the dual step size (must stay below (1+sqrt(5))/2), K the sweep cap,
    tol the residual tolerance. The prox scale used throughout the solver is
    gamma = 1/delta, so all prox calls see gamma_c = C/delta.
    """

    C: float
    delta: float
    slide: SlideParams
    eta: float = 1.618
    K: int = 1000
    tol: float = 1e-3

    def __post_init__(self):
        if self.C <= 0.0:
            raise ValueError(f"C must be positive, got {self.C}")
        if self.delta <= 0.0:
            raise ValueError(f"delta must be positive, got {self.delta}")
        if not 0.0 < self.eta < ETA_MAX:
            raise ValueError(f"eta must lie in (0, {ETA_MAX}), got {self.eta}")
        if self.tol <= 0.0:
            raise ValueError(f"tol must be positive, got {self.tol}")
        if self.K < 1:
            raise ValueError(f"K must be at least 1, got {self.K}")

    @property
    def gamma_c(self) -> float:
        return self.C / self.delta


@dataclass(frozen=True)
class WorkingSet:
    """Indices taking part in one sweep.

    ``pinned`` rows get u = epsilon; ``shifted`` rows get u = z - C/(delta*(v-eps)).
    In the regime C/delta >= 2*(v-eps)^2 everything active is pinned and
    ``shifted`` is empty, so consumers never need a regime branch.
    """

    pinned: np.ndarray
    shifted: np.ndarray

    @property
    def indices(self) -> np.ndarray:
        return np.concatenate([self.pinned, self.shifted])

    @property
    def size(self) -> int:
        return self.pinned.size + self.shifted.size

    def complement_mask(self, m: int) -> np.ndarray:
        mask = np.ones(m, dtype=bool)
        mask[self.indices] = False
        return mask


_EMPTY = np.empty(0, dtype=np.int64)


@dataclass
class AdmmState:
    """Iterate (w, b, u, lambda) plus sweep counter and current working set.
    lambda is zero outside the most recent working set by construction."""

    w: np.ndarray
    b: float
    u: np.ndarray
    lam: np.ndarray
    k: int = 0
    working_set: WorkingSet = field(
        default_factory=lambda: WorkingSet(_EMPTY, _EMPTY)
    )

    @classmethod
    def initial(cls, m: int, n: int) -> "AdmmState":
        # u = 1, w = 0, b = 0 makes the linear constraint exactly feasible
        return cls(w=np.zeros(n), b=0.0, u=np.ones(m), lam=np.zeros(m))


@dataclass(frozen=True)
class Residuals:
    """Normalized stopping residuals: e1 gradient, e2 multiplier balance,
    e3 constraint feasibility, e4 prox fixed point."""

    e1: float
    e2: float
    e3: float
    e4: float

    def max(self) -> float:
        return max(self.e1, self.e2, self.e3, self.e4)


def compute_z(state: AdmmState, ds: Dataset, cfg: TrainConfig) -> np.ndarray:
    """z_i = 1 - y_i<w, x_i> - b*y_i - lambda_i/delta."""
    A = ds.signed_matrix()
    return 1.0 - A @ state.w - state.b * ds.y - state.lam / cfg.delta


def select_working_set(
    z: np.ndarray, lam: np.ndarray, cfg: TrainConfig
) -> WorkingSet:
    """Threshold z against the prox breakpoints of gamma_c = C/delta.

    Rows with z <= epsilon never participate. A row sitting exactly on the
    outermost breakpoint joins only while its multiplier is nonzero.
    """
    th = prox_thresholds(cfg.gamma_c, cfg.slide)
    active = z > cfg.slide.epsilon
    on_tie = (z == th.tie_point) & (lam != 0.0)
    if th.ramp_regime:
        pinned = active & (z < th.pin_upper)
        shifted = (z >= th.pin_upper) & (z < th.tie_point) | on_tie
    else:
        pinned = active & (z < th.tie_point) | on_tie
        shifted = np.zeros_like(pinned)
    return WorkingSet(np.flatnonzero(pinned), np.flatnonzero(shifted))


def update_u(z: np.ndarray, ws: WorkingSet, cfg: TrainConfig) -> np.ndarray:
    """Prox step on the slack block: pinned rows drop to epsilon, shifted rows
    move down by C/(delta*(v-eps)), everything else keeps u = z."""
    th = prox_thresholds(cfg.gamma_c, cfg.slide)
    u = z.copy()
    u[ws.pinned] = cfg.slide.epsilon
    u[ws.shifted] = z[ws.shifted] - th.shift
    return u


def solve_w_system(
    a_t: np.ndarray, r_t: np.ndarray, delta: float, branch: Optional[str] = None
) -> np.ndarray:
    """Solve (I + delta*A_T'A_T) w = -delta*A_T' r_T.

    branch "direct" assembles the n x n system; branch "smw" solves the
    |T| x |T| system (I + delta*A_T A_T') q = r_T and sets w = -delta*A_T' q,
    which is the Woodbury push-through of the same equations. The default
    picks whichever system is smaller. Both sides agree to 1e-8 relative.
    """
    t_size, n = a_t.shape
    if t_size == 0:
        return np.zeros(n)
    if branch is None:
        branch = "direct" if n <= t_size else "smw"
    if branch == "direct":
        gram = delta * (a_t.T @ a_t)
        gram[np.diag_indices_from(gram)] += 1.0
        rhs = -delta * (a_t.T @ r_t)
        return scipy.linalg.cho_solve(
            scipy.linalg.cho_factor(gram, lower=True, check_finite=False),
            rhs,
            check_finite=False,
        )
    if branch == "smw":
        gram = delta * (a_t @ a_t.T)
        gram[np.diag_indices_from(gram)] += 1.0
        q = scipy.linalg.cho_solve(
            scipy.linalg.cho_factor(gram, lower=True, check_finite=False),
            r_t,
            check_finite=False,
        )
        return -delta * (a_t.T @ q)
    raise ValueError(f"unknown branch {branch!r}")


def update_w(
    state: AdmmState,
    u_next: np.ndarray,
    ds: Dataset,
    cfg: TrainConfig,
    branch: Optional[str] = None,
) -> np.ndarray:
    """Minimize the w block over the working set, with the previous b and
    multipliers held fixed."""
    A = ds.signed_matrix()
    idx = state.working_set.indices
    r = state.lam / cfg.delta + u_next + state.b * ds.y - 1.0
    return solve_w_system(A[idx], r[idx], cfg.delta, branch=branch)


def update_b(
    u_next: np.ndarray,
    w_next: np.ndarray,
    lam: np.ndarray,
    ds: Dataset,
    cfg: TrainConfig,
) -> float:
    """b = <y, 1 - u - Aw - lambda/delta> / m (zeroes the b-block gradient)."""
    if ds.m == 0:
        raise ValueError("empty dataset")
    A = ds.signed_matrix()
    return float(ds.y @ (1.0 - u_next - A @ w_next - lam / cfg.delta)) / ds.m


def update_lambda(
    state: AdmmState,
    u_next: np.ndarray,
    w_next: np.ndarray,
    b_next: float,
    ds: Dataset,
    cfg: TrainConfig,
) -> np.ndarray:
    """Damped dual ascent on the working set; zero elsewhere."""
    A = ds.signed_matrix()
    idx = state.working_set.indices
    lam = np.zeros(ds.m)
    violation = u_next + A @ w_next + b_next * ds.y - 1.0
    lam[idx] = state.lam[idx] + cfg.eta * cfg.delta * violation[idx]
    return lam


def residuals(state: AdmmState, ds: Dataset, cfg: TrainConfig) -> Residuals:
    """Normalized residuals of the stationarity system at the current state."""
    A = ds.signed_matrix()
    idx = state.working_set.indices
    w_norm = float(np.linalg.norm(state.w))
    e1 = float(np.linalg.norm(state.w + A[idx].T @ state.lam[idx])) / (1.0 + w_norm)
    e2 = abs(float(ds.y[idx] @ state.lam[idx])) / (1.0 + idx.size)
    violation = 1.0 - state.u - A @ state.w - state.b * ds.y
    e3 = float(np.linalg.norm(violation)) / math.sqrt(ds.m)
    prox = prox_slide_vector(
        state.u - state.lam / cfg.delta, cfg.gamma_c, cfg.slide
    )
    e4 = float(np.linalg.norm(state.u - prox)) / (1.0 + float(np.linalg.norm(state.u)))
    return Residuals(e1, e2, e3, e4)


def objective_value(w: np.ndarray, b: float, ds: Dataset, cfg: TrainConfig) -> float:
    """Primal objective ||w||^2/2 + C * sum_i loss(1 - y_i f(x_i))."""
    A = ds.signed_matrix()
    margins = 1.0 - A @ w - b * ds.y
    return 0.5 * float(w @ w) + slide_loss_sum(margins, cfg.slide, cfg.C)


@dataclass
class TrainDiagnostics:
    """Per-sweep history plus the final iterate, for inspection and CSV dumps."""

    residual_history: list[Residuals]
    working_set_sizes: list[int]
    objective_history: list[float]
    iterations: int
    converged: bool
    final_state: AdmmState

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["k", "working_set_size", "e1", "e2", "e3", "e4", "objective"])
        for k, (res, ws, obj) in enumerate(
            zip(self.residual_history, self.working_set_sizes, self.objective_history),
            start=1,
        ):
            writer.writerow(
                [k, ws, repr(res.e1), repr(res.e2), repr(res.e3), repr(res.e4), repr(obj)]
            )
        return buf.getvalue()


def train(ds: Dataset, cfg: TrainConfig):
    """Run the solver from the zero hyperplane until the residuals drop below
    tol or K sweeps elapse.

    Non-convergence is reported through the model's ``converged`` flag, not an
    error; the final iterate is returned either way. The run is deterministic:
    equal inputs give bit-identical results.

    Returns (Model, TrainDiagnostics).
    """
    if ds.m == 0:
        raise ValueError("empty dataset")
    state = AdmmState.initial(ds.m, ds.n)
    history: list[Residuals] = []
    sizes: list[int] = []
    objectives: list[float] = []
    converged = False
    for k in range(1, cfg.K + 1):
        z = compute_z(state, ds, cfg)
        state.working_set = select_working_set(z, state.lam, cfg)
        u_next = update_u(z, state.working_set, cfg)
        w_next = update_w(state, u_next, ds, cfg)
        b_next = update_b(u_next, w_next, state.lam, ds, cfg)
        state.lam = update_lambda(state, u_next, w_next, b_next, ds, cfg)
        state.u, state.w, state.b, state.k = u_next, w_next, b_next, k

        res = residuals(state, ds, cfg)
        history.append(res)
        sizes.append(state.working_set.size)
        objectives.append(objective_value(state.w, state.b, ds, cfg))
        if res.max() < cfg.tol:
            converged = True
            break

    diagnostics = TrainDiagnostics(
        residual_history=history,
        working_set_sizes=sizes,
        objective_history=objectives,
        iterations=state.k,
        converged=converged,
        final_state=state,
    )
    support = model_mod.extract_support_vectors(state.lam, cfg)
    trained = model_mod.Model(
        w=state.w,
        b=state.b,
        slide=cfg.slide,
        C=cfg.C,
        delta=cfg.delta,
        support=support,
        converged=converged,
        iterations=state.k,
    )
    return trained, diagnostics


@dataclass(frozen=True)
class StationarityReport:
    """Raw defect norms of the four stationarity conditions at a point."""

    gradient: float
    balance: float
    feasibility: float
    prox_defect: float

    def max_defect(self) -> float:
        return max(self.gradient, self.balance, self.feasibility, self.prox_defect)

    def passes(self, tau: float) -> bool:
        return self.max_defect() <= tau


def check_proximal_stationarity(
    w: np.ndarray,
    b: float,
    u: np.ndarray,
    lam: np.ndarray,
    gamma: float,
    ds: Dataset,
    C: float,
    p: SlideParams,
) -> StationarityReport:
    """Evaluate the four stationarity defects at (w, b, u, lambda) for a given
    prox scale gamma. Uses the full signed matrix, not a working set.

    The point certifies as stationary at tolerance tau when all four defects
    are at most tau.
    """
    if gamma <= 0.0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    A = ds.signed_matrix()
    gradient = float(np.linalg.norm(w + A.T @ lam))
    balance = abs(float(ds.y @ lam))
    feasibility = float(np.linalg.norm(u + A @ w + b * ds.y - 1.0))
    prox = prox_slide_vector(u - gamma * lam, gamma * C, p)
    prox_defect = float(np.linalg.norm(u - prox))
    return StationarityReport(gradient, balance, feasibility, prox_defect)
