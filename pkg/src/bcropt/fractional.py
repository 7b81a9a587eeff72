"""Ratio maximization ``max B(x) / C(x)`` over a mixed-integer feasible set.

Dinkelbach's parametric scheme: starting from ``q = 0``, repeatedly solve
``F(q) = max B(x) - q C(x)`` and move ``q`` to the ratio of the maximizer,
stopping once ``F(q)`` drops below ``epsilon``.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (DenominatorViolation, DimensionMismatch, InfeasibleModel,
                     InfeasiblePoint, IterationLimit, NonpositiveDenominator)
from .lp import DEFAULT_TOL
from .mip import MipConfig, MixedIntegerProgram, solve_mip

log = logging.getLogger(__name__)

__all__ = [
    "AffineForm",
    "FractionalModel",
    "Iteration",
    "RatioSolution",
    "maximize_ratio",
    "evaluate_ratio",
    "parametric_value",
]


@dataclass(frozen=True)
class AffineForm:
    coef: np.ndarray
    const: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "coef", np.asarray(self.coef, dtype=float).ravel())

    def __call__(self, x):
        return float(self.coef @ np.asarray(x, dtype=float) + self.const)


@dataclass(frozen=True)
class FractionalModel:
    """Benefit and cost affine forms over a shared constraint system.

    The objective stored in ``constraints`` is ignored.
    """

    constraints: MixedIntegerProgram
    benefit: AffineForm
    cost: AffineForm

    def __post_init__(self):
        n = self.constraints.num_vars
        if self.benefit.coef.size != n or self.cost.coef.size != n:
            raise DimensionMismatch(
                f"benefit/cost have {self.benefit.coef.size}/{self.cost.coef.size} "
                f"coefficients for {n} variables")

    def parametric(self, q):
        """The linearized program ``max B(x) - q C(x)``."""
        c = self.benefit.coef - q * self.cost.coef
        return self.constraints.with_objective(c, self.benefit.const - q * self.cost.const, True)

    def ratio(self, x):
        return self.benefit(x) / self.cost(x)


@dataclass(frozen=True)
class Iteration:
    q: float
    F: float
    F_bound: float
    benefit: float
    cost: float
    status: str
    nodes: int
    gap: float

    @property
    def ratio(self):
        return self.benefit / self.cost


@dataclass
class RatioSolution:
    """Outcome of :func:`maximize_ratio`.

    ``x_star``/``q_star`` hold the best ratio seen over all iterates; with
    exact subproblems that is the final iterate.  ``last_x``/``last_ratio``
    always hold the final iterate.
    """

    x_star: np.ndarray
    q_star: float
    iterations: list
    status: str
    epsilon: float
    last_x: np.ndarray
    last_ratio: float
    warnings: list = field(default_factory=list)

    @property
    def q_sequence(self):
        return [it.q for it in self.iterations]


def evaluate_ratio(fm, x, tol=DEFAULT_TOL):
    x = np.asarray(x, dtype=float)
    if x.size != fm.constraints.num_vars:
        raise DimensionMismatch(f"point has {x.size} entries, model has {fm.constraints.num_vars}")
    viol = fm.constraints.base.violation(x)
    if viol > tol.feasibility or not fm.constraints.is_integral(x, tol.integrality):
        raise InfeasiblePoint(f"point violates the constraint system (max violation {viol:.3g})")
    c = fm.cost(x)
    if c <= 0:
        raise NonpositiveDenominator(f"cost form evaluates to {c}")
    return fm.benefit(x) / c


def parametric_value(fm, q, config=None):
    """``F(q)`` and its maximizer."""
    sol = solve_mip(fm.parametric(q), config=config or MipConfig())
    if sol.incumbent is None:
        raise InfeasibleModel("parametric subproblem is infeasible")
    return sol.objective, sol.incumbent


def maximize_ratio(fm, epsilon=None, sub_cfg=None, max_iter=50, warm_start=True):
    """Maximize ``B(x)/C(x)`` by Dinkelbach iteration.

    ``epsilon`` defaults to ``1e-6 * max(1, |B(x0)|)`` where ``x0`` solves
    the first (``q = 0``) subproblem.  Raises InfeasibleModel when that
    first subproblem has no solution, DenominatorViolation when an iterate
    has ``C(x) <= 0`` and IterationLimit (carrying the best solution) when
    ``max_iter`` subproblems do not reach ``F(q) < epsilon``.
    """
    cfg = sub_cfg or MipConfig()
    q = 0.0
    eps = epsilon
    if eps is not None and eps <= 0:
        raise ValueError("epsilon must be positive")
    history = []
    notes = []
    best_x, best_ratio = None, -math.inf
    prev = None
    for k in range(max_iter):
        sol = solve_mip(fm.parametric(q), config=cfg, incumbent=prev if warm_start else None)
        if sol.incumbent is None:
            raise InfeasibleModel(f"subproblem at iteration {k} (q={q:.6g}) is infeasible")
        x = sol.incumbent
        b, c = fm.benefit(x), fm.cost(x)
        if c <= 0:
            raise DenominatorViolation(f"iterate {k} has cost {c}; the model admits C(x) <= 0")
        F = b - q * c
        if eps is None:
            eps = 1e-6 * max(1.0, abs(b))
        history.append(Iteration(q, F, sol.bound, b, c, sol.status, sol.nodes_explored, sol.gap))
        ratio = b / c
        if ratio > best_ratio:
            best_x, best_ratio = x, ratio
        if F < -1e-9 * max(1.0, abs(b)):
            notes.append(f"iteration {k}: inexact subproblem returned F={F:.6g} < 0; "
                         "keeping the best earlier iterate")
        if F < eps:
            if sol.status != "optimal":
                notes.append(f"converged on an inexact subproblem (status {sol.status}, gap {sol.gap:.3g})")
            for msg in notes:
                log.warning(msg)
            return RatioSolution(best_x, best_ratio, history, "converged", eps, x, ratio, notes)
        q = ratio
        prev = x
    result = RatioSolution(best_x, best_ratio, history, "iteration_limit", eps, x, ratio, notes)
    raise IterationLimit(f"no convergence within {max_iter} iterations", best=result)
