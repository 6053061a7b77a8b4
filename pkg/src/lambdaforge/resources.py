"""Closed-form resource estimates from ``P_l = Lambda**-(n+1)``."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import DomainError, InfeasibleError
from .noise_sim import NoiseParams

# Relative slack when comparing log-space quantities (e.g. 18*log(10) vs log(1e-18)).
_LOG_TOL = 1e-9


def surface_qubits(order_n: int) -> int:
    return (4 * order_n + 1) ** 2


@dataclass(frozen=True)
class ResourcePlan:
    lambda_: float
    target_pl: float
    required_n: int
    total_qubits: int
    predicted_pl: float
    log10_predicted_pl: float

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambda"] = d.pop("lambda_")
        d["distance"] = 2 * self.required_n + 1
        return d


def required_order(lambda_: float, target_pl: float) -> ResourcePlan:
    """Smallest order ``n >= 1`` with ``lambda_**-(n+1) <= target_pl``."""
    if not 0 < target_pl < 1:
        raise DomainError(f"target_pl must lie in (0, 1), got {target_pl!r}")
    if not lambda_ > 1:
        raise InfeasibleError(
            f"lambda = {lambda_} <= 1: errors are above threshold, so enlarging the code "
            "does not help; no number of such qubits reaches the target"
        )
    steps = -math.log(target_pl) / math.log(lambda_)
    n = max(1, math.ceil(steps * (1 - _LOG_TOL)) - 1)
    log10_pred = -(n + 1) * math.log10(lambda_)
    return ResourcePlan(
        lambda_=float(lambda_),
        target_pl=float(target_pl),
        required_n=n,
        total_qubits=surface_qubits(n),
        predicted_pl=float(lambda_) ** -(n + 1),
        log10_predicted_pl=log10_pred,
    )


def lambda_from_eps(eps_t: float, eps: float) -> float:
    if eps <= 0:
        raise DomainError("eps must be positive")
    return eps_t / eps


@dataclass(frozen=True)
class ThresholdBudget:
    """Reference thresholds for the one-qubit, two-qubit and measurement errors.

    The single-component break-even values come from external surface-code
    simulations and are stored, not recomputed.
    """

    eps1_target: float = 0.001
    eps2_target: float = 0.001
    epsm_target: float = 0.005
    single_component_breakeven: tuple[float, float, float] = (0.043, 0.0125, 0.12)
    implied_lambda: float = 17.0
    operative_eps_t: float = 0.02
    breakeven_eps_t: float = 0.007
    bitflip_threshold: float = 0.03


BUDGET = ThresholdBudget()


def budget_report(noise: NoiseParams, budget: ThresholdBudget = BUDGET) -> dict:
    """Compare each error component against its target.

    The limiting component is the one furthest above (or closest to) its
    target; ties go to the component with the lower break-even threshold,
    i.e. the one the code tolerates least.
    """
    targets = {"eps1": budget.eps1_target, "eps2": budget.eps2_target, "epsm": budget.epsm_target}
    breakeven = dict(zip(targets, budget.single_component_breakeven))
    rows = {}
    for name, target in targets.items():
        value = getattr(noise, name)
        rows[name] = {
            "value": value,
            "target": target,
            "ratio_to_target": value / target,
            "passes": value <= target,
            "single_component_breakeven": breakeven[name],
        }
    worst = max(targets, key=lambda k: (rows[k]["ratio_to_target"], -breakeven[k]))
    all_pass = all(r["passes"] for r in rows.values())
    return {
        "components": rows,
        "all_pass": all_pass,
        "limiting_component": worst if not all_pass else None,
        "worst_ratio_component": worst,
        "implied_lambda_at_targets": budget.implied_lambda,
        "lambda_at_least": budget.implied_lambda if all_pass else None,
        "single_component_breakeven": dict(breakeven),
    }
