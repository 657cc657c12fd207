"""Closed-form error-rate, perturbation and adiabatic-time estimates, and the resource search."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass


class RegimeError(ValueError):
    pass


class InfeasibleError(ValueError):
    pass


@dataclass(frozen=True)
class RateQuery:
    d: int
    m: float
    p: float
    cbJ: float

    def __post_init__(self):
        if self.d < 3:
            raise ValueError("distance must be at least 3")
        if self.m < 0 or not 0 <= self.p <= 1 or self.cbJ < 0:
            raise ValueError("m, p and cbJ must be non-negative (p at most 1)")

    @property
    def d_e(self) -> float:
        return (self.d + 1) / 2


@dataclass(frozen=True)
class ResourceQuery:
    M: float
    delta: float
    p: float
    cbJ: float
    m_grid: tuple[float, ...] = (1e8,)

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError("delta must lie in (0, 1)")
        if self.M < 1:
            raise ValueError("M must be at least 1")
        if not self.m_grid:
            raise ValueError("m grid is empty")


@dataclass(frozen=True)
class PerturbationParams:
    J: float
    h_max: float
    J2_max: float
    d: int

    def __post_init__(self):
        if self.J <= 0 or self.h_max < 0 or self.J2_max < 0:
            raise ValueError("J must be positive and perturbations non-negative")


@dataclass(frozen=True)
class OrderEstimate:
    """prefactor * p**p_power * exp(-gap_power * cbJ); an order of magnitude, not a probability."""

    prefactor: float
    p_power: int
    gap_power: float
    p: float
    cbJ: float

    @property
    def value(self) -> float:
        if self.p == 0:
            return 0.0  # every term needs at least one faulty measurement
        return self.prefactor * self.p**self.p_power * math.exp(-self.gap_power * self.cbJ)


# -- logical error rate ---------------------------------------------------------

def _log_prefactor(d: int) -> float:
    d_e = (d + 1) / 2
    return math.log(d) + math.lgamma(d + 1) - math.lgamma(d_e) - math.lgamma(d_e + 1)


def rate_base(q: RateQuery) -> float:
    return q.m * math.exp(-2 * q.cbJ) + 7 * q.p


def logical_rate(q: RateQuery) -> float:
    """d * d!/((d_e - 1)! d_e!) * (m exp(-2 cbJ) + 7p)^{d_e}, evaluated in log space."""
    base = rate_base(q)
    if base == 0:
        return 0.0
    if base >= 1:
        raise RegimeError(f"m e^(-2cbJ) + 7p = {base:.3g} is not below 1")
    return math.exp(_log_prefactor(q.d) + q.d_e * math.log(base))


def rate_grid(
    ds=(7, 11, 15, 19), cbJs=(8.0, 12.0), ms=None, p: float = 1e-3
) -> list[tuple[int, float, float, float]]:
    """Rows (d, cbJ, m, P_L^m) over the grid; points outside the formula's regime are skipped."""
    ms = ms if ms is not None else [10.0**e for e in range(0, 13)]
    rows = []
    for cbJ in cbJs:
        for d in ds:
            for m in ms:
                try:
                    rows.append((d, cbJ, m, logical_rate(RateQuery(d, m, p, cbJ))))
                except RegimeError:
                    continue
    return rows


def rate_rows_to_csv(rows, header_lines: list[str] | None = None) -> str:
    buf = io.StringIO()
    for line in header_lines or []:
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["d", "cbJ", "m", "P_L"])
    for d, cbJ, m, pl in rows:
        w.writerow([d, f"{cbJ:g}", f"{m:g}", f"{pl:.6e}"])
    return buf.getvalue()


# -- order-of-magnitude forms -------------------------------------------------------

def movement_misdetection(d: int, p: float, cbJ: float) -> dict[str, OrderEstimate]:
    """Wrong-result (P_L) and undecided (P_U) forms for moving a hole of perimeter d."""
    if d % 8:
        raise ValueError("movement estimates need d to be a multiple of 8")
    k = d // 16
    return {
        "P_L": OrderEstimate(d / 4, k + 1, 4.0, p, cbJ),
        "P_U": OrderEstimate(d / 4, k, 4.0, p, cbJ),
    }


def injection_error(d: int, p: float, cbJ: float) -> OrderEstimate:
    if d % 4:
        raise ValueError("injection estimate needs d to be a multiple of 4")
    return OrderEstimate(1.0, d // 8 + 1, 4.0, p, cbJ)


def perturbation_splitting(pp: PerturbationParams) -> float:
    """J exp(-v d / 2) with v = min(ln(J/h_max), ln(J/J2_max))."""
    logs = [math.log(pp.J / x) if x > 0 else math.inf for x in (pp.h_max, pp.J2_max)]
    v = min(logs)
    if v <= 0:
        raise ValueError("perturbation is not weak: v <= 0")
    return 0.0 if math.isinf(v) else pp.J * math.exp(-v * pp.d / 2)


def adiabatic_budget(gamma: float, order: int, xi: float, delta_min: float) -> dict[str, float]:
    """T_q = (e/gamma) N xi^2 / Delta_min^3 and the bound (N+1)^(gamma+1) e^(-N)."""
    if min(gamma, order, xi, delta_min) <= 0:
        raise ValueError("all inputs must be positive")
    return {
        "T_q": math.e / gamma * order * xi**2 / delta_min**3,
        "delta_bound": (order + 1) ** (gamma + 1) * math.exp(-order),
    }


# -- resources ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ResourceEstimate:
    d: int
    m: float
    n_tot: int
    P_L: float
    budget: float


def estimate_resources(rq: ResourceQuery, d_range=range(3, 42, 2)) -> ResourceEstimate:
    """Smallest odd d with P_L^m <= m delta / (d M) for some m on the grid.

    Among feasible m the one with the largest slack is reported.
    """
    for d in d_range:
        best = None
        for m in rq.m_grid:
            try:
                pl = logical_rate(RateQuery(d, m, rq.p, rq.cbJ))
            except RegimeError:
                continue
            budget = m * rq.delta / (d * rq.M)
            if pl <= budget and (best is None or budget / max(pl, 1e-300) > best[2] / max(best[1], 1e-300)):
                best = (m, pl, budget)
        if best is not None:
            return ResourceEstimate(d, best[0], (2 * d - 1) ** 2, best[1], best[2])
    raise InfeasibleError("no distance on the search range meets the budget")
