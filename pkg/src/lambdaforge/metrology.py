"""Monte Carlo logical-error estimates, suppression-factor fits and thresholds.

``P_l`` is always the failure probability of one memory experiment of the
stated number of rounds (default: ``d = 2n + 1`` rounds), not a per-round
rate.  Shots are processed in fixed chunks of :data:`CHUNK` consecutive
shot indices; every shot draws from its own counter-derived stream, so the
failure count does not depend on how chunks are scheduled.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable, Sequence

import numpy as np

from .codes import CodeKind, build_code
from .decoder import Decoder, build_decoding_graph
from .errors import ContractError, DomainError, InsufficientStatisticsError
from .noise_sim import Circuit, NoiseParams, derive_seed, shot_seed

CHUNK = 4096
Z95 = 1.959963984540054
NORMALIZATION = "per memory experiment of `rounds` syndrome rounds plus final readout"

Progress = Callable[[int, int], None]


def wilson_interval(failures: int, shots: int, z: float = Z95) -> tuple[float, float]:
    if shots <= 0:
        raise DomainError("shots must be positive")
    p = failures / shots
    denom = 1 + z * z / shots
    centre = (p + z * z / (2 * shots)) / denom
    half = z * math.sqrt(p * (1 - p) / shots + z * z / (4 * shots * shots)) / denom
    # clamp so float rounding never leaves p_hat outside its own interval
    return max(0.0, min(centre - half, p)), min(1.0, max(centre + half, p))


@dataclass
class MonteCarloEstimate:
    code: str
    order_n: int
    rounds: int
    params: NoiseParams
    shots: int
    failures: int
    seed: int | None = None
    p_hat: float = field(init=False)
    ci_low: float = field(init=False)
    ci_high: float = field(init=False)

    def __post_init__(self):
        if not 0 <= self.failures <= self.shots:
            raise ContractError("failures must lie in [0, shots]")
        self.p_hat = self.failures / self.shots
        self.ci_low, self.ci_high = wilson_interval(self.failures, self.shots)

    def to_row(self) -> dict:
        p = self.params
        return {
            "code": self.code,
            "n": self.order_n,
            "eps": "" if p.eps is None else repr(p.eps),
            "eps1": repr(p.eps1),
            "eps2": repr(p.eps2),
            "epsm": repr(p.epsm),
            "data_flip": repr(p.data_flip),
            "rounds": self.rounds,
            "shots": self.shots,
            "failures": self.failures,
            "p_hat": repr(self.p_hat),
            "ci_low": repr(self.ci_low),
            "ci_high": repr(self.ci_high),
        }


CSV_COLUMNS = ["code", "n", "eps", "eps1", "eps2", "epsm", "data_flip", "rounds",
               "shots", "failures", "p_hat", "ci_low", "ci_high"]


@lru_cache(maxsize=32)
def _pipeline(kind: str, order_n: int, rounds: int, noise: NoiseParams, weighted: bool,
              basis: str) -> tuple[Circuit, Decoder]:
    code = build_code(kind, order_n)
    circuit = Circuit(code, rounds, noise)
    graph = build_decoding_graph(code, rounds, noise, weighted=weighted)
    return circuit, Decoder(graph, basis)


def count_failures(kind: str, order_n: int, rounds: int, noise: NoiseParams, weighted: bool,
                   basis: str, master_seed: int, start: int, stop: int) -> int:
    """Logical failures among shots ``start .. stop-1`` of a run."""
    circuit, decoder = _pipeline(kind, order_n, rounds, noise, weighted, basis)
    if noise.is_noiseless:
        return 0
    seeds = [shot_seed(master_seed, i) for i in range(start, stop)]
    batch = circuit.run_seeded(seeds)
    return int(decoder.failures(batch.detection_events, batch.residual_x, batch.residual_z).sum())


def _run_chunks(tasks: list[tuple], threads: int, progress: Progress | None,
                total: int) -> list[int]:
    """Run ``count_failures`` tasks; results come back in task order."""
    done = 0
    results: list[int] = []
    if threads <= 1 or len(tasks) <= 1:
        for t in tasks:
            results.append(count_failures(*t))
            done += t[-1] - t[-2]
            if progress:
                progress(done, total)
        return results
    with ProcessPoolExecutor(max_workers=threads) as pool:
        for t, r in zip(tasks, pool.map(count_failures, *zip(*tasks))):
            results.append(r)
            done += t[-1] - t[-2]
            if progress:
                progress(done, total)
    return results


def default_threads() -> int:
    return os.cpu_count() or 1


def estimate_pl(kind: CodeKind | str, order_n: int, noise: NoiseParams, rounds: int | None = None,
                shots: int = 10_000, master_seed: int = 0, *, weighted: bool = False,
                basis: str = "Z", threads: int = 1,
                progress: Progress | None = None) -> MonteCarloEstimate:
    """Estimate the logical failure probability of a memory experiment."""
    kind = CodeKind(kind).value
    if shots < 1:
        raise DomainError("shots must be >= 1")
    rounds = 2 * order_n + 1 if rounds is None else rounds
    tasks = [
        (kind, order_n, rounds, noise, weighted, basis, master_seed, s, min(shots, s + CHUNK))
        for s in range(0, shots, CHUNK)
    ]
    failures = sum(_run_chunks(tasks, threads, progress, shots))
    return MonteCarloEstimate(kind, order_n, rounds, noise, shots, failures, master_seed)


@dataclass
class LambdaFit:
    lambda_: float
    eps_t: float | None
    slope: float
    intercept: float
    log_residuals: list[float]
    r_squared: float
    inputs: list[MonteCarloEstimate]
    weighted: bool = True

    @property
    def eps(self) -> float | None:
        return self.inputs[0].params.eps if self.inputs else None

    def to_dict(self) -> dict:
        return {
            "lambda": self.lambda_,
            "eps_t": self.eps_t if self.eps_t is not None else "not-applicable",
            "eps": self.eps,
            "slope": self.slope,
            "intercept": self.intercept,
            "log_residuals": self.log_residuals,
            "r_squared": self.r_squared,
            "weighted": self.weighted,
            "model": "log P_l = intercept - (n + 1) * log(lambda)",
            "normalization": NORMALIZATION,
            "inputs": [e.to_row() for e in self.inputs],
        }


def fit_suppression(orders: Sequence[int], p_values: Sequence[float],
                    variances: Sequence[float] | None = None) -> tuple[float, float, np.ndarray, float]:
    """Least squares of ``log p`` against ``n + 1``.

    Returns ``(slope, intercept, residuals, r_squared)``; ``variances`` are
    the variances of ``log p`` and set inverse-variance weights.
    """
    x = np.asarray(orders, dtype=float) + 1.0
    y = np.log(np.asarray(p_values, dtype=float))
    w = np.ones_like(x) if variances is None else 1.0 / np.asarray(variances, dtype=float)
    a = np.column_stack([np.ones_like(x), x])
    sw = np.sqrt(w)
    coef, *_ = np.linalg.lstsq(a * sw[:, None], y * sw, rcond=None)
    intercept, slope = float(coef[0]), float(coef[1])
    resid = y - (intercept + slope * x)
    ybar = np.sum(w * y) / np.sum(w)
    ss_tot = float(np.sum(w * (y - ybar) ** 2))
    ss_res = float(np.sum(w * resid ** 2))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    if ss_res <= 1e-24 * max(1.0, ss_tot):
        r2 = 1.0
    return slope, intercept, resid, r2


def fit_lambda(estimates: Sequence[MonteCarloEstimate], weighted: bool = True) -> LambdaFit:
    """Fit ``P_l = A * Lambda**-(n+1)`` across code orders at fixed noise."""
    estimates = sorted(estimates, key=lambda e: e.order_n)
    if len({e.order_n for e in estimates}) < 2:
        raise ContractError("a suppression fit needs at least two distinct orders")
    if len({e.params for e in estimates}) != 1:
        raise ContractError("all estimates must share the same noise parameters")
    zero = [e.order_n for e in estimates if e.failures == 0]
    if zero:
        raise InsufficientStatisticsError(
            f"zero failures observed at n={zero}; raise the shot count to resolve P_l there"
        )
    p = [e.p_hat for e in estimates]
    var = [(1 - e.p_hat) / (e.shots * e.p_hat) for e in estimates] if weighted else None
    if var is not None and any(v == 0 for v in var):
        var = None
    slope, intercept, resid, r2 = fit_suppression([e.order_n for e in estimates], p, var)
    lam = math.exp(-slope)
    eps = estimates[0].params.eps
    return LambdaFit(lam, None if eps is None else lam * eps, slope, intercept,
                     [float(r) for r in resid], r2, list(estimates), weighted)


@dataclass
class ThresholdResult:
    found: bool
    eps_t: float | None
    bracket: tuple[float, float] | None
    direction: str
    orders: tuple[int, int]
    estimates: list[MonteCarloEstimate] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "found": self.found,
            "eps_t": self.eps_t,
            "bracket": list(self.bracket) if self.bracket else None,
            "direction": self.direction,
            "orders": list(self.orders),
            "estimates": [e.to_row() for e in self.estimates],
        }


def crossing_point(eps: Sequence[float], p_small: Sequence[float], p_large: Sequence[float],
                   floor: float = 1e-300) -> tuple[float | None, tuple[float, float] | None, str]:
    """Where the larger code stops beating the smaller one.

    Works on ``D = log p_large - log p_small`` over ascending ``eps`` and
    interpolates linearly in ``log eps`` at the first change from ``D < 0``
    to ``D >= 0``.  Returns ``(eps_t, bracket, direction)``.
    """
    order = np.argsort(eps)
    e = np.asarray(eps, dtype=float)[order]
    a = np.maximum(np.asarray(p_small, dtype=float)[order], floor)
    b = np.maximum(np.asarray(p_large, dtype=float)[order], floor)
    d = np.log(b) - np.log(a)
    for i in range(len(e) - 1):
        if d[i] < 0 <= d[i + 1]:
            le0, le1 = math.log(e[i]), math.log(e[i + 1])
            t = -d[i] / (d[i + 1] - d[i])
            return math.exp(le0 + t * (le1 - le0)), (float(e[i]), float(e[i + 1])), "crossing"
    if len(e) and d[0] >= 0 and np.all(d >= 0):
        return None, None, "larger code never better in range (above threshold)"
    if np.all(d < 0):
        return None, None, "larger code always better in range (below threshold)"
    return None, None, "no negative-to-positive crossing in range"


def noise_for(eps: float, mode: str = "circuit") -> NoiseParams:
    if mode == "circuit":
        return NoiseParams.uniform(eps)
    if mode == "code_capacity":
        return NoiseParams.code_capacity(eps)
    raise DomainError(f"unknown noise mode {mode!r}")


def run_sweep(kind: CodeKind | str, orders: Sequence[int], noises: Sequence[NoiseParams],
              shots: int, master_seed: int, rounds: int | None = None, *,
              weighted: bool = False, threads: int = 1,
              checkpoint: str | os.PathLike | None = None,
              progress: Progress | None = None) -> list[MonteCarloEstimate]:
    """Estimate ``P_l`` on every (noise, order) cell.

    Each cell's master seed is derived from ``master_seed`` and the cell's
    identity, so cells can run in any order.  With ``checkpoint`` set, each
    finished cell is appended to that JSON-lines file and reused on rerun.
    """
    kind = CodeKind(kind).value
    done: dict[str, MonteCarloEstimate] = {}
    if checkpoint and os.path.exists(checkpoint):
        with open(checkpoint) as fh:
            for line in fh:
                rec = json.loads(line)
                est = MonteCarloEstimate(rec["code"], rec["order_n"], rec["rounds"],
                                         NoiseParams(**rec["params"]), rec["shots"],
                                         rec["failures"], rec["seed"])
                done[rec["key"]] = est

    cells = [(noise, n) for noise in noises for n in orders]
    total = shots * len(cells)
    finished = 0
    out = []
    for noise, n in cells:
        r = 2 * n + 1 if rounds is None else rounds
        seed = derive_seed(master_seed, kind, n, r, tuple(sorted(noise.to_dict().items())))
        key = f"{kind}|{n}|{r}|{seed}|{shots}"
        if key in done:
            est = done[key]
        else:
            def cell_progress(k: int, _t: int, base: int = finished) -> None:
                if progress:
                    progress(base + k, total)
            est = estimate_pl(kind, n, noise, r, shots, seed, weighted=weighted,
                              threads=threads, progress=cell_progress)
            if checkpoint:
                with open(checkpoint, "a") as fh:
                    fh.write(json.dumps({
                        "key": key, "code": kind, "order_n": n, "rounds": r,
                        "params": noise.to_dict(), "shots": shots,
                        "failures": est.failures, "seed": seed,
                    }) + "\n")
        finished += shots
        if progress:
            progress(finished, total)
        out.append(est)
    return out


def find_threshold(kind: CodeKind | str, orders: Sequence[int], eps_grid: Sequence[float],
                   rounds: int | None = None, shots: int = 10_000, seed: int = 0, *,
                   mode: str = "circuit", weighted: bool = False, threads: int = 1,
                   progress: Progress | None = None) -> ThresholdResult:
    """Locate the crossing of the two smallest orders' ``P_l(eps)`` curves."""
    orders = sorted(set(orders))
    if len(orders) < 2:
        raise DomainError("need at least two orders")
    if len(eps_grid) < 3:
        raise DomainError("need at least three grid points")
    eps_grid = sorted(eps_grid)
    n1, n2 = orders[0], orders[1]
    ests = run_sweep(kind, [n1, n2], [noise_for(e, mode) for e in eps_grid], shots, seed,
                     rounds, weighted=weighted, threads=threads, progress=progress)
    p1 = [e.p_hat for e in ests if e.order_n == n1]
    p2 = [e.p_hat for e in ests if e.order_n == n2]
    eps_t, bracket, direction = crossing_point(eps_grid, p1, p2, floor=0.5 / shots)
    return ThresholdResult(eps_t is not None, eps_t, bracket, direction, (n1, n2), ests)


def lambda_x_experiment(noise: NoiseParams, shots: int, seed: int, *,
                        threads: int = 1) -> LambdaFit:
    """Two-point bit-flip suppression factor from 5- and 9-qubit repetition chains."""
    ests = [
        estimate_pl(CodeKind.REPETITION, n, noise, None, shots,
                    derive_seed(seed, "lambda_x", n), threads=threads)
        for n in (1, 2)
    ]
    return fit_lambda(ests)


def write_sweep_csv(estimates: Iterable[MonteCarloEstimate], fh: io.TextIOBase,
                    meta: dict | None = None) -> None:
    """CSV with optional ``# key: value`` metadata lines before the header."""
    for k, v in (meta or {}).items():
        fh.write(f"# {k}: {json.dumps(v, sort_keys=True)}\n")
    w = csv.DictWriter(fh, fieldnames=CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for e in estimates:
        w.writerow(e.to_row())


def read_sweep_csv(fh: io.TextIOBase) -> list[MonteCarloEstimate]:
    lines = [ln for ln in fh if not ln.startswith("#")]
    out = []
    for row in csv.DictReader(lines):
        eps = row.get("eps", "")
        data_flip = float(row.get("data_flip") or 0.0)
        if eps and not data_flip:
            params = NoiseParams(uniform_eps=float(eps))
        else:
            params = NoiseParams(float(row["eps1"]), float(row["eps2"]), float(row["epsm"]),
                                 data_flip=data_flip)
        out.append(MonteCarloEstimate(row["code"], int(row["n"]), int(row["rounds"]), params,
                                      int(row["shots"]), int(row["failures"])))
    return out
