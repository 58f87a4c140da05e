"""Executable property suites: the convergence guarantees as pass/fail checks.

Each suite builds seeded instances, measures the relevant inequality with an
explicit tolerance, and reports the worst margin observed (margin >= 0 means
the property held everywhere). The CLI `verify` subcommand is a thin wrapper
over `run_suites`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bench import reference_optimum
from .numerics import Rng, random_orthogonal
from .objective import CompositeObjective
from .problems import (
    make_2d,
    make_lasso,
    make_logistic,
    make_logsumexp,
    make_quadratic,
    perturb_2d,
)
from .solvers import SolverState, accelerated_step, classic_subgradient_step, subgradient_step


@dataclass(frozen=True)
class PropertyResult:
    name: str
    passed: bool
    margin: float
    detail: str


# ---------------------------------------------------------------------------
# independent minimal-norm-subgradient oracles (numeric search, no closed form)


def subgradient_by_grid(obj: CompositeObjective, x, step: float = 1e-3) -> np.ndarray:
    """Search the subdifferential parametrization on a uniform grid.

    Valid subgradients are grad_g(x) + gamma*nu with nu_i = sign(x_i) on the
    support and nu_i in [-1, 1] elsewhere; the squared norm decouples per
    coordinate, so each free coordinate is minimized over its own grid.
    """
    x = np.asarray(x, dtype=np.float64)
    grad = obj.smooth_grad(x)
    out = grad + obj.gamma * np.sign(x)
    grid = np.arange(-1.0, 1.0 + step / 2.0, step)
    for i in np.flatnonzero(x == 0.0):
        cand = grad[i] + obj.gamma * grid
        out[i] = cand[int(np.argmin(cand * cand))]
    return out


def subgradient_by_ternary(obj: CompositeObjective, x, width: float = 1e-12) -> np.ndarray:
    """Refine each free coordinate by ternary search over nu in [-1, 1]."""
    x = np.asarray(x, dtype=np.float64)
    grad = obj.smooth_grad(x)
    out = grad + obj.gamma * np.sign(x)
    for i in np.flatnonzero(x == 0.0):

        def phi(nu, _g=grad[i]):
            val = _g + obj.gamma * nu
            return val * val

        lo, hi = -1.0, 1.0
        while hi - lo > width:
            m1 = lo + (hi - lo) / 3.0
            m2 = hi - (hi - lo) / 3.0
            if phi(m1) < phi(m2):
                hi = m2
            else:
                lo = m1
        out[i] = grad[i] + obj.gamma * 0.5 * (lo + hi)
    return out


def _random_small_quadratic(rng: Rng, n: int) -> CompositeObjective:
    eigs = rng.uniforms(n, 0.5, 5.0)
    q = random_orthogonal(n, rng)
    m = (q * eigs) @ q.T
    m = 0.5 * (m + m.T)
    b = rng.gaussians(n, 0.0, 2.0)
    gamma = rng.uniform(0.25, 1.5)
    return CompositeObjective(
        eval_g=lambda x, _m=m, _b=b: 0.5 * float(x @ (_m @ x)) + float(_b @ x),
        grad_g=lambda x, _m=m, _b=b: _m @ x + _b,
        gamma=gamma,
        lipschitz_L=float(np.max(eigs)),
        dim=n,
        mu=float(np.min(eigs)),
    )


def suite_subgrad_oracle(seed: int = 0, points: int = 200) -> list[PropertyResult]:
    """Closed-form minimal-norm subgradient vs grid and ternary searches."""
    rng = Rng(seed + 101)
    worst_grid = np.inf
    worst_ternary = np.inf
    for j in range(points):
        n = 1 + j % 3
        obj = _random_small_quadratic(rng, n)
        x = rng.gaussians(n)
        zero = rng.uniforms(n) < 0.4
        x = np.where(zero, 0.0, x)
        impl = obj.min_norm_subgradient(x)
        d_grid = float(np.linalg.norm(impl - subgradient_by_grid(obj, x)))
        d_tern = float(np.linalg.norm(impl - subgradient_by_ternary(obj, x)))
        worst_grid = min(worst_grid, 2e-3 - d_grid)
        worst_ternary = min(worst_ternary, 1e-8 - d_tern)
    return [
        PropertyResult(
            "subgrad-oracle/grid",
            worst_grid >= 0.0,
            worst_grid,
            f"{points} points, tolerance 2e-3 in norm",
        ),
        PropertyResult(
            "subgrad-oracle/ternary",
            worst_ternary >= 0.0,
            worst_ternary,
            f"{points} points, tolerance 1e-8 in norm",
        ),
    ]


def suite_pl(seed: int = 0, instances: int = 5, samples_per: int = 200) -> list[PropertyResult]:
    """Gap bounded by |min-norm subgradient|^2 / (2 mu) on strongly convex instances."""
    worst = np.inf
    total = 0
    for i in range(instances):
        rng = Rng(seed + 201 + i)
        prob = make_quadratic(30, rng, eig_range=(1.0, 10.0), pin_extremes=True)
        obj = prob.objective
        ref = reference_optimum(prob)
        if not ref.certified:
            return [PropertyResult("pl", False, -np.inf, "reference failed to certify")]
        for _ in range(samples_per):
            x = rng.gaussians(obj.dim, 0.0, 3.0)
            lhs = obj.value(x) - ref.value
            rhs = float(np.linalg.norm(obj.min_norm_subgradient(x)) ** 2) / (2.0 * obj.mu)
            worst = min(worst, rhs + 1e-9 - lhs)
            total += 1
    return [
        PropertyResult("pl", worst >= 0.0, worst, f"{total} samples, absolute slack 1e-9")
    ]


def _limit_point(obj: CompositeObjective, x: np.ndarray, h: float, cap: int = 20_000):
    """Continue the subgradient iteration to its floating-point limit.

    In float64 the map either reaches an exact fixed point or settles into a
    tiny cycle (period 2 in practice); iteration stops as soon as the state
    two steps back reappears, and the cycle point of least objective value is
    returned.
    """
    prev = x.copy()
    curr = subgradient_step(obj, prev, h)
    for _ in range(cap):
        nxt = subgradient_step(obj, curr, h)
        if np.array_equal(nxt, prev):
            break
        prev, curr = curr, nxt
    return prev if obj.value(prev) <= obj.value(curr) else curr


def _quadratic_gaps(prob, iterates: list[np.ndarray], x_star: np.ndarray) -> np.ndarray:
    """Gaps f(x_k) - f(x_star) without catastrophic cancellation.

    Once an iterate shares the exact sign pattern of the limit point, the gap
    equals d'Md/2 + (M x* + b + gamma*sign(x*))'d with d = x_k - x*, a sum of
    terms that vanish with d, so it stays accurate far below the float64
    resolution of f itself. Sign-mismatched (early) iterates fall back to the
    direct difference, whose noise is negligible at those magnitudes.
    """
    obj = prob.objective
    m = prob.data["matrix"]
    b = prob.data["offset"]
    s = np.sign(x_star)
    residual = m @ x_star + b + obj.gamma * s
    f_star = obj.value(x_star)
    gaps = np.empty(len(iterates))
    for j, x in enumerate(iterates):
        if np.array_equal(np.sign(x), s):
            d = x - x_star
            gaps[j] = 0.5 * float(d @ (m @ d)) + float(residual @ d)
        else:
            gaps[j] = obj.value(x) - f_star
    return gaps


def suite_rate(
    seed: int = 0, instances: int = 20, n: int = 50, iters: int = 500
) -> list[PropertyResult]:
    """Linear decay of the gap at rate (1 + mu/L)^-1 for the crossing subgradient method.

    The optimum is the trajectory's own floating-point limit and late gaps are
    measured by the shifted quadratic form: beyond a few hundred iterations
    the bound drops below the float64 resolution of f, where only a
    cancellation-free measurement remains meaningful.
    """
    worst = np.inf
    for i in range(instances):
        rng = Rng(seed + 301 + i)
        prob = make_quadratic(n, rng, eig_range=(1.0, 10.0), pin_extremes=True)
        obj = prob.objective
        h = 1.0 / obj.lipschitz_L
        kappa = 1.0 / (1.0 + obj.mu / obj.lipschitz_L)
        x = prob.x0.copy()
        iterates = [x.copy()]
        for _ in range(iters):
            x = subgradient_step(obj, x, h)
            iterates.append(x)
        x_star = _limit_point(obj, x, h)
        gaps = _quadratic_gaps(prob, iterates, x_star)
        bound = gaps[0] * kappa ** np.arange(iters + 1) * (1.0 + 1e-9)
        worst = min(worst, float(np.min(bound - gaps)))
    return [
        PropertyResult(
            "rate",
            worst >= 0.0,
            worst,
            f"{instances} quadratics n={n}, mu=1, L=10, k <= {iters}, relative slack 1e-9",
        )
    ]


def _dominance_instances(seed: int, count: int):
    per = max(1, count // 4)
    for i in range(count):
        rng = Rng(seed + 401 + i)
        family = i // per if i // per < 4 else i % 4
        if family == 0:
            yield make_quadratic(60, rng)
        elif family == 1:
            yield make_lasso(80, 100, rng)
        elif family == 2:
            yield make_logistic(150, 40, rng)
        else:
            yield make_logsumexp(120, 50, rng)


def suite_dominance(seed: int = 0, instances: int = 100, iters: int = 300) -> list[PropertyResult]:
    """Each accelerated iteration must match or beat its own plain-subgradient candidate."""
    worst = np.inf
    checked = 0
    for prob in _dominance_instances(seed, instances):
        obj = prob.objective
        h = 1.0 / obj.lipschitz_L
        state = SolverState.initial(obj, prob.x0)
        for _ in range(iters):
            state = accelerated_step(obj, state, h)
            f_q = obj.value(state.q)
            slack = 1e-12 * (1.0 + abs(f_q))
            worst = min(worst, f_q + slack - state.f_x)
            checked += 1
    return [
        PropertyResult(
            "dominance",
            worst >= 0.0,
            worst,
            f"{instances} instances x {iters} iterations ({checked} checks), slack 1e-12*(1+|f|)",
        )
    ]


def _oscillation_objective() -> CompositeObjective:
    return CompositeObjective(
        eval_g=lambda x: 0.005 * float(x[0] * x[0]),
        grad_g=lambda x: 0.01 * x,
        gamma=1.0,
        lipschitz_L=0.01,
        dim=1,
        mu=0.01,
    )


def suite_anti_oscillation() -> list[PropertyResult]:
    """Crossing control parks the 1-D iterate exactly at 0; the naive constant-step
    subgradient method keeps oscillating at a distance."""
    obj = _oscillation_objective()
    h = 1.0 / obj.lipschitz_L
    x = np.array([0.37])
    hit: int | None = None
    stayed = True
    for k in range(1, 21):
        x = subgradient_step(obj, x, h)
        if x[0] == 0.0 and hit is None:
            hit = k
        elif hit is not None and x[0] != 0.0:
            stayed = False
    ok_alg1 = hit is not None and hit <= 5 and stayed
    res1 = PropertyResult(
        "anti-oscillation/crossing",
        ok_alg1,
        float(5 - (hit if hit is not None else 999)),
        f"exact zero reached at iteration {hit}, stayed: {stayed}",
    )

    x = np.array([0.37])
    closest = np.inf
    for k in range(1, 10_001):
        x = classic_subgradient_step(obj, x, k, scale=h, exponent=0.0)
        closest = min(closest, abs(float(x[0])))
    res2 = PropertyResult(
        "anti-oscillation/classic",
        closest > h / 4.0,
        float(closest - h / 4.0),
        f"min |x_k| = {closest:.6g} over 10^4 iterations vs h/4 = {h / 4.0}",
    )
    return [res1, res2]


def _central_fd(obj: CompositeObjective, x: np.ndarray, eps: float = 1e-6) -> np.ndarray:
    g = np.empty(obj.dim)
    for i in range(obj.dim):
        e = np.zeros(obj.dim)
        e[i] = eps
        g[i] = (obj.smooth_value(x + e) - obj.smooth_value(x - e)) / (2.0 * eps)
    return g


def suite_gradcheck(seed: int = 0, points: int = 10) -> list[PropertyResult]:
    """Analytic gradients of every problem family vs central finite differences."""
    rng = Rng(seed + 501)
    builders = {
        "quadratic": lambda: make_quadratic(40, rng),
        "lasso": lambda: make_lasso(60, 80, rng),
        "logistic": lambda: make_logistic(100, 30, rng),
        "logsumexp": lambda: make_logsumexp(80, 40, rng),
        "toy2d": lambda: make_2d(),
        "toy2d-perturbed": lambda: perturb_2d(rng),
    }
    results = []
    for name, build in builders.items():
        prob = build()
        obj = prob.objective
        worst = np.inf
        for _ in range(points):
            x = rng.gaussians(obj.dim, 0.0, 2.0)
            grad = obj.smooth_grad(x)
            fd = _central_fd(obj, x)
            rel = float(np.linalg.norm(fd - grad) / max(1.0, np.linalg.norm(grad)))
            worst = min(worst, 1e-5 - rel)
        results.append(
            PropertyResult(
                f"gradcheck/{name}",
                worst >= 0.0,
                worst,
                f"{points} points, central differences eps=1e-6, relative tolerance 1e-5",
            )
        )
    return results


SUITES = {
    "subgrad-oracle": suite_subgrad_oracle,
    "pl": suite_pl,
    "rate": suite_rate,
    "dominance": suite_dominance,
    "anti-oscillation": lambda seed=0: suite_anti_oscillation(),
    "gradcheck": suite_gradcheck,
}


def run_suites(names, seed: int = 0) -> list[PropertyResult]:
    results = []
    for name in names:
        if name not in SUITES:
            raise ValueError(f"unknown suite {name!r}, expected one of {sorted(SUITES)}")
        results.extend(SUITES[name](seed=seed))
    return results
