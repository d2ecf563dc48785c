"""
SBRO-FL Checks - invariant suite behind the `check` command
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Callable

import numpy as np
from loguru import logger

from src.config import Contribution, ExperimentConfig, Method
from src.records import RoundRecord, render_csv
from src.scenario import Scenario, build_scenario
from src.round_agent import RoundAgent
from src.seeding import rng_for
from src.tools.model_tool import Dataset, ModelParams, init_model, loss_and_gradient
from src.tools.reputation_tool import (
    LossSign,
    ProspectParams,
    ReputationState,
    UpdateParams,
    reputation_score,
    update_reputations,
)
from src.tools.selection_tool import SelectionProblem, brute_force_selection, solve_selection
from src.tools.shapley_tool import CoalitionContext, TableGame, exact_shapley, mc_shapley

TOLERANCE = 1e-9
FD_STEP = 1e-5


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _random_problem(rng: np.random.Generator, n: int, seed: int) -> SelectionProblem:
    weights = rng.random(n)
    weights[rng.random(n) < 0.2] = 0.0
    # Integer-valued bids make exact-budget ties common.
    bids = rng.integers(1, 15, size=n).astype(np.float64)
    if rng.random() < 0.5:
        bids = bids + rng.random(n)
    budget = float(rng.uniform(0.5, 0.6) * bids.sum())
    return SelectionProblem(weights, bids, budget, seed)


def check_solver(seed: int, problems: int = 500, max_clients: int = 20) -> CheckResult:
    """Branch and bound against the brute-force oracle."""
    rng = rng_for(seed, "check", "solver")
    for k in range(problems):
        p = _random_problem(rng, int(rng.integers(1, max_clients + 1)), k)
        exact, oracle = solve_selection(p), brute_force_selection(p)
        if exact.objective != oracle.objective or exact.selected != oracle.selected:
            return CheckResult("solver_exactness", False, f"problem {k}: {exact} != {oracle}")
    return CheckResult("solver_exactness", True, f"{problems} problems")


def random_context(rng: np.random.Generator, m: int, duplicate_first: bool = False) -> CoalitionContext:
    """A coalition game over small random models on random validation data."""
    shape = (4, 3)
    validation = Dataset(rng.standard_normal((120, 4)), rng.integers(0, 3, size=120), 3)
    updates = [init_model(shape, int(rng.integers(2**31))) for _ in range(m)]
    if duplicate_first and m >= 2:
        updates[1] = ModelParams(updates[0].values.copy(), shape)
    return CoalitionContext(tuple(range(10, 10 + m)), updates, validation, empty_value=float(rng.random()))


def check_shapley_axioms(seed: int, contexts: int = 100, max_members: int = 8) -> CheckResult:
    """Efficiency, symmetry, dummy and the 2^m evaluation count."""
    rng = rng_for(seed, "check", "shapley")
    for k in range(contexts):
        m = int(rng.integers(1, max_members + 1))
        ctx = random_context(rng, m, duplicate_first=True)
        result = exact_shapley(ctx)
        if ctx.evaluations != 1 << m:
            return CheckResult("shapley_axioms", False, f"context {k}: {ctx.evaluations} evaluations for m={m}")
        gap = abs(math.fsum(result.values) - (result.coalition_value - result.empty_value))
        if gap > TOLERANCE:
            return CheckResult("shapley_axioms", False, f"context {k}: efficiency gap {gap:.3e}")
        if m >= 2 and abs(result.values[0] - result.values[1]) > TOLERANCE:
            return CheckResult("shapley_axioms", False, f"context {k}: identical updates got different values")

        # Dummy: the last member never changes a coalition's value.
        others = m - 1
        table = {}
        base = rng.random(1 << others)
        for mask in range(1 << m):
            members = frozenset(i for i in range(m) if mask >> i & 1)
            table[members] = float(base[mask & ((1 << others) - 1)])
        dummy = exact_shapley(TableGame(tuple(range(m)), table)).values[-1]
        if abs(dummy) > TOLERANCE:
            return CheckResult("shapley_axioms", False, f"context {k}: dummy member got {dummy:.3e}")
    return CheckResult("shapley_axioms", True, f"{contexts} contexts")


def check_mc_consistency(seed: int, members: int = 5, permutations: int = 20_000) -> CheckResult:
    rng = rng_for(seed, "check", "mc")
    ctx = random_context(rng, members)
    exact = exact_shapley(ctx).values
    estimate = mc_shapley(ctx, permutations, seed).values
    deviation = float(np.max(np.abs(exact - estimate)))
    return CheckResult("mc_consistency", deviation <= 0.02, f"max deviation {deviation:.4f}")


def gradient_error(analytic: np.ndarray, numeric: np.ndarray) -> float:
    """Relative error ||g - n|| / ||n|| of an analytic gradient g against finite differences n."""
    return float(np.linalg.norm(analytic - numeric) / max(np.linalg.norm(numeric), 1e-12))


def check_gradient(seed: int, instances: int = 20, eps: float = FD_STEP) -> CheckResult:
    """Analytic gradients against central finite differences, relative error <= 1e-4."""
    rng = rng_for(seed, "check", "gradient")
    worst = 0.0
    for _ in range(instances):
        shape = (3, int(rng.integers(2, 5)), 3) if rng.random() < 0.5 else (3, 3)
        data = Dataset(rng.standard_normal((8, 3)), rng.integers(0, 3, size=8), 3)
        params = init_model(shape, int(rng.integers(2**31)))
        _, grad = loss_and_gradient(params, data)
        numeric = np.zeros_like(grad)
        for j in range(grad.shape[0]):
            step = np.zeros_like(grad)
            step[j] = eps
            up, _ = loss_and_gradient(ModelParams(params.values + step, shape), data)
            down, _ = loss_and_gradient(ModelParams(params.values - step, shape), data)
            numeric[j] = (up - down) / (2 * eps)
        worst = max(worst, gradient_error(grad, numeric))
    return CheckResult("gradient", worst <= 1e-4, f"worst relative error {worst:.2e}")


def check_prospect() -> CheckResult:
    p = ProspectParams()
    r_th = 0.3
    if reputation_score(r_th, r_th, p) != 0 or reputation_score(r_th + 1.0, r_th, p) != 1.0:
        return CheckResult("prospect", False, "z(R_th) != 0 or z(R_th + 1) != 1")
    grid = np.linspace(r_th - 5, r_th + 5, 1000)
    scores = np.array([reputation_score(float(r), r_th, p) for r in grid])
    if np.any(np.diff(scores) < 0):
        return CheckResult("prospect", False, "score is not monotone in R_i")
    printed = ProspectParams(loss_sign=LossSign.AS_PRINTED)
    if reputation_score(r_th - 1.0, r_th, printed) != p.gamma:
        return CheckResult("prospect", False, "as_printed loss branch is not gamma * (R_th - R_i)^beta")
    return CheckResult("prospect", True)


def check_reputation(seed: int, rounds: int = 150) -> CheckResult:
    up = UpdateParams()
    bids = np.array([10.0, 9.0, 11.0])
    state = update_reputations(ReputationState.initial(3), [0], {0: 0.1}, bids, up, 1)
    if abs(state.reputation[0] - up.omega * (1 - math.exp(-1))) > 1e-12:
        return CheckResult("reputation", False, f"single contributor reward {state.reputation[0]}")

    for k in range(4):
        state = ReputationState.initial(3)
        for t in range(k):
            state = update_reputations(state, [0], {0: -0.01}, bids, up, t)
        before = state.reputation[0]
        after = update_reputations(state, [0], {0: 0.0}, bids, up, k).reputation[0]
        if before - after != up.psi * up.rho ** k:
            return CheckResult("reputation", False, f"penalty with err={k} is {before - after}")

    rng = rng_for(seed, "check", "reputation")
    n = 8
    bids = rng.uniform(5, 15, size=n)
    state = ReputationState.initial(n)
    for t in range(rounds):
        chosen = sorted(rng.choice(n, size=int(rng.integers(0, 4)), replace=False).tolist())
        sv = {i: float(rng.normal(0, 0.05)) for i in chosen}
        new_state = update_reputations(state, chosen, sv, bids, up, t)
        changed = set(np.flatnonzero(new_state.reputation != state.reputation).tolist())
        if not changed <= set(chosen):
            return CheckResult("reputation", False, f"round {t}: unselected clients {changed - set(chosen)} changed")
        state = new_state
    return CheckResult("reputation", True)


def run_level_checks(cfg: ExperimentConfig, records: list[RoundRecord], rerun: list[RoundRecord]) -> list[CheckResult]:
    """Budget safety, reputation conservation, count bound, efficiency and determinism."""
    results = []
    over = [r.round for r in records if r.method != Method.ALL.value and r.total_cost > cfg.budget]
    results.append(CheckResult("budget_safety", not over, f"rounds over budget: {over}" if over else ""))

    if records and records[0].method == Method.SBRO.value:
        previous = np.zeros(len(records[0].reputation_snapshot))
        leaks, gaps, counts = [], [], []
        for k, r in enumerate(records):
            current = np.array(r.reputation_snapshot)
            changed = set(np.flatnonzero(current != previous).tolist())
            if not changed <= set(r.selected_ids):
                leaks.append(r.round)
            previous = current
            if r.coalition_value is not None and cfg.contribution is Contribution.EXACT:
                gaps.append(abs(math.fsum(r.sv.values()) - (r.coalition_value - r.empty_value)))
            window = records[max(0, k - 5):k]
            counts.extend(sum(i in w.selected_ids for w in window) for i in range(len(current)))
        results.append(CheckResult("reputation_conservation", not leaks, f"rounds {leaks}" if leaks else ""))
        results.append(CheckResult("count_bound", all(0 <= c <= 5 for c in counts)))
        worst = max(gaps, default=0.0)
        results.append(CheckResult("efficiency_identity", worst <= TOLERANCE, f"worst gap {worst:.2e}"))

    results.append(CheckResult("determinism", render_csv(records) == render_csv(rerun)))
    return results


def run_checks(cfg: ExperimentConfig, rounds: int = 8, scenario: Scenario | None = None) -> list[CheckResult]:
    """
    Run the whole invariant suite.

    Args:
        cfg: Configuration whose scenario the short seeded runs use
        rounds: Rounds per short run
        scenario: Prebuilt scenario (built from cfg when omitted)

    Returns:
        One CheckResult per check
    """
    seed = cfg.seed
    kernel_checks: list[Callable[[], CheckResult]] = [
        lambda: check_solver(seed),
        lambda: check_shapley_axioms(seed),
        lambda: check_mc_consistency(seed),
        lambda: check_gradient(seed),
        check_prospect,
        lambda: check_reputation(seed),
    ]
    results = [check() for check in kernel_checks]

    scenario = scenario if scenario is not None else build_scenario(cfg)
    for method in (Method.SBRO, Method.RS):
        short = replace(cfg, method=method, rounds=min(cfg.rounds, rounds))
        first = RoundAgent(short, scenario).run()
        second = RoundAgent(short, scenario).run()
        results.extend(
            replace(r, name=f"{method.value}:{r.name}") for r in run_level_checks(short, first, second)
        )

    for r in results:
        mark = "✓" if r.passed else "✗"
        logger.info(f"{mark} [Check] {r.name} {r.detail}".rstrip())
    return results
