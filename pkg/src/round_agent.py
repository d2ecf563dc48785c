"""
SBRO-FL Round Agent - LangGraph orchestrator for the federated training loop
"""
import operator
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from typing import Annotated, Any, Literal, Optional, TypedDict

import numpy as np
from langgraph.graph import END, START, StateGraph
from loguru import logger

from src.config import Contribution, EmptyValue, ExperimentConfig, Method
from src.records import RoundRecord
from src.scenario import Scenario
from src.seeding import derive_seed
from src.tools.model_tool import ModelParams, aggregate, evaluate, init_model, local_train
from src.tools.reputation_tool import ReputationState, reputation_scores, update_reputations
from src.tools.selection_tool import (
    SelectionProblem,
    SelectionResult,
    baseline_all,
    baseline_hq_random,
    baseline_random,
    selection_weights,
    solve_selection,
)
from src.tools.shapley_tool import EXACT_LIMIT, CoalitionContext, ShapleyResult, exact_shapley, mc_shapley

# Graph steps per round, used to size LangGraph's recursion limit.
_SBRO_NODES = 7
_BASELINE_NODES = 4


class RoundState(TypedDict):
    """State carried through the round graph."""
    round: int
    started: float
    global_params: ModelParams
    previous_params: Optional[ModelParams]
    reputation: Optional[ReputationState]
    weights: Optional[np.ndarray]
    selection: Optional[SelectionResult]
    updates: list
    shapley: Optional[ShapleyResult]
    records: Annotated[list, operator.add]


class RoundAgent:
    """
    Runs one arm (method, seed) of the federated simulation.

    SBRO-FL rounds go score -> select -> train -> aggregate -> assess ->
    update -> record. The baseline arms (RS-FL, HQRS-FL, All-FL) skip the
    scoring and the Shapley/reputation steps: select -> train -> aggregate
    -> record.
    """

    def __init__(self, cfg: ExperimentConfig, scenario: Scenario):
        """
        Initialize the round agent.

        Args:
            cfg: Experiment configuration for this arm
            scenario: Federation shared with the other arms
        """
        self.cfg = cfg
        self.scenario = scenario
        self.method = Method(cfg.method)
        self.model_shape = scenario.model_shape(cfg.scenario.hidden_dims)
        self.graph = self._build_graph()

    def _build_graph(self) -> Any:
        """Build the LangGraph StateGraph for one arm's round loop."""
        workflow = StateGraph(RoundState)

        workflow.add_node("select", self._select_node)
        workflow.add_node("train", self._train_node)
        workflow.add_node("aggregate", self._aggregate_node)
        workflow.add_node("record", self._record_node)

        if self.method is Method.SBRO:
            workflow.add_node("score", self._score_node)
            workflow.add_node("assess", self._assess_node)
            workflow.add_node("update", self._update_node)
            first = "score"
            workflow.add_edge("score", "select")
            workflow.add_edge("aggregate", "assess")
            workflow.add_edge("assess", "update")
            workflow.add_edge("update", "record")
        else:
            first = "select"
            workflow.add_edge("aggregate", "record")

        workflow.add_edge(START, first)
        workflow.add_edge("select", "train")
        workflow.add_edge("train", "aggregate")
        workflow.add_conditional_edges(
            "record",
            self._should_continue,
            {
                "continue": first,
                "end": END,
            },
        )
        return workflow.compile()

    def _score_node(self, state: RoundState) -> dict:
        """R_th, prospect scores and diversity-decayed selection weights."""
        reputation = state["reputation"]
        scores = reputation_scores(reputation, self.cfg.prospect)
        weights = selection_weights(scores, reputation.participation, self.cfg.delta)
        return {"started": time.perf_counter(), "weights": weights}

    def _select_node(self, state: RoundState) -> dict:
        t = state["round"]
        bids = self.scenario.bids
        seed = self.cfg.seed
        update: dict = {}

        if self.method is Method.SBRO:
            problem = SelectionProblem(state["weights"], bids, self.cfg.budget, derive_seed(seed, "bootstrap", t))
            selection = solve_selection(problem)
        else:
            update["started"] = time.perf_counter()
            if self.method is Method.RS:
                selection = baseline_random(bids, self.cfg.budget, derive_seed(seed, "rs", t))
            elif self.method is Method.HQRS:
                selection = baseline_hq_random(self.scenario.clean_ids, bids, self.cfg.budget, derive_seed(seed, "hqrs", t))
            else:
                selection = baseline_all(bids)

        if not selection.selected:
            logger.warning(f"[Round {t}] No client fits the budget; the global model is kept")
        update["selection"] = selection
        return update

    def _train_one(self, global_params: ModelParams, t: int, client_id: int) -> ModelParams:
        client = self.scenario.clients[client_id]
        train_cfg = replace(self.cfg.train, seed=derive_seed(self.cfg.seed, "train", t, client_id))
        return local_train(global_params, client.data, train_cfg)

    def _train_node(self, state: RoundState) -> dict:
        """Distribute w^{t-1} and collect each selected client's local update."""
        t = state["round"]
        selected = state["selection"].selected
        global_params = state["global_params"]
        if self.cfg.workers > 1 and len(selected) > 1:
            with ThreadPoolExecutor(max_workers=self.cfg.workers) as pool:
                updates = list(pool.map(lambda i: self._train_one(global_params, t, i), selected))
        else:
            updates = [self._train_one(global_params, t, i) for i in selected]
        return {"updates": updates}

    def _aggregate_node(self, state: RoundState) -> dict:
        """FedAvg weighted by |D_i|; an empty round keeps the incoming model."""
        selected = state["selection"].selected
        previous = state["global_params"]
        if not selected:
            return {"previous_params": previous}
        pairs = [
            (params, float(len(self.scenario.clients[i])))
            for params, i in zip(state["updates"], selected)
        ]
        return {"previous_params": previous, "global_params": aggregate(pairs)}

    def _empty_value(self, previous: ModelParams) -> float:
        if self.cfg.empty_value is EmptyValue.RANDOM_GUESS:
            return 1.0 / self.scenario.num_classes
        return evaluate(previous, self.scenario.validation, self.cfg.metric)

    def _assess_node(self, state: RoundState) -> dict:
        """Shapley value of every selected client on the validation set."""
        selected = state["selection"].selected
        if not selected:
            return {"shapley": None}
        ctx = CoalitionContext(
            member_ids=selected,
            updates=state["updates"],
            validation=self.scenario.validation,
            empty_value=self._empty_value(state["previous_params"]),
            metric=self.cfg.metric,
        )
        use_mc = self.cfg.contribution is Contribution.MC
        if not use_mc and len(selected) > EXACT_LIMIT:
            logger.warning(
                f"[Round {state['round']}] {len(selected)} clients exceed the exact Shapley limit "
                f"({EXACT_LIMIT}); using {self.cfg.mc_permutations} sampled permutations"
            )
            use_mc = True
        if use_mc:
            result = mc_shapley(ctx, self.cfg.mc_permutations, derive_seed(self.cfg.seed, "mc", state["round"]))
        else:
            result = exact_shapley(ctx, self.cfg.workers)
        return {"shapley": result}

    def _update_node(self, state: RoundState) -> dict:
        """Reputation rewards/penalties, then SV_his and H^t bookkeeping."""
        shapley = state["shapley"]
        sv = shapley.as_dict() if shapley is not None else {}
        reputation = update_reputations(
            state["reputation"],
            state["selection"].selected,
            sv,
            self.scenario.bids,
            self.cfg.update,
            state["round"],
        )
        return {"reputation": reputation}

    def _record_node(self, state: RoundState) -> dict:
        t = state["round"]
        selection = state["selection"]
        accuracy = evaluate(state["global_params"], self.scenario.test, self.cfg.metric)
        shapley = state.get("shapley") if self.method is Method.SBRO else None
        reputation = state["reputation"]
        clean = set(self.scenario.clean_ids)

        record = RoundRecord(
            round=t,
            method=self.method.value,
            seed=self.cfg.seed,
            selected_ids=selection.selected,
            total_cost=selection.cost,
            global_accuracy=accuracy,
            num_clean_selected=sum(1 for i in selection.selected if i in clean),
            sv=shapley.as_dict() if shapley is not None else {},
            reputation_snapshot=tuple(float(r) for r in reputation.reputation) if reputation is not None else (),
            wall_time_ms=(time.perf_counter() - state["started"]) * 1000.0,
            coalition_value=shapley.coalition_value if shapley is not None else None,
            empty_value=shapley.empty_value if shapley is not None else None,
        )
        logger.debug(
            f"[Round {t}] {self.method.value}: {len(selection.selected)} clients "
            f"({record.num_clean_selected} clean), cost={selection.cost:.3f}, acc={accuracy:.4f}"
        )
        return {"records": [record], "round": t + 1, "shapley": None}

    def _should_continue(self, state: RoundState) -> Literal["continue", "end"]:
        if state["round"] <= self.cfg.rounds:
            return "continue"
        return "end"

    def run(self) -> list[RoundRecord]:
        """
        Execute every round of this arm.

        Returns:
            One RoundRecord per round, in order
        """
        initial: RoundState = {
            "round": 1,
            "started": time.perf_counter(),
            "global_params": init_model(self.model_shape, derive_seed(self.cfg.seed, "init")),
            "previous_params": None,
            "reputation": ReputationState.initial(self.scenario.num_clients)
            if self.method is Method.SBRO else None,
            "weights": None,
            "selection": None,
            "updates": [],
            "shapley": None,
            "records": [],
        }
        per_round = _SBRO_NODES if self.method is Method.SBRO else _BASELINE_NODES
        logger.info(f"[Agent] {self.method.value} seed={self.cfg.seed}: {self.cfg.rounds} rounds")
        result = self.graph.invoke(
            initial,
            config={"recursion_limit": per_round * self.cfg.rounds + 10},
        )
        records = result["records"]
        logger.info(
            f"✓ [Agent] {self.method.value} seed={self.cfg.seed} finished, "
            f"final accuracy {records[-1].global_accuracy:.4f}"
        )
        return records
