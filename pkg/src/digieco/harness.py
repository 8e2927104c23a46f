"""Scenario runner comparing the ecosystem with the registry baseline."""
from __future__ import annotations

import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .config import ScenarioConfig
from .habitat import Ecosystem, MigrationOutcome
from .model import ATTR_MAX, Agent, AgentSequence, Request, derive_stream, min_dist
from .soa import soa_respond


def match_percent(candidate: AgentSequence | Sequence[Agent], request: Request,
                  arity: int | None = None) -> float:
    """``100 / (1 + D / |R|)`` with ``D`` the summed closest-attribute distance.

    An empty candidate scores every requirement at the largest possible
    distance, ``arity * 100``.
    """
    flat = request.flat
    agents = list(candidate)
    if agents:
        d = sum(min_dist(agents, r) for r in flat)
    else:
        d = len(flat) * (arity or len(flat[0])) * ATTR_MAX
    return 100.0 / (1.0 + d / len(flat))


@dataclass(frozen=True)
class StepRecord:
    request_index: int
    services_available: int
    match_pct_eco: float
    match_pct_soa: float
    evaluations_used: int
    seed: int
    comparisons_used: int = 0


@dataclass
class ScenarioRun:
    seed: int
    records: list[StepRecord]
    churn_events: int = 0
    clustering_coefficient: float = 0.0
    mean_edge_probability: float = 0.0
    hebbian_successes: int = 0
    hebbian_failures: int = 0
    snapshot: dict = field(default_factory=dict, repr=False)


def simulate(cfg: ScenarioConfig, seed: int) -> ScenarioRun:
    eco = Ecosystem(cfg, seed)
    pick = derive_stream(seed, "requests/user")
    shape = derive_stream(seed, "requests/attributes")
    records = []
    for i in range(1, cfg.total_requests + 1):
        ids = sorted(eco.users)
        user = eco.users[ids[int(pick.integers(len(ids)))]]
        request = eco.generate_request(user, shape)
        services = eco.services_available
        response = eco.handle_request(user, request, derive_stream(seed, f"ga/{i}"))
        soa = soa_respond(request, eco.registry, user.habitat, response.evaluations_used)
        records.append(StepRecord(
            request_index=i,
            services_available=services,
            match_pct_eco=match_percent(response.best_sequence, request, cfg.arity),
            match_pct_soa=match_percent(soa.composition, request, cfg.arity),
            evaluations_used=response.evaluations_used,
            seed=seed,
            comparisons_used=soa.comparisons_used,
        ))
        eco.record_request(user)
        eco.churn_step()
    probs = eco.edge_probabilities()
    return ScenarioRun(
        seed=seed,
        records=records,
        churn_events=eco.churn_events,
        clustering_coefficient=eco.clustering_coefficient(),
        mean_edge_probability=sum(probs) / len(probs) if probs else 0.0,
        hebbian_successes=eco.hebbian_updates[MigrationOutcome.SUCCESS],
        hebbian_failures=eco.hebbian_updates[MigrationOutcome.FAILURE],
        snapshot=eco.snapshot(),
    )


def run_scenario(cfg: ScenarioConfig, seed: int) -> list[StepRecord]:
    return simulate(cfg, seed).records


def _simulate_job(args):
    return simulate(*args)


def run_replications(cfg: ScenarioConfig, seeds: Iterable[int] | None = None,
                     workers: int = 1) -> list[ScenarioRun]:
    """Run one independent replication per seed, optionally in worker processes."""
    seeds = list(cfg.seeds if seeds is None else seeds)
    jobs = [(cfg, s) for s in seeds]
    if workers <= 1 or len(jobs) <= 1:
        return [simulate(*job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_simulate_job, jobs))


@dataclass(frozen=True)
class WindowSummary:
    start: int
    end: int
    eco_mean: float
    eco_sd: float
    soa_mean: float
    soa_sd: float
    n: int


def detect_crossover(windows: Sequence[WindowSummary], sustain: int = 3) -> int | None:
    """Start index of the first window from which eco beats soa for ``sustain`` windows."""
    run = 0
    for i, w in enumerate(windows):
        run = run + 1 if w.eco_mean > w.soa_mean else 0
        if run >= sustain:
            return windows[i - sustain + 1].start
    return None


def aggregate(records: Iterable[StepRecord], window: int) -> list[WindowSummary]:
    """Windowed mean and population standard deviation across all seeds."""
    if window < 1:
        raise ValueError("window must be at least 1")
    buckets: dict[int, list[StepRecord]] = {}
    for rec in records:
        buckets.setdefault((rec.request_index - 1) // window, []).append(rec)
    out = []
    for b in sorted(buckets):
        eco = [r.match_pct_eco for r in buckets[b]]
        soa = [r.match_pct_soa for r in buckets[b]]
        out.append(WindowSummary(
            start=b * window + 1,
            end=(b + 1) * window,
            eco_mean=statistics.fmean(eco),
            eco_sd=statistics.pstdev(eco),
            soa_mean=statistics.fmean(soa),
            soa_sd=statistics.pstdev(soa),
            n=len(eco),
        ))
    return out
