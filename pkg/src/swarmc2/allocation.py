"""Centralized auction: broadcast jobs, collect bids in a window, assign greedily.

Bid heuristic: distance in meters + 200 per full battery deficit + 500 per
degraded health flag; lower wins. The matching is greedy over the global bid
matrix (not optimal assignment) with a total tie-break so the outcome is
deterministic: value, then agent id, then job id.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .messages import Bid, Job

BID_WINDOW_S = 2.0
BATTERY_RESERVE = 0.10
BATTERY_WEIGHT = 200.0
HEALTH_WEIGHT = 500.0
MAX_RETRIES = 2


@dataclass
class BidInputs:
    agent_id: str
    position: tuple[float, float, float]
    battery: float
    platform: str
    payload: str
    degraded_health: int = 0
    health_critical: bool = False
    idle: bool = True
    alive: bool = True


def compute_bid(inputs: BidInputs, job: Job) -> float | None:
    """Heuristic bid for a job, or None to decline."""
    if not inputs.idle or not inputs.alive:
        return None
    if job.platforms and inputs.platform not in job.platforms:
        return None
    if job.payloads and inputs.payload not in job.payloads:
        return None
    if job.selection_group and inputs.agent_id not in job.selection_group:
        return None
    if inputs.battery < BATTERY_RESERVE or inputs.health_critical:
        return None
    goal = job.goal[0]
    distance = math.dist(inputs.position, goal)
    return (
        distance
        + BATTERY_WEIGHT * (1.0 - inputs.battery)
        + HEALTH_WEIGHT * inputs.degraded_health
    )


def greedy_match(bids: dict[tuple[str, str], float]) -> list[tuple[str, str]]:
    """Repeatedly take the globally lowest (job, agent) bid among unassigned
    jobs and agents. Ties: agent id, then job id."""
    order = sorted(bids.items(), key=lambda kv: (kv[1], kv[0][1], kv[0][0]))
    taken_jobs: set[str] = set()
    taken_agents: set[str] = set()
    out = []
    for (job_id, agent_id), _ in order:
        if job_id in taken_jobs or agent_id in taken_agents:
            continue
        out.append((job_id, agent_id))
        taken_jobs.add(job_id)
        taken_agents.add(agent_id)
    return out


@dataclass
class Auction:
    auction_id: int
    jobs: dict[str, Job]
    open_time: float
    window_s: float
    expected_bidders: set[str]
    responded: set[str] = field(default_factory=set)
    bids: dict[tuple[str, str], float] = field(default_factory=dict)


@dataclass
class AuctionResult:
    assignments: list[tuple[str, str]]
    unassignable: list[str]


class Auctioneer:
    """Single centralized auctioneer owned by the mission server."""

    def __init__(self, window_s: float = BID_WINDOW_S):
        self.window_s = window_s
        self.open_auctions: dict[int, Auction] = {}
        self.jobs: dict[str, Job] = {}
        self.live: dict[str, str] = {}       # job id -> agent id
        self.agent_job: dict[str, str] = {}  # agent id -> job id
        self.retries: dict[str, int] = {}
        self._next_id = 0

    def open_auction(self, jobs: list[Job], now: float, expected_bidders: set[str]) -> int:
        if not jobs:
            raise ValueError("auction requires at least one job")
        aid = self._next_id
        self._next_id += 1
        self.open_auctions[aid] = Auction(
            aid, {j.job_id: j for j in jobs}, now, self.window_s, set(expected_bidders)
        )
        for j in jobs:
            self.jobs[j.job_id] = j
            self.retries.setdefault(j.job_id, 0)
        return aid

    def on_bid(self, bid: Bid, now: float) -> None:
        for auction in self.open_auctions.values():
            if bid.job_id in auction.jobs:
                auction.responded.add(bid.agent_id)
                if bid.value is not None:
                    auction.bids[(bid.job_id, bid.agent_id)] = bid.value
                return

    def tick(self, now: float) -> list[AuctionResult]:
        """Close auctions whose window expired or whose expected bidders have
        all responded; returns their results."""
        results = []
        for aid in sorted(self.open_auctions):
            auction = self.open_auctions[aid]
            window_over = now - auction.open_time >= auction.window_s
            all_in = auction.expected_bidders and auction.expected_bidders <= auction.responded
            if not (window_over or all_in):
                continue
            del self.open_auctions[aid]
            usable = {
                key: v for key, v in auction.bids.items()
                if key[1] not in self.agent_job
            }
            assignments = greedy_match(usable)
            for job_id, agent_id in assignments:
                self.live[job_id] = agent_id
                self.agent_job[agent_id] = job_id
            unassignable = sorted(set(auction.jobs) - {j for j, _ in assignments})
            results.append(AuctionResult(assignments, unassignable))
        return results

    def release(self, job_id: str) -> None:
        agent = self.live.pop(job_id, None)
        if agent is not None:
            self.agent_job.pop(agent, None)

    def on_task_result(self, job_id: str, success: bool, now: float,
                       expected_bidders: set[str]) -> str:
        """Returns "complete", "reauctioned", or "failed"; unknown ids "unknown"."""
        if job_id not in self.jobs:
            return "unknown"
        self.release(job_id)
        if success:
            return "complete"
        if self.retries[job_id] < MAX_RETRIES:
            self.retries[job_id] += 1
            self.open_auction([self.jobs[job_id]], now, expected_bidders)
            return "reauctioned"
        return "failed"

    def cancel_job(self, job_id: str) -> None:
        self.release(job_id)
        for auction in list(self.open_auctions.values()):
            auction.jobs.pop(job_id, None)
            for key in [k for k in auction.bids if k[0] == job_id]:
                del auction.bids[key]
            if not auction.jobs:
                del self.open_auctions[auction.auction_id]

    def check_no_double_assignment(self) -> bool:
        agents = list(self.live.values())
        return len(agents) == len(set(agents))
