import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from swarmc2 import allocation as al
from swarmc2.messages import Bid, Job


def job(job_id="j1", goal=(0.0, 0.0, 0.0), **kw):
    return Job(job_id, "t1", "move_to", [goal], {}, **kw)


def inputs(**kw):
    defaults = dict(
        agent_id="A",
        position=(0.0, 0.0, 0.0),
        battery=1.0,
        platform="UAV-quad",
        payload="none",
    )
    defaults.update(kw)
    return al.BidInputs(**defaults)


class TestComputeBid:
    def test_full_battery_healthy_30m(self):
        b = al.compute_bid(inputs(position=(30.0, 0.0, 0.0)), job())
        assert b == pytest.approx(30.0)

    def test_half_battery_30m(self):
        b = al.compute_bid(inputs(position=(30.0, 0.0, 0.0), battery=0.5), job())
        assert b == pytest.approx(130.0)

    def test_degraded_health_penalty(self):
        b = al.compute_bid(inputs(degraded_health=2), job())
        assert b == pytest.approx(1000.0)

    def test_platform_filter_declines(self):
        b = al.compute_bid(inputs(platform="UGV"), job(platforms=["UAV-quad"]))
        assert b is None

    def test_battery_reserve_declines(self):
        assert al.compute_bid(inputs(battery=0.09), job()) is None

    def test_selection_group_declines_outsiders(self):
        assert al.compute_bid(inputs(agent_id="X"), job(selection_group=["A", "B"])) is None
        assert al.compute_bid(inputs(agent_id="A"), job(selection_group=["A", "B"])) is not None

    def test_busy_or_dead_declines(self):
        assert al.compute_bid(inputs(idle=False), job()) is None
        assert al.compute_bid(inputs(alive=False), job()) is None


def greedy_oracle(bids):
    """Brute-force simulation of the greedy rule by repeated global scan."""
    bids = dict(bids)
    out = []
    taken_jobs, taken_agents = set(), set()
    while True:
        candidates = [
            (v, a, j) for (j, a), v in bids.items()
            if j not in taken_jobs and a not in taken_agents
        ]
        if not candidates:
            return out
        v, a, j = min(candidates)
        out.append((j, a))
        taken_jobs.add(j)
        taken_agents.add(a)


class TestGreedyMatch:
    def test_single_job_argmin(self):
        bids = {("j1", "A"): 30.0, ("j1", "B"): 130.0}
        assert al.greedy_match(bids) == [("j1", "A")]

    def test_greedy_not_optimal(self):
        # greedy picks (j1,A)=1 then (j2,B)=100 even though optimal total is 4
        bids = {("j1", "A"): 1.0, ("j1", "B"): 2.0, ("j2", "A"): 2.0, ("j2", "B"): 100.0}
        assert al.greedy_match(bids) == [("j1", "A"), ("j2", "B")]

    def test_tie_breaks_agent_then_job(self):
        bids = {("j2", "B"): 5.0, ("j1", "B"): 5.0, ("j1", "A"): 5.0}
        assert al.greedy_match(bids)[0] == ("j1", "A")

    @given(
        st.dictionaries(
            st.tuples(
                st.sampled_from([f"j{i}" for i in range(6)]),
                st.sampled_from([f"a{i}" for i in range(6)]),
            ),
            st.floats(0, 100),
            max_size=36,
        )
    )
    @settings(max_examples=300)
    def test_matches_brute_force_oracle(self, bids):
        assert al.greedy_match(bids) == greedy_oracle(bids)


class TestAuctioneer:
    def test_window_close_and_assignment(self):
        auc = al.Auctioneer()
        auc.open_auction([job("j1")], now=0.0, expected_bidders={"A", "B"})
        auc.on_bid(Bid("j1", "A", 30.0), 0.5)
        results = auc.tick(1.0)
        assert results == []  # window open, B has not responded
        auc.on_bid(Bid("j1", "B", 130.0), 1.2)
        results = auc.tick(1.3)  # all expected bidders responded: early close
        assert results[0].assignments == [("j1", "A")]

    def test_window_expiry_closes(self):
        auc = al.Auctioneer()
        auc.open_auction([job("j1")], now=0.0, expected_bidders={"A", "B"})
        auc.on_bid(Bid("j1", "B", 10.0), 0.5)
        results = auc.tick(2.0)
        assert results[0].assignments == [("j1", "B")]

    def test_no_bids_unassignable(self):
        auc = al.Auctioneer()
        auc.open_auction([job("j1")], now=0.0, expected_bidders=set())
        results = auc.tick(3.0)
        assert results[0].unassignable == ["j1"]

    def test_decline_counts_as_response(self):
        auc = al.Auctioneer()
        auc.open_auction([job("j1")], now=0.0, expected_bidders={"A"})
        auc.on_bid(Bid("j1", "A", None), 0.1)
        results = auc.tick(0.2)
        assert results[0].unassignable == ["j1"]

    def test_no_double_assignment_across_auctions(self):
        auc = al.Auctioneer()
        auc.open_auction([job("j1")], now=0.0, expected_bidders={"A"})
        auc.on_bid(Bid("j1", "A", 1.0), 0.1)
        auc.tick(0.2)
        auc.open_auction([job("j2")], now=0.3, expected_bidders={"A"})
        auc.on_bid(Bid("j2", "A", 1.0), 0.4)
        results = auc.tick(0.5)
        assert results[0].unassignable == ["j2"]
        assert auc.check_no_double_assignment()

    def test_retry_then_success(self):
        auc = al.Auctioneer()
        auc.open_auction([job("j1")], now=0.0, expected_bidders={"A"})
        auc.on_bid(Bid("j1", "A", 1.0), 0.1)
        auc.tick(0.2)
        outcome = auc.on_task_result("j1", success=False, now=1.0, expected_bidders={"B"})
        assert outcome == "reauctioned"
        auc.on_bid(Bid("j1", "B", 2.0), 1.1)
        results = auc.tick(1.2)
        assert results[0].assignments == [("j1", "B")]
        assert auc.on_task_result("j1", True, 2.0, set()) == "complete"

    def test_retry_exhaustion(self):
        auc = al.Auctioneer()
        auc.open_auction([job("j1")], now=0.0, expected_bidders={"A"})
        for i in range(al.MAX_RETRIES + 1):
            auc.on_bid(Bid("j1", "A", 1.0), i + 0.1)
            auc.tick(i + 0.2)
            outcome = auc.on_task_result("j1", False, i + 0.5, expected_bidders={"A"})
        assert outcome == "failed"

    def test_unknown_job_ignored(self):
        auc = al.Auctioneer()
        assert auc.on_task_result("nope", True, 0.0, set()) == "unknown"

    def test_cancel_removes_from_open_auction(self):
        auc = al.Auctioneer()
        auc.open_auction([job("j1")], now=0.0, expected_bidders={"A"})
        auc.cancel_job("j1")
        assert auc.tick(5.0) == []
