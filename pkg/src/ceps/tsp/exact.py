"""Exact small-instance TSP oracle (Held-Karp dynamic programming)."""

from __future__ import annotations

from ceps.tsp.instance import TspInstance

HELD_KARP_MAX_N = 14


def held_karp_optimum(instance: TspInstance) -> int:
    """Exact optimal tour length by DP over city subsets.

    Limited to N <= 14 (the table has 2^(N-1) * N entries). For larger
    instances use the consensus protocol in ceps.tsp.solver.certify_optimum.
    """
    n = instance.n
    if n > HELD_KARP_MAX_N:
        raise ValueError(
            f"held_karp_optimum handles N <= {HELD_KARP_MAX_N} (got {n}); "
            "certify larger instances with the consensus protocol instead"
        )
    dist = instance.distance_matrix()

    # dp[mask][last]: cheapest path from city 0 visiting exactly the cities
    # in mask (over cities 1..n-1), ending at `last`
    m = n - 1
    full = 1 << m
    inf = float("inf")
    dp = [[inf] * m for _ in range(full)]
    for k in range(m):
        dp[1 << k][k] = dist[0][k + 1]
    for mask in range(full):
        row = dp[mask]
        for last in range(m):
            cur = row[last]
            if cur == inf or not mask & (1 << last):
                continue
            dlast = dist[last + 1]
            for nxt in range(m):
                if mask & (1 << nxt):
                    continue
                nmask = mask | (1 << nxt)
                cand = cur + dlast[nxt + 1]
                if cand < dp[nmask][nxt]:
                    dp[nmask][nxt] = cand
    best = min(dp[full - 1][k] + dist[k + 1][0] for k in range(m))
    return int(best)
