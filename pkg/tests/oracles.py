"""Independent reference implementations used only by the tests."""
from itertools import combinations


def pushback_oracle(paths, capacities, as_numbers, attack_bps):
    """Exhaustive placement search.

    `paths` maps path id to its links listed victim first.  A placement S is
    sufficient when every path through every congested link carries some
    member of S at that link or upstream of it.  Among sufficient
    placements pick the one minimizing the traffic-weighted distance of
    the farthest filter per path, then the fewest links.
    """
    npaths = len(paths)
    hop = {}
    for seq in paths.values():
        for h, lid in enumerate(seq, 1):
            hop[lid] = h
    links = sorted(hop)
    load = {l: attack_bps * sum(l in seq for seq in paths.values()) / npaths for l in links}
    congested = {l for l in links if capacities.get(l) is not None and load[l] > capacities[l]}

    def sufficient(S):
        for c in congested:
            for seq in paths.values():
                if c in seq and not any(s in seq and hop[s] >= hop[c] for s in S):
                    return False
        return True

    def cost(S):
        total = 0.0
        for seq in paths.values():
            on = [hop[s] for s in S if s in seq]
            total += (max(on) if on else 0) / npaths
        return total

    best = None
    for k in range(len(links) + 1):
        for S in combinations(links, k):
            if not sufficient(S):
                continue
            key = (round(cost(S), 12), k)
            if best is None or key < best[0]:
                best = (key, frozenset(S))
    S = best[1]
    router = as_hops = 0.0
    for seq in paths.values():
        on = [hop[s] for s in S if s in seq]
        if on:
            h = max(on)
            router += h / npaths
            as_hops += len({as_numbers.get(l) for l in seq[:h]} - {None}) / npaths
    return S, router, as_hops


def random_topology(rng, max_links=12):
    """A victim-rooted tree of links with probe paths ending at random nodes."""
    n = rng.randint(1, max_links)
    parent = {}
    depth = {}
    for k in range(n):
        lid = f"L{k}"
        if k == 0 or rng.random() < 0.25:
            parent[lid], depth[lid] = None, 1
        else:
            p = f"L{rng.randrange(k)}"
            parent[lid], depth[lid] = p, depth[p] + 1

    def chain(lid):
        out = []
        while lid is not None:
            out.append(lid)
            lid = parent[lid]
        return out[::-1]  # victim first

    paths = {}
    for j in range(rng.randint(1, 8)):
        paths[f"p{j}"] = chain(f"L{rng.randrange(n)}")
    used = {l for seq in paths.values() for l in seq}
    caps = {l: (None if rng.random() < 0.1 else rng.choice([1, 2, 5, 10, 20, 50]) * 1e6) for l in used}
    asn = {l: rng.choice([None, 100, 200, 300, 400]) for l in used}
    attack = rng.choice([0, 1, 5, 10, 30, 60, 100]) * 1e6
    return paths, caps, asn, attack
