"""Shared fixtures-in-spirit: model builders, streams, and independent
oracles (naive recounts + high-precision formula evaluation) used to audit
the production code paths."""

import math
from itertools import permutations, product

import mpmath as mp

from causalci.counts import CountTable, Observation
from causalci.graph import Dag
from causalci.simulator import CausalModel, Cpt, Roles

mp.mp.dps = 40


# -- models ---------------------------------------------------------------

def fig1_model(pz1=0.4, px1_given_z=(0.5, 0.5), py1_given_xz=None):
    """Binary confounded triangle Z->X, Z->Y, X->Y (Z observed)."""
    if py1_given_xz is None:
        py1_given_xz = {(0, 0): 0.2, (0, 1): 0.5, (1, 0): 0.3, (1, 1): 0.8}
    dag = Dag(["Z", "X", "Y"], [("Z", "X"), ("Z", "Y"), ("X", "Y")],
              {"Z": (0, 1), "X": (0, 1), "Y": (0, 1)})
    cpts = {
        "Z": Cpt((), {(): (1 - pz1, pz1)}),
        "X": Cpt(("Z",), {(z,): (1 - px1_given_z[z], px1_given_z[z]) for z in (0, 1)}),
        "Y": Cpt(("X", "Z"), {(x, z): (1 - py1_given_xz[(x, z)], py1_given_xz[(x, z)])
                              for x in (0, 1) for z in (0, 1)}),
    }
    return CausalModel(dag, cpts, Roles("X", "Y", ("Z",)))


def frontdoor_model(pu1=0.3, px1_given_u=(0.2, 0.8), pm1_given_x=(0.3, 0.7),
                    py1_given_mu=None):
    """Binary mediation chain X->M->Y with hidden confounder U->X, U->Y."""
    if py1_given_mu is None:
        py1_given_mu = {(0, 0): 0.2, (0, 1): 0.5, (1, 0): 0.6, (1, 1): 0.9}
    dag = Dag(["U", "X", "M", "Y"],
              [("U", "X"), ("U", "Y"), ("X", "M"), ("M", "Y")],
              {v: (0, 1) for v in "UXMY"})
    cpts = {
        "U": Cpt((), {(): (1 - pu1, pu1)}),
        "X": Cpt(("U",), {(u,): (1 - px1_given_u[u], px1_given_u[u]) for u in (0, 1)}),
        "M": Cpt(("X",), {(x,): (1 - pm1_given_x[x], pm1_given_x[x]) for x in (0, 1)}),
        "Y": Cpt(("M", "U"), {(m, u): (1 - py1_given_mu[(m, u)], py1_given_mu[(m, u)])
                              for m in (0, 1) for u in (0, 1)}),
    }
    return CausalModel(dag, cpts, Roles("X", "Y", ("M",)))


def fig1_dag():
    return Dag(["Z", "X", "Y"], [("Z", "X"), ("Z", "Y"), ("X", "Y")])


def napkin_dag():
    return Dag(["U", "V", "W", "Z", "X", "Y"],
               [("W", "Z"), ("Z", "X"), ("X", "Y"), ("V", "W"), ("V", "X"),
                ("U", "W"), ("U", "Y")])


# -- streams ---------------------------------------------------------------

def eight_obs_stream():
    """(z, x, y) rows (0,1,1),(0,1,0),(0,0,1),(1,1,1),(1,1,1),(1,0,0),
    (0,1,1),(1,1,0) as observations; the treated value is 1."""
    rows = [(0, 1, 1), (0, 1, 0), (0, 0, 1), (1, 1, 1),
            (1, 1, 1), (1, 0, 0), (0, 1, 1), (1, 1, 0)]
    return [Observation(x, y, (z,)) for z, x, y in rows]


def binary_table(stream=(), track_arrivals=True):
    table = CountTable((0, 1), (0, 1), ((0, 1),), track_arrivals=track_arrivals)
    for obs in stream:
        table.ingest(obs)
    return table


def random_table(rng, min_n=5, max_n=1200, track_arrivals=False):
    """A CountTable over random finite domains filled with a random
    categorical stream; returns (table, observations)."""
    cx = int(rng.integers(2, 4))
    cy = int(rng.integers(2, 4))
    z_doms = [tuple(range(rng.integers(2, 4)))
              for _ in range(int(rng.integers(1, 3)))]
    n = int(rng.integers(min_n, max_n))
    x_dom, y_dom = tuple(range(cx)), tuple(range(cy))
    cells = [(x, y, z) for x in x_dom for y in y_dom
             for z in product(*z_doms)]
    probs = rng.random(len(cells)) + 1e-3
    probs /= probs.sum()
    draws = rng.choice(len(cells), size=n, p=probs)
    obs = [Observation(*cells[i]) for i in draws]
    table = CountTable(x_dom, y_dom, z_doms, track_arrivals=track_arrivals)
    table.ingest_all(obs)
    return table, obs


def grid_table(cx, cz, n, treated, track_arrivals=False):
    """Deterministic table with exact treated count: `treated` observations
    carry x=0 cycling through z cells, the rest cycle over the other
    (x, z) cells.  All cells are hit when treated >= cz and
    n - treated >= (cx-1)*cz."""
    obs = []
    for i in range(treated):
        obs.append(Observation(0, 0, (i % cz,)))
    others = [(x, z) for x in range(1, cx) for z in range(cz)]
    for i in range(n - treated):
        x, z = others[i % len(others)]
        obs.append(Observation(x, 0, (z,)))
    table = CountTable(tuple(range(cx)), (0, 1), (tuple(range(cz)),),
                       track_arrivals=track_arrivals)
    table.ingest_all(obs)
    return table


# -- naive recounts (oracle side) -------------------------------------------

def naive_dyadic_floor(n):
    if n < 2:
        return 1
    p = 2
    while p * 2 <= n:
        p *= 2
    return p


def naive_count(obs, x=None, y=None, z=None, upto=None):
    sub = obs if upto is None else obs[:upto]
    hits = 0
    for o in sub:
        if x is not None and o.x != x:
            continue
        if y is not None and o.y != y:
            continue
        if z is not None and o.z != z:
            continue
        hits += 1
    return hits


def naive_dyadic_estimate(obs, event, cond, upto=None):
    """Fraction of the first naive_dyadic_floor(#cond) condition
    occurrences that match the event; None with no occurrences."""
    sub = obs if upto is None else obs[:upto]
    occ = [o for o in sub if cond(o)]
    if not occ:
        return None
    k = naive_dyadic_floor(len(occ))
    return sum(1 for o in occ[:k] if event(o)) / k


# -- high-precision half-width formulas --------------------------------------

def mp_hoeff(n, ratio):
    if n == 0:
        return mp.inf
    return mp.sqrt(mp.log(ratio) / (2 * n))


def mp_lil(count, ratio):
    k = naive_dyadic_floor(count)
    if k < 2:
        return mp.inf
    j = round(math.log2(k))
    return mp.sqrt((2 * mp.log(j) + mp.log(ratio)) / (2 * k))


def _sizes(table):
    return len(table.x_domain), len(table.z_values)


def mp_backdoor_iid_halfwidth(table, obs, xt, delta, toy=False):
    _, cz = _sizes(table)
    ratio = (mp.mpf(6) if toy else 4 * mp.mpf(cz)) / mp.mpf(delta)
    hw = cz * mp_hoeff(len(obs), ratio)
    for z in table.z_values:
        hw += mp_hoeff(naive_count(obs, x=xt, z=z), ratio)
    return hw


def mp_backdoor_adaptive_halfwidth(table, obs, xt, delta, toy=False):
    _, cz = _sizes(table)
    h_ratio = (mp.mpf(6) if toy else 4 * mp.mpf(cz)) / mp.mpf(delta)
    l_ratio = (mp.mpf(10) if toy else mp.mpf('6.6') * cz) / mp.mpf(delta)
    hw = cz * mp_hoeff(len(obs), h_ratio)
    for z in table.z_values:
        hw += mp_lil(naive_count(obs, x=xt, z=z), l_ratio)
    return hw


def mp_backdoor_anytime_halfwidth(table, obs, xt, delta, toy=False, upto=None):
    _, cz = _sizes(table)
    n = len(obs) if upto is None else upto
    ratio = (mp.mpf(10) if toy else mp.mpf('6.6') * cz) / mp.mpf(delta)
    hw = cz * mp_lil(n, ratio)
    for z in table.z_values:
        hw += mp_lil(naive_count(obs, x=xt, z=z, upto=n), ratio)
    return hw


def mp_frontdoor_iid_halfwidth(table, obs, xt, delta, form='expanded'):
    cx, cz = _sizes(table)
    k = cx * cz + cx + cz
    ratio = 2 * mp.mpf(k) / mp.mpf(delta)
    coeff_n = {'expanded': cx * cz, 'horner-z': cx * cz, 'horner-x': cx}[form]
    coeff_t = {'expanded': cx * cz, 'horner-z': cz, 'horner-x': cx * cz}[form]
    hw = coeff_n * mp_hoeff(len(obs), ratio)
    hw += coeff_t * mp_hoeff(naive_count(obs, x=xt), ratio)
    for xv in table.x_domain:
        for z in table.z_values:
            hw += mp_hoeff(naive_count(obs, x=xv, z=z), ratio)
    return hw


def mp_frontdoor_adaptive_halfwidth(table, obs, xt, delta):
    cx, cz = _sizes(table)
    k = cx * cz + cx + cz
    h_ratio = 2 * mp.mpf(k) / mp.mpf(delta)
    l_ratio = mp.mpf('3.3') * k / mp.mpf(delta)
    hw = cx * cz * mp_hoeff(len(obs), h_ratio)
    hw += cx * cz * mp_lil(naive_count(obs, x=xt), l_ratio)
    for xv in table.x_domain:
        for z in table.z_values:
            hw += mp_lil(naive_count(obs, x=xv, z=z), l_ratio)
    return hw


def mp_frontdoor_anytime_halfwidth(table, obs, xt, delta, upto=None):
    cx, cz = _sizes(table)
    n = len(obs) if upto is None else upto
    k = cx * cz + cx + cz
    ratio = mp.mpf('3.3') * k / mp.mpf(delta)
    hw = cx * cz * mp_lil(n, ratio)
    hw += cx * cz * mp_lil(naive_count(obs, x=xt, upto=n), ratio)
    for xv in table.x_domain:
        for z in table.z_values:
            hw += mp_lil(naive_count(obs, x=xv, z=z, upto=n), ratio)
    return hw


def mp_backdoor_iid_midpoint(table, obs, xt, yv):
    if not obs:
        return mp.mpf(0)
    total = mp.mpf(0)
    for z in table.z_values:
        c_xz = naive_count(obs, x=xt, z=z)
        if c_xz:
            cond = mp.mpf(naive_count(obs, x=xt, y=yv, z=z)) / c_xz
            total += cond * mp.mpf(naive_count(obs, z=z)) / len(obs)
    return total


# -- naive midpoint recounts ---------------------------------------------------

def _zero(v):
    return 0.0 if v is None else v


def naive_midpoint(table, obs, xt, yv, criterion, regime, upto=None):
    """Plug-in adjustment midpoint recomputed from the raw stream with the
    naive prefix logic (independent of the table's checkpoint machinery)."""
    n = len(obs) if upto is None else upto
    sub = obs[:n]
    if n == 0:
        return 0.0

    def ddot(event, cond):
        return _zero(naive_dyadic_estimate(obs, event, cond, upto=n))

    if criterion == 'backdoor':
        total = 0.0
        for z in table.z_values:
            cond = (lambda o, z=z: o.x == xt and o.z == z)
            event = (lambda o: o.y == yv)
            if regime == 'iid':
                c = naive_count(sub, x=xt, z=z)
                factor = naive_count(sub, x=xt, y=yv, z=z) / c if c else 0.0
                marg = naive_count(sub, z=z) / n
            elif regime == 'adaptive-fixed':
                factor = ddot(event, cond)
                marg = naive_count(sub, z=z) / n
            else:
                factor = ddot(event, cond)
                marg = ddot(lambda o, z=z: o.z == z, lambda o: True)
            total += factor * marg
        return total

    total = 0.0
    for z in table.z_values:
        if regime == 'iid':
            c = naive_count(sub, x=xt)
            pz = naive_count(sub, x=xt, z=z) / c if c else 0.0
        else:
            pz = ddot(lambda o, z=z: o.z == z, lambda o: o.x == xt)
        inner = 0.0
        for xv in table.x_domain:
            if regime == 'iid':
                c = naive_count(sub, x=xv, z=z)
                py = naive_count(sub, x=xv, y=yv, z=z) / c if c else 0.0
            else:
                py = ddot(lambda o: o.y == yv,
                          lambda o, xv=xv, z=z: o.x == xv and o.z == z)
            if regime == 'anytime':
                px = ddot(lambda o, xv=xv: o.x == xv, lambda o: True)
            else:
                px = naive_count(sub, x=xv) / n
            inner += py * px
        total += pz * inner
    return total


# -- naive d-separation oracle ------------------------------------------------

def oracle_paths(vertices, edges, a, b):
    """All simple undirected paths from a to b by filtering every vertex
    sequence (pure brute force; fine for <= 7 vertices)."""
    adjacent = {(u, v) for u, v in edges} | {(v, u) for u, v in edges}
    rest = [v for v in vertices if v not in (a, b)]
    found = []
    for r in range(len(rest) + 1):
        for middle in permutations(rest, r):
            path = (a, *middle, b)
            if all((u, v) in adjacent for u, v in zip(path, path[1:])):
                found.append(path)
    return found


def oracle_descendants(edges, v):
    desc = set()
    frontier = [v]
    while frontier:
        u = frontier.pop()
        for a, b in edges:
            if a == u and b not in desc:
                desc.add(b)
                frontier.append(b)
    return desc


def oracle_blocked(path, cond, edges):
    cond = set(cond)
    edge_set = set(edges)
    for i in range(1, len(path) - 1):
        v = path[i]
        into_prev = (path[i - 1], v) in edge_set
        into_next = (path[i + 1], v) in edge_set
        if into_prev and into_next:
            if not cond & ({v} | oracle_descendants(edges, v)):
                return True
        elif v in cond:
            return True
    return False


def oracle_backdoor(vertices, edges, xs, ys, zs):
    for xv in xs:
        for zv in zs:
            if zv in oracle_descendants(edges, xv):
                return False
    edge_set = set(edges)
    for xv in xs:
        for yv in ys:
            for path in oracle_paths(vertices, edges, xv, yv):
                if (path[1], xv) in edge_set and not oracle_blocked(path, zs, edges):
                    return False
    return True


def oracle_frontdoor(vertices, edges, x, y, zs):
    edge_set = set(edges)
    for path in oracle_paths(vertices, edges, x, y):
        directed = all((u, v) in edge_set for u, v in zip(path, path[1:]))
        if directed and not set(path[1:-1]) & set(zs):
            return False
    for zv in zs:
        for path in oracle_paths(vertices, edges, x, zv):
            if (path[1], x) in edge_set and not oracle_blocked(path, set(), edges):
                return False
        for path in oracle_paths(vertices, edges, zv, y):
            if (path[1], zv) in edge_set and not oracle_blocked(path, {x}, edges):
                return False
    return True


def random_dag(rng, max_vertices=6, p_edge=0.4):
    """Random DAG over a random topological order."""
    k = int(rng.integers(3, max_vertices + 1))
    names = [f"V{i}" for i in range(k)]
    order = list(rng.permutation(k))
    edges = []
    for i in range(k):
        for j in range(i + 1, k):
            if rng.random() < p_edge:
                edges.append((names[order[i]], names[order[j]]))
    return Dag(names, edges)
