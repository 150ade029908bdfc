import random
import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from anonmapf.assignment import Assignment
from anonmapf.graph import Graph
from anonmapf.instance import Instance, parse_movingai_map

LINE6_MAP = "type octile\nheight 1\nwidth 6\nmap\n......\n"
LINE5_MAP = "type octile\nheight 1\nwidth 5\nmap\n.....\n"


@pytest.fixture
def line6():
    return parse_movingai_map(LINE6_MAP)


@pytest.fixture
def swap_corridor(line6):
    # s = v3, v4, v5 ; g = v1, v5, v6 (0-based node ids)
    return Instance(line6, (2, 3, 4), (0, 4, 5), name="swap_corridor")


@pytest.fixture
def corridor_poor_assignment(swap_corridor):
    """The deliberately poor assignment s1->g1, s2->g3, s3->g2."""
    return Assignment(swap_corridor.starts, [0, 5, 4], [2, 2, 0])


@pytest.fixture
def two_on_line():
    # u v w x y on a 5-cell corridor; agents at v, w; targets w, y
    return Instance(parse_movingai_map(LINE5_MAP), (1, 2), (2, 4), name="two_on_line")


def small_random_instance(rng: random.Random, max_nodes=9, max_agents=3, grid=None):
    """Random connected instance with |V| <= max_nodes (grid or sparse graph)."""
    if grid is None:
        grid = rng.random() < 0.5
    if grid:
        from anonmapf.instance import random_grid
        w, h = rng.choice([(3, 3), (2, 4), (4, 2), (3, 2), (2, 3), (1, 5), (3, 1)])
        g = random_grid(w, h, rng.choice([0.0, 0.1, 0.25]), seed=rng.randrange(10**6))
    else:
        n = rng.randint(2, max_nodes)
        edges = {(i, rng.randrange(i)) for i in range(1, n)}  # random tree
        for _ in range(rng.randint(0, n)):
            a, b = rng.sample(range(n), 2)
            if (a, b) not in edges and (b, a) not in edges:
                edges.add((a, b))
        g = Graph.from_edges(n, edges)
    n_agents = rng.randint(1, min(max_agents, g.n_nodes))
    n_targets = rng.randint(1, n_agents)
    starts = rng.sample(range(g.n_nodes), n_agents)
    targets = rng.sample(range(g.n_nodes), n_targets)
    return Instance(g, tuple(starts), tuple(targets))
