"""Shared fixtures and random-network builders for the test suite."""

import random

import pytest

from protcoord import bundled_dataset_path
from protcoord.netmodel import (Branch, Bus, Network, ShuntLoad, Source,
                                UfclSpec, load_network)


@pytest.fixture(scope="session")
def bundled_net():
    return load_network(bundled_dataset_path().read_text())


@pytest.fixture(scope="session")
def expected():
    from _bundled_expected import EXPECTED
    return EXPECTED


def random_connected_net(seed, max_buses=8):
    """Arbitrary connected net: random tree plus a few loops, 1-3 sources."""
    rng = random.Random(seed)
    n = rng.randint(2, max_buses)
    buses = [Bus(f"n{i}", 20000.0) for i in range(n)]

    branches = []
    for i in range(1, n):
        j = rng.randrange(i)
        branches.append(Branch(f"br{i}", f"n{j}", f"n{i}", "line",
                               complex(rng.uniform(0.5, 5.0),
                                       rng.uniform(0.5, 5.0))))
    for k in range(rng.randint(0, 2)):
        a, b = rng.sample(range(n), 2)
        branches.append(Branch(f"loop{k}", f"n{a}", f"n{b}", "line",
                               complex(rng.uniform(0.5, 5.0),
                                       rng.uniform(0.5, 5.0))))

    sources = [Source("grid", "n0", "infinite_grid",
                      complex(rng.uniform(0.5, 3.0), rng.uniform(1.0, 6.0)))]
    for d in range(rng.randint(0, 2)):
        sources.append(Source(
            f"dg{d}", f"n{rng.randrange(n)}",
            rng.choice(["sync_dg", "induction_dg"]),
            complex(rng.uniform(1.0, 5.0), rng.uniform(5.0, 40.0))))

    loads = [ShuntLoad(f"ld{li}", f"n{rng.randrange(n)}",
                       complex(rng.uniform(50.0, 400.0),
                               rng.uniform(5.0, 40.0)))
             for li in range(rng.randint(0, 3))]

    return Network(buses=tuple(buses), branches=tuple(branches),
                   sources=tuple(sources), loads=tuple(loads))


def random_radial_net(seed, max_buses=7, with_dg=False):
    """Pure tree with loads; optionally one synchronous DG at a leaf."""
    rng = random.Random(seed)
    n = rng.randint(2, max_buses)
    buses = [Bus(f"n{i}", 20000.0) for i in range(n)]
    branches = []
    for i in range(1, n):
        j = rng.randrange(i)
        branches.append(Branch(f"br{i}", f"n{j}", f"n{i}", "line",
                               complex(rng.uniform(0.5, 5.0),
                                       rng.uniform(0.5, 5.0))))
    sources = [Source("grid", "n0", "infinite_grid",
                      complex(rng.uniform(0.5, 3.0), rng.uniform(1.0, 6.0)))]
    if with_dg:
        sources.append(Source("dg", f"n{n - 1}", "sync_dg",
                              complex(rng.uniform(1.0, 5.0),
                                      rng.uniform(5.0, 40.0))))
    loads = [ShuntLoad(f"ld{li}", f"n{rng.randrange(n)}",
                       complex(rng.uniform(100.0, 600.0),
                               rng.uniform(10.0, 60.0)))
             for li in range(rng.randint(1, 3))]
    return Network(buses=tuple(buses), branches=tuple(branches),
                   sources=tuple(sources), loads=tuple(loads))


def random_tie_net(seed):
    """Grid-side chain, a tie, and a DG microgrid with very light loads.

    Downstream loads are kept >= three orders above the line impedances so
    the limiter can fully cancel the DG contribution: with heavy loads the
    detached-load gap would exceed the sizing tolerance and no finite
    resistance could restore the pre-DG level.

    Returns (net, sizing_bus): the net has the DG in service and a UfclSpec
    with a placeholder r_limit; sizing_bus is the designated upstream bus.
    """
    rng = random.Random(seed)
    n_up = rng.randint(2, 3)  # n0 (grid) .. n_up-1
    n_dn = rng.randint(1, 3)  # d0 .. d_dn-1

    buses = [Bus(f"n{i}", 20000.0) for i in range(n_up)]
    buses += [Bus(f"d{i}", 20000.0) for i in range(n_dn)]

    branches = []
    for i in range(1, n_up):
        branches.append(Branch(f"up{i}", f"n{i - 1}", f"n{i}", "line",
                               complex(rng.uniform(0.3, 3.0),
                                       rng.uniform(0.3, 3.0))))
    branches.append(Branch("tie", f"n{n_up - 1}", "d0", "tie",
                           complex(rng.uniform(0.3, 3.0),
                                   rng.uniform(0.3, 3.0))))
    for i in range(1, n_dn):
        branches.append(Branch(f"dn{i}", f"d{i - 1}", f"d{i}", "line",
                               complex(rng.uniform(0.3, 3.0),
                                       rng.uniform(0.3, 3.0))))

    sources = [
        Source("grid", "n0", "infinite_grid",
               complex(rng.uniform(1.0, 4.0), rng.uniform(2.0, 8.0))),
        Source("dg", f"d{n_dn - 1}", "sync_dg",
               complex(rng.uniform(2.0, 10.0), rng.uniform(10.0, 60.0))),
    ]
    loads = [ShuntLoad("ld_up", f"n{rng.randrange(n_up)}",
                       complex(rng.uniform(200.0, 800.0),
                               rng.uniform(20.0, 80.0)))]
    for i in range(rng.randint(0, 2)):
        loads.append(ShuntLoad(f"ld_dn{i}", f"d{rng.randrange(n_dn)}",
                               complex(rng.uniform(2e4, 2e5),
                                       rng.uniform(2e3, 2e4))))

    sizing_bus = f"n{n_up - 1}"
    net = Network(buses=tuple(buses), branches=tuple(branches),
                  sources=tuple(sources), loads=tuple(loads),
                  ufcl=UfclSpec(tie_branch="tie", r_limit=1.0, r_normal=0.0,
                                downstream_end="d0",
                                sizing_fault_bus=sizing_bus))
    return net, sizing_bus
