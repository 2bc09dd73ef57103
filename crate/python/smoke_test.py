"""Smoke test for the graphcanon extension module.

Build first with `cargo build -p graphcanon-py --release`. The module is
imported normally when installed, otherwise loaded from target/.
"""

import importlib.machinery
import importlib.util
import math
import pathlib
import sys

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load():
    try:
        import graphcanon

        return graphcanon
    except ImportError:
        pass
    for profile in ("release", "debug"):
        lib = ROOT / "target" / profile / "libgraphcanon_py.so"
        if lib.exists():
            loader = importlib.machinery.ExtensionFileLoader("graphcanon", str(lib))
            spec = importlib.util.spec_from_loader("graphcanon", loader)
            module = importlib.util.module_from_spec(spec)
            loader.exec_module(module)
            sys.modules["graphcanon"] = module
            return module
    sys.exit("graphcanon extension not found; run cargo build -p graphcanon-py first")


def main():
    gc = load()

    p3 = gc.Graph(3, [(0, 1), (1, 2)])
    assert p3.n == 3 and p3.edge_count == 2 and len(p3) == 3
    assert p3.neighbors(1) == [0, 2]
    assert p3.edges() == [(0, 1), (1, 2)]
    assert gc.Graph.from_edge_list(p3.to_edge_list()) == p3
    report = gc.uniqueness(p3, depth=3, m=2)
    assert not report["all_unique"] and report["duplicate_groups"] == [[0, 2]]

    try:
        gc.Graph(3, [(0, 0)])
    except ValueError:
        pass
    else:
        raise AssertionError("self loop accepted")

    n = 2000
    choice = gc.choose_m(n, 0.01)
    g = gc.generate_er(n, 0.01, seed=5)
    again = gc.generate_er(n, 0.01, seed=5)
    assert g == again
    labels = gc.signatures(g, m=choice["m"])
    assert len(labels) == n

    pi = list(reversed(range(n)))
    h = g.permute(pi)
    r = gc.match_graphs(g, h)
    assert r["outcome"] == "matched" and r["verified"]
    assert gc.verify_isomorphism(g, h, r["permutation"])

    a = gc.canonical_label(g, choice["m"])
    b = gc.canonical_label(h, choice["m"])
    assert a["certificate"] == b["certificate"]
    assert gc.refine(g, choice["m"])["stable"]

    c4 = gc.Graph(4, [(0, 1), (1, 2), (2, 3), (3, 0)])
    assert gc.brute_force_isomorphic(c4, c4.permute([2, 3, 0, 1])) is not None

    p = 1.2 * math.log(2048) / 2048
    report = gc.find_2nbr_collisions(gc.generate_er(2048, p, seed=3), p)
    assert report["good_count"] > 0

    record = gc.smoothed_trial("ring", 256, mode="xor", seed=1)
    assert record["base"] == "ring" and record["mode"] == "xor"

    assert 0.0 <= gc.binomial_pmf(10, 100, 0.1) <= 1.0
    assert gc.check_pmf_bound(1000, 0.01)["satisfied"]

    grid = gc.run_grid("unique3", [512], c=[3.0], trials=4, seed=7)
    assert len(grid["records"]) == 4 and grid["summary"][0]["trials"] == 4

    print("python smoke test ok")


if __name__ == "__main__":
    main()
