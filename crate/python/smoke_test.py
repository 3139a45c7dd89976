"""Smoke test for the pwcet extension module.

Build it first:

    cargo build --release -p pwcet-py --features extension-module

The script imports an installed `pwcet` if there is one, otherwise it loads
the library from target/.
"""

import importlib.util
import math
import pathlib
import sys


def load_pwcet():
    try:
        import pwcet
        return pwcet
    except ImportError:
        pass
    root = pathlib.Path(__file__).resolve().parent.parent
    for profile in ("release", "debug"):
        lib = root / "target" / profile / "libpwcet.so"
        if lib.exists():
            spec = importlib.util.spec_from_file_location("pwcet", lib)
            module = importlib.util.module_from_spec(spec)
            spec.loader.exec_module(module)
            return module
    sys.exit("pwcet extension not found; build crates/py first")


def main():
    pwcet = load_pwcet()

    assert "example1" in pwcet.Model.bundled()
    m = pwcet.Model.load("example1")
    assert m.name == "example1"
    assert m.validate() == []
    r = pwcet.analyze(m)
    assert abs(r.wcet - 15.0) < 1e-12, r.wcet
    assert r.terminated

    g = pwcet.Model.load("geometric_c")
    acc = pwcet.analyze(g, delta=1e-6)
    base = pwcet.analyze(g, delta=1e-6, mode="baseline")
    assert abs(acc.wcet - base.wcet) <= 1e-9 * base.wcet
    assert acc.rg == base.states_explored - acc.states_explored == 13807
    doc = acc.to_dict()
    assert doc["cycles"][0]["n"] == 13809

    cmp = pwcet.compare(g)
    assert cmp["rg_observed"] == cmp["rg_formula"]

    sim = pwcet.simulate_runs(pwcet.Model.load("geometric_a"), trials=20000, seed=1)
    assert abs(sim["mean"] - 1.001) < 5 * sim["std_err"] + 1e-9, sim

    src = str(m)
    assert pwcet.Model.parse(src).locations == m.locations

    try:
        pwcet.analyze(pwcet.Model.load("unbounded"))
    except pwcet.UnboundedError:
        pass
    else:
        raise AssertionError("expected UnboundedError")

    try:
        pwcet.Model.parse("clocks x\nlocation A initail\n")
    except ValueError as e:
        assert "line 2" in str(e)
    else:
        raise AssertionError("expected a parse error")

    assert not math.isnan(r.wall_time)
    print("pwcet smoke test passed")


if __name__ == "__main__":
    main()
