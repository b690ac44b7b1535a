"""Smoke test for the `biobj` extension module.

Build and install it first:

    pip install --no-build-isolation -e crates/python
    python python/smoke_test.py
"""

import json
import sys

import biobj

E0 = {
    "name": "E0",
    "costs": [2, 3, 4],
    "weights": [5, 4],
    "precedence": [[1, 2]],
    "requests": [[1, [2]], [2, [3]]],
}


def main():
    doc = json.dumps(E0)
    front = [(9, 9), (5, 5), (4, 4), (0, 0)]

    assert sorted(biobj.front(doc)) == sorted(front)
    assert biobj.hypervolume(front, (0, 9)) == 24

    names = biobj.algorithms()
    assert "MixSHT" in names and "ADS" in names, names
    for name in names:
        report = biobj.solve(doc, name)
        pts = sorted(map(tuple, report["points"]))
        if name in ("SPF", "ADS"):
            # these only look for supported points; ADS may skip some
            assert set(pts) <= set(front), (name, pts)
        else:
            assert pts == sorted(front), (name, pts)
        assert report["termination"] == "exhausted"

    r = biobj.solve(doc, "AnyAugmecon(2)", lam="1/3", call_budget=1)
    assert r["termination"] == "call_budget", r["termination"]

    gen = biobj.generate(12, 6, 3, pdens=0.2)
    assert json.loads(gen)["name"] == "gen-n12-m6-s3"
    exact = sorted(biobj.front(gen))
    assert sorted(map(tuple, biobj.solve(gen, "MixHT", deadline=30.0)["points"])) == exact

    for bad in (lambda: biobj.solve(doc, "Simplex"), lambda: biobj.solve("{}", "MixHT"),
                lambda: biobj.front(biobj.generate(40, 10, 1))):
        try:
            bad()
        except ValueError:
            pass
        else:
            raise AssertionError("expected ValueError")

    print(f"biobj smoke test ok: {len(names)} algorithms, generated front of {len(exact)} points")
    return 0


if __name__ == "__main__":
    sys.exit(main())
