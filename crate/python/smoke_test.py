"""Quick end-to-end check of the pyfibrep extension.

Build and install first:  pip install --no-build-isolation ./crates/pyfibrep
Run:                      python python/smoke_test.py
"""

import sys

import pyfibrep as fr


def check(label, cond):
    print(("ok   " if cond else "FAIL ") + label)
    return cond


def main():
    good = True
    good &= check("fib(42)", fr.fib(42) == 267914296)
    good &= check("fib(100)", fr.fib(100) == 354224848179261915075)

    p = fr.Pattern.parse(4, "3,10,1,2,2,2")
    good &= check("render", p.render() == "33333333331122")
    good &= check("value", p.value() == 268435290)
    good &= check("decompose", p in fr.decompose(268435290, 4))
    try:
        fr.Pattern(4, 0, 1, 1, 1, 1, 1)
        good &= check("leading zero rejected", False)
    except ValueError:
        good &= check("leading zero rejected", True)

    sols = dict(fr.search(bases=[4]))
    largest = sols[4][-1]
    good &= check("b=4 largest", largest.value == 268435290 and (42, 29, 20) in largest.triples)
    good &= check("b=4 count", len(sols[4]) == 217)

    c = dict(fr.counts())
    good &= check("total 2665", sum(c.values()) == 2665)
    one = dict(fr.counts("one"))
    good &= check("one-term b=10", one[10] == 6)

    lo, hi = fr.baker_constant(3, 2)
    good &= check("C(3,2)", 9.33e13 < float(lo) <= float(hi) < 9.34e13)

    cv = fr.convergents(None, 10)
    good &= check("golden convergents", [q for _, _, q in cv][:6] == [1, 1, 2, 3, 5, 8])

    r = fr.reduce_step(8, "4.1", d1=1)
    bounds = {t["variable"]: t["bound"] for t in r["targets"]}
    good &= check("step 4.1 b=8", bounds["n1-n2"] == 438)

    rep = fr.verify(with_search=False)
    failing = sorted((c["claim"]["mode"], c["claim"]["base"]) for c in rep["checks"] if c["status"] == "FAIL")
    good &= check("table typos surfaced", ("three", 6) in failing and ("three", 10) in failing)

    return 0 if good else 1


if __name__ == "__main__":
    sys.exit(main())
