"""Smoke test for the quasiflat_py extension.

Build with `maturin develop -m crates/py/Cargo.toml`, or copy
target/*/libquasiflat_py.so next to this file as quasiflat_py.so.
"""

import cmath
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))

import quasiflat_py as q


def check(cond, what):
    if not cond:
        raise SystemExit(f"FAIL {what}")
    print(f"ok   {what}")


p = q.Permutation([2, 1, 3])
r = q.Permutation([2, 3, 1])
check((p * r)(1) == p(r(1)), "composition applies the right factor first")
check((r * r.inverse()).is_identity(), "inverse")

s3 = q.PermutationGroup([p, r])
check(s3.order == 6 and s3.is_transitive(), "S_3 from two generators")
a3 = q.PermutationGroup.fixture("a3")
check(a3.is_normal_in(s3), "A_3 normal in S_3")
check(q.PermutationGroup.fixture("d4").orbits() == [[1, 2, 3, 4]], "D_4 orbits")

check(len(q.enumerate_squares(2, 1)) == 2, "two sparse squares for N=2, K=1")
square = q.SparseLatinSquare([[1, 2, 0], [2, 0, 1], [0, 1, 2]], 2)
check(square.hopf_image().order == 6, "Hopf image of the S_3 square")

fam = q.ModelFamily.from_json('{"variant": "Amalgamated", "k": 4, "l": 2, "r": 2, "m": 2}')
point = fam.sample(7)
point.validate(fam)
again = q.ModelPoint.from_json(point.to_json())
word = "1:1,2:1,1:-1"
closed = q.word_trace(fam, point, word)
direct = q.direct_trace(fam, again, word)
check(abs(closed - direct) < 1e-10, "closed-form trace matches the matrix product")
m = q.eval_word(fam, point, word)
check(len(m) == fam.dimension, "matrix dimension")

free = q.ModelFamily.from_json('{"variant": "FreeProduct", "k": 3, "m": 2}')
scan = q.faithfulness_scan(free, max_len=3, samples=20)
check(scan["pass"], "free product survives words up to length 3")

thoma = q.thoma_check(s3, a3)
check(thoma["pass"] and thoma["index"] == 2, "induced model stationary on S_3/A_3")

stat = q.stationarity_check(s3, 3)
check(stat["pass"], "exact stationarity of the classical S_3 model")

est = q.mc_trace_state(free, "1:1", samples=2000, seed=1)
check(abs(est["mean"][0]) < 5 * est["stderr"] + 1e-12, "trace of a generator averages to zero")

crit = q.selftest(criterion=8)
check(crit["pass"], "selftest criterion 8")
print(json.dumps({"version": q.__version__}))
