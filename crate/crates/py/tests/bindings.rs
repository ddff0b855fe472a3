use std::ffi::CString;

use pyo3::prelude::*;
use quasiflat_py::quasiflat_py;

fn run(code: &str) {
    pyo3::append_to_inittab!(quasiflat_py);
    Python::initialize();
    Python::attach(|py| {
        let code = CString::new(code).unwrap();
        py.run(&code, None, None).unwrap_or_else(|e| panic!("{e}"));
    });
}

#[test]
fn module_round_trip() {
    run(r#"
import quasiflat_py as q
g = q.PermutationGroup.fixture("s3")
h = q.PermutationGroup.fixture("a3")
assert g.order == 6 and len(h) == 3
assert q.thoma_check(g, h)["pass"]
f = q.ModelFamily.from_json('{"variant":"FreeProduct","k":3,"m":2}')
p = f.sample(1)
w = "1:1,2:-1"
assert abs(q.word_trace(f, p, w) - q.direct_trace(f, p, w)) < 1e-10
assert f.canonical_word("1:1,1:2") == "e"
try:
    q.ModelFamily.from_json('{"variant":"Amalgamated","k":5,"l":2,"r":2,"m":2}')
except ValueError:
    pass
else:
    raise AssertionError("invalid family accepted")
"#);
}
