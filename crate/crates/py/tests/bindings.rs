use pyo3::prelude::*;
use pyo3::types::PyDict;

fn with_module<F: FnOnce(Python<'_>, &Bound<'_, PyModule>)>(f: F) {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "pyfugnn").unwrap();
        pyfugnn::pyfugnn(&m).unwrap();
        f(py, &m);
    });
}

#[test]
fn basis_round_trips_through_bytes_and_json() {
    with_module(|py, m| {
        let locals = PyDict::new(py);
        locals.set_item("f", m).unwrap();
        py.run(
            c"
g = f.Graph.sbm(n=200, p_in=0.08, p_out=0.01, seed=3)
b = f.top_k_eigenpairs(g, 5)
d = f.dense_eigenpairs(g)
assert b.k == 5 and b.n == 200
assert all(abs(x - y) < 1e-8 for x, y in zip(b.eigenvalues, d.eigenvalues[:5]))
assert f.SpectralBasis.from_bytes(b.to_bytes()).eigenvalues == b.eigenvalues
assert f.SpectralBasis.from_json(b.to_json()).eigenvectors() == b.eigenvectors()
assert b.orthonormality_error() < 1e-10
assert b.truncated(2).k == 2
",
            Some(&locals),
            None,
        )
        .unwrap();
    });
}

#[test]
fn errors_map_to_python_exception_types() {
    with_module(|py, m| {
        let locals = PyDict::new(py);
        locals.set_item("f", m).unwrap();
        py.run(
            c"
g = f.Graph.sbm(n=50, p_in=0.2, p_out=0.02)
for call in (lambda: f.top_k_eigenpairs(g, 0), lambda: f.dense_eigenpairs(g, dense_limit=10),
             lambda: f.Graph.sbm(n=50, p_in=2.0), lambda: f.accuracy([1], [1, 0])):
    try:
        call()
    except ValueError:
        pass
    else:
        raise AssertionError('expected ValueError')
b = f.top_k_eigenpairs(g, 2)
try:
    f.train(g, b, epochs=3, lr=1e300)
except ArithmeticError:
    pass
else:
    raise AssertionError('expected ArithmeticError')
",
            Some(&locals),
            None,
        )
        .unwrap();
    });
}

#[test]
fn metrics_and_reports_come_back_as_python_values() {
    with_module(|py, m| {
        let locals = PyDict::new(py);
        locals.set_item("f", m).unwrap();
        py.run(
            c"
s = [0, 0, 0, 1, 1, 1]
y = [1, 0, 1, 1, 1, 0]
p = [1, 0, 0, 1, 1, 1]
assert abs(f.delta_sp(p, s) - 2/3) < 1e-15
assert f.delta_eo(p, y, s) == 0.5
assert f.delta_eo(p, y, s, mask=[True, True, True, False, False, True]) is None
r = f.verify_lemma1(n=30, l_max=50)
assert r['passed'] is True
g = f.Graph.sbm(n=80, p_in=0.15, p_out=0.02, seed=1).with_splits(0)
rep = f.train(g, f.top_k_eigenpairs(g, 3), seeds=[0, 1], epochs=5, d_e=8, heads=2)
assert len(rep['runs']) == 2
assert rep['aggregate']['accuracy']['count'] == 2
",
            Some(&locals),
            None,
        )
        .unwrap();
    });
}
