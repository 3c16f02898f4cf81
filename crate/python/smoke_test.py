"""Smoke test for the pyfugnn extension.

Build and install first:  maturin develop -m crates/py/Cargo.toml --release
"""

import math

import pyfugnn as f


def main():
    g = f.Graph.sbm(n=300, p_in=0.05, p_out=0.005, seed=7).with_splits(0)
    print(g)

    basis = f.top_k_eigenpairs(g, 6)
    dense = f.dense_eigenpairs(g)
    for a, b in zip(basis.eigenvalues, dense.eigenvalues):
        assert abs(a - b) < 1e-8, (a, b)
    assert basis.orthonormality_error() < 1e-10
    assert f.SpectralBasis.from_bytes(basis.to_bytes()).eigenvalues == basis.eigenvalues
    print("top eigenvalues:", [round(x, 6) for x in basis.eigenvalues])

    # cos<S^l h, h> for S = diag(2, 1) and h = (1, 1)
    for l in (0, 3, 10):
        expected = (2**l + 1) / (math.sqrt(2) * math.sqrt(4**l + 1))
        got = f.convolution_similarity([[2.0, 0.0], [0.0, 1.0]], [1.0, 1.0], l)
        assert abs(got - expected) < 1e-12, (l, got, expected)

    for name, report in (
        ("lemma1", f.verify_lemma1(n=40, l_max=100)),
        ("lemma2", f.verify_lemma2(n=20, j=2, l_max=100)),
        ("lemma3", f.verify_lemma3(n=30)),
    ):
        assert report["passed"], name
        print(name, "passed")

    s = [0, 0, 0, 1, 1, 1]
    y = [1, 0, 1, 1, 1, 0]
    p = [1, 0, 0, 1, 1, 1]
    assert abs(f.delta_sp(p, s) - 2 / 3) < 1e-15
    assert f.delta_eo(p, y, s) == 0.5

    rep = f.train(g, basis, seeds=[0, 1], epochs=40, d_e=8, heads=2)
    agg = rep["aggregate"]
    print(
        "accuracy {:.4f}  dSP {:.4f}".format(
            agg["accuracy"]["mean"], agg["delta_sp"]["mean"]
        )
    )
    assert agg["accuracy"]["count"] == 2
    print("ok")


if __name__ == "__main__":
    main()
