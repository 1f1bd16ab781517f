"""Quick end-to-end check of the compiled `ncas` module.

Build it first, e.g. `maturin develop -m crates/python/Cargo.toml`, or copy
`target/release/libncas.so` to `ncas.so` somewhere on PYTHONPATH.
"""

import ncas


def main():
    clean = ncas.PointSet.double_moon(n=300, noise=0.0, seed=0)
    labels, eigenvalue = ncas.ncut(clean, h=3.0, knn=20)
    errors = ncas.misclassification_count(labels, clean.truth)
    print(f"ncut on clean moons: {errors} errors, eigenvalue {eigenvalue:.3e}")
    assert errors == 0

    config = ncas.SolverConfig(lam=1.0, eta=0.25, knn=20)
    seg = ncas.ncash1(clean, config)
    print(f"ncash1 on clean moons: {seg!r}")
    assert ncas.misclassification_count(seg.labels, clean.truth) == 0
    assert len(seg.energy_trace) == seg.iterations == len(seg.h_trace)

    image, truth = ncas.Image.two_region(width=32, height=32, radius=9.0)
    config = ncas.SolverConfig(lam=1.0, epsilon=1e-3, eta=1e-6, window=4)
    seg = ncas.ncastv(image, config)
    ri = ncas.rand_index(seg.labels, [truth])
    vi = ncas.variation_of_information(seg.labels, truth)
    print(f"ncastv on a disc: RI {ri:.3f}, VI {vi:.3f}")
    assert ri > 0.99

    assert ncas.rand_index(truth, [truth]) == 1.0
    assert ncas.variation_of_information(truth, [1 - v for v in truth]) == 0.0

    flat = ncas.rof_denoise(4, 1, [0.0, 0.0, 1.0, 1.0], 10.0)
    assert max(flat) - min(flat) < 1e-6

    try:
        ncas.SolverConfig(lam=-1.0)
    except ValueError as e:
        print(f"rejected bad config: {e}")
    else:
        raise AssertionError("negative lambda accepted")

    print("smoke test passed")


if __name__ == "__main__":
    main()
