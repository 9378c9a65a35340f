"""Smoke test for the cusplab extension module."""

import math

import cusplab


def test_maps():
    g = cusplab.Map.g_alpha(0.5)
    assert g.ambient == (0.0, 1.0)
    assert g.branch_count == 2
    assert abs(g(0.25) - g(0.75)) < 1e-12
    assert cusplab.Map.tent()(0.25) == 0.5
    assert g.density(0.5) > 0
    try:
        cusplab.Map.g_alpha(-1.0)
    except ValueError:
        pass
    else:
        raise AssertionError("negative alpha accepted")


def test_estimators():
    chi = cusplab.lyapunov(cusplab.Map.tent(), 1000)
    assert abs(chi - math.log(2)) < 1e-12
    v = cusplab.classify(cusplab.Map.g_alpha(1.5))
    assert v.verdict == "divergent"
    assert cusplab.series(0.4).verdict == "divergent"
    assert cusplab.series(0.6).verdict == "convergent"
    rates = cusplab.entropy(cusplab.Map.tent(), 20000, [4, 8])
    assert all(abs(r - math.log(2)) < 1e-9 for _, r in rates)
    centers, dens = cusplab.density(cusplab.Map.g_alpha(0.5), 20000, bins=10)
    assert len(centers) == 10 and abs(sum(dens) / 10 - 1) < 1e-9


def test_induced_map():
    tent = cusplab.Map.tent()
    imm = cusplab.induce(tent, 0.4, 0.8, depth=16)
    assert imm.branch_count == len(imm.branches())
    assert imm.residual < 1e-4
    # returns longer than the depth are cut off, so the spread density is only close to 1
    _, dens = imm.spread(bins=16)
    assert max(abs(d - 1) for d in dens) < 0.01
    try:
        cusplab.induce(tent, 0.1, 0.5)
    except RuntimeError:
        pass
    else:
        raise AssertionError("non-nice interval accepted")


def test_pullback():
    pb = cusplab.pullback(cusplab.Map.g_alpha(0.5), 0.4, n=20, seed=1)
    assert len(pb.lengths) == 21
    assert pb.lengths[-1] < pb.lengths[0]


if __name__ == "__main__":
    for name, fn in list(globals().items()):
        if name.startswith("test_"):
            fn()
    print("smoke test passed")
