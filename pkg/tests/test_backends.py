import numpy as np
import pytest

from bindeblur import _core
from bindeblur.feasibility import IntegerSystem, SearchBudget, solve_dfs, solve_with_margins
from bindeblur.lattice import LatticeBasis, lll_reduce
from bindeblur.oracle import brute_force_recover
from bindeblur.spectral import Band, BinaryMatrix, coefficient_weights, dft_on

BACKENDS = sorted(_core.available_backends())
needs_both = pytest.mark.skipif(len(BACKENDS) < 2, reason="compiled extension not built")


def run_all(fn):
    out = {}
    for name in BACKENDS:
        with _core.use_backend(name):
            out[name] = fn()
    return out


def test_python_backend_always_available():
    assert "python" in BACKENDS
    assert _core.BACKEND in BACKENDS


def test_unknown_backend_rejected():
    with pytest.raises(ValueError):
        with _core.use_backend("fortran"):
            pass


def test_use_backend_restores_previous():
    before = _core.kernels
    with _core.use_backend("python"):
        assert _core.kernels.BACKEND == "python"
    assert _core.kernels is before


@needs_both
@pytest.mark.parametrize("seed", range(20))
def test_dfs_backends_agree(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 16))
    a = rng.integers(-3, 4, size=(3, n)).astype(float)
    b = a @ rng.integers(0, 2, size=n) + (seed % 2) * 0.5
    sys = IntegerSystem.binary(a, b)
    res = run_all(lambda: solve_dfs(sys, SearchBudget()))
    assert len({(r.status, r.nodes, None if r.x is None else tuple(r.x))
                for r in res.values()}) == 1


@needs_both
@pytest.mark.parametrize("seed", range(20))
def test_lll_backends_agree(seed):
    rng = np.random.default_rng(seed)
    dim = int(rng.integers(2, 20))
    b = rng.integers(-50, 51, size=(dim, dim))
    if np.linalg.matrix_rank(b) < dim:
        pytest.skip("singular draw")
    res = run_all(lambda: lll_reduce(LatticeBasis(b), 0.99, return_transform=True))
    ref = res["python"]
    for red, u in res.values():
        assert np.array_equal(u, ref[1])
        assert np.allclose(red.vectors, ref[0].vectors)


@needs_both
@pytest.mark.parametrize("seed", range(5))
def test_margin_backends_agree(seed):
    x = BinaryMatrix.random(4, 5, 9, seed)
    w = coefficient_weights(4, 5, [(1, 1)])[0]
    a = np.vstack([w.real, w.imag])
    v = a @ x.bits.ravel()

    def go():
        r = solve_with_margins(4, 5, x.row_sums(), x.col_sums(), a, v, row_tol=np.full(2, 1e-6))
        return r.status, tuple(r.x)
    assert len(set(run_all(go).values())) == 1


@needs_both
def test_gray_backends_agree():
    x = BinaryMatrix.random(3, 5, 7, 1)
    spec = dft_on(x, Band.from_indexes([(0, 1)]))
    res = run_all(lambda: frozenset(brute_force_recover(spec)))
    assert len(set(res.values())) == 1 and x in res["python"]
