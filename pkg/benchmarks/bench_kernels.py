"""Time each hot kernel under the numba and numpy implementations.

Run with ``python3 benchmarks/bench_kernels.py``.  Numba timings exclude the
first (compiling) call.
"""
import timeit

import numpy as np

from qdarwin.kernels import numba_impl, numpy_impl


def cases(rng):
    overlaps = np.exp(1j * rng.uniform(0, 2 * np.pi, (12, 2, 2))) * 0.9
    for k in range(12):
        np.fill_diagonal(overlaps[k], 1.0)
    r = 4
    m = rng.normal(size=(2, r, r)) + 1j * rng.normal(size=(2, r, r))
    ops = np.einsum("kab,kcb->kac", m, m.conj())
    ops /= np.trace(ops.sum(axis=0)).real
    x = rng.normal(size=r * r)
    u = numpy_impl.unitary_from_params(x, r)
    p = numpy_impl.basis_joint(ops, u)
    qualify = rng.random(1 << 8) < 0.3
    qualify[-1] = True
    return {
        "subset_gammas(N=12)": lambda impl: impl.subset_gammas(overlaps),
        "unitary_from_params(r=4)": lambda impl: impl.unitary_from_params(x, r),
        "basis_joint(r=4)": lambda impl: impl.basis_joint(ops, u),
        "mutual_info_joint(2x4)": lambda impl: impl.mutual_info_joint(p),
        "basis_info(r=4)": lambda impl: impl.basis_info(x, ops, r),
        "best_partition(N=8)": lambda impl: impl.best_partition(qualify, 8),
    }


def main():
    rng = np.random.default_rng(0)
    print(f"{'kernel':<28}{'numpy [us]':>12}{'numba [us]':>12}{'speedup':>9}")
    for name, fn in cases(rng).items():
        times = {}
        for label, impl in (("numpy", numpy_impl), ("numba", numba_impl)):
            if impl is None:
                continue
            fn(impl)  # warm up / compile
            timer = timeit.Timer(lambda: fn(impl))
            n, _ = timer.autorange()
            times[label] = min(timer.repeat(3, n)) / n * 1e6
        nb = times.get("numba", float("nan"))
        print(f"{name:<28}{times['numpy']:>12.2f}{nb:>12.2f}{times['numpy'] / nb:>9.1f}")


if __name__ == "__main__":
    main()
