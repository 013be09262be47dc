"""Time the compiled kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--genomes 200]

Prints the best time per call for each kernel and backend, and the speedup
of the compiled backend over the numpy fallback (below 1 means slower).
"""
import argparse
import random
import timeit

import numpy as np

from eqls import kernels
from eqls.bench import load_benchmark
from eqls.evaluate import Evaluator
from eqls.evolve import pool_lexicon
from eqls.gates import PRIMITIVE_SET, expand_to_circuit_width, get_gate
from eqls.genome import GateSampler, random_genome


def cmat(rng, r, c, density=0.3):
    m = rng.normal(size=(r, c)) + 1j * rng.normal(size=(r, c))
    m[rng.random((r, c)) > density] = 0
    return np.ascontiguousarray(m)


def gate_block(gid, wires, n_wires=3):
    return np.ascontiguousarray(expand_to_circuit_width(get_gate(gid), wires, n_wires))


def kernel_cases(rng):
    """(name, callable taking a backend module)."""
    cnot, ch = gate_block("CNOT3", (0, 2)), gate_block("CH3", (1, 2))
    cnot4, ch4 = gate_block("CNOT3", (0, 3), 4), gate_block("CH3", (1, 2), 4)
    a81, b81 = cmat(rng, 81, 81, 1.0), cmat(rng, 81, 81, 1.0)
    s3, s9 = cmat(rng, 3, 3, 1.0), cmat(rng, 9, 9, 1.0)
    chain = [gate_block(g, w) for g, w in [("CNOT3", (0, 1)), ("H3", (2,)), ("CZ3", (1, 2)), ("CH3", (0, 2))] * 3]
    state = cmat(rng, 27, 8, 1.0)
    mask = (rng.random((27, 8)) > 0.8).astype(float)
    return [
        ("matmul 27x27 gate blocks", lambda k: k.matmul(cnot, ch)),
        ("matmul 81x81 gate blocks", lambda k: k.matmul(cnot4, ch4)),
        ("matmul 81x81 dense", lambda k: k.matmul(a81, b81)),
        ("kron 3x3 (x) 9x9", lambda k: k.kron(s3, s9)),
        ("apply_chain 12 blocks on 27x8", lambda k: k.apply_chain(chain, state)),
        ("masked_probability 27x8", lambda k: k.masked_probability(state, mask)),
    ]


def best_time(fn, repeat, number):
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--number", type=int, default=200, help="calls per timing for kernel cases")
    p.add_argument("--genomes", type=int, default=200, help="genomes scored in the end-to-end case")
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    backends = sorted(kernels.BACKENDS)
    print(f"backends available: {', '.join(backends)} (active: {kernels.BACKEND})")
    rng = np.random.default_rng(args.seed)
    rows = []
    for name, fn in kernel_cases(rng):
        times = {b: best_time(lambda: fn(kernels.get_backend(b)), args.repeat, args.number) for b in backends}
        rows.append((name, times))

    # end to end: score fresh genomes against the Toffoli target (no cache hits)
    b = load_benchmark("Toffoli")
    lex = pool_lexicon(PRIMITIVE_SET, 3, 3)
    sampler = GateSampler(lex, PRIMITIVE_SET, b.restrictions)
    r = random.Random(args.seed)
    texts = [random_genome(lex, (3, 10), r, sampler=sampler) for _ in range(args.genomes)]

    def score(backend):
        ev = Evaluator(b.target, lex, backend=backend)
        for t in texts:
            ev.score(t)

    times = {be: best_time(lambda: score(be), args.repeat, 1) for be in backends}
    rows.append((f"score {args.genomes} Toffoli genomes", times))

    width = max(len(n) for n, _ in rows)
    print(f"{'case':<{width}}  " + "  ".join(f"{b:>12}" for b in backends) + "  speedup")
    for name, times in rows:
        cells = "  ".join(f"{times[b] * 1e6:>10.1f}us" for b in backends)
        speed = f"{times['python'] / times['cython']:6.2f}x" if "cython" in times else "     -"
        print(f"{name:<{width}}  {cells}  {speed}")


if __name__ == "__main__":
    main()
