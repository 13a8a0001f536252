"""Acceptance criteria 1-10. Each test prints one ``CRITERION n: PASS|FAIL`` line.

Run with ``pytest tests/test_acceptance.py -v -s`` (the lines are printed even
without ``-s``). The full suite takes roughly ten minutes on one core.
"""

import math
import subprocess
import sys
import time

import pytest

from nsbesov.bilinear import cross_term_check, lemma21_decomposition
from nsbesov.counterexamples import CaseConfig, lower_bound_curve, ratio_experiment
from nsbesov.diagnostics import operator_algebra, partition_of_unity_deviation, path_agreement

pytestmark = pytest.mark.slow


@pytest.fixture
def report(capsys):
    def emit(n: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\nCRITERION {n}: {'PASS' if ok else 'FAIL'} {detail}")

    return emit


class Timer:
    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, *exc):
        self.elapsed = time.perf_counter() - self.t0


def test_criterion_1_partition_of_unity(report):
    with Timer() as t:
        dev, nodes = partition_of_unity_deviation()
    ok = dev <= 1e-12 and t.elapsed < 5
    report(1, ok, f"max|sum phi_j - 1|={dev:.3e} over {nodes} nodes, {t.elapsed:.1f}s")
    assert ok


def test_criterion_2_operator_algebra(report):
    with Timer() as t:
        alg = operator_algebra(seed=0, fields=10)
    ok = alg.worst() <= 1e-12 and t.elapsed < 10
    detail = ", ".join(f"{k}={v:.2e}" for k, v in alg.as_dict().items())
    report(2, ok, f"{detail}, {t.elapsed:.1f}s")
    assert ok


def test_criterion_3_low_block_identity(report):
    with Timer() as t:
        rep = lemma21_decomposition(None, 16.0, range(-6, 1))
    improving = all(b.improving for b in rep.blocks)
    ok = rep.max_deviation <= 1e-8 and improving and t.elapsed < 120
    report(3, ok, f"max deviation={rep.max_deviation:.3e}, improving={improving}, {t.elapsed:.1f}s")
    assert ok


def test_criterion_4_cross_terms(report):
    with Timer() as t:
        rep = cross_term_check((160.0, 176.0, 192.0), [1.0] * 3, [1.0] * 3, range(-6, 1))
    worst = max(c / d for c, d in zip(rep.cross_norms, rep.diagonal_norms))
    agg = max(rep.aggregate_deviation)
    ok = worst <= 1e-10 and agg <= 1e-8 and t.elapsed < 120
    report(4, ok, f"max cross/diagonal={worst:.3e}, aggregate deviation={agg:.3e}, {t.elapsed:.1f}s")
    assert ok


def test_criterion_5_lower_bound(report):
    parts, ok = [], True
    with Timer() as t:
        for p in (1.0, 2.0, math.inf):
            c = lower_bound_curve(p)
            good = c.min_value >= 0.5 * c.a_inf and c.deviation_at(-12) <= 0.05
            ok &= good
            parts.append(f"p={p:g}: min/a_inf={c.min_ratio:.4f} dev(-12)={c.deviation_at(-12):.2e}")
    ok &= t.elapsed < 180
    report(5, ok, "; ".join(parts) + f", {t.elapsed:.1f}s")
    assert ok


def _checks(rep) -> str:
    return " ".join(f"{k}={'ok' if v else 'FAIL'}" for k, v in rep.checks.items())


def test_criterion_6_case_i(report):
    with Timer() as t:
        rep = ratio_experiment(CaseConfig("i", 2.0, 2.0, (4, 16, 64), M=16))
    c = rep.constants
    ok = rep.passed and t.elapsed < 300
    report(6, ok, f"{_checks(rep)} normalized_S(J=64)={c['normalized_S_at_J_check']:.5f} "
                  f"growth(4N)={c['ratio_growth_4N']:.4f} dominance={c['dominance_ratio']:.3g}, {t.elapsed:.1f}s")
    assert ok


def test_criterion_7_case_ii(report):
    with Timer() as t:
        rep = ratio_experiment(CaseConfig("ii", 4.0, math.inf, (16, 32, 64, 128)))
    ok = rep.passed and t.elapsed < 600
    devs = " ".join(f"{r['deviation']:.2e}" for r in rep.rows)
    report(7, ok, f"{_checks(rep)} norm slope={rep.fits['norm_u']['slope']:.5f} "
                  f"deviation exponent={rep.fits['deviation']['slope']:.3f} (deviations {devs}), {t.elapsed:.1f}s")
    assert ok


def test_criterion_8_case_iii(report):
    with Timer() as t:
        rep = ratio_experiment(CaseConfig("iii", 1.0, math.inf, (4, 8, 16), sigma=2))
    c = rep.constants
    ratios = " ".join(f"{r['sup_block'] / r['lower_bound']:.3f}" for r in rep.rows)
    ok = rep.passed and t.elapsed < 900
    report(8, ok, f"{_checks(rep)} spread_u={c['spread_u']:.2e} spread_v={c['spread_v']:.2e} "
                  f"sup/bound={ratios}, {t.elapsed:.1f}s")
    assert ok


def test_criterion_9_path_agreement(report):
    with Timer() as t:
        rep = path_agreement()
    worst = max(rep.as_dict().values())
    ok = worst <= 1e-8
    detail = ", ".join(f"{k}={v:.2e}" for k, v in rep.as_dict().items())
    report(9, ok, f"{detail}, {t.elapsed:.1f}s")
    assert ok


def test_criterion_10_selftest_reproducible(report, tmp_path):
    outs = []
    with Timer() as t:
        for k in range(2):
            out = tmp_path / f"run{k}"
            r = subprocess.run([sys.executable, "-m", "nsbesov", "selftest", "--out", str(out)],
                               capture_output=True, text=True)
            assert r.returncode == 0, r.stdout + r.stderr
            outs.append((out / "results.csv").read_bytes())
    ok = outs[0] == outs[1]
    report(10, ok, f"results.csv identical={ok} ({len(outs[0])} bytes), {t.elapsed:.1f}s")
    assert ok
