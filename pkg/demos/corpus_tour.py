"""Run every shipped instance and print one line per suite.

This takes about two minutes. Run: python3 demos/corpus_tour.py
"""
import time

from tangentcalc.verify import corpus_ids, load_instance, run_suite

t0 = time.perf_counter()
for iid in corpus_ids():
    inst = load_instance(iid)
    for suite in inst.suites:
        print(run_suite(inst, suite).summary_line())
print(f"done in {time.perf_counter() - t0:.0f}s")
