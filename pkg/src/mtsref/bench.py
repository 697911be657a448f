"""Benchmark harness: generate system pairs, time refinement checkers.

Each (pair, checker) task runs in its own forked process so a wall-clock
timeout can terminate it cleanly; rows are reported in deterministic
configuration order regardless of completion order.  Timings are wall
milliseconds measured inside the worker (or the elapsed budget on timeout)
and are never compared against anything - only verdicts are.
"""

from __future__ import annotations

import csv
import io
import multiprocessing as mp
import time
from dataclasses import dataclass
from typing import List, Optional, Sequence

from .generate import GenConfig, generate
from .modal import refines_pmts
from .qbf import encode_bmts, encode_pmts, evaluate_qbf, solve_external
from .systems import System

CSV_COLUMNS = [
    "kind", "states", "alphabet", "branching", "params",
    "topology", "seed", "checker", "verdict", "wall_ms", "timed_out",
]

CHECKERS = ("direct", "qbf-internal", "qbf-external")


@dataclass(frozen=True)
class BenchRow:
    config: GenConfig
    pair_seed: int
    checker: str
    verdict: str
    wall_ms: int
    timed_out: bool

    def as_csv_dict(self) -> dict:
        return {
            "kind": self.config.kind.name,
            "states": self.config.num_states,
            "alphabet": self.config.alphabet_size,
            "branching": self.config.branching_degree,
            "params": self.config.num_params,
            "topology": self.config.topology,
            "seed": self.pair_seed,
            "checker": self.checker,
            "verdict": self.verdict,
            "wall_ms": self.wall_ms,
            "timed_out": str(self.timed_out).lower(),
        }


def run_check(left: System, right: System, checker: str, solver_cmd: Optional[str] = None,
              qbf_var_cap: int = 1 << 20) -> bool:
    if checker == "direct":
        return refines_pmts(left, left.initial, right, right.initial).holds
    if left.params or right.params:
        inst = encode_pmts(left, left.initial, right, right.initial)
    else:
        inst = encode_bmts(left, left.initial, right, right.initial)
    if checker == "qbf-internal":
        return evaluate_qbf(inst, max_vars=qbf_var_cap)
    if checker == "qbf-external":
        if not solver_cmd:
            raise ValueError("the external checker needs a solver command")
        return solve_external(inst, solver_cmd)
    raise ValueError(f"unknown checker {checker!r}")


def _worker(conn, left: System, right: System, checker: str, solver_cmd: Optional[str]):
    start = time.perf_counter()
    try:
        verdict = run_check(left, right, checker, solver_cmd)
        wall_ms = int((time.perf_counter() - start) * 1000)
        conn.send(("HOLDS" if verdict else "DOES-NOT-HOLD", wall_ms))
    except Exception as exc:  # report, never crash the matrix
        wall_ms = int((time.perf_counter() - start) * 1000)
        conn.send((f"ERROR:{type(exc).__name__}", wall_ms))
    finally:
        conn.close()


@dataclass
class _Task:
    index: int
    config: GenConfig
    pair_seed: int
    checker: str
    left: System
    right: System


def pair_seeds(cfg: GenConfig, pairs: int) -> List[int]:
    from .rng import Rng

    stream = Rng(cfg.seed).substream("bench-pairs")
    return [stream.next64() >> 1 for _ in range(pairs)]


def generate_pair(cfg: GenConfig, pair_seed: int) -> tuple[System, System]:
    from dataclasses import replace

    left = generate(replace(cfg, seed=pair_seed * 2 + 1))
    right = generate(replace(cfg, seed=pair_seed * 2 + 2))
    return left, right


def run_bench(
    matrix: Sequence[GenConfig],
    pairs_per_cell: int,
    checkers: Sequence[str] = ("direct",),
    timeout_secs: float = 60.0,
    workers: int = 1,
    solver_cmd: Optional[str] = None,
) -> List[BenchRow]:
    """Run every checker on every generated pair of every cell."""
    for checker in checkers:
        if checker not in CHECKERS:
            raise ValueError(f"unknown checker {checker!r}")
    tasks: List[_Task] = []
    for cfg in matrix:
        for pair_seed in pair_seeds(cfg, pairs_per_cell):
            left, right = generate_pair(cfg, pair_seed)
            for checker in checkers:
                tasks.append(_Task(len(tasks), cfg, pair_seed, checker, left, right))

    ctx = mp.get_context("fork")
    results: dict[int, tuple[str, int, bool]] = {}
    running: list = []
    queue = list(tasks)
    slots = max(1, workers)

    while queue or running:
        while queue and len(running) < slots:
            task = queue.pop(0)
            parent_conn, child_conn = ctx.Pipe(duplex=False)
            proc = ctx.Process(
                target=_worker, args=(child_conn, task.left, task.right, task.checker, solver_cmd)
            )
            proc.start()
            child_conn.close()
            running.append((task, proc, parent_conn, time.perf_counter()))
        progressed = False
        for entry in list(running):
            task, proc, conn, started = entry
            elapsed = time.perf_counter() - started
            if not proc.is_alive():
                if conn.poll():
                    verdict, wall_ms = conn.recv()
                    results[task.index] = (verdict, wall_ms, False)
                else:
                    results[task.index] = ("ERROR:WorkerDied", int(elapsed * 1000), False)
                proc.join()
                conn.close()
                running.remove(entry)
                progressed = True
            elif elapsed >= timeout_secs:
                proc.terminate()
                proc.join()
                conn.close()
                results[task.index] = ("", int(elapsed * 1000), True)
                running.remove(entry)
                progressed = True
        if running and not progressed:
            time.sleep(0.004)

    return [
        BenchRow(
            config=task.config,
            pair_seed=task.pair_seed,
            checker=task.checker,
            verdict=results[task.index][0],
            wall_ms=results[task.index][1],
            timed_out=results[task.index][2],
        )
        for task in tasks
    ]


def rows_to_csv(rows: Sequence[BenchRow]) -> str:
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row.as_csv_dict())
    return buffer.getvalue()
