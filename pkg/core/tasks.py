"""
Concurrent execution of independent chains and per-draw analyses
"""
import logging
import threading
from concurrent.futures import ProcessPoolExecutor, ThreadPoolExecutor, as_completed
from queue import Queue
from typing import Callable, Iterable, List, Optional, Sequence, TypeVar

from .errors import SamplerError
from .models import Chain, FitProgress, SamplerConfig
from .sampler import run_chain


logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


def _run_job(job):
    config, evaluator, init = job
    return run_chain(config, evaluator, init)


class TaskRunner:
    """Runs MCMC chains in worker processes with progress reporting"""

    def __init__(self, max_workers: int = 1):
        """Initialize task runner"""
        if max_workers < 1:
            raise ValueError("max_workers must be positive")
        self.max_workers = max_workers
        self.progress_queue: Queue = Queue()
        self.cancel_flag = threading.Event()

    def cancel(self):
        """Request cancellation; chains not yet started are dropped"""
        self.cancel_flag.set()

    def is_cancelled(self) -> bool:
        """Check if cancellation was requested"""
        return self.cancel_flag.is_set()

    def report_progress(self, progress: FitProgress):
        """Report progress of a finished chain"""
        self.progress_queue.put(progress)

    def get_progress(self) -> Optional[FitProgress]:
        """Get latest progress update (non-blocking)"""
        if not self.progress_queue.empty():
            return self.progress_queue.get_nowait()
        return None

    def run_chains(
        self,
        configs: Sequence[SamplerConfig],
        evaluator,
        init,
        progress_callback: Callable[[FitProgress], None] = None,
    ) -> List[Chain]:
        """
        Run one chain per sampler config

        Args:
            configs: One config per chain, each with its own seed
            evaluator: Picklable posterior evaluator shared by all chains
            init: Starting parameters shared by all chains
            progress_callback: Optional callback invoked as each chain finishes

        Returns:
            Chains in the order of configs, independent of completion order
        """
        self.cancel_flag.clear()
        total = len(configs)
        results: List[Optional[Chain]] = [None] * total

        def finished(index: int, chain: Chain, completed: int):
            results[index] = chain
            progress = FitProgress(completed=completed, total=total, chain_id=index)
            self.report_progress(progress)
            if progress_callback:
                progress_callback(progress)

        if self.max_workers == 1 or total == 1:
            for index, config in enumerate(configs):
                if self.is_cancelled():
                    break
                finished(index, run_chain(config, evaluator, init), index + 1)
        else:
            workers = min(self.max_workers, total)
            with ProcessPoolExecutor(max_workers=workers) as executor:
                futures = {
                    executor.submit(_run_job, (config, evaluator, init)): index
                    for index, config in enumerate(configs)
                }
                completed = 0
                for future in as_completed(futures):
                    if self.is_cancelled():
                        for pending in futures:
                            pending.cancel()
                        break
                    completed += 1
                    finished(futures[future], future.result(), completed)

        if any(chain is None for chain in results):
            done = sum(chain is not None for chain in results)
            raise SamplerError(f"chain run was cancelled after {done} of {total} chain(s)")
        return results


def map_ordered(fn: Callable[[T], R], items: Iterable[T], workers: int = 1) -> List[R]:
    """
    Apply fn to every item, in threads when workers > 1

    Results come back in input order, so reductions over them do not depend on
    scheduling. The integration kernel releases the GIL.
    """
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items))
