"""
Progress reporting and the concurrent run pool used by batch commands.
"""
import time
from concurrent.futures import ThreadPoolExecutor, as_completed
from threading import Lock
from typing import Any, Callable, Dict, List, Optional

import click

from ..core.logger import logger


class ProgressReporter:
    """
    Counts finished sub-runs and echoes one status line per run.
    """

    def __init__(self, show_progress: bool = True) -> None:
        self.show_progress: bool = show_progress
        self._lock: Lock = Lock()
        self._start_time: Optional[float] = None
        self._completed: int = 0
        self._total: int = 0
        self._errors: int = 0

    def start(self, total: int, operation: str = "Running") -> None:
        self._start_time = time.perf_counter()
        self._completed = 0
        self._total = total
        self._errors = 0
        if self.show_progress and total > 1:
            click.echo(f"{operation} {total} runs...", err=True)

    def update(self, name: Optional[str] = None, error: bool = False) -> None:
        with self._lock:
            self._completed += 1
            if error:
                self._errors += 1
            if self.show_progress and self._total > 1:
                percent = 100.0 * self._completed / self._total
                status = "ERROR" if error else "OK"
                label = f" - {name}" if name else ""
                click.echo(f"  [{self._completed:3d}/{self._total}] {percent:5.1f}% - {status:5s}{label}",
                           err=True)

    @property
    def errors(self) -> int:
        return self._errors

    def finish(self, operation: str = "Runs") -> float:
        """Echo a summary and return the elapsed seconds."""
        elapsed = time.perf_counter() - self._start_time if self._start_time else 0.0
        if self.show_progress and self._total > 1:
            click.echo(f"{operation} finished in {format_duration(elapsed)}: "
                       f"{self._completed - self._errors} ok, {self._errors} failed", err=True)
        return elapsed


class RunPool:
    """
    Runs independent jobs, optionally on a thread pool, collecting results or
    the exception each job raised.
    """

    def __init__(self, max_workers: int = 1, show_progress: bool = True) -> None:
        self.max_workers: int = max(1, max_workers)
        self.progress: ProgressReporter = ProgressReporter(show_progress)

    def run(self, jobs: List[str], job_func: Callable[[str], Any],
            operation_name: str = "Running") -> Dict[str, Any]:
        """
        Call ``job_func(job)`` for every job name.

        Returns:
            Mapping from job name to its result or the exception it raised,
            in the order of ``jobs``
        """
        results: Dict[str, Any] = {}
        if not jobs:
            return results
        self.progress.start(len(jobs), operation_name)

        if len(jobs) == 1 or self.max_workers == 1:
            for job in jobs:
                results[job] = self._call(job, job_func)
        else:
            with ThreadPoolExecutor(max_workers=self.max_workers) as executor:
                futures = {executor.submit(job_func, job): job for job in jobs}
                for future in as_completed(futures):
                    job = futures[future]
                    try:
                        results[job] = future.result()
                        self.progress.update(job)
                    except Exception as e:
                        results[job] = e
                        self.progress.update(job, error=True)
                        logger.error(f"Run {job} failed: {e}")

        self.progress.finish(operation_name)
        return {job: results[job] for job in jobs}

    def _call(self, job: str, job_func: Callable[[str], Any]) -> Any:
        try:
            result = job_func(job)
        except Exception as e:
            self.progress.update(job, error=True)
            logger.error(f"Run {job} failed: {e}")
            return e
        self.progress.update(job)
        return result


def format_duration(seconds: float) -> str:
    """Short wall-clock label: ms below a second, then s, m or h."""
    if seconds < 1:
        return f"{seconds * 1000:.1f}ms"
    if seconds < 60:
        return f"{seconds:.1f}s"
    if seconds < 3600:
        return f"{seconds / 60:.1f}m"
    return f"{seconds / 3600:.1f}h"


class StyleFormatter:
    """Colours for CLI messages."""

    @staticmethod
    def success(text: str) -> str:
        return click.style(text, fg='green')

    @staticmethod
    def error(text: str) -> str:
        return click.style(text, fg='red')

    @staticmethod
    def info(text: str) -> str:
        return click.style(text, fg='blue')

    @staticmethod
    def highlight(text: str) -> str:
        return click.style(text, bold=True)

    @staticmethod
    def dim(text: str) -> str:
        return click.style(text, dim=True)
