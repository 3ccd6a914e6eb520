"""
Sweep dispatcher - runs grid points on a worker pool and keeps row order.

Task functions take and return plain dicts so they cross process boundaries;
failures are caught inside the task and returned as data.
"""

from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Dict, List, Optional, Sequence

import structlog

from shared.config import SolverSettings
from shared.errors import EmptyCavityError, InterferometerError, exit_code_for
from shared.logging_config import log_sweep_point, setup_logging
from shared.models import Method, SystemParams
from solvers.exact_fock import ExactFockBackend
from solvers.observables import CompareOptions, build_backend, compare


def _failure(error: BaseException) -> Dict[str, Any]:
    details = error.message if isinstance(error, InterferometerError) else str(error)
    return {"error": type(error).__name__, "details": details, "code": exit_code_for(error)}


def steady_task(task: Dict[str, Any]) -> Dict[str, Any]:
    params = SystemParams(**task["params"])
    settings = SolverSettings(**task["settings"])
    method = Method(task["method"])
    try:
        backend = build_backend(method, settings, cutoff=task.get("cutoff"), force=task.get("force", False))
        record = backend.observables(params)
    except InterferometerError as e:
        return {"params": params.model_dump(), "failure": _failure(e)}
    return {"params": params.model_dump(), "record": record.model_dump(mode="python")}


def g2tau_task(task: Dict[str, Any]) -> Dict[str, Any]:
    params = SystemParams(**task["params"])
    settings = SolverSettings(**task["settings"])
    backend = ExactFockBackend(settings, cutoff=task.get("cutoff"), force=task.get("force", False))
    try:
        curve = backend.g2_curve(params, task["taus"])
    except EmptyCavityError as e:
        return {"params": params.model_dump(), "empty": _failure(e)}
    except InterferometerError as e:
        return {"params": params.model_dump(), "failure": _failure(e)}
    return {"params": params.model_dump(), "curve": curve}


def _status(result: Any) -> str:
    return "failed" if isinstance(result, dict) and "failure" in result else "ok"


def compare_task(task: Dict[str, Any]) -> Dict[str, Any]:
    params = SystemParams(**task["params"])
    settings = SolverSettings(**task["settings"])
    options = CompareOptions(**task["options"])
    methods = [Method(m) for m in task["methods"]]
    try:
        row = compare(params, methods, options, settings)
    except InterferometerError as e:
        return {"params": params.model_dump(), "failure": _failure(e)}
    return {"params": params.model_dump(), "row": row.model_dump(mode="python")}


class SweepDispatcher:
    """Maps a task function over grid points, serially or on a process pool."""

    def __init__(self, workers: int = 1, log_level: str = "WARNING", log_file: Optional[str] = None):
        self.workers = max(1, int(workers))
        self.log_level = log_level
        self.log_file = log_file
        self.logger = structlog.get_logger("sweep_dispatcher")

    def map(self, fn: Callable[[Dict[str, Any]], Any], tasks: Sequence[Dict[str, Any]]) -> List[Any]:
        """Results in task order, independent of the worker count."""
        self.logger.info("Dispatching sweep", tasks=len(tasks), workers=self.workers)
        if self.workers == 1 or len(tasks) <= 1:
            results = []
            for index, task in enumerate(tasks):
                result = fn(task)
                log_sweep_point(self.logger, fn.__name__, index, len(tasks), _status(result))
                results.append(result)
            return results

        with ProcessPoolExecutor(
            max_workers=self.workers,
            initializer=setup_logging,
            initargs=(self.log_level, self.log_file, "sweep_worker"),
        ) as pool:
            results = list(pool.map(fn, tasks, chunksize=1))
        for index, result in enumerate(results):
            log_sweep_point(self.logger, fn.__name__, index, len(tasks), _status(result))
        return results

    def mapper(self) -> Callable[..., List[Any]]:
        """Order-preserving map usable where an iterable-returning `map` is expected."""
        return lambda fn, tasks: self.map(fn, list(tasks))
