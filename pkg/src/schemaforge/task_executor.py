# Copyright 2024 The schemaforge Authors. All Rights Reserved.
#
# Licensed under the Apache License, Version 2.0 (the "License"). You may not use this file except in compliance
# with the License. A copy of the License is located at
#
# http://www.apache.org/licenses/LICENSE-2.0
#
# or in the "LICENSE.txt" file accompanying this file. This file is distributed on an "AS IS" BASIS, WITHOUT WARRANTIES
# OR CONDITIONS OF ANY KIND, express or implied. See the License for the specific language governing permissions and
# limitations under the License.

import logging
from concurrent.futures import Future, ThreadPoolExecutor
from functools import partial
from threading import Event, Semaphore
from typing import Callable, Iterable, List, TypeVar

from common.utils import grouper

logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


class TaskExecutor:
    """Bounded thread pool used for per-record work on collections."""

    class TaskShutdownError(RuntimeError):
        """Exception raised if shutdown has been requested."""

        pass

    def __init__(self, worker_pool_size, max_backlog):
        self._max_backlog = max_backlog
        self._executor_limit = Semaphore(max_backlog)
        self._shutdown_event = Event()
        self._executor_pool = ThreadPoolExecutor(max_workers=worker_pool_size)

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        self.shutdown(wait=True)

    def is_shutdown(self) -> bool:
        return self._shutdown_event.is_set()

    def raise_if_shutdown(self) -> None:
        if self.is_shutdown():
            raise TaskExecutor.TaskShutdownError()

    def queue_task(self, task: Callable[[], R]) -> Future:
        """Submit task, waiting for a free backlog slot first."""

        def queue_executor_task_callback(semaphore, *args):
            semaphore.release()

        self.raise_if_shutdown()
        self._executor_limit.acquire()
        future = self._executor_pool.submit(task)
        future.add_done_callback(partial(queue_executor_task_callback, self._executor_limit))
        return future

    def map_ordered(self, function: Callable[[T], R], items: Iterable[T]) -> List[R]:
        """
        Apply function to every item and return the results in input order.

        The first task exception is raised once its batch has completed.
        """
        results = []
        for batch in grouper(items, self._max_backlog):
            futures = [self.queue_task(partial(function, item)) for item in batch]
            results.extend(future.result() for future in futures)
        return results

    def shutdown(self, wait: bool = False, cancel_futures: bool = True) -> None:
        if self._executor_pool:
            logger.debug("Shutting down task executor, wait=%s", wait)
            self._shutdown_event.set()
            self._executor_pool.shutdown(wait=wait, cancel_futures=cancel_futures)
            self._executor_pool = None


def map_in_order(function: Callable[[T], R], items: Iterable[T], workers=1) -> List[R]:
    """Run function over items, on a TaskExecutor when more than one worker is requested."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [function(item) for item in items]
    with TaskExecutor(worker_pool_size=workers, max_backlog=workers * 4) as executor:
        return executor.map_ordered(function, items)
