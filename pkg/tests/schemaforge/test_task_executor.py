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

import threading
import time

import pytest
from assertpy import assert_that, soft_assertions
from schemaforge.task_executor import TaskExecutor, map_in_order


def test_task_executor():
    def get_task(value):
        def task():
            return value + 1

        return task

    task_executor = TaskExecutor(worker_pool_size=3, max_backlog=10)

    futures = {value: task_executor.queue_task(get_task(value)) for value in range(10, 20)}

    with soft_assertions():
        for value, future in futures.items():
            assert_that(future.result()).is_equal_to(value + 1)

    task_executor.shutdown()


def test_full_backlog_waits_for_a_free_slot():
    def get_task(value):
        def task():
            time.sleep(value)
            return value + 1

        return task

    task_executor = TaskExecutor(worker_pool_size=1, max_backlog=1)

    first = task_executor.queue_task(get_task(0.2))
    second = task_executor.queue_task(get_task(0))

    # The second task only queues once the first released its slot
    assert_that(first.done()).is_true()
    assert_that(first.result()).is_equal_to(1.2)
    assert_that(second.result()).is_equal_to(1)

    task_executor.shutdown()


def test_shutdown_cancels_queued_tasks():
    started, release = threading.Event(), threading.Event()

    def block():
        started.set()
        return release.wait(5)

    task_executor = TaskExecutor(worker_pool_size=1, max_backlog=2)

    running = task_executor.queue_task(block)
    started.wait(5)
    queued = task_executor.queue_task(lambda: 1)
    task_executor.shutdown()
    release.set()

    assert_that(queued.cancelled()).is_true()
    assert_that(running.result()).is_true()


def test_queue_after_shutdown():
    task_executor = TaskExecutor(worker_pool_size=1, max_backlog=1)
    task_executor.shutdown()

    assert_that(task_executor.is_shutdown()).is_true()
    assert_that(task_executor.queue_task).raises(TaskExecutor.TaskShutdownError).when_called_with(lambda: 1)


def test_map_ordered_keeps_input_order():
    def slow_square(value):
        # Early items finish last
        time.sleep((10 - value) / 100)
        return value * value

    with TaskExecutor(worker_pool_size=4, max_backlog=3) as task_executor:
        results = task_executor.map_ordered(slow_square, range(10))

    assert_that(results).is_equal_to([value * value for value in range(10)])


@pytest.mark.parametrize("workers", [1, 4])
def test_map_in_order(workers):
    thread_names = set()

    def record_thread(value):
        thread_names.add(threading.current_thread().name)
        return str(value)

    assert_that(map_in_order(record_thread, iter(range(25)), workers=workers)).is_equal_to(
        [str(value) for value in range(25)]
    )
    if workers == 1:
        assert_that(thread_names).is_equal_to({threading.current_thread().name})
    else:
        assert_that(thread_names).does_not_contain(threading.current_thread().name)


def test_map_in_order_raises_task_errors():
    def fail_on_three(value):
        if value == 3:
            raise ValueError("three")
        return value

    with pytest.raises(ValueError, match="three"):
        map_in_order(fail_on_three, range(6), workers=2)
