# global command middleware
import time
from collections.abc import Callable
from datetime import datetime, timezone
from uuid import uuid4

from loguru import logger

from hsap.core.exceptions import EXIT_OK, HsapException, handle_hsap_exception, is_expected_failure


def monitor_command(command: str, handler: Callable[[], int]) -> int:
    request_id = uuid4().hex
    request_datetime = datetime.now(timezone.utc).isoformat()
    start_time = time.perf_counter()
    try:
        exit_code = handler()
    except Exception as e:
        exit_code = handle_hsap_exception(e)
        code = e.code if isinstance(e, HsapException) else type(e).__name__
        if is_expected_failure(e):
            logger.error(f"Command {command} failed [{code}]: {str(e)}")
        else:
            logger.exception(f"Command {command} crashed [{code}]: {str(e)}")
    response_time = round(time.perf_counter() - start_time, 4)
    logger.info(
        "Command info: "
        f"Request id: {request_id}, "
        f"Command: {command}, "
        f"Request datetime: {request_datetime}, "
        f"Response time: {response_time}, "
        f"Exit code: {exit_code}, "
        f"Successful: {exit_code == EXIT_OK}"
    )
    return exit_code
