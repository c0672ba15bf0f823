"""Job service: registry-backed FIFO execution behind an HTTP API."""

from .app import create_app, serve
from .chunks import all_windows, window_bounds, window_result
from .jobs import (
    TERMINAL, TRANSITIONS, IllegalTransition, JobManager, JobRecord, JobStore, NotReady, RejectedSubmission,
    UnknownJob,
)
