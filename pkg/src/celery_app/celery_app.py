# src/celery_app/celery_app.py
from celery import Celery

from core.settings import BROKER_URL, RESULT_BACKEND

# No broker configured: run every task in-process (eager)
EAGER = BROKER_URL is None

celery_app = Celery(
    "latentlabel_tasks",
    broker=BROKER_URL or "memory://",
    backend=RESULT_BACKEND or "cache+memory://",
    include=["celery_app.tasks"],
)

celery_app.conf.update(
    task_routes={
        "grid_cell_task": {"queue": "grid"},
        "cv_fold_task": {"queue": "cv"},
        "celery_app.health_check": {"queue": "default"},
    },
    task_default_queue="default",
    task_always_eager=EAGER,
    task_eager_propagates=True,
    task_serializer="json",
    result_serializer="json",
    accept_content=["json"],
    # one fit per worker slot; fits are long and CPU-bound
    worker_prefetch_multiplier=1,
    task_acks_late=True,
    task_reject_on_worker_lost=True,
    broker_connection_retry_on_startup=True,
    result_expires=3600,
)


@celery_app.task(name="celery_app.health_check")
def health_check():
    return "✅ Celery is alive!"
