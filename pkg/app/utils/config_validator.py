import os

import structlog

from app.config import Settings, get_settings
from app.utils.errors import ConfigurationError

logger = structlog.get_logger(__name__)


def validate_run_config(settings: Settings = None, digits=None, target_digits=None, D_max=None, d=None, jobs=None):
    """Cross-field checks a single settings field cannot express

    Explicit arguments are the effective values after CLI and config-file
    overrides; missing ones fall back to ``settings``.

    Raises:
        ConfigurationError: If the combination is invalid
    """
    settings = settings or get_settings()
    digits = settings.RPM_PRECISION if digits is None else digits
    target_digits = settings.RPM_TARGET_DIGITS if target_digits is None else target_digits
    D_max = settings.RPM_DMAX if D_max is None else D_max
    d = settings.RPM_DISPLACEMENT if d is None else d
    jobs = settings.RPM_JOBS if jobs is None else jobs

    logger.info("run_configuration", config=settings.model_dump(mode="json"))

    if digits is not None and digits < target_digits + 5:
        raise ConfigurationError(
            f"fixed precision of {digits} digits cannot certify {target_digits} target digits"
        )

    if d > 2 * D_max:
        raise ConfigurationError(f"displacement {d} is out of proportion to D_max = {D_max}")

    cpus = os.cpu_count() or 1
    if jobs > cpus:
        logger.warning("jobs_exceed_cpus", jobs=jobs, cpus=cpus)

    logger.info("configuration_valid")
    return {"digits": digits, "target_digits": target_digits, "D_max": D_max, "d": d, "jobs": jobs}
