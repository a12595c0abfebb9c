import logging
from typing import Optional

import prometheus_client as prom
from prometheus_client import REGISTRY, CollectorRegistry


class Metrics:
    def __init__(self, registry: CollectorRegistry = REGISTRY):
        """Initialize solver metrics with consistent naming"""
        self.registry = registry

        self.newton_iterations = prom.Counter(
            'rpm_newton_iterations',
            'Total number of damped Newton iterations performed',
            registry=self.registry
        )

        self.determinant_evaluations = prom.Counter(
            'rpm_determinant_evaluations',
            'Total number of Hankel determinant factorizations',
            registry=self.registry
        )

        self.precision_escalations = prom.Counter(
            'rpm_precision_escalations',
            'Times adaptive precision had to be raised',
            registry=self.registry
        )

        self.root_failures = prom.Counter(
            'rpm_root_failures',
            'Hankel roots that failed to converge',
            ['reason'],
            registry=self.registry
        )

        self.sequence_seconds = prom.Histogram(
            'rpm_sequence_seconds',
            'Wall time spent on one Hankel sequence',
            buckets=(0.1, 0.5, 1, 2.5, 5, 10, 30, 60, 120, 300),
            registry=self.registry
        )

        self.last_working_digits = prom.Gauge(
            'rpm_last_working_digits',
            'Working precision of the most recent sequence, in decimal digits',
            registry=self.registry
        )

    def record_sequence(self, digits: int, seconds: float):
        """Record one finished Hankel sequence"""
        logger = logging.getLogger(__name__)
        try:
            self.sequence_seconds.observe(seconds)
            self.last_working_digits.set(digits)
            logger.debug(f"Recorded sequence at {digits} digits in {seconds:.3f}s")
        except Exception as e:
            logger.error(f"Error recording metrics: {str(e)}", exc_info=True)

    def get_current_values(self) -> dict:
        """Get current values of all metrics for debugging"""
        return {
            'newton_iterations': self.newton_iterations._value.get(),
            'determinant_evaluations': self.determinant_evaluations._value.get(),
            'precision_escalations': self.precision_escalations._value.get(),
            'last_working_digits': self.last_working_digits._value.get(),
        }

    def write(self, path: str, registry: Optional[CollectorRegistry] = None):
        """Dump the registry in Prometheus text format"""
        logger = logging.getLogger(__name__)
        try:
            prom.write_to_textfile(path, registry or self.registry)
        except Exception as e:
            logger.error(f"Error writing metrics to {path}: {str(e)}", exc_info=True)


# Create a single instance for the application
metrics = Metrics()
