from app.utils.metrics import Metrics


def test_metrics_initialization(clean_registry):
    """Test metrics are properly initialized"""
    test_metrics = Metrics(registry=clean_registry)

    # Verify metric names
    assert test_metrics.newton_iterations._name == "rpm_newton_iterations"
    assert test_metrics.determinant_evaluations._name == "rpm_determinant_evaluations"
    assert test_metrics.precision_escalations._name == "rpm_precision_escalations"
    assert test_metrics.root_failures._name == "rpm_root_failures"
    assert test_metrics.sequence_seconds._name == "rpm_sequence_seconds"
    assert test_metrics.last_working_digits._name == "rpm_last_working_digits"


def test_metrics_registration(clean_registry):
    """Test metrics are registered with Prometheus"""
    Metrics(registry=clean_registry)

    # Get all registered metric names
    collectors = list(clean_registry._collector_to_names.values())
    registered_names = [name for names in collectors for name in names]

    assert any("rpm_newton_iterations" in name for name in registered_names)
    assert any("rpm_determinant_evaluations" in name for name in registered_names)
    assert any("rpm_sequence_seconds" in name for name in registered_names)
    assert any("rpm_last_working_digits" in name for name in registered_names)


def test_metrics_updates(clean_registry):
    """Test metrics can be updated"""
    test_metrics = Metrics(registry=clean_registry)

    test_metrics.newton_iterations.inc(3)
    assert test_metrics.newton_iterations._value.get() == 3

    test_metrics.root_failures.labels(reason="diverged").inc()
    assert test_metrics.root_failures.labels(reason="diverged")._value.get() == 1

    test_metrics.record_sequence(200, 1.5)
    values = test_metrics.get_current_values()
    assert values["last_working_digits"] == 200
    assert values["newton_iterations"] == 3
    assert values["precision_escalations"] == 0


def test_metrics_write_textfile(clean_registry, tmp_path):
    """Metrics dump in the Prometheus text format"""
    test_metrics = Metrics(registry=clean_registry)
    test_metrics.record_sequence(120, 0.2)

    path = tmp_path / "metrics.prom"
    test_metrics.write(str(path))

    text = path.read_text()
    assert "rpm_last_working_digits 120.0" in text
    assert "rpm_sequence_seconds_count 1.0" in text


def test_record_sequence_swallows_errors(clean_registry):
    test_metrics = Metrics(registry=clean_registry)
    test_metrics.sequence_seconds = None
    # Logged, not raised
    test_metrics.record_sequence(50, 0.1)
    assert test_metrics.last_working_digits._value.get() == 0


def test_write_swallows_errors(clean_registry, tmp_path):
    test_metrics = Metrics(registry=clean_registry)
    missing = tmp_path / "no-such-dir" / "metrics.prom"
    # Logged, not raised
    test_metrics.write(str(missing))
    assert not missing.exists()
