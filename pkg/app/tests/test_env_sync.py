from pathlib import Path

from app.config import Settings


def parse_env_file(file_path):
    with open(file_path) as f:
        # Filter out empty lines and comments, extract keys
        return {
            line.split('=')[0].strip()
            for line in f.readlines()
            if line.strip() and not line.startswith('#')
        }


def test_env_example_matches_settings():
    """Verify that .env.example documents exactly the Settings fields."""

    # Get project root directory (2 levels up from tests folder)
    root_dir = Path(__file__).parent.parent.parent
    env_example_path = root_dir / '.env.example'
    assert env_example_path.exists(), ".env.example file not found"

    example_keys = parse_env_file(env_example_path)
    settings_keys = set(Settings.model_fields)

    error_msg = []
    missing_in_example = settings_keys - example_keys
    unknown_in_example = example_keys - settings_keys
    if missing_in_example:
        error_msg.append(f"Keys missing in .env.example: {', '.join(sorted(missing_in_example))}")
    if unknown_in_example:
        error_msg.append(f"Unknown keys in .env.example: {', '.join(sorted(unknown_in_example))}")

    assert not error_msg, "\n".join(error_msg)


def test_local_env_in_sync():
    """A local .env, when present, uses the same keys as .env.example."""
    root_dir = Path(__file__).parent.parent.parent
    env_path = root_dir / '.env'
    if not env_path.exists():
        return

    env_keys = parse_env_file(env_path)
    example_keys = parse_env_file(root_dir / '.env.example')
    assert env_keys == example_keys
