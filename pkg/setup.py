from setuptools import setup, find_packages

setup(
    name="riccati_pade_resonances",
    version="0.1.0",
    packages=find_packages(exclude=["app.tests"]),
    install_requires=[
        "python-dotenv",
        "pydantic>=2.0",
        "pydantic-settings>=2.2",
        "structlog",
        "prometheus-client",
        "mpmath>=1.3",
        "numpy",
        "scipy",
        "click>=8.2",
    ],
    entry_points={
        "console_scripts": [
            "rpm=app.main:cli",
        ],
    },
)
