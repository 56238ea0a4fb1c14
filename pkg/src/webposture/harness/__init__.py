"""Local harness used by the probe suite, the CLI, and the tests."""

from .certs import generate_harness_certs
from .server import Harness, HarnessConfig

__all__ = ["Harness", "HarnessConfig", "generate_harness_certs"]
