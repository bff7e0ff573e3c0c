"""Print which convolution kernel backend is active and why."""

from . import available_backends, backend_name

print(f"active: {backend_name()}")
print(f"available: {', '.join(available_backends())}")
