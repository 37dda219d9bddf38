"""Scorer adapters for the morphline engine.

Each adapter is a one-shot command: it receives an absolute image path as
its single argument, writes exactly one JSON object to stdout and exits 0.
Failure paths exit nonzero with empty stdout (4 means "no face found").

These are lightweight classical implementations. The heavyweight models the
protocol was designed around (a 68-landmark regressor, a deepfake CNN, a
face-embedding network) need weight files that cannot ship with this
repository; the command-line surface and wire format here are exactly what
such wrappers use, so swapping one in changes nothing on the engine side.
"""

__version__ = "0.1.0"
