"""drivebench: real-time image perturbations and ADAS robustness benchmarking.

The library is organized as:

- ``image_ops``:   raster primitives (convolution, color spaces, FFT, warps)
- ``perturb``:     the graded perturbation catalog (33 kinds, 5 levels each)
- ``bench``:       per-frame latency micro-benchmark and budget gate
- ``metrics``:     IoU, success/completion rates, failure classes, jitter
- ``roadgen``:     seeded waypoint road generation and geometry queries
- ``simcore``:     built-in kinematic driving simulator with camera rendering
- ``expert``:      pure-pursuit / PID ground-truth driver, shadow collection
- ``agentproto``:  JSON-lines wire protocol for external agents
- ``harness``:     offline/online suites, shadow runs, augmentation export
- ``cli``:         command-line entry point
"""

__version__ = "0.1.0"
