"""securebeam: artificial-noise-aided secure beamforming for dual-function
radar-communication transmitters.

The package designs transmit beamformers and an artificial-noise covariance
that keep the radar target's intercept SINR low while guaranteeing per-user
SINR, a total power budget, and a radar beampattern, for both a precisely
known and an uncertain target angle.
"""

__version__ = "0.1.0"

# Every dense operation in this package is small (a few hundred rows at
# most); threaded BLAS pays worker wake-up latency on each call and ends up
# ~10x slower than single-threaded execution.  Parallelism belongs at the
# Monte-Carlo trial level (process pool), not inside the linear algebra.
import threadpoolctl as _threadpoolctl

_BLAS_LIMIT = _threadpoolctl.threadpool_limits(limits=1)
