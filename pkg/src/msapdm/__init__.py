"""MSAP-DM: multi-scale attention purification with residual shrinkage
denoising for sensor-based human activity recognition, plus a deployment
latency benchmark harness. Pure numpy with an optional compiled kernel
core (see msapdm.kernels.BACKEND).
"""

__version__ = "0.1.0"

from .network import Model, ModelConfig, build, load_weights, save_weights
from .training import TrainConfig, fit, gradient_check

__all__ = [
    "Model", "ModelConfig", "build", "load_weights", "save_weights",
    "TrainConfig", "fit", "gradient_check", "__version__",
]
