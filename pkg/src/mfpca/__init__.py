"""l1-kernel PCA for chemical sensor anomaly detection.

The kernel covariance is built from a multiplication-free dot product, so it
needs only sign and min operations. Regular l2-PCA and recursive l1-PCA are
included as baselines.
"""

from mfpca.detect import (
    Calibration,
    CsdReport,
    calibrate_threshold,
    csd,
    detect_multi_sensor,
    detect_single_sensor,
    normalize,
    reconstruct,
    segment,
)
from mfpca.eval import RocCurve, roc_auc
from mfpca.kernel import KernelKind, OpCount, kernel_covariance, mf_dot
from mfpca.linalg import EigenBasis, SymMatrix, dominant_eigenvector, eigendecompose
from mfpca.pca import Method, PcaMethod, PrincipalBasis, fit
from mfpca.recording import GroundTruth, SensorRecording
from mfpca.synth import SynthConfig, generate

__version__ = "0.1.0"

__all__ = [
    "Calibration",
    "CsdReport",
    "EigenBasis",
    "GroundTruth",
    "KernelKind",
    "Method",
    "OpCount",
    "PcaMethod",
    "PrincipalBasis",
    "RocCurve",
    "SensorRecording",
    "SymMatrix",
    "SynthConfig",
    "calibrate_threshold",
    "csd",
    "detect_multi_sensor",
    "detect_single_sensor",
    "dominant_eigenvector",
    "eigendecompose",
    "fit",
    "generate",
    "kernel_covariance",
    "mf_dot",
    "normalize",
    "reconstruct",
    "roc_auc",
    "segment",
]
