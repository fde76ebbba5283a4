"""Feature-based recognizer: STIPs, HoG/HoF, k-medoids codebook, chi-square SVM."""

from .codebook import Codebook, build_codebook, encode_histogram, kmedoids
from .features import (
    DESCRIPTOR_SIZE,
    ClipTooShortError,
    InterestPoint,
    StipParams,
    describe,
    describe_points,
    detect_stips,
    extract_descriptors,
)
from .flow import lucas_kanade, optical_flow
from .recognizer import BofConfig, load_bof, recognize_bof, save_bof, train_bof
from .svm import KsvmModel, NotTrainedError, chi2_kernel, predict_ksvm, train_ksvm

__all__ = [
    "DESCRIPTOR_SIZE",
    "BofConfig",
    "ClipTooShortError",
    "Codebook",
    "InterestPoint",
    "KsvmModel",
    "NotTrainedError",
    "StipParams",
    "build_codebook",
    "chi2_kernel",
    "describe",
    "describe_points",
    "detect_stips",
    "encode_histogram",
    "extract_descriptors",
    "kmedoids",
    "load_bof",
    "lucas_kanade",
    "optical_flow",
    "predict_ksvm",
    "recognize_bof",
    "save_bof",
    "train_bof",
    "train_ksvm",
]
