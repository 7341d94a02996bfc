"""Spline-edge (Kolmogorov-Arnold) autoencoder layers and benchmarks."""

from .splines import SplineGrid, basis_derivative, basis_eval, spline_eval
from .layers import (
    BatchNorm,
    Conv1d,
    ConvTranspose1d,
    Dropout,
    Flatten,
    Linear,
    NumericError,
    Reshape,
    Sequential,
    SiLU,
    Tanh,
)
from .losses import LossValue, kl_divergence, mse_loss
from .kan import KanConv1d, KanLinear
from .gradcheck import gradcheck, gradcheck_suite
from .models import (
    Model,
    ModelSpec,
    build,
    expected_param_count,
    load_model,
    save_model,
)
from .optim import Adam, SGD, TrainConfig, train
from .data import (
    Corruption,
    DatasetSplit,
    LabeledSeries,
    corrupt,
    load_ucr_tsv,
    load_dataset,
    make_synthetic_split,
    normalize,
    write_synthetic_corpus,
    write_ucr_tsv,
)
from .tasks import (
    TaskConfig,
    TaskReport,
    auc_score,
    efficiency_table,
    run_anomaly,
    run_denoising,
    run_generation,
    run_inpainting,
    run_reconstruction,
    run_task,
    timing_benchmark,
)

__version__ = "0.1.0"
