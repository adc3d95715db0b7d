"""asaukit: smooth trainable approximations of the two-argument maximum.

The package bundles the scalar activation family and its analytic partials,
curve/error tooling, a minimal dense/conv network stack with exact
reverse-mode gradients, losses and Adam, classification and segmentation
metrics, seeded synthetic datasets, and the `asaukit` CLI.
"""

__version__ = "0.1.0"

from .activations import (AsauGrad, AsauParams, BaselineKind, asau_forward,
                          asau_pair, asau_partials, baseline_derivative,
                          baseline_forward, exact_max2, param_mish,
                          stable_softplus)
from .curves import CurveTable, SweepReport, beta_sweep, build_curve_table, sup_error
from .metrics import (ConfusionMatrix, accuracy, confusion_from_predictions,
                      dice_binary, iou_binary, macro_prf, mcc_multiclass,
                      mean_over_cases, micro_prf, seg_precision_recall)
from .nn import (Activation, AsauSpec, BaselineSpec, Conv2d, Dense, Flatten,
                 MaxPool2x2, Network, ParamStore, Upsample2x, load_checkpoint,
                 numeric_grad_check, save_checkpoint)
from .optim import AdamState, adam_init, adam_step
from .rng import SplitMix64
from .tensor import NonFiniteError, Tensor
from .train import TrainConfig, TrainResult, TrainingDiverged, train_loop
