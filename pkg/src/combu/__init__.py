"""Mixed per-dimension activations for dense MLPs, exact compilation of
symbolic expressions into network weights, and a formula benchmark harness."""

from .activations import (
    Activation,
    Assignment,
    CombUSpec,
    ELU,
    GELU,
    LReLU,
    NLReLU,
    ReLU,
    SELU,
    Sigmoid,
    SoftPlus,
    Swish,
    Tanh,
    act_eval,
    act_grad,
    assign_dims,
    combu_forward,
    default_combu,
    default_ratios,
    dim_counts,
    make_combu,
    parse_activation,
)
from .bench import DatasetSpec, ExperimentConfig, RunReport, run_experiment
from .compiler import (
    Gadget,
    compile_ast,
    compose,
    compose_gadgets,
    exp_gadget,
    identity_gadget,
    log_gadget,
    pad_gadget,
    run_gadget,
    to_network,
    verify,
)
from .data import (
    GENERATORS,
    Preprocessor,
    SplitData,
    TabularDataset,
    csv_read,
    csv_write,
    gen_ar,
    gen_bs,
    gen_gs,
    gen_ns,
    make_classification,
    split_and_fit,
)
from .errors import (
    BoundError,
    CombuError,
    ConditioningError,
    DomainError,
    ParameterError,
    SchemaError,
    ShapeError,
    TrainingDiverged,
)
from .expr import Bounds, evaluate, format_sexpr, infer_bounds, parse_sexpr
from .linalg import affine, matmul
from .metrics import accuracy, macro_f1, mae, mse, rank_values
from .network import (
    Layer,
    LayeredNetwork,
    backward,
    forward,
    load_network,
    loss,
    loss_grad,
    save_network,
    softmax,
)
from .rng import Discrete, ExpScaled, IntUniform, Normal, Rng, Uniform, sample
from .training import (
    AdamState,
    Scheme,
    TrainConfig,
    adam_step,
    build_mlp,
    parse_scheme,
    predict,
    train,
)

__version__ = "0.1.0"
