"""Dense float64 matrix operations, a gradient tape and a finite-difference oracle."""
from .gradcheck import GradcheckResult, check_gradients, finite_diff, relative_error
from .linear import LinearMap, MultiHeadParams
from .ops import (
    add,
    as_matrix,
    attention,
    concat_cols,
    concat_rows,
    cross_attention,
    cross_entropy,
    layer_norm,
    linear,
    matmul,
    mean_rows,
    mul,
    multi_head_cross_attention,
    scale,
    softmax_rows,
    sub,
    total,
    transpose,
    weighted_sum,
)
from .tape import Gradients, Tape, Var, value_of
from .tree import leaves, map_leaves, replace_leaf, track, untrack


def backward(tape: Tape, output: Var) -> Gradients:
    return tape.backward(output)


LN_EPS = 1e-5
