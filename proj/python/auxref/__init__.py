"""Auxiliary Householder reflections f(x) = H(Wx) x.

Vectors are 1-D float64 arrays; batches are (d, n) arrays whose columns are
samples. Reflection chains are (k, d) arrays with rows v_1 ... v_k, applied
as H(v_1) ... H(v_k) x.
"""

import json

from ._auxref import (
    AuxReflection,
    AuxrefError,
    DegenerateReflection,
    DimensionMismatch,
    InvalidArgument,
    NonFiniteValue,
    NotOrthogonal,
    NotSymmetric,
    SingularA,
    SingularJacobian,
    SingularMatrix,
    align,
    build_weights,
    chain_apply,
    chain_apply_batch,
    check_invertibility_condition,
    decompose_orthogonal,
    lemma5_certificate,
    materialize,
    newton_inverse,
    random_chain,
    random_orthogonal,
    reflect,
    run_bench,
    run_training,
    run_verification_json,
)


def run_verification(suite="all", d_list=(2, 4, 8), trials=50, seed=42):
    """Run the verification suites and return the report as a dict."""
    return json.loads(run_verification_json(suite, list(d_list), trials, seed))


__all__ = [name for name in dir() if not name.startswith("_") and name != "json"]
