"""Dyadic harmonic-analysis toolkit: weight constants, maximal and sparse operators."""

from ._core import (
    DomainError,
    MeshFunction,
    ParseError,
    SparseFamily,
    __version__,
    ainfty_constant,
    ap_constant,
    apvec_constant,
    build_cz_sparse,
    decomposition_check,
    gen_corpus,
    load_mesh,
    local_oscillation,
    median,
    multilinear_maximal,
    restrict_to_domain,
    sharpness_run,
    sparse_apply,
    store_mesh,
    theorem_names,
    verify,
    verify_sparse,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
