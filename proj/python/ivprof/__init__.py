"""Complier/always-taker/never-taker profiling for binary-instrument studies.

The heavy lifting lives in the compiled extension ``ivprof._ivprof``; this
package re-exports it and adds a small array-friendly helper.
"""

from ivprof._ivprof import (  # noqa: F401
    RNG_NAME,
    BootstrapResult,
    CoverageResult,
    CoverageRow,
    CovariateProfile,
    Dataset,
    DgpParams,
    Estimate,
    IvprofError,
    LabeledDataset,
    MomentVector,
    ProfileReport,
    ShareProfile,
    ShareSes,
    StrataShares,
    Stratum,
    Warning,
    __version__,
    bootstrap_se,
    complier_mean,
    compute_moments,
    compute_zd_moments,
    confidence_interval,
    generate_fixed,
    generate_random,
    gradient,
    ingest_csv,
    observable_strata_means,
    oracle_complier_mean,
    plugin_se,
    profile_dataset,
    run_coverage_experiment,
    sample_covariance,
    strata_shares,
    strata_share_se,
)


def profile(z, d, x, names=None, **options):
    """Profile strata covariate means straight from arrays.

    ``z`` and ``d`` are 0/1 sequences, ``x`` is an (n,) or (n, k) array of
    covariates (NaN marks a missing cell). Keyword options are forwarded to
    :func:`profile_dataset`.
    """
    data = Dataset(list(map(int, z)), list(map(int, d)), x, list(names or []))
    return profile_dataset(data, **options)
