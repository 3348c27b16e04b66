#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ivprof/csv.hpp"
#include "ivprof/moments.hpp"
#include "ivprof/report.hpp"
#include "ivprof/simulate.hpp"
#include "ivprof/variance.hpp"
#include "ivprof/version.hpp"

namespace py = pybind11;
using namespace ivprof;

namespace {

Dataset make_dataset(const std::vector<int>& z, const std::vector<int>& d,
                     py::array_t<double, py::array::c_style | py::array::forcecast> x,
                     std::vector<std::string> names) {
    std::vector<std::uint8_t> zu(z.begin(), z.end());
    std::vector<std::uint8_t> du(d.begin(), d.end());
    std::vector<std::vector<double>> cols;
    const auto buf = x.request();
    if (buf.ndim == 1) {
        const auto* p = static_cast<const double*>(buf.ptr);
        cols.emplace_back(p, p + buf.shape[0]);
    } else if (buf.ndim == 2) {
        const auto n = static_cast<std::size_t>(buf.shape[0]);
        const auto k = static_cast<std::size_t>(buf.shape[1]);
        const auto* p = static_cast<const double*>(buf.ptr);
        cols.assign(k, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < k; ++j) cols[j][i] = p[i * k + j];
        }
    } else {
        throw Error("invalid-data", "x must be a 1-D or 2-D array");
    }
    return Dataset(std::move(zu), std::move(du), std::move(cols), std::move(names));
}

py::array_t<double> to_array(const Vector6& v) {
    py::array_t<double> out(std::vector<py::ssize_t>{6});
    auto r = out.mutable_unchecked<1>();
    for (int i = 0; i < 6; ++i) r(i) = v(i);
    return out;
}

py::array_t<double> to_array(const Matrix6& m) {
    py::array_t<double> out({6, 6});
    auto r = out.mutable_unchecked<2>();
    for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) r(i, j) = m(i, j);
    }
    return out;
}

SeChoice se_choice_from(const std::string& s) {
    if (s == "plugin") return SeChoice::plugin;
    if (s == "bootstrap") return SeChoice::bootstrap;
    if (s == "both") return SeChoice::both;
    throw Error("invalid-config", "se must be plugin, bootstrap or both");
}

ReportFormat format_from(const std::string& s) {
    if (s == "text") return ReportFormat::text;
    if (s == "json") return ReportFormat::json;
    if (s == "csv") return ReportFormat::csv;
    throw Error("invalid-config", "format must be text, json or csv");
}

}  // namespace

PYBIND11_MODULE(_ivprof, m) {
    m.doc() = "Complier/always-taker/never-taker profiling for binary-instrument studies";
    m.attr("__version__") = kVersion;
    m.attr("RNG_NAME") = kRngName;

    static py::exception<Error> exc(m, "IvprofError");
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const Error& e) {
            exc(("[" + e.code() + "] " + e.what()).c_str());
        }
    });

    py::class_<Warning>(m, "Warning")
        .def_readonly("code", &Warning::code)
        .def_readonly("message", &Warning::message)
        .def("__repr__", [](const Warning& w) { return "[" + w.code + "] " + w.message; });

    py::class_<Dataset>(m, "Dataset")
        .def(py::init(&make_dataset), py::arg("z"), py::arg("d"), py::arg("x"),
             py::arg("names") = std::vector<std::string>{})
        .def_property_readonly("n", &Dataset::n)
        .def_property_readonly("num_covariates", &Dataset::num_covariates)
        .def_property_readonly("covariate_names", &Dataset::covariate_names)
        .def("covariate", [](const Dataset& d, int j) {
            const auto x = d.covariate(j);
            py::array_t<double> out(std::vector<py::ssize_t>{static_cast<py::ssize_t>(x.size())});
            auto r = out.mutable_unchecked<1>();
            for (py::ssize_t i = 0; i < r.shape(0); ++i) r(i) = x[static_cast<std::size_t>(i)];
            return out;
        });

    py::class_<MomentVector>(m, "MomentVector")
        .def_readonly("mu", &MomentVector::mu)
        .def_readonly("mu_vnt", &MomentVector::mu_vnt)
        .def_readonly("mu_vat", &MomentVector::mu_vat)
        .def_readonly("pi_vnt", &MomentVector::pi_vnt)
        .def_readonly("pi_vat", &MomentVector::pi_vat)
        .def_readonly("pi_z", &MomentVector::pi_z)
        .def_readonly("n", &MomentVector::n)
        .def_readonly("n_dropped", &MomentVector::n_dropped);

    py::class_<StrataShares>(m, "StrataShares")
        .def_readonly("pi_nt", &StrataShares::pi_nt)
        .def_readonly("pi_at", &StrataShares::pi_at)
        .def_readonly("pi_co", &StrataShares::pi_co)
        .def_readonly("first_stage", &StrataShares::first_stage);

    m.def("compute_moments",
          py::overload_cast<const Dataset&, int>(&compute_moments),
          py::arg("data"), py::arg("covariate_index"));
    m.def("compute_zd_moments", py::overload_cast<const Dataset&>(&compute_moments),
          py::arg("data"), "Indicator-only moments over all rows (X treated as 0)");
    m.def("strata_shares", &strata_shares, py::arg("moments"));
    m.def("complier_mean", &complier_mean, py::arg("moments"));
    m.def("observable_strata_means", [](const Dataset& d, int j) {
        const auto r = observable_strata_means(d, j);
        using optd = std::optional<double>;
        return py::make_tuple(r.mu_nt ? optd(*r.mu_nt) : optd(),
                              r.mu_at ? optd(*r.mu_at) : optd());
    }, py::arg("data"), py::arg("covariate_index"));

    m.def("gradient", [](const MomentVector& mv) { return to_array(gradient(mv)); },
          py::arg("moments"));
    m.def("sample_covariance", [](const Dataset& d, int j) {
        return to_array(sample_covariance(d, j));
    }, py::arg("data"), py::arg("covariate_index"));
    m.def("plugin_se", [](const MomentVector& mv,
                          py::array_t<double, py::array::c_style | py::array::forcecast> sigma) {
        const auto r = sigma.unchecked<2>();
        if (r.shape(0) != 6 || r.shape(1) != 6) {
            throw Error("invalid-data", "sigma must be 6x6");
        }
        Matrix6 s;
        for (int i = 0; i < 6; ++i) {
            for (int j = 0; j < 6; ++j) s(i, j) = r(i, j);
        }
        return plugin_se(mv, s);
    }, py::arg("moments"), py::arg("sigma"));
    m.def("confidence_interval", &confidence_interval, py::arg("point"), py::arg("se"),
          py::arg("level") = 0.95);

    py::class_<Estimate>(m, "Estimate")
        .def_readonly("point", &Estimate::point)
        .def_readonly("se", &Estimate::se)
        .def_readonly("ci_low", &Estimate::ci_low)
        .def_readonly("ci_high", &Estimate::ci_high)
        .def_property_readonly("method", [](const Estimate& e) { return to_string(e.method); })
        .def_readonly("n", &Estimate::n)
        .def_readonly("warnings", &Estimate::warnings);

    py::class_<BootstrapResult>(m, "BootstrapResult")
        .def_readonly("estimate", &BootstrapResult::estimate)
        .def_readonly("replicates", &BootstrapResult::replicates)
        .def_readonly("discarded", &BootstrapResult::discarded);

    m.def("bootstrap_se", [](const Dataset& d, int j, std::int64_t replicates,
                             std::uint64_t seed, double level, bool percentile) {
        BootstrapOptions o;
        o.replicates = replicates;
        o.seed = seed;
        o.level = level;
        o.percentile_ci = percentile;
        return bootstrap_se(d, j, o);
    }, py::arg("data"), py::arg("covariate_index"), py::arg("replicates") = 1000,
       py::arg("seed") = 0, py::arg("level") = 0.95, py::arg("percentile") = false);

    py::class_<ShareSes>(m, "ShareSes")
        .def_readonly("se_pi_nt", &ShareSes::se_pi_nt)
        .def_readonly("se_pi_at", &ShareSes::se_pi_at)
        .def_readonly("se_pi_co", &ShareSes::se_pi_co);

    m.def("strata_share_se", [](const MomentVector& mv, const Dataset& d) {
        return strata_share_se(mv, sample_covariance(d));
    }, py::arg("moments"), py::arg("data"));

    // ---- simulation ----
    py::enum_<Stratum>(m, "Stratum")
        .value("complier", Stratum::complier)
        .value("always_taker", Stratum::always_taker)
        .value("never_taker", Stratum::never_taker);

    py::class_<DgpParams>(m, "DgpParams")
        .def_property_readonly("shares", [](const DgpParams& p) {
            return std::vector<double>(p.shares.begin(), p.shares.end());
        })
        .def_readonly("pi_z", &DgpParams::pi_z)
        .def_property_readonly("means", [](const DgpParams& p) {
            return std::vector<double>{p.strata[0].mean, p.strata[1].mean, p.strata[2].mean};
        })
        .def_property_readonly("sds", [](const DgpParams& p) {
            return std::vector<double>{p.strata[0].sd, p.strata[1].sd, p.strata[2].sd};
        });

    py::class_<LabeledDataset>(m, "LabeledDataset")
        .def_readonly("data", &LabeledDataset::data)
        .def_readonly("strata", &LabeledDataset::strata)
        .def_readonly("params", &LabeledDataset::params)
        .def_readonly("true_mu_co", &LabeledDataset::true_mu_co);

    m.def("generate_fixed", [](std::int64_t n, std::uint64_t seed) {
        FixedDgpConfig c;
        c.n = n;
        c.seed = seed;
        return generate_fixed(c);
    }, py::arg("n"), py::arg("seed") = 0);
    m.def("generate_random", [](std::int64_t n, std::uint64_t seed) {
        RandomDgpConfig c;
        c.n = n;
        c.seed = seed;
        return generate_random(c);
    }, py::arg("n"), py::arg("seed") = 0);
    m.def("oracle_complier_mean", &oracle_complier_mean, py::arg("labeled"));

    py::class_<CoverageRow>(m, "CoverageRow")
        .def_readonly("variant", &CoverageRow::variant)
        .def_readonly("n", &CoverageRow::n)
        .def_readonly("method", &CoverageRow::method)
        .def_readonly("replications", &CoverageRow::replications)
        .def_readonly("used", &CoverageRow::used)
        .def_readonly("excluded", &CoverageRow::excluded)
        .def_readonly("coverage", &CoverageRow::coverage)
        .def_readonly("mc_half_width", &CoverageRow::mc_half_width)
        .def_readonly("mean_estimate", &CoverageRow::mean_estimate)
        .def_readonly("empirical_sd", &CoverageRow::empirical_sd)
        .def_readonly("mean_se", &CoverageRow::mean_se)
        .def_readonly("rmse_se", &CoverageRow::rmse_se)
        .def_readonly("rmse_se_scaled", &CoverageRow::rmse_se_scaled);

    py::class_<CoverageResult>(m, "CoverageResult")
        .def_readonly("rows", &CoverageResult::rows)
        .def_readonly("rng", &CoverageResult::rng)
        .def_readonly("seed", &CoverageResult::seed)
        .def_readonly("level", &CoverageResult::level)
        .def_readonly("bootstrap_replicates", &CoverageResult::bootstrap_replicates)
        .def("to_csv", &emit_coverage_csv)
        .def("to_json", &emit_coverage_json);

    m.def("run_coverage_experiment",
          [](const std::string& variant, std::vector<std::int64_t> sizes, std::int64_t reps,
             std::int64_t bootstrap_replicates, bool with_bootstrap, double level,
             std::uint64_t seed, int threads) {
              CoverageConfig c;
              if (variant == "fixed") {
                  c.variant = DgpVariant::fixed;
              } else if (variant == "random") {
                  c.variant = DgpVariant::random;
              } else {
                  throw Error("invalid-config", "variant must be fixed or random");
              }
              if (!sizes.empty()) c.sizes = std::move(sizes);
              c.replications = reps;
              c.bootstrap_replicates = bootstrap_replicates;
              c.with_bootstrap = with_bootstrap;
              c.level = level;
              c.seed = seed;
              c.threads = threads;
              py::gil_scoped_release release;
              return run_coverage_experiment(c);
          },
          py::arg("variant") = "fixed", py::arg("sizes") = std::vector<std::int64_t>{},
          py::arg("reps") = 1000, py::arg("bootstrap_replicates") = 1000,
          py::arg("with_bootstrap") = true, py::arg("level") = 0.95, py::arg("seed") = 1,
          py::arg("threads") = 0);

    // ---- profiling pipeline ----
    py::class_<CovariateProfile>(m, "CovariateProfile")
        .def_readonly("name", &CovariateProfile::name)
        .def_readonly("n_used", &CovariateProfile::n_used)
        .def_readonly("n_dropped", &CovariateProfile::n_dropped)
        .def_readonly("complier", &CovariateProfile::complier)
        .def_readonly("always_taker", &CovariateProfile::always_taker)
        .def_readonly("never_taker", &CovariateProfile::never_taker)
        .def_readonly("sample", &CovariateProfile::sample)
        .def_readonly("pi_co", &CovariateProfile::pi_co)
        .def_readonly("pi_at", &CovariateProfile::pi_at)
        .def_readonly("pi_nt", &CovariateProfile::pi_nt)
        .def_readonly("monotonicity_violation", &CovariateProfile::monotonicity_violation)
        .def_readonly("warnings", &CovariateProfile::warnings);

    py::class_<ShareProfile>(m, "ShareProfile")
        .def_readonly("complier", &ShareProfile::complier)
        .def_readonly("always_taker", &ShareProfile::always_taker)
        .def_readonly("never_taker", &ShareProfile::never_taker)
        .def_readonly("sample", &ShareProfile::sample);

    py::class_<ProfileReport>(m, "ProfileReport")
        .def_readonly("n", &ProfileReport::n)
        .def_readonly("level", &ProfileReport::level)
        .def_readonly("se_methods", &ProfileReport::se_methods)
        .def_readonly("seed", &ProfileReport::seed)
        .def_readonly("rng", &ProfileReport::rng)
        .def_readonly("shares", &ProfileReport::shares)
        .def_readonly("covariates", &ProfileReport::covariates)
        .def_readonly("warnings", &ProfileReport::warnings)
        .def_readonly("monotonicity_violation", &ProfileReport::any_monotonicity_violation)
        .def("render", [](const ProfileReport& r, const std::string& format) {
            return emit_report(r, format_from(format));
        }, py::arg("format") = "text");

    m.def("profile_dataset",
          [](const Dataset& data, const std::string& se, std::int64_t bootstrap_replicates,
             double level, std::uint64_t seed, double weak_share_threshold, bool percentile) {
              ProfileOptions o;
              o.se = se_choice_from(se);
              o.bootstrap_replicates = bootstrap_replicates;
              o.level = level;
              o.seed = seed;
              o.weak_share_threshold = weak_share_threshold;
              o.percentile_ci = percentile;
              return profile_dataset(data, o);
          },
          py::arg("data"), py::arg("se") = "plugin", py::arg("bootstrap_replicates") = 1000,
          py::arg("level") = 0.95, py::arg("seed") = 1, py::arg("weak_share_threshold") = 0.01,
          py::arg("percentile") = false);

    m.def("ingest_csv", [](const std::string& path, const std::string& instrument,
                           const std::string& treatment, std::vector<std::string> covariates,
                           const std::string& match_id) {
        IngestOptions o;
        o.instrument = instrument;
        o.treatment = treatment;
        o.covariates = std::move(covariates);
        o.match_id = match_id;
        IngestResult r = ingest_csv(path, o);
        return py::make_tuple(r.data, r.missing_per_covariate, r.skipped_columns);
    }, py::arg("path"), py::arg("instrument") = "z", py::arg("treatment") = "d",
       py::arg("covariates") = std::vector<std::string>{}, py::arg("match_id") = "");
}
