#include "homsim/analysis.hpp"
#include "homsim/cli.hpp"
#include "homsim/correlator.hpp"
#include "homsim/errors.hpp"
#include "homsim/model.hpp"
#include "homsim/pipeline.hpp"
#include "homsim/ptt.hpp"
#include "homsim/synth.hpp"

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

namespace py = pybind11;
using namespace homsim;

namespace {

template <class T>
py::array_t<T> to_array(const std::vector<T>& v) {
    py::array_t<T> out(static_cast<py::ssize_t>(v.size()));
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

std::vector<Timestamp> to_stream(const py::array_t<Timestamp, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 1) throw ValidationError("timestamps must be a 1-d array");
    return {a.data(), a.data() + a.size()};
}

/// Evaluate f(tau, p) elementwise over a scalar or array of delays.
template <class F>
py::object over_tau(py::object tau, const model::ModelParams& p, F f) {
    p.validate();
    if (py::isinstance<py::float_>(tau) || py::isinstance<py::int_>(tau)) return py::float_(f(tau.cast<double>(), p));
    auto t = tau.cast<py::array_t<double, py::array::forcecast>>();
    py::array_t<double> out(t.request().shape);
    const auto n = t.size();
    const double* in = t.data();
    double* o = out.mutable_data();
    for (py::ssize_t i = 0; i < n; ++i) o[i] = f(in[i], p);
    return std::move(out);
}

py::dict fit_to_dict(const analysis::FitResult& r) {
    py::dict params, errs;
    const double values[] = {r.params.eta, r.params.v0, r.params.tau_l_ps, r.params.tau_c_ps, r.params.g2_sp0,
                             r.params.delta_f_hz};
    py::list free;
    for (std::size_t k = 0; k < analysis::kParamCount; ++k) {
        params[analysis::kParamNames[k]] = values[k];
        errs[analysis::kParamNames[k]] = r.stderr_[k];
        if (r.free[k]) free.append(analysis::kParamNames[k]);
    }
    py::dict d;
    d["params"] = params;
    d["stderr"] = errs;
    d["chi2_reduced"] = r.chi2_reduced;
    d["converged"] = r.converged;
    d["n_iter"] = r.n_iter;
    d["free"] = free;
    d["message"] = r.message;
    return d;
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Laser / single-photon interference simulator";

    auto base = py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", base.ptr());
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);

    py::class_<model::ModelParams>(m, "ModelParams")
        .def(py::init([](double eta, double v0, double r, double t, double tau_l_ps, double tau_c_ps, double g2_sp0,
                         double delta_f_hz) {
                 model::ModelParams p{eta, v0, r, t, tau_l_ps, tau_c_ps, g2_sp0, delta_f_hz};
                 p.validate();
                 return p;
             }),
             py::arg("eta") = 0.2, py::arg("v0") = 0.85, py::arg("r") = 0.5, py::arg("t") = 0.5,
             py::arg("tau_l_ps") = 150'000.0, py::arg("tau_c_ps") = 115.0, py::arg("g2_sp0") = 0.03,
             py::arg("delta_f_hz") = 0.0)
        .def_readwrite("eta", &model::ModelParams::eta)
        .def_readwrite("v0", &model::ModelParams::v0)
        .def_readwrite("r", &model::ModelParams::r)
        .def_readwrite("t", &model::ModelParams::t)
        .def_readwrite("tau_l_ps", &model::ModelParams::tau_l_ps)
        .def_readwrite("tau_c_ps", &model::ModelParams::tau_c_ps)
        .def_readwrite("g2_sp0", &model::ModelParams::g2_sp0)
        .def_readwrite("delta_f_hz", &model::ModelParams::delta_f_hz)
        .def("validate", &model::ModelParams::validate)
        .def("__repr__", [](const model::ModelParams& p) {
            std::ostringstream s;
            s << "ModelParams(eta=" << p.eta << ", v0=" << p.v0 << ", r=" << p.r << ", t=" << p.t
              << ", tau_l_ps=" << p.tau_l_ps << ", tau_c_ps=" << p.tau_c_ps << ", g2_sp0=" << p.g2_sp0
              << ", delta_f_hz=" << p.delta_f_hz << ")";
            return s.str();
        });

    const auto p_default = model::ModelParams{};
    auto curve = [&](const char* name, double (*f)(double, const model::ModelParams&), const char* doc) {
        m.def(
            name, [f](py::object tau, const model::ModelParams& p) { return over_tau(std::move(tau), p, f); },
            py::arg("tau_ps"), py::arg("params") = p_default, doc);
    };
    curve("g2_cross_perp", &model::g2_cross_perp, "Cross-port correlation, orthogonal polarizations.");
    curve("g2_cross_par", &model::g2_cross_par, "Cross-port correlation, parallel polarizations.");
    curve("g2_auto_perp", &model::g2_auto_perp, "Same-port correlation, orthogonal polarizations.");
    curve("g2_auto_par", &model::g2_auto_par, "Same-port correlation, parallel polarizations.");
    curve("v_hom", &model::v_hom, "HOM visibility (g_perp - g_par) / g_perp.");
    curve("v_same_port", &model::v_same_port, "Same-port bunching visibility.");
    m.def("normalization", &model::normalization, py::arg("params") = p_default);
    m.def("optimal_eta", &model::optimal_eta, py::arg("g2_sp0"));
    m.def("background_peak", &model::background_peak, py::arg("eta"), py::arg("v0"));
    m.def("parse_duration_ps", &parse_duration_ps, py::arg("text"));
    m.def("parse_frequency_hz", &parse_frequency_hz, py::arg("text"));

    py::class_<correlator::CorrelationHistogram>(m, "Histogram")
        .def_readonly("bin_width_ps", &correlator::CorrelationHistogram::bin_width_ps)
        .def_readonly("tau_min_ps", &correlator::CorrelationHistogram::tau_min_ps)
        .def_readonly("tau_max_ps", &correlator::CorrelationHistogram::tau_max_ps)
        .def_readonly("n_a", &correlator::CorrelationHistogram::n_a)
        .def_readonly("n_b", &correlator::CorrelationHistogram::n_b)
        .def_readonly("duration_ps", &correlator::CorrelationHistogram::duration_ps)
        .def_property_readonly("counts", [](const correlator::CorrelationHistogram& h) { return to_array(h.counts); })
        .def_property_readonly("tau_ps",
                               [](const correlator::CorrelationHistogram& h) {
                                   std::vector<double> t(h.n_bins());
                                   for (std::size_t k = 0; k < t.size(); ++k) t[k] = h.bin_center(k);
                                   return to_array(t);
                               })
        .def_property_readonly("g2",
                               [](const correlator::CorrelationHistogram& h) -> py::object {
                                   if (!h.normalized) return py::none();
                                   std::vector<double> g(h.n_bins());
                                   for (std::size_t k = 0; k < g.size(); ++k) g[k] = (*h.normalized)[k].g2;
                                   return to_array(g);
                               })
        .def_property_readonly("sigma",
                               [](const correlator::CorrelationHistogram& h) -> py::object {
                                   if (!h.normalized) return py::none();
                                   std::vector<double> s(h.n_bins());
                                   for (std::size_t k = 0; k < s.size(); ++k) s[k] = (*h.normalized)[k].sigma;
                                   return to_array(s);
                               })
        .def("to_csv", [](const correlator::CorrelationHistogram& h) { return correlator::to_csv(h); })
        .def("__len__", &correlator::CorrelationHistogram::n_bins);

    m.def(
        "cross_correlate",
        [](const py::array_t<Timestamp, py::array::c_style | py::array::forcecast>& a,
           const py::array_t<Timestamp, py::array::c_style | py::array::forcecast>& b, std::int64_t bin_ps,
           std::int64_t tau_max_ps, std::optional<double> duration_ps, bool normalized) {
            auto h = correlator::cross_correlate(to_stream(a), to_stream(b), bin_ps, tau_max_ps, duration_ps);
            return normalized ? correlator::normalize(std::move(h)) : h;
        },
        py::arg("a"), py::arg("b"), py::arg("bin_ps"), py::arg("tau_max_ps"), py::arg("duration_ps") = py::none(),
        py::arg("normalized") = true);
    m.def(
        "auto_correlate",
        [](const py::array_t<Timestamp, py::array::c_style | py::array::forcecast>& a, std::int64_t bin_ps,
           std::int64_t tau_max_ps, std::optional<double> duration_ps, bool normalized) {
            auto h = correlator::auto_correlate(to_stream(a), bin_ps, tau_max_ps, duration_ps);
            return normalized ? correlator::normalize(std::move(h)) : h;
        },
        py::arg("stream"), py::arg("bin_ps"), py::arg("tau_max_ps"), py::arg("duration_ps") = py::none(),
        py::arg("normalized") = true);
    m.def("read_csv", &correlator::read_csv, py::arg("path"));
    m.def("parse_csv", &correlator::parse_csv, py::arg("text"));
    m.def("write_csv", &correlator::write_csv, py::arg("path"), py::arg("hist"));

    m.def(
        "read_ptt",
        [](const std::string& path) {
            const auto f = ptt::read_file(path);
            py::list channels;
            for (std::uint16_t c = 0; c < f.channel_count; ++c)
                channels.append(to_array(f.channel_ps(static_cast<std::uint8_t>(c))));
            return channels;
        },
        py::arg("path"), "Per-channel timestamps in picoseconds.");
    m.def(
        "write_ptt",
        [](const std::string& path, const py::array_t<Timestamp, py::array::c_style | py::array::forcecast>& d1,
           const py::array_t<Timestamp, py::array::c_style | py::array::forcecast>& d2) {
            ptt::write_file(path, ptt::from_clicks({to_stream(d1), to_stream(d2)}));
        },
        py::arg("path"), py::arg("d1"), py::arg("d2"));

    m.def(
        "simulate",
        [](const std::string& config_json, std::optional<std::uint64_t> seed) {
            auto cfg = pipeline::parse_config(config_json);
            if (seed) cfg.seed = *seed;
            pipeline::RunResult r;
            {
                py::gil_scoped_release nogil;
                r = pipeline::run(cfg);
            }
            py::dict d;
            d["d1"] = to_array(r.clicks.d1);
            d["d2"] = to_array(r.clicks.d2);
            d["duration_ps"] = r.duration_ps;
            d["manifest"] = pipeline::manifest_json(cfg, r);
            return d;
        },
        py::arg("config_json"), py::arg("seed") = py::none(),
        "Run synth, interference and detectors from a JSON config.");

    m.def(
        "fit_hom",
        [](const correlator::CorrelationHistogram& perp, const correlator::CorrelationHistogram& par,
           const model::ModelParams& init, std::optional<std::vector<std::string>> free, double jitter_sigma_ps,
           bool bin_average) {
            analysis::FitOptions opts;
            opts.jitter_sigma_ps = jitter_sigma_ps;
            opts.bin_average = bin_average;
            const auto mask = free ? pipeline::parse_free_mask(*free) : analysis::kDefaultFreeMask;
            return fit_to_dict(analysis::fit_hom(perp, par, init, mask, opts));
        },
        py::arg("perp"), py::arg("par"), py::arg("init") = p_default, py::arg("free") = py::none(),
        py::arg("jitter_sigma_ps") = 0.0, py::arg("bin_average") = true);

    m.def(
        "cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            const int code = cli::run(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run a command line; returns (exit_code, stdout, stderr).");
}
