#include "homsim/cli.hpp"

#include "homsim/analysis.hpp"
#include "homsim/correlator.hpp"
#include "homsim/diagnostics.hpp"
#include "homsim/errors.hpp"
#include "homsim/model.hpp"
#include "homsim/pipeline.hpp"
#include "homsim/ptt.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace homsim::cli {

namespace {

std::string fmt(double v) {
    char buf[32];
    const auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, p);
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Write to `path`, or to `out` when the path is empty or "-".
void emit(const std::string& path, const std::string& text, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << text;
        return;
    }
    std::ofstream f(path, std::ios::binary);
    if (!f) throw IoError("cannot open '" + path + "' for writing");
    f << text;
    if (!f) throw IoError("write to '" + path + "' failed");
}

std::uint8_t parse_channel(const std::string& name, std::uint16_t channel_count) {
    std::string_view s(name);
    if (!s.empty() && (s.front() == 'D' || s.front() == 'd')) s.remove_prefix(1);
    unsigned v = 0;
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size() || v == 0 || v > channel_count)
        throw ValidationError("unknown channel '" + name + "' (file has D1..D" + std::to_string(channel_count) + ")");
    return static_cast<std::uint8_t>(v - 1);
}

std::int64_t whole_ps(const std::string& text, const char* what) {
    const double v = parse_duration_ps(text);
    const auto r = std::llround(v);
    if (!(v > 0) || std::abs(v - static_cast<double>(r)) > 1e-6)
        throw ValidationError(std::string(what) + " must be a positive whole number of picoseconds");
    return r;
}

// ---------------------------------------------------------------------------

struct ModelArgs {
    double eta = 0.2, v0 = 0.85, r = 0.5, t = 0.5, g2sp0 = 0.03;
    std::string tau_l = "150ns", tau_c = "115ps", df = "0Hz", window = "2ns", step = "10ps", out;
    bool same_port = false;
};

void cmd_model(const ModelArgs& a, std::ostream& out) {
    model::ModelParams p;
    p.eta = a.eta;
    p.v0 = a.v0;
    p.r = a.r;
    p.t = a.t;
    p.g2_sp0 = a.g2sp0;
    p.tau_l_ps = parse_duration_ps(a.tau_l);
    p.tau_c_ps = parse_duration_ps(a.tau_c);
    p.delta_f_hz = parse_frequency_hz(a.df);
    p.validate();
    const double window = parse_duration_ps(a.window);
    const double step = parse_duration_ps(a.step);
    if (!(step > 0)) throw ValidationError("step must be positive");
    if (!(window >= 0)) throw ValidationError("window must be non-negative");
    const auto n = static_cast<long long>(std::floor(window / step + 1e-9));
    if (n > 10'000'000) throw ValidationError("tau grid too large");
    std::string csv = "tau_ps,g2_perp,g2_par,v_hom\n";
    for (long long k = -n; k <= n; ++k) {
        const double tau = static_cast<double>(k) * step;
        double gp, gq, v;
        if (a.same_port) {
            gp = model::g2_auto_perp(tau, p);
            gq = model::g2_auto_par(tau, p);
            v = model::v_same_port(tau, p);
        } else {
            gp = model::g2_cross_perp(tau, p);
            gq = model::g2_cross_par(tau, p);
            v = model::v_hom(tau, p);
        }
        csv += fmt(tau) + ',' + fmt(gp) + ',' + fmt(gq) + ',' + fmt(v) + '\n';
    }
    emit(a.out, csv, out);
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string config, out, manifest;
    std::optional<std::uint64_t> seed;
};

void cmd_simulate(const SimulateArgs& a, std::ostream& out) {
    auto cfg = pipeline::load_config(a.config);
    if (a.seed) cfg.seed = *a.seed;
    if (!a.out.empty()) cfg.output.ptt = a.out;
    if (!a.manifest.empty()) cfg.output.manifest = a.manifest;
    if (cfg.output.ptt.empty()) throw ValidationError("no output PTT path (set output.ptt or --out)");
    const auto result = pipeline::run(cfg);
    ptt::write_file(cfg.output.ptt, ptt::from_clicks(result.clicks));
    const auto manifest = pipeline::manifest_json(cfg, result) + "\n";
    if (!cfg.output.manifest.empty()) emit(cfg.output.manifest, manifest, out);
    out << manifest;
}

// ---------------------------------------------------------------------------

struct CorrelateArgs {
    std::string input, channels = "D1,D2", channel, bin = "10ps", window = "2ns", duration, out;
    bool autocorrelation = false;
};

void cmd_correlate(const CorrelateArgs& a, std::ostream& out) {
    const auto bin = whole_ps(a.bin, "bin");
    const auto window = whole_ps(a.window, "window");
    auto file = ptt::read_file(a.input);

    std::vector<Timestamp> sa, sb;
    if (a.autocorrelation) {
        if (a.channel.empty()) throw ValidationError("--auto needs --channel");
        sa = file.channel_ps(parse_channel(a.channel, file.channel_count));
    } else {
        const auto comma = a.channels.find(',');
        if (comma == std::string::npos) throw ValidationError("--channels expects two names such as D1,D2");
        sa = file.channel_ps(parse_channel(a.channels.substr(0, comma), file.channel_count));
        sb = file.channel_ps(parse_channel(a.channels.substr(comma + 1), file.channel_count));
    }

    if (sa.empty() || (!a.autocorrelation && sb.empty())) {
        emit(a.out, "tau_ps,counts,g2,sigma\n", out);
        return;
    }
    double duration = 0;
    if (!a.duration.empty()) {
        duration = parse_duration_ps(a.duration);
    } else {
        // Span of the whole file, all channels.
        const double scale = static_cast<double>(file.resolution_fs) / 1000.0;
        std::uint64_t lo = UINT64_MAX, hi = 0;
        for (const auto& r : file.records) {
            lo = std::min(lo, r.ticks);
            hi = std::max(hi, r.ticks);
        }
        duration = static_cast<double>(hi - lo) * scale;
    }
    auto h = a.autocorrelation ? correlator::auto_correlate(sa, bin, window, duration)
                          : correlator::cross_correlate(sa, sb, bin, window, duration);
    emit(a.out, correlator::to_csv(correlator::normalize(std::move(h))), out);
}

// ---------------------------------------------------------------------------

struct FitArgs {
    std::string par, perp, init, free, jitter = "0ps", out;
    bool no_bin_average = false;
};

void cmd_fit(const FitArgs& a, std::ostream& out) {
    const auto h_par = correlator::read_csv(a.par);
    const auto h_perp = correlator::read_csv(a.perp);
    pipeline::FitSettings fs;
    if (!a.init.empty()) fs = pipeline::parse_fit_settings(read_text(a.init));
    if (!a.free.empty()) {
        std::vector<std::string> names;
        std::stringstream ss(a.free);
        for (std::string item; std::getline(ss, item, ',');) {
            if (!item.empty()) names.push_back(item);
        }
        fs.free = pipeline::parse_free_mask(names);
    }
    analysis::FitOptions opts;
    opts.bin_average = !a.no_bin_average;
    opts.jitter_sigma_ps = parse_duration_ps(a.jitter);
    const auto res = analysis::fit_hom(h_perp, h_par, fs.init, fs.free, opts);

    using nlohmann::json;
    json j;
    const double values[] = {res.params.eta,      res.params.v0,     res.params.tau_l_ps,
                             res.params.tau_c_ps, res.params.g2_sp0, res.params.delta_f_hz};
    json params = json::object(), errs = json::object(), free = json::array();
    for (std::size_t k = 0; k < analysis::kParamCount; ++k) {
        params[analysis::kParamNames[k]] = values[k];
        errs[analysis::kParamNames[k]] = res.stderr_[k];
        if (res.free[k]) free.push_back(analysis::kParamNames[k]);
    }
    j["params"] = params;
    j["stderr"] = errs;
    j["chi2_reduced"] = res.chi2_reduced;
    j["converged"] = res.converged;
    j["n_iter"] = res.n_iter;
    j["free"] = free;
    if (!res.message.empty()) j["message"] = res.message;
    emit(a.out, j.dump(2) + "\n", out);
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Laser / single-photon two-photon interference simulator", "homsim"};
    app.require_subcommand(1);

    ModelArgs ma;
    auto* model = app.add_subcommand("model", "Analytic correlation and visibility curves as CSV");
    model->add_option("--eta", ma.eta, "Laser to single-photon intensity ratio");
    model->add_option("--v0", ma.v0, "Mode overlap");
    model->add_option("--tau-l", ma.tau_l, "Laser coherence time");
    model->add_option("--tau-c", ma.tau_c, "Single-photon correlation time");
    model->add_option("--g2sp0", ma.g2sp0, "Single-photon g2(0)");
    model->add_option("--df", ma.df, "Detuning");
    model->add_option("--r", ma.r, "Beam splitter reflectance");
    model->add_option("--t", ma.t, "Beam splitter transmittance");
    model->add_flag("--same-port", ma.same_port, "Both detectors on one output port");
    model->add_option("--window", ma.window, "Half-range of the tau grid");
    model->add_option("--step", ma.step, "Grid step");
    model->add_option("-o,--out", ma.out, "Output CSV (default stdout)");

    SimulateArgs sa;
    auto* simulate = app.add_subcommand("simulate", "Run synth, interference and detectors; write a PTT file");
    simulate->add_option("config", sa.config, "JSON config")->required();
    simulate->add_option("-o,--out", sa.out, "Output PTT path (overrides output.ptt)");
    simulate->add_option("--manifest", sa.manifest, "Also write the manifest here");
    simulate->add_option("--seed", sa.seed, "Seed (overrides config and HOMSIM_SEED)");

    CorrelateArgs ca;
    auto* correlate = app.add_subcommand("correlate", "Histogram coincidences from a PTT file");
    correlate->add_option("-i,--input", ca.input, "PTT file")->required();
    correlate->add_option("--channels", ca.channels, "Channel pair for cross-correlation");
    correlate->add_flag("--auto", ca.autocorrelation, "Autocorrelate one channel");
    correlate->add_option("--channel", ca.channel, "Channel for --auto");
    correlate->add_option("--bin", ca.bin, "Bin width");
    correlate->add_option("--window", ca.window, "Maximum |tau|");
    correlate->add_option("--duration", ca.duration, "Observation span (default: span of the file)");
    correlate->add_option("-o,--out", ca.out, "Output CSV (default stdout)");

    FitArgs fa;
    auto* fit = app.add_subcommand("fit", "Joint fit of parallel and perpendicular histograms");
    fit->add_option("--par", fa.par, "Parallel-polarization histogram CSV")->required();
    fit->add_option("--perp", fa.perp, "Perpendicular-polarization histogram CSV")->required();
    fit->add_option("--init", fa.init, "JSON with initial values and optional free list");
    fit->add_option("--free", fa.free, "Comma-separated free parameters");
    fit->add_option("--jitter", fa.jitter, "Combined timing jitter (Gaussian sigma)");
    fit->add_flag("--no-bin-average", fa.no_bin_average, "Evaluate the model at bin centers");
    fit->add_option("-o,--out", fa.out, "Output JSON (default stdout)");

    std::vector<std::string> rev(args.rbegin(), args.rend());
    try {
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitValidation;
    }

    auto previous = set_warning_handler([&err](std::string_view msg) { err << "warning: " << msg << "\n"; });
    int code = kExitOk;
    try {
        if (model->parsed()) cmd_model(ma, out);
        else if (simulate->parsed()) cmd_simulate(sa, out);
        else if (correlate->parsed()) cmd_correlate(ca, out);
        else if (fit->parsed()) cmd_fit(fa, out);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << "\n";
        code = kExitValidation;
    } catch (const IoError& e) {
        err << "error: " << e.what() << "\n";
        code = kExitIo;
    } catch (const FormatError& e) {
        err << "error: " << e.what() << "\n";
        code = kExitFormat;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        code = 1;
    }
    set_warning_handler(std::move(previous));
    return code;
}

} // namespace homsim::cli
