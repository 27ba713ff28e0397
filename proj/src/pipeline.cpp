#include "homsim/pipeline.hpp"

#include "homsim/errors.hpp"
#include "homsim/rng.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace homsim::pipeline {

using nlohmann::json;

namespace {

double duration_field(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return parse_duration_ps(v.get<std::string>());
    throw ValidationError(std::string(key) + " must be a number of picoseconds or a string with a time unit");
}

double frequency_field(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    const auto& v = j.at(key);
    if (v.is_number()) return v.get<double>();
    if (v.is_string()) return parse_frequency_hz(v.get<std::string>());
    throw ValidationError(std::string(key) + " must be a number of hertz or a string with a frequency unit");
}

double number_field(const json& j, const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number()) throw ValidationError(std::string(key) + " must be a number");
    return j.at(key).get<double>();
}

bool bool_field(const json& j, const char* key, bool fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_boolean()) throw ValidationError(std::string(key) + " must be true or false");
    return j.at(key).get<bool>();
}

std::string string_field(const json& j, const char* key, const std::string& fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_string()) throw ValidationError(std::string(key) + " must be a string");
    return j.at(key).get<std::string>();
}

std::uint64_t seed_field(const json& j, const char* key, std::uint64_t fallback) {
    if (!j.contains(key)) return fallback;
    if (!j.at(key).is_number_unsigned()) throw ValidationError(std::string(key) + " must be a non-negative integer");
    return j.at(key).get<std::uint64_t>();
}

const json& section(const json& root, const char* key) {
    static const json empty = json::object();
    if (!root.contains(key)) return empty;
    if (!root.at(key).is_object()) throw ValidationError(std::string("section '") + key + "' must be an object");
    return root.at(key);
}

void check_keys(const json& obj, const char* where, std::initializer_list<const char*> allowed) {
    for (const auto& [k, v] : obj.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) throw ValidationError(std::string("unknown key '") + k + "' in " + where);
    }
}

Timestamp to_timestamp(double ps, const char* what) {
    if (!(ps >= 0) || ps > 9.2e18) throw ValidationError(std::string(what) + " out of range");
    return static_cast<Timestamp>(std::llround(ps));
}

std::int64_t to_positive_ticks(double ps, const char* what) {
    const auto v = std::llround(ps);
    if (!(ps > 0) || v <= 0 || std::abs(ps - static_cast<double>(v)) > 1e-6)
        throw ValidationError(std::string(what) + " must be a positive whole number of picoseconds");
    return v;
}

FitSettings parse_fit_section(const json& f, const model::ModelParams& defaults) {
    check_keys(f, "fit", {"init", "free"});
    FitSettings fs;
    fs.init = defaults;
    const auto& init = section(f, "init");
    check_keys(init, "fit.init", {"eta", "v0", "r", "t", "tau_l", "tau_c", "g2_sp0", "delta_f"});
    fs.init.eta = number_field(init, "eta", fs.init.eta);
    fs.init.v0 = number_field(init, "v0", fs.init.v0);
    fs.init.r = number_field(init, "r", fs.init.r);
    fs.init.t = number_field(init, "t", fs.init.t);
    fs.init.tau_l_ps = duration_field(init, "tau_l", fs.init.tau_l_ps);
    fs.init.tau_c_ps = duration_field(init, "tau_c", fs.init.tau_c_ps);
    fs.init.g2_sp0 = number_field(init, "g2_sp0", fs.init.g2_sp0);
    fs.init.delta_f_hz = frequency_field(init, "delta_f", fs.init.delta_f_hz);
    if (f.contains("free")) {
        if (!f.at("free").is_array()) throw ValidationError("fit.free must be an array of parameter names");
        std::vector<std::string> names;
        for (const auto& name : f.at("free")) {
            if (!name.is_string()) throw ValidationError("fit.free must be an array of parameter names");
            names.push_back(name.get<std::string>());
        }
        fs.free = parse_free_mask(names);
    }
    return fs;
}

} // namespace

analysis::FreeMask parse_free_mask(const std::vector<std::string>& names) {
    analysis::FreeMask mask{};
    for (const auto& name : names) {
        bool found = false;
        for (std::size_t k = 0; k < analysis::kParamCount; ++k) {
            if (name == analysis::kParamNames[k]) {
                mask[k] = true;
                found = true;
            }
        }
        if (!found) throw ValidationError("unknown fit parameter '" + name + "'");
    }
    return mask;
}

FitSettings parse_fit_settings(const std::string& json_text, const model::ModelParams& defaults) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("fit settings are not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ValidationError("fit settings must be a JSON object");
    try {
        if (root.contains("init")) return parse_fit_section(root, defaults);
        // Flat form: parameters at top level plus an optional "free" list.
        json wrapped = json::object();
        wrapped["init"] = json::object();
        for (const auto& [k, v] : root.items()) {
            if (k == "free") wrapped["free"] = v;
            else wrapped["init"][k] = v;
        }
        return parse_fit_section(wrapped, defaults);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("fit settings: ") + e.what());
    }
}

std::uint64_t default_seed() {
    const char* env = std::getenv("HOMSIM_SEED");
    if (!env || !*env) return 1;
    std::uint64_t v = 0;
    const std::string_view s(env);
    const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size()) throw ValidationError("HOMSIM_SEED must be a non-negative integer");
    return v;
}

void PipelineConfig::validate() const {
    synth.validate();
    interferometer.validate();
    detector.validate();
    if (correlator.bin_width_ps <= 0) throw ValidationError("correlator bin must be positive");
    if (correlator.tau_max_ps < correlator.bin_width_ps || correlator.tau_max_ps % correlator.bin_width_ps != 0)
        throw ValidationError("correlator window must be a positive multiple of the bin width");
    fit.init.validate();
    const double eta = synth.rate_sp_hz > 0 ? synth.rate_laser_hz / synth.rate_sp_hz : 0;
    if (synth.rate_sp_hz > 0 && std::abs(interferometer.model.eta - eta) > 1e-9 * std::max(1.0, eta))
        throw ValidationError("interferometer eta disagrees with the synth rate ratio");
}

PipelineConfig parse_config(const std::string& json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ValidationError("config must be a JSON object");
    check_keys(root, "config", {"seed", "synth", "interferometer", "detector", "correlator", "fit", "output"});

    PipelineConfig cfg;
    try {
        cfg.seed = seed_field(root, "seed", default_seed());

        const auto& s = section(root, "synth");
        check_keys(s, "synth", {"rate_laser", "rate_sp", "duration", "tau_l", "tau_c", "g2_sp0", "delta_f"});
        cfg.synth.rate_laser_hz = frequency_field(s, "rate_laser", cfg.synth.rate_laser_hz);
        cfg.synth.rate_sp_hz = frequency_field(s, "rate_sp", cfg.synth.rate_sp_hz);
        cfg.synth.duration_ps = to_timestamp(duration_field(s, "duration", static_cast<double>(cfg.synth.duration_ps)), "duration");
        cfg.synth.tau_l_ps = duration_field(s, "tau_l", cfg.synth.tau_l_ps);
        cfg.synth.tau_c_ps = duration_field(s, "tau_c", cfg.synth.tau_c_ps);
        cfg.synth.g2_sp0 = number_field(s, "g2_sp0", cfg.synth.g2_sp0);
        cfg.synth.delta_f_hz = frequency_field(s, "delta_f", cfg.synth.delta_f_hz);
        cfg.synth.seed = cfg.seed;
        cfg.synth.validate();

        const auto& i = section(root, "interferometer");
        check_keys(i, "interferometer", {"engine", "polarization", "same_port_hbt", "v0", "eta", "r", "t",
                                         "amp_overlap", "allow_overlap_mismatch"});
        auto& ic = cfg.interferometer;
        const auto engine = string_field(i, "engine", "kernel");
        if (engine == "kernel") ic.engine = interfere::Engine::kernel;
        else if (engine == "routing") ic.engine = interfere::Engine::routing;
        else throw ValidationError("engine must be 'kernel' or 'routing'");
        const auto pol = string_field(i, "polarization", "parallel");
        if (pol == "parallel") ic.pol = interfere::Polarization::parallel;
        else if (pol == "perpendicular") ic.pol = interfere::Polarization::perpendicular;
        else throw ValidationError("polarization must be 'parallel' or 'perpendicular'");
        ic.same_port_hbt = bool_field(i, "same_port_hbt", false);
        ic.allow_overlap_mismatch = bool_field(i, "allow_overlap_mismatch", false);
        if (i.contains("amp_overlap")) ic.amp_overlap = number_field(i, "amp_overlap", 0);
        auto& m = ic.model;
        m.v0 = number_field(i, "v0", m.v0);
        m.r = number_field(i, "r", m.r);
        m.t = number_field(i, "t", m.t);
        const auto& sc = cfg.synth;
        const double eta_rates = sc.rate_sp_hz > 0 ? sc.rate_laser_hz / sc.rate_sp_hz : 0;
        m.eta = number_field(i, "eta", eta_rates);
        m.tau_l_ps = sc.tau_l_ps;
        m.tau_c_ps = sc.tau_c_ps;
        m.g2_sp0 = sc.g2_sp0;
        m.delta_f_hz = sc.delta_f_hz;
        ic.seed = cfg.seed;

        const auto& d = section(root, "detector");
        check_keys(d, "detector", {"jitter", "dead_time", "dark_rate", "efficiency"});
        cfg.detector.jitter_sigma_ps = duration_field(d, "jitter", 0);
        cfg.detector.dead_time_ps = duration_field(d, "dead_time", 0);
        cfg.detector.dark_rate_hz = frequency_field(d, "dark_rate", 0);
        cfg.detector.efficiency = number_field(d, "efficiency", 1);
        cfg.detector.seed = cfg.seed;

        const auto& c = section(root, "correlator");
        check_keys(c, "correlator", {"bin", "window", "chunk"});
        cfg.correlator.bin_width_ps = to_positive_ticks(duration_field(c, "bin", 10), "correlator bin");
        cfg.correlator.tau_max_ps = to_positive_ticks(duration_field(c, "window", 2000), "correlator window");
        cfg.correlator.chunk_ps = to_timestamp(duration_field(c, "chunk", 0), "correlator chunk");

        cfg.fit = parse_fit_section(section(root, "fit"), m);

        const auto& o = section(root, "output");
        check_keys(o, "output", {"ptt", "manifest"});
        cfg.output.ptt = string_field(o, "ptt", "");
        cfg.output.manifest = string_field(o, "manifest", "");
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("cannot read config file '" + path + "'");
    return parse_config(ss.str());
}

std::uint64_t realization_seed(std::uint64_t seed, std::uint64_t index) {
    return index == 0 ? seed : mix64(seed ^ mix64(index * 0x9E3779B97F4A7C15ULL));
}

RunResult run(const PipelineConfig& cfg, std::uint64_t realization) {
    cfg.validate();
    RunResult out;
    out.seed = realization_seed(cfg.seed, realization);
    auto sc = cfg.synth;
    auto ic = cfg.interferometer;
    auto dc = cfg.detector;
    sc.seed = ic.seed = dc.seed = out.seed;
    const auto laser = synth::gen_laser_events(sc);
    const auto sp = synth::gen_sp_events(sc);
    out.laser_photons = laser.size();
    out.sp_photons = sp.size();
    out.duration_ps = sc.duration_ps;
    out.clicks = interfere::apply_detector_effects(interfere::interfere(laser, sp, ic), dc, sc.duration_ps);
    return out;
}

std::string manifest_json(const PipelineConfig& cfg, const RunResult& r) {
    const double seconds = static_cast<double>(r.duration_ps) / kPicosecondsPerSecond;
    auto rate = [&](std::size_t n) { return seconds > 0 ? static_cast<double>(n) / seconds : 0.0; };
    json m;
    m["seed"] = r.seed;
    m["duration_ps"] = r.duration_ps;
    m["engine"] = cfg.interferometer.engine == interfere::Engine::kernel ? "kernel" : "routing";
    m["polarization"] = cfg.interferometer.pol == interfere::Polarization::parallel ? "parallel" : "perpendicular";
    m["same_port_hbt"] = cfg.interferometer.same_port_hbt;
    m["counts"] = {{"laser", r.laser_photons}, {"sp", r.sp_photons}, {"d1", r.clicks.d1.size()},
                   {"d2", r.clicks.d2.size()}};
    m["effective_rates_hz"] = {{"laser", rate(r.laser_photons)}, {"sp", rate(r.sp_photons)},
                               {"d1", rate(r.clicks.d1.size())}, {"d2", rate(r.clicks.d2.size())}};
    m["eta"] = cfg.interferometer.model.eta;
    m["eta_effective"] = r.sp_photons > 0 ? static_cast<double>(r.laser_photons) / static_cast<double>(r.sp_photons) : 0.0;
    if (!cfg.output.ptt.empty()) m["ptt"] = cfg.output.ptt;
    return m.dump(2);
}

correlator::CorrelationHistogram correlate_clicks(const interfere::ClickStreams& clicks,
                                                  const CorrelatorSettings& settings, Timestamp duration_ps) {
    const auto d = static_cast<double>(duration_ps);
    auto h = settings.chunk_ps > 0
                 ? correlator::cross_correlate_chunked(clicks.d1, clicks.d2, settings.bin_width_ps,
                                                       settings.tau_max_ps, settings.chunk_ps, d)
                 : correlator::cross_correlate(clicks.d1, clicks.d2, settings.bin_width_ps, settings.tau_max_ps, d);
    return correlator::normalize(std::move(h));
}

PipelineConfig with_polarization(PipelineConfig cfg, interfere::Polarization pol) {
    cfg.interferometer.pol = pol;
    return cfg;
}

} // namespace homsim::pipeline
