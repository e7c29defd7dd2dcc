#include "dsc/errors.hpp"
#include "dsc/harness.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace dsc {

using Eigen::MatrixXd;
using nlohmann::json;

namespace {

MatrixXd matrix_from_json(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty() || !j.front().is_array()) {
        throw ParameterError("config: " + what + " must be a non-empty array of rows");
    }
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    MatrixXd m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        if (static_cast<Eigen::Index>(j[i].size()) != cols) {
            throw ParameterError("config: " + what + " has ragged rows");
        }
        for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = j[i][k].get<double>();
    }
    return m;
}

json matrix_to_json(const MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        json row = json::array();
        for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

template <typename T>
void read_opt(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

ControllerSpec controller_from_json(const json& j) {
    ControllerSpec spec;
    spec.type = j.at("type").get<std::string>();
    spec.label = j.value("label", std::string());
    if (spec.label.empty()) {
        spec.label = spec.type == "dsc" ? "DSC" : spec.type == "grc" ? "GRC" : spec.type == "lqg" ? "LQG" : spec.type;
    }
    read_opt(j, "h", spec.dsc.h);
    read_opt(j, "h_tilde", spec.dsc.h_tilde);
    read_opt(j, "m", spec.dsc.m);
    read_opt(j, "m_tilde", spec.dsc.m_tilde);
    read_opt(j, "filter_gamma", spec.dsc.filter_gamma);
    read_opt(j, "memory", spec.grc.memory);
    if (j.contains("eta")) spec.dsc.eta = spec.grc.eta = j.at("eta").get<double>();
    if (j.contains("radius")) spec.dsc.radius = spec.grc.radius = j.at("radius").get<double>();
    if (j.contains("truncation")) spec.dsc.truncation = spec.grc.truncation = j.at("truncation").get<int>();
    read_opt(j, "state_eps", spec.lqg.state_eps);
    read_opt(j, "measurement_eps", spec.lqg.measurement_eps);
    if (j.contains("noise_std")) {
        spec.lqg.noise_std = j.at("noise_std").get<double>();
        spec.lqg_noise_from_disturbance = false;
    }
    if (j.contains("A")) spec.ldc_A = matrix_from_json(j.at("A"), "ldc A");
    if (j.contains("B")) spec.ldc_B = matrix_from_json(j.at("B"), "ldc B");
    if (j.contains("C")) spec.ldc_C = matrix_from_json(j.at("C"), "ldc C");
    return spec;
}

json controller_to_json(const ControllerSpec& spec) {
    json j{{"type", spec.type}, {"label", spec.label}};
    if (spec.type == "dsc") {
        j["h"] = spec.dsc.h;
        j["h_tilde"] = spec.dsc.h_tilde;
        j["m"] = spec.dsc.m;
        j["m_tilde"] = spec.dsc.m_tilde;
        j["eta"] = spec.dsc.eta;
        j["radius"] = spec.dsc.radius;
        j["truncation"] = spec.dsc.truncation;
        j["filter_gamma"] = spec.dsc.filter_gamma;
    } else if (spec.type == "grc") {
        j["memory"] = spec.grc.memory;
        j["eta"] = spec.grc.eta;
        j["radius"] = spec.grc.radius;
        j["truncation"] = spec.grc.truncation;
    } else if (spec.type == "lqg") {
        j["state_eps"] = spec.lqg.state_eps;
        j["measurement_eps"] = spec.lqg.measurement_eps;
        if (!spec.lqg_noise_from_disturbance) j["noise_std"] = spec.lqg.noise_std;
    } else if (spec.type == "ldc") {
        if (spec.ldc_A) j["A"] = matrix_to_json(*spec.ldc_A);
        if (spec.ldc_B) j["B"] = matrix_to_json(*spec.ldc_B);
        if (spec.ldc_C) j["C"] = matrix_to_json(*spec.ldc_C);
    }
    return j;
}

ExperimentConfig experiment_from_json(const json& j) {
    ExperimentConfig c;
    read_opt(j, "name", c.name);
    read_opt(j, "horizon", c.horizon);
    read_opt(j, "trials", c.trials);
    read_opt(j, "seed", c.seed);
    read_opt(j, "window_fraction", c.window_fraction);
    read_opt(j, "shared_adversary", c.shared_adversary);
    read_opt(j, "naive_conv", c.naive_conv);

    if (j.contains("system")) {
        const json& s = j.at("system");
        read_opt(s, "d", c.system.d);
        read_opt(s, "n", c.system.n);
        read_opt(s, "p", c.system.p);
        read_opt(s, "spectral_radius", c.system.spectral_radius);
        read_opt(s, "b_norm", c.system.b_norm);
        read_opt(s, "c_norm", c.system.c_norm);
        read_opt(s, "x0_std", c.system.x0_std);
        if (s.contains("A")) c.system.A = matrix_from_json(s.at("A"), "system A");
        if (s.contains("B")) c.system.B = matrix_from_json(s.at("B"), "system B");
        if (s.contains("C")) c.system.C = matrix_from_json(s.at("C"), "system C");
        if (c.system.A) {
            c.system.d = static_cast<int>(c.system.A->rows());
            if (c.system.B) c.system.n = static_cast<int>(c.system.B->cols());
            if (c.system.C) c.system.p = static_cast<int>(c.system.C->rows());
        }
    }

    const std::string transition = j.value("transition", std::string("linear"));
    if (transition == "linear") {
        c.transition = Transition::Linear;
    } else if (transition == "relu") {
        c.transition = Transition::Relu;
    } else {
        throw ParameterError("config: transition must be 'linear' or 'relu', got '" + transition + "'");
    }

    if (j.contains("disturbance")) {
        const json& d = j.at("disturbance");
        const std::string kind = d.value("kind", std::string("gaussian"));
        if (kind == "gaussian") {
            c.disturbance.kind = GaussianNoise{d.value("std", 1.0)};
        } else if (kind == "sinusoid") {
            Sinusoid s;
            s.amplitude = d.value("amplitude", 1.0);
            s.frequency = d.value("frequency", 0.01);
            if (d.contains("phases")) s.phases = d.at("phases").get<std::vector<double>>();
            c.disturbance.kind = s;
        } else if (kind == "replay") {
            c.disturbance.kind = Replay{d.at("path").get<std::string>()};
        } else {
            throw ParameterError("config: unknown disturbance kind '" + kind + "'");
        }
        read_opt(d, "bound", c.disturbance.bound);
    }

    if (j.contains("cost")) {
        const json& q = j.at("cost");
        read_opt(q, "q_scale", c.cost.q_scale);
        read_opt(q, "r_scale", c.cost.r_scale);
        if (q.contains("Q")) c.cost.Q = matrix_from_json(q.at("Q"), "cost Q");
        if (q.contains("R")) c.cost.R = matrix_from_json(q.at("R"), "cost R");
    }

    if (j.contains("controllers")) {
        for (const auto& cj : j.at("controllers")) c.controllers.push_back(controller_from_json(cj));
    }
    c.validate();
    return c;
}

json experiment_to_json(const ExperimentConfig& c) {
    json j;
    j["name"] = c.name;
    j["horizon"] = c.horizon;
    j["trials"] = c.trials;
    j["seed"] = c.seed;
    j["window_fraction"] = c.window_fraction;
    j["shared_adversary"] = c.shared_adversary;
    j["naive_conv"] = c.naive_conv;
    j["transition"] = c.transition == Transition::Relu ? "relu" : "linear";

    json s{{"d", c.system.d}, {"n", c.system.n}, {"p", c.system.p}, {"spectral_radius", c.system.spectral_radius},
           {"b_norm", c.system.b_norm}, {"c_norm", c.system.c_norm}, {"x0_std", c.system.x0_std}};
    if (c.system.A) s["A"] = matrix_to_json(*c.system.A);
    if (c.system.B) s["B"] = matrix_to_json(*c.system.B);
    if (c.system.C) s["C"] = matrix_to_json(*c.system.C);
    j["system"] = s;

    json d;
    if (const auto* g = std::get_if<GaussianNoise>(&c.disturbance.kind)) {
        d = {{"kind", "gaussian"}, {"std", g->std}};
    } else if (const auto* sn = std::get_if<Sinusoid>(&c.disturbance.kind)) {
        d = {{"kind", "sinusoid"}, {"amplitude", sn->amplitude}, {"frequency", sn->frequency}};
        if (!sn->phases.empty()) d["phases"] = sn->phases;
    } else {
        d = {{"kind", "replay"}, {"path", std::get<Replay>(c.disturbance.kind).path.string()}};
    }
    d["bound"] = disturbance_bound(c);
    j["disturbance"] = d;

    json q{{"q_scale", c.cost.q_scale}, {"r_scale", c.cost.r_scale}};
    if (c.cost.Q) q["Q"] = matrix_to_json(*c.cost.Q);
    if (c.cost.R) q["R"] = matrix_to_json(*c.cost.R);
    j["cost"] = q;

    json ctrls = json::array();
    for (const auto& spec : c.controllers) ctrls.push_back(controller_to_json(spec));
    j["controllers"] = ctrls;
    return j;
}

}  // namespace

std::vector<ExperimentConfig> parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ParameterError(std::string("config: invalid JSON: ") + e.what());
    }
    std::vector<ExperimentConfig> out;
    try {
        if (doc.contains("experiments")) {
            const json defaults = doc.value("defaults", json::object());
            for (const auto& entry : doc.at("experiments")) {
                json merged = defaults;
                merged.merge_patch(entry);
                out.push_back(experiment_from_json(merged));
            }
        } else {
            out.push_back(experiment_from_json(doc));
        }
    } catch (const json::exception& e) {
        throw ParameterError(std::string("config: ") + e.what());
    }
    return out;
}

std::vector<ExperimentConfig> load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParameterError("config: cannot open " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& config) { return experiment_to_json(config).dump(2); }

std::vector<ExperimentResult> run_benchmark(std::vector<ExperimentConfig> configs, const std::filesystem::path& out,
                                            const RunOverrides& overrides) {
    std::filesystem::create_directories(out);
    std::vector<ExperimentResult> results;
    json manifest;
    manifest["experiments"] = json::array();
    for (auto& config : configs) {
        if (overrides.trials) config.trials = *overrides.trials;
        if (overrides.seed) config.seed = *overrides.seed;
        if (overrides.naive_conv) config.naive_conv = true;
        config.validate();

        ExperimentResult result = run_experiment(config, overrides.threads);
        const std::string csv_name = config.name + ".csv";
        write_csv(result.aggregate, out / csv_name);

        json entry;
        entry["config"] = experiment_to_json(config);
        entry["csv"] = csv_name;
        entry["trials_used"] = result.aggregate.trials;
        json failures = json::array();
        for (std::size_t i = 0; i < result.failures.size(); ++i) {
            failures.push_back({{"trial", result.failed_trials[i]},
                                {"controller", result.failures[i].controller},
                                {"t", result.failures[i].t},
                                {"message", result.failures[i].message}});
        }
        entry["failures"] = failures;
        manifest["experiments"].push_back(entry);
        results.push_back(std::move(result));
    }
    std::ofstream mf(out / "manifest.json", std::ios::binary | std::ios::trunc);
    if (!mf) throw std::runtime_error("run_benchmark: cannot write " + (out / "manifest.json").string());
    mf << manifest.dump(2) << '\n';
    return results;
}

}  // namespace dsc
