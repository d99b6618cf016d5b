#include "ep/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ep {

namespace {

std::string join(const std::vector<std::string>& errs) {
    std::ostringstream os;
    os << "invalid configuration:";
    for (const auto& e : errs) {
        os << "\n  " << e;
    }
    return os.str();
}

// Reads the known keys of one JSON object and records problems.
class Section {
  public:
    Section(const nlohmann::json& j, std::string path, std::vector<std::string>& errs)
        : j_(j), path_(std::move(path)), errs_(errs) {
        if (!j_.is_object()) {
            errs_.push_back(path_ + ": expected an object");
        }
    }

    ~Section() {
        if (!j_.is_object()) {
            return;
        }
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) {
                errs_.push_back(key(it.key()) + ": unknown key");
            }
        }
    }

    void get(const std::string& k, double& out) {
        if (const auto* v = find(k)) {
            if (v->is_number()) {
                out = v->get<double>();
            } else {
                errs_.push_back(key(k) + ": expected a number");
            }
        }
    }

    void get(const std::string& k, int& out) {
        if (const auto* v = find(k)) {
            if (v->is_number_integer()) {
                out = v->get<int>();
            } else {
                errs_.push_back(key(k) + ": expected an integer");
            }
        }
    }

    void get(const std::string& k, uint64_t& out) {
        if (const auto* v = find(k)) {
            if (v->is_number_unsigned() || (v->is_number_integer() && v->get<int64_t>() >= 0)) {
                out = v->get<uint64_t>();
            } else {
                errs_.push_back(key(k) + ": expected a non-negative integer");
            }
        }
    }

    void get(const std::string& k, bool& out) {
        if (const auto* v = find(k)) {
            if (v->is_boolean()) {
                out = v->get<bool>();
            } else {
                errs_.push_back(key(k) + ": expected a boolean");
            }
        }
    }

    void get(const std::string& k, std::string& out) {
        if (const auto* v = find(k)) {
            if (v->is_string()) {
                out = v->get<std::string>();
            } else {
                errs_.push_back(key(k) + ": expected a string");
            }
        }
    }

    void get(const std::string& k, std::optional<double>& out) {
        if (const auto* v = find(k)) {
            if (v->is_null()) {
                out.reset();
            } else if (v->is_number()) {
                out = v->get<double>();
            } else {
                errs_.push_back(key(k) + ": expected a number or null");
            }
        }
    }

    void get(const std::string& k, std::vector<double>& out) {
        if (const auto* v = find(k)) {
            if (!v->is_array()) {
                errs_.push_back(key(k) + ": expected an array of numbers");
                return;
            }
            std::vector<double> tmp;
            for (const auto& e : *v) {
                if (!e.is_number()) {
                    errs_.push_back(key(k) + ": expected an array of numbers");
                    return;
                }
                tmp.push_back(e.get<double>());
            }
            out = tmp;
        }
    }

    const nlohmann::json* child(const std::string& k) { return find(k); }
    std::string key(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  private:
    const nlohmann::json* find(const std::string& k) {
        seen_.insert(k);
        if (!j_.is_object() || !j_.contains(k)) {
            return nullptr;
        }
        return &j_.at(k);
    }

    const nlohmann::json& j_;
    std::string path_;
    std::vector<std::string>& errs_;
    std::set<std::string> seen_;
};

void check(bool ok, const std::string& msg, std::vector<std::string>& errs) {
    if (!ok) {
        errs.push_back(msg);
    }
}

bool positive(double v) { return v > 0.0 && std::isfinite(v); }

}  // namespace

ConfigError::ConfigError(std::vector<std::string> errs) : std::runtime_error(join(errs)), errors(std::move(errs)) {}

void PipelineConfig::validate() const {
    std::vector<std::string> e;
    check(ghz.n_dots >= 2 && ghz.n_dots <= 10, "ghz.n_dots: must lie in [2, 10]", e);
    check(positive(ghz.j1), "ghz.j1: must be positive", e);
    check(positive(ghz.j2), "ghz.j2: must be positive", e);

    check(std::isfinite(protect.alpha) && protect.alpha > 0.0, "protect.alpha: must be positive", e);
    check(protect.n_max >= 0, "protect.n_max: must be >= 0", e);
    check(protect.kappa >= 0.0 && std::isfinite(protect.kappa), "protect.kappa: must be >= 0", e);
    check(positive(protect.tau_syn), "protect.tau_syn: must be positive", e);
    check(!protect.durations.empty(), "protect.durations: must not be empty", e);
    for (double d : protect.durations) {
        check(positive(d), "protect.durations: entries must be positive", e);
    }
    check(protect.trajectories >= 1, "protect.trajectories: must be >= 1", e);
    check(protect.cavities >= 1 && protect.cavities <= 8, "protect.cavities: must lie in [1, 8]", e);

    check(swap.w1 > swap.w2 && swap.w2 >= 0.0, "swap: need w1 > w2 >= 0", e);
    check(swap.gamma1 >= 0.0 && swap.gamma2 >= 0.0, "swap: decay rates must be >= 0", e);
    check(positive(swap.d), "swap.d: must be positive", e);
    check(positive(swap.t_end), "swap.t_end: must be positive", e);
    check(swap.n_k >= 64, "swap.n_k: must be >= 64", e);
    check(swap.half_width >= 0.0, "swap.half_width: must be >= 0", e);
    check(swap.frame == "rotating" || swap.frame == "lab", "swap.frame: must be \"rotating\" or \"lab\"", e);
    check(swap.propagator == "rk" || swap.propagator == "chebyshev",
          "swap.propagator: must be \"rk\" or \"chebyshev\"", e);
    if (swap.p_success) {
        check(*swap.p_success > 0.0 && *swap.p_success <= 1.0, "swap.p_success: must lie in (0, 1]", e);
    }
    check(swap.rail_encoding == "paired" || swap.rail_encoding == "frequency",
          "swap.rail_encoding: must be \"paired\" or \"frequency\"", e);

    check(sweep.unit == "dimensionless", "sweep.unit: only \"dimensionless\" is supported", e);
    check(positive(sweep.d_min) && sweep.d_max >= sweep.d_min, "sweep: need 0 < d_min <= d_max", e);
    check(positive(sweep.gamma_min) && sweep.gamma_max >= sweep.gamma_min,
          "sweep: need 0 < gamma_min <= gamma_max", e);
    check(sweep.d_points >= 1 && sweep.gamma_points >= 1, "sweep: point counts must be >= 1", e);
    check(positive(sweep.plateau_tol), "sweep.plateau_tol: must be positive", e);
    check(sweep.max_extensions >= 0, "sweep.max_extensions: must be >= 0", e);
    check(sweep.w1 > sweep.w2 && sweep.w2 >= 0.0, "sweep: need w1 > w2 >= 0", e);

    check(conversion.eta_bbo > 0.0 && conversion.eta_bbo <= 1.0, "conversion.eta_bbo: must lie in (0, 1]", e);
    check(conversion.detector_efficiency > 0.0 && conversion.detector_efficiency <= 1.0,
          "conversion.detector_efficiency: must lie in (0, 1]", e);

    check(positive(pipeline.duration), "pipeline.duration: must be positive", e);
    check(pipeline.trajectories >= 1, "pipeline.trajectories: must be >= 1", e);
    check(!output.dir.empty(), "output.dir: must not be empty", e);
    if (!e.empty()) {
        throw ConfigError(e);
    }
}

PipelineConfig parse_config(const nlohmann::json& j) {
    PipelineConfig c;
    std::vector<std::string> errs;
    {
        Section root(j, "", errs);
        root.get("base_seed", c.base_seed);
        if (const auto* s = root.child("ghz")) {
            Section g(*s, "ghz", errs);
            g.get("n_dots", c.ghz.n_dots);
            g.get("j1", c.ghz.j1);
            g.get("j2", c.ghz.j2);
        }
        if (const auto* s = root.child("protect")) {
            Section p(*s, "protect", errs);
            p.get("alpha", c.protect.alpha);
            p.get("n_max", c.protect.n_max);
            p.get("kappa", c.protect.kappa);
            p.get("tau_syn", c.protect.tau_syn);
            p.get("durations", c.protect.durations);
            p.get("trajectories", c.protect.trajectories);
            p.get("cavities", c.protect.cavities);
        }
        if (const auto* s = root.child("swap")) {
            Section w(*s, "swap", errs);
            w.get("w1", c.swap.w1);
            w.get("w2", c.swap.w2);
            w.get("gamma1", c.swap.gamma1);
            w.get("gamma2", c.swap.gamma2);
            w.get("d", c.swap.d);
            w.get("t_end", c.swap.t_end);
            w.get("n_k", c.swap.n_k);
            w.get("half_width", c.swap.half_width);
            w.get("frame", c.swap.frame);
            w.get("propagator", c.swap.propagator);
            w.get("p_success", c.swap.p_success);
            w.get("rail_encoding", c.swap.rail_encoding);
        }
        if (const auto* s = root.child("sweep")) {
            Section w(*s, "sweep", errs);
            w.get("unit", c.sweep.unit);
            w.get("d_min", c.sweep.d_min);
            w.get("d_max", c.sweep.d_max);
            w.get("d_points", c.sweep.d_points);
            w.get("gamma_min", c.sweep.gamma_min);
            w.get("gamma_max", c.sweep.gamma_max);
            w.get("gamma_points", c.sweep.gamma_points);
            w.get("log_spacing", c.sweep.log_spacing);
            w.get("delay_pulse", c.sweep.delay_pulse);
            w.get("plateau_tol", c.sweep.plateau_tol);
            w.get("max_extensions", c.sweep.max_extensions);
            w.get("w1", c.sweep.w1);
            w.get("w2", c.sweep.w2);
        }
        if (const auto* s = root.child("conversion")) {
            Section v(*s, "conversion", errs);
            v.get("eta_bbo", c.conversion.eta_bbo);
            v.get("detector_efficiency", c.conversion.detector_efficiency);
        }
        if (const auto* s = root.child("pipeline")) {
            Section v(*s, "pipeline", errs);
            v.get("duration", c.pipeline.duration);
            v.get("trajectories", c.pipeline.trajectories);
        }
        if (const auto* s = root.child("output")) {
            Section v(*s, "output", errs);
            v.get("dir", c.output.dir);
        }
    }
    try {
        c.validate();
    } catch (const ConfigError& e) {
        errs.insert(errs.end(), e.errors.begin(), e.errors.end());
    }
    if (!errs.empty()) {
        throw ConfigError(errs);
    }
    return c;
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError({"cannot open config file '" + path + "'"});
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError({"config file '" + path + "' is not valid JSON: " + e.what()});
    }
    return parse_config(j);
}

nlohmann::json to_json(const PipelineConfig& c) {
    nlohmann::json j;
    j["base_seed"] = c.base_seed;
    j["ghz"] = {{"n_dots", c.ghz.n_dots}, {"j1", c.ghz.j1}, {"j2", c.ghz.j2}};
    j["protect"] = {{"alpha", c.protect.alpha},         {"n_max", c.protect.n_max},
                    {"kappa", c.protect.kappa},         {"tau_syn", c.protect.tau_syn},
                    {"durations", c.protect.durations}, {"trajectories", c.protect.trajectories},
                    {"cavities", c.protect.cavities}};
    j["swap"] = {{"w1", c.swap.w1},
                 {"w2", c.swap.w2},
                 {"gamma1", c.swap.gamma1},
                 {"gamma2", c.swap.gamma2},
                 {"d", c.swap.d},
                 {"t_end", c.swap.t_end},
                 {"n_k", c.swap.n_k},
                 {"half_width", c.swap.half_width},
                 {"frame", c.swap.frame},
                 {"propagator", c.swap.propagator},
                 {"p_success", c.swap.p_success ? nlohmann::json(*c.swap.p_success) : nlohmann::json(nullptr)},
                 {"rail_encoding", c.swap.rail_encoding}};
    j["sweep"] = {{"unit", c.sweep.unit},
                  {"d_min", c.sweep.d_min},
                  {"d_max", c.sweep.d_max},
                  {"d_points", c.sweep.d_points},
                  {"gamma_min", c.sweep.gamma_min},
                  {"gamma_max", c.sweep.gamma_max},
                  {"gamma_points", c.sweep.gamma_points},
                  {"log_spacing", c.sweep.log_spacing},
                  {"delay_pulse", c.sweep.delay_pulse},
                  {"plateau_tol", c.sweep.plateau_tol},
                  {"max_extensions", c.sweep.max_extensions},
                  {"w1", c.sweep.w1},
                  {"w2", c.sweep.w2}};
    j["conversion"] = {{"eta_bbo", c.conversion.eta_bbo},
                       {"detector_efficiency", c.conversion.detector_efficiency}};
    j["pipeline"] = {{"duration", c.pipeline.duration}, {"trajectories", c.pipeline.trajectories}};
    j["output"] = {{"dir", c.output.dir}};
    return j;
}

}  // namespace ep
