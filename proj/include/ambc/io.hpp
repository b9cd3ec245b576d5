#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "bcd.hpp"
#include "benchmark.hpp"
#include "channel.hpp"
#include "config.hpp"
#include "metrics.hpp"

namespace ambc
{

/// Problem with a configuration source; `line` is 0 when no line applies.
class ConfigError : public std::runtime_error
{
public:
    ConfigError(const std::string& source, int line, const std::string& key, const std::string& what)
        : std::runtime_error(format(source, line, key, what)), line_(line), key_(key)
    {
    }
    int line() const { return line_; }
    const std::string& key() const { return key_; }

private:
    static std::string format(const std::string& source, int line, const std::string& key, const std::string& what)
    {
        std::string s = source;
        if (line > 0) s += ":" + std::to_string(line);
        if (!key.empty()) s += ": key '" + key + "'";
        return s + ": " + what;
    }
    int line_;
    std::string key_;
};

/// Flat `key = value` text. Later entries replace earlier ones.
struct ConfigFile
{
    struct Entry
    {
        std::string value;
        int line = 0; ///< 0 for command-line overrides
    };
    std::string source = "<config>";
    std::map<std::string, Entry> entries;
};

namespace detail
{

inline std::string trim(const std::string& s)
{
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// scenario keys; each may also appear as family.<name>.<key>
inline const std::set<std::string>& scenario_keys()
{
    static const std::set<std::string> keys{
        "M",     "N",      "N_cp",  "L_f",           "L_g",       "L_h",         "L_v",        "d_fap_bd",
        "d_fap_lu", "d_bd_lu", "eta", "P_bar",        "P_peak",    "P_peak_factor", "E_min",    "D",
        "snr_db", "noise_power", "epsilon", "max_iterations", "log_base", "decay", "first_path_gain",
        "bench_power"};
    return keys;
}

inline const std::set<std::string>& sweep_keys()
{
    static const std::set<std::string> keys{"name", "sweep.var", "sweep.values", "sweep.realizations", "sweep.seed"};
    return keys;
}

/// Splits "family.<name>.<key>"; returns false for plain keys.
inline bool split_family_key(const std::string& key, std::string& family, std::string& rest)
{
    if (key.rfind("family.", 0) != 0) return false;
    const auto dot = key.find('.', 7);
    if (dot == std::string::npos || dot == 7) return false;
    family = key.substr(7, dot - 7);
    rest = key.substr(dot + 1);
    return true;
}

inline bool known_key(const std::string& key)
{
    std::string family, rest;
    const std::string& k = split_family_key(key, family, rest) ? rest : key;
    return scenario_keys().count(k) > 0 || sweep_keys().count(k) > 0;
}

} // namespace detail

inline ConfigFile parse_config(const std::string& text, const std::string& source = "<config>")
{
    ConfigFile cfg;
    cfg.source = source;
    std::istringstream in(text);
    std::string raw;
    int line = 0;
    while (std::getline(in, raw)) {
        ++line;
        const auto hash = raw.find('#');
        const std::string body = detail::trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ConfigError(source, line, "", "expected 'key = value'");
        const std::string key = detail::trim(body.substr(0, eq));
        const std::string value = detail::trim(body.substr(eq + 1));
        if (key.empty()) throw ConfigError(source, line, "", "missing key");
        if (!detail::known_key(key)) throw ConfigError(source, line, key, "unknown key");
        if (value.empty()) throw ConfigError(source, line, key, "missing value");
        cfg.entries[key] = {value, line};
    }
    return cfg;
}

inline ConfigFile load_config(const std::string& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError(path, 0, "", "cannot open config file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path);
}

/// Applies one `key=value` override; the key must be a known config key.
inline void apply_override(ConfigFile& cfg, const std::string& assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("--set", 0, "", "expected key=value, got '" + assignment + "'");
    const std::string key = detail::trim(assignment.substr(0, eq));
    const std::string value = detail::trim(assignment.substr(eq + 1));
    if (!detail::known_key(key)) throw ConfigError("--set", 0, key, "unknown key");
    if (value.empty()) throw ConfigError("--set", 0, key, "missing value");
    cfg.entries[key] = {value, 0};
}

namespace detail
{

/// Typed view of the entries that apply to one family (or the base).
class EntryReader
{
public:
    EntryReader(const ConfigFile& file, const std::string& family) : file_(file)
    {
        for (const auto& [k, e] : file.entries) {
            std::string fam, rest;
            if (split_family_key(k, fam, rest)) {
                if (fam == family) merged_[rest] = {e, k};
            } else if (!merged_.count(k)) {
                merged_[k] = {e, k};
            }
        }
    }

    bool has(const std::string& key) const { return merged_.count(key) > 0; }

    const std::string& text(const std::string& key) const { return merged_.at(key).entry.value; }

    [[noreturn]] void fail(const std::string& key, const std::string& what) const
    {
        const auto& m = merged_.at(key);
        throw ConfigError(m.entry.line > 0 ? file_.source : "--set", m.entry.line, m.full_key, what);
    }

    double number(const std::string& key) const
    {
        const auto v = numbers(key);
        if (v.size() != 1) fail(key, "expected a single number");
        return v.front();
    }

    std::vector<double> numbers(const std::string& key) const
    {
        std::string s = text(key);
        for (char& c : s)
            if (c == ',') c = ' ';
        std::istringstream in(s);
        std::vector<double> out;
        std::string tok;
        while (in >> tok) {
            std::size_t used = 0;
            double v = 0.0;
            try {
                v = std::stod(tok, &used);
            } catch (const std::exception&) {
                used = 0;
            }
            if (used != tok.size() || !std::isfinite(v)) fail(key, "'" + tok + "' is not a finite number");
            out.push_back(v);
        }
        if (out.empty()) fail(key, "expected at least one number");
        return out;
    }

    std::uint64_t count(const std::string& key) const
    {
        const std::string& s = text(key);
        std::size_t used = 0;
        unsigned long long v = 0;
        try {
            v = std::stoull(s, &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != s.size() || s.front() == '-') fail(key, "expected a non-negative integer");
        return v;
    }

private:
    struct Item
    {
        ConfigFile::Entry entry;
        std::string full_key;
    };
    const ConfigFile& file_;
    std::map<std::string, Item> merged_;
};

inline std::vector<double> per_bd(const EntryReader& r, const std::string& key, std::size_t M)
{
    auto v = r.numbers(key);
    if (v.size() == 1) v.assign(M, v.front());
    if (v.size() != M) r.fail(key, "expected 1 or " + std::to_string(M) + " values");
    return v;
}

inline ScenarioConfig scenario_from(const EntryReader& r, const std::string& source)
{
    ScenarioConfig cfg;
    auto sz = [&](const char* key, std::size_t& field) {
        if (r.has(key)) field = static_cast<std::size_t>(r.count(key));
    };
    auto num = [&](const char* key, double& field) {
        if (r.has(key)) field = r.number(key);
    };
    sz("M", cfg.num_bds);
    sz("N", cfg.num_subcarriers);
    sz("N_cp", cfg.cp_length);
    sz("L_f", cfg.paths_forward);
    sz("L_g", cfg.paths_backward);
    sz("L_h", cfg.paths_direct);
    sz("L_v", cfg.paths_interference);
    sz("max_iterations", cfg.max_iterations);
    const std::size_t M = cfg.num_bds;

    // per-BD defaults follow M unless given explicitly
    cfg.dist_fap_bd.resize(M, cfg.dist_fap_bd.back());
    cfg.dist_bd_lu.resize(M, cfg.dist_bd_lu.back());
    cfg.min_energy.resize(M, cfg.min_energy.back());
    if (r.has("d_fap_bd")) cfg.dist_fap_bd = per_bd(r, "d_fap_bd", M);
    if (r.has("d_bd_lu")) cfg.dist_bd_lu = per_bd(r, "d_bd_lu", M);
    if (r.has("E_min")) cfg.min_energy = per_bd(r, "E_min", M);

    num("d_fap_lu", cfg.dist_fap_lu);
    num("eta", cfg.eta);
    num("P_bar", cfg.power_budget);
    num("D", cfg.min_lu_rate);
    num("snr_db", cfg.snr_db);
    num("epsilon", cfg.epsilon);
    num("decay", cfg.decay);
    num("first_path_gain", cfg.first_path_gain);
    if (r.has("noise_power")) cfg.noise_override = r.number("noise_power");

    // the peak defaults to 20 P_ave of the resolved M, N and P_bar
    if (r.has("P_peak") && r.has("P_peak_factor")) r.fail("P_peak", "give either P_peak or P_peak_factor");
    cfg.peak_power = 20.0 * cfg.average_power();
    if (r.has("P_peak")) cfg.peak_power = r.number("P_peak");
    if (r.has("P_peak_factor")) cfg.peak_power = r.number("P_peak_factor") * cfg.average_power();

    if (r.has("log_base")) {
        const std::string& b = r.text("log_base");
        if (b == "2")
            cfg.log_base = LogBase::two;
        else if (b == "e")
            cfg.log_base = LogBase::natural;
        else
            r.fail("log_base", "expected 2 or e");
    }
    if (r.has("bench_power")) {
        const std::string& b = r.text("bench_power");
        if (b == "per_slot_share")
            cfg.benchmark_power = BenchmarkPower::per_slot_share;
        else if (b == "full_budget")
            cfg.benchmark_power = BenchmarkPower::full_budget;
        else
            r.fail("bench_power", "expected per_slot_share or full_budget");
    }

    try {
        validate(cfg);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(source, 0, "", e.what());
    }
    return cfg;
}

} // namespace detail

/// Scenario described by the plain (non-family) keys.
inline ScenarioConfig scenario_from(const ConfigFile& file)
{
    return detail::scenario_from(detail::EntryReader(file, ""), file.source);
}

/// Family names in order of first appearance in the file.
inline std::vector<std::string> family_names(const ConfigFile& file)
{
    std::vector<std::pair<int, std::string>> seen;
    for (const auto& [k, e] : file.entries) {
        std::string fam, rest;
        if (!detail::split_family_key(k, fam, rest)) continue;
        auto it = std::find_if(seen.begin(), seen.end(), [&](const auto& p) { return p.second == fam; });
        if (it == seen.end())
            seen.emplace_back(e.line, fam);
        else
            it->first = std::min(it->first, e.line);
    }
    std::stable_sort(seen.begin(), seen.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::string> out;
    for (const auto& p : seen)
        out.push_back(p.second);
    return out;
}

/// One SweepSpec per family, or a single one when the file has no families.
inline std::vector<SweepSpec> sweeps_from(const ConfigFile& file)
{
    std::vector<std::string> families = family_names(file);
    const bool plain = families.empty();
    if (plain) families.push_back("");

    std::vector<SweepSpec> out;
    for (const auto& fam : families) {
        const detail::EntryReader r(file, fam);
        SweepSpec spec;
        spec.base = detail::scenario_from(r, plain ? file.source : file.source + " (family " + fam + ")");
        spec.scenario = plain ? (r.has("name") ? r.text("name") : std::string("sweep")) : fam;
        if (!r.has("sweep.var")) throw ConfigError(file.source, 0, "sweep.var", "required for a sweep");
        const auto var = parse_sweep_variable(r.text("sweep.var"));
        if (!var) r.fail("sweep.var", "expected one of D, snr_db, E_min, P_peak, P_peak_factor");
        spec.variable = *var;
        if (!r.has("sweep.values")) throw ConfigError(file.source, 0, "sweep.values", "value list is empty");
        spec.values = r.numbers("sweep.values");
        if (r.has("sweep.realizations")) spec.realizations = static_cast<std::size_t>(r.count("sweep.realizations"));
        if (r.has("sweep.seed")) spec.base_seed = r.count("sweep.seed");
        if (spec.realizations == 0) r.fail("sweep.realizations", "must be at least 1");
        try {
            validate(spec);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(file.source, 0, "", e.what());
        }
        out.push_back(std::move(spec));
    }
    return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail
{

inline nlohmann::json to_json_vector(const Eigen::VectorXd& v)
{
    return std::vector<double>(v.data(), v.data() + v.size());
}

inline nlohmann::json to_json_matrix(const Eigen::MatrixXd& m)
{
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        const Eigen::VectorXd row = m.row(i).transpose();
        rows.push_back(to_json_vector(row));
    }
    return rows;
}

inline const char* log_base_name(LogBase b) { return b == LogBase::two ? "2" : "e"; }

} // namespace detail

inline nlohmann::json to_json(const AllocationState& s)
{
    return {{"tau", detail::to_json_vector(s.tau)},
            {"alpha", detail::to_json_vector(s.alpha)},
            {"power", detail::to_json_matrix(s.power)},
            {"objective", s.objective}};
}

/// Reads the layout written by to_json(AllocationState); throws std::invalid_argument on malformed input.
inline AllocationState state_from_json(const nlohmann::json& j)
{
    auto vec = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_array()) throw std::invalid_argument(std::string("state: missing array '") + key + "'");
        Eigen::VectorXd v(static_cast<Eigen::Index>(j[key].size()));
        for (std::size_t i = 0; i < j[key].size(); ++i) {
            if (!j[key][i].is_number()) throw std::invalid_argument(std::string("state: non-numeric entry in '") + key + "'");
            v(static_cast<Eigen::Index>(i)) = j[key][i].get<double>();
        }
        return v;
    };
    if (!j.is_object()) throw std::invalid_argument("state: expected a JSON object");
    AllocationState s;
    s.tau = vec("tau");
    s.alpha = vec("alpha");
    if (!j.contains("power") || !j["power"].is_array() || j["power"].empty())
        throw std::invalid_argument("state: missing matrix 'power'");
    const auto& rows = j["power"];
    const std::size_t cols = rows[0].is_array() ? rows[0].size() : 0;
    s.power.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols));
    for (std::size_t m = 0; m < rows.size(); ++m) {
        if (!rows[m].is_array() || rows[m].size() != cols) throw std::invalid_argument("state: ragged 'power' matrix");
        for (std::size_t k = 0; k < cols; ++k) {
            if (!rows[m][k].is_number()) throw std::invalid_argument("state: non-numeric entry in 'power'");
            s.power(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(k)) = rows[m][k].get<double>();
        }
    }
    if (!j.contains("objective") || !j["objective"].is_number()) throw std::invalid_argument("state: missing 'objective'");
    s.objective = j["objective"].get<double>();
    return s;
}

inline nlohmann::json to_json(const ConstraintReport& r)
{
    nlohmann::json res = nlohmann::json::array();
    for (const auto& x : r.residuals)
        res.push_back({{"constraint", family_name(x.family)},
                       {"slack", x.slack},
                       {"worst_index", x.worst_index},
                       {"violated", x.slack < -feasibility_tolerance}});
    nlohmann::json violated = nlohmann::json::array();
    for (auto f : r.violated())
        violated.push_back(family_name(f));
    return {{"feasible", r.feasible},
            {"tolerance", feasibility_tolerance},
            {"bd_throughputs", r.bd_throughputs},
            {"lu_throughput", r.lu_throughput},
            {"harvested_energy", r.harvested},
            {"power_used", r.power_used},
            {"violated", violated},
            {"residuals", res}};
}

inline nlohmann::json to_json(const IterationRecord& it)
{
    return {{"iteration", it.index},
            {"objective", it.objective},
            {"after_time", it.after_time},
            {"after_reflection", it.after_reflection},
            {"tau", detail::to_json_vector(it.tau)},
            {"alpha", detail::to_json_vector(it.alpha)},
            {"power_used", it.power_used},
            {"power_max", it.power_max},
            {"time_status", status_name(it.time_status)},
            {"reflection_status", status_name(it.reflection_status)},
            {"power_status", status_name(it.power_status)},
            {"power_newton_steps", it.power_newton_steps},
            {"seconds", it.seconds}};
}

inline nlohmann::json to_json(const SolveTrace& t)
{
    nlohmann::json its = nlohmann::json::array();
    for (const auto& it : t.iterations)
        its.push_back(to_json(it));
    return {{"converged", t.converged},
            {"termination", termination_name(t.termination)},
            {"initial_objective", t.initial_objective},
            {"objective", t.final_state.objective},
            {"iterations", its},
            {"final_state", to_json(t.final_state)},
            {"final_report", to_json(t.final_report)},
            {"warnings", t.warnings}};
}

inline nlohmann::json to_json(const ScenarioConfig& c)
{
    nlohmann::json j = {{"M", c.num_bds},
                        {"N", c.num_subcarriers},
                        {"N_cp", c.cp_length},
                        {"L_f", c.paths_forward},
                        {"L_g", c.paths_backward},
                        {"L_h", c.paths_direct},
                        {"L_v", c.paths_interference},
                        {"d_fap_bd", c.dist_fap_bd},
                        {"d_fap_lu", c.dist_fap_lu},
                        {"d_bd_lu", c.dist_bd_lu},
                        {"eta", c.eta},
                        {"P_bar", c.power_budget},
                        {"P_peak", c.peak_power},
                        {"E_min", c.min_energy},
                        {"D", c.min_lu_rate},
                        {"snr_db", c.snr_db},
                        {"noise_variance", noise_variance(c)},
                        {"epsilon", c.epsilon},
                        {"max_iterations", c.max_iterations},
                        {"log_base", detail::log_base_name(c.log_base)},
                        {"decay", c.decay},
                        {"first_path_gain", c.first_path_gain},
                        {"bench_power", c.benchmark_power == BenchmarkPower::full_budget ? "full_budget"
                                                                                          : "per_slot_share"}};
    if (c.noise_override) j["noise_power"] = *c.noise_override;
    return j;
}

inline nlohmann::json to_json(const SweepSpec& s)
{
    return {{"scenario", s.scenario},
            {"sweep_var", sweep_variable_name(s.variable)},
            {"values", s.values},
            {"realizations", s.realizations},
            {"seed", s.base_seed},
            {"base", to_json(s.base)}};
}

// ---------------------------------------------------------------------------
// CSV

/// One row per (BD, subcarrier).
inline void write_state_csv(std::ostream& os, const AllocationState& s)
{
    os << "m,k,tau,alpha,power\n";
    for (Eigen::Index m = 0; m < s.power.rows(); ++m)
        for (Eigen::Index k = 0; k < s.power.cols(); ++k)
            os << m << ',' << k << ',' << detail::format_number(s.tau(m)) << ','
               << detail::format_number(s.alpha(m)) << ',' << detail::format_number(s.power(m, k)) << '\n';
}

inline void write_iterations_csv(std::ostream& os, const SolveTrace& t)
{
    os << "iteration,objective,after_time,after_reflection,power_used,power_max,power_newton_steps\n";
    for (const auto& it : t.iterations)
        os << it.index << ',' << detail::format_number(it.objective) << ',' << detail::format_number(it.after_time)
           << ',' << detail::format_number(it.after_reflection) << ',' << detail::format_number(it.power_used)
           << ',' << detail::format_number(it.power_max) << ',' << it.power_newton_steps << '\n';
}

/// Taps (domain "tap", index = path) and responses (domain "freq", index = subcarrier).
inline void write_channels_csv(std::ostream& os, const ChannelTapSet& taps, const FrequencyGrid& grid)
{
    os << "domain,link,m,index,re,im\n";
    auto rows = [&](const char* domain, const char* link, const Eigen::MatrixXcd& x) {
        for (Eigen::Index m = 0; m < x.rows(); ++m)
            for (Eigen::Index i = 0; i < x.cols(); ++i)
                os << domain << ',' << link << ',' << m << ',' << i << ',' << detail::format_number(x(m, i).real())
                   << ',' << detail::format_number(x(m, i).imag()) << '\n';
    };
    rows("tap", "forward", taps.forward);
    rows("tap", "backward", taps.backward);
    rows("tap", "direct", taps.direct.transpose());
    rows("tap", "interference", taps.interference);
    rows("freq", "forward", grid.F);
    rows("freq", "backward", grid.G);
    rows("freq", "direct", grid.H.transpose());
    rows("freq", "interference", grid.V);
}

} // namespace ambc
