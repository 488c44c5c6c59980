#pragma once

// Experiment configuration and a small TOML-subset reader/writer
// (tables, strings, booleans, integers, floats, numeric arrays, # comments).

#include "ddisac/error.hpp"
#include "ddisac/sensing.hpp"
#include "ddisac/waveforms.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace ddisac::bench {

// ---------------------------------------------------------------------------
// TOML subset
// ---------------------------------------------------------------------------

using TomlValue = std::variant<bool, std::int64_t, double, std::string, std::vector<double>>;
using TomlTable = std::map<std::string, TomlValue>;
using TomlDocument = std::map<std::string, TomlTable>;  // "" holds top-level keys

namespace toml {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::string strip_comment(const std::string& line) {
    bool in_str = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_str = !in_str;
        if (line[i] == '#' && !in_str) return line.substr(0, i);
    }
    return line;
}

inline double parse_double(const std::string& tok, int line_no) {
    std::string t = tok;
    t.erase(std::remove(t.begin(), t.end(), '_'), t.end());
    if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
    if (t == "-inf") return -std::numeric_limits<double>::infinity();
    if (t == "nan" || t == "+nan" || t == "-nan") return std::numeric_limits<double>::quiet_NaN();
    const char* b = t.data();
    const char* e = b + t.size();
    if (b != e && *b == '+') ++b;
    double v = 0.0;
    const auto r = std::from_chars(b, e, v);
    if (r.ec != std::errc{} || r.ptr != e)
        throw ConfigError("line " + std::to_string(line_no) + ": invalid number '" + tok + "'");
    return v;
}

inline TomlValue parse_value(const std::string& raw, int line_no) {
    const std::string v = trim(raw);
    if (v.empty()) throw ConfigError("line " + std::to_string(line_no) + ": missing value");
    if (v.front() == '"') {
        if (v.size() < 2 || v.back() != '"') throw ConfigError("line " + std::to_string(line_no) + ": unterminated string");
        std::string out;
        for (std::size_t i = 1; i + 1 < v.size(); ++i) {
            if (v[i] == '\\' && i + 2 < v.size()) {
                const char c = v[++i];
                out.push_back(c == 'n' ? '\n' : c == 't' ? '\t' : c);
            } else {
                out.push_back(v[i]);
            }
        }
        return out;
    }
    if (v == "true") return true;
    if (v == "false") return false;
    if (v.front() == '[') {
        if (v.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": unterminated array");
        std::vector<double> arr;
        std::stringstream ss(v.substr(1, v.size() - 2));
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (item.empty()) continue;  // trailing comma
            arr.push_back(parse_double(item, line_no));
        }
        return arr;
    }
    const bool is_float = v.find_first_of(".eEn") != std::string::npos;
    if (is_float) return parse_double(v, line_no);
    std::string t = v;
    t.erase(std::remove(t.begin(), t.end(), '_'), t.end());
    const char* b = t.data();
    const char* e = b + t.size();
    if (b != e && *b == '+') ++b;
    std::int64_t iv = 0;
    const auto r = std::from_chars(b, e, iv);
    if (r.ec != std::errc{} || r.ptr != e) throw ConfigError("line " + std::to_string(line_no) + ": invalid value '" + v + "'");
    return iv;
}

inline TomlDocument parse(const std::string& text) {
    TomlDocument doc;
    std::string table;
    doc[table];
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto s = trim(strip_comment(line));
        if (s.empty()) continue;
        if (s.front() == '[') {
            if (s.back() != ']') throw ConfigError("line " + std::to_string(line_no) + ": malformed table header");
            table = trim(s.substr(1, s.size() - 2));
            if (table.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty table name");
            if (doc.count(table) && !doc[table].empty())
                throw ConfigError("line " + std::to_string(line_no) + ": duplicate table [" + table + "]");
            doc[table];
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
        const auto key = trim(s.substr(0, eq));
        if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
        auto& t = doc[table];
        if (t.count(key)) throw ConfigError("line " + std::to_string(line_no) + ": duplicate key '" + key + "'");
        t[key] = parse_value(s.substr(eq + 1), line_no);
    }
    return doc;
}

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    // shortest text that reads back to the same double
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    std::string s(buf, res.ptr);
    // keep floats recognizable as floats when read back
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

inline std::string format_value(const TomlValue& v) {
    struct Visitor {
        std::string operator()(bool b) const { return b ? "true" : "false"; }
        std::string operator()(std::int64_t i) const { return std::to_string(i); }
        std::string operator()(double d) const { return format_double(d); }
        std::string operator()(const std::string& s) const {
            std::string out = "\"";
            for (char c : s) {
                if (c == '"' || c == '\\') out.push_back('\\');
                if (c == '\n') {
                    out += "\\n";
                    continue;
                }
                out.push_back(c);
            }
            return out + "\"";
        }
        std::string operator()(const std::vector<double>& a) const {
            std::string out = "[";
            for (std::size_t i = 0; i < a.size(); ++i) out += (i ? ", " : "") + format_double(a[i]);
            return out + "]";
        }
    };
    return std::visit(Visitor{}, v);
}

inline std::string dump(const TomlDocument& doc) {
    std::string out;
    if (auto it = doc.find(""); it != doc.end())
        for (const auto& [k, v] : it->second) out += k + " = " + format_value(v) + "\n";
    for (const auto& [name, table] : doc) {
        if (name.empty()) continue;
        if (!out.empty()) out += "\n";
        out += "[" + name + "]\n";
        for (const auto& [k, v] : table) out += k + " = " + format_value(v) + "\n";
    }
    return out;
}

}  // namespace toml

// ---------------------------------------------------------------------------
// Experiment configuration
// ---------------------------------------------------------------------------

enum class TargetModel { on_grid_random_bin, off_grid_uniform };

inline const char* to_string(TargetModel t) {
    return t == TargetModel::on_grid_random_bin ? "on_grid_random_bin" : "off_grid_uniform";
}

enum class Experiment { ambiguity, detect, mse, rdmap };

struct ExperimentConfig {
    std::vector<Waveform> waveforms{Waveform::dd, Waveform::tf};
    std::size_t M = 16;
    std::size_t N = 16;
    double T = 1.0;
    PulseSpec pulse = PulseSpec::rrc();
    std::vector<double> snr_grid_db{0.0};
    std::size_t trials = 2000;
    TargetModel target_model = TargetModel::on_grid_random_bin;
    std::size_t target_count = 1;
    CfarConfig cfar{};
    std::size_t calibration_maps = 2000;  // noise-only maps used when cfar.alpha is 0
    bool refine = false;
    std::uint64_t master_seed = 1;
    std::string output_dir = "out";

    FrameParams params() const { return FrameParams(M, N, T); }

    void validate() const {
        if (waveforms.empty()) throw ConfigError("at least one waveform is required");
        if (M < 1 || N < 1) throw ConfigError("M and N must be >= 1");
        if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("T must be a positive finite number");
        if (trials < 1) throw ConfigError("trials must be >= 1");
        if (snr_grid_db.empty()) throw ConfigError("snr_grid_db must not be empty");
        if (target_count < 1) throw ConfigError("targets.count must be >= 1");
        if (pulse.oversampling < 1) throw ConfigError("pulse.oversampling must be >= 1");
        if (pulse.kind == PulseKind::rrc && (pulse.span < 2 || !(pulse.rolloff >= 0.0 && pulse.rolloff <= 1.0)))
            throw ConfigError("pulse: rolloff must lie in [0, 1] and span must be >= 2");
        if (cfar.alpha < 0.0) throw ConfigError("cfar.alpha must be >= 0 (0 selects calibration)");
        try {
            cfar.validate(M, N);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("cfar: ") + e.what());
        }
        if (cfar.alpha == 0.0 && calibration_maps < 1) throw ConfigError("calibration_maps must be >= 1");
    }

    bool operator==(const ExperimentConfig&) const = default;
};

inline ExperimentConfig default_config(Experiment e) {
    ExperimentConfig c;
    switch (e) {
    case Experiment::ambiguity:
        c.M = c.N = 32;
        c.trials = 20;  // QPSK seeds for the TF cuts
        c.snr_grid_db = {std::numeric_limits<double>::infinity()};
        break;
    case Experiment::detect:
        c.snr_grid_db = {-20.0, -17.5, -15.0, -12.5, -10.0, -7.5, -5.0, -2.5, 0.0, 2.5, 5.0, 7.5, 10.0};
        c.target_model = TargetModel::on_grid_random_bin;
        break;
    case Experiment::mse:
        c.snr_grid_db = {-10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0};
        c.target_model = TargetModel::off_grid_uniform;
        break;
    case Experiment::rdmap:
        c.snr_grid_db = {15.0};
        c.trials = 1;
        c.target_count = 3;
        break;
    }
    return c;
}

inline std::string waveform_list_name(const std::vector<Waveform>& w) {
    if (w.size() == 2) return "both";
    return to_string(w.front());
}

inline std::vector<Waveform> parse_waveforms(const std::string& s) {
    if (s == "dd") return {Waveform::dd};
    if (s == "tf") return {Waveform::tf};
    if (s == "both") return {Waveform::dd, Waveform::tf};
    throw ConfigError("waveform must be dd, tf or both (got '" + s + "')");
}

inline TomlDocument to_toml(const ExperimentConfig& c) {
    TomlDocument d;
    auto& ex = d["experiment"];
    ex["waveform"] = waveform_list_name(c.waveforms);
    ex["M"] = static_cast<std::int64_t>(c.M);
    ex["N"] = static_cast<std::int64_t>(c.N);
    ex["T"] = c.T;
    ex["snr_grid_db"] = c.snr_grid_db;
    ex["trials"] = static_cast<std::int64_t>(c.trials);
    // stored as a string so the full 64-bit range survives
    ex["master_seed"] = std::to_string(c.master_seed);
    ex["output_dir"] = c.output_dir;
    auto& pu = d["pulse"];
    pu["kind"] = std::string(c.pulse.kind == PulseKind::rrc ? "rrc" : "rectangular");
    pu["rolloff"] = c.pulse.rolloff;
    pu["span"] = static_cast<std::int64_t>(c.pulse.span);
    pu["oversampling"] = static_cast<std::int64_t>(c.pulse.oversampling);
    auto& tg = d["targets"];
    tg["model"] = std::string(to_string(c.target_model));
    tg["count"] = static_cast<std::int64_t>(c.target_count);
    auto& cf = d["cfar"];
    cf["guard_delay"] = static_cast<std::int64_t>(c.cfar.guard_delay);
    cf["guard_doppler"] = static_cast<std::int64_t>(c.cfar.guard_doppler);
    cf["train_delay"] = static_cast<std::int64_t>(c.cfar.train_delay);
    cf["train_doppler"] = static_cast<std::int64_t>(c.cfar.train_doppler);
    cf["order_k"] = static_cast<std::int64_t>(c.cfar.order_k);
    cf["alpha"] = c.cfar.alpha;
    cf["target_pfa"] = c.cfar.target_pfa;
    cf["calibration_maps"] = static_cast<std::int64_t>(c.calibration_maps);
    d["estimation"]["refine"] = c.refine;
    return d;
}

namespace detail {

class TableReader {
public:
    TableReader(const TomlDocument& doc, const std::string& name) : name_(name) {
        if (auto it = doc.find(name); it != doc.end()) table_ = &it->second;
    }

    template <typename Fn>
    void get(const std::string& key, Fn&& assign) {
        if (!table_) return;
        auto it = table_->find(key);
        if (it == table_->end()) return;
        seen_.push_back(key);
        try {
            assign(it->second);
        } catch (const std::bad_variant_access&) {
            throw ConfigError("[" + name_ + "] " + key + ": wrong value type");
        }
    }

    void reject_unknown() const {
        if (!table_) return;
        for (const auto& [k, v] : *table_)
            if (std::find(seen_.begin(), seen_.end(), k) == seen_.end())
                throw ConfigError("[" + name_ + "] unknown key '" + k + "'");
    }

private:
    std::string name_;
    const TomlTable* table_ = nullptr;
    std::vector<std::string> seen_;
};

inline double as_double(const TomlValue& v) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    return std::get<double>(v);
}

inline std::size_t as_count(const TomlValue& v, const std::string& key) {
    const auto i = std::get<std::int64_t>(v);
    if (i < 0) throw ConfigError(key + " must be >= 0");
    return static_cast<std::size_t>(i);
}

}  // namespace detail

/// Fills `base` from a parsed document; keys absent from the document keep
/// their value in `base`. Unknown tables or keys are rejected.
inline ExperimentConfig from_toml(const TomlDocument& doc, ExperimentConfig c) {
    static const std::vector<std::string> tables{"", "experiment", "pulse", "targets", "cfar", "estimation"};
    for (const auto& [name, t] : doc) {
        if (std::find(tables.begin(), tables.end(), name) == tables.end())
            throw ConfigError("unknown table [" + name + "]");
        if (name.empty() && !t.empty()) throw ConfigError("keys must live inside a table (first: '" + t.begin()->first + "')");
    }
    using detail::as_count;
    using detail::as_double;
    detail::TableReader ex(doc, "experiment");
    ex.get("waveform", [&](const TomlValue& v) { c.waveforms = parse_waveforms(std::get<std::string>(v)); });
    ex.get("M", [&](const TomlValue& v) { c.M = as_count(v, "M"); });
    ex.get("N", [&](const TomlValue& v) { c.N = as_count(v, "N"); });
    ex.get("T", [&](const TomlValue& v) { c.T = as_double(v); });
    ex.get("snr_grid_db", [&](const TomlValue& v) { c.snr_grid_db = std::get<std::vector<double>>(v); });
    ex.get("trials", [&](const TomlValue& v) { c.trials = as_count(v, "trials"); });
    ex.get("master_seed", [&](const TomlValue& v) {
        if (const auto* i = std::get_if<std::int64_t>(&v)) {
            if (*i < 0) throw ConfigError("master_seed must be >= 0");
            c.master_seed = static_cast<std::uint64_t>(*i);
            return;
        }
        const auto& s = std::get<std::string>(v);
        const auto r = std::from_chars(s.data(), s.data() + s.size(), c.master_seed);
        if (r.ec != std::errc{} || r.ptr != s.data() + s.size()) throw ConfigError("master_seed: invalid value '" + s + "'");
    });
    ex.get("output_dir", [&](const TomlValue& v) { c.output_dir = std::get<std::string>(v); });
    ex.reject_unknown();

    detail::TableReader pu(doc, "pulse");
    pu.get("kind", [&](const TomlValue& v) {
        const auto& s = std::get<std::string>(v);
        if (s == "rrc") c.pulse.kind = PulseKind::rrc;
        else if (s == "rectangular") c.pulse.kind = PulseKind::rectangular;
        else throw ConfigError("pulse.kind must be rrc or rectangular");
    });
    pu.get("rolloff", [&](const TomlValue& v) { c.pulse.rolloff = as_double(v); });
    pu.get("span", [&](const TomlValue& v) { c.pulse.span = static_cast<int>(as_count(v, "span")); });
    pu.get("oversampling", [&](const TomlValue& v) { c.pulse.oversampling = static_cast<int>(as_count(v, "oversampling")); });
    pu.reject_unknown();

    detail::TableReader tg(doc, "targets");
    tg.get("model", [&](const TomlValue& v) {
        const auto& s = std::get<std::string>(v);
        if (s == "on_grid_random_bin") c.target_model = TargetModel::on_grid_random_bin;
        else if (s == "off_grid_uniform") c.target_model = TargetModel::off_grid_uniform;
        else throw ConfigError("targets.model must be on_grid_random_bin or off_grid_uniform");
    });
    tg.get("count", [&](const TomlValue& v) { c.target_count = as_count(v, "count"); });
    tg.reject_unknown();

    detail::TableReader cf(doc, "cfar");
    cf.get("guard_delay", [&](const TomlValue& v) { c.cfar.guard_delay = as_count(v, "guard_delay"); });
    cf.get("guard_doppler", [&](const TomlValue& v) { c.cfar.guard_doppler = as_count(v, "guard_doppler"); });
    cf.get("train_delay", [&](const TomlValue& v) { c.cfar.train_delay = as_count(v, "train_delay"); });
    cf.get("train_doppler", [&](const TomlValue& v) { c.cfar.train_doppler = as_count(v, "train_doppler"); });
    cf.get("order_k", [&](const TomlValue& v) { c.cfar.order_k = as_count(v, "order_k"); });
    cf.get("alpha", [&](const TomlValue& v) { c.cfar.alpha = as_double(v); });
    cf.get("target_pfa", [&](const TomlValue& v) { c.cfar.target_pfa = as_double(v); });
    cf.get("calibration_maps", [&](const TomlValue& v) { c.calibration_maps = as_count(v, "calibration_maps"); });
    cf.reject_unknown();

    detail::TableReader es(doc, "estimation");
    es.get("refine", [&](const TomlValue& v) { c.refine = std::get<bool>(v); });
    es.reject_unknown();

    c.validate();
    return c;
}

inline std::string serialize(const ExperimentConfig& c) { return toml::dump(to_toml(c)); }

inline ExperimentConfig parse_config(const std::string& text, const ExperimentConfig& base) {
    return from_toml(toml::parse(text), base);
}

inline ExperimentConfig load_config(const std::string& path, const ExperimentConfig& base) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), base);
}

}  // namespace ddisac::bench
